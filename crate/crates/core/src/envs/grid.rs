use std::collections::VecDeque;

use rand::RngCore;

use super::{EnvError, Environment, StepResult};

/// `(row, col)`, row 0 at the top.
pub type Cell = (usize, usize);

pub const MAX_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// Rectangular room layout with blocked cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    walls: Vec<bool>,
    pub start: Cell,
    pub goal: Cell,
}

impl GridLayout {
    pub fn new(
        width: usize,
        height: usize,
        walls: &[Cell],
        start: Cell,
        goal: Cell,
    ) -> Result<Self, EnvError> {
        if width == 0 || height == 0 {
            return Err(EnvError::InvalidDefinition("empty grid".into()));
        }
        let mut mask = vec![false; width * height];
        for &(r, c) in walls {
            if r >= height || c >= width {
                return Err(EnvError::InvalidDefinition(format!(
                    "wall ({r}, {c}) outside the grid"
                )));
            }
            mask[r * width + c] = true;
        }
        let layout = Self {
            width,
            height,
            walls: mask,
            start,
            goal,
        };
        for (what, cell) in [("start", start), ("goal", goal)] {
            if !layout.contains(cell) || layout.is_wall(cell) {
                return Err(EnvError::InvalidDefinition(format!(
                    "{what} {cell:?} is outside the grid or a wall"
                )));
            }
        }
        if start == goal {
            return Err(EnvError::InvalidDefinition("start equals goal".into()));
        }
        if layout.shortest_path(start, goal).is_none() {
            return Err(EnvError::InvalidDefinition("goal unreachable from start".into()));
        }
        Ok(layout)
    }

    /// 10x10 room without interior walls, start top-left, goal bottom-right.
    pub fn open_room() -> Self {
        Self::new(10, 10, &[], (0, 0), (9, 9)).expect("open room layout is valid")
    }

    /// 11x11 four-rooms layout: a wall cross with one doorway per arm.
    ///
    /// ```text
    /// .....#.....
    /// .....#.....
    /// ...........
    /// .....#.....
    /// .....#.....
    /// #.####.....
    /// .....###.##
    /// .....#.....
    /// .....#.....
    /// ...........
    /// .....#.....
    /// ```
    pub fn four_room() -> Self {
        Self::parse(FOUR_ROOM_MAP, (0, 0), (10, 10)).expect("four room layout is valid")
    }

    /// Build a layout from rows of `.` (free) and `#` (wall).
    pub fn parse(map: &str, start: Cell, goal: Cell) -> Result<Self, EnvError> {
        let rows: Vec<&str> = map.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut walls = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(EnvError::InvalidDefinition(format!("ragged row {r}")));
            }
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '#' => walls.push((r, c)),
                    '.' => {}
                    other => {
                        return Err(EnvError::InvalidDefinition(format!(
                            "unexpected map character `{other}`"
                        )))
                    }
                }
            }
        }
        Self::new(width, height, &walls, start, goal)
    }

    pub fn contains(&self, (r, c): Cell) -> bool {
        r < self.height && c < self.width
    }

    pub fn is_wall(&self, (r, c): Cell) -> bool {
        self.walls[r * self.width + c]
    }

    pub fn wall_count(&self) -> usize {
        self.walls.iter().filter(|w| **w).count()
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height)
            .flat_map(move |r| (0..self.width).map(move |c| (r, c)))
            .filter(move |&cell| !self.is_wall(cell))
    }

    /// Deterministic transition; blocked moves stay in place.
    pub fn next_cell(&self, (r, c): Cell, action: GridAction) -> Cell {
        let target = match action {
            GridAction::Up if r > 0 => (r - 1, c),
            GridAction::Down if r + 1 < self.height => (r + 1, c),
            GridAction::Left if c > 0 => (r, c - 1),
            GridAction::Right if c + 1 < self.width => (r, c + 1),
            _ => return (r, c),
        };
        if self.is_wall(target) {
            (r, c)
        } else {
            target
        }
    }

    /// Breadth-first search over the four moves.
    pub fn shortest_path(&self, from: Cell, to: Cell) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.width * self.height];
        let mut queue = VecDeque::from([from]);
        dist[from.0 * self.width + from.1] = 0;
        while let Some(cell) = queue.pop_front() {
            let d = dist[cell.0 * self.width + cell.1];
            if cell == to {
                return Some(d);
            }
            for a in GridAction::ALL {
                let next = self.next_cell(cell, a);
                let slot = &mut dist[next.0 * self.width + next.1];
                if *slot == usize::MAX {
                    *slot = d + 1;
                    queue.push_back(next);
                }
            }
        }
        None
    }

    /// `(row, col)` scaled to `[0, 1]^2`.
    pub fn observe(&self, (r, c): Cell) -> Vec<f64> {
        let scale = |v: usize, n: usize| if n > 1 { v as f64 / (n - 1) as f64 } else { 0.0 };
        vec![scale(r, self.height), scale(c, self.width)]
    }
}

const FOUR_ROOM_MAP: &str = "
.....#.....
.....#.....
...........
.....#.....
.....#.....
#.####.....
.....###.##
.....#.....
.....#.....
...........
.....#.....
";

/// Navigation task on a [`GridLayout`]: reward 1 on entering the goal.
#[derive(Debug, Clone)]
pub struct GridWorld {
    layout: GridLayout,
    name: &'static str,
    cell: Cell,
    steps: usize,
    finished: bool,
}

impl GridWorld {
    pub fn new(layout: GridLayout, name: &'static str) -> Self {
        let cell = layout.start;
        Self {
            layout,
            name,
            cell,
            steps: 0,
            finished: false,
        }
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn cell(&self) -> Cell {
        self.cell
    }
}

impl Environment for GridWorld {
    fn name(&self) -> &'static str {
        self.name
    }

    fn observation_dim(&self) -> usize {
        2
    }

    fn action_count(&self) -> usize {
        4
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> Vec<f64> {
        self.cell = self.layout.start;
        self.steps = 0;
        self.finished = false;
        self.layout.observe(self.cell)
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        let a = GridAction::from_index(action).ok_or(EnvError::InvalidAction { action, count: 4 })?;
        if self.finished {
            return Err(EnvError::EpisodeOver);
        }
        self.cell = self.layout.next_cell(self.cell, a);
        self.steps += 1;
        let done = self.cell == self.layout.goal;
        let truncated = !done && self.steps >= MAX_STEPS;
        self.finished = done || truncated;
        Ok(StepResult {
            observation: self.layout.observe(self.cell),
            reward: if done { 1.0 } else { 0.0 },
            done,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn open_room_shape() {
        let l = GridLayout::open_room();
        assert_eq!((l.width, l.height, l.wall_count()), (10, 10, 0));
        assert_eq!((l.start, l.goal), ((0, 0), (9, 9)));
    }

    #[test]
    fn four_room_shape() {
        let l = GridLayout::four_room();
        assert_eq!((l.width, l.height), (11, 11));
        assert_ne!(l.start, l.goal);
        assert!(!l.is_wall(l.start) && !l.is_wall(l.goal));
        let d = l.shortest_path(l.start, l.goal).unwrap();
        assert!(d > 10);
        // four doorways: free cells on the wall cross
        let doors: Vec<Cell> = [(2, 5), (9, 5), (5, 1), (6, 8)].into();
        for door in doors {
            assert!(!l.is_wall(door), "{door:?}");
        }
        // rooms connect only through the doorways
        let mut blocked = l.clone();
        for (r, c) in [(2, 5), (9, 5), (5, 1), (6, 8)] {
            blocked.walls[r * 11 + c] = true;
        }
        for other_room in [(0, 10), (10, 0), (10, 10)] {
            assert_eq!(blocked.shortest_path((0, 0), other_room), None);
        }
    }

    #[test]
    fn open_room_optimal_length_is_manhattan() {
        let l = GridLayout::open_room();
        assert_eq!(l.shortest_path(l.start, l.goal), Some(18));
        for cell in l.free_cells() {
            let manhattan = cell.0.abs_diff(l.goal.0) + cell.1.abs_diff(l.goal.1);
            assert_eq!(l.shortest_path(cell, l.goal), Some(manhattan));
        }
    }

    #[test]
    fn transitions_stay_on_free_cells() {
        for l in [GridLayout::open_room(), GridLayout::four_room()] {
            for cell in l.free_cells() {
                for a in GridAction::ALL {
                    let n = l.next_cell(cell, a);
                    assert!(l.contains(n) && !l.is_wall(n));
                    assert!(cell.0.abs_diff(n.0) + cell.1.abs_diff(n.1) <= 1);
                }
            }
        }
    }

    #[test]
    fn goal_reward_and_boundary() {
        let mut env = GridWorld::new(GridLayout::open_room(), "openroom");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(env.reset(&mut rng), vec![0.0, 0.0]);
        let r = env.step(0).unwrap();
        assert_eq!((env.cell(), r.reward, r.done), ((0, 0), 0.0, false));
        env.cell = (9, 8);
        let r = env.step(3).unwrap();
        assert_eq!((r.reward, r.done), (1.0, true));
        assert_eq!(r.observation, vec![1.0, 1.0]);
    }

    #[test]
    fn truncates_at_cap() {
        let mut env = GridWorld::new(GridLayout::open_room(), "openroom");
        env.reset(&mut ChaCha8Rng::seed_from_u64(0));
        let mut last = None;
        for _ in 0..MAX_STEPS {
            last = Some(env.step(0).unwrap());
        }
        let last = last.unwrap();
        assert!(last.truncated && !last.done);
        assert_eq!(env.step(0).unwrap_err(), EnvError::EpisodeOver);
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(GridLayout::new(3, 3, &[], (0, 0), (0, 0)).is_err());
        assert!(GridLayout::new(3, 3, &[(1, 1)], (1, 1), (0, 0)).is_err());
        assert!(GridLayout::new(3, 3, &[(0, 1), (1, 0), (1, 1)], (0, 0), (2, 2)).is_err());
        assert!(GridLayout::parse("..\n.x", (0, 0), (1, 0)).is_err());
    }
}
