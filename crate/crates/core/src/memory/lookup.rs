use super::{ActionMemory, Key, MemoryError};

/// Greedy action over per-action memories, touching the neighbours that took
/// part in each estimate (training-time lookup).
///
/// Empty memories rank as `+inf`, so actions never tried win. Ties go to the
/// lowest action index. Fails only when every memory is empty.
pub fn lookup_best_action(
    memories: &mut [ActionMemory],
    key: &Key,
    now: u64,
) -> Result<(usize, f64), MemoryError> {
    best_of(memories.iter_mut().map(|m| {
        if m.is_empty() {
            Ok(None)
        } else {
            m.q_estimate(key, now).map(Some)
        }
    }))
}

/// Same as [`lookup_best_action`] but leaves every memory untouched.
pub fn peek_best_action(memories: &[ActionMemory], key: &Key) -> Result<(usize, f64), MemoryError> {
    best_of(memories.iter().map(|m| {
        if m.is_empty() {
            Ok(None)
        } else {
            m.estimate(key).map(Some)
        }
    }))
}

fn best_of<I>(estimates: I) -> Result<(usize, f64), MemoryError>
where
    I: Iterator<Item = Result<Option<f64>, MemoryError>>,
{
    let mut best: Option<(usize, f64)> = None;
    let mut any_filled = false;
    for (action, est) in estimates.enumerate() {
        let value = match est? {
            Some(v) => {
                any_filled = true;
                v
            }
            None => f64::INFINITY,
        };
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((action, value));
        }
    }
    if !any_filled {
        return Err(MemoryError::EmptyMemory);
    }
    best.ok_or(MemoryError::EmptyMemory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{Backend, KernelParams, MemoryConfig, Strategy};

    fn memories(values: &[Option<f64>]) -> Vec<ActionMemory> {
        values
            .iter()
            .map(|v| {
                let mut m = ActionMemory::new(MemoryConfig {
                    dim: 1,
                    capacity: 8,
                    strategy: Strategy::Lru,
                    backend: Backend::NaiveScan,
                    kernel: KernelParams::default(),
                })
                .unwrap();
                if let Some(q) = v {
                    m.insert(&Key::new(vec![0.0]).unwrap(), *q, 0).unwrap();
                }
                m
            })
            .collect()
    }

    fn query() -> Key {
        Key::new(vec![0.25]).unwrap()
    }

    #[test]
    fn picks_the_larger_estimate() {
        let mut m = memories(&[Some(3.0), Some(7.0)]);
        assert_eq!(lookup_best_action(&mut m, &query(), 1).unwrap(), (1, 7.0));
        assert_eq!(peek_best_action(&m, &query()).unwrap(), (1, 7.0));
    }

    #[test]
    fn ties_go_to_lowest_action() {
        let m = memories(&[Some(4.0), Some(4.0)]);
        assert_eq!(peek_best_action(&m, &query()).unwrap(), (0, 4.0));
    }

    #[test]
    fn empty_memory_is_optimistic() {
        let mut m = memories(&[Some(100.0), None, Some(3.0)]);
        let (a, v) = lookup_best_action(&mut m, &query(), 0).unwrap();
        assert_eq!(a, 1);
        assert!(v.is_infinite());
    }

    #[test]
    fn all_empty_is_an_error() {
        let mut m = memories(&[None, None]);
        assert_eq!(
            lookup_best_action(&mut m, &query(), 0).unwrap_err(),
            MemoryError::EmptyMemory
        );
    }

    #[test]
    fn training_lookup_touches_peek_does_not() {
        let mut m = memories(&[Some(1.0)]);
        peek_best_action(&m, &query()).unwrap();
        assert_eq!(m[0].entries()[0].last_used, 0);
        lookup_best_action(&mut m, &query(), 42).unwrap();
        assert_eq!(m[0].entries()[0].last_used, 42);
    }
}
