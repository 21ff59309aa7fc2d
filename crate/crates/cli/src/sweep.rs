//! Concurrent grid execution with deterministic result order.

use std::cmp::Ordering;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result of one grid point. Errors and panics are both folded in here so
/// one bad point never takes down the sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult<R> {
    pub key: Vec<f64>,
    pub outcome: Result<R, String>,
}

fn cmp_keys(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Runs `job` once per key on up to `workers` threads. Execution order is a
/// seeded shuffle (to shake out hidden order dependence); the returned list
/// is sorted by key whatever the completion order.
pub fn sweep_execute<R, F>(keys: Vec<Vec<f64>>, workers: usize, seed: u64, job: F) -> Vec<PointResult<R>>
where
    R: Send,
    F: Fn(&[f64]) -> Result<R, String> + Sync,
{
    let mut keys = keys;
    keys.sort_by(|a, b| cmp_keys(a, b));
    let n = keys.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let slots: Vec<Mutex<Option<Result<R, String>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let run_one = |i: usize| {
        let key = &keys[i];
        let out = match catch_unwind(AssertUnwindSafe(|| job(key))) {
            Ok(r) => r,
            Err(p) => Err(format!("panicked: {}", panic_message(&p))),
        };
        *slots[i].lock().unwrap() = Some(out);
    };
    let workers = workers.clamp(1, n.max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, AtomicOrdering::Relaxed);
                if k >= n {
                    break;
                }
                run_one(order[k]);
            });
        }
    });
    keys.into_iter()
        .zip(slots)
        .map(|(key, slot)| PointResult {
            key,
            outcome: slot.into_inner().unwrap().unwrap_or_else(|| Err("point was never executed".into())),
        })
        .collect()
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown payload".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_workers() {
        let keys: Vec<Vec<f64>> = (0..20).rev().map(|i| vec![(i % 5) as f64, i as f64]).collect();
        let f = |k: &[f64]| Ok::<f64, String>(k[0] * 100.0 + k[1]);
        let a = sweep_execute(keys.clone(), 1, 1, f);
        let b = sweep_execute(keys, 8, 99, f);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| cmp_keys(&w[0].key, &w[1].key) == Ordering::Less));
    }

    #[test]
    fn failures_stay_local() {
        let keys = vec![vec![1.0], vec![2.0], vec![3.0]];
        let out = sweep_execute(keys, 3, 0, |k| {
            if k[0] == 2.0 {
                panic!("boom");
            }
            if k[0] == 3.0 {
                return Err("no threshold".into());
            }
            Ok(k[0])
        });
        assert_eq!(out[0].outcome, Ok(1.0));
        assert!(out[1].outcome.as_ref().unwrap_err().contains("boom"));
        assert_eq!(out[2].outcome, Err("no threshold".into()));
    }

    #[test]
    fn single_point() {
        let out = sweep_execute(vec![vec![0.5]], 8, 0, |k| Ok::<_, String>(k[0]));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].outcome, Ok(0.5));
    }
}
