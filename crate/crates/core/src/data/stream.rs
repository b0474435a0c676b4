use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Digit pairs, presented in this order.
pub const TASK_PAIRS: [(u8, u8); 5] = [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub classes: (u8, u8),
    /// Indices into the training split, in presentation order.
    pub train: Vec<usize>,
    /// Indices into the test split.
    pub test: Vec<usize>,
}

impl Task {
    /// Shared output label: the position of the digit within its pair.
    pub fn label_of(&self, digit: u8) -> Option<usize> {
        if digit == self.classes.0 {
            Some(0)
        } else if digit == self.classes.1 {
            Some(1)
        } else {
            None
        }
    }
}

/// Domain-incremental Split-MNIST schedule. The learner only ever sees
/// images and shared labels; the task index is bookkeeping for evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskStream {
    pub tasks: Vec<Task>,
}

impl TaskStream {
    pub fn n_train(&self) -> usize {
        self.tasks.iter().map(|t| t.train.len()).sum()
    }

    pub fn n_test(&self) -> usize {
        self.tasks.iter().map(|t| t.test.len()).sum()
    }
}

fn pick(labels: &[u8], digit: u8, k: usize, rng: &mut ChaCha8Rng, split: &str) -> Result<Vec<usize>> {
    let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == digit).collect();
    if idx.len() < k {
        return Err(Error::Config(format!(
            "{split} split has {} samples of digit {digit}, {k} requested",
            idx.len()
        )));
    }
    idx.shuffle(rng);
    idx.truncate(k);
    Ok(idx)
}

/// Class-balanced subsample of both splits, `n_train / 10` training and
/// `n_test / 10` test images per digit.
pub fn build_stream(
    train_labels: &[u8],
    test_labels: &[u8],
    seed: u64,
    n_train: usize,
    n_test: usize,
) -> Result<TaskStream> {
    let classes = TASK_PAIRS.len() * 2;
    if n_train == 0 || !n_train.is_multiple_of(classes) || n_test == 0 || !n_test.is_multiple_of(classes) {
        return Err(Error::Config(format!(
            "n_train ({n_train}) and n_test ({n_test}) must be positive multiples of {classes}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x5717);
    let mut tasks = Vec::with_capacity(TASK_PAIRS.len());
    for &(a, b) in &TASK_PAIRS {
        let mut train = pick(train_labels, a, n_train / classes, &mut rng, "train")?;
        train.extend(pick(train_labels, b, n_train / classes, &mut rng, "train")?);
        train.shuffle(&mut rng);
        let mut test = pick(test_labels, a, n_test / classes, &mut rng, "test")?;
        test.extend(pick(test_labels, b, n_test / classes, &mut rng, "test")?);
        test.sort_unstable();
        tasks.push(Task {
            classes: (a, b),
            train,
            test,
        });
    }
    Ok(TaskStream { tasks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_labels(per_digit: usize) -> Vec<u8> {
        (0..per_digit * 10).map(|i| (i % 10) as u8).collect()
    }

    #[test]
    fn even_split_and_disjoint_classes() {
        let train = fake_labels(1100);
        let test = fake_labels(300);
        let s = build_stream(&train, &test, 5, 10_000, 2_500).unwrap();
        assert_eq!(s.tasks.len(), 5);
        assert_eq!(s.n_train(), 10_000);
        assert_eq!(s.n_test(), 2_500);
        for t in &s.tasks {
            assert_eq!(t.train.len(), 2000);
            assert_eq!(t.test.len(), 500);
            let n_a = t.train.iter().filter(|&&i| train[i] == t.classes.0).count();
            assert_eq!(n_a, 1000);
            assert!(t.train.iter().all(|&i| t.label_of(train[i]).is_some()));
            assert!(t.test.iter().all(|&i| t.label_of(test[i]).is_some()));
        }
        for (i, a) in s.tasks.iter().enumerate() {
            for b in &s.tasks[i + 1..] {
                assert!(a.classes.0 != b.classes.0 && a.classes.1 != b.classes.1);
                assert!(a.classes.0 != b.classes.1 && a.classes.1 != b.classes.0);
            }
        }
    }

    #[test]
    fn reproducible_per_seed() {
        let train = fake_labels(300);
        let test = fake_labels(100);
        let a = build_stream(&train, &test, 1, 2000, 500).unwrap();
        assert_eq!(a, build_stream(&train, &test, 1, 2000, 500).unwrap());
        assert_ne!(a, build_stream(&train, &test, 2, 2000, 500).unwrap());
    }

    #[test]
    fn insufficient_samples_is_a_config_error() {
        let train = fake_labels(10);
        let err = build_stream(&train, &train, 1, 1000, 50).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(build_stream(&train, &train, 1, 15, 10).is_err());
    }

    #[test]
    fn shared_labels() {
        let t = Task { classes: (4, 5), train: vec![], test: vec![] };
        assert_eq!(t.label_of(4), Some(0));
        assert_eq!(t.label_of(5), Some(1));
        assert_eq!(t.label_of(6), None);
    }
}
