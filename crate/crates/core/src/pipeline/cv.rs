use super::PipelineError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_CV_SEEDS: [u64; 5] = [3, 5, 7, 13, 42];
pub const DEFAULT_FOLDS: usize = 5;

/// Repeated k-fold assignment, one shuffle per seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub seeds: Vec<u64>,
    pub k: usize,
    /// `assignment[s][row]` is the fold of `row` under `seeds[s]`.
    pub assignment: Vec<Vec<usize>>,
}

impl CvPlan {
    pub fn n_rows(&self) -> usize {
        self.assignment.first().map_or(0, Vec::len)
    }

    /// Rows held out in `fold` under seed index `s`, ascending.
    pub fn test_rows(&self, s: usize, fold: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&r| self.assignment[s][r] == fold).collect()
    }

    pub fn train_rows(&self, s: usize, fold: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&r| self.assignment[s][r] != fold).collect()
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.k as u64).to_le_bytes());
        for (seed, a) in self.seeds.iter().zip(&self.assignment) {
            h.update(seed.to_le_bytes());
            for &f in a {
                h.update((f as u32).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Seeded uniform shuffle of the row indices, chopped into `k` contiguous
/// folds whose sizes differ by at most one.
pub fn make_cv_plan(n_rows: usize, seeds: &[u64], k: usize) -> Result<CvPlan, PipelineError> {
    if k < 2 || n_rows < k {
        return Err(PipelineError::TooFewRows { rows: n_rows, folds: k });
    }
    let assignment = seeds
        .iter()
        .map(|&seed| {
            let mut order: Vec<usize> = (0..n_rows).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut fold_of = vec![0; n_rows];
            let (base, extra) = (n_rows / k, n_rows % k);
            let mut start = 0;
            for f in 0..k {
                let size = base + usize::from(f < extra);
                for &r in &order[start..start + size] {
                    fold_of[r] = f;
                }
                start += size;
            }
            fold_of
        })
        .collect();
    Ok(CvPlan {
        seeds: seeds.to_vec(),
        k,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_rows_five_folds() {
        let p = make_cv_plan(10, &DEFAULT_CV_SEEDS, 5).unwrap();
        for s in 0..5 {
            for f in 0..5 {
                assert_eq!(p.test_rows(s, f).len(), 2);
            }
        }
        assert_eq!(p, make_cv_plan(10, &DEFAULT_CV_SEEDS, 5).unwrap());
        assert_ne!(p.assignment[0], p.assignment[1]);
        assert!(make_cv_plan(4, &[1], 5).is_err());
    }
}
