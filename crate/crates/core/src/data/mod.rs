//! Synthetic panels with known ground truth, and on-disk loaders.
//!
//! The generators draw from a single seeded stream in a fixed order: row
//! factors, column factors, per-cell noise (row-major), the mask
//! (row-major) and finally per-cell samples. Noise is drawn even when
//! unused, so `theta` and the mask depend only on the seed and shape, never
//! on `noise_sd` or on whether the panel is scalar or distributional.

mod long_csv;
mod movielens;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DistMatrix, MaskedMatrix};

pub use long_csv::{
    load_long_csv, load_samples_csv, read_long_csv, read_samples_csv, write_long_csv, write_samples_csv, Labeled,
};
pub use movielens::{
    chronological_split, load_movielens, load_movielens_with_shape, read_movielens, ChronologicalSplit, MovieLens,
    Rating, MOVIELENS_MOVIES, MOVIELENS_USERS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rank: usize,
    pub noise_sd: f64,
    pub propensity: f64,
    /// Samples per observed cell; distributional panels only.
    pub sample_count: usize,
    /// Replaces `u_i · v_t` by a constant. Factors are still drawn.
    pub constant_theta: Option<f64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_rows: 50,
            n_cols: 50,
            rank: 4,
            noise_sd: 0.1,
            propensity: 0.5,
            sample_count: 100,
            constant_theta: None,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::InvalidParameter("dimensions must be at least 1".into()));
        }
        if self.rank == 0 {
            return Err(Error::InvalidParameter("rank must be at least 1".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise_sd {} must be finite and >= 0",
                self.noise_sd
            )));
        }
        if !(self.propensity > 0.0 && self.propensity <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "propensity {} outside (0, 1]",
                self.propensity
            )));
        }
        if self.constant_theta.is_some_and(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("constant_theta must be finite".into()));
        }
        Ok(())
    }
}

/// A generated panel together with the signal it was drawn around.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<M> {
    /// `θ` at every cell, observed or not.
    pub theta: Array2<f64>,
    pub matrix: M,
}

struct Draws {
    theta: Array2<f64>,
    noise: Array2<f64>,
    mask: Array2<bool>,
    rng: ChaCha8Rng,
}

fn draw(spec: &SyntheticSpec) -> Result<Draws> {
    spec.validate()?;
    let (n, t, r) = (spec.n_rows, spec.n_cols, spec.rank);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut factor =
        |len: usize| -> Array2<f64> { Array2::from_shape_simple_fn((len, r), || rng.random_range(-0.5..=0.5)) };
    let u = factor(n);
    let v = factor(t);
    let theta = match spec.constant_theta {
        Some(c) => Array2::from_elem((n, t), c),
        None => u.dot(&v.t()),
    };
    let noise = Array2::from_shape_simple_fn((n, t), || rng.sample::<f64, _>(StandardNormal));
    let mask = Array2::from_shape_simple_fn((n, t), || rng.random_bool(spec.propensity));
    Ok(Draws {
        theta,
        noise,
        mask,
        rng,
    })
}

/// `Z = θ + σ ε` on a Bernoulli(p) mask, with `θ = u vᵀ` and factor
/// entries uniform on [-0.5, 0.5].
pub fn gen_synthetic_scalar(spec: &SyntheticSpec) -> Result<GroundTruth<MaskedMatrix>> {
    let Draws { theta, noise, mask, .. } = draw(spec)?;
    let values = &theta + &(noise * spec.noise_sd);
    let matrix = MaskedMatrix::new(values, mask)?;
    Ok(GroundTruth { theta, matrix })
}

/// Each observed cell holds `sample_count` draws from `N(θ, σ²)`.
pub fn gen_synthetic_dist(spec: &SyntheticSpec) -> Result<GroundTruth<DistMatrix>> {
    if spec.sample_count < DistMatrix::MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: DistMatrix::MIN_SAMPLES,
            found: spec.sample_count,
        });
    }
    let Draws {
        theta, mask, mut rng, ..
    } = draw(spec)?;
    let cells = theta
        .iter()
        .zip(mask.iter())
        .map(|(&mu, &seen)| {
            seen.then(|| {
                (0..spec.sample_count)
                    .map(|_| mu + spec.noise_sd * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
        })
        .collect();
    let matrix = DistMatrix::new(spec.n_rows, spec.n_cols, cells)?;
    Ok(GroundTruth { theta, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::w2sq_hat;

    fn spec(n: usize, t: usize) -> SyntheticSpec {
        SyntheticSpec {
            n_rows: n,
            n_cols: t,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn noiseless_full_observation_is_theta() {
        let g = gen_synthetic_scalar(&SyntheticSpec {
            noise_sd: 0.0,
            propensity: 1.0,
            ..spec(7, 9)
        })
        .unwrap();
        assert_eq!(g.matrix.n_observed(), 63);
        assert_eq!(g.matrix.raw_values(), &g.theta);
    }

    #[test]
    fn theta_within_factor_bound() {
        let g = gen_synthetic_scalar(&SyntheticSpec {
            seed: 9,
            ..spec(60, 40)
        })
        .unwrap();
        assert!(g.theta.iter().all(|x| x.abs() <= 1.0));
        let g = gen_synthetic_scalar(&SyntheticSpec {
            rank: 2,
            ..spec(30, 30)
        })
        .unwrap();
        assert!(g.theta.iter().all(|x| x.abs() <= 0.5));
    }

    #[test]
    fn observed_fraction_concentrates() {
        let g = gen_synthetic_scalar(&SyntheticSpec {
            seed: 1,
            ..spec(200, 200)
        })
        .unwrap();
        let frac = g.matrix.n_observed() as f64 / 40_000.0;
        assert!((0.47..=0.53).contains(&frac), "{frac}");
    }

    #[test]
    fn theta_independent_of_noise_and_propensity() {
        let a = gen_synthetic_scalar(&SyntheticSpec {
            noise_sd: 0.001,
            propensity: 0.3,
            seed: 4,
            ..spec(20, 15)
        })
        .unwrap();
        let b = gen_synthetic_scalar(&SyntheticSpec {
            noise_sd: 1.0,
            propensity: 0.9,
            seed: 4,
            ..spec(20, 15)
        })
        .unwrap();
        assert_eq!(a.theta, b.theta);
    }

    #[test]
    fn scalar_and_dist_share_theta_and_mask() {
        let s = SyntheticSpec {
            seed: 8,
            sample_count: 5,
            ..spec(9, 11)
        };
        let a = gen_synthetic_scalar(&s).unwrap();
        let b = gen_synthetic_dist(&s).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.matrix.mask(), b.matrix.mask());
    }

    #[test]
    fn generators_are_deterministic() {
        let s = SyntheticSpec {
            seed: 21,
            sample_count: 4,
            ..spec(8, 8)
        };
        assert_eq!(gen_synthetic_scalar(&s).unwrap(), gen_synthetic_scalar(&s).unwrap());
        assert_eq!(gen_synthetic_dist(&s).unwrap(), gen_synthetic_dist(&s).unwrap());
        let other = SyntheticSpec { seed: 22, ..s };
        assert_ne!(
            gen_synthetic_scalar(&s).unwrap().theta,
            gen_synthetic_scalar(&other).unwrap().theta
        );
    }

    #[test]
    fn zero_noise_samples_equal_theta() {
        let g = gen_synthetic_dist(&SyntheticSpec {
            noise_sd: 0.0,
            sample_count: 6,
            seed: 3,
            ..spec(6, 6)
        })
        .unwrap();
        for e in g.matrix.observed_entries() {
            let theta = g.theta[[e.row, e.col]];
            assert!(g.matrix.get(e.row, e.col).unwrap().iter().all(|&x| x == theta));
        }
    }

    #[test]
    fn sample_means_concentrate() {
        let (sd, n) = (0.5, 100);
        let g = gen_synthetic_dist(&SyntheticSpec {
            noise_sd: sd,
            sample_count: n,
            seed: 2,
            ..spec(12, 12)
        })
        .unwrap();
        let means = g.matrix.means();
        for e in means.observed_entries() {
            let gap = (means.get(e.row, e.col).unwrap() - g.theta[[e.row, e.col]]).abs();
            assert!(gap <= 4.0 * sd / (n as f64).sqrt(), "{gap}");
        }
    }

    #[test]
    fn constant_theta_measures_converge() {
        let sd = 1.0;
        let g = gen_synthetic_dist(&SyntheticSpec {
            noise_sd: sd,
            sample_count: 500,
            constant_theta: Some(0.25),
            propensity: 1.0,
            seed: 5,
            ..spec(2, 1)
        })
        .unwrap();
        let d = w2sq_hat(g.matrix.get(0, 0).unwrap(), g.matrix.get(1, 0).unwrap()).unwrap();
        assert!(d < 0.1 * sd * sd, "{d}");
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(gen_synthetic_scalar(&SyntheticSpec { rank: 0, ..spec(3, 3) }).is_err());
        assert!(gen_synthetic_scalar(&SyntheticSpec {
            propensity: 0.0,
            ..spec(3, 3)
        })
        .is_err());
        assert!(gen_synthetic_scalar(&SyntheticSpec {
            noise_sd: -1.0,
            ..spec(3, 3)
        })
        .is_err());
        assert!(matches!(
            gen_synthetic_dist(&SyntheticSpec {
                sample_count: 1,
                ..spec(3, 3)
            }),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
