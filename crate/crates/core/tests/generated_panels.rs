//! Estimators checked against the generator's ground truth.

use nncomplete::data::{gen_synthetic_dist, gen_synthetic_scalar, SyntheticSpec};
use nncomplete::estimators::{impute_awnn, AwnnConfig, DistModel};
use nncomplete::method::Method;
use nncomplete::tuning::{tune_dist, Candidate, SearchSpace};
use nncomplete::Axis;

#[test]
fn awnn_noise_estimate_on_small_panel() {
    let sd = 0.1;
    let g = gen_synthetic_scalar(&SyntheticSpec {
        n_rows: 10,
        n_cols: 10,
        noise_sd: sd,
        seed: 7,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let targets = g.matrix.observed_entries();
    let (_, state) = impute_awnn(&g.matrix, &targets, &AwnnConfig::default()).unwrap();
    assert!(state.converged && state.iterations <= 50);
    let s2 = sd * sd;
    assert!(
        (0.5 * s2..=2.0 * s2).contains(&state.sigma2),
        "sigma2 {} outside [{}, {}]",
        state.sigma2,
        0.5 * s2,
        2.0 * s2
    );
}

#[test]
fn dist_nn_means_track_truth() {
    let (sd, n) = (1.0, 50);
    let g = gen_synthetic_dist(&SyntheticSpec {
        n_rows: 12,
        n_cols: 12,
        noise_sd: sd,
        propensity: 0.8,
        sample_count: n,
        seed: 3,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let space = SearchSpace {
        seed: 3,
        ..SearchSpace::default()
    };
    for method in [Method::KernelNN(Axis::Row), Method::W2NN(Axis::Row)] {
        let tuned = tune_dist(&g.matrix, method, &space).unwrap();
        let Candidate::Neighbors(p) = tuned.best_params else {
            panic!("neighbor parameters expected")
        };
        let train = g.matrix.hide(&tuned.holdout).unwrap();
        let (kind, axis) = method.dist().unwrap();
        assert_eq!(axis, Axis::Row);
        let model = DistModel::new(&train, kind.resolve(&train), axis);
        let bound = 3.0 * sd / (n as f64).sqrt();
        let close = tuned
            .holdout
            .iter()
            .filter(|e| {
                model
                    .impute(**e, p.eta_row)
                    .is_ok_and(|est| (est.value.mean() - g.theta[[e.row, e.col]]).abs() <= bound)
            })
            .count();
        assert!(
            close as f64 >= 0.9 * tuned.holdout.len() as f64,
            "{method}: {close}/{}",
            tuned.holdout.len()
        );
    }
}
