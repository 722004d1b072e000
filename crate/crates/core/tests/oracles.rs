//! Learner iterates checked against closed forms computed independently.

use nalgebra::{DMatrix, DVector};
use oilbench::envs::toy::{ToyStream, ToyStreamConfig};
use oilbench::{Algo, Domain, LossKind, OptimizerState, ParamVector, Regime, RoundLoss, ScheduleKind, SolverConfig};

fn target(c: f64) -> RoundLoss {
    RoundLoss::new(vec![1.0], vec![c], 1, 1, 1, LossKind::Squared).unwrap()
}

fn tight() -> SolverConfig {
    SolverConfig { armijo_c: 0.5, grad_tol: 1e-12, ..SolverConfig::default() }
}

const TARGETS: [f64; 8] = [1.0, -2.0, 0.5, 3.0, -1.5, 0.25, 2.0, -0.75];

#[test]
fn naive_ftrl_matches_weighted_mean() {
    // w_{t+1} = (sum c_i + sum sigma_i w_i) / (t + sum sigma_i), with
    // sum_{i<=t} sigma_i = sqrt(t) / alpha
    let alpha = 0.7;
    let mut s =
        OptimizerState::new(Algo::FtrlNaive, ParamVector::zeros(1), ScheduleKind::InverseSqrtT { alpha }).unwrap();
    let mut iterates = vec![0.0];
    let mut prev_inv = 0.0;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, &c) in TARGETS.iter().enumerate() {
        let t = t + 1;
        s.step(&target(c), &Domain::Unconstrained, &tight()).unwrap();
        let inv = (t as f64).sqrt() / alpha;
        let sigma = inv - prev_inv;
        prev_inv = inv;
        num += c + sigma * iterates[t - 1];
        den += 1.0 + sigma;
        iterates.push(num / den);
        assert!((s.w().as_slice()[0] - num / den).abs() < 1e-10, "round {t}");
    }
}

#[test]
fn ftl_matches_running_mean_and_least_squares() {
    let mut s = OptimizerState::new(Algo::Ftl, ParamVector::zeros(1), Algo::Ftl.default_schedule(1.0)).unwrap();
    for (t, &c) in TARGETS.iter().enumerate() {
        s.step(&target(c), &Domain::Unconstrained, &tight()).unwrap();
        let mean = TARGETS[..=t].iter().sum::<f64>() / (t + 1) as f64;
        assert!((s.w().as_slice()[0] - mean).abs() < 1e-10);
    }

    // matrix case: the pooled normal equations once the design has full rank
    let cfg = ToyStreamConfig {
        d_feature: 3,
        d_output: 2,
        samples_per_round: 2,
        rounds: 6,
        ..ToyStreamConfig::new(Regime::Adversarial, LossKind::Squared, 4)
    };
    let stream = ToyStream::new(cfg).unwrap();
    let dim = cfg.param_dim();
    let mut s = OptimizerState::new(Algo::Ftl, ParamVector::zeros(dim), Algo::Ftl.default_schedule(1.0)).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for t in 1..=cfg.rounds {
        let l = stream.round_loss(t).unwrap();
        xs.extend_from_slice(l.features());
        ys.extend_from_slice(l.targets());
        s.step(&l, &Domain::Unconstrained, &tight()).unwrap();
    }
    let n = xs.len() / 3;
    let x = DMatrix::from_row_slice(n, 3, &xs);
    let y = DMatrix::from_row_slice(n, 2, &ys);
    let sol = (x.transpose() * &x).lu().solve(&(x.transpose() * y)).unwrap();
    // parameters are row-major d_output x d_feature
    let expected =
        DVector::from_iterator(dim, (0..2).flat_map(|o| (0..3).map(move |f| (o, f))).map(|(o, f)| sol[(f, o)]));
    let got = DVector::from_row_slice(s.w().as_slice());
    assert!((got - expected).amax() < 1e-7);
}

#[test]
fn ogd_and_adagrad_steps() {
    let eta = 0.3;
    let mut s = OptimizerState::new(Algo::Ogd, ParamVector::zeros(1), ScheduleKind::Constant { eta }).unwrap();
    let mut w: f64 = 0.0;
    for &c in &TARGETS {
        s.step(&target(c), &Domain::Unconstrained, &tight()).unwrap();
        w -= eta * (w - c);
        assert!((s.w().as_slice()[0] - w).abs() < 1e-14);
    }

    let alpha = 0.5;
    let mut s =
        OptimizerState::new(Algo::AdaGrad, ParamVector::zeros(1), ScheduleKind::AdaptiveGradNorm { alpha }).unwrap();
    let (mut w, mut acc): (f64, f64) = (0.0, 0.0);
    for &c in &TARGETS {
        let r = s.step(&target(c), &Domain::Unconstrained, &tight()).unwrap();
        let g = w - c;
        acc += g * g;
        w -= alpha / acc.sqrt() * g;
        assert!((r.eta - alpha / acc.sqrt()).abs() < 1e-14);
        assert!((s.w().as_slice()[0] - w).abs() < 1e-12);
    }
}

#[test]
fn projected_ogd_clips_to_ball() {
    let dom = Domain::centered_ball(1, 0.5).unwrap();
    let mut s = OptimizerState::new(Algo::Ogd, ParamVector::zeros(1), ScheduleKind::Constant { eta: 1.0 }).unwrap();
    s.step(&target(3.0), &dom, &tight()).unwrap();
    assert_eq!(s.w().as_slice(), &[0.5]);
    s.step(&target(-3.0), &dom, &tight()).unwrap();
    assert_eq!(s.w().as_slice(), &[-0.5]);
}
