use oilbench::envs::gridworld::{ExpertOracle, Mdp};
use oilbench::metrics::{self, Checkpoints};
use oilbench::{
    Algo, Domain, LossKind, OptimizerState, ParamVector, RoundLoss, ScheduleKind, SolverConfig, StepSchedule,
};
use proptest::prelude::*;

fn pv(v: &[f64]) -> ParamVector {
    ParamVector::new(v.to_vec()).unwrap()
}

fn quad_losses(rows: &[(f64, f64, f64)]) -> Vec<RoundLoss> {
    rows.iter().map(|&(a, b, y)| RoundLoss::new(vec![a, b], vec![y], 1, 2, 1, LossKind::Squared).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn occupancy_is_a_distribution(w in prop::collection::vec(-3f64..3.0, 49 * 5), tau in 0usize..30) {
        let mdp = Mdp::standard(ExpertOracle::goal_seeking(7, 7, 24));
        let p = mdp.occupancy(&pv(&w), tau).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_play_regret_is_nonnegative(
        rows in prop::collection::vec((-2f64..2.0, -2f64..2.0, -3f64..3.0), 1..12),
        played in (-3f64..3.0, -3f64..3.0),
    ) {
        // a fixed point never beats the best fixed point in hindsight
        let losses = quad_losses(&rows);
        let w = pv(&[played.0, played.1]);
        let per_round: Vec<f64> = losses.iter().map(|l| l.value(&w).unwrap()).collect();
        let (r, _) = metrics::regret(&per_round, &losses, &Domain::Unconstrained, &SolverConfig::default(), Checkpoints::EveryRound).unwrap();
        for v in r.into_iter().flatten() {
            prop_assert!(v >= -1e-9, "regret {v}");
        }
    }

    #[test]
    fn sigma_telescopes_to_inverse_eta(grads in prop::collection::vec(0f64..10.0, 1..40), alpha in 0.01f64..10.0) {
        for kind in [ScheduleKind::InverseSqrtT { alpha }, ScheduleKind::AdaptiveGradNorm { alpha }] {
            let mut s = StepSchedule::new(kind).unwrap();
            let mut sum = 0.0;
            for &g in &grads {
                let step = s.advance(g).unwrap();
                prop_assert!(step.sigma >= 0.0);
                sum += step.sigma;
                prop_assert!((sum - 1.0 / step.eta).abs() <= 1e-9 * (1.0 / step.eta).max(1.0));
            }
        }
    }

    #[test]
    fn gradient_iterates_stay_feasible(
        targets in prop::collection::vec(-10f64..10.0, 1..20),
        radius in 0.1f64..3.0,
        eta in 0.01f64..5.0,
    ) {
        let dom = Domain::centered_ball(1, radius).unwrap();
        for (algo, kind) in [(Algo::Ogd, ScheduleKind::Constant { eta }), (Algo::AdaGrad, ScheduleKind::AdaptiveGradNorm { alpha: eta })] {
            let mut s = OptimizerState::new(algo, ParamVector::zeros(1), kind).unwrap();
            for &c in &targets {
                let l = RoundLoss::new(vec![1.0], vec![c], 1, 1, 1, LossKind::Squared).unwrap();
                s.step(&l, &dom, &SolverConfig::default()).unwrap();
                prop_assert!(s.w().norm() <= radius * (1.0 + 1e-12));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ftrl_forms_agree(
        rows in prop::collection::vec((-2f64..2.0, -2f64..2.0, -3f64..3.0), 2..10),
        alpha in 0.1f64..3.0,
    ) {
        let solver = SolverConfig { armijo_c: 0.5, grad_tol: 1e-11, ..SolverConfig::default() };
        let losses = quad_losses(&rows);
        let kind = ScheduleKind::InverseSqrtT { alpha };
        let mut learners: Vec<OptimizerState> = [Algo::FtrlNaive, Algo::Ftrl, Algo::AltFtrl]
            .into_iter()
            .map(|a| OptimizerState::new(a, ParamVector::zeros(2), kind).unwrap())
            .collect();
        for l in &losses {
            for s in learners.iter_mut() {
                s.step(l, &Domain::Unconstrained, &solver).unwrap();
            }
            let w0 = learners[0].w().clone();
            for s in &learners[1..] {
                prop_assert!(s.w().max_abs_diff(&w0) < 1e-8, "{} vs naive: {:?} {:?}", s.algo(), s.w(), w0);
            }
        }
    }
}
