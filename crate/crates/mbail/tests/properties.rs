//! Randomized invariant checks over the core numeric building blocks.

use mbail::analysis::hellinger_sq;
use mbail::envs::packing::{sign_dot, sign_l1, sign_vec};
use mbail::learner::{hedge_step, mle_version_space, HedgeState, ModelClass};
use mbail::mdp::{
    exact_policy_value, exact_return_variance, optimal_policy, sample_trajectory, Policy,
    RewardFn, TabularMdp,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DIMS: (usize, usize, usize) = (3, 2, 4);

/// Normalizes raw positive weights into an `ns x na x ns` kernel plus an
/// initial distribution over `ns` states.
fn mdp_from_raw(raw: &[f64], init_raw: &[f64]) -> TabularMdp {
    let (ns, na, h) = DIMS;
    let kernel: Vec<f64> = raw
        .chunks(ns)
        .flat_map(|row| {
            let total: f64 = row.iter().sum();
            row.iter().map(move |w| w / total).collect::<Vec<_>>()
        })
        .collect();
    let init_total: f64 = init_raw.iter().sum();
    let init: Vec<f64> = init_raw.iter().map(|w| w / init_total).collect();
    TabularMdp::new(ns, na, h, kernel, init).unwrap()
}

fn policy_from_raw(raw: &[f64]) -> Policy {
    let (ns, na, h) = DIMS;
    let table: Vec<f64> = raw
        .chunks(na)
        .flat_map(|row| {
            let total: f64 = row.iter().sum();
            row.iter().map(move |w| w / total).collect::<Vec<_>>()
        })
        .collect();
    Policy::stationary(ns, na, table, h).unwrap()
}

fn raw_kernel() -> impl Strategy<Value = Vec<f64>> {
    let (ns, na, _) = DIMS;
    prop::collection::vec(0.01f64..1.0, ns * na * ns)
}

fn raw_init() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, DIMS.0)
}

fn raw_policy() -> impl Strategy<Value = Vec<f64>> {
    let (ns, na, _) = DIMS;
    prop::collection::vec(0.01f64..1.0, ns * na)
}

fn raw_reward() -> impl Strategy<Value = Vec<f64>> {
    let (ns, na, h) = DIMS;
    prop::collection::vec(0.0f64..(1.0 / h as f64), ns * na)
}

proptest! {
    #[test]
    fn kernel_rows_stay_stochastic(raw in raw_kernel(), init in raw_init()) {
        let (ns, na, _) = DIMS;
        let mdp = mdp_from_raw(&raw, &init);
        for row_idx in 0..ns * na {
            let row = &mdp.kernel()[row_idx * ns..(row_idx + 1) * ns];
            let total: f64 = row.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn sampled_transitions_stay_in_support(
        raw in raw_kernel(),
        init in raw_init(),
        praw in raw_policy(),
        seed in 0u64..1000,
    ) {
        let (ns, na, _) = DIMS;
        let mdp = mdp_from_raw(&raw, &init);
        let policy = policy_from_raw(&praw);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traj = sample_trajectory(&mdp, &policy, &mut rng).unwrap();
        prop_assert_eq!(traj.steps.len(), DIMS.2);
        for &(s, a) in &traj.steps {
            prop_assert!(s < ns && a < na);
        }
        prop_assert!(traj.terminal_state < ns);
    }

    #[test]
    fn return_variance_is_nonnegative(
        raw in raw_kernel(),
        init in raw_init(),
        praw in raw_policy(),
        rraw in raw_reward(),
    ) {
        let (ns, na, _) = DIMS;
        let mdp = mdp_from_raw(&raw, &init);
        let policy = policy_from_raw(&praw);
        let reward = RewardFn::new(ns, na, rraw).unwrap();
        let var = exact_return_variance(&mdp, &policy, &reward).unwrap();
        prop_assert!(var >= 0.0);
    }

    #[test]
    fn optimal_value_dominates_any_policy(
        raw in raw_kernel(),
        init in raw_init(),
        praw in raw_policy(),
        rraw in raw_reward(),
    ) {
        let (ns, na, _) = DIMS;
        let mdp = mdp_from_raw(&raw, &init);
        let reward = RewardFn::new(ns, na, rraw).unwrap();
        let (_, best) = optimal_policy(&mdp, &reward).unwrap();
        let policy = policy_from_raw(&praw);
        let value = exact_policy_value(&mdp, &policy, &reward).unwrap();
        prop_assert!(value <= best + 1e-9);
    }

    #[test]
    fn hedge_weights_stay_normalized(
        losses in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 1..40),
    ) {
        let mut hedge = HedgeState::new(5, 0.3).unwrap();
        for round in &losses {
            let weights = hedge_step(&mut hedge, round).unwrap();
            let total: f64 = weights.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(weights.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn hedge_weights_order_by_cumulative_loss(
        losses in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..30),
    ) {
        let mut hedge = HedgeState::new(4, 0.5).unwrap();
        let mut weights = vec![0.25; 4];
        for round in &losses {
            weights = hedge_step(&mut hedge, round).unwrap();
        }
        for i in 0..4 {
            for j in 0..4 {
                if hedge.cumulative_losses[i] < hedge.cumulative_losses[j] {
                    prop_assert!(weights[i] >= weights[j] - 1e-12);
                }
            }
        }
    }

    #[test]
    fn version_space_grows_with_beta(
        raw in raw_kernel(),
        init in raw_init(),
        transitions in prop::collection::vec((0usize..3, 0usize..2, 0usize..3), 0..25),
        beta_low in 0.0f64..5.0,
        extra in 0.0f64..5.0,
    ) {
        let mdp = mdp_from_raw(&raw, &init);
        let mut other = raw.clone();
        other.reverse();
        let class = ModelClass::new(
            &mdp,
            vec![mdp.kernel().to_vec(), mdp_from_raw(&other, &init).kernel().to_vec()],
            Some(0),
        )
        .unwrap();
        let narrow = mle_version_space(&class, &mdp, &transitions, beta_low).unwrap();
        let wide = mle_version_space(&class, &mdp, &transitions, beta_low + extra).unwrap();
        for idx in &narrow.member_indices {
            prop_assert!(wide.member_indices.contains(idx));
        }
    }

    #[test]
    fn hellinger_symmetric_and_bounded(raw1 in raw_init(), raw2 in raw_init()) {
        let t1: f64 = raw1.iter().sum();
        let t2: f64 = raw2.iter().sum();
        let p: Vec<f64> = raw1.iter().map(|w| w / t1).collect();
        let q: Vec<f64> = raw2.iter().map(|w| w / t2).collect();
        let fwd = hellinger_sq(&p, &q).unwrap();
        let bwd = hellinger_sq(&q, &p).unwrap();
        prop_assert!((fwd - bwd).abs() < 1e-12);
        prop_assert!((0.0..=2.0).contains(&fwd));
    }

    #[test]
    fn sign_dot_matches_expansion(x in 0u64..256, y in 0u64..256) {
        let d = 8;
        let expanded: f64 = sign_vec(x, d)
            .iter()
            .zip(sign_vec(y, d))
            .map(|(a, b)| a * b)
            .sum();
        prop_assert_eq!(sign_dot(x, y, d), expanded as i64);
        prop_assert_eq!(sign_l1(x, y), d as i64 - sign_dot(x, y, d));
    }
}
