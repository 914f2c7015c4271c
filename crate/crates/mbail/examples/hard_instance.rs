//! The two-phase lower-bound construction: closed-form policy values
//! checked against dynamic programming, and the imitation-gap bound
//! certified over random parameter draws.

use mbail::envs::hard_instance::{
    analytic_value, build_hard_instance, evaluate_gap_bound, hard_instance_policy,
    HardInstanceParams,
};
use mbail::mdp::exact_policy_value;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let params = HardInstanceParams::standard(3, 3, 8).unwrap();
    let (mdp, reward_class, expert) = build_hard_instance(&params).unwrap();
    println!(
        "{} states, {} actions, horizon {}, {} reward parameters",
        mdp.num_states(),
        mdp.num_actions(),
        mdp.horizon(),
        reward_class.len()
    );

    // Closed form versus dynamic programming for the expert parameters.
    let reward = &reward_class.members()[0];
    let dp = exact_policy_value(&mdp, &expert, reward).unwrap();
    let closed =
        analytic_value(&params, params.mu_star, params.theta_star, params.packing.vectors[0]);
    println!("expert value: dp {dp:.9}, closed form {closed:.9}");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_slack = f64::INFINITY;
    let draws = 50;
    for _ in 0..draws {
        let mu_hat: u64 = rng.gen_range(0..1 << params.d_p);
        let theta_hat =
            params.packing.vectors[rng.gen_range(0..params.packing.vectors.len())];
        let (gap, bound) = evaluate_gap_bound(&params, mu_hat, theta_hat).unwrap();
        worst_slack = worst_slack.min(gap - bound);
        let _ = hard_instance_policy(&params, mu_hat, theta_hat).unwrap();
    }
    println!("gap - bound slack over {draws} random draws: worst {worst_slack:.6} (>= 0 expected)");
}
