//! Behavior cloning versus reward-conditioned online reinforcement on the
//! stochastic GridWorld, across reward granularities.

use mbail::baselines::{bc_policy, evaluate_agent, run_online_il, QLearnParams};
use mbail::envs::gridworld::{build_gridworld, GridWorldSpec};
use mbail::harness::expert_trajectory;
use mbail::mdp::{optimal_policy, Dataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let spec = GridWorldSpec::standard(0.65);
    let (mdp, reward) = build_gridworld(&spec).unwrap();
    let (_, expert_value) = optimal_policy(&mdp, &reward).unwrap();
    println!("expert value {:.3} (horizon-scaled)", expert_value * mdp.horizon() as f64);

    // One demonstration that actually reaches the goal on 8 of 20 steps;
    // learning from a single trajectory is what makes cloning brittle.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let demo = expert_trajectory(&mdp, &reward, 8.0, &mut rng).unwrap();
    let data = Dataset::new(vec![demo]);

    let bc = bc_policy(&data, mdp.num_states(), mdp.num_actions(), mdp.horizon()).unwrap();
    let (bc_mean, bc_std) = evaluate_agent(&mdp, &bc, &reward, 200, &mut rng).unwrap();
    println!("behavior cloning: mean {bc_mean:.2} +- {bc_std:.2}");

    let mut params = QLearnParams::default();
    params.episodes = 30_000;
    for region in [1usize, 2, 4] {
        let (policy, _) = run_online_il(&mdp, &spec, &data, region, &params, &mut rng).unwrap();
        let (mean, std) = evaluate_agent(&mdp, &policy, &reward, 200, &mut rng).unwrap();
        println!("online IL, {region}x{region} reward regions: mean {mean:.2} +- {std:.2}");
    }
}
