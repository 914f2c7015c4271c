//! Exact planning on a small chain: optimal policy, state values, and the
//! exact return variance, cross-checked against Monte Carlo rollouts.

use mbail::mdp::{
    exact_policy_value, exact_return_variance, optimal_policy, sample_trajectory, RewardFn,
    TabularMdp,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    // Four-state chain; action 0 advances with probability 0.8, action 1
    // drifts back. Reward pays only for sitting at the last state.
    let (ns, na, h) = (4usize, 2usize, 6usize);
    let mut kernel = vec![0.0; ns * na * ns];
    for s in 0..ns {
        let fwd = (s + 1).min(ns - 1);
        kernel[(s * na) * ns + fwd] += 0.8;
        kernel[(s * na) * ns + s] += 0.2;
        kernel[(s * na + 1) * ns + s] += 0.7;
        kernel[(s * na + 1) * ns + s.saturating_sub(1)] += 0.3;
    }
    let mdp = TabularMdp::new(ns, na, h, kernel, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let mut reward = RewardFn::zeros(ns, na);
    reward.set(ns - 1, 0, 1.0 / h as f64);
    reward.set(ns - 1, 1, 1.0 / h as f64);

    let (policy, value) = optimal_policy(&mdp, &reward).unwrap();
    let check = exact_policy_value(&mdp, &policy, &reward).unwrap();
    let variance = exact_return_variance(&mdp, &policy, &reward).unwrap();
    println!("optimal value        {value:.6} (recomputed {check:.6})");
    println!("return variance      {variance:.6}");

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let episodes = 200_000;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..episodes {
        let ret = sample_trajectory(&mdp, &policy, &mut rng).unwrap().total_reward(&reward);
        sum += ret;
        sum2 += ret * ret;
    }
    let mc_mean = sum / episodes as f64;
    let mc_var = sum2 / episodes as f64 - mc_mean * mc_mean;
    println!("monte carlo mean     {mc_mean:.6} over {episodes} episodes");
    println!("monte carlo variance {mc_var:.6}");
}
