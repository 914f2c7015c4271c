//! Comparison agents for the GridWorld study: tabular behavioral cloning
//! and a reward-table Q-learning online imitator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::gridworld::{region_members, GridWorldSpec};
use crate::error::{Error, Result};
use crate::mdp::{self, Policy, RewardFn, TabularMdp, Trajectory};

/// Behavioral cloning: point-mass on the majority expert action at visited
/// states (lowest action index on ties), uniform elsewhere.
pub fn bc_policy(
    expert_data: &crate::mdp::Dataset,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
) -> Result<Policy> {
    if expert_data.is_empty() {
        return Err(Error::Validation("empty expert dataset".into()));
    }
    let mut counts = vec![0usize; num_states * num_actions];
    for traj in &expert_data.trajectories {
        for &(s, a) in &traj.steps {
            counts[s * num_actions + a] += 1;
        }
    }
    let mut table = vec![0.0; num_states * num_actions];
    for s in 0..num_states {
        let row = &counts[s * num_actions..(s + 1) * num_actions];
        let best = row.iter().max().copied().unwrap_or(0);
        if best == 0 {
            for a in 0..num_actions {
                table[s * num_actions + a] = 1.0 / num_actions as f64;
            }
        } else {
            let a = row.iter().position(|&c| c == best).unwrap();
            table[s * num_actions + a] = 1.0;
        }
    }
    Policy::stationary(num_states, num_actions, table, horizon)
}

/// Q-learning hyperparameters. The learning rate for a pair after `v`
/// visits is `1 / (1 + v)^alpha_decay`; exploration holds at `eps_start`
/// for the first half of training, then decays linearly to `eps_end`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QLearnParams {
    pub episodes: usize,
    pub discount: f64,
    pub alpha_decay: f64,
    pub eps_start: f64,
    pub eps_end: f64,
}

impl Default for QLearnParams {
    fn default() -> Self {
        Self { episodes: 50_000, discount: 0.95, alpha_decay: 0.6, eps_start: 0.4, eps_end: 0.05 }
    }
}

impl QLearnParams {
    fn validate(&self) -> Result<()> {
        if self.episodes == 0
            || !(0.0..=1.0).contains(&self.discount)
            || !(0.0..=1.0).contains(&self.eps_start)
            || !(0.0..=1.0).contains(&self.eps_end)
            || self.alpha_decay <= 0.0
        {
            return Err(Error::Validation("bad Q-learning parameters".into()));
        }
        Ok(())
    }

    fn epsilon(&self, episode: usize, total: usize) -> f64 {
        let frac = episode as f64 / total as f64;
        if frac < 0.5 {
            self.eps_start
        } else {
            (self.eps_start * (1.0 - (frac - 0.5) / 0.4)).max(self.eps_end)
        }
    }
}

/// Q-learner state: the value table plus the agent's own binary reward
/// table, which starts empty and is filled from expert matches.
#[derive(Debug, Clone)]
pub struct QLearnerState {
    pub q_table: Vec<f64>,
    pub reward_table: Vec<f64>,
    pub visit_counts: Vec<u64>,
    num_actions: usize,
}

impl QLearnerState {
    fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            q_table: vec![0.0; num_states * num_actions],
            reward_table: vec![0.0; num_states * num_actions],
            visit_counts: vec![0; num_states * num_actions],
            num_actions,
        }
    }

    fn q_row(&self, s: usize) -> &[f64] {
        &self.q_table[s * self.num_actions..(s + 1) * self.num_actions]
    }
}

/// Uniform draw among the argmax entries of a row.
fn argmax_random(row: &[f64], rng: &mut impl Rng) -> usize {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> =
        row.iter().enumerate().filter(|(_, &q)| q >= max - 1e-12).map(|(i, _)| i).collect();
    ties[rng.gen_range(0..ties.len())]
}

/// Greedy policy over a Q-table, uniform over ties.
fn greedy_policy(q: &QLearnerState, num_states: usize, num_actions: usize, horizon: usize) -> Policy {
    let mut table = vec![0.0; num_states * num_actions];
    for s in 0..num_states {
        let row = q.q_row(s);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> =
            (0..num_actions).filter(|&a| row[a] >= max - 1e-12).collect();
        for &a in &ties {
            table[s * num_actions + a] = 1.0 / ties.len() as f64;
        }
    }
    Policy::stationary(num_states, num_actions, table, horizon).expect("valid greedy table")
}

/// Online imitation learning on GridWorld. The agent explores with
/// epsilon-greedy Q-learning driven by its own reward table; whenever it
/// plays a state-action pair present in the expert data, the action's
/// reward entry is set to 1 across the whole `region_size x region_size`
/// cell region containing the state. Coarser regions mean a smaller
/// effective reward space. Returns the greedy policy and the per-episode
/// training returns under the agent's reward table.
pub fn run_online_il(
    mdp: &TabularMdp,
    spec: &GridWorldSpec,
    expert_data: &crate::mdp::Dataset,
    region_size: usize,
    params: &QLearnParams,
    rng: &mut impl Rng,
) -> Result<(Policy, Vec<f64>)> {
    params.validate()?;
    if region_size == 0 || region_size > spec.side {
        return Err(Error::Validation(format!("region size {region_size} out of range")));
    }
    if expert_data.is_empty() {
        return Err(Error::Validation("empty expert dataset".into()));
    }
    let ns = mdp.num_states();
    let na = mdp.num_actions();
    let mut expert_pairs = vec![false; ns * na];
    for traj in &expert_data.trajectories {
        for &(s, a) in &traj.steps {
            expert_pairs[s * na + a] = true;
        }
    }
    let mut state = QLearnerState::new(ns, na);
    let mut curve = Vec::with_capacity(params.episodes);
    for ep in 0..params.episodes {
        let eps = params.epsilon(ep, params.episodes);
        let mut s = mdp.sample_initial(rng);
        let mut ep_return = 0.0;
        for _ in 0..mdp.horizon() {
            let a = if rng.gen::<f64>() < eps {
                rng.gen_range(0..na)
            } else {
                argmax_random(state.q_row(s), rng)
            };
            if expert_pairs[s * na + a] {
                for member in region_members(spec, s, region_size) {
                    state.reward_table[member * na + a] = 1.0;
                }
            }
            let next = mdp.sample_next(s, a, rng);
            state.visit_counts[s * na + a] += 1;
            let alpha = 1.0 / (1.0 + state.visit_counts[s * na + a] as f64).powf(params.alpha_decay);
            let r = state.reward_table[s * na + a];
            ep_return += r;
            let boot = state.q_row(next).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let target = r + params.discount * boot;
            state.q_table[s * na + a] += alpha * (target - state.q_table[s * na + a]);
            s = next;
        }
        curve.push(ep_return);
    }
    Ok((greedy_policy(&state, ns, na, mdp.horizon()), curve))
}

/// Rolls evaluation episodes and reports the mean and standard deviation of
/// returns, rescaled by the horizon onto the integer step-count scale.
pub fn evaluate_agent(
    mdp: &TabularMdp,
    policy: &Policy,
    true_reward: &RewardFn,
    episodes: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    if episodes == 0 {
        return Err(Error::Validation("need at least one evaluation episode".into()));
    }
    let scale = mdp.horizon() as f64;
    let returns: Vec<f64> = (0..episodes)
        .map(|_| {
            mdp::sample_trajectory(mdp, policy, rng)
                .map(|t: Trajectory| t.total_reward(true_reward) * scale)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = returns.iter().sum::<f64>() / episodes as f64;
    let var =
        returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / episodes as f64;
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::gridworld::build_gridworld;
    use crate::mdp::Dataset;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bc_point_mass_and_uniform() {
        let traj = Trajectory { steps: vec![(0, 2), (5, 1)], terminal_state: 6 };
        let pi = bc_policy(&Dataset::new(vec![traj]), 10, 4, 3).unwrap();
        assert_eq!(pi.action_dist(0, 0), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(pi.action_dist(0, 5), &[0.0, 1.0, 0.0, 0.0]);
        for &x in pi.action_dist(0, 7) {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn bc_majority_vote_lowest_index_tiebreak() {
        let t1 = Trajectory { steps: vec![(3, 0), (3, 0), (3, 2)], terminal_state: 3 };
        let pi = bc_policy(&Dataset::new(vec![t1]), 5, 4, 2).unwrap();
        assert_eq!(pi.action_dist(0, 3)[0], 1.0);
        // Tie between actions 1 and 3 resolves to 1.
        let t2 = Trajectory { steps: vec![(4, 3), (4, 1)], terminal_state: 4 };
        let pi = bc_policy(&Dataset::new(vec![t2]), 5, 4, 2).unwrap();
        assert_eq!(pi.action_dist(0, 4)[1], 1.0);
    }

    #[test]
    fn rarely_matched_expert_gives_flat_curve() {
        let spec = GridWorldSpec::standard(0.65);
        let (mdp, _) = build_gridworld(&spec).unwrap();
        // Single expert pair at the far corner: matches are rare, so most
        // training returns stay zero.
        let traj = Trajectory { steps: vec![(80, 0)], terminal_state: 80 };
        let data = Dataset::new(vec![traj]);
        let params = QLearnParams { episodes: 50, ..QLearnParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, curve) = run_online_il(&mdp, &spec, &data, 1, &params, &mut rng).unwrap();
        assert_eq!(curve.len(), 50);
        assert!(curve.iter().filter(|&&r| r == 0.0).count() >= 40);
    }

    #[test]
    fn region_sizes_scale_marking_extent() {
        let spec = GridWorldSpec::standard(1.0);
        let s = spec.cell_index(0, 0);
        assert_eq!(region_members(&spec, s, 1), vec![s]);
        assert_eq!(region_members(&spec, s, 4).len(), 16);
        assert_eq!(region_members(&spec, s, 9).len(), 81);
    }

    #[test]
    fn evaluate_deterministic_expert_zero_std() {
        // Single start cell: the deterministic rollout is unique.
        let mut spec = GridWorldSpec::standard(1.0);
        spec.start_region = vec![(0, 0)];
        let (mdp, reward) = build_gridworld(&spec).unwrap();
        let (pi, _) = mdp::optimal_policy(&mdp, &reward).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mean, std) = evaluate_agent(&mdp, &pi, &reward, 10, &mut rng).unwrap();
        assert_abs_diff_eq!(std, 0.0, epsilon = 1e-9);
        assert!(mean > 0.0);
    }

    #[test]
    fn random_policy_far_below_expert_scale() {
        let spec = GridWorldSpec::standard(0.65);
        let (mdp, reward) = build_gridworld(&spec).unwrap();
        let pi = Policy::uniform(mdp.num_states(), mdp.num_actions(), mdp.horizon());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mean, _) = evaluate_agent(&mdp, &pi, &reward, 200, &mut rng).unwrap();
        assert!(mean < 4.0, "random policy mean {mean}");
    }

    #[test]
    fn evaluation_mean_matches_exact_value() {
        let spec = GridWorldSpec::standard(0.65);
        let (mdp, reward) = build_gridworld(&spec).unwrap();
        let pi = Policy::uniform(mdp.num_states(), mdp.num_actions(), mdp.horizon());
        let exact = mdp::exact_policy_value(&mdp, &pi, &reward).unwrap() * mdp.horizon() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let episodes = 10_000;
        let (mean, std) = evaluate_agent(&mdp, &pi, &reward, episodes, &mut rng).unwrap();
        let se = std / (episodes as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se, "mc {mean} vs exact {exact} (se {se})");
    }
}
