//! Model-based adversarial imitation learner.
//!
//! Each round: roll one trajectory with the previous policy, score every
//! candidate reward by the empirical value difference against the expert
//! data, update the exponential-weights reward learner, rebuild the
//! max-likelihood version space over the model class from all observed
//! transitions, and plan optimistically inside it. The output policy is the
//! uniform mixture of the per-round policies.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{
    self, exact_policy_value, optimal_policy, Dataset, Policy, RewardFn, TabularMdp, Trajectory,
};

/// Hard cap on version-space enumeration.
pub const MODEL_CLASS_CAP: usize = 10_000;

/// Finite set of candidate reward tables sharing one skeleton.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardClass {
    members: Vec<RewardFn>,
}

impl RewardClass {
    pub fn new(members: Vec<RewardFn>) -> Result<Self> {
        let first = members.first().ok_or_else(|| Error::Validation("empty reward class".into()))?;
        let (ns, na) = (first.num_states(), first.num_actions());
        if members.iter().any(|m| m.num_states() != ns || m.num_actions() != na) {
            return Err(Error::Shape("reward class members disagree on skeleton".into()));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[RewardFn] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Checks every member against the bounded-cumulative-reward condition.
    pub fn check_bounded(&self, mdp: &TabularMdp) -> Result<()> {
        for (i, m) in self.members.iter().enumerate() {
            m.check_bounded_cumulative(mdp)
                .map_err(|e| Error::Validation(format!("reward member {i}: {e}")))?;
        }
        Ok(())
    }
}

/// Finite set of candidate transition kernels over a fixed skeleton.
#[derive(Debug, Clone)]
pub struct ModelClass {
    /// Kernels as flat `S * A * S` tables.
    kernels: Vec<Vec<f64>>,
    /// Index of the true kernel, when known (realizable case).
    pub truth_index: Option<usize>,
}

impl ModelClass {
    pub fn new(skeleton: &TabularMdp, kernels: Vec<Vec<f64>>, truth_index: Option<usize>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Validation("empty model class".into()));
        }
        if kernels.len() > MODEL_CLASS_CAP {
            return Err(Error::Validation(format!(
                "model class size {} exceeds cap {MODEL_CLASS_CAP}",
                kernels.len()
            )));
        }
        for k in &kernels {
            // Kernel validity is delegated to the MDP constructor.
            skeleton.with_kernel(k.clone())?;
        }
        if let Some(t) = truth_index {
            if t >= kernels.len() {
                return Err(Error::Validation("truth index out of range".into()));
            }
        }
        Ok(Self { kernels, truth_index })
    }

    pub fn kernels(&self) -> &[Vec<f64>] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }
}

/// Exponential-weights state over reward-class indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HedgeState {
    pub cumulative_losses: Vec<f64>,
    pub learning_rate: f64,
    pub round: usize,
}

impl HedgeState {
    pub fn new(num_members: usize, learning_rate: f64) -> Result<Self> {
        if num_members == 0 {
            return Err(Error::Validation("hedge over an empty index set".into()));
        }
        if learning_rate <= 0.0 {
            return Err(Error::Validation(format!("learning rate {learning_rate} must be positive")));
        }
        Ok(Self { cumulative_losses: vec![0.0; num_members], learning_rate, round: 0 })
    }

    /// Standard anytime-tuned rate for a K-round run over N experts.
    pub fn default_rate(num_members: usize, rounds: usize) -> f64 {
        (8.0 * (num_members.max(2) as f64).ln() / rounds.max(1) as f64).sqrt()
    }

    /// Current mixture weights, proportional to `exp(-eta * cumulative)`.
    pub fn weights(&self) -> Vec<f64> {
        let min = self.cumulative_losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut w: Vec<f64> =
            self.cumulative_losses.iter().map(|&l| (-self.learning_rate * (l - min)).exp()).collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
        w
    }
}

/// One exponential-weights update. Losses must lie in `[-1, 1]`. Returns the
/// weights in effect after the update.
pub fn hedge_step(state: &mut HedgeState, losses: &[f64]) -> Result<Vec<f64>> {
    if losses.len() != state.cumulative_losses.len() {
        return Err(Error::Shape("loss vector length".into()));
    }
    if losses.iter().any(|&l| !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&l)) {
        return Err(Error::Validation("loss outside [-1, 1]".into()));
    }
    for (c, &l) in state.cumulative_losses.iter_mut().zip(losses) {
        *c += l;
    }
    state.round += 1;
    Ok(state.weights())
}

/// Empirical value difference: behavior trajectory return minus the mean
/// expert return, under a candidate reward. Lies in `[-1, 1]` whenever the
/// reward satisfies the bounded-cumulative condition.
pub fn value_difference_loss(
    reward: &RewardFn,
    behavior_traj: &Trajectory,
    expert_data: &Dataset,
) -> Result<f64> {
    if expert_data.is_empty() {
        return Err(Error::Validation("empty expert dataset".into()));
    }
    Ok(behavior_traj.total_reward(reward) - expert_data.mean_return(reward))
}

/// Reward selection mode for each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Weight-averaged table; exact under linear losses.
    Mixture,
    /// Draw one member index from the weights.
    Sample,
}

/// Materializes the round's reward from the current weights.
pub fn select_reward(
    weights: &[f64],
    reward_class: &RewardClass,
    mode: RewardMode,
    rng: &mut impl Rng,
) -> Result<RewardFn> {
    match mode {
        RewardMode::Mixture => RewardFn::mix(reward_class.members(), weights),
        RewardMode::Sample => {
            let idx = TabularMdp::sample_from(weights, rng);
            Ok(reward_class.members()[idx].clone())
        }
    }
}

/// Max-likelihood version space over model-class indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VersionSpace {
    pub member_indices: Vec<usize>,
    pub beta: f64,
    pub log_likelihoods: Vec<f64>,
}

impl VersionSpace {
    pub fn contains(&self, index: usize) -> bool {
        self.member_indices.contains(&index)
    }
}

/// Filters the model class to members whose summed transition
/// log-likelihood is within `beta` of the maximum. Members assigning zero
/// probability to an observed transition score negative infinity.
pub fn mle_version_space(
    model_class: &ModelClass,
    skeleton: &TabularMdp,
    transitions: &[(usize, usize, usize)],
    beta: f64,
) -> Result<VersionSpace> {
    if beta < 0.0 {
        return Err(Error::Validation(format!("beta {beta} must be nonnegative")));
    }
    let na = skeleton.num_actions();
    let ns = skeleton.num_states();
    let log_likelihoods: Vec<f64> = model_class
        .kernels()
        .iter()
        .map(|kernel| {
            let mut ll = 0.0;
            for &(s, a, sp) in transitions {
                let p = kernel[(s * na + a) * ns + sp];
                if p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                ll += p.ln();
            }
            ll
        })
        .collect();
    let max = log_likelihoods.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateDataset(
            "every model assigns zero probability to an observed transition".into(),
        ));
    }
    let member_indices: Vec<usize> = log_likelihoods
        .iter()
        .enumerate()
        .filter(|(_, &ll)| ll >= max - beta)
        .map(|(i, _)| i)
        .collect();
    Ok(VersionSpace { member_indices, beta, log_likelihoods })
}

/// Plans optimistically: value iteration under every surviving kernel,
/// returning the best (policy, model index, value) triple.
pub fn optimistic_plan(
    version_space: &VersionSpace,
    model_class: &ModelClass,
    reward: &RewardFn,
    skeleton: &TabularMdp,
) -> Result<(Policy, usize, f64)> {
    if version_space.member_indices.is_empty() {
        return Err(Error::Validation("empty version space".into()));
    }
    let results: Vec<(usize, Policy, f64)> = version_space
        .member_indices
        .par_iter()
        .map(|&idx| {
            let mdp = skeleton.with_kernel(model_class.kernels()[idx].clone())?;
            let (policy, value) = optimal_policy(&mdp, reward)?;
            Ok((idx, policy, value))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = results
        .into_iter()
        .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    Ok((best.1, best.0, best.2))
}

/// Per-round record of a learner run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub weights: Vec<f64>,
    pub version_space_size: usize,
    pub truth_in_version_space: bool,
    pub optimistic_value: f64,
    pub chosen_model: usize,
    /// Loss vector fed to the reward learner this round.
    pub losses: Vec<f64>,
    /// Exact value gap against the expert under each candidate reward,
    /// evaluated in the true environment.
    pub gaps: Vec<f64>,
}

/// Full run output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunLog {
    pub reward_mode: RewardMode,
    pub beta: f64,
    pub learning_rate: f64,
    pub records: Vec<RoundRecord>,
    /// Per-round policies; the output policy is their uniform mixture.
    #[serde(skip)]
    pub policies: Vec<Policy>,
    /// Empirical per-trajectory returns of each behavior trajectory under
    /// each reward member, for optimization-error accounting. Row k holds
    /// the trajectory collected with policy k-1's predecessor; the final
    /// row comes from one extra rollout of the last policy.
    pub behavior_returns: Vec<Vec<f64>>,
    /// Mean expert return per reward member.
    pub expert_returns: Vec<f64>,
}

impl RunLog {
    pub fn num_rounds(&self) -> usize {
        self.records.len()
    }

    /// Worst-case cumulative regret over the reward class after `k` rounds:
    /// max over members of the summed exact per-round gaps.
    pub fn regret_at(&self, k: usize) -> f64 {
        let m = self.expert_returns.len();
        (0..m)
            .map(|r| self.records[..k].iter().map(|rec| rec.gaps[r]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fraction of rounds whose version space contained the true kernel.
    pub fn truth_containment_rate(&self) -> f64 {
        let hits = self.records.iter().filter(|r| r.truth_in_version_space).count();
        hits as f64 / self.records.len().max(1) as f64
    }
}

/// Configuration for one learner run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MbailConfig {
    pub rounds: usize,
    pub beta: f64,
    pub learning_rate: f64,
    pub reward_mode: RewardMode,
}

impl MbailConfig {
    /// Defaults: `beta = 4 ln(K |P| / 0.1)`, tuned Hedge rate, mixture mode.
    pub fn standard(rounds: usize, model_class_size: usize, reward_class_size: usize) -> Self {
        Self {
            rounds,
            beta: 4.0 * (rounds as f64 * model_class_size as f64 / 0.1).ln(),
            learning_rate: HedgeState::default_rate(reward_class_size, rounds),
            reward_mode: RewardMode::Mixture,
        }
    }
}

/// Runs the full interaction loop against the true environment. The
/// environment is used only to sample trajectories (reward-free); all reward
/// signal comes from the expert dataset through the loss. The expert policy
/// is used solely for offline gap bookkeeping in the log.
pub fn run_mbail(
    mdp: &TabularMdp,
    expert_policy: &Policy,
    expert_data: &Dataset,
    reward_class: &RewardClass,
    model_class: &ModelClass,
    config: &MbailConfig,
    rng: &mut impl Rng,
) -> Result<RunLog> {
    if config.rounds == 0 {
        return Err(Error::Validation("need at least one round".into()));
    }
    if expert_data.is_empty() {
        return Err(Error::Validation("empty expert dataset".into()));
    }
    let m = reward_class.len();
    let mut hedge = HedgeState::new(m, config.learning_rate)?;
    let mut transitions: Vec<(usize, usize, usize)> = Vec::new();
    let mut records = Vec::with_capacity(config.rounds);
    let mut policies: Vec<Policy> = Vec::with_capacity(config.rounds);
    let mut behavior_returns: Vec<Vec<f64>> = Vec::with_capacity(config.rounds + 1);
    let expert_returns: Vec<f64> =
        reward_class.members().iter().map(|r| expert_data.mean_return(r)).collect();
    // Exact expert values under the true kernel, for gap bookkeeping.
    let expert_values: Vec<f64> = reward_class
        .members()
        .iter()
        .map(|r| exact_policy_value(mdp, expert_policy, r))
        .collect::<Result<Vec<_>>>()?;

    let mut current = Policy::uniform(mdp.num_states(), mdp.num_actions(), mdp.horizon());
    for k in 0..config.rounds {
        let traj = mdp::sample_trajectory(mdp, &current, rng)?;
        behavior_returns
            .push(reward_class.members().iter().map(|r| traj.total_reward(r)).collect());
        transitions.extend(traj.transitions());

        let losses: Vec<f64> = reward_class
            .members()
            .iter()
            .map(|r| value_difference_loss(r, &traj, expert_data))
            .collect::<Result<Vec<_>>>()?;
        let weights = hedge_step(&mut hedge, &losses)?;
        let reward = select_reward(&weights, reward_class, config.reward_mode, rng)?;

        let vs = mle_version_space(model_class, mdp, &transitions, config.beta)?;
        let truth_in = model_class.truth_index.map(|t| vs.contains(t)).unwrap_or(false);
        let (policy, chosen_model, optimistic_value) =
            optimistic_plan(&vs, model_class, &reward, mdp)?;

        let gaps: Vec<f64> = reward_class
            .members()
            .iter()
            .enumerate()
            .map(|(i, r)| Ok(expert_values[i] - exact_policy_value(mdp, &policy, r)?))
            .collect::<Result<Vec<_>>>()?;

        records.push(RoundRecord {
            round: k + 1,
            weights,
            version_space_size: vs.member_indices.len(),
            truth_in_version_space: truth_in,
            optimistic_value,
            chosen_model,
            losses,
            gaps,
        });
        policies.push(policy.clone());
        current = policy;
    }
    // One extra rollout of the final policy closes the empirical-value
    // ledger used for optimization-error accounting.
    let traj = mdp::sample_trajectory(mdp, &current, rng)?;
    behavior_returns.push(reward_class.members().iter().map(|r| traj.total_reward(r)).collect());

    Ok(RunLog {
        reward_mode: config.reward_mode,
        beta: config.beta,
        learning_rate: config.learning_rate,
        records,
        policies,
        behavior_returns,
        expert_returns,
    })
}

/// Uniform mixture of the per-round policies, flattened into one stochastic
/// policy table per stage.
pub fn mixture_policy(policies: &[Policy]) -> Result<Policy> {
    let first = policies.first().ok_or_else(|| Error::Validation("no policies to mix".into()))?;
    let (ns, na, h) = (first.num_states(), first.num_actions(), first.horizon());
    let w = 1.0 / policies.len() as f64;
    let mut stages = vec![vec![0.0; ns * na]; h];
    for pi in policies {
        if pi.num_states() != ns || pi.num_actions() != na || pi.horizon() != h {
            return Err(Error::Shape("policy mixture skeleton mismatch".into()));
        }
        for (stage, out) in stages.iter_mut().enumerate() {
            for s in 0..ns {
                for (a, acc) in out[s * na..(s + 1) * na].iter_mut().enumerate() {
                    *acc += w * pi.action_dist(stage, s)[a];
                }
            }
        }
    }
    Policy::new(ns, na, stages)
}

/// Worst-case exact value gap of a policy against the expert over a reward
/// class, in the true environment.
pub fn evaluate_ail_gap(
    mdp: &TabularMdp,
    expert_policy: &Policy,
    policy: &Policy,
    reward_class: &RewardClass,
) -> Result<f64> {
    let mut gap = f64::NEG_INFINITY;
    for r in reward_class.members() {
        let v_e = exact_policy_value(mdp, expert_policy, r)?;
        let v_p = exact_policy_value(mdp, policy, r)?;
        gap = gap.max(v_e - v_p);
    }
    Ok(gap)
}
