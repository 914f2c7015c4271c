//! Two-phase lower-bound instance family.
//!
//! Phase 0 holds one state per sign pattern in `{-1,+1}^{d_r}` plus a dummy
//! state `s0`. The first action's "push" coordinates `a_p` determine whether
//! the episode lands in the rewarded copy `[s,1]` of the current pattern or
//! in the absorbing zero-reward state `[s0,1]`. Phase-1 states self-loop and
//! pay reward through the single "report" coordinate `a_r`.

use serde::{Deserialize, Serialize};

use crate::envs::packing::{sign_dot, sign_l1, PackingSet};
use crate::error::{Error, Result};
use crate::learner::RewardClass;
use crate::mdp::{Policy, RewardFn, TabularMdp};

/// Largest sign dimension accepted by the builders.
pub const DIM_CAP: usize = 6;

/// Parameters of one instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardInstanceParams {
    /// Reward-side sign dimension.
    pub d_r: usize,
    /// Transition-side sign dimension.
    pub d_p: usize,
    /// Transition bias scale, at most `1/(4 d_p)`.
    pub eps_p: f64,
    /// Policy bias scale, at most `1/(4 d_r)`.
    pub eps_pi: f64,
    /// Reward budget in `(0, 1]`.
    pub tau: f64,
    /// True reward parameter; must be a member of `packing`.
    pub theta_star: u64,
    /// True transition parameter in `{-1,+1}^{d_p}` as a bitmask.
    pub mu_star: u64,
    /// Candidate reward parameters.
    pub packing: PackingSet,
    /// Number of rewarded steps; the MDP horizon is `reward_horizon + 1`.
    pub reward_horizon: usize,
}

impl HardInstanceParams {
    /// Exhaustive separated packing set over `{-1,+1}^{d_r}`, true
    /// parameters all-plus. The separation (pairwise correlation at most 0,
    /// so distinct members differ in at least half their coordinates) is
    /// what makes the worst-case gap dominate its closed-form lower bound.
    pub fn standard(d_r: usize, d_p: usize, reward_horizon: usize) -> Result<Self> {
        let packing = PackingSet::build_separated(d_r)?;
        let params = Self {
            d_r,
            d_p,
            eps_p: 1.0 / (4.0 * d_p as f64),
            eps_pi: 1.0 / (4.0 * d_r as f64),
            tau: 1.0,
            theta_star: packing.vectors[0],
            mu_star: (1u64 << d_p) - 1,
            packing,
            reward_horizon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_r == 0 || self.d_r > DIM_CAP || self.d_p == 0 || self.d_p > DIM_CAP {
            return Err(Error::Validation(format!(
                "sign dimensions ({}, {}) outside 1..={DIM_CAP}",
                self.d_r, self.d_p
            )));
        }
        if self.reward_horizon == 0 {
            return Err(Error::Validation("reward horizon must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Validation(format!("tau {} outside (0, 1]", self.tau)));
        }
        if self.eps_p < 0.0 || self.eps_p > 1.0 / (4.0 * self.d_p as f64) {
            return Err(Error::Validation(format!("eps_p {} violates 1/(4 d_p)", self.eps_p)));
        }
        if self.eps_pi < 0.0 || self.eps_pi > 1.0 / (4.0 * self.d_r as f64) {
            return Err(Error::Validation(format!("eps_pi {} violates 1/(4 d_r)", self.eps_pi)));
        }
        if self.packing.dim != self.d_r {
            return Err(Error::Validation("packing set dimension mismatch".into()));
        }
        if !self.packing.vectors.contains(&self.theta_star) {
            return Err(Error::Validation("theta_star not in the packing set".into()));
        }
        if !self.packing.verify() {
            return Err(Error::Validation("packing set violates the correlation bound".into()));
        }
        if self.mu_star >> self.d_p != 0 {
            return Err(Error::Validation("mu_star has bits beyond d_p".into()));
        }
        Ok(())
    }

    pub fn num_patterns(&self) -> usize {
        1 << self.d_r
    }

    /// States per phase: all sign patterns plus `s0`.
    pub fn states_per_phase(&self) -> usize {
        self.num_patterns() + 1
    }

    pub fn num_states(&self) -> usize {
        2 * self.states_per_phase()
    }

    pub fn num_actions(&self) -> usize {
        (1 << self.d_p) * 2
    }

    /// State index for a sign pattern in a phase. Patterns are lexicographic
    /// by bitmask; `s0` takes the last slot of each phase.
    pub fn pattern_state(&self, phase: usize, pattern: u64) -> usize {
        phase * self.states_per_phase() + pattern as usize
    }

    pub fn dummy_state(&self, phase: usize) -> usize {
        phase * self.states_per_phase() + self.num_patterns()
    }

    /// Decodes a state index into `(phase, pattern)`; `None` pattern is `s0`.
    pub fn decode_state(&self, state: usize) -> (usize, Option<u64>) {
        let per = self.states_per_phase();
        let (phase, idx) = (state / per, state % per);
        if idx == self.num_patterns() {
            (phase, None)
        } else {
            (phase, Some(idx as u64))
        }
    }

    /// Action index from push coordinates and the report sign.
    pub fn action_index(&self, a_p: u64, a_r_plus: bool) -> usize {
        (a_p as usize) * 2 + a_r_plus as usize
    }

    /// Decodes an action index into `(a_p mask, report sign as +-1)`.
    pub fn decode_action(&self, action: usize) -> (u64, i64) {
        ((action / 2) as u64, if action % 2 == 1 { 1 } else { -1 })
    }
}

/// Builds the MDP, the candidate reward class (one member per packing
/// vector), and the expert policy.
pub fn build_hard_instance(
    params: &HardInstanceParams,
) -> Result<(TabularMdp, RewardClass, Policy)> {
    params.validate()?;
    let ns = params.num_states();
    let na = params.num_actions();
    let horizon = params.reward_horizon + 1;
    let mut kernel = vec![0.0; ns * na * ns];
    for s in 0..ns {
        let (phase, pattern) = params.decode_state(s);
        for a in 0..na {
            let row = &mut kernel[(s * na + a) * ns..][..ns];
            match (phase, pattern) {
                (0, Some(pat)) => {
                    let (a_p, _) = params.decode_action(a);
                    let q = 0.5 + params.eps_p * sign_dot(a_p, params.mu_star, params.d_p) as f64;
                    row[params.pattern_state(1, pat)] = q;
                    row[params.dummy_state(1)] = 1.0 - q;
                }
                // s0 in phase 0 and everything in phase 1 self-loop.
                _ => row[s] = 1.0,
            }
        }
    }
    let mut initial = vec![0.0; ns];
    let w = 1.0 / params.num_patterns() as f64;
    for pat in 0..params.num_patterns() as u64 {
        initial[params.pattern_state(0, pat)] = w;
    }
    let mdp = TabularMdp::new(ns, na, horizon, kernel, initial)?;
    let members: Vec<RewardFn> =
        params.packing.vectors.iter().map(|&theta| reward_for(params, theta)).collect();
    let reward_class = RewardClass::new(members)?;
    let expert = hard_instance_policy(params, params.mu_star, params.theta_star)?;
    Ok((mdp, reward_class, expert))
}

/// Reward table for a candidate parameter `theta`: rewarded phase-1 pattern
/// states pay `(tau/H)(1/2 + a_r/(2 d_r) <theta, s>)`, everything else 0.
pub fn reward_for(params: &HardInstanceParams, theta: u64) -> RewardFn {
    let mut table = RewardFn::zeros(params.num_states(), params.num_actions());
    let scale = params.tau / params.reward_horizon as f64;
    for pat in 0..params.num_patterns() as u64 {
        let s = params.pattern_state(1, pat);
        let corr = sign_dot(theta, pat, params.d_r) as f64;
        for a in 0..params.num_actions() {
            let (_, a_r) = params.decode_action(a);
            table.set(s, a, scale * (0.5 + a_r as f64 * corr / (2.0 * params.d_r as f64)));
        }
    }
    table
}

/// The biased product policy for parameters `(mu_hat, theta_hat)`: push
/// coordinate `i` is `+1` with probability `1/2 + eps_pi d_r mu_hat_i`, the
/// report sign is `+1` with probability `1/2 + eps_pi <s, theta_hat>`. At
/// `s0` the report sign is unbiased. The same head applies at every stage
/// and phase.
pub fn hard_instance_policy(
    params: &HardInstanceParams,
    mu_hat: u64,
    theta_hat: u64,
) -> Result<Policy> {
    params.validate()?;
    if mu_hat >> params.d_p != 0 {
        return Err(Error::Validation("mu_hat has bits beyond d_p".into()));
    }
    let ns = params.num_states();
    let na = params.num_actions();
    let push_bias = params.eps_pi * params.d_r as f64;
    let mut table = vec![0.0; ns * na];
    for s in 0..ns {
        let (_, pattern) = params.decode_state(s);
        let q_r = match pattern {
            Some(pat) => 0.5 + params.eps_pi * sign_dot(pat, theta_hat, params.d_r) as f64,
            None => 0.5,
        };
        for a in 0..na {
            let (a_p, a_r) = params.decode_action(a);
            let mut prob = if a_r > 0 { q_r } else { 1.0 - q_r };
            for i in 0..params.d_p {
                let q_i = if (mu_hat >> i) & 1 == 1 { 0.5 + push_bias } else { 0.5 - push_bias };
                prob *= if (a_p >> i) & 1 == 1 { q_i } else { 1.0 - q_i };
            }
            table[s * na + a] = prob;
        }
    }
    Policy::stationary(ns, na, table, params.reward_horizon + 1)
}

/// Closed-form value of the `(mu_hat, theta_hat)` policy under the reward
/// with parameter `theta`, averaged over the initial distribution:
/// `(1/2 + 2 eps_p eps_pi d_r <mu*, mu_hat>) * (tau/2 + tau eps_pi / d_r * <theta_hat, theta>)`.
pub fn analytic_value(params: &HardInstanceParams, mu_hat: u64, theta_hat: u64, theta: u64) -> f64 {
    let reach = 0.5
        + 2.0
            * params.eps_p
            * params.eps_pi
            * params.d_r as f64
            * sign_dot(params.mu_star, mu_hat, params.d_p) as f64;
    let report = params.tau / 2.0
        + params.tau * params.eps_pi / params.d_r as f64
            * sign_dot(theta_hat, theta, params.d_r) as f64;
    reach * report
}

/// Exact worst-case value gap of the `(mu_hat, theta_hat)` policy against
/// the expert over the candidate reward class, together with the closed-form
/// lower bound `(tau eps_p eps_pi d_r / 2) |mu* - mu_hat|_1 +
/// (eps_pi tau / 2) 1[theta* != theta_hat]`.
pub fn evaluate_gap_bound(
    params: &HardInstanceParams,
    mu_hat: u64,
    theta_hat: u64,
) -> Result<(f64, f64)> {
    let (mdp, reward_class, expert) = build_hard_instance(params)?;
    let policy = hard_instance_policy(params, mu_hat, theta_hat)?;
    let mut gap = f64::NEG_INFINITY;
    for member in reward_class.members() {
        let v_e = crate::mdp::exact_policy_value(&mdp, &expert, member)?;
        let v_p = crate::mdp::exact_policy_value(&mdp, &policy, member)?;
        gap = gap.max(v_e - v_p);
    }
    let l1 = sign_l1(params.mu_star, mu_hat) as f64;
    let mismatch = if theta_hat != params.theta_star { 1.0 } else { 0.0 };
    let bound = params.tau * params.eps_p * params.eps_pi * params.d_r as f64 / 2.0 * l1
        + params.eps_pi * params.tau / 2.0 * mismatch;
    Ok((gap, bound))
}
