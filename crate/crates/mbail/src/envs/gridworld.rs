//! Stochastic GridWorld benchmark.
//!
//! A square grid with four movement actions. The intended neighbor is
//! reached with probability `p`; each of the other three neighbors receives
//! `(1-p)/3`. Mass pointing off-grid is reassigned to the current cell. The
//! true reward pays `1/H` per step inside the goal region, so every
//! trajectory's cumulative reward lies in `[0, 1]`; reported returns are
//! rescaled by `H`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::RewardClass;
use crate::mdp::{RewardFn, TabularMdp};

/// Movement deltas as `(d_row, d_col)` for actions up, down, left, right.
/// "Up" increases the row index, toward the top-right goal corner.
pub const MOVES: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, -1), (0, 1)];

/// GridWorld layout and dynamics parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridWorldSpec {
    pub side: usize,
    /// Probability of moving to the intended neighbor.
    pub success_prob: f64,
    pub horizon: usize,
    /// Cells paying per-step reward, as `(row, col)`.
    pub goal_region: Vec<(usize, usize)>,
    /// Initial distribution is uniform over these cells.
    pub start_region: Vec<(usize, usize)>,
}

impl GridWorldSpec {
    /// Standard 9x9 layout: horizon 20, starts in the bottom-left 2x2 block,
    /// goal region the top-right 5x5 block.
    pub fn standard(success_prob: f64) -> Self {
        let goal_region =
            (4..9).flat_map(|r| (4..9).map(move |c| (r, c))).collect();
        Self {
            side: 9,
            success_prob,
            horizon: 20,
            goal_region,
            start_region: vec![(0, 0), (0, 1), (1, 0), (1, 1)],
        }
    }

    pub fn num_states(&self) -> usize {
        self.side * self.side
    }

    pub fn cell_index(&self, row: usize, col: usize) -> usize {
        row * self.side + col
    }

    /// Per-step reward inside the goal region.
    pub fn step_reward(&self) -> f64 {
        1.0 / self.horizon as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.success_prob > 0.0 && self.success_prob <= 1.0) {
            return Err(Error::Validation(format!(
                "success probability {} outside (0, 1]",
                self.success_prob
            )));
        }
        if self.side == 0 || self.horizon == 0 {
            return Err(Error::Validation("side and horizon must be positive".into()));
        }
        if self.start_region.is_empty() {
            return Err(Error::Validation("empty start region".into()));
        }
        for &(r, c) in self.goal_region.iter().chain(&self.start_region) {
            if r >= self.side || c >= self.side {
                return Err(Error::Validation(format!("cell ({r}, {c}) outside the grid")));
            }
        }
        Ok(())
    }
}

/// Builds the tabular MDP and the true reward for a GridWorld spec.
pub fn build_gridworld(spec: &GridWorldSpec) -> Result<(TabularMdp, RewardFn)> {
    spec.validate()?;
    let side = spec.side as i32;
    let ns = spec.num_states();
    let na = MOVES.len();
    let p = spec.success_prob;
    let mut kernel = vec![0.0; ns * na * ns];
    for r in 0..side {
        for c in 0..side {
            let s = (r * side + c) as usize;
            for a in 0..na {
                let row = &mut kernel[(s * na + a) * ns..][..ns];
                for (j, &(dr, dc)) in MOVES.iter().enumerate() {
                    let pr = if j == a { p } else { (1.0 - p) / 3.0 };
                    let (nr, nc) = (r + dr, c + dc);
                    let dest = if (0..side).contains(&nr) && (0..side).contains(&nc) {
                        (nr * side + nc) as usize
                    } else {
                        s
                    };
                    row[dest] += pr;
                }
            }
        }
    }
    let mut initial = vec![0.0; ns];
    let w = 1.0 / spec.start_region.len() as f64;
    for &(r, c) in &spec.start_region {
        initial[spec.cell_index(r, c)] += w;
    }
    let mdp = TabularMdp::new(ns, na, spec.horizon, kernel, initial)?;

    let mut reward = RewardFn::zeros(ns, na);
    for &(r, c) in &spec.goal_region {
        let s = spec.cell_index(r, c);
        for a in 0..na {
            reward.set(s, a, spec.step_reward());
        }
    }
    Ok((mdp, reward))
}

/// Splits a side of length `side` into `n` contiguous blocks, larger blocks
/// first. Example: side 9, n 4 gives lengths `[3, 2, 2, 2]`.
pub fn axis_blocks(side: usize, n: usize) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let len = (side - start).div_ceil(n - i);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Reward class induced by an `n x n` block partition of the grid: one
/// member paying `1/H` per step inside each block, plus the all-zero table.
/// Class size is `n^2 + 1`.
pub fn block_reward_class(spec: &GridWorldSpec, n: usize) -> Result<RewardClass> {
    if n == 0 || n > spec.side {
        return Err(Error::Validation(format!("block count {n} out of 1..={}", spec.side)));
    }
    let ns = spec.num_states();
    let na = MOVES.len();
    let blocks = axis_blocks(spec.side, n);
    let mut members = Vec::with_capacity(n * n + 1);
    for rows in &blocks {
        for cols in &blocks {
            let mut table = RewardFn::zeros(ns, na);
            for r in rows.clone() {
                for c in cols.clone() {
                    for a in 0..na {
                        table.set(spec.cell_index(r, c), a, spec.step_reward());
                    }
                }
            }
            members.push(table);
        }
    }
    members.push(RewardFn::zeros(ns, na));
    RewardClass::new(members)
}

/// Identifier of the `n x n`-cell region containing a cell. Regions tile
/// the grid from the origin; edge regions may be smaller.
pub fn region_id(spec: &GridWorldSpec, state: usize, n: usize) -> (usize, usize) {
    let (r, c) = (state / spec.side, state % spec.side);
    (r / n, c / n)
}

/// All states in the same `n x n`-cell region as `state`.
pub fn region_members(spec: &GridWorldSpec, state: usize, n: usize) -> Vec<usize> {
    let target = region_id(spec, state, n);
    (0..spec.num_states()).filter(|&s| region_id(spec, s, n) == target).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{self, Policy};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_up_moves_up() {
        let spec = GridWorldSpec::standard(1.0);
        let (mdp, _) = build_gridworld(&spec).unwrap();
        let s = spec.cell_index(3, 3);
        let row = mdp.kernel_row(s, 0);
        assert_eq!(row[spec.cell_index(4, 3)], 1.0);
    }

    #[test]
    fn interior_split_matches_p() {
        let spec = GridWorldSpec::standard(0.65);
        let (mdp, _) = build_gridworld(&spec).unwrap();
        let s = spec.cell_index(3, 3);
        let row = mdp.kernel_row(s, 0);
        assert_abs_diff_eq!(row[spec.cell_index(4, 3)], 0.65, epsilon = 1e-12);
        for &(r, c) in &[(2, 3), (3, 2), (3, 4)] {
            assert_abs_diff_eq!(row[spec.cell_index(r, c)], 0.35 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rows_stochastic_for_all_sweep_ps() {
        for p in [0.45, 0.55, 0.65, 0.75] {
            // TabularMdp::new validates row sums; construction succeeding is the check.
            build_gridworld(&GridWorldSpec::standard(p)).unwrap();
        }
    }

    #[test]
    fn corner_keeps_offgrid_mass() {
        let spec = GridWorldSpec::standard(0.65);
        let (mdp, _) = build_gridworld(&spec).unwrap();
        // At (0,0), action "down": intended move is off-grid, as is "left".
        let s = spec.cell_index(0, 0);
        let row = mdp.kernel_row(s, 1);
        assert_abs_diff_eq!(row[s], 0.65 + 0.35 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn empirical_transition_frequencies_within_3_sigma() {
        let spec = GridWorldSpec::standard(0.65);
        let (mdp, _) = build_gridworld(&spec).unwrap();
        let s = spec.cell_index(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            let next = mdp.sample_next(s, 0, &mut rng);
            let j = MOVES
                .iter()
                .position(|&(dr, dc)| {
                    next == spec.cell_index((4 + dr) as usize, (4 + dc) as usize)
                })
                .unwrap();
            counts[j] += 1;
        }
        for (j, &cnt) in counts.iter().enumerate() {
            let p = if j == 0 { 0.65 } else { 0.35 / 3.0 };
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((cnt as f64 / trials as f64 - p).abs() < 3.0 * sigma, "action branch {j}");
        }
    }

    #[test]
    fn fixed_random_policy_value_matches_monte_carlo() {
        let spec = GridWorldSpec::standard(0.65);
        let (mdp, reward) = build_gridworld(&spec).unwrap();
        let pi = Policy::uniform(mdp.num_states(), mdp.num_actions(), mdp.horizon());
        let exact = mdp::exact_policy_value(&mdp, &pi, &reward).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let trials = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..trials {
            let ret = mdp::sample_trajectory(&mdp, &pi, &mut rng).unwrap().total_reward(&reward);
            sum += ret;
            sumsq += ret * ret;
        }
        let mean = sum / trials as f64;
        let var = (sumsq / trials as f64 - mean * mean).max(0.0);
        let se = (var / trials as f64).sqrt();
        assert!((exact - mean).abs() < 3.0 * se, "exact {exact}, mc {mean} +- {se}");
    }

    #[test]
    fn deterministic_optimal_value_matches_shortest_paths() {
        let spec = GridWorldSpec::standard(1.0);
        let (mdp, reward) = build_gridworld(&spec).unwrap();
        let (_, v) = mdp::optimal_policy(&mdp, &reward).unwrap();
        // Manhattan distances from the four starts to the goal block edge
        // (row 4, col 4): 8, 7, 7, 6; each remaining step pays 1/H.
        let expect: f64 = [8.0, 7.0, 7.0, 6.0]
            .iter()
            .map(|d| (spec.horizon as f64 - d) * spec.step_reward() / 4.0)
            .sum();
        assert_abs_diff_eq!(v, expect, epsilon = 1e-9);
    }

    #[test]
    fn reward_satisfies_cumulative_bound() {
        let spec = GridWorldSpec::standard(0.65);
        let (mdp, reward) = build_gridworld(&spec).unwrap();
        reward.check_bounded_cumulative(&mdp).unwrap();
    }

    #[test]
    fn block_class_sizes() {
        let spec = GridWorldSpec::standard(0.65);
        assert_eq!(block_reward_class(&spec, 1).unwrap().len(), 2);
        assert_eq!(block_reward_class(&spec, 3).unwrap().len(), 10);
        assert_eq!(block_reward_class(&spec, 4).unwrap().len(), 17);
    }

    #[test]
    fn block_members_hit_cumulative_boundary() {
        let spec = GridWorldSpec::standard(0.65);
        let (mdp, _) = build_gridworld(&spec).unwrap();
        let class = block_reward_class(&spec, 4).unwrap();
        for member in class.members() {
            let (lo, hi) = member.cumulative_range(&mdp).unwrap();
            assert!(lo >= 0.0);
            assert!(hi <= 1.0 + 1e-12);
        }
        // A start cell sits inside the first block, so staying put collects
        // the full budget: max cumulative exactly 1.
        let (_, hi) = class.members()[0].cumulative_range(&mdp).unwrap();
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn axis_blocks_ceiling_first() {
        let lens: Vec<usize> = axis_blocks(9, 4).iter().map(|r| r.len()).collect();
        assert_eq!(lens, vec![3, 2, 2, 2]);
        let lens1: Vec<usize> = axis_blocks(9, 1).iter().map(|r| r.len()).collect();
        assert_eq!(lens1, vec![9]);
    }

    #[test]
    fn regions_partition_the_grid() {
        let spec = GridWorldSpec::standard(0.65);
        for n in 1..=9 {
            let mut covered = vec![false; spec.num_states()];
            let mut seen = std::collections::HashSet::new();
            for s in 0..spec.num_states() {
                let id = region_id(&spec, s, n);
                if seen.insert(id) {
                    for m in region_members(&spec, s, n) {
                        assert!(!covered[m]);
                        covered[m] = true;
                    }
                }
            }
            assert!(covered.iter().all(|&x| x), "n={n}");
        }
    }
}
