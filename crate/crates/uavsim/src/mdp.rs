//! Exact finite-horizon decision-process machinery on small quantized
//! instances: dense state enumeration, stochastic transitions, backward
//! induction, and policy evaluation. Used to measure how far the greedy
//! per-step scheduler sits from the exact optimum.
//!
//! Quantization makes the continuous state space finite: tower data and
//! UAV content take D levels, UAV energy takes Q levels, and all
//! scheduling physics (transfer, charge, consumption) becomes saturating
//! integer arithmetic. The only stochasticity is the per-step content
//! outcome, drawn once per step and applied to every generating UAV.
//!
//! Backward induction uses a per-stage discount gamma; some treatments
//! write the discount as gamma^t inside the recursion, which is the same
//! bookkeeping expressed from the initial step.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

const MAX_STATES: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("state count {0} exceeds the bound {MAX_STATES}")]
    TooManyStates(u128),
    #[error("infeasible action {0:?} in state {1}")]
    InfeasibleAction(Vec<(usize, usize)>, usize),
    #[error("policy undefined at reachable (step {step}, state {state})")]
    PartialPolicy { step: usize, state: usize },
}

/// One point of the per-step content-size distribution: every generating
/// UAV gains `gain` content levels with probability `prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentOutcome {
    pub gain: usize,
    pub prob: Scalar,
}

/// A discretized, enumerable mini-world for exact value iteration:
/// quantized energy (Q levels) and data (D levels), fixed geometry
/// (every tower reachable, one charging panel each), short horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallMdpInstance {
    pub n_towers: usize,
    pub n_uavs: usize,
    /// Q: energy quantization count.
    pub energy_levels: usize,
    /// D: data/content quantization count.
    pub data_levels: usize,
    pub content_outcomes: Vec<ContentOutcome>,
    pub horizon: usize,
    pub gamma: Scalar,
    pub epsilon: Scalar,
    /// Energy levels gained by a scheduled UAV before paying its cost.
    pub charge_levels: usize,
    /// Energy levels a scheduled UAV pays for the round trip.
    pub cost_scheduled: usize,
    /// Energy levels an unscheduled UAV pays per step.
    pub cost_idle: usize,
}

/// Alias used where the instance appears as a config section.
pub type MdpConfig = SmallMdpInstance;

impl Default for SmallMdpInstance {
    fn default() -> Self {
        SmallMdpInstance {
            n_towers: 2,
            n_uavs: 2,
            energy_levels: 3,
            data_levels: 3,
            content_outcomes: vec![
                ContentOutcome { gain: 1, prob: 0.5 },
                ContentOutcome { gain: 2, prob: 0.5 },
            ],
            horizon: 6,
            gamma: 0.95,
            epsilon: 0.5,
            charge_levels: 1,
            cost_scheduled: 1,
            cost_idle: 1,
        }
    }
}

impl SmallMdpInstance {
    pub fn validate(&self) -> Result<(), MdpError> {
        let mut issues = Vec::new();
        if !(1..=3).contains(&self.n_towers) {
            issues.push(format!("n_towers must be 1..=3, got {}", self.n_towers));
        }
        if !(1..=3).contains(&self.n_uavs) {
            issues.push(format!("n_uavs must be 1..=3, got {}", self.n_uavs));
        }
        if !(2..=5).contains(&self.energy_levels) {
            issues.push(format!("energy_levels must be 2..=5, got {}", self.energy_levels));
        }
        if !(2..=5).contains(&self.data_levels) {
            issues.push(format!("data_levels must be 2..=5, got {}", self.data_levels));
        }
        if !(1..=8).contains(&self.horizon) {
            issues.push(format!("horizon must be 1..=8, got {}", self.horizon));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            issues.push(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            issues.push(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if self.content_outcomes.is_empty() {
            issues.push("content_outcomes must be non-empty".into());
        }
        if self.content_outcomes.iter().any(|o| o.prob < 0.0) {
            issues.push("outcome probabilities must be non-negative".into());
        } else if !self.content_outcomes.is_empty() {
            let total: Scalar = self.content_outcomes.iter().map(|o| o.prob).sum();
            if (total - 1.0).abs() > 1e-12 {
                issues.push(format!("outcome probabilities sum to {total}, expected 1"));
            }
        }
        if !issues.is_empty() {
            return Err(MdpError::Invalid(issues.join("; ")));
        }
        let count = self.state_count_u128();
        if count > MAX_STATES as u128 {
            return Err(MdpError::TooManyStates(count));
        }
        Ok(())
    }

    fn state_count_u128(&self) -> u128 {
        let d = self.data_levels as u128;
        let q = self.energy_levels as u128;
        d.pow(self.n_towers as u32) * (q * d).pow(self.n_uavs as u32)
    }

    /// Dense state count: D^N * (Q*D)^M.
    pub fn state_count(&self) -> usize {
        self.state_count_u128() as usize
    }

    /// All tower data at 0, every UAV at full energy with no content.
    pub fn initial_state(&self) -> DiscreteState {
        DiscreteState {
            tower_data: vec![0; self.n_towers],
            uav_energy: vec![self.energy_levels - 1; self.n_uavs],
            uav_content: vec![0; self.n_uavs],
        }
    }

    /// A bounded random instance for gap-measurement harnesses:
    /// at most 729 states, horizon at most 6.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let p = rng.gen_range(0.2..0.8);
        let inst = SmallMdpInstance {
            n_towers: rng.gen_range(1..=2),
            n_uavs: rng.gen_range(1..=2),
            energy_levels: rng.gen_range(2..=3),
            data_levels: rng.gen_range(2..=3),
            content_outcomes: vec![
                ContentOutcome { gain: 1, prob: p },
                ContentOutcome { gain: 2, prob: 1.0 - p },
            ],
            horizon: rng.gen_range(3..=6),
            gamma: rng.gen_range(0.85..1.0),
            epsilon: rng.gen_range(0.2..0.8),
            charge_levels: rng.gen_range(1..=2),
            cost_scheduled: 1,
            cost_idle: 1,
        };
        debug_assert!(inst.state_count() <= 729);
        inst
    }
}

/// One quantized system state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiscreteState {
    pub tower_data: Vec<usize>,
    pub uav_energy: Vec<usize>,
    pub uav_content: Vec<usize>,
}

/// A scheduling action: sorted (tower, uav) pairs, one panel per tower,
/// at most one tower per UAV.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MdpAction(pub Vec<(usize, usize)>);

/// Dense index of a state: mixed-radix over tower data digits (base D),
/// then per-UAV energy (base Q) and content (base D) digits.
pub fn index_of(instance: &SmallMdpInstance, state: &DiscreteState) -> usize {
    let d = instance.data_levels;
    let q = instance.energy_levels;
    let mut idx = 0usize;
    for &dig in &state.tower_data {
        idx = idx * d + dig;
    }
    for j in 0..instance.n_uavs {
        idx = idx * q + state.uav_energy[j];
        idx = idx * d + state.uav_content[j];
    }
    idx
}

/// Inverse of [`index_of`].
pub fn state_of(instance: &SmallMdpInstance, mut idx: usize) -> DiscreteState {
    let d = instance.data_levels;
    let q = instance.energy_levels;
    let mut uav_content = vec![0; instance.n_uavs];
    let mut uav_energy = vec![0; instance.n_uavs];
    for j in (0..instance.n_uavs).rev() {
        uav_content[j] = idx % d;
        idx /= d;
        uav_energy[j] = idx % q;
        idx /= q;
    }
    let mut tower_data = vec![0; instance.n_towers];
    for i in (0..instance.n_towers).rev() {
        tower_data[i] = idx % d;
        idx /= d;
    }
    DiscreteState {
        tower_data,
        uav_energy,
        uav_content,
    }
}

/// All states, densely and bijectively indexed.
pub fn enumerate_states(instance: &SmallMdpInstance) -> Result<Vec<DiscreteState>, MdpError> {
    instance.validate()?;
    Ok((0..instance.state_count())
        .map(|i| state_of(instance, i))
        .collect())
}

/// Feasible actions in a state: every matching of live UAVs (energy > 0)
/// to distinct towers, including the empty one.
pub fn feasible_actions(instance: &SmallMdpInstance, state: &DiscreteState) -> Vec<MdpAction> {
    let mut out = Vec::new();
    let mut used = vec![false; instance.n_towers];
    let mut pairs = Vec::new();
    fn recurse(
        j: usize,
        instance: &SmallMdpInstance,
        state: &DiscreteState,
        used: &mut [bool],
        pairs: &mut Vec<(usize, usize)>,
        out: &mut Vec<MdpAction>,
    ) {
        if j == instance.n_uavs {
            let mut sorted = pairs.clone();
            sorted.sort_unstable();
            out.push(MdpAction(sorted));
            return;
        }
        recurse(j + 1, instance, state, used, pairs, out);
        if state.uav_energy[j] > 0 {
            for i in 0..instance.n_towers {
                if !used[i] {
                    used[i] = true;
                    pairs.push((i, j));
                    recurse(j + 1, instance, state, used, pairs, out);
                    pairs.pop();
                    used[i] = false;
                }
            }
        }
    }
    recurse(0, instance, state, &mut used, &mut pairs, &mut out);
    out
}

fn action_feasible(instance: &SmallMdpInstance, state: &DiscreteState, action: &MdpAction) -> bool {
    let mut tower_used = vec![false; instance.n_towers];
    let mut uav_used = vec![false; instance.n_uavs];
    for &(i, j) in &action.0 {
        if i >= instance.n_towers || j >= instance.n_uavs {
            return false;
        }
        if tower_used[i] || uav_used[j] || state.uav_energy[j] == 0 {
            return false;
        }
        tower_used[i] = true;
        uav_used[j] = true;
    }
    true
}

/// The deterministic part of a step: transfer, charge, consumption, all
/// saturating. Returns the post-step state before content generation.
fn apply_deterministic(
    instance: &SmallMdpInstance,
    state: &DiscreteState,
    action: &MdpAction,
) -> DiscreteState {
    let mut next = state.clone();
    let d_max = instance.data_levels - 1;
    let q_max = instance.energy_levels - 1;
    let mut scheduled = vec![false; instance.n_uavs];
    for &(i, j) in &action.0 {
        scheduled[j] = true;
        next.tower_data[i] = (next.tower_data[i] + next.uav_content[j]).min(d_max);
        next.uav_content[j] = 0;
    }
    for j in 0..instance.n_uavs {
        if scheduled[j] {
            let charged = (next.uav_energy[j] + instance.charge_levels).min(q_max);
            next.uav_energy[j] = charged.saturating_sub(instance.cost_scheduled);
        } else {
            next.uav_energy[j] = next.uav_energy[j].saturating_sub(instance.cost_idle);
        }
    }
    next
}

/// Reward of the post-step state: both terms mapped into [0, 1] and
/// epsilon-weighted, mirroring the continuous normalized objective.
fn reward_of(instance: &SmallMdpInstance, post: &DiscreteState) -> Scalar {
    let d_max = (instance.data_levels - 1) as Scalar;
    let q_max = (instance.energy_levels - 1) as Scalar;
    let n = instance.n_towers as Scalar;
    let sum: Scalar = post.tower_data.iter().map(|&d| d as Scalar).sum();
    let mean = sum / n;
    let var = post
        .tower_data
        .iter()
        .map(|&d| (d as Scalar - mean) * (d as Scalar - mean))
        .sum::<Scalar>()
        / n;
    let cv = if mean > 0.0 { var.sqrt() / mean } else { 0.0 };
    let tower = (sum / (n * d_max)) / (1.0 + cv);
    let uav = post
        .uav_energy
        .iter()
        .map(|&q| q as Scalar / q_max)
        .sum::<Scalar>()
        / instance.n_uavs as Scalar;
    instance.epsilon * tower + (1.0 - instance.epsilon) * uav
}

/// Successor under one content outcome: the deterministic sub-steps, then
/// every unscheduled UAV still holding energy gains the outcome's content
/// levels. Returns the successor and the outcome's probability.
pub fn transition(
    instance: &SmallMdpInstance,
    state: &DiscreteState,
    action: &MdpAction,
    outcome: &ContentOutcome,
) -> Result<(DiscreteState, Scalar), MdpError> {
    if !action_feasible(instance, state, action) {
        return Err(MdpError::InfeasibleAction(
            action.0.clone(),
            index_of(instance, state),
        ));
    }
    let mut next = apply_deterministic(instance, state, action);
    let d_max = instance.data_levels - 1;
    let scheduled: Vec<bool> = {
        let mut s = vec![false; instance.n_uavs];
        for &(_, j) in &action.0 {
            s[j] = true;
        }
        s
    };
    for j in 0..instance.n_uavs {
        if !scheduled[j] && next.uav_energy[j] > 0 {
            next.uav_content[j] = (next.uav_content[j] + outcome.gain).min(d_max);
        }
    }
    Ok((next, outcome.prob))
}

/// Immediate reward of taking `action` in `state`. Outcome-independent:
/// content generation affects future transfers, not the current reward.
pub fn immediate_reward(
    instance: &SmallMdpInstance,
    state: &DiscreteState,
    action: &MdpAction,
) -> Result<Scalar, MdpError> {
    if !action_feasible(instance, state, action) {
        return Err(MdpError::InfeasibleAction(
            action.0.clone(),
            index_of(instance, state),
        ));
    }
    Ok(reward_of(instance, &apply_deterministic(instance, state, action)))
}

/// Optimal values and the attaining policy, indexed (step, state).
/// `values` has horizon + 1 stages; the terminal stage is all zeros.
#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<Vec<Scalar>>,
    pub policy: Vec<Vec<MdpAction>>,
}

fn q_value(
    instance: &SmallMdpInstance,
    state: &DiscreteState,
    action: &MdpAction,
    next_values: &[Scalar],
) -> Scalar {
    let post = apply_deterministic(instance, state, action);
    let r = reward_of(instance, &post);
    let mut future = 0.0;
    for outcome in &instance.content_outcomes {
        let (succ, p) = transition(instance, state, action, outcome).expect("feasible action");
        future += p * next_values[index_of(instance, &succ)];
    }
    r + instance.gamma * future
}

/// Prefer larger value; on ties, fewer pairs, then the lexicographically
/// smaller pair set. Matches the per-step scheduler's tie-break.
fn better(obj: Scalar, action: &MdpAction, best_obj: Scalar, best: &MdpAction) -> bool {
    obj > best_obj
        || (obj == best_obj
            && (action.0.len() < best.0.len()
                || (action.0.len() == best.0.len() && action.0 < best.0)))
}

/// Finite-horizon backward induction. The returned values satisfy the
/// optimality recursion with residual at most 1e-9 and the policy attains
/// the maximum under the deterministic tie-break.
pub fn value_iteration(instance: &SmallMdpInstance) -> Result<Solution, MdpError> {
    instance.validate()?;
    let n = instance.state_count();
    let mut values = vec![vec![0.0; n]; instance.horizon + 1];
    let mut policy = vec![Vec::new(); instance.horizon];
    for t in (0..instance.horizon).rev() {
        let next = &values[t + 1];
        let stage: Vec<(Scalar, MdpAction)> = (0..n)
            .into_par_iter()
            .map(|s| {
                let state = state_of(instance, s);
                let mut best_obj = Scalar::NEG_INFINITY;
                let mut best = MdpAction::default();
                for action in feasible_actions(instance, &state) {
                    let obj = q_value(instance, &state, &action, next);
                    if better(obj, &action, best_obj, &best) {
                        best_obj = obj;
                        best = action;
                    }
                }
                (best_obj, best)
            })
            .collect();
        let (vs, acts): (Vec<Scalar>, Vec<MdpAction>) = stage.into_iter().unzip();
        values[t] = vs;
        policy[t] = acts;
    }
    Ok(Solution { values, policy })
}

/// The optimal policy as a (total) tabular policy.
pub fn optimal_tabular(solution: &Solution) -> TabularPolicy {
    TabularPolicy {
        actions: solution
            .policy
            .iter()
            .map(|row| row.iter().cloned().map(Some).collect())
            .collect(),
    }
}

/// Exact expected discounted return of a tabular policy from the initial
/// state, or a seeded Monte-Carlo estimate with its standard error.
pub enum EvalMode {
    Exact,
    Rollouts { n: usize, seed: u64 },
}

/// A policy table: `actions[t][state]`, `None` where undefined.
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    pub actions: Vec<Vec<Option<MdpAction>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: Scalar,
    /// Standard error of the mean, rollout mode only.
    pub std_err: Option<Scalar>,
}

pub fn evaluate_policy(
    instance: &SmallMdpInstance,
    policy: &TabularPolicy,
    mode: EvalMode,
) -> Result<EvalResult, MdpError> {
    instance.validate()?;
    match mode {
        EvalMode::Exact => evaluate_exact(instance, policy),
        EvalMode::Rollouts { n, seed } => evaluate_rollouts(instance, policy, n, seed),
    }
}

fn reachable_per_step(
    instance: &SmallMdpInstance,
    policy: &TabularPolicy,
) -> Result<Vec<Vec<usize>>, MdpError> {
    let s0 = index_of(instance, &instance.initial_state());
    let mut layers = vec![vec![s0]];
    for t in 0..instance.horizon {
        let mut next: Vec<usize> = Vec::new();
        let mut seen = vec![false; instance.state_count()];
        for &s in &layers[t] {
            let action = policy
                .actions
                .get(t)
                .and_then(|row| row.get(s))
                .and_then(|a| a.as_ref())
                .ok_or(MdpError::PartialPolicy { step: t, state: s })?;
            let state = state_of(instance, s);
            for outcome in &instance.content_outcomes {
                if outcome.prob == 0.0 {
                    continue;
                }
                let (succ, _) = transition(instance, &state, action, outcome)?;
                let idx = index_of(instance, &succ);
                if !seen[idx] {
                    seen[idx] = true;
                    next.push(idx);
                }
            }
        }
        layers.push(next);
    }
    Ok(layers)
}

fn evaluate_exact(instance: &SmallMdpInstance, policy: &TabularPolicy) -> Result<EvalResult, MdpError> {
    let layers = reachable_per_step(instance, policy)?;
    let n = instance.state_count();
    let mut v_next = vec![0.0; n];
    for t in (0..instance.horizon).rev() {
        let mut v = vec![0.0; n];
        for &s in &layers[t] {
            let action = policy.actions[t][s]
                .as_ref()
                .ok_or(MdpError::PartialPolicy { step: t, state: s })?;
            let state = state_of(instance, s);
            v[s] = q_value_with(instance, &state, action, &v_next)?;
        }
        v_next = v;
    }
    Ok(EvalResult {
        value: v_next[index_of(instance, &instance.initial_state())],
        std_err: None,
    })
}

fn q_value_with(
    instance: &SmallMdpInstance,
    state: &DiscreteState,
    action: &MdpAction,
    next_values: &[Scalar],
) -> Result<Scalar, MdpError> {
    let r = immediate_reward(instance, state, action)?;
    let mut future = 0.0;
    for outcome in &instance.content_outcomes {
        let (succ, p) = transition(instance, state, action, outcome)?;
        future += p * next_values[index_of(instance, &succ)];
    }
    Ok(r + instance.gamma * future)
}

fn evaluate_rollouts(
    instance: &SmallMdpInstance,
    policy: &TabularPolicy,
    n: usize,
    seed: u64,
) -> Result<EvalResult, MdpError> {
    if n == 0 {
        return Err(MdpError::Invalid("rollout count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut returns = Vec::with_capacity(n);
    for _ in 0..n {
        let mut state = instance.initial_state();
        let mut total = 0.0;
        let mut discount = 1.0;
        for t in 0..instance.horizon {
            let s = index_of(instance, &state);
            let action = policy
                .actions
                .get(t)
                .and_then(|row| row.get(s))
                .and_then(|a| a.as_ref())
                .ok_or(MdpError::PartialPolicy { step: t, state: s })?;
            total += discount * immediate_reward(instance, &state, action)?;
            discount *= instance.gamma;
            let draw: Scalar = rng.gen();
            let mut acc = 0.0;
            let mut chosen = *instance.content_outcomes.last().unwrap();
            for o in &instance.content_outcomes {
                acc += o.prob;
                if draw < acc {
                    chosen = *o;
                    break;
                }
            }
            state = transition(instance, &state, action, &chosen)?.0;
        }
        returns.push(total);
    }
    let mean = returns.iter().sum::<Scalar>() / n as Scalar;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<Scalar>()
        / (n.saturating_sub(1).max(1)) as Scalar;
    Ok(EvalResult {
        value: mean,
        std_err: Some((var / n as Scalar).sqrt()),
    })
}

/// The myopic policy: in every (step, state), the action maximizing the
/// immediate reward alone, under the same tie-break as the exact solver.
pub fn greedy_policy(instance: &SmallMdpInstance) -> Result<TabularPolicy, MdpError> {
    instance.validate()?;
    let n = instance.state_count();
    let row: Vec<Option<MdpAction>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let state = state_of(instance, s);
            let mut best_obj = Scalar::NEG_INFINITY;
            let mut best = MdpAction::default();
            for action in feasible_actions(instance, &state) {
                let obj = reward_of(instance, &apply_deterministic(instance, &state, &action));
                if better(obj, &action, best_obj, &best) {
                    best_obj = obj;
                    best = action;
                }
            }
            Some(best)
        })
        .collect();
    Ok(TabularPolicy {
        actions: vec![row; instance.horizon],
    })
}

/// Largest violation of the optimality recursion across every
/// (step, state); at most 1e-9 for a solution from [`value_iteration`].
pub fn bellman_residual(instance: &SmallMdpInstance, solution: &Solution) -> Scalar {
    let n = instance.state_count();
    (0..instance.horizon)
        .flat_map(|t| (0..n).map(move |s| (t, s)))
        .map(|(t, s)| {
            let state = state_of(instance, s);
            let best = feasible_actions(instance, &state)
                .iter()
                .map(|a| q_value(instance, &state, a, &solution.values[t + 1]))
                .fold(Scalar::NEG_INFINITY, Scalar::max);
            (solution.values[t][s] - best).abs()
        })
        .fold(0.0, Scalar::max)
}
