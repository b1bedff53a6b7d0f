//! Per-step scheduling decisions: feasible-assignment enumeration, the
//! four policies (proposed / comp1 / comp2 / comp3), and exact plus
//! heuristic one-step reward maximizers.
//!
//! The proposed policy is greedy with respect to the one-step reward:
//! each step it picks the feasible assignment maximizing the reward of
//! the hypothetical post-step state. comp1 and comp2 are the epsilon = 0
//! and epsilon = 1 extremes of the same maximizer; comp3 schedules
//! uniformly at random. Ties are broken deterministically: fewest pairs,
//! then lexicographically smallest pair set.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Assignment, SystemState, TowerId, UavId};
use crate::mobility::distance;
use crate::reward::RewardMode;
use crate::sim::World;
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum SchedulerError {
    #[error("{count} feasible assignments exceed the exhaustive bound {bound}; use local search")]
    BoundExceeded { count: usize, bound: usize },
    #[error("infeasible assignment: {0}")]
    Infeasible(String),
}

/// Which objective the policy optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Greedy one-step reward maximization with the given weight.
    Proposed { epsilon: Scalar },
    /// Energy only: proposed with epsilon = 0.
    Comp1,
    /// Data fairness only: proposed with epsilon = 1.
    Comp2,
    /// Uniformly random feasible scheduling.
    Comp3,
}

/// How the one-step maximizer searches the feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    /// Full enumeration while within the bound, falling back to local
    /// search beyond it.
    #[default]
    Exhaustive,
    /// Hill climbing only.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub kind: PolicyKind,
    pub search: SearchKind,
    /// Iteration cap for local search.
    pub search_budget: usize,
    /// Largest feasible set the exhaustive maximizer will enumerate.
    pub exhaustive_bound: usize,
}

impl Policy {
    pub fn new(kind: PolicyKind) -> Self {
        Policy {
            kind,
            search: SearchKind::default(),
            search_budget: 1000,
            exhaustive_bound: 1_000_000,
        }
    }

    /// The epsilon this policy optimizes with, if it optimizes at all.
    pub fn effective_epsilon(&self) -> Option<Scalar> {
        match self.kind {
            PolicyKind::Proposed { epsilon } => Some(epsilon),
            PolicyKind::Comp1 => Some(0.0),
            PolicyKind::Comp2 => Some(1.0),
            PolicyKind::Comp3 => None,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            PolicyKind::Proposed { epsilon } => format!("proposed({epsilon})"),
            PolicyKind::Comp1 => "comp1".into(),
            PolicyKind::Comp2 => "comp2".into(),
            PolicyKind::Comp3 => "comp3".into(),
        }
    }
}

struct TowerOption {
    tower: usize,
    /// Energy ratio of the UAV after charging at this tower and paying
    /// the round trip.
    sched_ratio: Scalar,
}

struct UavChoices {
    uav: usize,
    /// Energy ratio after an unscheduled step.
    unsched_ratio: Scalar,
    /// Total content size the UAV would deliver.
    carry: Scalar,
    options: Vec<TowerOption>,
}

/// Deterministic per-step quantities shared by every candidate
/// assignment: post-step energies per choice, delivered data per UAV,
/// and the reward parameters. Evaluating a candidate is then O(towers).
pub struct StepContext {
    base_tower_data: Vec<Scalar>,
    uavs: Vec<UavChoices>,
    mode: RewardMode,
    d_capacity: Scalar,
    sigma_floor: Scalar,
    fleet_size: usize,
}

impl StepContext {
    pub fn new(world: &World, state: &SystemState) -> Self {
        let scenario = &world.scenario;
        let t_begin = world.time_at(state.t);
        let t_end = t_begin + scenario.step_len;
        let mut uavs = Vec::new();
        for j in 0..scenario.n_uavs() {
            if !state.uav_active[j] {
                continue;
            }
            let spec = &scenario.uavs[j];
            let cap = spec.battery_capacity;
            let flight = world.trajectory(UavId(j)).flight_time_between(t_begin, t_end);
            let unsched_cons = world.cruise_power(UavId(j)) * flight
                + world.hover_power(UavId(j)) * (scenario.step_len - flight);
            let unsched_ratio = (state.uav_energy[j] - unsched_cons).max(0.0) / cap;
            let carry: Scalar = state.uav_contents[j].iter().map(|c| c.size).sum();
            let mut options = Vec::new();
            for (i, tower) in scenario.towers.iter().enumerate() {
                let d = distance(state.uav_position[j], tower.position);
                let tau = d / spec.speed;
                if 2.0 * tau > scenario.step_len {
                    continue;
                }
                let e_c = crate::energy::charge_amount(
                    tower.offer_power,
                    tower.eta_tower,
                    spec.eta_uav,
                    scenario.step_len,
                    tau,
                );
                let charged = crate::energy::apply_charge(state.uav_energy[j], e_c, cap);
                let cons = world.cruise_power(UavId(j)) * 2.0 * tau
                    + world.hover_power(UavId(j)) * (scenario.step_len - 2.0 * tau);
                let sched_ratio = (charged - cons).max(0.0) / cap;
                options.push(TowerOption {
                    tower: i,
                    sched_ratio,
                });
            }
            uavs.push(UavChoices {
                uav: j,
                unsched_ratio,
                carry,
                options,
            });
        }
        StepContext {
            base_tower_data: state.tower_data.clone(),
            uavs,
            mode: scenario.reward_mode,
            d_capacity: scenario.data_capacity,
            sigma_floor: scenario.sigma_floor,
            fleet_size: scenario.n_uavs(),
        }
    }

    fn n_towers(&self) -> usize {
        self.base_tower_data.len()
    }

    fn combined(&self, tower_data: &[Scalar], energy_ratio_sum: Scalar, epsilon: Scalar) -> Scalar {
        let n = tower_data.len() as Scalar;
        let sum: Scalar = tower_data.iter().sum();
        let mean = sum / n;
        let var = tower_data.iter().map(|&d| (d - mean) * (d - mean)).sum::<Scalar>() / n;
        let sigma = var.sqrt();
        match self.mode {
            RewardMode::Raw => {
                let tower = sum / sigma.max(self.sigma_floor);
                epsilon * tower + (1.0 - epsilon) * energy_ratio_sum
            }
            RewardMode::Normalized => {
                let cv = if mean > 0.0 { sigma / mean } else { 0.0 };
                let tower = (sum / self.d_capacity) / (1.0 + cv);
                let uav = energy_ratio_sum / self.fleet_size as Scalar;
                epsilon * tower + (1.0 - epsilon) * uav
            }
        }
    }

    /// Objective of one candidate, evaluated from scratch.
    pub fn objective(&self, assignment: &Assignment, epsilon: Scalar) -> Result<Scalar, SchedulerError> {
        let mut tower_data = self.base_tower_data.clone();
        let mut energy = 0.0;
        let mut panels_used = vec![0usize; self.n_towers()];
        let mut scheduled = vec![false; self.fleet_size];
        for &(TowerId(i), UavId(j)) in assignment.pairs() {
            let u = self
                .uavs
                .iter()
                .find(|u| u.uav == j)
                .ok_or_else(|| SchedulerError::Infeasible(format!("uav#{j} not schedulable")))?;
            let opt = u
                .options
                .iter()
                .find(|o| o.tower == i)
                .ok_or_else(|| SchedulerError::Infeasible(format!("tower#{i} unreachable for uav#{j}")))?;
            if scheduled[j] {
                return Err(SchedulerError::Infeasible(format!("uav#{j} scheduled twice")));
            }
            scheduled[j] = true;
            panels_used[i] += 1;
            tower_data[i] += u.carry;
            energy += opt.sched_ratio;
        }
        for u in &self.uavs {
            if !scheduled[u.uav] {
                energy += u.unsched_ratio;
            }
        }
        Ok(self.combined(&tower_data, energy, epsilon))
    }

    /// Enumerates every feasible assignment, invoking `visit` with the
    /// current sorted-by-UAV pair list.
    fn visit_feasible<F: FnMut(&[(usize, usize)])>(&self, world: &World, mut visit: F) {
        let panels: Vec<usize> = world.scenario.towers.iter().map(|t| t.panels).collect();
        let mut panels_left = panels;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        self.recurse_visit(0, &mut panels_left, &mut pairs, &mut visit);
    }

    fn recurse_visit<F: FnMut(&[(usize, usize)])>(
        &self,
        idx: usize,
        panels_left: &mut [usize],
        pairs: &mut Vec<(usize, usize)>,
        visit: &mut F,
    ) {
        if idx == self.uavs.len() {
            visit(pairs);
            return;
        }
        // Option: leave this UAV on its trajectory.
        self.recurse_visit(idx + 1, panels_left, pairs, visit);
        let u = &self.uavs[idx];
        for opt in &u.options {
            if panels_left[opt.tower] == 0 {
                continue;
            }
            panels_left[opt.tower] -= 1;
            pairs.push((opt.tower, u.uav));
            self.recurse_visit(idx + 1, panels_left, pairs, visit);
            pairs.pop();
            panels_left[opt.tower] += 1;
        }
    }

    /// Number of feasible assignments, stopping early once `limit` is
    /// exceeded.
    pub fn count_feasible(&self, world: &World, limit: usize) -> usize {
        let panels: Vec<usize> = world.scenario.towers.iter().map(|t| t.panels).collect();
        let mut panels_left = panels;
        let mut count = 0usize;
        self.recurse_count(0, &mut panels_left, &mut count, limit.saturating_add(1));
        count
    }

    fn recurse_count(&self, idx: usize, panels_left: &mut [usize], count: &mut usize, cap: usize) {
        if *count >= cap {
            return;
        }
        if idx == self.uavs.len() {
            *count += 1;
            return;
        }
        self.recurse_count(idx + 1, panels_left, count, cap);
        let u = &self.uavs[idx];
        for opt in &u.options {
            if *count >= cap {
                return;
            }
            if panels_left[opt.tower] == 0 {
                continue;
            }
            panels_left[opt.tower] -= 1;
            self.recurse_count(idx + 1, panels_left, count, cap);
            panels_left[opt.tower] += 1;
        }
    }

    fn best_exhaustive(&self, world: &World, epsilon: Scalar) -> (Assignment, Scalar) {
        struct Best {
            obj: Scalar,
            pairs: Vec<(TowerId, UavId)>,
        }
        let mut best = Best {
            obj: Scalar::NEG_INFINITY,
            pairs: Vec::new(),
        };
        let mut tower_data = self.base_tower_data.clone();
        // Mirrors recurse_visit but keeps the tower sums and the energy
        // accumulator incremental.
        let panels: Vec<usize> = world.scenario.towers.iter().map(|t| t.panels).collect();
        let mut panels_left = panels;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        self.recurse_best(
            0,
            &mut panels_left,
            &mut tower_data,
            0.0,
            &mut pairs,
            epsilon,
            &mut |pairs, obj| {
                let better = obj > best.obj
                    || (obj == best.obj && {
                        let mut sorted: Vec<(TowerId, UavId)> = pairs
                            .iter()
                            .map(|&(i, j)| (TowerId(i), UavId(j)))
                            .collect();
                        sorted.sort_unstable();
                        pairs.len() < best.pairs.len()
                            || (pairs.len() == best.pairs.len() && sorted < best.pairs)
                    });
                if better {
                    best.obj = obj;
                    best.pairs = pairs.iter().map(|&(i, j)| (TowerId(i), UavId(j))).collect();
                    best.pairs.sort_unstable();
                }
            },
        );
        (Assignment::from_pairs(best.pairs), best.obj)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse_best<F: FnMut(&[(usize, usize)], Scalar)>(
        &self,
        idx: usize,
        panels_left: &mut [usize],
        tower_data: &mut [Scalar],
        energy_sum: Scalar,
        pairs: &mut Vec<(usize, usize)>,
        epsilon: Scalar,
        report: &mut F,
    ) {
        if idx == self.uavs.len() {
            let obj = self.combined(tower_data, energy_sum, epsilon);
            report(pairs, obj);
            return;
        }
        let u = &self.uavs[idx];
        self.recurse_best(
            idx + 1,
            panels_left,
            tower_data,
            energy_sum + u.unsched_ratio,
            pairs,
            epsilon,
            report,
        );
        for k in 0..u.options.len() {
            let (tower, ratio) = {
                let o = &self.uavs[idx].options[k];
                (o.tower, o.sched_ratio)
            };
            if panels_left[tower] == 0 {
                continue;
            }
            panels_left[tower] -= 1;
            tower_data[tower] += u.carry;
            pairs.push((tower, u.uav));
            self.recurse_best(
                idx + 1,
                panels_left,
                tower_data,
                energy_sum + ratio,
                pairs,
                epsilon,
                report,
            );
            pairs.pop();
            tower_data[tower] -= u.carry;
            panels_left[tower] += 1;
        }
    }
}

/// All feasible assignments for a state: panel limits respected, at most
/// one tower per UAV, only active UAVs, every scheduled round trip within
/// the step. The empty assignment is always included.
pub fn feasible_assignments(world: &World, state: &SystemState) -> Vec<Assignment> {
    let ctx = StepContext::new(world, state);
    let mut out = Vec::new();
    ctx.visit_feasible(world, |pairs| {
        out.push(Assignment::from_pairs(
            pairs.iter().map(|&(i, j)| (TowerId(i), UavId(j))).collect(),
        ));
    });
    out
}

/// Reward of the hypothetical post-step state under `assignment`,
/// simulating the step's deterministic parts (transfer, charge,
/// consumption) with the policy's epsilon. comp3 has no objective.
pub fn one_step_objective(
    world: &World,
    state: &SystemState,
    assignment: &Assignment,
    policy: &Policy,
) -> Result<Scalar, SchedulerError> {
    let epsilon = policy
        .effective_epsilon()
        .ok_or_else(|| SchedulerError::Infeasible("comp3 defines no objective".into()))?;
    let mut violations = assignment.validate(&world.scenario, state);
    for &(i, j) in assignment.pairs() {
        if !world.reachable(state, i, j) {
            violations.push(format!("{i} unreachable for {j}"));
        }
    }
    if !violations.is_empty() {
        return Err(SchedulerError::Infeasible(violations.join("; ")));
    }
    StepContext::new(world, state).objective(assignment, epsilon)
}

/// The feasible assignment maximizing the one-step objective, by full
/// enumeration. Errors when the feasible set exceeds the policy's bound.
pub fn best_assignment_exhaustive(
    world: &World,
    state: &SystemState,
    policy: &Policy,
) -> Result<Assignment, SchedulerError> {
    let epsilon = policy
        .effective_epsilon()
        .ok_or_else(|| SchedulerError::Infeasible("comp3 does not maximize".into()))?;
    let ctx = StepContext::new(world, state);
    let count = ctx.count_feasible(world, policy.exhaustive_bound);
    if count > policy.exhaustive_bound {
        return Err(SchedulerError::BoundExceeded {
            count,
            bound: policy.exhaustive_bound,
        });
    }
    Ok(ctx.best_exhaustive(world, epsilon).0)
}

/// Hill climbing over single-pair add / remove / retarget moves from the
/// empty assignment, best improvement first. The result is feasible and
/// never worse than the empty assignment.
pub fn local_search_assignment(
    world: &World,
    state: &SystemState,
    policy: &Policy,
    _rng: &mut impl Rng,
) -> Assignment {
    let epsilon = match policy.effective_epsilon() {
        Some(e) => e,
        None => return Assignment::empty(),
    };
    let ctx = StepContext::new(world, state);
    let mut current: Vec<(usize, usize)> = Vec::new();
    let mut current_obj = ctx
        .objective(&Assignment::empty(), epsilon)
        .expect("empty assignment is always feasible");
    let panels: Vec<usize> = world.scenario.towers.iter().map(|t| t.panels).collect();

    let eval = |pairs: &[(usize, usize)]| -> Scalar {
        let a = Assignment::from_pairs(pairs.iter().map(|&(i, j)| (TowerId(i), UavId(j))).collect());
        ctx.objective(&a, epsilon).expect("moves stay feasible")
    };

    for _ in 0..policy.search_budget {
        let mut best_move: Option<(Vec<(usize, usize)>, Scalar)> = None;
        let mut consider = |cand: Vec<(usize, usize)>| {
            let obj = eval(&cand);
            if obj > current_obj && best_move.as_ref().map_or(true, |(_, b)| obj > *b) {
                best_move = Some((cand, obj));
            }
        };

        let mut panels_used = vec![0usize; panels.len()];
        for &(i, _) in &current {
            panels_used[i] += 1;
        }
        // Add moves.
        for u in &ctx.uavs {
            if current.iter().any(|&(_, j)| j == u.uav) {
                continue;
            }
            for opt in &u.options {
                if panels_used[opt.tower] < panels[opt.tower] {
                    let mut cand = current.clone();
                    cand.push((opt.tower, u.uav));
                    consider(cand);
                }
            }
        }
        // Remove moves.
        for k in 0..current.len() {
            let mut cand = current.clone();
            cand.remove(k);
            consider(cand);
        }
        // Retarget moves: move a scheduled UAV to another tower.
        for k in 0..current.len() {
            let (i0, j) = current[k];
            let u = ctx.uavs.iter().find(|u| u.uav == j).expect("scheduled uav active");
            for opt in &u.options {
                if opt.tower != i0 && panels_used[opt.tower] < panels[opt.tower] {
                    let mut cand = current.clone();
                    cand[k] = (opt.tower, j);
                    consider(cand);
                }
            }
        }

        match best_move {
            Some((cand, obj)) => {
                current = cand;
                current_obj = obj;
            }
            None => break,
        }
    }
    Assignment::from_pairs(current.iter().map(|&(i, j)| (TowerId(i), UavId(j))).collect())
}

/// The per-step decision for any policy.
pub fn decide(world: &World, state: &SystemState, policy: &Policy, rng: &mut impl Rng) -> Assignment {
    match policy.kind {
        PolicyKind::Comp3 => random_assignment(world, state, rng),
        _ => match policy.search {
            SearchKind::Local => local_search_assignment(world, state, policy, rng),
            SearchKind::Exhaustive => match best_assignment_exhaustive(world, state, policy) {
                Ok(a) => a,
                Err(SchedulerError::BoundExceeded { .. }) => {
                    local_search_assignment(world, state, policy, rng)
                }
                Err(e) => unreachable!("exhaustive maximizer failed: {e}"),
            },
        },
    }
}

/// comp3: in random UAV order, each active reachable UAV picks uniformly
/// among staying put and the towers with remaining panel capacity.
fn random_assignment(world: &World, state: &SystemState, rng: &mut impl Rng) -> Assignment {
    let ctx = StepContext::new(world, state);
    let mut order: Vec<usize> = (0..ctx.uavs.len()).collect();
    order.shuffle(rng);
    let mut panels_left: Vec<usize> = world.scenario.towers.iter().map(|t| t.panels).collect();
    let mut pairs = Vec::new();
    for idx in order {
        let u = &ctx.uavs[idx];
        let open: Vec<usize> = u
            .options
            .iter()
            .map(|o| o.tower)
            .filter(|&i| panels_left[i] > 0)
            .collect();
        // Choice 0 means "no tower".
        let pick = rng.gen_range(0..=open.len());
        if pick > 0 {
            let tower = open[pick - 1];
            panels_left[tower] -= 1;
            pairs.push((TowerId(tower), UavId(u.uav)));
        }
    }
    Assignment::from_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_scenario, default_scenario, ScenarioConfig, SystemState, TowerConfig, UavConfig};
    use crate::sim::World;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_world(n_towers: usize, n_uavs: usize) -> World {
        let towers = (0..n_towers)
            .map(|i| TowerConfig {
                x: 100.0 + 200.0 * i as Scalar,
                y: 100.0,
                ..Default::default()
            })
            .collect();
        let uavs = (0..n_uavs)
            .map(|j| UavConfig {
                waypoints: Some(vec![
                    [0.0, 150.0 + 100.0 * j as Scalar, 200.0],
                    [600.0, 200.0 + 100.0 * j as Scalar, 250.0],
                ]),
                ..Default::default()
            })
            .collect();
        let cfg = ScenarioConfig {
            towers: Some(towers),
            uavs: Some(uavs),
            horizon: Some(10),
            ..Default::default()
        };
        World::new(build_scenario(&cfg).unwrap()).unwrap()
    }

    #[test]
    fn default_scenario_feasible_count() {
        // 5 towers (1 panel each), 10 reachable-from-start UAVs:
        // sum over k of C(5,k) * P(10,k) = 63,591 when all pairs are
        // reachable. From the Table 5 start positions all pairs are
        // within a 600 m round-trip radius, so the count is exact.
        let w = World::new(default_scenario()).unwrap();
        let st = SystemState::initial(&w.scenario);
        let ctx = StepContext::new(&w, &st);
        let all_reachable = ctx.uavs.iter().all(|u| u.options.len() == 5);
        let count = ctx.count_feasible(&w, usize::MAX);
        if all_reachable {
            assert_eq!(count, 63_591);
        } else {
            assert!(count < 63_591);
        }
        assert_eq!(feasible_assignments(&w, &st).len(), count);
    }

    #[test]
    fn single_pair_feasible_set() {
        let w = toy_world(1, 1);
        let st = SystemState::initial(&w.scenario);
        let set = feasible_assignments(&w, &st);
        assert_eq!(set.len(), 2);
        assert!(set.contains(&Assignment::empty()));
    }

    #[test]
    fn unreachable_leaves_only_empty() {
        let mut w = toy_world(1, 2);
        // Shrink the step so no round trip fits.
        w.scenario.step_len = 0.001;
        let st = SystemState::initial(&w.scenario);
        let set = feasible_assignments(&w, &st);
        assert_eq!(set, vec![Assignment::empty()]);
    }

    #[test]
    fn objective_matches_scratch_simulation() {
        // Independent route: run the deterministic sub-steps through the
        // sim on a scratch state and recompute the reward.
        let w = toy_world(2, 2);
        let mut st = SystemState::initial(&w.scenario);
        st.uav_contents[0].push(crate::contents::Content {
            source_region: crate::domain::RegionId(0),
            size: 3.0,
            created_at: 0,
        });
        st.uav_energy[1] *= 0.4;
        let policy = Policy::new(PolicyKind::Proposed { epsilon: 0.5 });
        for a in feasible_assignments(&w, &st) {
            let fast = one_step_objective(&w, &st, &a, &policy).unwrap();
            // Scratch route.
            let mut scratch = st.clone();
            for &(i, j) in a.pairs() {
                crate::contents::transfer_contents(&mut scratch, i, j);
            }
            for &(i, j) in a.pairs() {
                let tower = &w.scenario.towers[i.0];
                let uav = &w.scenario.uavs[j.0];
                let tau = distance(st.uav_position[j.0], tower.position) / uav.speed;
                let e_c = crate::energy::charge_amount(
                    tower.offer_power,
                    tower.eta_tower,
                    uav.eta_uav,
                    w.scenario.step_len,
                    tau,
                );
                scratch.uav_energy[j.0] =
                    crate::energy::apply_charge(scratch.uav_energy[j.0], e_c, uav.battery_capacity);
            }
            let t0 = w.time_at(st.t);
            for j in 0..w.scenario.n_uavs() {
                let uav = &w.scenario.uavs[j];
                let sched = a.tower_of(UavId(j)).map(|i| {
                    distance(st.uav_position[j], w.scenario.towers[i.0].position)
                });
                let flight = w
                    .trajectory(UavId(j))
                    .flight_time_between(t0, t0 + w.scenario.step_len);
                let cons = crate::energy::step_consumption(
                    &uav.airframe,
                    uav.speed,
                    w.scenario.step_len,
                    sched,
                    flight,
                )
                .unwrap();
                scratch.uav_energy[j] = (scratch.uav_energy[j] - cons).max(0.0);
            }
            let caps: Vec<Scalar> = w.scenario.uavs.iter().map(|u| u.battery_capacity).collect();
            let slow = crate::reward::combined_reward(
                0.5,
                &scratch.tower_data,
                &scratch.uav_energy,
                &caps,
                w.scenario.reward_mode,
                w.scenario.data_capacity,
                w.scenario.sigma_floor,
            )
            .unwrap()
            .combined;
            assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1.0), "{fast} vs {slow}");
        }
    }

    #[test]
    fn comp2_objective_ignores_energy() {
        let w = toy_world(2, 2);
        let mut st = SystemState::initial(&w.scenario);
        st.uav_contents[0].push(crate::contents::Content {
            source_region: crate::domain::RegionId(0),
            size: 2.0,
            created_at: 0,
        });
        let comp2 = Policy::new(PolicyKind::Comp2);
        // Two assignments differing only in which tower charges uav 1
        // (which carries nothing) score identically under comp2.
        let a = Assignment::from_pairs(vec![(TowerId(0), UavId(1))]);
        let b = Assignment::from_pairs(vec![(TowerId(1), UavId(1))]);
        let oa = one_step_objective(&w, &st, &a, &comp2).unwrap();
        let ob = one_step_objective(&w, &st, &b, &comp2).unwrap();
        assert_eq!(oa, ob);
    }

    #[test]
    fn exhaustive_dominates_every_candidate() {
        let w = toy_world(3, 4);
        let mut st = SystemState::initial(&w.scenario);
        st.uav_contents[1].push(crate::contents::Content {
            source_region: crate::domain::RegionId(0),
            size: 5.0,
            created_at: 0,
        });
        st.uav_energy[2] *= 0.3;
        let policy = Policy::new(PolicyKind::Proposed { epsilon: 0.5 });
        let best = best_assignment_exhaustive(&w, &st, &policy).unwrap();
        let best_obj = one_step_objective(&w, &st, &best, &policy).unwrap();
        for a in feasible_assignments(&w, &st) {
            let obj = one_step_objective(&w, &st, &a, &policy).unwrap();
            assert!(obj <= best_obj + 1e-12, "{a:?} beats the maximizer");
        }
    }

    #[test]
    fn comp1_skips_scheduling_when_batteries_full() {
        // All batteries full: charging is clamped to zero gain, so any
        // round trip only burns extra energy.
        let w = toy_world(2, 3);
        let st = SystemState::initial(&w.scenario);
        let comp1 = Policy::new(PolicyKind::Comp1);
        let best = best_assignment_exhaustive(&w, &st, &comp1).unwrap();
        assert!(best.is_empty(), "{best:?}");
    }

    #[test]
    fn tie_break_is_deterministic_for_twins() {
        // Two identical UAVs at the same position, one tower: scheduling
        // either scores the same; the lexicographically smaller pair set
        // must win.
        let cfg = ScenarioConfig {
            towers: Some(vec![TowerConfig { x: 300.0, y: 300.0, ..Default::default() }]),
            uavs: Some(vec![
                UavConfig {
                    waypoints: Some(vec![[0.0, 300.0, 400.0]]),
                    battery_capacity: Some(100_000.0),
                    ..Default::default()
                },
                UavConfig {
                    waypoints: Some(vec![[0.0, 300.0, 400.0]]),
                    battery_capacity: Some(100_000.0),
                    ..Default::default()
                },
            ]),
            ..Default::default()
        };
        let w = World::new(build_scenario(&cfg).unwrap()).unwrap();
        let mut st = SystemState::initial(&w.scenario);
        // Half-drained so charging is valuable; identical for both.
        st.uav_energy[0] = 50_000.0;
        st.uav_energy[1] = 50_000.0;
        let policy = Policy::new(PolicyKind::Comp1);
        let best = best_assignment_exhaustive(&w, &st, &policy).unwrap();
        assert_eq!(best.pairs(), &[(TowerId(0), UavId(0))]);
    }

    #[test]
    fn comp1_comp2_equal_proposed_extremes() {
        let w = toy_world(3, 4);
        let mut st = SystemState::initial(&w.scenario);
        st.uav_contents[0].push(crate::contents::Content {
            source_region: crate::domain::RegionId(0),
            size: 2.0,
            created_at: 0,
        });
        st.uav_energy[3] *= 0.5;
        let comp1 = best_assignment_exhaustive(&w, &st, &Policy::new(PolicyKind::Comp1)).unwrap();
        let eps0 = best_assignment_exhaustive(
            &w,
            &st,
            &Policy::new(PolicyKind::Proposed { epsilon: 0.0 }),
        )
        .unwrap();
        assert_eq!(comp1, eps0);
        let comp2 = best_assignment_exhaustive(&w, &st, &Policy::new(PolicyKind::Comp2)).unwrap();
        let eps1 = best_assignment_exhaustive(
            &w,
            &st,
            &Policy::new(PolicyKind::Proposed { epsilon: 1.0 }),
        )
        .unwrap();
        assert_eq!(comp2, eps1);
    }

    #[test]
    fn comp2_raw_argmax_scale_invariant() {
        let mut w = toy_world(3, 3);
        w.scenario.reward_mode = RewardMode::Raw;
        let mut st = SystemState::initial(&w.scenario);
        st.tower_data = vec![1.0, 4.0, 2.0];
        st.uav_contents[0].push(crate::contents::Content {
            source_region: crate::domain::RegionId(0),
            size: 3.0,
            created_at: 0,
        });
        let comp2 = Policy::new(PolicyKind::Comp2);
        let best = best_assignment_exhaustive(&w, &st, &comp2).unwrap();

        let mut scaled = st.clone();
        let c = 7.5;
        for d in scaled.tower_data.iter_mut() {
            *d *= c;
        }
        for cs in scaled.uav_contents.iter_mut() {
            for ct in cs.iter_mut() {
                ct.size *= c;
            }
        }
        let best_scaled = best_assignment_exhaustive(&w, &scaled, &comp2).unwrap();
        assert_eq!(best, best_scaled);
    }

    #[test]
    fn comp2_feeds_the_data_poor_tower() {
        let w = toy_world(3, 3);
        let mut st = SystemState::initial(&w.scenario);
        st.tower_data = vec![1.0, 20.0, 20.0]; // tower 0 starving
        st.uav_contents[2].push(crate::contents::Content {
            source_region: crate::domain::RegionId(0),
            size: 10.0,
            created_at: 0,
        });
        let comp2 = Policy::new(PolicyKind::Comp2);
        let best = best_assignment_exhaustive(&w, &st, &comp2).unwrap();
        assert_eq!(best.tower_of(UavId(2)), Some(TowerId(0)));
    }

    #[test]
    fn local_search_close_to_exhaustive() {
        let w = toy_world(3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let policy = Policy::new(PolicyKind::Proposed { epsilon: 0.5 });
        let mut st = SystemState::initial(&w.scenario);
        st.uav_contents[0].push(crate::contents::Content {
            source_region: crate::domain::RegionId(0),
            size: 4.0,
            created_at: 0,
        });
        st.uav_energy[1] *= 0.2;
        let exact = best_assignment_exhaustive(&w, &st, &policy).unwrap();
        let exact_obj = one_step_objective(&w, &st, &exact, &policy).unwrap();
        let local = local_search_assignment(&w, &st, &policy, &mut rng);
        let local_obj = one_step_objective(&w, &st, &local, &policy).unwrap();
        let empty_obj = one_step_objective(&w, &st, &Assignment::empty(), &policy).unwrap();
        assert!(local_obj >= empty_obj);
        assert!(local_obj >= 0.95 * exact_obj);
    }

    #[test]
    fn zero_budget_returns_empty() {
        let w = toy_world(2, 2);
        let st = SystemState::initial(&w.scenario);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut policy = Policy::new(PolicyKind::Proposed { epsilon: 0.5 });
        policy.search_budget = 0;
        assert!(local_search_assignment(&w, &st, &policy, &mut rng).is_empty());
    }

    #[test]
    fn comp3_deterministic_under_seed_and_valid() {
        let w = toy_world(3, 5);
        let st = SystemState::initial(&w.scenario);
        let p = Policy::new(PolicyKind::Comp3);
        let a = decide(&w, &st, &p, &mut ChaCha8Rng::seed_from_u64(5));
        let b = decide(&w, &st, &p, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        assert!(a.validate(&w.scenario, &st).is_empty());
        for &(i, j) in a.pairs() {
            assert!(w.reachable(&st, i, j));
        }
    }

    #[test]
    fn decide_never_worse_than_empty() {
        let w = toy_world(3, 4);
        let mut st = SystemState::initial(&w.scenario);
        st.uav_energy.iter_mut().for_each(|e| *e *= 0.5);
        let p = Policy::new(PolicyKind::Proposed { epsilon: 0.5 });
        let a = decide(&w, &st, &p, &mut ChaCha8Rng::seed_from_u64(2));
        let obj = one_step_objective(&w, &st, &a, &p).unwrap();
        let empty = one_step_objective(&w, &st, &Assignment::empty(), &p).unwrap();
        assert!(obj >= empty);
    }

    #[test]
    fn bound_exceeded_reports_error() {
        let w = toy_world(3, 5);
        let st = SystemState::initial(&w.scenario);
        let mut policy = Policy::new(PolicyKind::Proposed { epsilon: 0.5 });
        policy.exhaustive_bound = 3;
        assert!(matches!(
            best_assignment_exhaustive(&w, &st, &policy),
            Err(SchedulerError::BoundExceeded { .. })
        ));
        // decide falls back to local search instead of failing.
        let a = decide(&w, &st, &policy, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(a.validate(&w.scenario, &st).is_empty());
    }
}
