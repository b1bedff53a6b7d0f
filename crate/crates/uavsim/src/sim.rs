//! The discrete-time episode engine: advance the world one step under a
//! chosen assignment, run whole seeded episodes, and produce logs.
//!
//! Sub-step order within one step is fixed: transfer, charge, consume,
//! move, collect, region events, reward. The reward is evaluated on the
//! post-step state and always uses the scenario's epsilon and reward
//! mode, so logs from different policies are directly comparable; the
//! policy's own epsilon only steers its decisions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contents::{generate_content, sample_region_events, transfer_contents};
use crate::domain::{
    region_of, validate_state, Assignment, Scenario, SystemState, TowerId, UavId,
};
use crate::energy::{apply_charge, charge_amount, cruise_power, hover_power, step_consumption};
use crate::mobility::{distance, MobilityError, Trajectory};
use crate::reward::{combined_reward, system_value_timeavg, RewardBreakdown};
use crate::scheduler::{decide, Policy};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("infeasible assignment: {}", .0.join("; "))]
    InfeasibleAssignment(Vec<String>),
    #[error("horizon is 0; nothing to simulate")]
    EmptyHorizon,
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error("reward: {0}")]
    Reward(#[from] crate::reward::RewardError),
    #[error("replay diverged at step {0}")]
    ReplayDiverged(usize),
}

/// A scenario compiled for simulation: trajectories built, per-UAV hover
/// and cruise powers cached. Immutable and shareable across episodes.
#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Scenario,
    trajectories: Vec<Trajectory>,
    hover_w: Vec<Scalar>,
    cruise_w: Vec<Scalar>,
    start_time: Scalar,
}

impl World {
    pub fn new(scenario: Scenario) -> Result<Self, MobilityError> {
        let mut trajectories = Vec::with_capacity(scenario.n_uavs());
        for uav in &scenario.uavs {
            trajectories.push(Trajectory::new(uav.waypoints.clone(), uav.speed)?);
        }
        let hover_w = scenario.uavs.iter().map(|u| hover_power(&u.airframe)).collect();
        let cruise_w = scenario
            .uavs
            .iter()
            .map(|u| cruise_power(&u.airframe, u.speed))
            .collect();
        let start_time = trajectories
            .iter()
            .map(|t| t.start_time())
            .fold(Scalar::INFINITY, Scalar::min);
        Ok(World {
            scenario,
            trajectories,
            hover_w,
            cruise_w,
            start_time,
        })
    }

    pub fn trajectory(&self, uav: UavId) -> &Trajectory {
        &self.trajectories[uav.0]
    }

    pub fn hover_power(&self, uav: UavId) -> Scalar {
        self.hover_w[uav.0]
    }

    pub fn cruise_power(&self, uav: UavId) -> Scalar {
        self.cruise_w[uav.0]
    }

    /// Wall-clock second at the start of step `t`.
    pub fn time_at(&self, step: usize) -> Scalar {
        self.start_time + step as Scalar * self.scenario.step_len
    }

    /// Round trip to the tower must fit inside one step.
    pub fn reachable(&self, state: &SystemState, tower: TowerId, uav: UavId) -> bool {
        let d = distance(state.uav_position[uav.0], self.scenario.towers[tower.0].position);
        2.0 * d / self.scenario.uavs[uav.0].speed <= self.scenario.step_len
    }

    /// Post-step reward, evaluated with the scenario's epsilon and mode.
    pub fn reward_of(&self, state: &SystemState) -> RewardBreakdown<Scalar> {
        let caps: Vec<Scalar> = self.scenario.uavs.iter().map(|u| u.battery_capacity).collect();
        combined_reward(
            self.scenario.epsilon,
            &state.tower_data,
            &state.uav_energy,
            &caps,
            self.scenario.reward_mode,
            self.scenario.data_capacity,
            self.scenario.sigma_floor,
        )
        .expect("scenario-validated reward inputs")
    }
}

/// Everything that happened in one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub assignment: Assignment,
    pub reward: RewardBreakdown<Scalar>,
    pub tower_data: Vec<Scalar>,
    pub uav_energy: Vec<Scalar>,
    /// (uav, content size) generated this step.
    pub contents_generated: Vec<(UavId, Scalar)>,
    pub deactivated: Vec<UavId>,
}

/// Full per-step trace of one seeded episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub scenario_digest: String,
    pub policy: String,
    pub seed: u64,
    pub records: Vec<StepRecord>,
    /// True when the episode ended before the horizon because the whole
    /// fleet deactivated.
    pub truncated: bool,
    pub system_value: Scalar,
}

/// Advances `state` by one step under `assignment`.
pub fn step(
    world: &World,
    state: &mut SystemState,
    assignment: &Assignment,
    rng: &mut impl rand::Rng,
) -> Result<StepRecord, SimError> {
    let scenario = &world.scenario;
    let mut violations = assignment.validate(scenario, state);
    for &(i, j) in assignment.pairs() {
        if !world.reachable(state, i, j) {
            violations.push(format!("{i} unreachable for {j} within one step", i = i, j = j));
        }
    }
    if !violations.is_empty() {
        return Err(SimError::InfeasibleAssignment(violations));
    }

    let t = state.t;
    let t_begin = world.time_at(t);
    let t_end = t_begin + scenario.step_len;

    // (1) transfer all stored contents for every scheduled pair.
    for &(i, j) in assignment.pairs() {
        transfer_contents(state, i, j);
    }

    // (2) wireless charging per scheduled pair.
    for &(i, j) in assignment.pairs() {
        let tower = &scenario.towers[i.0];
        let uav = &scenario.uavs[j.0];
        let tau = distance(state.uav_position[j.0], tower.position) / uav.speed;
        let e_c = charge_amount(tower.offer_power, tower.eta_tower, uav.eta_uav, scenario.step_len, tau);
        state.uav_energy[j.0] = apply_charge(state.uav_energy[j.0], e_c, uav.battery_capacity);
    }

    // (3) consumption for every active UAV; floor at zero and deactivate.
    let mut deactivated = Vec::new();
    for j in 0..scenario.n_uavs() {
        if !state.uav_active[j] {
            continue;
        }
        let uav = &scenario.uavs[j];
        let scheduled_distance = assignment.tower_of(UavId(j)).map(|i| {
            distance(state.uav_position[j], scenario.towers[i.0].position)
        });
        let flight = world.trajectories[j].flight_time_between(t_begin, t_end);
        let consumed = step_consumption(&uav.airframe, uav.speed, scenario.step_len, scheduled_distance, flight)
            .map_err(|e| SimError::InfeasibleAssignment(vec![e.to_string()]))?;
        let e = state.uav_energy[j] - consumed;
        if e <= 0.0 {
            state.uav_energy[j] = 0.0;
            state.uav_active[j] = false;
            deactivated.push(UavId(j));
        } else {
            state.uav_energy[j] = e;
        }
    }

    // (4) positions advance along trajectories; scheduled UAVs complete a
    // round trip and are back on their path by step end.
    for j in 0..scenario.n_uavs() {
        if state.uav_active[j] {
            state.uav_position[j] = world.trajectories[j].position_clamped(t_end);
        }
    }

    // (5) dwelling unscheduled active UAVs each generate one content.
    let mut contents_generated = Vec::new();
    for j in 0..scenario.n_uavs() {
        if !state.uav_active[j] || assignment.tower_of(UavId(j)).is_some() {
            continue;
        }
        if world.trajectories[j].is_dwelling(t_end) {
            let region_id = region_of(state.uav_position[j], scenario)
                .expect("trajectory positions are validated in-area");
            let region = state.regions[region_id.0];
            if let Some(c) = generate_content(&region, true, false, t) {
                contents_generated.push((UavId(j), c.size));
                state.uav_contents[j].push(c);
            }
        }
    }

    // (6) region events resample.
    sample_region_events(
        &mut state.regions,
        scenario.event_resample_prob,
        &scenario.content_size_map,
        rng,
    );

    // (7) reward on the post-step state.
    state.t = t + 1;
    let reward = world.reward_of(state);

    if cfg!(debug_assertions) {
        let v = validate_state(state, scenario);
        debug_assert!(v.is_empty(), "post-step state invalid: {v:?}");
    }

    Ok(StepRecord {
        t,
        assignment: assignment.clone(),
        reward,
        tower_data: state.tower_data.clone(),
        uav_energy: state.uav_energy.clone(),
        contents_generated,
        deactivated,
    })
}

fn decision_rng(seed: u64) -> ChaCha8Rng {
    // Separate stream from the event rng so that replaying logged
    // assignments reproduces the event sequence exactly.
    ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15)
}

fn event_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs one seeded episode under `policy`: decide then step, `horizon`
/// times, stopping early only if the whole fleet deactivates.
pub fn run_episode(world: &World, policy: &Policy, seed: u64) -> Result<EpisodeLog, SimError> {
    if world.scenario.horizon == 0 {
        return Err(SimError::EmptyHorizon);
    }
    let mut state = SystemState::initial(&world.scenario);
    let mut decide_rng = decision_rng(seed);
    let mut ev_rng = event_rng(seed);
    let mut records = Vec::with_capacity(world.scenario.horizon);
    let mut truncated = false;
    for _ in 0..world.scenario.horizon {
        let assignment = decide(world, &state, policy, &mut decide_rng);
        let record = step(world, &mut state, &assignment, &mut ev_rng)?;
        records.push(record);
        if state.uav_active.iter().all(|&a| !a) {
            truncated = records.len() < world.scenario.horizon;
            break;
        }
    }
    let series: Vec<Scalar> = records.iter().map(|r| r.reward.combined).collect();
    let system_value = system_value_timeavg(&series)?;
    Ok(EpisodeLog {
        scenario_digest: world.scenario.digest(),
        policy: policy.label(),
        seed,
        records,
        truncated,
        system_value,
    })
}

/// Replays a log's assignments through `step` and checks that every
/// record reproduces exactly; the log is sufficient to audit the episode.
pub fn replay(world: &World, log: &EpisodeLog) -> Result<(), SimError> {
    let mut state = SystemState::initial(&world.scenario);
    let mut ev_rng = event_rng(log.seed);
    for (k, rec) in log.records.iter().enumerate() {
        let again = step(world, &mut state, &rec.assignment, &mut ev_rng)?;
        if &again != rec {
            return Err(SimError::ReplayDiverged(k));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contents::total_data;
    use crate::domain::{default_scenario, Assignment};
    use crate::scheduler::PolicyKind;

    fn world() -> World {
        World::new(default_scenario()).unwrap()
    }

    fn small_policy() -> Policy {
        Policy::new(PolicyKind::Proposed { epsilon: 0.5 })
    }

    #[test]
    fn empty_assignment_only_burns_energy() {
        let w = world();
        let mut st = SystemState::initial(&w.scenario);
        let before_energy = st.uav_energy.clone();
        let mut rng = event_rng(1);
        let rec = step(&w, &mut st, &Assignment::empty(), &mut rng).unwrap();
        assert!(st.tower_data.iter().all(|&d| d == 0.0));
        for j in 0..w.scenario.n_uavs() {
            assert!(st.uav_energy[j] < before_energy[j]);
        }
        assert_eq!(rec.t, 0);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn scheduled_pair_transfers_and_empties() {
        let w = world();
        let mut st = SystemState::initial(&w.scenario);
        st.uav_contents[0] = vec![
            crate::contents::Content { source_region: crate::domain::RegionId(0), size: 2.0, created_at: 0 },
            crate::contents::Content { source_region: crate::domain::RegionId(1), size: 3.0, created_at: 0 },
        ];
        // Pick a reachable tower for uav 0.
        let tower = (0..w.scenario.n_towers())
            .map(TowerId)
            .find(|&i| w.reachable(&st, i, UavId(0)))
            .expect("some tower reachable");
        let a = Assignment::from_pairs(vec![(tower, UavId(0))]);
        let mut rng = event_rng(1);
        step(&w, &mut st, &a, &mut rng).unwrap();
        assert_eq!(st.tower_data[tower.0], 5.0);
        assert!(st.uav_contents[0].is_empty());
    }

    #[test]
    fn energy_floor_deactivates() {
        let w = world();
        let mut st = SystemState::initial(&w.scenario);
        st.uav_energy[4] = 50.0; // far less than one step of hover
        let mut rng = event_rng(1);
        let rec = step(&w, &mut st, &Assignment::empty(), &mut rng).unwrap();
        assert_eq!(st.uav_energy[4], 0.0);
        assert!(!st.uav_active[4]);
        assert!(rec.deactivated.contains(&UavId(4)));
    }

    #[test]
    fn infeasible_assignment_is_an_error() {
        let w = world();
        let mut st = SystemState::initial(&w.scenario);
        st.uav_active[2] = false;
        st.uav_energy[2] = 0.0;
        let a = Assignment::from_pairs(vec![(TowerId(0), UavId(2))]);
        let mut rng = event_rng(1);
        assert!(matches!(
            step(&w, &mut st, &a, &mut rng),
            Err(SimError::InfeasibleAssignment(_))
        ));
    }

    #[test]
    fn horizon_zero_rejected() {
        let mut s = default_scenario();
        s.horizon = 0;
        let w = World::new(s).unwrap();
        assert!(matches!(
            run_episode(&w, &small_policy(), 0),
            Err(SimError::EmptyHorizon)
        ));
    }

    #[test]
    fn episodes_are_seed_deterministic() {
        let mut s = default_scenario();
        s.horizon = 8;
        let w = World::new(s).unwrap();
        let p = Policy::new(PolicyKind::Comp3);
        let a = run_episode(&w, &p, 42).unwrap();
        let b = run_episode(&w, &p, 42).unwrap();
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
        let c = run_episode(&w, &p, 43).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn policies_produce_different_logs() {
        let mut s = default_scenario();
        s.horizon = 10;
        let w = World::new(s).unwrap();
        let proposed = run_episode(&w, &small_policy(), 5).unwrap();
        let random = run_episode(&w, &Policy::new(PolicyKind::Comp3), 5).unwrap();
        assert_ne!(proposed.records, random.records);
    }

    #[test]
    fn always_empty_policy_drains_monotonically() {
        let mut s = default_scenario();
        s.horizon = 50;
        let w = World::new(s).unwrap();
        let mut st = SystemState::initial(&w.scenario);
        let mut rng = event_rng(9);
        let mut prev = st.uav_energy.clone();
        for _ in 0..w.scenario.horizon {
            step(&w, &mut st, &Assignment::empty(), &mut rng).unwrap();
            for j in 0..w.scenario.n_uavs() {
                if prev[j] > 0.0 {
                    assert!(st.uav_energy[j] < prev[j], "uav {j} did not drain");
                }
            }
            prev = st.uav_energy.clone();
            if st.uav_active.iter().all(|&a| !a) {
                break;
            }
        }
    }

    #[test]
    fn conservation_and_monotone_data_over_episode() {
        let mut s = default_scenario();
        s.horizon = 30;
        let w = World::new(s).unwrap();
        let mut state = SystemState::initial(&w.scenario);
        let mut decide_rng = decision_rng(3);
        let mut ev_rng = event_rng(3);
        let p = Policy::new(PolicyKind::Comp3);
        let mut generated_total = 0.0;
        let mut prev_tower: Vec<Scalar> = state.tower_data.clone();
        for _ in 0..w.scenario.horizon {
            let a = decide(&w, &state, &p, &mut decide_rng);
            let rec = step(&w, &mut state, &a, &mut ev_rng).unwrap();
            generated_total += rec.contents_generated.iter().map(|(_, s)| s).sum::<Scalar>();
            let now = total_data(&state);
            assert!((now - generated_total).abs() < 1e-9, "conservation broke");
            for i in 0..w.scenario.n_towers() {
                assert!(state.tower_data[i] >= prev_tower[i]);
            }
            prev_tower = state.tower_data.clone();
        }
    }

    #[test]
    fn replay_reproduces_log() {
        let mut s = default_scenario();
        s.horizon = 12;
        let w = World::new(s).unwrap();
        let log = run_episode(&w, &Policy::new(PolicyKind::Comp3), 17).unwrap();
        replay(&w, &log).unwrap();
    }
}
