//! Core world data model: the grid of regions, towers, UAVs, and the
//! composite per-step system state every other module reads and writes.
//!
//! A [`Scenario`] is the immutable world description; [`SystemState`] is
//! the mutable per-step state owned by one episode. Scheduling decisions
//! are [`Assignment`]s: sets of (tower, UAV) pairs subject to the tower
//! panel limit and the one-tower-per-UAV rule.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::contents::Content;
use crate::energy::Airframe;
use crate::mdp::MdpConfig;
use crate::mobility::{Point, Trajectory};
use crate::reward::RewardMode;
use crate::Scalar;

/// Battery energy of the bundled airframe preset: 5.870 Ah at 17.4 V.
pub const DEFAULT_BATTERY_CAPACITY_J: Scalar = 5.870 * 17.4 * 3600.0;
/// Tower charging power offered per panel, W. High-power wireless
/// transfer: a few panel-minutes offset a UAV's per-step burn, so
/// scheduling quality actually moves fleet endurance.
pub const DEFAULT_OFFER_POWER_W: Scalar = 420.0;
/// Default wireless transfer efficiency on each side of the link.
pub const DEFAULT_ETA: Scalar = 0.9;
/// Default surveillance altitude, m.
pub const DEFAULT_ALTITUDE_M: Scalar = 100.0;
/// Default camera field of view, degrees.
pub const DEFAULT_FOV_DEG: Scalar = 90.0;

/// Table of UAV waypoints bundled with the crate (time_min, uav_id, x, y).
pub const DEFAULT_WAYPOINTS_CSV: &str = include_str!("data/waypoints.csv");

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid scenario:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("position ({x}, {y}) outside area [0, {side}]^2")]
    OutOfArea { x: Scalar, y: Scalar, side: Scalar },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse scenario file: {0}")]
    Parse(String),
    #[error("waypoint csv row {row}: {message}")]
    WaypointCsv { row: usize, message: String },
}

/// Index of a tower in `Scenario::towers`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TowerId(pub usize);

/// Index of a UAV in `Scenario::uavs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UavId(pub usize);

/// Index of a grid region, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub usize);

impl fmt::Display for TowerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tower#{}", self.0)
    }
}

impl fmt::Display for UavId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "uav#{}", self.0)
    }
}

/// Event class of a region; the class determines how much observation
/// data a surveilling UAV generates there per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventClass {
    Default,
    Smoke,
    Fire,
}

impl EventClass {
    pub const ALL: [EventClass; 3] = [EventClass::Default, EventClass::Smoke, EventClass::Fire];
}

/// Content size (MB) generated per dwell-step for each event class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentSizeMap {
    pub default: Scalar,
    pub smoke: Scalar,
    pub fire: Scalar,
}

impl Default for ContentSizeMap {
    fn default() -> Self {
        ContentSizeMap {
            default: 1.0,
            smoke: 2.0,
            fire: 4.0,
        }
    }
}

impl ContentSizeMap {
    pub fn size_of(&self, class: EventClass) -> Scalar {
        match class {
            EventClass::Default => self.default,
            EventClass::Smoke => self.smoke,
            EventClass::Fire => self.fire,
        }
    }

    pub fn max_size(&self) -> Scalar {
        self.default.max(self.smoke).max(self.fire)
    }
}

/// Current event state of one grid region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionState {
    pub region_id: RegionId,
    pub event_class: EventClass,
    pub content_size: Scalar,
}

/// A ground tower: data sink and wireless charging station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerSpec {
    pub id: u32,
    pub position: Point,
    pub panels: usize,
    pub offer_power: Scalar,
    pub eta_tower: Scalar,
}

/// One UAV: airframe, battery, camera, and waypoint timetable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavSpec {
    pub id: u32,
    /// Time-ordered (seconds, position) waypoints.
    pub waypoints: Vec<(Scalar, Point)>,
    pub speed: Scalar,
    pub battery_capacity: Scalar,
    pub eta_uav: Scalar,
    pub airframe: Airframe<Scalar>,
    pub altitude: Scalar,
    pub fov: Scalar,
}

/// Immutable world description shared by every episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub area_side: Scalar,
    pub grid_dim: usize,
    pub step_len: Scalar,
    pub horizon: usize,
    pub epsilon: Scalar,
    pub rng_seed: u64,
    pub reward_mode: RewardMode,
    pub event_resample_prob: Scalar,
    pub content_size_map: ContentSizeMap,
    /// Floor substituted for a zero standard deviation in the raw tower reward.
    pub sigma_floor: Scalar,
    /// Denominator of the normalized tower reward.
    pub data_capacity: Scalar,
    pub towers: Vec<TowerSpec>,
    pub uavs: Vec<UavSpec>,
    /// Optional small-instance description for the exact MDP solver.
    pub mdp: Option<MdpConfig>,
}

impl Scenario {
    pub fn n_towers(&self) -> usize {
        self.towers.len()
    }

    pub fn n_uavs(&self) -> usize {
        self.uavs.len()
    }

    pub fn n_regions(&self) -> usize {
        self.grid_dim * self.grid_dim
    }

    pub fn cell_size(&self) -> Scalar {
        self.area_side / self.grid_dim as Scalar
    }

    /// Stable hash of the scenario, used to tag episode logs.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        let out = h.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Row-major region index of a position. The far boundary maps into the
/// last cell.
pub fn region_of(position: Point, scenario: &Scenario) -> Result<RegionId, DomainError> {
    let side = scenario.area_side;
    if !(0.0..=side).contains(&position.x) || !(0.0..=side).contains(&position.y) {
        return Err(DomainError::OutOfArea {
            x: position.x,
            y: position.y,
            side,
        });
    }
    let cell = scenario.cell_size();
    let clamp_idx = |v: Scalar| ((v / cell) as usize).min(scenario.grid_dim - 1);
    Ok(RegionId(clamp_idx(position.x) + scenario.grid_dim * clamp_idx(position.y)))
}

/// Mutable per-step state of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub t: usize,
    /// Cumulative data units delivered to each tower.
    pub tower_data: Vec<Scalar>,
    pub uav_energy: Vec<Scalar>,
    pub uav_position: Vec<Point>,
    pub uav_contents: Vec<Vec<Content>>,
    pub uav_active: Vec<bool>,
    pub regions: Vec<RegionState>,
}

impl SystemState {
    /// Mission-start state: full batteries, UAVs at their first
    /// waypoints, towers empty, all regions in the default class.
    pub fn initial(scenario: &Scenario) -> Self {
        let regions = (0..scenario.n_regions())
            .map(|i| RegionState {
                region_id: RegionId(i),
                event_class: EventClass::Default,
                content_size: scenario.content_size_map.size_of(EventClass::Default),
            })
            .collect();
        SystemState {
            t: 0,
            tower_data: vec![0.0; scenario.n_towers()],
            uav_energy: scenario.uavs.iter().map(|u| u.battery_capacity).collect(),
            uav_position: scenario.uavs.iter().map(|u| u.waypoints[0].1).collect(),
            uav_contents: vec![Vec::new(); scenario.n_uavs()],
            uav_active: vec![true; scenario.n_uavs()],
            regions,
        }
    }
}

/// Checks every `SystemState` invariant and returns all violations.
pub fn validate_state(state: &SystemState, scenario: &Scenario) -> Vec<String> {
    let mut v = Vec::new();
    if state.tower_data.len() != scenario.n_towers() {
        v.push(format!(
            "tower_data has {} entries, scenario has {} towers",
            state.tower_data.len(),
            scenario.n_towers()
        ));
    }
    for (i, &d) in state.tower_data.iter().enumerate() {
        if !(d >= 0.0) {
            v.push(format!("tower_data[{i}] = {d} below zero"));
        }
    }
    let fields = [
        state.uav_energy.len(),
        state.uav_position.len(),
        state.uav_contents.len(),
        state.uav_active.len(),
    ];
    if fields.iter().any(|&n| n != scenario.n_uavs()) {
        v.push(format!(
            "uav state vectors sized {fields:?}, scenario has {} uavs",
            scenario.n_uavs()
        ));
        return v;
    }
    for j in 0..scenario.n_uavs() {
        let e = state.uav_energy[j];
        let cap = scenario.uavs[j].battery_capacity;
        if !(e >= 0.0) {
            v.push(format!("uav_energy[{j}] = {e} below zero"));
        }
        if e > cap {
            v.push(format!("uav_energy[{j}] = {e} above capacity {cap}"));
        }
        if state.uav_active[j] != (e > 0.0) {
            v.push(format!(
                "uav_active[{j}] = {} inconsistent with energy {e} (inactive flag rule)",
                state.uav_active[j]
            ));
        }
        for c in &state.uav_contents[j] {
            if !(c.size > 0.0) {
                v.push(format!("uav_contents[{j}] holds non-positive size {}", c.size));
            }
        }
    }
    if state.regions.len() != scenario.n_regions() {
        v.push(format!(
            "{} regions in state, scenario defines {}",
            state.regions.len(),
            scenario.n_regions()
        ));
    }
    for r in &state.regions {
        let expect = scenario.content_size_map.size_of(r.event_class);
        if r.content_size != expect {
            v.push(format!(
                "region {} content_size {} does not match class map {}",
                r.region_id.0, r.content_size, expect
            ));
        }
    }
    v
}

/// The binary scheduling decision for one step: each pair (i, j) means
/// tower i serves UAV j. Pairs are kept sorted for deterministic
/// comparison and tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Assignment {
    pairs: Vec<(TowerId, UavId)>,
}

impl Assignment {
    pub fn empty() -> Self {
        Assignment { pairs: Vec::new() }
    }

    pub fn from_pairs(mut pairs: Vec<(TowerId, UavId)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        Assignment { pairs }
    }

    pub fn pairs(&self) -> &[(TowerId, UavId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Tower serving `uav` this step, if any.
    pub fn tower_of(&self, uav: UavId) -> Option<TowerId> {
        self.pairs.iter().find(|&&(_, j)| j == uav).map(|&(i, _)| i)
    }

    /// Checks the panel, uniqueness and activity constraints; returns all
    /// violations.
    pub fn validate(&self, scenario: &Scenario, state: &SystemState) -> Vec<String> {
        let mut v = Vec::new();
        let mut per_tower = vec![0usize; scenario.n_towers()];
        let mut seen_uavs = HashSet::new();
        for &(TowerId(i), UavId(j)) in &self.pairs {
            if i >= scenario.n_towers() {
                v.push(format!("pair references unknown tower index {i}"));
                continue;
            }
            if j >= scenario.n_uavs() {
                v.push(format!("pair references unknown uav index {j}"));
                continue;
            }
            per_tower[i] += 1;
            if !seen_uavs.insert(j) {
                v.push(format!("uav#{j} scheduled to more than one tower"));
            }
            if !state.uav_active[j] {
                v.push(format!("uav#{j} is inactive but scheduled"));
            }
        }
        for (i, &n) in per_tower.iter().enumerate() {
            if n > scenario.towers[i].panels {
                v.push(format!(
                    "tower#{i} serves {n} uavs but has {} panels",
                    scenario.towers[i].panels
                ));
            }
        }
        v
    }
}

// ---------------------------------------------------------------------------
// Scenario configuration (the human-editable file format)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerConfig {
    pub id: Option<u32>,
    pub x: Scalar,
    pub y: Scalar,
    pub panels: Option<usize>,
    pub offer_power: Option<Scalar>,
    pub eta_tower: Option<Scalar>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AirframeConfig {
    /// A named preset; currently only `"phantom4pro"`.
    Preset(String),
    Custom(Airframe<Scalar>),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavConfig {
    pub id: Option<u32>,
    /// `[time_s, x, y]` triples, strictly increasing in time.
    pub waypoints: Option<Vec<[Scalar; 3]>>,
    pub speed: Option<Scalar>,
    pub battery_capacity: Option<Scalar>,
    pub eta_uav: Option<Scalar>,
    pub airframe: Option<AirframeConfig>,
    pub altitude: Option<Scalar>,
    pub fov: Option<Scalar>,
}

/// Scenario description as written by a human. Every field is optional;
/// omitted fields take the built-in defaults (10 UAVs, 5 towers, 1250 m
/// side, 100 regions, 100 steps of 60 s). Unknown keys are an error.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_side: Option<Scalar>,
    pub grid_dim: Option<usize>,
    pub step_len: Option<Scalar>,
    pub horizon: Option<usize>,
    pub epsilon: Option<Scalar>,
    pub rng_seed: Option<u64>,
    pub reward_mode: Option<RewardMode>,
    pub event_resample_prob: Option<Scalar>,
    pub content_size_map: Option<ContentSizeMap>,
    pub sigma_floor: Option<Scalar>,
    pub data_capacity: Option<Scalar>,
    /// Path to a waypoint CSV (`time_min,uav_id,x,y`) that defines the
    /// fleet's trajectories; mutually exclusive with per-UAV waypoints.
    pub waypoints_csv: Option<String>,
    pub towers: Option<Vec<TowerConfig>>,
    pub uavs: Option<Vec<UavConfig>>,
    pub mdp: Option<MdpConfig>,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, DomainError> {
        toml::from_str(s).map_err(|e| DomainError::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, DomainError> {
        let text = std::fs::read_to_string(path).map_err(|e| DomainError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text)
    }
}

/// Parses a waypoint table with header `time_min,uav_id,x,y` into
/// per-UAV `(seconds, position)` lists, ordered by UAV id.
pub fn waypoints_from_csv(text: &str) -> Result<Vec<(u32, Vec<(Scalar, Point)>)>, DomainError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut by_uav: Vec<(u32, Vec<(Scalar, Point)>)> = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 2; // header is row 1
        let rec = rec.map_err(|e| DomainError::WaypointCsv {
            row,
            message: e.to_string(),
        })?;
        let field = |k: usize, name: &str| -> Result<Scalar, DomainError> {
            rec.get(k)
                .ok_or_else(|| DomainError::WaypointCsv {
                    row,
                    message: format!("missing column {name}"),
                })?
                .trim()
                .parse::<Scalar>()
                .map_err(|e| DomainError::WaypointCsv {
                    row,
                    message: format!("bad {name}: {e}"),
                })
        };
        let time_min = field(0, "time_min")?;
        let uav_id = field(1, "uav_id")? as u32;
        let x = field(2, "x")?;
        let y = field(3, "y")?;
        let entry = match by_uav.iter_mut().find(|(id, _)| *id == uav_id) {
            Some(e) => e,
            None => {
                by_uav.push((uav_id, Vec::new()));
                by_uav.last_mut().unwrap()
            }
        };
        entry.1.push((time_min * 60.0, Point::new(x, y)));
    }
    by_uav.sort_by_key(|(id, _)| *id);
    Ok(by_uav)
}

/// Default tower layout: quincunx over the default 1250 m area, scaled to
/// `area_side`.
fn default_towers(area_side: Scalar) -> Vec<TowerConfig> {
    let f = area_side / 1250.0;
    [
        (625.0, 625.0),
        (312.5, 312.5),
        (312.5, 937.5),
        (937.5, 312.5),
        (937.5, 937.5),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(x, y))| TowerConfig {
        id: Some(i as u32),
        x: x * f,
        y: y * f,
        ..Default::default()
    })
    .collect()
}

fn resolve_airframe(
    cfg: &Option<AirframeConfig>,
    path: &str,
    issues: &mut Vec<String>,
) -> Airframe<Scalar> {
    match cfg {
        None => Airframe::phantom4pro(),
        Some(AirframeConfig::Preset(name)) => {
            if name == "phantom4pro" {
                Airframe::phantom4pro()
            } else {
                issues.push(format!("{path}: unknown airframe preset {name:?}"));
                Airframe::phantom4pro()
            }
        }
        Some(AirframeConfig::Custom(af)) => *af,
    }
}

/// Builds and validates a [`Scenario`] from a configuration, filling in
/// every omitted field with the built-in defaults.
pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario, DomainError> {
    let mut issues: Vec<String> = Vec::new();

    let area_side = config.area_side.unwrap_or(1250.0);
    let grid_dim = config.grid_dim.unwrap_or(10);
    let step_len = config.step_len.unwrap_or(60.0);
    let horizon = config.horizon.unwrap_or(100);
    let epsilon = config.epsilon.unwrap_or(0.5);
    let event_resample_prob = config.event_resample_prob.unwrap_or(0.05);
    let content_size_map = config.content_size_map.unwrap_or_default();
    let sigma_floor = config.sigma_floor.unwrap_or(crate::reward::SIGMA_FLOOR);

    if !(area_side > 0.0) {
        issues.push(format!("area_side: must be > 0, got {area_side}"));
    }
    if grid_dim < 1 {
        issues.push(format!("grid_dim: must be >= 1, got {grid_dim}"));
    }
    if horizon < 1 {
        issues.push(format!("horizon: must be >= 1, got {horizon}"));
    }
    if !(step_len > 0.0) {
        issues.push(format!("step_len: must be > 0, got {step_len}"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        issues.push(format!("epsilon: must lie in [0, 1], got {epsilon}"));
    }
    if !(0.0..=1.0).contains(&event_resample_prob) {
        issues.push(format!(
            "event_resample_prob: must lie in [0, 1], got {event_resample_prob}"
        ));
    }
    for (name, v) in [
        ("content_size_map.default", content_size_map.default),
        ("content_size_map.smoke", content_size_map.smoke),
        ("content_size_map.fire", content_size_map.fire),
    ] {
        if !(v > 0.0) {
            issues.push(format!("{name}: must be > 0, got {v}"));
        }
    }

    // Towers.
    let tower_cfgs = config.towers.clone().unwrap_or_else(|| default_towers(area_side));
    let mut towers = Vec::with_capacity(tower_cfgs.len());
    let mut tower_ids = HashSet::new();
    for (idx, tc) in tower_cfgs.iter().enumerate() {
        let path = format!("towers[{idx}]");
        let id = tc.id.unwrap_or(idx as u32);
        if !tower_ids.insert(id) {
            issues.push(format!("{path}.id: duplicate tower id {id}"));
        }
        if !(0.0..=area_side).contains(&tc.x) || !(0.0..=area_side).contains(&tc.y) {
            issues.push(format!(
                "{path}.position: ({}, {}) outside [0, {area_side}]^2",
                tc.x, tc.y
            ));
        }
        let panels = tc.panels.unwrap_or(1);
        if panels < 1 {
            issues.push(format!("{path}.panels: must be >= 1, got {panels}"));
        }
        let offer_power = tc.offer_power.unwrap_or(DEFAULT_OFFER_POWER_W);
        if !(offer_power > 0.0) {
            issues.push(format!("{path}.offer_power: must be > 0, got {offer_power}"));
        }
        let eta_tower = tc.eta_tower.unwrap_or(DEFAULT_ETA);
        if !(eta_tower > 0.0 && eta_tower <= 1.0) {
            issues.push(format!("{path}.eta_tower: must lie in (0, 1], got {eta_tower}"));
        }
        towers.push(TowerSpec {
            id,
            position: Point::new(tc.x, tc.y),
            panels,
            offer_power,
            eta_tower,
        });
    }
    towers.sort_by_key(|t| t.id);

    // UAVs: explicit list, external CSV, or bundled defaults.
    let mut uav_cfgs = config.uavs.clone().unwrap_or_default();
    if config.waypoints_csv.is_some() && !uav_cfgs.iter().any(|u| u.waypoints.is_none()) && !uav_cfgs.is_empty() {
        issues.push("waypoints_csv: conflicts with per-uav waypoints".into());
    }
    let csv_waypoints = match &config.waypoints_csv {
        Some(p) => Some(waypoints_from_csv(&std::fs::read_to_string(p).map_err(|e| {
            DomainError::Io {
                path: p.clone(),
                source: e,
            }
        })?)?),
        None if uav_cfgs.is_empty() => Some(waypoints_from_csv(DEFAULT_WAYPOINTS_CSV)?),
        None => None,
    };
    if let Some(table) = csv_waypoints {
        if uav_cfgs.is_empty() {
            uav_cfgs = table
                .iter()
                .map(|(id, _)| UavConfig {
                    id: Some(*id),
                    ..Default::default()
                })
                .collect();
        }
        for (uc, (id, wps)) in uav_cfgs.iter_mut().zip(&table) {
            if uc.id.is_none() {
                uc.id = Some(*id);
            }
            if uc.waypoints.is_none() {
                uc.waypoints = Some(wps.iter().map(|&(t, p)| [t, p.x, p.y]).collect());
            }
        }
    }

    let mut uavs = Vec::with_capacity(uav_cfgs.len());
    let mut uav_ids = HashSet::new();
    for (idx, uc) in uav_cfgs.iter().enumerate() {
        let path = format!("uavs[{idx}]");
        let id = uc.id.unwrap_or(idx as u32);
        if !uav_ids.insert(id) {
            issues.push(format!("{path}.id: duplicate uav id {id}"));
        }
        let speed = uc.speed.unwrap_or(20.0);
        if !(speed > 0.0) {
            issues.push(format!("{path}.speed: must be > 0, got {speed}"));
        }
        let battery_capacity = uc.battery_capacity.unwrap_or(DEFAULT_BATTERY_CAPACITY_J);
        if !(battery_capacity > 0.0) {
            issues.push(format!(
                "{path}.battery_capacity: must be > 0, got {battery_capacity}"
            ));
        }
        let eta_uav = uc.eta_uav.unwrap_or(DEFAULT_ETA);
        if !(eta_uav > 0.0 && eta_uav <= 1.0) {
            issues.push(format!("{path}.eta_uav: must lie in (0, 1], got {eta_uav}"));
        }
        let altitude = uc.altitude.unwrap_or(DEFAULT_ALTITUDE_M);
        if altitude < 0.0 {
            issues.push(format!("{path}.altitude: must be >= 0, got {altitude}"));
        }
        let fov = uc.fov.unwrap_or(DEFAULT_FOV_DEG);
        if !(fov > 0.0 && fov < 180.0) {
            issues.push(format!("{path}.fov: must lie in (0, 180), got {fov}"));
        }
        let airframe = resolve_airframe(&uc.airframe, &format!("{path}.airframe"), &mut issues);
        if let Err(msg) = airframe.validate() {
            issues.push(format!("{path}.airframe: {msg}"));
        }

        let raw = match &uc.waypoints {
            Some(w) if !w.is_empty() => w.clone(),
            _ => {
                issues.push(format!("{path}.waypoints: at least one waypoint required"));
                continue;
            }
        };
        let mut waypoints = Vec::with_capacity(raw.len());
        for (k, &[t, x, y]) in raw.iter().enumerate() {
            if k > 0 && t <= raw[k - 1][0] {
                issues.push(format!(
                    "{path}.waypoints[{k}]: time {t} not strictly increasing"
                ));
            }
            if !(0.0..=area_side).contains(&x) || !(0.0..=area_side).contains(&y) {
                issues.push(format!(
                    "{path}.waypoints[{k}]: ({x}, {y}) outside [0, {area_side}]^2"
                ));
            }
            waypoints.push((t, Point::new(x, y)));
        }
        // Trajectory feasibility (arrival before next departure).
        if let Err(e) = Trajectory::new(waypoints.clone(), speed) {
            issues.push(format!("{path}.waypoints: {e}"));
        }
        uavs.push(UavSpec {
            id,
            waypoints,
            speed,
            battery_capacity,
            eta_uav,
            airframe,
            altitude,
            fov,
        });
    }
    uavs.sort_by_key(|u| u.id);

    let data_capacity = config.data_capacity.unwrap_or_else(|| {
        horizon as Scalar * uavs.len().max(1) as Scalar * content_size_map.max_size()
    });
    if !(data_capacity > 0.0) {
        issues.push(format!("data_capacity: must be > 0, got {data_capacity}"));
    }

    if let Some(mdp) = &config.mdp {
        if let Err(e) = mdp.validate() {
            issues.push(format!("mdp: {e}"));
        }
    }

    if !issues.is_empty() {
        return Err(DomainError::Invalid(issues));
    }

    Ok(Scenario {
        area_side,
        grid_dim,
        step_len,
        horizon,
        epsilon,
        rng_seed: config.rng_seed.unwrap_or(0),
        reward_mode: config.reward_mode.unwrap_or_default(),
        event_resample_prob,
        content_size_map,
        sigma_floor,
        data_capacity,
        towers,
        uavs,
        mdp: config.mdp.clone(),
    })
}

/// The default desk-scale scenario: 10 UAVs, 5 towers, 1250 m side, 100
/// regions, 100 steps of 60 s.
pub fn default_scenario() -> Scenario {
    build_scenario(&ScenarioConfig::default()).expect("built-in defaults are valid")
}
