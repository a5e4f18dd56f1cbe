//! Gridded service region, UAV fleet state, IoT devices and per-slot demand.
//!
//! The target region is a square split into large grids (one per leader UAV)
//! which are further split into small grids (one per follower UAV). Leaders
//! hover at the centers of large grids, followers at the centers of small
//! grids, and each follower serves exactly the devices inside its own small
//! grid. A depot on the region edge recharges leaders and swaps their
//! installed applications.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::PropulsionParams;
use crate::qlearn::LearnerParams;

pub type LeaderId = usize;
pub type FollowerId = usize;
pub type DeviceId = usize;
pub type TaskType = u16;

/// Sentinel grid coordinate used when a leader is away at the depot.
pub const DEPOT_CELL: GridPos = GridPos {
    x: u16::MAX,
    y: u16::MAX,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot place {followers} followers into {swarms} swarms of capacity {capacity}")]
    CapacityShortfall {
        followers: usize,
        swarms: usize,
        capacity: usize,
    },
}

/// Full simulation parameter set. Field defaults follow the reference
/// scenario: 3 leaders, 9 followers, 500 devices on a 2.5 km square region.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of leader UAVs (M).
    pub leaders: usize,
    /// Number of follower UAVs (N). Must be >= `leaders`.
    pub followers: usize,
    /// Number of ground IoT devices (K).
    pub devices: usize,
    /// Number of distinct task types (C).
    pub task_types: u16,
    /// Application storage slots per leader (S_L).
    pub leader_app_slots: u16,
    /// Application storage slots per follower (S_F).
    pub follower_app_slots: u16,
    /// Side of the square target region, meters.
    pub region_side_m: f64,
    /// Side of one large grid, meters (l). Must divide the region side.
    pub large_grid_m: f64,
    /// Side of one small grid, meters (q). Must divide the large grid side.
    pub small_grid_m: f64,
    /// Leader hover altitude, meters (H_L).
    pub leader_alt_m: f64,
    /// Follower hover altitude, meters (H_F).
    pub follower_alt_m: f64,
    /// UAV cruise speed, m/s.
    pub speed_mps: f64,
    /// Duration of one time slot, seconds.
    pub slot_s: f64,
    /// Uplink bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
    /// Noise power spectral density, dBm/Hz.
    pub noise_dbm_hz: f64,
    /// IoT device transmit power, watts.
    pub device_tx_w: f64,
    /// Follower transmit power, watts.
    pub follower_tx_w: f64,
    /// Leader transmit power, watts.
    pub leader_tx_w: f64,
    /// Follower processing rate, bits/s.
    pub follower_rate_bps: f64,
    /// Leader processing rate, bits/s.
    pub leader_rate_bps: f64,
    /// Effective capacitance coefficient of the compute energy model.
    pub cap_coeff: f64,
    /// Size of one task, bits.
    pub task_bits: f64,
    /// Leader battery capacity, joules.
    pub battery_j: f64,
    /// Battery level quantum used by the refuel game state, joules.
    pub energy_unit_j: f64,
    /// Per-device per-slot probability of requesting a task.
    pub demand_prob: f64,
    /// Depot position on the region edge, meters.
    pub depot_x_m: f64,
    /// Depot position on the region edge, meters.
    pub depot_y_m: f64,
    /// Slots per episode (T).
    pub slots_per_episode: u32,
    /// Training episodes (LOOP).
    pub episodes: u32,
    /// Root RNG seed.
    pub seed: u64,
    /// Path loss exponent.
    pub pathloss_exp: f64,
    /// Path loss at 1 m reference distance, dB. `None` derives the
    /// free-space value from the carrier frequency.
    pub pathloss_ref_db: Option<f64>,
    /// Rotary-wing propulsion power model parameters.
    pub propulsion: PropulsionParams,
    /// Q-learning hyperparameters.
    pub learn: LearnerParams,
    /// Size the throughput window by the slowest transfer instead of the
    /// fastest one.
    pub offload_window_max: bool,
    /// Count leaders at the depot toward application coverage.
    pub strict_coverage: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            leaders: 3,
            followers: 9,
            devices: 500,
            task_types: 10,
            leader_app_slots: 6,
            follower_app_slots: 4,
            region_side_m: 2500.0,
            large_grid_m: 500.0,
            small_grid_m: 100.0,
            leader_alt_m: 150.0,
            follower_alt_m: 120.0,
            speed_mps: 20.0,
            slot_s: 30.0,
            bandwidth_hz: 10.0e6,
            carrier_hz: 3.0e9,
            noise_dbm_hz: -174.0,
            device_tx_w: 0.1,
            follower_tx_w: 0.2,
            leader_tx_w: 2.0,
            follower_rate_bps: 2.0e6,
            leader_rate_bps: 2.0e6,
            cap_coeff: 1e-18,
            task_bits: 10.0e6,
            battery_j: 500e3,
            energy_unit_j: 25e3,
            demand_prob: 0.3,
            depot_x_m: 1250.0,
            depot_y_m: 0.0,
            slots_per_episode: 100,
            episodes: 500,
            seed: 1,
            pathloss_exp: 2.2,
            pathloss_ref_db: None,
            propulsion: PropulsionParams::default(),
            learn: LearnerParams::default(),
            offload_window_max: false,
            strict_coverage: false,
        }
    }
}

fn divides(outer: f64, inner: f64) -> bool {
    let ratio = outer / inner;
    (ratio - ratio.round()).abs() < 1e-9 && ratio.round() >= 1.0
}

impl SimConfig {
    /// Checks every structural invariant and reports the first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Invalid(msg));
        if self.leaders < 1 {
            return err(format!("M must be >= 1 (got {})", self.leaders));
        }
        if self.followers < self.leaders {
            return err(format!(
                "N must be >= M so every swarm can hold a follower (got N={}, M={})",
                self.followers, self.leaders
            ));
        }
        if self.task_types < 1 || self.task_types > 64 {
            return err(format!("C must be in 1..=64 (got {})", self.task_types));
        }
        if self.leader_app_slots < 1 || self.leader_app_slots > self.task_types {
            return err(format!(
                "S_L must satisfy 1 <= S_L <= C (got S_L={}, C={})",
                self.leader_app_slots, self.task_types
            ));
        }
        if self.follower_app_slots < 1 || self.follower_app_slots > self.task_types {
            return err(format!(
                "S_F must satisfy 1 <= S_F <= C (got S_F={}, C={})",
                self.follower_app_slots, self.task_types
            ));
        }
        if !divides(self.large_grid_m, self.small_grid_m) {
            return err(format!(
                "l must be an integer multiple of q (got l={}, q={})",
                self.large_grid_m, self.small_grid_m
            ));
        }
        if !divides(self.region_side_m, self.large_grid_m) {
            return err(format!(
                "region_side must be an integer multiple of l (got region_side={}, l={})",
                self.region_side_m, self.large_grid_m
            ));
        }
        let large_cells = self.geometry().large_cells();
        if large_cells < self.leaders {
            return err(format!(
                "{} leaders cannot occupy {large_cells} distinct large grids",
                self.leaders
            ));
        }
        for (name, v) in [
            ("region_side", self.region_side_m),
            ("l", self.large_grid_m),
            ("q", self.small_grid_m),
            ("H_L", self.leader_alt_m),
            ("H_F", self.follower_alt_m),
            ("v", self.speed_mps),
            ("t", self.slot_s),
            ("B", self.bandwidth_hz),
            ("carrier_f", self.carrier_hz),
            ("p_I", self.device_tx_w),
            ("p_F", self.follower_tx_w),
            ("p_L", self.leader_tx_w),
            ("f_F", self.follower_rate_bps),
            ("f_L", self.leader_rate_bps),
            ("xi", self.cap_coeff),
            ("kappa", self.task_bits),
            ("E_cap", self.battery_j),
            ("E_unit", self.energy_unit_j),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return err(format!("{name} must be strictly positive (got {v})"));
            }
        }
        if !(0.0..=1.0).contains(&self.demand_prob) {
            return err(format!(
                "demand_prob must lie in [0, 1] (got {})",
                self.demand_prob
            ));
        }
        if self.pathloss_exp < 2.0 {
            return err(format!(
                "pathloss_exponent must be >= 2 (got {})",
                self.pathloss_exp
            ));
        }
        if app_choice_count(self.task_types, self.leader_app_slots) > 1_000_000 {
            return err(format!(
                "application placement action space C({}, {}) is too large to tabulate",
                self.task_types, self.leader_app_slots
            ));
        }
        self.learn.validate().map_err(ConfigError::Invalid)?;
        self.propulsion.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            large_per_side: (self.region_side_m / self.large_grid_m).round() as u16,
            small_per_side: (self.region_side_m / self.small_grid_m).round() as u16,
            small_per_large: (self.large_grid_m / self.small_grid_m).round() as u16,
        }
    }

    /// Task size in bits for a given device/type pair. All pairs currently
    /// share one configured size.
    pub fn task_bits(&self, _device: DeviceId, _task: TaskType) -> f64 {
        self.task_bits
    }

    /// Path loss at the 1 m reference distance, dB. Defaults to the
    /// free-space value at the configured carrier frequency.
    pub fn pathloss_ref_db(&self) -> f64 {
        const LIGHT_SPEED: f64 = 299_792_458.0;
        self.pathloss_ref_db.unwrap_or_else(|| {
            20.0 * (4.0 * std::f64::consts::PI * self.carrier_hz / LIGHT_SPEED).log10()
        })
    }
}

/// Number of distinct application loadouts a leader can pick: C choose S_L.
pub fn app_choice_count(task_types: u16, slots: u16) -> u64 {
    binomial(task_types as u64, slots as u64)
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Grid coordinate; interpretation (large or small grid) depends on context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridPos {
    pub x: u16,
    pub y: u16,
}

impl GridPos {
    pub fn new(x: u16, y: u16) -> Self {
        GridPos { x, y }
    }

    pub fn step(&self, dx: i32, dy: i32) -> Option<GridPos> {
        let x = self.x as i32 + dx;
        let y = self.y as i32 + dy;
        if x < 0 || y < 0 || x > u16::MAX as i32 || y > u16::MAX as i32 {
            None
        } else {
            Some(GridPos::new(x as u16, y as u16))
        }
    }
}

/// Derived grid counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    /// Large grids per region side.
    pub large_per_side: u16,
    /// Small grids per region side.
    pub small_per_side: u16,
    /// Small grids per large-grid side.
    pub small_per_large: u16,
}

impl Geometry {
    pub fn large_cells(&self) -> usize {
        self.large_per_side as usize * self.large_per_side as usize
    }

    pub fn small_cells(&self) -> usize {
        self.small_per_side as usize * self.small_per_side as usize
    }

    /// Small grids inside one large grid; the swarm size cap.
    pub fn swarm_capacity(&self) -> usize {
        self.small_per_large as usize * self.small_per_large as usize
    }

    pub fn contains_large(&self, cell: GridPos) -> bool {
        cell.x < self.large_per_side && cell.y < self.large_per_side
    }

    pub fn contains_small(&self, cell: GridPos) -> bool {
        cell.x < self.small_per_side && cell.y < self.small_per_side
    }

    /// Origin (in small-grid units) of a large grid.
    pub fn large_origin(&self, cell: GridPos) -> GridPos {
        GridPos::new(
            cell.x * self.small_per_large,
            cell.y * self.small_per_large,
        )
    }

    /// Whether a small-grid cell lies inside a given large grid.
    pub fn small_in_large(&self, small: GridPos, large: GridPos) -> bool {
        small.x / self.small_per_large == large.x && small.y / self.small_per_large == large.y
    }

    /// Large grid containing a small-grid cell.
    pub fn large_of_small(&self, small: GridPos) -> GridPos {
        GridPos::new(small.x / self.small_per_large, small.y / self.small_per_large)
    }
}

/// Set of installed applications as a bitmask over task types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AppSet(pub u64);

impl AppSet {
    pub fn empty() -> Self {
        AppSet(0)
    }

    pub fn from_types<I: IntoIterator<Item = TaskType>>(types: I) -> Self {
        let mut mask = 0u64;
        for t in types {
            mask |= 1 << t;
        }
        AppSet(mask)
    }

    pub fn insert(&mut self, t: TaskType) {
        self.0 |= 1 << t;
    }

    pub fn contains(&self, t: TaskType) -> bool {
        self.0 & (1 << t) != 0
    }

    pub fn len(&self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn union(&self, other: AppSet) -> AppSet {
        AppSet(self.0 | other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = TaskType> + '_ {
        (0..64u16).filter(|t| self.contains(*t))
    }
}

/// Per-slot state of one leader UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderState {
    pub id: LeaderId,
    /// Large-grid cell. Retains the last airborne cell while at the depot;
    /// `position()` reports the depot in that case.
    pub cell: GridPos,
    /// Remaining battery energy, joules.
    pub energy_j: f64,
    /// True when the leader spends this slot at the depot.
    pub at_depot: bool,
    pub apps: AppSet,
}

/// Per-slot state of one follower UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerState {
    pub id: FollowerId,
    /// Small-grid cell (absolute).
    pub cell: GridPos,
    /// Leader currently followed.
    pub leader: LeaderId,
    pub apps: AppSet,
    /// Task types currently delegated to the leader.
    pub delegated: AppSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IoTDevice {
    pub id: DeviceId,
    pub x_m: f64,
    pub y_m: f64,
}

/// Per-slot task requests: at most one task type per device per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    requests: Vec<Option<TaskType>>,
}

impl DemandMatrix {
    pub fn none(devices: usize) -> Self {
        DemandMatrix {
            requests: vec![None; devices],
        }
    }

    pub fn from_requests(requests: Vec<Option<TaskType>>) -> Self {
        DemandMatrix { requests }
    }

    /// The binary request indicator for a device/type pair.
    pub fn requested(&self, device: DeviceId, task: TaskType) -> bool {
        self.requests[device] == Some(task)
    }

    /// The task type requested by a device this slot, if any.
    pub fn request_of(&self, device: DeviceId) -> Option<TaskType> {
        self.requests[device]
    }

    pub fn active_count(&self) -> usize {
        self.requests.iter().filter(|r| r.is_some()).count()
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }
}

/// Complete mutable simulation state for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub config: SimConfig,
    pub geometry: Geometry,
    pub leaders: Vec<LeaderState>,
    pub followers: Vec<FollowerState>,
    pub devices: Vec<IoTDevice>,
    /// Follower-to-leader assignment of the previous slot; drives the
    /// re-clustering leg of the follower propulsion energy.
    pub prev_assignment: Vec<LeaderId>,
    /// Device ids bucketed by small-grid cell, row-major.
    device_buckets: Vec<Vec<DeviceId>>,
}

/// Builds the initial world: devices scattered uniformly, leaders on distinct
/// large grids, followers on distinct small grids inside their leader's grid,
/// batteries full, applications dealt round-robin from seeded permutations so
/// the fleet covers all task types whenever capacity allows.
pub fn build_world(config: &SimConfig, seed: u64) -> Result<World, BuildError> {
    config.validate()?;
    let geom = config.geometry();
    let mut rng = crate::rng_stream(seed, 0x57524c44); // world stream

    let swarm_capacity = geom.swarm_capacity();
    let per_swarm = ceil_div(config.followers, config.leaders);
    if per_swarm > swarm_capacity {
        return Err(BuildError::CapacityShortfall {
            followers: config.followers,
            swarms: config.leaders,
            capacity: swarm_capacity,
        });
    }

    let devices: Vec<IoTDevice> = (0..config.devices)
        .map(|id| IoTDevice {
            id,
            x_m: rng.gen_range(0.0..config.region_side_m),
            y_m: rng.gen_range(0.0..config.region_side_m),
        })
        .collect();

    // Distinct large-grid cells for leaders.
    let mut large_cells: Vec<GridPos> = (0..geom.large_per_side)
        .flat_map(|x| (0..geom.large_per_side).map(move |y| GridPos::new(x, y)))
        .collect();
    large_cells.shuffle(&mut rng);

    let leader_perm = seeded_permutation(config.task_types, &mut rng);
    let leaders: Vec<LeaderState> = (0..config.leaders)
        .map(|id| LeaderState {
            id,
            cell: large_cells[id],
            energy_j: config.battery_j,
            at_depot: false,
            apps: deal_apps(&leader_perm, id, config.leader_app_slots),
        })
        .collect();

    let follower_perm = seeded_permutation(config.task_types, &mut rng);
    let mut followers = Vec::with_capacity(config.followers);
    let mut taken_offsets: Vec<Vec<GridPos>> = vec![Vec::new(); config.leaders];
    for id in 0..config.followers {
        let leader = id % config.leaders;
        let origin = geom.large_origin(leaders[leader].cell);
        let mut offsets: Vec<GridPos> = (0..geom.small_per_large)
            .flat_map(|x| (0..geom.small_per_large).map(move |y| GridPos::new(x, y)))
            .filter(|o| !taken_offsets[leader].contains(o))
            .collect();
        offsets.shuffle(&mut rng);
        let offset = offsets[0];
        taken_offsets[leader].push(offset);
        followers.push(FollowerState {
            id,
            cell: GridPos::new(origin.x + offset.x, origin.y + offset.y),
            leader,
            apps: deal_apps(&follower_perm, id, config.follower_app_slots),
            delegated: AppSet::empty(),
        });
    }

    let prev_assignment = followers.iter().map(|f| f.leader).collect();
    let mut world = World {
        config: config.clone(),
        geometry: geom,
        leaders,
        followers,
        devices,
        prev_assignment,
        device_buckets: Vec::new(),
    };
    world.rebuild_device_buckets();
    Ok(world)
}

fn ceil_div(a: usize, b: usize) -> usize {
    (a + b - 1) / b
}

fn seeded_permutation(n: u16, rng: &mut ChaCha8Rng) -> Vec<TaskType> {
    let mut perm: Vec<TaskType> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// Deals `slots` distinct types to entity `index` by walking the permutation
/// cyclically; consecutive entities jointly cover all types when they can.
fn deal_apps(perm: &[TaskType], index: usize, slots: u16) -> AppSet {
    let n = perm.len();
    AppSet::from_types((0..slots as usize).map(|j| perm[(index * slots as usize + j) % n]))
}

/// Draws this slot's demand: each device independently requests one uniform
/// task type with probability `demand_prob`.
pub fn generate_demand(world: &World, rng: &mut ChaCha8Rng) -> DemandMatrix {
    let c = world.config.task_types;
    let requests = (0..world.devices.len())
        .map(|_| {
            if rng.gen_bool(world.config.demand_prob) {
                Some(rng.gen_range(0..c))
            } else {
                None
            }
        })
        .collect();
    DemandMatrix::from_requests(requests)
}

/// Straight-line distance between two 3-D points.
pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

impl World {
    /// Assembles a world from explicit parts; placement and assignment are
    /// caller-controlled but still validated against the config.
    pub fn from_parts(
        config: SimConfig,
        leaders: Vec<LeaderState>,
        followers: Vec<FollowerState>,
        devices: Vec<IoTDevice>,
    ) -> Result<World, BuildError> {
        config.validate()?;
        let geometry = config.geometry();
        let prev_assignment = followers.iter().map(|f| f.leader).collect();
        let mut world = World {
            config,
            geometry,
            leaders,
            followers,
            devices,
            prev_assignment,
            device_buckets: Vec::new(),
        };
        world.rebuild_device_buckets();
        Ok(world)
    }

    pub(crate) fn rebuild_device_buckets(&mut self) {
        let side = self.geometry.small_per_side as usize;
        let mut buckets = vec![Vec::new(); side * side];
        for d in &self.devices {
            let cell = self.small_cell_of(d.x_m, d.y_m);
            buckets[cell.y as usize * side + cell.x as usize].push(d.id);
        }
        self.device_buckets = buckets;
    }

    fn small_cell_of(&self, x_m: f64, y_m: f64) -> GridPos {
        let side = self.geometry.small_per_side;
        let clamp = |v: f64| -> u16 {
            let idx = (v / self.config.small_grid_m).floor();
            (idx.max(0.0) as u16).min(side - 1)
        };
        GridPos::new(clamp(x_m), clamp(y_m))
    }

    /// Devices inside follower `n`'s small grid; disjoint across followers
    /// because followers occupy distinct cells.
    pub fn coverage_set(&self, n: FollowerId) -> &[DeviceId] {
        let cell = self.followers[n].cell;
        let side = self.geometry.small_per_side as usize;
        &self.device_buckets[cell.y as usize * side + cell.x as usize]
    }

    /// Center of a large-grid cell at leader altitude.
    pub fn leader_cell_position(&self, cell: GridPos) -> [f64; 3] {
        let l = self.config.large_grid_m;
        [
            (cell.x as f64 + 0.5) * l,
            (cell.y as f64 + 0.5) * l,
            self.config.leader_alt_m,
        ]
    }

    /// Current leader position; the depot (ground level) while refueling.
    pub fn leader_position(&self, m: LeaderId) -> [f64; 3] {
        let leader = &self.leaders[m];
        if leader.at_depot {
            [self.config.depot_x_m, self.config.depot_y_m, 0.0]
        } else {
            self.leader_cell_position(leader.cell)
        }
    }

    pub fn follower_position(&self, n: FollowerId) -> [f64; 3] {
        let q = self.config.small_grid_m;
        let cell = self.followers[n].cell;
        [
            (cell.x as f64 + 0.5) * q,
            (cell.y as f64 + 0.5) * q,
            self.config.follower_alt_m,
        ]
    }

    pub fn device_position(&self, k: DeviceId) -> [f64; 3] {
        let d = &self.devices[k];
        [d.x_m, d.y_m, 0.0]
    }

    /// Distance between leader `m` (its current airborne cell) and
    /// follower `n`.
    pub fn leader_follower_distance(&self, m: LeaderId, n: FollowerId) -> f64 {
        distance(
            self.leader_cell_position(self.leaders[m].cell),
            self.follower_position(n),
        )
    }

    /// Distance from leader `m`'s current cell to the depot.
    pub fn return_distance(&self, m: LeaderId) -> f64 {
        distance(
            self.leader_cell_position(self.leaders[m].cell),
            [self.config.depot_x_m, self.config.depot_y_m, 0.0],
        )
    }

    /// Followers assigned to leader `m`.
    pub fn swarm_members(&self, m: LeaderId) -> impl Iterator<Item = &FollowerState> + '_ {
        self.followers.iter().filter(move |f| f.leader == m)
    }

    pub fn swarm_size(&self, m: LeaderId) -> usize {
        self.swarm_members(m).count()
    }

    /// Battery level index used by the refuel game: ceil(E / E_unit).
    pub fn energy_level(&self, m: LeaderId) -> u16 {
        (self.leaders[m].energy_j / self.config.energy_unit_j).ceil().max(0.0) as u16
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SimConfig {
        SimConfig {
            leaders: 3,
            followers: 9,
            devices: 500,
            ..SimConfig::default()
        }
    }

    #[test]
    fn reference_world_grid_counts() {
        let cfg = small_config();
        let world = build_world(&cfg, 7).unwrap();
        assert_eq!(world.geometry.large_cells(), 25);
        assert_eq!(world.geometry.small_cells(), 625);
        for m in 0..3 {
            assert_eq!(world.swarm_size(m), 3);
        }
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = small_config();
        let a = build_world(&cfg, 7).unwrap();
        let b = build_world(&cfg, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_world_is_valid() {
        let cfg = SimConfig {
            leaders: 1,
            followers: 1,
            devices: 0,
            ..SimConfig::default()
        };
        let world = build_world(&cfg, 1).unwrap();
        assert_eq!(world.swarm_size(0), 1);
        assert!(world.coverage_set(0).is_empty());
    }

    #[test]
    fn invalid_configs_name_the_violation() {
        let cfg = SimConfig {
            leaders: 0,
            ..SimConfig::default()
        };
        let err = build_world(&cfg, 1).unwrap_err().to_string();
        assert!(err.contains("M must be >= 1"), "{err}");

        let cfg = SimConfig {
            small_grid_m: 130.0,
            ..SimConfig::default()
        };
        let err = build_world(&cfg, 1).unwrap_err().to_string();
        assert!(err.contains("integer multiple of q"), "{err}");

        let cfg = SimConfig {
            followers: 2,
            leaders: 3,
            ..SimConfig::default()
        };
        assert!(build_world(&cfg, 1).is_err());
    }

    #[test]
    fn capacity_shortfall_is_reported() {
        let cfg = SimConfig {
            leaders: 1,
            followers: 30,
            region_side_m: 1000.0,
            large_grid_m: 500.0,
            small_grid_m: 100.0, // 25 small grids per swarm < 30 followers
            ..SimConfig::default()
        };
        match build_world(&cfg, 1) {
            Err(BuildError::CapacityShortfall { capacity: 25, .. }) => {}
            other => panic!("expected capacity shortfall, got {other:?}"),
        }
    }

    #[test]
    fn initial_placement_satisfies_structure() {
        let cfg = small_config();
        let world = build_world(&cfg, 3).unwrap();
        // distinct leader cells
        for i in 0..cfg.leaders {
            for j in (i + 1)..cfg.leaders {
                assert_ne!(world.leaders[i].cell, world.leaders[j].cell);
            }
        }
        // distinct follower cells inside the assigned leader's grid
        for i in 0..cfg.followers {
            for j in (i + 1)..cfg.followers {
                assert_ne!(world.followers[i].cell, world.followers[j].cell);
            }
            let f = &world.followers[i];
            assert!(world
                .geometry
                .small_in_large(f.cell, world.leaders[f.leader].cell));
            assert_eq!(f.apps.len(), cfg.follower_app_slots as u32);
        }
        // fleet covers all task types when capacity allows
        let union = world
            .leaders
            .iter()
            .fold(AppSet::empty(), |acc, l| acc.union(l.apps));
        assert_eq!(union.len(), cfg.task_types as u32);
    }

    #[test]
    fn demand_edge_probabilities() {
        let cfg = SimConfig {
            demand_prob: 0.0,
            ..small_config()
        };
        let world = build_world(&cfg, 1).unwrap();
        let mut rng = crate::rng_stream(1, 1);
        assert_eq!(generate_demand(&world, &mut rng).active_count(), 0);

        let cfg = SimConfig {
            demand_prob: 1.0,
            task_types: 1,
            leader_app_slots: 1,
            follower_app_slots: 1,
            ..small_config()
        };
        let world = build_world(&cfg, 1).unwrap();
        let demand = generate_demand(&world, &mut rng);
        assert!((0..cfg.devices).all(|k| demand.requested(k, 0)));
    }

    #[test]
    fn demand_activation_rate_matches_probability() {
        let cfg = SimConfig {
            devices: 10_000,
            demand_prob: 0.5,
            ..small_config()
        };
        let world = build_world(&cfg, 11).unwrap();
        let mut rng = crate::rng_stream(11, 2);
        let demand = generate_demand(&world, &mut rng);
        let rate = demand.active_count() as f64 / cfg.devices as f64;
        assert!((rate - 0.5).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn coverage_assigns_devices_to_their_cell_follower() {
        let cfg = small_config();
        let mut world = build_world(&cfg, 5).unwrap();
        // Pin one device to follower 0's cell center.
        let cell = world.followers[0].cell;
        let q = cfg.small_grid_m;
        world.devices[0].x_m = (cell.x as f64 + 0.5) * q;
        world.devices[0].y_m = (cell.y as f64 + 0.5) * q;
        world.rebuild_device_buckets();
        assert!(world.coverage_set(0).contains(&0));
        for n in 1..cfg.followers {
            assert!(!world.coverage_set(n).contains(&0));
        }
    }

    #[test]
    fn coverage_sets_are_disjoint_and_match_direct_count() {
        let cfg = small_config();
        let world = build_world(&cfg, 9).unwrap();
        let mut seen = std::collections::HashSet::new();
        let mut total = 0usize;
        for n in 0..cfg.followers {
            for &k in world.coverage_set(n) {
                assert!(seen.insert(k), "device {k} covered twice");
                total += 1;
            }
        }
        // Direct oracle: count devices whose cell equals some follower's cell.
        let direct = world
            .devices
            .iter()
            .filter(|d| {
                world.followers.iter().any(|f| {
                    f.cell == world.small_cell_of(d.x_m, d.y_m)
                })
            })
            .count();
        assert_eq!(total, direct);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), 0.0);
        assert_eq!(distance([0.0, 0.0, 150.0], [0.0, 0.0, 120.0]), 30.0);
        let d = distance([500.0, 0.0, 150.0], [0.0, 0.0, 0.0]);
        assert!((d - 272_500f64.sqrt()).abs() < 1e-9);
        assert!((d - 522.0).abs() < 0.1);
    }

    #[test]
    fn energy_level_is_ceiling_of_units() {
        let cfg = SimConfig {
            energy_unit_j: 10e3,
            ..small_config()
        };
        let mut world = build_world(&cfg, 1).unwrap();
        world.leaders[0].energy_j = 95e3;
        assert_eq!(world.energy_level(0), 10);
        world.leaders[0].energy_j = 0.0;
        assert_eq!(world.energy_level(0), 0);
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(10, 6), 210);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(3, 5), 0);
    }
}
