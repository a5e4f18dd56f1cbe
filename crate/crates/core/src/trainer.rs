//! Training orchestration: the per-slot decision cycle across the six
//! games, conflict resolution, environment stepping, reward distribution,
//! Q-updates, and the episode loop with its two baseline modes.
//!
//! Slot order: leaders decide refuel, then returning leaders pick an
//! application loadout while airborne leaders move; followers then pick a
//! swarm, a move inside it, and a delegation flag; finally demand is drawn,
//! the slot is evaluated and every learner's temporal-difference update is
//! deferred to its next decision point, where the then-current mask is
//! known. Conflicting simultaneous choices are repaired in ascending agent
//! id order, replacing an infeasible proposal with the agent's best legal
//! alternative and falling back to a hold/no-op.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    battery_step, evaluate_slot, leader_worst_slot_energy_j, propulsion_power_w,
};
use crate::games::{
    self, GameKind, Move, StateKey, DELEGATE, MOVE_ACTIONS, MOVE_HOLD, REFUEL_RETURN, REFUEL_STAY,
};
use crate::qlearn::{LearnerParams, QTable};
use crate::world::{build_world, generate_demand, AppSet, GridPos, LeaderId, SimConfig, World};

/// Training variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Full coordination: all six games learned, clustering re-decided
    /// every slot.
    Rldc,
    /// Clustering disabled; the initial swarm assignment is kept all
    /// episode. Everything else is learned.
    FixedSwarm,
    /// No swarms at all: no clustering, no delegation, followers roam the
    /// whole region, leaders fly and refuel independently.
    NoSwarm,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Rldc, Mode::FixedSwarm, Mode::NoSwarm];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Rldc => "rldc",
            Mode::FixedSwarm => "fixed",
            Mode::NoSwarm => "noswarm",
        }
    }

    /// Whether swarm-membership rules (clustering, containment, delegation)
    /// apply in this mode.
    pub fn swarm_rules(&self) -> bool {
        !matches!(self, Mode::NoSwarm)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rldc" => Ok(Mode::Rldc),
            "fixed" => Ok(Mode::FixedSwarm),
            "noswarm" => Ok(Mode::NoSwarm),
            other => Err(format!(
                "unknown mode '{other}' (expected rldc, fixed or noswarm)"
            )),
        }
    }
}

// --- constraint checking -----------------------------------------------------

/// Verifies the structural slot invariants; returns a description per
/// violation. `swarm_rules` disables the membership and containment checks
/// for the no-swarm baseline.
pub fn constraint_violations(world: &World, swarm_rules: bool) -> Vec<String> {
    let mut out = Vec::new();
    let geom = &world.geometry;
    for f in &world.followers {
        if f.leader >= world.leaders.len() {
            out.push(format!("follower {} has invalid leader {}", f.id, f.leader));
        }
        if !geom.contains_small(f.cell) {
            out.push(format!("follower {} off the small grid", f.id));
        }
    }
    for l in &world.leaders {
        if !geom.contains_large(l.cell) {
            out.push(format!("leader {} off the large grid", l.id));
        }
    }
    // one UAV per cell, leaders counted even while away (their grid stays
    // reserved for re-entry)
    for i in 0..world.leaders.len() {
        for j in (i + 1)..world.leaders.len() {
            if world.leaders[i].cell == world.leaders[j].cell {
                out.push(format!("leaders {i} and {j} share a large grid"));
            }
        }
    }
    for i in 0..world.followers.len() {
        for j in (i + 1)..world.followers.len() {
            if world.followers[i].cell == world.followers[j].cell {
                out.push(format!("followers {i} and {j} share a small grid"));
            }
        }
    }
    if swarm_rules {
        for l in &world.leaders {
            if !l.at_depot && world.swarm_size(l.id) == 0 {
                out.push(format!("airborne leader {} has no followers", l.id));
            }
        }
        let half_span = (world.config.large_grid_m - world.config.small_grid_m) / 2.0;
        for f in &world.followers {
            let leader = &world.leaders[f.leader];
            if leader.at_depot {
                continue;
            }
            if !geom.small_in_large(f.cell, leader.cell) {
                out.push(format!("follower {} outside swarm {}", f.id, f.leader));
            }
            let lp = world.leader_cell_position(leader.cell);
            let fp = world.follower_position(f.id);
            if (lp[0] - fp[0]).abs() > half_span + 1e-6
                || (lp[1] - fp[1]).abs() > half_span + 1e-6
            {
                out.push(format!("follower {} beyond the containment span", f.id));
            }
        }
    }
    out
}

// --- conflict resolution ------------------------------------------------------

/// Raw simultaneous proposals for one slot, indexed by agent id.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotProposals {
    pub refuel: Vec<u16>,
    pub app: Vec<u16>,
    pub leader_move: Vec<u16>,
    pub clustering: Vec<u16>,
    pub follower_move: Vec<u16>,
    pub delegation: Vec<u16>,
}

/// Actions actually executed after repair, indexed by agent id.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecisions {
    pub refuel: Vec<u16>,
    pub app: Vec<Option<u16>>,
    pub leader_move: Vec<Option<u16>>,
    pub clustering: Vec<Option<u16>>,
    pub follower_move: Vec<u16>,
    pub delegation: Vec<Option<u16>>,
    pub repairs: usize,
}

/// Forces battery-safety returns and depot re-entries, then keeps the
/// highest-energy leader airborne if everyone proposed to return.
pub fn resolve_refuel(
    world: &World,
    proposals: &mut [u16],
    forced_stay: &[bool],
    forced_return: &[bool],
) -> usize {
    let mut repairs = 0;
    for m in 0..proposals.len() {
        let fixed = if forced_stay[m] {
            REFUEL_STAY
        } else if forced_return[m] {
            REFUEL_RETURN
        } else {
            proposals[m]
        };
        if fixed != proposals[m] {
            proposals[m] = fixed;
            repairs += 1;
        }
    }
    if proposals.iter().all(|&a| a == REFUEL_RETURN) {
        let keeper = (0..proposals.len())
            .filter(|&m| !forced_return[m])
            .max_by(|&a, &b| {
                world.leaders[a]
                    .energy_j
                    .partial_cmp(&world.leaders[b].energy_j)
                    .unwrap()
                    .then_with(|| b.cmp(&a))
            });
        if let Some(k) = keeper {
            proposals[k] = REFUEL_STAY;
            repairs += 1;
        }
    }
    repairs
}

fn leader_move_target(world: &World, m: LeaderId, action: u16) -> Option<GridPos> {
    let target = Move::from_action(action).apply(world.leaders[m].cell)?;
    if !world.geometry.contains_large(target) {
        return None;
    }
    if world
        .leaders
        .iter()
        .any(|o| o.id != m && o.cell == target)
    {
        return None;
    }
    Some(target)
}

/// Commits airborne leader moves in ascending id order; an infeasible
/// proposal is replaced by the agent's preferred feasible move, falling
/// back to holding position.
pub fn resolve_leader_moves<F>(
    world: &mut World,
    proposals: &[(LeaderId, u16)],
    mut prefer: F,
) -> (Vec<(LeaderId, u16)>, usize)
where
    F: FnMut(LeaderId, &[u16]) -> u16,
{
    let mut executed = Vec::with_capacity(proposals.len());
    let mut repairs = 0;
    for &(m, want) in proposals {
        let action = if leader_move_target(world, m, want).is_some() {
            want
        } else {
            repairs += 1;
            let feasible: Vec<u16> = (0..MOVE_ACTIONS)
                .filter(|&a| leader_move_target(world, m, a).is_some())
                .collect();
            debug_assert!(!feasible.is_empty(), "hold is always feasible");
            prefer(m, &feasible)
        };
        world.leaders[m].cell =
            leader_move_target(world, m, action).expect("repaired move is feasible");
        executed.push((m, action));
    }
    (executed, repairs)
}

fn clustering_feasible(world: &World, n: usize, target: LeaderId, any_airborne: bool) -> bool {
    let current = world.followers[n].leader;
    if target == current {
        return !world.leaders[current].at_depot || !any_airborne;
    }
    if world.leaders[target].at_depot {
        return false;
    }
    if !world.leaders[current].at_depot && world.swarm_size(current) <= 1 {
        return false;
    }
    world.swarm_size(target) + 1 <= world.geometry.swarm_capacity()
}

/// Commits clustering choices in ascending id order, then pins followers
/// back onto any airborne leader left without one.
pub fn resolve_clustering<F>(
    world: &mut World,
    proposals: &[u16],
    mut prefer: F,
) -> (Vec<u16>, usize)
where
    F: FnMut(usize, &[u16]) -> u16,
{
    let leader_count = world.leaders.len();
    let any_airborne = world.leaders.iter().any(|l| !l.at_depot);
    let old_assignment: Vec<LeaderId> = world.followers.iter().map(|f| f.leader).collect();
    let mut executed = Vec::with_capacity(proposals.len());
    let mut repairs = 0;
    for n in 0..world.followers.len() {
        let current = world.followers[n].leader;
        let decode = |a: u16| games::clustering_action_leader(leader_count, current, a);
        let action = if clustering_feasible(world, n, decode(proposals[n]), any_airborne) {
            proposals[n]
        } else {
            repairs += 1;
            let feasible: Vec<u16> = (0..leader_count as u16)
                .filter(|&a| clustering_feasible(world, n, decode(a), any_airborne))
                .collect();
            if feasible.is_empty() {
                0 // forced no-op
            } else {
                prefer(n, &feasible)
            }
        };
        world.followers[n].leader = decode(action);
        executed.push(action);
    }
    // Pin-back: an airborne leader must keep at least one follower.
    loop {
        let stranded = (0..leader_count)
            .find(|&m| !world.leaders[m].at_depot && world.swarm_size(m) == 0);
        let Some(m) = stranded else { break };
        let donor = (0..world.followers.len())
            .find(|&n| {
                old_assignment[n] == m && world.swarm_size(world.followers[n].leader) >= 2
            })
            .or_else(|| {
                (0..world.followers.len()).find(|&n| {
                    world.followers[n].leader != m
                        && world.swarm_size(world.followers[n].leader) >= 2
                })
            });
        let Some(n) = donor else { break };
        world.followers[n].leader = m;
        executed[n] = games::clustering_leader_action(leader_count, old_assignment[n], m);
        repairs += 1;
    }
    (executed, repairs)
}

/// Moves every follower with its swarm frame: the follower keeps its offset
/// inside the (possibly new) leader's large grid. Followers whose leader is
/// at the depot hold position.
pub fn reframe_followers(
    world: &mut World,
    old_assignment: &[LeaderId],
    old_leader_cells: &[GridPos],
) {
    let geom = world.geometry;
    for n in 0..world.followers.len() {
        let leader = world.followers[n].leader;
        if world.leaders[leader].at_depot {
            continue;
        }
        let old_origin = geom.large_origin(old_leader_cells[old_assignment[n]]);
        let cell = world.followers[n].cell;
        debug_assert!(
            cell.x >= old_origin.x && cell.y >= old_origin.y,
            "follower strayed from its swarm frame"
        );
        let new_origin = geom.large_origin(world.leaders[leader].cell);
        world.followers[n].cell = GridPos::new(
            new_origin.x + (cell.x - old_origin.x),
            new_origin.y + (cell.y - old_origin.y),
        );
    }
}

fn follower_move_target(
    world: &World,
    n: usize,
    action: u16,
    roam_free: bool,
) -> Option<GridPos> {
    let target = Move::from_action(action).apply(world.followers[n].cell)?;
    // Holding is containment-exempt so swarms whose leader is away stay put.
    if action != MOVE_HOLD && !games::follower_cell_allowed(world, n, target, roam_free) {
        return None;
    }
    if world
        .followers
        .iter()
        .any(|o| o.id != n && o.cell == target)
    {
        return None;
    }
    Some(target)
}

/// Commits follower moves in ascending id order. When no move and not even
/// holding is feasible (two reframed followers on one cell), the follower
/// is relocated to the first free contained cell.
pub fn resolve_follower_moves<F>(
    world: &mut World,
    proposals: &[u16],
    roam_free: bool,
    mut prefer: F,
) -> (Vec<u16>, usize)
where
    F: FnMut(usize, &[u16]) -> u16,
{
    let mut executed = Vec::with_capacity(proposals.len());
    let mut repairs = 0;
    for n in 0..world.followers.len() {
        let target = match follower_move_target(world, n, proposals[n], roam_free) {
            Some(t) => {
                executed.push(proposals[n]);
                t
            }
            None => {
                repairs += 1;
                let feasible: Vec<u16> = (0..MOVE_ACTIONS)
                    .filter(|&a| follower_move_target(world, n, a, roam_free).is_some())
                    .collect();
                if feasible.is_empty() {
                    executed.push(MOVE_HOLD);
                    relocation_cell(world, n, roam_free)
                } else {
                    let a = prefer(n, &feasible);
                    executed.push(a);
                    follower_move_target(world, n, a, roam_free)
                        .expect("preferred move is feasible")
                }
            }
        };
        world.followers[n].cell = target;
    }
    (executed, repairs)
}

/// First unclaimed cell in the follower's containment region.
fn relocation_cell(world: &World, n: usize, roam_free: bool) -> GridPos {
    let geom = world.geometry;
    let (origin, span) = if roam_free {
        (GridPos::new(0, 0), geom.small_per_side)
    } else {
        let leader = &world.leaders[world.followers[n].leader];
        (geom.large_origin(leader.cell), geom.small_per_large)
    };
    for dx in 0..span {
        for dy in 0..span {
            let cell = GridPos::new(origin.x + dx, origin.y + dy);
            if !world.followers.iter().any(|o| o.id != n && o.cell == cell) {
                return cell;
            }
        }
    }
    unreachable!("containment region always has a free cell for its members")
}

/// Applies a full batch of raw proposals in slot order with every repair
/// rule, exactly as the training loop does stage by stage. Used to exercise
/// the conflict-resolution contract on arbitrary inputs.
pub fn resolve_slot<F>(
    world: &mut World,
    proposals: &SlotProposals,
    mode: Mode,
    forced_stay: &[bool],
    forced_return: &[bool],
    mut prefer: F,
) -> SlotDecisions
where
    F: FnMut(GameKind, usize, &[u16]) -> u16,
{
    let leader_count = world.leaders.len();
    let follower_count = world.followers.len();
    let mut refuel = proposals.refuel.clone();
    let mut repairs = resolve_refuel(world, &mut refuel, forced_stay, forced_return);
    for m in 0..leader_count {
        world.leaders[m].at_depot = refuel[m] == REFUEL_RETURN;
    }

    let old_assignment: Vec<LeaderId> = world.followers.iter().map(|f| f.leader).collect();
    let old_cells: Vec<GridPos> = world.leaders.iter().map(|l| l.cell).collect();

    let mut app = vec![None; leader_count];
    for m in 0..leader_count {
        if world.leaders[m].at_depot {
            app[m] = Some(proposals.app[m]);
            world.leaders[m].apps = games::app_loadout(
                proposals.app[m],
                world.config.task_types,
                world.config.leader_app_slots,
            );
        }
    }

    let movers: Vec<(LeaderId, u16)> = (0..leader_count)
        .filter(|&m| !world.leaders[m].at_depot)
        .map(|m| (m, proposals.leader_move[m]))
        .collect();
    let (exec_moves, r) =
        resolve_leader_moves(world, &movers, |m, legal| prefer(GameKind::LeaderMove, m, legal));
    repairs += r;
    let mut leader_move = vec![None; leader_count];
    for (m, a) in exec_moves {
        leader_move[m] = Some(a);
    }

    let mut clustering = vec![None; follower_count];
    if mode == Mode::Rldc {
        let (exec, r) = resolve_clustering(world, &proposals.clustering, |n, legal| {
            prefer(GameKind::Clustering, n, legal)
        });
        repairs += r;
        for (n, a) in exec.into_iter().enumerate() {
            clustering[n] = Some(a);
        }
    }
    world.prev_assignment = old_assignment.clone();

    if mode.swarm_rules() {
        reframe_followers(world, &old_assignment, &old_cells);
    }

    let (follower_move, r) = resolve_follower_moves(
        world,
        &proposals.follower_move,
        !mode.swarm_rules(),
        |n, legal| prefer(GameKind::FollowerMove, n, legal),
    );
    repairs += r;

    let mut delegation = vec![None; follower_count];
    for n in 0..follower_count {
        if mode.swarm_rules() {
            delegation[n] = Some(proposals.delegation[n]);
            world.followers[n].delegated = if proposals.delegation[n] == DELEGATE {
                games::delegated_types(world, n)
            } else {
                AppSet::empty()
            };
        } else {
            world.followers[n].delegated = AppSet::empty();
        }
    }

    SlotDecisions {
        refuel,
        app,
        leader_move,
        clustering,
        follower_move,
        delegation,
        repairs,
    }
}

// --- learners -----------------------------------------------------------------

#[derive(Debug, Clone)]
struct Learner {
    table: QTable,
    /// Acted this slot; waiting for the slot reward.
    open: Option<(StateKey, u16)>,
    /// Completed transition awaiting the next decision point's state/mask.
    pending: Option<(StateKey, u16, f64)>,
}

impl Learner {
    fn new(actions: u16) -> Self {
        Learner {
            table: QTable::new(actions),
            open: None,
            pending: None,
        }
    }

    /// Applies the deferred update against this decision point, then
    /// selects an action.
    fn decide(
        &mut self,
        state: &StateKey,
        legal: &[u16],
        beta: f64,
        sigma: f64,
        epsilon: f64,
        rng: &mut ChaCha8Rng,
    ) -> u16 {
        if let Some((s, a, r)) = self.pending.take() {
            self.table
                .update(s.as_bytes(), a, r, state.as_bytes(), legal, beta, sigma)
                .expect("rewards are finite");
        }
        self.table
            .select(state.as_bytes(), legal, epsilon, rng)
            .expect("masks are never empty")
    }

    fn record(&mut self, state: StateKey, executed: u16) {
        debug_assert!(self.open.is_none());
        self.open = Some((state, executed));
    }

    fn close(&mut self, reward: f64) {
        if let Some((s, a)) = self.open.take() {
            self.pending = Some((s, a, reward));
        }
    }

    /// Episode boundary: settle the last transition as terminal.
    fn finish_episode(&mut self, beta: f64, sigma: f64) {
        if let Some((s, a, r)) = self.pending.take() {
            self.table
                .update(s.as_bytes(), a, r, s.as_bytes(), &[], beta, sigma)
                .expect("rewards are finite");
        }
        self.open = None;
    }
}

// --- metrics ------------------------------------------------------------------

/// Per-episode accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: u32,
    /// Sum of per-slot energy efficiency over the episode.
    pub effi_sum: f64,
    pub effi_mean: f64,
    pub bits_requested: f64,
    pub bits_served: f64,
    pub bits_dropped: f64,
    pub energy_j: f64,
    pub depot_visits: usize,
    pub reclusters: usize,
    pub repairs: usize,
    pub min_battery_j: f64,
    pub battery_violations: usize,
    pub bad_recharges: usize,
}

/// Aggregate result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutput {
    pub mode: Mode,
    pub episodes: Vec<EpisodeMetrics>,
    /// Episode-summed efficiency averaged over episodes.
    pub sum_over_loop: f64,
    /// Mean per-slot efficiency over the whole run.
    pub mean_effi: f64,
    pub bits_requested: f64,
    pub bits_served: f64,
    pub energy_j: f64,
    pub depot_visits: usize,
    pub min_battery_j: f64,
    pub battery_violations: usize,
    pub bad_recharges: usize,
}

// --- the trainer --------------------------------------------------------------

pub struct Trainer {
    cfg: SimConfig,
    mode: Mode,
    params: LearnerParams,
    refuel: Vec<Learner>,
    app: Vec<Learner>,
    leader_move: Vec<Learner>,
    clustering: Vec<Learner>,
    follower_move: Vec<Learner>,
    delegation: Vec<Learner>,
    app_actions: Vec<u16>,
    cumulative_leader_bits: Vec<f64>,
    world: World,
    epsilon: f64,
    action_rng: ChaCha8Rng,
    demand_rng: ChaCha8Rng,
    trace: Option<Box<dyn Write>>,
}

struct SlotStats {
    efficiency: f64,
    requested: f64,
    served: f64,
    dropped: f64,
    energy_j: f64,
    depot_visits: usize,
    reclusters: usize,
    repairs: usize,
    min_battery_j: f64,
    battery_violations: usize,
    bad_recharges: usize,
}

impl Trainer {
    pub fn new(cfg: &SimConfig, mode: Mode) -> Result<Self, crate::world::BuildError> {
        cfg.validate()?;
        let world = build_world(cfg, crate::mix(cfg.seed, 0))?;
        let params = cfg.learn;
        let app_count = GameKind::AppPlacement.action_count(cfg);
        Ok(Trainer {
            refuel: (0..cfg.leaders)
                .map(|_| Learner::new(GameKind::Refuel.action_count(cfg)))
                .collect(),
            app: (0..cfg.leaders).map(|_| Learner::new(app_count)).collect(),
            leader_move: (0..cfg.leaders)
                .map(|_| Learner::new(MOVE_ACTIONS))
                .collect(),
            clustering: (0..cfg.followers)
                .map(|_| Learner::new(GameKind::Clustering.action_count(cfg)))
                .collect(),
            follower_move: (0..cfg.followers)
                .map(|_| Learner::new(MOVE_ACTIONS))
                .collect(),
            delegation: (0..cfg.followers)
                .map(|_| Learner::new(GameKind::Delegation.action_count(cfg)))
                .collect(),
            app_actions: (0..app_count).collect(),
            cumulative_leader_bits: vec![0.0; cfg.leaders],
            world,
            epsilon: params.epsilon_start,
            action_rng: crate::rng_stream(cfg.seed, 1),
            demand_rng: crate::rng_stream(cfg.seed, 2),
            trace: None,
            cfg: cfg.clone(),
            mode,
            params,
        })
    }

    /// Installs a per-slot trace sink (one line per slot).
    pub fn set_trace(&mut self, sink: Box<dyn Write>) {
        self.trace = Some(sink);
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// Battery threshold under which a leader is forced back to the depot:
    /// one worst-case slot plus the return flight from anywhere reachable.
    fn forced_return_threshold(&self, m: LeaderId) -> f64 {
        let cfg = &self.cfg;
        let cruise = propulsion_power_w(cfg.speed_mps, &cfg.propulsion);
        leader_worst_slot_energy_j(cfg)
            + cruise * (self.world.return_distance(m) + cfg.large_grid_m) / cfg.speed_mps
    }

    fn run_slot(&mut self, t: u32) -> SlotStats {
        let sigma = self.params.discount;
        let eps = self.epsilon;
        let leader_count = self.cfg.leaders;
        let follower_count = self.cfg.followers;
        let mut repairs = 0usize;

        // Leaders that spent last slot at the depot re-enter at their
        // retained cell and must stay airborne this slot.
        let forced_stay: Vec<bool> = self.world.leaders.iter().map(|l| l.at_depot).collect();
        for l in &mut self.world.leaders {
            l.at_depot = false;
        }
        let forced_return: Vec<bool> = (0..leader_count)
            .map(|m| {
                !forced_stay[m]
                    && self.world.leaders[m].energy_j < self.forced_return_threshold(m)
            })
            .collect();

        // Refuel decisions.
        let s_refuel = games::refuel_state(&self.world);
        let beta_refuel = GameKind::Refuel.beta(&self.params);
        let mut refuel_actions = Vec::with_capacity(leader_count);
        for m in 0..leader_count {
            let legal = games::refuel_mask(forced_stay[m], forced_return[m]);
            let a = self.refuel[m].decide(
                &s_refuel,
                &legal,
                beta_refuel,
                sigma,
                eps,
                &mut self.action_rng,
            );
            refuel_actions.push(a);
        }
        repairs += resolve_refuel(
            &self.world,
            &mut refuel_actions,
            &forced_stay,
            &forced_return,
        );
        let mut depot_visits = 0;
        for m in 0..leader_count {
            self.world.leaders[m].at_depot = refuel_actions[m] == REFUEL_RETURN;
            if self.world.leaders[m].at_depot {
                depot_visits += 1;
            }
            self.refuel[m].record(s_refuel.clone(), refuel_actions[m]);
        }

        // Frame of reference for the swarm ride-along, captured before any
        // movement.
        let old_assignment: Vec<LeaderId> =
            self.world.followers.iter().map(|f| f.leader).collect();
        let old_cells: Vec<GridPos> = self.world.leaders.iter().map(|l| l.cell).collect();

        // Application placement for leaders at the depot.
        let s_app = games::app_placement_state(&self.world);
        let beta_app = GameKind::AppPlacement.beta(&self.params);
        let mut staged_apps: Vec<(LeaderId, u16)> = Vec::new();
        for m in 0..leader_count {
            if self.world.leaders[m].at_depot {
                let a = self.app[m].decide(
                    &s_app,
                    &self.app_actions,
                    beta_app,
                    sigma,
                    eps,
                    &mut self.action_rng,
                );
                self.app[m].record(s_app.clone(), a);
                staged_apps.push((m, a));
            }
        }
        for (m, a) in staged_apps {
            self.world.leaders[m].apps =
                games::app_loadout(a, self.cfg.task_types, self.cfg.leader_app_slots);
        }

        // Airborne leader moves.
        let s_lmove = games::leader_move_state(&self.world);
        let beta_lmove = GameKind::LeaderMove.beta(&self.params);
        let mut move_proposals: Vec<(LeaderId, u16)> = Vec::new();
        for m in 0..leader_count {
            if self.world.leaders[m].at_depot {
                continue;
            }
            let legal = games::leader_move_mask(&self.world, m);
            let a = self.leader_move[m].decide(
                &s_lmove,
                &legal,
                beta_lmove,
                sigma,
                eps,
                &mut self.action_rng,
            );
            move_proposals.push((m, a));
        }
        let (executed_moves, r) = {
            let world = &mut self.world;
            let tables = &self.leader_move;
            resolve_leader_moves(world, &move_proposals, |m, legal| {
                tables[m].table.greedy(s_lmove.as_bytes(), legal).unwrap()
            })
        };
        repairs += r;
        for (m, a) in executed_moves {
            self.leader_move[m].record(s_lmove.clone(), a);
        }

        // Clustering.
        let mut reclusters = 0;
        if self.mode == Mode::Rldc {
            let s_cluster = games::clustering_state(&self.world);
            let beta_cluster = GameKind::Clustering.beta(&self.params);
            let mut proposals = Vec::with_capacity(follower_count);
            for n in 0..follower_count {
                let legal = games::clustering_mask(&self.world, n);
                let a = self.clustering[n].decide(
                    &s_cluster,
                    &legal,
                    beta_cluster,
                    sigma,
                    eps,
                    &mut self.action_rng,
                );
                proposals.push(a);
            }
            let (executed, r) = {
                let world = &mut self.world;
                let tables = &self.clustering;
                resolve_clustering(world, &proposals, |n, legal| {
                    tables[n].table.greedy(s_cluster.as_bytes(), legal).unwrap()
                })
            };
            repairs += r;
            for (n, a) in executed.into_iter().enumerate() {
                self.clustering[n].record(s_cluster.clone(), a);
                if self.world.followers[n].leader != old_assignment[n] {
                    reclusters += 1;
                }
            }
        }
        self.world.prev_assignment = old_assignment.clone();

        if self.mode.swarm_rules() {
            reframe_followers(&mut self.world, &old_assignment, &old_cells);
        }

        // Follower moves.
        let roam = !self.mode.swarm_rules();
        let s_fmove = games::follower_move_state(&self.world);
        let beta_fmove = GameKind::FollowerMove.beta(&self.params);
        let mut fmove_proposals = Vec::with_capacity(follower_count);
        for n in 0..follower_count {
            let legal = games::follower_move_mask(&self.world, n, roam);
            let a = self.follower_move[n].decide(
                &s_fmove,
                &legal,
                beta_fmove,
                sigma,
                eps,
                &mut self.action_rng,
            );
            fmove_proposals.push(a);
        }
        let (executed, r) = {
            let world = &mut self.world;
            let tables = &self.follower_move;
            resolve_follower_moves(world, &fmove_proposals, roam, |n, legal| {
                tables[n].table.greedy(s_fmove.as_bytes(), legal).unwrap()
            })
        };
        repairs += r;
        for (n, a) in executed.into_iter().enumerate() {
            self.follower_move[n].record(s_fmove.clone(), a);
        }

        // Delegation flags.
        if self.mode.swarm_rules() {
            let beta_td = GameKind::Delegation.beta(&self.params);
            let legal = games::delegation_mask();
            for n in 0..follower_count {
                let s_td = games::delegation_state(&self.world, n);
                let a = self.delegation[n].decide(
                    &s_td,
                    &legal,
                    beta_td,
                    sigma,
                    eps,
                    &mut self.action_rng,
                );
                self.delegation[n].record(s_td, a);
                self.world.followers[n].delegated = if a == DELEGATE {
                    games::delegated_types(&self.world, n)
                } else {
                    AppSet::empty()
                };
            }
        } else {
            for f in &mut self.world.followers {
                f.delegated = AppSet::empty();
            }
        }

        debug_assert_eq!(
            constraint_violations(&self.world, self.mode.swarm_rules()),
            Vec::<String>::new()
        );

        // Environment step.
        let demand = generate_demand(&self.world, &mut self.demand_rng);
        let ledger = evaluate_slot(&self.world, &demand);
        let pre_energy: Vec<f64> = self.world.leaders.iter().map(|l| l.energy_j).collect();
        let report = battery_step(&mut self.world, &ledger);
        let bad_recharges = report
            .recharged
            .iter()
            .filter(|&&m| self.world.leaders[m].energy_j != self.cfg.battery_j)
            .count();

        // Rewards close this slot's transitions.
        let coverage_violated = !games::coverage_ok(&self.world, self.cfg.strict_coverage);
        for m in 0..leader_count {
            self.cumulative_leader_bits[m] += ledger.leaders[m].task_bits;
            self.refuel[m].close(games::refuel_reward(
                coverage_violated,
                self.world.leaders[m].at_depot,
            ));
            self.app[m].close(games::app_placement_reward(self.cumulative_leader_bits[m]));
            let spent = pre_energy[m]
                - if self.world.leaders[m].at_depot {
                    self.cfg.battery_j // recharged; spend is not visible in the battery
                } else {
                    self.world.leaders[m].energy_j
                };
            self.leader_move[m].close(games::leader_move_reward(
                &self.world,
                &ledger,
                m,
                spent.max(0.0),
            ));
        }
        for n in 0..follower_count {
            self.clustering[n].close(games::clustering_reward(&ledger));
            self.follower_move[n].close(games::follower_move_reward(&self.world, &ledger, n));
            self.delegation[n].close(games::delegation_reward(&self.world, &ledger, n));
        }

        if let Some(sink) = self.trace.as_mut() {
            let _ = writeln!(
                sink,
                "t {} effi {:.3} served_bits {:.0} energy_j {:.1} returns {} reclusters {} repairs {}",
                t,
                ledger.efficiency,
                ledger.served_bits,
                ledger.total_energy_j,
                depot_visits,
                reclusters,
                repairs
            );
        }

        SlotStats {
            efficiency: ledger.efficiency,
            requested: ledger.requested_bits,
            served: ledger.served_bits,
            dropped: ledger.dropped_bits,
            energy_j: ledger.total_energy_j,
            depot_visits,
            reclusters,
            repairs,
            min_battery_j: report.min_energy_j,
            battery_violations: report.violations,
            bad_recharges,
        }
    }

    fn run_episode(&mut self, episode: u32) -> EpisodeMetrics {
        self.world = build_world(&self.cfg, crate::mix(self.cfg.seed, episode as u64))
            .expect("config validated at construction");
        self.epsilon = self.params.epsilon_at(episode, self.cfg.episodes);
        self.cumulative_leader_bits.iter_mut().for_each(|b| *b = 0.0);

        let mut metrics = EpisodeMetrics {
            episode,
            effi_sum: 0.0,
            effi_mean: 0.0,
            bits_requested: 0.0,
            bits_served: 0.0,
            bits_dropped: 0.0,
            energy_j: 0.0,
            depot_visits: 0,
            reclusters: 0,
            repairs: 0,
            min_battery_j: f64::INFINITY,
            battery_violations: 0,
            bad_recharges: 0,
        };
        for t in 1..=self.cfg.slots_per_episode {
            let s = self.run_slot(t);
            metrics.effi_sum += s.efficiency;
            metrics.bits_requested += s.requested;
            metrics.bits_served += s.served;
            metrics.bits_dropped += s.dropped;
            metrics.energy_j += s.energy_j;
            metrics.depot_visits += s.depot_visits;
            metrics.reclusters += s.reclusters;
            metrics.repairs += s.repairs;
            metrics.min_battery_j = metrics.min_battery_j.min(s.min_battery_j);
            metrics.battery_violations += s.battery_violations;
            metrics.bad_recharges += s.bad_recharges;
        }
        metrics.effi_mean = metrics.effi_sum / self.cfg.slots_per_episode.max(1) as f64;
        if !metrics.min_battery_j.is_finite() {
            metrics.min_battery_j = self.cfg.battery_j;
        }

        let sigma = self.params.discount;
        for (kind, learners) in [
            (GameKind::Refuel, &mut self.refuel),
            (GameKind::AppPlacement, &mut self.app),
            (GameKind::LeaderMove, &mut self.leader_move),
            (GameKind::Clustering, &mut self.clustering),
            (GameKind::FollowerMove, &mut self.follower_move),
            (GameKind::Delegation, &mut self.delegation),
        ] {
            let beta = kind.beta(&self.params);
            for l in learners.iter_mut() {
                l.finish_episode(beta, sigma);
            }
        }
        metrics
    }

    /// Runs the configured number of training episodes.
    pub fn train(&mut self) -> TrainingOutput {
        let mut episodes = Vec::with_capacity(self.cfg.episodes as usize);
        for ep in 0..self.cfg.episodes {
            episodes.push(self.run_episode(ep));
        }
        summarize_training(self.mode, episodes)
    }
}

fn summarize_training(mode: Mode, episodes: Vec<EpisodeMetrics>) -> TrainingOutput {
    let count = episodes.len().max(1) as f64;
    // every episode runs the same number of slots
    let mean_effi = episodes.iter().map(|e| e.effi_mean).sum::<f64>() / count;
    TrainingOutput {
        mode,
        sum_over_loop: episodes.iter().map(|e| e.effi_sum).sum::<f64>() / count,
        mean_effi,
        bits_requested: episodes.iter().map(|e| e.bits_requested).sum(),
        bits_served: episodes.iter().map(|e| e.bits_served).sum(),
        energy_j: episodes.iter().map(|e| e.energy_j).sum(),
        depot_visits: episodes.iter().map(|e| e.depot_visits).sum(),
        min_battery_j: episodes
            .iter()
            .map(|e| e.min_battery_j)
            .fold(f64::INFINITY, f64::min),
        battery_violations: episodes.iter().map(|e| e.battery_violations).sum(),
        bad_recharges: episodes.iter().map(|e| e.bad_recharges).sum(),
        episodes,
    }
}

/// Trains one configuration under the given mode and returns its metrics.
pub fn run_training(cfg: &SimConfig, mode: Mode) -> Result<TrainingOutput, crate::world::BuildError> {
    let mut trainer = Trainer::new(cfg, mode)?;
    Ok(trainer.train())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{DemandMatrix, IoTDevice, LeaderState, FollowerState};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn desk_config() -> SimConfig {
        SimConfig {
            episodes: 3,
            slots_per_episode: 10,
            devices: 60,
            ..SimConfig::default()
        }
    }

    #[test]
    fn mode_strings_round_trip() {
        for mode in Mode::ALL {
            assert_eq!(mode.as_str().parse::<Mode>().unwrap(), mode);
        }
        assert!("bogus".parse::<Mode>().is_err());
    }

    #[test]
    fn initial_world_has_no_violations() {
        let world = build_world(&SimConfig::default(), 3).unwrap();
        assert!(constraint_violations(&world, true).is_empty());
    }

    #[test]
    fn checker_flags_constructed_violations() {
        let mut world = build_world(&SimConfig::default(), 3).unwrap();
        world.followers[1].cell = world.followers[0].cell;
        let v = constraint_violations(&world, true);
        assert!(v.iter().any(|s| s.contains("share a small grid")), "{v:?}");
    }

    #[test]
    fn refuel_keeper_holds_one_leader_airborne() {
        let world = build_world(&SimConfig::default(), 3).unwrap();
        let mut proposals = vec![REFUEL_RETURN; 3];
        let repairs = resolve_refuel(&world, &mut proposals, &[false; 3], &[false; 3]);
        assert_eq!(repairs, 1);
        assert_eq!(
            proposals.iter().filter(|&&a| a == REFUEL_STAY).count(),
            1
        );
        // all battery-forced: nobody is kept airborne
        let mut proposals = vec![REFUEL_RETURN; 3];
        let r = resolve_refuel(&world, &mut proposals, &[false; 3], &[true; 3]);
        assert_eq!(r, 0);
        assert!(proposals.iter().all(|&a| a == REFUEL_RETURN));
    }

    #[test]
    fn forced_flags_override_proposals() {
        let world = build_world(&SimConfig::default(), 3).unwrap();
        let mut proposals = vec![REFUEL_RETURN, REFUEL_STAY, REFUEL_STAY];
        resolve_refuel(
            &world,
            &mut proposals,
            &[true, false, false],
            &[false, true, false],
        );
        assert_eq!(proposals, vec![REFUEL_STAY, REFUEL_RETURN, REFUEL_STAY]);
    }

    #[test]
    fn colliding_leader_moves_defer_to_lower_id() {
        let mut world = build_world(&SimConfig::default(), 3).unwrap();
        world.leaders[0].cell = GridPos::new(1, 1);
        world.leaders[1].cell = GridPos::new(1, 3);
        world.leaders[2].cell = GridPos::new(4, 4);
        // both aim for (1, 2): leader 0 moves north, leader 1 moves south
        let proposals = vec![(0, 0u16), (1, 1u16)];
        let (executed, repairs) =
            resolve_leader_moves(&mut world, &proposals, |_, legal| legal[0]);
        assert_eq!(world.leaders[0].cell, GridPos::new(1, 2));
        assert_ne!(world.leaders[1].cell, GridPos::new(1, 2));
        assert_eq!(executed[0], (0, 0));
        assert_eq!(repairs, 1);
        assert!(constraint_violations(&world, false).is_empty());
    }

    #[test]
    fn vacated_cells_can_be_taken_by_later_leaders() {
        let mut world = build_world(&SimConfig::default(), 3).unwrap();
        world.leaders[0].cell = GridPos::new(2, 2);
        world.leaders[1].cell = GridPos::new(2, 1); // south of leader 0
        world.leaders[2].cell = GridPos::new(0, 0);
        // leader 0 moves north, leader 1 moves into the vacated (2,2)
        let proposals = vec![(0, 0u16), (1, 0u16)];
        let (_, repairs) = resolve_leader_moves(&mut world, &proposals, |_, legal| legal[0]);
        assert_eq!(repairs, 0);
        assert_eq!(world.leaders[0].cell, GridPos::new(2, 3));
        assert_eq!(world.leaders[1].cell, GridPos::new(2, 2));
    }

    #[test]
    fn mass_exodus_pins_a_follower_back() {
        let world = build_world(&SimConfig::default(), 3).unwrap();
        let mut world = world;
        // every follower of leader 0 proposes to leave for leader 1
        let proposals: Vec<u16> = (0..9)
            .map(|n| {
                let cur = world.followers[n].leader;
                if cur == 0 {
                    games::clustering_leader_action(3, cur, 1)
                } else {
                    0
                }
            })
            .collect();
        let (_, _) = resolve_clustering(&mut world, &proposals, |_, legal| legal[0]);
        assert!(world.swarm_size(0) >= 1, "leader 0 was stranded");
        assert!(constraint_violations(&world, false).is_empty());
    }

    #[test]
    fn smoke_no_devices_yields_zero_efficiency() {
        let cfg = SimConfig {
            episodes: 1,
            slots_per_episode: 1,
            devices: 0,
            ..SimConfig::default()
        };
        let out = run_training(&cfg, Mode::Rldc).unwrap();
        assert_eq!(out.sum_over_loop, 0.0);
        assert_eq!(out.bits_served, 0.0);
        assert!(out.energy_j > 0.0);
    }

    #[test]
    fn training_is_deterministic_per_seed_and_mode() {
        let cfg = desk_config();
        for mode in Mode::ALL {
            let a = run_training(&cfg, mode).unwrap();
            let b = run_training(&cfg, mode).unwrap();
            assert_eq!(a, b, "mode {mode}");
        }
        let other_seed = SimConfig {
            seed: 99,
            ..desk_config()
        };
        assert_ne!(
            run_training(&cfg, Mode::Rldc).unwrap().mean_effi,
            run_training(&other_seed, Mode::Rldc).unwrap().mean_effi
        );
    }

    #[test]
    fn depleted_leader_is_forced_home_and_recharges() {
        let cfg = SimConfig {
            battery_j: 40e3, // a handful of slots per sortie
            energy_unit_j: 5e3,
            episodes: 2,
            slots_per_episode: 20,
            devices: 30,
            ..SimConfig::default()
        };
        let out = run_training(&cfg, Mode::Rldc).unwrap();
        assert!(out.depot_visits > 0, "no depot visit despite tiny battery");
        assert!(out.min_battery_j >= 0.0);
        assert_eq!(out.battery_violations, 0);
        assert_eq!(out.bad_recharges, 0);
    }

    #[test]
    fn fixed_mode_never_reclusters() {
        let cfg = desk_config();
        let out = run_training(&cfg, Mode::FixedSwarm).unwrap();
        let total: usize = out.episodes.iter().map(|e| e.reclusters).sum();
        assert_eq!(total, 0);
    }

    #[test]
    fn noswarm_mode_never_delegates_or_reclusters() {
        let cfg = desk_config();
        let mut trainer = Trainer::new(&cfg, Mode::NoSwarm).unwrap();
        let out = trainer.train();
        let total: usize = out.episodes.iter().map(|e| e.reclusters).sum();
        assert_eq!(total, 0);
        assert!(trainer
            .world()
            .followers
            .iter()
            .all(|f| f.delegated.is_empty()));
    }

    #[test]
    fn trace_emits_one_line_per_slot() {
        let cfg = SimConfig {
            episodes: 2,
            slots_per_episode: 5,
            devices: 20,
            ..SimConfig::default()
        };
        let buf = std::sync::Arc::new(std::sync::Mutex::new(Vec::<u8>::new()));
        struct Sink(std::sync::Arc<std::sync::Mutex<Vec<u8>>>);
        impl Write for Sink {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(buf);
                Ok(buf.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let mut trainer = Trainer::new(&cfg, Mode::Rldc).unwrap();
        trainer.set_trace(Box::new(Sink(buf.clone())));
        trainer.train();
        let text = String::from_utf8(buf.lock().unwrap().clone()).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.lines().all(|l| l.starts_with("t ")));
    }

    /// End-to-end hand trace of a single-swarm, single-device slot.
    #[test]
    fn single_request_slot_matches_hand_computation() {
        let cfg = SimConfig {
            leaders: 1,
            followers: 1,
            devices: 1,
            region_side_m: 500.0,
            large_grid_m: 500.0,
            small_grid_m: 100.0,
            ..SimConfig::default()
        };
        let leader = LeaderState {
            id: 0,
            cell: GridPos::new(0, 0),
            energy_j: cfg.battery_j,
            at_depot: false,
            apps: AppSet::from_types(0..cfg.leader_app_slots),
        };
        let follower = FollowerState {
            id: 0,
            cell: GridPos::new(2, 2),
            leader: 0,
            apps: AppSet::from_types([0u16]),
            delegated: AppSet::empty(),
        };
        // device exactly at the follower's cell center: distance = altitude
        let device = IoTDevice {
            id: 0,
            x_m: 250.0,
            y_m: 250.0,
        };
        let world =
            World::from_parts(cfg.clone(), vec![leader], vec![follower], vec![device]).unwrap();
        let demand = DemandMatrix::from_requests(vec![Some(0)]);
        let ledger = evaluate_slot(&world, &demand);

        // Hand computation, straight from the formulas.
        let ref_db = 20.0 * (4.0 * std::f64::consts::PI * 3e9 / 299_792_458.0).log10();
        let loss = ref_db + 10.0 * 2.2 * 120f64.log10();
        let noise = 10f64.powf((-174.0 - 30.0) / 10.0) * 1e7;
        let gamma = 0.1 * 10f64.powf(-loss / 10.0) / noise;
        let t_off = 1e7 / (1e7 * (1.0 + gamma).log2());
        let hover = 30.0 - 100.0 / 20.0;
        let task = (1e7f64).min(2e6 * (hover - t_off));
        assert_relative_eq!(ledger.followers[0].offload_window_s, t_off, epsilon = 1e-12);
        assert_relative_eq!(ledger.followers[0].task_bits, task, epsilon = 1e-6);

        let p20 = propulsion_power_w(20.0, &cfg.propulsion);
        let p0 = propulsion_power_w(0.0, &cfg.propulsion);
        let e_follower = 1e-18 * 4e12 * task + p20 * 5.0 + p0 * 25.0;
        let e_leader = p20 * 25.0 + p0 * 5.0;
        assert_relative_eq!(
            ledger.efficiency,
            task / (e_follower + e_leader),
            epsilon = 1e-9
        );
    }

    /// Random proposal batches resolve to constraint-clean slots.
    #[test]
    fn random_proposals_resolve_clean() {
        let mut rng = crate::rng_stream(77, 8);
        let cfg = SimConfig {
            devices: 40,
            ..SimConfig::default()
        };
        for round in 0..300 {
            let mut world = build_world(&cfg, round).unwrap();
            let mode = match round % 3 {
                0 => Mode::Rldc,
                1 => Mode::FixedSwarm,
                _ => Mode::NoSwarm,
            };
            for _ in 0..4 {
                let forced_stay: Vec<bool> =
                    world.leaders.iter().map(|l| l.at_depot).collect();
                for l in &mut world.leaders {
                    l.at_depot = false;
                }
                let forced_return = vec![false; cfg.leaders];
                let proposals = SlotProposals {
                    refuel: (0..cfg.leaders).map(|_| rng.gen_range(0..2)).collect(),
                    app: (0..cfg.leaders).map(|_| rng.gen_range(0..210)).collect(),
                    leader_move: (0..cfg.leaders).map(|_| rng.gen_range(0..5)).collect(),
                    clustering: (0..cfg.followers)
                        .map(|_| rng.gen_range(0..cfg.leaders as u16))
                        .collect(),
                    follower_move: (0..cfg.followers).map(|_| rng.gen_range(0..5)).collect(),
                    delegation: (0..cfg.followers).map(|_| rng.gen_range(0..2)).collect(),
                };
                let decisions = resolve_slot(
                    &mut world,
                    &proposals,
                    mode,
                    &forced_stay,
                    &forced_return,
                    |_, _, legal| legal[0],
                );
                let violations = constraint_violations(&world, mode.swarm_rules());
                assert!(
                    violations.is_empty(),
                    "round {round} mode {mode}: {violations:?} after {decisions:?}"
                );
            }
        }
    }

    /// Re-running legal decisions through the resolver changes nothing.
    #[test]
    fn resolution_is_idempotent_on_legal_proposals() {
        let cfg = SimConfig {
            devices: 20,
            ..SimConfig::default()
        };
        let mut world = build_world(&cfg, 5).unwrap();
        // legal proposal: everyone stays airborne, leaders hold is illegal
        // (they must move), so use a crafted feasible move set.
        let forced_stay = vec![false; cfg.leaders];
        let forced_return = vec![false; cfg.leaders];
        let proposals = SlotProposals {
            refuel: vec![REFUEL_STAY; cfg.leaders],
            app: vec![0; cfg.leaders],
            leader_move: (0..cfg.leaders)
                .map(|m| games::leader_move_mask(&world, m)[0])
                .collect(),
            clustering: vec![0; cfg.followers],
            follower_move: (0..cfg.followers)
                .map(|n| games::follower_move_mask(&world, n, false)[0])
                .collect(),
            delegation: vec![DELEGATE; cfg.followers],
        };
        let d1 = resolve_slot(
            &mut world,
            &proposals,
            Mode::Rldc,
            &forced_stay,
            &forced_return,
            |_, _, legal| legal[0],
        );
        // Leader moves may collide with each other even when individually
        // legal; accept repairs there but demand idempotence elsewhere.
        assert_eq!(d1.refuel, proposals.refuel);
        assert_eq!(
            d1.clustering.iter().map(|a| a.unwrap()).collect::<Vec<_>>(),
            proposals.clustering
        );
    }
}
