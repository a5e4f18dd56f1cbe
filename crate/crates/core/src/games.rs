//! The six coupled decision games played every slot: leader refuel, leader
//! application placement, leader movement, follower clustering, follower
//! movement and follower task delegation.
//!
//! Each game contributes a canonical state encoding, an indexed action
//! space, a legality mask embedding the hard constraints (occupancy,
//! containment, swarm membership, storage), and a reward read off the slot
//! ledger. Masks return ascending action indices and are never empty: a
//! hold/no-op action becomes legal exactly when nothing else is.

pub use crate::qlearn::StateKey;

use crate::dynamics::SlotLedger;
use crate::world::{
    app_choice_count, binomial, AppSet, FollowerId, GridPos, LeaderId, SimConfig, TaskType, World,
    DEPOT_CELL,
};

/// Game identifiers, one per learner family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameKind {
    Refuel,
    AppPlacement,
    LeaderMove,
    Clustering,
    FollowerMove,
    Delegation,
}

impl GameKind {
    pub const ALL: [GameKind; 6] = [
        GameKind::Refuel,
        GameKind::AppPlacement,
        GameKind::LeaderMove,
        GameKind::Clustering,
        GameKind::FollowerMove,
        GameKind::Delegation,
    ];

    /// Size of the action space under a given configuration.
    pub fn action_count(&self, cfg: &SimConfig) -> u16 {
        match self {
            GameKind::Refuel => REFUEL_ACTIONS,
            GameKind::AppPlacement => {
                app_choice_count(cfg.task_types, cfg.leader_app_slots) as u16
            }
            GameKind::LeaderMove | GameKind::FollowerMove => MOVE_ACTIONS,
            GameKind::Clustering => cfg.leaders as u16,
            GameKind::Delegation => DELEGATION_ACTIONS,
        }
    }

    /// Learning rate assigned to this game.
    pub fn beta(&self, params: &crate::qlearn::LearnerParams) -> f64 {
        match self {
            GameKind::Refuel => params.beta_refuel,
            GameKind::AppPlacement => params.beta_app_placement,
            GameKind::LeaderMove => params.beta_leader_move,
            GameKind::Clustering => params.beta_clustering,
            GameKind::FollowerMove => params.beta_follower_move,
            GameKind::Delegation => params.beta_delegation,
        }
    }
}

pub const REFUEL_STAY: u16 = 0;
pub const REFUEL_RETURN: u16 = 1;
pub const REFUEL_ACTIONS: u16 = 2;

pub const DELEGATE: u16 = 0;
pub const KEEP_LOCAL: u16 = 1;
pub const DELEGATION_ACTIONS: u16 = 2;

/// Grid moves; `Hold` is the repair fallback, legal only when every real
/// move is masked out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    North,
    South,
    West,
    East,
    Hold,
}

pub const MOVE_ACTIONS: u16 = 5;
pub const MOVE_HOLD: u16 = 4;

impl Move {
    pub fn from_action(a: u16) -> Move {
        match a {
            0 => Move::North,
            1 => Move::South,
            2 => Move::West,
            3 => Move::East,
            _ => Move::Hold,
        }
    }

    pub fn apply(&self, cell: GridPos) -> Option<GridPos> {
        match self {
            Move::North => cell.step(0, 1),
            Move::South => cell.step(0, -1),
            Move::West => cell.step(-1, 0),
            Move::East => cell.step(1, 0),
            Move::Hold => Some(cell),
        }
    }
}

// --- state encoders ---------------------------------------------------------

fn push_u16(buf: &mut Vec<u8>, v: u16) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_cell(buf: &mut Vec<u8>, cell: GridPos) {
    push_u16(buf, cell.x);
    push_u16(buf, cell.y);
}

fn push_assignment(buf: &mut Vec<u8>, world: &World) {
    for f in &world.followers {
        push_u16(buf, f.leader as u16);
    }
}

fn leader_cells_and_assignment(world: &World) -> Vec<u8> {
    let mut buf = Vec::with_capacity(world.leaders.len() * 4 + world.followers.len() * 2);
    for l in &world.leaders {
        push_cell(&mut buf, if l.at_depot { DEPOT_CELL } else { l.cell });
    }
    push_assignment(&mut buf, world);
    buf
}

/// Refuel game state: the battery level vector of all leaders.
pub fn refuel_state(world: &World) -> StateKey {
    let mut buf = Vec::with_capacity(world.leaders.len() * 2);
    for m in 0..world.leaders.len() {
        push_u16(&mut buf, world.energy_level(m));
    }
    StateKey::new(buf)
}

/// Application placement state: every leader's installed set.
pub fn app_placement_state(world: &World) -> StateKey {
    let mut buf = Vec::with_capacity(world.leaders.len() * 8);
    for l in &world.leaders {
        buf.extend_from_slice(&l.apps.0.to_le_bytes());
    }
    StateKey::new(buf)
}

/// Leader movement state: leader cells plus the follower assignment.
pub fn leader_move_state(world: &World) -> StateKey {
    StateKey::new(leader_cells_and_assignment(world))
}

/// Clustering state: leader cells (post-move) plus the standing assignment.
pub fn clustering_state(world: &World) -> StateKey {
    StateKey::new(leader_cells_and_assignment(world))
}

/// Follower movement state: follower cells plus the slot's assignment.
pub fn follower_move_state(world: &World) -> StateKey {
    let mut buf = Vec::with_capacity(world.followers.len() * 6);
    for f in &world.followers {
        push_cell(&mut buf, f.cell);
    }
    push_assignment(&mut buf, world);
    StateKey::new(buf)
}

/// Delegation state for one follower: its leader's apps, its own apps and
/// the assignment.
pub fn delegation_state(world: &World, n: FollowerId) -> StateKey {
    let f = &world.followers[n];
    let mut buf = Vec::with_capacity(16 + world.followers.len() * 2);
    buf.extend_from_slice(&world.leaders[f.leader].apps.0.to_le_bytes());
    buf.extend_from_slice(&f.apps.0.to_le_bytes());
    push_assignment(&mut buf, world);
    StateKey::new(buf)
}

// --- action spaces ----------------------------------------------------------

/// Decodes an application-placement action into the installed set: the
/// action index ranks the size-`slots` subsets of the type universe in
/// lexicographic order.
pub fn app_loadout(action: u16, task_types: u16, slots: u16) -> AppSet {
    let mut idx = action as u64;
    let mut set = AppSet::empty();
    let mut candidate = 0u16;
    for picked in 0..slots {
        loop {
            let with_candidate = binomial(
                (task_types - candidate - 1) as u64,
                (slots - picked - 1) as u64,
            );
            if idx < with_candidate {
                set.insert(candidate);
                candidate += 1;
                break;
            }
            idx -= with_candidate;
            candidate += 1;
        }
    }
    set
}

/// Inverse of [`app_loadout`].
pub fn app_loadout_rank(set: AppSet, task_types: u16, slots: u16) -> u16 {
    let mut rank = 0u64;
    let mut picked = 0u16;
    let mut prev: i32 = -1;
    for t in set.iter() {
        for skipped in (prev + 1) as u16..t {
            rank += binomial(
                (task_types - skipped - 1) as u64,
                (slots - picked - 1) as u64,
            );
        }
        picked += 1;
        prev = t as i32;
    }
    rank as u16
}

/// Leader this clustering action targets: index 0 keeps the current leader,
/// higher indices pick the remaining leaders in ascending id order.
pub fn clustering_action_leader(leader_count: usize, current: LeaderId, action: u16) -> LeaderId {
    if action == 0 {
        return current;
    }
    (0..leader_count)
        .filter(|&m| m != current)
        .nth(action as usize - 1)
        .expect("clustering action index within leader count")
}

/// Inverse of [`clustering_action_leader`].
pub fn clustering_leader_action(leader_count: usize, current: LeaderId, target: LeaderId) -> u16 {
    if target == current {
        return 0;
    }
    (0..leader_count)
        .filter(|&m| m != current)
        .position(|m| m == target)
        .expect("target leader exists") as u16
        + 1
}

// --- masks ------------------------------------------------------------------

/// Legal refuel actions. Callers force the singleton cases (battery safety,
/// depot re-entry, keeping one leader airborne) through this set.
pub fn refuel_mask(forced_stay: bool, forced_return: bool) -> Vec<u16> {
    match (forced_stay, forced_return) {
        (true, false) => vec![REFUEL_STAY],
        (false, true) => vec![REFUEL_RETURN],
        _ => vec![REFUEL_STAY, REFUEL_RETURN],
    }
}

/// Legal moves for an airborne leader: stay on the region, avoid every
/// other leader's claimed large grid.
pub fn leader_move_mask(world: &World, m: LeaderId) -> Vec<u16> {
    let leader = &world.leaders[m];
    if leader.at_depot {
        return vec![MOVE_HOLD];
    }
    let mut legal = Vec::with_capacity(4);
    for a in 0..4u16 {
        if let Some(target) = Move::from_action(a).apply(leader.cell) {
            if !world.geometry.contains_large(target) {
                continue;
            }
            let occupied = world
                .leaders
                .iter()
                .any(|other| other.id != m && other.cell == target);
            if !occupied {
                legal.push(a);
            }
        }
    }
    if legal.is_empty() {
        legal.push(MOVE_HOLD);
    }
    legal
}

/// Legal clustering actions for a follower: airborne leaders only, never
/// strand the current swarm, never overfill the target swarm.
pub fn clustering_mask(world: &World, n: FollowerId) -> Vec<u16> {
    let current = world.followers[n].leader;
    let leader_count = world.leaders.len();
    let any_airborne = world.leaders.iter().any(|l| !l.at_depot);
    let capacity = world.geometry.swarm_capacity();
    let mut legal = Vec::new();
    if !world.leaders[current].at_depot || !any_airborne {
        legal.push(0);
    }
    let current_airborne = !world.leaders[current].at_depot;
    let current_size = world.swarm_size(current);
    for action in 1..leader_count as u16 {
        let target = clustering_action_leader(leader_count, current, action);
        if world.leaders[target].at_depot {
            continue;
        }
        if current_airborne && current_size <= 1 {
            continue; // leaving would strand the current leader
        }
        if world.swarm_size(target) + 1 > capacity {
            continue;
        }
        legal.push(action);
    }
    if legal.is_empty() {
        legal.push(0);
    }
    legal
}

/// Legal moves for a follower: stay inside the containment region (the
/// assigned leader's large grid, or the whole region when `roam_free`) and
/// avoid small grids claimed by other followers.
pub fn follower_move_mask(world: &World, n: FollowerId, roam_free: bool) -> Vec<u16> {
    let f = &world.followers[n];
    if !roam_free && world.leaders[f.leader].at_depot {
        return vec![MOVE_HOLD];
    }
    let mut legal = Vec::with_capacity(4);
    for a in 0..4u16 {
        if let Some(target) = Move::from_action(a).apply(f.cell) {
            if !follower_cell_allowed(world, n, target, roam_free) {
                continue;
            }
            let occupied = world
                .followers
                .iter()
                .any(|other| other.id != n && other.cell == target);
            if !occupied {
                legal.push(a);
            }
        }
    }
    if legal.is_empty() {
        legal.push(MOVE_HOLD);
    }
    legal
}

/// Containment test for a candidate follower cell.
pub fn follower_cell_allowed(
    world: &World,
    n: FollowerId,
    cell: GridPos,
    roam_free: bool,
) -> bool {
    if !world.geometry.contains_small(cell) {
        return false;
    }
    if roam_free {
        return true;
    }
    let leader = &world.leaders[world.followers[n].leader];
    !leader.at_depot && world.geometry.small_in_large(cell, leader.cell)
}

pub fn delegation_mask() -> Vec<u16> {
    vec![DELEGATE, KEEP_LOCAL]
}

/// Task types a delegating follower forwards: everything it cannot serve
/// locally.
pub fn delegated_types(world: &World, n: FollowerId) -> AppSet {
    let f = &world.followers[n];
    AppSet::from_types((0..world.config.task_types).filter(|c: &TaskType| !f.apps.contains(*c)))
}

// --- rewards ----------------------------------------------------------------

/// Penalty when the fleet's airborne application coverage breaks.
pub const COVERAGE_PENALTY: f64 = -10.0;

/// Whether every task type is installed on at least one covering leader.
/// The default counts airborne leaders; `strict` keeps the alternative that
/// counts leaders at the depot instead.
pub fn coverage_ok(world: &World, strict: bool) -> bool {
    let mut covered = AppSet::empty();
    for l in &world.leaders {
        let counts = if strict { l.at_depot } else { !l.at_depot };
        if counts {
            covered = covered.union(l.apps);
        }
    }
    (0..world.config.task_types).all(|c| covered.contains(c))
}

/// Refuel reward: the coverage penalty dominates, otherwise returning pays
/// its indicator.
pub fn refuel_reward(coverage_violated: bool, returned: bool) -> f64 {
    if coverage_violated {
        COVERAGE_PENALTY
    } else if returned {
        1.0
    } else {
        0.0
    }
}

/// Application placement reward: bits this leader has computed so far in
/// the episode.
pub fn app_placement_reward(cumulative_bits: f64) -> f64 {
    cumulative_bits
}

/// Leader movement reward: swarm throughput per joule of the leader's own
/// slot spend.
pub fn leader_move_reward(world: &World, ledger: &SlotLedger, m: LeaderId, spent_j: f64) -> f64 {
    let swarm_bits: f64 = world
        .swarm_members(m)
        .map(|f| ledger.followers[f.id].task_bits)
        .sum::<f64>()
        + ledger.leaders[m].task_bits;
    if swarm_bits == 0.0 || spent_j <= 0.0 {
        return 0.0;
    }
    swarm_bits / spent_j
}

/// Clustering reward: the shared slot-level energy efficiency.
pub fn clustering_reward(ledger: &SlotLedger) -> f64 {
    ledger.efficiency
}

/// Follower movement reward: own throughput over own slot energy including
/// delegation airtime.
pub fn follower_move_reward(world: &World, ledger: &SlotLedger, n: FollowerId) -> f64 {
    let slot = &ledger.followers[n];
    if slot.task_bits == 0.0 {
        return 0.0;
    }
    let denom = world.config.follower_tx_w * slot.delegation_tx_s()
        + slot.compute_j
        + slot.propulsion_j;
    if denom <= 0.0 {
        return 0.0;
    }
    slot.task_bits / denom
}

/// Delegation reward, summed over the active delegated types; without any
/// active delegation it collapses to the compute-only ratio against the
/// current leader.
pub fn delegation_reward(world: &World, ledger: &SlotLedger, n: FollowerId) -> f64 {
    let cfg = &world.config;
    let slot = &ledger.followers[n];
    let leader_slot = &ledger.leaders[world.followers[n].leader];
    let own_compute = cfg.cap_coeff * cfg.follower_rate_bps.powi(2) * slot.task_bits;
    let leader_compute = cfg.cap_coeff * cfg.leader_rate_bps.powi(2) * leader_slot.task_bits;
    let numerator = slot.task_bits + leader_slot.task_bits;
    if slot.delegation_tx.is_empty() {
        let denom = own_compute + leader_compute;
        return if denom > 0.0 { numerator / denom } else { 0.0 };
    }
    slot.delegation_tx
        .iter()
        .map(|(_, t)| {
            let denom = cfg.follower_tx_w * t + own_compute + leader_compute;
            if denom > 0.0 {
                numerator / denom
            } else {
                0.0
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{FollowerSlot, LeaderSlot};
    use crate::world::{build_world, SimConfig};
    use approx::assert_relative_eq;

    fn world() -> World {
        build_world(&SimConfig::default(), 7).unwrap()
    }

    #[test]
    fn refuel_state_tracks_energy_levels() {
        let mut w = world();
        let s1 = refuel_state(&w);
        w.leaders[1].energy_j -= 2.0 * w.config.energy_unit_j;
        let s2 = refuel_state(&w);
        assert_ne!(s1, s2);
        assert_eq!(s2, refuel_state(&w));
    }

    #[test]
    fn depot_leaders_encode_as_sentinel() {
        let mut w = world();
        let s1 = leader_move_state(&w);
        w.leaders[0].at_depot = true;
        let s2 = leader_move_state(&w);
        assert_ne!(s1, s2);
    }

    #[test]
    fn app_loadout_enumeration_is_a_bijection() {
        let (n, k) = (6u16, 3u16);
        let count = app_choice_count(n, k);
        assert_eq!(count, 20);
        let mut seen = std::collections::HashSet::new();
        let mut prev_bits: Option<Vec<u16>> = None;
        for a in 0..count as u16 {
            let set = app_loadout(a, n, k);
            assert_eq!(set.len(), k as u32);
            assert!(set.iter().all(|t| t < n));
            assert_eq!(app_loadout_rank(set, n, k), a);
            assert!(seen.insert(set.0));
            let bits: Vec<u16> = set.iter().collect();
            if let Some(prev) = prev_bits {
                assert!(prev < bits, "lexicographic order broken at {a}");
            }
            prev_bits = Some(bits);
        }
    }

    #[test]
    fn reference_config_has_210_loadouts() {
        assert_eq!(app_choice_count(10, 6), 210);
        assert_eq!(
            GameKind::AppPlacement.action_count(&SimConfig::default()),
            210
        );
    }

    #[test]
    fn corner_leader_has_two_moves() {
        let mut w = world();
        w.leaders[0].cell = GridPos::new(0, 0);
        // park the others far away
        w.leaders[1].cell = GridPos::new(3, 3);
        w.leaders[2].cell = GridPos::new(4, 4);
        let legal = leader_move_mask(&w, 0);
        assert_eq!(legal.len(), 2);
        assert!(!legal.contains(&MOVE_HOLD));
    }

    #[test]
    fn boxed_in_leader_falls_back_to_hold() {
        let cfg = SimConfig {
            leaders: 1,
            followers: 1,
            region_side_m: 500.0,
            large_grid_m: 500.0,
            small_grid_m: 100.0,
            devices: 0,
            ..SimConfig::default()
        };
        let w = build_world(&cfg, 1).unwrap();
        assert_eq!(leader_move_mask(&w, 0), vec![MOVE_HOLD]);
    }

    #[test]
    fn occupied_neighbor_grid_is_masked() {
        let mut w = world();
        w.leaders[0].cell = GridPos::new(2, 2);
        w.leaders[1].cell = GridPos::new(2, 3); // due north
        w.leaders[2].cell = GridPos::new(0, 0);
        let legal = leader_move_mask(&w, 0);
        assert!(!legal.contains(&0), "north should be masked: {legal:?}");
        assert_eq!(legal.len(), 3);
    }

    #[test]
    fn single_leader_clustering_is_forced() {
        let cfg = SimConfig {
            leaders: 1,
            followers: 2,
            ..SimConfig::default()
        };
        let w = build_world(&cfg, 1).unwrap();
        assert_eq!(clustering_mask(&w, 0), vec![0]);
        assert_eq!(clustering_action_leader(1, 0, 0), 0);
    }

    #[test]
    fn clustering_action_mapping_round_trips() {
        for current in 0..4usize {
            for target in 0..4usize {
                let a = clustering_leader_action(4, current, target);
                assert_eq!(clustering_action_leader(4, current, a), target);
            }
        }
    }

    #[test]
    fn depot_leaders_are_excluded_from_clustering() {
        let mut w = world();
        let target = w.followers[0].leader;
        w.leaders[target].at_depot = true;
        for n in 0..w.followers.len() {
            let legal = clustering_mask(&w, n);
            for &a in &legal {
                let m = clustering_action_leader(w.leaders.len(), w.followers[n].leader, a);
                if w.followers[n].leader != m {
                    assert!(!w.leaders[m].at_depot);
                }
            }
            if w.followers[n].leader == target {
                // must leave: keep is not legal while airborne leaders exist
                assert!(!legal.contains(&0), "{legal:?}");
            }
        }
    }

    #[test]
    fn last_member_cannot_strand_its_leader() {
        let cfg = SimConfig {
            leaders: 2,
            followers: 2,
            ..SimConfig::default()
        };
        let w = build_world(&cfg, 1).unwrap();
        // each swarm has exactly one member; switching would strand
        for n in 0..2 {
            assert_eq!(clustering_mask(&w, n), vec![0]);
        }
    }

    #[test]
    fn full_swarm_rejects_new_members() {
        let cfg = SimConfig {
            leaders: 2,
            followers: 5,
            region_side_m: 800.0,
            large_grid_m: 400.0,
            small_grid_m: 200.0, // capacity 4 per swarm
            ..SimConfig::default()
        };
        let w = build_world(&cfg, 2).unwrap();
        // follower 1 is in swarm 1 (round-robin); swarm 0 holds 3 of 4 slots.
        // Fill swarm 0 to capacity by moving follower 1 over.
        let mut w = w;
        w.followers[1].leader = 0;
        // follower 3 (swarm 1) now may not join the full swarm 0.
        let legal = clustering_mask(&w, 3);
        assert_eq!(legal, vec![0], "swarm 0 is full: {legal:?}");
    }

    #[test]
    fn edge_follower_moves_stay_contained() {
        let w = world();
        for n in 0..w.followers.len() {
            for &a in &follower_move_mask(&w, n, false) {
                if a == MOVE_HOLD {
                    continue;
                }
                let target = Move::from_action(a).apply(w.followers[n].cell).unwrap();
                assert!(w
                    .geometry
                    .small_in_large(target, w.leaders[w.followers[n].leader].cell));
            }
        }
    }

    #[test]
    fn follower_of_depot_leader_holds() {
        let mut w = world();
        let m = w.followers[0].leader;
        w.leaders[m].at_depot = true;
        assert_eq!(follower_move_mask(&w, 0, false), vec![MOVE_HOLD]);
        // roaming mode ignores the leader entirely
        assert_ne!(follower_move_mask(&w, 0, true), vec![MOVE_HOLD]);
    }

    #[test]
    fn roaming_followers_use_the_whole_region() {
        let mut w = world();
        w.followers[0].cell = GridPos::new(0, 0);
        let legal = follower_move_mask(&w, 0, true);
        // corner: north and east only (unless occupied)
        assert!(legal.len() <= 2);
        for &a in &legal {
            assert_ne!(a, MOVE_HOLD);
        }
    }

    #[test]
    fn delegated_types_are_the_missing_apps() {
        let w = world();
        let f = &w.followers[0];
        let d = delegated_types(&w, 0);
        for c in 0..w.config.task_types {
            assert_eq!(d.contains(c), !f.apps.contains(c));
        }
    }

    #[test]
    fn coverage_follows_airborne_union() {
        let mut w = world();
        assert!(coverage_ok(&w, false));
        // send every leader carrying some type away
        let c: TaskType = 5;
        let carriers: Vec<usize> = w
            .leaders
            .iter()
            .filter(|l| l.apps.contains(c))
            .map(|l| l.id)
            .collect();
        assert!(!carriers.is_empty());
        for m in carriers {
            w.leaders[m].at_depot = true;
        }
        assert!(!coverage_ok(&w, false));
        // the strict variant counts exactly the opposite side
        let strict_union = w
            .leaders
            .iter()
            .filter(|l| l.at_depot)
            .fold(AppSet::empty(), |acc, l| acc.union(l.apps));
        assert_eq!(
            coverage_ok(&w, true),
            (0..w.config.task_types).all(|c| strict_union.contains(c))
        );
    }

    #[test]
    fn coverage_matches_set_union_oracle() {
        let mut rng = crate::rng_stream(21, 5);
        use rand::Rng;
        for _ in 0..200 {
            let mut w = world();
            for l in &mut w.leaders {
                l.at_depot = rng.gen_bool(0.4);
                l.apps = AppSet::from_types((0..10u16).filter(|_| rng.gen_bool(0.5)));
            }
            let oracle = {
                let mut union = AppSet::empty();
                for l in w.leaders.iter().filter(|l| !l.at_depot) {
                    union = union.union(l.apps);
                }
                (0..w.config.task_types).all(|c| union.contains(c))
            };
            assert_eq!(coverage_ok(&w, false), oracle);
        }
    }

    #[test]
    fn refuel_reward_cases() {
        assert_eq!(refuel_reward(true, true), -10.0);
        assert_eq!(refuel_reward(true, false), -10.0);
        assert_eq!(refuel_reward(false, true), 1.0);
        assert_eq!(refuel_reward(false, false), 0.0);
    }

    #[test]
    fn leader_move_reward_example() {
        let w = world();
        let m = 0;
        let mut ledger = SlotLedger {
            leaders: vec![LeaderSlot::default(); 3],
            followers: vec![FollowerSlot::default(); 9],
            ..SlotLedger::default()
        };
        ledger.leaders[m].task_bits = 19e6;
        for f in w.swarm_members(m) {
            ledger.followers[f.id].task_bits = 10e6;
        }
        // 19 + 3 * 10 = 49 Mbit over 9000 J
        assert_relative_eq!(
            leader_move_reward(&w, &ledger, m, 9000.0),
            49e6 / 9000.0
        );
        // zero swarm output -> zero reward
        let empty = SlotLedger {
            leaders: vec![LeaderSlot::default(); 3],
            followers: vec![FollowerSlot::default(); 9],
            ..SlotLedger::default()
        };
        assert_eq!(leader_move_reward(&w, &empty, m, 9000.0), 0.0);
    }

    #[test]
    fn follower_move_reward_example() {
        let w = world();
        let mut ledger = SlotLedger {
            leaders: vec![LeaderSlot::default(); 3],
            followers: vec![FollowerSlot::default(); 9],
            ..SlotLedger::default()
        };
        ledger.followers[0].task_bits = 15e6;
        ledger.followers[0].compute_j = 60.0;
        ledger.followers[0].propulsion_j = 4200.0;
        // delegation airtime of 0.25 s at 0.2 W = 0.05 J
        ledger.followers[0].delegation_tx = vec![(3, 0.25)];
        let r = follower_move_reward(&w, &ledger, 0);
        assert_relative_eq!(r, 15e6 / 4260.05, epsilon = 1e-6);
        // no throughput -> zero
        ledger.followers[0].task_bits = 0.0;
        assert_eq!(follower_move_reward(&w, &ledger, 0), 0.0);
    }

    #[test]
    fn clustering_reward_is_shared() {
        let ledger = SlotLedger {
            efficiency: 4545.0,
            ..SlotLedger::default()
        };
        assert_eq!(clustering_reward(&ledger), 4545.0);
    }

    #[test]
    fn delegation_reward_modes() {
        let w = world();
        let cfg = &w.config;
        let mut ledger = SlotLedger {
            leaders: vec![LeaderSlot::default(); 3],
            followers: vec![FollowerSlot::default(); 9],
            ..SlotLedger::default()
        };
        let m = w.followers[0].leader;
        ledger.followers[0].task_bits = 8e6;
        ledger.leaders[m].task_bits = 10e6;

        // no active delegation: compute-only ratio
        let own = cfg.cap_coeff * cfg.follower_rate_bps.powi(2) * 8e6;
        let lead = cfg.cap_coeff * cfg.leader_rate_bps.powi(2) * 10e6;
        assert_relative_eq!(
            delegation_reward(&w, &ledger, 0),
            18e6 / (own + lead),
            epsilon = 1e-9
        );

        // one active delegated type
        ledger.followers[0].delegation_tx = vec![(3, 0.25)];
        let denom = cfg.follower_tx_w * 0.25 + own + lead;
        assert_relative_eq!(delegation_reward(&w, &ledger, 0), 18e6 / denom, epsilon = 1e-9);

        // nothing computed anywhere -> zero
        let idle = SlotLedger {
            leaders: vec![LeaderSlot::default(); 3],
            followers: vec![FollowerSlot::default(); 9],
            ..SlotLedger::default()
        };
        assert_eq!(delegation_reward(&w, &idle, 0), 0.0);
    }
}
