//! Per-slot physics: propulsion power, hover windows, task throughput,
//! energy bookkeeping and the energy-efficiency objective.
//!
//! `evaluate_slot` is the single evaluation path: given a world whose
//! decision variables (positions, depot flags, assignments, delegations) are
//! already committed for the slot, plus that slot's demand, it produces the
//! complete [`SlotLedger`]. Rewards and metrics are derived from the ledger
//! without re-touching the channel.

use crate::channel::{sinr_delegation, transfer_time_s, ChannelParams};
use crate::world::{DemandMatrix, FollowerId, LeaderId, SimConfig, TaskType, World};

/// Rotary-wing propulsion power model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropulsionParams {
    /// Blade profile power in hover, W.
    pub blade_power_w: f64,
    /// Induced power in hover, W.
    pub induced_power_w: f64,
    /// Rotor tip speed, m/s.
    pub tip_speed_mps: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub hover_induced_mps: f64,
    /// Fuselage drag ratio.
    pub drag_ratio: f64,
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Rotor solidity.
    pub rotor_solidity: f64,
    /// Rotor disc area, m^2.
    pub rotor_area_m2: f64,
}

impl Default for PropulsionParams {
    fn default() -> Self {
        PropulsionParams {
            blade_power_w: 79.86,
            induced_power_w: 88.63,
            tip_speed_mps: 120.0,
            hover_induced_mps: 4.03,
            drag_ratio: 0.6,
            air_density: 1.225,
            rotor_solidity: 0.05,
            rotor_area_m2: 0.503,
        }
    }
}

impl PropulsionParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("P0", self.blade_power_w),
            ("Pi", self.induced_power_w),
            ("U_tip", self.tip_speed_mps),
            ("v0", self.hover_induced_mps),
            ("d0", self.drag_ratio),
            ("rho", self.air_density),
            ("s_rotor", self.rotor_solidity),
            ("rotor_area", self.rotor_area_m2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!(
                    "propulsion parameter {name} must be strictly positive (got {v})"
                ));
            }
        }
        Ok(())
    }
}

/// Propulsion power at forward speed `v`: blade profile + induced + parasite
/// terms of the rotary-wing model.
pub fn propulsion_power_w(v: f64, p: &PropulsionParams) -> f64 {
    assert!(v >= 0.0, "speed must be nonnegative, got {v}");
    let tip = p.tip_speed_mps;
    let v0 = p.hover_induced_mps;
    let blade = p.blade_power_w * (1.0 + 3.0 * v * v / (tip * tip));
    let inner = (1.0 + v.powi(4) / (4.0 * v0.powi(4))).sqrt() - v * v / (2.0 * v0 * v0);
    let induced = p.induced_power_w * inner.max(0.0).sqrt();
    let parasite =
        0.5 * p.drag_ratio * p.air_density * p.rotor_solidity * p.rotor_area_m2 * v.powi(3);
    blade + induced + parasite
}

/// Time follower `n` spends moving this slot: one small-grid hop plus the
/// detour to a newly joined leader.
pub fn follower_travel_s(world: &World, n: FollowerId) -> f64 {
    let f = &world.followers[n];
    let mut t = world.config.small_grid_m / world.config.speed_mps;
    if world.prev_assignment[n] != f.leader {
        t += world.leader_follower_distance(f.leader, n) / world.config.speed_mps;
    }
    t
}

/// Hover window of follower `n`, clamped at zero.
pub fn follower_hover_s(world: &World, n: FollowerId) -> f64 {
    (world.config.slot_s - follower_travel_s(world, n)).max(0.0)
}

/// Hover window of leader `m`; zero at the depot.
pub fn leader_hover_s(world: &World, m: LeaderId) -> f64 {
    if world.leaders[m].at_depot {
        0.0
    } else {
        (world.config.slot_s - world.config.large_grid_m / world.config.speed_mps).max(0.0)
    }
}

/// One leader's slot totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LeaderSlot {
    /// Bits processed this slot.
    pub task_bits: f64,
    /// Delegated demand addressed to this leader (app-gated), bits.
    pub demand_bits: f64,
    pub compute_j: f64,
    pub propulsion_j: f64,
    pub return_j: f64,
    pub hover_s: f64,
    /// Tightest hover window across the swarm's followers.
    pub swarm_hover_s: f64,
    /// Transfer-window edge over the active delegation times.
    pub delegation_window_s: f64,
}

impl LeaderSlot {
    pub fn energy_j(&self) -> f64 {
        self.compute_j + self.propulsion_j + self.return_j
    }
}

/// One follower's slot totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FollowerSlot {
    pub task_bits: f64,
    /// Demand retained for local processing (app-gated), bits.
    pub demand_bits: f64,
    pub compute_j: f64,
    pub propulsion_j: f64,
    pub hover_s: f64,
    pub travel_s: f64,
    /// Transfer-window edge over the feasible offload times.
    pub offload_window_s: f64,
    /// Active delegation uplink times by task type.
    pub delegation_tx: Vec<(TaskType, f64)>,
    /// Requested bits whose offload could not finish within the hover window.
    pub infeasible_bits: f64,
}

impl FollowerSlot {
    pub fn energy_j(&self) -> f64 {
        self.compute_j + self.propulsion_j
    }

    /// Total delegation airtime this slot, seconds.
    pub fn delegation_tx_s(&self) -> f64 {
        self.delegation_tx.iter().map(|(_, t)| t).sum()
    }
}

/// Everything measured in one slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotLedger {
    pub leaders: Vec<LeaderSlot>,
    pub followers: Vec<FollowerSlot>,
    pub efficiency: f64,
    pub requested_bits: f64,
    pub served_bits: f64,
    pub dropped_bits: f64,
    pub total_energy_j: f64,
}

/// Bits per joule for the slot; zero when nothing was spent.
pub fn energy_efficiency(ledger: &SlotLedger) -> f64 {
    let bits: f64 = ledger.leaders.iter().map(|l| l.task_bits).sum::<f64>()
        + ledger.followers.iter().map(|f| f.task_bits).sum::<f64>();
    let energy: f64 = ledger.leaders.iter().map(|l| l.energy_j()).sum::<f64>()
        + ledger.followers.iter().map(|f| f.energy_j()).sum::<f64>();
    if energy > 0.0 {
        bits / energy
    } else {
        0.0
    }
}

fn merge_window(current: Option<f64>, t: f64, take_max: bool) -> Option<f64> {
    Some(match current {
        None => t,
        Some(w) => {
            if take_max {
                w.max(t)
            } else {
                w.min(t)
            }
        }
    })
}

/// Evaluates one committed slot: channel, transfer windows, throughput,
/// energies and the efficiency objective.
pub fn evaluate_slot(world: &World, demand: &DemandMatrix) -> SlotLedger {
    let cfg = &world.config;
    let chan = ChannelParams::from_config(cfg);
    let noise = chan.noise_w();
    let take_max = cfg.offload_window_max;
    let p = &cfg.propulsion;
    let cruise_w = propulsion_power_w(cfg.speed_mps, p);
    let hover_w = propulsion_power_w(0.0, p);

    let mut leaders: Vec<LeaderSlot> = vec![LeaderSlot::default(); world.leaders.len()];
    let mut followers: Vec<FollowerSlot> = vec![FollowerSlot::default(); world.followers.len()];

    let mut requested_bits = 0.0;
    for k in 0..world.devices.len() {
        if let Some(c) = demand.request_of(k) {
            requested_bits += cfg.task_bits(k, c);
        }
    }

    // Follower side: offloads, local demand, delegated demand routing.
    for n in 0..world.followers.len() {
        let f = &world.followers[n];
        let slot = &mut followers[n];
        slot.travel_s = follower_travel_s(world, n);
        slot.hover_s = (cfg.slot_s - slot.travel_s).max(0.0);

        let rx = world.follower_position(n);
        let active: Vec<(usize, TaskType, f64)> = world
            .coverage_set(n)
            .iter()
            .filter_map(|&k| {
                demand.request_of(k).map(|c| {
                    let loss =
                        crate::channel::path_loss_db(world.device_position(k), rx, &chan)
                            .expect("device and follower never coincide");
                    (k, c, cfg.device_tx_w * 10f64.powf(-loss / 10.0))
                })
            })
            .collect();
        let total_rx: f64 = active.iter().map(|(_, _, r)| r).sum();

        let mut window = None;
        for &(k, c, r) in &active {
            let bits = cfg.task_bits(k, c);
            let gamma = r / (total_rx - r + noise);
            let t_off = transfer_time_s(bits, gamma, cfg.bandwidth_hz);
            if t_off >= slot.hover_s {
                slot.infeasible_bits += bits;
                continue;
            }
            window = merge_window(window, t_off, take_max);
            if f.delegated.contains(c) {
                let leader = &world.leaders[f.leader];
                if leader.apps.contains(c) {
                    leaders[f.leader].demand_bits += bits;
                }
            } else if f.apps.contains(c) {
                slot.demand_bits += bits;
            }
        }
        slot.offload_window_s = window.unwrap_or(0.0);
        let capacity = cfg.follower_rate_bps * (slot.hover_s - slot.offload_window_s).max(0.0);
        slot.task_bits = slot.demand_bits.min(capacity).max(0.0);
        slot.compute_j = cfg.cap_coeff * cfg.follower_rate_bps.powi(2) * slot.task_bits;
        slot.propulsion_j = cruise_w * slot.travel_s + hover_w * slot.hover_s;
    }

    // Delegation uplink times toward airborne leaders.
    let mut delegation_windows: Vec<Option<f64>> = vec![None; world.leaders.len()];
    for n in 0..world.followers.len() {
        let f = &world.followers[n];
        if f.delegated.is_empty() || world.leaders[f.leader].at_depot {
            continue;
        }
        let gamma = sinr_delegation(world, f.leader, n, &chan)
            .expect("leader is airborne and distinct from the follower");
        for c in f.delegated.iter() {
            let t = transfer_time_s(cfg.task_bits(n, c), gamma, cfg.bandwidth_hz);
            followers[n].delegation_tx.push((c, t));
            delegation_windows[f.leader] = merge_window(delegation_windows[f.leader], t, take_max);
        }
    }
    for (m, w) in delegation_windows.into_iter().enumerate() {
        leaders[m].delegation_window_s = w.unwrap_or(0.0);
    }

    // Leader side: throughput and energies.
    for m in 0..world.leaders.len() {
        let leader = &world.leaders[m];
        let slot = &mut leaders[m];
        slot.hover_s = leader_hover_s(world, m);
        if leader.at_depot {
            slot.task_bits = 0.0;
            slot.return_j = cruise_w * world.return_distance(m) / cfg.speed_mps;
            continue;
        }
        slot.swarm_hover_s = world
            .swarm_members(m)
            .map(|f| followers[f.id].hover_s)
            .fold(f64::INFINITY, f64::min);
        if !slot.swarm_hover_s.is_finite() {
            slot.swarm_hover_s = 0.0;
        }
        let capacity =
            cfg.leader_rate_bps * (slot.swarm_hover_s - slot.delegation_window_s).max(0.0);
        slot.task_bits = slot.demand_bits.min(capacity).max(0.0);
        slot.compute_j = cfg.cap_coeff * cfg.leader_rate_bps.powi(2) * slot.task_bits;
        slot.propulsion_j =
            cruise_w * cfg.large_grid_m / cfg.speed_mps + hover_w * slot.hover_s;
    }

    let mut ledger = SlotLedger {
        leaders,
        followers,
        efficiency: 0.0,
        requested_bits,
        served_bits: 0.0,
        dropped_bits: 0.0,
        total_energy_j: 0.0,
    };
    ledger.served_bits = ledger.leaders.iter().map(|l| l.task_bits).sum::<f64>()
        + ledger.followers.iter().map(|f| f.task_bits).sum::<f64>();
    ledger.dropped_bits = (ledger.requested_bits - ledger.served_bits).max(0.0);
    ledger.total_energy_j = ledger.leaders.iter().map(|l| l.energy_j()).sum::<f64>()
        + ledger.followers.iter().map(|f| f.energy_j()).sum::<f64>();
    ledger.efficiency = energy_efficiency(&ledger);
    ledger
}

/// Outcome of applying one slot's energy spend to the leader batteries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatteryReport {
    pub recharged: Vec<LeaderId>,
    /// Lowest battery observed after the spend, before any recharge.
    pub min_energy_j: f64,
    /// Slots where a battery would have gone negative (clamped).
    pub violations: usize,
}

/// Deducts each leader's slot energy and recharges leaders at the depot.
pub fn battery_step(world: &mut World, ledger: &SlotLedger) -> BatteryReport {
    let mut report = BatteryReport {
        min_energy_j: f64::INFINITY,
        ..BatteryReport::default()
    };
    for m in 0..world.leaders.len() {
        let spend = ledger.leaders[m].energy_j();
        let leader = &mut world.leaders[m];
        leader.energy_j -= spend;
        if leader.energy_j < -1e-9 {
            report.violations += 1;
        }
        leader.energy_j = leader.energy_j.max(0.0);
        report.min_energy_j = report.min_energy_j.min(leader.energy_j);
        if leader.at_depot {
            leader.energy_j = world.config.battery_j;
            report.recharged.push(m);
        }
    }
    if !report.min_energy_j.is_finite() {
        report.min_energy_j = 0.0;
    }
    report
}

/// Upper bound on what a leader can spend in one airborne slot.
pub fn leader_worst_slot_energy_j(cfg: &SimConfig) -> f64 {
    let p = &cfg.propulsion;
    propulsion_power_w(cfg.speed_mps, p) * cfg.large_grid_m / cfg.speed_mps
        + propulsion_power_w(0.0, p) * cfg.slot_s
        + cfg.cap_coeff * cfg.leader_rate_bps.powi(2) * cfg.leader_rate_bps * cfg.slot_s
}
