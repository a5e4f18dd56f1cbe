//! Wireless layer: log-distance path loss, uplink and delegation SINR, and
//! transfer times.
//!
//! Noise enters as a power: the configured spectral density integrated over
//! the shared bandwidth. Only devices with an active request this slot
//! contribute uplink interference, and a device interferes solely at its own
//! serving follower (per-small-grid channel).

use thiserror::Error;

use crate::world::{DemandMatrix, DeviceId, FollowerId, LeaderId, TaskType, World};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("path loss undefined at zero distance")]
    ZeroDistance,
    #[error("device {device} is not covered by follower {follower}")]
    NotCovered {
        device: DeviceId,
        follower: FollowerId,
    },
    #[error("leader {0} is at the depot")]
    LeaderAtDepot(LeaderId),
}

/// Parameters of the log-distance path loss model and the noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub pathloss_exp: f64,
    /// Path loss at 1 m, dB.
    pub ref_db: f64,
    /// Noise power spectral density, dBm/Hz.
    pub noise_dbm_hz: f64,
    pub bandwidth_hz: f64,
}

impl ChannelParams {
    pub fn from_config(cfg: &crate::world::SimConfig) -> Self {
        ChannelParams {
            pathloss_exp: cfg.pathloss_exp,
            ref_db: cfg.pathloss_ref_db(),
            noise_dbm_hz: cfg.noise_dbm_hz,
            bandwidth_hz: cfg.bandwidth_hz,
        }
    }

    /// Noise power over the shared band, watts.
    pub fn noise_w(&self) -> f64 {
        dbm_to_w(self.noise_dbm_hz) * self.bandwidth_hz
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Log-distance path loss in dB between two points.
pub fn path_loss_db(
    tx: [f64; 3],
    rx: [f64; 3],
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    let d = crate::world::distance(tx, rx);
    if d <= 0.0 {
        return Err(ChannelError::ZeroDistance);
    }
    Ok(params.ref_db + 10.0 * params.pathloss_exp * d.log10())
}

fn received_w(tx_w: f64, loss_db: f64) -> f64 {
    tx_w * 10f64.powf(-loss_db / 10.0)
}

/// Uplink SINR of device `k` at its serving follower `n`. Interference comes
/// from the other covered devices that are requesting this slot.
pub fn sinr_device_uplink(
    world: &World,
    n: FollowerId,
    k: DeviceId,
    demand: &DemandMatrix,
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    let covered = world.coverage_set(n);
    if !covered.contains(&k) {
        return Err(ChannelError::NotCovered {
            device: k,
            follower: n,
        });
    }
    let rx = world.follower_position(n);
    let p = world.config.device_tx_w;
    let signal = received_w(p, path_loss_db(world.device_position(k), rx, params)?);
    let mut interference = 0.0;
    for &i in covered {
        if i != k && demand.request_of(i).is_some() {
            interference += received_w(p, path_loss_db(world.device_position(i), rx, params)?);
        }
    }
    Ok(signal / (interference + params.noise_w()))
}

/// SINR of follower `n`'s delegation uplink at its leader; interference-free.
pub fn sinr_delegation(
    world: &World,
    m: LeaderId,
    n: FollowerId,
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    if world.leaders[m].at_depot {
        return Err(ChannelError::LeaderAtDepot(m));
    }
    let loss = path_loss_db(
        world.follower_position(n),
        world.leader_position(m),
        params,
    )?;
    Ok(received_w(world.config.follower_tx_w, loss) / params.noise_w())
}

/// Shannon-capacity transfer time for `bits` at the given SINR.
pub fn transfer_time_s(bits: f64, sinr: f64, bandwidth_hz: f64) -> f64 {
    bits / (bandwidth_hz * (1.0 + sinr).log2())
}

/// Time for device `k` to offload a requested task of type `c` to follower
/// `n`; zero when the device is not requesting that type.
pub fn offload_time(
    world: &World,
    n: FollowerId,
    k: DeviceId,
    c: TaskType,
    demand: &DemandMatrix,
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    if !demand.requested(k, c) {
        return Ok(0.0);
    }
    let sinr = sinr_device_uplink(world, n, k, demand, params)?;
    Ok(transfer_time_s(
        world.config.task_bits(k, c),
        sinr,
        params.bandwidth_hz,
    ))
}

/// Time for follower `n` to forward a delegated task of type `c` to leader
/// `m`; zero unless the follower is in swarm `m`, delegates `c`, and the
/// leader is airborne.
pub fn delegation_time(
    world: &World,
    m: LeaderId,
    n: FollowerId,
    c: TaskType,
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    let follower = &world.followers[n];
    if world.leaders[m].at_depot || follower.leader != m || !follower.delegated.contains(c) {
        return Ok(0.0);
    }
    let sinr = sinr_delegation(world, m, n, params)?;
    Ok(transfer_time_s(
        world.config.task_bits(n, c),
        sinr,
        params.bandwidth_hz,
    ))
}
