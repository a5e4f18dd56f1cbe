//! Flat `key = value` configuration files.
//!
//! Keys follow the simulation parameter names (`M`, `N`, `K`, `v`, `t`,
//! `B`, ...). Unknown keys are rejected, missing keys keep their defaults,
//! `#` starts a comment. `dump_config` writes every key back out so a
//! config round-trips bit-identically through dump/load.

use std::fs;
use std::path::Path;

use swarm_mec::world::ConfigError;
use swarm_mec::SimConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
    #[error("cannot read {path}: {err}")]
    Io { path: String, err: String },
}

/// Applies one `key = value` assignment to a config. Returns a message when
/// the key is unknown or the value does not parse.
pub fn apply_key(cfg: &mut SimConfig, key: &str, value: &str) -> Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("invalid value for {key}: '{value}'"))
    }
    fn flag(key: &str, value: &str) -> Result<bool, String> {
        match value {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(format!("invalid boolean for {key}: '{value}'")),
        }
    }
    match key {
        "M" => cfg.leaders = num(key, value)?,
        "N" => cfg.followers = num(key, value)?,
        "K" => cfg.devices = num(key, value)?,
        "C" => cfg.task_types = num(key, value)?,
        "S_L" => cfg.leader_app_slots = num(key, value)?,
        "S_F" => cfg.follower_app_slots = num(key, value)?,
        "region_side" => cfg.region_side_m = num(key, value)?,
        "l" => cfg.large_grid_m = num(key, value)?,
        "q" => cfg.small_grid_m = num(key, value)?,
        "H_L" => cfg.leader_alt_m = num(key, value)?,
        "H_F" => cfg.follower_alt_m = num(key, value)?,
        "v" => cfg.speed_mps = num(key, value)?,
        "t" => cfg.slot_s = num(key, value)?,
        "B" => cfg.bandwidth_hz = num(key, value)?,
        "carrier_f" => cfg.carrier_hz = num(key, value)?,
        "noise_psd" => cfg.noise_dbm_hz = num(key, value)?,
        "p_I" => cfg.device_tx_w = num(key, value)?,
        "p_F" => cfg.follower_tx_w = num(key, value)?,
        "p_L" => cfg.leader_tx_w = num(key, value)?,
        "f_F" => cfg.follower_rate_bps = num(key, value)?,
        "f_L" => cfg.leader_rate_bps = num(key, value)?,
        "xi" => cfg.cap_coeff = num(key, value)?,
        "kappa" => cfg.task_bits = num(key, value)?,
        "E_cap" => cfg.battery_j = num(key, value)?,
        "E_unit" => cfg.energy_unit_j = num(key, value)?,
        "demand_prob" => cfg.demand_prob = num(key, value)?,
        "depot_x" => cfg.depot_x_m = num(key, value)?,
        "depot_y" => cfg.depot_y_m = num(key, value)?,
        "T" => cfg.slots_per_episode = num(key, value)?,
        "LOOP" => cfg.episodes = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "pathloss_exponent" => cfg.pathloss_exp = num(key, value)?,
        "pathloss_ref_db" => {
            cfg.pathloss_ref_db = if value == "auto" {
                None
            } else {
                Some(num(key, value)?)
            }
        }
        "P0" => cfg.propulsion.blade_power_w = num(key, value)?,
        "Pi" => cfg.propulsion.induced_power_w = num(key, value)?,
        "U_tip" => cfg.propulsion.tip_speed_mps = num(key, value)?,
        "v0" => cfg.propulsion.hover_induced_mps = num(key, value)?,
        "d0" => cfg.propulsion.drag_ratio = num(key, value)?,
        "rho" => cfg.propulsion.air_density = num(key, value)?,
        "s_rotor" => cfg.propulsion.rotor_solidity = num(key, value)?,
        "rotor_area" => cfg.propulsion.rotor_area_m2 = num(key, value)?,
        "beta" => {
            let b: f64 = num(key, value)?;
            cfg.learn.beta_refuel = b;
            cfg.learn.beta_app_placement = b;
            cfg.learn.beta_leader_move = b;
            cfg.learn.beta_clustering = b;
            cfg.learn.beta_follower_move = b;
            cfg.learn.beta_delegation = b;
        }
        "beta_refuel" => cfg.learn.beta_refuel = num(key, value)?,
        "beta_apps" => cfg.learn.beta_app_placement = num(key, value)?,
        "beta_leader_move" => cfg.learn.beta_leader_move = num(key, value)?,
        "beta_clustering" => cfg.learn.beta_clustering = num(key, value)?,
        "beta_follower_move" => cfg.learn.beta_follower_move = num(key, value)?,
        "beta_delegation" => cfg.learn.beta_delegation = num(key, value)?,
        "sigma" => cfg.learn.discount = num(key, value)?,
        "eps_start" => cfg.learn.epsilon_start = num(key, value)?,
        "eps_end" => cfg.learn.epsilon_end = num(key, value)?,
        "offload_window_max" => cfg.offload_window_max = flag(key, value)?,
        "strict_coverage" => cfg.strict_coverage = flag(key, value)?,
        _ => return Err(format!("unknown key '{key}'")),
    }
    Ok(())
}

/// Splits a config line into a `(key, value)` pair; comments and blank
/// lines yield `None`.
pub fn split_line(line: &str) -> Result<Option<(&str, &str)>, String> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let body = body.trim();
    if body.is_empty() {
        return Ok(None);
    }
    let (key, value) = body
        .split_once('=')
        .ok_or_else(|| format!("expected 'key = value', got '{body}'"))?;
    Ok(Some((key.trim(), value.trim())))
}

/// Parses a complete config file: defaults overridden by assignments, then
/// fully validated.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigFileError> {
    let mut cfg = SimConfig::default();
    for (idx, line) in text.lines().enumerate() {
        let parsed = split_line(line).map_err(|msg| ConfigFileError::Parse {
            line: idx + 1,
            msg,
        })?;
        if let Some((key, value)) = parsed {
            apply_key(&mut cfg, key, value).map_err(|msg| ConfigFileError::Parse {
                line: idx + 1,
                msg,
            })?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SimConfig, ConfigFileError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigFileError::Io {
        path: path.display().to_string(),
        err: e.to_string(),
    })?;
    parse_config(&text)
}

/// Writes every parameter as `key = value`, one per line, in canonical
/// order.
pub fn dump_config(cfg: &SimConfig) -> String {
    let mut out = String::new();
    let mut push = |key: &str, value: String| {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    };
    push("M", cfg.leaders.to_string());
    push("N", cfg.followers.to_string());
    push("K", cfg.devices.to_string());
    push("C", cfg.task_types.to_string());
    push("S_L", cfg.leader_app_slots.to_string());
    push("S_F", cfg.follower_app_slots.to_string());
    push("region_side", cfg.region_side_m.to_string());
    push("l", cfg.large_grid_m.to_string());
    push("q", cfg.small_grid_m.to_string());
    push("H_L", cfg.leader_alt_m.to_string());
    push("H_F", cfg.follower_alt_m.to_string());
    push("v", cfg.speed_mps.to_string());
    push("t", cfg.slot_s.to_string());
    push("B", cfg.bandwidth_hz.to_string());
    push("carrier_f", cfg.carrier_hz.to_string());
    push("noise_psd", cfg.noise_dbm_hz.to_string());
    push("p_I", cfg.device_tx_w.to_string());
    push("p_F", cfg.follower_tx_w.to_string());
    push("p_L", cfg.leader_tx_w.to_string());
    push("f_F", cfg.follower_rate_bps.to_string());
    push("f_L", cfg.leader_rate_bps.to_string());
    push("xi", cfg.cap_coeff.to_string());
    push("kappa", cfg.task_bits.to_string());
    push("E_cap", cfg.battery_j.to_string());
    push("E_unit", cfg.energy_unit_j.to_string());
    push("demand_prob", cfg.demand_prob.to_string());
    push("depot_x", cfg.depot_x_m.to_string());
    push("depot_y", cfg.depot_y_m.to_string());
    push("T", cfg.slots_per_episode.to_string());
    push("LOOP", cfg.episodes.to_string());
    push("seed", cfg.seed.to_string());
    push("pathloss_exponent", cfg.pathloss_exp.to_string());
    push(
        "pathloss_ref_db",
        cfg.pathloss_ref_db
            .map(|v| v.to_string())
            .unwrap_or_else(|| "auto".to_string()),
    );
    push("P0", cfg.propulsion.blade_power_w.to_string());
    push("Pi", cfg.propulsion.induced_power_w.to_string());
    push("U_tip", cfg.propulsion.tip_speed_mps.to_string());
    push("v0", cfg.propulsion.hover_induced_mps.to_string());
    push("d0", cfg.propulsion.drag_ratio.to_string());
    push("rho", cfg.propulsion.air_density.to_string());
    push("s_rotor", cfg.propulsion.rotor_solidity.to_string());
    push("rotor_area", cfg.propulsion.rotor_area_m2.to_string());
    let learn = &cfg.learn;
    let betas = [
        learn.beta_refuel,
        learn.beta_app_placement,
        learn.beta_leader_move,
        learn.beta_clustering,
        learn.beta_follower_move,
        learn.beta_delegation,
    ];
    if betas.iter().all(|b| *b == betas[0]) {
        push("beta", betas[0].to_string());
    } else {
        push("beta_refuel", learn.beta_refuel.to_string());
        push("beta_apps", learn.beta_app_placement.to_string());
        push("beta_leader_move", learn.beta_leader_move.to_string());
        push("beta_clustering", learn.beta_clustering.to_string());
        push("beta_follower_move", learn.beta_follower_move.to_string());
        push("beta_delegation", learn.beta_delegation.to_string());
    }
    push("sigma", learn.discount.to_string());
    push("eps_start", learn.epsilon_start.to_string());
    push("eps_end", learn.epsilon_end.to_string());
    push("offload_window_max", cfg.offload_window_max.to_string());
    push("strict_coverage", cfg.strict_coverage.to_string());
    out
}
