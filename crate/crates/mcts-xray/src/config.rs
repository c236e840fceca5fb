//! `key = value` files for the driving environment.
//!
//! ```text
//! # three lanes, denser traffic
//! lanes = 3
//! obstacle_density = 0.25
//! drift = true
//! ```
//!
//! Keys are the [`EnvConfig`] field names. Unlisted keys keep the value of
//! the base configuration; unknown keys are errors.

use std::str::FromStr;

use mcts_xray_core::env::EnvConfig;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn set<T: FromStr>(slot: &mut T, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
    *slot = value.parse().map_err(|_| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
    })?;
    Ok(())
}

/// Applies the settings in `text` on top of `base`.
pub fn parse(text: &str, base: EnvConfig) -> Result<EnvConfig, ConfigError> {
    let mut c = base;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "lanes" => set(&mut c.lanes, line, key, value)?,
            "max_speed" => set(&mut c.max_speed, line, key, value)?,
            "horizon" => set(&mut c.horizon, line, key, value)?,
            "obstacle_seed" => set(&mut c.obstacle_seed, line, key, value)?,
            "obstacle_density" => set(&mut c.obstacle_density, line, key, value)?,
            "clear_start" => set(&mut c.clear_start, line, key, value)?,
            "start_lane" => set(&mut c.start_lane, line, key, value)?,
            "start_speed" => set(&mut c.start_speed, line, key, value)?,
            "speed_reward" => set(&mut c.speed_reward, line, key, value)?,
            "harsh_penalty" => set(&mut c.harsh_penalty, line, key, value)?,
            "collision_penalty" => set(&mut c.collision_penalty, line, key, value)?,
            "drift" => set(&mut c.drift, line, key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    c.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(c)
}
