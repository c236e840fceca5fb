//! A small lane/speed driving MDP with seven actions.
//!
//! The road is a grid of `lanes x track` cells with static obstacles sampled
//! once from a seed. Each step the vehicle picks one of seven actions, moves
//! forward by its new speed and collects `speed_reward * speed`, minus a
//! penalty for harsh actions. Driving through an obstacle cell ends the
//! episode with the collision penalty; so does reaching the horizon.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{Environment, RolloutEvaluator, SearchConfig, Transition};
use crate::tree::{ActionAlphabet, ActionId};

pub const ACCELERATE: ActionId = ActionId(0);
pub const ACCELERATE_HARSH: ActionId = ActionId(1);
pub const DECELERATE: ActionId = ActionId(2);
pub const DECELERATE_HARSH: ActionId = ActionId(3);
pub const RIGHT: ActionId = ActionId(4);
pub const LEFT: ActionId = ActionId(5);
pub const NONE: ActionId = ActionId(6);

pub const ACTION_NAMES: [&str; 7] = [
    "accelerate",
    "accelerate_harsh",
    "decelerate",
    "decelerate_harsh",
    "right",
    "left",
    "none",
];

/// Named presets accepted by [`EnvConfig::scenario`].
pub const SCENARIOS: [&str; 3] = ["highway", "curve", "merge"];

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid environment configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("action {action} is not valid in this state")]
    InvalidAction { action: usize },
    #[error("state is terminal")]
    Terminal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub lanes: u32,
    /// Number of speed levels; speeds range over `0..max_speed`.
    pub max_speed: u32,
    pub horizon: u32,
    pub obstacle_seed: u64,
    /// Probability that a cell holds an obstacle.
    pub obstacle_density: f64,
    /// Obstacle-free cells at the start of every lane.
    pub clear_start: u32,
    pub start_lane: u32,
    pub start_speed: u32,
    pub speed_reward: f64,
    pub harsh_penalty: f64,
    pub collision_penalty: f64,
    /// Obstacles creep forward at a per-lane speed (0 or 1) sampled from the
    /// obstacle seed.
    pub drift: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            lanes: 3,
            max_speed: 5,
            horizon: 20,
            obstacle_seed: 0,
            obstacle_density: 0.15,
            clear_start: 3,
            start_lane: 1,
            start_speed: 1,
            speed_reward: 0.1,
            harsh_penalty: 0.02,
            collision_penalty: 1.0,
            drift: false,
        }
    }
}

impl EnvConfig {
    pub fn scenario(name: &str) -> Option<Self> {
        let base = EnvConfig::default();
        match name {
            "highway" => Some(base),
            "curve" => Some(EnvConfig {
                max_speed: 4,
                obstacle_density: 0.2,
                ..base
            }),
            "merge" => Some(EnvConfig {
                lanes: 2,
                start_lane: 0,
                obstacle_density: 0.12,
                ..base
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.lanes < 1 {
            return Err(EnvError::InvalidConfig("lanes must be at least 1"));
        }
        if self.max_speed < 2 {
            return Err(EnvError::InvalidConfig("max_speed must be at least 2"));
        }
        if self.horizon < 1 {
            return Err(EnvError::InvalidConfig("horizon must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.obstacle_density) {
            return Err(EnvError::InvalidConfig("obstacle_density must lie in [0, 1]"));
        }
        if self.start_lane >= self.lanes {
            return Err(EnvError::InvalidConfig("start_lane out of range"));
        }
        if self.start_speed >= self.max_speed {
            return Err(EnvError::InvalidConfig("start_speed out of range"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EnvState {
    pub lane: u32,
    pub speed: u32,
    pub position: u32,
    pub step_index: u32,
    pub terminal: bool,
}

#[derive(Clone, Debug)]
pub struct LaneEnv {
    config: EnvConfig,
    track: u32,
    obstacles: Vec<bool>,
    drift: Vec<u32>,
}

impl LaneEnv {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let track = config.horizon * (config.max_speed - 1) + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(config.obstacle_seed);
        let mut obstacles = vec![false; (config.lanes * track) as usize];
        for lane in 0..config.lanes {
            for pos in config.clear_start..track {
                if rng.gen_bool(config.obstacle_density) {
                    obstacles[(lane * track + pos) as usize] = true;
                }
            }
        }
        let drift = (0..config.lanes)
            .map(|_| if config.drift { rng.gen_range(0..2) } else { 0 })
            .collect();
        Ok(LaneEnv {
            config,
            track,
            obstacles,
            drift,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn initial_state(&self) -> EnvState {
        EnvState {
            lane: self.config.start_lane,
            speed: self.config.start_speed,
            position: 0,
            step_index: 0,
            terminal: false,
        }
    }

    /// Whether cell `(lane, position)` is blocked at step `step_index`.
    pub fn is_obstacle(&self, lane: u32, position: u32, step_index: u32) -> bool {
        let shift = self.drift[lane as usize] * step_index;
        let Some(base) = position.checked_sub(shift) else {
            return false;
        };
        if base >= self.track {
            return false;
        }
        self.obstacles[(lane * self.track + base) as usize]
    }

    pub fn valid_actions(&self, state: &EnvState) -> Vec<ActionId> {
        if state.terminal {
            return Vec::new();
        }
        let top = self.config.max_speed - 1;
        let mut out = Vec::with_capacity(7);
        if state.speed < top {
            out.push(ACCELERATE);
        }
        if state.speed + 2 <= top {
            out.push(ACCELERATE_HARSH);
        }
        if state.speed >= 1 {
            out.push(DECELERATE);
        }
        if state.speed >= 2 {
            out.push(DECELERATE_HARSH);
        }
        if state.lane + 1 < self.config.lanes {
            out.push(RIGHT);
        }
        if state.lane > 0 {
            out.push(LEFT);
        }
        out.push(NONE);
        out
    }

    pub fn step(&self, state: &EnvState, action: ActionId) -> Result<Transition<EnvState>, EnvError> {
        if state.terminal {
            return Err(EnvError::Terminal);
        }
        if !self.valid_actions(state).contains(&action) {
            return Err(EnvError::InvalidAction {
                action: action.index(),
            });
        }
        let (mut lane, mut speed) = (state.lane, state.speed);
        let mut harsh = false;
        match action {
            ACCELERATE => speed += 1,
            ACCELERATE_HARSH => {
                speed += 2;
                harsh = true;
            }
            DECELERATE => speed -= 1,
            DECELERATE_HARSH => {
                speed -= 2;
                harsh = true;
            }
            RIGHT => lane += 1,
            LEFT => lane -= 1,
            _ => {}
        }
        let step_index = state.step_index + 1;
        let start = if lane != state.lane {
            state.position
        } else {
            state.position + 1
        };
        let position = state.position + speed;
        let collision = (start..=position).any(|p| self.is_obstacle(lane, p, step_index));
        let mut reward = self.config.speed_reward * speed as f64;
        if harsh {
            reward -= self.config.harsh_penalty;
        }
        if collision {
            reward -= self.config.collision_penalty;
        }
        let terminal = collision || step_index >= self.config.horizon;
        Ok(Transition {
            state: EnvState {
                lane,
                speed,
                position,
                step_index,
                terminal,
            },
            reward,
            terminal,
        })
    }

    pub fn alphabet() -> ActionAlphabet {
        ActionAlphabet::with_names(ACTION_NAMES.iter().map(|s| s.to_string()).collect::<Vec<String>>())
            .expect("seven actions")
    }
}

impl Environment for LaneEnv {
    type State = EnvState;

    fn alphabet(&self) -> ActionAlphabet {
        LaneEnv::alphabet()
    }

    fn valid_actions(&self, state: &EnvState) -> Vec<ActionId> {
        LaneEnv::valid_actions(self, state)
    }

    fn step(&self, state: &EnvState, action: ActionId) -> Transition<EnvState> {
        LaneEnv::step(self, state, action).expect("engine only takes valid actions")
    }

    fn is_terminal(&self, state: &EnvState) -> bool {
        state.terminal
    }
}

/// The default leaf evaluator for [`LaneEnv`] searches.
pub fn rollout_evaluator(config: &SearchConfig) -> RolloutEvaluator {
    RolloutEvaluator::from_config(config)
}
