//! Cart-pole dynamics (the 200-step benchmark variant), frame stacking and
//! Gaussian observation noise.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_THRESHOLD: f64 = 2.4;
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const MAX_STEPS: u32 = 200;
pub const STATE_DIM: usize = 4;
pub const NUM_ACTIONS: usize = 2;
/// Smallest and largest achievable episode return.
pub const RETURN_RANGE: (f64, f64) = (0.0, MAX_STEPS as f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartpoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub step_index: u32,
}

impl CartpoleState {
    /// Initial state with every component uniform in [-0.05, 0.05].
    pub fn reset(seed: u64) -> Self {
        Self::reset_from(&mut rng::stream(seed, "reset", 0))
    }

    pub fn reset_from<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut draw = || rng.gen_range(-0.05..=0.05);
        Self {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
            step_index: 0,
        }
    }

    pub fn observation(&self) -> [f64; STATE_DIM] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }

    /// Explicit Euler step of the cart-pole ODE under a horizontal `force`.
    pub fn integrate(&self, force: f64) -> Self {
        let total_mass = CART_MASS + POLE_MASS;
        let pole_mass_length = POLE_MASS * POLE_HALF_LENGTH;
        let (sin, cos) = self.theta.sin_cos();
        let temp = (force + pole_mass_length * self.theta_dot * self.theta_dot * sin) / total_mass;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;
        Self {
            x: self.x + TAU * self.x_dot,
            x_dot: self.x_dot + TAU * x_acc,
            theta: self.theta + TAU * self.theta_dot,
            theta_dot: self.theta_dot + TAU * theta_acc,
            step_index: self.step_index + 1,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.x.abs() > X_THRESHOLD || self.theta.abs() > THETA_THRESHOLD || self.step_index >= MAX_STEPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Left,
    Right,
}

impl Action {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Action::Left),
            1 => Ok(Action::Right),
            _ => Err(Error::usage(format!("cart-pole has 2 actions, got index {i}"))),
        }
    }

    pub fn force(self) -> f64 {
        match self {
            Action::Left => -FORCE_MAG,
            Action::Right => FORCE_MAG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
}

/// A cart-pole episode in progress.
#[derive(Debug, Clone, PartialEq)]
pub struct Cartpole {
    state: CartpoleState,
    done: bool,
}

impl Cartpole {
    pub fn new(state: CartpoleState) -> Self {
        Self { state, done: false }
    }

    pub fn state(&self) -> &CartpoleState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Every step, including the terminating one, pays reward 1.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::usage("step called on a finished episode"));
        }
        self.state = self.state.integrate(action.force());
        self.done = self.state.is_terminal();
        Ok(StepOutcome {
            reward: 1.0,
            done: self.done,
        })
    }
}

/// The `k` most recent 4-vectors, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedObs {
    frames: VecDeque<[f64; STATE_DIM]>,
    k: usize,
}

impl StackedObs {
    pub fn new(k: usize, initial: [f64; STATE_DIM]) -> Self {
        Self {
            frames: std::iter::repeat_n(initial, k).collect(),
            k,
        }
    }

    pub fn push(&mut self, frame: [f64; STATE_DIM]) {
        self.frames.pop_front();
        self.frames.push_back(frame);
    }

    pub fn dim(&self) -> usize {
        self.k * STATE_DIM
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.frames.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    /// Fresh i.i.d. `N(0, sigma^2)` vector of length `dim`.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        if self.sigma == 0.0 {
            return vec![0.0; dim];
        }
        (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                self.sigma * z
            })
            .collect()
    }
}

/// An observation split into its clean part and the smoothing noise added to it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyObservation {
    pub clean: Vec<f64>,
    pub noise: Vec<f64>,
}

impl NoisyObservation {
    pub fn noisy(&self) -> Vec<f64> {
        self.clean.iter().zip(&self.noise).map(|(s, e)| s + e).collect()
    }
}

/// Noisy view of the stacked frames; the underlying state is left untouched.
pub fn observe<R: Rng + ?Sized>(stack: &StackedObs, noise: NoiseSpec, rng: &mut R) -> NoisyObservation {
    let clean = stack.to_vec();
    let noise = noise.sample(clean.len(), rng);
    NoisyObservation { clean, noise }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Cartpole1,
    Cartpole5,
}

impl EnvKind {
    pub fn frames(self) -> usize {
        match self {
            EnvKind::Cartpole1 => 1,
            EnvKind::Cartpole5 => 5,
        }
    }

    pub fn obs_dim(self) -> usize {
        self.frames() * STATE_DIM
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Cartpole1 => "cartpole1",
            EnvKind::Cartpole5 => "cartpole5",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartpole1" => Ok(EnvKind::Cartpole1),
            "cartpole5" => Ok(EnvKind::Cartpole5),
            other => Err(Error::config("env.name", format!("unknown environment `{other}`"))),
        }
    }
}

/// Cart-pole plus its frame stack.
#[derive(Debug, Clone)]
pub struct StackedCartpole {
    cart: Cartpole,
    stack: StackedObs,
}

impl StackedCartpole {
    pub fn reset<R: Rng + ?Sized>(kind: EnvKind, rng: &mut R) -> Self {
        let state = CartpoleState::reset_from(rng);
        Self {
            stack: StackedObs::new(kind.frames(), state.observation()),
            cart: Cartpole::new(state),
        }
    }

    pub fn stack(&self) -> &StackedObs {
        &self.stack
    }

    pub fn cart(&self) -> &Cartpole {
        &self.cart
    }

    pub fn is_done(&self) -> bool {
        self.cart.is_done()
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        let out = self.cart.step(action)?;
        self.stack.push(self.cart.state().observation());
        Ok(out)
    }
}
