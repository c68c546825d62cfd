//! Transmission mechanisms and the gripper motor model.
//!
//! Everything here is quasi-static: a stage maps an instantaneous shaft state
//! (speed, torque) to the next one and never integrates anything. Angular
//! speed is always rad/s internally; use [`rpm_to_rad_s`] at the edges.
//!
//! Sign conventions:
//! - an external spur mesh reverses rotation, so both `omega` and `tau` flip
//!   sign and power keeps its sign;
//! - a bevel pair reports its output relative to `axis_out` and keeps the sign;
//! - a positive load on a linear output pushes toward negative displacement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, KinematicsError>;

const AXIS_TOLERANCE: f64 = 1e-9;

pub fn rpm_to_rad_s(rpm: f64) -> f64 {
    rpm * std::f64::consts::TAU / 60.0
}

pub fn rad_s_to_rpm(omega: f64) -> f64 {
    omega * 60.0 / std::f64::consts::TAU
}

/// Unit direction of a rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Axis([f64; 3]);

impl Axis {
    pub const X: Axis = Axis([1.0, 0.0, 0.0]);
    pub const Y: Axis = Axis([0.0, 1.0, 0.0]);
    pub const Z: Axis = Axis([0.0, 0.0, 1.0]);

    /// Normalizes `v`. Zero-length or non-finite vectors are rejected.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < AXIS_TOLERANCE {
            return Err(KinematicsError::InvalidConfig(format!(
                "axis {v:?} has no direction"
            )));
        }
        Ok(Axis([v[0] / norm, v[1] / norm, v[2] / norm]))
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl TryFrom<[f64; 3]> for Axis {
    type Error = KinematicsError;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Axis::new(v)
    }
}

impl From<Axis> for [f64; 3] {
    fn from(a: Axis) -> Self {
        a.0
    }
}

/// Rotational state of a shaft.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShaftState {
    /// rad/s, signed about `axis`
    pub omega: f64,
    /// N·m, signed about `axis`
    pub tau: f64,
    pub axis: Axis,
}

impl ShaftState {
    pub fn new(omega: f64, tau: f64) -> Self {
        ShaftState {
            omega,
            tau,
            axis: Axis::Z,
        }
    }

    pub fn power(&self) -> f64 {
        self.omega * self.tau
    }

    fn check_finite(&self) -> Result<()> {
        if self.omega.is_finite() && self.tau.is_finite() {
            Ok(())
        } else {
            Err(KinematicsError::InvalidState(format!(
                "non-finite shaft state (omega={}, tau={})",
                self.omega, self.tau
            )))
        }
    }
}

/// Translational state at a linear output.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearState {
    /// m/s
    pub v: f64,
    /// N
    pub f: f64,
    /// m
    pub x: f64,
}

impl LinearState {
    pub fn power(&self) -> f64 {
        self.v * self.f
    }
}

/// Linear torque-speed motor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorSpec {
    /// N·m
    pub tau_stall: f64,
    /// rad/s
    pub omega_noload: f64,
}

impl MotorSpec {
    /// Stall torque of the gripper's XL-320 servo.
    pub const XL320_STALL_TORQUE: f64 = 0.39;
    /// Configurable default, about 114 rpm.
    pub const DEFAULT_NO_LOAD_SPEED: f64 = 11.94;

    pub fn new(tau_stall: f64, omega_noload: f64) -> Result<Self> {
        let spec = MotorSpec {
            tau_stall,
            omega_noload,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_stall > 0.0 && self.tau_stall.is_finite()) {
            return Err(KinematicsError::InvalidConfig(format!(
                "stall torque must be positive, got {}",
                self.tau_stall
            )));
        }
        if !(self.omega_noload > 0.0 && self.omega_noload.is_finite()) {
            return Err(KinematicsError::InvalidConfig(format!(
                "no-load speed must be positive, got {}",
                self.omega_noload
            )));
        }
        Ok(())
    }
}

impl Default for MotorSpec {
    fn default() -> Self {
        MotorSpec {
            tau_stall: Self::XL320_STALL_TORQUE,
            omega_noload: Self::DEFAULT_NO_LOAD_SPEED,
        }
    }
}

fn default_efficiency() -> f64 {
    1.0
}

fn is_unit(e: &f64) -> bool {
    *e == 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpurPair {
    pub r_in: f64,
    pub r_out: f64,
    #[serde(default = "default_efficiency", skip_serializing_if = "is_unit")]
    pub efficiency: f64,
}

impl SpurPair {
    pub fn new(r_in: f64, r_out: f64) -> Self {
        SpurPair {
            r_in,
            r_out,
            efficiency: 1.0,
        }
    }

    /// Signed output/input speed ratio.
    pub fn speed_ratio(&self) -> f64 {
        -self.r_in / self.r_out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BevelPair {
    pub r_in: f64,
    pub r_out: f64,
    pub axis_out: Axis,
    #[serde(default = "default_efficiency", skip_serializing_if = "is_unit")]
    pub efficiency: f64,
}

impl BevelPair {
    pub fn new(r_in: f64, r_out: f64, axis_out: Axis) -> Self {
        BevelPair {
            r_in,
            r_out,
            axis_out,
            efficiency: 1.0,
        }
    }

    pub fn speed_ratio(&self) -> f64 {
        self.r_in / self.r_out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GearRack {
    /// Pitch radius of the pinion driving the rack, m.
    pub r: f64,
    /// A one-directional rack only pushes away from its home position and
    /// cannot travel below x = 0.
    pub bidirectional: bool,
    #[serde(default = "default_efficiency", skip_serializing_if = "is_unit")]
    pub efficiency: f64,
}

impl GearRack {
    pub fn new(r: f64, bidirectional: bool) -> Self {
        GearRack {
            r,
            bidirectional,
            efficiency: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    Single,
    Double,
}

/// Crank pin running in a slide joint (scotch yoke).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinInSlot {
    pub crank_radius: f64,
    pub sided: Sided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratchet {
    /// +1 or -1
    pub free_direction: i8,
    #[serde(default)]
    pub released: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatchetStep {
    Advanced(f64),
    Blocked(f64),
}

impl RatchetStep {
    pub fn position(&self) -> f64 {
        match *self {
            RatchetStep::Advanced(x) | RatchetStep::Blocked(x) => x,
        }
    }

    pub fn is_blocked(&self) -> bool {
        matches!(self, RatchetStep::Blocked(_))
    }
}

impl Ratchet {
    pub fn new(free_direction: i8) -> Self {
        Ratchet {
            free_direction,
            released: false,
        }
    }

    pub fn allows(&self, dx: f64) -> bool {
        self.released || dx == 0.0 || dx.signum() == f64::from(self.free_direction)
    }

    /// Moves `x` by `dx` unless the pawl blocks it.
    pub fn advance(&self, x: f64, dx: f64) -> RatchetStep {
        if self.allows(dx) {
            RatchetStep::Advanced(x + dx)
        } else {
            RatchetStep::Blocked(x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TransmissionStage {
    Spur(SpurPair),
    Bevel(BevelPair),
    Rack(GearRack),
    PinInSlot(PinInSlot),
    Ratchet(Ratchet),
}

impl TransmissionStage {
    fn is_terminal(&self) -> bool {
        matches!(
            self,
            TransmissionStage::Rack(_) | TransmissionStage::PinInSlot(_)
        )
    }

    fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(KinematicsError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        }
        fn efficiency(e: f64) -> Result<()> {
            if e > 0.0 && e <= 1.0 {
                Ok(())
            } else {
                Err(KinematicsError::InvalidConfig(format!(
                    "efficiency must be in (0, 1], got {e}"
                )))
            }
        }
        match self {
            TransmissionStage::Spur(p) => {
                positive("r_in", p.r_in)?;
                positive("r_out", p.r_out)?;
                efficiency(p.efficiency)
            }
            TransmissionStage::Bevel(p) => {
                positive("r_in", p.r_in)?;
                positive("r_out", p.r_out)?;
                if (p.axis_out.norm() - 1.0).abs() > AXIS_TOLERANCE {
                    return Err(KinematicsError::InvalidConfig(
                        "bevel axis_out is not a unit vector".into(),
                    ));
                }
                efficiency(p.efficiency)
            }
            TransmissionStage::Rack(r) => {
                positive("rack radius", r.r)?;
                efficiency(r.efficiency)
            }
            TransmissionStage::PinInSlot(p) => positive("crank radius", p.crank_radius),
            TransmissionStage::Ratchet(r) => {
                if r.free_direction == 1 || r.free_direction == -1 {
                    Ok(())
                } else {
                    Err(KinematicsError::InvalidConfig(format!(
                        "ratchet free_direction must be +1 or -1, got {}",
                        r.free_direction
                    )))
                }
            }
        }
    }
}

fn transmit_ratio(input: ShaftState, speed_ratio: f64, efficiency: f64) -> ShaftState {
    ShaftState {
        omega: speed_ratio * input.omega,
        tau: efficiency * input.tau / speed_ratio,
        axis: input.axis,
    }
}

pub fn spur_transmit(input: ShaftState, pair: &SpurPair) -> Result<ShaftState> {
    input.check_finite()?;
    TransmissionStage::Spur(*pair).validate()?;
    Ok(transmit_ratio(input, pair.speed_ratio(), pair.efficiency))
}

pub fn bevel_transmit(input: ShaftState, pair: &BevelPair) -> Result<ShaftState> {
    input.check_finite()?;
    TransmissionStage::Bevel(*pair).validate()?;
    let mut out = transmit_ratio(input, pair.speed_ratio(), pair.efficiency);
    out.axis = pair.axis_out;
    Ok(out)
}

/// Converts pinion rotation into rack translation; `x` is carried through.
pub fn rack_transmit(input: ShaftState, rack: &GearRack, x: f64) -> Result<LinearState> {
    input.check_finite()?;
    TransmissionStage::Rack(*rack).validate()?;
    Ok(LinearState {
        v: input.omega * rack.r,
        f: rack.efficiency * input.tau / rack.r,
        x,
    })
}

pub fn pin_in_slot_position(theta: f64, stage: &PinInSlot) -> f64 {
    let x = stage.crank_radius * theta.sin();
    match stage.sided {
        Sided::Double => x,
        Sided::Single => x.max(0.0),
    }
}

/// dx/dθ of the slide joint.
pub fn pin_in_slot_rate(theta: f64, stage: &PinInSlot) -> f64 {
    match stage.sided {
        Sided::Single if theta.sin() < 0.0 => 0.0,
        _ => stage.crank_radius * theta.cos(),
    }
}

pub fn ratchet_advance(ratchet: &Ratchet, x: f64, dx: f64) -> RatchetStep {
    ratchet.advance(x, dx)
}

/// Shaft state of the motor for command `u` against a resisting `load_tau`.
///
/// `u` outside [-1, 1] is clamped with a warning. Speed follows the linear
/// torque-speed curve and drops to zero once the load reaches stall torque.
pub fn motor_output(u: f64, load_tau: f64, spec: &MotorSpec) -> ShaftState {
    let u = if u.abs() > 1.0 {
        tracing::warn!(u, "motor command outside [-1, 1], clamping");
        u.clamp(-1.0, 1.0)
    } else {
        u
    };
    let load = load_tau.max(0.0);
    let headroom = (1.0 - load / spec.tau_stall).max(0.0);
    let direction = if u < 0.0 { -1.0 } else { 1.0 };
    ShaftState {
        omega: u * spec.omega_noload * headroom,
        tau: direction * load.min(spec.tau_stall),
        axis: Axis::Z,
    }
}

/// What a chain delivers at its output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainOutput {
    Rotational(ShaftState),
    Linear(LinearState),
}

impl ChainOutput {
    pub fn power(&self) -> f64 {
        match self {
            ChainOutput::Rotational(s) => s.power(),
            ChainOutput::Linear(l) => l.power(),
        }
    }

    /// Output speed: rad/s for rotational chains, m/s for linear ones.
    pub fn rate(&self) -> f64 {
        match self {
            ChainOutput::Rotational(s) => s.omega,
            ChainOutput::Linear(l) => l.v,
        }
    }

    /// Output effort: N·m or N.
    pub fn effort(&self) -> f64 {
        match self {
            ChainOutput::Rotational(s) => s.tau,
            ChainOutput::Linear(l) => l.f,
        }
    }
}

/// Ordered mechanism stages from the motor shaft to the object part.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransmissionChain {
    pub stages: Vec<TransmissionStage>,
}

impl TransmissionChain {
    pub fn new(stages: Vec<TransmissionStage>) -> Result<Self> {
        let chain = TransmissionChain { stages };
        chain.validate()?;
        Ok(chain)
    }

    /// Checks stage parameters and ordering: rotational stages first, then
    /// at most one rack or pin-in-slot, with a ratchet only right after a rack.
    pub fn validate(&self) -> Result<()> {
        let mut terminal_at = None;
        for (i, stage) in self.stages.iter().enumerate() {
            stage.validate()?;
            if let TransmissionStage::Ratchet(_) = stage {
                let after_rack = i > 0 && matches!(self.stages[i - 1], TransmissionStage::Rack(_));
                if !after_rack {
                    return Err(KinematicsError::InvalidConfig(format!(
                        "stage {i}: a ratchet may only follow a gear rack"
                    )));
                }
                continue;
            }
            if let Some(t) = terminal_at {
                return Err(KinematicsError::InvalidConfig(format!(
                    "stage {i} follows the terminal stage {t}"
                )));
            }
            if stage.is_terminal() {
                terminal_at = Some(i);
            }
        }
        Ok(())
    }

    /// True when the chain ends in a rack or pin-in-slot.
    pub fn is_linear(&self) -> bool {
        self.stages.iter().any(TransmissionStage::is_terminal)
    }

    pub fn ratchet(&self) -> Option<&Ratchet> {
        self.stages.iter().find_map(|s| match s {
            TransmissionStage::Ratchet(r) => Some(r),
            _ => None,
        })
    }

    pub fn ratchet_mut(&mut self) -> Option<&mut Ratchet> {
        self.stages.iter_mut().find_map(|s| match s {
            TransmissionStage::Ratchet(r) => Some(r),
            _ => None,
        })
    }

    pub fn rack(&self) -> Option<&GearRack> {
        self.stages.iter().find_map(|s| match s {
            TransmissionStage::Rack(r) => Some(r),
            _ => None,
        })
    }

    /// Signed product of the rotational speed ratios.
    pub fn rotational_ratio(&self) -> f64 {
        self.stages
            .iter()
            .map(|s| match s {
                TransmissionStage::Spur(p) => p.speed_ratio(),
                TransmissionStage::Bevel(p) => p.speed_ratio(),
                _ => 1.0,
            })
            .product()
    }

    /// Product of stage efficiencies.
    pub fn efficiency(&self) -> f64 {
        self.stages
            .iter()
            .map(|s| match s {
                TransmissionStage::Spur(p) => p.efficiency,
                TransmissionStage::Bevel(p) => p.efficiency,
                TransmissionStage::Rack(r) => r.efficiency,
                _ => 1.0,
            })
            .product()
    }

    /// d(output)/d(theta_motor) at `theta_motor`.
    pub fn jacobian(&self, theta_motor: f64) -> Result<f64> {
        self.validate()?;
        let ratio = self.rotational_ratio();
        let terminal = self.stages.iter().find(|s| s.is_terminal());
        Ok(match terminal {
            Some(TransmissionStage::Rack(r)) => ratio * r.r,
            Some(TransmissionStage::PinInSlot(p)) => ratio * pin_in_slot_rate(ratio * theta_motor, p),
            _ => ratio,
        })
    }

    pub fn output_axis(&self) -> Axis {
        self.stages
            .iter()
            .rev()
            .find_map(|s| match s {
                TransmissionStage::Bevel(p) => Some(p.axis_out),
                _ => None,
            })
            .unwrap_or(Axis::Z)
    }
}

/// Output coordinate (rad or m) for motor angle `theta_motor`.
///
/// This is the unconstrained kinematic map. Ratchets and travel limits depend
/// on history and are applied by the testbed's runner, not here.
pub fn chain_output(theta_motor: f64, chain: &TransmissionChain) -> Result<f64> {
    chain.validate()?;
    if !theta_motor.is_finite() {
        return Err(KinematicsError::InvalidState(format!(
            "non-finite motor angle {theta_motor}"
        )));
    }
    let mut theta = theta_motor;
    for stage in &chain.stages {
        match stage {
            TransmissionStage::Spur(p) => theta *= p.speed_ratio(),
            TransmissionStage::Bevel(p) => theta *= p.speed_ratio(),
            TransmissionStage::Rack(r) => return Ok(theta * r.r),
            TransmissionStage::PinInSlot(p) => return Ok(pin_in_slot_position(theta, p)),
            TransmissionStage::Ratchet(_) => {}
        }
    }
    Ok(theta)
}

/// Pushes a motor shaft state through every stage in turn.
///
/// `theta_motor` only matters for pin-in-slot chains, whose lever arm depends
/// on the crank angle. Near the crank's dead centres the lever arm is floored
/// at 1e-6 of the crank radius so the reported force stays finite.
pub fn chain_transmit(
    input: ShaftState,
    chain: &TransmissionChain,
    theta_motor: f64,
) -> Result<ChainOutput> {
    chain.validate()?;
    input.check_finite()?;
    let mut state = input;
    let mut theta = theta_motor;
    for stage in &chain.stages {
        match stage {
            TransmissionStage::Spur(p) => {
                state = spur_transmit(state, p)?;
                theta *= p.speed_ratio();
            }
            TransmissionStage::Bevel(p) => {
                state = bevel_transmit(state, p)?;
                theta *= p.speed_ratio();
            }
            TransmissionStage::Rack(r) => {
                return rack_transmit(state, r, theta * r.r).map(ChainOutput::Linear);
            }
            TransmissionStage::PinInSlot(p) => {
                let rate = pin_in_slot_rate(theta, p);
                let floor = 1e-6 * p.crank_radius;
                let lever = if rate.abs() < floor {
                    floor.copysign(rate)
                } else {
                    rate
                };
                return Ok(ChainOutput::Linear(LinearState {
                    v: state.omega * rate,
                    f: state.tau / lever,
                    x: pin_in_slot_position(theta, p),
                }));
            }
            TransmissionStage::Ratchet(_) => {}
        }
    }
    Ok(ChainOutput::Rotational(state))
}

/// Motor-side torque needed to hold `output_load` (N or N·m) at the output.
///
/// Ideal chains reflect through the kinematic gain; efficiencies below one
/// increase the motor-side torque.
pub fn chain_reflect_load(
    output_load: f64,
    chain: &TransmissionChain,
    theta_motor: f64,
) -> Result<f64> {
    let jac = chain.jacobian(theta_motor)?;
    Ok(output_load * jac / chain.efficiency())
}
