//! Virtual stand-in for the magnetic gripper and the objects it drives.
//!
//! Objects are quasi-static: each carries a transmission chain, a load made of
//! springs, friction and viscous terms at its output, and a completion
//! predicate. [`TaskRunner`] integrates a motion profile through the motor,
//! the chain and the load one millisecond at a time.

use std::collections::HashSet;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    chain_output, motor_output, Axis, BevelPair, GearRack, KinematicsError, MotorSpec, PinInSlot,
    Sided, SpurPair, TransmissionChain, TransmissionStage,
};
use crate::profile::{MotionProfile, CONTROL_TICK_S, SIM_STEP_S, STEPS_PER_TICK};
use crate::tag::TagId;

pub const NEWTONS_PER_LBF: f64 = 4.448;
/// Pull force of the four gripper magnets, 11.2 lbf.
pub const DEFAULT_MAGNET_PULL_N: f64 = 49.8;
/// Force the detach rack can exert, 17.52 lbf.
pub const DEFAULT_DETACH_CAPACITY_N: f64 = 78.0;
/// Magnets snap on from about 1 cm away.
pub const DEFAULT_ATTACH_RANGE_M: f64 = 0.01;

pub fn lbf_to_newtons(lbf: f64) -> f64 {
    lbf * NEWTONS_PER_LBF
}

pub fn newtons_to_lbf(n: f64) -> f64 {
    n / NEWTONS_PER_LBF
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestbedError {
    #[error("gripper is already attached to {0}")]
    AlreadyAttached(TagId),
    #[error("gripper is not attached")]
    NotAttached,
    #[error("object is {distance:.4} m away, beyond the {range} m attach range")]
    OutOfRange { distance: f64, range: f64 },
    #[error("insufficient detach force: {capacity} N cannot overcome {pull} N of magnet pull")]
    InsufficientDetachForce { capacity: f64, pull: f64 },
    #[error("no tag in range")]
    NoTag,
    #[error("unknown object {0}")]
    UnknownObject(TagId),
    #[error("duplicate tag id {0}")]
    DuplicateTag(TagId),
    #[error("invalid object {tag}: {reason}")]
    InvalidObject { tag: TagId, reason: String },
    #[error(transparent)]
    Config(#[from] KinematicsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperState {
    pub magnet_pull: f64,
    pub detach_force_capacity: f64,
    pub attach_range: f64,
    pub attached_to: Option<TagId>,
    pub drive_u: f64,
}

impl Default for GripperState {
    fn default() -> Self {
        GripperState {
            magnet_pull: DEFAULT_MAGNET_PULL_N,
            detach_force_capacity: DEFAULT_DETACH_CAPACITY_N,
            attach_range: DEFAULT_ATTACH_RANGE_M,
            attached_to: None,
            drive_u: 0.0,
        }
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

/// Snaps the gripper onto `object` if it is within attach range.
pub fn attach(
    gripper: &mut GripperState,
    object: &VirtualObject,
    gripper_pose: [f64; 3],
) -> Result<(), TestbedError> {
    if let Some(tag) = &gripper.attached_to {
        return Err(TestbedError::AlreadyAttached(tag.clone()));
    }
    let d = distance(gripper_pose, object.pose);
    if d > gripper.attach_range {
        return Err(TestbedError::OutOfRange {
            distance: d,
            range: gripper.attach_range,
        });
    }
    gripper.attached_to = Some(object.tag_id.clone());
    Ok(())
}

/// Pushes the mechanism off with the detach rack.
pub fn detach(gripper: &mut GripperState) -> Result<TagId, TestbedError> {
    let Some(tag) = gripper.attached_to.clone() else {
        return Err(TestbedError::NotAttached);
    };
    if gripper.detach_force_capacity <= gripper.magnet_pull {
        return Err(TestbedError::InsufficientDetachForce {
            capacity: gripper.detach_force_capacity,
            pull: gripper.magnet_pull,
        });
    }
    gripper.attached_to = None;
    gripper.drive_u = 0.0;
    Ok(tag)
}

pub fn read_rfid(gripper: &GripperState) -> Result<TagId, TestbedError> {
    gripper.attached_to.clone().ok_or(TestbedError::NoTag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manipulation {
    AsWholeLinear,
    AsWholeRotational,
    Squeeze,
    Twist,
    Pump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directionality {
    OneDirectional,
    BiDirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Category {
    pub manipulation: Manipulation,
    pub direction: Directionality,
}

impl Category {
    pub fn new(manipulation: Manipulation, direction: Directionality) -> Self {
        Category {
            manipulation,
            direction,
        }
    }
}

/// One term of an object's resisting load, expressed at the chain output
/// (N for linear outputs, N·m for rotational ones).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LoadTerm {
    /// `preload + stiffness·x`, pushing toward negative x.
    Spring { stiffness: f64, preload: f64 },
    /// Constant magnitude opposing any motion.
    Friction { magnitude: f64 },
    /// `coefficient·|rate|` opposing motion.
    Viscous { coefficient: f64 },
    /// Resistance that ramps from 0 at `start` to `peak` at `full`, holds
    /// until `release`, then vanishes (a wire giving way).
    Band {
        start: f64,
        full: f64,
        release: f64,
        peak: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LoadModel {
    pub terms: Vec<LoadTerm>,
}

impl LoadModel {
    pub fn new(terms: Vec<LoadTerm>) -> Self {
        LoadModel { terms }
    }

    /// Position-dependent force pushing the output toward negative x.
    pub fn restoring(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| match *term {
                LoadTerm::Spring { stiffness, preload } => preload + stiffness * x,
                LoadTerm::Band {
                    start,
                    full,
                    release,
                    peak,
                } => {
                    if x < start || x > release {
                        0.0
                    } else if x < full {
                        peak * (x - start) / (full - start)
                    } else {
                        peak
                    }
                }
                _ => 0.0,
            })
            .sum()
    }

    pub fn friction(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| match *t {
                LoadTerm::Friction { magnitude } => magnitude,
                _ => 0.0,
            })
            .sum()
    }

    pub fn viscous(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| match *t {
                LoadTerm::Viscous { coefficient } => coefficient,
                _ => 0.0,
            })
            .sum()
    }

    fn validate(&self) -> Result<(), String> {
        for term in &self.terms {
            let ok = match *term {
                LoadTerm::Spring { stiffness, preload } => {
                    stiffness.is_finite() && preload.is_finite() && stiffness >= 0.0
                }
                LoadTerm::Friction { magnitude } => magnitude.is_finite() && magnitude >= 0.0,
                LoadTerm::Viscous { coefficient } => coefficient.is_finite() && coefficient >= 0.0,
                LoadTerm::Band {
                    start,
                    full,
                    release,
                    peak,
                } => start < full && full <= release && peak.is_finite() && peak >= 0.0,
            };
            if !ok {
                return Err(format!("invalid load term {term:?}"));
            }
        }
        Ok(())
    }
}

/// When an object's task counts as done.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Completion {
    /// Squeezing: handle gap `open_gap - x` is at most `cut_gap` while the
    /// output pushes with at least `min_force`.
    GapClosed {
        open_gap: f64,
        cut_gap: f64,
        min_force: f64,
    },
    /// Output displacement reaches `target`.
    Reach { target: f64 },
    /// Output has turned `turns` full revolutions in either direction.
    Turns { turns: f64 },
    /// Output speed stays at or above `min_rate` for `hold_s` seconds.
    SustainedSpeed { min_rate: f64, hold_s: f64 },
    /// Output rises past `amplitude` `count` times, dropping below a quarter
    /// of it in between.
    Shakes { count: u32, amplitude: f64 },
}

#[derive(Debug, Clone, Default)]
struct CompletionTracker {
    fast_since: Option<f64>,
    shakes: u32,
    armed: bool,
}

impl CompletionTracker {
    fn new() -> Self {
        CompletionTracker {
            armed: true,
            ..Default::default()
        }
    }

    fn observe(&mut self, completion: &Completion, t: f64, x: f64, rate: f64, load: f64) -> bool {
        match *completion {
            Completion::GapClosed {
                open_gap,
                cut_gap,
                min_force,
            } => open_gap - x <= cut_gap && load >= min_force,
            Completion::Reach { target } => x >= target,
            Completion::Turns { turns } => x.abs() >= turns * TAU,
            Completion::SustainedSpeed { min_rate, hold_s } => {
                if rate.abs() >= min_rate {
                    let since = *self.fast_since.get_or_insert(t);
                    t - since >= hold_s - 1e-9
                } else {
                    self.fast_since = None;
                    false
                }
            }
            Completion::Shakes { count, amplitude } => {
                if self.armed && x >= amplitude {
                    self.shakes += 1;
                    self.armed = false;
                } else if !self.armed && x <= 0.25 * amplitude {
                    self.armed = true;
                }
                self.shakes >= count
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualObject {
    pub tag_id: TagId,
    pub name: String,
    pub category: Category,
    pub chain: TransmissionChain,
    #[serde(default)]
    pub load: LoadModel,
    pub completion: Completion,
    #[serde(default)]
    pub pose: [f64; 3],
    /// Hard stops on the output coordinate, `[min, max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel: Option<[f64; 2]>,
}

impl VirtualObject {
    pub fn validate(&self) -> Result<(), TestbedError> {
        self.chain.validate()?;
        let invalid = |reason: String| TestbedError::InvalidObject {
            tag: self.tag_id.clone(),
            reason,
        };
        self.load.validate().map_err(invalid)?;
        if let Some([lo, hi]) = self.travel {
            if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
                return Err(invalid(format!("travel [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    /// Travel limits including the implicit x >= 0 stop of a one-directional rack.
    pub fn travel_limits(&self) -> (f64, f64) {
        let (mut lo, hi) = self
            .travel
            .map_or((f64::NEG_INFINITY, f64::INFINITY), |[a, b]| (a, b));
        if self.chain.rack().is_some_and(|r| !r.bidirectional) {
            lo = lo.max(0.0);
        }
        (lo, hi)
    }
}

/// One row of a task trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub u: f64,
    pub motor_theta: f64,
    pub output_coord: f64,
    /// Effort the mechanism delivers at the output, N or N·m.
    pub load: f64,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub completed: bool,
    pub t_complete: Option<f64>,
    pub trajectory: Vec<TrajectorySample>,
    pub fault: Option<String>,
}

/// Instantaneous quasi-static balance at one integration step.
#[derive(Debug, Clone, Copy)]
struct Balance {
    omega: f64,
    rate: f64,
    load: f64,
}

/// Steps one object through a motion profile.
#[derive(Debug, Clone)]
pub struct TaskRunner {
    object: VirtualObject,
    profile: MotionProfile,
    spec: MotorSpec,
    step: u64,
    theta: f64,
    x: f64,
    last: Option<Balance>,
    tracker: CompletionTracker,
    completed_at: Option<f64>,
    fault: Option<String>,
    limits: (f64, f64),
    efficiency: f64,
}

impl TaskRunner {
    pub fn new(
        object: &VirtualObject,
        profile: MotionProfile,
        spec: MotorSpec,
    ) -> Result<Self, TestbedError> {
        object.validate()?;
        spec.validate()?;
        let x = chain_output(0.0, &object.chain)?;
        Ok(TaskRunner {
            limits: object.travel_limits(),
            efficiency: object.chain.efficiency(),
            object: object.clone(),
            profile,
            spec,
            step: 0,
            theta: 0.0,
            x,
            last: None,
            tracker: CompletionTracker::new(),
            completed_at: None,
            fault: None,
        })
    }

    pub fn time(&self) -> f64 {
        // divide rather than multiply so tick times print as exact decimals
        self.step as f64 / SIM_STEP_S.recip().round()
    }

    pub fn profile(&self) -> &MotionProfile {
        &self.profile
    }

    /// Replaces the control signal; it is evaluated at the runner's clock.
    pub fn set_profile(&mut self, profile: MotionProfile) {
        self.profile = profile;
        self.last = None;
    }

    pub fn set_ratchet_released(&mut self, released: bool) {
        if let Some(r) = self.object.chain.ratchet_mut() {
            r.released = released;
        }
    }

    pub fn completed_at(&self) -> Option<f64> {
        self.completed_at
    }

    pub fn fault(&self) -> Option<&str> {
        self.fault.as_deref()
    }

    fn balance(&self, u: f64) -> Result<Balance, String> {
        let jac = self.object.chain.jacobian(self.theta).map_err(|e| e.to_string())?;
        let restoring = self.object.load.restoring(self.x);
        if !restoring.is_finite() {
            return Err(format!("non-finite load {restoring}"));
        }
        if u == 0.0 {
            return Ok(Balance {
                omega: 0.0,
                rate: 0.0,
                load: restoring.max(0.0),
            });
        }
        let direction = u.signum() * jac.signum();
        let static_out = (direction * restoring + self.object.load.friction()).max(0.0);
        let static_motor = static_out * jac.abs() / self.efficiency;
        let viscous_motor = self.object.load.viscous() * jac * jac / self.efficiency;
        let u_abs = u.abs().min(1.0);
        let w0 = u_abs * self.spec.omega_noload;
        let speed = (w0 * (1.0 - static_motor / self.spec.tau_stall)).max(0.0)
            / (1.0 + w0 * viscous_motor / self.spec.tau_stall);
        let motor = motor_output(u, static_motor + viscous_motor * speed, &self.spec);
        let rate = jac * motor.omega;
        Ok(Balance {
            omega: motor.omega,
            rate,
            load: static_out + self.object.load.viscous() * rate.abs(),
        })
    }

    fn blocked(&self, x_next: f64) -> bool {
        let dx = x_next - self.x;
        let (lo, hi) = self.limits;
        if (x_next > hi && dx > 0.0) || (x_next < lo && dx < 0.0) {
            return true;
        }
        self.object.chain.ratchet().is_some_and(|r| !r.allows(dx))
    }

    /// Advances one integration step. Returns false once the run has faulted.
    pub fn step(&mut self) -> bool {
        if self.fault.is_some() {
            return false;
        }
        let t = self.time();
        let u = self.profile.evaluate(t);
        let balance = match self.balance(u) {
            Ok(b) => b,
            Err(reason) => {
                self.fault = Some(format!("t = {t:.3} s: {reason}"));
                return false;
            }
        };
        if self.completed_at.is_none()
            && self
                .tracker
                .observe(&self.object.completion, t, self.x, balance.rate, balance.load)
        {
            self.completed_at = Some(t);
        }
        let mut applied = balance;
        let theta_next = self.theta + balance.omega * SIM_STEP_S;
        if balance.omega != 0.0 {
            match chain_output(theta_next, &self.object.chain) {
                Ok(x_next) if !self.blocked(x_next) => {
                    self.theta = theta_next;
                    self.x = x_next;
                }
                Ok(_) => {
                    applied.omega = 0.0;
                    applied.rate = 0.0;
                }
                Err(e) => {
                    self.fault = Some(format!("t = {t:.3} s: {e}"));
                    return false;
                }
            }
        }
        self.last = Some(applied);
        self.step += 1;
        true
    }

    /// Current state as a trajectory row.
    pub fn sample(&self) -> TrajectorySample {
        let t = self.time();
        let u = self.profile.evaluate(t);
        let load = self
            .balance(u)
            .map(|b| b.load)
            .unwrap_or(f64::NAN);
        TrajectorySample {
            t,
            u,
            motor_theta: self.theta,
            output_coord: self.x,
            load,
            completed: self.completed_at.is_some(),
        }
    }

    /// Advances one control tick (20 ms) and returns the state at its end.
    pub fn tick(&mut self) -> TrajectorySample {
        for _ in 0..STEPS_PER_TICK {
            if !self.step() {
                break;
            }
        }
        self.sample()
    }

    /// Runs until `horizon_s`, sampling every control tick.
    pub fn run_for(&mut self, horizon_s: f64) -> TaskOutcome {
        let steps = (horizon_s / SIM_STEP_S).round() as u64;
        let every = (CONTROL_TICK_S / SIM_STEP_S).round() as u64;
        let mut trajectory = vec![self.sample()];
        while self.step < steps {
            if !self.step() {
                break;
            }
            if self.step.is_multiple_of(every) || self.step == steps {
                trajectory.push(self.sample());
            }
        }
        if self.completed_at.is_some() {
            // completion is checked against the state at the start of a step;
            // fold the final state in too
            if let Some(last) = trajectory.last_mut() {
                last.completed = true;
            }
        } else if self.fault.is_none() {
            let t = self.time();
            let u = self.profile.evaluate(t);
            if let Ok(b) = self.balance(u) {
                if self
                    .tracker
                    .observe(&self.object.completion, t, self.x, b.rate, b.load)
                {
                    self.completed_at = Some(t);
                    if let Some(last) = trajectory.last_mut() {
                        last.completed = true;
                    }
                }
            }
        }
        TaskOutcome {
            completed: self.completed_at.is_some(),
            t_complete: self.completed_at,
            trajectory,
            fault: self.fault.clone(),
        }
    }
}

/// Drives `object` with `profile` for one profile duration.
pub fn run_task(
    object: &VirtualObject,
    profile: &MotionProfile,
    spec: &MotorSpec,
) -> Result<TaskOutcome, TestbedError> {
    let mut runner = TaskRunner::new(object, profile.clone(), *spec)?;
    Ok(runner.run_for(profile.duration_s()))
}

/// Wire cutter testbed parameters (synthetic, not measured).
pub mod wire_cutter {
    pub const HANDLE_GAP_M: f64 = 0.030;
    pub const CUT_GAP_M: f64 = 0.002;
    pub const CUT_FORCE_N: f64 = 60.0;
    /// 0.5 N/mm
    pub const SPRING_N_PER_M: f64 = 500.0;
    pub const WIRE_CONTACT_M: f64 = 0.023;
    pub const WIRE_FULL_M: f64 = 0.027;
    pub const WIRE_SEVER_M: f64 = 0.0286;
    pub const WIRE_PEAK_N: f64 = 50.0;
    pub const PINION_RADIUS_M: f64 = 0.005;
}

pub const WIRE_CUTTER_TAG: &str = "00c0ffee";
pub const HAND_SANITIZER_TAG: &str = "5a717e00";
pub const JAR_LID_TAG: &str = "0000a11d";
pub const WHISK_TAG: &str = "00b1e7d0";
pub const SPICE_BOTTLE_TAG: &str = "005b1ce0";

/// The five demo objects.
pub fn builtin_catalog() -> Vec<VirtualObject> {
    let tag = |s: &str| TagId::parse(s).expect("builtin tag");
    use wire_cutter as wc;
    vec![
        VirtualObject {
            tag_id: tag(WIRE_CUTTER_TAG),
            name: "wire cutter".into(),
            category: Category::new(Manipulation::Squeeze, Directionality::BiDirectional),
            chain: TransmissionChain {
                stages: vec![TransmissionStage::Rack(GearRack::new(wc::PINION_RADIUS_M, true))],
            },
            load: LoadModel::new(vec![
                LoadTerm::Spring {
                    stiffness: wc::SPRING_N_PER_M,
                    preload: 0.0,
                },
                LoadTerm::Band {
                    start: wc::WIRE_CONTACT_M,
                    full: wc::WIRE_FULL_M,
                    release: wc::WIRE_SEVER_M,
                    peak: wc::WIRE_PEAK_N,
                },
            ]),
            completion: Completion::GapClosed {
                open_gap: wc::HANDLE_GAP_M,
                cut_gap: wc::CUT_GAP_M,
                min_force: wc::CUT_FORCE_N,
            },
            pose: [0.30, 0.00, 0.05],
            travel: Some([0.0, wc::HANDLE_GAP_M]),
        },
        VirtualObject {
            tag_id: tag(HAND_SANITIZER_TAG),
            name: "hand sanitizer".into(),
            category: Category::new(Manipulation::Pump, Directionality::OneDirectional),
            chain: TransmissionChain {
                stages: vec![TransmissionStage::Rack(GearRack::new(0.005, false))],
            },
            load: LoadModel::new(vec![LoadTerm::Spring {
                stiffness: 800.0,
                preload: 10.0,
            }]),
            completion: Completion::Reach { target: 0.012 },
            pose: [0.25, 0.10, 0.08],
            travel: Some([0.0, 0.015]),
        },
        VirtualObject {
            tag_id: tag(JAR_LID_TAG),
            name: "jar lid".into(),
            category: Category::new(Manipulation::Twist, Directionality::OneDirectional),
            chain: TransmissionChain {
                stages: vec![TransmissionStage::Bevel(BevelPair::new(0.01, 0.01, Axis::X))],
            },
            load: LoadModel::new(vec![LoadTerm::Friction { magnitude: 0.1 }]),
            completion: Completion::Turns { turns: 2.0 },
            pose: [0.20, -0.10, 0.06],
            travel: None,
        },
        VirtualObject {
            tag_id: tag(WHISK_TAG),
            name: "whisk".into(),
            category: Category::new(Manipulation::AsWholeRotational, Directionality::OneDirectional),
            chain: TransmissionChain {
                stages: vec![TransmissionStage::Spur(SpurPair::new(0.015, 0.005))],
            },
            load: LoadModel::new(vec![LoadTerm::Viscous { coefficient: 0.002 }]),
            completion: Completion::SustainedSpeed {
                min_rate: 20.0,
                hold_s: 2.0,
            },
            pose: [0.35, -0.05, 0.10],
            travel: None,
        },
        VirtualObject {
            tag_id: tag(SPICE_BOTTLE_TAG),
            name: "spice bottle".into(),
            category: Category::new(Manipulation::AsWholeLinear, Directionality::OneDirectional),
            chain: TransmissionChain {
                stages: vec![TransmissionStage::PinInSlot(PinInSlot {
                    crank_radius: 0.015,
                    sided: Sided::Single,
                })],
            },
            load: LoadModel::new(vec![LoadTerm::Spring {
                stiffness: 0.0,
                preload: 1.0,
            }]),
            completion: Completion::Shakes {
                count: 5,
                amplitude: 0.012,
            },
            pose: [0.15, 0.05, 0.04],
            travel: None,
        },
    ]
}

/// Objects available to the CLI and the server, loaded from a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub motor: MotorSpec,
    pub objects: Vec<VirtualObject>,
}

impl Scenario {
    pub fn builtin() -> Self {
        Scenario {
            motor: MotorSpec::default(),
            objects: builtin_catalog(),
        }
    }

    pub fn validate(&self) -> Result<(), TestbedError> {
        self.motor.validate()?;
        let mut seen = HashSet::new();
        for obj in &self.objects {
            if !seen.insert(&obj.tag_id) {
                return Err(TestbedError::DuplicateTag(obj.tag_id.clone()));
            }
            obj.validate()?;
        }
        Ok(())
    }

    pub fn object(&self, tag: &TagId) -> Result<&VirtualObject, TestbedError> {
        self.objects
            .iter()
            .find(|o| &o.tag_id == tag)
            .ok_or_else(|| TestbedError::UnknownObject(tag.clone()))
    }
}

/// A gripper plus the objects on the table.
#[derive(Debug, Clone)]
pub struct Testbed {
    pub scenario: Scenario,
    pub gripper: GripperState,
}

impl Testbed {
    pub fn new(scenario: Scenario) -> Result<Self, TestbedError> {
        scenario.validate()?;
        Ok(Testbed {
            scenario,
            gripper: GripperState::default(),
        })
    }

    pub fn attach(&mut self, tag: &TagId, gripper_pose: [f64; 3]) -> Result<(), TestbedError> {
        let object = self.scenario.object(tag)?;
        attach(&mut self.gripper, object, gripper_pose)
    }

    pub fn detach(&mut self) -> Result<TagId, TestbedError> {
        detach(&mut self.gripper)
    }

    pub fn read_rfid(&self) -> Result<TagId, TestbedError> {
        read_rfid(&self.gripper)
    }

    /// Runs `profile` on the attached object.
    pub fn drive(&mut self, profile: &MotionProfile) -> Result<TaskOutcome, TestbedError> {
        let tag = self.read_rfid()?;
        let object = self.scenario.object(&tag)?;
        self.gripper.drive_u = profile.evaluate(0.0);
        let outcome = run_task(object, profile, &self.scenario.motor);
        self.gripper.drive_u = 0.0;
        outcome
    }
}
