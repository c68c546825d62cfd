//! Control signal u(t) for one object task: keypoints, editing, templates and
//! open-loop integration through the motor model.
//!
//! A profile is piecewise linear between keypoints. Two keypoints may share a
//! time stamp, which makes a step edge; the value at the edge is the later
//! keypoint's (right-continuous). Before the first keypoint the first value is
//! held, after the last one the last value is held until `duration_s`. Past
//! the duration a continuous profile wraps around and a one-shot profile
//! returns 0 (motor off).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{motor_output, MotorSpec};

/// Integration step, s.
pub const SIM_STEP_S: f64 = 0.001;
/// Control/telemetry tick, s (50 Hz).
pub const CONTROL_TICK_S: f64 = 0.020;
/// Integration steps per control tick.
pub const STEPS_PER_TICK: usize = 20;
/// Keypoints allowed at one time stamp.
pub const MAX_COINCIDENT: usize = 2;
pub const MIN_DURATION_S: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("keypoint {index}: u = {u} is outside [-1, 1]")]
    UOutOfBounds { index: usize, u: f64 },
    #[error("keypoint {index}: t = {t} is outside [0, {duration}]")]
    TimeOutOfRange { index: usize, t: f64, duration: f64 },
    #[error("keypoint {index}: t = {t} is earlier than the previous keypoint")]
    Unsorted { index: usize, t: f64 },
    #[error("more than {MAX_COINCIDENT} keypoints at t = {t}")]
    TooManyCoincident { t: f64 },
    #[error("a profile needs at least 2 keypoints, got {0}")]
    TooFewKeypoints(usize),
    #[error("duration {0} s is invalid (must be finite and > 0)")]
    InvalidDuration(f64),
    #[error("keypoint {index} is not finite")]
    NonFinite { index: usize },
    #[error("edit rejected: {0}")]
    EditRejected(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("simulation fault at t = {t} s: {reason}")]
    Fault { t: f64, reason: String },
    #[error(transparent)]
    Config(#[from] crate::kinematics::KinematicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub t: f64,
    pub u: f64,
}

impl Keypoint {
    pub fn new(t: f64, u: f64) -> Self {
        Keypoint { t, u }
    }
}

/// Unvalidated profile document exactly as it appears on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDoc {
    #[serde(default)]
    pub name: String,
    pub duration_s: f64,
    #[serde(default)]
    pub continuous: bool,
    pub keypoints: Vec<Keypoint>,
}

/// A validated control program. Every constructor and edit upholds: at least
/// two keypoints, sorted by `t`, all inside `[0, duration_s]`, `u` inside
/// `[-1, 1]`, and no more than two keypoints per time stamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileDoc", into = "ProfileDoc")]
pub struct MotionProfile {
    name: String,
    duration_s: f64,
    continuous: bool,
    keypoints: Vec<Keypoint>,
}

impl ProfileDoc {
    /// First invariant violation, if any.
    pub fn validate(&self) -> Result<(), ProfileError> {
        let d = self.duration_s;
        if !(d.is_finite() && d > 0.0) {
            return Err(ProfileError::InvalidDuration(d));
        }
        if self.keypoints.len() < 2 {
            return Err(ProfileError::TooFewKeypoints(self.keypoints.len()));
        }
        let mut run = 0usize;
        for (index, kp) in self.keypoints.iter().enumerate() {
            if !(kp.t.is_finite() && kp.u.is_finite()) {
                return Err(ProfileError::NonFinite { index });
            }
            if !(-1.0..=1.0).contains(&kp.u) {
                return Err(ProfileError::UOutOfBounds { index, u: kp.u });
            }
            if !(0.0..=d).contains(&kp.t) {
                return Err(ProfileError::TimeOutOfRange {
                    index,
                    t: kp.t,
                    duration: d,
                });
            }
            if index > 0 {
                let prev = self.keypoints[index - 1].t;
                if kp.t < prev {
                    return Err(ProfileError::Unsorted { index, t: kp.t });
                }
                run = if kp.t == prev { run + 1 } else { 1 };
            } else {
                run = 1;
            }
            if run > MAX_COINCIDENT {
                return Err(ProfileError::TooManyCoincident { t: kp.t });
            }
        }
        Ok(())
    }
}

impl TryFrom<ProfileDoc> for MotionProfile {
    type Error = ProfileError;

    fn try_from(doc: ProfileDoc) -> Result<Self, ProfileError> {
        doc.validate()?;
        Ok(MotionProfile {
            name: doc.name,
            duration_s: doc.duration_s,
            continuous: doc.continuous,
            keypoints: doc.keypoints,
        })
    }
}

impl From<MotionProfile> for ProfileDoc {
    fn from(p: MotionProfile) -> Self {
        ProfileDoc {
            name: p.name,
            duration_s: p.duration_s,
            continuous: p.continuous,
            keypoints: p.keypoints,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    EndlessRotation,
    Periodic,
    OneWay,
    TwoWay,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 4] = [
        TemplateKind::EndlessRotation,
        TemplateKind::Periodic,
        TemplateKind::OneWay,
        TemplateKind::TwoWay,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TemplateKind::EndlessRotation => "endless_rotation",
            TemplateKind::Periodic => "periodic",
            TemplateKind::OneWay => "one_way",
            TemplateKind::TwoWay => "two_way",
        }
    }
}

/// Period of the `Periodic` template's square wave, s.
pub const PERIODIC_TEMPLATE_PERIOD_S: f64 = 1.0;

pub fn make_template(kind: TemplateKind) -> MotionProfile {
    let kp = |pts: &[(f64, f64)]| pts.iter().map(|&(t, u)| Keypoint::new(t, u)).collect();
    let (duration, continuous, keypoints) = match kind {
        TemplateKind::EndlessRotation => (5.0, true, kp(&[(0.0, 1.0), (5.0, 1.0)])),
        TemplateKind::Periodic => {
            let half = PERIODIC_TEMPLATE_PERIOD_S / 2.0;
            let mut pts = vec![Keypoint::new(0.0, 1.0)];
            let mut u = 1.0;
            for i in 1..8 {
                let t = half * i as f64;
                pts.push(Keypoint::new(t, u));
                u = -u;
                pts.push(Keypoint::new(t, u));
            }
            pts.push(Keypoint::new(4.0, u));
            (4.0, false, pts)
        }
        TemplateKind::OneWay => (4.0, false, kp(&[(0.0, 1.0), (2.0, 1.0), (2.0, 0.0), (4.0, 0.0)])),
        TemplateKind::TwoWay => (
            6.0,
            false,
            kp(&[
                (0.0, 1.0),
                (2.0, 1.0),
                (2.0, 0.0),
                (4.0, 0.0),
                (4.0, -1.0),
                (6.0, -1.0),
            ]),
        ),
    };
    MotionProfile {
        name: kind.name().to_string(),
        duration_s: duration,
        continuous,
        keypoints,
    }
}

/// Grow or shrink the profile by one second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationStep {
    Grow,
    Shrink,
}

impl MotionProfile {
    pub fn new(
        name: impl Into<String>,
        duration_s: f64,
        continuous: bool,
        keypoints: Vec<Keypoint>,
    ) -> Result<Self, ProfileError> {
        ProfileDoc {
            name: name.into(),
            duration_s,
            continuous,
            keypoints,
        }
        .try_into()
    }

    /// Profile holding `u` for `duration_s`.
    pub fn constant(name: impl Into<String>, duration_s: f64, u: f64) -> Result<Self, ProfileError> {
        Self::new(
            name,
            duration_s,
            false,
            vec![Keypoint::new(0.0, u), Keypoint::new(duration_s, u)],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn continuous(&self) -> bool {
        self.continuous
    }

    pub fn keypoints(&self) -> &[Keypoint] {
        &self.keypoints
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_continuous(mut self, continuous: bool) -> Self {
        self.continuous = continuous;
        self
    }

    pub fn to_doc(&self) -> ProfileDoc {
        self.clone().into()
    }

    /// Control value at time `t` (s).
    pub fn evaluate(&self, t: f64) -> f64 {
        let t = if t >= self.duration_s && self.continuous {
            t.rem_euclid(self.duration_s)
        } else if t > self.duration_s || t.is_nan() {
            return 0.0;
        } else {
            t.max(0.0)
        };
        let kps = &self.keypoints;
        let after = kps.partition_point(|k| k.t <= t);
        if after == 0 {
            return kps[0].u;
        }
        if after == kps.len() {
            return kps[after - 1].u;
        }
        let (a, b) = (kps[after - 1], kps[after]);
        let s = (t - a.t) / (b.t - a.t);
        (a.u + s * (b.u - a.u)).clamp(-1.0, 1.0)
    }

    fn coincident_at(&self, t: f64) -> usize {
        self.keypoints.iter().filter(|k| k.t == t).count()
    }

    fn insert_sorted(keypoints: &mut Vec<Keypoint>, kp: Keypoint) -> usize {
        let at = keypoints.partition_point(|k| k.t <= kp.t);
        keypoints.insert(at, kp);
        at
    }

    /// Inserts a keypoint after any existing keypoint at the same time.
    /// `u` is clamped; `t` outside `[0, duration]` is rejected.
    pub fn add_keypoint(&self, t: f64, u: f64) -> Result<MotionProfile, ProfileError> {
        if !(t.is_finite() && u.is_finite()) {
            return Err(ProfileError::EditRejected("non-finite keypoint".into()));
        }
        if !(0.0..=self.duration_s).contains(&t) {
            return Err(ProfileError::EditRejected(format!(
                "t = {t} is outside [0, {}]",
                self.duration_s
            )));
        }
        if self.coincident_at(t) >= MAX_COINCIDENT {
            return Err(ProfileError::EditRejected(format!(
                "already {MAX_COINCIDENT} keypoints at t = {t}"
            )));
        }
        let mut next = self.clone();
        Self::insert_sorted(&mut next.keypoints, Keypoint::new(t, u.clamp(-1.0, 1.0)));
        Ok(next)
    }

    /// Drags keypoint `index` to `(new_t, new_u)`, clamping both into range.
    /// Returns the edited profile and the keypoint's index after re-sorting.
    pub fn move_keypoint(
        &self,
        index: usize,
        new_t: f64,
        new_u: f64,
    ) -> Result<(MotionProfile, usize), ProfileError> {
        if index >= self.keypoints.len() {
            return Err(ProfileError::EditRejected(format!(
                "no keypoint at index {index}"
            )));
        }
        if !(new_t.is_finite() && new_u.is_finite()) {
            return Err(ProfileError::EditRejected("non-finite keypoint".into()));
        }
        let t = new_t.clamp(0.0, self.duration_s);
        let u = new_u.clamp(-1.0, 1.0);
        let mut next = self.clone();
        next.keypoints.remove(index);
        if next.keypoints.iter().filter(|k| k.t == t).count() >= MAX_COINCIDENT {
            return Err(ProfileError::EditRejected(format!(
                "already {MAX_COINCIDENT} keypoints at t = {t}"
            )));
        }
        // Keep the original slot when the order does not change, so that
        // dragging back and forth is reversible.
        let fits = (index == 0 || next.keypoints[index - 1].t <= t)
            && (index == next.keypoints.len() || t <= next.keypoints[index].t);
        let at = if fits {
            next.keypoints.insert(index, Keypoint::new(t, u));
            index
        } else {
            Self::insert_sorted(&mut next.keypoints, Keypoint::new(t, u))
        };
        Ok((next, at))
    }

    pub fn remove_keypoint(&self, index: usize) -> Result<MotionProfile, ProfileError> {
        if index >= self.keypoints.len() {
            return Err(ProfileError::EditRejected(format!(
                "no keypoint at index {index}"
            )));
        }
        if self.keypoints.len() <= 2 {
            return Err(ProfileError::EditRejected(
                "a profile needs at least 2 keypoints".into(),
            ));
        }
        let mut next = self.clone();
        next.keypoints.remove(index);
        Ok(next)
    }

    /// Adds or removes exactly one second. Shrinking drops keypoints that
    /// fall past the new end.
    pub fn adjust_duration(&self, step: DurationStep) -> Result<MotionProfile, ProfileError> {
        let mut next = self.clone();
        match step {
            DurationStep::Grow => next.duration_s += 1.0,
            DurationStep::Shrink => {
                let d = self.duration_s - 1.0;
                if d < MIN_DURATION_S {
                    return Err(ProfileError::EditRejected(format!(
                        "duration cannot go below {MIN_DURATION_S} s"
                    )));
                }
                next.keypoints.retain(|k| k.t <= d);
                if next.keypoints.len() < 2 {
                    return Err(ProfileError::EditRejected(
                        "shrinking would leave fewer than 2 keypoints".into(),
                    ));
                }
                next.duration_s = d;
            }
        }
        Ok(next)
    }

    /// Keypoints that a one-second shrink would drop.
    pub fn dropped_by_shrink(&self) -> usize {
        let d = self.duration_s - 1.0;
        self.keypoints.iter().filter(|k| k.t > d).count()
    }

    /// Same profile with every `u` negated.
    pub fn negated(&self) -> MotionProfile {
        let mut next = self.clone();
        for kp in &mut next.keypoints {
            kp.u = -kp.u;
        }
        next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSample {
    pub t: f64,
    pub theta: f64,
    pub omega: f64,
}

/// Fixed-step explicit integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub dt: f64,
    pub sample_every: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator {
            dt: SIM_STEP_S,
            sample_every: CONTROL_TICK_S,
        }
    }
}

impl Integrator {
    /// Integrates dθ/dt = motor speed over one run of the profile and returns
    /// a sample at t = 0 and at every control tick.
    ///
    /// `load_fn` maps motor angle to resisting motor-side torque (N·m).
    pub fn motor_angle<F>(
        &self,
        profile: &MotionProfile,
        spec: &MotorSpec,
        mut load_fn: F,
    ) -> Result<Vec<AngleSample>, SimulationError>
    where
        F: FnMut(f64) -> f64,
    {
        spec.validate()?;
        let steps = (profile.duration_s() / self.dt).round() as usize;
        let every = ((self.sample_every / self.dt).round() as usize).max(1);
        let mut theta = 0.0;
        let mut samples = Vec::with_capacity(steps / every + 2);
        let mut omega = 0.0;
        for k in 0..=steps {
            let t = k as f64 * self.dt;
            let load = load_fn(theta);
            if !load.is_finite() {
                return Err(SimulationError::Fault {
                    t,
                    reason: format!("non-finite load {load}"),
                });
            }
            omega = motor_output(profile.evaluate(t), load, spec).omega;
            if k % every == 0 {
                samples.push(AngleSample { t, theta, omega });
            }
            if k < steps {
                theta += omega * self.dt;
            }
        }
        if !steps.is_multiple_of(every) {
            samples.push(AngleSample {
                t: steps as f64 * self.dt,
                theta,
                omega,
            });
        }
        Ok(samples)
    }
}

/// Motor angle trajectory at the default 1 ms step, sampled every 20 ms.
pub fn integrate_motor_angle<F>(
    profile: &MotionProfile,
    spec: &MotorSpec,
    load_fn: F,
) -> Result<Vec<AngleSample>, SimulationError>
where
    F: FnMut(f64) -> f64,
{
    Integrator::default().motor_angle(profile, spec, load_fn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ramp() -> MotionProfile {
        MotionProfile::new("ramp", 2.0, false, vec![Keypoint::new(0.0, 0.0), Keypoint::new(2.0, 1.0)]).unwrap()
    }

    #[test]
    fn midpoint_interpolation() {
        assert_eq!(ramp().evaluate(1.0), 0.5);
    }

    #[test]
    fn after_end_is_off() {
        assert_eq!(ramp().evaluate(2.5), 0.0);
        assert_eq!(ramp().evaluate(2.0), 1.0);
    }

    #[test]
    fn step_edges_are_right_continuous() {
        let p = make_template(TemplateKind::OneWay);
        assert_eq!(p.evaluate(1.999), 1.0);
        assert_eq!(p.evaluate(2.0), 0.0);
    }

    #[test]
    fn endless_rotation_is_constant() {
        let p = make_template(TemplateKind::EndlessRotation);
        assert!(p.continuous());
        for t in [0.0, 1.3, 4.99, 5.0, 17.2] {
            assert_eq!(p.evaluate(t), 1.0);
        }
    }

    #[test]
    fn two_way_nets_zero() {
        // trapezoid rule on a fine grid, with step edges landing on grid points
        let p = make_template(TemplateKind::TwoWay);
        let n = 60_000;
        let h = p.duration_s() / n as f64;
        let area: f64 = (0..n)
            .map(|i| {
                let a = i as f64 * h;
                // left/right limits inside the cell
                0.5 * (p.evaluate(a + 1e-12) + p.evaluate(a + h - 1e-12)) * h
            })
            .sum();
        assert!(area.abs() < 1e-6, "{area}");
    }

    #[test]
    fn periodic_half_period_antisymmetry() {
        let p = make_template(TemplateKind::Periodic);
        let half = PERIODIC_TEMPLATE_PERIOD_S / 2.0;
        for i in 0..350 {
            let t = i as f64 * 0.01 + 0.003;
            assert_eq!(p.evaluate(t), -p.evaluate(t + half), "t = {t}");
        }
    }

    #[test]
    fn templates_validate() {
        for kind in TemplateKind::ALL {
            make_template(kind).to_doc().validate().unwrap();
        }
    }

    #[test]
    fn add_keypoint_clamps_and_sorts() {
        let p = make_template(TemplateKind::TwoWay).add_keypoint(3.0, 1.5).unwrap();
        let kps = p.keypoints();
        assert!(kps.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(kps.contains(&Keypoint::new(3.0, 1.0)));
    }

    #[test]
    fn add_on_segment_keeps_value() {
        let p = ramp();
        let before = p.evaluate(0.7);
        let q = p.add_keypoint(0.7, before).unwrap();
        assert_relative_eq!(q.evaluate(0.7), before, max_relative = 1e-12);
        assert_relative_eq!(q.evaluate(0.3), p.evaluate(0.3), max_relative = 1e-12);
    }

    #[test]
    fn third_coincident_keypoint_rejected() {
        let p = make_template(TemplateKind::OneWay);
        assert!(matches!(p.add_keypoint(2.0, 0.5), Err(ProfileError::EditRejected(_))));
        assert!(p.add_keypoint(4.5, 0.0).is_err());
    }

    #[test]
    fn move_and_move_back() {
        let p = make_template(TemplateKind::TwoWay);
        let orig = p.keypoints()[1];
        let (moved, at) = p.move_keypoint(1, 1.5, 0.3).unwrap();
        let (back, _) = moved.move_keypoint(at, orig.t, orig.u).unwrap();
        assert_eq!(back, p);

        // across neighbours on a profile without step edges
        let r = ramp().add_keypoint(0.5, 0.1).unwrap().add_keypoint(1.5, 0.9).unwrap();
        let (moved, at) = r.move_keypoint(1, 1.8, -0.2).unwrap();
        assert_eq!(at, 2);
        let (back, _) = moved.move_keypoint(at, 0.5, 0.1).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn move_clamps_into_range() {
        let p = ramp();
        let (q, at) = p.move_keypoint(1, 9.0, -4.0).unwrap();
        assert_eq!(q.keypoints()[at], Keypoint::new(2.0, -1.0));
        assert!(p.move_keypoint(7, 0.0, 0.0).is_err());
    }

    #[test]
    fn duration_round_trip() {
        let p = make_template(TemplateKind::TwoWay);
        let q = p.adjust_duration(DurationStep::Grow).unwrap();
        assert_eq!(q.duration_s(), 7.0);
        assert_eq!(q.adjust_duration(DurationStep::Shrink).unwrap(), p);
    }

    #[test]
    fn shrink_drops_tail_keypoints() {
        let p = make_template(TemplateKind::TwoWay);
        assert_eq!(p.dropped_by_shrink(), 1);
        let q = p.adjust_duration(DurationStep::Shrink).unwrap();
        assert_eq!(q.keypoints().len(), 5);
        assert!(q.keypoints().iter().all(|k| k.t <= 5.0));
    }

    #[test]
    fn shrink_below_one_second_rejected() {
        let p = MotionProfile::constant("short", 1.5, 0.2).unwrap();
        assert!(matches!(
            p.adjust_duration(DurationStep::Shrink),
            Err(ProfileError::EditRejected(_))
        ));
    }

    #[test]
    fn grow_preserves_signal() {
        let p = make_template(TemplateKind::Periodic);
        let q = p.adjust_duration(DurationStep::Grow).unwrap();
        for i in 0..=400 {
            let t = i as f64 * 0.01;
            assert_eq!(p.evaluate(t), q.evaluate(t));
        }
    }

    #[test]
    fn named_violations() {
        let doc = |kps: Vec<(f64, f64)>| ProfileDoc {
            name: String::new(),
            duration_s: 2.0,
            continuous: false,
            keypoints: kps.into_iter().map(|(t, u)| Keypoint::new(t, u)).collect(),
        };
        assert!(matches!(
            doc(vec![(0.0, 0.0), (1.0, 2.0)]).validate(),
            Err(ProfileError::UOutOfBounds { index: 1, .. })
        ));
        assert!(matches!(
            doc(vec![(1.0, 0.0), (0.5, 0.0)]).validate(),
            Err(ProfileError::Unsorted { index: 1, .. })
        ));
        assert!(matches!(
            doc(vec![(0.0, 0.0)]).validate(),
            Err(ProfileError::TooFewKeypoints(1))
        ));
        assert!(matches!(
            doc(vec![(0.0, 0.0), (3.0, 0.0)]).validate(),
            Err(ProfileError::TimeOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            doc(vec![(1.0, 0.0), (1.0, 0.5), (1.0, 1.0)]).validate(),
            Err(ProfileError::TooManyCoincident { .. })
        ));
    }

    #[test]
    fn json_field_names_and_unknown_fields() {
        let json = r#"{"name":"x","duration_s":3,"continuous":true,"color":"red",
                       "keypoints":[{"t":0,"u":0.5,"extra":1},{"t":3,"u":-0.5}]}"#;
        let p: MotionProfile = serde_json::from_str(json).unwrap();
        assert_eq!(p.keypoints().len(), 2);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["duration_s"], 3.0);
        assert_eq!(v["keypoints"][1]["u"], -0.5);
        assert!(serde_json::from_str::<MotionProfile>(r#"{"duration_s":1,"keypoints":[{"t":0,"u":2},{"t":1,"u":0}]}"#).is_err());
    }

    #[test]
    fn constant_rate_integral() {
        let spec = MotorSpec::new(0.39, 10.0).unwrap();
        let p = MotionProfile::constant("full", 1.0, 1.0).unwrap();
        let traj = integrate_motor_angle(&p, &spec, |_| 0.0).unwrap();
        let last = traj.last().unwrap();
        assert_eq!(last.t, 1.0);
        assert_relative_eq!(last.theta, 10.0, max_relative = 1e-9);
        assert_eq!(traj.len(), 51);
    }

    #[test]
    fn zero_command_holds_angle() {
        let p = MotionProfile::constant("off", 2.0, 0.0).unwrap();
        let traj = integrate_motor_angle(&p, &MotorSpec::default(), |_| 0.1).unwrap();
        assert!(traj.iter().all(|s| s.theta == 0.0));
    }

    #[test]
    fn non_finite_load_faults() {
        let p = MotionProfile::constant("full", 1.0, 1.0).unwrap();
        let err = integrate_motor_angle(&p, &MotorSpec::default(), |th| if th > 1.0 { f64::NAN } else { 0.0 });
        assert!(matches!(err, Err(SimulationError::Fault { .. })));
    }
}
