//! Software stack for robot-drivable add-on mechanisms: transmission
//! kinematics, motion-profile authoring, a virtual gripper testbed, the
//! tag-to-profile registry and the control server.

pub mod cli;
pub mod device;
pub mod kinematics;
pub mod profile;
pub mod registry;
pub mod server;
pub mod tag;
pub mod testbed;

pub use kinematics::{
    chain_output, chain_reflect_load, chain_transmit, motor_output, MotorSpec, ShaftState,
    TransmissionChain, TransmissionStage,
};
pub use profile::{make_template, Keypoint, MotionProfile, TemplateKind};
pub use registry::{ObjectRecord, Registry};
pub use tag::TagId;
pub use testbed::{builtin_catalog, run_task, Scenario, TaskOutcome, VirtualObject};
