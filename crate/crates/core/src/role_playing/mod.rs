//! Decentralized role-playing: agents share process roles through a channel,
//! turn the others' plans into a conflict field and re-solve every step.

pub mod agent;
pub mod channel;
pub mod conflict;
pub mod sim;

pub use agent::{role_play_step, track_position, AgentRuntime, RolePlaySettings};
pub use channel::{MapEntry, Published, SharedChannel, Snapshot};
pub use conflict::{make_conflict_field, ConflictField, Disc, SharingMode};
pub use sim::{metrics, run_simulation, Control, Frame, Metrics, Schedule, SimulationTrace};
