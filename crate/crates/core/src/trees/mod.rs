//! Tree learners: Hoeffding tree, Hoeffding adaptive tree and the
//! stochastic gradient tree, with their shared split machinery.

pub mod adwin;
pub mod hoeffding;
pub mod observer;
pub mod sgt;
pub mod split;

pub use adwin::Adwin;
pub use hoeffding::{AdaptiveStats, HoeffdingTree, HtConfig, NodeSummary};
pub use sgt::{Sgt, SgtConfig};
pub use split::{hoeffding_bound, info_gain};
