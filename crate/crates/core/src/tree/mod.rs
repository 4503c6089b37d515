//! Permanence, channel detection and branching trees.

pub mod channels;
pub mod permanence;
pub mod structure;

pub use channels::detect_channels;
pub use permanence::{check_psd_partition, w_plus, PermanenceReport, PsdCheckReport};
pub use structure::{
    build_tree, verify_tree, ChannelSnapshot, EdgeRecord, NodeRecord, TreeParams, TreeRecord, TreeSample,
    TreeStructure, TreeVerdict,
};
