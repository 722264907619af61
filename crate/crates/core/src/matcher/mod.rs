//! Multi-hop co-attention matching: affinity, hop-1/2/3 attention, feature
//! fusion, the dot-product score, and the ablation variants.

pub mod coattention;
mod config;
mod model;
pub mod values;

pub use coattention::FusedVars;
pub use config::{AblationConfig, Interaction, Pooling};
pub use model::CoBert;
pub use values::{AttentionBundle, Encoded, MatchFeatures};
