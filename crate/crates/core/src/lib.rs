//! Unsourced random access over mmWave massive MIMO: beam-domain coded
//! compressed sensing with tree, beam-space hard and beam-space soft decoders.

// `!(x > 0.0)` checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod cs;
pub mod decoders;
pub mod error;
pub mod harness;
pub mod rng;
pub mod tree_code;

pub use channel::{ChannelConfig, ChannelModel};
pub use cs::{Codebook, CsConfig, CsSlotOutput};
pub use decoders::{DecodedList, DecoderKind, SoftConfig};
pub use error::{Error, Result};
pub use harness::{MetricsRow, MetricsTable, SystemConfig, SystemSetup};
pub use tree_code::{CodedMessage, Message, ParityMatrices, TreeCodeProfile};
