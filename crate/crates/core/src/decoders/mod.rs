//! Outer decoders that stitch per-slot detections into messages.

pub mod mpa;
pub mod soft;
pub mod tree;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use mpa::{mpa_llr, path_metric_update, MpaCandidate};
pub use soft::{beam_tree_decode_soft, interference_cancel, similarity, SoftConfig};
pub use tree::{beam_tree_decode_hard, tree_decode_traditional, DEFAULT_PATH_CAP};

use crate::error::{Error, Result};
use crate::tree_code::{is_parity_consistent, Message, ParityMatrices, TreeCodeProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Traditional,
    Hard,
    Soft,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 3] = [DecoderKind::Traditional, DecoderKind::Hard, DecoderKind::Soft];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Traditional => "traditional",
            DecoderKind::Hard => "hard",
            DecoderKind::Soft => "soft",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "traditional" | "tree" => Ok(DecoderKind::Traditional),
            "hard" => Ok(DecoderKind::Hard),
            "soft" => Ok(DecoderKind::Soft),
            other => Err(Error::Parse(format!("unknown decoder `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedMessage {
    pub message: Message,
    /// Codeword index chosen in every sub-slot.
    pub indices: Vec<u32>,
    /// Path metric; only the soft decoder assigns one.
    pub pm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodedList {
    pub messages: Vec<DecodedMessage>,
    /// Roots whose path list hit the size cap and was truncated.
    pub truncated_roots: usize,
}

impl DecodedList {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn message_set(&self) -> BTreeSet<Message> {
        self.messages.iter().map(|m| m.message.clone()).collect()
    }

    /// True when every message carries parity-consistent indices that
    /// re-encode to itself.
    pub fn is_sound(&self, profile: &TreeCodeProfile, matrices: &ParityMatrices) -> bool {
        self.messages.iter().all(|m| {
            is_parity_consistent(&m.indices, profile, matrices)
                && Message::from_indices(profile, &m.indices) == m.message
        })
    }
}
