//! Conversation-tree recipe engine for grade-aligned knowledge scaffolding,
//! plus the building blocks of its evaluation: a chat-provider gateway with
//! record/replay fixtures, reply text metrics and the stimulus grid.

pub mod grid;
mod normalize;
pub mod provider;
pub mod recipe;
pub mod textmetrics;

pub use recipe::{GradeLevel, KnowledgeLevel, Mode};

use sha2::{Digest, Sha256};

/// Lower-case hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}
