//! Product-matrix regenerating codes that repair nodes and reconstruct data
//! in the presence of whole-response erasures and errors.
//!
//! The encoding is the ordinary error-free one; resilience is chosen per
//! repair or reconstruction by contacting `s + 2t` extra nodes.

pub mod code;
pub mod decoder;
pub mod encoding;
pub mod error;
pub mod field;
pub mod matrix;
pub mod mbr;
pub mod msr;
pub mod params;
pub mod sim;

pub use code::{NodeShare, PmCode, RegeneratingCode, RepairDecoder, Response};
pub use encoding::EncodingMatrix;
pub use error::{Error, Result};
pub use field::{FieldElement, PrimeField};
pub use matrix::Matrix;
pub use mbr::{MbrCode, MbrMessage};
pub use msr::{MsrCode, MsrMessage};
pub use params::{capacity_bound, resilient_bound, Mode, SystemParams};
