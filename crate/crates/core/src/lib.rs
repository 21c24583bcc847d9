//! Keyed block-wise image encryption with restricted random permutations.
//!
//! Images are split into p×p blocks (matching a vision transformer's patch
//! size); the blocks are scrambled by one permutation and the values inside
//! every block by another. Each permutation can be restricted to keep a
//! chosen number of positions fixed, which trades scrambling strength for
//! how much structure a model fine-tuned on the ciphertexts can exploit.

pub mod analysis;
pub mod cipher;
pub mod cli;
pub mod codec;
pub mod dataset;
pub mod error;
pub mod image;
pub mod key;
pub mod perm;
pub mod stream;

pub use cipher::{decrypt, encrypt, BlockGrid, Cipher, EncryptedImage};
pub use codec::Provenance;
pub use error::{Error, Result};
pub use image::Image;
pub use key::{BlockLayout, EncryptionKey, Geometry, KeyFingerprint};
pub use perm::{Permutation, RestrictionSpec};
pub use stream::{IndexStream, SeededStream};
