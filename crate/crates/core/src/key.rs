//! Encryption keys: two 256-bit seeds bound to a geometry and restriction levels.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand_core::{OsRng, TryRngCore};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::perm::{Permutation, RestrictionSpec};
use crate::stream::{Seed, SeededStream};

pub const KEY_FILE_VERSION: u64 = 1;
pub const KEY_EXTENSION: &str = "pbkey";

/// Image height, width and channel count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Geometry {
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Geometry {
    pub fn new(h: usize, w: usize, c: usize) -> Self {
        Self { h, w, c }
    }

    pub fn len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.h, self.w, self.c)
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    /// Parses `HxWxC`.
    fn from_str(s: &str) -> Result<Self> {
        let dims = s
            .split('x')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse("geometry", format!("{s:?}: {e}")))?;
        match dims[..] {
            [h, w, c] => Ok(Self { h, w, c }),
            _ => Err(Error::parse("geometry", format!("{s:?}: expected HxWxC"))),
        }
    }
}

/// Block size, grid shape and the derived block count `N` and block length `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub p: usize,
    pub geometry: Geometry,
}

impl BlockLayout {
    pub fn new(p: usize, geometry: Geometry) -> Result<Self> {
        let Geometry { h, w, c } = geometry;
        if p == 0 {
            return Err(Error::validation("block size p must be positive"));
        }
        if c == 0 {
            return Err(Error::validation("channel count must be positive"));
        }
        if h < p || w < p || h % p != 0 || w % p != 0 {
            return Err(Error::validation(format!(
                "image {h}x{w} is not divisible into {p}x{p} blocks"
            )));
        }
        Ok(Self { p, geometry })
    }

    pub fn grid_h(&self) -> usize {
        self.geometry.h / self.p
    }

    pub fn grid_w(&self) -> usize {
        self.geometry.w / self.p
    }

    /// Number of blocks, N.
    pub fn n_blocks(&self) -> usize {
        self.grid_h() * self.grid_w()
    }

    /// Values per block, L = p²c.
    pub fn block_len(&self) -> usize {
        self.p * self.p * self.geometry.c
    }
}

/// Public digest of a key's canonical serialization (first 128 bits of SHA-256).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct KeyFingerprint(String);

impl TryFrom<String> for KeyFingerprint {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<KeyFingerprint> for String {
    fn from(f: KeyFingerprint) -> String {
        f.0
    }
}

impl KeyFingerprint {
    pub fn parse(s: &str) -> Result<Self> {
        if s.len() != 32 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::parse(
                "fingerprint",
                format!("expected 32 hex chars, got {s:?}"),
            ));
        }
        Ok(Self(s.to_ascii_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for KeyFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct EncryptionKey {
    k1: Seed,
    k2: Seed,
    layout: BlockLayout,
    n_bs: usize,
    n_ps: usize,
}

// Seeds stay out of debug output.
impl fmt::Debug for EncryptionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EncryptionKey")
            .field("fingerprint", &self.fingerprint())
            .field("p", &self.layout.p)
            .field("geometry", &self.layout.geometry)
            .field("n_bs", &self.n_bs)
            .field("n_ps", &self.n_ps)
            .finish()
    }
}

#[derive(Serialize)]
struct KeyRecord<'a> {
    version: u64,
    k1: &'a str,
    k2: &'a str,
    p: usize,
    n_bs: usize,
    n_ps: usize,
    h: usize,
    w: usize,
    c: usize,
}

impl EncryptionKey {
    /// Fresh key with seeds from the operating system's entropy source.
    pub fn generate(p: usize, n_bs: usize, n_ps: usize, geometry: Geometry) -> Result<Self> {
        let mut k1 = [0u8; 32];
        let mut k2 = [0u8; 32];
        OsRng
            .try_fill_bytes(&mut k1)
            .and_then(|_| OsRng.try_fill_bytes(&mut k2))
            .map_err(|e| Error::validation(format!("entropy source unavailable: {e}")))?;
        Self::from_seeds(k1, k2, p, n_bs, n_ps, geometry)
    }

    /// Reproducible key whose seeds are derived from a demo seed value.
    pub fn from_demo_seed(
        seed: u64,
        p: usize,
        n_bs: usize,
        n_ps: usize,
        geometry: Geometry,
    ) -> Result<Self> {
        let derive = |tag: &[u8]| -> Seed {
            let mut h = Sha256::new();
            h.update(b"blockperm-demo-seed/");
            h.update(tag);
            h.update(seed.to_le_bytes());
            h.finalize().into()
        };
        Self::from_seeds(derive(b"k1"), derive(b"k2"), p, n_bs, n_ps, geometry)
    }

    pub fn from_seeds(
        k1: Seed,
        k2: Seed,
        p: usize,
        n_bs: usize,
        n_ps: usize,
        geometry: Geometry,
    ) -> Result<Self> {
        let layout = Self::check_params(p, n_bs, n_ps, geometry)?;
        Ok(Self {
            k1,
            k2,
            layout,
            n_bs,
            n_ps,
        })
    }

    /// Validates block size, geometry and restriction bounds without generating seeds.
    pub fn check_params(
        p: usize,
        n_bs: usize,
        n_ps: usize,
        geometry: Geometry,
    ) -> Result<BlockLayout> {
        let layout = BlockLayout::new(p, geometry)?;
        let (n, l) = (layout.n_blocks(), layout.block_len());
        if n_bs > n {
            return Err(Error::validation(format!("n_bs exceeds N={n}")));
        }
        if n_ps > l {
            return Err(Error::validation(format!("n_ps exceeds L={l}")));
        }
        Ok(layout)
    }

    /// Same seeds and geometry with different restriction levels.
    pub fn with_restriction(&self, n_bs: usize, n_ps: usize) -> Result<Self> {
        Self::from_seeds(
            self.k1,
            self.k2,
            self.layout.p,
            n_bs,
            n_ps,
            self.layout.geometry,
        )
    }

    pub fn k1(&self) -> &Seed {
        &self.k1
    }

    pub fn k2(&self) -> &Seed {
        &self.k2
    }

    pub fn p(&self) -> usize {
        self.layout.p
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn n_ps(&self) -> usize {
        self.n_ps
    }

    pub fn geometry(&self) -> Geometry {
        self.layout.geometry
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    /// Independent streams for the block permutation (from k1) and the pixel permutation (from k2).
    pub fn derive_streams(&self) -> (SeededStream, SeededStream) {
        (SeededStream::new(self.k1), SeededStream::new(self.k2))
    }

    /// Generates the block permutation (length N) and pixel permutation (length L).
    pub fn permutations(&self) -> (Permutation, Permutation) {
        let (mut s_bs, mut s_ps) = self.derive_streams();
        let bs = RestrictionSpec::new(self.layout.n_blocks(), self.n_bs)
            .expect("bounds checked at construction");
        let ps = RestrictionSpec::new(self.layout.block_len(), self.n_ps)
            .expect("bounds checked at construction");
        (
            Permutation::generate(&mut s_bs, &bs),
            Permutation::generate(&mut s_ps, &ps),
        )
    }

    /// Canonical JSON serialization (the key file contents).
    pub fn to_json(&self) -> String {
        let (k1, k2) = (hex::encode(self.k1), hex::encode(self.k2));
        let g = self.layout.geometry;
        let rec = KeyRecord {
            version: KEY_FILE_VERSION,
            k1: &k1,
            k2: &k2,
            p: self.layout.p,
            n_bs: self.n_bs,
            n_ps: self.n_ps,
            h: g.h,
            w: g.w,
            c: g.c,
        };
        let mut s = serde_json::to_string_pretty(&rec).expect("key record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::parse("key", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("key", "expected a JSON object"))?;
        let version = get_uint(obj, "version")?;
        if version != KEY_FILE_VERSION as usize {
            return Err(Error::parse(
                "version",
                format!("unsupported version {version}"),
            ));
        }
        let k1 = get_seed(obj, "k1")?;
        let k2 = get_seed(obj, "k2")?;
        let p = get_uint(obj, "p")?;
        let n_bs = get_uint(obj, "n_bs")?;
        let n_ps = get_uint(obj, "n_ps")?;
        let geometry = Geometry::new(
            get_uint(obj, "h")?,
            get_uint(obj, "w")?,
            get_uint(obj, "c")?,
        );
        Self::from_seeds(k1, k2, p, n_bs, n_ps, geometry)
    }

    pub fn fingerprint(&self) -> KeyFingerprint {
        let digest = Sha256::digest(self.to_json().as_bytes());
        KeyFingerprint(hex::encode(&digest[..16]))
    }

    /// Writes the key file, owner-readable only on Unix.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut opts = fs::OpenOptions::new();
        opts.write(true).create(true).truncate(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            opts.mode(0o600);
        }
        let mut f = opts.open(path).map_err(|e| Error::io(path, e))?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            f.set_permissions(fs::Permissions::from_mode(0o600))
                .map_err(|e| Error::io(path, e))?;
        }
        f.write_all(self.to_json().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn get_uint(obj: &Map<String, Value>, field: &str) -> Result<usize> {
    let v = obj
        .get(field)
        .ok_or_else(|| Error::parse(field, "missing"))?;
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::parse(field, format!("expected a non-negative integer, got {v}")))
}

fn get_seed(obj: &Map<String, Value>, field: &str) -> Result<Seed> {
    let s = obj
        .get(field)
        .ok_or_else(|| Error::parse(field, "missing"))?
        .as_str()
        .ok_or_else(|| Error::parse(field, "expected a hex string"))?;
    if s.len() != 64 {
        return Err(Error::parse(
            field,
            format!("expected 64 hex chars, got {}", s.len()),
        ));
    }
    let mut seed = [0u8; 32];
    hex::decode_to_slice(s, &mut seed).map_err(|e| Error::parse(field, e.to_string()))?;
    Ok(seed)
}
