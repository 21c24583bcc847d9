//! Restricted random permutations in index-vector form.
//!
//! A [`Permutation`] stores `map`, where `map[j]` is the source index that
//! feeds destination `j` (zero-based). Its dense matrix `E` has
//! `E[i][j] = 1` iff `map[j] == i`, so applying it to a row vector `v` is
//! the product `v * E`, and the inverse is the transpose.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stream::IndexStream;

/// Number and (optionally) positions of forced fixed points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictionSpec {
    length: usize,
    n_fixed: usize,
    fixed_positions: Option<Vec<usize>>,
}

impl RestrictionSpec {
    /// Restriction whose fixed positions are drawn from the stream at generation time.
    pub fn new(length: usize, n_fixed: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::validation("permutation length must be positive"));
        }
        if n_fixed > length {
            return Err(Error::validation(format!(
                "n_fixed {n_fixed} exceeds length {length}"
            )));
        }
        Ok(Self {
            length,
            n_fixed,
            fixed_positions: None,
        })
    }

    /// Restriction with explicitly chosen fixed positions (zero-based).
    pub fn with_positions(length: usize, mut positions: Vec<usize>) -> Result<Self> {
        let mut spec = Self::new(length, positions.len())?;
        positions.sort_unstable();
        if let Some(w) = positions.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation(format!(
                "duplicate fixed position {}",
                w[0]
            )));
        }
        if let Some(&last) = positions.last() {
            if last >= length {
                return Err(Error::validation(format!(
                    "fixed position {last} out of range for length {length}"
                )));
            }
        }
        spec.fixed_positions = Some(positions);
        Ok(spec)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn n_fixed(&self) -> usize {
        self.n_fixed
    }

    pub fn fixed_positions(&self) -> Option<&[usize]> {
        self.fixed_positions.as_deref()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
    n_fixed: usize,
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Permutation")
            .field("n_fixed", &self.n_fixed)
            .field("map", &self.map)
            .finish()
    }
}

impl Permutation {
    pub fn identity(length: usize) -> Self {
        Self {
            map: (0..length).collect(),
            n_fixed: length,
        }
    }

    /// Builds a permutation from a zero-based source map, validating bijectivity.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        if n == 0 {
            return Err(Error::validation("permutation length must be positive"));
        }
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n {
                return Err(Error::validation(format!(
                    "index {m} out of range for length {n}"
                )));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::validation(format!("index {m} appears twice")));
            }
        }
        Ok(Self { map, n_fixed: 0 })
    }

    /// Same as [`from_map`](Self::from_map) but for one-based maps as written in matrix notation.
    pub fn from_one_based(map: &[usize]) -> Result<Self> {
        if map.contains(&0) {
            return Err(Error::validation("one-based map contains 0"));
        }
        Self::from_map(map.iter().map(|&m| m - 1).collect())
    }

    /// Draws a permutation honoring `spec`.
    ///
    /// Stream consumption order: if the spec carries no positions, `n_fixed`
    /// positions are selected by a partial Fisher-Yates over `0..length` and
    /// sorted. The remaining positions, in ascending order, then have their
    /// sources shuffled with a decreasing-index swap shuffle. The residual is
    /// not forced to be a derangement, so extra fixed points can occur.
    pub fn generate<S: IndexStream>(stream: &mut S, spec: &RestrictionSpec) -> Self {
        let n = spec.length;
        let fixed = match &spec.fixed_positions {
            Some(p) => p.clone(),
            None => select_positions(stream, n, spec.n_fixed),
        };

        let mut is_fixed = vec![false; n];
        for &p in &fixed {
            is_fixed[p] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&j| !is_fixed[j]).collect();
        let mut sources = free.clone();
        for i in (1..sources.len()).rev() {
            let j = stream.below(i + 1);
            sources.swap(i, j);
        }

        let mut map: Vec<usize> = (0..n).collect();
        for (&dst, &src) in free.iter().zip(&sources) {
            map[dst] = src;
        }
        Self {
            map,
            n_fixed: spec.n_fixed,
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Zero-based source map.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// Number of fixed points requested when the permutation was generated.
    pub fn n_fixed(&self) -> usize {
        self.n_fixed
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(j, &m)| j == m)
    }

    /// `out[j] = v[map[j]]`, i.e. the row-vector product `v * E`.
    pub fn apply<T: Clone>(&self, v: &[T]) -> Result<Vec<T>> {
        self.check_len(v.len())?;
        Ok(self.map.iter().map(|&m| v[m].clone()).collect())
    }

    /// Writes `v * E` into `out` without allocating.
    pub fn apply_into<T: Copy>(&self, v: &[T], out: &mut [T]) -> Result<()> {
        self.check_len(v.len())?;
        self.check_len(out.len())?;
        for (o, &m) in out.iter_mut().zip(&self.map) {
            *o = v[m];
        }
        Ok(())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (j, &m) in self.map.iter().enumerate() {
            inv[m] = j;
        }
        Self {
            map: inv,
            n_fixed: self.n_fixed,
        }
    }

    /// `self` after `first`: applying the result equals applying `first` then `self`.
    pub fn compose(&self, first: &Permutation) -> Result<Self> {
        self.check_len(first.len())?;
        Ok(Self {
            map: self.map.iter().map(|&m| first.map[m]).collect(),
            n_fixed: 0,
        })
    }

    pub fn count_fixed_points(&self) -> usize {
        self.map
            .iter()
            .enumerate()
            .filter(|&(j, &m)| j == m)
            .count()
    }

    /// Dense 0/1 matrix with `E[i][j] = 1` iff `map[j] == i`. Test oracle only.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let n = self.map.len();
        let mut e = vec![vec![0u8; n]; n];
        for (j, &i) in self.map.iter().enumerate() {
            e[i][j] = 1;
        }
        e
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.map.len() {
            return Err(Error::validation(format!(
                "vector length {got} does not match permutation length {}",
                self.map.len()
            )));
        }
        Ok(())
    }
}

fn select_positions<S: IndexStream>(stream: &mut S, n: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + stream.below(n - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

/// Text export: `length n_fixed` on the first line, the zero-based map on the second.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.map.len(), self.n_fixed)?;
        let mut first = true;
        for m in &self.map {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{m}")?;
            first = false;
        }
        writeln!(f)
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("header", "empty input"))?;
        let mut parts = header.split_whitespace();
        let mut field = |name: &str| -> Result<usize> {
            parts
                .next()
                .ok_or_else(|| Error::parse(name, "missing"))?
                .parse()
                .map_err(|e| Error::parse(name, format!("{e}")))
        };
        let length = field("length")?;
        let n_fixed = field("n_fixed")?;
        let map = lines
            .next()
            .ok_or_else(|| Error::parse("map", "missing"))?
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|e| Error::parse("map", format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        if map.len() != length {
            return Err(Error::parse(
                "map",
                format!("expected {length} entries, found {}", map.len()),
            ));
        }
        let mut perm = Self::from_map(map)?;
        if n_fixed > perm.count_fixed_points() {
            return Err(Error::parse(
                "n_fixed",
                format!("{n_fixed} exceeds the map's fixed points"),
            ));
        }
        perm.n_fixed = n_fixed;
        Ok(perm)
    }
}
