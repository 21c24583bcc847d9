//! Block-wise encryption: partition into p×p blocks, scramble the blocks,
//! permute the values inside every block with one shared permutation, and
//! reassemble.
//!
//! Blocks are ordered row-major over the grid. Each block is vectorized
//! channel-planar: the p² samples of channel 0 row-major, then channel 1,
//! and so on, giving vectors of length L = p²c.

use crate::codec::Provenance;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::key::{BlockLayout, EncryptionKey, KeyFingerprint};
use crate::perm::Permutation;

/// An image split into N block vectors of length L, stored contiguously.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    layout: BlockLayout,
    data: Vec<u8>,
}

impl BlockGrid {
    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn n_blocks(&self) -> usize {
        self.layout.n_blocks()
    }

    pub fn block_len(&self) -> usize {
        self.layout.block_len()
    }

    pub fn block(&self, i: usize) -> &[u8] {
        let l = self.block_len();
        &self.data[i * l..(i + 1) * l]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.block_len())
    }
}

/// `offsets[i * L + k]` is the image buffer index of element `k` of block `i`.
fn block_offsets(layout: &BlockLayout) -> Vec<u32> {
    let p = layout.p;
    let c = layout.geometry.c;
    let w = layout.geometry.w;
    let mut out = Vec::with_capacity(layout.n_blocks() * layout.block_len());
    for gy in 0..layout.grid_h() {
        for gx in 0..layout.grid_w() {
            for ch in 0..c {
                for dy in 0..p {
                    let row = ((gy * p + dy) * w + gx * p) * c + ch;
                    out.extend((0..p).map(|dx| (row + dx * c) as u32));
                }
            }
        }
    }
    out
}

pub fn partition(img: &Image, p: usize) -> Result<BlockGrid> {
    let layout = BlockLayout::new(p, img.geometry())?;
    let src = img.as_bytes();
    let data = block_offsets(&layout)
        .into_iter()
        .map(|o| src[o as usize])
        .collect();
    Ok(BlockGrid { layout, data })
}

pub fn reassemble(grid: &BlockGrid) -> Image {
    let mut data = vec![0u8; grid.layout.geometry.len()];
    for (&o, &v) in block_offsets(&grid.layout).iter().zip(&grid.data) {
        data[o as usize] = v;
    }
    Image::new(grid.layout.geometry, data).expect("grid geometry is valid")
}

/// Output block `i` is input block `e_bs.map()[i]`.
pub fn scramble_blocks(grid: &BlockGrid, e_bs: &Permutation) -> Result<BlockGrid> {
    if e_bs.len() != grid.n_blocks() {
        return Err(Error::validation(format!(
            "block permutation length {} does not match N={}",
            e_bs.len(),
            grid.n_blocks()
        )));
    }
    let mut data = Vec::with_capacity(grid.data.len());
    for &src in e_bs.map() {
        data.extend_from_slice(grid.block(src));
    }
    Ok(BlockGrid {
        layout: grid.layout,
        data,
    })
}

/// Applies the same `e_ps` to every block vector.
pub fn permute_pixels(grid: &BlockGrid, e_ps: &Permutation) -> Result<BlockGrid> {
    if e_ps.len() != grid.block_len() {
        return Err(Error::validation(format!(
            "pixel permutation length {} does not match L={}",
            e_ps.len(),
            grid.block_len()
        )));
    }
    let l = grid.block_len();
    let mut data = vec![0u8; grid.data.len()];
    for (src, dst) in grid.data.chunks_exact(l).zip(data.chunks_exact_mut(l)) {
        e_ps.apply_into(src, dst)?;
    }
    Ok(BlockGrid {
        layout: grid.layout,
        data,
    })
}

/// A ciphertext image plus the public provenance binding it to its key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedImage {
    pub image: Image,
    pub provenance: Provenance,
}

impl EncryptedImage {
    pub fn fingerprint(&self) -> &KeyFingerprint {
        &self.provenance.fingerprint
    }
}

/// Expanded key: both permutations and fused gather tables for one geometry.
///
/// Building it once and reusing it across many images avoids regenerating
/// the permutations per image.
#[derive(Clone, Debug)]
pub struct Cipher {
    layout: BlockLayout,
    provenance: Provenance,
    e_bs: Permutation,
    e_ps: Permutation,
    forward: Vec<u32>,
    backward: Vec<u32>,
}

impl Cipher {
    pub fn new(key: &EncryptionKey) -> Self {
        let (e_bs, e_ps) = key.permutations();
        let layout = key.layout();
        let forward = gather_table(&layout, &e_bs, &e_ps);
        // Decryption undoes the pixel permutation within blocks, then the block
        // scramble; both inverses are transposes of the forward matrices.
        let backward = gather_table(&layout, &e_bs.inverse(), &e_ps.inverse());
        Self {
            layout,
            provenance: Provenance {
                fingerprint: key.fingerprint(),
                n_bs: key.n_bs(),
                n_ps: key.n_ps(),
            },
            e_bs,
            e_ps,
            forward,
            backward,
        }
    }

    pub fn block_permutation(&self) -> &Permutation {
        &self.e_bs
    }

    pub fn pixel_permutation(&self) -> &Permutation {
        &self.e_ps
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn fingerprint(&self) -> &KeyFingerprint {
        &self.provenance.fingerprint
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn check_geometry(&self, img: &Image) -> Result<()> {
        if img.geometry() != self.layout.geometry {
            return Err(Error::validation(format!(
                "image geometry {} does not match key geometry {}",
                img.geometry(),
                self.layout.geometry
            )));
        }
        Ok(())
    }

    pub fn encrypt(&self, img: &Image) -> Result<EncryptedImage> {
        self.check_geometry(img)?;
        Ok(EncryptedImage {
            image: gather(img, &self.forward),
            provenance: self.provenance.clone(),
        })
    }

    /// Inverts [`encrypt`](Self::encrypt). The fingerprint is checked before any pixel work.
    pub fn decrypt(&self, enc: &EncryptedImage) -> Result<Image> {
        if enc.provenance.fingerprint != self.provenance.fingerprint {
            return Err(Error::KeyMismatch {
                expected: self.provenance.fingerprint.to_string(),
                found: enc.provenance.fingerprint.to_string(),
            });
        }
        self.check_geometry(&enc.image)?;
        Ok(gather(&enc.image, &self.backward))
    }

    /// The staged pipeline, kept separate from the fused tables as a cross-check.
    pub fn encrypt_staged(&self, img: &Image) -> Result<Image> {
        self.check_geometry(img)?;
        let grid = partition(img, self.layout.p)?;
        let grid = scramble_blocks(&grid, &self.e_bs)?;
        let grid = permute_pixels(&grid, &self.e_ps)?;
        Ok(reassemble(&grid))
    }

    pub fn decrypt_staged(&self, img: &Image) -> Result<Image> {
        self.check_geometry(img)?;
        let grid = partition(img, self.layout.p)?;
        let grid = permute_pixels(&grid, &self.e_ps.inverse())?;
        let grid = scramble_blocks(&grid, &self.e_bs.inverse())?;
        Ok(reassemble(&grid))
    }
}

/// `table[dst] = src` for the full image: destination element `k` of block `i`
/// reads element `e_ps[k]` of source block `e_bs[i]`.
fn gather_table(layout: &BlockLayout, e_bs: &Permutation, e_ps: &Permutation) -> Vec<u32> {
    let offsets = block_offsets(layout);
    let l = layout.block_len();
    let mut table = vec![0u32; offsets.len()];
    for (i, &src_block) in e_bs.map().iter().enumerate() {
        let dst = &offsets[i * l..(i + 1) * l];
        let src = &offsets[src_block * l..(src_block + 1) * l];
        for (&d, &k) in dst.iter().zip(e_ps.map()) {
            table[d as usize] = src[k];
        }
    }
    table
}

fn gather(img: &Image, table: &[u32]) -> Image {
    let src = img.as_bytes();
    let data = table.iter().map(|&t| src[t as usize]).collect();
    Image::new(img.geometry(), data).expect("geometry preserved")
}

pub fn encrypt(img: &Image, key: &EncryptionKey) -> Result<EncryptedImage> {
    Cipher::new(key).encrypt(img)
}

pub fn decrypt(enc: &EncryptedImage, key: &EncryptionKey) -> Result<Image> {
    if enc.provenance.fingerprint != key.fingerprint() {
        return Err(Error::KeyMismatch {
            expected: key.fingerprint().to_string(),
            found: enc.provenance.fingerprint.to_string(),
        });
    }
    Cipher::new(key).decrypt(enc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::Geometry;

    fn ramp(g: Geometry) -> Image {
        Image::from_fn(g, |y, x, c| (y * 7 + x * 3 + c * 101) as u8)
    }

    fn key(g: Geometry, p: usize, n_bs: usize, n_ps: usize, seed: u8) -> EncryptionKey {
        EncryptionKey::from_seeds([seed; 32], [seed.wrapping_add(1); 32], p, n_bs, n_ps, g).unwrap()
    }

    #[test]
    fn partition_counts() {
        let grid = partition(&ramp(Geometry::new(224, 224, 3)), 16).unwrap();
        assert_eq!((grid.n_blocks(), grid.block_len()), (196, 768));
        let img = ramp(Geometry::new(16, 16, 3));
        let grid = partition(&img, 16).unwrap();
        assert_eq!(grid.n_blocks(), 1);
        assert_eq!(reassemble(&grid), img);
        assert!(partition(&ramp(Geometry::new(24, 32, 3)), 16).is_err());
    }

    #[test]
    fn second_block_is_top_right_quadrant() {
        // encode (row, col) into two channels so every sample is identifiable
        let img = Image::from_fn(Geometry::new(32, 32, 3), |y, x, c| match c {
            0 => y as u8,
            1 => x as u8,
            _ => 200,
        });
        let grid = partition(&img, 16).unwrap();
        let b = grid.block(1);
        let (rows, cols) = (&b[..256], &b[256..512]);
        for dy in 0..16 {
            for dx in 0..16 {
                assert_eq!(rows[dy * 16 + dx] as usize, dy);
                assert_eq!(cols[dy * 16 + dx] as usize, 16 + dx);
            }
        }
        assert!(b[512..].iter().all(|&v| v == 200));
    }

    #[test]
    fn scramble_example() {
        let img = Image::from_fn(Geometry::new(4, 4, 1), |y, x, _| {
            ((y / 2) * 2 + x / 2) as u8
        });
        let grid = partition(&img, 2).unwrap();
        let e = Permutation::from_one_based(&[3, 1, 4, 2]).unwrap();
        let out = scramble_blocks(&grid, &e).unwrap();
        let firsts: Vec<u8> = out.blocks().map(|b| b[0]).collect();
        assert_eq!(firsts, [2, 0, 3, 1]);
        assert!(scramble_blocks(&grid, &Permutation::identity(3)).is_err());
        assert_eq!(
            scramble_blocks(&grid, &Permutation::identity(4)).unwrap(),
            grid
        );
    }

    #[test]
    fn permute_pixels_matches_dense_product() {
        let img = ramp(Geometry::new(2, 2, 3));
        let grid = partition(&img, 2).unwrap();
        let e = Permutation::from_map(vec![5, 0, 11, 3, 7, 1, 9, 2, 10, 4, 8, 6]).unwrap();
        let out = permute_pixels(&grid, &e).unwrap();
        let dense = e.to_dense();
        let b = grid.block(0);
        let expect: Vec<u8> = (0..12)
            .map(|j| {
                (0..12)
                    .map(|i| b[i] as u32 * dense[i][j] as u32)
                    .sum::<u32>() as u8
            })
            .collect();
        assert_eq!(out.block(0), &expect[..]);
        assert!(permute_pixels(&grid, &Permutation::identity(11)).is_err());
    }

    #[test]
    fn identity_key_is_identity() {
        let g = Geometry::new(32, 48, 3);
        let img = ramp(g);
        let k = key(g, 16, 6, 768, 1);
        let enc = encrypt(&img, &k).unwrap();
        assert_eq!(enc.image, img);
        assert_eq!(decrypt(&enc, &k).unwrap(), img);
    }

    #[test]
    fn conventional_key_scrambles() {
        let g = Geometry::new(64, 64, 3);
        let img = ramp(g);
        let k = key(g, 16, 0, 0, 2);
        let enc = encrypt(&img, &k).unwrap();
        assert_ne!(enc.image, img);
        assert_eq!(enc.image.histogram(), img.histogram());
        assert_eq!(decrypt(&enc, &k).unwrap(), img);
    }

    #[test]
    fn fused_matches_staged() {
        let g = Geometry::new(8, 12, 3);
        let img = ramp(g);
        for (n_bs, n_ps, seed) in [(0, 0, 3), (2, 5, 4), (6, 0, 5), (0, 12, 6)] {
            let c = Cipher::new(&key(g, 2, n_bs, n_ps, seed));
            let enc = c.encrypt(&img).unwrap();
            assert_eq!(enc.image, c.encrypt_staged(&img).unwrap());
            assert_eq!(c.decrypt_staged(&enc.image).unwrap(), img);
        }
    }

    #[test]
    fn block_only_keeps_block_contents_and_pixel_only_keeps_positions() {
        let g = Geometry::new(64, 64, 3);
        let img = ramp(g);
        let plain = partition(&img, 16).unwrap();

        let enc = encrypt(&img, &key(g, 16, 0, 768, 7)).unwrap();
        let mut a: Vec<&[u8]> = plain.blocks().collect();
        let cgrid = partition(&enc.image, 16).unwrap();
        let mut b: Vec<&[u8]> = cgrid.blocks().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);

        let enc = encrypt(&img, &key(g, 16, 16, 0, 8)).unwrap();
        let cgrid = partition(&enc.image, 16).unwrap();
        for (p, c) in plain.blocks().zip(cgrid.blocks()) {
            let (mut p, mut c) = (p.to_vec(), c.to_vec());
            p.sort_unstable();
            c.sort_unstable();
            assert_eq!(p, c);
        }
    }

    #[test]
    fn wrong_key_rejected_before_decryption() {
        let g = Geometry::new(32, 32, 3);
        let img = ramp(g);
        let k = key(g, 16, 0, 0, 9);
        let other = key(g, 16, 0, 0, 10);
        let enc = encrypt(&img, &k).unwrap();
        let err = decrypt(&enc, &other).unwrap_err();
        assert!(matches!(err, Error::KeyMismatch { .. }));
        // bypassing the fingerprint check still fails to recover the plaintext
        let forged = EncryptedImage {
            image: enc.image.clone(),
            provenance: Cipher::new(&other).provenance().clone(),
        };
        assert_ne!(decrypt(&forged, &other).unwrap(), img);
    }

    #[test]
    fn geometry_mismatch() {
        let k = key(Geometry::new(32, 32, 3), 16, 0, 0, 11);
        let err = encrypt(&ramp(Geometry::new(32, 48, 3)), &k).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
