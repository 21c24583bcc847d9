//! Scrambling-strength measurements and side-by-side contact sheets.

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cipher::{Cipher, EncryptedImage};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::key::{BlockLayout, EncryptionKey, Geometry};
use crate::perm::Permutation;

/// Peak signal-to-noise ratio with peak 255; identical images are `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(db) => write!(f, "{db:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Psnr::Finite(db) => s.serialize_f64(*db),
            Psnr::Infinite => s.serialize_str("inf"),
        }
    }
}

pub fn psnr(a: &Image, b: &Image) -> Result<Psnr> {
    same_geometry(a, b)?;
    let se: u64 = a
        .as_bytes()
        .iter()
        .zip(b.as_bytes())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    if se == 0 {
        return Ok(Psnr::Infinite);
    }
    let mse = se as f64 / a.as_bytes().len() as f64;
    Ok(Psnr::Finite(10.0 * (255.0f64 * 255.0 / mse).log10()))
}

/// Pearson correlation over all samples. With a constant input the
/// coefficient is undefined; it is reported as 1 for identical images and 0 otherwise.
pub fn pearson(a: &Image, b: &Image) -> Result<f64> {
    same_geometry(a, b)?;
    Ok(pearson_slices(a.as_bytes(), b.as_bytes()))
}

pub(crate) fn pearson_slices(a: &[u8], b: &[u8]) -> f64 {
    if a == b {
        return 1.0;
    }
    let n = a.len() as f64;
    let (mut sa, mut sb) = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        sa += x as u64;
        sb += y as u64;
    }
    let (ma, mb) = (sa as f64 / n, sb as f64 / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    (cov / (va * vb).sqrt()).clamp(-1.0, 1.0)
}

/// Mean grid Manhattan distance between each block's source and destination cell.
pub fn mean_block_displacement(layout: &BlockLayout, e_bs: &Permutation) -> f64 {
    let gw = layout.grid_w();
    let total: usize = e_bs
        .map()
        .iter()
        .enumerate()
        .map(|(dst, &src)| (dst / gw).abs_diff(src / gw) + (dst % gw).abs_diff(src % gw))
        .sum();
    total as f64 / e_bs.len() as f64
}

fn same_geometry(a: &Image, b: &Image) -> Result<()> {
    if a.geometry() != b.geometry() {
        return Err(Error::validation(format!(
            "geometry mismatch: {} vs {}",
            a.geometry(),
            b.geometry()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EncryptionReport {
    pub n_bs: usize,
    pub n_ps: usize,
    /// Realized fixed points of the block permutation.
    pub fixed_bs: usize,
    /// Realized fixed points of the pixel permutation.
    pub fixed_ps: usize,
    pub mean_displacement: f64,
    pub correlation: f64,
    pub psnr_db: Psnr,
}

pub const REPORT_CSV_HEADER: &str =
    "n_bs,n_ps,fixed_bs,fixed_ps,mean_displacement,correlation,psnr_db";

impl EncryptionReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{}",
            self.n_bs,
            self.n_ps,
            self.fixed_bs,
            self.fixed_ps,
            self.mean_displacement,
            self.correlation,
            self.psnr_db
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn measure(
    plain: &Image,
    cipher: &EncryptedImage,
    key: &EncryptionKey,
) -> Result<EncryptionReport> {
    let c = Cipher::new(key);
    if cipher.fingerprint() != c.fingerprint() {
        return Err(Error::KeyMismatch {
            expected: c.fingerprint().to_string(),
            found: cipher.fingerprint().to_string(),
        });
    }
    if plain.geometry() != key.geometry() {
        return Err(Error::validation(format!(
            "plain image geometry {} does not match key geometry {}",
            plain.geometry(),
            key.geometry()
        )));
    }
    report(plain, &cipher.image, &c)
}

fn report(plain: &Image, cipher: &Image, c: &Cipher) -> Result<EncryptionReport> {
    Ok(EncryptionReport {
        n_bs: c.provenance().n_bs,
        n_ps: c.provenance().n_ps,
        fixed_bs: c.block_permutation().count_fixed_points(),
        fixed_ps: c.pixel_permutation().count_fixed_points(),
        mean_displacement: mean_block_displacement(&c.layout(), c.block_permutation()),
        correlation: pearson(plain, cipher)?,
        psnr_db: psnr(plain, cipher)?,
    })
}

/// Encrypts `plain` under each `(n_bs, n_ps)` setting with `key`'s seeds and reports on each.
pub fn sweep(
    plain: &Image,
    key: &EncryptionKey,
    settings: &[(usize, usize)],
) -> Result<Vec<EncryptionReport>> {
    settings
        .par_iter()
        .map(|&(n_bs, n_ps)| {
            let c = Cipher::new(&key.with_restriction(n_bs, n_ps)?);
            let enc = c.encrypt(plain)?;
            report(plain, &enc.image, &c)
        })
        .collect()
}

/// Parses `n_bs:n_ps[,n_bs:n_ps...]`.
pub fn parse_settings(s: &str) -> Result<Vec<(usize, usize)>> {
    let settings =
        s.split(',')
            .map(|pair| {
                let (a, b) = pair.trim().split_once(':').ok_or_else(|| {
                    Error::parse("settings", format!("{pair:?}: expected n_bs:n_ps"))
                })?;
                let num = |t: &str| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::parse("settings", format!("{pair:?}: {e}")))
                };
                Ok((num(a)?, num(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
    if settings.is_empty() {
        return Err(Error::parse("settings", "no settings given"));
    }
    Ok(settings)
}

const GLYPH_W: usize = 3;
const GLYPH_H: usize = 5;
const SCALE: usize = 2;
const MARGIN: usize = 4;
const LABEL_H: usize = GLYPH_H * SCALE + 2 * MARGIN;

fn glyph(ch: char) -> [u8; GLYPH_H] {
    match ch {
        '0' => [7, 5, 5, 5, 7],
        '1' => [2, 6, 2, 2, 7],
        '2' => [7, 1, 7, 4, 7],
        '3' => [7, 1, 7, 1, 7],
        '4' => [5, 5, 7, 1, 1],
        '5' => [7, 4, 7, 1, 7],
        '6' => [7, 4, 7, 5, 7],
        '7' => [7, 1, 1, 1, 1],
        '8' => [7, 5, 7, 5, 7],
        '9' => [7, 5, 7, 1, 7],
        'A' => [2, 5, 7, 5, 5],
        'B' => [6, 5, 6, 5, 6],
        'I' => [7, 2, 2, 2, 7],
        'L' => [4, 4, 4, 4, 7],
        'N' => [6, 5, 5, 5, 5],
        'P' => [7, 5, 7, 4, 4],
        'S' => [3, 4, 2, 1, 6],
        '=' => [0, 7, 0, 7, 0],
        _ => [0; GLYPH_H],
    }
}

fn draw_text(img: &mut Image, text: &str, y0: usize, x0: usize) {
    for (i, ch) in text.chars().enumerate() {
        let rows = glyph(ch);
        let gx = x0 + i * (GLYPH_W + 1) * SCALE;
        for (r, bits) in rows.iter().enumerate() {
            for col in 0..GLYPH_W {
                if bits & (1 << (GLYPH_W - 1 - col)) == 0 {
                    continue;
                }
                for sy in 0..SCALE {
                    for sx in 0..SCALE {
                        let (y, x) = (y0 + r * SCALE + sy, gx + col * SCALE + sx);
                        if y < img.height() && x < img.width() {
                            for c in 0..img.channels() {
                                img.set(y, x, c, 0);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Grid of labelled tiles: the plain image, then one ciphertext per setting,
/// all generated from the same seeds. Two tiles per row.
pub fn contact_sheet(
    plain: &Image,
    key: &EncryptionKey,
    settings: &[(usize, usize)],
) -> Result<Image> {
    if settings.is_empty() {
        return Err(Error::validation(
            "contact sheet needs at least one setting",
        ));
    }
    let mut tiles = vec![("PLAIN".to_string(), plain.clone())];
    let encrypted = settings
        .par_iter()
        .map(|&(n_bs, n_ps)| {
            let enc = Cipher::new(&key.with_restriction(n_bs, n_ps)?).encrypt(plain)?;
            Ok((format!("BS={n_bs} PS={n_ps}"), enc.image))
        })
        .collect::<Result<Vec<_>>>()?;
    tiles.extend(encrypted);

    let cols = 2;
    let rows = tiles.len().div_ceil(cols);
    let (th, tw) = (plain.height() + LABEL_H, plain.width());
    let g = Geometry::new(
        rows * th + (rows + 1) * MARGIN,
        cols * tw + (cols + 1) * MARGIN,
        plain.channels(),
    );
    let mut sheet = Image::filled(g, 255);
    for (i, (label, tile)) in tiles.iter().enumerate() {
        let y = MARGIN + (i / cols) * (th + MARGIN);
        let x = MARGIN + (i % cols) * (tw + MARGIN);
        sheet.blit(tile, y, x)?;
        draw_text(&mut sheet, label, y + tile.height() + MARGIN, x);
    }
    Ok(sheet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{encrypt, partition};

    fn photo(g: Geometry) -> Image {
        // smooth gradients with some texture, a stand-in for a natural image
        Image::from_fn(g, |y, x, c| {
            let v =
                (y as f64 * 0.9 + x as f64 * 0.4 + c as f64 * 30.0 + ((x * y) % 17) as f64) % 256.0;
            v as u8
        })
    }

    fn key(n_bs: usize, n_ps: usize) -> EncryptionKey {
        EncryptionKey::from_seeds(
            [11; 32],
            [12; 32],
            16,
            n_bs,
            n_ps,
            Geometry::new(224, 224, 3),
        )
        .unwrap()
    }

    #[test]
    fn identity_report() {
        let img = photo(Geometry::new(224, 224, 3));
        let k = key(196, 768);
        let r = measure(&img, &encrypt(&img, &k).unwrap(), &k).unwrap();
        assert_eq!(r.correlation, 1.0);
        assert_eq!(r.psnr_db, Psnr::Infinite);
        assert_eq!(r.mean_displacement, 0.0);
        assert_eq!((r.fixed_bs, r.fixed_ps), (196, 768));
        assert!(r.csv_row().ends_with(",inf"));
        assert!(r.to_json().contains("\"psnr_db\": \"inf\""));
    }

    #[test]
    fn conventional_report_is_decorrelated() {
        let img = photo(Geometry::new(224, 224, 3));
        let k = key(0, 0);
        let r = measure(&img, &encrypt(&img, &k).unwrap(), &k).unwrap();
        assert!(r.correlation.abs() < 0.2, "{r:?}");
        assert!(matches!(r.psnr_db, Psnr::Finite(db) if db > 0.0));
        assert!(r.mean_displacement > 1.0);
    }

    #[test]
    fn pixel_only_keeps_blocks_in_place() {
        let img = photo(Geometry::new(224, 224, 3));
        let k = key(196, 0);
        let enc = encrypt(&img, &k).unwrap();
        let r = measure(&img, &enc, &k).unwrap();
        assert_eq!(r.mean_displacement, 0.0);
        let (pg, cg) = (
            partition(&img, 16).unwrap(),
            partition(&enc.image, 16).unwrap(),
        );
        for (a, b) in pg.blocks().zip(cg.blocks()) {
            if a.iter().any(|&v| v != a[0]) {
                assert!(pearson_slices(a, b) < 1.0);
            }
        }
    }

    #[test]
    fn displacement_example() {
        let layout = BlockLayout::new(1, Geometry::new(2, 2, 1)).unwrap();
        // block 0 <- 3 (distance 2), 1 <- 1, 2 <- 2, 3 <- 0 (distance 2)
        let e = Permutation::from_map(vec![3, 1, 2, 0]).unwrap();
        assert_eq!(mean_block_displacement(&layout, &e), 1.0);
    }

    #[test]
    fn psnr_and_pearson_values() {
        let g = Geometry::new(1, 2, 1);
        let a = Image::new(g, vec![0, 10]).unwrap();
        let b = Image::new(g, vec![10, 0]).unwrap();
        // mse = 100 -> 10*log10(65025/100)
        let Psnr::Finite(db) = psnr(&a, &b).unwrap() else {
            panic!()
        };
        assert!((db - 28.130_803_608_679_1).abs() < 1e-9);
        assert!((pearson(&a, &b).unwrap() + 1.0).abs() < 1e-12);
        let flat = Image::filled(g, 4);
        assert_eq!(pearson(&flat, &flat).unwrap(), 1.0);
        assert_eq!(pearson(&flat, &a).unwrap(), 0.0);
        assert!(pearson(&a, &Image::filled(Geometry::new(2, 1, 1), 0)).is_err());
    }

    #[test]
    fn mismatched_key_rejected() {
        let img = photo(Geometry::new(224, 224, 3));
        let enc = encrypt(&img, &key(0, 0)).unwrap();
        assert!(matches!(
            measure(&img, &enc, &key(1, 0)),
            Err(Error::KeyMismatch { .. })
        ));
    }

    #[test]
    fn settings_parse() {
        assert_eq!(parse_settings("0:0, 196:0").unwrap(), [(0, 0), (196, 0)]);
        assert!(parse_settings("0-0").is_err());
        assert!(parse_settings("a:1").is_err());
    }

    #[test]
    fn sheet_layout_and_determinism() {
        let g = Geometry::new(32, 32, 3);
        let img = photo(g);
        let k = EncryptionKey::from_seeds([1; 32], [2; 32], 16, 0, 0, g).unwrap();
        let sheet = contact_sheet(&img, &k, &[(4, 768)]).unwrap();
        // one row of two tiles
        assert_eq!(sheet.height(), 32 + LABEL_H + 2 * MARGIN);
        assert_eq!(sheet.width(), 2 * 32 + 3 * MARGIN);
        let tile = |x0| Image::from_fn(g, |y, x, c| sheet.get(MARGIN + y, x0 + x, c));
        assert_eq!(tile(MARGIN), img);
        assert_eq!(tile(2 * MARGIN + 32), img);
        assert_eq!(contact_sheet(&img, &k, &[(4, 768)]).unwrap(), sheet);
        assert!(contact_sheet(&img, &k, &[]).is_err());
    }
}
