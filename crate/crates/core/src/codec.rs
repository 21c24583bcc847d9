//! Lossless image codecs: PNG (via the `png` crate) and binary PNM (P5/P6).
//!
//! Ciphertexts carry their provenance (key fingerprint and restriction
//! levels) inside the file: as `tEXt` chunks in PNG, as a header comment
//! in PNM. No seed material is ever written.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::key::{Geometry, KeyFingerprint};

const TEXT_FINGERPRINT: &str = "blockperm-fingerprint";
const TEXT_N_BS: &str = "blockperm-n_bs";
const TEXT_N_PS: &str = "blockperm-n_ps";
const PNM_TAG: &str = "blockperm";

/// Key fingerprint and restriction levels attached to a ciphertext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub fingerprint: KeyFingerprint,
    pub n_bs: usize,
    pub n_ps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Pnm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("png") => Ok(Self::Png),
            Some("ppm" | "pgm" | "pnm") => Ok(Self::Pnm),
            _ => Err(Error::Format(format!(
                "{}: unsupported image extension (use .png, .ppm or .pgm)",
                path.display()
            ))),
        }
    }

    pub fn sniff(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            Ok(Self::Png)
        } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
            Ok(Self::Pnm)
        } else {
            Err(Error::Format("unrecognized image signature".into()))
        }
    }
}

pub fn encode(img: &Image, format: ImageFormat, prov: Option<&Provenance>) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Png => encode_png(img, prov),
        ImageFormat::Pnm => encode_pnm(img, prov),
    }
}

pub fn decode(bytes: &[u8]) -> Result<(Image, Option<Provenance>)> {
    match ImageFormat::sniff(bytes)? {
        ImageFormat::Png => decode_png(bytes),
        ImageFormat::Pnm => decode_pnm(bytes),
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<(Image, Option<Provenance>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Writes `img` in the format implied by the file extension.
pub fn write_image(path: impl AsRef<Path>, img: &Image, prov: Option<&Provenance>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(img, ImageFormat::from_path(path)?, prov)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_png(img: &Image, prov: Option<&Provenance>) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => png::ColorType::Grayscale,
        2 => png::ColorType::GrayscaleAlpha,
        3 => png::ColorType::Rgb,
        4 => png::ColorType::Rgba,
        c => return Err(Error::Format(format!("PNG cannot store {c} channels"))),
    };
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        if let Some(p) = prov {
            let chunks = [
                (TEXT_FINGERPRINT, p.fingerprint.to_string()),
                (TEXT_N_BS, p.n_bs.to_string()),
                (TEXT_N_PS, p.n_ps.to_string()),
            ];
            for (k, v) in chunks {
                enc.add_text_chunk(k.to_string(), v).map_err(png_err)?;
            }
        }
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(img.as_bytes()).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<(Image, Option<Provenance>)> {
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = dec.read_info().map_err(png_err)?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| Error::Format("PNG too large".into()))?
    ];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(frame.buffer_size());
    let c = frame.color_type.samples();
    let geometry = Geometry::new(frame.height as usize, frame.width as usize, c);
    let img = Image::new(geometry, buf)?;

    let text = &reader.info().uncompressed_latin1_text;
    let lookup = |k: &str| {
        text.iter()
            .find(|t| t.keyword == k)
            .map(|t| t.text.as_str())
    };
    let prov = match lookup(TEXT_FINGERPRINT) {
        None => None,
        Some(fp) => Some(Provenance {
            fingerprint: KeyFingerprint::parse(fp)?,
            n_bs: parse_count(lookup(TEXT_N_BS), "n_bs")?,
            n_ps: parse_count(lookup(TEXT_N_PS), "n_ps")?,
        }),
    };
    Ok((img, prov))
}

fn parse_count(v: Option<&str>, field: &str) -> Result<usize> {
    v.ok_or_else(|| Error::parse(field, "missing provenance field"))?
        .parse()
        .map_err(|e| Error::parse(field, format!("{e}")))
}

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Format(format!("png: {e}"))
}

pub fn encode_pnm(img: &Image, prov: Option<&Provenance>) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::Format(format!("PNM cannot store {c} channels"))),
    };
    let mut header = format!("{magic}\n");
    if let Some(p) = prov {
        header.push_str(&format!(
            "# {PNM_TAG} fingerprint={} n_bs={} n_ps={}\n",
            p.fingerprint, p.n_bs, p.n_ps
        ));
    }
    header.push_str(&format!("{} {}\n255\n", img.width(), img.height()));
    let mut out = header.into_bytes();
    out.extend_from_slice(img.as_bytes());
    Ok(out)
}

pub fn decode_pnm(bytes: &[u8]) -> Result<(Image, Option<Provenance>)> {
    let fmt_err = |m: &str| Error::Format(format!("pnm: {m}"));
    let c = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(fmt_err("expected P5 or P6 magic")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    let mut prov_comment = None;
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    let end = bytes[pos..]
                        .iter()
                        .position(|&b| b == b'\n')
                        .map_or(bytes.len(), |e| pos + e);
                    let line = std::str::from_utf8(&bytes[pos + 1..end])
                        .map_err(|_| fmt_err("non-UTF-8 comment"))?
                        .trim();
                    if let Some(rest) = line.strip_prefix(PNM_TAG) {
                        prov_comment = Some(rest.trim().to_string());
                    }
                    pos = end;
                }
                Some(_) => break,
                None => return Err(fmt_err("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fmt_err("bad header number"))?;
    }
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(fmt_err("only 8-bit (maxval 255) supported"));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(fmt_err("missing separator after header"));
    }
    pos += 1;
    let geometry = Geometry::new(h, w, c);
    let data = bytes
        .get(pos..pos + geometry.len())
        .ok_or_else(|| fmt_err("truncated pixel data"))?;
    let img = Image::new(geometry, data.to_vec())?;

    let prov = prov_comment.map(|s| parse_pnm_provenance(&s)).transpose()?;
    Ok((img, prov))
}

fn parse_pnm_provenance(s: &str) -> Result<Provenance> {
    let mut fp = None;
    let mut n_bs = None;
    let mut n_ps = None;
    for kv in s.split_whitespace() {
        match kv.split_once('=') {
            Some(("fingerprint", v)) => fp = Some(KeyFingerprint::parse(v)?),
            Some(("n_bs", v)) => n_bs = Some(v),
            Some(("n_ps", v)) => n_ps = Some(v),
            _ => {}
        }
    }
    Ok(Provenance {
        fingerprint: fp.ok_or_else(|| Error::parse("fingerprint", "missing provenance field"))?,
        n_bs: parse_count(n_bs, "n_bs")?,
        n_ps: parse_count(n_ps, "n_ps")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(c: usize) -> Image {
        Image::from_fn(Geometry::new(5, 7, c), |y, x, ch| {
            (y * 31 + x * 7 + ch * 3) as u8
        })
    }

    fn prov() -> Provenance {
        Provenance {
            fingerprint: KeyFingerprint::parse("0123456789abcdef0123456789abcdef").unwrap(),
            n_bs: 3,
            n_ps: 40,
        }
    }

    #[test]
    fn png_round_trip_with_provenance() {
        for c in [1, 2, 3, 4] {
            let img = sample(c);
            let bytes = encode_png(&img, Some(&prov())).unwrap();
            let (back, p) = decode(&bytes).unwrap();
            assert_eq!(back, img);
            assert_eq!(p, Some(prov()));
        }
        let (_, p) = decode(&encode_png(&sample(3), None).unwrap()).unwrap();
        assert_eq!(p, None);
    }

    #[test]
    fn pnm_round_trip_with_provenance() {
        for c in [1, 3] {
            let img = sample(c);
            let bytes = encode_pnm(&img, Some(&prov())).unwrap();
            let (back, p) = decode(&bytes).unwrap();
            assert_eq!(back, img);
            assert_eq!(p, Some(prov()));
        }
        assert!(encode_pnm(&sample(4), None).is_err());
    }

    #[test]
    fn pnm_header_layout() {
        let img = Image::filled(Geometry::new(1, 2, 3), 7);
        assert_eq!(
            encode_pnm(&img, None).unwrap(),
            b"P6\n2 1\n255\n\x07\x07\x07\x07\x07\x07"
        );
    }

    #[test]
    fn pnm_errors() {
        assert!(decode_pnm(b"P6\n2 1\n255\n\x07").is_err());
        assert!(decode_pnm(b"P6\n2 1\n65535\n").is_err());
        assert!(decode_pnm(b"P3\n1 1\n255\n0 0 0").is_err());
        assert!(decode(b"GIF89a").is_err());
    }

    #[test]
    fn png_is_deterministic() {
        let img = sample(3);
        assert_eq!(
            encode_png(&img, Some(&prov())).unwrap(),
            encode_png(&img, Some(&prov())).unwrap()
        );
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            ImageFormat::from_path(Path::new("a.PNG")).unwrap(),
            ImageFormat::Png
        );
        assert_eq!(
            ImageFormat::from_path(Path::new("a.ppm")).unwrap(),
            ImageFormat::Pnm
        );
        assert!(ImageFormat::from_path(Path::new("a.jpg")).is_err());
    }
}
