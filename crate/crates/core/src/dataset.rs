//! Dataset ingestion (CIFAR-10 binary batches, class-per-folder image trees)
//! and batch encryption into a PNG tree described by `manifest.json`.
//!
//! Output layout: `out_dir/<label>/<source_id>.png` plus `out_dir/manifest.json`.
//! The manifest records the key fingerprint, never the key.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cipher::Cipher;
use crate::codec;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::key::{EncryptionKey, Geometry, KeyFingerprint};

pub const CIFAR_SIDE: usize = 32;
pub const CIFAR_PLANE: usize = CIFAR_SIDE * CIFAR_SIDE;
pub const CIFAR_RECORD_LEN: usize = 1 + 3 * CIFAR_PLANE;
pub const CIFAR_CLASSES: u32 = 10;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
const PARTIAL_MARKER: &str = ".blockperm-partial";
const CHUNK: usize = 1024;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledImage {
    pub image: Image,
    pub label: u32,
    pub source_id: String,
}

/// Decodes one CIFAR-10 record: a label byte, then 1024 R, 1024 G and 1024 B bytes, row-major.
pub fn decode_cifar10_record(record: &[u8], source_id: String) -> Result<LabeledImage> {
    if record.len() != CIFAR_RECORD_LEN {
        return Err(Error::Format(format!(
            "CIFAR-10 record must be {CIFAR_RECORD_LEN} bytes, got {}",
            record.len()
        )));
    }
    let label = record[0] as u32;
    if label >= CIFAR_CLASSES {
        return Err(Error::Format(format!("{source_id}: label {label} > 9")));
    }
    let planes = &record[1..];
    let image = Image::from_fn(Geometry::new(CIFAR_SIDE, CIFAR_SIDE, 3), |y, x, c| {
        planes[c * CIFAR_PLANE + y * CIFAR_SIDE + x]
    });
    Ok(LabeledImage {
        image,
        label,
        source_id,
    })
}

/// Inverse of [`decode_cifar10_record`]; used to build synthetic batches.
pub fn encode_cifar10_record(label: u8, image: &Image) -> Result<Vec<u8>> {
    if image.geometry() != Geometry::new(CIFAR_SIDE, CIFAR_SIDE, 3) {
        return Err(Error::validation("CIFAR-10 records hold 32x32x3 images"));
    }
    let mut out = Vec::with_capacity(CIFAR_RECORD_LEN);
    out.push(label);
    for c in 0..3 {
        for y in 0..CIFAR_SIDE {
            for x in 0..CIFAR_SIDE {
                out.push(image.get(y, x, c));
            }
        }
    }
    Ok(out)
}

/// Records of one CIFAR-10 batch file, already validated for size.
pub struct CifarBatch {
    bytes: Vec<u8>,
    stem: String,
    next: usize,
}

impl CifarBatch {
    pub fn from_bytes(bytes: Vec<u8>, stem: impl Into<String>) -> Result<Self> {
        let stem = stem.into();
        if bytes.is_empty() || !bytes.len().is_multiple_of(CIFAR_RECORD_LEN) {
            return Err(Error::Format(format!(
                "{stem}: size {} is not a positive multiple of {CIFAR_RECORD_LEN}",
                bytes.len()
            )));
        }
        Ok(Self {
            bytes,
            stem,
            next: 0,
        })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "batch".into());
        Self::from_bytes(bytes, stem).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn len(&self) -> usize {
        self.bytes.len() / CIFAR_RECORD_LEN
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Iterator for CifarBatch {
    type Item = Result<LabeledImage>;

    fn next(&mut self) -> Option<Self::Item> {
        let i = self.next;
        let rec = self
            .bytes
            .get(i * CIFAR_RECORD_LEN..(i + 1) * CIFAR_RECORD_LEN)?;
        self.next += 1;
        Some(decode_cifar10_record(rec, format!("{}_{i:05}", self.stem)))
    }
}

/// CIFAR-10 batch files under `path`: the file itself, or every `*.bin` in a directory, sorted.
pub fn cifar10_files(path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "bin"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Format(format!(
            "{}: no CIFAR-10 .bin batches",
            path.display()
        )));
    }
    Ok(files)
}

/// Streams every record of the CIFAR-10 batches at `path`.
pub fn read_cifar10(path: impl AsRef<Path>) -> Result<impl Iterator<Item = Result<LabeledImage>>> {
    let batches = cifar10_files(path)?
        .iter()
        .map(CifarBatch::open)
        .collect::<Result<Vec<_>>>()?;
    Ok(batches.into_iter().flatten())
}

/// Nearest-neighbour resampling; every output sample is a copy of one input sample.
pub fn resize_nearest(img: &Image, h: usize, w: usize) -> Result<Image> {
    if h == 0 || w == 0 {
        return Err(Error::validation(format!(
            "resize target {h}x{w} must be positive"
        )));
    }
    let (sh, sw) = (img.height(), img.width());
    let g = Geometry::new(h, w, img.channels());
    Ok(Image::from_fn(g, |y, x, c| {
        img.get(y * sh / h, x * sw / w, c)
    }))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizePolicy {
    /// Images must already match the key geometry.
    #[default]
    None,
    /// Images are resized to the key's height and width before encryption.
    Nearest,
}

/// Where plain images come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DatasetSource {
    /// A CIFAR-10 batch file or a directory of `*.bin` batches.
    Cifar10(PathBuf),
    /// `dir/<class>/<image>.{png,ppm,pgm}`; integer class names are used as labels,
    /// otherwise classes are numbered in sorted order.
    Folder(PathBuf),
}

impl DatasetSource {
    pub fn detect(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let is_bin = |p: &Path| p.extension().is_some_and(|e| e == "bin");
        let cifar = if path.is_file() {
            is_bin(&path)
        } else {
            fs::read_dir(&path)
                .map(|rd| rd.filter_map(|e| e.ok()).any(|e| is_bin(&e.path())))
                .unwrap_or(false)
        };
        if cifar {
            Self::Cifar10(path)
        } else {
            Self::Folder(path)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    /// Relative to the manifest's directory, `/`-separated.
    pub path: String,
    pub label: u32,
    /// SHA-256 of the file bytes, hex.
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub key_fingerprint: KeyFingerprint,
    pub p: usize,
    pub n_bs: usize,
    pub n_ps: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub resize: ResizePolicy,
    pub classes: Vec<String>,
    pub label_counts: BTreeMap<u32, usize>,
    pub items: Vec<ManifestItem>,
}

impl DatasetManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse("manifest", e.to_string()))
    }

    /// Checks that every listed file exists with the recorded digest and that counts agree.
    pub fn verify(&self, root: impl AsRef<Path>) -> Result<()> {
        let root = root.as_ref();
        let mut counts = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for item in &self.items {
            if !seen.insert(&item.path) {
                return Err(Error::Format(format!("{} listed twice", item.path)));
            }
            let path = root.join(&item.path);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&bytes) != item.digest {
                return Err(Error::Format(format!("{}: digest mismatch", item.path)));
            }
            *counts.entry(item.label).or_insert(0) += 1;
        }
        if counts != self.label_counts {
            return Err(Error::Format("label counts disagree with items".into()));
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

enum Pending {
    Loaded(LabeledImage),
    File {
        path: PathBuf,
        label: u32,
        source_id: String,
    },
}

impl Pending {
    fn source_id(&self) -> &str {
        match self {
            Pending::Loaded(li) => &li.source_id,
            Pending::File { source_id, .. } => source_id,
        }
    }

    fn load(self) -> Result<LabeledImage> {
        match self {
            Pending::Loaded(li) => Ok(li),
            Pending::File {
                path,
                label,
                source_id,
            } => Ok(LabeledImage {
                image: codec::read_image(&path)?.0,
                label,
                source_id,
            }),
        }
    }
}

fn folder_items(dir: &Path) -> Result<(Vec<String>, Vec<Pending>)> {
    let mut classes: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    if classes.is_empty() {
        return Err(Error::Format(format!(
            "{}: no class subdirectories",
            dir.display()
        )));
    }
    let numeric: Option<Vec<u32>> = classes.iter().map(|c| c.parse().ok()).collect();
    let labels: Vec<u32> = match numeric {
        Some(mut n) => {
            let mut order: Vec<usize> = (0..n.len()).collect();
            order.sort_by_key(|&i| n[i]);
            classes = order.iter().map(|&i| classes[i].clone()).collect();
            n.sort_unstable();
            n
        }
        None => {
            classes.sort();
            (0..classes.len() as u32).collect()
        }
    };

    let mut items = Vec::new();
    for (class, &label) in classes.iter().zip(&labels) {
        let cdir = dir.join(class);
        let mut files: Vec<PathBuf> = fs::read_dir(&cdir)
            .map_err(|e| Error::io(&cdir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && codec::ImageFormat::from_path(p).is_ok())
            .collect();
        files.sort();
        let mut ids = BTreeSet::new();
        for path in files {
            let source_id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            if !ids.insert(source_id.clone()) {
                return Err(Error::validation(format!(
                    "{}: duplicate source id {source_id:?} in class {class}",
                    cdir.display()
                )));
            }
            items.push(Pending::File {
                path,
                label,
                source_id,
            });
        }
    }
    Ok((classes, items))
}

fn prepare_out_dir(out_dir: &Path, fingerprint: &KeyFingerprint) -> Result<()> {
    if !out_dir.exists() {
        return fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e));
    }
    let mut entries = fs::read_dir(out_dir).map_err(|e| Error::io(out_dir, e))?;
    if entries.next().is_none() {
        return Ok(());
    }
    let marker = out_dir.join(PARTIAL_MARKER);
    let resumable = match fs::read_to_string(&marker) {
        Ok(fp) => fp.trim() == fingerprint.as_str(),
        Err(_) => DatasetManifest::load(out_dir.join(MANIFEST_FILE))
            .map(|m| &m.key_fingerprint == fingerprint)
            .unwrap_or(false),
    };
    if resumable {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "{}: output directory is not empty and holds no run for this key",
            out_dir.display()
        )))
    }
}

struct Encoded {
    item: ManifestItem,
}

fn process(
    pending: Pending,
    cipher: &Cipher,
    geometry: Geometry,
    resize: ResizePolicy,
    out_dir: &Path,
) -> Result<Encoded> {
    let li = pending.load()?;
    let img = match resize {
        ResizePolicy::Nearest
            if (li.image.height(), li.image.width()) != (geometry.h, geometry.w) =>
        {
            resize_nearest(&li.image, geometry.h, geometry.w)?
        }
        _ => li.image,
    };
    let enc = cipher.encrypt(&img)?;
    let bytes = codec::encode_png(&enc.image, Some(&enc.provenance))?;
    let rel = format!("{}/{}.png", li.label, li.source_id);
    let path = out_dir.join(&rel);
    // Unchanged files are left alone on re-runs.
    if fs::read(&path).ok().as_deref() != Some(&bytes[..]) {
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(Encoded {
        item: ManifestItem {
            path: rel,
            label: li.label,
            digest: sha256_hex(&bytes),
        },
    })
}

/// Encrypts every image of `source` with `key` into `out_dir` and writes the manifest.
///
/// `out_dir` must be absent, empty, or hold an earlier (possibly interrupted)
/// run with the same key; re-running with identical inputs reproduces the
/// same files and manifest.
pub fn encrypt_dataset(
    source: &DatasetSource,
    key: &EncryptionKey,
    resize: ResizePolicy,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    let cipher = Cipher::new(key);
    let fingerprint = cipher.fingerprint().clone();
    let geometry = key.geometry();

    let (classes, items): (Vec<String>, Box<dyn Iterator<Item = Result<Pending>>>) = match source {
        DatasetSource::Cifar10(path) => (
            (0..CIFAR_CLASSES).map(|c| c.to_string()).collect(),
            Box::new(read_cifar10(path)?.map(|r| r.map(Pending::Loaded))),
        ),
        DatasetSource::Folder(dir) => {
            let (classes, items) = folder_items(dir)?;
            (classes, Box::new(items.into_iter().map(Ok)))
        }
    };

    prepare_out_dir(out_dir, &fingerprint)?;
    let marker = out_dir.join(PARTIAL_MARKER);
    fs::write(&marker, fingerprint.as_str()).map_err(|e| Error::io(&marker, e))?;

    let mut made_dirs = BTreeSet::new();
    let mut ids = BTreeSet::new();
    let mut manifest_items = Vec::new();
    let mut items = items.peekable();
    while items.peek().is_some() {
        let chunk = items.by_ref().take(CHUNK).collect::<Result<Vec<_>>>()?;
        for p in &chunk {
            let label = match p {
                Pending::Loaded(li) => li.label,
                Pending::File { label, .. } => *label,
            };
            if !ids.insert((label, p.source_id().to_string())) {
                return Err(Error::validation(format!(
                    "duplicate source id {} in label {label}",
                    p.source_id()
                )));
            }
            if made_dirs.insert(label) {
                let d = out_dir.join(label.to_string());
                fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            }
        }
        let results: Vec<(String, Result<Encoded>)> = chunk
            .into_par_iter()
            .map(|p| {
                let id = p.source_id().to_string();
                (id, process(p, &cipher, geometry, resize, out_dir))
            })
            .collect();
        let mut failures = Vec::new();
        for (id, r) in results {
            match r {
                Ok(e) => manifest_items.push(e.item),
                Err(e) => failures.push((id, e)),
            }
        }
        if let Some((id, first)) = failures.first() {
            return Err(Error::validation(format!(
                "{} item(s) failed; first: {id}: {first}",
                failures.len()
            )));
        }
    }

    manifest_items.sort_by(|a, b| a.path.cmp(&b.path));
    let mut label_counts = BTreeMap::new();
    for it in &manifest_items {
        *label_counts.entry(it.label).or_insert(0) += 1;
    }
    let manifest = DatasetManifest {
        schema_version: MANIFEST_VERSION,
        key_fingerprint: fingerprint,
        p: key.p(),
        n_bs: key.n_bs(),
        n_ps: key.n_ps(),
        h: geometry.h,
        w: geometry.w,
        c: geometry.c,
        resize,
        classes,
        label_counts,
        items: manifest_items,
    };
    let mpath = out_dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest.to_json()).map_err(|e| Error::io(&mpath, e))?;
    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp32(seed: u8) -> Image {
        Image::from_fn(Geometry::new(32, 32, 3), |y, x, c| {
            (y as u8).wrapping_mul(3) ^ (x as u8).wrapping_mul(5) ^ (c as u8 * 60) ^ seed
        })
    }

    #[test]
    fn single_record_channel_placement() {
        let mut rec = vec![0u8; CIFAR_RECORD_LEN];
        rec[0] = 3;
        for (i, b) in rec[1..].iter_mut().enumerate() {
            *b = (i % 251) as u8;
        }
        let li = decode_cifar10_record(&rec, "x".into()).unwrap();
        assert_eq!(li.label, 3);
        assert_eq!(li.image.get(0, 0, 0), rec[1]);
        assert_eq!(li.image.get(0, 0, 1), rec[1 + 1024]);
        assert_eq!(li.image.get(0, 0, 2), rec[1 + 2048]);
        assert_eq!(li.image.get(1, 2, 2), rec[1 + 2048 + 32 + 2]);
        assert_eq!(encode_cifar10_record(3, &li.image).unwrap(), rec);
    }

    #[test]
    fn batch_size_errors() {
        assert!(CifarBatch::from_bytes(vec![0; 3072], "t").is_err());
        assert!(CifarBatch::from_bytes(vec![], "t").is_err());
        let mut bytes = vec![0u8; 2 * CIFAR_RECORD_LEN];
        bytes[CIFAR_RECORD_LEN] = 10;
        let items: Vec<_> = CifarBatch::from_bytes(bytes, "t").unwrap().collect();
        assert!(items[0].is_ok());
        assert!(matches!(items[1], Err(Error::Format(_))));
    }

    #[test]
    fn full_batch_has_ten_thousand_items() {
        let bytes = vec![1u8; 10_000 * CIFAR_RECORD_LEN];
        let batch = CifarBatch::from_bytes(bytes, "data_batch_1").unwrap();
        assert_eq!(batch.len(), 10_000);
        let last = batch.last().unwrap().unwrap();
        assert_eq!(last.source_id, "data_batch_1_09999");
    }

    #[test]
    fn resize_tiles_and_histogram() {
        let img = ramp32(0);
        let big = resize_nearest(&img, 224, 224).unwrap();
        for (y, x) in [(0, 0), (6, 6), (7, 7), (223, 223), (100, 13)] {
            for c in 0..3 {
                assert_eq!(big.get(y, x, c), img.get(y / 7, x / 7, c));
            }
        }
        let (h0, h1) = (img.histogram(), big.histogram());
        for v in 0..256 {
            assert_eq!(h1[v], 49 * h0[v]);
        }
        assert_eq!(resize_nearest(&img, 32, 32).unwrap(), img);
        assert!(resize_nearest(&img, 0, 32).is_err());
    }

    fn write_folder(root: &Path, n: usize) {
        for i in 0..n {
            let dir = root.join(if i % 2 == 0 { "cat" } else { "dog" });
            fs::create_dir_all(&dir).unwrap();
            codec::write_image(dir.join(format!("img{i:02}.png")), &ramp32(i as u8), None).unwrap();
        }
    }

    #[test]
    fn identity_key_round_trips_folder() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        write_folder(&src, 10);
        let key = EncryptionKey::from_seeds([1; 32], [2; 32], 16, 4, 768, Geometry::new(32, 32, 3))
            .unwrap();
        let out = tmp.path().join("out");
        let m = encrypt_dataset(
            &DatasetSource::Folder(src.clone()),
            &key,
            ResizePolicy::None,
            &out,
        )
        .unwrap();
        assert_eq!(m.items.len(), 10);
        assert_eq!(m.classes, ["cat", "dog"]);
        assert_eq!(m.label_counts, BTreeMap::from([(0, 5), (1, 5)]));
        m.verify(&out).unwrap();
        for i in 0..10 {
            let label = i % 2;
            let (img, prov) =
                codec::read_image(out.join(format!("{label}/img{i:02}.png"))).unwrap();
            assert_eq!(img, ramp32(i as u8));
            assert_eq!(prov.unwrap().fingerprint, key.fingerprint());
        }
        assert!(!out.join(PARTIAL_MARKER).exists());
    }

    #[test]
    fn rerun_is_idempotent_and_foreign_dirs_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        write_folder(&src, 6);
        let g = Geometry::new(32, 32, 3);
        let key = EncryptionKey::from_seeds([5; 32], [6; 32], 16, 0, 0, g).unwrap();
        let out = tmp.path().join("out");
        let source = DatasetSource::Folder(src);
        let a = encrypt_dataset(&source, &key, ResizePolicy::None, &out).unwrap();
        let first = fs::read(out.join(MANIFEST_FILE)).unwrap();
        let b = encrypt_dataset(&source, &key, ResizePolicy::None, &out).unwrap();
        assert_eq!(a, b);
        assert_eq!(first, fs::read(out.join(MANIFEST_FILE)).unwrap());

        let other = EncryptionKey::from_seeds([7; 32], [6; 32], 16, 0, 0, g).unwrap();
        assert!(encrypt_dataset(&source, &other, ResizePolicy::None, &out).is_err());
    }

    #[test]
    fn geometry_mismatch_aborts_with_summary() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        write_folder(&src, 4);
        let key = EncryptionKey::from_seeds([5; 32], [6; 32], 16, 0, 0, Geometry::new(64, 64, 3))
            .unwrap();
        let err = encrypt_dataset(
            &DatasetSource::Folder(src.clone()),
            &key,
            ResizePolicy::None,
            tmp.path().join("o"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("4 item(s) failed"), "{err}");
        let m = encrypt_dataset(
            &DatasetSource::Folder(src),
            &key,
            ResizePolicy::Nearest,
            tmp.path().join("o2"),
        )
        .unwrap();
        assert_eq!((m.h, m.w), (64, 64));
    }

    #[test]
    fn cifar_source_and_detection() {
        let tmp = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for i in 0..20u8 {
            bytes.extend(encode_cifar10_record(i % 10, &ramp32(i)).unwrap());
        }
        let file = tmp.path().join("data_batch_1.bin");
        fs::write(&file, bytes).unwrap();
        let source = DatasetSource::detect(tmp.path());
        assert_eq!(source, DatasetSource::Cifar10(tmp.path().to_path_buf()));
        let key = EncryptionKey::from_seeds([1; 32], [2; 32], 16, 0, 0, Geometry::new(32, 32, 3))
            .unwrap();
        let out = tmp.path().join("enc");
        let m = encrypt_dataset(&source, &key, ResizePolicy::None, &out).unwrap();
        assert_eq!(m.items.len(), 20);
        assert!(m.label_counts.values().all(|&c| c == 2));
        assert_eq!(m.items[0].path, "0/data_batch_1_00000.png");
        let back = DatasetManifest::load(out.join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn numeric_class_folders_keep_their_labels() {
        let tmp = tempfile::tempdir().unwrap();
        for (class, i) in [("7", 0u8), ("10", 1), ("2", 2)] {
            let d = tmp.path().join(class);
            fs::create_dir_all(&d).unwrap();
            codec::write_image(d.join("a.png"), &ramp32(i), None).unwrap();
        }
        let (classes, items) = folder_items(tmp.path()).unwrap();
        assert_eq!(classes, ["2", "7", "10"]);
        let labels: Vec<u32> = items
            .iter()
            .map(|p| match p {
                Pending::File { label, .. } => *label,
                Pending::Loaded(li) => li.label,
            })
            .collect();
        assert_eq!(labels, [2, 7, 10]);
    }
}
