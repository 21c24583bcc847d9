//! Command-line front end.
//!
//! Results are written to files named by `--out`; stdout stays empty.
//! Failures print one line to stderr, `blockperm: error[<kind>]: <message>`,
//! and exit with 2 for usage errors or 1 for runtime errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use crate::analysis::{self, REPORT_CSV_HEADER};
use crate::cipher::{Cipher, EncryptedImage};
use crate::codec::{self, Provenance};
use crate::dataset::{self, DatasetSource, ResizePolicy};
use crate::error::Error;
use crate::image::Image;
use crate::key::{EncryptionKey, Geometry};

pub const KEY_ENV: &str = "BLOCKPERM_KEY";

/// Settings shown in the sample-output figure: (n_bs, n_ps) pairs for 224x224x3, p=16.
pub const DEFAULT_SETTINGS: &str = "0:0,0:768,196:0,60:350,120:500";

#[derive(Debug, Parser)]
#[command(
    name = "blockperm",
    version,
    about = "Block-wise image encryption with restricted random permutations"
)]
pub struct CliConfig {
    /// Increase log verbosity on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct KeyArg {
    /// Key file (.pbkey). Defaults to $BLOCKPERM_KEY.
    #[arg(long, env = KEY_ENV)]
    pub key: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SeedSource {
    /// Key file (.pbkey) supplying seeds and block size. Defaults to $BLOCKPERM_KEY.
    #[arg(long, env = KEY_ENV)]
    pub key: Option<PathBuf>,
    /// Derive seeds from this demo seed instead of a key file (requires --p).
    #[arg(long, conflicts_with = "key")]
    pub seed: Option<u64>,
    /// Block size to use with --seed.
    #[arg(long, requires = "seed")]
    pub p: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SourceFormat {
    Auto,
    Cifar,
    Folder,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a key file.
    Keygen {
        /// Block size in pixels (the transformer's patch size).
        #[arg(long)]
        p: usize,
        /// Number of fixed positions in the block permutation.
        #[arg(long = "n-bs", default_value_t = 0)]
        n_bs: usize,
        /// Number of fixed positions in the pixel permutation.
        #[arg(long = "n-ps", default_value_t = 0)]
        n_ps: usize,
        /// Image geometry as HxWxC, e.g. 224x224x3.
        #[arg(long)]
        geom: Geometry,
        /// Derive seeds from this value instead of system entropy (reproducible demos only).
        #[arg(long)]
        seed: Option<u64>,
        /// Output key file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypt one image (.png, .ppm, .pgm).
    Encrypt {
        input: PathBuf,
        #[command(flatten)]
        key: KeyArg,
        /// Output image; format follows the extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Decrypt one image produced by `encrypt`.
    Decrypt {
        input: PathBuf,
        #[command(flatten)]
        key: KeyArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypt a CIFAR-10 batch (file or directory of .bin) or a class-per-folder image tree.
    EncryptDataset {
        source: PathBuf,
        #[command(flatten)]
        key: KeyArg,
        /// Output directory for <label>/<id>.png and manifest.json.
        #[arg(long)]
        out: PathBuf,
        /// Resize images to the key geometry before encryption.
        #[arg(long, value_enum, default_value_t = ResizeArg::None)]
        resize: ResizeArg,
        #[arg(long, value_enum, default_value_t = SourceFormat::Auto)]
        format: SourceFormat,
    },
    /// Compare a plain image with its ciphertext and write a JSON report.
    Measure {
        plain: PathBuf,
        cipher: PathBuf,
        #[command(flatten)]
        key: KeyArg,
        /// JSON report path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the report as a one-row CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render the plain image next to ciphertexts for several settings as one PNG.
    Sheet {
        input: PathBuf,
        #[command(flatten)]
        seeds: SeedSource,
        /// Comma-separated n_bs:n_ps pairs.
        #[arg(long, default_value = DEFAULT_SETTINGS)]
        settings: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure several settings on one image and write one CSV row per setting.
    Sweep {
        input: PathBuf,
        #[command(flatten)]
        seeds: SeedSource,
        #[arg(long, default_value = DEFAULT_SETTINGS)]
        settings: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ResizeArg {
    None,
    Nearest,
}

impl From<ResizeArg> for ResizePolicy {
    fn from(r: ResizeArg) -> Self {
        match r {
            ResizeArg::None => ResizePolicy::None,
            ResizeArg::Nearest => ResizePolicy::Nearest,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `args` (including the program name), executes, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default();
            eprintln!(
                "blockperm: error[usage]: {}",
                one_line(first.trim_start_matches("error: "))
            );
            return 2;
        }
    };
    let level = match cfg.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    match dispatch(cfg.command) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("blockperm: error[usage]: {}", one_line(&m));
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!(
                "blockperm: error[{}]: {}",
                e.kind(),
                one_line(&e.to_string())
            );
            1
        }
    }
}

fn require_key(arg: &Option<PathBuf>) -> CliResult<&Path> {
    arg.as_deref()
        .ok_or_else(|| usage(format!("no key given; pass --key or set {KEY_ENV}")))
}

fn load_key(arg: &Option<PathBuf>) -> CliResult<EncryptionKey> {
    Ok(EncryptionKey::load(require_key(arg)?)?)
}

/// Key for sheet/sweep: a key file, or demo seeds with the image's geometry.
fn seeded_key(src: &SeedSource, geometry: Geometry) -> CliResult<EncryptionKey> {
    match (src.seed, &src.key) {
        (Some(seed), _) => {
            let p = src.p.ok_or_else(|| usage("--seed requires --p"))?;
            EncryptionKey::from_demo_seed(seed, p, 0, 0, geometry).map_err(usage)
        }
        (None, key) => load_key(key),
    }
}

fn check_settings(key: &EncryptionKey, settings: &str) -> CliResult<Vec<(usize, usize)>> {
    let settings = analysis::parse_settings(settings).map_err(usage)?;
    for &(n_bs, n_ps) in &settings {
        EncryptionKey::check_params(key.p(), n_bs, n_ps, key.geometry()).map_err(usage)?;
    }
    Ok(settings)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(Error::io(path, e)))
}

fn read_ciphertext(path: &Path) -> CliResult<EncryptedImage> {
    let (image, prov) = codec::read_image(path)?;
    let provenance: Provenance = prov.ok_or_else(|| {
        Error::Format(format!(
            "{}: no key fingerprint; not a blockperm ciphertext",
            path.display()
        ))
    })?;
    Ok(EncryptedImage { image, provenance })
}

fn read_plain(path: &Path) -> CliResult<Image> {
    Ok(codec::read_image(path)?.0)
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Keygen {
            p,
            n_bs,
            n_ps,
            geom,
            seed,
            out,
        } => {
            EncryptionKey::check_params(p, n_bs, n_ps, geom).map_err(usage)?;
            let key = match seed {
                Some(s) => EncryptionKey::from_demo_seed(s, p, n_bs, n_ps, geom)?,
                None => EncryptionKey::generate(p, n_bs, n_ps, geom)?,
            };
            key.save(&out)?;
            info!(
                "wrote {} (fingerprint {})",
                out.display(),
                key.fingerprint()
            );
        }
        Command::Encrypt { input, key, out } => {
            let key = load_key(&key.key)?;
            let enc = Cipher::new(&key).encrypt(&read_plain(&input)?)?;
            codec::write_image(&out, &enc.image, Some(&enc.provenance))?;
            info!("encrypted {} -> {}", input.display(), out.display());
        }
        Command::Decrypt { input, key, out } => {
            let key = load_key(&key.key)?;
            let enc = read_ciphertext(&input)?;
            let plain = Cipher::new(&key).decrypt(&enc)?;
            codec::write_image(&out, &plain, None)?;
            info!("decrypted {} -> {}", input.display(), out.display());
        }
        Command::EncryptDataset {
            source,
            key,
            out,
            resize,
            format,
        } => {
            let key = load_key(&key.key)?;
            let source = match format {
                SourceFormat::Auto => DatasetSource::detect(source),
                SourceFormat::Cifar => DatasetSource::Cifar10(source),
                SourceFormat::Folder => DatasetSource::Folder(source),
            };
            let manifest = dataset::encrypt_dataset(&source, &key, resize.into(), &out)?;
            info!(
                "encrypted {} items into {}",
                manifest.items.len(),
                out.display()
            );
        }
        Command::Measure {
            plain,
            cipher,
            key,
            out,
            csv,
        } => {
            let key = load_key(&key.key)?;
            let report = analysis::measure(&read_plain(&plain)?, &read_ciphertext(&cipher)?, &key)?;
            write_file(&out, report.to_json())?;
            if let Some(csv) = csv {
                write_file(&csv, format!("{REPORT_CSV_HEADER}\n{}\n", report.csv_row()))?;
            }
        }
        Command::Sheet {
            input,
            seeds,
            settings,
            out,
        } => {
            let plain = read_plain(&input)?;
            let key = seeded_key(&seeds, plain.geometry())?;
            let settings = check_settings(&key, &settings)?;
            let sheet = analysis::contact_sheet(&plain, &key, &settings)?;
            codec::write_image(&out, &sheet, None)?;
        }
        Command::Sweep {
            input,
            seeds,
            settings,
            out,
        } => {
            let plain = read_plain(&input)?;
            let key = seeded_key(&seeds, plain.geometry())?;
            let settings = check_settings(&key, &settings)?;
            let reports = analysis::sweep(&plain, &key, &settings)?;
            let mut csv = format!("{REPORT_CSV_HEADER}\n");
            for r in &reports {
                csv.push_str(&r.csv_row());
                csv.push('\n');
            }
            write_file(&out, csv)?;
        }
    }
    Ok(())
}
