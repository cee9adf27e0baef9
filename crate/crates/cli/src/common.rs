use clap::{Args, ValueEnum};
use overlap_core::analytic::{RadialCdfKind, RadialCdfSpec};
use overlap_core::ensembles::{EnsembleKind, EnsembleSpec};
use overlap_core::numcore::C64;
use overlap_core::qsolver::RTransformSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Failure modes of a command, mapped to exit codes by `main`.
#[derive(Debug)]
pub enum CliError {
    /// Bad input, I/O or numerical failure (exit 1).
    Error(String),
    /// Comparison outside the declared tolerance (exit 2).
    Tolerance(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Error(m) | CliError::Tolerance(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn err<E: fmt::Display>(e: E) -> CliError {
    CliError::Error(e.to_string())
}

/// A complex number written `re,im` (or a bare real).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex(pub f64, pub f64);

impl Complex {
    pub fn z(self) -> C64 {
        C64::new(self.0, self.1)
    }
}

impl FromStr for Complex {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let p = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("cannot parse {s:?} as re,im"));
        match s.split_once(',') {
            Some((a, b)) => Ok(Complex(p(a)?, p(b)?)),
            None => Ok(Complex(p(s)?, 0.0)),
        }
    }
}

/// `a:b:n` (n points from a to b inclusive) or a single number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Range(pub Vec<f64>);

impl FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let p = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("cannot parse {s:?} as a:b:n"));
        match parts.as_slice() {
            [a] => Ok(Range(vec![p(a)?])),
            [a, b, n] => {
                let (a, b) = (p(a)?, p(b)?);
                let n: usize = n.trim().parse().map_err(|_| format!("bad point count in {s:?}"))?;
                if n < 2 {
                    return Err("a range needs at least 2 points".into());
                }
                Ok(Range((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()))
            }
            _ => Err(format!("cannot parse {s:?} as a:b:n")),
        }
    }
}

/// A complex point `re,im` or a segment `re,im:re,im:n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Points(pub Vec<Complex>);

impl FromStr for Points {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a] => Ok(Points(vec![a.parse()?])),
            [a, b, n] => {
                let (a, b): (Complex, Complex) = (a.parse()?, b.parse()?);
                let n: usize = n.trim().parse().map_err(|_| format!("bad point count in {s:?}"))?;
                if n < 2 {
                    return Err("a segment needs at least 2 points".into());
                }
                Ok(Points(
                    (0..n)
                        .map(|k| {
                            let t = k as f64 / (n - 1) as f64;
                            Complex(a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
                        })
                        .collect(),
                ))
            }
            _ => Err(format!("cannot parse {s:?} as re,im or re,im:re,im:n")),
        }
    }
}

pub fn flatten(p: &[Points]) -> Vec<C64> {
    p.iter().flat_map(|x| x.0.iter().map(|c| c.z())).collect()
}

/// Pairs (z1, z2) from two point lists; a single point is broadcast.
pub fn pair_up(z1: &[C64], z2: &[C64]) -> CliResult<Vec<(C64, C64)>> {
    match (z1.len(), z2.len()) {
        (0, _) | (_, 0) => Err(err("both --z1 and --z2 are required")),
        (1, _) => Ok(z2.iter().map(|&w| (z1[0], w)).collect()),
        (_, 1) => Ok(z1.iter().map(|&z| (z, z2[0])).collect()),
        (a, b) if a == b => Ok(z1.iter().copied().zip(z2.iter().copied()).collect()),
        (a, b) => Err(err(format!("--z1 has {a} points and --z2 has {b}; give equal counts or a single point"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Ginibre,
    Elliptic,
    Induced,
    Truncated,
    Spherical,
    Product,
    Pseudohermitian,
    Scattering,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Ensemble or model
    #[arg(long, value_enum)]
    pub ensemble: Model,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// Induced Ginibre ratio (M - N)/N
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Truncation ratio L/N
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Channel ratio M/N for the scattering ensemble
    #[arg(long, default_value_t = 0.5)]
    pub m: f64,
    /// Coupling of the scattering ensemble
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
}

impl ModelArgs {
    pub fn kind(&self) -> EnsembleKind {
        match self.ensemble {
            Model::Ginibre => EnsembleKind::Ginibre,
            Model::Elliptic => EnsembleKind::Elliptic { sigma: self.sigma, tau: self.tau },
            Model::Induced => EnsembleKind::InducedGinibre { alpha: self.alpha },
            Model::Truncated => EnsembleKind::TruncatedUnitary { kappa: self.kappa },
            Model::Spherical => EnsembleKind::Spherical,
            Model::Product => EnsembleKind::ProductGinibre,
            Model::Pseudohermitian => EnsembleKind::PseudoHermitianProduct,
            Model::Scattering => EnsembleKind::QuantumScattering { m: self.m, gamma: self.gamma },
        }
    }

    pub fn spec(&self, n: usize) -> CliResult<EnsembleSpec> {
        let s = EnsembleSpec::new(self.kind(), n);
        s.validate().map_err(err)?;
        Ok(s)
    }

    pub fn radial(&self) -> Option<RadialCdfSpec> {
        radial_of(self.kind())
    }

    pub fn rtransform(&self) -> RTransformSpec {
        rtransform_of(self.kind())
    }
}

pub fn radial_of(kind: EnsembleKind) -> Option<RadialCdfSpec> {
    let k = match kind {
        EnsembleKind::Ginibre => RadialCdfKind::Ginibre,
        EnsembleKind::InducedGinibre { alpha } => RadialCdfKind::Induced { alpha },
        EnsembleKind::TruncatedUnitary { kappa } => RadialCdfKind::TruncatedUnitary { kappa },
        EnsembleKind::Spherical => RadialCdfKind::Spherical,
        EnsembleKind::ProductGinibre => RadialCdfKind::Product,
        _ => return None,
    };
    Some(RadialCdfSpec::new(k))
}

pub fn rtransform_of(kind: EnsembleKind) -> RTransformSpec {
    match kind {
        EnsembleKind::Ginibre => RTransformSpec::Elliptic { sigma: 1.0, tau: 0.0 },
        EnsembleKind::Elliptic { sigma, tau } => RTransformSpec::Elliptic { sigma, tau },
        EnsembleKind::PseudoHermitianProduct => RTransformSpec::PseudoHermitianProduct,
        EnsembleKind::QuantumScattering { m, gamma } => RTransformSpec::QuantumScattering { m, gamma },
        other => RTransformSpec::Biunitary(radial_of(other).expect("biunitary kinds have a radial cdf")),
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the deterministic part of a run: command, parameters, seed and
/// code version. Timestamps are excluded so reruns stamp identical CSVs.
pub fn config_hash(command: &str, params: &serde_json::Value) -> String {
    let canon = serde_json::json!({
        "command": command,
        "params": params,
        "version": env!("CARGO_PKG_VERSION"),
    });
    sha256_hex(canon.to_string().as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub config_hash: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputFile>,
    #[serde(default)]
    pub notes: serde_json::Value,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn read_manifest(dir: &Path) -> CliResult<RunManifest> {
    let p = dir.join("manifest.json");
    let text = std::fs::read_to_string(&p).map_err(|e| err(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| err(format!("{}: {e}", p.display())))
}

pub fn write_manifest(dir: &Path, m: &RunManifest) -> CliResult<()> {
    let text = serde_json::to_string_pretty(m).map_err(err)?;
    std::fs::write(dir.join("manifest.json"), text + "\n").map_err(err)
}

/// CSV table written with a leading `# manifest <hash>` line and optional
/// further comment lines.
pub struct CsvOut {
    path: Option<PathBuf>,
    w: csv::Writer<Box<dyn Write>>,
    rows: u64,
}

impl CsvOut {
    /// `path = None` writes to stdout.
    pub fn create(path: Option<&Path>, hash: &str, comments: &[String], header: &[&str]) -> CliResult<Self> {
        let mut sink: Box<dyn Write> = match path {
            Some(p) => {
                if let Some(parent) = p.parent() {
                    if !parent.as_os_str().is_empty() {
                        std::fs::create_dir_all(parent).map_err(err)?;
                    }
                }
                Box::new(BufWriter::new(File::create(p).map_err(|e| err(format!("{}: {e}", p.display())))?))
            }
            None => Box::new(BufWriter::new(std::io::stdout())),
        };
        writeln!(sink, "# manifest {hash}").map_err(err)?;
        for c in comments {
            writeln!(sink, "# {c}").map_err(err)?;
        }
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(header).map_err(err)?;
        Ok(Self { path: path.map(Path::to_path_buf), w, rows: 0 })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.rows += 1;
        self.w.write_record(fields).map_err(err)
    }

    /// Flushes and returns the output record (file name, hash, row count).
    pub fn finish(mut self) -> CliResult<Option<OutputFile>> {
        self.w.flush().map_err(err)?;
        drop(self.w);
        let Some(p) = self.path else { return Ok(None) };
        let bytes = std::fs::read(&p).map_err(err)?;
        Ok(Some(OutputFile {
            file: p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: sha256_hex(&bytes),
            rows: self.rows,
        }))
    }
}

/// Shortest round-trip formatting, so reruns are byte-identical.
pub fn f(v: f64) -> String {
    format!("{v:e}")
}

/// Reads a CSV written by `CsvOut`, returning the comment lines (without
/// `# `) and the records.
pub fn read_csv(path: &Path) -> CliResult<(Vec<String>, csv::StringRecord, Vec<csv::StringRecord>)> {
    let text = std::fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    let comments: Vec<String> =
        text.lines().take_while(|l| l.starts_with('#')).map(|l| l.trim_start_matches('#').trim().to_string()).collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(err)?.clone();
    let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(|e| err(format!("{}: {e}", path.display())))?;
    Ok((comments, header, rows))
}

pub fn column(header: &csv::StringRecord, name: &str, path: &Path) -> CliResult<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| err(format!("{}: schema mismatch, missing column {name:?}", path.display())))
}

pub fn parse_field<T: FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> CliResult<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err(format!("{}: schema mismatch, bad value {:?} at row {:?}", path.display(), rec.get(i), rec.position().map(|p| p.line()))))
}
