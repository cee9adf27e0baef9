use crate::common::*;
use clap::Args;
use faer::Mat;
use overlap_core::ensembles::{sample, EnsembleSpec};
use overlap_core::estimators::SampleRecord;
use overlap_core::numcore::{RngStream, C64};
use overlap_core::overlaps::{analyze, OverlapError};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Offset separating the thinning generators from the matrix generators.
const THIN_STREAM: u64 = 1 << 40;
/// Target number of stored off-diagonal pairs under `--pair-fraction auto`.
const AUTO_PAIR_BUDGET: f64 = 2e6;
const CHUNK: usize = 64;

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Matrix size
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of off-diagonal pairs kept in pairs.csv: `auto`, `none` or a
    /// number in (0, 1]
    #[arg(long, default_value = "auto")]
    pub pair_fraction: String,
}

/// Everything that determines a sample directory's contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleParams {
    pub model: ModelArgs,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub pair_fraction: f64,
}

impl SampleParams {
    pub fn spec(&self) -> CliResult<EnsembleSpec> {
        self.model.spec(self.n)
    }

    /// Regenerates matrices `range` of the run.
    pub fn matrices(&self, range: std::ops::Range<u64>) -> CliResult<Vec<(u64, Mat<C64>)>> {
        let spec = self.spec()?;
        range
            .into_par_iter()
            .map(|i| sample(&spec, RngStream::new(self.seed, i)).map(|s| (i, s.matrix)).map_err(err))
            .collect()
    }
}

fn pair_fraction(arg: &str, samples: usize, n: usize) -> CliResult<f64> {
    match arg {
        "auto" => Ok((AUTO_PAIR_BUDGET / (samples as f64 * (n * n) as f64)).min(1.0)),
        "none" => Ok(0.0),
        s => {
            let p: f64 = s.parse().map_err(|_| err(format!("bad --pair-fraction {s:?}")))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(err("--pair-fraction must lie in (0, 1]"));
            }
            Ok(p)
        }
    }
}

enum Outcome {
    Ok { rec: SampleRecord, rejections: u32 },
    Skipped { id: u64, reason: String, rejections: u32 },
}

fn one(spec: &EnsembleSpec, seed: u64, id: u64, p: f64) -> CliResult<Outcome> {
    let s = sample(spec, RngStream::new(seed, id)).map_err(err)?;
    let ov = match analyze(id, s.matrix.as_ref()) {
        Ok(o) => o,
        Err(e @ (OverlapError::NearDefective(_) | OverlapError::NoConvergence)) => {
            return Ok(Outcome::Skipped { id, reason: e.to_string(), rejections: s.rejections })
        }
        Err(e) => return Err(err(e)),
    };
    let n = ov.eigenvalues.len();
    let mut pairs = Vec::new();
    if p > 0.0 {
        let mut rng = RngStream::new(seed, THIN_STREAM + id).rng();
        for k in 0..n {
            for l in 0..n {
                if k != l && (p >= 1.0 || rng.random::<f64>() < p) {
                    pairs.push((k, l, ov.overlaps.get(k, l)));
                }
            }
        }
    }
    Ok(Outcome::Ok {
        rec: SampleRecord { sample_id: id, eigenvalues: ov.eigenvalues.clone(), diag: ov.overlaps.diagonal(), pairs },
        rejections: s.rejections,
    })
}

pub fn run(a: &SampleArgs) -> CliResult<()> {
    let started = unix_now();
    let spec = a.model.spec(a.n)?;
    if a.samples == 0 {
        return Err(err("--samples must be positive"));
    }
    let params = SampleParams {
        model: a.model.clone(),
        n: a.n,
        samples: a.samples,
        seed: a.seed,
        pair_fraction: pair_fraction(&a.pair_fraction, a.samples, a.n)?,
    };
    let pjson = serde_json::to_value(&params).map_err(err)?;
    let hash = config_hash("sample", &pjson);
    std::fs::create_dir_all(&a.out).map_err(|e| err(format!("{}: {e}", a.out.display())))?;
    let mut eig = CsvOut::create(Some(&a.out.join("eigen.csv")), &hash, &[], &["sample_id", "k", "re", "im", "o_kk"])?;
    let mut prs = CsvOut::create(Some(&a.out.join("pairs.csv")), &hash, &[], &["sample_id", "k", "l", "o_re", "o_im"])?;
    let mut rejections: u64 = 0;
    let mut skipped: BTreeMap<u64, String> = BTreeMap::new();
    let ids: Vec<u64> = (0..a.samples as u64).collect();
    for chunk in ids.chunks(CHUNK) {
        let out: Vec<Outcome> =
            chunk.par_iter().map(|&i| one(&spec, a.seed, i, params.pair_fraction)).collect::<CliResult<_>>()?;
        for o in out {
            match o {
                Outcome::Skipped { id, reason, rejections: r } => {
                    rejections += r as u64;
                    skipped.insert(id, reason);
                }
                Outcome::Ok { rec, rejections: r } => {
                    rejections += r as u64;
                    let id = rec.sample_id.to_string();
                    for (k, (z, o)) in rec.eigenvalues.iter().zip(&rec.diag).enumerate() {
                        eig.row([id.clone(), k.to_string(), f(z.re), f(z.im), f(*o)])?;
                    }
                    for (k, l, o) in &rec.pairs {
                        prs.row([id.clone(), k.to_string(), l.to_string(), f(o.re), f(o.im)])?;
                    }
                }
            }
        }
    }
    let outputs = [eig.finish()?, prs.finish()?].into_iter().flatten().collect();
    let m = RunManifest {
        command: "sample".into(),
        params: pjson,
        seed: Some(a.seed),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash,
        started_unix: started,
        finished_unix: unix_now(),
        outputs,
        notes: serde_json::json!({ "rejections": rejections, "skipped_near_defective": skipped }),
    };
    write_manifest(&a.out, &m)?;
    eprintln!(
        "wrote {} samples ({} skipped, {} rejected denominators) to {}",
        a.samples - skipped.len(),
        skipped.len(),
        rejections,
        a.out.display()
    );
    Ok(())
}

/// A loaded sample directory.
pub struct SampleDir {
    pub manifest: RunManifest,
    pub params: SampleParams,
}

impl SampleDir {
    pub fn open(dir: &Path) -> CliResult<Self> {
        let manifest = read_manifest(dir)?;
        if manifest.command != "sample" {
            return Err(err(format!("{} is not a sample directory", dir.display())));
        }
        let params = serde_json::from_value(manifest.params.clone()).map_err(err)?;
        Ok(Self { manifest, params })
    }

    /// Reads eigen.csv and, if `with_pairs`, pairs.csv. Stored pair overlaps
    /// are divided by the keep fraction so thinned sums stay unbiased.
    pub fn records(&self, dir: &Path, with_pairs: bool) -> CliResult<Vec<SampleRecord>> {
        let path = dir.join("eigen.csv");
        let (_, h, rows) = read_csv(&path)?;
        let cid = column(&h, "sample_id", &path)?;
        let ck = column(&h, "k", &path)?;
        let cre = column(&h, "re", &path)?;
        let cim = column(&h, "im", &path)?;
        let co = column(&h, "o_kk", &path)?;
        let mut recs: Vec<SampleRecord> = Vec::new();
        let mut index: BTreeMap<u64, usize> = BTreeMap::new();
        for r in &rows {
            let id: u64 = parse_field(r, cid, &path)?;
            let k: usize = parse_field(r, ck, &path)?;
            let slot = *index.entry(id).or_insert_with(|| {
                recs.push(SampleRecord { sample_id: id, ..Default::default() });
                recs.len() - 1
            });
            let rec = &mut recs[slot];
            if k != rec.eigenvalues.len() {
                return Err(err(format!("{}: schema mismatch, eigenvalues of sample {id} out of order", path.display())));
            }
            rec.eigenvalues.push(C64::new(parse_field(r, cre, &path)?, parse_field(r, cim, &path)?));
            rec.diag.push(parse_field(r, co, &path)?);
        }
        if let Some(bad) = recs.iter().find(|r| r.eigenvalues.len() != self.params.n) {
            return Err(err(format!("{}: sample {} has {} eigenvalues, expected {}", path.display(), bad.sample_id, bad.eigenvalues.len(), self.params.n)));
        }
        if with_pairs {
            let p = self.params.pair_fraction;
            if p <= 0.0 {
                return Err(err("this sample directory stores no off-diagonal pairs (pair fraction 0)"));
            }
            let path = dir.join("pairs.csv");
            let (_, h, rows) = read_csv(&path)?;
            let cid = column(&h, "sample_id", &path)?;
            let ck = column(&h, "k", &path)?;
            let cl = column(&h, "l", &path)?;
            let cre = column(&h, "o_re", &path)?;
            let cim = column(&h, "o_im", &path)?;
            for r in &rows {
                let id: u64 = parse_field(r, cid, &path)?;
                let slot = *index
                    .get(&id)
                    .ok_or_else(|| err(format!("{}: pair for unknown sample {id}", path.display())))?;
                let (k, l): (usize, usize) = (parse_field(r, ck, &path)?, parse_field(r, cl, &path)?);
                if k >= self.params.n || l >= self.params.n {
                    return Err(err(format!("{}: pair index out of range", path.display())));
                }
                let o = C64::new(parse_field(r, cre, &path)?, parse_field(r, cim, &path)?) / p;
                recs[slot].pairs.push((k, l, o));
            }
        }
        Ok(recs)
    }
}
