use crate::common::*;
use crate::predict::Quantity;
use crate::sample::{SampleDir, SampleParams};
use clap::{Args, Subcommand, ValueEnum};
use faer::Mat;
use overlap_core::estimators::{
    covariance_from_traces, estimate_density, estimate_o1, estimate_o2, parse_word, trace_samples,
    traced_resolvent_product, EstimateTable, EstimatorConfig, PointBinning, SampleRecord, DEFAULT_BATCHES,
};
use overlap_core::numcore::{Accumulator, PairBinning, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

const REGEN_CHUNK: u64 = 100;

#[derive(Debug, Clone, Subcommand)]
pub enum EstimateCmd {
    /// Eigenvalue density
    Rho(PointArgs),
    /// One-point overlap function
    O1(PointArgs),
    /// Two-point overlap function
    O2(PairArgs),
    /// Traced resolvent product (1/N) Tr[(z1 - X)^-1 (conj z2 - X^dagger)^-1]
    Hprod(HprodArgs),
    /// Connected covariance of normalized traces of two words in X, X^dagger
    Tracecov(TracecovArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Sample directory
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output CSV (default: <in>/<quantity>.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of batches for the error bars
    #[arg(long, default_value_t = DEFAULT_BATCHES)]
    pub nbatch: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of radial bins on [0, rmax]
    #[arg(long, default_value_t = 20)]
    pub rbins: usize,
    /// Outer radius (default: edge of the limiting support, or the largest |eigenvalue|)
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Real-axis bin edges a:b:n; with --y-edges, a rectangular grid instead
    #[arg(long, allow_hyphen_values = true)]
    pub x_edges: Option<Range>,
    #[arg(long, requires = "x_edges", allow_hyphen_values = true)]
    pub y_edges: Option<Range>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairKind {
    Radial,
    Disks,
    Real,
}

#[derive(Debug, Clone, Args)]
pub struct PairArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "radial")]
    pub pair_binning: PairKind,
    #[arg(long, default_value_t = 4)]
    pub rbins: usize,
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Bins of arg z1 - arg z2 on [0, 2 pi)
    #[arg(long, default_value_t = 8)]
    pub phibins: usize,
    /// Disk centre pair `re,im/re,im` (repeatable)
    #[arg(long)]
    pub disk: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub radius: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x_edges: Option<Range>,
    #[arg(long, allow_hyphen_values = true)]
    pub y_edges: Option<Range>,
    /// Minimum eigenvalue separation: `auto` (5/sqrt N) or a number
    #[arg(long, default_value = "auto")]
    pub dmin: String,
}

#[derive(Debug, Clone, Args)]
pub struct HprodArgs {
    #[command(flatten)]
    pub common: Common,
    /// Point or segment re,im[:re,im:n] (repeatable)
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z1: Vec<Points>,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z2: Vec<Points>,
    /// Count samples with an eigenvalue closer than this to z1 or z2
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TracecovArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub word1: String,
    #[arg(long)]
    pub word2: String,
}

/// Metadata stored in an estimate table's `# meta` line, enough to rebuild
/// the binning and the model for `compare`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableMeta {
    pub quantity: Quantity,
    pub model: ModelArgs,
    pub n: usize,
    pub samples: u64,
    #[serde(default)]
    pub point_binning: Option<PointBinning>,
    #[serde(default)]
    pub pair_binning: Option<PairBinning>,
    #[serde(default)]
    pub dmin: Option<f64>,
    #[serde(default)]
    pub words: Option<(String, String)>,
}

pub const VALUE_COLUMNS: [&str; 4] = ["value_re", "value_im", "stderr", "count"];

pub fn point_coord_names(b: &PointBinning) -> Vec<&'static str> {
    match b {
        PointBinning::Radial { .. } => vec!["r"],
        PointBinning::RealAxis { .. } => vec!["x"],
        PointBinning::Grid { .. } => vec!["x", "y"],
    }
}

pub fn pair_coord_names(b: &PairBinning) -> Vec<&'static str> {
    match b {
        PairBinning::Disks { .. } => vec!["z1_re", "z1_im", "z2_re", "z2_im"],
        PairBinning::Radial { .. } => vec!["r1", "r2", "dphi"],
        PairBinning::RealGrid { .. } => vec!["x", "y"],
    }
}

fn linspace_edges(max: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| max * k as f64 / bins as f64).collect()
}

fn default_rmax(p: &SampleParams, recs: &[SampleRecord]) -> f64 {
    if let Some(f) = p.model.radial() {
        if f.r_out.is_finite() {
            return f.r_out;
        }
    }
    if let overlap_core::ensembles::EnsembleKind::Elliptic { sigma, tau } = p.model.kind() {
        return sigma * (1.0 + tau.abs());
    }
    recs.iter().flat_map(|r| r.eigenvalues.iter().map(|z| z.norm())).fold(0.0, f64::max) * (1.0 + 1e-9)
}

fn parse_dmin(s: &str, n: usize) -> CliResult<f64> {
    if s == "auto" {
        return Ok(EstimatorConfig::for_size(n).dmin);
    }
    let d: f64 = s.parse().map_err(|_| err(format!("bad --dmin {s:?}")))?;
    if !(d >= 0.0) {
        return Err(err("--dmin must be non-negative"));
    }
    Ok(d)
}

fn parse_disk(s: &str) -> CliResult<(C64, C64)> {
    let (a, b) = s.split_once('/').ok_or_else(|| err(format!("disk centre {s:?} is not re,im/re,im")))?;
    let a: Complex = a.parse().map_err(err)?;
    let b: Complex = b.parse().map_err(err)?;
    Ok((a.z(), b.z()))
}

struct Output {
    path: PathBuf,
    hash: String,
}

fn output(c: &Common, q: Quantity, dir: &SampleDir, extra: &serde_json::Value) -> Output {
    let path = c.out.clone().unwrap_or_else(|| c.input.join(format!("{}.csv", q.name())));
    let params = serde_json::json!({
        "input": dir.manifest.config_hash,
        "nbatch": c.nbatch,
        "args": extra,
    });
    Output { path, hash: config_hash(&format!("estimate {}", q.name()), &params) }
}

fn write_table(o: &Output, meta: &TableMeta, coord_names: &[&str], t: &EstimateTable) -> CliResult<()> {
    for w in &t.warnings {
        eprintln!("warning: {w}");
    }
    let meta_json = serde_json::to_string(meta).map_err(err)?;
    let header: Vec<&str> = coord_names.iter().copied().chain(VALUE_COLUMNS).collect();
    let mut out = CsvOut::create(Some(&o.path), &o.hash, &[format!("meta {meta_json}")], &header)?;
    for r in &t.rows {
        let mut fields: Vec<String> = r.coords.iter().map(|&c| f(c)).collect();
        fields.extend([f(r.value.re), f(r.value.im), f(r.stderr), r.count.to_string()]);
        out.row(fields)?;
    }
    out.finish()?;
    eprintln!("wrote {} rows to {}", t.rows.len(), o.path.display());
    Ok(())
}

fn meta(q: Quantity, p: &SampleParams, samples: u64) -> TableMeta {
    TableMeta {
        quantity: q,
        model: p.model.clone(),
        n: p.n,
        samples,
        point_binning: None,
        pair_binning: None,
        dmin: None,
        words: None,
    }
}

fn point(q: Quantity, a: &PointArgs) -> CliResult<()> {
    let dir = SampleDir::open(&a.common.input)?;
    let recs = dir.records(&a.common.input, false)?;
    let binning = match (&a.x_edges, &a.y_edges) {
        (Some(x), Some(y)) => PointBinning::Grid { x_edges: x.0.clone(), y_edges: y.0.clone() },
        (Some(x), None) => PointBinning::RealAxis { edges: x.0.clone() },
        _ => {
            if a.rbins == 0 {
                return Err(err("--rbins must be positive"));
            }
            let rmax = a.rmax.unwrap_or_else(|| default_rmax(&dir.params, &recs));
            PointBinning::Radial { edges: linspace_edges(rmax, a.rbins) }
        }
    };
    let cfg = EstimatorConfig { nbatch: a.common.nbatch, dmin: 0.0 };
    let t = match q {
        Quantity::Rho => estimate_density(&recs, &binning, &cfg),
        _ => estimate_o1(&recs, &binning, &cfg),
    }
    .map_err(err)?;
    let o = output(&a.common, q, &dir, &serde_json::to_value(&binning).map_err(err)?);
    let m = TableMeta { point_binning: Some(binning.clone()), ..meta(q, &dir.params, t.samples) };
    write_table(&o, &m, &point_coord_names(&binning), &t)
}

fn o2(a: &PairArgs) -> CliResult<()> {
    let dir = SampleDir::open(&a.common.input)?;
    let recs = dir.records(&a.common.input, true)?;
    let binning = match a.pair_binning {
        PairKind::Radial => {
            if a.rbins == 0 || a.phibins == 0 {
                return Err(err("--rbins and --phibins must be positive"));
            }
            let rmax = a.rmax.unwrap_or_else(|| default_rmax(&dir.params, &recs));
            PairBinning::Radial { r_edges: linspace_edges(rmax, a.rbins), phi_edges: linspace_edges(TAU, a.phibins) }
        }
        PairKind::Disks => {
            let centers = a.disk.iter().map(|s| parse_disk(s)).collect::<CliResult<Vec<_>>>()?;
            PairBinning::Disks { centers, radius: a.radius }
        }
        PairKind::Real => match (&a.x_edges, &a.y_edges) {
            (Some(x), Some(y)) => PairBinning::RealGrid { x_edges: x.0.clone(), y_edges: y.0.clone() },
            _ => return Err(err("real pair binning needs --x-edges and --y-edges")),
        },
    };
    let dmin = parse_dmin(&a.dmin, dir.params.n)?;
    let cfg = EstimatorConfig { nbatch: a.common.nbatch, dmin };
    let t = estimate_o2(&recs, &binning, &cfg).map_err(err)?;
    let extra = serde_json::json!({ "binning": binning, "dmin": dmin });
    let o = output(&a.common, Quantity::O2, &dir, &extra);
    let m = TableMeta { pair_binning: Some(binning.clone()), dmin: Some(dmin), ..meta(Quantity::O2, &dir.params, t.samples) };
    write_table(&o, &m, &pair_coord_names(&binning), &t)
}

/// Runs `f` over every matrix of the run, regenerated in chunks.
fn for_matrices(p: &SampleParams, mut f: impl FnMut(&[(u64, Mat<C64>)]) -> CliResult<()>) -> CliResult<()> {
    let total = p.samples as u64;
    let mut start = 0;
    while start < total {
        let end = (start + REGEN_CHUNK).min(total);
        f(&p.matrices(start..end)?)?;
        start = end;
    }
    Ok(())
}

fn hprod(a: &HprodArgs) -> CliResult<()> {
    let dir = SampleDir::open(&a.common.input)?;
    let pts = pair_up(&flatten(&a.z1), &flatten(&a.z2))?;
    let mut acc = Accumulator::new(pts.len(), a.common.nbatch);
    let mut near = vec![0u64; pts.len()];
    for_matrices(&dir.params, |mats| {
        let vals: Vec<(u64, Vec<C64>, Vec<bool>)> = mats
            .par_iter()
            .map(|(id, x)| {
                let ev = match a.margin {
                    Some(_) => x.eigenvalues().map_err(|e| err(format!("{e:?}")))?,
                    None => Vec::new(),
                };
                let v = pts.iter().map(|&(z1, z2)| traced_resolvent_product(x.as_ref(), z1, z2)).collect();
                let nb = pts
                    .iter()
                    .map(|&(z1, z2)| {
                        a.margin.is_some_and(|d| ev.iter().any(|l| (l - z1).norm() < d || (l - z2).norm() < d))
                    })
                    .collect();
                Ok((*id, v, nb))
            })
            .collect::<CliResult<_>>()?;
        for (id, v, nb) in vals {
            let b = acc.batch_of(id);
            for (i, x) in v.into_iter().enumerate() {
                acc.add(b, i, x);
                near[i] += nb[i] as u64;
            }
            acc.finish_sample(b);
        }
        Ok(())
    })?;
    let stats = acc.stats(&vec![1.0; pts.len()]);
    let extra = serde_json::json!({ "points": pts.iter().map(|(a, b)| [a.re, a.im, b.re, b.im]).collect::<Vec<_>>(), "margin": a.margin });
    let o = output(&a.common, Quantity::Hprod, &dir, &extra);
    let m = meta(Quantity::Hprod, &dir.params, acc.total_samples());
    let meta_json = serde_json::to_string(&m).map_err(err)?;
    let header = ["z1_re", "z1_im", "z2_re", "z2_im", "value_re", "value_im", "stderr", "count", "near_spectrum"];
    let mut out = CsvOut::create(Some(&o.path), &o.hash, &[format!("meta {meta_json}")], &header)?;
    for ((z1, z2), (s, nr)) in pts.iter().zip(stats.iter().zip(&near)) {
        if *nr > 0 {
            eprintln!("warning: {nr} samples have an eigenvalue within the margin of ({z1}, {z2})");
        }
        out.row([f(z1.re), f(z1.im), f(z2.re), f(z2.im), f(s.mean.re), f(s.mean.im), f(s.stderr), s.count.to_string(), nr.to_string()])?;
    }
    out.finish()?;
    eprintln!("wrote {} rows to {}", pts.len(), o.path.display());
    Ok(())
}

fn tracecov(a: &TracecovArgs) -> CliResult<()> {
    let dir = SampleDir::open(&a.common.input)?;
    let w1 = parse_word(&a.word1).map_err(err)?;
    let w2 = parse_word(&a.word2).map_err(err)?;
    let mut traces = Vec::with_capacity(dir.params.samples);
    for_matrices(&dir.params, |mats| {
        traces.extend(trace_samples(mats, &w1, &w2));
        Ok(())
    })?;
    let est = covariance_from_traces(&traces, a.common.nbatch).map_err(err)?;
    let extra = serde_json::json!({ "word1": a.word1, "word2": a.word2 });
    let o = output(&a.common, Quantity::Tracecov, &dir, &extra);
    let m = TableMeta { words: Some((a.word1.clone(), a.word2.clone())), ..meta(Quantity::Tracecov, &dir.params, est.samples as u64) };
    let meta_json = serde_json::to_string(&m).map_err(err)?;
    let mut out = CsvOut::create(Some(&o.path), &o.hash, &[format!("meta {meta_json}")], &VALUE_COLUMNS)?;
    out.row([f(est.value.re), f(est.value.im), f(est.stderr), est.samples.to_string()])?;
    out.finish()?;
    eprintln!("wrote 1 row to {}", o.path.display());
    Ok(())
}

pub fn run(cmd: &EstimateCmd) -> CliResult<()> {
    match cmd {
        EstimateCmd::Rho(a) => point(Quantity::Rho, a),
        EstimateCmd::O1(a) => point(Quantity::O1, a),
        EstimateCmd::O2(a) => o2(a),
        EstimateCmd::Hprod(a) => hprod(a),
        EstimateCmd::Tracecov(a) => tracecov(a),
    }
}

/// Reads the `# meta` line of an estimate table.
pub fn read_meta(comments: &[String], path: &Path) -> CliResult<TableMeta> {
    let line = comments
        .iter()
        .find_map(|c| c.strip_prefix("meta "))
        .ok_or_else(|| err(format!("{}: not an estimate table (no meta line)", path.display())))?;
    serde_json::from_str(line).map_err(|e| err(format!("{}: bad meta line: {e}", path.display())))
}
