use crate::common::*;
use crate::estimate::{read_meta, TableMeta, VALUE_COLUMNS};
use crate::predict::{self, rotation_invariant, Quantity, Route};
use clap::Args;
use overlap_core::compare::{pair_bin_average, point_bin_average};
use overlap_core::ensembles::EnsembleKind;
use overlap_core::estimators::{parse_word, Letter, PointBinning};
use overlap_core::numcore::{PairBinning, C64};
use overlap_core::qsolver::{spectrum_bound, wheel_coefficient};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Estimate table written by `estimate`
    #[arg(long)]
    pub table: PathBuf,
    /// Compare against a second estimate table on the same grid instead of a prediction
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Prediction route (default: analytic where closed forms exist)
    #[arg(long, value_enum)]
    pub route: Option<Route>,
    /// Relative tolerance
    #[arg(long, default_value_t = 0.0)]
    pub rel: f64,
    /// Tolerance in standard errors; a bin passes within the looser of the two
    #[arg(long, default_value_t = 3.0)]
    pub nsigma: f64,
    /// Fraction of compared bins that must pass
    #[arg(long, default_value_t = 1.0)]
    pub min_fraction: f64,
    /// Skip pair bins whose centres are closer than this
    #[arg(long, default_value_t = 0.0)]
    pub exclude_diagonal: f64,
    /// Skip bins with fewer entries
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// Gauss points per dimension for bin averages
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    /// Report CSV (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coords: Vec<f64>,
    pub value: C64,
    pub stderr: f64,
    pub count: u64,
}

pub struct Table {
    pub meta: TableMeta,
    pub coord_names: Vec<String>,
    pub rows: Vec<Row>,
}

pub fn load_table(path: &Path) -> CliResult<Table> {
    let (comments, header, recs) = read_csv(path)?;
    let meta = read_meta(&comments, path)?;
    let re = column(&header, VALUE_COLUMNS[0], path)?;
    let im = column(&header, VALUE_COLUMNS[1], path)?;
    let se = column(&header, VALUE_COLUMNS[2], path)?;
    let ct = column(&header, VALUE_COLUMNS[3], path)?;
    let coord_names: Vec<String> = header.iter().take(re).map(str::to_string).collect();
    let rows = recs
        .iter()
        .map(|r| {
            Ok(Row {
                coords: (0..re).map(|i| parse_field(r, i, path)).collect::<CliResult<_>>()?,
                value: C64::new(parse_field(r, re, path)?, parse_field(r, im, path)?),
                stderr: parse_field(r, se, path)?,
                count: parse_field(r, ct, path)?,
            })
        })
        .collect::<CliResult<_>>()?;
    Ok(Table { meta, coord_names, rows })
}

enum Verdict {
    Compared { reference: C64, residual: f64, z: f64, pass: bool },
    Skipped(String),
}

fn judge(mc: C64, se: f64, reference: C64, ref_se: f64, a: &CompareArgs) -> Verdict {
    let residual = (mc - reference).norm();
    let se = se.hypot(ref_se);
    let z = if residual == 0.0 { 0.0 } else { residual / se };
    let pass = residual <= (a.rel * reference.norm()).max(a.nsigma * se);
    Verdict::Compared { reference, residual, z, pass }
}

fn default_route(kind: EnsembleKind) -> Route {
    match kind {
        EnsembleKind::PseudoHermitianProduct | EnsembleKind::QuantumScattering { .. } => Route::Qsolver,
        _ => Route::Analytic,
    }
}

fn pair_separation(b: &PairBinning, c: &[f64]) -> f64 {
    match b {
        PairBinning::Disks { .. } => C64::new(c[0] - c[2], c[1] - c[3]).norm(),
        PairBinning::Radial { .. } => (C64::from_polar(c[0], c[2]) - c[1]).norm(),
        PairBinning::RealGrid { .. } => (c[0] - c[1]).abs(),
    }
}

/// Powers (k, l) of a word pair X^k, (X^dagger)^l.
fn word_powers(w1: &str, w2: &str) -> CliResult<(usize, usize)> {
    let a = parse_word(w1).map_err(err)?;
    let b = parse_word(w2).map_err(err)?;
    if a.is_empty() || b.is_empty() || a.iter().any(|&l| l != Letter::X) || b.iter().any(|&l| l != Letter::Xd) {
        return Err(err("tracecov predictions exist only for word pairs X^k, Xd^l"));
    }
    Ok((a.len(), b.len()))
}

fn predictions(t: &Table, a: &CompareArgs) -> CliResult<Vec<Verdict>> {
    let m = &t.meta;
    let kind = m.model.kind();
    let route = a.route.unwrap_or_else(|| default_route(kind));
    let incompatible = |what: &str| err(format!("incompatible grids: {what}"));
    let skip_small = |r: &Row| r.count < a.min_count;
    match m.quantity {
        Quantity::Rho | Quantity::O1 => {
            let b = m.point_binning.as_ref().ok_or_else(|| incompatible("table has no point binning"))?;
            if b.nbins() != t.rows.len() {
                return Err(incompatible("row count differs from the binning"));
            }
            if matches!(b, PointBinning::Radial { .. }) && !rotation_invariant(kind) {
                return Err(incompatible("radial bins need a rotation-invariant model"));
            }
            let p = predict::point(m.quantity, kind, route)?;
            Ok(t.rows
                .par_iter()
                .enumerate()
                .map(|(i, r)| {
                    if skip_small(r) {
                        return Verdict::Skipped("too few entries".into());
                    }
                    match point_bin_average(b, i, a.order, &p) {
                        Ok(v) => judge(r.value, r.stderr, C64::new(v, 0.0), 0.0, a),
                        Err(e) => Verdict::Skipped(e),
                    }
                })
                .collect())
        }
        Quantity::O2 => {
            let b = m.pair_binning.as_ref().ok_or_else(|| incompatible("table has no pair binning"))?;
            if b.nbins() != t.rows.len() {
                return Err(incompatible("row count differs from the binning"));
            }
            if matches!(b, PairBinning::Radial { .. }) && !rotation_invariant(kind) {
                return Err(incompatible("radial bins need a rotation-invariant model"));
            }
            let raw = predict::pair(Quantity::O2, kind, route)?;
            // the estimator drops pairs closer than dmin, so the prediction does too
            let dmin = m.dmin.unwrap_or(0.0);
            let p = |z: C64, w: C64| if (z - w).norm() < dmin { Ok(C64::new(0.0, 0.0)) } else { raw(z, w) };
            Ok(t.rows
                .par_iter()
                .enumerate()
                .map(|(i, r)| {
                    if skip_small(r) {
                        return Verdict::Skipped("too few entries".into());
                    }
                    if pair_separation(b, &r.coords) < a.exclude_diagonal {
                        return Verdict::Skipped("diagonal".into());
                    }
                    match pair_bin_average(b, i, a.order, &p) {
                        Ok(v) => judge(r.value, r.stderr, v, 0.0, a),
                        Err(e) => Verdict::Skipped(e),
                    }
                })
                .collect())
        }
        Quantity::Hprod => {
            let p = predict::pair(Quantity::Hprod, kind, route)?;
            Ok(t.rows
                .iter()
                .map(|r| {
                    if r.coords.len() != 4 {
                        return Verdict::Skipped("malformed row".into());
                    }
                    let z1 = C64::new(r.coords[0], r.coords[1]);
                    let z2 = C64::new(r.coords[2], r.coords[3]);
                    match p(z1, z2) {
                        Ok(v) => judge(r.value, r.stderr, v, 0.0, a),
                        Err(e) => Verdict::Skipped(e),
                    }
                })
                .collect())
        }
        Quantity::Tracecov => {
            let (w1, w2) = m.words.as_ref().ok_or_else(|| incompatible("table records no words"))?;
            let (k, l) = word_powers(w1, w2)?;
            let rt = m.model.rtransform();
            let bound = spectrum_bound(&rt).ok_or_else(|| err("the wheel function needs a bounded spectrum"))?;
            let c = wheel_coefficient(&rt, k, l, (2.0 * bound).max(3.0), 32).map_err(err)?;
            let n2 = (m.n * m.n) as f64;
            let pred = c * (k * l) as f64 / n2;
            Ok(t.rows.iter().map(|r| judge(r.value, r.stderr, pred, 0.0, a)).collect())
        }
    }
}

fn against(t: &Table, o: &Table, a: &CompareArgs) -> CliResult<Vec<Verdict>> {
    if t.meta.quantity != o.meta.quantity || t.coord_names != o.coord_names || t.rows.len() != o.rows.len() {
        return Err(err("incompatible grids: tables differ in quantity, columns or row count"));
    }
    t.rows
        .iter()
        .zip(&o.rows)
        .map(|(r, s)| {
            if r.coords.iter().zip(&s.coords).any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs())) {
                return Err(err("incompatible grids: bin coordinates differ"));
            }
            if r.count < a.min_count || s.count < a.min_count {
                return Ok(Verdict::Skipped("too few entries".into()));
            }
            Ok(judge(r.value, r.stderr, s.value, s.stderr, a))
        })
        .collect()
}

pub fn run(a: &CompareArgs) -> CliResult<()> {
    let t = load_table(&a.table)?;
    let (verdicts, ref_hash) = match &a.against {
        Some(p) => {
            let o = load_table(p)?;
            (against(&t, &o, a)?, sha256_hex(&std::fs::read(p).map_err(err)?))
        }
        None => (predictions(&t, a)?, String::new()),
    };
    let params = serde_json::json!({
        "table": sha256_hex(&std::fs::read(&a.table).map_err(err)?),
        "against": ref_hash,
        "route": a.route,
        "rel": a.rel,
        "nsigma": a.nsigma,
        "exclude_diagonal": a.exclude_diagonal,
        "min_count": a.min_count,
        "order": a.order,
    });
    let hash = config_hash("compare", &params);
    let mut header: Vec<&str> = t.coord_names.iter().map(String::as_str).collect();
    header.extend(["mc_re", "mc_im", "stderr", "ref_re", "ref_im", "residual", "z", "status"]);
    let mut w = CsvOut::create(a.out.as_deref(), &hash, &[], &header)?;
    let (mut compared, mut passed, mut worst) = (0usize, 0usize, 0.0f64);
    for (r, v) in t.rows.iter().zip(&verdicts) {
        let mut row: Vec<String> = r.coords.iter().map(|&c| f(c)).collect();
        row.extend([f(r.value.re), f(r.value.im), f(r.stderr)]);
        match v {
            Verdict::Compared { reference, residual, z, pass } => {
                compared += 1;
                passed += *pass as usize;
                worst = worst.max(*z);
                row.extend([f(reference.re), f(reference.im), f(*residual), f(*z)]);
                row.push(if *pass { "pass" } else { "fail" }.into());
            }
            Verdict::Skipped(why) => {
                row.extend(std::iter::repeat_n(String::new(), 4));
                row.push(format!("skip: {why}"));
            }
        }
        w.row(row)?;
    }
    w.finish()?;
    let frac = if compared == 0 { 0.0 } else { passed as f64 / compared as f64 };
    let summary = format!(
        "{passed}/{compared} bins within tolerance (rel {}, {} sigma), worst |z| = {worst:.2}, {} skipped",
        a.rel,
        a.nsigma,
        t.rows.len() - compared
    );
    if compared == 0 || frac < a.min_fraction {
        return Err(CliError::Tolerance(format!("FAIL: {summary}")));
    }
    eprintln!("PASS: {summary}");
    Ok(())
}
