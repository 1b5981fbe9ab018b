//! Monte Carlo sweep engine: runs trials across (n, Λ-offset) cells,
//! asserts the per-trial invariants, and writes deterministic CSV output
//! plus per-cell summaries with Wilson confidence intervals.

use crate::analytics::{lambda_of, threshold_radius};
use crate::cech::{build_complex, CechComplex};
use crate::error::{Error, Result};
use crate::homology::{
    betti_numbers_streamed_top, gf2_rank, manifold_betti, BettiVector, BoundaryMatrix,
};
use crate::manifold::{ManifoldKind, ManifoldModel};
use crate::morse::{coverage_certificate, crit_counts, morse_report_from_betti, CritCounts};
use crate::sampler::PointCloud;
use crate::sampler::{poisson_process, subtrial_seed};
use crate::theta::{count_theta_cycles, ThetaConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Manifold selector as it appears in config files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub d: usize,
    pub scale: f64,
}

impl ManifoldSpec {
    pub fn model(&self) -> Result<ManifoldModel> {
        ManifoldModel::new(self.kind, self.d, self.scale)
    }
}

/// One Λ offset: the target is `log n + k log log n + c`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetSpec {
    pub k: i64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggles {
    pub run_morse: bool,
    pub run_theta: bool,
    pub run_coverage: bool,
}

/// Sweep configuration; JSON keys are exactly these field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub manifold: ManifoldSpec,
    pub n_list: Vec<f64>,
    pub offsets: Vec<OffsetSpec>,
    pub trials: usize,
    pub master_seed: u64,
    pub k_range: [usize; 2],
    pub epsilon: f64,
    pub dim_cap: usize,
    pub toggles: Toggles,
    pub out: String,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.manifold.model()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.k_range[0] > self.k_range[1] {
            return Err(Error::Config("k_range must be [lo, hi] with lo <= hi".into()));
        }
        if self.k_range[1] + 1 > self.dim_cap {
            return Err(Error::Config(format!(
                "match degree {} needs dim_cap > {} for a trusted Betti number",
                self.k_range[1], self.k_range[1]
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config("epsilon must lie in (0, 1)".into()));
        }
        for &n in &self.n_list {
            for off in &self.offsets {
                let r = threshold_radius(n, off.k, off.c, m.dim, m.volume())?;
                if r > m.convexity_radius() {
                    return Err(Error::OutOfRegime(format!(
                        "cell (n={n}, k={}, c={}) implies r={r} above convexity radius {}",
                        off.k,
                        off.c,
                        m.convexity_radius()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<(f64, OffsetSpec)> {
        let mut cells = Vec::new();
        for &n in &self.n_list {
            for &off in &self.offsets {
                cells.push((n, off));
            }
        }
        cells
    }
}

/// One trial's record.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cell: usize,
    pub trial: usize,
    pub n: f64,
    pub offset: OffsetSpec,
    pub seed: u64,
    pub n_realized: usize,
    pub r: f64,
    pub lambda: f64,
    pub r0: f64,
    pub covered_r: Option<bool>,
    pub covered_r0: Option<bool>,
    pub betti: Vec<usize>,
    pub manifold_betti: Vec<usize>,
    pub match_flags: Vec<bool>,
    pub f_vector: Vec<usize>,
    /// Critical counts per index over (0, r0] and over (r, r0].
    pub crit_total: Option<Vec<usize>>,
    pub crit_above_r: Option<Vec<usize>>,
    pub degenerate_skips: Option<usize>,
    pub theta_counts: Option<Vec<usize>>,
    pub status: String,
}

impl SweepResult {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

/// Trials with index divisible by this also recompute the top Betti number
/// through the rank route and require exact agreement with the Morse route.
const AUDIT_EVERY: usize = 16;

/// Betti numbers for one trial. Degrees below the manifold dimension come
/// from boundary ranks on the stored complex. The top degree combines the
/// strong Morse cell-count identity with the Nerve lemma:
/// `chi = sum_k (-1)^k C_k(0, r]`, so
/// `beta_d = (-1)^d (chi - sum_(k<d) (-1)^k beta_k)` - avoiding the
/// enumeration of the (d+1)-dimensional skeleton that dominates dense
/// complexes. Audited trials recompute the top degree by streamed rank
/// reduction and must agree exactly.
fn trial_betti(
    cloud: &PointCloud,
    r: f64,
    dim_cap: usize,
    counts: &CritCounts,
    audit: bool,
) -> Result<(CechComplex, BettiVector)> {
    let m = &cloud.manifold;
    if dim_cap != m.dim + 1 {
        // Nonstandard cap: plain streamed-rank route.
        let sh = betti_numbers_streamed_top(cloud, r, dim_cap)?;
        return Ok((sh.complex, sh.betti));
    }
    let d = m.dim;
    let cx = build_complex(cloud, r, d)?;
    let mut f = vec![0usize; d + 2];
    for (k, &c) in cx.f_vector().iter().enumerate() {
        f[k] = c;
    }
    let mut ranks = vec![0usize; d + 2];
    for k in 1..=d {
        if f[k] > 0 {
            let bm = BoundaryMatrix::from_complex(&cx, k)?;
            ranks[k] = gf2_rank(&bm.columns, bm.n_rows);
        }
    }
    let mut betti = vec![0usize; d + 1];
    for k in 0..d {
        let b = f[k] as i64 - ranks[k] as i64 - ranks[k + 1] as i64;
        if b < 0 {
            return Err(Error::InvariantViolation(format!(
                "negative Betti number at degree {k}"
            )));
        }
        betti[k] = b as usize;
    }
    let mut chi = 0i64;
    for k in 0..=d {
        let c = if k == 0 { cloud.len() } else { counts.count_in(k, 0.0, r) } as i64;
        chi += if k % 2 == 0 { c } else { -c };
    }
    let mut top = chi;
    for (k, &b) in betti.iter().enumerate().take(d) {
        top -= if k % 2 == 0 { b as i64 } else { -(b as i64) };
    }
    if d % 2 == 1 {
        top = -top;
    }
    if top < 0 {
        return Err(Error::InvariantViolation(format!(
            "Morse cell-count identity gave negative top Betti number {top}"
        )));
    }
    betti[d] = top as usize;
    if audit {
        let sh = betti_numbers_streamed_top(cloud, r, dim_cap)?;
        for k in 0..=d {
            if sh.betti.get(k) != betti[k] {
                return Err(Error::InvariantViolation(format!(
                    "audit mismatch at degree {k}: rank route {} vs Morse route {}",
                    sh.betti.get(k),
                    betti[k]
                )));
            }
        }
    }
    let top_val = betti.pop().unwrap();
    let bv = BettiVector { betti: { let mut v = betti; v.push(top_val); v }, top_untrusted: 0, euler: chi };
    Ok((cx, bv))
}

/// Executes one trial: sample, build, Betti, optional Morse / Θ / coverage,
/// then the per-trial invariant assertions. Deterministic in the seed.
pub fn run_trial(cfg: &SweepConfig, cell: usize, trial: usize) -> Result<SweepResult> {
    let m = cfg.manifold.model()?;
    let (n, offset) = cfg.cells()[cell];
    let seed = subtrial_seed(cfg.master_seed, (cell * cfg.trials + trial) as u64);
    let r = threshold_radius(n, offset.k, offset.c, m.dim, m.volume())?;
    let lambda = lambda_of(n, r, m.dim, m.volume())?;
    let cloud = poisson_process(&m, n, seed)?;
    // Coverage radius for the relative Morse inequality: the 3 log n
    // density level, never below the complex radius, capped at the regime.
    let r0 = {
        let dense = threshold_radius(n, 0, 2.0 * n.ln(), m.dim, m.volume())?;
        dense.max(r).min(m.convexity_radius())
    };
    let counts = crit_counts(
        &cloud,
        0.0,
        if cfg.toggles.run_morse { r0 } else { r },
        m.dim,
    )?;
    let (cx, bv) = trial_betti(&cloud, r, cfg.dim_cap, &counts, trial % AUDIT_EVERY == 0)?;
    let mb = manifold_betti(&m);
    let k_lo = cfg.k_range[0];
    let k_hi = cfg.k_range[1];
    let betti: Vec<usize> = (k_lo..=k_hi).map(|k| bv.get(k)).collect();
    let manifold_b: Vec<usize> = (k_lo..=k_hi).map(|k| mb.get(k).copied().unwrap_or(0)).collect();
    let match_flags: Vec<bool> =
        betti.iter().zip(&manifold_b).map(|(a, b)| a == b).collect();
    let mut f_vector = cx.f_vector();
    f_vector.resize(cfg.dim_cap, 0);
    let mut failures: Vec<String> = Vec::new();

    // beta_k <= f_k on every degree of the stored skeleton.
    for k in 0..bv.trusted_degrees().min(f_vector.len()) {
        if bv.get(k) > f_vector[k] {
            failures.push(format!("beta_{k} exceeds face count"));
        }
    }

    let covered_r = if cfg.toggles.run_coverage {
        Some(coverage_certificate(&cloud, r)?)
    } else {
        None
    };
    let mut covered_r0 = None;
    let mut crit_total = None;
    let mut crit_above_r = None;
    let mut degenerate_skips = None;
    if cfg.toggles.run_morse {
        let cov0 = coverage_certificate(&cloud, r0)?;
        covered_r0 = Some(cov0);
        let report = morse_report_from_betti(&bv, r, &m, &counts, cov0.then_some(r0))?;
        for row in &report.rows {
            if !row.weak_pass {
                failures.push(format!(
                    "weak Morse inequality failed at k={}: beta {} > C {}",
                    row.k, row.beta, row.weak_bound
                ));
            }
            if let Some((lhs, bound, pass)) = row.relative {
                if !pass {
                    failures.push(format!(
                        "relative Morse inequality failed at k={}: {} > {}",
                        row.k, lhs, bound
                    ));
                }
            }
        }
        crit_total = Some((0..=m.dim).map(|k| counts.count_in(k, 0.0, r0)).collect());
        crit_above_r = Some((0..=m.dim).map(|k| counts.count_in(k, r, r0)).collect());
        degenerate_skips = Some(counts.degenerate_skips);
    }
    let mut theta_counts = None;
    if cfg.toggles.run_theta && m.dim >= 2 {
        let mut counts = Vec::new();
        for k in 1..=(m.dim - 1).min(k_hi.max(1)) {
            let tcfg = ThetaConfig::from_rule(&m, r, lambda, cfg.epsilon)?;
            let (count, _) = count_theta_cycles(&cloud, k, &tcfg)?;
            if bv.get(k) < count {
                failures.push(format!(
                    "theta lower bound failed at k={k}: beta {} < count {count}",
                    bv.get(k)
                ));
            }
            counts.push(count);
        }
        theta_counts = Some(counts);
    }
    // Coverage at the complex radius forces a full homology match on every
    // trusted degree (nerve of a good cover of the whole manifold).
    if covered_r == Some(true) {
        for k in 0..bv.trusted_degrees().min(m.dim + 1) {
            if bv.get(k) != mb.get(k).copied().unwrap_or(0) {
                failures.push(format!("covered at r but beta_{k} mismatch"));
            }
        }
    }

    let status = if failures.is_empty() { "pass".to_string() } else { format!("fail:{}", failures.join("; ")) };
    Ok(SweepResult {
        cell,
        trial,
        n,
        offset,
        seed,
        n_realized: cloud.len(),
        r,
        lambda,
        r0,
        covered_r,
        covered_r0,
        betti,
        manifold_betti: manifold_b,
        match_flags,
        f_vector,
        crit_total,
        crit_above_r,
        degenerate_skips,
        theta_counts,
        status,
    })
}

/// Per-cell aggregate: full-match fraction with a Wilson 95% interval and
/// the mean/variance of the per-degree Betti numbers.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub cell: usize,
    pub n: f64,
    pub offset: OffsetSpec,
    pub trials: usize,
    pub match_fraction: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub betti_mean: Vec<f64>,
    pub betti_var: Vec<f64>,
    pub crit_above_mean: Option<Vec<f64>>,
    pub theta_mean: Option<Vec<f64>>,
    pub coverage_fraction: Option<f64>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepResult>,
    pub summaries: Vec<CellSummary>,
    pub any_failed: bool,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn summarize(cfg: &SweepConfig, rows: &[SweepResult]) -> Vec<CellSummary> {
    let cells = cfg.cells();
    let mut out = Vec::with_capacity(cells.len());
    for (ci, (n, offset)) in cells.iter().enumerate() {
        let cell_rows: Vec<&SweepResult> = rows.iter().filter(|r| r.cell == ci).collect();
        let t = cell_rows.len();
        let matches = cell_rows
            .iter()
            .filter(|r| r.match_flags.iter().all(|&f| f))
            .count();
        let (lo, hi) = wilson_interval(matches, t);
        let degrees = cfg.k_range[1] - cfg.k_range[0] + 1;
        let mut mean = vec![0.0; degrees];
        let mut var = vec![0.0; degrees];
        for row in &cell_rows {
            for (i, &b) in row.betti.iter().enumerate() {
                mean[i] += b as f64;
            }
        }
        for v in &mut mean {
            *v /= t.max(1) as f64;
        }
        for row in &cell_rows {
            for (i, &b) in row.betti.iter().enumerate() {
                var[i] += (b as f64 - mean[i]) * (b as f64 - mean[i]);
            }
        }
        for v in &mut var {
            *v /= t.max(1) as f64;
        }
        let crit_above_mean = cell_rows.first().and_then(|r| r.crit_above_r.as_ref()).map(|c| {
            let mut acc = vec![0.0; c.len()];
            for row in &cell_rows {
                if let Some(ca) = &row.crit_above_r {
                    for (a, &v) in acc.iter_mut().zip(ca) {
                        *a += v as f64;
                    }
                }
            }
            acc.into_iter().map(|v| v / t.max(1) as f64).collect()
        });
        let theta_mean = cell_rows.first().and_then(|r| r.theta_counts.as_ref()).map(|c| {
            let mut acc = vec![0.0; c.len()];
            for row in &cell_rows {
                if let Some(tc) = &row.theta_counts {
                    for (a, &v) in acc.iter_mut().zip(tc) {
                        *a += v as f64;
                    }
                }
            }
            acc.into_iter().map(|v| v / t.max(1) as f64).collect()
        });
        let coverage_fraction = cell_rows.first().and_then(|r| r.covered_r).map(|_| {
            cell_rows.iter().filter(|r| r.covered_r == Some(true)).count() as f64
                / t.max(1) as f64
        });
        out.push(CellSummary {
            cell: ci,
            n: *n,
            offset: *offset,
            trials: t,
            match_fraction: matches as f64 / t.max(1) as f64,
            wilson_low: lo,
            wilson_high: hi,
            betti_mean: mean,
            betti_var: var,
            crit_above_mean,
            theta_mean,
            coverage_fraction,
        })
    }
    out
}

/// Runs every cell x trial (work-stealing parallel; output sorted by
/// (cell, trial), hence independent of scheduling) and writes the results
/// CSV and a `.summary.csv` companion.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let cells = cfg.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let results: Vec<Result<SweepResult>> = jobs
        .par_iter()
        .map(|&(c, t)| run_trial(cfg, c, t))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    rows.sort_by_key(|r| (r.cell, r.trial));
    let summaries = summarize(cfg, &rows);
    let any_failed = rows.iter().any(|r| !r.passed());
    write_results(cfg, &rows, &summaries)?;
    Ok(SweepOutcome { rows, summaries, any_failed })
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt_bool(b: Option<bool>) -> String {
    match b {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => String::new(),
    }
}

/// Results header for a given config (fixed per file, documented in the
/// README): identity columns, per-degree Betti/match triples, f-vector,
/// critical and theta counts when enabled, and the invariant status.
pub fn csv_header(cfg: &SweepConfig) -> String {
    let mut cols = vec![
        "cell".into(),
        "trial".into(),
        "manifold".into(),
        "d".into(),
        "n".into(),
        "offset_k".into(),
        "offset_c".into(),
        "seed".into(),
        "n_realized".into(),
        "r".into(),
        "lambda".into(),
        "r0".into(),
        "covered_r".into(),
        "covered_r0".into(),
    ];
    for k in cfg.k_range[0]..=cfg.k_range[1] {
        cols.push(format!("beta_{k}"));
    }
    for k in cfg.k_range[0]..=cfg.k_range[1] {
        cols.push(format!("mbeta_{k}"));
    }
    for k in cfg.k_range[0]..=cfg.k_range[1] {
        cols.push(format!("match_{k}"));
    }
    for k in 0..cfg.dim_cap {
        cols.push(format!("f_{k}"));
    }
    let d = cfg.manifold.d;
    if cfg.toggles.run_morse {
        for k in 0..=d {
            cols.push(format!("crit_total_{k}"));
        }
        for k in 0..=d {
            cols.push(format!("crit_above_r_{k}"));
        }
        cols.push("degenerate_skips".into());
    }
    if cfg.toggles.run_theta && d >= 2 {
        for k in 1..=(d - 1).min(cfg.k_range[1].max(1)) {
            cols.push(format!("theta_{k}"));
        }
    }
    cols.push("status".into());
    cols.join(",")
}

fn row_csv(cfg: &SweepConfig, row: &SweepResult) -> String {
    let kind = match cfg.manifold.kind {
        ManifoldKind::Torus => "torus",
        ManifoldKind::Sphere => "sphere",
    };
    let mut cols = vec![
        row.cell.to_string(),
        row.trial.to_string(),
        kind.to_string(),
        cfg.manifold.d.to_string(),
        fmt_f(row.n),
        row.offset.k.to_string(),
        fmt_f(row.offset.c),
        row.seed.to_string(),
        row.n_realized.to_string(),
        fmt_f(row.r),
        fmt_f(row.lambda),
        fmt_f(row.r0),
        fmt_opt_bool(row.covered_r),
        fmt_opt_bool(row.covered_r0),
    ];
    for b in &row.betti {
        cols.push(b.to_string());
    }
    for b in &row.manifold_betti {
        cols.push(b.to_string());
    }
    for f in &row.match_flags {
        cols.push(if *f { "1".into() } else { "0".into() });
    }
    for k in 0..cfg.dim_cap {
        cols.push(row.f_vector.get(k).copied().unwrap_or(0).to_string());
    }
    if cfg.toggles.run_morse {
        let ct = row.crit_total.clone().unwrap_or_default();
        let ca = row.crit_above_r.clone().unwrap_or_default();
        for k in 0..=cfg.manifold.d {
            cols.push(ct.get(k).copied().unwrap_or(0).to_string());
        }
        for k in 0..=cfg.manifold.d {
            cols.push(ca.get(k).copied().unwrap_or(0).to_string());
        }
        cols.push(row.degenerate_skips.unwrap_or(0).to_string());
    }
    if cfg.toggles.run_theta && cfg.manifold.d >= 2 {
        let tc = row.theta_counts.clone().unwrap_or_default();
        for v in &tc {
            cols.push(v.to_string());
        }
    }
    cols.push(row.status.clone());
    cols.join(",")
}

fn write_results(cfg: &SweepConfig, rows: &[SweepResult], summaries: &[CellSummary]) -> Result<()> {
    let path = Path::new(&cfg.out);
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# generated_unix_ms: {stamp}")?;
    writeln!(f, "{}", csv_header(cfg))?;
    for row in rows {
        writeln!(f, "{}", row_csv(cfg, row))?;
    }
    f.flush()?;

    let sum_path = format!("{}.summary.csv", cfg.out);
    let mut s = std::io::BufWriter::new(std::fs::File::create(sum_path)?);
    writeln!(s, "# generated_unix_ms: {stamp}")?;
    writeln!(
        s,
        "cell,n,offset_k,offset_c,trials,match_fraction,wilson_low,wilson_high,betti_mean,betti_var,crit_above_mean,theta_mean,coverage_fraction"
    )?;
    for c in summaries {
        let bm: Vec<String> = c.betti_mean.iter().map(|v| format!("{v:.6}")).collect();
        let bv: Vec<String> = c.betti_var.iter().map(|v| format!("{v:.6}")).collect();
        let ca = c
            .crit_above_mean
            .as_ref()
            .map(|v| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let tm = c
            .theta_mean
            .as_ref()
            .map(|v| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let cf = c.coverage_fraction.map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{},{}",
            c.cell,
            fmt_f(c.n),
            c.offset.k,
            fmt_f(c.offset.c),
            c.trials,
            c.match_fraction,
            c.wilson_low,
            c.wilson_high,
            bm.join(" "),
            bv.join(" "),
            ca,
            tm,
            cf
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(out: &str) -> SweepConfig {
        SweepConfig {
            manifold: ManifoldSpec { kind: ManifoldKind::Torus, d: 2, scale: 1.0 },
            n_list: vec![150.0],
            offsets: vec![OffsetSpec { k: 1, c: 2.0 }],
            trials: 4,
            master_seed: 7,
            k_range: [0, 2],
            epsilon: 0.1,
            dim_cap: 3,
            toggles: Toggles { run_morse: true, run_theta: true, run_coverage: true },
            out: out.into(),
        }
    }

    #[test]
    fn config_json_round_trip_and_unknown_key() {
        let text = r#"{
            "manifold": {"kind": "torus", "d": 2, "scale": 1.0},
            "n_list": [100.0],
            "offsets": [{"k": 1, "c": 3.0}],
            "trials": 2,
            "master_seed": 5,
            "k_range": [0, 1],
            "epsilon": 0.1,
            "dim_cap": 2,
            "toggles": {"run_morse": false, "run_theta": false, "run_coverage": false},
            "out": "/tmp/x.csv"
        }"#;
        let cfg = SweepConfig::from_json(text).unwrap();
        assert_eq!(cfg.n_list, vec![100.0]);
        let bad = text.replace("\"trials\": 2", "\"trails\": 2");
        assert!(SweepConfig::from_json(&bad).is_err());
    }

    #[test]
    fn config_regime_validation() {
        let mut cfg = small_cfg("/tmp/unused.csv");
        cfg.n_list = vec![4.0];
        // n = 4: log n + log log n + 2 gives lambda ~ 3.7, r ~ 0.54 > 0.25.
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg("/tmp/unused.csv");
        cfg.k_range = [0, 3];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn trial_deterministic() {
        let cfg = small_cfg("/tmp/unused.csv");
        let a = run_trial(&cfg, 0, 1).unwrap();
        let b = run_trial(&cfg, 0, 1).unwrap();
        assert_eq!(a.seed, b.seed);
        assert_eq!(a.betti, b.betti);
        assert_eq!(a.n_realized, b.n_realized);
        assert_eq!(row_csv(&cfg, &a), row_csv(&cfg, &b));
        assert!(a.passed(), "status: {}", a.status);
    }

    #[test]
    fn sweep_writes_rows_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("res.csv");
        let cfg = small_cfg(out.to_str().unwrap());
        let outcome = run_sweep(&cfg).unwrap();
        assert_eq!(outcome.rows.len(), 4);
        assert!(!outcome.any_failed);
        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# generated_unix_ms:"));
        assert!(lines.next().unwrap().starts_with("cell,trial,manifold"));
        assert_eq!(lines.count(), 4);
        let summary =
            std::fs::read_to_string(format!("{}.summary.csv", out.to_str().unwrap())).unwrap();
        assert_eq!(summary.lines().count(), 3); // stamp + header + one cell
    }

    #[test]
    fn sweep_deterministic_modulo_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let out1 = dir.path().join("a.csv");
        let out2 = dir.path().join("b.csv");
        let mut cfg1 = small_cfg(out1.to_str().unwrap());
        cfg1.trials = 3;
        let mut cfg2 = small_cfg(out2.to_str().unwrap());
        cfg2.trials = 3;
        run_sweep(&cfg1).unwrap();
        run_sweep(&cfg2).unwrap();
        let strip = |p: &std::path::Path| -> String {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .filter(|l| !l.starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&out1), strip(&out2));
    }

    #[test]
    fn scheduling_independent() {
        let dir = tempfile::tempdir().unwrap();
        let out1 = dir.path().join("w1.csv");
        let out2 = dir.path().join("w4.csv");
        let cfg1 = small_cfg(out1.to_str().unwrap());
        let cfg2 = small_cfg(out2.to_str().unwrap());
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        pool1.install(|| run_sweep(&cfg1)).unwrap();
        pool4.install(|| run_sweep(&cfg2)).unwrap();
        let strip = |p: &std::path::Path| -> String {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .filter(|l| !l.starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&out1), strip(&out2));
    }

    #[test]
    fn empty_cells_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("empty.csv");
        let mut cfg = small_cfg(out.to_str().unwrap());
        cfg.n_list = vec![];
        let outcome = run_sweep(&cfg).unwrap();
        assert!(outcome.rows.is_empty());
        assert!(!outcome.any_failed);
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 2); // stamp + header
    }

    #[test]
    fn wilson_interval_sane() {
        let (lo, hi) = wilson_interval(90, 100);
        assert!(lo < 0.9 && 0.9 < hi);
        assert!(lo > 0.8 && hi < 0.96);
        let (lo, hi) = wilson_interval(0, 0);
        assert_eq!((lo, hi), (0.0, 1.0));
    }
}
