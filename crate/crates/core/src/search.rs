//! Location of codimension-two Hopf points (`l1 = 0`) on the Hopf surface.
//!
//! For fixed `(n, beta0, k)` the delay is always slaved to `delta` through
//! `r = r_H(delta)`, so the search is one dimensional: walk `delta` upward
//! geometrically until `l1` changes sign, then bisect.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::lyapunov_at;
use crate::model::Parameters;

/// Grid of `(n, beta0, k)` cells and the `delta` walk used in each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_values: Vec<f64>,
    pub beta0_values: Vec<f64>,
    pub k_values: Vec<f64>,
    #[serde(default = "default_seed")]
    pub delta_seed: f64,
    #[serde(default = "default_growth")]
    pub delta_growth: f64,
    /// Upper end of the walk; `None` uses the existence bound `beta0 (k - 1)` of each cell.
    #[serde(default)]
    pub delta_max: Option<f64>,
}

fn default_seed() -> f64 {
    1e-4
}

fn default_growth() -> f64 {
    1.25
}

fn tenths(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|i| i as f64 / 10.0).collect()
}

impl GridSpec {
    /// `n in {1, 1.5, 2, 3, .., 12}`, `beta0 in {0.5, .., 2.5}`, `k in {1.1, .., 1.9}`.
    pub fn paper() -> Self {
        let mut n_values = vec![1.0, 1.5, 2.0];
        n_values.extend((3..=12).map(f64::from));
        GridSpec {
            n_values,
            beta0_values: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            k_values: tenths(11, 19),
            delta_seed: default_seed(),
            delta_growth: default_growth(),
            delta_max: None,
        }
    }

    /// The paper grid restricted to one `n`.
    pub fn single_n(n: f64) -> Self {
        GridSpec {
            n_values: vec![n],
            ..Self::paper()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let grid: GridSpec = serde_json::from_str(text).map_err(|e| Error::usage(format!("grid spec: {e}")))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.beta0_values.is_empty() || self.k_values.is_empty() {
            return Err(Error::usage("grid spec: value lists must be nonempty"));
        }
        for &n in &self.n_values {
            for &beta0 in &self.beta0_values {
                for &k in &self.k_values {
                    Parameters::without_delay(beta0, n, 1.0, k)?.check_k_upper()?;
                }
            }
        }
        let seed_ok = self.delta_seed.is_finite() && self.delta_seed > 0.0;
        let growth_ok = self.delta_growth.is_finite() && self.delta_growth > 1.0;
        let max_ok = self.delta_max.is_none_or(|m| m.is_finite() && m > self.delta_seed);
        if !(seed_ok && growth_ok && max_ok) {
            return Err(Error::usage(
                "grid spec: need delta_seed > 0, delta_growth > 1, delta_max > delta_seed",
            ));
        }
        Ok(())
    }

    fn delta_cap(&self, beta0: f64, k: f64) -> f64 {
        self.delta_max.unwrap_or(beta0 * (k - 1.0))
    }

    fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &beta0 in &self.beta0_values {
                for &k in &self.k_values {
                    out.push((n, beta0, k));
                }
            }
        }
        out
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::paper()
    }
}

/// A located point with `l1 ~ 0` and its `l2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Codim2Record {
    pub n: f64,
    pub beta0: f64,
    pub k: f64,
    pub delta_star: f64,
    pub r_star: f64,
    pub omega_star: f64,
    pub l1_residual: f64,
    pub l2: f64,
}

impl Codim2Record {
    pub const CSV_HEADER: [&'static str; 8] =
        ["n", "beta0", "k", "delta_star", "r_star", "omega_star", "l1_residual", "l2"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.n,
            self.beta0,
            self.k,
            self.delta_star,
            self.r_star,
            self.omega_star,
            self.l1_residual,
            self.l2,
        ]
    }
}

/// `l1` at the Hopf point for `delta`, or `None` outside the Hopf domain.
fn l1_at(n: f64, beta0: f64, k: f64, delta: f64) -> Option<f64> {
    let params = Parameters::without_delay(beta0, n, delta, k).ok()?;
    lyapunov_at(&params, false).ok().map(|rep| rep.l1)
}

/// First adjacent pair `(delta_lo, delta_hi)` of the walk with opposite `l1` signs.
///
/// Points outside the Hopf domain before the first Hopf point are skipped;
/// once Hopf points have been seen, leaving the domain ends the walk. An
/// exact zero returns the degenerate pair `(delta, delta)`.
pub fn bracket_l1_sign_change(n: f64, beta0: f64, k: f64, grid: &GridSpec) -> Option<(f64, f64)> {
    let cap = grid.delta_cap(beta0, k);
    let mut previous: Option<(f64, f64)> = None;
    let mut delta = grid.delta_seed;
    while delta <= cap {
        match l1_at(n, beta0, k, delta) {
            Some(l1) if l1 == 0.0 => return Some((delta, delta)),
            Some(l1) => {
                if let Some((d0, l0)) = previous {
                    if l0.signum() != l1.signum() {
                        return Some((d0, delta));
                    }
                }
                previous = Some((delta, l1));
            }
            None if previous.is_some() => return None,
            None => {}
        }
        delta *= grid.delta_growth;
    }
    None
}

fn record_at(n: f64, beta0: f64, k: f64, delta: f64) -> Result<Codim2Record> {
    let params = Parameters::without_delay(beta0, n, delta, k)?;
    let rep = lyapunov_at(&params, true)?;
    Ok(Codim2Record {
        n,
        beta0,
        k,
        delta_star: delta,
        r_star: rep.hopf.r(),
        omega_star: rep.hopf.omega_star,
        l1_residual: rep.l1,
        l2: rep.l2.expect("l2 requested"),
    })
}

/// Bisection on `delta` (each iterate recomputes `r_H` and `l1`) until
/// `|l1| <= tol_l1`, then `l2` at the located point.
pub fn bisect_codim2(n: f64, beta0: f64, k: f64, delta_lo: f64, delta_hi: f64, tol_l1: f64) -> Result<Codim2Record> {
    let eval = |delta: f64| -> Result<f64> {
        let params = Parameters::without_delay(beta0, n, delta, k)?;
        Ok(lyapunov_at(&params, false)?.l1)
    };
    let (mut lo, mut hi) = (delta_lo.min(delta_hi), delta_lo.max(delta_hi));
    let mut l_lo = eval(lo)?;
    if l_lo == 0.0 || l_lo.abs() <= tol_l1 {
        return record_at(n, beta0, k, lo);
    }
    let l_hi = eval(hi)?;
    if l_hi == 0.0 || l_hi.abs() <= tol_l1 {
        return record_at(n, beta0, k, hi);
    }
    if l_lo.signum() == l_hi.signum() {
        return Err(Error::usage(format!(
            "delta bracket [{lo}, {hi}] does not bracket l1 = 0 (l1 = {l_lo:e}, {l_hi:e})"
        )));
    }
    let mut best = if l_lo.abs() < l_hi.abs() { (lo, l_lo) } else { (hi, l_hi) };
    loop {
        let mid = 0.5 * (lo + hi);
        let l_mid = eval(mid)?;
        if l_mid.abs() < best.1.abs() {
            best = (mid, l_mid);
        }
        if l_mid.abs() <= tol_l1 {
            return record_at(n, beta0, k, mid);
        }
        if l_mid.signum() == l_lo.signum() {
            lo = mid;
            l_lo = l_mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * mid {
            return Err(Error::numerical(format!(
                "bisection collapsed without |l1| <= {tol_l1:e}: best delta = {:.17e}, l1 = {:e}",
                best.0, best.1
            )));
        }
    }
}

/// Outcome of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Found(Codim2Record),
    NoSignChange { n: f64, beta0: f64, k: f64 },
    Failed { n: f64, beta0: f64, k: f64, error: String },
}

impl CellOutcome {
    pub fn key(&self) -> (f64, f64, f64) {
        match self {
            CellOutcome::Found(r) => (r.n, r.beta0, r.k),
            CellOutcome::NoSignChange { n, beta0, k } | CellOutcome::Failed { n, beta0, k, .. } => (*n, *beta0, *k),
        }
    }

    pub fn record(&self) -> Option<&Codim2Record> {
        match self {
            CellOutcome::Found(r) => Some(r),
            _ => None,
        }
    }
}

pub fn search_cell(n: f64, beta0: f64, k: f64, grid: &GridSpec, tol_l1: f64) -> CellOutcome {
    match bracket_l1_sign_change(n, beta0, k, grid) {
        None => CellOutcome::NoSignChange { n, beta0, k },
        Some((lo, hi)) => match bisect_codim2(n, beta0, k, lo, hi, tol_l1) {
            Ok(rec) => CellOutcome::Found(rec),
            Err(e) => CellOutcome::Failed {
                n,
                beta0,
                k,
                error: e.to_string(),
            },
        },
    }
}

/// Every cell of the grid, in parallel, sorted by `(n, beta0, k)`.
pub fn scan_grid(grid: &GridSpec, tol_l1: f64) -> Result<Vec<CellOutcome>> {
    grid.validate()?;
    let mut out: Vec<CellOutcome> = grid
        .cells()
        .into_par_iter()
        .map(|(n, beta0, k)| search_cell(n, beta0, k, grid, tol_l1))
        .collect();
    out.sort_by(|a, b| a.key().partial_cmp(&b.key()).expect("finite grid values"));
    Ok(out)
}

/// Findings per Hill exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentSummary {
    pub n: f64,
    pub cells: usize,
    pub found: usize,
    pub failed: usize,
    pub min_r_star: Option<f64>,
    pub max_r_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TablesReport {
    /// All located points, sorted by `(n, beta0, k)`.
    pub records: Vec<Codim2Record>,
    pub summaries: Vec<ExponentSummary>,
    pub failures: Vec<CellOutcome>,
}

impl TablesReport {
    pub fn summary(&self, n: f64) -> Option<&ExponentSummary> {
        self.summaries.iter().find(|s| s.n == n)
    }

    pub fn records_for(&self, n: f64) -> impl Iterator<Item = &Codim2Record> {
        self.records.iter().filter(move |r| r.n == n)
    }
}

pub const TOL_L1: f64 = 1e-10;

/// Scan of `preset` with the per-exponent summaries used for the tables.
pub fn reproduce_tables(preset: &GridSpec) -> Result<TablesReport> {
    let outcomes = scan_grid(preset, TOL_L1)?;
    let mut summaries = Vec::new();
    for &n in &preset.n_values {
        let cell: Vec<&CellOutcome> = outcomes.iter().filter(|o| o.key().0 == n).collect();
        let r: Vec<f64> = cell.iter().filter_map(|o| o.record()).map(|r| r.r_star).collect();
        summaries.push(ExponentSummary {
            n,
            cells: cell.len(),
            found: r.len(),
            failed: cell.iter().filter(|o| matches!(o, CellOutcome::Failed { .. })).count(),
            min_r_star: r.iter().copied().reduce(f64::min),
            max_r_star: r.iter().copied().reduce(f64::max),
        });
    }
    Ok(TablesReport {
        records: outcomes.iter().filter_map(|o| o.record()).copied().collect(),
        summaries,
        failures: outcomes
            .into_iter()
            .filter(|o| matches!(o, CellOutcome::Failed { .. }))
            .collect(),
    })
}

/// One printed row: `(beta0, k, delta_star, r_star, l2)` at `n = 2`.
pub type GoldenRow = (f64, f64, f64, f64, f64);

/// The published codimension-two points for `n = 2`.
#[rustfmt::skip]
pub const GOLDEN_N2: [GoldenRow; 45] = [
    (0.5, 1.1, 0.0045705962, 26.125314, -0.021),
    (0.5, 1.2, 0.0090491351, 25.751524, -0.0151),
    (0.5, 1.3, 0.0134437887, 25.422162, -0.0124),
    (0.5, 1.4, 0.0177612407, 25.130258, -0.0108),
    (0.5, 1.5, 0.0220070315, 24.870352, -0.0097),
    (0.5, 1.6, 0.0261858065, 24.638093, -0.0088),
    (0.5, 1.7, 0.0303014988, 24.429962, -0.0081),
    (0.5, 1.8, 0.0343574676, 24.243076, -0.0076),
    (0.5, 1.9, 0.0383566021, 24.075039, -0.0071),
    (1.0, 1.1, 0.0091411924, 13.062657, -0.0205),
    (1.0, 1.2, 0.0180982702, 12.875762, -0.0142),
    (1.0, 1.3, 0.0268875774, 12.711081, -0.0114),
    (1.0, 1.4, 0.0355224814, 12.565129, -0.0097),
    (1.0, 1.5, 0.0440140630, 12.435176, -0.0085),
    (1.0, 1.6, 0.0523716129, 12.319046, -0.0076),
    (1.0, 1.7, 0.0606029975, 12.214981, -0.0069),
    (1.0, 1.8, 0.0687149345, 12.121538, -0.0063),
    (1.0, 1.9, 0.0767132043, 12.037519, -0.0059),
    (1.5, 1.1, 0.0137117887, 8.708438, -0.0204),
    (1.5, 1.2, 0.0271474053, 8.583841, -0.0140),
    (1.5, 1.3, 0.0403313662, 8.474054, -0.0112),
    (1.5, 1.4, 0.0532837222, 8.376752, -0.0095),
    (1.5, 1.5, 0.0660210946, 8.290117, -0.0083),
    (1.5, 1.6, 0.0785741932, 8.212697, -0.0074),
    (1.5, 1.7, 0.0909044966, 8.143320, -0.0067),
    (1.5, 1.8, 0.1030724022, 8.081025, -0.0061),
    (1.5, 1.9, 0.1150698062, 8.025013, -0.0056),
    (2.0, 1.1, 0.018282385, 6.531328, -0.0203),
    (2.0, 1.2, 0.036196540, 6.437880, -0.014),
    (2.0, 1.3, 0.053775154, 6.355540, -0.0111),
    (2.0, 1.4, 0.071044963, 6.282564, -0.0093),
    (2.0, 1.5, 0.088028126, 6.217588, -0.0082),
    (2.0, 1.6, 0.104743225, 6.159523, -0.0073),
    (2.0, 1.7, 0.121205995, 6.107490, -0.0066),
    (2.0, 1.8, 0.137429869, 6.060769, -0.0060),
    (2.0, 1.9, 0.153426408, 6.018759, -0.0055),
    (2.5, 1.1, 0.022852981, 5.225062, -0.0203),
    (2.5, 1.2, 0.045245675, 5.150304, -0.0139),
    (2.5, 1.3, 0.067218943, 5.084432, -0.0110),
    (2.5, 1.4, 0.088806203, 5.026051, -0.0093),
    (2.5, 1.5, 0.110035157, 4.974074, -0.0081),
    (2.5, 1.6, 0.130929032, 4.927618, -0.0073),
    (2.5, 1.7, 0.151507494, 4.885992, -0.0066),
    (2.5, 1.8, 0.171787337, 4.848615, -0.0060),
    (2.5, 1.9, 0.191783010, 4.815007, -0.0055),
];

/// Tolerances for the golden comparison.
pub const GOLDEN_DELTA_REL: f64 = 1e-6;
pub const GOLDEN_R_REL: f64 = 1e-5;
pub const GOLDEN_L2_ABS: f64 = 5e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenCheck {
    pub beta0: f64,
    pub k: f64,
    pub expected: GoldenRowJson,
    pub found: Option<Codim2Record>,
    pub delta_rel_err: Option<f64>,
    pub r_rel_err: Option<f64>,
    pub l2_abs_err: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoldenRowJson {
    pub delta_star: f64,
    pub r_star: f64,
    pub l2: f64,
}

/// Row by row comparison of `records` with the published `n = 2` points.
pub fn compare_golden(records: &[Codim2Record]) -> Vec<GoldenCheck> {
    GOLDEN_N2
        .iter()
        .map(|&(beta0, k, delta, r, l2)| {
            let found = records
                .iter()
                .find(|rec| rec.n == 2.0 && rec.beta0 == beta0 && rec.k == k)
                .copied();
            let errs = found.map(|rec| {
                (
                    (rec.delta_star - delta).abs() / delta,
                    (rec.r_star - r).abs() / r,
                    (rec.l2 - l2).abs(),
                )
            });
            let pass = match (found, errs) {
                (Some(rec), Some((de, re, le))) => {
                    de <= GOLDEN_DELTA_REL && re <= GOLDEN_R_REL && le <= GOLDEN_L2_ABS && rec.l2 < 0.0
                }
                _ => false,
            };
            GoldenCheck {
                beta0,
                k,
                expected: GoldenRowJson {
                    delta_star: delta,
                    r_star: r,
                    l2,
                },
                found,
                delta_rel_err: errs.map(|e| e.0),
                r_rel_err: errs.map(|e| e.1),
                l2_abs_err: errs.map(|e| e.2),
                pass,
            }
        })
        .collect()
}
