//! Linear stability of `x2`, the Hopf frontier and the Hopf surface.
//!
//! With `p = delta + B1` and `q = k B1` the characteristic equation is
//! `lambda + p = q exp(-lambda r)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use crate::error::{DomainError, Error, Result};
use crate::model::{equilibria, nontrivial_equilibrium, DerivativeSet, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseLabel {
    #[serde(rename = "NO_X2")]
    NoX2,
    #[serde(rename = "I_A")]
    IA,
    #[serde(rename = "I_B")]
    IB,
    #[serde(rename = "II")]
    II,
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseLabel::NoX2 => "no x2",
            CaseLabel::IA => "case I.A",
            CaseLabel::IB => "case I.B",
            CaseLabel::II => "case II",
        })
    }
}

/// Delay interval `(lo, hi)` on which the stated criterion gives stability.
/// `hi = None` stands for `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayWindow {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl DelayWindow {
    pub fn contains(&self, r: f64) -> bool {
        r > self.lo && self.hi.is_none_or(|hi| r < hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub case_label: CaseLabel,
    pub asymptotically_stable: bool,
    pub stable_r_window: Option<DelayWindow>,
    /// Root of `omega cot(omega r) = -p` in `(0, pi/r)` at the given `r`.
    pub omega0: Option<f64>,
    pub b1: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// Case I.A with `|q| <= |p|`, where the windowed criterion does not apply.
    pub condition_inapplicable: bool,
}

/// `sqrt(q^2 - p^2)`.
pub fn omega0_closed(p: f64, q: f64) -> Result<f64> {
    if q.abs() <= p.abs() {
        return Err(DomainError::NoHopfFrequency { p, q }.into());
    }
    Ok((q * q - p * p).sqrt())
}

/// Root of `omega cot(omega r) + p` on `(eps, pi/r - eps)`, `eps = 1e-9 pi/r`.
pub fn omega0_transcendental(p: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite() && p.is_finite()) {
        return Err(Error::InvalidParameters(format!("p = {p}, r = {r}")));
    }
    let f = |w: f64| w / (w * r).tan() + p;
    let eps = 1e-9 * PI / r;
    let (a, b) = (eps, PI / r - eps);
    if f(a) * f(b) > 0.0 {
        return Err(DomainError::NoBracket.into());
    }
    let mut conv = SimpleConvergency {
        eps: 1e-15,
        max_iter: 200,
    };
    find_root_brent(a, b, f, &mut conv).map_err(|e| Error::numerical(format!("brent: {e:?}")))
}

/// Stability verdict from the sign structure of `B1` and `p`.
pub fn classify(params: &Parameters) -> Result<StabilityVerdict> {
    params.validate()?;
    let r = params.delay()?;
    let eq = equilibria(params)?;
    if eq.x2.is_none() {
        return Ok(StabilityVerdict {
            case_label: CaseLabel::NoX2,
            asymptotically_stable: false,
            stable_r_window: None,
            omega0: None,
            b1: None,
            p: None,
            q: None,
            condition_inapplicable: false,
        });
    }
    let (_, b) = nontrivial_equilibrium(params)?;
    let b1 = b.b1();
    let p = params.delta + b1;
    let q = params.k * b1;
    let omega0 = omega0_transcendental(p, r).ok();
    let mut verdict = StabilityVerdict {
        case_label: CaseLabel::II,
        asymptotically_stable: true,
        stable_r_window: Some(DelayWindow { lo: 0.0, hi: None }),
        omega0,
        b1: Some(b1),
        p: Some(p),
        q: Some(q),
        condition_inapplicable: false,
    };
    if b1 > 0.0 {
        return Ok(verdict);
    }
    if p < 0.0 {
        verdict.case_label = CaseLabel::IA;
        match omega0_closed(p, q) {
            Ok(w) => {
                let window = DelayWindow {
                    lo: (p / q).clamp(-1.0, 1.0).acos() / w,
                    hi: Some(1.0 / p.abs()),
                };
                verdict.asymptotically_stable = window.contains(r);
                verdict.stable_r_window = Some(window);
            }
            Err(_) => {
                verdict.condition_inapplicable = true;
                verdict.asymptotically_stable = false;
                verdict.stable_r_window = None;
            }
        }
        return Ok(verdict);
    }
    verdict.case_label = CaseLabel::IB;
    if p > q.abs() {
        return Ok(verdict);
    }
    let w = omega0_closed(p, q)?;
    let window = DelayWindow {
        lo: 0.0,
        hi: Some((p / q).clamp(-1.0, 1.0).acos() / w),
    };
    verdict.asymptotically_stable = window.contains(r);
    verdict.stable_r_window = Some(window);
    Ok(verdict)
}

/// A point on the Hopf surface: `(params, r)` with `+-i omega_star` as roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub params: Parameters,
    pub omega_star: f64,
    pub x2: f64,
    pub derivatives: DerivativeSet,
}

impl HopfPoint {
    pub fn r(&self) -> f64 {
        self.params.r.expect("Hopf point carries its delay")
    }

    pub fn b1(&self) -> f64 {
        self.derivatives.b1()
    }

    pub fn p(&self) -> f64 {
        self.params.delta + self.b1()
    }

    pub fn q(&self) -> f64 {
        self.params.k * self.b1()
    }

    /// `|i omega + p - q exp(-i omega r)|`.
    pub fn characteristic_residual(&self) -> f64 {
        characteristic(Complex64::new(0.0, self.omega_star), self.p(), self.q(), self.r()).norm()
    }
}

/// `lambda + p - q exp(-lambda r)`.
pub fn characteristic(lambda: Complex64, p: f64, q: f64, r: f64) -> Complex64 {
    lambda + p - q * (-lambda * r).exp()
}

/// Delay at which `x2` loses stability through `+-i omega`, for fixed `(beta0, n, delta, k)`.
pub fn hopf_delay(params: &Parameters) -> Result<HopfPoint> {
    let base = Parameters { r: None, ..*params };
    let (x2, b) = nontrivial_equilibrium(&base)?;
    let b1 = b.b1();
    if b1 >= 0.0 {
        return Err(DomainError::CaseTwo(b1).into());
    }
    let p = base.delta + b1;
    let q = base.k * b1;
    let omega = omega0_closed(p, q)?;
    let r = (p / q).clamp(-1.0, 1.0).acos() / omega;
    Ok(HopfPoint {
        params: base.with_delay(r)?,
        omega_star: omega,
        x2,
        derivatives: b,
    })
}

/// `d Re(lambda) / dr` at the crossing, by implicit differentiation of the
/// characteristic equation.
pub fn transversality(h: &HopfPoint) -> Result<f64> {
    let lambda = Complex64::new(0.0, h.omega_star);
    let e = (-lambda * h.r()).exp();
    let den = 1.0 + h.r() * h.q() * e;
    if den.norm() < 1e-12 {
        return Err(DomainError::DegenerateCrossing(den.norm()).into());
    }
    Ok((-h.q() * lambda * e / den).re)
}

/// Inclusive linear grid: `steps` points from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl RangeSpec {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let spec = RangeSpec { min, max, steps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min <= 0.0 {
            return Err(Error::InvalidParameters(format!(
                "grid bounds must be finite and positive: [{}, {}]",
                self.min, self.max
            )));
        }
        if self.max < self.min || self.steps == 0 {
            return Err(Error::InvalidParameters(format!(
                "empty grid: [{}, {}] with {} steps",
                self.min, self.max, self.steps
            )));
        }
        if self.steps == 1 && self.max != self.min {
            return Err(Error::InvalidParameters(
                "a single-step grid needs min == max".into(),
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.max } else { self.min + h * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshRecord {
    pub n: f64,
    pub beta0: f64,
    pub k: f64,
    pub delta: f64,
    pub r: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfMesh {
    pub records: Vec<MeshRecord>,
    /// Grid points without a Hopf point (no `x2`, case II, or `|q| <= |p|`).
    pub omitted: usize,
}

/// Hopf delay over a `(k, delta)` grid, sorted by `(k, delta)`.
pub fn hopf_surface_mesh(
    n: f64,
    beta0: f64,
    k_grid: &RangeSpec,
    delta_grid: &RangeSpec,
) -> Result<HopfMesh> {
    k_grid.validate()?;
    delta_grid.validate()?;
    let ks = k_grid.values();
    let deltas = delta_grid.values();
    let cells: Vec<(f64, f64)> = ks
        .iter()
        .flat_map(|&k| deltas.iter().map(move |&d| (k, d)))
        .collect();
    let results: Vec<Result<Option<MeshRecord>>> = cells
        .par_iter()
        .map(|&(k, delta)| {
            let params = Parameters::without_delay(beta0, n, delta, k)?;
            match hopf_delay(&params) {
                Ok(h) => Ok(Some(MeshRecord {
                    n,
                    beta0,
                    k,
                    delta,
                    r: h.r(),
                    omega: h.omega_star,
                })),
                Err(Error::Domain(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut omitted = 0;
    for res in results {
        match res? {
            Some(rec) => records.push(rec),
            None => omitted += 1,
        }
    }
    records.sort_by(|a, b| a.k.total_cmp(&b.k).then(a.delta.total_cmp(&b.delta)));
    Ok(HopfMesh { records, omitted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::testutil::{random_hopf_points, FIG3_DELTA};

    fn params(beta0: f64, n: f64, delta: f64, k: f64, r: Option<f64>) -> Parameters {
        Parameters::new(beta0, n, delta, k, r).unwrap()
    }

    /// Newton on the characteristic equation from `guess`.
    fn track_root(p: f64, q: f64, r: f64, guess: Complex64) -> Complex64 {
        let mut z = guess;
        for _ in 0..50 {
            let f = characteristic(z, p, q, r);
            let df = 1.0 + q * r * (-z * r).exp();
            let step = f / df;
            z -= step;
            if step.norm() < 1e-15 {
                break;
            }
        }
        z
    }

    #[test]
    fn classify_case_two() {
        let v = classify(&params(1.0, 1.0, 0.1, 1.5, Some(5.0))).unwrap();
        assert_eq!(v.case_label, CaseLabel::II);
        assert!(v.asymptotically_stable);
    }

    #[test]
    fn classify_case_ia_window() {
        let v = classify(&params(1.0, 2.0, FIG3_DELTA, 1.5, Some(20.0))).unwrap();
        assert_eq!(v.case_label, CaseLabel::IA);
        assert!(v.asymptotically_stable);
        let w = v.stable_r_window.unwrap();
        assert_relative_eq!(w.lo, 12.435176, max_relative = 1e-6);
        assert_relative_eq!(w.hi.unwrap(), 35.067, max_relative = 1e-4);
        let w0 = v.omega0.unwrap();
        assert!(w0 > 0.0 && w0 < PI / 20.0);
        assert!((w0 / (w0 * 20.0).tan() + v.p.unwrap()).abs() <= 1e-10);

        let below = classify(&params(1.0, 2.0, FIG3_DELTA, 1.5, Some(10.0))).unwrap();
        assert_eq!(below.case_label, CaseLabel::IA);
        assert!(!below.asymptotically_stable);
    }

    #[test]
    fn classify_no_equilibrium() {
        let v = classify(&params(1.0, 2.0, 1.0, 1.2, Some(1.0))).unwrap();
        assert_eq!(v.case_label, CaseLabel::NoX2);
        assert!(!v.asymptotically_stable);
    }

    #[test]
    fn classify_case_ib() {
        // n=2, beta0=1, k=1.5: B1 < 0 for delta < 0.25, p > 0 for delta > 0.125,
        // and p > |q| for delta > 0.2
        let v = classify(&params(1.0, 2.0, 0.22, 1.5, Some(1000.0))).unwrap();
        assert_eq!(v.case_label, CaseLabel::IB);
        assert!(v.b1.unwrap() < 0.0 && v.p.unwrap() > v.q.unwrap().abs());
        assert!(v.asymptotically_stable);
        assert_eq!(v.stable_r_window, Some(DelayWindow { lo: 0.0, hi: None }));

        let h = hopf_delay(&params(1.0, 2.0, 0.15, 1.5, None)).unwrap();
        let v = classify(&h.params.with_delay(0.9 * h.r()).unwrap()).unwrap();
        assert_eq!(v.case_label, CaseLabel::IB);
        assert!(v.asymptotically_stable);
        assert_relative_eq!(v.stable_r_window.unwrap().hi.unwrap(), h.r(), max_relative = 1e-14);
        let v = classify(&h.params.with_delay(1.1 * h.r()).unwrap()).unwrap();
        assert!(!v.asymptotically_stable);
    }

    #[test]
    fn classify_requires_delay() {
        assert!(classify(&params(1.0, 2.0, 0.1, 1.5, None)).is_err());
    }

    #[test]
    fn omega_closed_examples() {
        assert_eq!(omega0_closed(0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(omega0_closed(-0.0285161, -0.1087953).unwrap(), 0.1049917, epsilon = 1e-7);
        assert!(matches!(
            omega0_closed(1.0, 0.5),
            Err(Error::Domain(DomainError::NoHopfFrequency { .. }))
        ));
    }

    #[test]
    fn omega_transcendental_examples() {
        assert!((omega0_transcendental(0.0, 1.0).unwrap() - PI / 2.0).abs() <= 1e-12);
        let w = omega0_transcendental(-0.0285161, 12.435176).unwrap();
        assert_relative_eq!(w, 0.1049917, epsilon = 1e-6);
        assert!(omega0_transcendental(-10.0, 1.0).is_err());
    }

    #[test]
    fn two_omega_definitions_agree() {
        for h in random_hopf_points(50, 7) {
            let wt = omega0_transcendental(h.p(), h.r()).unwrap();
            assert!((wt - h.omega_star).abs() <= 1e-10, "{wt} vs {}", h.omega_star);
        }
    }

    #[test]
    fn hopf_delay_table_rows() {
        let h = hopf_delay(&params(1.0, 2.0, FIG3_DELTA, 1.5, None)).unwrap();
        assert!((h.r() - 12.435176).abs() <= 1e-5);
        let h = hopf_delay(&params(0.5, 2.0, 0.0045705962, 1.1, None)).unwrap();
        assert!((h.r() - 26.125314).abs() <= 1e-5);
    }

    #[test]
    fn hopf_point_invariants() {
        for h in random_hopf_points(100, 11) {
            assert!(h.characteristic_residual() <= 1e-12, "{}", h.characteristic_residual());
            let (w, r) = (h.omega_star, h.r());
            assert!(w > 0.0 && w < PI / r);
            assert!(((w * r).cos() - h.p() / h.q()).abs() <= 1e-12);
            assert!(((w * r).sin() + w / h.q()).abs() <= 1e-12);
        }
    }

    #[test]
    fn hopf_delay_errors() {
        assert!(matches!(
            hopf_delay(&params(1.0, 1.0, 0.1, 1.5, None)),
            Err(Error::Domain(DomainError::CaseTwo(_)))
        ));
        assert!(matches!(
            hopf_delay(&params(1.0, 2.0, 1000.0, 1.5, None)),
            Err(Error::Domain(DomainError::NoEquilibrium(_)))
        ));
        assert!(matches!(
            hopf_delay(&params(1.0, 2.0, 0.45, 1.5, None)),
            Err(Error::Domain(DomainError::CaseTwo(_)))
        ));
        // B1 < 0 but p > |q|
        assert!(matches!(
            hopf_delay(&params(1.0, 2.0, 0.22, 1.5, None)),
            Err(Error::Domain(DomainError::NoHopfFrequency { .. }))
        ));
    }

    #[test]
    fn hopf_delay_scaling_exact() {
        for h in random_hopf_points(20, 3) {
            for &c in &[0.5, 2.0, 4.0] {
                let scaled = hopf_delay(&h.params.rescaled(c)).unwrap();
                assert_eq!(scaled.r(), h.r() / c);
                assert_eq!(scaled.omega_star, h.omega_star * c);
            }
            let c = 3.0;
            let scaled = hopf_delay(&h.params.rescaled(c)).unwrap();
            assert_relative_eq!(scaled.r(), h.r() / c, max_relative = 1e-13);
        }
    }

    #[test]
    fn transversality_matches_root_tracking() {
        let mut points = random_hopf_points(20, 5);
        points.push(hopf_delay(&params(1.0, 2.0, FIG3_DELTA, 1.5, None)).unwrap());
        for h in points {
            let t = transversality(&h).unwrap();
            assert!(t != 0.0);
            let dr = 1e-5 * h.r();
            let guess = Complex64::new(0.0, h.omega_star);
            let up = track_root(h.p(), h.q(), h.r() + dr, guess);
            let down = track_root(h.p(), h.q(), h.r() - dr, guess);
            let fd = (up.re - down.re) / (2.0 * dr);
            assert_eq!(fd.signum(), t.signum());
            assert_relative_eq!(fd, t, max_relative = 1e-5);
        }
    }

    #[test]
    fn transversality_scaling() {
        let h = hopf_delay(&params(1.0, 2.0, FIG3_DELTA, 1.5, None)).unwrap();
        let h2 = hopf_delay(&h.params.rescaled(2.0)).unwrap();
        assert_relative_eq!(
            transversality(&h2).unwrap(),
            4.0 * transversality(&h).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn mesh_single_point() {
        let k = RangeSpec::new(1.5, 1.5, 1).unwrap();
        let d = RangeSpec::new(FIG3_DELTA, FIG3_DELTA, 1).unwrap();
        let mesh = hopf_surface_mesh(2.0, 1.0, &k, &d).unwrap();
        assert_eq!(mesh.records.len(), 1);
        assert!((mesh.records[0].r - 12.435176).abs() <= 1e-5);
    }

    #[test]
    fn mesh_omits_out_of_domain() {
        let k = RangeSpec::new(1.1, 1.5, 3).unwrap();
        let d = RangeSpec::new(0.01, 2.0, 5).unwrap();
        let mesh = hopf_surface_mesh(2.0, 1.0, &k, &d).unwrap();
        assert_eq!(mesh.records.len() + mesh.omitted, 15);
        assert!(mesh.omitted >= 9);
        assert!(mesh.records.iter().all(|r| r.delta < 1.0));
        let sorted = mesh
            .records
            .windows(2)
            .all(|w| (w[0].k, w[0].delta) < (w[1].k, w[1].delta));
        assert!(sorted);
    }

    #[test]
    fn mesh_scaling_doubles_r() {
        let k = RangeSpec::new(1.1, 1.9, 5).unwrap();
        let d = RangeSpec::new(0.004, 0.2, 8).unwrap();
        let dh = RangeSpec::new(0.002, 0.1, 8).unwrap();
        let full = hopf_surface_mesh(2.0, 1.0, &k, &d).unwrap();
        let half = hopf_surface_mesh(2.0, 0.5, &k, &dh).unwrap();
        assert_eq!(full.records.len(), half.records.len());
        for (a, b) in full.records.iter().zip(&half.records) {
            assert_eq!(b.r, 2.0 * a.r);
        }
    }
}
