//! Center-manifold reduction at a Hopf point.
//!
//! On the center manifold the solution segment is
//! `x_t(s) = u e^(i omega s) + conj(u) e^(-i omega s) + sum w_jk(s) u^j conj(u)^k / (j! k!)`
//! and the reduced flow is `u' = i omega u + sum g_jk u^j conj(u)^k / (j! k!)`.
//! The right-hand sides and boundary conditions of the `w_jk` equations are
//! generated by coefficient matching in `(u, conj u)`, not transcribed.

mod closed_form;
mod series;

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{DomainError, Error, Result};
use crate::model::DerivativeSet;
use crate::qpoly::QuasiPolynomial;
use crate::stability::HopfPoint;

pub use closed_form::closed_form_fjk;
use series::{factorial, Series, MAX_DEGREE};

/// Index `(j, k)` of a coefficient of `u^j conj(u)^k`.
pub type Index = (usize, usize);

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Indices whose `w_jk` are solved directly; the rest follow by conjugation.
const SOLVED: [(usize, Index); 6] = [
    (2, (2, 0)),
    (2, (1, 1)),
    (3, (3, 0)),
    (3, (2, 1)),
    (4, (4, 0)),
    (4, (3, 1)),
];

/// Everything the reduction needs from a Hopf point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionData {
    pub omega: f64,
    pub r: f64,
    pub delta: f64,
    pub k: f64,
    pub b: DerivativeSet,
    /// `Psi_1(0)`, normalized so that the bilinear form pairs it with `e^(i omega s)` to 1.
    pub psi10: Complex64,
}

impl ProjectionData {
    pub fn p(&self) -> f64 {
        self.delta + self.b.b1()
    }

    pub fn kb1(&self) -> f64 {
        self.k * self.b.b1()
    }

    /// `|psi10 (1 + k B1 r e^(-i omega r)) - 1|`.
    pub fn identity_residual(&self) -> f64 {
        let e = Complex64::from_polar(1.0, -self.omega * self.r);
        (self.psi10 * (1.0 + self.kb1() * self.r * e) - 1.0).norm()
    }

    fn exp(&self, mult: i32, s: f64) -> Complex64 {
        Complex64::from_polar(1.0, mult as f64 * self.omega * s)
    }
}

pub fn projection_data(h: &HopfPoint) -> ProjectionData {
    let (p, w, r) = (h.p(), h.omega_star, h.r());
    let num = Complex64::new(1.0 + p * r, -w * r);
    let den = (1.0 + p * r).powi(2) + w * w * r * r;
    ProjectionData {
        omega: w,
        r,
        delta: h.params.delta,
        k: h.params.k,
        b: h.derivatives,
        psi10: num / den,
    }
}

/// Taylor coefficients `f_jk` of the nonlinearity restricted to the center
/// manifold, and `g_jk = psi10 f_jk`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefficientTable {
    f: BTreeMap<Index, Complex64>,
    g: BTreeMap<Index, Complex64>,
}

impl CoefficientTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// A table holding only `g` values, for evaluating the Lyapunov formulas directly.
    pub fn from_g(g: impl IntoIterator<Item = (Index, Complex64)>) -> Self {
        CoefficientTable {
            f: BTreeMap::new(),
            g: g.into_iter().collect(),
        }
    }

    pub fn insert_f(&mut self, idx: Index, f: Complex64, psi10: Complex64) {
        self.f.insert(idx, f);
        self.g.insert(idx, psi10 * f);
    }

    /// `f_jk`, zero when absent.
    pub fn f(&self, j: usize, k: usize) -> Complex64 {
        self.f.get(&(j, k)).copied().unwrap_or_default()
    }

    /// `g_jk`, zero when absent.
    pub fn g(&self, j: usize, k: usize) -> Complex64 {
        self.g.get(&(j, k)).copied().unwrap_or_default()
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.g.contains_key(&(j, k))
    }

    pub fn f_entries(&self) -> impl Iterator<Item = (Index, Complex64)> + '_ {
        self.f.iter().map(|(&i, &v)| (i, v))
    }

    pub fn g_entries(&self) -> impl Iterator<Item = (Index, Complex64)> + '_ {
        self.g.iter().map(|(&i, &v)| (i, v))
    }

    fn require_g(&self, j: usize, k: usize) -> Result<Complex64> {
        self.g
            .get(&(j, k))
            .copied()
            .ok_or_else(|| Error::usage(format!("g_{j}{k} not computed yet")))
    }
}

/// A solved `w_jk` with its values at `s = 0` and `s = -r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WEntry {
    pub function: QuasiPolynomial,
    pub at0: Complex64,
    pub at_mr: Complex64,
}

impl WEntry {
    fn new(function: QuasiPolynomial, r: f64) -> Self {
        WEntry {
            at0: function.eval(0.0),
            at_mr: function.eval(-r),
            function,
        }
    }

    fn conj(&self) -> Self {
        WEntry {
            function: self.function.conj(),
            at0: self.at0.conj(),
            at_mr: self.at_mr.conj(),
        }
    }

    fn at(&self, at_zero: bool) -> Complex64 {
        if at_zero {
            self.at0
        } else {
            self.at_mr
        }
    }
}

/// Diagnostics of the bordered solve for the resonant `w21`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorderedDiagnostics {
    /// 2-norm condition number of the bordered matrix.
    pub condition: f64,
    /// Border unknown; zero when the two endpoint relations are consistent.
    pub solvability: Complex64,
    /// Residual of `w(-r) - e^(-i omega r) w(0) = P(-r)`.
    pub solution_map_residual: f64,
    /// Residual of the boundary condition.
    pub boundary_residual: f64,
}

/// Center-manifold coefficient functions `w_jk`, `2 <= j + k <= 4`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WTable {
    entries: BTreeMap<Index, WEntry>,
    pub w21: Option<BorderedDiagnostics>,
}

impl WTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, j: usize, k: usize) -> Option<&WEntry> {
        self.entries.get(&(j, k))
    }

    pub fn insert(&mut self, idx: Index, entry: WEntry) {
        self.entries.insert(idx, entry);
    }

    pub fn entries(&self) -> impl Iterator<Item = (Index, &WEntry)> {
        self.entries.iter().map(|(&i, e)| (i, e))
    }

    fn require(&self, j: usize, k: usize) -> Result<&WEntry> {
        self.get(j, k)
            .ok_or_else(|| Error::usage(format!("w_{j}{k} not solved yet")))
    }

    /// Residuals of every stored `w_jk` against its generated equation.
    pub fn residuals(&self, table: &CoefficientTable, pd: &ProjectionData) -> Result<Vec<WResidual>> {
        self.entries
            .iter()
            .map(|(&(j, k), entry)| {
                let eq = wjk_equation(j, k, self, table, pd)?;
                Ok(residual(j, k, entry, &eq, pd))
            })
            .collect()
    }
}

/// Right-hand side and boundary-condition value of one `w_jk` equation:
/// `w' = (j-k) i omega w + rhs` and `((j-k) i omega + p) w(0) - k B1 w(-r) = cond_rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct WEquation {
    pub rhs: QuasiPolynomial,
    pub cond_rhs: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WResidual {
    pub j: usize,
    pub k: usize,
    /// `max |w' - (j-k) i omega w - rhs|` over 11 points of `[-r, 0]`.
    pub ode: f64,
    /// `max |(j-k) i omega w + rhs|` over the same points.
    pub ode_scale: f64,
    pub boundary: f64,
}

impl WResidual {
    pub fn within(&self, tol: f64) -> bool {
        self.ode <= tol * (1.0 + self.ode_scale) && self.boundary <= tol
    }
}

fn residual(j: usize, k: usize, entry: &WEntry, eq: &WEquation, pd: &ProjectionData) -> WResidual {
    let m = j as i32 - k as i32;
    let mu = I * (m as f64 * pd.omega);
    let d = entry.function.derivative();
    let mut ode = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..11 {
        let s = -pd.r + pd.r * i as f64 / 10.0;
        let full = mu * entry.function.eval(s) + eq.rhs.eval(s);
        ode = ode.max((d.eval(s) - full).norm());
        scale = scale.max(full.norm());
    }
    let lhs = (mu + pd.p()) * entry.at0 - pd.kb1() * entry.at_mr;
    WResidual {
        j,
        k,
        ode,
        ode_scale: scale,
        boundary: (lhs - eq.cond_rhs).norm(),
    }
}

/// `A_s(u, conj u)` at `s = 0` or `s = -r`, using the `w` of order below `order`.
fn segment_series(w: &WTable, pd: &ProjectionData, at_zero: bool, order: usize) -> Result<Series> {
    let s = if at_zero { 0.0 } else { -pd.r };
    let mut a = Series::zero();
    a.add(1, 0, pd.exp(1, s));
    a.add(0, 1, pd.exp(-1, s));
    for deg in 2..order {
        for j in 0..=deg {
            let k = deg - j;
            let v = w.require(j, k)?.at(at_zero);
            a.add(j, k, v / (factorial(j) * factorial(k)));
        }
    }
    Ok(a)
}

/// `f_jk` with `j + k = order`, by expanding
/// `-sum B_m/m! A_0^m + k sum B_m/m! A_(-r)^m` in `(u, conj u)`.
pub fn expand_fjk(order: usize, w: &WTable, pd: &ProjectionData) -> Result<BTreeMap<Index, Complex64>> {
    if !(2..=MAX_DEGREE).contains(&order) {
        return Err(Error::usage(format!("order {order} outside 2..=5")));
    }
    let mut total = Series::zero();
    for (at_zero, weight) in [(true, -1.0), (false, pd.k)] {
        let a = segment_series(w, pd, at_zero, order)?;
        let mut power = a;
        for m in 2..=order {
            power = power.mul(&a, order);
            let c = weight * pd.b.b(m) / factorial(m);
            total.add_scaled(&power, Complex64::new(c, 0.0));
        }
    }
    Ok((0..=order)
        .map(|j| {
            let k = order - j;
            ((j, k), total.get(j, k) * factorial(j) * factorial(k))
        })
        .collect())
}

/// Generated equation for `w_jk`.
///
/// The `dw/dt` term contributes `Q_jk(s)`, the coefficient of `u^j conj(u)^k` in
/// `sum W_ab(s) (a u^(a-1) conj(u)^b G + b u^a conj(u)^(b-1) conj(G))`, where
/// `W_ab = w_ab/(a! b!)` and `G` is the nonlinear part of the reduced flow.
pub fn wjk_equation(
    j: usize,
    k: usize,
    w: &WTable,
    table: &CoefficientTable,
    pd: &ProjectionData,
) -> Result<WEquation> {
    let order = j + k;
    let fm = factorial(j) * factorial(k);
    let mut q = QuasiPolynomial::zero(pd.omega);
    for deg in 2..order {
        for a in 0..=deg {
            let b = deg - a;
            let wab = &w.require(a, b)?.function;
            let scale = 1.0 / (factorial(a) * factorial(b));
            // a u^(a-1) conj(u)^b * g_cd u^c conj(u)^d / (c! d!)
            if a > 0 && j + 1 >= a && k >= b {
                let (c, d) = (j + 1 - a, k - b);
                if c + d >= 2 {
                    let g = table.require_g(c, d)? / (factorial(c) * factorial(d));
                    q.add_scaled(wab, g * (a as f64 * scale))?;
                }
            }
            // b u^a conj(u)^(b-1) * conj(g_dc) u^c conj(u)^d / (c! d!)
            if b > 0 && j >= a && k + 1 >= b {
                let (c, d) = (j - a, k + 1 - b);
                if c + d >= 2 {
                    let g = table.require_g(d, c)?.conj() / (factorial(c) * factorial(d));
                    q.add_scaled(wab, g * (b as f64 * scale))?;
                }
            }
        }
    }
    let g_jk = table.require_g(j, k)?;
    let gbar_kj = table.require_g(k, j)?.conj();
    let mut rhs = q.scale(Complex64::new(fm, 0.0));
    rhs.add_scaled(&QuasiPolynomial::monomial(pd.omega, g_jk, 0, 1), Complex64::new(1.0, 0.0))?;
    rhs.add_scaled(&QuasiPolynomial::monomial(pd.omega, gbar_kj, 0, -1), Complex64::new(1.0, 0.0))?;
    let cond_rhs = table.f(j, k) - g_jk - gbar_kj - fm * q.eval(0.0);
    Ok(WEquation { rhs, cond_rhs })
}

/// `e^(mu s) int_0^s e^(-mu t) rhs(t) dt` with `mu = m i omega`.
fn particular(rhs: &QuasiPolynomial, m: i32) -> QuasiPolynomial {
    rhs.shift_rate(-m).integrate().shift_rate(m)
}

/// Solves a nonresonant `w_jk` equation (`|j - k| != 1`).
pub fn solve_wjk(
    j: usize,
    k: usize,
    rhs: &QuasiPolynomial,
    cond_rhs: Complex64,
    pd: &ProjectionData,
) -> Result<WEntry> {
    let m = j as i32 - k as i32;
    if m.abs() == 1 {
        return Err(Error::usage(format!(
            "w_{j}{k} is resonant; it needs the bordered solve"
        )));
    }
    let mu = I * (m as f64 * pd.omega);
    let den = mu + pd.p() - pd.kb1() * (-mu * pd.r).exp();
    if den.norm() < 1e-10 {
        return Err(DomainError::NearResonant { j, k, value: den.norm() }.into());
    }
    let p = particular(rhs, m);
    let c = (cond_rhs + pd.kb1() * p.eval(-pd.r)) / den;
    let mut function = p;
    function.add_scaled(&QuasiPolynomial::exp(pd.omega, m), c)?;
    Ok(WEntry::new(function, pd.r))
}

/// Solves the resonant `w21` equation.
///
/// With `a = w(0)`, `b = w(-r)` the solution map and the boundary condition give
/// a singular 2x2 system. It is bordered with its left null vector as an extra
/// column and closed with the row `<Psi, w21> = 0`, `Psi(z) = psi10 e^(-i omega z)`.
/// The extra unknown measures the inconsistency of the two relations.
pub fn solve_w21(
    rhs: &QuasiPolynomial,
    cond_rhs: Complex64,
    pd: &ProjectionData,
) -> Result<(WEntry, BorderedDiagnostics)> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let p = particular(rhs, 1);
    let p_mr = p.eval(-pd.r);
    let e = pd.exp(-1, pd.r);
    let mu = I * pd.omega;
    let kb1 = Complex64::new(pd.kb1(), 0.0);
    let psi = adjoint_eigenfunction(pd);
    let phi = QuasiPolynomial::exp(pd.omega, 1);
    let norm = bilinear_form(&psi, &phi, pd)?;
    let proj = bilinear_form(&psi, &p, pd)?;
    // left null vector of [[-e, 1], [mu + p, -kB1]] is (kB1, 1)
    let border = Vector3::new(kb1.conj(), one, zero);
    #[rustfmt::skip]
    let m = Matrix3::new(
        -e,        one,  border[0],
        mu + pd.p(), -kb1, border[1],
        norm,      zero, zero,
    );
    let svd = m.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= 1e12) {
        return Err(Error::numerical(format!(
            "bordered w21 system is ill-conditioned (cond = {condition:.3e})"
        )));
    }
    let rhs_vec = Vector3::new(p_mr, cond_rhs, -proj);
    let sol = m
        .lu()
        .solve(&rhs_vec)
        .ok_or_else(|| Error::numerical("bordered w21 system is singular"))?;
    let (a, b) = (sol[0], sol[1]);
    let mut function = p;
    function.add_scaled(&phi, a)?;
    let entry = WEntry::new(function, pd.r);
    let diag = BorderedDiagnostics {
        condition,
        solvability: sol[2],
        solution_map_residual: (entry.at_mr - e * entry.at0 - p_mr).norm(),
        boundary_residual: ((mu + pd.p()) * entry.at0 - kb1 * entry.at_mr - cond_rhs).norm(),
    };
    debug_assert!((b - entry.at_mr).norm() <= 1e-6 * (1.0 + b.norm()));
    Ok((entry, diag))
}

/// `Psi(z) = psi10 e^(-i omega z)` on `[0, r]`.
pub fn adjoint_eigenfunction(pd: &ProjectionData) -> QuasiPolynomial {
    QuasiPolynomial::monomial(pd.omega, pd.psi10, 0, -1)
}

/// `<psi, phi> = psi(0) phi(0) + k B1 int_(-r)^0 psi(z + r) phi(z) dz`.
pub fn bilinear_form(psi: &QuasiPolynomial, phi: &QuasiPolynomial, pd: &ProjectionData) -> Result<Complex64> {
    let integrand = psi.translate(pd.r).mul(phi)?;
    let integral = -integrand.integrate().eval(-pd.r);
    Ok(psi.eval(0.0) * phi.eval(0.0) + pd.kb1() * integral)
}

/// `w21(0)` from the perturbed problem with multiplier `i omega + eps` in both
/// the equation and the boundary condition, extrapolated to `eps = 0`
/// (Neville on the given `eps` values). Cross-check for [`solve_w21`].
pub fn w21_epsilon_limit(
    rhs: &QuasiPolynomial,
    cond_rhs: Complex64,
    pd: &ProjectionData,
    eps: &[f64],
) -> Result<Complex64> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::usage("eps values must be positive"));
    }
    let values: Vec<Complex64> = eps
        .iter()
        .map(|&e| {
            let mu = Complex64::new(e, pd.omega);
            // P(-r) = e^(-mu r) int_0^(-r) e^(-mu t) rhs(t) dt
            let p_mr = (-mu * pd.r).exp() * integral_weighted(rhs, -mu, -pd.r);
            let den = mu + pd.p() - pd.kb1() * (-mu * pd.r).exp();
            (cond_rhs + pd.kb1() * p_mr) / den
        })
        .collect();
    Ok(neville_at_zero(eps, &values))
}

/// `int_0^s e^(nu t) q(t) dt` for a general complex `nu`.
fn integral_weighted(q: &QuasiPolynomial, nu: Complex64, s: f64) -> Complex64 {
    q.terms()
        .map(|((p, m), c)| c * power_exp_integral(p, nu + I * (m as f64 * q.omega()), s))
        .sum()
}

/// `int_0^s t^p e^(rate t) dt`. Power series when `|rate s|` is small, where
/// integration by parts would cancel catastrophically.
fn power_exp_integral(p: u32, rate: Complex64, s: f64) -> Complex64 {
    let z = rate * s;
    if z.norm() < 1.0 {
        // s^(p+1) sum_n z^n / (n! (p + n + 1))
        let mut term = Complex64::new(1.0, 0.0);
        let mut total = Complex64::new(0.0, 0.0);
        for n in 0..60 {
            let add = term / (p as f64 + n as f64 + 1.0);
            total += add;
            if add.norm() < 1e-18 * total.norm() {
                break;
            }
            term *= z / (n as f64 + 1.0);
        }
        return total * s.powi(p as i32 + 1);
    }
    let es = z.exp();
    let mut coeff = 1.0 / rate;
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..=p {
        total += coeff * s.powi((p - j) as i32) * es;
        if j == p {
            total -= coeff;
        } else {
            coeff *= -((p - j) as f64) / rate;
        }
    }
    total
}

fn neville_at_zero(x: &[f64], y: &[Complex64]) -> Complex64 {
    let mut p = y.to_vec();
    let n = x.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (x[i], x[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

fn insert_order(table: &mut CoefficientTable, order: usize, w: &WTable, pd: &ProjectionData) -> Result<()> {
    for (idx, f) in expand_fjk(order, w, pd)? {
        table.insert_f(idx, f, pd.psi10);
    }
    Ok(())
}

/// Staged solve up to the coefficients of order `max_order` (3 suffices for `l1`,
/// 5 for `l2`).
pub fn build_to_order(pd: &ProjectionData, max_order: usize) -> Result<(WTable, CoefficientTable)> {
    if !(2..=MAX_DEGREE).contains(&max_order) {
        return Err(Error::usage(format!("order {max_order} outside 2..=5")));
    }
    let mut w = WTable::new();
    let mut table = CoefficientTable::new();
    insert_order(&mut table, 2, &w, pd)?;
    for order in 3..=max_order {
        for &(_, (j, k)) in SOLVED.iter().filter(|(o, _)| *o == order - 1) {
            let eq = wjk_equation(j, k, &w, &table, pd)?;
            let entry = if (j, k) == (2, 1) {
                let (entry, diag) = solve_w21(&eq.rhs, eq.cond_rhs, pd)?;
                w.w21 = Some(diag);
                entry
            } else {
                solve_wjk(j, k, &eq.rhs, eq.cond_rhs, pd)?
            };
            if j != k {
                w.insert((k, j), entry.conj());
            }
            w.insert((j, k), entry);
        }
        if order - 1 == 4 {
            let eq = wjk_equation(2, 2, &w, &table, pd)?;
            w.insert((2, 2), solve_wjk(2, 2, &eq.rhs, eq.cond_rhs, pd)?);
        }
        insert_order(&mut table, order, &w, pd)?;
    }
    Ok((w, table))
}

/// All `w_jk` with `j + k <= 4` and all coefficients through order 5.
pub fn build_wtable(pd: &ProjectionData) -> Result<(WTable, CoefficientTable)> {
    build_to_order(pd, MAX_DEGREE)
}

fn digits(idx: Index) -> String {
    format!("{}{}", idx.0, idx.1)
}

fn complex_json(c: Complex64) -> Value {
    json!({ "re": c.re, "im": c.im })
}

impl Serialize for CoefficientTable {
    /// `{"f": {"jk": {re, im}, ..}, "g": {..}}`.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map = |m: &BTreeMap<Index, Complex64>| -> Value {
            Value::Object(m.iter().map(|(&i, &v)| (digits(i), complex_json(v))).collect())
        };
        json!({ "f": map(&self.f), "g": map(&self.g) }).serialize(serializer)
    }
}

/// Debug dump with keys `f_jk`, `g_jk`, `w_jk_0`, `w_jk_mr`.
pub fn debug_json(table: &CoefficientTable, w: &WTable) -> Value {
    let map = |it: &mut dyn Iterator<Item = (Index, Complex64)>| -> Value {
        Value::Object(it.map(|(i, v)| (digits(i), complex_json(v))).collect())
    };
    json!({
        "f_jk": map(&mut table.f_entries()),
        "g_jk": map(&mut table.g_entries()),
        "w_jk_0": map(&mut w.entries().map(|(i, e)| (i, e.at0))),
        "w_jk_mr": map(&mut w.entries().map(|(i, e)| (i, e.at_mr))),
    })
}
