//! Quasipolynomials `sum c s^m exp(i mult omega s)`.
//!
//! Exponential rates are stored as integer multiples of a shared `omega`, so
//! deciding resonance during integration is an integer test.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const PRUNE: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPolynomial {
    omega: f64,
    terms: BTreeMap<(u32, i32), Complex64>,
}

/// One term in the debug JSON form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub re: f64,
    pub im: f64,
    pub power: u32,
    pub mult: i32,
}

impl QuasiPolynomial {
    pub fn zero(omega: f64) -> Self {
        QuasiPolynomial {
            omega,
            terms: BTreeMap::new(),
        }
    }

    /// `coeff * s^power * exp(i mult omega s)`.
    pub fn monomial(omega: f64, coeff: Complex64, power: u32, mult: i32) -> Self {
        let mut q = Self::zero(omega);
        q.add_term(power, mult, coeff);
        q
    }

    pub fn constant(omega: f64, c: Complex64) -> Self {
        Self::monomial(omega, c, 0, 0)
    }

    /// `exp(i mult omega s)`.
    pub fn exp(omega: f64, mult: i32) -> Self {
        Self::monomial(omega, Complex64::new(1.0, 0.0), 0, mult)
    }

    pub fn from_terms(omega: f64, terms: impl IntoIterator<Item = ((u32, i32), Complex64)>) -> Self {
        let mut q = Self::zero(omega);
        for ((p, m), c) in terms {
            q.add_term(p, m, c);
        }
        q
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, i32), Complex64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn coeff(&self, power: u32, mult: i32) -> Complex64 {
        self.terms.get(&(power, mult)).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_power(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    fn add_term(&mut self, power: u32, mult: i32, c: Complex64) {
        let e = self.terms.entry((power, mult)).or_default();
        *e += c;
        if e.norm() <= PRUNE {
            self.terms.remove(&(power, mult));
        }
    }

    /// `self += c * other`. Frequencies must match.
    pub fn add_scaled(&mut self, other: &QuasiPolynomial, c: Complex64) -> Result<()> {
        self.check_omega(other)?;
        for (&(p, m), &v) in &other.terms {
            self.add_term(p, m, c * v);
        }
        Ok(())
    }

    fn check_omega(&self, other: &QuasiPolynomial) -> Result<()> {
        if self.omega != other.omega {
            return Err(Error::usage(format!(
                "quasipolynomial frequency mismatch: {} vs {}",
                self.omega, other.omega
            )));
        }
        Ok(())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.omega, self.terms().map(|(k, v)| (k, c * v)))
    }

    /// Multiply by `exp(i dmult omega s)`.
    pub fn shift_rate(&self, dmult: i32) -> Self {
        QuasiPolynomial {
            omega: self.omega,
            terms: self.terms().map(|((p, m), c)| ((p, m + dmult), c)).collect(),
        }
    }

    /// The function `s -> conj(self(s))` on real `s`.
    pub fn conj(&self) -> Self {
        QuasiPolynomial {
            omega: self.omega,
            terms: self.terms().map(|((p, m), c)| ((p, -m), c.conj())).collect(),
        }
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(p, m), &c)| {
                c * s.powi(p as i32) * Complex64::from_polar(1.0, m as f64 * self.omega * s)
            })
            .sum()
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zero(self.omega);
        for ((p, m), c) in self.terms() {
            if m != 0 {
                out.add_term(p, m, c * self.rate(m));
            }
            if p > 0 {
                out.add_term(p - 1, m, c * p as f64);
            }
        }
        out
    }

    fn rate(&self, mult: i32) -> Complex64 {
        Complex64::new(0.0, mult as f64 * self.omega)
    }

    /// `P(s) = int_0^s self(theta) dtheta`.
    ///
    /// For `mu = i mult omega != 0`,
    /// `int_0^s t^p e^(mu t) dt = sum_j (-1)^j p!/(p-j)! s^(p-j) e^(mu s) / mu^(j+1) - (-1)^p p! / mu^(p+1)`.
    pub fn integrate(&self) -> Self {
        let mut out = Self::zero(self.omega);
        for ((p, m), c) in self.terms() {
            if m == 0 {
                out.add_term(p + 1, 0, c / (p as f64 + 1.0));
                continue;
            }
            let mu = self.rate(m);
            let mut coeff = c / mu;
            for j in 0..=p {
                out.add_term(p - j, m, coeff);
                if j == p {
                    out.add_term(0, 0, -coeff);
                } else {
                    coeff *= -((p - j) as f64) / mu;
                }
            }
        }
        out
    }

    /// The function `s -> self(s + shift)`.
    pub fn translate(&self, shift: f64) -> Self {
        let mut out = Self::zero(self.omega);
        for ((p, m), c) in self.terms() {
            let c = c * Complex64::from_polar(1.0, m as f64 * self.omega * shift);
            let mut binom = 1.0;
            for i in 0..=p {
                // C(p, i) s^i shift^(p - i)
                out.add_term(i, m, c * binom * shift.powi((p - i) as i32));
                binom *= (p - i) as f64 / (i + 1) as f64;
            }
        }
        out
    }

    /// Pointwise product. Only the bilinear form needs it.
    pub fn mul(&self, other: &QuasiPolynomial) -> Result<Self> {
        self.check_omega(other)?;
        let mut out = Self::zero(self.omega);
        for ((p1, m1), c1) in self.terms() {
            for ((p2, m2), c2) in other.terms() {
                out.add_term(p1 + p2, m1 + m2, c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms()
            .map(|((power, mult), c)| TermRecord {
                re: c.re,
                im: c.im,
                power,
                mult,
            })
            .collect()
    }

    pub fn from_records(omega: f64, records: &[TermRecord]) -> Self {
        Self::from_terms(
            omega,
            records
                .iter()
                .map(|t| ((t.power, t.mult), Complex64::new(t.re, t.im))),
        )
    }
}

/// `ca * a + cb * b`.
pub fn qp_combine(
    a: &QuasiPolynomial,
    b: &QuasiPolynomial,
    ca: Complex64,
    cb: Complex64,
) -> Result<QuasiPolynomial> {
    let mut out = a.scale(ca);
    out.add_scaled(b, cb)?;
    Ok(out)
}

/// Serializes as the debug term list; the frequency is not part of it.
impl Serialize for QuasiPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_records().serialize(serializer)
    }
}

/// Deserialized polynomials carry `omega = 0` until [`QuasiPolynomial::with_omega`] is applied.
impl<'de> Deserialize<'de> for QuasiPolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<TermRecord>::deserialize(deserializer)?;
        Ok(Self::from_records(0.0, &records))
    }
}

impl QuasiPolynomial {
    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W: f64 = 0.7;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
        (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
    }

    fn samples() -> Vec<f64> {
        (0..11).map(|i| -3.0 + 0.6 * i as f64).collect()
    }

    fn terms_close(a: &QuasiPolynomial, b: &QuasiPolynomial, tol: f64) -> bool {
        let scale = a.terms().chain(b.terms()).map(|(_, v)| v.norm()).fold(0.0, f64::max);
        let keys: std::collections::BTreeSet<_> =
            a.terms().map(|t| t.0).chain(b.terms().map(|t| t.0)).collect();
        keys.into_iter()
            .all(|(p, m)| (a.coeff(p, m) - b.coeff(p, m)).norm() <= tol * scale.max(1.0))
    }

    #[test]
    fn combine_cancels() {
        let e = QuasiPolynomial::exp(W, 1);
        let z = qp_combine(&e, &e, c(1.0, 0.0), c(-1.0, 0.0)).unwrap();
        assert!(z.is_empty());
    }

    #[test]
    fn combine_linear() {
        let one = QuasiPolynomial::constant(W, c(1.0, 0.0));
        let s = QuasiPolynomial::monomial(W, c(1.0, 0.0), 1, 0);
        let q = qp_combine(&one, &s, c(2.0, 0.0), c(3.0, 0.0)).unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q.coeff(0, 0), c(2.0, 0.0));
        assert_eq!(q.coeff(1, 0), c(3.0, 0.0));
    }

    #[test]
    fn combine_frequency_mismatch() {
        let a = QuasiPolynomial::exp(W, 1);
        let b = QuasiPolynomial::exp(0.8, 1);
        assert!(matches!(
            qp_combine(&a, &b, c(1.0, 0.0), c(1.0, 0.0)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn shift_examples() {
        let e = QuasiPolynomial::exp(W, 1).shift_rate(-1);
        assert_eq!(e, QuasiPolynomial::constant(W, c(1.0, 0.0)));
        let se = QuasiPolynomial::monomial(W, c(1.0, 0.0), 1, 1).shift_rate(2);
        assert_eq!(se, QuasiPolynomial::monomial(W, c(1.0, 0.0), 1, 3));
    }

    #[test]
    fn integrate_examples() {
        let one = QuasiPolynomial::constant(W, c(1.0, 0.0));
        assert_eq!(one.integrate(), QuasiPolynomial::monomial(W, c(1.0, 0.0), 1, 0));

        // int_0^s e^(i w t) dt = -(i/w)(e^(i w s) - 1)
        let p = QuasiPolynomial::exp(W, 1).integrate();
        for s in samples() {
            let expected = c(0.0, -1.0 / W) * (Complex64::from_polar(1.0, W * s) - 1.0);
            assert!(close(p.eval(s), expected, 1e-14));
        }
    }

    #[test]
    fn integrate_matches_quadrature() {
        let a = QuasiPolynomial::monomial(W, c(1.0, 0.0), 1, 2);
        let p = a.integrate();
        for &s in &[-1.3, 0.4, 2.0] {
            let re = quadrature::integrate(|t| a.eval(t).re, 0.0, s, 1e-14).integral;
            let im = quadrature::integrate(|t| a.eval(t).im, 0.0, s, 1e-14).integral;
            assert!((p.eval(s) - c(re, im)).norm() <= 1e-12, "s = {s}");
        }
    }

    #[test]
    fn eval_examples() {
        assert_eq!(QuasiPolynomial::exp(W, 1).eval(0.0), c(1.0, 0.0));
        let v = QuasiPolynomial::exp(0.104992, 1).eval(-12.435176);
        assert!((v - c(0.262107, -0.965042)).norm() < 5e-6);
    }

    #[test]
    fn json_round_trip() {
        let q = QuasiPolynomial::from_terms(W, [((0, 1), c(1.5, -2.0)), ((2, -3), c(0.25, 0.0))]);
        let text = serde_json::to_string(&q).unwrap();
        assert!(text.contains("\"power\":2") && text.contains("\"mult\":-3"));
        let back: QuasiPolynomial = serde_json::from_str(&text).unwrap();
        assert_eq!(back.with_omega(W), q);
    }

    #[test]
    fn pruned_terms_vanish() {
        let mut q = QuasiPolynomial::monomial(W, c(1e-301, 0.0), 0, 0);
        assert!(q.is_empty());
        q.add_scaled(&QuasiPolynomial::exp(W, 2), c(1.0, 0.0)).unwrap();
        assert_eq!(q.len(), 1);
    }

    fn arb_qp() -> impl Strategy<Value = QuasiPolynomial> {
        prop::collection::vec(((0u32..4, -4i32..5), (-2.0f64..2.0, -2.0f64..2.0)), 1..8).prop_map(
            |ts| QuasiPolynomial::from_terms(W, ts.into_iter().map(|(k, (re, im))| (k, c(re, im)))),
        )
    }

    fn arb_c() -> impl Strategy<Value = Complex64> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| c(a, b))
    }

    proptest! {
        #[test]
        fn combine_pointwise(a in arb_qp(), b in arb_qp(), ca in arb_c(), cb in arb_c()) {
            let q = qp_combine(&a, &b, ca, cb).unwrap();
            for s in samples() {
                let expected = ca * a.eval(s) + cb * b.eval(s);
                let scale = (ca * a.eval(s)).norm() + (cb * b.eval(s)).norm();
                prop_assert!((q.eval(s) - expected).norm() <= 1e-14 * scale.max(1e-300) * 10.0);
            }
        }

        #[test]
        fn shift_pointwise(a in arb_qp(), d in -3i32..4) {
            let q = a.shift_rate(d);
            for s in samples() {
                let expected = a.eval(s) * Complex64::from_polar(1.0, d as f64 * W * s);
                prop_assert!(close(q.eval(s), expected, 1e-13));
            }
        }

        #[test]
        fn conj_pointwise(a in arb_qp(), s in -5.0f64..5.0) {
            prop_assert!(close(a.conj().eval(s), a.eval(s).conj(), 1e-14));
        }

        #[test]
        fn fundamental_theorem(a in arb_qp()) {
            let p = a.integrate();
            prop_assert!(p.eval(0.0).norm() <= 1e-12);
            prop_assert!(terms_close(&p.derivative(), &a, 1e-12));
        }

        #[test]
        fn translate_pointwise(a in arb_qp(), shift in -4.0f64..4.0) {
            let t = a.translate(shift);
            for s in samples() {
                let (x, y) = (t.eval(s), a.eval(s + shift));
                prop_assert!((x - y).norm() <= 1e-11 * (1.0 + y.norm()));
            }
        }

        #[test]
        fn mul_pointwise(a in arb_qp(), b in arb_qp()) {
            let prod = a.mul(&b).unwrap();
            for s in samples() {
                let y = a.eval(s) * b.eval(s);
                prop_assert!((prod.eval(s) - y).norm() <= 1e-12 * (1.0 + y.norm()));
            }
        }

        #[test]
        fn integration_linear(a in arb_qp(), b in arb_qp(), ca in arb_c(), cb in arb_c()) {
            let lhs = qp_combine(&a, &b, ca, cb).unwrap().integrate();
            let rhs = qp_combine(&a.integrate(), &b.integrate(), ca, cb).unwrap();
            prop_assert!(terms_close(&lhs, &rhs, 1e-12));
        }
    }
}
