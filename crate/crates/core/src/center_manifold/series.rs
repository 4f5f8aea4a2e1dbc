//! Truncated bivariate series in `(u, conj u)`.

use num_complex::Complex64;

pub(crate) const MAX_DEGREE: usize = 5;
const N: usize = MAX_DEGREE + 1;

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `c[i][j]` is the coefficient of `u^i conj(u)^j`, `i + j <= MAX_DEGREE`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Series {
    c: [[Complex64; N]; N],
}

impl Series {
    pub(crate) fn zero() -> Self {
        Series {
            c: [[Complex64::new(0.0, 0.0); N]; N],
        }
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> Complex64 {
        self.c[i][j]
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: Complex64) {
        self.c[i][j] += v;
    }

    pub(crate) fn add_scaled(&mut self, other: &Series, s: Complex64) {
        for i in 0..N {
            for j in 0..N - i {
                self.c[i][j] += s * other.c[i][j];
            }
        }
    }

    /// Product truncated at total degree `max_degree`.
    pub(crate) fn mul(&self, other: &Series, max_degree: usize) -> Series {
        let mut out = Series::zero();
        for i in 0..N {
            for j in 0..N - i {
                let a = self.c[i][j];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..N {
                    for l in 0..N - k {
                        if i + j + k + l > max_degree {
                            break;
                        }
                        out.c[i + k][j + l] += a * other.c[k][l];
                    }
                }
            }
        }
        out
    }
}
