//! Hand-written closed forms of `f_jk`, kept as an independent check on the
//! series expansion.
//!
//! Three sign fixes relative to the printed formulas: the undelayed `B3` group
//! of `f31` and `f22` and the undelayed `B4` group of `f32` carry a minus sign,
//! as the Taylor expansion requires. `f13` is `conj(f31)`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{Index, ProjectionData, WTable};
use crate::error::{Error, Result};

struct Ctx<'a> {
    w: &'a WTable,
    pd: &'a ProjectionData,
}

impl Ctx<'_> {
    fn w0(&self, j: usize, k: usize) -> Result<Complex64> {
        Ok(self.w.require(j, k)?.at0)
    }

    fn wr(&self, j: usize, k: usize) -> Result<Complex64> {
        Ok(self.w.require(j, k)?.at_mr)
    }

    /// `e^(i m omega r)`.
    fn e(&self, m: i32) -> Complex64 {
        Complex64::from_polar(1.0, m as f64 * self.pd.omega * self.pd.r)
    }

    fn b(&self, m: usize) -> f64 {
        self.pd.b.b(m)
    }
}

pub fn closed_form_fjk(order: usize, w: &WTable, pd: &ProjectionData) -> Result<BTreeMap<Index, Complex64>> {
    let c = Ctx { w, pd };
    let k = pd.k;
    let (b2, b3, b4, b5) = (c.b(2), c.b(3), c.b(4), c.b(5));
    let mut out = BTreeMap::new();
    match order {
        2 => {
            let f20 = -b2 * (1.0 - k * c.e(-2));
            out.insert((2, 0), f20);
            out.insert((1, 1), Complex64::new(b2 * (k - 1.0), 0.0));
            out.insert((0, 2), f20.conj());
        }
        3 => {
            let f30 = -3.0 * b2 * c.w0(2, 0)? - b3
                + 3.0 * k * b2 * c.e(-1) * c.wr(2, 0)?
                + k * b3 * c.e(-3);
            let f21 = -b2 * c.w0(2, 0)? - 2.0 * b2 * c.w0(1, 1)?
                + 2.0 * k * b2 * c.e(-1) * c.wr(1, 1)?
                + k * b2 * c.e(1) * c.wr(2, 0)?
                - b3 * (1.0 - k * c.e(-1));
            out.insert((3, 0), f30);
            out.insert((2, 1), f21);
            out.insert((1, 2), f21.conj());
            out.insert((0, 3), f30.conj());
        }
        4 => {
            let (w20, w11, w30, w21, w02, w12) =
                (c.w0(2, 0)?, c.w0(1, 1)?, c.w0(3, 0)?, c.w0(2, 1)?, c.w0(0, 2)?, c.w0(1, 2)?);
            let (v20, v11, v30, v21, v02, v12) =
                (c.wr(2, 0)?, c.wr(1, 1)?, c.wr(3, 0)?, c.wr(2, 1)?, c.wr(0, 2)?, c.wr(1, 2)?);
            let f40 = -b2 * (3.0 * w20 * w20 + 4.0 * w30) - 6.0 * b3 * w20 - b4
                + k * b2 * (3.0 * v20 * v20 + 4.0 * c.e(-1) * v30)
                + 6.0 * k * b3 * c.e(-2) * v20
                + k * b4 * c.e(-4);
            let f31 = -b2 * (3.0 * w11 * w20 + 3.0 * w21 + w30) - b3 * (3.0 * w11 + 3.0 * w20) - b4
                + k * b2 * (3.0 * v11 * v20 + 3.0 * c.e(-1) * v21 + c.e(1) * v30)
                + k * b3 * (3.0 * c.e(-2) * v11 + 3.0 * v20)
                + k * b4 * c.e(-2);
            let f22 = -b2 * (2.0 * w11 * w11 + 2.0 * w12 + w02 * w20 + 2.0 * w21)
                - b3 * (w02 + 4.0 * w11 + w20)
                - b4
                + k * b2 * (2.0 * v11 * v11 + 2.0 * c.e(-1) * v12 + v02 * v20 + 2.0 * c.e(1) * v21)
                + k * b3 * (v02 * c.e(-2) + 4.0 * v11 + c.e(2) * v20)
                + k * b4;
            out.insert((4, 0), f40);
            out.insert((3, 1), f31);
            out.insert((2, 2), f22);
            out.insert((1, 3), f31.conj());
            out.insert((0, 4), f40.conj());
        }
        5 => {
            let w0 = |j, k| c.w0(j, k);
            let wr = |j, k| c.wr(j, k);
            let (w20, w11, w02, w30, w21, w12, w22, w31) = (
                w0(2, 0)?, w0(1, 1)?, w0(0, 2)?, w0(3, 0)?, w0(2, 1)?, w0(1, 2)?, w0(2, 2)?, w0(3, 1)?,
            );
            let (v20, v11, v02, v30, v21, v12, v22, v31) = (
                wr(2, 0)?, wr(1, 1)?, wr(0, 2)?, wr(3, 0)?, wr(2, 1)?, wr(1, 2)?, wr(2, 2)?, wr(3, 1)?,
            );
            let f32 = -b2 * (w02 * w30 + 6.0 * w11 * w21 + 3.0 * w22 + 3.0 * w12 * w20 + 2.0 * w31)
                - b3 * (6.0 * w11 * w11 + 3.0 * w12 + 3.0 * w02 * w20 + w30 + 6.0 * w11 * w20 + 6.0 * w21)
                - b4 * (3.0 * w20 + 6.0 * w11 + w02)
                - b5
                + k * b2
                    * (6.0 * v11 * v21 + 3.0 * v12 * v20 + 3.0 * c.e(-1) * v22 + v02 * v30
                        + 2.0 * c.e(1) * v31)
                + k * b3
                    * (3.0 * v02 * c.e(-1) * v20
                        + 6.0 * c.e(-1) * v11 * v11
                        + 3.0 * c.e(-2) * v12
                        + c.e(2) * v30
                        + 6.0 * c.e(1) * v11 * v20
                        + 6.0 * v21)
                + k * b4 * (3.0 * c.e(1) * v20 + 6.0 * c.e(-1) * v11 + v02 * c.e(-3))
                + k * b5 * c.e(-1);
            out.insert((3, 2), f32);
        }
        _ => return Err(Error::usage(format!("no closed form for order {order}"))),
    }
    Ok(out)
}
