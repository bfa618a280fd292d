//! Cut-offs β^L, β^L_δ and the entropy regularizations F, F^L, F^L_δ.
//!
//! ## Formulas
//!
//! ```text
//! β^L(s)    = min(s, L)              β^L_δ(s) = max(β^L(s), δ)
//! F(s)      = s(log s − 1) + 1
//! F^L(s)    = F(s)                                        s ≤ L
//!           = (s² − L²)/(2L) + s(log L − 1) + 1           s ≥ L
//! F^L_δ(s)  = (s² − δ²)/(2δ) + s(log δ − 1) + 1           s ≤ δ
//!           = F^L(s)                                      s ≥ δ
//! ```
//!
//! At a knot (s = δ or s = L) the lower branch is used.

use crate::error::{Error, Result};
use crate::math::ln;

/// Cut-off parameters; `delta == 0` switches the δ-path off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffParams {
    l: f64,
    delta: f64,
}

impl CutoffParams {
    pub fn new(l: f64, delta: f64) -> Result<Self> {
        if !(l > 1.0) {
            return Err(Error::invalid("L", "requires L > 1"));
        }
        if !(delta >= 0.0 && delta < 1.0) {
            return Err(Error::invalid("delta", "requires δ ∈ [0, 1)"));
        }
        Ok(CutoffParams { l, delta })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_path(&self) -> bool {
        self.delta > 0.0
    }

    /// β^L or β^L_δ depending on the δ-path.
    pub fn beta(&self, s: f64) -> f64 {
        if self.delta_path() {
            cutoff_beta_delta(s, self.l, self.delta)
        } else {
            cutoff_beta(s, self.l)
        }
    }

    /// The entropy the scheme is tested with: F^L, or F^L_δ on the δ-path.
    /// Without the δ-path, ψ̂ ≤ 0 is clamped to 0 for the value and to the
    /// smallest positive double for the derivatives.
    pub fn entropy(&self, s: f64) -> (f64, f64, f64) {
        if self.delta_path() {
            fl_delta(s, self.l, self.delta)
        } else {
            let (v, _, _) = fl(s.max(0.0), self.l);
            let (_, d1, d2) = fl(s.max(f64::MIN_POSITIVE), self.l);
            (v, d1, d2)
        }
    }

    /// Mean m(a, b) with m·(G'(b) − G'(a)) = b − a for the entropy G of
    /// [`CutoffParams::entropy`]. It lies between β(a) and β(b); with a and
    /// b below L the result does not depend on L.
    pub fn entropy_mean(&self, a: f64, b: f64) -> f64 {
        let (lo_knot, lo_val) = if self.delta_path() {
            (self.delta, self.delta)
        } else {
            if !(a > 0.0) || !(b > 0.0) {
                return 0.0;
            }
            (0.0, 0.0)
        };
        let region = |s: f64| -> u8 {
            if self.delta_path() && s <= lo_knot {
                0
            } else if s <= self.l {
                1
            } else {
                2
            }
        };
        if a == b {
            return self.beta(a);
        }
        let (ra, rb) = (region(a), region(b));
        match (ra, rb) {
            (0, 0) => lo_val,
            (2, 2) => self.l,
            (1, 1) => log_mean(a, b),
            _ => {
                let scale = a.abs().max(b.abs());
                if (b - a).abs() <= 1e-12 * scale {
                    return self.beta(0.5 * (a + b));
                }
                let (_, da, _) = self.entropy(a);
                let (_, db, _) = self.entropy(b);
                (b - a) / (db - da)
            }
        }
    }
}

/// β^L(s) = min(s, L).
#[inline]
pub fn cutoff_beta(s: f64, l: f64) -> f64 {
    if s <= l {
        s
    } else {
        l
    }
}

/// β^L_δ(s) = max(β^L(s), δ).
#[inline]
pub fn cutoff_beta_delta(s: f64, l: f64, delta: f64) -> f64 {
    let b = cutoff_beta(s, l);
    if b >= delta {
        b
    } else {
        delta
    }
}

/// F(s) = s(log s − 1) + 1 with F(0) = 1.
pub fn entropy_f(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain {
            what: "entropy_F",
            value: s,
        });
    }
    Ok(f_plain(s))
}

#[inline]
fn f_plain(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        s * (ln(s) - 1.0) + 1.0
    }
}

/// (F^L, F^L', F^L'') at s ≥ 0. At s = 0 the derivatives are −∞ and +∞.
pub fn entropy_fl(s: f64, l: f64) -> Result<(f64, f64, f64)> {
    if !(s >= 0.0) {
        return Err(Error::Domain {
            what: "entropy_FL",
            value: s,
        });
    }
    Ok(fl(s, l))
}

#[inline]
fn fl(s: f64, l: f64) -> (f64, f64, f64) {
    if s <= l {
        if s == 0.0 {
            (1.0, f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (f_plain(s), ln(s), 1.0 / s)
        }
    } else {
        let ll = ln(l);
        (
            (s * s - l * l) / (2.0 * l) + s * (ll - 1.0) + 1.0,
            s / l + ll - 1.0,
            1.0 / l,
        )
    }
}

/// (F^L_δ, F^L_δ', F^L_δ'') at any real s.
pub fn entropy_fl_delta(s: f64, l: f64, delta: f64) -> Result<(f64, f64, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", "requires δ ∈ (0, 1)"));
    }
    if s.is_nan() {
        return Err(Error::Domain {
            what: "entropy_FL_delta",
            value: s,
        });
    }
    Ok(fl_delta(s, l, delta))
}

#[inline]
fn fl_delta(s: f64, l: f64, delta: f64) -> (f64, f64, f64) {
    if s <= delta {
        let ld = ln(delta);
        (
            (s * s - delta * delta) / (2.0 * delta) + s * (ld - 1.0) + 1.0,
            s / delta + ld - 1.0,
            1.0 / delta,
        )
    } else {
        fl(s, l)
    }
}

/// Logarithmic mean (b − a)/(log b − log a) of positive a ≠ b, stable as
/// a → b.
pub fn log_mean(a: f64, b: f64) -> f64 {
    let f = (a - b) / (a + b);
    let u = f * f;
    if u < 1e-3 {
        // log(a/b) = 2f(1 + u/3 + u²/5 + …)
        let series = 1.0 + u * (1.0 / 3.0 + u * (1.0 / 5.0 + u * (1.0 / 7.0 + u / 9.0)));
        0.5 * (a + b) / series
    } else {
        (a - b) / (ln(a) - ln(b))
    }
}
