//! Double-double accumulation for the averaging formulas.
//!
//! Means and weighted means are evaluated with roughly 106 bits of precision
//! and rounded to `f64` once, so results are the correctly rounded value of
//! the exact formula over the `f64` inputs (barring exact-midpoint ties).

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub(crate) fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub(crate) fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub(crate) fn add_f64(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    pub(crate) fn mul_f64(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        let (hi, lo) = quick_two_sum(p, e + self.lo * x);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub(crate) fn div(self, d: Dd) -> Dd {
        let q1 = self.hi / d.hi;
        let r = self.add(d.mul_f64(q1).neg());
        let q2 = r.hi / d.hi;
        let r = r.add(d.mul_f64(q2).neg());
        let q3 = r.hi / d.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add_f64(q3)
    }

    pub(crate) fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let (p, e) = two_prod(q1, d);
        let (r, f) = two_sum(self.hi, -p);
        let q2 = (r + (f - e + self.lo)) / d;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Correctly rounded mean of `values`; `values` must be non-empty.
pub(crate) fn mean_dd(values: &[f64]) -> Dd {
    values
        .iter()
        .fold(Dd::ZERO, |acc, &v| acc.add_f64(v))
        .div_f64(values.len() as f64)
}

/// `sum(w_i * x_i) / sum(w_i)`, rounded once.
pub(crate) fn weighted_mean(terms: impl IntoIterator<Item = (f64, Dd)>) -> f64 {
    let mut num = Dd::ZERO;
    let mut den = Dd::ZERO;
    for (w, x) in terms {
        num = num.add(x.mul_f64(w));
        den = den.add_f64(w);
    }
    num.div(den).to_f64()
}
