//! Double-double arithmetic: an unevaluated sum of two `f64`s giving roughly
//! 32 significant decimal digits.
//!
//! The finite-difference residual oracle divides tiny stencil differences by
//! `h^4`; at the pinned step size that wipes out plain `f64` precision, so the
//! oracle evaluates solutions in this extended format. Algorithms follow the
//! classic error-free transformations (Dekker / Knuth two-sum, FMA two-prod)
//! and the QD library's division and elementary-function recipes.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Double-double number: `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// pi to double-double precision.
    pub const PI: Dd = Dd {
        hi: 3.141592653589793,
        lo: 1.2246467991473532e-16,
    };
    /// pi/2 to double-double precision.
    pub const FRAC_PI_2: Dd = Dd {
        hi: 1.5707963267948966,
        lo: 6.123233995736766e-17,
    };
    /// ln(2) to double-double precision.
    pub const LN_2: Dd = Dd {
        hi: 0.6931471805599453,
        lo: 2.3190468138462996e-17,
    };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact quotient of two i64 values.
    pub fn from_ratio(num: i64, den: i64) -> Dd {
        Dd::from_f64(num as f64) / Dd::from_f64(den as f64)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    /// Integer power by repeated squaring.
    pub fn powi(self, n: i64) -> Dd {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut k = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        if self.hi < 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        // One Newton step on the f64 estimate doubles its precision.
        let a = self.hi.sqrt();
        let a_dd = Dd::from_f64(a);
        let err = (self - a_dd * a_dd) / Dd::from_f64(2.0 * a);
        a_dd + err
    }

    /// exp(x) via ln2 reduction, scaling, and Taylor series.
    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -709.0 {
            return Dd::ZERO;
        }
        // x = k*ln2 + r with |r| <= ln2/2, then r scaled down by 2^9.
        let k = (self.hi / Dd::LN_2.hi).round();
        let r = self - Dd::LN_2 * Dd::from_f64(k);
        const SCALE: i32 = 9;
        let rs = r * Dd::from_f64(1.0 / (1u64 << SCALE) as f64);
        // Taylor for exp(rs) - 1; |rs| <= 6.8e-4 so ~9 terms reach 1e-33.
        let mut term = rs;
        let mut sum = rs;
        for i in 2..=12u64 {
            term = term * rs / Dd::from_f64(i as f64);
            sum = sum + term;
        }
        // Undo scaling: exp(r) - 1 via repeated (1+y)^2 - 1 = y^2 + 2y.
        let mut em1 = sum;
        for _ in 0..SCALE {
            em1 = em1 * em1 + Dd::from_f64(2.0) * em1;
        }
        let e_r = em1 + Dd::ONE;
        // Multiply by 2^k exactly.
        let p = 2f64.powi(k as i32);
        Dd {
            hi: e_r.hi * p,
            lo: e_r.lo * p,
        }
    }

    pub fn sinh(self) -> Dd {
        if self.hi.abs() < 0.5 {
            // Avoid cancellation: series of sinh directly.
            let x2 = self * self;
            let mut term = self;
            let mut sum = self;
            let mut i = 1u64;
            loop {
                term = term * x2 / Dd::from_f64(((2 * i) * (2 * i + 1)) as f64);
                sum = sum + term;
                if term.hi.abs() < 1e-35 * sum.hi.abs().max(1e-300) {
                    break;
                }
                i += 1;
            }
            sum
        } else {
            let e = self.exp();
            (e - e.recip()) * Dd::from_f64(0.5)
        }
    }

    pub fn cosh(self) -> Dd {
        let e = self.exp();
        (e + e.recip()) * Dd::from_f64(0.5)
    }

    pub fn tanh(self) -> Dd {
        if self.hi.abs() > 40.0 {
            return if self.hi > 0.0 {
                Dd::ONE
            } else {
                -Dd::ONE
            };
        }
        if self.hi.abs() < 0.5 {
            let s = self.sinh();
            let c = (Dd::ONE + s * s).sqrt();
            s / c
        } else {
            let e2 = (self * Dd::from_f64(2.0)).exp();
            (e2 - Dd::ONE) / (e2 + Dd::ONE)
        }
    }

    pub fn coth(self) -> Dd {
        self.tanh().recip()
    }

    /// Simultaneous sin and cos with pi/2 argument reduction.
    pub fn sin_cos(self) -> (Dd, Dd) {
        // Reduce modulo pi/2; quadrant fixes signs. Arguments here stay modest
        // (grid domains are tens of units), so two-term pi reduction suffices.
        let q = (self.hi / Dd::FRAC_PI_2.hi).round();
        let r = self - Dd::FRAC_PI_2 * Dd::from_f64(q);
        let quadrant = ((q as i64) % 4 + 4) % 4;
        let (s, c) = sin_cos_taylor(r);
        match quadrant {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sin(self) -> Dd {
        self.sin_cos().0
    }

    pub fn cos(self) -> Dd {
        self.sin_cos().1
    }

    pub fn tan(self) -> Dd {
        let (s, c) = self.sin_cos();
        s / c
    }

    pub fn cot(self) -> Dd {
        let (s, c) = self.sin_cos();
        c / s
    }
}

/// Taylor series for sin and cos on |r| <= pi/4.
fn sin_cos_taylor(r: Dd) -> (Dd, Dd) {
    let r2 = r * r;
    // sin
    let mut term = r;
    let mut s = r;
    let mut i = 1u64;
    loop {
        term = term * r2 / Dd::from_f64(((2 * i) * (2 * i + 1)) as f64);
        term = -term;
        s = s + term;
        if term.hi.abs() < 1e-35 {
            break;
        }
        i += 1;
    }
    // cos
    let mut term = Dd::ONE;
    let mut c = Dd::ONE;
    let mut i = 1u64;
    loop {
        term = term * r2 / Dd::from_f64(((2 * i - 1) * (2 * i)) as f64);
        term = -term;
        c = c + term;
        if term.hi.abs() < 1e-35 {
            break;
        }
        i += 1;
    }
    (s, c)
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2b) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2b + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl PartialEq for Dd {
    fn eq(&self, other: &Dd) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, b: f64, tol: f64) {
        assert!(
            (a.to_f64() - b).abs() <= tol * (1.0 + b.abs()),
            "dd {} vs f64 {}",
            a.to_f64(),
            b
        );
    }

    #[test]
    fn arithmetic_identities() {
        let a = Dd::from_f64(1.0) / Dd::from_f64(3.0);
        let b = a * Dd::from_f64(3.0) - Dd::ONE;
        assert!(b.to_f64().abs() < 1e-31);

        let s = Dd::from_f64(2.0).sqrt();
        let r = s * s - Dd::from_f64(2.0);
        assert!(r.to_f64().abs() < 1e-30);
    }

    #[test]
    fn exp_precision() {
        // exp(1) to double-double: hi is the f64 nearest e, lo the residue.
        let e = Dd::ONE.exp();
        assert_eq!(e.hi, std::f64::consts::E);
        let expected_lo = 1.4456468917292502e-16;
        assert!((e.lo - expected_lo).abs() < 1e-30, "lo = {:e}", e.lo);
        // exp(x)*exp(-x) = 1 to dd precision
        for &x in &[0.3, 1.7, -2.4, 10.0, -15.5] {
            let p = Dd::from_f64(x).exp() * Dd::from_f64(-x).exp() - Dd::ONE;
            assert!(p.to_f64().abs() < 1e-29, "x={x}: {}", p.to_f64());
        }
    }

    #[test]
    fn trig_matches_f64() {
        for &x in &[0.1, 0.5, 1.0, 2.0, 3.0, 7.7, -4.2, 25.0] {
            let xd = Dd::from_f64(x);
            close(xd.sin(), x.sin(), 1e-14);
            close(xd.cos(), x.cos(), 1e-14);
            close(xd.tanh(), x.tanh(), 1e-14);
            close(xd.sinh(), x.sinh(), 1e-14);
            close(xd.cosh(), x.cosh(), 1e-14);
        }
    }

    #[test]
    fn identities_at_moderate_arguments() {
        // 1 - tanh^2 = sech^2 loses ~|2x|/ln10 digits to cancellation, so the
        // identity check stays at moderate arguments.
        for &x in &[0.1, 0.5, 1.0, 2.0, 3.0, -1.3] {
            let xd = Dd::from_f64(x);
            let p = xd.sin() * xd.sin() + xd.cos() * xd.cos() - Dd::ONE;
            assert!(p.to_f64().abs() < 1e-29, "x={x}");
            let t = xd.tanh();
            let c = xd.cosh();
            let q = (Dd::ONE - t * t) * c * c - Dd::ONE;
            assert!(q.to_f64().abs() < 1e-26, "x={x}: {:e}", q.to_f64());
        }
    }

    #[test]
    fn riccati_differential_identity() {
        // phi = -sqrt(-b) tanh(sqrt(-b) x) satisfies phi' = b + phi^2; check
        // the dd derivative by a tiny central difference against b + phi^2.
        let b = -1.7;
        let sb = Dd::from_f64(-b).sqrt();
        let phi = |x: Dd| -(sb * (sb * x).tanh());
        let x = Dd::from_f64(0.83);
        let h = Dd::from_f64(1e-8);
        let d = (phi(x + h) - phi(x - h)) / (h * Dd::from_f64(2.0));
        let rhs = Dd::from_f64(b) + phi(x) * phi(x);
        assert!((d - rhs).to_f64().abs() < 1e-14);
    }

    #[test]
    fn fourth_difference_noise_floor() {
        // The whole point of dd: a 4th-order central difference at h = 1e-4
        // on tanh must come out accurate to ~1e-10, impossible in f64.
        let f = |x: Dd| x.tanh();
        let h = 1e-4;
        let x = Dd::from_f64(0.4);
        let stencil = |h: f64| {
            let h = Dd::from_f64(h);
            let two = Dd::from_f64(2.0);
            (f(x + two * h) - Dd::from_f64(4.0) * f(x + h) + Dd::from_f64(6.0) * f(x)
                - Dd::from_f64(4.0) * f(x - h)
                + f(x - two * h))
                / h.powi(4)
        };
        let d4 = (Dd::from_f64(4.0) * stencil(h / 2.0) - stencil(h)) / Dd::from_f64(3.0);
        // With t = tanh(x) and t' = 1 - t^2, the exact fourth derivative is
        // 16t - 40t^3 + 24t^5.
        let t = 0.4f64.tanh();
        let exact = 16.0 * t - 40.0 * t.powi(3) + 24.0 * t.powi(5);
        assert!(
            (d4.to_f64() - exact).abs() < 1e-9,
            "d4 = {}, exact = {}",
            d4.to_f64(),
            exact
        );
    }
}
