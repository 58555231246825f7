//! Real scalar abstraction used by the reference-element and spectral-table
//! code, so tables can be generated either in `f64` or in software
//! double-double arithmetic (about 32 significant digits).

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Arithmetic needed by the spectral precomputation.
pub trait Scalar:
    Copy
    + fmt::Debug
    + PartialOrd
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
{
    /// Significant decimal digits written to table caches.
    const DIGITS: u32;
    /// Unit roundoff.
    const EPSILON: f64;
    /// Largest element order accepted by default at this precision.
    const DEFAULT_MAX_ORDER: usize;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn pi() -> Self;
    fn to_decimal(self) -> String;
    fn parse_decimal(s: &str) -> Option<Self>;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn from_usize(k: usize) -> Self {
        Self::from_f64(k as f64)
    }

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
}

impl Scalar for f64 {
    const DIGITS: u32 = 17;
    const EPSILON: f64 = f64::EPSILON;
    const DEFAULT_MAX_ORDER: usize = 9;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn to_decimal(self) -> String {
        // Shortest representation that round-trips.
        format!("{self:e}")
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
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

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, e + self.lo * b)
    }

    fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            Self::renorm(hi, self.lo.floor())
        } else {
            Self { hi, lo: 0.0 }
        }
    }

    fn powi(self, mut e: i32) -> Self {
        let mut base = if e < 0 { Self::one() / self } else { self };
        e = e.abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    // Taylor series on |x| <= pi/4.
    fn sin_taylor(x: Self) -> Self {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 1.0;
        loop {
            term = -(term * x2) / Self::from_f64((2.0 * k) * (2.0 * k + 1.0));
            sum += term;
            if term.hi.abs() <= 1e-34 * sum.hi.abs() || k > 40.0 {
                return sum;
            }
            k += 1.0;
        }
    }

    fn cos_taylor(x: Self) -> Self {
        let x2 = x * x;
        let mut term = Self::one();
        let mut sum = term;
        let mut k = 1.0;
        loop {
            term = -(term * x2) / Self::from_f64((2.0 * k - 1.0) * (2.0 * k));
            sum += term;
            if term.hi.abs() <= 1e-34 || k > 40.0 {
                return sum;
            }
            k += 1.0;
        }
    }

    /// Reduces `x` modulo pi/2, returning the quadrant and the remainder.
    fn reduce(self) -> (i64, Self) {
        let half_pi = Self::pi().mul_f64(0.5);
        let q = (self / half_pi).hi.round();
        let r = self - half_pi.mul_f64(q);
        (q as i64, r)
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal())
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal())
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Self::renorm(s, e + f)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        Self::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Self::renorm(q1, q2) + Self::from_f64(q3)
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for DoubleDouble {
            fn $m(&mut self, b: Self) {
                *self = *self $op b;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);

impl Sum for DoubleDouble {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

impl Scalar for DoubleDouble {
    const DIGITS: u32 = 32;
    const EPSILON: f64 = 4.93e-32;
    const DEFAULT_MAX_ORDER: usize = 21;

    fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::from_f64(self.hi.sqrt());
        }
        let mut y = Self::from_f64(self.hi.sqrt());
        // Two Newton steps from a double-accurate seed.
        for _ in 0..2 {
            y = (y + self / y).mul_f64(0.5);
        }
        y
    }

    fn sin(self) -> Self {
        let (q, r) = self.reduce();
        match q.rem_euclid(4) {
            0 => Self::sin_taylor(r),
            1 => Self::cos_taylor(r),
            2 => -Self::sin_taylor(r),
            _ => -Self::cos_taylor(r),
        }
    }

    fn cos(self) -> Self {
        let (q, r) = self.reduce();
        match q.rem_euclid(4) {
            0 => Self::cos_taylor(r),
            1 => -Self::sin_taylor(r),
            2 => -Self::cos_taylor(r),
            _ => Self::sin_taylor(r),
        }
    }

    fn pi() -> Self {
        Self::new(std::f64::consts::PI, 1.224_646_799_147_353_2e-16)
    }

    fn to_decimal(self) -> String {
        let v = self.to_f64();
        if v == 0.0 || !v.is_finite() {
            return format!("{v:e}");
        }
        let digits = Self::DIGITS as usize;
        let neg = v < 0.0;
        let mut x = self.abs();
        let mut exp = x.hi.log10().floor() as i32;
        x *= Self::from_f64(10.0).powi(-exp);
        if x.hi >= 10.0 {
            x /= Self::from_f64(10.0);
            exp += 1;
        } else if x.hi < 1.0 {
            x = x.mul_f64(10.0);
            exp -= 1;
        }
        let mut out: Vec<u8> = Vec::with_capacity(digits + 1);
        for _ in 0..=digits {
            let d = x.floor().hi.clamp(0.0, 9.0);
            out.push(d as u8);
            x = (x - Self::from_f64(d)).mul_f64(10.0);
        }
        // Round on the guard digit.
        if out.pop().unwrap_or(0) >= 5 {
            let mut i = out.len();
            loop {
                if i == 0 {
                    out.insert(0, 1);
                    out.pop();
                    exp += 1;
                    break;
                }
                i -= 1;
                if out[i] == 9 {
                    out[i] = 0;
                } else {
                    out[i] += 1;
                    break;
                }
            }
        }
        let mut s = String::with_capacity(digits + 8);
        if neg {
            s.push('-');
        }
        s.push((b'0' + out[0]) as char);
        s.push('.');
        for d in &out[1..] {
            s.push((b'0' + d) as char);
        }
        s.push_str(&format!("e{exp}"));
        s
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
            None => (s, 0),
        };
        let (neg, mantissa) = match mantissa.as_bytes().first()? {
            b'-' => (true, &mantissa[1..]),
            b'+' => (false, &mantissa[1..]),
            _ => (false, mantissa),
        };
        if mantissa.is_empty() {
            return None;
        }
        let mut value = Self::zero();
        let mut frac_digits = 0i32;
        let mut seen_point = false;
        let mut any_digit = false;
        for c in mantissa.chars() {
            match c {
                '0'..='9' => {
                    value = value.mul_f64(10.0) + Self::from_f64(f64::from(c as u8 - b'0'));
                    any_digit = true;
                    if seen_point {
                        frac_digits += 1;
                    }
                }
                '.' if !seen_point => seen_point = true,
                _ => return None,
            }
        }
        if !any_digit {
            return None;
        }
        let scale = exp - frac_digits;
        let ten = Self::from_f64(10.0);
        value = if scale >= 0 {
            value * ten.powi(scale)
        } else {
            value / ten.powi(-scale)
        };
        Some(if neg { -value } else { value })
    }
}
