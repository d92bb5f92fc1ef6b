//! Angular-momentum coupling coefficients.
//!
//! Clebsch-Gordan coefficients, Wigner 3-j and 6-j symbols are evaluated
//! from the Racah closed-form sums in exact rational arithmetic. A result is
//! carried as a signed square root `s·√(p/q)` and converted to `f64` only at
//! the boundary, so golden values are bit-reproducible.
//!
//! All angular momenta are [`HalfInt`]s, stored as twice their value.
//! Condon-Shortley phases are used throughout.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported doubled angular momentum.
pub const MAX_DOUBLED_J: i32 = 120;

/// A half-integer quantum number stored as twice its value
/// (`j = 3/2` is stored as `3`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const ONE: HalfInt = HalfInt(2);

    pub const fn from_doubled(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    pub const fn doubled(self) -> i32 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// The projections `-j, -j+1, ..., j` of a non-negative `j`.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (-j..=j).step_by(2).map(HalfInt)
    }

    /// `2j + 1`.
    pub fn multiplicity(self) -> i32 {
        self.0 + 1
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    /// Accepts `"1"`, `"-2"`, `"3/2"`, `"-1/2"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("`{s}` is not an integer or half-integer"));
        match s.split_once('/') {
            Some((num, "2")) => {
                let n: i32 = num.trim().parse().map_err(|_| bad())?;
                if n % 2 == 0 {
                    Err(bad())
                } else {
                    Ok(HalfInt(n))
                }
            }
            Some(_) => Err(bad()),
            None => s
                .parse::<i32>()
                .ok()
                .and_then(|n| n.checked_mul(2))
                .map(HalfInt)
                .ok_or_else(bad),
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

/// Exact value `sign(r)·√|r|` of a coupling coefficient, where `r` is a
/// rational in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedSqrt(BigRational);

impl SignedSqrt {
    pub fn zero() -> Self {
        SignedSqrt(BigRational::zero())
    }

    /// The signed square `sign·p/q`.
    pub fn signed_square(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let magnitude = ratio_to_f64(self.0.numer().magnitude(), self.0.denom().magnitude()).sqrt();
        if self.0.is_negative() {
            -magnitude
        } else {
            magnitude
        }
    }
}

impl fmt::Display for SignedSqrt {
    /// Writes the signed square, e.g. `-1/3` for `-1/√3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Quotient of two big integers rounded to `f64`, robust against operands
/// that overflow the `f64` range.
fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    const KEEP: u64 = 128;
    let nb = num.bits();
    let db = den.bits();
    let ns = nb.saturating_sub(KEEP);
    let ds = db.saturating_sub(KEEP);
    let n = (num >> ns).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> ds).to_f64().unwrap_or(f64::INFINITY);
    let exp = ns as i64 - ds as i64;
    (n / d) * 2f64.powi(exp as i32)
}

/// A coupling coefficient: floating value plus, when available, its exact
/// signed-square-root form.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledValue {
    pub value: f64,
    pub exact: Option<SignedSqrt>,
}

impl CoupledValue {
    pub fn zero() -> Self {
        CoupledValue {
            value: 0.0,
            exact: Some(SignedSqrt::zero()),
        }
    }

    fn from_exact(exact: SignedSqrt) -> Self {
        CoupledValue {
            value: exact.to_f64(),
            exact: Some(exact),
        }
    }
}

impl From<CoupledValue> for f64 {
    fn from(v: CoupledValue) -> f64 {
        v.value
    }
}

fn factorial(n: i32) -> &'static BigUint {
    const LEN: usize = 4 * MAX_DOUBLED_J as usize / 2 + 2;
    static TABLE: OnceLock<Vec<BigUint>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(LEN);
        let mut acc = BigUint::one();
        out.push(acc.clone());
        for k in 1..LEN {
            acc *= BigUint::from(k);
            out.push(acc.clone());
        }
        out
    });
    &table[usize::try_from(n).expect("factorial of a negative number")]
}

fn fact_int(n: i32) -> BigInt {
    BigInt::from_biguint(Sign::Plus, factorial(n).clone())
}

/// Product of factorials of the doubled arguments halved. All arguments must
/// be even and non-negative.
fn fact_product(doubled: &[i32]) -> BigInt {
    doubled.iter().fold(BigInt::one(), |acc, &d| acc * fact_int(d / 2))
}

fn phase(doubled_exponent: i32) -> i32 {
    debug_assert!(doubled_exponent % 2 == 0);
    if (doubled_exponent / 2).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn check_j(j: HalfInt) -> Result<()> {
    if j.0 < 0 {
        return Err(Error::invalid(format!("angular momentum {j} is negative")));
    }
    if j.0 > MAX_DOUBLED_J {
        return Err(Error::invalid(format!(
            "angular momentum {j} exceeds the supported maximum {}",
            HalfInt(MAX_DOUBLED_J)
        )));
    }
    Ok(())
}

fn check_pair(j: HalfInt, m: HalfInt) -> Result<()> {
    check_j(j)?;
    if (j.0 - m.0) % 2 != 0 {
        return Err(Error::invalid(format!("projection {m} does not match the parity of j = {j}")));
    }
    if m.0.abs() > j.0 {
        return Err(Error::invalid(format!("projection {m} exceeds j = {j}")));
    }
    Ok(())
}

/// `|a−b| ≤ c ≤ a+b` and `a+b+c` integer. Arguments are assumed non-negative.
pub fn triangle_ok(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.0, b.0, c.0);
    (a + b + c) % 2 == 0 && c >= (a - b).abs() && c <= a + b
}

/// Triangle coefficient `(a+b−c)!(a−b+c)!(−a+b+c)!/(a+b+c+1)!` on doubled
/// arguments.
fn triangle_coefficient(a: i32, b: i32, c: i32) -> BigRational {
    BigRational::new(
        fact_product(&[a + b - c, a - b + c, -a + b + c]),
        fact_int((a + b + c) / 2 + 1),
    )
}

fn signed_sqrt(sign: i32, radicand: BigRational, sum: BigRational) -> SignedSqrt {
    if sum.is_zero() {
        return SignedSqrt::zero();
    }
    let mut r = radicand * &sum * &sum;
    if (sum.is_negative()) != (sign < 0) {
        r = -r;
    }
    SignedSqrt(r)
}

fn wigner_3j_exact(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> SignedSqrt {
    if m1 + m2 + m3 != 0 || !triangle_ok(HalfInt(j1), HalfInt(j2), HalfInt(j3)) {
        return SignedSqrt::zero();
    }
    let radicand = triangle_coefficient(j1, j2, j3)
        * BigRational::from_integer(fact_product(&[
            j1 + m1,
            j1 - m1,
            j2 + m2,
            j2 - m2,
            j3 + m3,
            j3 - m3,
        ]));

    // Summation bounds on doubled t.
    let lo = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let hi = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    let mut t = lo;
    while t <= hi {
        let den = fact_product(&[
            t,
            j3 - j2 + t + m1,
            j3 - j1 + t - m2,
            j1 + j2 - j3 - t,
            j1 - t - m1,
            j2 - t + m2,
        ]);
        let term = BigRational::new(BigInt::from(phase(t)), den);
        sum += term;
        t += 2;
    }
    signed_sqrt(phase(j1 - j2 - m3), radicand, sum)
}

/// Wigner 3-j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Returns an exact zero when `m1+m2+m3 ≠ 0` or the triangle rule fails.
pub fn wigner_3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<CoupledValue> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j3, m3)?;
    Ok(CoupledValue::from_exact(wigner_3j_exact(
        j1.0, j2.0, j3.0, m1.0, m2.0, m3.0,
    )))
}

/// Clebsch-Gordan coefficient `⟨j1 m1; j2 m2 | j m⟩`.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<CoupledValue> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j, m)?;
    let three_j = wigner_3j_exact(j1.0, j2.0, j.0, m1.0, m2.0, -m.0);
    if three_j.is_zero() {
        return Ok(CoupledValue::zero());
    }
    // ⟨j1 m1; j2 m2|j m⟩ = (−1)^(j1−j2+m) √(2j+1) (j1 j2 j; m1 m2 −m)
    let mut r = three_j.0 * BigRational::from_integer(BigInt::from(j.multiplicity()));
    if phase(j1.0 - j2.0 + m.0) < 0 {
        r = -r;
    }
    Ok(CoupledValue::from_exact(SignedSqrt(r)))
}

/// Wigner 6-j symbol `{j1 j2 j3; j4 j5 j6}` by the Racah formula.
///
/// Returns an exact zero unless the triads `(j1 j2 j3)`, `(j1 j5 j6)`,
/// `(j4 j2 j6)` and `(j4 j5 j3)` all satisfy [`triangle_ok`].
pub fn wigner_6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<CoupledValue> {
    for j in [j1, j2, j3, j4, j5, j6] {
        check_j(j)?;
    }
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triangle_ok(a, b, c)) {
        return Ok(CoupledValue::zero());
    }
    let (a, b, c, d, e, f) = (j1.0, j2.0, j3.0, j4.0, j5.0, j6.0);
    let radicand = triangle_coefficient(a, b, c)
        * triangle_coefficient(a, e, f)
        * triangle_coefficient(d, b, f)
        * triangle_coefficient(d, e, c);

    let lo = (a + b + c).max(a + e + f).max(d + b + f).max(d + e + c);
    let hi = (a + b + d + e).min(b + c + e + f).min(c + a + f + d);
    let mut sum = BigRational::zero();
    let mut t = lo;
    while t <= hi {
        let num = BigInt::from(phase(t)) * fact_int(t / 2 + 1);
        let den = fact_product(&[
            t - a - b - c,
            t - a - e - f,
            t - d - b - f,
            t - d - e - c,
            a + b + d + e - t,
            b + c + e + f - t,
            c + a + f + d - t,
        ]);
        sum += BigRational::new(num, den);
        t += 2;
    }
    Ok(CoupledValue::from_exact(signed_sqrt(1, radicand, sum)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(d: i32) -> HalfInt {
        HalfInt::from_doubled(d)
    }

    #[test]
    fn triangle_examples() {
        assert!(triangle_ok(h(2), h(2), h(4)));
        assert!(!triangle_ok(h(1), h(1), h(4)));
        assert!(triangle_ok(h(3), h(2), h(1)));
        assert!(!triangle_ok(h(1), h(2), h(2)));
    }

    #[test]
    fn halfint_parse_and_display() {
        assert_eq!("3/2".parse::<HalfInt>().unwrap(), h(3));
        assert_eq!("-1/2".parse::<HalfInt>().unwrap(), h(-1));
        assert_eq!("2".parse::<HalfInt>().unwrap(), h(4));
        assert!("4/2".parse::<HalfInt>().is_err());
        assert!("1/3".parse::<HalfInt>().is_err());
        assert!("x".parse::<HalfInt>().is_err());
        assert_eq!(h(3).to_string(), "3/2");
        assert_eq!(h(-4).to_string(), "-2");
        assert_eq!(h(3).projections().map(|m| m.doubled()).collect::<Vec<_>>(), vec![-3, -1, 1, 3]);
    }

    #[test]
    fn coupling_with_scalar_is_one() {
        for tj in 0..=8 {
            for m in h(tj).projections() {
                let v = clebsch_gordan(h(tj), m, h(0), h(0), h(tj), m).unwrap();
                assert_eq!(v.value, 1.0);
                assert_eq!(v.exact.unwrap().to_string(), "1");
            }
        }
    }

    #[test]
    fn spin_half_singlet_triplet() {
        let v = clebsch_gordan(h(1), h(1), h(1), h(-1), h(2), h(0)).unwrap();
        assert_eq!(v.exact.as_ref().unwrap().to_string(), "1/2");
        assert!((v.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-16);
        let s = clebsch_gordan(h(1), h(-1), h(1), h(1), h(0), h(0)).unwrap();
        assert_eq!(s.exact.unwrap().to_string(), "-1/2");
    }

    #[test]
    fn magnetic_selection_rule_gives_exact_zero() {
        let v = clebsch_gordan(h(2), h(2), h(2), h(0), h(4), h(4)).unwrap();
        assert_eq!(v, CoupledValue::zero());
        let w = wigner_3j(h(2), h(2), h(2), h(2), h(0), h(0)).unwrap();
        assert_eq!(w.value, 0.0);
    }

    #[test]
    fn known_symbols() {
        let v = wigner_3j(h(2), h(2), h(0), h(0), h(0), h(0)).unwrap();
        assert_eq!(v.exact.unwrap().to_string(), "-1/3");
        let s = wigner_6j(h(2), h(2), h(0), h(2), h(2), h(2)).unwrap();
        assert_eq!(s.exact.unwrap().to_string(), "-1/9");
        assert!((s.value + 1.0 / 3.0).abs() < 1e-16);
        let z = wigner_6j(h(4), h(4), h(4), h(4), h(4), h(10)).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn malformed_pairs_are_rejected() {
        assert!(clebsch_gordan(h(2), h(1), h(0), h(0), h(2), h(1)).is_err());
        assert!(clebsch_gordan(h(2), h(4), h(0), h(0), h(2), h(4)).is_err());
        assert!(wigner_3j(h(-2), h(2), h(0), h(0), h(0), h(0)).is_err());
        assert!(wigner_6j(h(MAX_DOUBLED_J + 2), h(0), h(0), h(0), h(0), h(0)).is_err());
    }

    #[test]
    fn huge_ratios_convert() {
        let n = BigUint::from(3u32) << 2000;
        let d = BigUint::from(1u32) << 2001;
        assert!((ratio_to_f64(&n, &d) - 1.5).abs() < 1e-15);
    }
}
