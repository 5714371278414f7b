//! Exact rational distances and the `(1 + eps)^i` rounding scales.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Approximation parameter `eps = num / den`, kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Eps {
    num: u64,
    den: u64,
}

/// Largest accepted `eps`.
pub const EPS_MAX: Eps = Eps { num: 1, den: 1 };

impl Eps {
    pub fn new(num: u64, den: u64) -> Result<Self, String> {
        if num == 0 || den == 0 {
            return Err(format!("eps = {num}/{den} must be positive"));
        }
        let g = num.gcd(&den);
        let e = Eps { num: num / g, den: den / g };
        if e.as_ratio() > EPS_MAX.as_ratio() {
            return Err(format!("eps = {e} exceeds {EPS_MAX}"));
        }
        Ok(e)
    }

    /// `1 / k`.
    pub fn reciprocal(k: u64) -> Self {
        Eps::new(1, k.max(1)).expect("1/k is a valid eps")
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn as_ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `1 + eps` as an exact rational.
    pub fn one_plus(&self) -> BigRational {
        BigRational::one() + self.as_ratio()
    }

    /// `eps' = eps / (2 + eps)`, which satisfies `(1 + eps')^2 <= 1 + eps`.
    pub fn half_step(&self) -> Eps {
        Eps::new(self.num, 2 * self.den + self.num).expect("smaller than eps")
    }
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Eps {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: u64 = n.parse().map_err(|e| format!("eps numerator {n:?}: {e}"))?;
        let d: u64 = d.parse().map_err(|e| format!("eps denominator {d:?}: {e}"))?;
        Eps::new(n, d)
    }
}

impl Serialize for Eps {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Eps {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A nonnegative exact rational distance.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dist(BigRational);

impl Dist {
    pub fn zero() -> Self {
        Dist(BigRational::zero())
    }

    pub fn from_int(v: u64) -> Self {
        Dist(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(r: BigRational) -> Self {
        Dist(r)
    }

    pub fn ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn ceil_u64(&self) -> u64 {
        self.0.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
    }

    /// `self <= factor * other` for an integer distance `other`.
    pub fn within(&self, factor: &BigRational, other: u64) -> bool {
        self.0 <= factor * BigRational::from_integer(BigInt::from(other))
    }

    /// `self / other` as a float; `other` must be positive.
    pub fn ratio_to(&self, other: u64) -> f64 {
        (self.0.clone() / BigRational::from_integer(BigInt::from(other)))
            .to_f64()
            .unwrap_or(f64::INFINITY)
    }

    /// Smallest multiple of `1/den` that is at least `self`.
    pub fn quantize_up(&self, den: u64) -> Dist {
        let d = BigInt::from(den);
        let scaled = (self.0.clone() * BigRational::from_integer(d.clone())).ceil().to_integer();
        Dist(BigRational::new(scaled, d))
    }

    /// Splits into `(numerator, denominator)` if both fit in the given widths.
    pub fn to_parts(&self, num_bits: u32, den_bits: u32) -> Option<(u64, u64)> {
        let n = self.numer().to_u64()?;
        let d = self.denom().to_u64()?;
        let fits = |v: u64, bits: u32| bits >= 64 || v < (1u64 << bits);
        (fits(n, num_bits) && fits(d, den_bits)).then_some((n, d))
    }

    pub fn from_parts(num: u64, den: u64) -> Option<Dist> {
        (den != 0).then(|| Dist(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }
}

impl Dist {
    /// `self + o` without normalizing the fraction. Comparisons stay exact;
    /// call [`Dist::reduced`] before displaying or storing.
    pub fn add_raw(&self, o: &Dist) -> Dist {
        let (a, b) = (&self.0, &o.0);
        Dist(BigRational::new_raw(a.numer() * b.denom() + b.numer() * a.denom(), a.denom() * b.denom()))
    }

    /// `self - o` without normalizing the fraction.
    pub fn sub_raw(&self, o: &Dist) -> Dist {
        let (a, b) = (&self.0, &o.0);
        Dist(BigRational::new_raw(a.numer() * b.denom() - b.numer() * a.denom(), a.denom() * b.denom()))
    }

    pub fn reduced(self) -> Dist {
        let (n, d) = self.0.into_raw();
        Dist(BigRational::new(n, d))
    }
}

impl Add for Dist {
    type Output = Dist;
    fn add(self, rhs: Dist) -> Dist {
        Dist(self.0 + rhs.0)
    }
}

impl<'a> Sub<&'a Dist> for &'a Dist {
    type Output = Dist;
    fn sub(self, rhs: &Dist) -> Dist {
        Dist(&self.0 - &rhs.0)
    }
}

impl<'a> Add<&'a Dist> for &'a Dist {
    type Output = Dist;
    fn add(self, rhs: &Dist) -> Dist {
        Dist(&self.0 + &rhs.0)
    }
}

impl Mul<&BigRational> for &Dist {
    type Output = Dist;
    fn mul(self, rhs: &BigRational) -> Dist {
        Dist(&self.0 * rhs)
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Dist {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Precomputed powers of `1 + eps = a / q` for levels `0..=i_max`.
#[derive(Debug, Clone)]
pub struct LevelScale {
    eps: Eps,
    pow_a: Vec<BigUint>,
    pow_q: Vec<BigUint>,
    approx: Vec<f64>,
}

impl LevelScale {
    pub fn new(eps: Eps, i_max: u32) -> Self {
        let a = BigUint::from(eps.num + eps.den);
        let q = BigUint::from(eps.den);
        let mut pow_a = vec![BigUint::one()];
        let mut pow_q = vec![BigUint::one()];
        for i in 1..=i_max as usize {
            pow_a.push(&pow_a[i - 1] * &a);
            pow_q.push(&pow_q[i - 1] * &q);
        }
        let base = 1.0 + eps.as_f64();
        let approx = (0..=i_max).map(|i| base.powi(i as i32)).collect();
        LevelScale { eps, pow_a, pow_q, approx }
    }

    pub fn eps(&self) -> Eps {
        self.eps
    }

    pub fn i_max(&self) -> u32 {
        (self.pow_a.len() - 1) as u32
    }

    /// `b(i) = (1 + eps)^i`.
    pub fn b(&self, i: u32) -> BigRational {
        BigRational::new(
            BigInt::from(self.pow_a[i as usize].clone()),
            BigInt::from(self.pow_q[i as usize].clone()),
        )
    }

    /// `hops * b(i)`.
    pub fn value(&self, hops: u64, i: u32) -> Dist {
        // a = p + q is coprime to q, so only gcd(hops, q^i) cancels.
        let q = self.eps.den;
        let (mut g, mut rest) = (1u64, hops);
        for _ in 0..i {
            let d = rest.gcd(&q);
            if d <= 1 || rest == 0 {
                break;
            }
            g *= d;
            rest /= d;
        }
        if hops == 0 {
            return Dist::zero();
        }
        Dist(BigRational::new_raw(
            BigInt::from(&self.pow_a[i as usize] * rest),
            BigInt::from(&self.pow_q[i as usize] / g),
        ))
    }

    /// Approximate `hops * b(i)`.
    pub fn approx(&self, hops: u64, i: u32) -> f64 {
        hops as f64 * self.approx[i as usize]
    }

    /// Exact comparison of `h1 * b(i1)` against `h2 * b(i2)`.
    pub fn cmp_scaled(&self, (h1, i1): (u64, u32), (h2, i2): (u64, u32)) -> Ordering {
        if i1 == i2 {
            return h1.cmp(&h2);
        }
        let (x, y) = (self.approx(h1, i1), self.approx(h2, i2));
        if (x - y).abs() > 1e-9 * x.max(y) {
            return x.partial_cmp(&y).unwrap();
        }
        if i1 < i2 {
            let j = (i2 - i1) as usize;
            (&self.pow_q[j] * h1).cmp(&(&self.pow_a[j] * h2))
        } else {
            let j = (i1 - i2) as usize;
            (&self.pow_a[j] * h1).cmp(&(&self.pow_q[j] * h2))
        }
    }

    /// `ceil(w / b(i))` for a rational weight `w`.
    pub fn rounded_length(&self, w: &Dist, i: u32) -> u64 {
        let x = w.to_f64() / self.approx[i as usize];
        if x.is_finite() && x < 1e12 {
            let c = x.ceil();
            // far enough from an integer for the float ceiling to be exact
            let margin = 1e-9 * x.max(1.0);
            if c - x > margin && x - (c - 1.0) > margin {
                return (c as u64).max(1);
            }
        }
        let num = w.numer() * BigInt::from(self.pow_q[i as usize].clone());
        let den = w.denom() * BigInt::from(self.pow_a[i as usize].clone());
        let (q, r) = num.div_rem(&den);
        let q = if r.is_zero() { q } else { q + 1 };
        q.to_u64().expect("rounded length fits in u64")
    }
}

/// Smallest `i` with `(1 + eps)^i >= w_max`.
pub fn compute_imax(w_max: &Dist, eps: Eps) -> u32 {
    // (a/q)^i >= num/den  <=>  a^i * den >= num * q^i
    let (num, den) = (w_max.numer().magnitude(), w_max.denom().magnitude());
    let (mut pa, mut pq) = (den.clone(), num.clone());
    let mut i = 0;
    while pa < pq {
        pa *= eps.num + eps.den;
        pq *= eps.den;
        i += 1;
    }
    i
}

/// Hop budget `h' = ceil((1 + eps)^2 * h / eps)`.
pub fn hop_budget(h: u64, eps: Eps) -> u64 {
    let a = eps.num as u128 + eps.den as u128;
    let num = a * a * h as u128;
    let den = eps.den as u128 * eps.num as u128;
    num.div_ceil(den) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(s: &str) -> Eps {
        s.parse().unwrap()
    }

    #[test]
    fn eps_parsing() {
        assert_eq!(eps("2/4"), Eps::new(1, 2).unwrap());
        assert_eq!(eps("1"), EPS_MAX);
        assert!("0/1".parse::<Eps>().is_err());
        assert!("3/2".parse::<Eps>().is_err());
        assert!("x".parse::<Eps>().is_err());
        let e = eps("1/4").half_step();
        assert!(e.one_plus() * e.one_plus() <= eps("1/4").one_plus());
    }

    #[test]
    fn imax_examples() {
        assert_eq!(compute_imax(&Dist::from_int(8), EPS_MAX), 3);
        assert_eq!(compute_imax(&Dist::from_int(9), EPS_MAX), 4);
        assert_eq!(compute_imax(&Dist::from_int(1), EPS_MAX), 0);
        assert_eq!(compute_imax(&Dist::from_int(2), eps("1/2")), 2);
    }

    #[test]
    fn rounding_examples() {
        let s = LevelScale::new(EPS_MAX, 3);
        assert_eq!(s.rounded_length(&Dist::from_int(5), 2), 2);
        assert_eq!(s.value(2, 2), Dist::from_int(8));
        assert_eq!(s.rounded_length(&Dist::from_int(4), 2), 1);
        for w in 1..20 {
            assert_eq!(s.rounded_length(&Dist::from_int(w), 0), w);
        }
        // rational weights with a non-integral base
        let s = LevelScale::new(eps("1/2"), 4);
        let w = Dist::from_parts(7, 3).unwrap();
        let len = s.rounded_length(&w, 1);
        assert_eq!(len, 2); // 7/3 / 3/2 = 14/9
        let wi = s.value(len, 1);
        assert!(wi >= w && wi.ratio() - w.ratio() < s.b(1));
    }

    #[test]
    fn hop_budget_examples() {
        assert_eq!(hop_budget(2, EPS_MAX), 8);
        assert_eq!(hop_budget(10, eps("1/2")), 45);
    }

    #[test]
    fn hop_budget_covers_p3() {
        // Weights 2 and 3 at eps = 1: both round to one unit at level 2.
        let s = LevelScale::new(EPS_MAX, 3);
        let hd = s.rounded_length(&Dist::from_int(2), 2) + s.rounded_length(&Dist::from_int(3), 2);
        assert_eq!(hd, 2);
        assert!(hd <= hop_budget(2, EPS_MAX));
        assert!(s.value(hd, 2) <= Dist::from_int(5 * 2));
    }

    #[test]
    fn scaled_comparison_is_exact() {
        let s = LevelScale::new(eps("1/3"), 12);
        for i1 in 0..=12 {
            for i2 in 0..=12 {
                for h1 in [1u64, 7, 64, 81, 256] {
                    for h2 in [1u64, 3, 48, 64, 108] {
                        let exact = s.value(h1, i1).cmp(&s.value(h2, i2));
                        assert_eq!(s.cmp_scaled((h1, i1), (h2, i2)), exact);
                    }
                }
            }
        }
        // 4^3 * 64 == 3^3 * ... exact tie: 27 * (4/3)^3 = 64
        assert_eq!(s.cmp_scaled((27, 3), (64, 0)), Ordering::Equal);
    }

    #[test]
    fn quantize_and_parts() {
        let d = Dist::from_parts(10, 3).unwrap();
        let q = d.quantize_up(1 << 20);
        assert!(q >= d);
        let (n, den) = q.to_parts(64, 32).unwrap();
        assert_eq!(Dist::from_parts(n, den).unwrap(), q);
        assert_eq!(Dist::from_int(5).to_string(), "5");
        assert_eq!(d.to_string(), "10/3");
    }
}
