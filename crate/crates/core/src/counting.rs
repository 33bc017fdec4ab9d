//! Closed-form counts over uniform partitions, evaluated with
//! arbitrary-precision integers and exact rationals.
//!
//! Nothing here touches floating point. Rationals produced by
//! [`num_rational::BigRational`] are always reduced with a positive
//! denominator.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact integer or rational value, rendered as a decimal string
/// (`"100"`, `"-7/4"`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactScalar(BigRational);

impl ExactScalar {
    pub fn from_int(value: BigInt) -> Self {
        ExactScalar(BigRational::from_integer(value))
    }

    pub fn from_ratio(value: BigRational) -> Self {
        ExactScalar(value)
    }

    pub fn zero() -> Self {
        ExactScalar(BigRational::zero())
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// The integer value, if the scalar is one.
    pub fn to_integer(&self) -> Option<BigInt> {
        self.0.is_integer().then(|| self.0.to_integer())
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.to_integer().and_then(|v| v.to_u64())
    }
}

impl From<BigInt> for ExactScalar {
    fn from(value: BigInt) -> Self {
        Self::from_int(value)
    }
}

impl From<u64> for ExactScalar {
    fn from(value: u64) -> Self {
        Self::from_int(BigInt::from(value))
    }
}

impl From<BigRational> for ExactScalar {
    fn from(value: BigRational) -> Self {
        Self::from_ratio(value)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl std::str::FromStr for ExactScalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |part: &str| part.trim().parse::<BigInt>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        match s.split_once('/') {
            None => Ok(ExactScalar::from_int(parse(s)?)),
            Some((n, d)) => {
                let d = parse(d)?;
                if d.is_zero() {
                    return Err(Error::Parse(format!("{s:?}: zero denominator")));
                }
                Ok(ExactScalar(BigRational::new(parse(n)?, d)))
            }
        }
    }
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

fn int(v: usize) -> BigInt {
    BigInt::from(v)
}

fn ratio(n: BigInt, d: BigInt) -> BigRational {
    BigRational::new(n, d)
}

/// `n choose r` by the multiplicative formula with exact division at each
/// step; zero when `r > n`.
pub fn binomial(n: usize, r: usize) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigInt::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// Number of `c`-uniform partitions of `[ck]`: `(ck)! / ((c!)^k k!)`.
pub fn universe_size(c: usize, k: usize) -> BigInt {
    let denom = factorial(c).pow(k as u32) * factorial(k);
    let (q, r) = factorial(c * k).div_rem(&denom);
    debug_assert!(r.is_zero());
    q
}

/// θ extended to `z = 0`, where it is the size of the whole universe.
fn theta_unchecked(c: usize, k: usize, z: usize) -> BigInt {
    let product = (z..k).fold(BigInt::one(), |acc, i| acc * binomial((k - i) * c, c));
    let (q, r) = product.div_rem(&factorial(k - z));
    debug_assert!(r.is_zero(), "theta({c},{k},{z}) is not integral");
    q
}

fn check_ck(c: usize, k: usize) -> Result<()> {
    if c == 0 || k == 0 {
        return Err(Error::DomainError(format!("c and k must be positive (c={c}, k={k})")));
    }
    Ok(())
}

fn check_ckt(c: usize, k: usize, t: usize) -> Result<()> {
    check_ck(c, k)?;
    if t == 0 || t > k {
        return Err(Error::DomainError(format!("t must satisfy 1 <= t <= k (t={t}, k={k})")));
    }
    Ok(())
}

/// Number of uniform partitions containing a fixed partial partition with
/// `z` blocks: `(1/(k-z)!) * prod_{i=z}^{k-1} C((k-i)c, c)`.
pub fn theta(c: usize, k: usize, z: usize) -> Result<BigInt> {
    check_ck(c, k)?;
    if z == 0 || z > k {
        return Err(Error::DomainError(format!("theta needs 1 <= z <= k (z={z}, k={k})")));
    }
    Ok(theta_unchecked(c, k, z))
}

/// `prod_{j=1}^{z-t} (k - (t + j - 1))`.
fn descending_factor(k: usize, t: usize, z: usize) -> BigInt {
    (1..=z - t).fold(BigInt::one(), |acc, j| acc * (k - (t + j - 1)))
}

/// `g(c,k,t,z) = θ(c,k,z) * C(z,t) * prod_{j=1}^{z-t} (k - (t+j-1))`.
pub fn g_bound(c: usize, k: usize, t: usize, z: usize) -> Result<BigInt> {
    check_ckt(c, k, t)?;
    if z < t || z > k {
        return Err(Error::DomainError(format!("g needs t <= z <= k (t={t}, z={z}, k={k})")));
    }
    Ok(theta_unchecked(c, k, z) * binomial(z, t) * descending_factor(k, t, z))
}

/// Upper bound on `|F|` for a cross t-intersecting pair with covering
/// numbers `tau_f` and `tau_g`:
/// `θ(c,k,tau_g) * C(tau_f, t) * prod_{j=1}^{tau_g-t} (k-(t+j-1))`.
pub fn pair_product_bound(c: usize, k: usize, t: usize, tau_f: usize, tau_g: usize) -> Result<BigInt> {
    check_ckt(c, k, t)?;
    for (name, tau) in [("tau_f", tau_f), ("tau_g", tau_g)] {
        if tau < t || tau > k {
            return Err(Error::DomainError(format!("{name} must satisfy t <= {name} <= k (got {tau})")));
        }
    }
    Ok(theta_unchecked(c, k, tau_g) * binomial(tau_f, t) * descending_factor(k, t, tau_g))
}

/// `|N_i(C)| = |{A : |A ∩ C| = i}|` for `i = 0..=k`, by binomial inversion of
/// `C(k,j) θ(c,k,j) = sum_{i>=j} C(i,j) |N_i(C)|`.
pub fn n_class_counts(c: usize, k: usize) -> Result<Vec<BigInt>> {
    check_ck(c, k)?;
    let a: Vec<BigInt> = (0..=k).map(|j| binomial(k, j) * theta_unchecked(c, k, j)).collect();
    Ok((0..=k)
        .map(|i| {
            (i..=k).fold(BigInt::zero(), |acc, j| {
                let term = binomial(j, i) * &a[j];
                if (j - i) % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
        .collect())
}

/// Checks `θ(c,k,i) = sum_{j=i}^{k-2} C(k-i, j-i)/C(k,j) |N_j(C)| + 1`
/// exactly.
pub fn verify_theta_c_identity(c: usize, k: usize, i: usize) -> Result<bool> {
    check_ck(c, k)?;
    if i == 0 || i >= k {
        return Err(Error::DomainError(format!("identity needs 1 <= i <= k-1 (i={i}, k={k})")));
    }
    let classes = n_class_counts(c, k)?;
    let mut rhs = BigRational::one();
    for (j, n_j) in classes.iter().enumerate().take(k.saturating_sub(1)).skip(i) {
        rhs += ratio(binomial(k - i, j - i) * n_j, binomial(k, j));
    }
    Ok(BigRational::from_integer(theta_unchecked(c, k, i)) == rhs)
}

fn check_k_ge(c: usize, k: usize, t: usize, extra: usize, what: &str) -> Result<()> {
    check_ckt(c, k, t)?;
    if k < t + extra {
        return Err(Error::DomainError(format!("{what} needs k >= t+{extra} (k={k}, t={t})")));
    }
    Ok(())
}

/// `f0 = (k-t-1) θ(c,k,t+1) - C(k-t-1, 2) θ(c,k,t+2)`.
pub fn f0(c: usize, k: usize, t: usize) -> Result<BigInt> {
    check_k_ge(c, k, t, 2, "f0")?;
    let x = k - t - 1;
    Ok(int(x) * theta_unchecked(c, k, t + 1) - binomial(x, 2) * theta_unchecked(c, k, t + 2))
}

/// `|A_i(T,M)| = |{F : T ⊆ F, |F ∩ M| = i}|` for `i = t..=k-1`, where
/// `|T| = t`, `|M| = k-1` and `T ⊆ M`.
///
/// Obtained by inverting `|L_j| = C(k-t-1, j-t) θ(c,k,j) =
/// sum_{i>=j} C(i-t, j-t) |A_i|`.
pub fn anchored_class_counts(c: usize, k: usize, t: usize) -> Result<Vec<BigInt>> {
    check_k_ge(c, k, t, 1, "anchored class counts")?;
    let pairs: Vec<BigInt> = (t..k).map(|j| binomial(k - t - 1, j - t) * theta_unchecked(c, k, j)).collect();
    Ok((t..k)
        .map(|i| {
            (i..k).fold(BigInt::zero(), |acc, j| {
                let term = binomial(j - t, i - t) * &pairs[j - t];
                if (j - i) % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
        .collect())
}

/// Size of the `N1(T, L, M)` family:
/// `sum_{i=t+1}^{k-1} |A_i| + t (θ(c,k,k-2) - 1)`.
pub fn f1(c: usize, k: usize, t: usize) -> Result<BigInt> {
    check_k_ge(c, k, t, 2, "f1")?;
    let classes = anchored_class_counts(c, k, t)?;
    let first: BigInt = classes[1..].iter().sum();
    Ok(first + int(t) * (theta_unchecked(c, k, k - 2) - 1))
}

/// Size of the `N2(Z)` family from the closed form
/// `θ(c,k,t+1) [(t+2) - (t+1)(k-t-1) / C((k-t-1)c, c)]`.
pub fn f2(c: usize, k: usize, t: usize) -> Result<BigInt> {
    check_k_ge(c, k, t, 2, "f2")?;
    let x = k - t - 1;
    let bracket = BigRational::from_integer(int(t + 2)) - ratio(int((t + 1) * x), binomial(x * c, c));
    let value = bracket * BigRational::from_integer(theta_unchecked(c, k, t + 1));
    if !value.is_integer() {
        return Err(Error::NonIntegerResult(format!("f2({c},{k},{t}) = {value}")));
    }
    Ok(value.to_integer())
}

/// Size of `N2(Z)` by inclusion–exclusion over sub-frames of `Z`:
/// `sum_{j>=t+1} sum_{i>=j} (-1)^{i-j} C(i,j) C(t+2,i) θ(c,k,i)`.
pub fn f2_inclusion_exclusion(c: usize, k: usize, t: usize) -> Result<BigInt> {
    check_k_ge(c, k, t, 2, "f2")?;
    let z = t + 2;
    let mut total = BigInt::zero();
    for j in t + 1..=z {
        for i in j..=z {
            let term = binomial(i, j) * binomial(z, i) * theta_unchecked(c, k, i);
            if (i - j) % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
    }
    Ok(total)
}

/// Exact `base^exp` for a possibly negative exponent.
fn rational_pow(base: usize, exp: i64) -> BigRational {
    let b = BigRational::from_integer(int(base));
    if exp >= 0 {
        num_traits::pow(b, exp as usize)
    } else {
        num_traits::pow(b, (-exp) as usize).recip()
    }
}

/// The four auxiliary product bounds, each a rational multiple of
/// `θ(c,k,t+1)^2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HBounds {
    pub h1: ExactScalar,
    pub h2: ExactScalar,
    pub h3: ExactScalar,
    pub h4: ExactScalar,
}

/// Bracket factors of `h1..h4` before multiplying by `θ(c,k,t+1)^2`.
pub fn h_brackets(c: usize, k: usize, t: usize) -> Result<[BigRational; 4]> {
    check_k_ge(c, k, t, 3, "h bounds")?;
    let x = k - t - 1;
    let r = |v: usize| BigRational::from_integer(int(v));
    // q = 3(t+1) / (2 x^(c-3))
    let q = r(3 * (t + 1)) / (r(2) * rational_pow(x, c as i64 - 3));
    let h1 = (r((t + 1) * x) + &q) * (r(1) + &q);
    let h2 = (r(k - 1) + &q) * (r(2) + &q);
    let h3 = (r(x) + &q) * (r(x - 1) + &q);
    let h4 = r((t + 2) * (t + 2) - 1)
        + ratio(int(12 * (t + 1)) * int(x).pow(3), binomial(x * c, c))
        + r(9 * (t + 1) * (t + 1)) / (r(4) * rational_pow(x, 2 * c as i64 - 6));
    Ok([h1, h2, h3, h4])
}

pub fn h_bounds(c: usize, k: usize, t: usize) -> Result<HBounds> {
    let [b1, b2, b3, b4] = h_brackets(c, k, t)?;
    let theta_sq = BigRational::from_integer(theta_unchecked(c, k, t + 1).pow(2));
    let scale = |b: BigRational| ExactScalar(b * &theta_sq);
    Ok(HBounds { h1: scale(b1), h2: scale(b2), h3: scale(b3), h4: scale(b4) })
}

/// Bound on `|B| / θ(c,k,t+1)` for the residual family:
/// `3(t+1)(k-t-1)^3 / (2 C((k-t-1)c, c))`.
pub fn residual_ratio_bound(c: usize, k: usize, t: usize) -> Result<BigRational> {
    check_k_ge(c, k, t, 3, "residual bound")?;
    let x = k - t - 1;
    Ok(ratio(int(3 * (t + 1)) * int(x).pow(3), int(2) * binomial(x * c, c)))
}

/// `c >= 3 + 2 log2 t`, evaluated as `2^c >= 8 t^2`.
pub fn small_t_condition(c: usize, t: usize) -> bool {
    BigInt::one() << c >= int(8) * int(t).pow(2)
}

/// `c >= 4 log2 t + 7`, evaluated as `2^c >= 128 t^4`.
pub fn large_c_condition(c: usize, t: usize) -> bool {
    BigInt::one() << c >= int(128) * int(t).pow(4)
}

pub(crate) fn is_negative(v: &BigRational) -> bool {
    v.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn binomial_and_universe() {
        assert_eq!(binomial(6, 3), b(20));
        assert_eq!(binomial(3, 5), b(0));
        assert_eq!(binomial(0, 0), b(1));
        assert_eq!(binomial(60, 30).to_string(), "118264581564861424");
        assert_eq!(universe_size(2, 3), b(15));
        assert_eq!(universe_size(3, 3), b(280));
        assert_eq!(universe_size(3, 4), b(15400));
        assert_eq!(universe_size(3, 1), b(1));
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta(2, 3, 1).unwrap(), b(3));
        assert_eq!(theta(3, 3, 1).unwrap(), b(10));
        for (c, k) in [(2, 3), (5, 7), (3, 4)] {
            assert_eq!(theta(c, k, k).unwrap(), b(1));
        }
        assert!(matches!(theta(2, 3, 0), Err(Error::DomainError(_))));
        assert!(matches!(theta(2, 3, 4), Err(Error::DomainError(_))));
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_bound(2, 4, 1, 2).unwrap(), b(18));
        assert_eq!(g_bound(3, 3, 1, 2).unwrap(), b(4));
        assert_eq!(g_bound(3, 3, 1, 3).unwrap(), b(6));
        for (c, k, t) in [(3, 5, 2), (4, 6, 1), (2, 4, 4)] {
            assert_eq!(g_bound(c, k, t, t).unwrap(), theta(c, k, t).unwrap());
        }
        assert!(g_bound(2, 4, 2, 1).is_err());
    }

    #[test]
    fn pair_bound_examples() {
        assert_eq!(pair_product_bound(3, 3, 1, 1, 1).unwrap(), b(10));
        assert_eq!(pair_product_bound(2, 4, 1, 2, 2).unwrap(), g_bound(2, 4, 1, 2).unwrap());
        for tau_f in 2..=5 {
            assert_eq!(
                pair_product_bound(3, 5, 2, tau_f, 2).unwrap(),
                theta(3, 5, 2).unwrap() * binomial(tau_f, 2)
            );
        }
    }

    #[test]
    fn n_class_examples() {
        let got = n_class_counts(2, 4).unwrap();
        assert_eq!(got, vec![b(60), b(32), b(12), b(0), b(1)]);
        let got = n_class_counts(2, 3).unwrap();
        assert_eq!(got, vec![b(8), b(6), b(0), b(1)]);
        for (c, k) in [(3, 3), (4, 5), (2, 6)] {
            let got = n_class_counts(c, k).unwrap();
            assert_eq!(got[k], b(1));
            assert_eq!(got[k - 1], b(0));
            assert_eq!(got.iter().sum::<BigInt>(), universe_size(c, k));
        }
    }

    #[test]
    fn theta_c_identity_examples() {
        assert!(verify_theta_c_identity(2, 4, 2).unwrap());
        assert!(verify_theta_c_identity(2, 4, 1).unwrap());
        assert!(verify_theta_c_identity(2, 3, 2).unwrap());
        for c in 1..=4 {
            for k in 2..=5 {
                for i in 1..k {
                    assert!(verify_theta_c_identity(c, k, i).unwrap(), "({c},{k},{i})");
                }
            }
        }
        assert!(verify_theta_c_identity(2, 4, 4).is_err());
    }

    #[test]
    fn f_examples() {
        assert_eq!(f0(2, 4, 1).unwrap(), b(5));
        assert_eq!(f0(3, 4, 1).unwrap(), b(19));
        assert_eq!(f0(4, 5, 3).unwrap(), theta(4, 5, 4).unwrap());
        assert_eq!(f1(2, 4, 1).unwrap(), b(7));
        assert_eq!(f1(2, 5, 1).unwrap(), b(39));
        assert_eq!(f1(6, 4, 1).unwrap(), f2(6, 4, 1).unwrap());
        assert_eq!(f2(2, 4, 1).unwrap(), b(7));
        assert_eq!(f2(3, 4, 1).unwrap(), b(28));
        assert_eq!(f2(2, 5, 1).unwrap(), b(39));
        assert!(f0(3, 3, 2).is_err());
    }

    #[test]
    fn f2_routes_agree() {
        for c in 1..=8 {
            for k in 3..=8 {
                for t in 1..=k - 2 {
                    assert_eq!(f2(c, k, t).unwrap(), f2_inclusion_exclusion(c, k, t).unwrap(), "({c},{k},{t})");
                }
            }
        }
    }

    #[test]
    fn h_brackets_by_substitution() {
        let r = |n: i64, d: i64| BigRational::new(b(n), b(d));
        // (2,4,1): x = 2, q = 6 / (2 * 2^-1) = 6
        let [h1, h2, h3, h4] = h_brackets(2, 4, 1).unwrap();
        assert_eq!(h1, r(10 * 7, 1));
        assert_eq!(h2, r(9 * 8, 1));
        assert_eq!(h3, r(8 * 7, 1));
        // 8 + 12*2*8/C(4,2) + 9*4/(4 * 2^-2)
        assert_eq!(h4, r(8, 1) + r(192, 6) + r(36, 1));
        // k = t+3 makes the second factor of h3 equal to 1 + q.
        let [_, _, h3, _] = h_brackets(7, 5, 2).unwrap();
        let q = r(9, 32);
        assert_eq!(h3, (r(2, 1) + &q) * (r(1, 1) + &q));
        // (6,5,1): x = 3, q = 6 / (2*27) = 1/9
        let [h1, h2, _, _] = h_brackets(6, 5, 1).unwrap();
        assert_eq!(h1, (r(6, 1) + r(1, 9)) * (r(1, 1) + r(1, 9)));
        assert_eq!(h2, (r(4, 1) + r(1, 9)) * (r(2, 1) + r(1, 9)));
    }

    #[test]
    fn side_conditions_are_exact() {
        // c >= 3 + 2 log2 t
        assert!(small_t_condition(3, 1));
        assert!(!small_t_condition(4, 2));
        assert!(small_t_condition(5, 2));
        assert!(small_t_condition(7, 4));
        assert!(!small_t_condition(7, 5));
        // c >= 4 log2 t + 7
        assert!(large_c_condition(7, 1));
        assert!(!large_c_condition(6, 1));
        assert!(large_c_condition(11, 2));
        assert!(!large_c_condition(10, 2));
    }

    #[test]
    fn scalar_rendering() {
        let s: ExactScalar = "-14/4".parse().unwrap();
        assert_eq!(s.to_string(), "-7/2");
        assert_eq!(serde_json::to_string(&ExactScalar::from(100u64)).unwrap(), "\"100\"");
        let back: ExactScalar = serde_json::from_str("\"3/9\"").unwrap();
        assert_eq!(back.to_string(), "1/3");
    }
}
