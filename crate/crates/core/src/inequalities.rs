//! Exact evaluation of the comparison lemmas between the `g`, `f0`, `f1`,
//! `f2` and `h` quantities.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{
    f0, f1, f2, g_bound, h_bounds, is_negative, large_c_condition, small_t_condition, ExactScalar,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LemmaId {
    #[serde(rename = "6.1i")]
    L61i,
    #[serde(rename = "6.1ii")]
    L61ii,
    #[serde(rename = "6.2i")]
    L62i,
    #[serde(rename = "6.2ii")]
    L62ii,
    #[serde(rename = "6.3i")]
    L63i,
    #[serde(rename = "6.3ii")]
    L63ii,
    #[serde(rename = "6.3iii")]
    L63iii,
    #[serde(rename = "6.3iv")]
    L63iv,
    #[serde(rename = "6.4i")]
    L64i,
    #[serde(rename = "6.4ii")]
    L64ii,
    #[serde(rename = "6.4iii")]
    L64iii,
}

impl LemmaId {
    pub const ALL: [LemmaId; 11] = [
        LemmaId::L61i,
        LemmaId::L61ii,
        LemmaId::L62i,
        LemmaId::L62ii,
        LemmaId::L63i,
        LemmaId::L63ii,
        LemmaId::L63iii,
        LemmaId::L63iv,
        LemmaId::L64i,
        LemmaId::L64ii,
        LemmaId::L64iii,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::L61i => "6.1i",
            LemmaId::L61ii => "6.1ii",
            LemmaId::L62i => "6.2i",
            LemmaId::L62ii => "6.2ii",
            LemmaId::L63i => "6.3i",
            LemmaId::L63ii => "6.3ii",
            LemmaId::L63iii => "6.3iii",
            LemmaId::L63iv => "6.3iv",
            LemmaId::L64i => "6.4i",
            LemmaId::L64ii => "6.4ii",
            LemmaId::L64iii => "6.4iii",
        }
    }

    /// Whether the lemma carries the extra index `s`.
    pub fn takes_s(self) -> bool {
        self == LemmaId::L61i
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LemmaId::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown lemma id {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IneqParams {
    pub c: usize,
    pub k: usize,
    pub t: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s: Option<usize>,
}

/// Outcome of one exact comparison.
///
/// For strict items `holds` is `lhs < rhs`. For 6.4iii `holds` is
/// `lhs <= rhs` together with the equality pattern (equal exactly when
/// `k = t+3` or `(k,t) = (5,1)`), and `equality` records whether `lhs == rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IneqReport {
    pub lemma: LemmaId,
    pub params: IneqParams,
    pub holds: bool,
    pub lhs: ExactScalar,
    pub rhs: ExactScalar,
    pub margin: ExactScalar,
    /// Parameters lie outside the lemma's hypotheses; the value is still
    /// computed but is not evidence for or against the lemma.
    pub exploratory: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub equality: Option<bool>,
}

/// `c >= 3`, `k >= t+2` and (`c >= 3 + 2 log2 t` or `k >= 2t+2`).
pub fn product_hypothesis(c: usize, k: usize, t: usize) -> bool {
    c >= 3 && k >= t + 2 && (small_t_condition(c, t) || k >= 2 * t + 2)
}

/// `c >= 6`, `k >= t+3` and (`c >= 4 log2 t + 7` or `k >= 2t+3`).
pub fn nontrivial_hypothesis(c: usize, k: usize, t: usize) -> bool {
    c >= 6 && k >= t + 3 && (large_c_condition(c, t) || k >= 2 * t + 3)
}

/// Whether `(lemma, params)` satisfies the lemma's hypotheses.
pub fn in_hypothesis(lemma: LemmaId, p: &IneqParams) -> bool {
    let (c, k, t) = (p.c, p.k, p.t);
    if t == 0 {
        return false;
    }
    match lemma {
        LemmaId::L61i => {
            product_hypothesis(c, k, t) && matches!(p.s, Some(s) if s >= t && s + 2 <= k)
        }
        LemmaId::L61ii => product_hypothesis(c, k, t),
        LemmaId::L62i | LemmaId::L63i | LemmaId::L63ii | LemmaId::L63iii | LemmaId::L63iv | LemmaId::L64i => {
            nontrivial_hypothesis(c, k, t)
        }
        // Stated for k = t+3, where the hypothesis reduces to c >= 4 log2 t + 7.
        LemmaId::L62ii => k == t + 3 && nontrivial_hypothesis(c, k, t),
        LemmaId::L64ii => nontrivial_hypothesis(c, k, t) && k >= 2 * t + 4,
        LemmaId::L64iii => nontrivial_hypothesis(c, k, t) && k <= 2 * t + 3,
    }
}

fn scalar(v: BigInt) -> ExactScalar {
    ExactScalar::from_int(v)
}

fn max_scalar(a: ExactScalar, b: ExactScalar) -> ExactScalar {
    if a >= b {
        a
    } else {
        b
    }
}

fn square(v: BigInt) -> ExactScalar {
    scalar(&v * &v)
}

/// Evaluates one lemma item exactly.
pub fn check_inequality(lemma: LemmaId, params: IneqParams) -> Result<IneqReport> {
    let IneqParams { c, k, t, s } = params;
    if c == 0 || k == 0 || t == 0 || t > k {
        return Err(Error::DomainError(format!("need c, k >= 1 and 1 <= t <= k (c={c}, k={k}, t={t})")));
    }
    let mut params = params;
    if !lemma.takes_s() {
        params.s = None;
    }
    let (lhs, rhs) = match lemma {
        LemmaId::L61i => {
            let s = s.ok_or_else(|| Error::DomainError("6.1i needs s".into()))?;
            if s < t || s + 1 > k {
                return Err(Error::DomainError(format!("6.1i needs t <= s <= k-1 (s={s})")));
            }
            (scalar(g_bound(c, k, t, s + 1)?), scalar(g_bound(c, k, t, s)?))
        }
        LemmaId::L61ii => {
            if k < t + 2 {
                return Err(Error::DomainError(format!("6.1ii needs k >= t+2 (k={k}, t={t})")));
            }
            (scalar(g_bound(c, k, t, k)?), scalar(g_bound(c, k, t, k - 2)?))
        }
        LemmaId::L62i => {
            if k < t + 2 {
                return Err(Error::DomainError(format!("6.2i needs k >= t+2 (k={k}, t={t})")));
            }
            (scalar(g_bound(c, k, t, t + 1)? * g_bound(c, k, t, t + 2)?), square(f0(c, k, t)?))
        }
        LemmaId::L62ii => {
            let k3 = t + 3;
            params.k = k3;
            (scalar(g_bound(c, k3, t, t + 1)? * g_bound(c, k3, t, k3)?), square(f0(c, k3, t)?))
        }
        LemmaId::L63i | LemmaId::L63ii => {
            let h = h_bounds(c, k, t)?;
            let bound = max_scalar(square(f0(c, k, t)?), square(f2(c, k, t)?));
            (if lemma == LemmaId::L63i { h.h1 } else { h.h2 }, bound)
        }
        LemmaId::L63iii => (h_bounds(c, k, t)?.h3, square(f0(c, k, t)?)),
        LemmaId::L63iv => (h_bounds(c, k, t)?.h4, square(f2(c, k, t)?)),
        LemmaId::L64i => (scalar(f0(c, k, t)?), scalar(f1(c, k, t)?)),
        LemmaId::L64ii => (scalar(f2(c, k, t)?), scalar(f1(c, k, t)?)),
        LemmaId::L64iii => (scalar(f1(c, k, t)?), scalar(f2(c, k, t)?)),
    };
    let margin_value: BigRational = rhs.as_ratio() - lhs.as_ratio();
    let margin = ExactScalar::from_ratio(margin_value.clone());
    let (holds, equality) = if lemma == LemmaId::L64iii {
        let equal = lhs == rhs;
        let expected_equal = params.k == t + 3 || (params.k, t) == (5, 1);
        (!is_negative(&margin_value) && equal == expected_equal, Some(equal))
    } else {
        (lhs < rhs, None)
    };
    Ok(IneqReport {
        lemma,
        exploratory: !in_hypothesis(lemma, &params),
        params,
        holds,
        lhs,
        rhs,
        margin,
        equality,
    })
}

/// Inclusive integer range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
}

impl Span {
    pub fn new(lo: usize, hi: usize) -> Self {
        Span { lo, hi }
    }

    pub fn iter(self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl FromStr for Span {
    type Err = Error;

    /// Accepts `7`, `3-12`, `3..12` or `3..=12` (all inclusive).
    fn from_str(s: &str) -> Result<Self> {
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| Error::Parse(format!("range {s:?}: {e}")));
        let (lo, hi) = if let Some((a, b)) = s.split_once("..=") {
            (parse(a)?, parse(b)?)
        } else if let Some((a, b)) = s.split_once("..") {
            (parse(a)?, parse(b)?)
        } else if let Some((a, b)) = s.split_once('-') {
            (parse(a)?, parse(b)?)
        } else {
            let v = parse(s)?;
            (v, v)
        };
        if lo > hi {
            return Err(Error::Parse(format!("empty range {s:?}")));
        }
        Ok(Span { lo, hi })
    }
}

/// Parameter grid for the inequality sweep. `k` is additionally clipped
/// per `t` to `[t+2, 3t+8]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IneqGrid {
    pub c: Span,
    pub t: Span,
    pub k: Option<Span>,
}

impl Default for IneqGrid {
    fn default() -> Self {
        IneqGrid { c: Span::new(3, 12), t: Span::new(1, 8), k: None }
    }
}

impl IneqGrid {
    fn k_values(&self, t: usize) -> impl Iterator<Item = usize> {
        let (mut lo, mut hi) = (t + 2, 3 * t + 8);
        if let Some(span) = self.k {
            lo = lo.max(span.lo);
            hi = hi.min(span.hi);
        }
        lo..=hi
    }

    /// Every `(lemma, params)` point on the grid whose formulas are defined.
    /// With `hypothesis_only`, points outside the lemma's hypotheses are
    /// dropped.
    pub fn points(&self, lemmas: &[LemmaId], hypothesis_only: bool) -> Vec<(LemmaId, IneqParams)> {
        let mut out = Vec::new();
        for &lemma in lemmas {
            for c in self.c.iter() {
                for t in self.t.iter() {
                    for k in self.k_values(t) {
                        let base = IneqParams { c, k, t, s: None };
                        let candidates: Vec<IneqParams> = match lemma {
                            LemmaId::L61i => (t..=k - 2).map(|s| IneqParams { s: Some(s), ..base }).collect(),
                            LemmaId::L62ii if k != t + 3 => Vec::new(),
                            LemmaId::L63i
                            | LemmaId::L63ii
                            | LemmaId::L63iii
                            | LemmaId::L63iv
                            | LemmaId::L64i
                            | LemmaId::L64ii
                            | LemmaId::L64iii
                            | LemmaId::L62ii
                                if k < t + 3 =>
                            {
                                Vec::new()
                            }
                            _ => vec![base],
                        };
                        for p in candidates {
                            if !hypothesis_only || in_hypothesis(lemma, &p) {
                                out.push((lemma, p));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Evaluates every point of the grid in parallel. Reports come back sorted
/// by `(lemma, c, k, t, s)`.
pub fn check_grid(grid: &IneqGrid, lemmas: &[LemmaId], hypothesis_only: bool) -> Result<Vec<IneqReport>> {
    let points = grid.points(lemmas, hypothesis_only);
    let mut reports = points
        .into_par_iter()
        .map(|(lemma, p)| check_inequality(lemma, p))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by_key(|a| (a.lemma, a.params));
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: usize, k: usize, t: usize, s: Option<usize>) -> IneqParams {
        IneqParams { c, k, t, s }
    }

    #[test]
    fn lemma_61_examples() {
        let r = check_inequality(LemmaId::L61i, p(3, 3, 1, Some(1))).unwrap();
        assert_eq!((r.lhs.to_string(), r.rhs.to_string()), ("4".into(), "10".into()));
        assert!(r.holds && !r.exploratory);
        let r = check_inequality(LemmaId::L61ii, p(3, 3, 1, None)).unwrap();
        assert_eq!((r.lhs.to_string(), r.rhs.to_string()), ("6".into(), "10".into()));
        assert!(r.holds);
        assert_eq!(r.margin.to_string(), "4");
    }

    #[test]
    fn lemma_64iii_equality_cases() {
        for t in 1..=3 {
            let r = check_inequality(LemmaId::L64iii, p(20, t + 3, t, None)).unwrap();
            assert_eq!(r.equality, Some(true), "k = t+3, t={t}");
            assert!(r.holds);
        }
        let r = check_inequality(LemmaId::L64iii, p(6, 5, 1, None)).unwrap();
        assert_eq!(r.equality, Some(true));
        assert!(r.holds && !r.exploratory);
        let r = check_inequality(LemmaId::L64iii, p(12, 6, 2, None)).unwrap();
        assert_eq!(r.equality, Some(false));
        assert!(r.holds);
    }

    #[test]
    fn lemma_62ii_pins_k() {
        let r = check_inequality(LemmaId::L62ii, p(7, 9, 1, None)).unwrap();
        assert_eq!(r.params.k, 4);
    }

    #[test]
    fn hypothesis_flags() {
        // c = 2 is outside every lemma.
        let r = check_inequality(LemmaId::L61ii, p(2, 4, 1, None)).unwrap();
        assert!(r.exploratory);
        assert!(!nontrivial_hypothesis(6, 4, 1));
        assert!(nontrivial_hypothesis(6, 5, 1));
        assert!(nontrivial_hypothesis(7, 4, 1));
        assert!(check_inequality(LemmaId::L62i, p(6, 2, 1, None)).is_err());
    }

    #[test]
    fn span_parsing() {
        assert_eq!("3-12".parse::<Span>().unwrap(), Span::new(3, 12));
        assert_eq!("3..12".parse::<Span>().unwrap(), Span::new(3, 12));
        assert_eq!("5".parse::<Span>().unwrap(), Span::new(5, 5));
        assert!("9-3".parse::<Span>().is_err());
    }

    #[test]
    fn lemma_id_round_trip() {
        for l in LemmaId::ALL {
            assert_eq!(l.as_str().parse::<LemmaId>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{l}\""));
        }
    }
}
