//! Maximal cross `t`-intersecting pairs over an enumerated universe.
//!
//! Two partitions are related when they share at least `t` blocks. For a
//! set `H` of ids, `cl(H)` is the set of ids related to every member of `H`;
//! a maximal pair is `(F, G)` with `G = cl(F)` and `F = cl(G)`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{canonical_partition, common_blocks_of, Kind, FamilySpec};
use crate::covers::covering_number;
use crate::error::{Error, Result};
use crate::partition::{Permutation, UniformPartition};
use crate::universe::{IdSet, PartitionUniverse};

/// Largest universe the search commands accept by default.
pub const DEFAULT_SEARCH_ITEMS: usize = 20_000;
/// Largest universe for the `2^n` subset scans.
pub const EXHAUSTIVE_ITEMS: usize = 20;

/// The "shares at least `t` blocks" relation on a universe, stored as one
/// ball per item.
#[derive(Clone, Debug)]
pub struct CrossContext {
    universe: Arc<PartitionUniverse>,
    t: usize,
    balls: Vec<IdSet>,
}

pub fn build_context(universe: &Arc<PartitionUniverse>, t: usize) -> Result<CrossContext> {
    build_context_capped(universe, t, DEFAULT_SEARCH_ITEMS)
}

pub fn build_context_capped(universe: &Arc<PartitionUniverse>, t: usize, max_items: usize) -> Result<CrossContext> {
    universe.params().check_t(t)?;
    if universe.len() > max_items {
        return Err(Error::CapExceeded(format!("{} items exceed the search cap {max_items}", universe.len())));
    }
    let balls = (0..universe.len())
        .into_par_iter()
        .map(|i| universe.ball(universe.get(i), t))
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossContext { universe: Arc::clone(universe), t, balls })
}

impl CrossContext {
    pub fn universe(&self) -> &Arc<PartitionUniverse> {
        &self.universe
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn ball(&self, id: usize) -> &IdSet {
        &self.balls[id]
    }

    /// Ids related to every member of `h`; all ids for an empty `h`.
    pub fn closure(&self, h: &IdSet) -> IdSet {
        let mut out = self.universe.full_set();
        for i in h.ones() {
            out.intersect_with(&self.balls[i]);
        }
        out
    }

    /// Complement of `closure(b)`: ids sharing fewer than `t` blocks with
    /// some member of `b`.
    pub fn neighbourhood(&self, b: &IdSet) -> IdSet {
        let mut out = self.universe.full_set();
        out.difference_with(&self.closure(b));
        out
    }

    /// The maximal pair generated by `h`: `(cl(cl(h)), cl(h))`.
    pub fn concept_of(&self, h: &IdSet) -> MaximalPair {
        let g = self.closure(h);
        let f = self.closure(&g);
        MaximalPair::from_sets(&f, &g)
    }

    pub fn set_of(&self, ids: &[u32]) -> IdSet {
        self.universe.id_set(ids.iter().map(|&i| i as usize))
    }

    /// Both fixed-point equations hold.
    pub fn is_maximal(&self, pair: &MaximalPair) -> bool {
        let (f, g) = (self.set_of(&pair.f), self.set_of(&pair.g));
        self.closure(&f) == g && self.closure(&g) == f
    }

    pub fn members(&self, ids: &[u32]) -> Vec<UniformPartition> {
        ids.iter().map(|&i| self.universe.get(i as usize).clone()).collect()
    }

    /// Sizes, non-triviality flags and covering numbers of a pair.
    pub fn describe(&self, pair: &MaximalPair) -> PairDetails {
        let t = self.t;
        let side = |ids: &[u32]| -> (bool, Option<usize>) {
            if ids.is_empty() {
                return (false, None);
            }
            let members = self.members(ids);
            let nontrivial = common_blocks_of(&members).is_some_and(|c| c.len() < t);
            (nontrivial, covering_number(&members, t).ok().map(|r| r.tau))
        };
        let (f_nontrivial, tau_f) = side(&pair.f);
        let (g_nontrivial, tau_g) = side(&pair.g);
        PairDetails { product: pair.product(), sum: pair.sum(), f_nontrivial, g_nontrivial, tau_f, tau_g }
    }
}

/// A maximal pair as sorted id lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MaximalPair {
    #[serde(rename = "F")]
    pub f: Vec<u32>,
    #[serde(rename = "G")]
    pub g: Vec<u32>,
}

impl MaximalPair {
    pub fn from_sets(f: &IdSet, g: &IdSet) -> Self {
        MaximalPair { f: f.ones().map(|i| i as u32).collect(), g: g.ones().map(|i| i as u32).collect() }
    }

    pub fn product(&self) -> u64 {
        self.f.len() as u64 * self.g.len() as u64
    }

    pub fn sum(&self) -> u64 {
        (self.f.len() + self.g.len()) as u64
    }

    /// One side empty: `(∅, all)` or `(all, ∅)`.
    pub fn is_degenerate(&self) -> bool {
        self.f.is_empty() || self.g.is_empty()
    }

    pub fn swapped(&self) -> Self {
        MaximalPair { f: self.g.clone(), g: self.f.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairDetails {
    pub product: u64,
    pub sum: u64,
    pub f_nontrivial: bool,
    pub g_nontrivial: bool,
    pub tau_f: Option<usize>,
    pub tau_g: Option<usize>,
}

/// Every maximal pair, found by scanning all `2^n` subsets. Includes the two
/// pairs with an empty side.
pub fn exhaustive_pairs(ctx: &CrossContext) -> Result<Vec<MaximalPair>> {
    let n = ctx.len();
    if n > EXHAUSTIVE_ITEMS {
        return Err(Error::CapExceeded(format!("{n} items exceed the subset-scan cap {EXHAUSTIVE_ITEMS}")));
    }
    let table = closure_table(ctx);
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    for &g in &table {
        seen.insert((table[g as usize], g));
    }
    let mut out: Vec<MaximalPair> = seen
        .into_iter()
        .map(|(f, g)| MaximalPair { f: mask_ids(f), g: mask_ids(g) })
        .collect();
    out.sort();
    Ok(out)
}

/// `table[h] = cl(h)` for every subset mask `h`.
fn closure_table(ctx: &CrossContext) -> Vec<u32> {
    let n = ctx.len();
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let balls: Vec<u32> = ctx.balls.iter().map(|b| b.ones().fold(0u32, |m, i| m | 1 << i)).collect();
    let mut table = vec![full; 1usize << n];
    for h in 1..table.len() {
        let low = h.trailing_zeros() as usize;
        table[h] = table[h & (h - 1)] & balls[low];
    }
    table
}

fn mask_ids(mask: u32) -> Vec<u32> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

/// Every maximal pair, found by closing the set of balls under
/// intersection. Independent of both the subset scan and the lectic
/// enumeration; fails once more than `cap` pairs are found.
pub fn intersection_closure_pairs(ctx: &CrossContext, cap: usize) -> Result<Vec<MaximalPair>> {
    let mut intents: HashSet<IdSet> = HashSet::new();
    intents.insert(ctx.universe.full_set());
    for ball in &ctx.balls {
        let fresh: Vec<IdSet> = intents
            .iter()
            .map(|s| {
                let mut x = s.clone();
                x.intersect_with(ball);
                x
            })
            .filter(|x| !intents.contains(x))
            .collect();
        intents.extend(fresh);
        if intents.len() > cap {
            return Err(Error::CapExceeded(format!("more than {cap} maximal pairs")));
        }
    }
    let mut out: Vec<MaximalPair> =
        intents.into_par_iter().map(|g| MaximalPair::from_sets(&ctx.closure(&g), &g)).collect();
    out.sort();
    Ok(out)
}

/// Output of lectic enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConceptRun {
    /// Pairs in lectic order of their first side.
    pub pairs: Vec<MaximalPair>,
    pub complete: bool,
}

/// Lectic (NextClosure) enumeration of maximal pairs, stopping after `cap`.
pub fn enumerate_concepts(ctx: &CrossContext, cap: usize) -> ConceptRun {
    let n = ctx.len();
    let extent = |h: &IdSet| ctx.closure(&ctx.closure(h));
    let mut current = extent(&ctx.universe.empty_set());
    let mut pairs = Vec::new();
    loop {
        if pairs.len() >= cap {
            return ConceptRun { pairs, complete: false };
        }
        pairs.push(MaximalPair::from_sets(&current, &ctx.closure(&current)));
        let mut base = current.clone();
        let mut next = None;
        for i in (0..n).rev() {
            if base.contains(i) {
                base.set(i, false);
                continue;
            }
            let mut probe = base.clone();
            probe.insert(i);
            let closed = extent(&probe);
            if closed.count_ones(..i) == base.count_ones(..i) {
                next = Some(closed);
                break;
            }
        }
        match next {
            Some(x) => current = x,
            None => return ConceptRun { pairs, complete: true },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Product,
    Sum,
}

impl Objective {
    fn value(self, f: usize, g: usize) -> u64 {
        match self {
            Objective::Product => f as u64 * g as u64,
            Objective::Sum => (f + g) as u64,
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Objective::Product),
            "sum" => Ok(Objective::Sum),
            _ => Err(Error::Parse(format!("unknown objective {s:?}"))),
        }
    }
}

/// Extra conditions an optimal pair must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    None,
    /// Neither side has `t` blocks common to all its members.
    BothNontrivial,
    /// The second side has covering number at least this value.
    TauGAtLeast(usize),
}

impl Constraint {
    /// Constraints that do not distinguish the two sides.
    fn is_symmetric(self) -> bool {
        !matches!(self, Constraint::TauGAtLeast(_))
    }

    fn admits(self, ctx: &CrossContext, pair: &MaximalPair) -> bool {
        match self {
            Constraint::None => true,
            Constraint::BothNontrivial => {
                let d = |ids: &[u32]| common_blocks_of(&ctx.members(ids)).is_some_and(|c| c.len() < ctx.t);
                d(&pair.f) && d(&pair.g)
            }
            Constraint::TauGAtLeast(v) => match covering_number(&ctx.members(&pair.g), ctx.t) {
                Ok(r) => r.tau >= v,
                Err(Error::NoCover) => true,
                Err(_) => false,
            },
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::None => f.write_str("none"),
            Constraint::BothNontrivial => f.write_str("nontrivial"),
            Constraint::TauGAtLeast(v) => write!(f, "tau-g-min={v}"),
        }
    }
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Constraint::None),
            "nontrivial" | "both-nontrivial" => Ok(Constraint::BothNontrivial),
            _ => s
                .strip_prefix("tau-g-min=")
                .and_then(|v| v.parse().ok())
                .map(Constraint::TauGAtLeast)
                .ok_or_else(|| Error::Parse(format!("unknown constraint {s:?}"))),
        }
    }
}

impl Serialize for Constraint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Exhaustive,
    Concepts,
    Bnb,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "exhaustive" => Ok(Method::Exhaustive),
            "concepts" => Ok(Method::Concepts),
            "bnb" => Ok(Method::Bnb),
            _ => Err(Error::Parse(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub method: Method,
    /// Concept count for `concepts`, node count for `bnb`.
    pub cap: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { method: Method::Auto, cap: 50_000_000 }
    }
}

/// Certified optimum. With a symmetric constraint, optima are listed with
/// `|F| <= |G|`; with a constraint on `G` both orientations are considered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchOutcome {
    pub objective: Objective,
    pub constraint: Constraint,
    /// `None` when no non-degenerate pair meets the constraint.
    pub value: Option<u64>,
    pub certified: bool,
    pub certificate: &'static str,
    pub method: Method,
    pub optima: Vec<MaximalPair>,
    #[serde(skip)]
    pub nodes: u64,
}

pub fn max_product(ctx: &CrossContext, constraint: Constraint, opts: &SearchOptions) -> Result<SearchOutcome> {
    optimize(ctx, Objective::Product, constraint, opts)
}

pub fn max_sum(ctx: &CrossContext, opts: &SearchOptions) -> Result<SearchOutcome> {
    optimize(ctx, Objective::Sum, Constraint::None, opts)
}

pub fn optimize(
    ctx: &CrossContext,
    objective: Objective,
    constraint: Constraint,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    let method = match opts.method {
        Method::Auto if ctx.len() <= EXHAUSTIVE_ITEMS => Method::Exhaustive,
        Method::Auto => Method::Bnb,
        m => m,
    };
    let (pairs, nodes, certificate) = match method {
        Method::Exhaustive => {
            let pairs = exhaustive_pairs(ctx)?;
            let n = pairs.len() as u64;
            (pairs, n, "subset-scan-complete")
        }
        Method::Concepts => {
            let run = enumerate_concepts(ctx, opts.cap as usize);
            if !run.complete {
                return Err(Error::Inconclusive(format!("concept enumeration stopped at cap {}", opts.cap)));
            }
            let n = run.pairs.len() as u64;
            (run.pairs, n, "concept-enumeration-complete")
        }
        Method::Bnb => {
            let run = BranchAndBound::new(ctx, objective, constraint, opts.cap).run()?;
            (run.0, run.1, "bnb-tree-exhausted")
        }
        Method::Auto => unreachable!("resolved above"),
    };
    let oriented: BTreeSet<MaximalPair> = pairs
        .into_iter()
        .filter(|p| !p.is_degenerate())
        .flat_map(|p| orientations(p, constraint))
        .collect();
    let mut best: Option<u64> = None;
    let mut optima = Vec::new();
    let mut scored: Vec<(u64, MaximalPair)> =
        oriented.into_iter().map(|p| (objective.value(p.f.len(), p.g.len()), p)).collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    for (v, p) in scored {
        if best.is_some_and(|b| v < b) {
            break;
        }
        if constraint.admits(ctx, &p) {
            best = Some(v);
            optima.push(p);
        }
    }
    optima.sort();
    Ok(SearchOutcome { objective, constraint, value: best, certified: true, certificate, method, optima, nodes })
}

fn orientations(p: MaximalPair, constraint: Constraint) -> Vec<MaximalPair> {
    if constraint.is_symmetric() {
        if p.f.len() <= p.g.len() {
            vec![p]
        } else {
            vec![]
        }
    } else {
        let s = p.swapped();
        vec![p, s]
    }
}

/// Close-by-One enumeration of first sides `F` with `|F| <= |G|`, pruning
/// subtrees whose objective bound falls below the incumbent.
struct BranchAndBound<'a> {
    ctx: &'a CrossContext,
    objective: Objective,
    constraint: Constraint,
    cap: u64,
    incumbent: AtomicU64,
    nodes: AtomicU64,
    aborted: AtomicBool,
}

impl<'a> BranchAndBound<'a> {
    fn new(ctx: &'a CrossContext, objective: Objective, constraint: Constraint, cap: u64) -> Self {
        BranchAndBound {
            ctx,
            objective,
            constraint,
            cap,
            incumbent: AtomicU64::new(0),
            nodes: AtomicU64::new(0),
            aborted: AtomicBool::new(false),
        }
    }

    fn seed(&self) {
        let u = &self.ctx.universe;
        let (params, t) = (u.params(), self.ctx.t);
        let mut seeds = Vec::new();
        for kind in [Kind::Star, Kind::SumPair, Kind::N2] {
            if let Ok(pair) = FamilySpec::canonical(kind, params, t).and_then(|s| s.realize(u)) {
                seeds.push(pair.first.ids().expect("realised").clone());
            }
        }
        seeds.push(u.id_set([u.id_of(&canonical_partition(params)).expect("canonical member")]));
        for h in seeds {
            let pair = self.ctx.concept_of(&h);
            if pair.is_degenerate() {
                continue;
            }
            for p in [pair.clone(), pair.swapped()] {
                if self.constraint.admits(self.ctx, &p) {
                    self.incumbent.fetch_max(self.objective.value(p.f.len(), p.g.len()), Ordering::Relaxed);
                }
            }
        }
    }

    fn run(self) -> Result<(Vec<MaximalPair>, u64)> {
        self.seed();
        let ctx = self.ctx;
        let root_g = ctx.universe.full_set();
        let root_f = ctx.closure(&root_g);
        let mut found = Vec::new();
        self.visit(&root_f, &root_g, &mut found);
        let branches: Vec<Vec<MaximalPair>> = (0..ctx.len())
            .into_par_iter()
            .map(|j| {
                let mut local = Vec::new();
                self.child(&root_f, &root_g, j, &mut local);
                local
            })
            .collect();
        if self.aborted.load(Ordering::Relaxed) {
            return Err(Error::Inconclusive(format!("branch-and-bound stopped after {} nodes", self.cap)));
        }
        found.extend(branches.into_iter().flatten());
        Ok((found, self.nodes.load(Ordering::Relaxed)))
    }

    fn visit(&self, f: &IdSet, g: &IdSet, found: &mut Vec<MaximalPair>) {
        let (a, b) = (f.count_ones(..), g.count_ones(..));
        if a == 0 || b == 0 || a > b {
            return;
        }
        if self.objective.value(a, b) < self.incumbent.load(Ordering::Relaxed) {
            return;
        }
        let pair = MaximalPair::from_sets(f, g);
        for p in orientations(pair, self.constraint) {
            if self.constraint.admits(self.ctx, &p) {
                self.incumbent.fetch_max(self.objective.value(a, b), Ordering::Relaxed);
                found.push(p);
            }
        }
    }

    /// Child of node `(f, g)` generated by adding `j`, then its subtree.
    fn child(&self, f: &IdSet, g: &IdSet, j: usize, found: &mut Vec<MaximalPair>) {
        if f.contains(j) || self.aborted.load(Ordering::Relaxed) {
            return;
        }
        let mut g2 = g.clone();
        g2.intersect_with(&self.ctx.balls[j]);
        let b = g2.count_ones(..);
        let a_min = f.count_ones(..) + 1;
        if b == 0 || a_min > b || self.objective.value(b, b) < self.incumbent.load(Ordering::Relaxed) {
            return;
        }
        let f2 = self.ctx.closure(&g2);
        if f2.count_ones(..j) != f.count_ones(..j) {
            return;
        }
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.cap {
            self.aborted.store(true, Ordering::Relaxed);
            return;
        }
        self.visit(&f2, &g2, found);
        if self.subtree_bound(&f2, &g2, j) < self.incumbent.load(Ordering::Relaxed) {
            return;
        }
        for next in j + 1..self.ctx.len() {
            self.child(&f2, &g2, next, found);
        }
    }

    /// Best objective any proper descendant of `(f, g)` can reach.
    fn subtree_bound(&self, f: &IdSet, g: &IdSet, last: usize) -> u64 {
        let a = f.count_ones(..);
        let mut degrees: Vec<usize> = (last + 1..self.ctx.len())
            .filter(|&u| !f.contains(u))
            .map(|u| self.ctx.balls[u].intersection_count(g))
            .filter(|&d| d > a)
            .collect();
        degrees.sort_unstable_by(|x, y| y.cmp(x));
        let mut best = 0;
        for (m, &d) in degrees.iter().enumerate() {
            let size = a + m + 1;
            if size > d {
                break;
            }
            best = best.max(self.objective.value(size, d));
        }
        best
    }
}

/// Deficiency `|N(B)| - |B|` of a set `B` of ids, where `N(B)` is the set of
/// ids sharing fewer than `t` blocks with some member of `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FragmentReport {
    #[serde(rename = "B")]
    pub b: Vec<u32>,
    pub deficiency: i64,
    pub is_fragment: bool,
    pub trivial: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FragmentMode {
    Exhaustive,
    /// Only closed sets `B = cl(cl(B))` are examined.
    ClosedSets,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FragmentScan {
    pub mode: FragmentMode,
    pub min_deficiency: Option<i64>,
    pub achievers: Vec<FragmentReport>,
}

/// Minimum deficiency over non-empty `B` with `N(B)` not everything, and
/// every `B` attaining it.
pub fn fragment_scan(ctx: &CrossContext, mode: FragmentMode, opts: &SearchOptions) -> Result<FragmentScan> {
    let n = ctx.len() as i64;
    let ball_size = ctx.balls.first().map_or(0, |b| b.count_ones(..));
    let trivial = |b: &[u32]| b.len() == 1 || b.len() == ball_size;
    let mut scored: Vec<(i64, Vec<u32>)> = match mode {
        FragmentMode::Exhaustive => {
            if ctx.len() > EXHAUSTIVE_ITEMS {
                return Err(Error::CapExceeded(format!("{} items exceed the subset-scan cap", ctx.len())));
            }
            let table = closure_table(ctx);
            let mut best = i64::MAX;
            let mut hits = Vec::new();
            for (h, &cl) in table.iter().enumerate().skip(1) {
                if cl == 0 {
                    continue;
                }
                let d = n - cl.count_ones() as i64 - h.count_ones() as i64;
                if d < best {
                    best = d;
                    hits.clear();
                }
                if d == best {
                    hits.push((d, mask_ids(h as u32)));
                }
            }
            hits
        }
        FragmentMode::ClosedSets => {
            let out = max_sum(ctx, opts)?;
            let mut v: Vec<(i64, Vec<u32>)> = out
                .optima
                .iter()
                .flat_map(|p| [p.f.clone(), p.g.clone()])
                .map(|b| (n - out.value.unwrap_or(0) as i64, b))
                .collect();
            v.sort();
            v.dedup();
            v
        }
    };
    scored.sort();
    let min_deficiency = scored.first().map(|x| x.0);
    let achievers = scored
        .into_iter()
        .map(|(d, b)| FragmentReport { trivial: trivial(&b), b, deficiency: d, is_fragment: true })
        .collect();
    Ok(FragmentScan { mode, min_deficiency, achievers })
}

/// Result of testing `|σ(U) ∩ U| ∈ {0, 1, |U|}` over ground-set permutations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemiImprimitivity {
    pub exhaustive: bool,
    pub permutations: u64,
    pub holds: bool,
    /// 1-based images and the offending overlap size.
    pub violation: Option<(Vec<usize>, usize)>,
}

/// Exhaustive over all `n!` permutations when that is at most `budget`,
/// otherwise `budget` seeded random permutations.
pub fn semi_imprimitive_check(universe: &PartitionUniverse, ids: &IdSet, budget: u64, seed: u64) -> Result<SemiImprimitivity> {
    let n = universe.params().n();
    let members: Vec<usize> = ids.ones().collect();
    let size = members.len();
    let test = |images: Vec<usize>| -> Result<Option<(Vec<usize>, usize)>> {
        let sigma = Permutation::new(images)?;
        let mut overlap = 0;
        for &m in &members {
            if ids.contains(universe.permuted_id(&sigma, m)?) {
                overlap += 1;
            }
        }
        Ok((overlap > 1 && overlap < size).then(|| (sigma.images().iter().map(|x| x + 1).collect(), overlap)))
    };
    let total: Option<u64> = (1..=n as u64).try_fold(1u64, |acc, x| acc.checked_mul(x));
    let exhaustive = total.is_some_and(|t| t <= budget);
    let (checked, violation) = if exhaustive {
        use itertools::Itertools;
        let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
        let found = perms.into_par_iter().map(test).collect::<Result<Vec<_>>>()?.into_iter().flatten().next();
        (total.expect("bounded"), found)
    } else {
        let found = (0..budget)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                let mut images: Vec<usize> = (0..n).collect();
                images.shuffle(&mut rng);
                test(images)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .next();
        (budget, found)
    };
    Ok(SemiImprimitivity { exhaustive, permutations: checked, holds: violation.is_none(), violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::star;
    use crate::partition::{PartialPartition, Params};
    use crate::universe::enumerate_universe;

    fn ctx(c: usize, k: usize, t: usize) -> CrossContext {
        let u = Arc::new(enumerate_universe(Params::new(c, k).unwrap()).unwrap());
        build_context(&u, t).unwrap()
    }

    #[test]
    fn ball_sizes() {
        assert!(ctx(3, 3, 1).balls.iter().all(|b| b.count_ones(..) == 28));
        let x = ctx(2, 3, 1);
        assert!(x.balls.iter().all(|b| b.count_ones(..) == 7));
        assert_eq!(x.neighbourhood(&x.set_of(&[0])).count_ones(..), 8);
        assert!(ctx(2, 3, 3).balls.iter().all(|b| b.count_ones(..) == 1));
    }

    #[test]
    fn closure_examples() {
        let x = ctx(3, 3, 1);
        let c = x.set_of(&[5]);
        assert_eq!(x.closure(&c), x.ball(5).clone());
        assert_eq!(x.closure(x.ball(5)), c);
        assert_eq!(x.closure(&x.universe.empty_set()).count_ones(..), 280);
        let core = PartialPartition::from_one_based(x.universe.params(), &[vec![1, 2, 3]]).unwrap();
        let s = star(&x.universe, core, 1).unwrap();
        let ids = s.ids().unwrap();
        assert_eq!(&x.closure(ids), ids);
    }

    #[test]
    fn oracles_agree_small() {
        for t in 1..=3 {
            let x = ctx(2, 3, t);
            let scan = exhaustive_pairs(&x).unwrap();
            let run = enumerate_concepts(&x, 1_000_000);
            assert!(run.complete);
            let mut lectic = run.pairs.clone();
            lectic.sort();
            assert_eq!(lectic, scan);
            assert_eq!(intersection_closure_pairs(&x, 1_000_000).unwrap(), scan);
            assert!(scan.iter().all(|p| x.is_maximal(p)));
        }
        let x = ctx(2, 3, 3);
        let pairs = exhaustive_pairs(&x).unwrap();
        assert_eq!(pairs.len(), 17);
    }

    #[test]
    fn small_optima() {
        let x = ctx(2, 3, 1);
        let scan = exhaustive_pairs(&x).unwrap();
        assert!(scan.iter().filter(|p| p.f.len() == 1 && p.g.len() == 7).count() == 15);
        let opts = SearchOptions::default();
        let prod = max_product(&x, Constraint::None, &opts).unwrap();
        assert_eq!(prod.value, Some(9));
        let sum = max_sum(&x, &opts).unwrap();
        assert_eq!(sum.value, Some(8));
        for method in [Method::Bnb, Method::Concepts] {
            let o = SearchOptions { method, ..opts };
            assert_eq!(max_product(&x, Constraint::None, &o).unwrap().optima, prod.optima);
            assert_eq!(max_sum(&x, &o).unwrap().optima, sum.optima);
            let tau = Constraint::TauGAtLeast(2);
            assert_eq!(
                max_product(&x, tau, &o).unwrap().optima,
                max_product(&x, tau, &opts).unwrap().optima
            );
        }
        assert_eq!(max_product(&x, Constraint::TauGAtLeast(2), &opts).unwrap().value, Some(9));
        assert_eq!(max_sum(&ctx(2, 3, 3), &opts).unwrap().value, Some(2));
    }

    #[test]
    fn fragments_small() {
        let x = ctx(2, 3, 1);
        let opts = SearchOptions::default();
        let ex = fragment_scan(&x, FragmentMode::Exhaustive, &opts).unwrap();
        let closed = fragment_scan(&x, FragmentMode::ClosedSets, &opts).unwrap();
        assert_eq!(ex.min_deficiency, closed.min_deficiency);
        assert_eq!(ex.min_deficiency, Some(15 - 8));
    }

    #[test]
    fn semi_imprimitive_examples() {
        let x = ctx(2, 3, 1);
        let u = &x.universe;
        let one = u.id_set([3]);
        assert!(semi_imprimitive_check(u, &one, 1000, 0).unwrap().holds);
        let all = u.full_set();
        assert!(semi_imprimitive_check(u, &all, 1000, 0).unwrap().holds);
        let core = PartialPartition::from_one_based(u.params(), &[vec![1, 2]]).unwrap();
        let s = star(u, core, 1).unwrap();
        let r = semi_imprimitive_check(u, s.ids().unwrap(), 1000, 0).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.permutations, 720);
    }
}
