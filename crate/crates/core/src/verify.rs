//! End-to-end checks of the main statements, each producing a versioned
//! report with a verdict and its evidence.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use itertools::Itertools;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::classify::{classify_optimum, PairClass};
use crate::constructions::{find_e_system, is_cross_intersecting, lists_cross_intersect, FamilySpec, Kind, Variant};
use crate::counting::{f2, f2_inclusion_exclusion, n_class_counts, pair_product_bound, theta, verify_theta_c_identity};
use crate::covers::{covering_number, residual_with, union_structure_with, CoverReport};
use crate::error::{Error, Result};
use crate::inequalities::{check_grid, product_hypothesis, IneqGrid, LemmaId};
use crate::partition::{PartialPartition, Params};
use crate::search::{
    build_context, enumerate_concepts, exhaustive_pairs, max_product, max_sum, Constraint, CrossContext, MaximalPair,
    SearchOptions, SearchOutcome, EXHAUSTIVE_ITEMS,
};
use crate::universe::{EnumerationCap, PartitionUniverse, UniverseCache};

pub const REPORT_SCHEMA: &str = "uniset-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremId {
    ProductMax,
    NontrivialFormula,
    SumMax,
    TwoAboveT,
    Inequalities,
    ThetaIdentity,
    ConstructionSizes,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::ProductMax,
        TheoremId::NontrivialFormula,
        TheoremId::SumMax,
        TheoremId::TwoAboveT,
        TheoremId::Inequalities,
        TheoremId::ThetaIdentity,
        TheoremId::ConstructionSizes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::ProductMax => "T1.1",
            TheoremId::NontrivialFormula => "T1.5-formula",
            TheoremId::SumMax => "T1.6",
            TheoremId::TwoAboveT => "T5.4",
            TheoremId::Inequalities => "L6.x",
            TheoremId::ThetaIdentity => "EqThetaC",
            TheoremId::ConstructionSizes => "ConstructionSizes",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown theorem id {s:?}")))
    }
}

impl Serialize for TheoremId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// `Exploratory` marks results at parameters outside a statement's
/// hypotheses; they neither confirm nor refute it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Confirmed,
    Refuted,
    Inconclusive,
    Exploratory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunParams {
    pub c: usize,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
}

impl RunParams {
    pub fn new(c: usize, k: usize, t: usize) -> Self {
        RunParams { c, k, t: Some(t) }
    }

    fn params(&self) -> Result<Params> {
        Params::new(self.c, self.k)
    }

    fn t(&self) -> Result<usize> {
        self.t.ok_or_else(|| Error::InvalidParams("this check needs t".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema: &'static str,
    pub theorem: TheoremId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<RunParams>,
    pub verdict: Verdict,
    pub evidence: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

impl VerificationReport {
    fn new(theorem: TheoremId, params: Option<RunParams>, verdict: Verdict, evidence: Value) -> Self {
        VerificationReport { schema: REPORT_SCHEMA, theorem, params, verdict, evidence, counterexample: None }
    }

    fn with_counterexample(mut self, example: Option<Value>) -> Self {
        if self.verdict == Verdict::Refuted || self.verdict == Verdict::Exploratory {
            self.counterexample = example;
        }
        self
    }
}

/// Where universes come from: an optional cache directory and the
/// enumeration cap.
#[derive(Clone, Debug, Default)]
pub struct UniverseStore {
    pub dir: Option<PathBuf>,
    pub cap: EnumerationCap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Built,
    Loaded,
    Written(PathBuf),
    /// An unreadable or invalid cache file was replaced.
    Rebuilt { path: PathBuf, reason: String },
}

impl UniverseStore {
    pub fn new(dir: Option<PathBuf>, cap: EnumerationCap) -> Self {
        UniverseStore { dir, cap }
    }

    pub fn path_for(dir: &Path, params: Params) -> PathBuf {
        dir.join(format!("universe-c{}-k{}.json", params.c, params.k))
    }

    /// Loads from the cache directory when a valid file exists, otherwise
    /// enumerates and writes one.
    pub fn load(&self, params: Params) -> Result<(Arc<PartitionUniverse>, CacheStatus)> {
        let Some(dir) = &self.dir else {
            return Ok((Arc::new(PartitionUniverse::build(params, &self.cap)?), CacheStatus::Built));
        };
        self.cap.check(&params)?;
        let path = Self::path_for(dir, params);
        let previous = if path.exists() {
            match read_cache(&path) {
                Ok(u) if u.params() == params => return Ok((Arc::new(u), CacheStatus::Loaded)),
                Ok(_) => Some("cache holds different parameters".to_string()),
                Err(e) => Some(e.to_string()),
            }
        } else {
            None
        };
        let universe = PartitionUniverse::build(params, &self.cap)?;
        fs::create_dir_all(dir)?;
        fs::write(&path, serde_json::to_string(&universe.to_cache())?)?;
        let status = match previous {
            Some(reason) => CacheStatus::Rebuilt { path, reason },
            None => CacheStatus::Written(path),
        };
        Ok((Arc::new(universe), status))
    }

    pub fn universe(&self, params: Params) -> Result<Arc<PartitionUniverse>> {
        self.load(params).map(|(u, _)| u)
    }
}

pub fn read_cache(path: &Path) -> Result<PartitionUniverse> {
    let text = fs::read_to_string(path)?;
    let cache: UniverseCache = serde_json::from_str(&text).map_err(|e| Error::CacheCorrupt(e.to_string()))?;
    PartitionUniverse::from_cache(&cache)
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub store: UniverseStore,
    pub search: SearchOptions,
    /// Pairs sampled per construction when families cannot be enumerated.
    pub samples: u64,
    pub seed: u64,
    pub grid: IneqGrid,
    /// Largest concept count enumerated for the `k = t + 2` check.
    pub concept_cap: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            store: UniverseStore::default(),
            search: SearchOptions::default(),
            samples: 10_000,
            seed: 0,
            grid: IneqGrid::default(),
            concept_cap: 2_000_000,
        }
    }
}

/// Default parameters for each check.
pub fn default_params(theorem: TheoremId) -> Option<RunParams> {
    match theorem {
        TheoremId::ProductMax | TheoremId::SumMax => Some(RunParams::new(3, 3, 1)),
        TheoremId::TwoAboveT => Some(RunParams::new(2, 3, 1)),
        TheoremId::NontrivialFormula => Some(RunParams::new(6, 5, 1)),
        TheoremId::ConstructionSizes => Some(RunParams::new(2, 4, 1)),
        TheoremId::ThetaIdentity => Some(RunParams { c: 3, k: 3, t: None }),
        TheoremId::Inequalities => None,
    }
}

/// Runs one check. Searches stopped by a cap give an `inconclusive` report
/// rather than an error.
pub fn run_verify_theorem(
    theorem: TheoremId,
    params: Option<RunParams>,
    config: &VerifyConfig,
) -> Result<VerificationReport> {
    let params = params.or_else(|| default_params(theorem));
    let outcome = match theorem {
        TheoremId::ProductMax => verify_product_max(need(params)?, config),
        TheoremId::SumMax => verify_sum_max(need(params)?, config),
        TheoremId::TwoAboveT => verify_two_above_t(need(params)?, config),
        TheoremId::NontrivialFormula => verify_nontrivial_formula(need(params)?, config),
        TheoremId::Inequalities => verify_inequalities(&config.grid),
        TheoremId::ThetaIdentity => verify_theta_identity(need(params)?),
        TheoremId::ConstructionSizes => verify_construction_sizes(need(params)?, config),
    };
    match outcome {
        Err(Error::Inconclusive(reason)) => {
            Ok(VerificationReport::new(theorem, params, Verdict::Inconclusive, json!({ "reason": reason })))
        }
        other => other,
    }
}

fn need(params: Option<RunParams>) -> Result<RunParams> {
    params.ok_or_else(|| Error::InvalidParams("parameters required".into()))
}

fn context(p: RunParams, config: &VerifyConfig) -> Result<CrossContext> {
    let universe = config.store.universe(p.params()?)?;
    build_context(&universe, p.t()?)
}

type Classified = Vec<(MaximalPair, PairClass, bool)>;

fn class_counts(ctx: &CrossContext, pairs: &[MaximalPair]) -> (BTreeMap<String, usize>, Classified) {
    let classified: Classified = pairs
        .par_iter()
        .map(|p| {
            let c = classify_optimum(ctx, p);
            (p.clone(), c.class, c.swapped)
        })
        .collect();
    let mut counts = BTreeMap::new();
    for (_, class, _) in &classified {
        *counts.entry(class.as_str().to_string()).or_insert(0) += 1;
    }
    (counts, classified)
}

fn pair_json(ctx: &CrossContext, p: &MaximalPair) -> Value {
    let render = |ids: &[u32]| -> Vec<crate::partition::PartitionJson> {
        ctx.members(ids).iter().map(|m| m.as_partial().to_json()).collect()
    };
    json!({ "F": p.f, "G": p.g, "F_members": render(&p.f), "G_members": render(&p.g) })
}

fn search_evidence(out: &SearchOutcome, expected: &BigInt, classes: &BTreeMap<String, usize>) -> Value {
    json!({
        "value": out.value.map(|v| v.to_string()),
        "expected": expected.to_string(),
        "certified": out.certified,
        "certificate": out.certificate,
        "method": out.method,
        "optima": out.optima.len(),
        "classes": classes,
    })
}

fn verdict_for(in_hypothesis: bool, holds: bool) -> Verdict {
    match (in_hypothesis, holds) {
        (true, true) => Verdict::Confirmed,
        (true, false) => Verdict::Refuted,
        (false, _) => Verdict::Exploratory,
    }
}

fn verify_product_max(p: RunParams, config: &VerifyConfig) -> Result<VerificationReport> {
    let ctx = context(p, config)?;
    let t = p.t()?;
    let expected = theta(p.c, p.k, t)?.pow(2);
    let out = max_product(&ctx, Constraint::None, &config.search)?;
    let (classes, classified) = class_counts(&ctx, &out.optima);
    let value_ok = out.value.map(BigInt::from) == Some(expected.clone());
    let bad = classified.iter().find(|(_, class, _)| *class != PairClass::StarPair);
    let holds = out.certified && value_ok && bad.is_none();
    let verdict = verdict_for(product_hypothesis(p.c, p.k, t), holds);
    let example = bad.map(|(pair, class, _)| json!({ "pair": pair_json(&ctx, pair), "class": class }));
    Ok(VerificationReport::new(TheoremId::ProductMax, Some(p), verdict, search_evidence(&out, &expected, &classes))
        .with_counterexample(example))
}

fn verify_sum_max(p: RunParams, config: &VerifyConfig) -> Result<VerificationReport> {
    let ctx = context(p, config)?;
    let t = p.t()?;
    let expected = BigInt::from(1) + n_class_counts(p.c, p.k)?[t..].iter().sum::<BigInt>();
    let out = max_sum(&ctx, &config.search)?;
    let (classes, classified) = class_counts(&ctx, &out.optima);
    let value_ok = out.value.map(BigInt::from) == Some(expected.clone());
    let bad = classified
        .iter()
        .find(|(pair, class, swapped)| *class != PairClass::SingletonBall || *swapped || pair.f.len() != 1);
    let holds = out.certified && value_ok && bad.is_none();
    let verdict = verdict_for(product_hypothesis(p.c, p.k, t), holds);
    let example = bad.map(|(pair, class, _)| json!({ "pair": pair_json(&ctx, pair), "class": class }));
    Ok(VerificationReport::new(TheoremId::SumMax, Some(p), verdict, search_evidence(&out, &expected, &classes))
        .with_counterexample(example))
}

/// Every maximal pair with both sides non-empty: the subset scan for small
/// universes, lectic enumeration otherwise.
pub fn all_concepts(ctx: &CrossContext, cap: usize) -> Result<(Vec<MaximalPair>, &'static str)> {
    let (pairs, method) = if ctx.len() <= EXHAUSTIVE_ITEMS {
        (exhaustive_pairs(ctx)?, "subset-scan")
    } else {
        let run = enumerate_concepts(ctx, cap);
        if !run.complete {
            return Err(Error::Inconclusive(format!("more than {cap} maximal pairs")));
        }
        let mut pairs = run.pairs;
        pairs.sort();
        (pairs, "concept-enumeration")
    };
    Ok((pairs.into_iter().filter(|p| !p.is_degenerate()).collect(), method))
}

fn verify_two_above_t(p: RunParams, config: &VerifyConfig) -> Result<VerificationReport> {
    let t = p.t()?;
    if p.k != t + 2 {
        return Err(Error::PreconditionViolated(format!("needs k = t + 2 (k={}, t={t})", p.k)));
    }
    let ctx = context(p, config)?;
    let (pairs, method) = all_concepts(&ctx, config.concept_cap)?;
    let covers = cover_reports(&ctx, &pairs)?;
    let in_scope: Vec<MaximalPair> =
        pairs.iter().filter(|pair| covers[&pair.g].tau > t).cloned().collect();
    let (classes, classified) = class_counts(&ctx, &in_scope);
    let allowed = |pair: &MaximalPair, class: PairClass, swapped: bool| match class {
        PairClass::SingletonBall => !swapped && pair.f.len() == 1,
        PairClass::C51 | PairClass::C52 => true,
        PairClass::C53 => t >= 2,
        _ => false,
    };
    let bad = classified.iter().find(|(pair, class, swapped)| !allowed(pair, *class, *swapped));
    let params = p.params()?;
    let feasible: BTreeMap<&str, bool> = [Variant::Loose, Variant::Tight, Variant::Double]
        .into_iter()
        .map(|v| (v.kind().as_str(), find_e_system(params, t, v).is_ok()))
        .collect();
    let evidence = json!({
        "method": method,
        "pairs": pairs.len(),
        "pairs_with_large_tau_g": in_scope.len(),
        "classes": classes,
        "block_systems_feasible": feasible,
    });
    let verdict = if bad.is_none() { Verdict::Confirmed } else { Verdict::Refuted };
    let example = bad.map(|(pair, class, _)| json!({ "pair": pair_json(&ctx, pair), "class": class }));
    Ok(VerificationReport::new(TheoremId::TwoAboveT, Some(p), verdict, evidence).with_counterexample(example))
}

fn verify_inequalities(grid: &IneqGrid) -> Result<VerificationReport> {
    let reports = check_grid(grid, &LemmaId::ALL, true)?;
    let mut per_lemma: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut equalities = Vec::new();
    for r in &reports {
        let e = per_lemma.entry(r.lemma.as_str()).or_default();
        e.0 += 1;
        if !r.holds {
            e.1 += 1;
        }
        if r.equality == Some(true) {
            equalities.push(json!({ "c": r.params.c, "k": r.params.k, "t": r.params.t }));
        }
    }
    let failed = reports.iter().find(|r| !r.holds);
    let summary: BTreeMap<&str, Value> =
        per_lemma.into_iter().map(|(l, (n, bad))| (l, json!({ "points": n, "failures": bad }))).collect();
    let evidence = json!({ "grid": grid, "lemmas": summary, "equality_cases": equalities.len() });
    let verdict = if failed.is_none() { Verdict::Confirmed } else { Verdict::Refuted };
    Ok(VerificationReport::new(TheoremId::Inequalities, None, verdict, evidence)
        .with_counterexample(failed.map(|r| serde_json::to_value(r).expect("report serialises"))))
}

fn verify_theta_identity(p: RunParams) -> Result<VerificationReport> {
    let mut failures = Vec::new();
    for i in 1..p.k {
        if !verify_theta_c_identity(p.c, p.k, i)? {
            failures.push(i);
        }
    }
    let verdict = if failures.is_empty() { Verdict::Confirmed } else { Verdict::Refuted };
    let evidence = json!({ "indices": p.k.saturating_sub(1), "failures": failures.len() });
    let example = failures.first().map(|i| json!({ "i": i }));
    Ok(VerificationReport::new(TheoremId::ThetaIdentity, Some(RunParams { t: None, ..p }), verdict, evidence)
        .with_counterexample(example))
}

/// Containment counts of every anchor of every size against the formula.
pub fn theta_enumeration_check(universe: &PartitionUniverse) -> Result<(usize, Option<PartialPartition>)> {
    let params = universe.params();
    let mut checked = 0;
    for z in 1..=params.k {
        let anchors: BTreeSet<PartialPartition> = universe
            .items()
            .iter()
            .flat_map(|m| m.blocks().iter().copied().combinations(z))
            .map(|b| PartialPartition::new(params, b))
            .collect::<Result<_>>()?;
        let expected = theta(params.c, params.k, z)?;
        for a in anchors {
            checked += 1;
            if BigInt::from(universe.enumerate_containing(&a)?.count_ones(..)) != expected {
                return Ok((checked, Some(a)));
            }
        }
    }
    Ok((checked, None))
}

fn verify_construction_sizes(p: RunParams, config: &VerifyConfig) -> Result<VerificationReport> {
    let t = p.t()?;
    let params = p.params()?;
    let universe = config.store.universe(params)?;
    let (anchors, theta_failure) = theta_enumeration_check(&universe)?;
    let mut rows = Vec::new();
    let mut failure = theta_failure.map(|a| json!({ "anchor": a.to_json() }));
    for kind in Kind::ALL {
        let Ok(spec) = FamilySpec::canonical(kind, params, t) else { continue };
        let fam = spec.realize(&universe)?;
        let (a, b) = (fam.first.members()?, fam.second.members()?);
        let (fa, fb) = spec.formula_sizes()?;
        let size_ok = |n: usize, f: &Option<BigInt>| f.as_ref().is_none_or(|f| BigInt::from(n) == *f);
        let sizes_ok = size_ok(a.len(), &fa) && size_ok(b.len(), &fb);
        let cross = lists_cross_intersect(&a, &b, t);
        rows.push(json!({
            "kind": kind,
            "sizes": [a.len(), b.len()],
            "formula": [fa.map(|v| v.to_string()), fb.map(|v| v.to_string())],
            "cross_intersecting": cross,
        }));
        if failure.is_none() && !(sizes_ok && cross) {
            failure = Some(json!({ "spec": spec.to_json() }));
        }
    }
    let evidence = json!({ "theta_anchors": anchors, "constructions": rows });
    let verdict = match (&failure, p.c >= 3) {
        (None, _) => Verdict::Confirmed,
        (Some(_), true) => Verdict::Refuted,
        (Some(_), false) => Verdict::Exploratory,
    };
    Ok(VerificationReport::new(TheoremId::ConstructionSizes, Some(p), verdict, evidence).with_counterexample(failure))
}

/// The formula-level substitute for the non-trivial product statement: the
/// supporting inequalities, the two formulas for `f2`, and sampled
/// cross-intersection of the three constructions.
fn verify_nontrivial_formula(p: RunParams, config: &VerifyConfig) -> Result<VerificationReport> {
    let t = p.t()?;
    let params = p.params()?;
    let lemmas = [
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
    let grid = check_grid(&config.grid, &lemmas, true)?;
    let grid_failure = grid.iter().find(|r| !r.holds);
    let f2_agree = f2(p.c, p.k, t)? == f2_inclusion_exclusion(p.c, p.k, t)?;
    let mut samples = Vec::new();
    let mut violation = None;
    for kind in [Kind::N1, Kind::N2, Kind::N3] {
        let Ok(spec) = FamilySpec::canonical(kind, params, t) else { continue };
        let fam = spec.intensional()?;
        let check = is_cross_intersecting(&fam.first, &fam.second, t, config.samples, config.seed)?;
        samples.push(json!({ "kind": kind, "samples": config.samples, "no_violation": check.no_violation() }));
        if violation.is_none() && !check.no_violation() {
            violation = Some(json!({ "kind": kind, "spec": spec.to_json() }));
        }
    }
    let evidence = json!({
        "grid_points": grid.len(),
        "f2_formulas_agree": f2_agree,
        "sampled": samples,
    });
    let example = grid_failure.map(|r| serde_json::to_value(r).expect("report serialises")).or(violation);
    let verdict = if example.is_none() && f2_agree { Verdict::Confirmed } else { Verdict::Refuted };
    Ok(VerificationReport::new(TheoremId::NontrivialFormula, Some(p), verdict, evidence).with_counterexample(example))
}

/// Grid for [`run_formula_suite`].
#[derive(Clone, Debug)]
pub struct FormulaGrid {
    pub inequalities: IneqGrid,
    pub identity_params: Vec<(usize, usize)>,
    pub enumeration_params: Vec<(usize, usize, usize)>,
}

impl Default for FormulaGrid {
    fn default() -> Self {
        FormulaGrid {
            inequalities: IneqGrid::default(),
            identity_params: vec![(2, 3), (2, 4), (2, 5), (3, 3), (3, 4)],
            enumeration_params: vec![(2, 3, 1), (2, 4, 1), (2, 5, 1), (3, 3, 1), (3, 4, 1)],
        }
    }
}

pub fn run_formula_suite(grid: &FormulaGrid, config: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    let mut out = vec![verify_inequalities(&grid.inequalities)?];
    for &(c, k) in &grid.identity_params {
        out.push(verify_theta_identity(RunParams { c, k, t: None })?);
    }
    for &(c, k, t) in &grid.enumeration_params {
        out.push(verify_construction_sizes(RunParams::new(c, k, t), config)?);
    }
    Ok(out)
}

/// Pass and failure counts of one structural check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub checked: u64,
    pub failed: u64,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.failed += other.failed;
        self
    }
}

/// Cover-based statements evaluated over a list of maximal pairs, each only
/// where its hypotheses hold.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StructuralSummary {
    pub pairs: usize,
    /// `|F|` bounded by the covering numbers of both sides.
    pub size_bound: Tally,
    /// Minimum covers of the two sides cross-intersect.
    pub cover_cross: Tally,
    /// Union of minimum covers through an anchor.
    pub union_structure: Tally,
    /// Members avoiding every minimum cover of the other side are few.
    pub residual: Tally,
}

impl StructuralSummary {
    pub fn holds(&self) -> bool {
        [self.size_bound, self.cover_cross, self.union_structure, self.residual].iter().all(|t| t.failed == 0)
    }
}

fn cover_reports(ctx: &CrossContext, pairs: &[MaximalPair]) -> Result<HashMap<Vec<u32>, CoverReport>> {
    let sides: BTreeSet<&Vec<u32>> = pairs.iter().flat_map(|p| [&p.f, &p.g]).collect();
    sides
        .into_par_iter()
        .map(|ids| Ok((ids.clone(), covering_number(&ctx.members(ids), ctx.t())?)))
        .collect()
}

pub fn structural_checks(ctx: &CrossContext, pairs: &[MaximalPair]) -> Result<StructuralSummary> {
    let pairs: Vec<&MaximalPair> = pairs.iter().filter(|p| !p.is_degenerate()).collect();
    let owned: Vec<MaximalPair> = pairs.iter().map(|p| (*p).clone()).collect();
    let covers = cover_reports(ctx, &owned)?;
    let params = ctx.universe().params();
    let (c, k, t) = (params.c, params.k, ctx.t());
    let union_structure = covers
        .par_iter()
        .filter(|(_, r)| k >= t + 3 && r.tau == t + 1)
        .map(|(ids, r)| -> Result<Tally> {
            let members = ctx.members(ids);
            let anchors: BTreeSet<Vec<_>> =
                r.min_covers.iter().flat_map(|s| s.blocks().iter().copied().combinations(t)).collect();
            let mut tally = Tally::default();
            for a in anchors {
                let anchor = PartialPartition::new(params, a)?;
                tally.record(union_structure_with(r, &members, &anchor)?.holds());
            }
            Ok(tally)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    let per_pair = pairs
        .par_iter()
        .map(|pair| -> Result<[Tally; 3]> {
            let (rf, rg) = (&covers[&pair.f], &covers[&pair.g]);
            let mut out = [Tally::default(); 3];
            if k >= t + 2 {
                let bound = pair_product_bound(c, k, t, rf.tau, rg.tau)?;
                out[0].record(BigInt::from(pair.f.len()) <= bound);
                if rf.tau.max(rg.tau) + 2 <= k {
                    out[1].record(lists_cross_intersect(&rf.min_covers, &rg.min_covers, t));
                }
            }
            if k >= t + 3 && rf.tau == t + 1 && rg.tau == t + 1 {
                out[2].record(residual_with(&ctx.members(&pair.f), rg)?.holds);
            }
            Ok(out)
        })
        .try_reduce(
            || [Tally::default(); 3],
            |a, b| Ok([a[0].merge(b[0]), a[1].merge(b[1]), a[2].merge(b[2])]),
        )?;
    Ok(StructuralSummary {
        pairs: pairs.len(),
        size_bound: per_pair[0],
        cover_cross: per_pair[1],
        union_structure,
        residual: per_pair[2],
    })
}
