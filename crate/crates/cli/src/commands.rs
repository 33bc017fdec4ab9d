use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use itertools::Itertools;
use serde_json::{json, Value};
use uniset::classify::classify_optimum;
use uniset::constructions::{is_cross_intersecting, Family, FamilySpec, Kind};
use uniset::counting::{f0, f1, f2, g_bound, h_bounds, n_class_counts, theta};
use uniset::covers::{covering_number, union_structure_with, CoverReport};
use uniset::inequalities::{check_grid, IneqGrid, LemmaId};
use uniset::search::{build_context_capped, optimize, Constraint, Method, Objective, SearchOptions};
use uniset::universe::{EnumerationCap, PartitionUniverse};
use uniset::verify::{
    default_params, read_cache, run_formula_suite, run_verify_theorem, CacheStatus, FormulaGrid, RunParams, TheoremId,
    UniverseStore, Verdict, VerificationReport, REPORT_SCHEMA,
};
use uniset::{PartialPartition, Params, UniformPartition};

use crate::render::{cell, Rendered};

/// Settings shared by every subcommand.
pub struct Env {
    pub seed: u64,
    pub store: UniverseStore,
    /// Node or concept cap for searches.
    pub search_cap: Option<u64>,
    pub max_search_ground: usize,
    pub timing: bool,
}

impl Env {
    pub fn universe(&self, params: Params) -> Result<Arc<PartitionUniverse>> {
        let (u, status) = self.store.load(params)?;
        if let CacheStatus::Rebuilt { path, reason } = status {
            eprintln!("warning: rebuilt cache {}: {reason}", path.display());
        }
        Ok(u)
    }

    fn search_universe(&self, params: Params) -> Result<Arc<PartitionUniverse>> {
        if params.n() > self.max_search_ground {
            bail!(
                "search commands accept ground sets up to {} elements (got {}); pass --unsafe-cap to override",
                self.max_search_ground,
                params.n()
            );
        }
        self.universe(params)
    }

    fn search_options(&self, method: Method) -> SearchOptions {
        let mut opts = SearchOptions { method, ..SearchOptions::default() };
        if let Some(cap) = self.search_cap {
            opts.cap = cap;
        }
        opts
    }
}

fn partition_json(p: &UniformPartition) -> Value {
    json!(p.as_partial().to_json())
}

pub fn enumerate(env: &Env, c: usize, k: usize, limit: Option<usize>, count_only: bool) -> Result<Rendered> {
    let u = env.universe(Params::new(c, k)?)?;
    let shown = if count_only { 0 } else { limit.unwrap_or(u.len()).min(u.len()) };
    let items = &u.items()[..shown];
    let mut doc = json!({ "c": c, "k": k, "count": u.len().to_string() });
    if !count_only {
        doc["items"] = items.iter().map(partition_json).collect();
    }
    let rows = if count_only {
        vec![vec![c.to_string(), k.to_string(), u.len().to_string()]]
    } else {
        items.iter().enumerate().map(|(i, p)| vec![i.to_string(), p.to_string()]).collect()
    };
    let headers = if count_only { vec!["c", "k", "count"] } else { vec!["id", "partition"] };
    Ok(Rendered::new(doc, headers, rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FormulaName {
    Theta,
    G,
    F0,
    F1,
    F2,
    H,
    Nclass,
}

pub fn count_formula(
    formula: FormulaName,
    c: usize,
    k: usize,
    t: Option<usize>,
    z: Option<usize>,
) -> Result<Rendered> {
    let need_t = || t.ok_or_else(|| anyhow!("--t is required for this formula"));
    let need_z = || z.ok_or_else(|| anyhow!("--z is required for this formula"));
    let values: Vec<(String, String)> = match formula {
        FormulaName::Theta => vec![("value".into(), theta(c, k, need_z()?)?.to_string())],
        FormulaName::G => vec![("value".into(), g_bound(c, k, need_t()?, need_z()?)?.to_string())],
        FormulaName::F0 => vec![("value".into(), f0(c, k, need_t()?)?.to_string())],
        FormulaName::F1 => vec![("value".into(), f1(c, k, need_t()?)?.to_string())],
        FormulaName::F2 => vec![("value".into(), f2(c, k, need_t()?)?.to_string())],
        FormulaName::H => {
            let h = h_bounds(c, k, need_t()?)?;
            [("h1", h.h1), ("h2", h.h2), ("h3", h.h3), ("h4", h.h4)]
                .into_iter()
                .map(|(n, v)| (n.to_string(), v.to_string()))
                .collect()
        }
        FormulaName::Nclass => {
            n_class_counts(c, k)?.iter().enumerate().map(|(i, v)| (format!("N{i}"), v.to_string())).collect()
        }
    };
    let name = format!("{formula:?}").to_lowercase();
    let mut doc = json!({ "formula": name, "c": c, "k": k, "t": t, "z": z });
    for (key, v) in &values {
        doc[key] = json!(v);
    }
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    let rows = values
        .into_iter()
        .map(|(key, v)| vec![name.clone(), c.to_string(), k.to_string(), opt(t), opt(z), key, v])
        .collect();
    Ok(Rendered::new(doc, vec!["formula", "c", "k", "t", "z", "name", "value"], rows))
}

pub const INEQ_HEADERS: [&str; 11] = ["lemma", "c", "k", "t", "s", "holds", "lhs", "rhs", "margin", "exploratory", "equality"];

pub fn verify_inequalities(lemma: &str, grid: IneqGrid, all_points: bool) -> Result<Rendered> {
    let lemmas: Vec<LemmaId> =
        if lemma == "all" { LemmaId::ALL.to_vec() } else { vec![lemma.parse::<LemmaId>()?] };
    let reports = check_grid(&grid, &lemmas, !all_points)?;
    let failures = reports.iter().filter(|r| !r.holds && !r.exploratory).count();
    let reports_json = serde_json::to_value(&reports)?;
    let rows = reports_json
        .as_array()
        .expect("list")
        .iter()
        .map(|r| {
            vec![
                cell(&r["lemma"]),
                cell(&r["params"]["c"]),
                cell(&r["params"]["k"]),
                cell(&r["params"]["t"]),
                cell(r["params"].get("s").unwrap_or(&Value::Null)),
                cell(&r["holds"]),
                cell(&r["lhs"]),
                cell(&r["rhs"]),
                cell(&r["margin"]),
                cell(&r["exploratory"]),
                cell(r.get("equality").unwrap_or(&Value::Null)),
            ]
        })
        .collect();
    let doc = json!({
        "schema": REPORT_SCHEMA,
        "grid": grid,
        "points": reports.len(),
        "failures": failures,
        "reports": reports_json,
    });
    Ok(Rendered::new(doc, INEQ_HEADERS.to_vec(), rows).with_status(failures == 0))
}

/// A spec from a file path or inline JSON.
fn read_spec(source: &str) -> Result<FamilySpec> {
    let text = if Path::new(source).is_file() {
        fs::read_to_string(source).with_context(|| format!("reading {source}"))?
    } else {
        source.to_string()
    };
    Ok(FamilySpec::from_json_str(&text)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Emit {
    Size,
    Members,
    PredicateCheck,
}

pub struct ConstructArgs {
    pub spec: Option<String>,
    pub kind: Option<Kind>,
    pub c: Option<usize>,
    pub k: Option<usize>,
    pub t: Option<usize>,
    pub emit: Emit,
    pub samples: u64,
}

pub fn construct(env: &Env, args: ConstructArgs) -> Result<Rendered> {
    let spec = match (&args.spec, args.kind) {
        (Some(source), _) => read_spec(source)?,
        (None, Some(kind)) => {
            let (c, k, t) = (
                args.c.context("--c is required with --kind")?,
                args.k.context("--k is required with --kind")?,
                args.t.context("--t is required with --kind")?,
            );
            FamilySpec::canonical(kind, Params::new(c, k)?, t)?
        }
        (None, None) => bail!("pass --spec or --kind"),
    };
    let enumerable = env.store.cap.check(&spec.params).is_ok();
    let fam = if enumerable { spec.realize(&env.universe(spec.params)?)? } else { spec.intensional()? };
    let mut doc = json!({ "spec": spec.to_json(), "degenerate": spec.is_degenerate() });
    let mut rows = Vec::new();
    let mut ok = true;
    let mut sides = Vec::new();
    for (name, family) in [("first", &fam.first), ("second", &fam.second)] {
        let size = family.size();
        let source = match size {
            uniset::constructions::FamilySize::Counted(_) => "counted",
            uniset::constructions::FamilySize::Formula(_) => "formula",
            uniset::constructions::FamilySize::Unknown => "unknown",
        };
        let mut side = json!({ "size": size.to_string(), "size_source": source });
        match args.emit {
            Emit::Members => {
                let members = family.members()?;
                for m in &members {
                    rows.push(vec![name.to_string(), m.to_string()]);
                }
                side["members"] = members.iter().map(partition_json).collect();
            }
            Emit::PredicateCheck => {
                let (checked, failed) = predicate_check(family, args.samples.min(1000), env.seed)?;
                ok &= failed == 0;
                side["predicate_samples"] = json!(checked);
                side["predicate_failures"] = json!(failed);
                rows.push(vec![name.to_string(), size.to_string(), checked.to_string(), failed.to_string()]);
            }
            Emit::Size => rows.push(vec![name.to_string(), size.to_string(), source.to_string()]),
        }
        sides.push(side);
    }
    doc["families"] = json!(sides);
    if args.emit != Emit::Members {
        let check = is_cross_intersecting(&fam.first, &fam.second, spec.t, args.samples, env.seed)?;
        ok &= check.no_violation();
        doc["cross_intersecting"] = match check {
            uniset::constructions::CrossCheck::Exact { holds, witness } => json!({
                "mode": "exact",
                "holds": holds,
                "witness": witness.map(|(a, b)| json!([partition_json(&a), partition_json(&b)])),
            }),
            uniset::constructions::CrossCheck::Sampled { samples, violation } => json!({
                "mode": "sampled",
                "samples": samples,
                "holds": violation.is_none(),
                "witness": violation.map(|(a, b)| json!([partition_json(&a), partition_json(&b)])),
            }),
        };
    }
    let headers = match args.emit {
        Emit::Members => vec!["family", "partition"],
        Emit::PredicateCheck => vec!["family", "size", "samples", "failures"],
        Emit::Size => vec!["family", "size", "source"],
    };
    Ok(Rendered::new(doc, headers, rows).with_status(ok))
}

/// Draws seeded members and re-checks membership for each.
fn predicate_check(family: &Family, samples: u64, seed: u64) -> Result<(u64, u64)> {
    let mut failed = 0;
    for i in 0..samples {
        let m = family.sample_member(seed.wrapping_add(i))?;
        if !family.contains(&m) {
            failed += 1;
        }
    }
    Ok((samples, failed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Side {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CoverView {
    Covers,
    Common,
    Structure,
}

pub struct CoversArgs {
    pub family: String,
    pub c: Option<usize>,
    pub k: Option<usize>,
    pub t: Option<usize>,
    pub side: Side,
    pub report: CoverView,
}

/// Members named by a spec (either side) or by a list of universe ids.
fn family_members(env: &Env, args: &CoversArgs) -> Result<(Vec<UniformPartition>, usize)> {
    let text = if Path::new(&args.family).is_file() {
        fs::read_to_string(&args.family).with_context(|| format!("reading {}", args.family))?
    } else {
        args.family.clone()
    };
    if let Ok(spec) = FamilySpec::from_json_str(&text) {
        let fam = spec.realize(&env.universe(spec.params)?)?;
        let family = if args.side == Side::First { fam.first } else { fam.second };
        return Ok((family.members()?, args.t.unwrap_or(spec.t)));
    }
    let ids: Vec<usize> = text
        .split(|ch: char| ch.is_whitespace() || ch == ',' || ch == '[' || ch == ']')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().with_context(|| format!("not an id: {s:?}")))
        .collect::<Result<_>>()?;
    let (c, k) = (args.c.context("--c is required with an id list")?, args.k.context("--k is required with an id list")?);
    let u = env.universe(Params::new(c, k)?)?;
    let members = ids
        .iter()
        .map(|&i| u.items().get(i).cloned().ok_or_else(|| anyhow!("id {i} outside universe of {}", u.len())))
        .collect::<Result<Vec<_>>>()?;
    Ok((members, args.t.context("--t is required with an id list")?))
}

fn cover_json(r: &CoverReport) -> Value {
    json!({
        "t": r.t,
        "tau": r.tau,
        "min_covers": r.min_covers.iter().map(PartialPartition::to_json).collect::<Vec<_>>(),
        "common_blocks": r.common_blocks,
        "search_space": r.search_space,
    })
}

pub fn covers(env: &Env, args: CoversArgs) -> Result<Rendered> {
    let (members, t) = family_members(env, &args)?;
    let report = covering_number(&members, t)?;
    match args.report {
        CoverView::Covers => {
            let rows = report.min_covers.iter().map(|s| vec![report.tau.to_string(), s.to_string()]).collect();
            Ok(Rendered::new(cover_json(&report), vec!["tau", "cover"], rows))
        }
        CoverView::Common => {
            let common = uniset::constructions::common_blocks_of(&members).expect("non-empty family");
            let rows = common.blocks().iter().map(|b| vec![b.to_string()]).collect();
            let doc = json!({
                "members": members.len(),
                "count": common.len(),
                "common_blocks": common.to_json(),
                "trivial": common.len() >= t,
            });
            Ok(Rendered::new(doc, vec!["block"], rows))
        }
        CoverView::Structure => {
            if report.tau != t + 1 {
                bail!("structure report needs covering number {} (got {})", t + 1, report.tau);
            }
            let params = members[0].params();
            let anchors: std::collections::BTreeSet<Vec<_>> =
                report.min_covers.iter().flat_map(|s| s.blocks().iter().copied().combinations(t)).collect();
            let mut out = Vec::new();
            let mut rows = Vec::new();
            let mut ok = true;
            for a in anchors {
                let anchor = PartialPartition::new(params, a)?;
                let s = union_structure_with(&report, &members, &anchor)?;
                ok &= s.holds();
                rows.push(vec![anchor.to_string(), s.m.to_string(), s.holds().to_string()]);
                out.push(json!({
                    "anchor": anchor.to_json(),
                    "union": s.union.as_ref().map(PartialPartition::to_json),
                    "m": s.m,
                    "covers_are_extensions": s.covers_are_extensions,
                    "others_meet_union": s.others_meet_union,
                    "m_in_range": s.m_in_range,
                    "holds": s.holds(),
                }));
            }
            let doc = json!({ "covers": cover_json(&report), "structure": out });
            Ok(Rendered::new(doc, vec!["anchor", "m", "holds"], rows).with_status(ok))
        }
    }
}

pub struct SearchArgs {
    pub c: usize,
    pub k: usize,
    pub t: usize,
    pub objective: Objective,
    pub constraint: Constraint,
    pub method: Method,
}

pub fn search(env: &Env, args: SearchArgs) -> Result<Rendered> {
    let u = env.search_universe(Params::new(args.c, args.k)?)?;
    let start = Instant::now();
    let ctx = build_context_capped(&u, args.t, usize::MAX)?;
    let out = optimize(&ctx, args.objective, args.constraint, &env.search_options(args.method))?;
    let mut optima = Vec::new();
    let mut rows = Vec::new();
    for pair in &out.optima {
        assert!(ctx.is_maximal(pair), "search returned a non-maximal pair");
        let class = classify_optimum(&ctx, pair);
        rows.push(vec![
            out.value.map(|v| v.to_string()).unwrap_or_default(),
            pair.f.iter().join(" "),
            pair.g.iter().join(" "),
            class.class.to_string(),
        ]);
        optima.push(json!({
            "F": pair.f,
            "G": pair.g,
            "class": class.class,
            "anchors": class.spec.map(|s| s.to_json()),
            "swapped": class.swapped,
        }));
    }
    let mut doc = json!({
        "c": args.c,
        "k": args.k,
        "t": args.t,
        "objective": out.objective,
        "constraint": out.constraint,
        "value": out.value.map(|v| v.to_string()),
        "certified": out.certified,
        "certificate": out.certificate,
        "method": out.method,
        "optima": optima,
    });
    if env.timing {
        doc["runtime_ms"] = json!(start.elapsed().as_millis() as u64);
        doc["nodes"] = json!(out.nodes);
    }
    Ok(Rendered::new(doc, vec!["value", "F", "G", "class"], rows))
}

fn reports_rendered(reports: Vec<(VerificationReport, u128)>, timing: bool) -> Result<Rendered> {
    let ok = reports.iter().all(|(r, _)| r.verdict == Verdict::Confirmed);
    let mut docs = Vec::new();
    let mut rows = Vec::new();
    for (r, ms) in &reports {
        let mut doc = serde_json::to_value(r)?;
        if timing {
            doc["runtime_ms"] = json!(*ms as u64);
        }
        let p = r.params;
        rows.push(vec![
            r.theorem.to_string(),
            p.map(|p| p.c.to_string()).unwrap_or_default(),
            p.map(|p| p.k.to_string()).unwrap_or_default(),
            p.and_then(|p| p.t).map(|t| t.to_string()).unwrap_or_default(),
            cell(&serde_json::to_value(r.verdict)?),
        ]);
        docs.push(doc);
    }
    let confirmed = reports.iter().filter(|(r, _)| r.verdict == Verdict::Confirmed).count();
    let doc = json!({
        "schema": REPORT_SCHEMA,
        "confirmed": confirmed,
        "total": reports.len(),
        "reports": docs,
    });
    Ok(Rendered::new(doc, vec!["theorem", "c", "k", "t", "verdict"], rows).with_status(ok))
}

pub fn verify_theorem(
    env: &Env,
    ids: &[String],
    c: Option<usize>,
    k: Option<usize>,
    t: Option<usize>,
    samples: u64,
) -> Result<Rendered> {
    let mut theorems = Vec::new();
    for id in ids {
        if id == "all" {
            theorems.extend(TheoremId::ALL);
        } else {
            theorems.push(id.parse::<TheoremId>()?);
        }
    }
    let config = verify_config(env, samples);
    let mut reports = Vec::new();
    for theorem in theorems {
        let params = match (c, k, default_params(theorem)) {
            (Some(c), Some(k), _) => Some(RunParams { c, k, t: t.or(default_params(theorem).and_then(|p| p.t)) }),
            (None, None, d) => d,
            _ => bail!("pass both --c and --k, or neither"),
        };
        if let Some(p) = params {
            let needs_search = matches!(theorem, TheoremId::ProductMax | TheoremId::SumMax | TheoremId::TwoAboveT);
            if needs_search && p.c * p.k > env.max_search_ground {
                bail!("{theorem} searches ground sets up to {} elements; pass --unsafe-cap to override", env.max_search_ground);
            }
        }
        let start = Instant::now();
        let report = run_verify_theorem(theorem, params, &config)?;
        reports.push((report, start.elapsed().as_millis()));
    }
    reports_rendered(reports, env.timing)
}

fn verify_config(env: &Env, samples: u64) -> uniset::verify::VerifyConfig {
    uniset::verify::VerifyConfig {
        store: env.store.clone(),
        search: env.search_options(Method::Auto),
        samples,
        seed: env.seed,
        ..Default::default()
    }
}

pub fn formula_suite(env: &Env, grid: IneqGrid) -> Result<Rendered> {
    let config = verify_config(env, 0);
    let start = Instant::now();
    let reports = run_formula_suite(&FormulaGrid { inequalities: grid, ..FormulaGrid::default() }, &config)?;
    let ms = start.elapsed().as_millis();
    reports_rendered(reports.into_iter().map(|r| (r, ms)).collect(), env.timing)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CacheAction {
    Build,
    Verify,
    Path,
}

pub fn cache(env: &Env, action: CacheAction, c: usize, k: usize) -> Result<Rendered> {
    let dir = env.store.dir.as_ref().context("cache commands need --cache-dir")?;
    let params = Params::new(c, k)?;
    let path = UniverseStore::path_for(dir, params);
    let (status, count) = match action {
        CacheAction::Path => ("path".to_string(), None),
        CacheAction::Verify => {
            let u = read_cache(&path).with_context(|| format!("validating {}", path.display()))?;
            ("valid".to_string(), Some(u.len()))
        }
        CacheAction::Build => {
            let (u, status) = env.store.load(params)?;
            let status = match status {
                CacheStatus::Rebuilt { reason, .. } => {
                    eprintln!("warning: rebuilt cache {}: {reason}", path.display());
                    "rebuilt"
                }
                CacheStatus::Loaded => "loaded",
                CacheStatus::Written(_) | CacheStatus::Built => "written",
            };
            (status.to_string(), Some(u.len()))
        }
    };
    let doc = json!({
        "path": path.display().to_string(),
        "status": status,
        "count": count.map(|n| n.to_string()),
    });
    let row = vec![path.display().to_string(), status, count.map(|n| n.to_string()).unwrap_or_default()];
    Ok(Rendered::new(doc, vec!["path", "status", "count"], vec![row]))
}

pub fn enumeration_cap(unsafe_cap: bool) -> EnumerationCap {
    if unsafe_cap {
        EnumerationCap { max_ground: 128, max_items: u64::MAX }
    } else {
        EnumerationCap::default()
    }
}
