//! End-to-end solver: hidden-binary partition, decomposition of the objective
//! into a binary part and one block per continuous component, tabulation of
//! the block minima, and a binary reduced problem solved over a tree
//! decomposition.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::time::Instant;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::block_solver::{build_psi_table, BlockProblem, PsiEntries, PsiTable, SolveMode, TableOptions};
use crate::bpo::{solve_treedp, BpoInstance};
use crate::error::{Error, Result};
use crate::hidden_binary::{detect, Partition};
use crate::poly::{format_rational, multilinear_from_table, rational_to_f64, Point, Polynomial, Rational, Value};
use crate::scalar::mobius_transform;
use crate::structure::{
    incidence_graph, interaction_graph, interaction_hypergraph, intersection_graph, ComponentReport,
};
use crate::treewidth::{check_width_at_most, heuristic_decomposition, WidthVerdict};

static DECOMPOSITIONS: AtomicU64 = AtomicU64::new(0);
static IDENTITY_VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// `(decompositions performed, identity violations)` in this process. Every
/// call to [`decompose`] re-checks `f_minus + Σ f_C = f`.
pub fn decomposition_identity_stats() -> (u64, u64) {
    (
        DECOMPOSITIONS.load(AtomicOrdering::Relaxed),
        IDENTITY_VIOLATIONS.load(AtomicOrdering::Relaxed),
    )
}

/// `f = f_minus + Σ_C f_C` with one block per continuous component.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub f_minus: Polynomial,
    pub blocks: Vec<BlockProblem>,
    pub report: ComponentReport,
}

/// Routes every monomial to `f_minus` (support inside `vminus`) or to the
/// unique component its continuous variables belong to.
pub fn decompose(p: &Polynomial, vminus: &BTreeSet<usize>, vplus: &BTreeSet<usize>) -> Result<Decomposition> {
    let n = p.nvars();
    if vminus.len() + vplus.len() != n
        || vminus.intersection(vplus).next().is_some()
        || vminus.iter().chain(vplus).any(|&v| v >= n)
    {
        return Err(Error::InvalidArgument(
            "vminus and vplus must partition the variables".into(),
        ));
    }
    let h = interaction_hypergraph(p);
    let report = ComponentReport::build(&h, vplus);
    let mut comp_of = BTreeMap::new();
    for (k, c) in report.components.iter().enumerate() {
        for &v in c {
            comp_of.insert(v, k);
        }
    }
    let mut f_minus = Polynomial::zero(n);
    let mut parts: Vec<Polynomial> = vec![Polynomial::zero(n); report.components.len()];
    for (m, c) in p.terms() {
        let comps: BTreeSet<usize> = m.support().filter_map(|v| comp_of.get(&v).copied()).collect();
        let target = match comps.len() {
            0 => &mut f_minus,
            1 => &mut parts[*comps.iter().next().expect("one component")],
            _ => {
                return Err(Error::Internal(format!(
                    "monomial {m} meets components {comps:?}"
                )))
            }
        };
        target.add_term(m.clone(), c.clone());
    }

    let mut total = f_minus.clone();
    for b in &parts {
        total = total.add(b);
    }
    DECOMPOSITIONS.fetch_add(1, AtomicOrdering::Relaxed);
    if total != *p {
        IDENTITY_VIOLATIONS.fetch_add(1, AtomicOrdering::Relaxed);
        return Err(Error::Internal("decomposition does not sum to the objective".into()));
    }

    let blocks = parts
        .into_iter()
        .zip(report.components.iter().zip(&report.neighborhoods))
        .map(|(objective, (c, nb))| BlockProblem {
            objective,
            cont_vars: c.iter().copied().collect(),
            bin_vars: nb.iter().copied().collect(),
        })
        .collect();
    Ok(Decomposition {
        f_minus,
        blocks,
        report,
    })
}

/// Explicit numeric thresholds standing in for the logarithmic growth
/// conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    /// Treewidth bound on the interaction graph (degree ≤ 2).
    pub tw_max: usize,
    /// Treewidth bound on the incidence graph (degree ≥ 3).
    pub itw_max: usize,
    pub block_max: usize,
    pub nbr_max: usize,
}

impl Bounds {
    /// `⌈log₂ n⌉ + 4` for the width and neighborhood bounds; blocks of at most
    /// 20 variables for quadratics and 4 otherwise.
    pub fn defaults(n: usize, degree: u32) -> Self {
        let lg = ceil_log2(n) + 4;
        Bounds {
            tw_max: lg,
            itw_max: lg,
            nbr_max: lg,
            block_max: if degree <= 2 { 20 } else { 4 },
        }
    }
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub degree: u32,
    /// `"interaction"` for degree ≤ 2, `"incidence"` otherwise.
    pub width_graph: &'static str,
    pub tw_or_itw_bound: usize,
    pub tw_verdict: WidthVerdict,
    pub block_size_max: usize,
    pub nbr_size_max: usize,
    pub bounds: Bounds,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Partition, components and assumption verdict of an instance.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub partition: Partition,
    pub report: ComponentReport,
    pub check: AssumptionCheck,
}

pub fn analyze(p: &Polynomial, bounds: &Bounds) -> Result<Analysis> {
    let degree = p.degree();
    let partition = detect(p)?;
    let h = interaction_hypergraph(p);
    let report = ComponentReport::build(&h, &partition.vplus);
    let (width_graph, bound, verdict) = if degree <= 2 {
        ("interaction", bounds.tw_max, check_width_at_most(&interaction_graph(p)?, bounds.tw_max))
    } else {
        let ig = incidence_graph(&h);
        ("incidence", bounds.itw_max, check_width_at_most(&ig.graph, bounds.itw_max))
    };
    let block_size_max = report.block_size_max();
    let nbr_size_max = report.dmax;
    let mut failures = Vec::new();
    match &verdict {
        WidthVerdict::Yes { .. } => {}
        WidthVerdict::No { lower_bound } => failures.push(format!(
            "{width_graph} treewidth is at least {lower_bound} > {bound}"
        )),
        WidthVerdict::Unknown {
            lower_bound,
            upper_bound,
        } => failures.push(format!(
            "{width_graph} treewidth undecided: between {lower_bound} and {upper_bound}, bound {bound}"
        )),
    }
    if block_size_max > bounds.block_max {
        failures.push(format!(
            "component of size {block_size_max} exceeds block bound {}",
            bounds.block_max
        ));
    }
    if nbr_size_max > bounds.nbr_max {
        failures.push(format!(
            "neighborhood of size {nbr_size_max} exceeds bound {}",
            bounds.nbr_max
        ));
    }
    let check = AssumptionCheck {
        degree,
        width_graph,
        tw_or_itw_bound: bound,
        tw_verdict: verdict,
        block_size_max,
        nbr_size_max,
        bounds: *bounds,
        pass: failures.is_empty(),
        failures,
    };
    Ok(Analysis {
        partition,
        report,
        check,
    })
}

pub fn check_assumptions(p: &Polynomial, bounds: &Bounds) -> Result<AssumptionCheck> {
    Ok(analyze(p, bounds)?.check)
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Defaults from [`Bounds::defaults`] when `None`.
    pub bounds: Option<Bounds>,
    /// Target accuracy of the numeric block solver (degree ≥ 3).
    pub tol: f64,
    /// Solve even when the assumption check fails.
    pub force: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            bounds: None,
            tol: 1e-7,
            force: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub analyze_ms: f64,
    pub decompose_ms: f64,
    pub tables_ms: f64,
    pub reduce_ms: f64,
    pub dp_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub n: usize,
    pub degree: u32,
    pub num_terms: usize,
    /// Bits needed to write down all coefficients and exponents.
    pub input_bits: u64,
    pub num_components: usize,
    pub block_size_max: usize,
    pub nbr_size_max: usize,
    pub table_entries: usize,
    pub reduced_nodes: usize,
    pub reduced_terms: usize,
    pub reduced_width: usize,
    /// Width certified for the input structure, when the check produced one.
    pub input_width: Option<usize>,
    /// Certified bound on `value - min` (zero in exact mode).
    pub gap_bound: f64,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub value: Value,
    pub point: Point,
    pub mode: SolveMode,
    pub partition: Partition,
    pub report: ComponentReport,
    pub check: AssumptionCheck,
    pub diagnostics: Diagnostics,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Minimizes `p` over `[0,1]^n`: exactly over the rationals for degree at most
/// two, to a certified tolerance otherwise.
pub fn solve(p: &Polynomial, opts: &SolveOptions) -> Result<Solution> {
    let start = Instant::now();
    let n = p.nvars();
    let degree = p.degree();
    let bounds = opts.bounds.unwrap_or_else(|| Bounds::defaults(n, degree));
    let mut timings = Timings::default();

    let t = Instant::now();
    let analysis = analyze(p, &bounds)?;
    timings.analyze_ms = ms(t);
    if !analysis.check.pass && !opts.force {
        return Err(Error::AssumptionViolated(Box::new(analysis.check)));
    }

    let t = Instant::now();
    let dec = decompose(p, &analysis.partition.vminus, &analysis.partition.vplus)?;
    timings.decompose_ms = ms(t);

    let mode = if degree <= 2 {
        SolveMode::Exact
    } else {
        SolveMode::Numeric
    };
    let t = Instant::now();
    let topts = TableOptions::new(mode, opts.tol);
    let tables: Vec<PsiTable> = dec
        .blocks
        .par_iter()
        .map(|b| {
            build_psi_table(b, &topts).map_err(|e| Error::Block {
                component: b.cont_vars.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    timings.tables_ms = ms(t);

    let vminus = &analysis.partition.vminus;
    let (point, value, reduced_nodes, reduced_terms, reduced_width) = match mode {
        SolveMode::Exact => {
            let t = Instant::now();
            let inst = reduced_exact(&dec, &tables, vminus)?;
            timings.reduce_ms = ms(t);
            let t = Instant::now();
            let td = heuristic_decomposition(&intersection_graph(&inst.hypergraph));
            let sol = solve_treedp(&inst, &td)?;
            timings.dp_ms = ms(t);
            let mut x = vec![Rational::zero(); n];
            for &v in vminus {
                if sol.assignment.get(v) {
                    x[v] = Rational::one();
                }
            }
            for tb in &tables {
                let z = neighborhood_mask(&tb.bin_vars, |v| sol.assignment.get(v));
                if let PsiEntries::Exact { witnesses, .. } = &tb.entries {
                    for (&v, w) in tb.cont_vars.iter().zip(&witnesses[z]) {
                        x[v] = w.clone();
                    }
                }
            }
            let value = p.evaluate(&x)?;
            if value != sol.value {
                return Err(Error::Internal(format!(
                    "reconstructed point has value {} but the reduced optimum is {}",
                    format_rational(&value),
                    format_rational(&sol.value)
                )));
            }
            (
                Point::exact(x)?,
                Value::Exact(value),
                inst.nodes().len(),
                inst.edge_costs.len() + inst.node_costs.len(),
                td.width(),
            )
        }
        SolveMode::Numeric => {
            let t = Instant::now();
            let inst = reduced_float(&dec, &tables, vminus)?;
            timings.reduce_ms = ms(t);
            let t = Instant::now();
            let td = heuristic_decomposition(&intersection_graph(&inst.hypergraph));
            let sol = solve_treedp(&inst, &td)?;
            timings.dp_ms = ms(t);
            let mut x = vec![0.0; n];
            for &v in vminus {
                if sol.assignment.get(v) {
                    x[v] = 1.0;
                }
            }
            for tb in &tables {
                let z = neighborhood_mask(&tb.bin_vars, |v| sol.assignment.get(v));
                if let PsiEntries::Numeric { witnesses, .. } = &tb.entries {
                    for (&v, w) in tb.cont_vars.iter().zip(&witnesses[z]) {
                        x[v] = *w;
                    }
                }
            }
            let value = p.evaluate_f64(&x)?;
            (
                Point::float(x)?,
                Value::Float(value),
                inst.nodes().len(),
                inst.edge_costs.len() + inst.node_costs.len(),
                td.width(),
            )
        }
    };
    timings.total_ms = ms(start);

    let input_width = match &analysis.check.tw_verdict {
        WidthVerdict::Yes { width, .. } => Some(*width),
        _ => None,
    };
    let diagnostics = Diagnostics {
        n,
        degree,
        num_terms: p.num_terms(),
        input_bits: p.input_bits(),
        num_components: dec.blocks.len(),
        block_size_max: analysis.check.block_size_max,
        nbr_size_max: analysis.check.nbr_size_max,
        table_entries: tables.iter().map(PsiTable::len).sum(),
        reduced_nodes,
        reduced_terms,
        reduced_width,
        input_width,
        gap_bound: tables.iter().map(PsiTable::max_gap_bound).sum(),
        timings,
    };
    Ok(Solution {
        value,
        point,
        mode,
        partition: analysis.partition,
        report: analysis.report,
        check: analysis.check,
        diagnostics,
    })
}

fn neighborhood_mask(bin_vars: &[usize], bit: impl Fn(usize) -> bool) -> usize {
    bin_vars
        .iter()
        .enumerate()
        .filter(|(_, &v)| bit(v))
        .fold(0, |acc, (j, _)| acc | 1 << j)
}

/// `f_minus` with `z^k = z`, plus the multilinear interpolant of each table
/// on its neighborhood, as a binary problem over `vminus`.
pub fn reduced_exact(
    dec: &Decomposition,
    tables: &[PsiTable],
    vminus: &BTreeSet<usize>,
) -> Result<BpoInstance<Rational>> {
    let mut inst = BpoInstance::from_polynomial(&dec.f_minus, vminus.iter().copied())?;
    for tb in tables {
        let PsiEntries::Exact { values, .. } = &tb.entries else {
            return Err(Error::Internal("numeric table in exact reduction".into()));
        };
        let interp = multilinear_from_table(tb.arity(), values)?;
        for (m, c) in interp.terms() {
            let s: Vec<usize> = m.support().map(|j| tb.bin_vars[j]).collect();
            inst.add_term(&s, c);
        }
    }
    inst.edge_costs.retain(|_, c| !c.is_zero());
    inst.node_costs.retain(|_, c| !c.is_zero());
    Ok(inst)
}

/// Floating-point counterpart of [`reduced_exact`] for numeric tables.
pub fn reduced_float(dec: &Decomposition, tables: &[PsiTable], vminus: &BTreeSet<usize>) -> Result<BpoInstance<f64>> {
    let exact_part = BpoInstance::from_polynomial(&dec.f_minus, vminus.iter().copied())?;
    let mut inst = exact_part.map_costs(rational_to_f64);
    for tb in tables {
        let PsiEntries::Numeric { values, .. } = &tb.entries else {
            return Err(Error::Internal("exact table in numeric reduction".into()));
        };
        let mut coef = values.clone();
        mobius_transform(&mut coef);
        for (mask, c) in coef.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let s: Vec<usize> = (0..tb.arity())
                .filter(|j| mask >> j & 1 == 1)
                .map(|j| tb.bin_vars[j])
                .collect();
            inst.add_term(&s, c);
        }
    }
    Ok(inst)
}

/// Independent re-check of a returned solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertifyReport {
    pub value_matches: bool,
    pub in_box: bool,
    pub vminus_binary: bool,
    /// `|f(point) - value|`, zero in exact mode when the values agree.
    pub value_error: f64,
    pub ok: bool,
}

pub fn certify(sol: &Solution, p: &Polynomial) -> Result<CertifyReport> {
    let (value_matches, value_error, in_box, vminus_binary) = match (&sol.point, &sol.value) {
        (Point::Exact(x), Value::Exact(v)) => {
            let fx = p.evaluate(x)?;
            let zero = Rational::zero();
            let one = Rational::one();
            (
                fx == *v,
                rational_to_f64(&(fx - v)).abs(),
                x.iter().all(|c| *c >= zero && *c <= one),
                sol.partition.vminus.iter().all(|&i| x[i] == zero || x[i] == one),
            )
        }
        (Point::Float(x), Value::Float(v)) => {
            let fx = p.evaluate_f64(x)?;
            let err = (fx - v).abs();
            (
                err <= 1e-9 * (1.0 + v.abs()),
                err,
                x.iter().all(|c| (0.0..=1.0).contains(c)),
                sol.partition.vminus.iter().all(|&i| x[i] == 0.0 || x[i] == 1.0),
            )
        }
        _ => (false, f64::INFINITY, false, false),
    };
    Ok(CertifyReport {
        value_matches,
        in_box,
        vminus_binary,
        value_error,
        ok: value_matches && in_box && vminus_binary && sol.point.len() == p.nvars(),
    })
}

/// Exact values become rational strings, floats stay JSON numbers.
pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Exact(r) => Json::String(format_rational(r)),
        Value::Float(x) => json!(x),
    }
}

pub fn point_json(x: &Point) -> Json {
    match x {
        Point::Exact(c) => Json::Array(c.iter().map(|r| Json::String(format_rational(r))).collect()),
        Point::Float(c) => json!(c),
    }
}

pub fn partition_json(part: &Partition) -> Json {
    let certs: Vec<Json> = part
        .certificates
        .values()
        .map(|c| json!({"variable": c.variable, "rule": c.rule}))
        .collect();
    json!({
        "vminus": part.vminus,
        "vplus": part.vplus,
        "certificates": certs,
    })
}

/// Report of [`analyze`]: partition, components and assumption verdict.
pub fn analysis_json(a: &Analysis) -> Json {
    json!({
        "partition": partition_json(&a.partition),
        "components": a.report.components,
        "neighborhoods": a.report.neighborhoods,
        "dmax": a.report.dmax,
        "assumptions": a.check,
    })
}

impl Solution {
    /// JSON report; timings are left out unless asked for so that repeated
    /// runs print identical bytes.
    pub fn to_json(&self, with_timings: bool) -> Json {
        let mut diag = serde_json::to_value(&self.diagnostics).expect("serializable");
        if !with_timings {
            if let Json::Object(m) = &mut diag {
                m.remove("timings");
            }
        }
        json!({
            "value": value_json(&self.value),
            "point": point_json(&self.point),
            "mode": self.mode,
            "partition": partition_json(&self.partition),
            "components": self.report.components,
            "neighborhoods": self.report.neighborhoods,
            "assumptions": {
                "pass": self.check.pass,
                "width_graph": self.check.width_graph,
                "bound": self.check.tw_or_itw_bound,
                "verdict": verdict_summary(&self.check.tw_verdict),
                "failures": self.check.failures,
            },
            "diagnostics": diag,
        })
    }
}

fn verdict_summary(v: &WidthVerdict) -> Json {
    match v {
        WidthVerdict::Yes { width, .. } => json!({"verdict": "yes", "width": width}),
        WidthVerdict::No { lower_bound } => json!({"verdict": "no", "lower_bound": lower_bound}),
        WidthVerdict::Unknown {
            lower_bound,
            upper_bound,
        } => json!({"verdict": "unknown", "lower_bound": lower_bound, "upper_bound": upper_bound}),
    }
}

/// Whole-instance exact reference for quadratics: face enumeration over all
/// `n` variables.
pub fn quadratic_oracle(p: &Polynomial) -> Result<(Rational, Vec<Rational>)> {
    let s = crate::block_solver::solve_quadratic_box(p)?;
    Ok((s.value, s.argmin))
}
