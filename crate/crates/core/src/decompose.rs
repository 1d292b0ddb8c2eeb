//! Constructive decompositions into (signed) measures over linear orders and
//! order pairs.
//!
//! * [`strip_signed_flow`] peels a flow-conserving lattice graph with signed
//!   capacities into signed path flows.
//! * [`lemma5_decompose`] applies it to a single-agent rule.
//! * [`theorem2_decompose`] writes any joint rule satisfying marginality as a
//!   signed measure over order pairs.
//! * [`theorem3_recover`] recovers a probability measure over order pairs when
//!   one marginal is uniquely rationalizable.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::{
    build_system, flow_conservation, order_to_path, unique_rum_check, Edge, LatticeFlowGraph,
    LatticePath, MarginalGraphSystem, PathCertificate,
};
use crate::measure::{SignedOrderMeasure, SignedPairMeasure};
use crate::model::{Agent, ChoiceRule, JointChoiceRule, LinearOrder, OrderPair};
use crate::moebius::{bm_joint, check_nonnegativity, choice_rule_polys, BlockMarschakTable, JointPolys};
use crate::rational::{format_rational, Rational};
use crate::subset::{nonempty_subsets, Subset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    NegativeStripping,
    PositiveStripping,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathFlowStep {
    pub order: LinearOrder,
    pub amount: Rational,
    pub phase: Phase,
}

/// One algorithm step, as streamed by `--trace`.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEvent {
    /// Which graph is being stripped, e.g. `marginal` or `(c, {c,d})`.
    pub graph: String,
    pub phase: Phase,
    pub edge_from: Vec<String>,
    pub edge_alt: String,
    pub order: Vec<String>,
    pub amount: String,
    /// Negative edges left in the residual after this step.
    pub negative_edges: usize,
}

pub type TraceSink<'a> = &'a mut dyn FnMut(&TraceEvent);

fn reborrow<'s>(trace: &'s mut Option<TraceSink<'_>>) -> Option<TraceSink<'s>> {
    match trace {
        Some(f) => Some(&mut **f),
        None => None,
    }
}

#[derive(Clone, Debug)]
pub struct StripOutcome {
    /// `f = g + h`; total mass equals the graph's total outflow.
    pub weights: SignedOrderMeasure,
    pub steps: Vec<PathFlowStep>,
    pub phase1_iterations: usize,
    pub phase2_iterations: usize,
    pub initial_negative_edges: usize,
    pub edge_count: usize,
}

struct Stripper<'a, 'b> {
    graph: &'a str,
    trace: Option<&'a mut TraceSink<'b>>,
}

impl Stripper<'_, '_> {
    fn emit(&mut self, g: &LatticeFlowGraph, phase: Phase, edge: Edge, order: &LinearOrder, amount: &Rational) {
        if let Some(sink) = self.trace.as_mut() {
            sink(&TraceEvent {
                graph: self.graph.to_string(),
                phase,
                edge_from: g.ground.labels_of(edge.from),
                edge_alt: g.ground.label(edge.alt).to_string(),
                order: order.labels(&g.ground),
                amount: format_rational(amount),
                negative_edges: g.negative_edges(),
            });
        }
    }
}

/// The path ranking `ground∖A` first, then `x`, then `A∖{x}`, each block ascending.
fn canonical_path_through(n: usize, e: Edge) -> LinearOrder {
    let above = Subset::full(n).minus(e.from);
    let below = e.from.without(e.alt);
    let ranking = above.iter().chain([e.alt]).chain(below.iter()).collect();
    LinearOrder::new(ranking).expect("partition of the ground set")
}

/// Greedy descent along the first positive out-edge at each node.
fn positive_path(g: &LatticeFlowGraph) -> Option<LatticePath> {
    let n = g.n();
    let mut node = Subset::full(n);
    let mut sets = vec![node];
    while !node.is_empty() {
        let x = node.iter().find(|&x| g.capacity(Edge { alt: x, from: node }).is_positive())?;
        node = node.without(x);
        sets.push(node);
    }
    LatticePath::new(n, sets).ok()
}

fn strip_positive(
    residual: &mut LatticeFlowGraph,
    out: &mut StripOutcome,
    st: &mut Stripper<'_, '_>,
) -> Result<()> {
    while !residual.is_zero() {
        let path = positive_path(residual).ok_or_else(|| {
            Error::Internal("positive flow left without a positive path".into())
        })?;
        let r = path.min_capacity(residual);
        residual.add_along(&path, &-r.clone());
        let order = crate::graphs::path_to_order(&path);
        out.phase2_iterations += 1;
        let first = path.edges().next().expect("non-empty path");
        st.emit(residual, Phase::PositiveStripping, first, &order, &r);
        out.weights.add(order.clone(), r.clone());
        out.steps.push(PathFlowStep { order, amount: r, phase: Phase::PositiveStripping });
    }
    Ok(())
}

fn new_outcome(g: &LatticeFlowGraph) -> StripOutcome {
    StripOutcome {
        weights: SignedOrderMeasure::empty(),
        steps: Vec::new(),
        phase1_iterations: 0,
        phase2_iterations: 0,
        initial_negative_edges: g.negative_edges(),
        edge_count: g.edges().len(),
    }
}

fn require_conservation(g: &LatticeFlowGraph) -> Result<()> {
    let report = flow_conservation(g);
    if report.passed() {
        Ok(())
    } else {
        Err(Error::FlowNotConserved(report.witnesses.len()))
    }
}

/// Signed path decomposition of a flow-conserving graph.
///
/// Phase 1 repeatedly takes the most negative edge (ties: `|A|`, bitset of
/// `A`, then `x`, all ascending), routes the canonical path through it and
/// adds `|r|` along that path, recording weight `r`. Phase 2 then peels
/// positive paths at their minimum capacity until the residual is zero.
pub fn strip_signed_flow(graph: &LatticeFlowGraph, trace: Option<TraceSink<'_>>) -> Result<StripOutcome> {
    strip_signed_flow_named(graph, "graph", trace)
}

fn strip_signed_flow_named(
    graph: &LatticeFlowGraph,
    name: &str,
    mut trace: Option<TraceSink<'_>>,
) -> Result<StripOutcome> {
    require_conservation(graph)?;
    let mut st = Stripper { graph: name, trace: trace.as_mut() };
    let mut residual = graph.clone();
    let mut out = new_outcome(graph);
    let n = graph.n();
    loop {
        let mut worst: Option<(Edge, Rational)> = None;
        for e in residual.edges() {
            let c = residual.capacity(e);
            if c.is_negative() && worst.as_ref().is_none_or(|(_, w)| c < w) {
                worst = Some((e, c.clone()));
            }
        }
        let Some((edge, r)) = worst else { break };
        let order = canonical_path_through(n, edge);
        residual.add_along(&order_to_path(&order), &-r.clone());
        out.phase1_iterations += 1;
        st.emit(&residual, Phase::NegativeStripping, edge, &order, &r);
        out.weights.add(order.clone(), r.clone());
        out.steps.push(PathFlowStep { order, amount: r, phase: Phase::NegativeStripping });
    }
    strip_positive(&mut residual, &mut out, &mut st)?;
    Ok(out)
}

/// Phase 2 only: path decomposition of a non-negative flow-conserving graph.
pub fn strip_nonnegative_flow(graph: &LatticeFlowGraph, trace: Option<TraceSink<'_>>) -> Result<StripOutcome> {
    strip_nonnegative_named(graph, "graph", trace)
}

fn strip_nonnegative_named(
    graph: &LatticeFlowGraph,
    name: &str,
    mut trace: Option<TraceSink<'_>>,
) -> Result<StripOutcome> {
    require_conservation(graph)?;
    if let Some(e) = graph.edges().into_iter().find(|&e| graph.capacity(e).is_negative()) {
        return Err(Error::NegativeCapacity {
            edge: format!("{} -> {}", graph.ground.describe(e.from), graph.ground.describe(e.to())),
            value: format_rational(graph.capacity(e)),
        });
    }
    let mut st = Stripper { graph: name, trace: trace.as_mut() };
    let mut residual = graph.clone();
    let mut out = new_outcome(graph);
    strip_positive(&mut residual, &mut out, &mut st)?;
    Ok(out)
}

/// Signed measure over linear orders inducing an arbitrary single-agent rule.
pub fn lemma5_decompose(rule: &ChoiceRule, trace: Option<TraceSink<'_>>) -> Result<(SignedOrderMeasure, StripOutcome)> {
    let polys = choice_rule_polys(rule)?;
    let graph = LatticeFlowGraph::new(rule.set().clone(), polys)?;
    let outcome = strip_signed_flow_named(&graph, "marginal", trace)?;
    outcome.weights.check_mass()?;
    Ok((outcome.weights.clone(), outcome))
}

fn conditional_residual(bm: &BlockMarschakTable, q: &JointPolys, x: usize, a: Subset) -> LatticeFlowGraph {
    let ny = bm.y_set.len();
    let mut g = LatticeFlowGraph::zeros(bm.y_set.clone());
    for b in nonempty_subsets(ny) {
        for y in b.iter() {
            *g.capacity_mut(Edge { alt: y, from: b }) = q.get(x, y, a, b).clone();
        }
    }
    g
}

/// Removes weight `w` of the pair `(first, second)` from every tuple in its M-sets.
fn subtract_pair(q: &mut JointPolys, first: &PathNodes, second: &LinearOrder, w: &Rational) {
    let ny = second.len();
    let second_nodes: Vec<(usize, Subset)> =
        (0..ny).map(|k| (second.ranking()[k], second.lower_set(k))).collect();
    for &(x, c) in &first.nodes {
        for &(y, b) in &second_nodes {
            *q.get_mut(x, y, c, b) -= w;
        }
    }
}

/// `(top, lower set)` pairs along an order's path.
struct PathNodes {
    nodes: Vec<(usize, Subset)>,
}

impl PathNodes {
    fn of(order: &LinearOrder) -> Self {
        let n = order.len();
        PathNodes { nodes: (0..n).map(|k| (order.ranking()[k], order.lower_set(k))).collect() }
    }
}

fn residual_recursive(bm: &BlockMarschakTable, q: &JointPolys) -> bool {
    let probe = BlockMarschakTable {
        x_set: bm.x_set.clone(),
        y_set: bm.y_set.clone(),
        joint: q.clone(),
        marginal1: None,
        marginal2: None,
    };
    crate::moebius::check_recursivity(&probe).passed()
}

/// Sizes of first-agent budgets processed, in order.
fn stage_sizes(nx: usize) -> Vec<usize> {
    match nx {
        1 => vec![1],
        2 => vec![2],
        _ => (2..nx).collect(),
    }
}

/// Signed measure over order pairs inducing a rule that satisfies marginality.
///
/// Budgets of the first agent are cleared by size, doubletons first. For
/// each `(x, A)` with a non-zero conditional graph the graph is stripped into
/// signed flows `g` over the second agent's orders; each `g(≻′)` is attached
/// to the canonical first-agent order ranking `X∖A`, then `x`, then `A∖{x}`,
/// and its contribution is removed from the residual polynomials.
pub fn theorem2_decompose(rule: &JointChoiceRule, mut trace: Option<TraceSink<'_>>) -> Result<SignedPairMeasure> {
    let bm = bm_joint(rule)?;
    if bm.marginal1.is_none() {
        let report = crate::moebius::check_marginality(rule)?;
        return Err(Error::MarginalityFailure(report.witnesses.len()));
    }
    let nx = rule.nx();
    let mut residual = bm.joint.clone();
    let mut nu = SignedPairMeasure::empty();
    for size in stage_sizes(nx) {
        let mut pairs: Vec<(usize, Subset)> = nonempty_subsets(nx)
            .filter(|a| a.len() == size)
            .flat_map(|a| a.iter().map(move |x| (x, a)))
            .collect();
        pairs.sort_by_key(|&(x, a)| (a.without(x), a, x));
        for (x, a) in pairs {
            let graph = conditional_residual(&bm, &residual, x, a);
            if graph.is_zero() {
                continue;
            }
            let name = format!("({}, {})", bm.x_set.label(x), bm.x_set.describe(a));
            let outcome = strip_signed_flow_named(&graph, &name, reborrow(&mut trace))?;
            let first = canonical_path_through(nx, Edge { alt: x, from: a });
            let first_path = PathNodes::of(&first);
            for (second, w) in outcome.weights.iter() {
                subtract_pair(&mut residual, &first_path, second, w);
                nu.add(OrderPair::new(first.clone(), second.clone()), w.clone());
            }
            debug_assert!(residual_recursive(&bm, &residual), "residual lost recursivity");
        }
    }
    if !residual.is_all_zero() {
        let left = residual.nonzero().count();
        return Err(Error::Internal(format!("{left} polynomial(s) non-zero after decomposition")));
    }
    nu.check_mass()?;
    Ok(nu)
}

/// Which agent's marginal graph leads the recovery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Lead {
    #[default]
    Auto,
    Agent(Agent),
}

/// Probability measure over order pairs for a rule satisfying marginality and
/// non-negativity whose lead marginal is uniquely rationalizable.
pub fn theorem3_recover(rule: &JointChoiceRule, lead: Lead) -> Result<SignedPairMeasure> {
    let bm = bm_joint(rule)?;
    if bm.marginal1.is_none() {
        let report = crate::moebius::check_marginality(rule)?;
        return Err(Error::MarginalityFailure(report.witnesses.len()));
    }
    let nonneg = check_nonnegativity(&bm);
    if !nonneg.passed() {
        return Err(Error::NonNegativityFailure(nonneg.witnesses.len()));
    }
    let candidates = match lead {
        Lead::Auto => vec![Agent::First, Agent::Second],
        Lead::Agent(a) => vec![a],
    };
    for agent in candidates {
        let system = build_system(&bm, agent)?;
        let check = unique_rum_check(&system.marginal)?;
        if !check.unique {
            continue;
        }
        let nu = recover_with(&system, &check.certificate)?;
        return Ok(match agent {
            Agent::First => nu,
            Agent::Second => nu.map_keys(OrderPair::swapped),
        });
    }
    Err(match lead {
        Lead::Auto => Error::NeitherMarginalUnique,
        Lead::Agent(a) => Error::MarginalNotUnique(a.number()),
    })
}

/// Walks the certified supported paths, peeling each one's conditional graph
/// at its certificate edge and removing that flow along the whole path.
pub fn recover_with(system: &MarginalGraphSystem, certificate: &[PathCertificate]) -> Result<SignedPairMeasure> {
    let mut marginal = system.marginal.clone();
    let mut conditionals = system.conditionals.clone();
    let mut nu = SignedPairMeasure::empty();
    for PathCertificate { path, edge } in certificate {
        let amount = marginal.capacity(*edge).clone();
        let cond = conditionals[&(edge.alt, edge.from)].clone();
        if amount.is_zero() && cond.is_zero() {
            continue;
        }
        let first = crate::graphs::path_to_order(path);
        let flows = strip_nonnegative_flow(&cond, None)?;
        if flows.weights.total() != amount {
            return Err(Error::Internal("conditional flow differs from marginal edge".into()));
        }
        for (second, w) in flows.weights.iter() {
            nu.add(OrderPair::new(first.clone(), second.clone()), w.clone());
        }
        for e in path.edges() {
            conditionals.get_mut(&(e.alt, e.from)).expect("edge graph").subtract(&cond);
            *marginal.capacity_mut(e) -= &amount;
        }
    }
    if !marginal.is_zero() || conditionals.values().any(|g| !g.is_zero()) {
        return Err(Error::Internal("flow left after recovering all supported paths".into()));
    }
    if !nu.is_nonnegative() {
        return Err(Error::Internal("recovered measure has a negative weight".into()));
    }
    nu.check_mass()?;
    Ok(nu)
}
