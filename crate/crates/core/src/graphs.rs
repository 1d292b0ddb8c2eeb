//! Lattice flow graphs over the power set of a ground set, the marginal graph
//! system of a joint rule, supported paths and the unique-representation test.
//!
//! Nodes are subsets; the edge for `(x, A)` runs from `A` to `A∖{x}`. A path
//! from the ground set down to `∅` removes one alternative per step and is
//! identified with the linear order listing the removed alternatives best-first.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Agent, AlternativeSet, LinearOrder};
use crate::moebius::{BlockMarschakTable, MarginalPolys};
use crate::rational::{format_rational, Rational};
use crate::report::{AxiomReport, Tuple, WitnessKind};
use crate::subset::{nonempty_subsets, Subset};

pub const DEFAULT_PATH_CAP: usize = 10_000;

/// The edge `from → from∖{alt}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub alt: usize,
    pub from: Subset,
}

impl Edge {
    pub fn to(self) -> Subset {
        self.from.without(self.alt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeFlowGraph {
    pub ground: AlternativeSet,
    capacity: MarginalPolys,
}

impl LatticeFlowGraph {
    pub fn new(ground: AlternativeSet, capacity: MarginalPolys) -> Result<Self> {
        if capacity.n() != ground.len() {
            return Err(Error::GroundMismatch("capacity table does not match ground set".into()));
        }
        Ok(LatticeFlowGraph { ground, capacity })
    }

    pub fn zeros(ground: AlternativeSet) -> Self {
        let capacity = MarginalPolys::zeros(ground.len());
        LatticeFlowGraph { ground, capacity }
    }

    pub fn n(&self) -> usize {
        self.ground.len()
    }

    pub fn capacity(&self, e: Edge) -> &Rational {
        self.capacity.get(e.alt, e.from)
    }

    pub fn capacity_mut(&mut self, e: Edge) -> &mut Rational {
        self.capacity.get_mut(e.alt, e.from)
    }

    pub fn capacities(&self) -> &MarginalPolys {
        &self.capacity
    }

    /// All edges in canonical order: `|A|` ascending, bitset of `A`, then `x`.
    pub fn edges(&self) -> Vec<Edge> {
        self.capacity.domain().into_iter().map(|(alt, from)| Edge { alt, from }).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.edges().iter().all(|&e| self.capacity(e).is_zero())
    }

    pub fn inflow(&self, node: Subset) -> Rational {
        Subset::full(self.n())
            .minus(node)
            .iter()
            .map(|z| self.capacity(Edge { alt: z, from: node.with(z) }))
            .sum()
    }

    pub fn outflow(&self, node: Subset) -> Rational {
        node.iter().map(|x| self.capacity(Edge { alt: x, from: node })).sum()
    }

    /// Adds `amount` to every edge of `path`.
    pub fn add_along(&mut self, path: &LatticePath, amount: &Rational) {
        for e in path.edges() {
            *self.capacity_mut(e) += amount;
        }
    }

    /// Subtracts `other`'s capacities edge by edge.
    pub fn subtract(&mut self, other: &LatticeFlowGraph) {
        for e in other.edges() {
            let c = other.capacity(e);
            if !c.is_zero() {
                *self.capacity_mut(e) -= c;
            }
        }
    }

    pub fn negative_edges(&self) -> usize {
        self.edges().into_iter().filter(|&e| self.capacity(e).is_negative()).count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct JsonEdge {
            from: Vec<String>,
            to: Vec<String>,
            cap: String,
        }
        let edges: Vec<JsonEdge> = self
            .edges()
            .into_iter()
            .filter(|&e| !self.capacity(e).is_zero())
            .map(|e| JsonEdge {
                from: self.ground.labels_of(e.from),
                to: self.ground.labels_of(e.to()),
                cap: format_rational(self.capacity(e)),
            })
            .collect();
        serde_json::json!({ "ground": self.ground.labels(), "edges": edges })
    }

    /// Graphviz rendering; zero-capacity edges are omitted.
    pub fn to_dot(&self, name: &str) -> String {
        let node = |s: Subset| {
            if s.is_empty() {
                "\"∅\"".to_string()
            } else {
                format!("\"{}\"", self.ground.labels_of(s).join(","))
            }
        };
        let mut out = format!("digraph \"{}\" {{\n  rankdir=TB;\n", name.replace('"', "'"));
        for e in self.edges() {
            let c = self.capacity(e);
            if c.is_zero() {
                continue;
            }
            out.push_str(&format!(
                "  {} -> {} [label=\"{}\"];\n",
                node(e.from),
                node(e.to()),
                format_rational(c)
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Decreasing chain `ground = A_0 ⊋ A_1 ⊋ … ⊋ A_n = ∅`, one element removed per step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePath {
    sets: Vec<Subset>,
}

impl LatticePath {
    pub fn new(n: usize, sets: Vec<Subset>) -> Result<Self> {
        let ok = sets.len() == n + 1
            && sets[0] == Subset::full(n)
            && sets[n].is_empty()
            && sets.windows(2).all(|w| w[1].is_subset_of(w[0]) && w[0].len() == w[1].len() + 1);
        if !ok {
            return Err(Error::Format(format!("{sets:?} is not a maximal chain")));
        }
        Ok(LatticePath { sets })
    }

    pub fn sets(&self) -> &[Subset] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Edges top-down; edge `k` leaves `A_k`.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.sets.windows(2).map(|w| Edge {
            alt: w[0].minus(w[1]).iter().next().expect("chain step"),
            from: w[0],
        })
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        let k = self.len() - e.from.len();
        self.sets[k] == e.from && self.sets[k + 1] == e.to()
    }

    pub fn min_capacity(&self, g: &LatticeFlowGraph) -> Rational {
        self.edges().map(|e| g.capacity(e).clone()).min().unwrap_or_else(Rational::zero)
    }
}

pub fn order_to_path(order: &LinearOrder) -> LatticePath {
    let n = order.len();
    LatticePath { sets: (0..=n).map(|k| order.lower_set(k)).collect() }
}

pub fn path_to_order(path: &LatticePath) -> LinearOrder {
    LinearOrder::new(path.edges().map(|e| e.alt).collect()).expect("chain removes each element once")
}

/// One marginal graph for the lead agent plus one conditional graph per `(x, A)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalGraphSystem {
    pub lead: Agent,
    pub marginal: LatticeFlowGraph,
    pub conditionals: BTreeMap<(usize, Subset), LatticeFlowGraph>,
}

impl MarginalGraphSystem {
    pub fn conditional(&self, e: Edge) -> &LatticeFlowGraph {
        &self.conditionals[&(e.alt, e.from)]
    }
}

/// Conditional graph of `(x, A)`: capacities `q(x, ·|A, ·)` over the other agent's lattice.
pub fn conditional_graph(bm: &BlockMarschakTable, x: usize, a: Subset) -> LatticeFlowGraph {
    let (_, ny) = bm.joint.dims();
    let mut g = LatticeFlowGraph::zeros(bm.y_set.clone());
    for b in nonempty_subsets(ny) {
        for y in b.iter() {
            *g.capacity_mut(Edge { alt: y, from: b }) = bm.joint.get(x, y, a, b).clone();
        }
    }
    g
}

pub fn build_system(bm: &BlockMarschakTable, lead: Agent) -> Result<MarginalGraphSystem> {
    let oriented;
    let bm = match lead {
        Agent::First => bm,
        Agent::Second => {
            oriented = bm.transpose();
            &oriented
        }
    };
    let marginal = bm.marginal1.clone().ok_or(Error::MarginalityFailure(1))?;
    let marginal = LatticeFlowGraph::new(bm.x_set.clone(), marginal)?;
    let mut conditionals = BTreeMap::new();
    for (x, a) in marginal.capacities().domain() {
        conditionals.insert((x, a), conditional_graph(bm, x, a));
    }
    Ok(MarginalGraphSystem { lead, marginal, conditionals })
}

/// Inflow equals outflow at every node strictly between the ground set and `∅`.
///
/// Witnesses carry the node with `lhs` = inflow and `rhs` = outflow.
pub fn flow_conservation(graph: &LatticeFlowGraph) -> AxiomReport {
    let full = Subset::full(graph.n());
    let witnesses = nonempty_subsets(graph.n())
        .filter(|&a| a != full)
        .filter_map(|a| {
            let (i, o) = (graph.inflow(a), graph.outflow(a));
            (i != o).then(|| {
                Tuple::new().set(&graph.ground, a).witness(WitnessKind::FlowConservation, i, o)
            })
        })
        .collect();
    AxiomReport::from_witnesses(witnesses)
}

fn require_nonnegative(graph: &LatticeFlowGraph) -> Result<()> {
    for e in graph.edges() {
        let c = graph.capacity(e);
        if c.is_negative() {
            return Err(Error::NegativeCapacity {
                edge: format!(
                    "{} -> {}",
                    graph.ground.describe(e.from),
                    graph.ground.describe(e.to())
                ),
                value: format_rational(c),
            });
        }
    }
    Ok(())
}

/// Number of maximal chains with strictly positive capacity on every edge.
pub fn count_supported_paths(graph: &LatticeFlowGraph) -> u128 {
    let n = graph.n();
    let mut count = vec![0u128; 1 << n];
    count[0] = 1;
    for a in nonempty_subsets(n) {
        // subsets of `a` have smaller bitsets, so they are already filled
        count[a.index()] = a
            .iter()
            .filter(|&x| graph.capacity(Edge { alt: x, from: a }).is_positive())
            .map(|x| count[a.without(x).index()])
            .fold(0u128, u128::saturating_add);
    }
    count[Subset::full(n).index()]
}

/// Supported paths in lexicographic order of their linear orders.
pub fn supported_paths(graph: &LatticeFlowGraph, cap: usize) -> Result<Vec<LatticePath>> {
    require_nonnegative(graph)?;
    let total = count_supported_paths(graph);
    if total > cap as u128 {
        return Err(Error::CapExceeded { what: "supported paths", count: total, cap: cap as u128 });
    }
    let n = graph.n();
    let mut out = Vec::with_capacity(total as usize);
    let mut stack = vec![Subset::full(n)];
    descend(graph, &mut stack, &mut out);
    Ok(out)
}

fn descend(graph: &LatticeFlowGraph, stack: &mut Vec<Subset>, out: &mut Vec<LatticePath>) {
    let node = *stack.last().expect("non-empty stack");
    if node.is_empty() {
        out.push(LatticePath { sets: stack.clone() });
        return;
    }
    for x in node.iter() {
        if graph.capacity(Edge { alt: x, from: node }).is_positive() {
            stack.push(node.without(x));
            descend(graph, stack, out);
            stack.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub struct Branching {
    pub branching: bool,
    pub in_branching: bool,
    pub out_branching: bool,
}

fn in_branching_at(p: &LatticePath, q: &LatticePath, i: usize) -> bool {
    p.sets[i] == q.sets[i] && p.sets[i - 1] != q.sets[i - 1]
}

fn out_branching_at(p: &LatticePath, q: &LatticePath, i: usize) -> bool {
    p.sets[i] == q.sets[i] && p.sets[i + 1] != q.sets[i + 1]
}

/// The three branching relations, with indices ranging over interior positions `1..n-1`.
pub fn branching_relation(p: &LatticePath, q: &LatticePath) -> Branching {
    let n = p.len();
    assert_eq!(n, q.len(), "paths over different ground sets");
    let interior = 1..n;
    let in_branching = interior.clone().any(|i| in_branching_at(p, q, i));
    let out_branching = interior.clone().any(|i| out_branching_at(p, q, i));
    let branching = interior.clone().any(|i| {
        p.sets[i - 1] != q.sets[i - 1]
            && (i..n)
                .take_while(|&j| p.sets[j] == q.sets[j])
                .any(|j| p.sets[j + 1] != q.sets[j + 1])
    });
    Branching { branching, in_branching, out_branching }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathCertificate {
    pub path: LatticePath,
    pub edge: Edge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniqueRumCheck {
    pub unique: bool,
    /// One qualifying edge per supported path (complete only when `unique`).
    pub certificate: Vec<PathCertificate>,
    /// First supported path without a qualifying edge.
    pub failing: Option<LatticePath>,
}

/// Qualifying edge of `path`: used by no other supported path, with no
/// in-branching against another supported path strictly above the edge's
/// parent node and no out-branching strictly below its child node.
fn qualifying_edge(path: &LatticePath, others: &[&LatticePath]) -> Option<Edge> {
    let n = path.len();
    path.edges().enumerate().find_map(|(k, e)| {
        if others.iter().any(|o| o.contains_edge(e)) {
            return None;
        }
        let clean = others.iter().all(|o| {
            !(1..k).any(|i| in_branching_at(path, o, i))
                && !(k + 2..n).any(|i| out_branching_at(path, o, i))
        });
        clean.then_some(e)
    })
}

/// Whether a non-negative, flow-conserving marginal graph has a unique
/// decomposition into path flows, by the supported-path criterion.
pub fn unique_rum_check(graph: &LatticeFlowGraph) -> Result<UniqueRumCheck> {
    require_nonnegative(graph)?;
    let report = flow_conservation(graph);
    if !report.passed() {
        return Err(Error::FlowNotConserved(report.witnesses.len()));
    }
    let paths = supported_paths(graph, DEFAULT_PATH_CAP)?;
    let mut certificate = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let others: Vec<&LatticePath> =
            paths.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, q)| q).collect();
        match qualifying_edge(p, &others) {
            Some(edge) => certificate.push(PathCertificate { path: p.clone(), edge }),
            None => {
                return Ok(UniqueRumCheck { unique: false, certificate, failing: Some(p.clone()) })
            }
        }
    }
    Ok(UniqueRumCheck { unique: true, certificate, failing: None })
}

/// Marginal graph whose capacities are the given single-agent polynomials.
pub fn marginal_graph(ground: AlternativeSet, polys: MarginalPolys) -> Result<LatticeFlowGraph> {
    LatticeFlowGraph::new(ground, polys)
}
