//! Block-Marschak polynomials (Möbius inversion over the subset lattice) and
//! the axiom battery: marginality, recursivity, non-negativity.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{Agent, AlternativeSet, ChoiceRule, JointChoiceRule, Table};
use crate::rational::Rational;
use crate::report::{AxiomReport, Tuple, Witness, WitnessKind};
use crate::subset::{nonempty_subsets, Subset};

/// Dense values indexed by `(x, y, A, B)` with `x ∈ A ⊆ X`, `y ∈ B ⊆ Y`.
/// Entries outside that domain are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointPolys {
    nx: usize,
    ny: usize,
    values: Vec<Rational>,
}

impl JointPolys {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        let len = (1usize << nx) * (1usize << ny) * nx * ny;
        JointPolys { nx, ny, values: vec![Rational::zero(); len] }
    }

    fn idx(&self, x: usize, y: usize, a: Subset, b: Subset) -> usize {
        (((a.index() << self.ny) | b.index()) * self.nx + x) * self.ny + y
    }

    pub fn get(&self, x: usize, y: usize, a: Subset, b: Subset) -> &Rational {
        &self.values[self.idx(x, y, a, b)]
    }

    pub fn get_mut(&mut self, x: usize, y: usize, a: Subset, b: Subset) -> &mut Rational {
        let i = self.idx(x, y, a, b);
        &mut self.values[i]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Every domain tuple `(x, y, A, B)` in canonical order: descending `|A|`,
    /// then descending `|B|`, then bitset order of `A` and `B`, then `x`, `y`.
    pub fn domain(&self) -> Vec<(usize, usize, Subset, Subset)> {
        let mut sets: Vec<(Subset, Subset)> = nonempty_subsets(self.nx)
            .flat_map(|a| nonempty_subsets(self.ny).map(move |b| (a, b)))
            .collect();
        sets.sort_by_key(|&(a, b)| (std::cmp::Reverse(a.len()), std::cmp::Reverse(b.len()), a, b));
        sets.into_iter()
            .flat_map(|(a, b)| a.iter().flat_map(move |x| b.iter().map(move |y| (x, y, a, b))))
            .collect()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = ((usize, usize, Subset, Subset), &Rational)> {
        self.domain().into_iter().filter_map(move |t| {
            let v = self.get(t.0, t.1, t.2, t.3);
            (!v.is_zero()).then_some((t, v))
        })
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }
}

/// Single-agent polynomial values indexed by `(x, A)`, `x ∈ A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalPolys {
    n: usize,
    values: Vec<Rational>,
}

impl MarginalPolys {
    pub fn zeros(n: usize) -> Self {
        MarginalPolys { n, values: vec![Rational::zero(); (1usize << n) * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, a: Subset) -> &Rational {
        &self.values[a.index() * self.n + x]
    }

    pub fn get_mut(&mut self, x: usize, a: Subset) -> &mut Rational {
        &mut self.values[a.index() * self.n + x]
    }

    /// Domain pairs `(x, A)` in canonical edge order: `|A|` ascending, bitset of `A`, then `x`.
    pub fn domain(&self) -> Vec<(usize, Subset)> {
        let mut sets: Vec<Subset> = nonempty_subsets(self.n).collect();
        sets.sort_by_key(|a| (a.len(), *a));
        sets.into_iter().flat_map(|a| a.iter().map(move |x| (x, a))).collect()
    }
}

/// Two-agent polynomials plus, when marginality holds, both single-agent ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockMarschakTable {
    pub x_set: AlternativeSet,
    pub y_set: AlternativeSet,
    pub joint: JointPolys,
    pub marginal1: Option<MarginalPolys>,
    pub marginal2: Option<MarginalPolys>,
}

impl BlockMarschakTable {
    pub fn marginal(&self, agent: Agent) -> Option<&MarginalPolys> {
        match agent {
            Agent::First => self.marginal1.as_ref(),
            Agent::Second => self.marginal2.as_ref(),
        }
    }

    /// Swaps agents: `(x, y, A, B) ↦ (y, x, B, A)`.
    pub fn transpose(&self) -> BlockMarschakTable {
        let (nx, ny) = self.joint.dims();
        let mut joint = JointPolys::zeros(ny, nx);
        for ((x, y, a, b), v) in self.joint.nonzero() {
            *joint.get_mut(y, x, b, a) = v.clone();
        }
        BlockMarschakTable {
            x_set: self.y_set.clone(),
            y_set: self.x_set.clone(),
            joint,
            marginal1: self.marginal2.clone(),
            marginal2: self.marginal1.clone(),
        }
    }
}

fn prob(rule: &JointChoiceRule, x: usize, y: usize, a: Subset, b: Subset) -> &Rational {
    rule.prob(x, y, a, b).expect("complete rule")
}

/// `(x,y)`-slice of the two-agent polynomials by the recursive form
/// `q(A,B) = p(A,B) − Σ_{A′×B′ ⊋ A×B} q(A′,B′)`, visiting budgets by descending `|A|+|B|`.
fn slice_recursive(rule: &JointChoiceRule, x: usize, y: usize) -> Vec<Rational> {
    let (nx, ny) = (rule.nx(), rule.ny());
    let (fx, fy) = (Subset::full(nx), Subset::full(ny));
    let mut q = vec![Rational::zero(); (1 << nx) << ny];
    let mut pairs: Vec<(Subset, Subset)> = Subset::singleton(x)
        .supersets_within(fx)
        .flat_map(|a| Subset::singleton(y).supersets_within(fy).map(move |b| (a, b)))
        .collect();
    pairs.sort_by_key(|&(a, b)| std::cmp::Reverse(a.len() + b.len()));
    for (a, b) in pairs {
        let mut v = prob(rule, x, y, a, b).clone();
        for a2 in a.supersets_within(fx) {
            for b2 in b.supersets_within(fy) {
                if a2 != a || b2 != b {
                    v -= &q[(a2.index() << ny) | b2.index()];
                }
            }
        }
        q[(a.index() << ny) | b.index()] = v;
    }
    q
}

fn alternating_sum(rule: &JointChoiceRule, x: usize, y: usize, a: Subset, b: Subset) -> Rational {
    let (fx, fy) = (Subset::full(rule.nx()), Subset::full(rule.ny()));
    let mut acc = Rational::zero();
    for a2 in a.supersets_within(fx) {
        for b2 in b.supersets_within(fy) {
            let p = prob(rule, x, y, a2, b2);
            if (a2.len() - a.len() + b2.len() - b.len()).is_multiple_of(2) {
                acc += p;
            } else {
                acc -= p;
            }
        }
    }
    acc
}

/// Two-agent polynomials by the direct alternating sum
/// `Σ_{A′⊇A} Σ_{B′⊇B} (−1)^{|A′∖A|+|B′∖B|} p(x,y|A′,B′)`.
pub fn bm_joint_direct(rule: &JointChoiceRule) -> Result<JointPolys> {
    rule.require_complete()?;
    let mut out = JointPolys::zeros(rule.nx(), rule.ny());
    for (x, y, a, b) in out.domain() {
        *out.get_mut(x, y, a, b) = alternating_sum(rule, x, y, a, b);
    }
    Ok(out)
}

pub fn bm_joint(rule: &JointChoiceRule) -> Result<BlockMarschakTable> {
    bm_joint_with(rule, Execution::default())
}

/// Two-agent Block-Marschak polynomials, computed recursively per `(x, y)`
/// and checked entrywise against the direct alternating sum.
pub fn bm_joint_with(rule: &JointChoiceRule, exec: Execution) -> Result<BlockMarschakTable> {
    rule.require_complete()?;
    let (nx, ny) = (rule.nx(), rule.ny());
    let cells: Vec<(usize, usize)> = (0..nx).flat_map(|x| (0..ny).map(move |y| (x, y))).collect();
    let slices = exec.map(cells, |(x, y)| {
        let q = slice_recursive(rule, x, y);
        let mismatch = Subset::singleton(x)
            .supersets_within(Subset::full(nx))
            .flat_map(|a| Subset::singleton(y).supersets_within(Subset::full(ny)).map(move |b| (a, b)))
            .find(|&(a, b)| q[(a.index() << ny) | b.index()] != alternating_sum(rule, x, y, a, b));
        (x, y, q, mismatch)
    });
    let mut joint = JointPolys::zeros(nx, ny);
    for (x, y, q, mismatch) in slices {
        if let Some((a, b)) = mismatch {
            return Err(Error::Internal(format!(
                "recursive and alternating-sum polynomials differ at ({x}, {y}, {a:?}, {b:?})"
            )));
        }
        for a in Subset::singleton(x).supersets_within(Subset::full(nx)) {
            for b in Subset::singleton(y).supersets_within(Subset::full(ny)) {
                *joint.get_mut(x, y, a, b) = q[(a.index() << ny) | b.index()].clone();
            }
        }
    }
    let (marginal1, marginal2) = if check_marginality(rule)?.passed() {
        (Some(marginal_from(rule, Agent::First)), Some(marginal_from(rule, Agent::Second)))
    } else {
        (None, None)
    };
    Ok(BlockMarschakTable {
        x_set: rule.x_set().clone(),
        y_set: rule.y_set().clone(),
        joint,
        marginal1,
        marginal2,
    })
}

/// Single-agent polynomials `q(x,A) = Σ_{A′⊇A} (−1)^{|A′∖A|} p(x,A′)`.
pub fn single_agent_polys(n: usize, p: impl Fn(usize, Subset) -> Rational) -> MarginalPolys {
    let full = Subset::full(n);
    let mut out = MarginalPolys::zeros(n);
    for a in nonempty_subsets(n) {
        for x in a.iter() {
            let mut acc = Rational::zero();
            for a2 in a.supersets_within(full) {
                if (a2.len() - a.len()) % 2 == 0 {
                    acc += p(x, a2);
                } else {
                    acc -= p(x, a2);
                }
            }
            *out.get_mut(x, a) = acc;
        }
    }
    out
}

pub fn choice_rule_polys(rule: &ChoiceRule) -> Result<MarginalPolys> {
    if !rule.is_complete() {
        return Err(Error::Format("single-agent rule must be defined on every menu".into()));
    }
    Ok(single_agent_polys(rule.n(), |x, a| rule.prob(x, a).expect("complete").clone()))
}

fn marginal_from(rule: &JointChoiceRule, agent: Agent) -> MarginalPolys {
    match agent {
        Agent::First => {
            let fy = Subset::full(rule.ny());
            single_agent_polys(rule.nx(), |x, a| rule.table(a, fy).expect("complete").row_sum(x))
        }
        Agent::Second => {
            let fx = Subset::full(rule.nx());
            single_agent_polys(rule.ny(), |y, b| rule.table(fx, b).expect("complete").col_sum(y))
        }
    }
}

/// Single-agent polynomials of one marginal rule. Requires marginality.
pub fn bm_marginal(rule: &JointChoiceRule, agent: Agent) -> Result<MarginalPolys> {
    let report = check_marginality(rule)?;
    if !report.passed() {
        return Err(Error::MarginalityFailure(report.witnesses.len()));
    }
    Ok(marginal_from(rule, agent))
}

fn marginality_witnesses(
    rule: &JointChoiceRule,
    tables: &BTreeMap<(Subset, Subset), &Table>,
) -> Vec<Witness> {
    let (xs, ys) = (rule.x_set(), rule.y_set());
    let mut out = Vec::new();
    // agent 1: row sums across the second agent's budgets
    let mut by_a: BTreeMap<Subset, Vec<(Subset, &Table)>> = BTreeMap::new();
    let mut by_b: BTreeMap<Subset, Vec<(Subset, &Table)>> = BTreeMap::new();
    for (&(a, b), &t) in tables {
        by_a.entry(a).or_default().push((b, t));
        by_b.entry(b).or_default().push((a, t));
    }
    let fy = ys.full();
    for (&a, group) in &by_a {
        let (ref_b, ref_t) = group.iter().find(|(b, _)| *b == fy).unwrap_or(&group[0]);
        for x in a.iter() {
            let reference = ref_t.row_sum(x);
            for (b, t) in group {
                if b == ref_b {
                    continue;
                }
                let s = t.row_sum(x);
                if s != reference {
                    out.push(
                        Tuple::new()
                            .alt(xs, x)
                            .set(xs, a)
                            .set(ys, *b)
                            .set(ys, *ref_b)
                            .witness(WitnessKind::Marginality, s, reference.clone()),
                    );
                }
            }
        }
    }
    let fx = xs.full();
    for (&b, group) in &by_b {
        let (ref_a, ref_t) = group.iter().find(|(a, _)| *a == fx).unwrap_or(&group[0]);
        for y in b.iter() {
            let reference = ref_t.col_sum(y);
            for (a, t) in group {
                if a == ref_a {
                    continue;
                }
                let s = t.col_sum(y);
                if s != reference {
                    out.push(
                        Tuple::new()
                            .alt(ys, y)
                            .set(ys, b)
                            .set(xs, *a)
                            .set(xs, *ref_a)
                            .witness(WitnessKind::Marginality, s, reference.clone()),
                    );
                }
            }
        }
    }
    out
}

/// Marginality on a complete rule: each row (column) sum is compared with the
/// one at the full opposite budget.
///
/// Witness tuples are `(x; A, B, reference B′)` with `lhs` the sum at `B`.
pub fn check_marginality(rule: &JointChoiceRule) -> Result<AxiomReport> {
    rule.require_complete()?;
    Ok(check_marginality_partial(rule))
}

/// Marginality restricted to the tables actually present. The reference for
/// each group is the full opposite budget when present, else its first table.
pub fn check_marginality_partial(rule: &JointChoiceRule) -> AxiomReport {
    let tables = rule.tables().map(|(k, t)| (*k, t)).collect();
    AxiomReport::from_witnesses(marginality_witnesses(rule, &tables))
}

pub fn check_nonnegativity(bm: &BlockMarschakTable) -> AxiomReport {
    let witnesses = bm
        .joint
        .nonzero()
        .filter(|(_, v)| v.is_negative())
        .map(|((x, y, a, b), v)| {
            Tuple::new()
                .alt(&bm.x_set, x)
                .alt(&bm.y_set, y)
                .set(&bm.x_set, a)
                .set(&bm.y_set, b)
                .witness(WitnessKind::NegativePolynomial, v.clone(), Rational::zero())
        })
        .collect();
    AxiomReport::from_witnesses(witnesses)
}

/// `Σ_{x∈A} q(x,y|A,B) = Σ_{z∉A} q(z,y|A∪{z},B)` for every non-empty `A ⊊ X`,
/// and the mirrored identity for every non-empty `B ⊊ Y`.
pub fn check_recursivity(bm: &BlockMarschakTable) -> AxiomReport {
    let q = &bm.joint;
    let (nx, ny) = q.dims();
    let (fx, fy) = (Subset::full(nx), Subset::full(ny));
    let mut out = Vec::new();
    for a in nonempty_subsets(nx).filter(|&a| a != fx) {
        for b in nonempty_subsets(ny) {
            for y in b.iter() {
                let lhs: Rational = a.iter().map(|x| q.get(x, y, a, b)).sum();
                let rhs: Rational = fx.minus(a).iter().map(|z| q.get(z, y, a.with(z), b)).sum();
                if lhs != rhs {
                    out.push(
                        Tuple::new()
                            .alt(&bm.y_set, y)
                            .set(&bm.x_set, a)
                            .set(&bm.y_set, b)
                            .witness(WitnessKind::Recursivity, lhs, rhs),
                    );
                }
            }
        }
    }
    for b in nonempty_subsets(ny).filter(|&b| b != fy) {
        for a in nonempty_subsets(nx) {
            for x in a.iter() {
                let lhs: Rational = b.iter().map(|y| q.get(x, y, a, b)).sum();
                let rhs: Rational = fy.minus(b).iter().map(|z| q.get(x, z, a, b.with(z))).sum();
                if lhs != rhs {
                    out.push(
                        Tuple::new()
                            .alt(&bm.x_set, x)
                            .set(&bm.x_set, a)
                            .set(&bm.y_set, b)
                            .witness(WitnessKind::Recursivity, lhs, rhs),
                    );
                }
            }
        }
    }
    AxiomReport::from_witnesses(out)
}

/// Raw zeta transform `Σ_{A′⊇A, B′⊇B} q(x,y|A′,B′)`, with no validation.
pub fn reconstruct_cells(q: &JointPolys) -> JointPolys {
    let (nx, ny) = q.dims();
    let (fx, fy) = (Subset::full(nx), Subset::full(ny));
    let mut out = JointPolys::zeros(nx, ny);
    for (x, y, a, b) in q.domain() {
        let mut acc = Rational::zero();
        for a2 in a.supersets_within(fx) {
            for b2 in b.supersets_within(fy) {
                acc += q.get(x, y, a2, b2);
            }
        }
        *out.get_mut(x, y, a, b) = acc;
    }
    out
}

/// Inverts the polynomials back into a choice rule.
pub fn reconstruct_p(bm: &BlockMarschakTable) -> Result<JointChoiceRule> {
    let cells = reconstruct_cells(&bm.joint);
    let (nx, ny) = cells.dims();
    let mut tables = Vec::new();
    for a in nonempty_subsets(nx) {
        for b in nonempty_subsets(ny) {
            let mut t = Table::zeros(nx, ny);
            for x in a.iter() {
                for y in b.iter() {
                    t.set(x, y, cells.get(x, y, a, b).clone());
                }
            }
            tables.push(((a, b), t));
        }
    }
    JointChoiceRule::signed(bm.x_set.clone(), bm.y_set.clone(), tables)
}

/// The marginal rules `p1(x,A) = Σ_y p(x,y|A,Y)` and `p2(y,B) = Σ_x p(x,y|X,B)`.
/// Fails unless the rule is complete and satisfies marginality.
pub fn marginal_rules(rule: &JointChoiceRule) -> Result<(ChoiceRule, ChoiceRule)> {
    let report = check_marginality(rule)?;
    if !report.passed() {
        return Err(Error::MarginalityFailure(report.witnesses.len()));
    }
    marginal_rules_unchecked(rule)
}

/// Marginals read off the full opposite budget without checking marginality.
/// Needs the `(A, Y)` and `(X, B)` tables only.
pub fn marginal_rules_unchecked(rule: &JointChoiceRule) -> Result<(ChoiceRule, ChoiceRule)> {
    let (nx, ny) = (rule.nx(), rule.ny());
    let (fx, fy) = (Subset::full(nx), Subset::full(ny));
    let mut p1 = BTreeMap::new();
    for a in nonempty_subsets(nx) {
        let t = rule.table(a, fy).ok_or_else(|| rule.partial_error(a, fy))?;
        p1.insert(a, (0..nx).map(|x| t.row_sum(x)).collect());
    }
    let mut p2 = BTreeMap::new();
    for b in nonempty_subsets(ny) {
        let t = rule.table(fx, b).ok_or_else(|| rule.partial_error(fx, b))?;
        p2.insert(b, (0..ny).map(|y| t.col_sum(y)).collect());
    }
    Ok((
        ChoiceRule::signed(rule.x_set().clone(), p1)?,
        ChoiceRule::signed(rule.y_set().clone(), p2)?,
    ))
}
