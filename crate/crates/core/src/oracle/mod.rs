//! Independent ground truth: direct reconstruction, M-set measures, exact LP
//! feasibility and brute-force uniqueness of random utility representations.
//!
//! Nothing here goes through Möbius inversion or the flow graphs except the
//! M-set comparison, which needs the polynomials it checks against.

pub mod simplex;

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::measure::{AnyMeasure, SignedChoicePairMeasure, SignedMeasure, SignedOrderMeasure, SignedPairMeasure};
use crate::model::{
    AlternativeSet, ChoiceFunction, ChoiceFunctionPair, ChoiceRule, JointChoiceRule, LinearOrder, OrderPair,
};
use crate::moebius::{bm_joint_with, choice_rule_polys};
use crate::rational::{one, Rational};
use crate::report::{AxiomReport, Tuple, Witness, WitnessKind};
use crate::subset::{nonempty_subsets, Subset};

pub use simplex::{Feasibility, LpProblem, Optimum, Sense};

pub const DEFAULT_ORDER_PAIR_CAP: usize = 50_000;
pub const DEFAULT_CHOICE_PAIR_CAP: usize = 100_000;
/// Largest ground set accepted by [`brute_force_unique_rum`].
pub const BRUTE_FORCE_MAX_ALTERNATIVES: usize = 5;

/// The tuple `(x, y, A, B)` naming the event `M_{(x,y),A×B}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MSetQuery {
    pub x: usize,
    pub y: usize,
    pub a: Subset,
    pub b: Subset,
}

/// Outcome of an LP feasibility question with its certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpVerdict<C> {
    Feasible(C),
    /// The optimal phase-1 objective, strictly positive.
    Infeasible { phase1_objective: Rational },
}

impl<C> LpVerdict<C> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpVerdict::Feasible(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RumUniqueness {
    Unique(SignedOrderMeasure),
    /// Two distinct probability measures rationalizing the same rule.
    NonUnique(SignedOrderMeasure, SignedOrderMeasure),
    NotRationalizable { phase1_objective: Rational },
}

impl RumUniqueness {
    pub fn is_unique(&self) -> bool {
        matches!(self, RumUniqueness::Unique(_))
    }
}

/// `true` iff everything outside `a` is ranked above `x` and `x` above the
/// rest of `a`.
fn in_mset(order: &LinearOrder, x: usize, a: Subset) -> bool {
    let pos = order.positions();
    a.contains(x)
        && (0..order.len()).all(|z| {
            if z == x {
                true
            } else if a.contains(z) {
                pos[z] > pos[x]
            } else {
                pos[z] < pos[x]
            }
        })
}

/// `ν(M_{(x,y),A×B})`.
pub fn mset_measure(measure: &SignedPairMeasure, query: MSetQuery) -> Rational {
    measure
        .iter()
        .filter(|(p, _)| in_mset(&p.first, query.x, query.a) && in_mset(&p.second, query.y, query.b))
        .map(|(_, w)| w.clone())
        .sum()
}

/// Best element of `menu` found by scanning positions.
fn best(pos: &[usize], menu: Subset) -> usize {
    menu.iter().min_by_key(|&z| pos[z]).expect("non-empty menu")
}

fn check_order_ground(order: &LinearOrder, set: &AlternativeSet, agent: u8) -> Result<()> {
    if order.len() != set.len() {
        return Err(Error::GroundMismatch(format!(
            "agent {agent} order has {} alternatives, ground set has {}",
            order.len(),
            set.len()
        )));
    }
    Ok(())
}

fn cell_witnesses(
    rule: &JointChoiceRule,
    induced: impl Fn(Subset, Subset) -> Result<Vec<Vec<Rational>>>,
) -> Result<Vec<Witness>> {
    let (xs, ys) = (rule.x_set(), rule.y_set());
    let mut out = Vec::new();
    for ((a, b), table) in rule.tables() {
        let got = induced(*a, *b)?;
        for x in a.iter() {
            for y in b.iter() {
                if &got[x][y] != table.get(x, y) {
                    out.push(
                        Tuple::new()
                            .alt(xs, x)
                            .alt(ys, y)
                            .set(xs, *a)
                            .set(ys, *b)
                            .witness(WitnessKind::CellMismatch, got[x][y].clone(), table.get(x, y).clone()),
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Checks that `measure` induces `rule` on every table it has and, for complete
/// rules and order-pair measures, that every Block-Marschak polynomial equals
/// the measure of its M-set.
pub fn verify_measure(rule: &JointChoiceRule, measure: &AnyMeasure) -> Result<AxiomReport> {
    verify_measure_with(rule, measure, Execution::default())
}

pub fn verify_measure_with(rule: &JointChoiceRule, measure: &AnyMeasure, exec: Execution) -> Result<AxiomReport> {
    let (nx, ny) = (rule.nx(), rule.ny());
    match measure {
        AnyMeasure::Orders(_) => Err(Error::GroundMismatch(
            "a single-agent measure cannot induce a joint rule".into(),
        )),
        AnyMeasure::OrderPairs(nu) => {
            let mut support = Vec::new();
            for (pair, w) in nu.iter() {
                check_order_ground(&pair.first, rule.x_set(), 1)?;
                check_order_ground(&pair.second, rule.y_set(), 2)?;
                support.push((pair.first.positions(), pair.second.positions(), w));
            }
            let mut witnesses = cell_witnesses(rule, |a, b| {
                let mut t = vec![vec![Rational::zero(); ny]; nx];
                for (p1, p2, w) in &support {
                    t[best(p1, a)][best(p2, b)] += *w;
                }
                Ok(t)
            })?;
            if rule.is_complete() {
                witnesses.extend(mset_witnesses(rule, nu, exec)?);
            }
            if nu.total() != one() {
                return Err(Error::MeasureMass(nu.total().to_string()));
            }
            Ok(AxiomReport::from_witnesses(witnesses))
        }
        AnyMeasure::ChoicePairs(pi) => {
            let witnesses = cell_witnesses(rule, |a, b| {
                let mut t = vec![vec![Rational::zero(); ny]; nx];
                for (pair, w) in pi.iter() {
                    let (Some(x), Some(y)) = (pair.first.choose(a), pair.second.choose(b)) else {
                        return Err(Error::GroundMismatch(format!(
                            "choice function pair undefined on ({}, {})",
                            rule.x_set().describe(a),
                            rule.y_set().describe(b)
                        )));
                    };
                    t[x][y] += w;
                }
                Ok(t)
            })?;
            if pi.total() != one() {
                return Err(Error::MeasureMass(pi.total().to_string()));
            }
            Ok(AxiomReport::from_witnesses(witnesses))
        }
    }
}

fn mset_witnesses(rule: &JointChoiceRule, nu: &SignedPairMeasure, exec: Execution) -> Result<Vec<Witness>> {
    let bm = bm_joint_with(rule, exec)?;
    let domain = bm.joint.domain();
    let found = exec.map(domain, |(x, y, a, b)| {
        let m = mset_measure(nu, MSetQuery { x, y, a, b });
        let q = bm.joint.get(x, y, a, b);
        (m != *q).then(|| {
            Tuple::new()
                .alt(rule.x_set(), x)
                .alt(rule.y_set(), y)
                .set(rule.x_set(), a)
                .set(rule.y_set(), b)
                .witness(WitnessKind::MSetMismatch, m, q.clone())
        })
    });
    Ok(found.into_iter().flatten().collect())
}

/// Single-agent analogue: the measure induces `rule` on every menu and
/// `q(x,A) = μ(M(x,A))` for every `x ∈ A`.
pub fn verify_order_measure(rule: &ChoiceRule, measure: &SignedOrderMeasure) -> Result<AxiomReport> {
    let set = rule.set();
    let n = rule.n();
    let mut support = Vec::new();
    for (order, w) in measure.iter() {
        check_order_ground(order, set, 1)?;
        support.push((order, order.positions(), w));
    }
    let mut witnesses = Vec::new();
    for (menu, probs) in rule.menus() {
        let mut got = vec![Rational::zero(); n];
        for (_, pos, w) in &support {
            got[best(pos, *menu)] += *w;
        }
        for x in menu.iter() {
            if got[x] != probs[x] {
                witnesses.push(Tuple::new().alt(set, x).set(set, *menu).witness(
                    WitnessKind::CellMismatch,
                    got[x].clone(),
                    probs[x].clone(),
                ));
            }
        }
    }
    if rule.is_complete() {
        let q = choice_rule_polys(rule)?;
        for a in nonempty_subsets(n) {
            for x in a.iter() {
                let m: Rational =
                    support.iter().filter(|(o, _, _)| in_mset(o, x, a)).map(|(_, _, w)| (*w).clone()).sum();
                if &m != q.get(x, a) {
                    witnesses.push(Tuple::new().alt(set, x).set(set, a).witness(
                        WitnessKind::MSetMismatch,
                        m,
                        q.get(x, a).clone(),
                    ));
                }
            }
        }
    }
    if measure.total() != one() {
        return Err(Error::MeasureMass(measure.total().to_string()));
    }
    Ok(AxiomReport::from_witnesses(witnesses))
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Separable random utility LP: one variable per order pair, one equation per
/// observed cell plus total mass.
pub fn separable_rum_lp(rule: &JointChoiceRule, cap: usize) -> Result<(LpProblem, Vec<OrderPair>)> {
    let count = factorial(rule.nx()) * factorial(rule.ny());
    if count > cap as u128 {
        return Err(Error::CapExceeded { what: "order pairs", count, cap: cap as u128 });
    }
    let xs = LinearOrder::all(rule.nx());
    let ys = LinearOrder::all(rule.ny());
    let px: Vec<Vec<usize>> = xs.iter().map(LinearOrder::positions).collect();
    let py: Vec<Vec<usize>> = ys.iter().map(LinearOrder::positions).collect();
    let mut vars = Vec::with_capacity(count as usize);
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            vars.push((i, j));
        }
    }
    let mut lp = LpProblem::new(vars.len());
    for ((a, b), table) in rule.tables() {
        let mut rows = vec![vec![Vec::new(); rule.ny()]; rule.nx()];
        for (v, &(i, j)) in vars.iter().enumerate() {
            rows[best(&px[i], *a)][best(&py[j], *b)].push((v, one()));
        }
        for x in a.iter() {
            for y in b.iter() {
                lp.add_row(std::mem::take(&mut rows[x][y]), table.get(x, y).clone());
            }
        }
    }
    lp.add_row((0..vars.len()).map(|v| (v, one())).collect(), one());
    let pairs = vars.into_iter().map(|(i, j)| OrderPair::new(xs[i].clone(), ys[j].clone())).collect();
    Ok((lp, pairs))
}

/// Is `rule` induced by a probability measure over order pairs?
pub fn lp_separable_rum(rule: &JointChoiceRule, cap: usize) -> Result<LpVerdict<SignedPairMeasure>> {
    let (lp, pairs) = separable_rum_lp(rule, cap)?;
    Ok(match lp.feasibility() {
        Feasibility::Feasible(v) => LpVerdict::Feasible(to_measure(&pairs, v)),
        Feasibility::Infeasible { phase1_objective } => LpVerdict::Infeasible { phase1_objective },
    })
}

fn to_measure<K: Ord + Clone>(keys: &[K], values: Vec<Rational>) -> SignedMeasure<K> {
    let mut m = SignedMeasure::empty();
    for (k, v) in keys.iter().zip(values) {
        m.add(k.clone(), v);
    }
    m
}

/// All selections from the listed menus, as choice functions, in lexicographic
/// order of the selection tuple.
fn restricted_choice_functions(menus: &[Subset]) -> Vec<ChoiceFunction> {
    let mut out = vec![Vec::new()];
    for &menu in menus {
        out = out
            .into_iter()
            .flat_map(|picks: Vec<(Subset, usize)>| {
                menu.iter().map(move |c| {
                    let mut p = picks.clone();
                    p.push((menu, c));
                    p
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|p| ChoiceFunction::new(p.into_iter().collect()).expect("selections lie in their menus"))
        .collect()
}

/// Stochastic separability LP over choice-function pairs restricted to the
/// menus appearing in `budgets` (all of the rule's tables when `None`).
pub fn stochastic_separability_lp(
    rule: &JointChoiceRule,
    budgets: Option<&[(Subset, Subset)]>,
    cap: usize,
) -> Result<(LpProblem, Vec<ChoiceFunctionPair>)> {
    let budgets: Vec<(Subset, Subset)> = match budgets {
        Some(b) => b.to_vec(),
        None => rule.budget_pairs().collect(),
    };
    for &(a, b) in &budgets {
        if rule.table(a, b).is_none() {
            return Err(Error::MissingBudget { a: rule.x_set().describe(a), b: rule.y_set().describe(b) });
        }
    }
    let menus1: Vec<Subset> = budgets.iter().map(|p| p.0).collect::<BTreeSet<_>>().into_iter().collect();
    let menus2: Vec<Subset> = budgets.iter().map(|p| p.1).collect::<BTreeSet<_>>().into_iter().collect();
    let size = |menus: &[Subset]| menus.iter().map(|m| m.len() as u128).product::<u128>();
    let count = size(&menus1).saturating_mul(size(&menus2));
    if count > cap as u128 {
        return Err(Error::CapExceeded { what: "restricted choice-function pairs", count, cap: cap as u128 });
    }
    let c1 = restricted_choice_functions(&menus1);
    let c2 = restricted_choice_functions(&menus2);
    let mut vars = Vec::with_capacity(count as usize);
    for f in &c1 {
        for g in &c2 {
            vars.push(ChoiceFunctionPair { first: f.clone(), second: g.clone() });
        }
    }
    let mut lp = LpProblem::new(vars.len());
    for &(a, b) in budgets.iter().collect::<BTreeSet<_>>() {
        let table = rule.table(a, b).expect("checked above");
        let mut rows = vec![vec![Vec::new(); rule.ny()]; rule.nx()];
        for (v, pair) in vars.iter().enumerate() {
            let x = pair.first.choose(a).expect("menu listed");
            let y = pair.second.choose(b).expect("menu listed");
            rows[x][y].push((v, one()));
        }
        for x in a.iter() {
            for y in b.iter() {
                lp.add_row(std::mem::take(&mut rows[x][y]), table.get(x, y).clone());
            }
        }
    }
    lp.add_row((0..vars.len()).map(|v| (v, one())).collect(), one());
    Ok((lp, vars))
}

/// Is the rule, on the given budget pairs, a mixture of separable choice
/// function pairs?
pub fn lp_stochastic_separability(
    rule: &JointChoiceRule,
    budgets: Option<&[(Subset, Subset)]>,
    cap: usize,
) -> Result<LpVerdict<SignedChoicePairMeasure>> {
    let (lp, pairs) = stochastic_separability_lp(rule, budgets, cap)?;
    Ok(match lp.feasibility() {
        Feasibility::Feasible(v) => LpVerdict::Feasible(to_measure(&pairs, v)),
        Feasibility::Infeasible { phase1_objective } => LpVerdict::Infeasible { phase1_objective },
    })
}

/// Random utility LP for a single-agent rule: one variable per order.
pub fn rum_lp(rule: &ChoiceRule) -> Result<(LpProblem, Vec<LinearOrder>)> {
    let n = rule.n();
    if n > BRUTE_FORCE_MAX_ALTERNATIVES {
        return Err(Error::CapExceeded {
            what: "alternatives for brute-force uniqueness",
            count: n as u128,
            cap: BRUTE_FORCE_MAX_ALTERNATIVES as u128,
        });
    }
    let orders = LinearOrder::all(n);
    let pos: Vec<Vec<usize>> = orders.iter().map(LinearOrder::positions).collect();
    let mut lp = LpProblem::new(orders.len());
    for (menu, probs) in rule.menus() {
        let mut rows = vec![Vec::new(); n];
        for (v, p) in pos.iter().enumerate() {
            rows[best(p, *menu)].push((v, one()));
        }
        for x in menu.iter() {
            lp.add_row(std::mem::take(&mut rows[x]), probs[x].clone());
        }
    }
    lp.add_row((0..orders.len()).map(|v| (v, one())).collect(), one());
    Ok((lp, orders))
}

/// Decides whether exactly one probability measure over orders induces `rule`
/// by minimizing and maximizing every coordinate over the solution polytope.
pub fn brute_force_unique_rum(rule: &ChoiceRule, exec: Execution) -> Result<RumUniqueness> {
    let (lp, orders) = rum_lp(rule)?;
    let base = match lp.feasibility() {
        Feasibility::Infeasible { phase1_objective } => {
            return Ok(RumUniqueness::NotRationalizable { phase1_objective })
        }
        Feasibility::Feasible(v) => v,
    };
    let n = orders.len();
    let probes = exec.map_range(n, |j| {
        let mut c = vec![Rational::zero(); n];
        c[j] = one();
        let lo = lp.optimize(&c, Sense::Minimize);
        let hi = lp.optimize(&c, Sense::Maximize);
        (lo, hi)
    });
    for (lo, hi) in probes {
        match (lo, hi) {
            (
                Optimum::Optimal { value: vlo, point: plo },
                Optimum::Optimal { value: vhi, point: phi },
            ) => {
                if vlo != vhi {
                    return Ok(RumUniqueness::NonUnique(to_measure(&orders, plo), to_measure(&orders, phi)));
                }
            }
            other => return Err(Error::Internal(format!("coordinate probe on a bounded polytope: {other:?}"))),
        }
    }
    Ok(RumUniqueness::Unique(to_measure(&orders, base)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::measure::{induce_from_order_pairs, induce_from_orders, Budgets};
    use crate::rational::ratio;

    fn abcd() -> (AlternativeSet, AlternativeSet) {
        (AlternativeSet::new(["a", "b", "c", "d"]).unwrap(), AlternativeSet::new(["w", "x", "y", "z"]).unwrap())
    }

    #[test]
    fn mset_of_delta() {
        let (xs, ys) = abcd();
        let nu = SignedMeasure::delta(OrderPair::new(LinearOrder::identity(4), LinearOrder::identity(4)));
        let q = MSetQuery {
            x: 1,
            y: 1,
            a: xs.budget(&["b", "c", "d"]).unwrap(),
            b: ys.budget(&["x", "y", "z"]).unwrap(),
        };
        assert_eq!(mset_measure(&nu, q), one());
        let q = MSetQuery { x: 0, y: 0, a: xs.budget(&["a", "b"]).unwrap(), b: ys.budget(&["w", "x"]).unwrap() };
        assert!(mset_measure(&nu, q).is_zero());
    }

    fn mixture() -> (AlternativeSet, AlternativeSet, SignedPairMeasure) {
        let xs = AlternativeSet::new(["a", "b", "c"]).unwrap();
        let ys = AlternativeSet::new(["x", "y"]).unwrap();
        let nu = SignedMeasure::from_entries([
            (
                OrderPair::new(
                    LinearOrder::from_labels(&xs, &["a", "b", "c"]).unwrap(),
                    LinearOrder::from_labels(&ys, &["x", "y"]).unwrap(),
                ),
                ratio(1, 2),
            ),
            (
                OrderPair::new(
                    LinearOrder::from_labels(&xs, &["c", "b", "a"]).unwrap(),
                    LinearOrder::from_labels(&ys, &["y", "x"]).unwrap(),
                ),
                ratio(1, 2),
            ),
        ])
        .unwrap();
        (xs, ys, nu)
    }

    #[test]
    fn separable_lp_on_mixture() {
        let (xs, ys, nu) = mixture();
        let rule = induce_from_order_pairs(&nu, &xs, &ys, &Budgets::All, true, Execution::Sequential).unwrap();
        let report = verify_measure(&rule, &AnyMeasure::OrderPairs(nu)).unwrap();
        assert!(report.passed());
        match lp_separable_rum(&rule, DEFAULT_ORDER_PAIR_CAP).unwrap() {
            LpVerdict::Feasible(cert) => {
                assert!(cert.is_nonnegative());
                assert!(verify_measure(&rule, &AnyMeasure::OrderPairs(cert)).unwrap().passed());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_measure_fails_verification() {
        let (xs, ys, nu) = mixture();
        let rule = induce_from_order_pairs(&nu, &xs, &ys, &Budgets::All, true, Execution::Sequential).unwrap();
        let delta = SignedMeasure::delta(OrderPair::new(LinearOrder::identity(3), LinearOrder::identity(2)));
        let report = verify_measure(&rule, &AnyMeasure::OrderPairs(delta)).unwrap();
        assert!(!report.passed());
        assert_eq!(report.witnesses[0].kind, WitnessKind::CellMismatch);
        let short = SignedMeasure::delta(OrderPair::new(LinearOrder::identity(2), LinearOrder::identity(2)));
        assert!(matches!(verify_measure(&rule, &AnyMeasure::OrderPairs(short)), Err(Error::GroundMismatch(_))));
    }

    #[test]
    fn brute_force_on_small_rules() {
        let set = AlternativeSet::new(["a", "b", "c"]).unwrap();
        let mix = SignedMeasure::from_entries([
            (LinearOrder::from_labels(&set, &["a", "b", "c"]).unwrap(), ratio(1, 2)),
            (LinearOrder::from_labels(&set, &["c", "b", "a"]).unwrap(), ratio(1, 2)),
        ])
        .unwrap();
        let rule = induce_from_orders(&mix, &set, true).unwrap();
        assert_eq!(brute_force_unique_rum(&rule, Execution::Sequential).unwrap(), RumUniqueness::Unique(mix));

        // representations are unique up to three alternatives but not at four
        let uniform = SignedMeasure::from_entries(LinearOrder::all(3).into_iter().map(|o| (o, ratio(1, 6)))).unwrap();
        let rule = induce_from_orders(&uniform, &set, true).unwrap();
        assert!(brute_force_unique_rum(&rule, Execution::Parallel).unwrap().is_unique());
        let set = AlternativeSet::new(["a", "b", "c", "d"]).unwrap();
        let uniform = SignedMeasure::from_entries(LinearOrder::all(4).into_iter().map(|o| (o, ratio(1, 24)))).unwrap();
        let rule = induce_from_orders(&uniform, &set, true).unwrap();
        match brute_force_unique_rum(&rule, Execution::Parallel).unwrap() {
            RumUniqueness::NonUnique(m1, m2) => {
                assert_ne!(m1, m2);
                assert!(verify_order_measure(&rule, &m1).unwrap().passed());
                assert!(verify_order_measure(&rule, &m2).unwrap().passed());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn choice_functions_enumerate_all_selections() {
        let menus = [Subset::from_indices([0, 1]), Subset::from_indices([0, 1, 2])];
        let fs = restricted_choice_functions(&menus);
        assert_eq!(fs.len(), 6);
        assert_eq!(fs.iter().collect::<BTreeSet<_>>().len(), 6);
    }

    #[test]
    fn lp_cap_is_enforced() {
        let (xs, ys, nu) = mixture();
        let rule = induce_from_order_pairs(&nu, &xs, &ys, &Budgets::All, true, Execution::Sequential).unwrap();
        assert!(matches!(lp_separable_rum(&rule, 11), Err(Error::CapExceeded { count: 12, .. })));
    }
}
