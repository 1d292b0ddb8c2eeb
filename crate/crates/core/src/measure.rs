//! Finitely supported signed measures and the choice rules they induce.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{
    AlternativeSet, ChoiceFunctionPair, ChoiceRule, JointChoiceRule, LinearOrder, OrderPair, Table,
};
use crate::rational::{format_rational, Rational};
use crate::subset::{nonempty_subsets, Subset};

/// Weight function with exact-zero entries pruned. Complete measures sum to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedMeasure<K: Ord> {
    weights: BTreeMap<K, Rational>,
}

pub type SignedPairMeasure = SignedMeasure<OrderPair>;
pub type SignedOrderMeasure = SignedMeasure<LinearOrder>;
pub type SignedChoicePairMeasure = SignedMeasure<ChoiceFunctionPair>;

impl<K: Ord> Default for SignedMeasure<K> {
    fn default() -> Self {
        SignedMeasure { weights: BTreeMap::new() }
    }
}

impl<K: Ord + Clone> SignedMeasure<K> {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn delta(k: K) -> Self {
        let mut m = Self::empty();
        m.add(k, Rational::one());
        m
    }

    /// Builds a measure and checks that it has total mass 1.
    pub fn from_entries(entries: impl IntoIterator<Item = (K, Rational)>) -> Result<Self> {
        let mut m = Self::empty();
        for (k, w) in entries {
            m.add(k, w);
        }
        m.check_mass()?;
        Ok(m)
    }

    /// Adds `w` to the weight of `k`, dropping the entry if it becomes zero.
    pub fn add(&mut self, k: K, w: Rational) {
        if w.is_zero() {
            return;
        }
        let slot = self.weights.entry(k.clone()).or_insert_with(Rational::zero);
        *slot += w;
        if slot.is_zero() {
            self.weights.remove(&k);
        }
    }

    pub fn weight(&self, k: &K) -> Rational {
        self.weights.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.weights.values().sum()
    }

    pub fn check_mass(&self) -> Result<()> {
        let t = self.total();
        if t.is_one() {
            Ok(())
        } else {
            Err(Error::MeasureMass(format_rational(&t)))
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.values().all(|w| !w.is_negative())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Rational)> {
        self.weights.iter()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Image measure under `f`.
    pub fn map_keys<K2: Ord + Clone>(&self, f: impl Fn(&K) -> K2) -> SignedMeasure<K2> {
        let mut m = SignedMeasure::empty();
        for (k, w) in &self.weights {
            m.add(f(k), w.clone());
        }
        m
    }
}

/// A measure of any of the three supported kinds, as read from a measure file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyMeasure {
    OrderPairs(SignedPairMeasure),
    Orders(SignedOrderMeasure),
    ChoicePairs(SignedChoicePairMeasure),
}

impl AnyMeasure {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyMeasure::OrderPairs(_) => "order_pairs",
            AnyMeasure::Orders(_) => "orders",
            AnyMeasure::ChoicePairs(_) => "choice_pairs",
        }
    }
}

/// Which budget pairs an induced rule is defined on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Budgets {
    All,
    Listed(Vec<(Subset, Subset)>),
}

impl Budgets {
    pub fn pairs(&self, nx: usize, ny: usize) -> Vec<(Subset, Subset)> {
        match self {
            Budgets::All => nonempty_subsets(nx)
                .flat_map(|a| nonempty_subsets(ny).map(move |b| (a, b)))
                .collect(),
            Budgets::Listed(v) => v.clone(),
        }
    }
}

fn check_ground(order: &LinearOrder, set: &AlternativeSet) -> Result<()> {
    if order.len() != set.len() {
        return Err(Error::GroundMismatch(format!(
            "order over {} alternatives, ground set has {}",
            order.len(),
            set.len()
        )));
    }
    Ok(())
}

/// `p(x,y|A,B) = Σ ν(≻,≻′)·1{x = M(A,≻), y = M(B,≻′)}`.
///
/// With `validate` the result must be a proper (non-negative) rule; otherwise
/// negative cells from a signed measure are kept and only mass is checked.
pub fn induce_from_order_pairs(
    measure: &SignedPairMeasure,
    x_set: &AlternativeSet,
    y_set: &AlternativeSet,
    budgets: &Budgets,
    validate: bool,
    exec: Execution,
) -> Result<JointChoiceRule> {
    measure.check_mass()?;
    for (pair, _) in measure.iter() {
        check_ground(&pair.first, x_set)?;
        check_ground(&pair.second, y_set)?;
    }
    let (nx, ny) = (x_set.len(), y_set.len());
    let support: Vec<(&OrderPair, &Rational)> = measure.iter().collect();
    let tables = exec.map(budgets.pairs(nx, ny), |(a, b)| {
        let mut t = Table::zeros(nx, ny);
        for (pair, w) in &support {
            let x = pair.first.maximal(a).expect("non-empty budget");
            let y = pair.second.maximal(b).expect("non-empty budget");
            *t.get_mut(x, y) += *w;
        }
        ((a, b), t)
    });
    build(x_set, y_set, tables, validate)
}

/// `p(x,y|A,B) = Σ π(c)·1{c(A,B) = (x,y)}` over restricted choice-function pairs.
pub fn induce_from_choice_pairs(
    measure: &SignedChoicePairMeasure,
    x_set: &AlternativeSet,
    y_set: &AlternativeSet,
    budgets: &Budgets,
    validate: bool,
) -> Result<JointChoiceRule> {
    measure.check_mass()?;
    let (nx, ny) = (x_set.len(), y_set.len());
    let mut tables = Vec::new();
    for (a, b) in budgets.pairs(nx, ny) {
        let mut t = Table::zeros(nx, ny);
        for (pair, w) in measure.iter() {
            let (Some(x), Some(y)) = (pair.first.choose(a), pair.second.choose(b)) else {
                return Err(Error::Format(format!(
                    "choice function pair undefined on ({}, {})",
                    x_set.describe(a),
                    y_set.describe(b)
                )));
            };
            *t.get_mut(x, y) += w;
        }
        tables.push(((a, b), t));
    }
    build(x_set, y_set, tables, validate)
}

fn build(
    x_set: &AlternativeSet,
    y_set: &AlternativeSet,
    tables: Vec<((Subset, Subset), Table)>,
    validate: bool,
) -> Result<JointChoiceRule> {
    if validate {
        JointChoiceRule::new(x_set.clone(), y_set.clone(), tables)
    } else {
        JointChoiceRule::signed(x_set.clone(), y_set.clone(), tables)
    }
}

/// Single-agent rule induced on every menu by a signed measure over orders.
pub fn induce_from_orders(
    measure: &SignedOrderMeasure,
    set: &AlternativeSet,
    validate: bool,
) -> Result<ChoiceRule> {
    measure.check_mass()?;
    let n = set.len();
    let mut probs = BTreeMap::new();
    for menu in nonempty_subsets(n) {
        let mut row = vec![Rational::zero(); n];
        for (order, w) in measure.iter() {
            check_ground(order, set)?;
            row[order.maximal(menu)?] += w;
        }
        probs.insert(menu, row);
    }
    if validate {
        ChoiceRule::new(set.clone(), probs)
    } else {
        ChoiceRule::signed(set.clone(), probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChoiceFunction;
    use crate::rational::ratio;

    fn sets() -> (AlternativeSet, AlternativeSet) {
        (
            AlternativeSet::new(["a", "b", "c"]).unwrap(),
            AlternativeSet::new(["x", "y"]).unwrap(),
        )
    }

    fn order(s: &AlternativeSet, l: &[&str]) -> LinearOrder {
        LinearOrder::from_labels(s, l).unwrap()
    }

    #[test]
    fn delta_measure_is_degenerate() {
        let x = AlternativeSet::new(["a", "b", "c", "d"]).unwrap();
        let y = AlternativeSet::new(["w", "x", "y", "z"]).unwrap();
        let nu = SignedMeasure::delta(OrderPair::new(LinearOrder::identity(4), LinearOrder::identity(4)));
        let rule =
            induce_from_order_pairs(&nu, &x, &y, &Budgets::All, true, Execution::Sequential).unwrap();
        assert!(rule.is_complete());
        for ((a, b), t) in rule.tables() {
            if a.contains(0) && b.contains(0) {
                assert!(t.get(0, 0).is_one());
            }
        }
    }

    #[test]
    fn two_reversed_pairs() {
        // ½(a≻b≻c, x≻y) + ½(c≻b≻a, y≻x): maxima on the full budget are (a,x) and (c,y)
        let (x, y) = sets();
        let nu = SignedMeasure::from_entries([
            (OrderPair::new(order(&x, &["a", "b", "c"]), order(&y, &["x", "y"])), ratio(1, 2)),
            (OrderPair::new(order(&x, &["c", "b", "a"]), order(&y, &["y", "x"])), ratio(1, 2)),
        ])
        .unwrap();
        let rule = induce_from_order_pairs(
            &nu,
            &x,
            &y,
            &Budgets::Listed(vec![(x.full(), y.full())]),
            true,
            Execution::Parallel,
        )
        .unwrap();
        let t = rule.table(x.full(), y.full()).unwrap();
        assert_eq!(t.get(0, 0), &ratio(1, 2));
        assert_eq!(t.get(2, 1), &ratio(1, 2));
        assert_eq!(t.nonzero().count(), 2);
    }

    #[test]
    fn choice_pairs_three_quarter_split() {
        let (x, y) = sets();
        let budgets: Vec<Subset> = nonempty_subsets(3).collect();
        let ybudgets: Vec<Subset> = nonempty_subsets(2).collect();
        let c1 = ChoiceFunctionPair {
            first: ChoiceFunction::from_order(&LinearOrder::identity(3), budgets.clone()),
            second: ChoiceFunction::from_order(&LinearOrder::identity(2), ybudgets.clone()),
        };
        let c2 = ChoiceFunctionPair {
            first: ChoiceFunction::from_order(&order(&x, &["c", "a", "b"]), budgets),
            second: ChoiceFunction::from_order(&order(&y, &["y", "x"]), ybudgets),
        };
        let pi = SignedMeasure::from_entries([(c1, ratio(3, 4)), (c2, ratio(1, 4))]).unwrap();
        let rule = induce_from_choice_pairs(&pi, &x, &y, &Budgets::All, true).unwrap();
        let allowed = [ratio(0, 1), ratio(1, 4), ratio(3, 4), ratio(1, 1)];
        for (_, t) in rule.tables() {
            for xi in 0..3 {
                for yi in 0..2 {
                    assert!(allowed.contains(t.get(xi, yi)));
                }
            }
        }
    }

    #[test]
    fn signed_measure_needs_opt_out_of_validation() {
        let (x, y) = sets();
        let p1 = OrderPair::new(order(&x, &["a", "b", "c"]), order(&y, &["x", "y"]));
        let p2 = OrderPair::new(order(&x, &["b", "a", "c"]), order(&y, &["x", "y"]));
        let nu = SignedMeasure::from_entries([(p1, ratio(2, 1)), (p2, ratio(-1, 1))]).unwrap();
        assert!(induce_from_order_pairs(&nu, &x, &y, &Budgets::All, true, Execution::Sequential).is_err());
        let r = induce_from_order_pairs(&nu, &x, &y, &Budgets::All, false, Execution::Sequential).unwrap();
        assert!(!r.is_nonnegative());
    }

    #[test]
    fn add_prunes_zero() {
        let mut m: SignedOrderMeasure = SignedMeasure::empty();
        m.add(LinearOrder::identity(2), ratio(1, 2));
        m.add(LinearOrder::identity(2), ratio(-1, 2));
        assert!(m.is_empty());
        assert!(m.check_mass().is_err());
    }
}
