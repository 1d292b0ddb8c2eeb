//! Alternatives, budgets, linear orders, choice functions and joint choice rules.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rational, one, Rational};
use crate::subset::{nonempty_subsets, Subset, MAX_ALTERNATIVES};

/// Which side of a joint choice rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Agent {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

impl Agent {
    pub fn number(self) -> u8 {
        match self {
            Agent::First => 1,
            Agent::Second => 2,
        }
    }

    pub fn other(self) -> Agent {
        match self {
            Agent::First => Agent::Second,
            Agent::Second => Agent::First,
        }
    }
}

/// Ordered list of distinct labels; the list position is the canonical index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlternativeSet {
    labels: Vec<String>,
}

impl AlternativeSet {
    pub fn new<S: Into<String>, I: IntoIterator<Item = S>>(labels: I) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Format("alternative set is empty".into()));
        }
        if labels.len() > MAX_ALTERNATIVES {
            return Err(Error::Format(format!(
                "{} alternatives exceed the supported maximum of {MAX_ALTERNATIVES}",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::Format("empty alternative label".into()));
            }
            if labels[..i].contains(l) {
                return Err(Error::Format(format!("duplicate alternative label {l:?}")));
            }
        }
        Ok(AlternativeSet { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Format(format!("unknown alternative {label:?}")))
    }

    pub fn full(&self) -> Subset {
        Subset::full(self.len())
    }

    /// Parses a non-empty budget from labels.
    pub fn budget<S: AsRef<str>>(&self, labels: &[S]) -> Result<Subset> {
        let mut set = Subset::EMPTY;
        for l in labels {
            let i = self.index_of(l.as_ref())?;
            if set.contains(i) {
                return Err(Error::Format(format!("label {:?} repeated in budget", l.as_ref())));
            }
            set = set.with(i);
        }
        if set.is_empty() {
            return Err(Error::EmptyMenu);
        }
        Ok(set)
    }

    pub fn labels_of(&self, set: Subset) -> Vec<String> {
        set.iter().map(|i| self.labels[i].clone()).collect()
    }

    /// `{a,b}` style rendering.
    pub fn describe(&self, set: Subset) -> String {
        format!("{{{}}}", self.labels_of(set).join(","))
    }
}

/// Strict total order, best first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearOrder {
    ranking: Vec<usize>,
}

impl LinearOrder {
    pub fn new(ranking: Vec<usize>) -> Result<Self> {
        let n = ranking.len();
        let mut seen = vec![false; n];
        for &i in &ranking {
            if i >= n || seen[i] {
                return Err(Error::Format(format!("{ranking:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(LinearOrder { ranking })
    }

    pub fn from_labels<S: AsRef<str>>(set: &AlternativeSet, labels: &[S]) -> Result<Self> {
        if labels.len() != set.len() {
            return Err(Error::Format(format!(
                "order lists {} labels, ground set has {}",
                labels.len(),
                set.len()
            )));
        }
        let ranking = labels
            .iter()
            .map(|l| set.index_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        LinearOrder::new(ranking)
    }

    pub fn identity(n: usize) -> Self {
        LinearOrder { ranking: (0..n).collect() }
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    /// `positions()[i]` is the rank of alternative `i` (0 = best).
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.ranking.len()];
        for (r, &i) in self.ranking.iter().enumerate() {
            pos[i] = r;
        }
        pos
    }

    /// Best member of `menu`.
    pub fn maximal(&self, menu: Subset) -> Result<usize> {
        self.ranking
            .iter()
            .copied()
            .find(|&i| menu.contains(i))
            .ok_or(Error::EmptyMenu)
    }

    /// The set of the `len - k` worst alternatives (the `k`-th node on the order's path).
    pub fn lower_set(&self, k: usize) -> Subset {
        Subset::from_indices(self.ranking[k..].iter().copied())
    }

    pub fn labels(&self, set: &AlternativeSet) -> Vec<String> {
        self.ranking.iter().map(|&i| set.label(i).to_string()).collect()
    }

    /// All `n!` orders in lexicographic order of rankings.
    pub fn all(n: usize) -> Vec<LinearOrder> {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            out.push(LinearOrder { ranking: perm.clone() });
            // next permutation
            let Some(i) = (1..n).rev().find(|&i| perm[i - 1] < perm[i]) else {
                break;
            };
            let j = (i..n).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
            perm.swap(i - 1, j);
            perm[i..].reverse();
        }
        out
    }
}

impl fmt::Debug for LinearOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ranking.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(">"))
    }
}

/// Best element of `menu` under `order`.
pub fn maximal(order: &LinearOrder, menu: Subset) -> Result<usize> {
    order.maximal(menu)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderPair {
    pub first: LinearOrder,
    pub second: LinearOrder,
}

impl OrderPair {
    pub fn new(first: LinearOrder, second: LinearOrder) -> Self {
        OrderPair { first, second }
    }

    pub fn swapped(&self) -> OrderPair {
        OrderPair { first: self.second.clone(), second: self.first.clone() }
    }
}

/// Deterministic choice function, possibly restricted to a listed budget collection.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ChoiceFunction {
    picks: BTreeMap<Subset, usize>,
}

impl ChoiceFunction {
    pub fn new(picks: BTreeMap<Subset, usize>) -> Result<Self> {
        for (&menu, &c) in &picks {
            if !menu.contains(c) {
                return Err(Error::Format(format!("choice {c} not in menu {menu:?}")));
            }
        }
        Ok(ChoiceFunction { picks })
    }

    /// The maximizing choice function of `order` on `menus`.
    pub fn from_order(order: &LinearOrder, menus: impl IntoIterator<Item = Subset>) -> Self {
        let picks = menus
            .into_iter()
            .map(|m| (m, order.maximal(m).expect("non-empty menu")))
            .collect();
        ChoiceFunction { picks }
    }

    pub fn choose(&self, menu: Subset) -> Option<usize> {
        self.picks.get(&menu).copied()
    }

    pub fn picks(&self) -> &BTreeMap<Subset, usize> {
        &self.picks
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChoiceFunctionPair {
    pub first: ChoiceFunction,
    pub second: ChoiceFunction,
}

/// Probability table over `A×B`, stored densely over `X×Y` (row = x).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    ny: usize,
    cells: Vec<Rational>,
}

impl Table {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Table { ny, cells: vec![Rational::zero(); nx * ny] }
    }

    pub fn get(&self, x: usize, y: usize) -> &Rational {
        &self.cells[x * self.ny + y]
    }

    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut Rational {
        &mut self.cells[x * self.ny + y]
    }

    pub fn set(&mut self, x: usize, y: usize, v: Rational) {
        self.cells[x * self.ny + y] = v;
    }

    pub fn row_sum(&self, x: usize) -> Rational {
        self.cells[x * self.ny..(x + 1) * self.ny].iter().sum()
    }

    pub fn col_sum(&self, y: usize) -> Rational {
        self.cells.iter().skip(y).step_by(self.ny).sum()
    }

    pub fn total(&self) -> Rational {
        self.cells.iter().sum()
    }

    /// Non-zero cells as `(x, y, value)`, row-major.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        let ny = self.ny;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(move |(k, v)| (k / ny, k % ny, v))
    }
}

/// A random joint choice rule, complete or partial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointChoiceRule {
    x_set: AlternativeSet,
    y_set: AlternativeSet,
    tables: BTreeMap<(Subset, Subset), Table>,
}

impl JointChoiceRule {
    /// Validated constructor: cells inside `A×B`, non-negative, each table sums to 1.
    pub fn new(
        x_set: AlternativeSet,
        y_set: AlternativeSet,
        tables: impl IntoIterator<Item = ((Subset, Subset), Table)>,
    ) -> Result<Self> {
        let rule = Self::signed(x_set, y_set, tables)?;
        for (&(a, b), t) in &rule.tables {
            if let Some((_, _, v)) = t.nonzero().find(|(_, _, v)| v.is_negative()) {
                return Err(Error::NegativeCell {
                    a: rule.x_set.describe(a),
                    b: rule.y_set.describe(b),
                    value: format_rational(v),
                });
            }
        }
        Ok(rule)
    }

    /// Like [`JointChoiceRule::new`] but admits negative cells (rules induced by signed measures).
    pub fn signed(
        x_set: AlternativeSet,
        y_set: AlternativeSet,
        tables: impl IntoIterator<Item = ((Subset, Subset), Table)>,
    ) -> Result<Self> {
        let (full_x, full_y) = (x_set.full(), y_set.full());
        let mut map = BTreeMap::new();
        for ((a, b), t) in tables {
            let (ad, bd) = (x_set.describe(a), y_set.describe(b));
            if a.is_empty() || b.is_empty() || !a.is_subset_of(full_x) || !b.is_subset_of(full_y) {
                return Err(Error::Format(format!("invalid budget pair ({ad}, {bd})")));
            }
            if t.cells.len() != x_set.len() * y_set.len() {
                return Err(Error::Format("table has wrong dimensions".into()));
            }
            if let Some((x, y, _)) = t.nonzero().find(|&(x, y, _)| !a.contains(x) || !b.contains(y)) {
                return Err(Error::CellOutsideBudget {
                    x: x_set.label(x).into(),
                    y: y_set.label(y).into(),
                    a: ad,
                    b: bd,
                });
            }
            let sum = t.total();
            if sum != one() {
                return Err(Error::TableSum { a: ad, b: bd, sum: format_rational(&sum) });
            }
            if map.insert((a, b), t).is_some() {
                return Err(Error::DuplicateTable { a: ad, b: bd });
            }
        }
        Ok(JointChoiceRule { x_set, y_set, tables: map })
    }

    pub fn x_set(&self) -> &AlternativeSet {
        &self.x_set
    }

    pub fn y_set(&self) -> &AlternativeSet {
        &self.y_set
    }

    pub fn nx(&self) -> usize {
        self.x_set.len()
    }

    pub fn ny(&self) -> usize {
        self.y_set.len()
    }

    pub fn table(&self, a: Subset, b: Subset) -> Option<&Table> {
        self.tables.get(&(a, b))
    }

    pub fn tables(&self) -> impl Iterator<Item = (&(Subset, Subset), &Table)> {
        self.tables.iter()
    }

    pub fn budget_pairs(&self) -> impl Iterator<Item = (Subset, Subset)> + '_ {
        self.tables.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// `p(x,y|A,B)`; `None` when the table is absent.
    pub fn prob(&self, x: usize, y: usize, a: Subset, b: Subset) -> Option<&Rational> {
        self.tables.get(&(a, b)).map(|t| t.get(x, y))
    }

    pub fn is_complete(&self) -> bool {
        self.tables.len() == ((1usize << self.nx()) - 1) * ((1usize << self.ny()) - 1)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.tables.values().all(|t| t.cells.iter().all(|v| !v.is_negative()))
    }

    /// Errors with the first missing budget pair when the rule is partial.
    pub fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            return Ok(());
        }
        for a in nonempty_subsets(self.nx()) {
            for b in nonempty_subsets(self.ny()) {
                if !self.tables.contains_key(&(a, b)) {
                    return Err(self.partial_error(a, b));
                }
            }
        }
        unreachable!("incomplete rule without a missing pair")
    }

    pub(crate) fn partial_error(&self, a: Subset, b: Subset) -> Error {
        Error::PartialRule { a: self.x_set.describe(a), b: self.y_set.describe(b) }
    }

    /// Swaps the roles of the two agents.
    pub fn transpose(&self) -> JointChoiceRule {
        let (nx, ny) = (self.nx(), self.ny());
        let tables = self
            .tables
            .iter()
            .map(|(&(a, b), t)| {
                let mut tt = Table::zeros(ny, nx);
                for (x, y, v) in t.nonzero() {
                    tt.set(y, x, v.clone());
                }
                ((b, a), tt)
            })
            .collect();
        JointChoiceRule { x_set: self.y_set.clone(), y_set: self.x_set.clone(), tables }
    }
}

/// Single-agent random choice rule over all (or some) menus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoiceRule {
    set: AlternativeSet,
    probs: BTreeMap<Subset, Vec<Rational>>,
}

impl ChoiceRule {
    pub fn new(set: AlternativeSet, probs: BTreeMap<Subset, Vec<Rational>>) -> Result<Self> {
        let rule = Self::signed(set, probs)?;
        for (menu, row) in &rule.probs {
            if let Some(v) = row.iter().find(|v| v.is_negative()) {
                return Err(Error::NegativeCell {
                    a: rule.set.describe(*menu),
                    b: "-".into(),
                    value: format_rational(v),
                });
            }
        }
        Ok(rule)
    }

    /// Admits negative probabilities; still checks support and mass.
    pub fn signed(set: AlternativeSet, probs: BTreeMap<Subset, Vec<Rational>>) -> Result<Self> {
        for (&menu, row) in &probs {
            if menu.is_empty() || !menu.is_subset_of(set.full()) || row.len() != set.len() {
                return Err(Error::Format(format!("invalid menu {}", set.describe(menu))));
            }
            if let Some(x) = (0..set.len()).find(|&x| !menu.contains(x) && !row[x].is_zero()) {
                return Err(Error::Format(format!(
                    "{} has mass outside menu {}",
                    set.label(x),
                    set.describe(menu)
                )));
            }
            let sum: Rational = row.iter().sum();
            if sum != one() {
                return Err(Error::TableSum {
                    a: set.describe(menu),
                    b: "-".into(),
                    sum: format_rational(&sum),
                });
            }
        }
        Ok(ChoiceRule { set, probs })
    }

    pub fn set(&self) -> &AlternativeSet {
        &self.set
    }

    pub fn n(&self) -> usize {
        self.set.len()
    }

    pub fn prob(&self, x: usize, menu: Subset) -> Option<&Rational> {
        self.probs.get(&menu).map(|r| &r[x])
    }

    pub fn menus(&self) -> impl Iterator<Item = (&Subset, &Vec<Rational>)> {
        self.probs.iter()
    }

    pub fn is_complete(&self) -> bool {
        self.probs.len() == (1usize << self.n()) - 1
    }
}
