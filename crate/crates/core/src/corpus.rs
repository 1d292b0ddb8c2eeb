//! Fixed example rules and seeded random instances.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::measure::{induce_from_order_pairs, induce_from_orders, Budgets, SignedMeasure, SignedOrderMeasure, SignedPairMeasure};
use crate::model::{AlternativeSet, ChoiceRule, JointChoiceRule, LinearOrder, OrderPair, Table};
use crate::rational::{ratio, Rational};
use crate::subset::{nonempty_subsets, Subset};

pub const FIXTURE_NAMES: [&str; 4] = ["table1", "table2", "example1", "remark_rule"];
/// Largest ground set the generator accepts on either side.
pub const GENERATOR_MAX_ALTERNATIVES: usize = 6;
/// Largest denominator of any generated weight or cell.
pub const MAX_DENOMINATOR: i64 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub rule: JointChoiceRule,
}

pub fn fixture(name: &str) -> Result<Fixture> {
    let (name, description, rule) = match name {
        "table1" => ("table1", "partial rule on two budget pairs sharing the full agent-1 menu", table1()),
        "table2" => ("table2", "partial rule on four doubleton budget pairs; satisfies marginality, not separable", table2()),
        "example1" => ("example1", "complete rule satisfying marginality and non-negativity with no separable RUM", example1()),
        "remark_rule" => ("remark_rule", "deterministic rule maximizing one linear order over joint alternatives", remark_rule()),
        other => return Err(Error::UnknownFixture(other.to_string())),
    };
    Ok(Fixture { name, description, rule: rule? })
}

fn cells(x_set: &AlternativeSet, y_set: &AlternativeSet, entries: &[(&str, &str, Rational)]) -> Result<Table> {
    let mut t = Table::zeros(x_set.len(), y_set.len());
    for (x, y, v) in entries {
        t.set(x_set.index_of(x)?, y_set.index_of(y)?, v.clone());
    }
    Ok(t)
}

pub fn table1() -> Result<JointChoiceRule> {
    let xs = AlternativeSet::new(["x1", "x2", "x3"])?;
    let ys = AlternativeSet::new(["y1", "y2", "y3"])?;
    let full = xs.full();
    let t1 = cells(
        &xs,
        &ys,
        &[
            ("x1", "y1", ratio(1, 5)),
            ("x1", "y3", ratio(3, 10)),
            ("x2", "y1", ratio(1, 10)),
            ("x2", "y2", ratio(3, 10)),
            ("x3", "y3", ratio(1, 10)),
        ],
    )?;
    let t2 = cells(
        &xs,
        &ys,
        &[
            ("x1", "y1", ratio(3, 10)),
            ("x1", "y2", ratio(1, 5)),
            ("x2", "y1", ratio(1, 10)),
            ("x2", "y2", ratio(3, 10)),
            ("x3", "y2", ratio(1, 10)),
        ],
    )?;
    let b2 = ys.budget(&["y1", "y2"])?;
    JointChoiceRule::new(xs, ys.clone(), [((full, ys.full()), t1), ((full, b2), t2)])
}

pub fn table2() -> Result<JointChoiceRule> {
    let xs = AlternativeSet::new(["w", "x", "y", "z"])?;
    let ys = AlternativeSet::new(["a", "b", "c", "d"])?;
    let half = ratio(1, 2);
    let blocks = [
        (["w", "x"], ["a", "b"], [("w", "a"), ("x", "b")]),
        (["w", "x"], ["c", "d"], [("w", "c"), ("x", "d")]),
        (["y", "z"], ["a", "b"], [("y", "a"), ("z", "b")]),
        (["y", "z"], ["c", "d"], [("y", "d"), ("z", "c")]),
    ];
    let mut tables = Vec::new();
    for (a, b, support) in blocks {
        let entries: Vec<_> = support.iter().map(|&(x, y)| (x, y, half.clone())).collect();
        tables.push(((xs.budget(&a)?, ys.budget(&b)?), cells(&xs, &ys, &entries)?));
    }
    JointChoiceRule::new(xs, ys, tables)
}

fn pair(xs: &AlternativeSet, ys: &AlternativeSet, first: &[&str], second: &[&str]) -> Result<OrderPair> {
    Ok(OrderPair::new(LinearOrder::from_labels(xs, first)?, LinearOrder::from_labels(ys, second)?))
}

/// The two halves generating [`example1`]: the first drives every budget pair
/// except those inside `{c,d}×{y,z}`, the second drives those.
pub fn example1_measures() -> Result<(SignedPairMeasure, SignedPairMeasure)> {
    let xs = AlternativeSet::new(["a", "b", "c", "d"])?;
    let ys = AlternativeSet::new(["w", "x", "y", "z"])?;
    let nu1 = SignedMeasure::from_entries([
        (pair(&xs, &ys, &["a", "b", "c", "d"], &["w", "x", "y", "z"])?, ratio(1, 2)),
        (pair(&xs, &ys, &["b", "a", "d", "c"], &["x", "w", "z", "y"])?, ratio(1, 2)),
    ])?;
    // only the rankings within {c,d} and {y,z} matter here
    let nu2 = SignedMeasure::from_entries([
        (pair(&xs, &ys, &["a", "b", "d", "c"], &["w", "x", "y", "z"])?, ratio(1, 2)),
        (pair(&xs, &ys, &["a", "b", "c", "d"], &["w", "x", "z", "y"])?, ratio(1, 2)),
    ])?;
    Ok((nu1, nu2))
}

pub fn example1() -> Result<JointChoiceRule> {
    let xs = AlternativeSet::new(["a", "b", "c", "d"])?;
    let ys = AlternativeSet::new(["w", "x", "y", "z"])?;
    let (nu1, nu2) = example1_measures()?;
    let (cd, yz) = (xs.budget(&["c", "d"])?, ys.budget(&["y", "z"])?);
    let (inside, outside): (Vec<_>, Vec<_>) =
        Budgets::All.pairs(4, 4).into_iter().partition(|&(a, b)| a.is_subset_of(cd) && b.is_subset_of(yz));
    let seq = Execution::Sequential;
    let r1 = induce_from_order_pairs(&nu1, &xs, &ys, &Budgets::Listed(outside), true, seq)?;
    let r2 = induce_from_order_pairs(&nu2, &xs, &ys, &Budgets::Listed(inside), true, seq)?;
    let tables = r1.tables().chain(r2.tables()).map(|(k, t)| (*k, t.clone()));
    JointChoiceRule::new(xs, ys, tables)
}

pub fn remark_rule() -> Result<JointChoiceRule> {
    let xs = AlternativeSet::new(["a", "b"])?;
    let ys = AlternativeSet::new(["c", "d"])?;
    let ranking = [("b", "d"), ("a", "c"), ("a", "d"), ("b", "c")];
    let ranking: Vec<(usize, usize)> =
        ranking.iter().map(|(x, y)| Ok((xs.index_of(x)?, ys.index_of(y)?))).collect::<Result<_>>()?;
    let mut tables = Vec::new();
    for (a, b) in Budgets::All.pairs(2, 2) {
        let &(x, y) = ranking.iter().find(|(x, y)| a.contains(*x) && b.contains(*y)).expect("total ranking");
        let mut t = Table::zeros(2, 2);
        t.set(x, y, ratio(1, 1));
        tables.push(((a, b), t));
    }
    JointChoiceRule::new(xs, ys, tables)
}

/// Single-agent rule on `{a,b,c}` whose polynomial at `(a,{a})` is −1.
pub fn negative_bm_rule() -> Result<ChoiceRule> {
    let set = AlternativeSet::new(["a", "b", "c"])?;
    let mut probs = BTreeMap::new();
    for menu in nonempty_subsets(3) {
        let mut row = vec![Rational::zero(); 3];
        if menu.len() == 1 || menu == Subset::full(3) {
            // singletons are forced; the full menu never yields a
            let top = if menu.len() == 1 { menu.iter().next().unwrap() } else { 1 };
            row[top] = ratio(1, 1);
        } else {
            row[0] = if menu.contains(0) { ratio(1, 1) } else { Rational::zero() };
            if !menu.contains(0) {
                row[1] = ratio(1, 1);
            }
        }
        probs.insert(menu, row);
    }
    ChoiceRule::new(set, probs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorMode {
    /// Rule induced by a random probability measure over order pairs.
    Probability,
    /// Rule induced by a random signed measure with at least one negative weight.
    Signed,
    /// Independent random distribution on every table.
    Arbitrary,
    /// A probability-mode rule with mass moved between two rows of one table.
    MarginalityViolating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub nx: usize,
    pub ny: usize,
    pub k: usize,
    pub mode: GeneratorMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub rule: JointChoiceRule,
    /// The generating measure, where the mode has one.
    pub measure: Option<SignedPairMeasure>,
}

pub fn labels(prefix: &str, n: usize) -> Result<AlternativeSet> {
    AlternativeSet::new((1..=n).map(|i| format!("{prefix}{i}")))
}

fn random_order(rng: &mut ChaCha8Rng, n: usize) -> LinearOrder {
    let mut r: Vec<usize> = (0..n).collect();
    r.shuffle(rng);
    LinearOrder::new(r).expect("permutation")
}

/// `k` positive integers summing to `d`.
fn composition(rng: &mut ChaCha8Rng, d: i64, k: usize) -> Vec<i64> {
    let mut parts = vec![1i64; k];
    for _ in 0..(d - k as i64) {
        parts[rng.gen_range(0..k)] += 1;
    }
    parts
}

fn probability_measure<K: Ord + Clone>(
    rng: &mut ChaCha8Rng,
    k: usize,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> K,
) -> SignedMeasure<K> {
    let d = rng.gen_range(k as i64..=MAX_DENOMINATOR);
    let mut m = SignedMeasure::empty();
    for w in composition(rng, d, k) {
        m.add(draw(rng), ratio(w, d));
    }
    m
}

/// Signed weights over `k` draws: one or two negative, all with denominator ≤ 64.
fn signed_measure<K: Ord + Clone>(
    rng: &mut ChaCha8Rng,
    k: usize,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> K,
) -> SignedMeasure<K> {
    let negatives = if k >= 4 { rng.gen_range(1..=2) } else { 1 };
    let positives = k - negatives;
    let d = rng.gen_range((positives as i64 + 2 * negatives as i64).max(8)..=MAX_DENOMINATOR);
    let neg: Vec<i64> = (0..negatives).map(|_| -rng.gen_range(1..=2)).collect();
    let pos = composition(rng, d - neg.iter().sum::<i64>(), positives);
    let mut m = SignedMeasure::empty();
    for w in pos.into_iter().chain(neg) {
        m.add(draw(rng), ratio(w, d));
    }
    m
}

fn check_spec(spec: &GeneratorSpec) -> Result<()> {
    let max = GENERATOR_MAX_ALTERNATIVES;
    if spec.nx == 0 || spec.ny == 0 || spec.nx > max || spec.ny > max {
        return Err(Error::Generator(format!("|X| and |Y| must lie in 1..={max}")));
    }
    if spec.k == 0 || spec.k as i64 > MAX_DENOMINATOR / 2 {
        return Err(Error::Generator(format!("support size must lie in 1..={}", MAX_DENOMINATOR / 2)));
    }
    match spec.mode {
        GeneratorMode::Signed if spec.k < 3 => {
            Err(Error::Generator("signed mode needs a support of at least 3 pairs".into()))
        }
        GeneratorMode::MarginalityViolating if spec.nx < 2 || spec.ny < 2 => {
            Err(Error::Generator("marginality-violating mode needs |X|, |Y| ≥ 2".into()))
        }
        _ => Ok(()),
    }
}

/// Attempts at drawing a signed measure whose induced cells are all non-negative.
const SIGNED_ATTEMPTS: usize = 10_000;

/// Deterministic in `spec`: the same spec always yields the same instance.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    check_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let xs = labels("x", spec.nx)?;
    let ys = labels("y", spec.ny)?;
    let (nx, ny) = (spec.nx, spec.ny);
    let draw_pair = |rng: &mut ChaCha8Rng| OrderPair::new(random_order(rng, nx), random_order(rng, ny));
    let seq = Execution::Sequential;
    match spec.mode {
        GeneratorMode::Probability => {
            let nu = probability_measure(&mut rng, spec.k, draw_pair);
            let rule = induce_from_order_pairs(&nu, &xs, &ys, &Budgets::All, true, seq)?;
            Ok(Generated { rule, measure: Some(nu) })
        }
        GeneratorMode::Signed => {
            for _ in 0..SIGNED_ATTEMPTS {
                let nu = signed_measure(&mut rng, spec.k, draw_pair);
                if nu.is_nonnegative() {
                    continue; // a repeated draw swallowed the negative weight
                }
                let rule = induce_from_order_pairs(&nu, &xs, &ys, &Budgets::All, false, seq)?;
                if rule.is_nonnegative() {
                    return Ok(Generated { rule, measure: Some(nu) });
                }
            }
            Err(Error::Generator(format!(
                "no signed measure with non-negative induced cells in {SIGNED_ATTEMPTS} draws; try a larger support"
            )))
        }
        GeneratorMode::Arbitrary => {
            let mut tables = Vec::new();
            for (a, b) in Budgets::All.pairs(nx, ny) {
                let cells: Vec<(usize, usize)> = a.iter().flat_map(|x| b.iter().map(move |y| (x, y))).collect();
                let d = rng.gen_range(1..=MAX_DENOMINATOR);
                let mut t = Table::zeros(nx, ny);
                for _ in 0..d {
                    let (x, y) = cells[rng.gen_range(0..cells.len())];
                    *t.get_mut(x, y) += ratio(1, d);
                }
                tables.push(((a, b), t));
            }
            Ok(Generated { rule: JointChoiceRule::new(xs, ys, tables)?, measure: None })
        }
        GeneratorMode::MarginalityViolating => {
            let nu = probability_measure(&mut rng, spec.k, draw_pair);
            let base = induce_from_order_pairs(&nu, &xs, &ys, &Budgets::All, true, seq)?;
            let candidates: Vec<(Subset, Subset)> = base.budget_pairs().filter(|(a, _)| a.len() >= 2).collect();
            let (a, b) = candidates[rng.gen_range(0..candidates.len())];
            let mut t = base.table(a, b).expect("complete").clone();
            let occupied: Vec<(usize, usize)> = t.nonzero().map(|(x, y, _)| (x, y)).collect();
            let (x, y) = occupied[rng.gen_range(0..occupied.len())];
            let others: Vec<usize> = a.iter().filter(|&z| z != x).collect();
            let z = others[rng.gen_range(0..others.len())];
            // moving within column y keeps agent-2 sums and breaks agent-1 sums
            let moved = t.get(x, y).clone();
            let part = if rng.gen_bool(0.5) { moved.clone() } else { moved / Rational::from_integer(2.into()) };
            *t.get_mut(x, y) -= &part;
            *t.get_mut(z, y) += &part;
            let tables = base.tables().map(|(k, v)| if *k == (a, b) { (*k, t.clone()) } else { (*k, v.clone()) });
            Ok(Generated { rule: JointChoiceRule::new(xs.clone(), ys.clone(), tables)?, measure: None })
        }
    }
}

/// Probability measure over `k` random orders of `n` labels `a1..an`.
pub fn random_order_measure(seed: u64, n: usize, k: usize) -> Result<(AlternativeSet, SignedOrderMeasure)> {
    if n == 0 || n > GENERATOR_MAX_ALTERNATIVES || k == 0 || k as i64 > MAX_DENOMINATOR {
        return Err(Error::Generator("invalid size for a random order measure".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = labels("a", n)?;
    Ok((set, probability_measure(&mut rng, k, |r| random_order(r, n))))
}

/// Single-agent rule with an independent random distribution on every menu.
pub fn random_choice_rule(seed: u64, n: usize) -> Result<ChoiceRule> {
    if n == 0 || n > GENERATOR_MAX_ALTERNATIVES {
        return Err(Error::Generator("invalid size for a random choice rule".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = labels("a", n)?;
    let mut probs = BTreeMap::new();
    for menu in nonempty_subsets(n) {
        let members: Vec<usize> = menu.iter().collect();
        let d = rng.gen_range(1..=MAX_DENOMINATOR);
        let mut row = vec![Rational::zero(); n];
        for _ in 0..d {
            row[members[rng.gen_range(0..members.len())]] += ratio(1, d);
        }
        probs.insert(menu, row);
    }
    ChoiceRule::new(set, probs)
}

/// Single-agent rule induced by a random signed measure over orders whose
/// menu probabilities stay non-negative.
pub fn random_signed_choice_rule(seed: u64, n: usize, k: usize) -> Result<(ChoiceRule, SignedOrderMeasure)> {
    if n == 0 || n > GENERATOR_MAX_ALTERNATIVES || k < 3 || k as i64 > MAX_DENOMINATOR / 2 {
        return Err(Error::Generator("invalid size for a random signed choice rule".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = labels("a", n)?;
    for _ in 0..SIGNED_ATTEMPTS {
        let mu = signed_measure(&mut rng, k, |r| random_order(r, n));
        if mu.is_nonnegative() {
            continue;
        }
        let rule = induce_from_orders(&mu, &set, false)?;
        if rule.menus().all(|(_, row)| row.iter().all(|v| !v.is_negative())) {
            return Ok((rule, mu));
        }
    }
    Err(Error::Generator("no signed order measure with non-negative menus found".into()))
}
