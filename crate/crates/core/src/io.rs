//! JSON dataset, measure and polynomial files.
//!
//! Values are written as exact `num/den` strings (bare integers when the
//! denominator is 1); decimals such as `"0.2"` are accepted on input.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{AnyMeasure, SignedMeasure};
use crate::model::{AlternativeSet, ChoiceFunction, ChoiceFunctionPair, JointChoiceRule, LinearOrder, OrderPair, Table};
use crate::moebius::{BlockMarschakTable, MarginalPolys};
use crate::rational::{format_rational, parse_rational};
use crate::subset::Subset;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DatasetFile {
    #[serde(rename = "X")]
    x: Vec<String>,
    #[serde(rename = "Y")]
    y: Vec<String>,
    complete: bool,
    tables: Vec<TableFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TableFile {
    #[serde(rename = "A")]
    a: Vec<String>,
    #[serde(rename = "B")]
    b: Vec<String>,
    p: Vec<CellFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CellFile {
    x: String,
    y: String,
    pr: String,
}

pub fn parse_dataset(text: &str) -> Result<JointChoiceRule> {
    let file: DatasetFile = serde_json::from_str(text)?;
    let xs = AlternativeSet::new(file.x)?;
    let ys = AlternativeSet::new(file.y)?;
    let mut tables = Vec::with_capacity(file.tables.len());
    for t in &file.tables {
        let (a, b) = (xs.budget(&t.a)?, ys.budget(&t.b)?);
        let mut table = Table::zeros(xs.len(), ys.len());
        for cell in &t.p {
            let (x, y) = (xs.index_of(&cell.x)?, ys.index_of(&cell.y)?);
            if !a.contains(x) || !b.contains(y) {
                return Err(Error::CellOutsideBudget {
                    x: cell.x.clone(),
                    y: cell.y.clone(),
                    a: xs.describe(a),
                    b: ys.describe(b),
                });
            }
            *table.get_mut(x, y) += parse_rational(&cell.pr)?;
        }
        tables.push(((a, b), table));
    }
    let rule = JointChoiceRule::new(xs, ys, tables)?;
    if file.complete && !rule.is_complete() {
        rule.require_complete()?;
    }
    Ok(rule)
}

fn dataset_file(rule: &JointChoiceRule) -> DatasetFile {
    let (xs, ys) = (rule.x_set(), rule.y_set());
    let tables = rule
        .tables()
        .map(|((a, b), t)| TableFile {
            a: xs.labels_of(*a),
            b: ys.labels_of(*b),
            p: t
                .nonzero()
                .map(|(x, y, v)| CellFile { x: xs.label(x).into(), y: ys.label(y).into(), pr: format_rational(v) })
                .collect(),
        })
        .collect();
    DatasetFile { x: xs.labels().to_vec(), y: ys.labels().to_vec(), complete: rule.is_complete(), tables }
}

/// Canonical form: tables by ascending budget bitsets, zero cells omitted.
pub fn serialize_dataset(rule: &JointChoiceRule) -> String {
    serde_json::to_string_pretty(&dataset_file(rule)).expect("plain data serializes")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MeasureFile {
    #[serde(rename = "type")]
    kind: String,
    entries: Vec<EntryFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Side {
    Order(Vec<String>),
    Choices(Vec<SelectionFile>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SelectionFile {
    #[serde(rename = "A")]
    a: Vec<String>,
    c: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct EntryFile {
    first: Side,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    second: Option<Side>,
    w: String,
}

fn order_of(set: &AlternativeSet, side: &Side) -> Result<LinearOrder> {
    match side {
        Side::Order(labels) => LinearOrder::from_labels(set, labels),
        Side::Choices(_) => Err(Error::Format("expected a ranking, found selections".into())),
    }
}

fn choices_of(set: &AlternativeSet, side: &Side) -> Result<ChoiceFunction> {
    match side {
        Side::Choices(sel) => {
            let mut picks = BTreeMap::new();
            for s in sel {
                let menu = set.budget(&s.a)?;
                if picks.insert(menu, set.index_of(&s.c)?).is_some() {
                    return Err(Error::Format(format!("menu {} selected twice", set.describe(menu))));
                }
            }
            ChoiceFunction::new(picks)
        }
        // an empty list parses as a ranking; treat it as an empty selection
        Side::Order(labels) if labels.is_empty() => ChoiceFunction::new(BTreeMap::new()),
        Side::Order(_) => Err(Error::Format("expected selections, found a ranking".into())),
    }
}

fn second_of(e: &EntryFile) -> Result<&Side> {
    e.second.as_ref().ok_or_else(|| Error::Format("entry lacks \"second\"".into()))
}

/// Reads a measure file; rankings and selections are resolved against the
/// given ground sets (`y_set` is unused for `orders`).
pub fn parse_measure(text: &str, x_set: &AlternativeSet, y_set: &AlternativeSet) -> Result<AnyMeasure> {
    let file: MeasureFile = serde_json::from_str(text)?;
    let weight = |e: &EntryFile| parse_rational(&e.w);
    match file.kind.as_str() {
        "order_pairs" => {
            let entries = file
                .entries
                .iter()
                .map(|e| Ok((OrderPair::new(order_of(x_set, &e.first)?, order_of(y_set, second_of(e)?)?), weight(e)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(AnyMeasure::OrderPairs(SignedMeasure::from_entries(entries)?))
        }
        "orders" => {
            let entries = file
                .entries
                .iter()
                .map(|e| Ok((order_of(x_set, &e.first)?, weight(e)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(AnyMeasure::Orders(SignedMeasure::from_entries(entries)?))
        }
        "choice_pairs" => {
            let entries = file
                .entries
                .iter()
                .map(|e| {
                    let pair = ChoiceFunctionPair {
                        first: choices_of(x_set, &e.first)?,
                        second: choices_of(y_set, second_of(e)?)?,
                    };
                    Ok((pair, weight(e)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AnyMeasure::ChoicePairs(SignedMeasure::from_entries(entries)?))
        }
        other => Err(Error::Format(format!("unknown measure type {other:?}"))),
    }
}

fn selections(set: &AlternativeSet, f: &ChoiceFunction) -> Side {
    Side::Choices(
        f.picks()
            .iter()
            .map(|(menu, c)| SelectionFile { a: set.labels_of(*menu), c: set.label(*c).into() })
            .collect(),
    )
}

/// Canonical form: entries in ascending key order, zero weights absent.
pub fn serialize_measure(measure: &AnyMeasure, x_set: &AlternativeSet, y_set: &AlternativeSet) -> String {
    let entries = match measure {
        AnyMeasure::OrderPairs(m) => m
            .iter()
            .map(|(p, w)| EntryFile {
                first: Side::Order(p.first.labels(x_set)),
                second: Some(Side::Order(p.second.labels(y_set))),
                w: format_rational(w),
            })
            .collect(),
        AnyMeasure::Orders(m) => m
            .iter()
            .map(|(o, w)| EntryFile { first: Side::Order(o.labels(x_set)), second: None, w: format_rational(w) })
            .collect(),
        AnyMeasure::ChoicePairs(m) => m
            .iter()
            .map(|(p, w)| EntryFile {
                first: selections(x_set, &p.first),
                second: Some(selections(y_set, &p.second)),
                w: format_rational(w),
            })
            .collect(),
    };
    let file = MeasureFile { kind: measure.kind().into(), entries };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct JointPolyEntry {
    x: String,
    y: String,
    #[serde(rename = "A")]
    a: Vec<String>,
    #[serde(rename = "B")]
    b: Vec<String>,
    q: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MarginalPolyEntry {
    x: String,
    #[serde(rename = "A")]
    a: Vec<String>,
    q: String,
}

/// Non-zero joint polynomials in canonical order (largest budgets first).
pub fn joint_polys_json(bm: &BlockMarschakTable) -> serde_json::Value {
    let (xs, ys) = (&bm.x_set, &bm.y_set);
    let entries: Vec<JointPolyEntry> = bm
        .joint
        .domain()
        .into_iter()
        .filter_map(|(x, y, a, b)| {
            let q = bm.joint.get(x, y, a, b);
            (!num_traits::Zero::is_zero(q)).then(|| JointPolyEntry {
                x: xs.label(x).into(),
                y: ys.label(y).into(),
                a: xs.labels_of(a),
                b: ys.labels_of(b),
                q: format_rational(q),
            })
        })
        .collect();
    serde_json::json!({ "X": xs.labels(), "Y": ys.labels(), "entries": entries })
}

/// Non-zero single-agent polynomials, smallest menus first.
pub fn marginal_polys_json(set: &AlternativeSet, agent: u8, polys: &MarginalPolys) -> serde_json::Value {
    let entries: Vec<MarginalPolyEntry> = polys
        .domain()
        .into_iter()
        .filter_map(|(x, a)| {
            let q = polys.get(x, a);
            (!num_traits::Zero::is_zero(q)).then(|| MarginalPolyEntry {
                x: set.label(x).into(),
                a: set.labels_of(a),
                q: format_rational(q),
            })
        })
        .collect();
    serde_json::json!({ "agent": agent, "set": set.labels(), "entries": entries })
}

/// Parses a budget list such as `"a,b|c,d"` (agent-1 labels, then agent-2).
pub fn parse_budget_pair(text: &str, x_set: &AlternativeSet, y_set: &AlternativeSet) -> Result<(Subset, Subset)> {
    let (l, r) = text
        .split_once('|')
        .ok_or_else(|| Error::Format(format!("budget pair {text:?} lacks '|'")))?;
    let split = |s: &str| s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect::<Vec<_>>();
    Ok((x_set.budget(&split(l))?, y_set.budget(&split(r))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::rational::ratio;

    const TWO_BUDGETS: &str = r#"{
      "X": ["x1", "x2", "x3"], "Y": ["y1", "y2", "y3"], "complete": false,
      "tables": [
        {"A": ["x1", "x2", "x3"], "B": ["y1", "y2", "y3"], "p": [
          {"x": "x1", "y": "y1", "pr": "0.2"}, {"x": "x1", "y": "y3", "pr": "0.3"},
          {"x": "x2", "y": "y1", "pr": "0.1"}, {"x": "x2", "y": "y2", "pr": "0.3"},
          {"x": "x3", "y": "y3", "pr": "1/10"}]},
        {"A": ["x1", "x2", "x3"], "B": ["y1", "y2"], "p": [
          {"x": "x1", "y": "y1", "pr": "0.3"}, {"x": "x1", "y": "y2", "pr": "0.2"},
          {"x": "x2", "y": "y1", "pr": "0.1"}, {"x": "x2", "y": "y2", "pr": "0.3"},
          {"x": "x3", "y": "y2", "pr": "0.1"}]}
      ]}"#;

    #[test]
    fn parses_decimals_exactly() {
        let rule = parse_dataset(TWO_BUDGETS).unwrap();
        assert_eq!(rule, corpus::table1().unwrap());
        let full = Subset::full(3);
        assert_eq!(rule.prob(0, 0, full, full).unwrap(), &ratio(1, 5));
    }

    #[test]
    fn rejects_bad_tables() {
        let bad = TWO_BUDGETS.replacen("\"0.2\"", "\"0.3\"", 1);
        assert!(matches!(parse_dataset(&bad), Err(Error::TableSum { .. })));
        let outside = TWO_BUDGETS.replacen(r#""x": "x3", "y": "y2""#, r#""x": "x3", "y": "y3""#, 1);
        assert!(matches!(parse_dataset(&outside), Err(Error::CellOutsideBudget { .. })));
        let dup = r#"{"X":["x"],"Y":["y"],"complete":true,"tables":[
            {"A":["x"],"B":["y"],"p":[{"x":"x","y":"y","pr":"1"}]},
            {"A":["x"],"B":["y"],"p":[{"x":"x","y":"y","pr":"1"}]}]}"#;
        assert!(matches!(parse_dataset(dup), Err(Error::DuplicateTable { .. })));
        let claims_complete = TWO_BUDGETS.replace("\"complete\": false", "\"complete\": true");
        assert!(matches!(parse_dataset(&claims_complete), Err(Error::PartialRule { .. })));
        assert!(matches!(parse_dataset("{"), Err(Error::Json(_))));
    }

    #[test]
    fn degenerate_rule() {
        let text = r#"{"X":["x"],"Y":["y"],"complete":true,"tables":[
            {"A":["x"],"B":["y"],"p":[{"x":"x","y":"y","pr":"1"}]}]}"#;
        let rule = parse_dataset(text).unwrap();
        assert!(rule.is_complete());
    }

    #[test]
    fn fixtures_round_trip() {
        for name in corpus::FIXTURE_NAMES {
            let rule = corpus::fixture(name).unwrap().rule;
            let text = serialize_dataset(&rule);
            assert_eq!(parse_dataset(&text).unwrap(), rule);
            assert_eq!(serialize_dataset(&parse_dataset(&text).unwrap()), text);
        }
    }

    #[test]
    fn delta_measure_serializes_to_one_entry() {
        let xs = AlternativeSet::new(["a", "b"]).unwrap();
        let ys = AlternativeSet::new(["x", "y"]).unwrap();
        let m = AnyMeasure::OrderPairs(SignedMeasure::delta(OrderPair::new(
            LinearOrder::identity(2),
            LinearOrder::identity(2),
        )));
        let text = serialize_measure(&m, &xs, &ys);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["type"], "order_pairs");
        assert_eq!(v["entries"].as_array().unwrap().len(), 1);
        assert_eq!(v["entries"][0]["w"], "1");
        assert_eq!(v["entries"][0]["first"], serde_json::json!(["a", "b"]));
        assert_eq!(parse_measure(&text, &xs, &ys).unwrap(), m);
    }

    #[test]
    fn choice_pair_measure_round_trips() {
        let xs = AlternativeSet::new(["a", "b"]).unwrap();
        let ys = AlternativeSet::new(["x", "y"]).unwrap();
        let full = Subset::full(2);
        let f = |c| ChoiceFunction::new([(full, c)].into_iter().collect()).unwrap();
        let m = AnyMeasure::ChoicePairs(
            SignedMeasure::from_entries([
                (ChoiceFunctionPair { first: f(0), second: f(1) }, ratio(3, 4)),
                (ChoiceFunctionPair { first: f(1), second: f(0) }, ratio(1, 4)),
            ])
            .unwrap(),
        );
        let text = serialize_measure(&m, &xs, &ys);
        assert_eq!(parse_measure(&text, &xs, &ys).unwrap(), m);
        let orders = AnyMeasure::Orders(SignedMeasure::delta(LinearOrder::identity(2)));
        let text = serialize_measure(&orders, &xs, &ys);
        assert_eq!(parse_measure(&text, &xs, &ys).unwrap(), orders);
    }

    #[test]
    fn budget_pairs_parse() {
        let xs = AlternativeSet::new(["a", "b", "c"]).unwrap();
        let ys = AlternativeSet::new(["x", "y"]).unwrap();
        let (a, b) = parse_budget_pair("a, c|y", &xs, &ys).unwrap();
        assert_eq!((a, b), (Subset::from_indices([0, 2]), Subset::singleton(1)));
        assert!(parse_budget_pair("a,c", &xs, &ys).is_err());
    }
}
