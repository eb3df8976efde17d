//! JSON document formats for instances, assignments, and lotteries.
//!
//! Probabilities travel as strings in `"num/den"` form (plain integers also
//! accepted) so exact values survive the round trip. Emitted documents use
//! sorted maps and omit zero entries, which makes output byte-stable.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{
    Instance, Lottery, ModelError, RandomAssignment, RandomPriority, SimpleAssignment,
    SimplePriority,
};
use crate::scalar::Scalar;

/// Failure while reading or writing a document.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("matrix is missing a row for agent `{0}`")]
    MissingRow(String),
    #[error("lottery entry is missing an item for agent `{0}`")]
    MissingAssignment(String),
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    agents: Vec<String>,
    items: Vec<String>,
    preferences: BTreeMap<String, Vec<String>>,
    priority: Vec<PriorityEntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct PriorityEntryDoc {
    order: Vec<String>,
    weight: String,
}

#[derive(Serialize, Deserialize)]
struct AssignmentDoc {
    matrix: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Serialize, Deserialize)]
struct LotteryEntryDoc {
    assignment: BTreeMap<String, String>,
    weight: String,
}

fn parse_scalar<S: Scalar>(text: &str) -> Result<S, ModelError> {
    let trimmed = text.trim();
    // Rational scalars only accept the explicit `num/den` form, so retry
    // plain integers as `n/1`.
    S::from_str_radix(trimmed, 10)
        .or_else(|_| S::from_str_radix(&format!("{trimmed}/1"), 10))
        .map_err(|_| ModelError::BadRational(text.to_string()))
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path)
        .map_err(|source| IoError::File { path: path.display().to_string(), source })
}

fn write_string(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents)
        .map_err(|source| IoError::File { path: path.display().to_string(), source })
}

/// Parses an instance document: agents, items, per-agent preference lists,
/// and the random priority. Preference lists must be permutations of the
/// declared items; dummy items are appended afterwards when `m < n`.
pub fn parse_instance<S: Scalar>(text: &str) -> Result<(Instance, RandomPriority<S>), IoError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let mut item_idx = BTreeMap::new();
    for (i, item) in doc.items.iter().enumerate() {
        if item_idx.insert(item.as_str(), i).is_some() {
            return Err(ModelError::DuplicateName(item.clone()).into());
        }
    }
    let mut agent_idx = BTreeMap::new();
    for (i, agent) in doc.agents.iter().enumerate() {
        if agent_idx.insert(agent.as_str(), i).is_some() {
            return Err(ModelError::DuplicateName(agent.clone()).into());
        }
    }
    for name in doc.preferences.keys() {
        if !agent_idx.contains_key(name.as_str()) {
            return Err(ModelError::UnknownAgent(name.clone()).into());
        }
    }
    let mut prefs = Vec::with_capacity(doc.agents.len());
    for agent in &doc.agents {
        let list = doc
            .preferences
            .get(agent)
            .ok_or_else(|| ModelError::MissingPreferences(agent.clone()))?;
        let mut pref = Vec::with_capacity(list.len());
        for item in list {
            let &idx = item_idx
                .get(item.as_str())
                .ok_or_else(|| ModelError::UnknownItem(item.clone()))?;
            pref.push(idx);
        }
        prefs.push(pref);
    }
    let inst = Instance::new(doc.agents.clone(), doc.items, prefs)?;

    let mut entries = Vec::with_capacity(doc.priority.len());
    for entry in &doc.priority {
        let mut order = Vec::with_capacity(entry.order.len());
        for agent in &entry.order {
            let &idx = agent_idx
                .get(agent.as_str())
                .ok_or_else(|| ModelError::UnknownAgent(agent.clone()))?;
            order.push(idx);
        }
        if order.len() != inst.n() {
            return Err(ModelError::OrderNotPermutation.into());
        }
        entries.push((SimplePriority::new(order)?, parse_scalar::<S>(&entry.weight)?));
    }
    let prio = RandomPriority::new(entries)?;
    Ok((inst, prio))
}

/// Reads an instance document from a file.
pub fn load_instance<S: Scalar>(path: &Path) -> Result<(Instance, RandomPriority<S>), IoError> {
    parse_instance(&read_to_string(path)?)
}

/// Name-keyed sparse rendering of an allocation matrix; zero entries are
/// omitted and map order keeps output stable.
pub(crate) fn matrix_doc<S: Scalar>(
    p: &RandomAssignment<S>,
    inst: &Instance,
) -> BTreeMap<String, BTreeMap<String, String>> {
    let mut matrix = BTreeMap::new();
    for agent in 0..p.n() {
        let mut row = BTreeMap::new();
        for item in 0..p.m() {
            let value = p.entry(agent, item);
            if !value.is_zero() {
                row.insert(inst.item_name(item).to_string(), value.to_string());
            }
        }
        matrix.insert(inst.agent_name(agent).to_string(), row);
    }
    matrix
}

/// Renders an allocation matrix as a document keyed by agent and item names.
pub fn assignment_to_json<S: Scalar>(p: &RandomAssignment<S>, inst: &Instance) -> String {
    let doc = AssignmentDoc { matrix: matrix_doc(p, inst) };
    serde_json::to_string_pretty(&doc).expect("assignment document serializes")
}

/// Parses an allocation matrix against an instance. Every agent needs a row;
/// absent items mean zero probability.
pub fn parse_assignment<S: Scalar>(
    text: &str,
    inst: &Instance,
) -> Result<RandomAssignment<S>, IoError> {
    let doc: AssignmentDoc = serde_json::from_str(text)?;
    for name in doc.matrix.keys() {
        if inst.agent_index(name).is_none() {
            return Err(ModelError::UnknownAgent(name.clone()).into());
        }
    }
    let mut rows = vec![vec![S::zero(); inst.m()]; inst.n()];
    for (agent_pos, agent) in inst.agents().iter().enumerate() {
        let row = doc.matrix.get(agent).ok_or_else(|| IoError::MissingRow(agent.clone()))?;
        for (item, value) in row {
            let idx = inst
                .item_index(item)
                .ok_or_else(|| ModelError::UnknownItem(item.clone()))?;
            rows[agent_pos][idx] = parse_scalar::<S>(value)?;
        }
    }
    Ok(RandomAssignment::new(rows)?)
}

/// Agent and item names appearing in an allocation matrix document: sorted
/// row keys and sorted distinct column keys.
pub fn matrix_names(text: &str) -> Result<(Vec<String>, Vec<String>), IoError> {
    let doc: AssignmentDoc = serde_json::from_str(text)?;
    let agents: Vec<String> = doc.matrix.keys().cloned().collect();
    let mut items: Vec<String> = doc
        .matrix
        .values()
        .flat_map(|row| row.keys().cloned())
        .collect();
    items.sort();
    items.dedup();
    Ok((agents, items))
}

/// Reads an allocation matrix document from a file.
pub fn load_assignment<S: Scalar>(
    path: &Path,
    inst: &Instance,
) -> Result<RandomAssignment<S>, IoError> {
    parse_assignment(&read_to_string(path)?, inst)
}

/// Writes an allocation matrix document to a file.
pub fn save_assignment<S: Scalar>(
    path: &Path,
    p: &RandomAssignment<S>,
    inst: &Instance,
) -> Result<(), IoError> {
    write_string(path, &assignment_to_json(p, inst))
}

/// Renders a lottery as a list of deterministic assignments with weights.
pub fn lottery_to_json<S: Scalar>(lottery: &Lottery<S>, inst: &Instance) -> String {
    let docs: Vec<LotteryEntryDoc> = lottery
        .entries()
        .iter()
        .map(|(f, weight)| {
            let assignment = (0..f.n())
                .map(|agent| {
                    (
                        inst.agent_name(agent).to_string(),
                        inst.item_name(f.item_of(agent)).to_string(),
                    )
                })
                .collect();
            LotteryEntryDoc { assignment, weight: weight.to_string() }
        })
        .collect();
    serde_json::to_string_pretty(&docs).expect("lottery document serializes")
}

/// Parses a lottery document against an instance. Every entry must assign an
/// item to every agent, injectively.
pub fn parse_lottery<S: Scalar>(text: &str, inst: &Instance) -> Result<Lottery<S>, IoError> {
    let docs: Vec<LotteryEntryDoc> = serde_json::from_str(text)?;
    let mut entries = Vec::with_capacity(docs.len());
    for doc in &docs {
        for name in doc.assignment.keys() {
            if inst.agent_index(name).is_none() {
                return Err(ModelError::UnknownAgent(name.clone()).into());
            }
        }
        let mut items = Vec::with_capacity(inst.n());
        for agent in inst.agents() {
            let item = doc
                .assignment
                .get(agent)
                .ok_or_else(|| IoError::MissingAssignment(agent.clone()))?;
            let idx = inst
                .item_index(item)
                .ok_or_else(|| ModelError::UnknownItem(item.clone()))?;
            items.push(idx);
        }
        entries.push((SimpleAssignment::new(items, inst.m())?, parse_scalar::<S>(&doc.weight)?));
    }
    Ok(Lottery::new(entries)?)
}

/// Reads a lottery document from a file.
pub fn load_lottery<S: Scalar>(path: &Path, inst: &Instance) -> Result<Lottery<S>, IoError> {
    parse_lottery(&read_to_string(path)?, inst)
}

/// Writes a lottery document to a file.
pub fn save_lottery<S: Scalar>(
    path: &Path,
    lottery: &Lottery<S>,
    inst: &Instance,
) -> Result<(), IoError> {
    write_string(path, &lottery_to_json(lottery, inst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;
    use crate::Rational;

    const TWO_AGENT: &str = r#"{
        "agents": ["1", "2"],
        "items": ["a", "b"],
        "preferences": { "1": ["a", "b"], "2": ["a", "b"] },
        "priority": [
            { "order": ["1", "2"], "weight": "1/2" },
            { "order": ["2", "1"], "weight": "1/2" }
        ]
    }"#;

    #[test]
    fn instance_round_trip() {
        let (inst, prio) = parse_instance::<Rational>(TWO_AGENT).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.m(), 2);
        assert_eq!(inst.pref_order(1), [0, 1]);
        assert_eq!(prio.entries().len(), 2);
        assert_eq!(prio.entries()[0].1, ratio(1, 2));
    }

    #[test]
    fn instance_rejects_bad_documents() {
        let missing = TWO_AGENT.replace(r#""2": ["a", "b"]"#, r#""2": ["a"]"#);
        assert!(parse_instance::<Rational>(&missing).is_err());

        let bad_weight = TWO_AGENT.replace("1/2", "1/3");
        assert!(matches!(
            parse_instance::<Rational>(&bad_weight),
            Err(IoError::Model(ModelError::WeightSumNotOne(_)))
        ));

        let unknown = TWO_AGENT.replace(r#""order": ["2", "1"]"#, r#""order": ["2", "3"]"#);
        assert!(matches!(
            parse_instance::<Rational>(&unknown),
            Err(IoError::Model(ModelError::UnknownAgent(_)))
        ));
    }

    #[test]
    fn assignment_round_trip_is_exact_and_sparse() {
        let (inst, _) = parse_instance::<Rational>(TWO_AGENT).unwrap();
        let p = RandomAssignment::new(vec![
            vec![ratio(1, 3), ratio(2, 3)],
            vec![ratio(2, 3), ratio(1, 3)],
        ])
        .unwrap();
        let json = assignment_to_json(&p, &inst);
        let back = parse_assignment::<Rational>(&json, &inst).unwrap();
        assert_eq!(p, back);

        let point = RandomAssignment::new(vec![
            vec![ratio(1, 1), ratio(0, 1)],
            vec![ratio(0, 1), ratio(1, 1)],
        ])
        .unwrap();
        let json = assignment_to_json(&point, &inst);
        assert!(!json.contains("\"b\": \"0\""));
        let back = parse_assignment::<Rational>(&json, &inst).unwrap();
        assert_eq!(point, back);
    }

    #[test]
    fn lottery_round_trip() {
        let (inst, _) = parse_instance::<Rational>(TWO_AGENT).unwrap();
        let lot = Lottery::new(vec![
            (SimpleAssignment::new(vec![0, 1], 2).unwrap(), ratio(1, 4)),
            (SimpleAssignment::new(vec![1, 0], 2).unwrap(), ratio(3, 4)),
        ])
        .unwrap();
        let json = lottery_to_json(&lot, &inst);
        let back = parse_lottery::<Rational>(&json, &inst).unwrap();
        assert_eq!(lot, back);
    }

    #[test]
    fn dummy_items_appear_in_emitted_documents() {
        let text = r#"{
            "agents": ["1", "2", "3"],
            "items": ["a", "b"],
            "preferences": { "1": ["a", "b"], "2": ["b", "a"], "3": ["a", "b"] },
            "priority": [ { "order": ["1", "2", "3"], "weight": "1" } ]
        }"#;
        let (inst, _) = parse_instance::<Rational>(text).unwrap();
        assert_eq!(inst.m(), 3);
        assert_eq!(inst.item_name(2), "__dummy_1");
        assert_eq!(inst.pref_order(1), [1, 0, 2]);
    }
}
