//! JSON encodings of instances, allocations, utility vectors, partitions and
//! 3DM instances. Rationals travel as lowest-terms `"p/q"` strings (`"p"` for
//! integers) so every value round-trips exactly.

use std::collections::BTreeMap;

use mixfair_core::instance::InstanceError;
use mixfair_core::oracle::{OracleError, ThreeDM};
use mixfair_core::partition::{CanonicalPartition, PrincipalPartition};
use mixfair_core::rational::{format_rational, parse_rational, qi};
use mixfair_core::{Allocation, GoodId, Instance, Q, UtilityVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Instance(#[from] InstanceError),
    #[error("invalid 3DM instance: {0}")]
    ThreeDM(#[from] OracleError),
    #[error("not a rational number: {0:?}")]
    Rational(String),
    #[error("unknown partition kind {0:?}")]
    PartitionKind(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    agents: usize,
    #[serde(default)]
    indivisible: Vec<Vec<usize>>,
    #[serde(default)]
    divisible: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    names: BTreeMap<String, String>,
}

pub fn parse_instance(text: &[u8]) -> Result<Instance, FormatError> {
    let doc: InstanceDoc = serde_json::from_slice(text)?;
    Ok(Instance::new(doc.agents, doc.indivisible, doc.divisible)?.with_names(doc.names))
}

pub fn instance_value(inst: &Instance) -> serde_json::Value {
    let doc = InstanceDoc {
        agents: inst.n_agents(),
        indivisible: inst.indivisible().to_vec(),
        divisible: inst.divisible().to_vec(),
        names: inst.names().clone(),
    };
    serde_json::to_value(doc).expect("instance documents always serialize")
}

pub fn parse_rational_str(s: &str) -> Result<Q, FormatError> {
    parse_rational(s).ok_or_else(|| FormatError::Rational(s.to_owned()))
}

fn rationals(xs: &[Q]) -> Vec<String> {
    xs.iter().map(format_rational).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShareDoc {
    agent: usize,
    good: String,
    share: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocationDoc {
    relaxed: bool,
    shares: Vec<ShareDoc>,
}

/// Entries for the same (agent, good) pair are summed.
pub fn parse_allocation(text: &[u8]) -> Result<Allocation, FormatError> {
    allocation_from_value(serde_json::from_slice(text)?)
}

pub fn allocation_from_value(value: serde_json::Value) -> Result<Allocation, FormatError> {
    let doc: AllocationDoc = serde_json::from_value(value)?;
    let mut alloc = Allocation::new(doc.relaxed);
    for s in doc.shares {
        let good: GoodId = s.good.parse()?;
        alloc.add(s.agent, good, &parse_rational_str(&s.share)?);
    }
    Ok(alloc)
}

pub fn allocation_value(alloc: &Allocation) -> serde_json::Value {
    let doc = AllocationDoc {
        relaxed: alloc.relaxed,
        shares: alloc
            .iter()
            .map(|(agent, good, share)| ShareDoc { agent, good: good.to_string(), share: format_rational(share) })
            .collect(),
    };
    serde_json::to_value(doc).expect("allocation documents always serialize")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilitiesDoc {
    utilities: Vec<String>,
}

pub fn parse_utilities(text: &[u8]) -> Result<UtilityVector, FormatError> {
    utilities_from_value(serde_json::from_slice(text)?)
}

pub fn utilities_from_value(value: serde_json::Value) -> Result<UtilityVector, FormatError> {
    let doc: UtilitiesDoc = serde_json::from_value(value)?;
    strings_to_utilities(&doc.utilities)
}

pub fn strings_to_utilities(xs: &[String]) -> Result<UtilityVector, FormatError> {
    xs.iter().map(|s| parse_rational_str(s)).collect::<Result<_, _>>().map(UtilityVector)
}

/// The bare list of rational strings.
pub fn utility_list(u: &UtilityVector) -> serde_json::Value {
    serde_json::Value::from(rationals(u.values()))
}

pub fn utilities_value(u: &UtilityVector) -> serde_json::Value {
    serde_json::json!({ "utilities": utility_list(u) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionKind {
    Canonical,
    Principal,
}

/// A partition as written by the CLI: blocks in order with one value each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionDoc {
    pub kind: PartitionKind,
    pub blocks: Vec<Vec<usize>>,
    pub values: Vec<Q>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionRaw {
    blocks: Vec<Vec<usize>>,
    values: Vec<String>,
    kind: PartitionKind,
}

impl From<&CanonicalPartition> for PartitionDoc {
    fn from(cp: &CanonicalPartition) -> Self {
        PartitionDoc {
            kind: PartitionKind::Canonical,
            blocks: cp.blocks.clone(),
            values: cp.essential_values.iter().map(|&b| qi(b)).collect(),
        }
    }
}

impl From<&PrincipalPartition> for PartitionDoc {
    fn from(pp: &PrincipalPartition) -> Self {
        PartitionDoc { kind: PartitionKind::Principal, blocks: pp.blocks.clone(), values: pp.critical_values.clone() }
    }
}

pub fn partition_value(p: &PartitionDoc) -> serde_json::Value {
    let raw = PartitionRaw { blocks: p.blocks.clone(), values: rationals(&p.values), kind: p.kind };
    serde_json::to_value(raw).expect("partition documents always serialize")
}

pub fn partition_from_value(value: serde_json::Value) -> Result<PartitionDoc, FormatError> {
    let raw: PartitionRaw = serde_json::from_value(value)?;
    Ok(PartitionDoc {
        kind: raw.kind,
        blocks: raw.blocks,
        values: raw.values.iter().map(|s| parse_rational_str(s)).collect::<Result<_, _>>()?,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThreeDMDoc {
    n: usize,
    triples: Vec<[usize; 3]>,
}

pub fn parse_3dm(text: &[u8]) -> Result<ThreeDM, FormatError> {
    let doc: ThreeDMDoc = serde_json::from_slice(text)?;
    Ok(ThreeDM::new(doc.n, doc.triples)?)
}

pub fn three_dm_value(dm: &ThreeDM) -> serde_json::Value {
    serde_json::to_value(ThreeDMDoc { n: dm.n(), triples: dm.triples().to_vec() })
        .expect("3DM documents always serialize")
}

/// Pretty JSON with a trailing newline; key order is fixed by the document
/// types, so equal values give identical bytes.
pub fn to_text(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}
