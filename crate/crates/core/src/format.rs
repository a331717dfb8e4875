//! JSON instance and result files. Rationals are always strings.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::kabanov::BidAskMarket;
use crate::polyhedra::{FaceForm, PolyCone, Rel, Row};
use crate::pricing::ConstrainedMarket;
use crate::rational::{format_rational, parse_rational, Rational};
use crate::selection::SelectionProblem;
use crate::tree::{NodeMap, RawNode, ScenarioTree};

pub const FORMAT_VERSION: u32 = 1;

/// A rational serialized as `"p/q"` or `"p"`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Q(pub Rational);

impl fmt::Debug for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map(Q).map_err(de::Error::custom)
    }
}

pub fn qs(v: &[Rational]) -> Vec<Q> {
    v.iter().cloned().map(Q).collect()
}

pub fn unq(v: &[Q]) -> Vec<Rational> {
    v.iter().map(|q| q.0.clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Selection,
    Market,
    Bidask,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub parent: Option<String>,
    pub prob: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSection {
    pub nodes: Vec<NodeSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub a: Vec<Q>,
    pub rel: Rel,
    pub b: Q,
}

impl RowSpec {
    pub fn from_row(r: &Row) -> Self {
        RowSpec {
            a: qs(&r.a),
            rel: r.rel,
            b: Q(r.b.clone()),
        }
    }

    pub fn to_row(&self) -> Row {
        Row::new(unq(&self.a), self.rel, self.b.0.clone())
    }
}

/// A cone given by generators or by rows `a·x ≤ 0` / `a·x = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConeSpec {
    Gens {
        rays: Vec<Vec<Q>>,
        #[serde(default)]
        lineality: Vec<Vec<Q>>,
    },
    Rows {
        rows: Vec<RowSpec>,
    },
}

impl ConeSpec {
    pub fn to_cone(&self, dim: usize) -> Result<PolyCone> {
        match self {
            ConeSpec::Gens { rays, lineality } => PolyCone::from_generators(
                dim,
                rays.iter().map(|r| unq(r)).collect(),
                lineality.iter().map(|r| unq(r)).collect(),
            ),
            ConeSpec::Rows { rows } => {
                PolyCone::from_rows(dim, rows.iter().map(RowSpec::to_row).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetEntry {
    pub node: String,
    pub rows: Vec<RowSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeEntry {
    pub node: String,
    pub cone: ConeSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorEntry {
    pub node: String,
    pub value: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarEntry {
    pub node: String,
    pub value: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntry {
    pub node: String,
    pub matrix: Vec<Vec<Q>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionPayload {
    pub dim: usize,
    #[serde(rename = "V")]
    pub v: Vec<SetEntry>,
    #[serde(rename = "C", default)]
    pub c: Vec<ConeEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketPayload {
    pub dim: usize,
    #[serde(rename = "S")]
    pub s: Vec<VectorEntry>,
    #[serde(rename = "B", default)]
    pub b: Vec<ConeEntry>,
    #[serde(default)]
    pub f: Vec<ScalarEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidAskPayload {
    pub dim: usize,
    #[serde(rename = "Pi")]
    pub pi: Vec<MatrixEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta0: Option<Vec<Q>>,
    #[serde(rename = "zetaT", default, skip_serializing_if = "Vec::is_empty")]
    pub zeta_t: Vec<VectorEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Selection(SelectionPayload),
    Market(MarketPayload),
    Bidask(BidAskPayload),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceFile {
    pub version: u32,
    pub kind: Kind,
    pub tree: TreeSection,
    pub payload: Payload,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    version: u32,
    kind: Kind,
    tree: TreeSection,
    payload: Value,
}

fn schema(e: impl fmt::Display) -> Error {
    Error::invalid(format!("schema: {e}"))
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<InstanceFile> {
        let raw: RawInstance = serde_json::from_str(text).map_err(schema)?;
        if raw.version != FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported format version {}",
                raw.version
            )));
        }
        let payload = match raw.kind {
            Kind::Selection => {
                Payload::Selection(serde_json::from_value(raw.payload).map_err(schema)?)
            }
            Kind::Market => Payload::Market(serde_json::from_value(raw.payload).map_err(schema)?),
            Kind::Bidask => Payload::Bidask(serde_json::from_value(raw.payload).map_err(schema)?),
        };
        Ok(InstanceFile {
            version: raw.version,
            kind: raw.kind,
            tree: raw.tree,
            payload,
        })
    }

    /// Pretty JSON with a trailing newline.
    pub fn print(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn scenario_tree(&self) -> Result<ScenarioTree> {
        let raw: Vec<RawNode> = self
            .tree
            .nodes
            .iter()
            .map(|n| RawNode {
                id: n.id.clone(),
                parent: n.parent.clone(),
                prob: n.prob.0.clone(),
            })
            .collect();
        ScenarioTree::validate(&raw)
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let tree = self.scenario_tree()?;
        match (&self.kind, &self.payload) {
            (Kind::Selection, Payload::Selection(p)) => {
                Ok(Instance::Selection(selection_problem(tree, p)?))
            }
            (Kind::Market, Payload::Market(p)) => Ok(Instance::Market(market(tree, p)?)),
            (Kind::Bidask, Payload::Bidask(p)) => bidask(tree, p),
            _ => Err(Error::invalid("payload does not match the kind")),
        }
    }
}

pub enum Instance {
    Selection(SelectionProblem),
    Market(ConstrainedMarket),
    BidAsk {
        market: BidAskMarket,
        zeta0: Option<Vec<Rational>>,
        zeta_t: Option<NodeMap<Vec<Rational>>>,
    },
}

fn node_index(tree: &ScenarioTree, id: &str, what: &str) -> Result<usize> {
    tree.index_of(id)
        .ok_or_else(|| Error::invalid(format!("{what} refers to unknown node {id:?}")))
}

fn fill<T, U>(
    tree: &ScenarioTree,
    entries: &[T],
    what: &str,
    key: impl Fn(&T) -> &str,
    mut conv: impl FnMut(&T) -> Result<U>,
) -> Result<NodeMap<U>> {
    let mut map = NodeMap::new(tree.len());
    for e in entries {
        let id = key(e);
        let n = node_index(tree, id, what)?;
        if map.get(n).is_some() {
            return Err(Error::invalid(format!("{what}: node {id:?} given twice")));
        }
        map.set(n, conv(e)?);
    }
    Ok(map)
}

fn check_len(len: usize, dim: usize, what: &str, node: &str) -> Result<()> {
    if len == dim {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what} at node {node:?} has {len} entries, expected {dim}"
        )))
    }
}

fn selection_problem(tree: ScenarioTree, p: &SelectionPayload) -> Result<SelectionProblem> {
    let d = p.dim;
    let v = fill(
        &tree,
        &p.v,
        "V",
        |e| &e.node,
        |e| {
            for r in &e.rows {
                check_len(r.a.len(), d, "V row", &e.node)?;
            }
            FaceForm::new(d, e.rows.iter().map(RowSpec::to_row).collect())
        },
    )?;
    let c = fill(
        &tree,
        &p.c,
        "C",
        |e| &e.node,
        |e| cone(&e.cone, d, "C", &e.node),
    )?;
    SelectionProblem::new(tree, v, c, d)
}

fn cone(spec: &ConeSpec, d: usize, what: &str, node: &str) -> Result<PolyCone> {
    match spec {
        ConeSpec::Gens { rays, lineality } => {
            for v in rays.iter().chain(lineality) {
                check_len(v.len(), d, what, node)?;
            }
        }
        ConeSpec::Rows { rows } => {
            for r in rows {
                check_len(r.a.len(), d, what, node)?;
            }
        }
    }
    spec.to_cone(d)
        .map_err(|e| Error::invalid(format!("{what} at node {node:?}: {e}")))
}

fn market(tree: ScenarioTree, p: &MarketPayload) -> Result<ConstrainedMarket> {
    let d = p.dim;
    let s = fill(
        &tree,
        &p.s,
        "S",
        |e| &e.node,
        |e| {
            check_len(e.value.len(), d, "S", &e.node)?;
            Ok(unq(&e.value))
        },
    )?;
    let b = fill(
        &tree,
        &p.b,
        "B",
        |e| &e.node,
        |e| cone(&e.cone, d, "B", &e.node),
    )?;
    let f = fill(&tree, &p.f, "f", |e| &e.node, |e| Ok(e.value.0.clone()))?;
    for (n, _) in f.iter() {
        if !tree.is_leaf(n) {
            return Err(Error::invalid(format!(
                "claim given at interior node {:?}",
                tree.id(n)
            )));
        }
    }
    ConstrainedMarket::new(tree, s, b, f)
}

fn bidask(tree: ScenarioTree, p: &BidAskPayload) -> Result<Instance> {
    let d = p.dim;
    let pi = fill(
        &tree,
        &p.pi,
        "Pi",
        |e| &e.node,
        |e| {
            check_len(e.matrix.len(), d, "Pi", &e.node)?;
            Ok(e.matrix.iter().map(|r| unq(r)).collect())
        },
    )?;
    let zeta0 = match &p.zeta0 {
        Some(z) => {
            check_len(z.len(), d, "zeta0", "root")?;
            Some(unq(z))
        }
        None => None,
    };
    let zeta_t = if p.zeta_t.is_empty() {
        None
    } else {
        Some(fill(
            &tree,
            &p.zeta_t,
            "zetaT",
            |e| &e.node,
            |e| {
                check_len(e.value.len(), d, "zetaT", &e.node)?;
                Ok(unq(&e.value))
            },
        )?)
    };
    Ok(Instance::BidAsk {
        market: BidAskMarket::new(tree, pi)?,
        zeta0,
        zeta_t,
    })
}

/// Output of one command: a status, global fields and per-node fields.
/// Values are JSON strings, booleans, arrays or objects; numbers never occur.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub version: u32,
    pub tool: String,
    pub command: String,
    pub input_sha256: String,
    pub status: String,
    #[serde(default)]
    pub fields: BTreeMap<String, Value>,
    #[serde(default)]
    pub nodes: Vec<NodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    pub fields: BTreeMap<String, Value>,
}

impl ResultFile {
    pub fn parse(text: &str) -> Result<ResultFile> {
        serde_json::from_str(text).map_err(schema)
    }

    pub fn print(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    /// `(node_id, field, value)` triples; global fields use an empty node id.
    /// Strings appear verbatim, other values as compact JSON.
    pub fn triples(&self) -> Vec<(String, String, String)> {
        let text = |v: &Value| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let mut out = vec![
            (
                String::new(),
                "version".to_string(),
                self.version.to_string(),
            ),
            (String::new(), "tool".to_string(), self.tool.clone()),
            (String::new(), "command".to_string(), self.command.clone()),
            (
                String::new(),
                "input_sha256".to_string(),
                self.input_sha256.clone(),
            ),
            (String::new(), "status".to_string(), self.status.clone()),
        ];
        for (k, v) in &self.fields {
            out.push((String::new(), k.clone(), text(v)));
        }
        for n in &self.nodes {
            for (k, v) in &n.fields {
                out.push((n.id.clone(), k.clone(), text(v)));
            }
        }
        out
    }
}

pub fn q_value(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

pub fn vec_value(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(q_value).collect())
}

pub fn rows_value(f: &FaceForm) -> Value {
    serde_json::to_value(f.rows().iter().map(RowSpec::from_row).collect::<Vec<_>>())
        .expect("serializable")
}
