//! JSON tree documents.
//!
//! One document holds one tree:
//!
//! ```json
//! {
//!   "format": "mcts-xray-tree",
//!   "version": 1,
//!   "alphabet": { "size": 7, "names": ["accelerate", ...] },
//!   "root": { "action": null, "reward": 0.0, "visits": 101, "value": 0.1,
//!             "valueSum": 3.2, "terminal": false, "entropy": 4.1,
//!             "depth": 6, "maxBranching": 5, "children": [ ... ] }
//! }
//! ```
//!
//! Child slot counts are not stored; they are the children's visit counts.
//! Floats are written in shortest round-trip form, so reading a document
//! back gives bit-identical values.

use std::fmt::Write as _;
use std::path::Path;

use mcts_xray_core::tree::{ActionAlphabet, ActionId, NodeId, Tree, TreeError, Violation};
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

pub const FORMAT: &str = "mcts-xray-tree";
pub const VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("invalid tree:\n{}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn join(v: &[Violation]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = write!(s, "  {x}");
    }
    s
}

#[derive(Serialize)]
struct DocOut<'a> {
    format: &'static str,
    version: u64,
    alphabet: AlphabetOut<'a>,
    root: NodeOut,
}

#[derive(Serialize)]
struct AlphabetOut<'a> {
    size: usize,
    names: Option<&'a [String]>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct NodeOut {
    action: Option<usize>,
    reward: f64,
    visits: u64,
    value: f64,
    value_sum: f64,
    terminal: bool,
    entropy: f64,
    depth: u32,
    max_branching: u32,
    children: Vec<NodeOut>,
}

fn node_out(tree: &Tree, id: NodeId) -> NodeOut {
    let n = tree.node(id);
    NodeOut {
        action: n.action.map(ActionId::index),
        reward: n.reward,
        visits: n.visits,
        value: n.value,
        value_sum: n.value_sum,
        terminal: n.terminal,
        entropy: n.entropy,
        depth: n.depth,
        max_branching: n.max_branching,
        children: n.children.iter().map(|&(_, c)| node_out(tree, c)).collect(),
    }
}

/// Serializes the original fields of `tree`. Use
/// [`Tree::summarized_view`] first to write a reduced tree.
pub fn to_string(tree: &Tree) -> String {
    let doc = DocOut {
        format: FORMAT,
        version: VERSION,
        alphabet: AlphabetOut {
            size: tree.alphabet().size(),
            names: tree.alphabet().names(),
        },
        root: node_out(tree, tree.root()),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("tree fields are serializable");
    s.push('\n');
    s
}

struct Reader<'a> {
    path: String,
    obj: &'a Map<String, Value>,
}

impl<'a> Reader<'a> {
    fn err(&self, message: impl Into<String>) -> DocumentError {
        DocumentError::Field {
            path: self.path.clone(),
            message: message.into(),
        }
    }

    fn get(&self, key: &str) -> Result<&'a Value, DocumentError> {
        self.obj
            .get(key)
            .ok_or_else(|| self.err(format!("missing field `{key}`")))
    }

    fn f64(&self, key: &str) -> Result<f64, DocumentError> {
        self.get(key)?
            .as_f64()
            .ok_or_else(|| self.err(format!("`{key}` must be a number")))
    }

    fn u64(&self, key: &str) -> Result<u64, DocumentError> {
        self.get(key)?
            .as_u64()
            .ok_or_else(|| self.err(format!("`{key}` must be a non-negative integer")))
    }

    fn u32(&self, key: &str) -> Result<u32, DocumentError> {
        u32::try_from(self.u64(key)?).map_err(|_| self.err(format!("`{key}` out of range")))
    }

    fn bool(&self, key: &str) -> Result<bool, DocumentError> {
        self.get(key)?
            .as_bool()
            .ok_or_else(|| self.err(format!("`{key}` must be true or false")))
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<Reader<'a>, DocumentError> {
    match v.as_object() {
        Some(obj) => Ok(Reader {
            path: path.to_string(),
            obj,
        }),
        None => Err(DocumentError::Field {
            path: path.to_string(),
            message: "expected an object".into(),
        }),
    }
}

fn alphabet(doc: &Reader) -> Result<ActionAlphabet, DocumentError> {
    let r = object(doc.get("alphabet")?, "alphabet")?;
    let size = r.u64("size")? as usize;
    let tree_err = |e: TreeError| r.err(e.to_string());
    match r.obj.get("names") {
        None | Some(Value::Null) => ActionAlphabet::new(size).map_err(tree_err),
        Some(Value::Array(items)) => {
            let names = items
                .iter()
                .map(|v| v.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| r.err("`names` must be strings"))?;
            if names.len() != size {
                return Err(r.err(format!("{} names for alphabet of size {size}", names.len())));
            }
            ActionAlphabet::with_names(names).map_err(tree_err)
        }
        Some(_) => Err(r.err("`names` must be an array or null")),
    }
}

fn fill(tree: &mut Tree, id: NodeId, v: &Value, path: &str) -> Result<(), DocumentError> {
    let r = object(v, path)?;
    let is_root = id == tree.root();
    match (r.get("action")?, is_root) {
        (Value::Null, true) => {}
        (_, true) => return Err(r.err("root `action` must be null")),
        (a, false) => {
            let expected = tree.node(id).action.map(ActionId::index);
            if a.as_u64().map(|a| a as usize) != expected {
                return Err(r.err("`action` disagrees with the node's position"));
            }
        }
    }
    {
        let n = tree.node_mut(id);
        n.reward = r.f64("reward")?;
        n.visits = r.u64("visits")?;
        n.value = r.f64("value")?;
        n.value_sum = r.f64("valueSum")?;
        n.terminal = r.bool("terminal")?;
        n.entropy = r.f64("entropy")?;
        n.depth = r.u32("depth")?;
        n.max_branching = r.u32("maxBranching")?;
    }
    let children = r
        .get("children")?
        .as_array()
        .ok_or_else(|| r.err("`children` must be an array"))?;
    for (i, c) in children.iter().enumerate() {
        let cr = object(c, &format!("{path}/children[{i}]"))?;
        let action = cr
            .u64("action")
            .map_err(|_| cr.err("child `action` must be a non-negative integer"))?
            as usize;
        let child_path = format!("{path}/{action}");
        let child = tree.add_child(id, ActionId(action)).map_err(|e| DocumentError::Field {
            path: child_path.clone(),
            message: e.to_string(),
        })?;
        fill(tree, child, c, &child_path)?;
        let visits = tree.node(child).visits;
        tree.node_mut(id).child_visits[action] = visits;
    }
    Ok(())
}

/// Parses a document without checking tree invariants.
pub fn parse_unchecked(text: &str) -> Result<Tree, DocumentError> {
    let v: Value = serde_json::from_str(text)?;
    let doc = object(&v, "document")?;
    match doc.get("format")?.as_str() {
        Some(FORMAT) => {}
        _ => return Err(doc.err(format!("`format` must be \"{FORMAT}\""))),
    }
    if doc.u64("version")? != VERSION {
        return Err(doc.err(format!("unsupported `version`, expected {VERSION}")));
    }
    let mut tree = Tree::new(alphabet(&doc)?);
    let root = tree.root();
    fill(&mut tree, root, doc.get("root")?, "root")?;
    tree.reset_summary();
    Ok(tree)
}

/// Parses a document and validates the tree.
pub fn parse(text: &str) -> Result<Tree, DocumentError> {
    let tree = parse_unchecked(text)?;
    let violations = tree.validate();
    if violations.is_empty() {
        Ok(tree)
    } else {
        Err(DocumentError::Invalid(violations))
    }
}

pub fn read(path: &Path) -> Result<Tree, DocumentError> {
    let text = std::fs::read_to_string(path).map_err(|source| DocumentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

pub fn write(path: &Path, tree: &Tree) -> Result<(), DocumentError> {
    std::fs::write(path, to_string(tree)).map_err(|source| DocumentError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Tree {
        let mut t = Tree::new(ActionAlphabet::new(3).unwrap());
        let a = t.add_child(t.root(), ActionId(0)).unwrap();
        let b = t.add_child(t.root(), ActionId(2)).unwrap();
        t.node_mut(a).visits = 2;
        t.node_mut(a).terminal = true;
        t.node_mut(a).reward = -1.0;
        t.node_mut(b).visits = 1;
        t.node_mut(b).value = 0.1 + 0.2;
        t.rebuild_statistics();
        t
    }

    #[test]
    fn round_trip_is_exact() {
        let t = small();
        let text = to_string(&t);
        let back = parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn missing_visits_names_the_node() {
        let text = to_string(&small()).replacen("\"visits\": 1,", "", 1);
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("root/2"), "{err}");
        assert!(err.contains("visits"), "{err}");
    }

    #[test]
    fn count_violation_is_rejected() {
        let text = to_string(&small()).replacen("\"visits\": 4,", "\"visits\": 5,", 1);
        match parse(&text) {
            Err(DocumentError::Invalid(v)) => assert_eq!(v.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_alphabet_child_is_rejected() {
        let text = to_string(&small()).replacen("\"action\": 2", "\"action\": 9", 1);
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("root/9"), "{err}");
    }
}
