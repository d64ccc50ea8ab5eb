//! Text and JSON formats.
//!
//! Graphs use a plain edge list: a header line `n m`, then `m` lines `u v`.
//! Every JSON document carries `"schema": "queuelay/1"` at the top level.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::bounds::BoundsReport;
use crate::constructors::StarPartition;
use crate::graph::{Edge, Graph, GraphError, Vertex};
use crate::ktree::ConstructionSequence;
use crate::layout::{LayoutError, LinearOrder, QueueId, QueueLayout};
use crate::solver::SolveResult;

pub const SCHEMA: &str = "queuelay/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema mismatch: expected {SCHEMA:?}, found {0:?}")]
    Schema(String),
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_graph(text: &str) -> Result<Graph, IoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let nums: Vec<&str> = header.split_whitespace().collect();
    let [n, m] = nums[..] else {
        return Err(parse_err(hline, "header must be `n m`"));
    };
    let n: usize = n.parse().map_err(|_| parse_err(hline, "bad vertex count"))?;
    let m: usize = m.parse().map_err(|_| parse_err(hline, "bad edge count"))?;
    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    for (line, text) in lines.by_ref() {
        let parts: Vec<&str> = text.split_whitespace().collect();
        let [u, v] = parts[..] else {
            return Err(parse_err(line, "edge line must be `u v`"));
        };
        let u: Vertex = u.parse().map_err(|_| parse_err(line, "bad vertex id"))?;
        let v: Vertex = v.parse().map_err(|_| parse_err(line, "bad vertex id"))?;
        let e = Edge::try_new(u, v).map_err(|e| parse_err(line, e.to_string()))?;
        if e.hi() as usize >= n {
            let err = GraphError::VertexOutOfRange { vertex: e.hi(), n };
            return Err(parse_err(line, err.to_string()));
        }
        if !seen.insert(e) {
            return Err(parse_err(line, GraphError::DuplicateEdge(e).to_string()));
        }
        edges.push((u, v));
        if edges.len() > m {
            return Err(parse_err(line, format!("more than {m} edges")));
        }
    }
    if edges.len() != m {
        return Err(parse_err(text.lines().count().max(1), format!("expected {m} edges, found {}", edges.len())));
    }
    Graph::new(n, edges).map_err(|e| parse_err(hline, e.to_string()))
}

pub fn emit_graph(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.edge_count());
    for e in g.edges() {
        out.push_str(&format!("{} {}\n", e.lo(), e.hi()));
    }
    out
}

fn with_schema(body: Value) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), Value::String(SCHEMA.into()));
    if let Value::Object(obj) = body {
        map.extend(obj);
    }
    Value::Object(map)
}

fn check_schema(v: &Value) -> Result<(), IoError> {
    match v.get("schema") {
        None => Ok(()),
        Some(Value::String(s)) if s == SCHEMA => Ok(()),
        Some(other) => Err(IoError::Schema(other.to_string())),
    }
}

fn strip_schema(mut v: Value) -> Result<Value, IoError> {
    check_schema(&v)?;
    if let Value::Object(obj) = &mut v {
        obj.shift_remove("schema");
    }
    Ok(v)
}

/// Compact JSON with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("values always serialize");
    s.push('\n');
    s
}

/// Any serializable value wrapped with the schema tag.
pub fn document<T: Serialize>(value: &T) -> Value {
    with_schema(serde_json::to_value(value).expect("serializable"))
}

pub fn from_document<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    let v: Value = serde_json::from_str(text)?;
    Ok(serde_json::from_value(strip_schema(v)?)?)
}

pub fn sequence_to_json(seq: &ConstructionSequence) -> Value {
    document(seq)
}

pub fn sequence_from_json(text: &str) -> Result<ConstructionSequence, IoError> {
    from_document(text)
}

pub fn star_partition_to_json(sp: &StarPartition) -> Value {
    document(sp)
}

pub fn star_partition_from_json(text: &str) -> Result<StarPartition, IoError> {
    from_document(text)
}

pub fn bounds_to_json(rep: &BoundsReport) -> Value {
    document(rep)
}

/// The `order` and `queues` fields of a layout, queue keys sorted by edge.
pub fn layout_value(l: &QueueLayout) -> Value {
    let mut queues = Map::new();
    for (e, q) in &l.assign {
        queues.insert(e.to_string(), json!(q));
    }
    json!({ "order": l.order.vertices(), "queues": queues })
}

pub fn layout_to_json(l: &QueueLayout) -> Value {
    with_schema(layout_value(l))
}

pub fn layout_from_value(v: &Value) -> Result<QueueLayout, IoError> {
    check_schema(v)?;
    let order: Vec<Vertex> = serde_json::from_value(
        v.get("order")
            .cloned()
            .ok_or_else(|| IoError::Malformed("missing order".into()))?,
    )?;
    let queues = v
        .get("queues")
        .and_then(Value::as_object)
        .ok_or_else(|| IoError::Malformed("missing queues".into()))?;
    let mut assign = BTreeMap::new();
    for (key, q) in queues {
        let e: Edge = key.parse().map_err(IoError::Malformed)?;
        let q = q
            .as_u64()
            .and_then(|q| QueueId::try_from(q).ok())
            .ok_or_else(|| IoError::Malformed(format!("bad queue id for {key}")))?;
        if assign.insert(e, q).is_some() {
            return Err(IoError::Malformed(format!("edge {e} listed twice")));
        }
    }
    Ok(QueueLayout::new(LinearOrder::new(order)?, assign))
}

pub fn layout_from_json(text: &str) -> Result<QueueLayout, IoError> {
    layout_from_value(&serde_json::from_str(text)?)
}

/// Solver output. Wall-clock time is left out so that reruns are identical.
pub fn solve_result_to_json(mode: &str, r: &SolveResult) -> Value {
    with_schema(json!({
        "mode": mode,
        "value": r.value,
        "exact": r.exact,
        "nodes": r.stats.nodes,
        "witness": layout_value(&r.witness),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::construction_star_partition;
    use crate::ktree::random_ktree;

    #[test]
    fn graph_text_examples() {
        assert_eq!(parse_graph("3 3\n0 1\n0 2\n1 2\n").unwrap(), Graph::complete(3));
        assert_eq!(parse_graph("2 0\n").unwrap(), Graph::empty(2));
        assert!(matches!(parse_graph("2 1\n1 1\n"), Err(IoError::Parse { line: 2, .. })));
        assert!(matches!(parse_graph("3 2\n0 1\n1 0\n"), Err(IoError::Parse { line: 3, .. })));
        assert!(matches!(parse_graph("2 1\n0 5\n"), Err(IoError::Parse { line: 2, .. })));
        let g = random_ktree(2, 12, 4).unwrap().expand().unwrap();
        assert_eq!(parse_graph(&emit_graph(&g)).unwrap(), g);
    }

    #[test]
    fn layout_json_is_stable() {
        let mut assign = BTreeMap::new();
        assign.insert(Edge::new(2, 10), 1);
        assign.insert(Edge::new(0, 1), 0);
        let mut order: Vec<Vertex> = (0..11).collect();
        order.swap(3, 7);
        let l = QueueLayout::new(LinearOrder::new(order).unwrap(), assign);
        let text = to_text(&layout_to_json(&l));
        assert!(text.starts_with("{\"schema\":\"queuelay/1\""));
        assert!(text.contains("\"queues\":{\"0-1\":0,\"2-10\":1}"));
        let back = layout_from_json(&text).unwrap();
        assert_eq!(back, l);
        assert_eq!(to_text(&layout_to_json(&back)), text);
    }

    #[test]
    fn sequence_and_partition_round_trip() {
        let seq = random_ktree(3, 20, 9).unwrap();
        let text = to_text(&sequence_to_json(&seq));
        assert_eq!(sequence_from_json(&text).unwrap(), seq);
        let sp = construction_star_partition(&seq).unwrap();
        let text = to_text(&star_partition_to_json(&sp));
        assert!(text.contains("\"edges\":[\"0-1\""));
        assert_eq!(star_partition_from_json(&text).unwrap(), sp);
        assert!(matches!(
            sequence_from_json("{\"schema\":\"other\",\"k\":1,\"init\":[0,1],\"steps\":[]}"),
            Err(IoError::Schema(_))
        ));
    }
}
