//! Per-token directed multigraphs over wallets, with a sale-only projection
//! and annotated DOT / JSON exports.
//!
//! One structure carries both of the views used downstream: the full graph
//! (sales and transfers) and the sale-only view, which is just the edges
//! whose transaction classified as a sale. Node indices are dense and follow
//! first appearance in the history, so builds are deterministic.

use crate::ledger::{TokenHistory, TxKind};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("cannot build a graph from an empty history")]
    EmptyHistory,
    #[error("edge {edge} has no label (or more than one)")]
    LabelMismatch { edge: usize },
}

/// One transaction as an edge. `tx` is the index of the backing transaction
/// in the token history, which doubles as the chronological edge id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub tx: usize,
    pub kind: TxKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenGraph {
    pub token_id: String,
    nodes: Vec<String>,
    edges: Vec<GraphEdge>,
    degree: Vec<usize>,
    outgoing: Vec<Vec<usize>>,
}

impl TokenGraph {
    /// Wallet addresses in first-appearance order; the position is the node id.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    /// All edges, in history (chronological) order.
    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    /// Sale-only projection of the edge list.
    pub fn sale_edges(&self) -> impl Iterator<Item = &GraphEdge> {
        self.edges.iter().filter(|e| e.kind == TxKind::Sale)
    }

    /// Count of edges incident to the node (a self-loop counts once).
    pub fn degree(&self, node: usize) -> usize {
        self.degree[node]
    }

    pub fn node_index(&self, address: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == address)
    }

    /// Outgoing edge ids for a node, ascending by edge id.
    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }
}

/// Builds the transaction graph for one token history.
pub fn build_graph(history: &TokenHistory) -> Result<TokenGraph, GraphError> {
    if history.is_empty() {
        return Err(GraphError::EmptyHistory);
    }
    let mut nodes: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |addr: &str, nodes: &mut Vec<String>| -> usize {
        if let Some(&i) = index.get(addr) {
            return i;
        }
        let i = nodes.len();
        nodes.push(addr.to_owned());
        index.insert(addr.to_owned(), i);
        i
    };

    let mut edges = Vec::with_capacity(history.len());
    for (tx, t) in history.txs().iter().enumerate() {
        let from = intern(&t.sender, &mut nodes);
        let to = intern(&t.receiver, &mut nodes);
        edges.push(GraphEdge {
            from,
            to,
            tx,
            kind: t.kind(),
        });
    }

    let mut degree = vec![0usize; nodes.len()];
    let mut outgoing = vec![Vec::new(); nodes.len()];
    for e in &edges {
        degree[e.from] += 1;
        if e.to != e.from {
            degree[e.to] += 1;
        }
        outgoing[e.from].push(e.tx);
    }

    Ok(TokenGraph {
        token_id: history.token_id.clone(),
        nodes,
        edges,
        degree,
        outgoing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    WashSale,
    CycleMember,
    RegularSale,
    RegularTransfer,
}

impl LabelKind {
    pub fn color(&self) -> &'static str {
        match self {
            LabelKind::WashSale => "red",
            LabelKind::CycleMember => "yellow",
            LabelKind::RegularSale => "black",
            LabelKind::RegularTransfer => "green",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeLabel {
    pub edge: usize,
    pub kind: LabelKind,
}

fn label_table(graph: &TokenGraph, labels: &[EdgeLabel]) -> Result<Vec<LabelKind>, GraphError> {
    let mut table: Vec<Option<LabelKind>> = vec![None; graph.edges().len()];
    for label in labels {
        match table.get_mut(label.edge) {
            Some(slot @ None) => *slot = Some(label.kind),
            _ => return Err(GraphError::LabelMismatch { edge: label.edge }),
        }
    }
    table
        .into_iter()
        .enumerate()
        .map(|(edge, kind)| kind.ok_or(GraphError::LabelMismatch { edge }))
        .collect()
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the graph as a DOT digraph.
///
/// Edge colors follow the label: wash sales red, other cycle members yellow,
/// regular transfers green, regular sales black. Node width grows with the
/// number of edges the wallet takes part in. Output is a pure function of the
/// inputs: nodes and edges are emitted in index order.
pub fn to_dot(graph: &TokenGraph, labels: &[EdgeLabel]) -> Result<String, GraphError> {
    let table = label_table(graph, labels)?;
    let mut out = String::new();
    out.push_str(&format!(
        "digraph \"token_{}\" {{\n",
        escape_dot(&graph.token_id)
    ));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=circle, fixedsize=true];\n");
    for (i, addr) in graph.nodes().iter().enumerate() {
        // width in hundredths keeps the text stable across platforms
        let width_hundredths = 50 + 15 * graph.degree(i);
        out.push_str(&format!(
            "  n{i} [label=\"{i}\", width={}.{:02}, tooltip=\"{}\"];\n",
            width_hundredths / 100,
            width_hundredths % 100,
            escape_dot(addr)
        ));
    }
    for (idx, edge) in graph.edges().iter().enumerate() {
        out.push_str(&format!(
            "  n{} -> n{} [color={}, label=\"{}\"];\n",
            edge.from,
            edge.to,
            table[idx].color(),
            edge.tx
        ));
    }
    out.push_str("}\n");
    Ok(out)
}

/// JSON dump of nodes, edges, and labels for downstream tooling.
pub fn graph_json(
    graph: &TokenGraph,
    labels: &[EdgeLabel],
    history: &TokenHistory,
) -> Result<serde_json::Value, GraphError> {
    let table = label_table(graph, labels)?;
    let nodes: Vec<_> = graph
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, addr)| {
            json!({
                "id": i,
                "address": addr,
                "degree": graph.degree(i),
            })
        })
        .collect();
    let edges: Vec<_> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, e)| {
            let tx = &history.txs()[e.tx];
            json!({
                "id": e.tx,
                "from": e.from,
                "to": e.to,
                "kind": e.kind,
                "label": table[idx],
                "tx_hash": tx.tx_hash,
                "seq": tx.seq,
                "timestamp": crate::ledger::format_timestamp(&tx.timestamp),
                "usd_value": tx.usd_value.map(|u| u.to_string()),
            })
        })
        .collect();
    Ok(json!({
        "token_id": graph.token_id,
        "nodes": nodes,
        "edges": edges,
    }))
}
