//! Discourse Representation Graphs built from token sequences.
//!
//! Construction scans the sequence left to right. Concepts introduce entity
//! nodes in the currently active context, discourse relations open a new
//! context that stays active until the next relation, and every role or
//! operator takes the immediately following index or constant as its target.
//! Indices count entities only.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sequence::{lex, LexError, Synset, SymbolInventory, Token, TokenKind, TokenSequence};

pub const CONTEXT_LABEL: &str = "box";
pub const MEMBER_LABEL: &str = "member";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Context,
    Entity,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Role,
    Operator,
    DiscourseRelation,
    Membership,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub label: String,
    /// Token position that introduced the node. `None` for the implicit root
    /// context and for constants.
    #[serde(skip)]
    pub order: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub label: String,
    pub kind: EdgeKind,
}

/// A Discourse Representation Graph. Node ids are indices into `nodes`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Drg {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub root: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IllFormedCategory {
    InvalidToken,
    ExtraSpace,
    MissingSpace,
    DanglingRole,
    UnresolvableIndex,
    RelationWithoutScope,
    EmptyGraph,
}

impl fmt::Display for IllFormedCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Why a line could not be turned into a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("{category} at field {position}: {detail}")]
pub struct IllFormedReport {
    pub category: IllFormedCategory,
    pub detail: String,
    pub position: usize,
}

impl IllFormedReport {
    fn new(category: IllFormedCategory, position: usize, detail: impl Into<String>) -> Self {
        IllFormedReport { category, detail: detail.into(), position }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BuildOptions {
    /// Reject discourse relations that are not followed by any entity.
    pub require_scope: bool,
}

pub fn build_graph(seq: &TokenSequence) -> Result<Drg, IllFormedReport> {
    build_graph_with(seq, BuildOptions::default())
}

pub fn build_graph_with(seq: &TokenSequence, opts: BuildOptions) -> Result<Drg, IllFormedReport> {
    use IllFormedCategory::*;

    let tokens = &seq.tokens;
    let mut nodes = vec![Node { id: 0, kind: NodeKind::Context, label: CONTEXT_LABEL.into(), order: None }];
    let root = 0;

    // Entities are created up front so forward indices have a target.
    let mut entity_ids = Vec::new();
    let mut entity_pos_of_token = HashMap::new();
    for (i, tok) in tokens.iter().enumerate() {
        if matches!(tok.kind, TokenKind::Concept(_)) {
            entity_pos_of_token.insert(i, entity_ids.len());
            entity_ids.push(nodes.len());
            nodes.push(Node { id: nodes.len(), kind: NodeKind::Entity, label: tok.surface.clone(), order: Some(i) });
        }
    }

    let mut edges = Vec::new();
    let mut constants: HashMap<&str, usize> = HashMap::new();
    let mut active = root;
    let mut last_entity: Option<usize> = None; // position in entity order
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        match &tok.kind {
            TokenKind::Concept(_) => {
                let pos = entity_pos_of_token[&i];
                edges.push(Edge {
                    src: active,
                    dst: entity_ids[pos],
                    label: MEMBER_LABEL.into(),
                    kind: EdgeKind::Membership,
                });
                last_entity = Some(pos);
            }
            TokenKind::DiscourseRelation => {
                if opts.require_scope && !tokens[i + 1..].iter().any(|t| matches!(t.kind, TokenKind::Concept(_))) {
                    return Err(IllFormedReport::new(
                        RelationWithoutScope,
                        i,
                        format!("`{}` opens a context with no entity", tok.surface),
                    ));
                }
                let ctx = nodes.len();
                nodes.push(Node { id: ctx, kind: NodeKind::Context, label: CONTEXT_LABEL.into(), order: Some(i) });
                edges.push(Edge {
                    src: active,
                    dst: ctx,
                    label: tok.surface.clone(),
                    kind: EdgeKind::DiscourseRelation,
                });
                active = ctx;
            }
            TokenKind::Role | TokenKind::Operator => {
                let Some(src_pos) = last_entity else {
                    return Err(IllFormedReport::new(
                        DanglingRole,
                        i,
                        format!("`{}` appears before any concept", tok.surface),
                    ));
                };
                let kind = if tok.kind == TokenKind::Role { EdgeKind::Role } else { EdgeKind::Operator };
                let dst = match tokens.get(i + 1).map(|t| &t.kind) {
                    Some(TokenKind::Index(offset)) => {
                        let target = src_pos as i64 + *offset as i64;
                        if target < 0 || target >= entity_ids.len() as i64 {
                            return Err(IllFormedReport::new(
                                UnresolvableIndex,
                                i + 1,
                                format!(
                                    "`{} {}` from entity {} of {}",
                                    tok.surface,
                                    tokens[i + 1].surface,
                                    src_pos + 1,
                                    entity_ids.len()
                                ),
                            ));
                        }
                        entity_ids[target as usize]
                    }
                    Some(k) if k.is_constant() => {
                        let surface = tokens[i + 1].surface.as_str();
                        *constants.entry(surface).or_insert_with(|| {
                            let id = nodes.len();
                            nodes.push(Node { id, kind: NodeKind::Constant, label: surface.to_string(), order: None });
                            id
                        })
                    }
                    _ => {
                        return Err(IllFormedReport::new(
                            DanglingRole,
                            i,
                            format!("`{}` is not followed by an index or constant", tok.surface),
                        ))
                    }
                };
                edges.push(Edge { src: entity_ids[src_pos], dst, label: tok.surface.clone(), kind });
                i += 2;
                continue;
            }
            TokenKind::Index(_) | TokenKind::ConstantName(_) | TokenKind::ConstantDeictic(_) | TokenKind::ConstantQuantity => {
                return Err(IllFormedReport::new(
                    DanglingRole,
                    i,
                    format!("`{}` is not attached to a role or operator", tok.surface),
                ));
            }
        }
        i += 1;
    }

    if entity_ids.is_empty() {
        return Err(IllFormedReport::new(EmptyGraph, 0, "no concept in sequence"));
    }

    let g = Drg { nodes, edges, root };
    debug_assert_eq!(g.validate(), Ok(()));
    Ok(g)
}

/// Lexes and builds in one step, mapping lexer failures to the ill-formed
/// subtypes used for diagnostics.
pub fn check_line(line: &str, inventory: &SymbolInventory, opts: BuildOptions) -> Result<Drg, IllFormedReport> {
    match lex(line, inventory) {
        Ok(seq) => build_graph_with(&seq, opts),
        Err(e) => Err(classify_lex_error(line, &e)),
    }
}

/// Best-effort subtype inference for a lexer failure.
///
/// * a lone `"`, or a field that starts or ends with an unmatched quote: a
///   space was inserted inside a quoted name (`ExtraSpace`);
/// * an index fused with what follows, as in `+1technician.n.01`
///   (`MissingSpace`);
/// * a concept broken in two, as in `driving_ licence.n.01` (`ExtraSpace`).
pub fn classify_lex_error(line: &str, err: &LexError) -> IllFormedReport {
    use IllFormedCategory::*;
    let (field, surface) = match err {
        LexError::EmptyLine => return IllFormedReport::new(EmptyGraph, 0, "empty line"),
        LexError::InvalidToken { field, surface } => (*field, surface.as_str()),
    };
    let next = line.split_whitespace().nth(field + 1);

    let category = if surface == "\"" || surface.ends_with('"') || surface.starts_with('"') {
        ExtraSpace
    } else if fuses_index(surface) {
        MissingSpace
    } else if surface.ends_with('_') || next.is_some_and(|n| completes_concept(surface, n)) {
        ExtraSpace
    } else {
        InvalidToken
    };
    IllFormedReport::new(category, field, format!("`{surface}`"))
}

fn fuses_index(s: &str) -> bool {
    let Some(rest) = s.strip_prefix('+').or_else(|| s.strip_prefix('-')) else {
        return false;
    };
    let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
    digits > 0 && digits < rest.len()
}

fn completes_concept(head: &str, next: &str) -> bool {
    Synset::parse(head).is_none() && (Synset::parse(&format!("{head}{next}")).is_some() || Synset::parse(next).is_some())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("ERR over an empty result list")]
    EmptyResults,
    #[error("node {0} has no introduction order")]
    MissingOrder(usize),
    #[error("invalid graph: {0}")]
    Invalid(String),
}

/// Percentage of ill-formed results.
pub fn err_rate<T, E>(results: &[Result<T, E>]) -> Result<f64, GraphError> {
    let ill = results.iter().filter(|r| r.is_err()).count();
    err_rate_counts(ill, results.len())
}

pub fn err_rate_counts(ill_formed: usize, total: usize) -> Result<f64, GraphError> {
    if total == 0 {
        return Err(GraphError::EmptyResults);
    }
    Ok(100.0 * ill_formed as f64 / total as f64)
}

impl Drg {
    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    /// Entity node ids in introduction order.
    pub fn entities(&self) -> Vec<usize> {
        self.ordered(NodeKind::Entity)
    }

    /// Context node ids: root first, then the rest in introduction order.
    pub fn contexts(&self) -> Vec<usize> {
        let mut out = vec![self.root];
        out.extend(self.ordered(NodeKind::Context).into_iter().filter(|&id| id != self.root));
        out
    }

    /// Constant node ids in creation order.
    pub fn constants(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Constant).map(|n| n.id).collect()
    }

    fn ordered(&self, kind: NodeKind) -> Vec<usize> {
        let mut ids: Vec<usize> = self.nodes.iter().filter(|n| n.kind == kind).map(|n| n.id).collect();
        ids.sort_by_key(|&id| (self.nodes[id].order.unwrap_or(usize::MAX), id));
        ids
    }

    pub fn outgoing(&self, id: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.src == id)
    }

    /// Checks every structural invariant of a DRG.
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::Invalid(msg));
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return bad(format!("node {i} carries id {}", node.id));
            }
        }
        if self.root >= n || self.nodes[self.root].kind != NodeKind::Context {
            return bad("root is not a context".into());
        }
        let mut dr_in = vec![0usize; n];
        let mut member_in = vec![0usize; n];
        let mut dr_parent = vec![None; n];
        for e in &self.edges {
            if e.src >= n || e.dst >= n {
                return bad(format!("edge {}->{} out of range", e.src, e.dst));
            }
            let (sk, dk) = (self.nodes[e.src].kind, self.nodes[e.dst].kind);
            match e.kind {
                EdgeKind::DiscourseRelation => {
                    if sk != NodeKind::Context || dk != NodeKind::Context {
                        return bad(format!("discourse relation {} between non-contexts", e.label));
                    }
                    dr_in[e.dst] += 1;
                    dr_parent[e.dst] = Some(e.src);
                }
                EdgeKind::Membership => {
                    if sk != NodeKind::Context || dk != NodeKind::Entity {
                        return bad("membership edge must go from a context to an entity".into());
                    }
                    member_in[e.dst] += 1;
                }
                EdgeKind::Role | EdgeKind::Operator => {
                    if sk != NodeKind::Entity || dk == NodeKind::Context {
                        return bad(format!("{} edge must go from an entity to an entity or constant", e.label));
                    }
                }
            }
        }
        for node in &self.nodes {
            match node.kind {
                NodeKind::Entity if member_in[node.id] != 1 => {
                    return bad(format!("entity {} has {} memberships", node.id, member_in[node.id]));
                }
                NodeKind::Context if node.id == self.root && dr_in[node.id] != 0 => {
                    return bad("root has an incoming discourse relation".into());
                }
                NodeKind::Context if node.id != self.root && dr_in[node.id] != 1 => {
                    return bad(format!("context {} is not reached by exactly one relation", node.id));
                }
                _ => {}
            }
        }
        // Every context must reach the root through its parents.
        for node in self.nodes.iter().filter(|n| n.kind == NodeKind::Context) {
            let mut cur = node.id;
            let mut steps = 0;
            while cur != self.root {
                cur = match dr_parent[cur] {
                    Some(p) => p,
                    None => return bad(format!("context {} is detached", node.id)),
                };
                steps += 1;
                if steps > n {
                    return bad("cycle among contexts".into());
                }
            }
        }
        Ok(())
    }

    /// JSON export: `{nodes:[{id,kind,label}], edges:[{src,dst,label,kind}], root}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("Drg is always serializable")
    }
}

/// Inverse of [`build_graph`]: contexts and entities in introduction order,
/// each entity followed by its role and operator edges.
pub fn linearize(g: &Drg) -> Result<TokenSequence, GraphError> {
    let mut items: Vec<(usize, usize)> = Vec::new();
    for node in &g.nodes {
        if node.id == g.root || node.kind == NodeKind::Constant {
            continue;
        }
        let order = node.order.ok_or(GraphError::MissingOrder(node.id))?;
        items.push((order, node.id));
    }
    items.sort_unstable();

    let entity_pos: HashMap<usize, i64> = items
        .iter()
        .filter(|(_, id)| g.nodes[*id].kind == NodeKind::Entity)
        .enumerate()
        .map(|(pos, (_, id))| (*id, pos as i64))
        .collect();

    let mut tokens = Vec::new();
    for (_, id) in items {
        let node = &g.nodes[id];
        match node.kind {
            NodeKind::Context => {
                let rel = g
                    .edges
                    .iter()
                    .find(|e| e.dst == id && e.kind == EdgeKind::DiscourseRelation)
                    .ok_or_else(|| GraphError::Invalid(format!("context {id} has no relation")))?;
                tokens.push(Token::labelled(TokenKind::DiscourseRelation, &rel.label));
            }
            NodeKind::Entity => {
                let synset = Synset::parse(&node.label)
                    .ok_or_else(|| GraphError::Invalid(format!("entity label `{}` is not a synset", node.label)))?;
                tokens.push(Token::concept(synset));
                for e in g.outgoing(id) {
                    let kind = match e.kind {
                        EdgeKind::Role => TokenKind::Role,
                        EdgeKind::Operator => TokenKind::Operator,
                        _ => continue,
                    };
                    tokens.push(Token::labelled(kind, &e.label));
                    let dst = &g.nodes[e.dst];
                    match dst.kind {
                        NodeKind::Entity => {
                            let offset = entity_pos[&e.dst] - entity_pos[&id];
                            tokens.push(Token::index(offset as i32));
                        }
                        _ => tokens.push(
                            Token::constant(&dst.label)
                                .ok_or_else(|| GraphError::Invalid(format!("bad constant `{}`", dst.label)))?,
                        ),
                    }
                }
            }
            NodeKind::Constant => unreachable!(),
        }
    }
    let raw = tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ");
    Ok(TokenSequence { tokens, raw })
}
