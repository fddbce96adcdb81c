//! Penman serialization of DRGs and triple extraction for Smatch.
//!
//! Variables are `b0, b1, ...` for contexts, `e0, e1, ...` for entities (both
//! in introduction order) and `c0, c1, ...` for constants in order of first
//! reference. Contexts carry the instance label `box`, entities their synset
//! and constants their literal surface, so every DRG node yields one instance
//! triple and every edge one relation triple.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Drg, NodeKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Child {
    Node(PenmanNode),
    /// Reference to a variable declared elsewhere.
    Ref(String),
    /// Constant literal: a quoted string or a bare symbol that is not a variable.
    Literal(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PenmanNode {
    pub var: String,
    pub instance: String,
    pub relations: Vec<(String, Child)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PenmanGraph {
    pub root: PenmanNode,
}

/// Variable name for every node of `g`, indexed by node id.
pub fn variable_names(g: &Drg) -> Vec<String> {
    let mut names = vec![String::new(); g.nodes.len()];
    for (i, id) in g.contexts().into_iter().enumerate() {
        names[id] = format!("b{i}");
    }
    for (i, id) in g.entities().into_iter().enumerate() {
        names[id] = format!("e{i}");
    }
    // Constants are numbered by first reference in edge order.
    let mut next = 0;
    for e in &g.edges {
        if g.nodes[e.dst].kind == NodeKind::Constant && names[e.dst].is_empty() {
            names[e.dst] = format!("c{next}");
            next += 1;
        }
    }
    for node in &g.nodes {
        if names[node.id].is_empty() {
            names[node.id] = format!("c{next}");
            next += 1;
        }
    }
    names
}

pub fn to_penman(g: &Drg) -> PenmanGraph {
    let names = variable_names(g);
    let mut visited = vec![false; g.nodes.len()];
    let root = serialize_node(g, g.root, &names, &mut visited);
    PenmanGraph { root }
}

fn serialize_node(g: &Drg, id: usize, names: &[String], visited: &mut [bool]) -> PenmanNode {
    visited[id] = true;
    let mut relations = Vec::new();
    for e in g.outgoing(id) {
        let child = if visited[e.dst] {
            Child::Ref(names[e.dst].clone())
        } else {
            Child::Node(serialize_node(g, e.dst, names, visited))
        };
        relations.push((e.label.clone(), child));
    }
    PenmanNode { var: names[id].clone(), instance: g.nodes[id].label.clone(), relations }
}

impl PenmanGraph {
    /// Single-line rendering.
    pub fn to_line(&self) -> String {
        let mut out = String::new();
        write_node(&mut out, &self.root, None);
        out
    }

    /// Indented rendering, one relation per line.
    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        write_node(&mut out, &self.root, Some(0));
        out
    }
}

impl fmt::Display for PenmanGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

fn write_node(out: &mut String, node: &PenmanNode, indent: Option<usize>) {
    let _ = write!(out, "({} / {}", node.var, node.instance);
    for (rel, child) in &node.relations {
        match indent {
            Some(depth) => {
                out.push('\n');
                out.extend(std::iter::repeat_n(' ', 4 * (depth + 1)));
            }
            None => out.push(' '),
        }
        let _ = write!(out, ":{rel} ");
        match child {
            Child::Node(n) => write_node(out, n, indent.map(|d| d + 1)),
            Child::Ref(v) => out.push_str(v),
            Child::Literal(l) => out.push_str(l),
        }
    }
    out.push(')');
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PenmanError {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("unexpected `{found}` at byte {offset}, expected {expected}")]
    Unexpected { found: String, offset: usize, expected: &'static str },
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("unterminated string at byte {0}")]
    UnterminatedString(usize),
    #[error("trailing input at byte {0}")]
    Trailing(usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Lexeme {
    Open,
    Close,
    Slash,
    Role(String),
    Symbol(String),
    Quoted(String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Lexeme)>, PenmanError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((i, Lexeme::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Lexeme::Close));
                i += 1;
            }
            b'/' => {
                out.push((i, Lexeme::Slash));
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    i += 1;
                }
                if i >= bytes.len() {
                    return Err(PenmanError::UnterminatedString(start));
                }
                i += 1;
                out.push((start, Lexeme::Quoted(text[start..i].to_string())));
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b' ' | b'\t' | b'\n' | b'\r' | b'(' | b')' | b'"' | b'/') {
                    i += 1;
                }
                let word = &text[start..i];
                let lex = match word.strip_prefix(':') {
                    Some(role) => Lexeme::Role(role.to_string()),
                    None => Lexeme::Symbol(word.to_string()),
                };
                out.push((start, lex));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Lexeme)>,
    pos: usize,
    declared: HashSet<String>,
}

impl Parser {
    fn next(&mut self) -> Result<(usize, Lexeme), PenmanError> {
        let t = self.toks.get(self.pos).cloned().ok_or(PenmanError::UnexpectedEof)?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&Lexeme> {
        self.toks.get(self.pos).map(|(_, l)| l)
    }

    fn unexpected(offset: usize, lex: &Lexeme, expected: &'static str) -> PenmanError {
        PenmanError::Unexpected { found: format!("{lex:?}"), offset, expected }
    }

    fn node(&mut self) -> Result<PenmanNode, PenmanError> {
        match self.next()? {
            (_, Lexeme::Open) => {}
            (o, l) => return Err(Self::unexpected(o, &l, "`(`")),
        }
        let var = match self.next()? {
            (_, Lexeme::Symbol(v)) => v,
            (o, l) => return Err(Self::unexpected(o, &l, "variable")),
        };
        if !self.declared.insert(var.clone()) {
            return Err(PenmanError::DuplicateVariable(var));
        }
        match self.next()? {
            (_, Lexeme::Slash) => {}
            (o, l) => return Err(Self::unexpected(o, &l, "`/`")),
        }
        let instance = match self.next()? {
            (_, Lexeme::Symbol(s)) | (_, Lexeme::Quoted(s)) => s,
            (o, l) => return Err(Self::unexpected(o, &l, "concept")),
        };
        let mut relations = Vec::new();
        loop {
            match self.next()? {
                (_, Lexeme::Close) => break,
                (_, Lexeme::Role(role)) => {
                    let child = match self.peek() {
                        Some(Lexeme::Open) => Child::Node(self.node()?),
                        _ => match self.next()? {
                            (_, Lexeme::Symbol(s)) => Child::Ref(s),
                            (_, Lexeme::Quoted(s)) => Child::Literal(s),
                            (o, l) => return Err(Self::unexpected(o, &l, "relation target")),
                        },
                    };
                    relations.push((role, child));
                }
                (o, l) => return Err(Self::unexpected(o, &l, "role or `)`")),
            }
        }
        Ok(PenmanNode { var, instance, relations })
    }
}

// Bare symbols that never got declared are constants, not references.
fn resolve_refs(node: &mut PenmanNode, declared: &HashSet<String>) {
    for (_, child) in &mut node.relations {
        match child {
            Child::Node(n) => resolve_refs(n, declared),
            Child::Ref(v) if !declared.contains(v.as_str()) => *child = Child::Literal(std::mem::take(v)),
            _ => {}
        }
    }
}

impl std::str::FromStr for PenmanGraph {
    type Err = PenmanError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { toks: tokenize(text)?, pos: 0, declared: HashSet::new() };
        let mut root = p.node()?;
        if let Some((offset, _)) = p.toks.get(p.pos) {
            return Err(PenmanError::Trailing(*offset));
        }
        resolve_refs(&mut root, &p.declared);
        Ok(PenmanGraph { root })
    }
}

/// Parses a file of Penman graphs separated by blank lines. `#` comment
/// lines are skipped.
pub fn parse_many(text: &str) -> Result<Vec<PenmanGraph>, PenmanError> {
    let mut out = Vec::new();
    let mut block = String::new();
    for line in text.lines().chain(std::iter::once("")) {
        if line.trim_start().starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            if !block.trim().is_empty() {
                out.push(block.parse()?);
            }
            block.clear();
        } else {
            block.push_str(line);
            block.push('\n');
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Triple {
    Instance { var: String, label: String },
    Relation { src: String, rel: String, dst: String },
    Attribute { src: String, rel: String, value: String },
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Triple::Instance { var, label } => write!(f, "({var}, :instance, {label})"),
            Triple::Relation { src, rel, dst } => write!(f, "({src}, :{rel}, {dst})"),
            Triple::Attribute { src, rel, value } => write!(f, "({src}, :{rel}, {value})"),
        }
    }
}

/// Sorted multiset of triples.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSet {
    triples: Vec<Triple>,
}

impl TripleSet {
    pub fn new(mut triples: Vec<Triple>) -> Self {
        triples.sort();
        TripleSet { triples }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triple> {
        self.triples.iter()
    }

    /// Variables with an instance triple, in sorted order.
    pub fn variables(&self) -> Vec<&str> {
        self.triples
            .iter()
            .filter_map(|t| match t {
                Triple::Instance { var, .. } => Some(var.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn instance_of(&self, var: &str) -> Option<&str> {
        self.triples.iter().find_map(|t| match t {
            Triple::Instance { var: v, label } if v == var => Some(label.as_str()),
            _ => None,
        })
    }
}

impl<'a> IntoIterator for &'a TripleSet {
    type Item = &'a Triple;
    type IntoIter = std::slice::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

pub fn extract_triples(p: &PenmanGraph) -> TripleSet {
    fn walk(node: &PenmanNode, out: &mut Vec<Triple>) {
        out.push(Triple::Instance { var: node.var.clone(), label: node.instance.clone() });
        for (rel, child) in &node.relations {
            let t = match child {
                Child::Node(n) => {
                    walk(n, out);
                    Triple::Relation { src: node.var.clone(), rel: rel.clone(), dst: n.var.clone() }
                }
                Child::Ref(v) => Triple::Relation { src: node.var.clone(), rel: rel.clone(), dst: v.clone() },
                Child::Literal(l) => Triple::Attribute { src: node.var.clone(), rel: rel.clone(), value: l.clone() },
            };
            out.push(t);
        }
    }
    let mut out = Vec::new();
    walk(&p.root, &mut out);
    TripleSet::new(out)
}

/// Triples straight from the graph, bypassing Penman text.
pub fn drg_triples(g: &Drg) -> TripleSet {
    extract_triples(&to_penman(g))
}

/// Maps each variable to the DRG node it names.
pub fn variable_index(g: &Drg) -> HashMap<String, usize> {
    variable_names(g).into_iter().enumerate().map(|(id, v)| (v, id)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_line, BuildOptions};
    use crate::sequence::SymbolInventory;

    fn penman(line: &str) -> PenmanGraph {
        to_penman(&check_line(line, &SymbolInventory::default(), BuildOptions::default()).unwrap())
    }

    #[test]
    fn reentrant_entity() {
        assert_eq!(
            penman("person.n.01 Role +1 engineer.n.01").to_line(),
            "(b0 / box :member (e0 / person.n.01 :Role (e1 / engineer.n.01)) :member e1)"
        );
    }

    #[test]
    fn constant_gets_a_variable() {
        assert_eq!(
            penman(r#"female.n.02 Name "Maria""#).to_line(),
            r#"(b0 / box :member (e0 / female.n.02 :Name (c0 / "Maria")))"#
        );
    }

    #[test]
    fn negation_context() {
        assert_eq!(
            penman("NEGATION sell.v.01").to_line(),
            "(b0 / box :NEGATION (b1 / box :member (e0 / sell.v.01)))"
        );
    }

    #[test]
    fn literal_attributes_from_text() {
        let p: PenmanGraph = r#"(b0 / box :member (e0 / female.n.02 :Name "Maria"))"#.parse().unwrap();
        let t = extract_triples(&p);
        let expected = TripleSet::new(vec![
            Triple::Instance { var: "b0".into(), label: "box".into() },
            Triple::Instance { var: "e0".into(), label: "female.n.02".into() },
            Triple::Relation { src: "b0".into(), rel: "member".into(), dst: "e0".into() },
            Triple::Attribute { src: "e0".into(), rel: "Name".into(), value: "\"Maria\"".into() },
        ]);
        assert_eq!(t, expected);
    }

    #[test]
    fn bare_symbol_resolution() {
        let p: PenmanGraph = "(b0 / box :member (e0 / x.n.01 :Time now) :member e0)".parse().unwrap();
        let t = extract_triples(&p);
        assert!(t.iter().any(|t| matches!(t, Triple::Attribute { value, .. } if value == "now")));
        assert_eq!(t.iter().filter(|t| matches!(t, Triple::Relation { .. })).count(), 2);
    }

    #[test]
    fn single_node() {
        let p: PenmanGraph = "(b0 / box)".parse().unwrap();
        assert_eq!(extract_triples(&p).len(), 1);
    }

    #[test]
    fn text_round_trip() {
        let line = "person.n.01 EQU speaker NEGATION sell.v.01 Agent -1 Theme +1 entity.n.01 Time +1 time.n.08 EQU now";
        let p = penman(line);
        for text in [p.to_line(), p.to_pretty()] {
            let back: PenmanGraph = text.parse().unwrap();
            assert_eq!(back, p);
            assert_eq!(extract_triples(&back), extract_triples(&p));
        }
    }

    #[test]
    fn parse_errors() {
        assert_eq!("(b0 / box".parse::<PenmanGraph>().unwrap_err(), PenmanError::UnexpectedEof);
        assert!(matches!("(b0 / box :x (b0 / y))".parse::<PenmanGraph>(), Err(PenmanError::DuplicateVariable(_))));
        assert!(matches!("(b0 / box) x".parse::<PenmanGraph>(), Err(PenmanError::Trailing(_))));
        assert!(matches!("(b0 / \"box)".parse::<PenmanGraph>(), Err(PenmanError::UnterminatedString(_))));
    }

    #[test]
    fn many_blocks() {
        let text = "# ::id 1\n(b0 / box\n    :member (e0 / x.n.01))\n\n(b0 / box)\n";
        let gs = parse_many(text).unwrap();
        assert_eq!(gs.len(), 2);
    }
}
