//! Seeded generators of well-formed DRS sequences shared by the test targets.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

pub const CONCEPTS: &[&str] = &[
    "person.n.01",
    "time.n.08",
    "cat.n.01",
    "dog.n.01",
    "see.v.01",
    "sell.v.01",
    "red.a.01",
    "female.n.02",
];
pub const ROLES: &[&str] = &["Agent", "Theme", "Time", "Patient", "Name", "Colour"];
pub const OPERATORS: &[&str] = &["EQU", "TPR", "NEQ"];
pub const RELATIONS: &[&str] = &["NEGATION", "CONTINUATION", "CONTRAST", "POSSIBILITY"];
pub const CONSTANTS: &[&str] = &["now", "speaker", "hearer", "\"Maria\"", "\"Tom\"", "3", "+"];

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Entity(usize),
    Constant(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub label: String,
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entity {
    /// Discourse relation opened right before this entity.
    pub relation: Option<String>,
    pub concept: String,
    pub edges: Vec<Edge>,
}

/// A structured well-formed sequence; `render` gives the token line.
#[derive(Clone, Debug, PartialEq)]
pub struct Structure {
    pub entities: Vec<Entity>,
}

impl Structure {
    pub fn render(&self) -> String {
        let mut toks = Vec::new();
        for (i, e) in self.entities.iter().enumerate() {
            if let Some(r) = &e.relation {
                toks.push(r.clone());
            }
            toks.push(e.concept.clone());
            for edge in &e.edges {
                toks.push(edge.label.clone());
                toks.push(match &edge.target {
                    Target::Entity(j) => format!("{:+}", *j as i64 - i as i64),
                    Target::Constant(c) => c.clone(),
                });
            }
        }
        toks.join(" ")
    }

    /// Root context, relation contexts, entities and distinct constants.
    pub fn variable_count(&self) -> usize {
        let mut consts: Vec<&str> = self
            .entities
            .iter()
            .flat_map(|e| &e.edges)
            .filter_map(|e| match &e.target {
                Target::Constant(c) => Some(c.as_str()),
                Target::Entity(_) => None,
            })
            .collect();
        consts.sort_unstable();
        consts.dedup();
        1 + self.entities.iter().filter(|e| e.relation.is_some()).count() + self.entities.len() + consts.len()
    }

    pub fn node_count(&self) -> usize {
        self.variable_count()
    }

    pub fn edge_count(&self) -> usize {
        // membership + relation edges + role/operator edges
        self.entities.len()
            + self.entities.iter().filter(|e| e.relation.is_some()).count()
            + self.entities.iter().map(|e| e.edges.len()).sum::<usize>()
    }
}

fn random_edge<R: Rng>(rng: &mut R, i: usize, n: usize) -> Edge {
    let operator = rng.gen_bool(0.2);
    let label = if operator { OPERATORS.choose(rng) } else { ROLES.choose(rng) }.unwrap().to_string();
    let target = if n > 1 && rng.gen_bool(0.6) {
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        Target::Entity(j)
    } else {
        Target::Constant(CONSTANTS.choose(rng).unwrap().to_string())
    };
    Edge { label, target }
}

pub fn random_structure<R: Rng>(rng: &mut R, max_entities: usize) -> Structure {
    let n = rng.gen_range(1..=max_entities.max(1));
    let entities = (0..n)
        .map(|i| Entity {
            relation: (i > 0 && rng.gen_bool(0.15)).then(|| RELATIONS.choose(rng).unwrap().to_string()),
            concept: CONCEPTS.choose(rng).unwrap().to_string(),
            edges: (0..rng.gen_range(0..=2)).map(|_| random_edge(rng, i, n)).collect(),
        })
        .collect();
    Structure { entities }
}

/// A structure with at most `max_vars` variables.
pub fn bounded_structure<R: Rng>(rng: &mut R, max_vars: usize) -> Structure {
    loop {
        let s = random_structure(rng, max_vars.saturating_sub(1).max(1));
        if s.variable_count() <= max_vars {
            return s;
        }
    }
}

/// Applies 1-3 random edits: relabel a concept, relabel or retarget an edge,
/// drop or add an edge.
pub fn mutate<R: Rng>(rng: &mut R, s: &Structure) -> Structure {
    let mut s = s.clone();
    let n = s.entities.len();
    for _ in 0..rng.gen_range(1..=3) {
        let i = rng.gen_range(0..n);
        let e = &mut s.entities[i];
        match rng.gen_range(0..5) {
            0 => e.concept = CONCEPTS.choose(rng).unwrap().to_string(),
            1 if !e.edges.is_empty() => {
                let k = rng.gen_range(0..e.edges.len());
                e.edges[k].label = ROLES.choose(rng).unwrap().to_string();
            }
            2 if !e.edges.is_empty() => {
                let k = rng.gen_range(0..e.edges.len());
                e.edges[k] = random_edge(rng, i, n);
            }
            3 if !e.edges.is_empty() => {
                let k = rng.gen_range(0..e.edges.len());
                e.edges.remove(k);
            }
            _ => {
                let edge = random_edge(rng, i, n);
                s.entities[i].edges.push(edge);
            }
        }
    }
    s
}

/// Random well-formed line with up to `max_entities` concepts.
pub fn random_line<R: Rng>(rng: &mut R, max_entities: usize) -> String {
    random_structure(rng, max_entities).render()
}
