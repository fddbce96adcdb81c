//! Semantic difference classification between a system and a gold DRS.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{best_score, Mapping, DEFAULT_RESTARTS, DEFAULT_SEED};
use crate::graph::{build_graph, Drg, IllFormedReport, NodeKind};
use crate::penman::{drg_triples, variable_index, Triple};
use crate::sequence::TokenSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiffCategory {
    WrongConcept,
    WrongRole,
    WrongIndex,
    MissingToken,
    ExtraToken,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffFinding {
    pub category: DiffCategory,
    /// Empty for `MissingToken`.
    pub system: String,
    /// Empty for `ExtraToken`.
    pub gold: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub findings: Vec<DiffFinding>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn count(&self, category: DiffCategory) -> usize {
        self.findings.iter().filter(|f| f.category == category).count()
    }
}

impl fmt::Display for DiffFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: system `{}` gold `{}`", self.category, self.system, self.gold)
    }
}

// Renders triples back into sequence-notation fragments.
struct Side<'a> {
    g: &'a Drg,
    nodes: HashMap<String, usize>,
    entity_pos: HashMap<usize, i64>,
}

impl<'a> Side<'a> {
    fn new(g: &'a Drg) -> Self {
        let entity_pos = g.entities().into_iter().enumerate().map(|(i, id)| (id, i as i64)).collect();
        Side { g, nodes: variable_index(g), entity_pos }
    }

    fn label(&self, var: &str) -> String {
        self.nodes.get(var).map_or_else(|| var.to_string(), |&id| self.g.nodes[id].label.clone())
    }

    fn target(&self, src: &str, dst: &str) -> String {
        let (Some(&s), Some(&d)) = (self.nodes.get(src), self.nodes.get(dst)) else {
            return dst.to_string();
        };
        match (self.g.nodes[s].kind, self.g.nodes[d].kind) {
            (NodeKind::Entity, NodeKind::Entity) => format!("{:+}", self.entity_pos[&d] - self.entity_pos[&s]),
            _ => self.g.nodes[d].label.clone(),
        }
    }

    fn edge(&self, t: &Triple) -> (String, String) {
        match t {
            Triple::Relation { src, rel, dst } => (rel.clone(), self.target(src, dst)),
            Triple::Attribute { rel, value, .. } => (rel.clone(), value.clone()),
            Triple::Instance { label, .. } => (String::new(), label.clone()),
        }
    }

    fn describe(&self, t: &Triple) -> String {
        match t {
            Triple::Instance { label, .. } => label.clone(),
            Triple::Relation { src, .. } | Triple::Attribute { src, .. } => {
                let (rel, target) = self.edge(t);
                format!("{} {rel} {target}", self.label(src))
            }
        }
    }
}

fn image(mapping: &Mapping, var: &str) -> String {
    // Unmapped variables get a name no gold variable can have.
    mapping.get(var).map_or_else(|| format!("\u{0}{var}"), str::to_string)
}

fn map_triple(t: &Triple, mapping: &Mapping) -> Triple {
    match t {
        Triple::Instance { var, label } => Triple::Instance { var: image(mapping, var), label: label.clone() },
        Triple::Relation { src, rel, dst } => {
            Triple::Relation { src: image(mapping, src), rel: rel.clone(), dst: image(mapping, dst) }
        }
        Triple::Attribute { src, rel, value } => {
            Triple::Attribute { src: image(mapping, src), rel: rel.clone(), value: value.clone() }
        }
    }
}

// (source, target) of an edge triple in gold space.
fn endpoints(t: &Triple) -> Option<(&str, &str)> {
    match t {
        Triple::Relation { src, dst, .. } => Some((src, dst)),
        Triple::Attribute { src, value, .. } => Some((src, value)),
        Triple::Instance { .. } => None,
    }
}

fn rel_of(t: &Triple) -> &str {
    match t {
        Triple::Relation { rel, .. } | Triple::Attribute { rel, .. } => rel,
        Triple::Instance { .. } => "",
    }
}

/// Classifies the unmatched triples under the best Smatch mapping. Each
/// unmatched triple ends up in exactly one finding.
pub fn classify_diff(system: &TokenSequence, gold: &TokenSequence) -> Result<DiffReport, IllFormedReport> {
    let sys_g = build_graph(system)?;
    let gold_g = build_graph(gold)?;
    let sys_t = drg_triples(&sys_g);
    let gold_t = drg_triples(&gold_g);
    let mapping = best_score(&sys_t, &gold_t, DEFAULT_RESTARTS, DEFAULT_SEED).mapping;

    let mut remaining: HashMap<&Triple, usize> = HashMap::new();
    for t in &gold_t {
        *remaining.entry(t).or_default() += 1;
    }
    // (original system triple, its image in gold space)
    let mut unmatched_sys: Vec<(&Triple, Triple)> = Vec::new();
    for t in &sys_t {
        let img = map_triple(t, &mapping);
        match remaining.get_mut(&img) {
            Some(c) if *c > 0 => *c -= 1,
            _ => unmatched_sys.push((t, img)),
        }
    }
    let mut unmatched_gold: Vec<&Triple> = Vec::new();
    for t in &gold_t {
        if let Some(c) = remaining.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                unmatched_gold.push(t);
            }
        }
    }

    let sys_side = Side::new(&sys_g);
    let gold_side = Side::new(&gold_g);
    let mut findings = Vec::new();
    let mut gold_used = vec![false; unmatched_gold.len()];
    let mut sys_used = vec![false; unmatched_sys.len()];

    let mut pass = |findings: &mut Vec<DiffFinding>, pick: &dyn Fn(&Triple, &Triple) -> Option<DiffCategory>| {
        for (si, (orig, img)) in unmatched_sys.iter().enumerate() {
            if sys_used[si] {
                continue;
            }
            let hit = unmatched_gold
                .iter()
                .enumerate()
                .find_map(|(gi, g)| (!gold_used[gi]).then(|| pick(img, g).map(|c| (gi, c))).flatten());
            if let Some((gi, category)) = hit {
                sys_used[si] = true;
                gold_used[gi] = true;
                let g = unmatched_gold[gi];
                let (system, gold) = match category {
                    DiffCategory::WrongConcept => (sys_side.describe(orig), gold_side.describe(g)),
                    DiffCategory::WrongRole => (rel_of(orig).to_string(), rel_of(g).to_string()),
                    _ => {
                        let (sr, st) = sys_side.edge(orig);
                        let (gr, gt) = gold_side.edge(g);
                        (format!("{sr} {st}"), format!("{gr} {gt}"))
                    }
                };
                findings.push(DiffFinding { category, system, gold });
            }
        }
    };

    pass(&mut findings, &|img, g| match (img, g) {
        (Triple::Instance { var: a, .. }, Triple::Instance { var: b, .. }) if a == b => Some(DiffCategory::WrongConcept),
        _ => None,
    });
    pass(&mut findings, &|img, g| match (endpoints(img), endpoints(g)) {
        (Some(a), Some(b)) if a == b && rel_of(img) != rel_of(g) => Some(DiffCategory::WrongRole),
        _ => None,
    });
    pass(&mut findings, &|img, g| match (endpoints(img), endpoints(g)) {
        (Some((s1, d1)), Some((s2, d2))) if s1 == s2 && d1 != d2 && rel_of(img) == rel_of(g) => {
            Some(DiffCategory::WrongIndex)
        }
        _ => None,
    });

    for (gi, g) in unmatched_gold.iter().enumerate() {
        if !gold_used[gi] {
            findings.push(DiffFinding {
                category: DiffCategory::MissingToken,
                system: String::new(),
                gold: gold_side.describe(g),
            });
        }
    }
    for (si, (orig, _)) in unmatched_sys.iter().enumerate() {
        if !sys_used[si] {
            findings.push(DiffFinding {
                category: DiffCategory::ExtraToken,
                system: sys_side.describe(orig),
                gold: String::new(),
            });
        }
    }
    Ok(DiffReport { findings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diff(sys: &str, gold: &str) -> DiffReport {
        classify_diff(&sys.parse().unwrap(), &gold.parse().unwrap()).unwrap()
    }

    const PREFIX: &str = "person.n.01 time.n.08 EQU now state.n.01";

    #[test]
    fn wrong_role() {
        let r = diff(
            &format!("{PREFIX} blind.a.01 Experiencer -3 Time -2"),
            &format!("{PREFIX} blind.a.01 Theme -3 Time -2"),
        );
        assert_eq!(
            r.findings,
            [DiffFinding { category: DiffCategory::WrongRole, system: "Experiencer".into(), gold: "Theme".into() }]
        );
    }

    #[test]
    fn wrong_concept() {
        let r = diff(
            "person.n.01 overtreibe.v.01 Patient -1 Time +1 time.n.08 TPR now",
            "person.n.01 exaggerate.v.01 Agent -1 Time +1 time.n.08 TPR now",
        );
        assert!(r.findings.contains(&DiffFinding {
            category: DiffCategory::WrongConcept,
            system: "overtreibe.v.01".into(),
            gold: "exaggerate.v.01".into(),
        }));
        assert_eq!(r.count(DiffCategory::WrongRole), 1);
        assert_eq!(r.findings.len(), 2);
    }

    #[test]
    fn wrong_index() {
        let r = diff(
            "female.n.02 Name \"Maria\" person.n.01 time.n.08 Theme -2",
            "female.n.02 Name \"Maria\" person.n.01 time.n.08 Theme -1",
        );
        assert_eq!(
            r.findings,
            [DiffFinding { category: DiffCategory::WrongIndex, system: "Theme -2".into(), gold: "Theme -1".into() }]
        );
    }

    #[test]
    fn missing_and_extra() {
        let r = diff("young.a.01 AttributeOf +1 person.n.01", "young.a.01 Value + person.n.01 Attribute -1");
        assert!(r.count(DiffCategory::MissingToken) >= 1);
        assert!(r.findings.iter().any(|f| f.gold.contains("Value +")));
        let r = diff("more_and_more.a.01 Degree +1 more.r.01", "more_and_more.r.01");
        assert_eq!(r.count(DiffCategory::WrongConcept), 1);
        assert_eq!(r.count(DiffCategory::ExtraToken), 3);
        assert_eq!(r.count(DiffCategory::MissingToken), 0);
    }

    #[test]
    fn identical_is_empty() {
        let line = "person.n.01 Role +1 engineer.n.01";
        assert!(diff(line, line).is_empty());
    }
}
