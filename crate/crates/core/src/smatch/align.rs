//! Weighted alignment problem behind Smatch.
//!
//! The matched-triple count of an injective variable mapping decomposes into
//! per-candidate weights (instance and attribute triples, keyed by one
//! `(system var, gold var)` pair) and pairwise weights (relation triples,
//! keyed by two such pairs). Both the hill-climber and the exhaustive oracle
//! work on this decomposition.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::penman::{Triple, TripleSet};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum UnaryKey {
    Instance(String),
    Attribute(String, String),
    SelfLoop(String),
}

#[derive(Debug, Clone)]
pub(crate) struct Alignment {
    pub vars_a: Vec<String>,
    pub vars_b: Vec<String>,
    pub total_a: usize,
    pub total_b: usize,
    /// Matched unary triples if `a` maps to `b`, at `a * m + b`.
    node_w: Vec<u32>,
    /// Neighbouring candidates `(a2, b2, w)` of candidate `a * m + b`.
    adj: Vec<Vec<(usize, usize, u32)>>,
}

type Unary = HashMap<(usize, UnaryKey), u32>;
type Binary = HashMap<(usize, String, usize), u32>;

fn index_vars(t: &TripleSet) -> (Vec<String>, HashMap<String, usize>) {
    let mut vars: Vec<String> = t.variables().into_iter().map(str::to_string).collect();
    vars.dedup();
    let idx = vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    (vars, idx)
}

fn decompose(t: &TripleSet, idx: &HashMap<String, usize>) -> (Unary, Binary) {
    let mut unary = Unary::new();
    let mut binary = Binary::new();
    for triple in t {
        match triple {
            Triple::Instance { var, label } => {
                *unary.entry((idx[var], UnaryKey::Instance(label.clone()))).or_default() += 1;
            }
            Triple::Attribute { src, rel, value } => {
                if let Some(&s) = idx.get(src) {
                    *unary.entry((s, UnaryKey::Attribute(rel.clone(), value.clone()))).or_default() += 1;
                }
            }
            Triple::Relation { src, rel, dst } => match (idx.get(src), idx.get(dst)) {
                (Some(&s), Some(&d)) if s == d => {
                    *unary.entry((s, UnaryKey::SelfLoop(rel.clone()))).or_default() += 1;
                }
                (Some(&s), Some(&d)) => *binary.entry((s, rel.clone(), d)).or_default() += 1,
                // Undeclared target: compare it literally.
                (Some(&s), None) => {
                    *unary.entry((s, UnaryKey::Attribute(rel.clone(), dst.clone()))).or_default() += 1;
                }
                _ => {}
            },
        }
    }
    (unary, binary)
}

impl Alignment {
    pub fn new(a: &TripleSet, b: &TripleSet) -> Alignment {
        let (vars_a, idx_a) = index_vars(a);
        let (vars_b, idx_b) = index_vars(b);
        let (n, m) = (vars_a.len(), vars_b.len());
        let (unary_a, binary_a) = decompose(a, &idx_a);
        let (unary_b, binary_b) = decompose(b, &idx_b);

        let mut node_w = vec![0u32; n * m];
        let mut unary_by_key: HashMap<&UnaryKey, Vec<(usize, u32)>> = HashMap::new();
        for ((v, key), c) in &unary_b {
            unary_by_key.entry(key).or_default().push((*v, *c));
        }
        for ((va, key), ca) in &unary_a {
            if let Some(list) = unary_by_key.get(key) {
                for &(vb, cb) in list {
                    node_w[va * m + vb] += (*ca).min(cb);
                }
            }
        }

        let mut binary_by_rel: HashMap<&str, Vec<(usize, usize, u32)>> = HashMap::new();
        for ((s, rel, d), c) in &binary_b {
            binary_by_rel.entry(rel.as_str()).or_default().push((*s, *d, *c));
        }
        let mut pair_w: HashMap<(usize, usize, usize, usize), u32> = HashMap::new();
        for ((a1, rel, a2), ca) in &binary_a {
            if let Some(list) = binary_by_rel.get(rel.as_str()) {
                for &(b1, b2, cb) in list {
                    *pair_w.entry((*a1, b1, *a2, b2)).or_default() += (*ca).min(cb);
                }
            }
        }
        let mut adj = vec![Vec::new(); n * m];
        let mut pairs: Vec<_> = pair_w.into_iter().collect();
        pairs.sort_unstable();
        for ((a1, b1, a2, b2), w) in pairs {
            adj[a1 * m + b1].push((a2, b2, w));
            adj[a2 * m + b2].push((a1, b1, w));
        }

        Alignment { vars_a, vars_b, total_a: a.len(), total_b: b.len(), node_w, adj }
    }

    pub fn n(&self) -> usize {
        self.vars_a.len()
    }

    pub fn m(&self) -> usize {
        self.vars_b.len()
    }

    pub fn node_weight(&self, a: usize, b: usize) -> u32 {
        self.node_w[a * self.m() + b]
    }

    pub fn neighbours(&self, a: usize, b: usize) -> &[(usize, usize, u32)] {
        &self.adj[a * self.m() + b]
    }

    /// Matched triples under `map` (`map[a]` is the image of `a`).
    pub fn score(&self, map: &[Option<usize>]) -> u32 {
        let mut unary = 0;
        let mut twice_binary = 0;
        for (a, b) in map.iter().enumerate() {
            if let Some(b) = *b {
                unary += self.node_weight(a, b);
                twice_binary += self
                    .neighbours(a, b)
                    .iter()
                    .filter(|(a2, b2, _)| map[*a2] == Some(*b2))
                    .map(|(_, _, w)| w)
                    .sum::<u32>();
            }
        }
        unary + twice_binary / 2
    }

    // Weight gained by mapping `a` to `b`, given the others, ignoring `skip`.
    fn contribution(&self, map: &[Option<usize>], a: usize, b: Option<usize>, skip: usize) -> i64 {
        let Some(b) = b else { return 0 };
        let mut s = self.node_weight(a, b) as i64;
        for &(a2, b2, w) in self.neighbours(a, b) {
            if a2 != skip && map[a2] == Some(b2) {
                s += w as i64;
            }
        }
        s
    }

    fn pair_weight(&self, a: usize, b: Option<usize>, a2: usize, b2: Option<usize>) -> i64 {
        match (b, b2) {
            (Some(b), Some(b2)) => self
                .neighbours(a, b)
                .iter()
                .find(|(x, y, _)| *x == a2 && *y == b2)
                .map_or(0, |(_, _, w)| *w as i64),
            _ => 0,
        }
    }

    /// Greedy start: each variable takes the first free variable with the
    /// same instance label, in variable order.
    pub fn greedy_start(&self, label_a: &[Option<&str>], label_b: &[Option<&str>]) -> Vec<Option<usize>> {
        let mut used = vec![false; self.m()];
        let mut map = vec![None; self.n()];
        for (a, la) in label_a.iter().enumerate() {
            if let Some(b) = (0..self.m()).find(|&b| !used[b] && la.is_some() && label_b[b] == *la) {
                used[b] = true;
                map[a] = Some(b);
            }
        }
        map
    }

    pub fn random_start<R: Rng>(&self, rng: &mut R) -> Vec<Option<usize>> {
        let mut perm: Vec<usize> = (0..self.m()).collect();
        perm.shuffle(rng);
        (0..self.n()).map(|a| perm.get(a).copied()).collect()
    }

    /// Steepest-ascent hill climbing over remap and swap moves. Ties keep the
    /// first move found in (variable, target) order.
    pub fn climb(&self, mut map: Vec<Option<usize>>) -> (Vec<Option<usize>>, u32) {
        let (n, m) = (self.n(), self.m());
        let mut inverse = vec![None; m];
        for (a, b) in map.iter().enumerate() {
            if let Some(b) = b {
                inverse[*b] = Some(a);
            }
        }
        loop {
            let mut best_gain = 0i64;
            let mut best_move = None;
            for a in 0..n {
                let cur = map[a];
                for b in 0..m {
                    if cur == Some(b) {
                        continue;
                    }
                    let gain = match inverse[b] {
                        None => self.contribution(&map, a, Some(b), a) - self.contribution(&map, a, cur, a),
                        Some(other) => {
                            let before = self.contribution(&map, a, cur, other)
                                + self.contribution(&map, other, Some(b), a)
                                + self.pair_weight(a, cur, other, Some(b));
                            let after = self.contribution(&map, a, Some(b), other)
                                + self.contribution(&map, other, cur, a)
                                + self.pair_weight(a, Some(b), other, cur);
                            after - before
                        }
                    };
                    if gain > best_gain {
                        best_gain = gain;
                        best_move = Some((a, b));
                    }
                }
            }
            let Some((a, b)) = best_move else { break };
            let cur = map[a];
            if let Some(other) = inverse[b] {
                map[other] = cur;
                if let Some(c) = cur {
                    inverse[c] = Some(other);
                }
            } else if let Some(c) = cur {
                inverse[c] = None;
            }
            map[a] = Some(b);
            inverse[b] = Some(a);
        }
        let score = self.score(&map);
        (map, score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::{extract_triples, PenmanGraph};

    fn triples(s: &str) -> TripleSet {
        extract_triples(&s.parse::<PenmanGraph>().unwrap())
    }

    #[test]
    fn weights_decompose_score() {
        let a = triples("(b0 / box :member (e0 / cat.n.01 :Colour (e1 / black.a.01)) :member e1)");
        let b = triples("(x / box :member (y / cat.n.01 :Colour (z / black.a.01)) :member z)");
        let al = Alignment::new(&a, &b);
        // vars sorted: b0 e0 e1 / x y z
        let identity = vec![Some(0), Some(1), Some(2)];
        assert_eq!(al.score(&identity), 6);
        let swapped = vec![Some(0), Some(2), Some(1)];
        // box instance plus both member edges
        assert_eq!(al.score(&swapped), 3);
    }

    #[test]
    fn climb_reaches_identity() {
        let a = triples("(b0 / box :member (e0 / cat.n.01 :Colour (e1 / black.a.01)) :member e1)");
        let al = Alignment::new(&a, &a);
        let (map, score) = al.climb(vec![Some(2), Some(0), Some(1)]);
        assert_eq!(score, 6);
        assert_eq!(map, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn duplicate_triples_count_once_per_partner() {
        let a = triples("(a / x :r (b / y) :r b)");
        let c = triples("(a / x :r (b / y))");
        let al = Alignment::new(&a, &c);
        assert_eq!(al.score(&[Some(0), Some(1)]), 3);
    }
}
