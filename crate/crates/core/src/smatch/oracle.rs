//! Exhaustive optimum over injective mappings, used to check the hill-climber.

use super::align::Alignment;

/// Largest smaller-side variable count the oracle accepts.
pub const ORACLE_MAX_VARS: usize = 8;

/// Exact best mapping of `al` by depth-first enumeration with a simple upper
/// bound. Requires `al.n() <= al.m()`; the caller transposes otherwise.
///
/// Weights are non-negative, so some total injective map is optimal and
/// partial maps never need to be enumerated.
pub(crate) fn exhaustive(al: &Alignment) -> (Vec<Option<usize>>, u32) {
    let (n, m) = (al.n(), al.m());
    debug_assert!(n <= m);

    // Optimistic gain of each variable over any target.
    let upper: Vec<u32> = (0..n)
        .map(|a| {
            (0..m)
                .map(|b| al.node_weight(a, b) + al.neighbours(a, b).iter().map(|x| x.2).sum::<u32>())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut suffix = vec![0u32; n + 1];
    for a in (0..n).rev() {
        suffix[a] = suffix[a + 1] + upper[a];
    }

    struct Search<'a> {
        al: &'a Alignment,
        suffix: Vec<u32>,
        map: Vec<Option<usize>>,
        used: Vec<bool>,
        best: Option<(Vec<Option<usize>>, u32)>,
    }

    impl Search<'_> {
        fn go(&mut self, a: usize, score: u32) {
            let n = self.map.len();
            if a == n {
                if self.best.as_ref().is_none_or(|(_, s)| score > *s) {
                    self.best = Some((self.map.clone(), score));
                }
                return;
            }
            if let Some((_, best)) = &self.best {
                if score + self.suffix[a] <= *best {
                    return;
                }
            }
            for b in 0..self.used.len() {
                if self.used[b] {
                    continue;
                }
                let mut gain = self.al.node_weight(a, b);
                for &(a2, b2, w) in self.al.neighbours(a, b) {
                    if a2 < a && self.map[a2] == Some(b2) {
                        gain += w;
                    }
                }
                self.used[b] = true;
                self.map[a] = Some(b);
                self.go(a + 1, score + gain);
                self.map[a] = None;
                self.used[b] = false;
            }
        }
    }

    let mut s = Search { al, suffix, map: vec![None; n], used: vec![false; m], best: None };
    s.go(0, 0);
    s.best.unwrap_or((Vec::new(), 0))
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::penman::{extract_triples, PenmanGraph, Triple, TripleSet};

    fn triples(s: &str) -> TripleSet {
        extract_triples(&s.parse::<PenmanGraph>().unwrap())
    }

    // Matched triples under `map`, counted directly on renamed triples.
    fn direct_score(a: &TripleSet, b: &TripleSet, map: &HashMap<&str, &str>) -> usize {
        let rename = |v: &str| map.get(v).map_or(format!("?{v}"), |s| s.to_string());
        let mut pool: HashMap<&Triple, usize> = HashMap::new();
        for t in b {
            *pool.entry(t).or_default() += 1;
        }
        let mut hits = 0;
        for t in a {
            let r = match t {
                Triple::Instance { var, label } => Triple::Instance { var: rename(var), label: label.clone() },
                Triple::Relation { src, rel, dst } => Triple::Relation { src: rename(src), rel: rel.clone(), dst: rename(dst) },
                Triple::Attribute { src, rel, value } => {
                    Triple::Attribute { src: rename(src), rel: rel.clone(), value: value.clone() }
                }
            };
            if let Some(c) = pool.get_mut(&r).filter(|c| **c > 0) {
                *c -= 1;
                hits += 1;
            }
        }
        hits
    }

    fn brute_force(a: &TripleSet, b: &TripleSet) -> usize {
        fn go<'a>(
            i: usize,
            va: &[&'a str],
            vb: &[&'a str],
            used: &mut Vec<bool>,
            map: &mut HashMap<&'a str, &'a str>,
            f: &dyn Fn(&HashMap<&'a str, &'a str>) -> usize,
        ) -> usize {
            if i == va.len() {
                return f(map);
            }
            let mut best = go(i + 1, va, vb, used, map, f);
            for j in 0..vb.len() {
                if !used[j] {
                    used[j] = true;
                    map.insert(va[i], vb[j]);
                    best = best.max(go(i + 1, va, vb, used, map, f));
                    map.remove(va[i]);
                    used[j] = false;
                }
            }
            best
        }
        let (va, vb) = (a.variables(), b.variables());
        go(0, &va, &vb, &mut vec![false; vb.len()], &mut HashMap::new(), &|m| direct_score(a, b, m))
    }

    #[test]
    fn agrees_with_brute_force() {
        let graphs = [
            "(b0 / box :member (e0 / cat.n.01 :Colour (e1 / black.a.01)) :member e1)",
            "(b0 / box :member (e0 / cat.n.01 :Colour (e1 / cat.n.01)) :member e1)",
            "(b0 / box :member (e0 / dog.n.01 :Agent (e1 / cat.n.01) :Time (c0 / \"now\")) :member e1)",
            "(x / box :NEGATION (y / box :member (z / cat.n.01 :Colour z)))",
            "(b0 / box :member (e0 / cat.n.01 :Agent e0 :Agent (e1 / cat.n.01)) :member e1)",
        ];
        for a in &graphs {
            for b in &graphs {
                let (ta, tb) = (triples(a), triples(b));
                let (small, large) = if ta.variables().len() <= tb.variables().len() { (&ta, &tb) } else { (&tb, &ta) };
                let al = Alignment::new(small, large);
                let (map, score) = exhaustive(&al);
                assert_eq!(score as usize, brute_force(small, large), "{a} vs {b}");
                assert_eq!(al.score(&map), score);
            }
        }
    }
}
