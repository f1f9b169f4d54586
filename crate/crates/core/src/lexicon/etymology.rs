use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use crate::error::{Error, Result};

/// A problem found while loading etymology records. Loading continues past it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub message: String,
}

/// Word ancestry as a map from `lang:word` nodes to their direct ancestors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EtymologyGraph {
    parents: BTreeMap<String, BTreeSet<String>>,
}

/// Normalizes `"lang: word"` to `"lang:word"`.
pub fn normalize_node(raw: &str) -> Option<String> {
    let (lang, word) = raw.trim().split_once(':')?;
    let (lang, word) = (lang.trim(), word.trim());
    if lang.is_empty() || word.is_empty() {
        return None;
    }
    Some(format!("{lang}:{word}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Relation {
    Etymology,
    OriginOf,
}

fn parse_relation(raw: &str) -> Option<Relation> {
    let r = raw.trim();
    match r.strip_prefix("rel:").unwrap_or(r) {
        "etymology" => Some(Relation::Etymology),
        "etymological_origin_of" => Some(Relation::OriginOf),
        _ => None,
    }
}

impl EtymologyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.values().map(BTreeSet::len).sum()
    }

    pub fn has_edge(&self, child: &str, parent: &str) -> bool {
        self.parents.get(child).is_some_and(|p| p.contains(parent))
    }

    pub fn parents(&self, node: &str) -> impl Iterator<Item = &str> {
        self.parents
            .get(node)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    /// Every node mentioned by an edge, sorted.
    pub fn nodes(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for (child, ps) in &self.parents {
            out.insert(child.as_str());
            out.extend(ps.iter().map(String::as_str));
        }
        out
    }

    /// Adds `child -> parent`. Self-loops are ignored.
    pub fn add_edge(&mut self, child: &str, parent: &str) {
        if child == parent {
            return;
        }
        self.parents
            .entry(child.to_string())
            .or_default()
            .insert(parent.to_string());
    }

    /// Builds a graph from `(child, relation, parent)` records. Relations are
    /// `etymology` (child derives from parent) and `etymological_origin_of`
    /// (inverted), optionally prefixed with `rel:`. Other relations are skipped.
    /// Cycles are broken after loading; each removed edge yields a warning.
    pub fn load<'a, I>(records: I) -> (Self, Vec<LoadWarning>)
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut g = EtymologyGraph::new();
        let mut warnings = Vec::new();
        for (i, (child, rel, parent)) in records.into_iter().enumerate() {
            if let Err(message) = g.add_record(child, rel, parent) {
                warnings.push(LoadWarning {
                    line: i + 1,
                    message,
                });
            }
        }
        warnings.extend(g.break_cycles());
        (g, warnings)
    }

    fn add_record(
        &mut self,
        child: &str,
        rel: &str,
        parent: &str,
    ) -> std::result::Result<(), String> {
        let Some(relation) = parse_relation(rel) else {
            return Ok(());
        };
        let c = normalize_node(child).ok_or_else(|| format!("malformed node {child:?}"))?;
        let p = normalize_node(parent).ok_or_else(|| format!("malformed node {parent:?}"))?;
        match relation {
            Relation::Etymology => self.add_edge(&c, &p),
            Relation::OriginOf => self.add_edge(&p, &c),
        }
        Ok(())
    }

    /// Reads `child<TAB>relation<TAB>parent` lines. Malformed lines are
    /// reported with their line number and skipped.
    pub fn from_tsv(r: impl BufRead, name: &str) -> Result<(Self, Vec<LoadWarning>)> {
        let mut g = EtymologyGraph::new();
        let mut warnings = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let res = if f.len() == 3 {
                g.add_record(f[0], f[1], f[2])
            } else {
                Err(format!(
                    "expected 3 tab-separated fields, found {}",
                    f.len()
                ))
            };
            if let Err(message) = res {
                log::warn!("{name}:{}: {message}", n + 1);
                warnings.push(LoadWarning {
                    line: n + 1,
                    message,
                });
            }
        }
        warnings.extend(g.break_cycles());
        Ok((g, warnings))
    }

    /// Removes back edges found by a depth-first search in node order.
    fn break_cycles(&mut self) -> Vec<LoadWarning> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        let mut marks: BTreeMap<String, Mark> = BTreeMap::new();
        let mut removed = Vec::new();
        let starts: Vec<String> = self.parents.keys().cloned().collect();
        for start in starts {
            if marks.contains_key(&start) {
                continue;
            }
            let mut stack: Vec<(String, Vec<String>, usize)> = Vec::new();
            let ps: Vec<String> = self.parents(&start).map(String::from).collect();
            marks.insert(start.clone(), Mark::Active);
            stack.push((start, ps, 0));
            while let Some((node, ps, i)) = stack.last_mut() {
                if *i == ps.len() {
                    marks.insert(node.clone(), Mark::Done);
                    stack.pop();
                    continue;
                }
                let next = ps[*i].clone();
                *i += 1;
                match marks.get(&next) {
                    Some(Mark::Active) => removed.push((node.clone(), next)),
                    Some(Mark::Done) => {}
                    None => {
                        let nps: Vec<String> = self.parents(&next).map(String::from).collect();
                        marks.insert(next.clone(), Mark::Active);
                        stack.push((next, nps, 0));
                    }
                }
            }
        }
        removed
            .into_iter()
            .map(|(child, parent)| {
                if let Some(ps) = self.parents.get_mut(&child) {
                    ps.remove(&parent);
                }
                let message = format!("cycle broken by dropping {child} -> {parent}");
                log::warn!("{message}");
                LoadWarning { line: 0, message }
            })
            .collect()
    }

    /// Terminal ancestors reachable from `node`. A node without ancestors is
    /// its own root.
    pub fn root_paths(&self, node: &str) -> BTreeSet<String> {
        let mut roots = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![node.to_string()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            let mut has_parent = false;
            for p in self.parents(&n) {
                has_parent = true;
                stack.push(p.to_string());
            }
            if !has_parent {
                roots.insert(n);
            }
        }
        roots
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(edges: &[(&str, &str)]) -> EtymologyGraph {
        EtymologyGraph::load(edges.iter().map(|&(c, p)| (c, "etymology", p))).0
    }

    fn set(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn loads_edge() {
        let (g, w) = EtymologyGraph::load([("eng:freight", "etymology", "enm:freyght")]);
        assert!(w.is_empty());
        assert!(g.has_edge("eng:freight", "enm:freyght"));
    }

    #[test]
    fn empty_and_unknown_relations() {
        let (g, _) = EtymologyGraph::load(std::iter::empty());
        assert!(g.is_empty());
        let (g, w) = EtymologyGraph::load([("eng:a", "derived", "lat:b")]);
        assert!(g.is_empty());
        assert!(w.is_empty());
    }

    #[test]
    fn inverted_relation_and_self_loop() {
        let (g, _) = EtymologyGraph::load([
            ("lat:fatigare", "rel:etymological_origin_of", "fra:fatiguer"),
            ("eng:x", "etymology", "eng:x"),
        ]);
        assert!(g.has_edge("fra:fatiguer", "lat:fatigare"));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn tsv_reports_bad_lines_and_continues() {
        let data = "eng: cargo\trel:etymology\tspa: cargo\nbroken line\neng:a\tetymology\tnocolon\nspa: cargo\tetymology\tspa: cargar\n";
        let (g, w) = EtymologyGraph::from_tsv(data.as_bytes(), "ew.tsv").unwrap();
        assert_eq!(w.iter().map(|w| w.line).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(g.root_paths("eng:cargo"), set(&["spa:cargar"]));
    }

    #[test]
    fn isolated_word_is_own_root() {
        let g = graph(&[("eng:over", "ang:ofer")]);
        assert_eq!(g.root_paths("eng:overdo"), set(&["eng:overdo"]));
    }

    #[test]
    fn chain_and_diamond() {
        let g = graph(&[("a:a", "a:b"), ("a:b", "a:c")]);
        assert_eq!(g.root_paths("a:a"), set(&["a:c"]));
        let g = graph(&[
            ("x:a", "x:b"),
            ("x:a", "x:c"),
            ("x:b", "x:d"),
            ("x:c", "x:d"),
        ]);
        assert_eq!(g.root_paths("x:a"), set(&["x:d"]));
    }

    #[test]
    fn cycles_are_broken() {
        let (g, w) = EtymologyGraph::load([
            ("x:a", "etymology", "x:b"),
            ("x:b", "etymology", "x:c"),
            ("x:c", "etymology", "x:a"),
        ]);
        assert_eq!(w.len(), 1);
        assert_eq!(g.edge_count(), 2);
        for n in ["x:a", "x:b", "x:c"] {
            assert_eq!(g.root_paths(n).len(), 1);
        }
    }
}
