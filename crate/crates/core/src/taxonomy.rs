//! Rooted is-a taxonomy with Wu-Palmer similarity and the WUPS aggregate.
//!
//! Depth is the shortest hypernym chain to the root, with the root at depth 1;
//! the lowest common subsumer of two nodes is their deepest common ancestor
//! under that depth. Surface strings resolve through a synonym map, falling
//! back to exact string equality for terms outside the taxonomy.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::path::Path;

use crate::error::Error;
use crate::Result;

/// A Wu-Palmer similarity value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct WupScore(pub f64);

impl WupScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Immutable is-a graph. Queries are pure and safe to run concurrently.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    depth: Vec<u32>,
    root: usize,
    synonyms: HashMap<String, usize>,
}

fn normalize(surface: &str) -> String {
    surface
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl Taxonomy {
    /// Build from `(child, parent)` edges. The root is the unique node that
    /// appears only as a parent; every node must reach it and the edge set
    /// must be acyclic.
    pub fn from_edges<I, S>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern =
            |name: String, names: &mut Vec<String>, index: &mut HashMap<String, usize>| {
                *index.entry(name.clone()).or_insert_with(|| {
                    names.push(name);
                    names.len() - 1
                })
            };

        let mut parent_edges: Vec<(usize, usize)> = Vec::new();
        for (child, parent) in edges {
            let c = intern(child.into(), &mut names, &mut index);
            let p = intern(parent.into(), &mut names, &mut index);
            parent_edges.push((c, p));
        }
        if names.is_empty() {
            return Err(Error::DisconnectedNode("<empty taxonomy>".into()));
        }

        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (c, p) in parent_edges {
            if !parents[c].contains(&p) {
                parents[c].push(p);
                children[p].push(c);
            }
        }

        // Kahn's algorithm over child→parent edges: leftover nodes form a cycle.
        let mut indegree = vec![0usize; n];
        for v in 0..n {
            for &p in &parents[v] {
                indegree[p] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut processed = 0;
        while let Some(v) = queue.pop_front() {
            processed += 1;
            for &p in &parents[v] {
                indegree[p] -= 1;
                if indegree[p] == 0 {
                    queue.push_back(p);
                }
            }
        }
        if processed < n {
            let offender = (0..n).find(|&i| indegree[i] > 0).unwrap();
            return Err(Error::CyclicTaxonomy(names[offender].clone()));
        }

        let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_empty()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::CyclicTaxonomy(names[0].clone())),
            more => {
                return Err(Error::DisconnectedNode(format!(
                    "multiple roots: {}, {}",
                    names[more[0]], names[more[1]]
                )))
            }
        };

        // BFS from the root over child edges gives the min-path depth.
        let mut depth = vec![0u32; n];
        depth[root] = 1;
        let mut queue = VecDeque::from([root]);
        while let Some(node) = queue.pop_front() {
            for &child in &children[node] {
                if depth[child] == 0 {
                    depth[child] = depth[node] + 1;
                    queue.push_back(child);
                }
            }
        }
        if let Some(unreached) = (0..n).find(|&i| depth[i] == 0) {
            return Err(Error::DisconnectedNode(names[unreached].clone()));
        }

        Ok(Taxonomy {
            names,
            index,
            parents,
            depth,
            root,
            synonyms: HashMap::new(),
        })
    }

    /// Register surface → node synonyms (`land` → `earth`'s node, ...).
    pub fn with_synonyms<I, S>(mut self, synonyms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        for (surface, node) in synonyms {
            let node = node.into();
            let id = self
                .index
                .get(&node)
                .copied()
                .ok_or_else(|| Error::UnknownNode(node.clone()))?;
            self.synonyms.insert(normalize(&surface.into()), id);
        }
        Ok(self)
    }

    pub fn root(&self) -> &str {
        &self.names[self.root]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, node: &str) -> bool {
        self.index.contains_key(node)
    }

    /// Depth of a node: root = 1, child = 1 + min over parents.
    pub fn depth_of(&self, node: &str) -> Result<u32> {
        let id = self
            .index
            .get(node)
            .ok_or_else(|| Error::UnknownNode(node.to_string()))?;
        Ok(self.depth[*id])
    }

    /// Resolve a surface string: synonym entry first, then a node named
    /// exactly by the (whitespace-normalized) string.
    fn resolve(&self, surface: &str) -> Option<usize> {
        let key = normalize(surface);
        self.synonyms
            .get(&key)
            .copied()
            .or_else(|| self.index.get(&key).copied())
            .or_else(|| self.index.get(surface).copied())
    }

    fn ancestors(&self, id: usize) -> HashSet<usize> {
        let mut out = HashSet::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            if out.insert(v) {
                stack.extend(&self.parents[v]);
            }
        }
        out
    }

    /// Depth of the deepest common ancestor of `a` and `b` (the root is
    /// always common, so the result is ≥ 1).
    pub fn lcs_depth(&self, a: &str, b: &str) -> Result<u32> {
        let ia = *self
            .index
            .get(a)
            .ok_or_else(|| Error::UnknownNode(a.to_string()))?;
        let ib = *self
            .index
            .get(b)
            .ok_or_else(|| Error::UnknownNode(b.to_string()))?;
        let common: Vec<usize> = self
            .ancestors(ia)
            .intersection(&self.ancestors(ib))
            .copied()
            .collect();
        Ok(common.iter().map(|&i| self.depth[i]).max().unwrap_or(1))
    }
}

/// Wu-Palmer similarity between two surface strings.
///
/// When both resolve to taxonomy nodes the score is
/// `2 * lcs_depth / (depth(a) + depth(b))`, clamped into `[0, 1]`; in a
/// taxonomy whose ancestors are strictly shallower than their descendants the
/// score is 1 exactly when the two terms share a node. When either term is
/// unresolved the score falls back to exact string equality.
pub fn wup(a: &str, b: &str, taxonomy: &Taxonomy) -> WupScore {
    match (taxonomy.resolve(a), taxonomy.resolve(b)) {
        (Some(ia), Some(ib)) => {
            if ia == ib {
                return WupScore(1.0);
            }
            let common: Vec<usize> = taxonomy
                .ancestors(ia)
                .intersection(&taxonomy.ancestors(ib))
                .copied()
                .collect();
            let lcs = common
                .iter()
                .map(|&i| taxonomy.depth[i])
                .max()
                .unwrap_or(1) as f64;
            let score = 2.0 * lcs / (taxonomy.depth[ia] + taxonomy.depth[ib]) as f64;
            WupScore(score.clamp(0.0, 1.0))
        }
        _ => {
            if normalize(a) == normalize(b) {
                WupScore(1.0)
            } else {
                WupScore(0.0)
            }
        }
    }
}

/// How a threshold is applied to per-sample WUPS scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WupsMode {
    /// Score 1 when at or above the threshold, 0 otherwise.
    Binary,
    /// Keep the score at or above the threshold, scale by 0.1 below it.
    Downweight,
}

/// Per-sample min of the two directed max-products.
fn sample_score(gold: &[String], pred: &[String], taxonomy: &Taxonomy) -> f64 {
    let direction = |from: &[String], to: &[String]| -> f64 {
        from.iter()
            .map(|a| {
                to.iter()
                    .map(|t| wup(a, t, taxonomy).value())
                    .fold(0.0, f64::max)
            })
            .product()
    };
    direction(gold, pred).min(direction(pred, gold))
}

/// Corpus-level WUPS percentage over aligned answer sets.
///
/// Without a threshold this is the mean per-sample score × 100. With a
/// threshold, each per-sample score is first mapped through `mode`.
pub fn wups_with_mode(
    gold: &[Vec<String>],
    pred: &[Vec<String>],
    taxonomy: &Taxonomy,
    threshold: Option<f64>,
    mode: WupsMode,
) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::LengthMismatch { gold: 0, pred: 0 });
    }
    let mut total = 0.0;
    for (i, (a, t)) in gold.iter().zip(pred.iter()).enumerate() {
        if a.is_empty() || t.is_empty() {
            return Err(Error::EmptyAnswerSet(i));
        }
        let score = sample_score(a, t, taxonomy);
        total += match (threshold, mode) {
            (None, _) => score,
            (Some(th), WupsMode::Binary) => {
                if score >= th {
                    1.0
                } else {
                    0.0
                }
            }
            (Some(th), WupsMode::Downweight) => {
                if score >= th {
                    score
                } else {
                    0.1 * score
                }
            }
        };
    }
    Ok(total / gold.len() as f64 * 100.0)
}

/// WUPS with the binary threshold rule.
pub fn wups(
    gold: &[Vec<String>],
    pred: &[Vec<String>],
    taxonomy: &Taxonomy,
    threshold: Option<f64>,
) -> Result<f64> {
    wups_with_mode(gold, pred, taxonomy, threshold, WupsMode::Binary)
}

/// Load a TSV edge list (`child<TAB>parent` per line) plus an optional
/// synonyms TSV (`surface<TAB>node`).
pub fn load_taxonomy(edges_path: &Path, synonyms_path: Option<&Path>) -> Result<Taxonomy> {
    let edges = read_tsv_pairs(edges_path)?;
    let taxonomy = Taxonomy::from_edges(edges)?;
    match synonyms_path {
        Some(path) => taxonomy.with_synonyms(read_tsv_pairs(path)?),
        None => Ok(taxonomy),
    }
}

fn read_tsv_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let file = path.display().to_string();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {file}"), e))?;
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(2, '\t');
        match (parts.next(), parts.next()) {
            (Some(a), Some(b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                out.push((a.trim().to_string(), b.trim().to_string()));
            }
            _ => {
                return Err(Error::data(
                    &file,
                    i + 1,
                    "expected two tab-separated fields",
                ))
            }
        }
    }
    Ok(out)
}

/// Convert a hypernym dump with lines of the form
/// `term: hypernym1, hypernym2` (blank lines and `#` comments ignored) into
/// the `(child, parent)` edge list consumed by [`Taxonomy::from_edges`].
pub fn convert_hypernym_dump(input: &str) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (term, hypernyms) = line.split_once(':').ok_or_else(|| {
            Error::data("<hypernym dump>", i + 1, "expected `term: hypernym, ...`")
        })?;
        let term = term.trim();
        if term.is_empty() {
            return Err(Error::data("<hypernym dump>", i + 1, "empty term"));
        }
        for hypernym in hypernyms.split(',') {
            let hypernym = hypernym.trim();
            if !hypernym.is_empty() {
                edges.push((term.to_string(), hypernym.to_string()));
            }
        }
    }
    Ok(edges)
}
