//! Edge-list ingestion and synthetic stream generation.
//!
//! Input files hold one edge per line as `u v [ignored columns...]`, with `u`
//! and `v` non-negative integers. Lines starting with `%` or `#` and blank
//! lines are skipped. Node ids are remapped per side to dense integers in
//! order of first appearance, and repeated edges are dropped and counted.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::EdgeKey;

static FILE_PASSES: AtomicUsize = AtomicUsize::new(0);

/// Number of times an edge file has been opened for reading by this process.
pub fn file_passes() -> usize {
    FILE_PASSES.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeStreamFile {
    pub path: PathBuf,
}

impl EdgeStreamFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        EdgeStreamFile { path: path.into() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub u_nodes: u64,
    pub v_nodes: u64,
    pub edges: u64,
    pub max_degree: u64,
    pub avg_degree: f64,
    pub duplicates: u64,
}

impl DatasetStats {
    pub fn nodes(&self) -> u64 {
        self.u_nodes + self.v_nodes
    }

    pub fn from_edges(edges: &[EdgeKey], duplicates: u64) -> Self {
        let mut du: FxHashMap<u64, u64> = FxHashMap::default();
        let mut dv: FxHashMap<u64, u64> = FxHashMap::default();
        for e in edges {
            *du.entry(e.u).or_default() += 1;
            *dv.entry(e.v).or_default() += 1;
        }
        let nodes = (du.len() + dv.len()) as u64;
        let max_degree = du.values().chain(dv.values()).copied().max().unwrap_or(0);
        DatasetStats {
            u_nodes: du.len() as u64,
            v_nodes: dv.len() as u64,
            edges: edges.len() as u64,
            max_degree,
            avg_degree: if nodes == 0 { 0.0 } else { 2.0 * edges.len() as f64 / nodes as f64 },
            duplicates,
        }
    }
}

/// A parsed stream with dense ids and the original labels for each side.
#[derive(Debug, Clone, Default)]
pub struct LoadedStream {
    pub edges: Vec<EdgeKey>,
    pub stats: DatasetStats,
    pub u_labels: Vec<u64>,
    pub v_labels: Vec<u64>,
}

pub fn load_stream(file: &EdgeStreamFile) -> Result<LoadedStream> {
    let f = File::open(&file.path).map_err(|source| Error::Open { path: file.path.clone(), source })?;
    FILE_PASSES.fetch_add(1, Ordering::Relaxed);
    read_stream(BufReader::new(f), &file.path)
}

/// Parses an edge list from any reader; `origin` labels parse errors.
pub fn read_stream<R: BufRead>(reader: R, origin: &Path) -> Result<LoadedStream> {
    let mut u_ids: FxHashMap<u64, u64> = FxHashMap::default();
    let mut v_ids: FxHashMap<u64, u64> = FxHashMap::default();
    let mut out = LoadedStream::default();
    let mut seen: FxHashSet<EdgeKey> = FxHashSet::default();
    let mut duplicates = 0u64;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let parse = |tok: Option<&str>, what: &str| -> Result<u64> {
            let tok = tok.ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                msg: format!("missing {what} column"),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                msg: format!("{what} id {tok:?} is not a non-negative integer"),
            })
        };
        let u = parse(tokens.next(), "u")?;
        let v = parse(tokens.next(), "v")?;
        let next_u = u_ids.len() as u64;
        let du = *u_ids.entry(u).or_insert_with(|| {
            out.u_labels.push(u);
            next_u
        });
        let next_v = v_ids.len() as u64;
        let dv = *v_ids.entry(v).or_insert_with(|| {
            out.v_labels.push(v);
            next_v
        });
        let e = EdgeKey::new(du, dv);
        if seen.insert(e) {
            out.edges.push(e);
        } else {
            duplicates += 1;
        }
    }
    out.stats = DatasetStats::from_edges(&out.edges, duplicates);
    Ok(out)
}

/// Writes `edges` in the accepted input format, 1-based ids, with a comment
/// header.
pub fn write_edge_list<W: Write>(mut w: W, edges: &[EdgeKey], n_u: u64, n_v: u64) -> Result<()> {
    writeln!(w, "% bip unweighted")?;
    writeln!(w, "% {} {} {}", edges.len(), n_u, n_v)?;
    for e in edges {
        writeln!(w, "{} {}", e.u + 1, e.v + 1)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_edge_file(path: &Path, edges: &[EdgeKey], n_u: u64, n_v: u64) -> Result<()> {
    write_edge_list(BufWriter::new(File::create(path)?), edges, n_u, n_v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_u: u64,
    pub n_v: u64,
    pub edges: u64,
    /// Exponent of the attachment kernel: a node is picked with probability
    /// proportional to `(degree + 1) ^ degree_exponent`.
    pub degree_exponent: f64,
    pub seed: u64,
}

/// Fenwick tree over non-negative weights with prefix-sum search.
struct WeightTree {
    tree: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightTree {
    fn new(n: usize, init: f64) -> Self {
        let mut t = WeightTree {
            tree: vec![0.0; n + 1],
            weights: vec![0.0; n],
        };
        for i in 0..n {
            t.set(i, init);
        }
        t
    }

    fn set(&mut self, i: usize, w: f64) {
        let delta = w - self.weights[i];
        self.weights[i] = w;
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut s = 0.0;
        let mut j = self.tree.len() - 1;
        while j > 0 {
            s += self.tree[j];
            j &= j - 1;
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

/// Generates a heavy-tailed bipartite stream by non-linear preferential
/// attachment on both sides. Output order is the generation order; no edge
/// repeats. Dense requests (more than half of all pairs) are drawn without
/// replacement from the full pair set with degree-free weights.
pub fn synth_bipartite(params: SynthParams) -> Result<Vec<EdgeKey>> {
    let SynthParams {
        n_u,
        n_v,
        edges,
        degree_exponent,
        seed,
    } = params;
    if n_u == 0 || n_v == 0 {
        return Err(Error::Infeasible("both sides need at least one node".into()));
    }
    let all = n_u.checked_mul(n_v).ok_or_else(|| Error::Infeasible("n_u * n_v overflows".into()))?;
    if edges > all {
        return Err(Error::Infeasible(format!("{edges} edges exceed the {all} possible pairs")));
    }
    if !(degree_exponent.is_finite() && degree_exponent >= 0.0) {
        return Err(Error::Infeasible("degree_exponent must be finite and >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if edges.saturating_mul(2) > all {
        let mut pairs: Vec<EdgeKey> = (0..n_u).flat_map(|u| (0..n_v).map(move |v| EdgeKey::new(u, v))).collect();
        // Partial Fisher-Yates: the first `edges` slots are a uniform subset in random order.
        for i in 0..edges as usize {
            let j = rng.random_range(i..pairs.len());
            pairs.swap(i, j);
        }
        pairs.truncate(edges as usize);
        return Ok(pairs);
    }

    let kernel = |d: u64| ((d + 1) as f64).powf(degree_exponent);
    let mut tree_u = WeightTree::new(n_u as usize, 1.0);
    let mut tree_v = WeightTree::new(n_v as usize, 1.0);
    let mut deg_u = vec![0u64; n_u as usize];
    let mut deg_v = vec![0u64; n_v as usize];
    let mut seen: FxHashSet<EdgeKey> = FxHashSet::default();
    let mut out = Vec::with_capacity(edges as usize);
    let mut misses = 0u64;
    while (out.len() as u64) < edges {
        let u = tree_u.find(rng.random::<f64>() * tree_u.total());
        let v = tree_v.find(rng.random::<f64>() * tree_v.total());
        let e = EdgeKey::new(u as u64, v as u64);
        if !seen.insert(e) {
            misses += 1;
            if misses > 1000 * edges.max(1000) {
                return Err(Error::Infeasible("attachment kernel too concentrated to place all edges".into()));
            }
            continue;
        }
        out.push(e);
        deg_u[u] += 1;
        deg_v[v] += 1;
        tree_u.set(u, kernel(deg_u[u]));
        tree_v.set(v, kernel(deg_v[v]));
    }
    Ok(out)
}

/// Parameters of [`synth_affiliation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffiliationParams {
    pub n_u: u64,
    pub n_v: u64,
    pub edges: u64,
    /// Background node `i` (0-based) on U is drawn with weight `(i + 1) ^ -u_exponent`.
    pub u_exponent: f64,
    pub v_exponent: f64,
    /// Fraction of edges placed by communities rather than the background.
    pub community_share: f64,
    /// V-size of the largest community; community `j` (1-based) has
    /// `max_community_v / j^0.7` V nodes.
    pub max_community_v: f64,
    /// U-size of the largest community; community `j` has `max_community_u / j^0.4`.
    pub max_community_u: f64,
    /// Chance that a community member links to each of the community's V nodes.
    pub join_probability: f64,
    pub seed: u64,
}

impl AffiliationParams {
    /// Roughly the size and similarity profile of a user-project membership
    /// graph: 122K nodes, 440K edges, max degree about 4.8K, 24M U-side
    /// similar pairs over about 170 distinct values, with close to 1,000 pairs
    /// in the top 100 dense ranks.
    pub fn github_like(seed: u64) -> Self {
        AffiliationParams {
            n_u: 60_000,
            n_v: 70_000,
            edges: 440_000,
            u_exponent: 0.74,
            v_exponent: 0.72,
            community_share: 0.12,
            max_community_v: 300.0,
            max_community_u: 50.0,
            join_probability: 0.5,
            seed,
        }
    }
}

/// Cumulative rank-size weights `(i + 1) ^ -alpha`.
fn rank_size_table(n: u64, alpha: f64) -> Vec<f64> {
    let mut total = 0.0;
    (0..n)
        .map(|i| {
            total += ((i + 1) as f64).powf(-alpha);
            total
        })
        .collect()
}

fn draw(cumulative: &[f64], rng: &mut ChaCha8Rng) -> u64 {
    let x = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1) as u64
}

/// Generates a bipartite stream mixing dense communities (groups of U nodes
/// that share many V neighbors) with a heavy-tailed independent background.
/// Edges are emitted in a seeded random order with no repeats.
pub fn synth_affiliation(params: AffiliationParams) -> Result<Vec<EdgeKey>> {
    let AffiliationParams {
        n_u,
        n_v,
        edges,
        u_exponent,
        v_exponent,
        community_share,
        max_community_v,
        max_community_u,
        join_probability,
        seed,
    } = params;
    if n_u == 0 || n_v == 0 {
        return Err(Error::Infeasible("both sides need at least one node".into()));
    }
    let all = n_u.checked_mul(n_v).ok_or_else(|| Error::Infeasible("n_u * n_v overflows".into()))?;
    if edges.saturating_mul(2) > all {
        return Err(Error::Infeasible(format!("{edges} edges exceed half of the {all} possible pairs")));
    }
    for (name, x) in [("u_exponent", u_exponent), ("v_exponent", v_exponent)] {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::Infeasible(format!("{name} must be finite and >= 0")));
        }
    }
    if !(0.0..=1.0).contains(&community_share) {
        return Err(Error::Infeasible("community_share must lie in [0, 1]".into()));
    }
    if !(join_probability > 0.0 && join_probability <= 1.0) {
        return Err(Error::Infeasible("join_probability must lie in (0, 1]".into()));
    }
    if !(max_community_u >= 2.0 && max_community_v >= 2.0) {
        return Err(Error::Infeasible("communities need at least two nodes per side".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: FxHashSet<EdgeKey> = FxHashSet::default();
    let mut out = Vec::with_capacity(edges as usize);
    let community_edges = (community_share * edges as f64) as usize;
    let mut j = 0.0f64;
    while out.len() < community_edges {
        j += 1.0;
        let size_v = ((max_community_v / j.powf(0.7)).ceil() as u64).max(2);
        let size_u = ((max_community_u / j.powf(0.4)).ceil() as u64).max(2);
        let vs: Vec<u64> = (0..size_v).map(|_| rng.random_range(0..n_v)).collect();
        let us: Vec<u64> = (0..size_u).map(|_| rng.random_range(0..n_u)).collect();
        'fill: for &u in &us {
            for &v in &vs {
                if rng.random::<f64>() < join_probability {
                    let e = EdgeKey::new(u, v);
                    if seen.insert(e) {
                        out.push(e);
                        if out.len() >= community_edges {
                            break 'fill;
                        }
                    }
                }
            }
        }
    }

    let cu = rank_size_table(n_u, u_exponent);
    let cv = rank_size_table(n_v, v_exponent);
    let mut misses = 0u64;
    while (out.len() as u64) < edges {
        let e = EdgeKey::new(draw(&cu, &mut rng), draw(&cv, &mut rng));
        if seen.insert(e) {
            out.push(e);
        } else {
            misses += 1;
            if misses > 1000 * edges.max(1000) {
                return Err(Error::Infeasible("background weights too concentrated to place all edges".into()));
            }
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUNNING: &str = "% running example\na x\n";

    #[test]
    fn parses_running_example() {
        let text = "% bip\n1 10\n1 11\n2 10\n2 11\n2 12 5 99\n3 11\n";
        let s = read_stream(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(s.edges.len(), 6);
        assert_eq!(s.stats.nodes(), 6);
        assert_eq!(s.stats.max_degree, 3);
        assert_eq!(s.u_labels, vec![1, 2, 3]);
        assert_eq!(s.v_labels, vec![10, 11, 12]);
        assert_eq!(s.edges[0], EdgeKey::new(0, 0));
    }

    #[test]
    fn skips_comments_and_counts_duplicates() {
        let text = "# hash comment\n% pct comment\n\n1 2\n1 2\n3 4\n";
        let s = read_stream(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(s.edges.len(), 2);
        assert_eq!(s.stats.duplicates, 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = read_stream("1 2\n3\n".as_bytes(), Path::new("f.edges")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = read_stream(RUNNING.as_bytes(), Path::new("f.edges")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_input() {
        let s = read_stream("".as_bytes(), Path::new("mem")).unwrap();
        assert!(s.edges.is_empty());
        assert_eq!(s.stats.edges, 0);
    }

    #[test]
    fn synth_complete_graph() {
        let e = synth_bipartite(SynthParams {
            n_u: 4,
            n_v: 5,
            edges: 20,
            degree_exponent: 1.0,
            seed: 3,
        })
        .unwrap();
        let set: FxHashSet<EdgeKey> = e.iter().copied().collect();
        assert_eq!(set.len(), 20);
    }

    #[test]
    fn synth_deterministic_and_unique() {
        let p = SynthParams {
            n_u: 300,
            n_v: 200,
            edges: 3000,
            degree_exponent: 1.0,
            seed: 11,
        };
        let a = synth_bipartite(p).unwrap();
        let b = synth_bipartite(p).unwrap();
        assert_eq!(a, b);
        let set: FxHashSet<EdgeKey> = a.iter().copied().collect();
        assert_eq!(set.len(), a.len());
        let mut x = Vec::new();
        let mut y = Vec::new();
        write_edge_list(&mut x, &a, 300, 200).unwrap();
        write_edge_list(&mut y, &b, 300, 200).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn synth_infeasible() {
        let p = SynthParams {
            n_u: 2,
            n_v: 2,
            edges: 5,
            degree_exponent: 1.0,
            seed: 0,
        };
        assert!(matches!(synth_bipartite(p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn write_then_read_round_trip() {
        let edges = synth_bipartite(SynthParams {
            n_u: 50,
            n_v: 40,
            edges: 300,
            degree_exponent: 0.8,
            seed: 2,
        })
        .unwrap();
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &edges, 50, 40).unwrap();
        let s = read_stream(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(s.edges.len(), edges.len());
        assert_eq!(s.stats.duplicates, 0);
    }

    fn small_affiliation(seed: u64) -> AffiliationParams {
        AffiliationParams {
            n_u: 400,
            n_v: 500,
            edges: 4000,
            community_share: 0.2,
            max_community_v: 40.0,
            max_community_u: 10.0,
            ..AffiliationParams::github_like(seed)
        }
    }

    #[test]
    fn affiliation_deterministic_and_unique() {
        let a = synth_affiliation(small_affiliation(5)).unwrap();
        let b = synth_affiliation(small_affiliation(5)).unwrap();
        let c = synth_affiliation(small_affiliation(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 4000);
        let distinct: FxHashSet<EdgeKey> = a.iter().copied().collect();
        assert_eq!(distinct.len(), a.len());
        assert!(a.iter().all(|e| e.u < 400 && e.v < 500));
    }

    #[test]
    fn affiliation_communities_create_overlap() {
        // Compare the largest common-neighbor count with and without communities.
        let max_overlap = |share: f64| {
            let edges = synth_affiliation(AffiliationParams {
                community_share: share,
                u_exponent: 0.0,
                v_exponent: 0.0,
                ..small_affiliation(3)
            })
            .unwrap();
            let mut nbrs: FxHashMap<u64, FxHashSet<u64>> = FxHashMap::default();
            for e in &edges {
                nbrs.entry(e.u).or_default().insert(e.v);
            }
            let lists: Vec<&FxHashSet<u64>> = nbrs.values().collect();
            let mut best = 0;
            for i in 0..lists.len() {
                for j in i + 1..lists.len() {
                    best = best.max(lists[i].intersection(lists[j]).count());
                }
            }
            best
        };
        assert!(max_overlap(0.5) > max_overlap(0.0));
    }

    #[test]
    fn affiliation_infeasible() {
        let mut p = small_affiliation(0);
        p.edges = 400 * 500;
        assert!(matches!(synth_affiliation(p), Err(Error::Infeasible(_))));
        let mut p = small_affiliation(0);
        p.join_probability = 0.0;
        assert!(matches!(synth_affiliation(p), Err(Error::Infeasible(_))));
        let mut p = small_affiliation(0);
        p.community_share = 1.5;
        assert!(matches!(synth_affiliation(p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn calibrated_degree_spread() {
        // Max-to-average degree ratio in the range of real recommendation graphs.
        for seed in 1..=4 {
            let edges = synth_bipartite(SynthParams {
                n_u: 20_000,
                n_v: 20_000,
                edges: 60_000,
                degree_exponent: 1.4,
                seed,
            })
            .unwrap();
            let st = DatasetStats::from_edges(&edges, 0);
            let ratio = st.max_degree as f64 / st.avg_degree;
            assert!((50.0..=500.0).contains(&ratio), "seed {seed}: ratio {ratio}");
        }
    }
}
