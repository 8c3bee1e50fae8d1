//! Formulation symmetries of binary programs.
//!
//! A program is encoded as a colored bipartite graph: one node per variable
//! (colored by its objective coefficient), one node per constraint (colored
//! by relation and right-hand side), and an edge per nonzero matrix entry
//! colored by the coefficient. Variable permutations that extend to a
//! color-preserving automorphism of this graph are exactly the permutations
//! that fix the objective and map the constraint multiset onto itself.
//!
//! [`find_generators`] runs an individualization-refinement search over the
//! graph; [`brute_force_automorphisms`] enumerates permutations directly and
//! serves as an oracle for small programs.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{BinaryProgram, Relation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmetryError {
    #[error("permutation acts on {got} points, program has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("mapping is not a bijection on 1..={0}")]
    NotBijection(usize),
    #[error("{n} variables exceeds the brute-force limit of {max}")]
    TooManyVariables { n: usize, max: usize },
}

/// Permutation of variables `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    // 0-based images
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n).collect(),
        }
    }

    /// From 1-based images: `images[i - 1] = σ(i)`.
    pub fn from_images(images: &[usize]) -> Result<Self, SymmetryError> {
        let n = images.len();
        let zero_based: Vec<usize> = images.iter().map(|&v| v.wrapping_sub(1)).collect();
        Self::from_zero_based(zero_based).ok_or(SymmetryError::NotBijection(n))
    }

    fn from_zero_based(images: Vec<usize>) -> Option<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return None;
            }
        }
        Some(Permutation { images })
    }

    /// Builds from disjoint 1-based cycles, e.g. `&[&[1, 2], &[3, 5, 4]]`.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self, SymmetryError> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut touched = vec![false; n];
        for cycle in cycles {
            for (i, &a) in cycle.iter().enumerate() {
                let b = cycle[(i + 1) % cycle.len()];
                if a == 0 || a > n || b == 0 || b > n || std::mem::replace(&mut touched[a - 1], true) {
                    return Err(SymmetryError::NotBijection(n));
                }
                images[a - 1] = b - 1;
            }
        }
        Self::from_zero_based(images).ok_or(SymmetryError::NotBijection(n))
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self, SymmetryError> {
        Self::from_cycles(n, &[&[a, b]])
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// σ(var), 1-based.
    pub fn image(&self, var: usize) -> usize {
        self.images[var - 1] + 1
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            images: other.images.iter().map(|&v| self.images[v]).collect(),
        }
    }

    /// Nontrivial cycles, 1-based, each starting at its smallest point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] || self.images[start] == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut p = start;
            while !seen[p] {
                seen[p] = true;
                cycle.push(p + 1);
                p = self.images[p];
            }
            out.push(cycle);
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("()");
        }
        for c in cycles {
            let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

/// Variable–constraint incidence graph with node and edge colors.
///
/// Nodes `0..num_vars` are variables, `num_vars..` are constraints. Colors are
/// ranks of the sorted distinct values, and variable colors are always below
/// constraint colors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredGraph {
    num_vars: usize,
    num_cons: usize,
    colors: Vec<u32>,
    // sorted by (neighbor, edge color)
    adj: Vec<Vec<(usize, u32)>>,
}

fn ranks<T: Ord + Clone>(values: &[T]) -> Vec<u32> {
    let distinct: Vec<T> = values.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    values
        .iter()
        .map(|v| distinct.binary_search(v).expect("value present") as u32)
        .collect()
}

pub fn build_colored_graph(bp: &BinaryProgram) -> ColoredGraph {
    let n = bp.num_vars();
    let m = bp.constraints().len();
    let var_colors = ranks(&bp.dense_objective());
    let var_palette = var_colors.iter().max().map_or(0, |&c| c + 1);
    let cons_keys: Vec<(Relation, i64)> = bp.constraints().iter().map(|c| (c.relation(), c.rhs())).collect();
    let cons_colors = ranks(&cons_keys);

    let coefs: Vec<i64> = bp
        .constraints()
        .iter()
        .flat_map(|c| c.terms().iter().map(|t| t.0))
        .collect();
    let edge_colors = ranks(&coefs);

    let mut adj = vec![Vec::new(); n + m];
    let mut e = 0;
    for (j, con) in bp.constraints().iter().enumerate() {
        for &(_, var) in con.terms() {
            let color = edge_colors[e];
            e += 1;
            adj[var - 1].push((n + j, color));
            adj[n + j].push((var - 1, color));
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
    }
    let colors = var_colors
        .into_iter()
        .chain(cons_colors.into_iter().map(|c| c + var_palette))
        .collect();
    ColoredGraph {
        num_vars: n,
        num_cons: m,
        colors,
        adj,
    }
}

impl ColoredGraph {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.num_cons
    }

    pub fn num_nodes(&self) -> usize {
        self.colors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj[..self.num_vars].iter().map(Vec::len).sum()
    }

    /// Initial node colors.
    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    /// `(neighbor, edge color)` pairs of `node`.
    pub fn neighbors(&self, node: usize) -> &[(usize, u32)] {
        &self.adj[node]
    }

    /// Iterated color refinement to a fixpoint. A node's signature is its
    /// color plus the multiset of `(edge color, neighbor color)`; new colors
    /// are ranks of signatures, so cells only split and numbering is
    /// isomorphism-invariant.
    pub fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let mut cells = count_cells(&colors);
        loop {
            let signatures: Vec<(u32, Vec<(u32, u32)>)> = (0..colors.len())
                .map(|v| {
                    let mut nb: Vec<(u32, u32)> = self.adj[v].iter().map(|&(u, ec)| (ec, colors[u])).collect();
                    nb.sort_unstable();
                    (colors[v], nb)
                })
                .collect();
            let next = ranks(&signatures);
            let next_cells = count_cells(&next);
            colors = next;
            if next_cells == cells {
                return colors;
            }
            cells = next_cells;
        }
    }

    fn individualize(&self, colors: &[u32], v: usize) -> Vec<u32> {
        let keyed: Vec<(u32, bool)> = colors.iter().enumerate().map(|(u, &c)| (c, u != v)).collect();
        self.refine(ranks(&keyed))
    }

    /// True when the node mapping preserves node colors, edges and edge colors.
    fn is_automorphism(&self, map: &[usize]) -> bool {
        for u in 0..self.num_nodes() {
            let img = map[u];
            if self.colors[u] != self.colors[img] || self.adj[u].len() != self.adj[img].len() {
                return false;
            }
            let mut mapped: Vec<(usize, u32)> = self.adj[u].iter().map(|&(w, ec)| (map[w], ec)).collect();
            mapped.sort_unstable();
            if mapped != self.adj[img] {
                return false;
            }
        }
        true
    }
}

fn count_cells(colors: &[u32]) -> usize {
    colors.iter().collect::<HashSet<_>>().len()
}

fn cell_sizes(colors: &[u32]) -> Vec<usize> {
    let mut sizes = vec![0; colors.len()];
    for &c in colors {
        sizes[c as usize] += 1;
    }
    sizes
}

/// First non-singleton cell (lowest color), as ascending node list.
fn target_cell(colors: &[u32]) -> Option<Vec<usize>> {
    let sizes = cell_sizes(colors);
    let color = sizes.iter().position(|&s| s > 1)? as u32;
    Some((0..colors.len()).filter(|&u| colors[u] == color).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryReport {
    /// Non-identity generators restricted to the variables.
    pub generators: Vec<Permutation>,
    pub generator_count: usize,
    /// Orbits of the generated group on `1..=n`, each ascending, ordered by
    /// smallest element.
    pub orbit_partition: Vec<Vec<usize>>,
    pub search_nodes: u64,
    pub timed_out: bool,
}

#[derive(Serialize)]
struct SymmetryJson {
    generators: Vec<String>,
    generator_count: usize,
    orbit_sizes: Vec<usize>,
    nontrivial_orbits: usize,
    search_nodes: u64,
    timed_out: bool,
}

impl SymmetryReport {
    pub fn to_json(&self) -> String {
        let mut orbit_sizes: Vec<usize> = self.orbit_partition.iter().map(Vec::len).collect();
        orbit_sizes.sort_unstable_by(|a, b| b.cmp(a));
        let json = SymmetryJson {
            generators: self.generators.iter().map(|g| g.to_string()).collect(),
            generator_count: self.generator_count,
            nontrivial_orbits: orbit_sizes.iter().filter(|&&s| s > 1).count(),
            orbit_sizes,
            search_nodes: self.search_nodes,
            timed_out: self.timed_out,
        };
        serde_json::to_string_pretty(&json).expect("report serializes")
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

struct Search<'g> {
    graph: &'g ColoredGraph,
    budget: u64,
    nodes: u64,
    exhausted: bool,
    /// cell sizes along the first path, per depth
    profiles: Vec<Vec<usize>>,
    /// node with color `c` in the first leaf
    first_leaf: Vec<u32>,
}

impl Search<'_> {
    fn charge(&mut self) -> bool {
        if self.nodes >= self.budget {
            self.exhausted = true;
            return false;
        }
        self.nodes += 1;
        true
    }

    /// Looks for a leaf below `colors` (at `depth`) that maps the first leaf
    /// onto the graph by an automorphism.
    fn descend(&mut self, colors: &[u32], depth: usize) -> Option<Vec<usize>> {
        if cell_sizes(colors) != self.profiles[depth] {
            return None;
        }
        let Some(cell) = target_cell(colors) else {
            let mut node_of_color = vec![0; colors.len()];
            for (u, &c) in colors.iter().enumerate() {
                node_of_color[c as usize] = u;
            }
            let map: Vec<usize> = self.first_leaf.iter().map(|&c| node_of_color[c as usize]).collect();
            return self.graph.is_automorphism(&map).then_some(map);
        };
        if depth + 1 >= self.profiles.len() {
            return None;
        }
        for x in cell {
            if !self.charge() {
                return None;
            }
            let child = self.graph.individualize(colors, x);
            if let Some(map) = self.descend(&child, depth + 1) {
                return Some(map);
            }
            if self.exhausted {
                return None;
            }
        }
        None
    }
}

/// Individualization-refinement automorphism search.
///
/// Follows a first path (always individualizing the smallest vertex of the
/// first non-singleton cell), then, from the deepest level up, tries every
/// other vertex of each level's target cell that is not already in a known
/// orbit. `budget` caps the number of refined search nodes; on exhaustion
/// the generators found so far are returned with `timed_out` set.
pub fn find_generators(g: &ColoredGraph, budget: u64) -> SymmetryReport {
    let budget = budget.max(1);
    let mut search = Search {
        graph: g,
        budget,
        nodes: 0,
        exhausted: false,
        profiles: Vec::new(),
        first_leaf: Vec::new(),
    };
    let n = g.num_nodes();
    // (coloring at this depth, target cell)
    let mut path: Vec<(Vec<u32>, Vec<usize>)> = Vec::new();
    let mut found: Vec<Vec<usize>> = Vec::new();

    let mut current = if search.charge() {
        Some(g.refine(g.colors.clone()))
    } else {
        None
    };
    while let Some(colors) = current.take() {
        search.profiles.push(cell_sizes(&colors));
        match target_cell(&colors) {
            None => search.first_leaf = colors,
            Some(cell) => {
                if search.charge() {
                    current = Some(g.individualize(&colors, cell[0]));
                }
                path.push((colors, cell));
            }
        }
    }

    let mut orbits = UnionFind::new(n);
    if !search.exhausted {
        'levels: for (depth, (colors, cell)) in path.iter().enumerate().rev() {
            let v = cell[0];
            let mut failed: Vec<usize> = Vec::new();
            for &w in &cell[1..] {
                let rw = orbits.find(w);
                if rw == orbits.find(v) || failed.iter().any(|&f| orbits.find(f) == rw) {
                    continue;
                }
                if !search.charge() {
                    break 'levels;
                }
                let child = g.individualize(colors, w);
                match search.descend(&child, depth + 1) {
                    Some(map) => {
                        for (a, &b) in map.iter().enumerate() {
                            orbits.union(a, b);
                        }
                        found.push(map);
                    }
                    None if search.exhausted => break 'levels,
                    None => failed.push(w),
                }
            }
        }
    }

    let nv = g.num_vars();
    let generators: Vec<Permutation> = found
        .iter()
        .map(|map| Permutation {
            images: map[..nv].to_vec(),
        })
        .filter(|p| !p.is_identity())
        .collect();
    let orbit_partition = orbit_partition(&generators, nv);
    SymmetryReport {
        generator_count: generators.len(),
        generators,
        orbit_partition,
        search_nodes: search.nodes,
        timed_out: search.exhausted,
    }
}

/// Orbits of the group generated by `generators` on `1..=n`.
pub fn orbit_partition(generators: &[Permutation], n: usize) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    for g in generators {
        for (a, &b) in g.images.iter().enumerate().take(n) {
            uf.union(a, b);
        }
    }
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut cell_of_root: HashMap<usize, usize> = HashMap::new();
    for v in 0..n {
        let r = uf.find(v);
        let idx = *cell_of_root.entry(r).or_insert_with(|| {
            cells.push(Vec::new());
            cells.len() - 1
        });
        cells[idx].push(v + 1);
    }
    cells
}

type ConstraintKey = (Relation, i64, Vec<(usize, i64)>);

/// True iff `sigma` fixes the objective (`c_σ(i) = c_i`) and maps the
/// constraint multiset onto itself.
pub fn verify_symmetry(bp: &BinaryProgram, sigma: &Permutation) -> Result<bool, SymmetryError> {
    if sigma.len() != bp.num_vars() {
        return Err(SymmetryError::LengthMismatch {
            expected: bp.num_vars(),
            got: sigma.len(),
        });
    }
    for var in 1..=bp.num_vars() {
        if bp.coefficient(sigma.image(var)) != bp.coefficient(var) {
            return Ok(false);
        }
    }
    let mut balance: HashMap<ConstraintKey, i64> = HashMap::new();
    for con in bp.constraints() {
        let original: Vec<(usize, i64)> = con.terms().iter().map(|&(c, v)| (v, c)).collect();
        let mut permuted: Vec<(usize, i64)> = con.terms().iter().map(|&(c, v)| (sigma.image(v), c)).collect();
        permuted.sort_unstable();
        *balance.entry((con.relation(), con.rhs(), original)).or_insert(0) += 1;
        *balance.entry((con.relation(), con.rhs(), permuted)).or_insert(0) -= 1;
    }
    Ok(balance.values().all(|&b| b == 0))
}

/// Default variable limit for [`brute_force_automorphisms`].
pub const BRUTE_FORCE_MAX_VARS: usize = 12;

/// Every non-identity permutation that keeps objective coefficients within
/// their value class and passes [`verify_symmetry`], in lexicographic order
/// of image vectors.
pub fn brute_force_automorphisms(bp: &BinaryProgram, max_vars: usize) -> Result<Vec<Permutation>, SymmetryError> {
    let n = bp.num_vars();
    if n > max_vars {
        return Err(SymmetryError::TooManyVariables { n, max: max_vars });
    }
    let c = bp.dense_objective();
    let mut images = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut out = Vec::new();
    enumerate_class_preserving(&c, &mut images, &mut used, &mut |imgs| {
        let p = Permutation { images: imgs.to_vec() };
        if !p.is_identity() && verify_symmetry(bp, &p).expect("length matches") {
            out.push(p);
        }
    });
    Ok(out)
}

fn enumerate_class_preserving(c: &[i64], images: &mut Vec<usize>, used: &mut [bool], visit: &mut impl FnMut(&[usize])) {
    let i = images.len();
    if i == c.len() {
        visit(images);
        return;
    }
    for j in 0..c.len() {
        if !used[j] && c[j] == c[i] {
            used[j] = true;
            images.push(j);
            enumerate_class_preserving(c, images, used, visit);
            images.pop();
            used[j] = false;
        }
    }
}

/// All elements of the group generated by `generators` (identity included),
/// or `None` once more than `limit` elements have been produced.
pub fn group_elements(generators: &[Permutation], n: usize, limit: usize) -> Option<HashSet<Permutation>> {
    let id = Permutation::identity(n);
    let mut seen: HashSet<Permutation> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for g in generators {
            let q = g.compose(&p);
            if seen.insert(q.clone()) {
                if seen.len() > limit {
                    return None;
                }
                queue.push_back(q);
            }
        }
    }
    Some(seen)
}
