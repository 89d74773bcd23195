//! Benchmark problems: OneMax, LeadingOnes, Jump_k, minimum spanning tree and
//! two-bin partition, together with instance generators, the plain-text
//! instance formats, and initialization modes.
//!
//! The optimizers always maximize. MST and Partition are minimization problems,
//! so [`Problem::fitness`] negates their raw value; [`Problem::raw_value`]
//! keeps the natural orientation for reporting.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;

use crate::bitstring::BitString;
use crate::oracles;

/// Partition instances up to this many objects get an exact optimum at load time.
pub const PARTITION_ORACLE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProblemError {
    #[error("jump size k={k} must lie in [2..n/4] for n={n}")]
    JumpRange { n: usize, k: usize },
    #[error("problem size must be positive")]
    EmptyProblem,
    #[error("edge {index} is a loop on vertex {vertex}")]
    LoopEdge { index: usize, vertex: usize },
    #[error("edge {index} duplicates an earlier edge between {a} and {b}")]
    ParallelEdge { index: usize, a: usize, b: usize },
    #[error("edge {index} references vertex {vertex} outside [1..{vertices}]")]
    VertexOutOfRange {
        index: usize,
        vertex: usize,
        vertices: usize,
    },
    #[error("weight at position {index} must be a positive integer")]
    NonPositiveWeight { index: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("fitness values of this instance would overflow 64-bit integers")]
    Overflow,
    #[error("partition weights must be sorted in non-increasing order (position {index})")]
    Unsorted { index: usize },
    #[error("cannot build a simple connected graph with {vertices} vertices and {edges} edges")]
    InfeasibleGraph { vertices: usize, edges: usize },
    #[error("initialization {mode} is not available for {problem}")]
    InitMismatch { mode: String, problem: &'static str },
    #[error("distance {distance} exceeds problem size {n}")]
    DistanceTooLarge { distance: usize, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Jump size `k`, validated against the problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpParams {
    k: usize,
}

impl JumpParams {
    pub fn new(n: usize, k: usize) -> Result<Self, ProblemError> {
        if k < 2 || 4 * k > n {
            return Err(ProblemError::JumpRange { n, k });
        }
        Ok(Self { k })
    }

    pub fn k(self) -> usize {
        self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// 0-based endpoints with `a < b`.
    pub a: usize,
    pub b: usize,
    pub weight: u64,
}

/// A connected simple graph with positive integer edge weights. Edge `i` is
/// selected by bit `i` of a search point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MstInstance {
    vertices: usize,
    edges: Vec<Edge>,
    total_weight: u64,
}

impl MstInstance {
    /// Validates loops, parallel edges, ranges, weights, connectivity and that
    /// the penalty fitness fits into `i64`. Endpoints are 0-based.
    pub fn new(vertices: usize, edges: Vec<(usize, usize, u64)>) -> Result<Self, ProblemError> {
        if vertices == 0 || edges.is_empty() {
            return Err(ProblemError::EmptyProblem);
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut out = Vec::with_capacity(edges.len());
        let mut total: u64 = 0;
        for (index, (a, b, weight)) in edges.into_iter().enumerate() {
            for v in [a, b] {
                if v >= vertices {
                    return Err(ProblemError::VertexOutOfRange {
                        index,
                        vertex: v + 1,
                        vertices,
                    });
                }
            }
            if a == b {
                return Err(ProblemError::LoopEdge {
                    index,
                    vertex: a + 1,
                });
            }
            if weight == 0 {
                return Err(ProblemError::NonPositiveWeight { index });
            }
            let (a, b) = (a.min(b), a.max(b));
            if !seen.insert((a, b)) {
                return Err(ProblemError::ParallelEdge {
                    index,
                    a: a + 1,
                    b: b + 1,
                });
            }
            total = total.checked_add(weight).ok_or(ProblemError::Overflow)?;
            out.push(Edge { a, b, weight });
        }
        let inst = Self {
            vertices,
            edges: out,
            total_weight: total,
        };
        if inst.components(|_| true) != 1 {
            return Err(ProblemError::Disconnected);
        }
        inst.max_fitness().ok_or(ProblemError::Overflow)?;
        Ok(inst)
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `W_max`, the sum of all edge weights.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Upper bound `(W+1)²·n_v + (W+1)·m + W` on the fitness, if representable.
    fn max_fitness(&self) -> Option<i64> {
        let w1 = i64::try_from(self.total_weight).ok()?.checked_add(1)?;
        let n_v = i64::try_from(self.vertices).ok()?;
        let m = i64::try_from(self.edges.len()).ok()?;
        w1.checked_mul(w1)?
            .checked_mul(n_v)?
            .checked_add(w1.checked_mul(m)?)?
            .checked_add(w1 - 1)
    }

    /// The penalty fitness of a spanning subgraph with `components`
    /// components, `edges` edges and total weight `weight`.
    pub fn penalty(&self, components: usize, edges: usize, weight: u64) -> i64 {
        let w1 = self.total_weight as i64 + 1;
        w1 * w1 * components as i64 + w1 * edges as i64 + weight as i64
    }

    /// Connected components of the spanning subgraph made of edges passing
    /// `keep`; isolated vertices count.
    fn components(&self, keep: impl Fn(usize) -> bool) -> usize {
        let mut dsu = Dsu::new(self.vertices);
        let mut comps = self.vertices;
        for (i, e) in self.edges.iter().enumerate() {
            if keep(i) && dsu.union(e.a, e.b) {
                comps -= 1;
            }
        }
        comps
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.vertices, self.edges.len());
        for e in &self.edges {
            s.push_str(&format!("{} {} {}\n", e.a + 1, e.b + 1, e.weight));
        }
        s
    }
}

/// Partition weights, sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionInstance {
    weights: Vec<u64>,
    total: u64,
}

impl PartitionInstance {
    pub fn new(weights: Vec<u64>) -> Result<Self, ProblemError> {
        if weights.is_empty() {
            return Err(ProblemError::EmptyProblem);
        }
        if let Some(index) = weights.iter().position(|&w| w == 0) {
            return Err(ProblemError::NonPositiveWeight { index });
        }
        if let Some(index) = weights.windows(2).position(|w| w[0] < w[1]) {
            return Err(ProblemError::Unsorted { index: index + 1 });
        }
        let total = weights
            .iter()
            .try_fold(0u64, |acc, &w| acc.checked_add(w))
            .filter(|&t| t <= i64::MAX as u64)
            .ok_or(ProblemError::Overflow)?;
        Ok(Self { weights, total })
    }

    /// Sorts the weights before validating.
    pub fn from_unsorted(mut weights: Vec<u64>) -> Result<Self, ProblemError> {
        weights.sort_unstable_by(|a, b| b.cmp(a));
        Self::new(weights)
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn to_text(&self) -> String {
        let ws: Vec<String> = self.weights.iter().map(u64::to_string).collect();
        format!("{}\n{}\n", self.weights.len(), ws.join(" "))
    }
}

pub fn evaluate_onemax(x: &BitString) -> i64 {
    x.count_ones() as i64
}

pub fn evaluate_leadingones(x: &BitString) -> i64 {
    x.leading_ones() as i64
}

/// `OM(x) + k` on `[0..n-k] ∪ {n}`, `n - OM(x)` inside the valley.
pub fn evaluate_jump(x: &BitString, k: usize) -> i64 {
    let n = x.len();
    let om = x.count_ones();
    if om + k <= n || om == n {
        (om + k) as i64
    } else {
        (n - om) as i64
    }
}

/// `(W+1)²·cc(G') + (W+1)·|E'| + Σ_{e∈E'} w(e)`, to be minimized.
pub fn evaluate_mst(x: &BitString, inst: &MstInstance) -> i64 {
    assert_eq!(x.len(), inst.edge_count(), "one bit per edge");
    let mut dsu = Dsu::new(inst.vertices);
    let mut comps = inst.vertices;
    let mut count = 0;
    let mut weight = 0;
    for i in x.ones_positions() {
        let e = inst.edges[i];
        count += 1;
        weight += e.weight;
        if dsu.union(e.a, e.b) {
            comps -= 1;
        }
    }
    inst.penalty(comps, count, weight)
}

/// Weight of the heavier bin; bit `i` set puts object `i` into the first bin.
pub fn evaluate_partition(x: &BitString, inst: &PartitionInstance) -> i64 {
    assert_eq!(x.len(), inst.len(), "one bit per object");
    let first: u64 = x.ones_positions().into_iter().map(|i| inst.weights[i]).sum();
    first.max(inst.total - first) as i64
}

/// A benchmark problem ready for optimization.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    OneMax {
        n: usize,
    },
    LeadingOnes {
        n: usize,
    },
    Jump {
        n: usize,
        params: JumpParams,
    },
    Mst {
        instance: Arc<MstInstance>,
        /// Raw fitness of a minimum spanning tree.
        optimum: i64,
    },
    Partition {
        instance: Arc<PartitionInstance>,
        /// Raw optimum, known for small instances only.
        optimum: Option<i64>,
    },
}

impl Problem {
    pub fn onemax(n: usize) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::EmptyProblem);
        }
        Ok(Problem::OneMax { n })
    }

    pub fn leadingones(n: usize) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::EmptyProblem);
        }
        Ok(Problem::LeadingOnes { n })
    }

    pub fn jump(n: usize, k: usize) -> Result<Self, ProblemError> {
        Ok(Problem::Jump {
            n,
            params: JumpParams::new(n, k)?,
        })
    }

    pub fn mst(instance: MstInstance) -> Self {
        let tree = oracles::kruskal_mst_weight(&instance);
        let optimum = instance.penalty(1, instance.vertices - 1, tree);
        Problem::Mst {
            instance: Arc::new(instance),
            optimum,
        }
    }

    pub fn partition(instance: PartitionInstance) -> Self {
        let optimum = if instance.len() <= PARTITION_ORACLE_LIMIT {
            oracles::partition_optimum(&instance).ok().map(|v| v as i64)
        } else {
            None
        };
        Problem::Partition {
            instance: Arc::new(instance),
            optimum,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::OneMax { .. } => "onemax",
            Problem::LeadingOnes { .. } => "leadingones",
            Problem::Jump { .. } => "jump",
            Problem::Mst { .. } => "mst",
            Problem::Partition { .. } => "partition",
        }
    }

    /// Length of the search-point bit string.
    pub fn dimension(&self) -> usize {
        match self {
            Problem::OneMax { n } | Problem::LeadingOnes { n } | Problem::Jump { n, .. } => *n,
            Problem::Mst { instance, .. } => instance.edge_count(),
            Problem::Partition { instance, .. } => instance.len(),
        }
    }

    pub fn jump_k(&self) -> Option<usize> {
        match self {
            Problem::Jump { params, .. } => Some(params.k()),
            _ => None,
        }
    }

    pub fn is_minimization(&self) -> bool {
        matches!(self, Problem::Mst { .. } | Problem::Partition { .. })
    }

    /// Value in the problem's natural orientation.
    pub fn raw_value(&self, x: &BitString) -> i64 {
        match self {
            Problem::OneMax { .. } => evaluate_onemax(x),
            Problem::LeadingOnes { .. } => evaluate_leadingones(x),
            Problem::Jump { params, .. } => evaluate_jump(x, params.k()),
            Problem::Mst { instance, .. } => evaluate_mst(x, instance),
            Problem::Partition { instance, .. } => evaluate_partition(x, instance),
        }
    }

    /// Value to be maximized.
    #[inline]
    pub fn fitness(&self, x: &BitString) -> i64 {
        self.orient(self.raw_value(x))
    }

    /// Converts between raw values and maximized fitness (an involution).
    #[inline]
    pub fn orient(&self, value: i64) -> i64 {
        if self.is_minimization() {
            -value
        } else {
            value
        }
    }

    /// Raw optimal value, when known.
    pub fn optimum_raw(&self) -> Option<i64> {
        match self {
            Problem::OneMax { n } | Problem::LeadingOnes { n } => Some(*n as i64),
            Problem::Jump { n, params } => Some((n + params.k()) as i64),
            Problem::Mst { optimum, .. } => Some(*optimum),
            Problem::Partition { optimum, .. } => *optimum,
        }
    }

    /// Optimal maximized fitness, when known.
    pub fn optimal_fitness(&self) -> Option<i64> {
        self.optimum_raw().map(|v| self.orient(v))
    }

    pub fn is_optimal_fitness(&self, fitness: i64) -> bool {
        self.optimal_fitness() == Some(fitness)
    }

    pub fn is_optimal(&self, x: &BitString) -> bool {
        self.is_optimal_fitness(self.fitness(x))
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.jump_k() {
            Some(k) => write!(f, "{}(n={}, k={k})", self.name(), self.dimension()),
            None => write!(f, "{}(n={})", self.name(), self.dimension()),
        }
    }
}

/// How the first search point is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    UniformRandom,
    /// Exactly `n - k` one-bits (Jump only).
    JumpLocalOptimum,
    /// Exactly `n - d` one-bits (problems optimized by the all-ones string).
    FixedDistance(usize),
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitMode::UniformRandom => f.write_str("uniform"),
            InitMode::JumpLocalOptimum => f.write_str("local_optimum"),
            InitMode::FixedDistance(d) => write!(f, "distance:{d}"),
        }
    }
}

impl InitMode {
    /// Checks the mode against a problem without drawing anything.
    pub fn check(self, problem: &Problem) -> Result<(), ProblemError> {
        let n = problem.dimension();
        match self {
            InitMode::UniformRandom => Ok(()),
            InitMode::JumpLocalOptimum => match problem {
                Problem::Jump { .. } => Ok(()),
                _ => Err(ProblemError::InitMismatch {
                    mode: self.to_string(),
                    problem: problem.name(),
                }),
            },
            InitMode::FixedDistance(d) => match problem {
                Problem::OneMax { .. } | Problem::LeadingOnes { .. } | Problem::Jump { .. } => {
                    if d > n {
                        Err(ProblemError::DistanceTooLarge { distance: d, n })
                    } else {
                        Ok(())
                    }
                }
                _ => Err(ProblemError::InitMismatch {
                    mode: self.to_string(),
                    problem: problem.name(),
                }),
            },
        }
    }
}

pub fn init_point<R: Rng + ?Sized>(
    mode: InitMode,
    problem: &Problem,
    rng: &mut R,
) -> Result<BitString, ProblemError> {
    mode.check(problem)?;
    let n = problem.dimension();
    let zeros = match mode {
        InitMode::UniformRandom => return Ok(BitString::random(n, rng)),
        InitMode::JumpLocalOptimum => problem.jump_k().expect("checked"),
        InitMode::FixedDistance(d) => d,
    };
    let mut x = BitString::ones(n);
    for i in index::sample(rng, n, zeros) {
        x.flip(i);
    }
    Ok(x)
}

/// A random connected simple graph: a random recursive spanning tree plus
/// distinct extra edges, weights uniform in `[1..max_weight]`, edge order
/// shuffled.
pub fn gen_random_mst_instance<R: Rng + ?Sized>(
    vertices: usize,
    edges: usize,
    max_weight: u64,
    rng: &mut R,
) -> Result<MstInstance, ProblemError> {
    let possible = vertices.saturating_mul(vertices.saturating_sub(1)) / 2;
    if vertices < 2 || edges + 1 < vertices || edges > possible {
        return Err(ProblemError::InfeasibleGraph { vertices, edges });
    }
    if max_weight == 0 {
        return Err(ProblemError::NonPositiveWeight { index: 0 });
    }
    let order: Vec<usize> = index::sample(rng, vertices, vertices).into_vec();
    let mut chosen = std::collections::HashSet::new();
    for i in 1..vertices {
        let parent = order[rng.random_range(0..i)];
        let (a, b) = (order[i].min(parent), order[i].max(parent));
        chosen.insert((a, b));
    }
    let mut rest: Vec<(usize, usize)> = (0..vertices)
        .flat_map(|a| (a + 1..vertices).map(move |b| (a, b)))
        .filter(|p| !chosen.contains(p))
        .collect();
    rest.sort_unstable();
    let extra = edges - (vertices - 1);
    let mut pairs: Vec<(usize, usize)> = chosen.into_iter().collect();
    pairs.sort_unstable();
    pairs.extend(index::sample(rng, rest.len(), extra).into_iter().map(|i| rest[i]));
    let perm = index::sample(rng, pairs.len(), pairs.len());
    let list = perm
        .into_iter()
        .map(|i| {
            let (a, b) = pairs[i];
            (a, b, rng.random_range(1..=max_weight))
        })
        .collect();
    MstInstance::new(vertices, list)
}

/// `n` weights uniform in `[1..max_weight]`, sorted non-increasing.
pub fn gen_random_partition_instance<R: Rng + ?Sized>(
    n: usize,
    max_weight: u64,
    rng: &mut R,
) -> Result<PartitionInstance, ProblemError> {
    if max_weight == 0 {
        return Err(ProblemError::NonPositiveWeight { index: 0 });
    }
    let ws = (0..n).map(|_| rng.random_range(1..=max_weight)).collect();
    PartitionInstance::from_unsorted(ws)
}

/// A problem instance stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Mst(MstInstance),
    Partition(PartitionInstance),
}

impl Instance {
    /// Detects the format from the header line: two integers for MST, one for
    /// Partition.
    pub fn parse(text: &str) -> Result<Self, ProblemError> {
        let mut lines = content_lines(text);
        let (line, header) = lines.next().ok_or(ProblemError::Parse {
            line: 1,
            message: "empty instance file".into(),
        })?;
        let head = parse_numbers(line, header)?;
        match head.len() {
            2 => parse_mst(line, &head, lines).map(Instance::Mst),
            1 => parse_partition(line, head[0], lines).map(Instance::Partition),
            _ => Err(ProblemError::Parse {
                line,
                message: "header must be \"n_v m\" (MST) or \"n\" (partition)".into(),
            }),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Instance::Mst(m) => m.to_text(),
            Instance::Partition(p) => p.to_text(),
        }
    }

    pub fn into_problem(self) -> Problem {
        match self {
            Instance::Mst(m) => Problem::mst(m),
            Instance::Partition(p) => Problem::partition(p),
        }
    }
}

pub fn load_instance(path: &Path) -> Result<Instance, ProblemError> {
    let text = fs::read_to_string(path).map_err(|e| ProblemError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Instance::parse(&text)
}

pub fn save_instance(instance: &Instance, path: &Path) -> Result<(), ProblemError> {
    fs::write(path, instance.to_text()).map_err(|e| ProblemError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_numbers(line: usize, s: &str) -> Result<Vec<u64>, ProblemError> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<u64>().map_err(|_| ProblemError::Parse {
                line,
                message: format!("expected a non-negative integer, found {tok:?}"),
            })
        })
        .collect()
}

fn parse_mst<'a>(
    header_line: usize,
    head: &[u64],
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<MstInstance, ProblemError> {
    let (vertices, m) = (head[0] as usize, head[1] as usize);
    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::new();
    let mut last_line = header_line;
    for (line, text) in lines {
        last_line = line;
        if edges.len() == m {
            return Err(ProblemError::Parse {
                line,
                message: format!("more than the declared {m} edges"),
            });
        }
        let nums = parse_numbers(line, text)?;
        let bad = |message: String| ProblemError::Parse { line, message };
        if nums.len() != 3 {
            return Err(bad("edge line must be \"a b w\"".into()));
        }
        let (a, b, w) = (nums[0] as usize, nums[1] as usize, nums[2]);
        if a == b {
            return Err(bad(format!("loop edge on vertex {a}")));
        }
        if a >= b {
            return Err(bad(format!("endpoints must satisfy a < b, got {a} {b}")));
        }
        if a == 0 || b > vertices {
            return Err(bad(format!("vertex index outside [1..{vertices}]")));
        }
        if w == 0 {
            return Err(bad("edge weight must be at least 1".into()));
        }
        if !seen.insert((a, b)) {
            return Err(bad(format!("duplicate edge {a} {b}")));
        }
        edges.push((a - 1, b - 1, w));
    }
    if edges.len() != m {
        return Err(ProblemError::Parse {
            line: last_line,
            message: format!("expected {m} edges, found {}", edges.len()),
        });
    }
    MstInstance::new(vertices, edges).map_err(|e| ProblemError::Parse {
        line: header_line,
        message: e.to_string(),
    })
}

fn parse_partition<'a>(
    header_line: usize,
    n: u64,
    mut lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<PartitionInstance, ProblemError> {
    let (line, text) = lines.next().ok_or(ProblemError::Parse {
        line: header_line + 1,
        message: "missing weight line".into(),
    })?;
    let weights = parse_numbers(line, text)?;
    if weights.len() as u64 != n {
        return Err(ProblemError::Parse {
            line,
            message: format!("expected {n} weights, found {}", weights.len()),
        });
    }
    if let Some((extra, _)) = lines.next() {
        return Err(ProblemError::Parse {
            line: extra,
            message: "unexpected content after the weight line".into(),
        });
    }
    PartitionInstance::new(weights).map_err(|e| ProblemError::Parse {
        line,
        message: e.to_string(),
    })
}

/// Minimal union–find with path halving.
pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Returns `true` if the two sets were distinct.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
