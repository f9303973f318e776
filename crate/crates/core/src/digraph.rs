//! Digraph-IFS description of `C ∩ T^{-q}(C)` for `T(x) = m*x mod 1` and the
//! ternary Cantor set `C`.
//!
//! Vertices are the affine maps `g(x) = (x + s)/m^q`; there is an edge
//! `g -> h` labelled by the generator `f_i` (with `f_1 = x/3`,
//! `f_2 = x/3 + 2/3`) whenever `h = f_i^{-1} ∘ g ∘ f_j` for some `j`. Working
//! out the four `(f_i, f_j)` cases gives, in matrix indices
//! `i ∈ {1, …, m^q + 2}` (offset `s = i - 2`), the column rules
//! `3i-2`, `3i-4`, `3i-2m^q-4`, `3i-2m^q-2`. The full matrix over all
//! offsets `s ∈ {-1, …, m^q}` is `N^q`; the reachable, intersection-filtered
//! vertex sets `S^k_q` give the per-offset matrices `M^k_q`, which are
//! principal submatrices of `N^q`.
//!
//! Every entry is 0 or 1 and every row sums to at most 2, so matrices are
//! stored as sparse row lists. The spectral radius of a substitution matrix
//! bounds the box dimension of the corresponding attractor through
//! `dim_B <= log ρ / log 3`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::exact::{cantor_approx, rat, Caps, Rational};

/// Hard cap on substitution-matrix dimension (`m^q + 2`).
pub const MAX_MATRIX_DIM: usize = 2_000_000;

/// Default power-iteration tolerance and iteration cap.
pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 100_000;

/// A Digraph-IFS vertex: the affine map `x -> (x + offset)/denom` with
/// `denom = m^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct AffineVertex {
    pub offset: i64,
    pub denom: u64,
}

impl AffineVertex {
    /// Contraction ratio `1/m^q` as an exact rational.
    pub fn ratio(&self) -> Rational {
        Rational::new(BigInt::from(1), BigInt::from(self.denom))
    }
}

/// One of the two generators of the ternary Cantor set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contraction {
    /// `f_1(x) = x/3`
    LeftThird,
    /// `f_2(x) = x/3 + 2/3`
    RightThird,
}

#[derive(Debug, Clone, Copy)]
pub struct DigraphEdge {
    pub from: u32,
    pub to: u32,
    pub generator: Contraction,
}

/// A Digraph IFS over affine vertices; edges encode `h = f_i^{-1} g f_j`.
#[derive(Debug, Clone)]
pub struct DigraphIfs {
    pub vertices: Vec<AffineVertex>,
    pub edges: Vec<DigraphEdge>,
}

/// Sparse 0/1 substitution matrix with at most two entries per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionMatrix {
    rows: Vec<Vec<u32>>,
    /// Vertex offset labelling each row/column.
    labels: Vec<i64>,
}

impl SubstitutionMatrix {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Columns with a 1 in the given row, ascending.
    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn entry_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// All `(row, col)` positions holding a 1, row-major.
    pub fn entries(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.entry_count());
        for (r, cols) in self.rows.iter().enumerate() {
            for &c in cols {
                out.push((r as u32, c));
            }
        }
        out
    }

    /// Checks the structural lemmas: entries in `{0,1}` (no duplicated
    /// column within a row) and row sums at most 2.
    pub fn satisfies_row_lemmas(&self) -> bool {
        self.rows
            .iter()
            .all(|cols| cols.len() <= 2 && cols.windows(2).all(|w| w[0] < w[1]))
    }

    /// Histogram of row sums `0..=max`.
    pub fn row_sum_histogram(&self) -> Vec<usize> {
        let max = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut hist = vec![0usize; max + 1];
        for cols in &self.rows {
            hist[cols.len()] += 1;
        }
        hist
    }
}

fn pow_dim(m: u32, q: u32) -> Result<u64> {
    if m < 2 || q < 1 {
        return Err(Error::Domain(format!(
            "need m >= 2 and q >= 1, got m={m}, q={q}"
        )));
    }
    let mut p: u64 = 1;
    for _ in 0..q {
        p = p
            .checked_mul(m as u64)
            .ok_or_else(|| Error::ResourceLimit("m^q overflows".into()))?;
        if p as usize + 2 > MAX_MATRIX_DIM {
            return Err(Error::ResourceLimit(format!(
                "matrix dimension m^q + 2 exceeds cap {MAX_MATRIX_DIM}"
            )));
        }
    }
    Ok(p)
}

/// The four successor offsets of `s` (the constants of `f_i^{-1} g f_j` for
/// the four generator pairs), in `(i, j)` order `(1,1), (1,2), (2,1), (2,2)`.
fn successor_offsets(s: i64, mq: i64) -> [(i64, Contraction); 4] {
    [
        (3 * s, Contraction::LeftThird),
        (3 * s + 2, Contraction::LeftThird),
        (3 * s - 2 * mq, Contraction::RightThird),
        (3 * s - 2 * mq + 2, Contraction::RightThird),
    ]
}

/// The full substitution matrix `N^q` of dimension `m^q + 2`: row `i`
/// carries a 1 in the columns `3i-2`, `3i-4`, `3i-2m^q-4`, `3i-2m^q-2`
/// whenever they fall inside `{1, …, m^q + 2}`.
pub fn build_nq(m: u32, q: u32) -> Result<SubstitutionMatrix> {
    let mq = pow_dim(m, q)? as i64;
    let dim = (mq + 2) as usize;
    let mut rows = Vec::with_capacity(dim);
    for i in 1..=(mq + 2) {
        let mut cols = Vec::new();
        for col in [3 * i - 2 * mq - 4, 3 * i - 2 * mq - 2, 3 * i - 4, 3 * i - 2] {
            if (1..=mq + 2).contains(&col) {
                cols.push((col - 1) as u32);
            }
        }
        cols.sort_unstable();
        rows.push(cols);
    }
    let labels = (-1..=mq).collect();
    Ok(SubstitutionMatrix { rows, labels })
}

/// Runs McClure's vertex iteration for the seed `g(x) = (x + k)/m^q`: the
/// closure of `{g}` under `h -> f_i^{-1} h f_j`, keeping a candidate only
/// when `C_d ∩ h(C_d) != ∅` by exact set algebra at the finite filter depth
/// `d`. The result is a superset of the true vertex set that shrinks
/// (weakly) as `d` grows.
pub fn mcclure_vertices(
    m: u32,
    q: u32,
    k: u32,
    filter_depth: u32,
    caps: &Caps,
) -> Result<Vec<AffineVertex>> {
    let mq = pow_dim(m, q)? as i64;
    if (k as i64) >= mq {
        return Err(Error::Domain(format!(
            "seed offset {k} not below m^q = {mq}"
        )));
    }
    if filter_depth < 1 {
        return Err(Error::Domain("filter depth must be at least 1".into()));
    }
    let cantor = cantor_approx(filter_depth, caps)?;
    let ratio = Rational::new(BigInt::from(1), BigInt::from(mq));
    let mut passes = BTreeMap::new();
    let mut passes_filter = |s: i64| -> Result<bool> {
        if let Some(&cached) = passes.get(&s) {
            return Ok(cached);
        }
        let image = cantor.affine_image(&ratio, &(rat(s, 1) * &ratio))?;
        let ok = cantor.touches(&image);
        passes.insert(s, ok);
        Ok(ok)
    };

    let seed = k as i64;
    let mut accepted = BTreeSet::from([seed]);
    let mut queue = VecDeque::from([seed]);
    while let Some(s) = queue.pop_front() {
        if !passes_filter(s)? {
            continue;
        }
        for (succ, _) in successor_offsets(s, mq) {
            if !accepted.contains(&succ) && passes_filter(succ)? {
                accepted.insert(succ);
                queue.push_back(succ);
                if accepted.len() > MAX_MATRIX_DIM {
                    return Err(Error::ResourceLimit("vertex set exceeds matrix cap".into()));
                }
            }
        }
    }
    Ok(accepted
        .into_iter()
        .map(|offset| AffineVertex {
            offset,
            denom: mq as u64,
        })
        .collect())
}

/// Builds the Digraph IFS on the given vertex set: an edge `g -> h`
/// labelled `f_i` whenever `h = f_i^{-1} g f_j` lands inside the set.
pub fn build_digraph(vertices: &[AffineVertex], m: u32, q: u32) -> Result<DigraphIfs> {
    let mq = pow_dim(m, q)? as i64;
    let index: BTreeMap<i64, u32> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.offset, i as u32))
        .collect();
    if index.len() != vertices.len() {
        return Err(Error::Invalid("duplicate vertex offsets".into()));
    }
    let mut edges = Vec::new();
    for (r, v) in vertices.iter().enumerate() {
        for (succ, generator) in successor_offsets(v.offset, mq) {
            if let Some(&c) = index.get(&succ) {
                edges.push(DigraphEdge {
                    from: r as u32,
                    to: c,
                    generator,
                });
            }
        }
    }
    Ok(DigraphIfs {
        vertices: vertices.to_vec(),
        edges,
    })
}

/// The substitution matrix `M^k_q` for a vertex set produced by
/// [`mcclure_vertices`]; label-aligned, it is a principal submatrix of
/// `N^q`.
pub fn build_mqk(vertices: &[AffineVertex], m: u32, q: u32) -> Result<SubstitutionMatrix> {
    let digraph = build_digraph(vertices, m, q)?;
    let mut rows = vec![Vec::new(); vertices.len()];
    for e in &digraph.edges {
        rows[e.from as usize].push(e.to);
    }
    for cols in &mut rows {
        cols.sort_unstable();
        // the same edge can arise from both f_j choices only if the two
        // composites coincide, which the generator offsets rule out; keep
        // the 0/1 semantics regardless
        cols.dedup();
    }
    Ok(SubstitutionMatrix {
        rows,
        labels: vertices.iter().map(|v| v.offset).collect(),
    })
}

/// Spectral radius of a sparse nonnegative 0/1 matrix.
///
/// The matrix is split into strongly connected components; on each
/// component, power iteration runs on `M + I` (the shift makes the block
/// primitive, defeating the eigenvalue periodicity of 0/1 matrices) until
/// the Rayleigh ratio changes by less than `tol` relatively over 10
/// consecutive iterations. The overall radius is the maximum over
/// components.
pub fn spectral_radius(matrix: &SubstitutionMatrix, tol: f64) -> Result<f64> {
    let dim = matrix.dim();
    if dim == 0 {
        return Ok(0.0);
    }
    let sccs = strongly_connected_components(&matrix.rows);
    let mut rho: f64 = 0.0;
    for scc in &sccs {
        if scc.len() == 1 {
            let v = scc[0];
            let has_loop = matrix.rows[v as usize].contains(&v);
            rho = rho.max(if has_loop { 1.0 } else { 0.0 });
            continue;
        }
        rho = rho.max(component_radius(&matrix.rows, scc, tol)?);
    }
    Ok(rho)
}

/// Power iteration on `(M + I)` restricted to one strongly connected
/// component; returns `ρ(M restricted)`.
fn component_radius(rows: &[Vec<u32>], scc: &[u32], tol: f64) -> Result<f64> {
    let n = scc.len();
    let mut local = BTreeMap::new();
    for (i, &v) in scc.iter().enumerate() {
        local.insert(v, i);
    }
    let adj: Vec<Vec<u32>> = scc
        .iter()
        .map(|&v| {
            rows[v as usize]
                .iter()
                .filter_map(|c| local.get(c).map(|&l| l as u32))
                .collect()
        })
        .collect();

    let mut v = vec![1.0f64; n];
    let mut w = vec![0.0f64; n];
    let mut prev_lambda = f64::NAN;
    let mut lambda = f64::NAN;
    let mut settled = 0;
    for _it in 0..SPECTRAL_MAX_ITER {
        let mut dot_vw = 0.0;
        let mut dot_vv = 0.0;
        for i in 0..n {
            let mut acc = v[i]; // the +I shift
            for &c in &adj[i] {
                acc += v[c as usize];
            }
            w[i] = acc;
            dot_vw += v[i] * acc;
            dot_vv += v[i] * v[i];
        }
        prev_lambda = lambda;
        lambda = dot_vw / dot_vv;
        let scale = w.iter().cloned().fold(0.0f64, f64::max);
        for i in 0..n {
            v[i] = w[i] / scale;
        }
        if prev_lambda.is_finite() {
            let rel = (lambda - prev_lambda).abs() / lambda.abs().max(f64::MIN_POSITIVE);
            if rel < tol {
                settled += 1;
                if settled >= 10 {
                    return Ok(lambda - 1.0);
                }
            } else {
                settled = 0;
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: SPECTRAL_MAX_ITER,
        previous: prev_lambda - 1.0,
        last: lambda - 1.0,
    })
}

/// Iterative Tarjan SCC over a sparse adjacency list.
fn strongly_connected_components(rows: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let n = rows.len();
    const UNSET: u32 = u32::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut sccs = Vec::new();
    // explicit DFS frames: (vertex, next child position)
    let mut frames: Vec<(u32, usize)> = Vec::new();

    for start in 0..n as u32 {
        if index[start as usize] != UNSET {
            continue;
        }
        frames.push((start, 0));
        index[start as usize] = next_index;
        low[start as usize] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start as usize] = true;

        loop {
            let (v, next_child) = match frames.last_mut() {
                None => break,
                Some(frame) => {
                    let v = frame.0;
                    if frame.1 < rows[v as usize].len() {
                        let c = rows[v as usize][frame.1];
                        frame.1 += 1;
                        (v, Some(c))
                    } else {
                        (v, None)
                    }
                }
            };
            match next_child {
                Some(c) => {
                    if index[c as usize] == UNSET {
                        index[c as usize] = next_index;
                        low[c as usize] = next_index;
                        next_index += 1;
                        stack.push(c);
                        on_stack[c as usize] = true;
                        frames.push((c, 0));
                    } else if on_stack[c as usize] {
                        low[v as usize] = low[v as usize].min(index[c as usize]);
                    }
                }
                None => {
                    frames.pop();
                    if let Some(parent) = frames.last() {
                        let p = parent.0 as usize;
                        low[p] = low[p].min(low[v as usize]);
                    }
                    if low[v as usize] == index[v as usize] {
                        let mut scc = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack underflow");
                            on_stack[w as usize] = false;
                            scc.push(w);
                            if w == v {
                                break;
                            }
                        }
                        scc.sort_unstable();
                        sccs.push(scc);
                    }
                }
            }
        }
    }
    sccs
}

/// Upper bound on `dim_B(T^{-q}(C) ∩ C)` for `T(x) = m*x mod 1`:
/// `log ρ(N^q) / log 3` after stripping every factor of 3 from `m`
/// (self-similarity reduces `m = 3^k c` to `c`); for `m` an exact power of 3
/// the intersection contains `C` itself and the bound is `log 2 / log 3`.
pub fn dim_bound(m: u32, q: u32) -> Result<f64> {
    if m < 2 || q < 1 {
        return Err(Error::Domain(format!(
            "need m >= 2 and q >= 1, got m={m}, q={q}"
        )));
    }
    let mut c = m;
    while c.is_multiple_of(3) {
        c /= 3;
    }
    if c == 1 {
        return Ok(2f64.ln() / 3f64.ln());
    }
    let nq = build_nq(c, q)?;
    let rho = spectral_radius(&nq, SPECTRAL_TOL)?;
    Ok(rho.max(1.0).ln() / 3f64.ln())
}
