//! Linear minimization `T_X(v) = argmin_{u ∈ X} vᵀu` over one block.
//!
//! Every realization returns the lexicographically smallest minimizer, so
//! repeated queries are reproducible bit for bit.

use std::cmp::Ordering;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::{BlockProblem, BlockSpec, DagPaths};
use crate::scalar::{dot_binary, Scalar};

/// Most points a polyhedral block may enumerate to.
pub const POLYHEDRON_CAP: usize = 1 << 20;
/// Most paths a DAG block may enumerate to.
pub const PATH_CAP: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleAnswer<S> {
    pub x: Vec<bool>,
    pub value: S,
}

pub trait LinearOracle<S: Scalar>: Send + Sync {
    fn dimension(&self) -> usize;

    fn minimize(&self, v: &[S]) -> Result<OracleAnswer<S>>;

    fn contains(&self, u: &[bool]) -> bool;

    /// All points of the set in lexicographic order.
    fn enumerate(&self) -> Result<Vec<Vec<bool>>>;
}

fn check_query<S: Scalar>(n: usize, v: &[S]) -> Result<()> {
    if v.len() != n {
        return Err(Error::Dimension(format!("weight vector has length {}, block has {n}", v.len())));
    }
    if !S::EXACT && v.iter().any(|w| !w.to_f64_lossy().is_finite()) {
        return Err(Error::validation("v", "non-finite weight"));
    }
    Ok(())
}

fn scan<S: Scalar>(points: &[Vec<bool>], v: &[S]) -> Option<OracleAnswer<S>> {
    let mut best: Option<(usize, S)> = None;
    for (i, u) in points.iter().enumerate() {
        let val = dot_binary(v, u);
        if best.as_ref().is_none_or(|(_, b)| val < *b) {
            best = Some((i, val));
        }
    }
    best.map(|(i, value)| OracleAnswer {
        x: points[i].clone(),
        value,
    })
}

/// 0/1 points of `{x : Bx ≤ d}` in lexicographic order, by depth-first
/// search with a row-wise infeasibility bound.
fn enumerate_polyhedron<S: Scalar>(matrix: &[Vec<S>], rhs: &[S], n: usize, cap: usize) -> Result<Vec<Vec<bool>>> {
    let rows = matrix.len();
    // rest_min[i][k]: smallest possible contribution of variables k.. to row i
    let rest_min: Vec<Vec<S>> = matrix
        .iter()
        .map(|row| {
            let mut acc = vec![S::zero(); n + 1];
            for k in (0..n).rev() {
                let neg = if row[k] < S::zero() { row[k].clone() } else { S::zero() };
                acc[k] = acc[k + 1].clone() + neg;
            }
            acc
        })
        .collect();
    let tol = S::feasibility_tolerance();
    let mut out = Vec::new();
    let mut x = vec![false; n];
    let mut partial = vec![S::zero(); rows];

    #[allow(clippy::too_many_arguments)]
    fn dfs<S: Scalar>(
        k: usize,
        matrix: &[Vec<S>],
        rhs: &[S],
        rest_min: &[Vec<S>],
        tol: &S,
        x: &mut Vec<bool>,
        partial: &mut Vec<S>,
        out: &mut Vec<Vec<bool>>,
        cap: usize,
    ) -> Result<()> {
        let viable = (0..rhs.len()).all(|i| partial[i].clone() + rest_min[i][k].clone() <= rhs[i].clone() + tol.clone());
        if !viable {
            return Ok(());
        }
        if k == x.len() {
            if out.len() == cap {
                return Err(Error::CapExceeded { block: None, cap });
            }
            out.push(x.clone());
            return Ok(());
        }
        dfs(k + 1, matrix, rhs, rest_min, tol, x, partial, out, cap)?;
        x[k] = true;
        for (i, row) in matrix.iter().enumerate() {
            partial[i] = partial[i].clone() + row[k].clone();
        }
        dfs(k + 1, matrix, rhs, rest_min, tol, x, partial, out, cap)?;
        x[k] = false;
        for (i, row) in matrix.iter().enumerate() {
            partial[i] = partial[i].clone() - row[k].clone();
        }
        Ok(())
    }

    dfs(0, matrix, rhs, &rest_min, &tol, &mut x, &mut partial, &mut out, cap)?;
    Ok(out)
}

/// Incidence vector packed so that comparing the words lexicographically
/// compares the 0/1 vectors lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct PackedBits(Vec<u64>);

impl PackedBits {
    fn zeros(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }

    fn with(&self, i: usize) -> Self {
        let mut w = self.clone();
        w.0[i / 64] |= 1u64 << (63 - i % 64);
        w
    }

    fn unpack(&self, n: usize) -> Vec<bool> {
        (0..n).map(|i| self.0[i / 64] >> (63 - i % 64) & 1 == 1).collect()
    }
}

fn better<S: Scalar>(a: &(S, PackedBits), b: &(S, PackedBits)) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(Ordering::Less) => true,
        Some(Ordering::Equal) => a.1 < b.1,
        _ => false,
    }
}

#[derive(Debug)]
struct DagSolver {
    dim: usize,
    dag: DagPaths,
    order: Vec<usize>,
    out: Vec<Vec<usize>>,
    paths: OnceLock<Vec<Vec<bool>>>,
}

impl DagSolver {
    fn new(dag: &DagPaths, dim: usize) -> Result<Self> {
        let order = dag.topological_order().ok_or(Error::Cycle { block: 0 })?;
        let mut out = vec![Vec::new(); dag.num_nodes];
        for (i, arc) in dag.arcs.iter().enumerate() {
            out[arc.from].push(i);
        }
        Ok(Self {
            dim,
            dag: dag.clone(),
            order,
            out,
            paths: OnceLock::new(),
        })
    }

    fn shortest<S: Scalar>(&self, v: &[S]) -> Result<OracleAnswer<S>> {
        let mut dist: Vec<Option<(S, PackedBits)>> = vec![None; self.dag.num_nodes];
        dist[self.dag.source] = Some((S::zero(), PackedBits::zeros(self.dim)));
        for &node in &self.order {
            if node == self.dag.sink {
                continue;
            }
            let Some((d, bits)) = dist[node].clone() else { continue };
            for &i in &self.out[node] {
                let arc = &self.dag.arcs[i];
                let cand = (d.clone() + v[arc.var].clone(), bits.with(arc.var));
                if dist[arc.to].as_ref().is_none_or(|cur| better(&cand, cur)) {
                    dist[arc.to] = Some(cand);
                }
            }
        }
        let path = dist[self.dag.sink].take();
        match path {
            Some((cost, bits)) if !(self.dag.include_empty_path && cost >= S::zero()) => Ok(OracleAnswer {
                x: bits.unpack(self.dim),
                value: cost,
            }),
            _ if self.dag.include_empty_path => Ok(OracleAnswer {
                x: vec![false; self.dim],
                value: S::zero(),
            }),
            _ => Err(Error::Infeasible),
        }
    }

    fn enumerate(&self, cap: usize) -> Result<Vec<Vec<bool>>> {
        if let Some(p) = self.paths.get() {
            return Ok(p.clone());
        }
        let mut found: Vec<Vec<bool>> = Vec::new();
        if self.dag.include_empty_path {
            found.push(vec![false; self.dim]);
        }
        // iterative DFS; each frame is (node, next outgoing arc position,
        // arc used to enter the node)
        let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(self.dag.source, 0, None)];
        let mut current = vec![false; self.dim];
        while let Some(frame) = stack.last_mut() {
            let node = frame.0;
            if frame.1 < self.out[node].len() {
                let i = self.out[node][frame.1];
                frame.1 += 1;
                let arc = self.dag.arcs[i];
                current[arc.var] = true;
                if arc.to == self.dag.sink {
                    if found.len() == cap {
                        return Err(Error::CapExceeded { block: None, cap });
                    }
                    found.push(current.clone());
                    current[arc.var] = false;
                } else {
                    stack.push((arc.to, 0, Some(i)));
                }
            } else {
                if let Some(i) = frame.2 {
                    current[self.dag.arcs[i].var] = false;
                }
                stack.pop();
            }
        }
        found.sort();
        let _ = self.paths.set(found.clone());
        Ok(found)
    }
}

/// Oracle for one block.
#[derive(Debug)]
pub enum BlockOracle<S> {
    /// Explicit sorted list of points, scanned linearly.
    Table { dim: usize, points: Vec<Vec<bool>>, spec: BlockSpec<S> },
    /// Shortest path in topological order.
    Dag(DagSolverHandle),
}

/// Opaque DAG solver state.
#[derive(Debug)]
pub struct DagSolverHandle(DagSolver);

impl<S: Scalar> BlockOracle<S> {
    pub fn new(spec: &BlockSpec<S>, dim: usize) -> Result<Self> {
        match spec {
            BlockSpec::Polyhedron { matrix, rhs } => Ok(BlockOracle::Table {
                dim,
                points: enumerate_polyhedron(matrix, rhs, dim, POLYHEDRON_CAP)?,
                spec: spec.clone(),
            }),
            BlockSpec::Points(points) => {
                let mut points = points.clone();
                points.sort();
                points.dedup();
                Ok(BlockOracle::Table {
                    dim,
                    points,
                    spec: spec.clone(),
                })
            }
            BlockSpec::Dag(dag) => Ok(BlockOracle::Dag(DagSolverHandle(DagSolver::new(dag, dim)?))),
        }
    }
}

impl<S: Scalar> LinearOracle<S> for BlockOracle<S> {
    fn dimension(&self) -> usize {
        match self {
            BlockOracle::Table { dim, .. } => *dim,
            BlockOracle::Dag(h) => h.0.dim,
        }
    }

    fn minimize(&self, v: &[S]) -> Result<OracleAnswer<S>> {
        check_query(self.dimension(), v)?;
        match self {
            BlockOracle::Table { points, .. } => scan(points, v).ok_or(Error::Infeasible),
            BlockOracle::Dag(h) => h.0.shortest(v),
        }
    }

    fn contains(&self, u: &[bool]) -> bool {
        u.len() == self.dimension()
            && match self {
                BlockOracle::Table { spec, .. } => spec.contains(u),
                BlockOracle::Dag(h) => h.0.dag.contains(u),
            }
    }

    fn enumerate(&self) -> Result<Vec<Vec<bool>>> {
        match self {
            BlockOracle::Table { points, .. } => Ok(points.clone()),
            BlockOracle::Dag(h) => h.0.enumerate(PATH_CAP),
        }
    }
}

/// One-shot query against a descriptor.
pub fn minimize_linear<S: Scalar>(spec: &BlockSpec<S>, dim: usize, v: &[S]) -> Result<OracleAnswer<S>> {
    BlockOracle::new(spec, dim)?.minimize(v)
}

/// Every point of the block in lexicographic order, zero vector included.
pub fn enumerate_feasible<S: Scalar>(spec: &BlockSpec<S>, dim: usize) -> Result<Vec<Vec<bool>>> {
    BlockOracle::new(spec, dim)?.enumerate()
}

pub fn build_oracles<S: Scalar>(problem: &BlockProblem<S>) -> Result<Vec<BlockOracle<S>>> {
    problem
        .blocks()
        .iter()
        .enumerate()
        .map(|(j, b)| {
            BlockOracle::new(&b.set, b.dim()).map_err(|e| match e {
                Error::Cycle { .. } => Error::Cycle { block: j },
                other => other.in_block(j),
            })
        })
        .collect()
}
