//! Block-structured 0/1 programs `min cᵀx  s.t.  Ax ≤ b,  x_j ∈ X_j`.

mod assumptions;
mod brute;
mod io;

pub use assumptions::{check_assumptions, AssumptionReport, Verdict};
pub use brute::{brute_force_optimum, brute_force_with_cap, enumerated_dual_value, BruteForce, DEFAULT_BRUTE_CAP};
pub use io::{
    load_instance, load_solution, parse_instance, parse_solution, save_instance, save_solution,
    solution_to_json, to_json_string, SolutionFile,
};

use crate::error::{Error, Result};
use crate::scalar::{dot_binary, Literal, Scalar};
use crate::sparse::SparseColumns;

/// Arc of a block DAG; selecting the path through it sets variable `var`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DagArc {
    pub from: usize,
    pub to: usize,
    pub var: usize,
}

/// Feasible set given as the incidence vectors of source-to-sink paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagPaths {
    pub num_nodes: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<DagArc>,
    pub include_empty_path: bool,
}

impl DagPaths {
    /// Kahn order of the nodes, or `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.num_nodes];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.num_nodes];
        for arc in &self.arcs {
            indeg[arc.to] += 1;
            out[arc.from].push(arc.to);
        }
        let mut stack: Vec<usize> = (0..self.num_nodes).rev().filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.num_nodes);
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in out[v].iter().rev() {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        (order.len() == self.num_nodes).then_some(order)
    }

    /// True when the selected arcs form exactly one source-sink path, or
    /// nothing is selected and the empty path is allowed.
    pub fn contains(&self, u: &[bool]) -> bool {
        let mut var_arc = vec![None; u.len()];
        for (i, arc) in self.arcs.iter().enumerate() {
            if arc.var < u.len() {
                var_arc[arc.var] = Some(i);
            }
        }
        let mut out_sel: Vec<Option<usize>> = vec![None; self.num_nodes];
        let mut selected = 0;
        for (var, &on) in u.iter().enumerate() {
            if !on {
                continue;
            }
            let Some(i) = var_arc[var] else { return false };
            let from = self.arcs[i].from;
            if out_sel[from].is_some() {
                return false;
            }
            out_sel[from] = Some(i);
            selected += 1;
        }
        if selected == 0 {
            return self.include_empty_path;
        }
        let mut node = self.source;
        let mut walked = 0;
        while let Some(i) = out_sel[node] {
            walked += 1;
            node = self.arcs[i].to;
            if walked > selected {
                return false;
            }
        }
        node == self.sink && walked == selected
    }
}

/// Descriptor of one block's feasible set `X_j`.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockSpec<S> {
    /// `{x ∈ {0,1}ⁿ : B x ≤ d}` with `B` stored densely by row.
    Polyhedron { matrix: Vec<Vec<S>>, rhs: Vec<S> },
    /// Finite list of 0/1 points.
    Points(Vec<Vec<bool>>),
    /// Paths of a DAG.
    Dag(DagPaths),
}

impl<S: Scalar> BlockSpec<S> {
    /// Membership test straight from the descriptor.
    pub fn contains(&self, u: &[bool]) -> bool {
        match self {
            BlockSpec::Polyhedron { matrix, rhs } => matrix.iter().zip(rhs).all(|(row, d)| {
                row.len() == u.len() && dot_binary(row, u) <= d.clone() + S::feasibility_tolerance()
            }),
            BlockSpec::Points(points) => points.iter().any(|p| p.as_slice() == u),
            BlockSpec::Dag(dag) => dag.contains(u),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BlockSpec::Polyhedron { .. } => "explicit_polyhedron",
            BlockSpec::Points(_) => "explicit_points",
            BlockSpec::Dag(_) => "dag_paths",
        }
    }

    fn validate(&self, j: usize, n: usize) -> Result<()> {
        let field = |name: &str| format!("blocks[{j}].set.{name}");
        match self {
            BlockSpec::Polyhedron { matrix, rhs } => {
                if matrix.len() != rhs.len() {
                    return Err(Error::validation(
                        field("d"),
                        format!("{} rows in B but {} entries in d", matrix.len(), rhs.len()),
                    ));
                }
                if let Some(row) = matrix.iter().position(|r| r.len() != n) {
                    return Err(Error::validation(field("B"), format!("row {row} does not have {n} columns")));
                }
                if rhs.iter().any(|d| *d < S::zero()) {
                    return Err(Error::ZeroInfeasible { block: j });
                }
            }
            BlockSpec::Points(points) => {
                if let Some(i) = points.iter().position(|p| p.len() != n) {
                    return Err(Error::validation(field("points"), format!("point {i} does not have length {n}")));
                }
                let mut sorted: Vec<&Vec<bool>> = points.iter().collect();
                sorted.sort();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::validation(field("points"), "duplicate point"));
                }
                if !points.iter().any(|p| p.iter().all(|&b| !b)) {
                    return Err(Error::ZeroInfeasible { block: j });
                }
            }
            BlockSpec::Dag(dag) => {
                if dag.source >= dag.num_nodes || dag.sink >= dag.num_nodes {
                    return Err(Error::validation(field("source"), "source or sink out of range"));
                }
                if dag.source == dag.sink {
                    return Err(Error::validation(field("sink"), "source and sink coincide"));
                }
                let mut owner = vec![false; n];
                for (i, arc) in dag.arcs.iter().enumerate() {
                    if arc.from >= dag.num_nodes || arc.to >= dag.num_nodes {
                        return Err(Error::validation(field("arcs"), format!("arc {i} has an endpoint out of range")));
                    }
                    if arc.var >= n {
                        return Err(Error::validation(field("arcs"), format!("arc {i} maps to variable {} >= {n}", arc.var)));
                    }
                    if std::mem::replace(&mut owner[arc.var], true) {
                        return Err(Error::validation(field("arcs"), format!("variable {} mapped by two arcs", arc.var)));
                    }
                }
                if dag.topological_order().is_none() {
                    return Err(Error::Cycle { block: j });
                }
                if !dag.include_empty_path {
                    return Err(Error::ZeroInfeasible { block: j });
                }
            }
        }
        Ok(())
    }

    fn convert<T: Scalar>(&self) -> BlockSpec<T> {
        match self {
            BlockSpec::Polyhedron { matrix, rhs } => BlockSpec::Polyhedron {
                matrix: matrix.iter().map(|r| r.iter().map(convert_scalar).collect()).collect(),
                rhs: rhs.iter().map(convert_scalar).collect(),
            },
            BlockSpec::Points(p) => BlockSpec::Points(p.clone()),
            BlockSpec::Dag(d) => BlockSpec::Dag(d.clone()),
        }
    }
}

/// Converts through the literal representation, which is exact from floats
/// to rationals.
pub(crate) fn convert_scalar<S: Scalar, T: Scalar>(v: &S) -> T {
    T::parse_literal(&v.to_literal()).unwrap_or_else(|| T::from_f64_lossy(v.to_f64_lossy()))
}

/// One block: cost `c_j`, coupling columns `A_j` and feasible set `X_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Block<S> {
    pub cost: Vec<S>,
    pub coupling: SparseColumns<S>,
    pub set: BlockSpec<S>,
}

impl<S: Scalar> Block<S> {
    pub fn dim(&self) -> usize {
        self.cost.len()
    }
}

/// A validated instance. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockProblem<S> {
    m: usize,
    rhs: Vec<S>,
    blocks: Vec<Block<S>>,
    label: Option<String>,
}

impl<S: Scalar> BlockProblem<S> {
    pub fn new(m: usize, rhs: Vec<S>, blocks: Vec<Block<S>>) -> Result<Self> {
        if rhs.len() != m {
            return Err(Error::validation("b", format!("length {} but m = {m}", rhs.len())));
        }
        for (j, block) in blocks.iter().enumerate() {
            let n = block.dim();
            if block.coupling.rows() != m {
                return Err(Error::validation(format!("blocks[{j}].A"), format!("{} rows but m = {m}", block.coupling.rows())));
            }
            if block.coupling.cols() != n {
                return Err(Error::validation(
                    format!("blocks[{j}].A"),
                    format!("{} columns but c has length {n}", block.coupling.cols()),
                ));
            }
            if !S::EXACT && block.cost.iter().any(|c| !c.to_f64_lossy().is_finite()) {
                return Err(Error::validation(format!("blocks[{j}].c"), "non-finite cost"));
            }
            block.set.validate(j, n)?;
        }
        Ok(Self {
            m,
            rhs,
            blocks,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rhs(&self) -> &[S] {
        &self.rhs
    }

    pub fn blocks(&self) -> &[Block<S>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> Result<&Block<S>> {
        self.blocks.get(j).ok_or(Error::BadBlock(j))
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Total number of variables `n`.
    pub fn n(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::dim).collect()
    }

    pub fn check_dims(&self, x: &Assignment) -> Result<()> {
        if x.num_blocks() != self.num_blocks() {
            return Err(Error::Dimension(format!(
                "assignment has {} blocks, problem has {}",
                x.num_blocks(),
                self.num_blocks()
            )));
        }
        for (j, (xj, block)) in x.blocks().iter().zip(&self.blocks).enumerate() {
            if xj.len() != block.dim() {
                return Err(Error::Dimension(format!("block {j} has length {}, expected {}", xj.len(), block.dim())));
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &Assignment) -> S {
        self.blocks
            .iter()
            .zip(x.blocks())
            .fold(S::zero(), |acc, (b, xj)| acc + dot_binary(&b.cost, xj))
    }

    pub fn block_cost(&self, j: usize, u: &[bool]) -> S {
        dot_binary(&self.blocks[j].cost, u)
    }

    /// `Ax − b`.
    pub fn residual(&self, x: &Assignment) -> Vec<S> {
        let mut r: Vec<S> = self.rhs.iter().map(|b| -b.clone()).collect();
        for (block, xj) in self.blocks.iter().zip(x.blocks()) {
            block.coupling.add_binary_product(xj, &mut r, false);
        }
        r
    }

    pub fn satisfies_coupling(&self, x: &Assignment) -> bool {
        self.residual(x).iter().all(|r| *r <= S::feasibility_tolerance())
    }

    pub fn is_feasible(&self, x: &Assignment) -> bool {
        self.check_dims(x).is_ok()
            && self.satisfies_coupling(x)
            && self.blocks.iter().zip(x.blocks()).all(|(b, xj)| b.set.contains(xj))
    }

    /// Same instance over another scalar type.
    pub fn convert<T: Scalar>(&self) -> BlockProblem<T> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                cost: b.cost.iter().map(convert_scalar).collect(),
                coupling: SparseColumns::from_triplets(
                    self.m,
                    b.dim(),
                    b.coupling.triplets().map(|(r, c, v)| (r, c, convert_scalar(v))),
                )
                .expect("indices already validated"),
                set: b.set.convert(),
            })
            .collect();
        BlockProblem {
            m: self.m,
            rhs: self.rhs.iter().map(convert_scalar).collect(),
            blocks,
            label: self.label.clone(),
        }
    }

    /// Copy with a different right-hand side.
    pub fn with_rhs(&self, rhs: Vec<S>) -> Result<Self> {
        let label = self.label.clone();
        let mut p = Self::new(self.m, rhs, self.blocks.clone())?;
        p.label = label;
        Ok(p)
    }

    /// True when every entry of `A`, `b` and `c` is an integer.
    pub fn has_integral_data(&self) -> bool {
        self.rhs.iter().all(Scalar::is_integral)
            && self.blocks.iter().all(|b| {
                b.cost.iter().all(Scalar::is_integral) && b.coupling.triplets().all(|(_, _, v)| v.is_integral())
            })
    }
}

/// Per-block 0/1 vectors. Ordering is lexicographic on the stacked vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    blocks: Vec<Vec<bool>>,
}

impl Assignment {
    pub fn new(blocks: Vec<Vec<bool>>) -> Self {
        Self { blocks }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&n| vec![false; n]).collect(),
        }
    }

    pub fn zeros_for<S: Scalar>(problem: &BlockProblem<S>) -> Self {
        Self::zeros(&problem.dims())
    }

    pub fn blocks(&self) -> &[Vec<bool>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &[bool] {
        &self.blocks[j]
    }

    pub fn set_block(&mut self, j: usize, v: Vec<bool>) {
        self.blocks[j] = v;
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn stacked(&self) -> Vec<bool> {
        self.blocks.concat()
    }

    pub fn from_stacked(dims: &[usize], x: &[bool]) -> Self {
        let mut at = 0;
        let blocks = dims
            .iter()
            .map(|&n| {
                let b = x[at..at + n].to_vec();
                at += n;
                b
            })
            .collect();
        Self { blocks }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().flatten().all(|&b| !b)
    }

    pub fn to_bits(&self) -> Vec<Vec<u8>> {
        self.blocks.iter().map(|b| b.iter().map(|&v| v as u8).collect()).collect()
    }
}

/// Checks `x ∈ X` and `Ax ≤ b` from the raw instance data. Shares nothing with
/// the solver's residual bookkeeping.
pub fn verify_feasible<S: Scalar>(problem: &BlockProblem<S>, x: &Assignment) -> Result<()> {
    problem.check_dims(x)?;
    for (j, (block, xj)) in problem.blocks().iter().zip(x.blocks()).enumerate() {
        if !block.set.contains(xj) {
            return Err(Error::NotMember { block: j });
        }
    }
    let mut lhs = vec![S::zero(); problem.m()];
    for (block, xj) in problem.blocks().iter().zip(x.blocks()) {
        for (r, c, v) in block.coupling.triplets() {
            if xj[c] {
                lhs[r] = lhs[r].clone() + v.clone();
            }
        }
    }
    for (i, (l, b)) in lhs.iter().zip(problem.rhs()).enumerate() {
        if *l > b.clone() + S::feasibility_tolerance() {
            return Err(Error::validation(format!("row {i}"), format!("Ax = {l} exceeds b = {b}")));
        }
    }
    Ok(())
}

/// Parses literals, reporting the field on failure.
pub(crate) fn parse_vec<S: Scalar>(field: &str, values: &[Literal]) -> Result<Vec<S>> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| S::parse_literal(v).ok_or_else(|| Error::validation(field, format!("entry {i} is not a number: {v:?}"))))
        .collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn one_hot_pair<S: Scalar>() -> BlockSpec<S> {
        BlockSpec::Polyhedron {
            matrix: vec![vec![S::one(), S::one()]],
            rhs: vec![S::one()],
        }
    }

    /// Two blocks of two variables, each `x_1 + x_2 ≤ 1`, coupled row-wise.
    pub fn e1<S: Scalar>() -> BlockProblem<S> {
        let block = |c0: i64, c1: i64| Block {
            cost: vec![S::from_int(c0), S::from_int(c1)],
            coupling: SparseColumns::from_triplets(2, 2, [(0, 0, S::one()), (1, 1, S::one())]).unwrap(),
            set: one_hot_pair(),
        };
        BlockProblem::new(2, vec![S::one(), S::one()], vec![block(-2, -1), block(-3, -1)]).unwrap()
    }

    pub fn x(blocks: &[&[u8]]) -> Assignment {
        Assignment::new(blocks.iter().map(|b| b.iter().map(|&v| v == 1).collect()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn e1_shape() {
        let p = e1::<Rational>();
        assert_eq!((p.num_blocks(), p.m(), p.n()), (2, 2, 4));
    }

    #[test]
    fn rhs_length_checked() {
        let p = e1::<f64>();
        let err = BlockProblem::new(2, vec![1.0], p.blocks().to_vec()).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "b"), "{err}");
    }

    #[test]
    fn negative_polyhedron_rhs_rejected() {
        let p = e1::<f64>();
        let mut blocks = p.blocks().to_vec();
        blocks[1].set = BlockSpec::Polyhedron {
            matrix: vec![vec![1.0, 1.0]],
            rhs: vec![-1.0],
        };
        let err = BlockProblem::new(2, vec![1.0, 1.0], blocks).unwrap_err();
        assert_eq!(err.to_string(), "zero vector infeasible in block 1");
    }

    #[test]
    fn points_validation() {
        let p = e1::<f64>();
        let mut blocks = p.blocks().to_vec();
        blocks[0].set = BlockSpec::Points(vec![vec![false, false], vec![true, false], vec![true, false]]);
        assert!(BlockProblem::new(2, vec![1.0, 1.0], blocks.clone()).is_err());
        blocks[0].set = BlockSpec::Points(vec![vec![true, false]]);
        assert!(matches!(
            BlockProblem::new(2, vec![1.0, 1.0], blocks).unwrap_err(),
            Error::ZeroInfeasible { block: 0 }
        ));
    }

    fn diamond(include_empty_path: bool) -> DagPaths {
        DagPaths {
            num_nodes: 4,
            source: 0,
            sink: 3,
            arcs: vec![
                DagArc { from: 0, to: 1, var: 0 },
                DagArc { from: 0, to: 2, var: 1 },
                DagArc { from: 1, to: 3, var: 2 },
                DagArc { from: 2, to: 3, var: 3 },
            ],
            include_empty_path,
        }
    }

    #[test]
    fn dag_membership() {
        let d = diamond(true);
        assert!(d.contains(&[true, false, true, false]));
        assert!(d.contains(&[false; 4]));
        assert!(!d.contains(&[true, false, false, true]));
        assert!(!d.contains(&[true, true, true, true]));
        assert!(!d.contains(&[true, false, false, false]));
    }

    #[test]
    fn dag_cycle_and_empty_flag() {
        let mut d = diamond(true);
        d.arcs.push(DagArc { from: 3, to: 0, var: 4 });
        let block = |set| Block {
            cost: vec![0.0; 5],
            coupling: SparseColumns::zeros(0, 5),
            set,
        };
        assert!(matches!(
            BlockProblem::new(0, vec![], vec![block(BlockSpec::Dag(d))]).unwrap_err(),
            Error::Cycle { block: 0 }
        ));
        assert!(matches!(
            BlockProblem::new(0, vec![], vec![block(BlockSpec::Dag(diamond(false)))]).unwrap_err(),
            Error::ZeroInfeasible { block: 0 }
        ));
    }

    #[test]
    fn feasibility_checker() {
        let p = e1::<Rational>();
        assert!(verify_feasible(&p, &x(&[&[0, 1], &[1, 0]])).is_ok());
        assert!(verify_feasible(&p, &x(&[&[1, 0], &[1, 0]])).is_err());
        assert!(matches!(verify_feasible(&p, &x(&[&[1, 1], &[0, 0]])), Err(Error::NotMember { block: 0 })));
        assert!(verify_feasible(&p, &x(&[&[1, 1]])).is_err());
    }

    #[test]
    fn lex_order_is_stacked_order() {
        let a = x(&[&[0, 1], &[1, 0]]);
        let b = x(&[&[1, 0], &[0, 0]]);
        assert!(a < b);
        assert!(a.stacked() < b.stacked());
    }

    #[test]
    fn conversion_round_trip() {
        let p = e1::<f64>();
        let q: BlockProblem<Rational> = p.convert();
        assert_eq!(q, e1::<Rational>());
        assert_eq!(q.convert::<f64>(), p);
        assert!(q.has_integral_data());
    }
}
