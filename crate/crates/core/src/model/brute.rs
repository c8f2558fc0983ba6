//! Exhaustive enumeration over `X_1 × … × X_p`.

use super::{Assignment, BlockProblem};
use crate::error::{Error, Result};
use crate::oracle::enumerate_feasible;
use crate::scalar::{dot_binary, Scalar};

pub const DEFAULT_BRUTE_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForce<S> {
    pub value: S,
    pub solution: Assignment,
}

struct Tables<S> {
    points: Vec<Vec<Vec<bool>>>,
    costs: Vec<Vec<S>>,
    images: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> Tables<S> {
    fn build(problem: &BlockProblem<S>, cap: usize) -> Result<Self> {
        let mut points = Vec::with_capacity(problem.num_blocks());
        let mut total: usize = 1;
        for (j, block) in problem.blocks().iter().enumerate() {
            let pts = enumerate_feasible(&block.set, block.dim()).map_err(|e| e.in_block(j))?;
            total = total
                .checked_mul(pts.len())
                .filter(|&t| t <= cap)
                .ok_or(Error::CapExceeded { block: None, cap })?;
            points.push(pts);
        }
        let costs = points
            .iter()
            .zip(problem.blocks())
            .map(|(pts, b)| pts.iter().map(|u| dot_binary(&b.cost, u)).collect())
            .collect();
        let images = points
            .iter()
            .zip(problem.blocks())
            .map(|(pts, b)| pts.iter().map(|u| b.coupling.binary_product(u)).collect())
            .collect();
        Ok(Self { points, costs, images })
    }

    /// Visits every product point in lexicographic order of the stacked
    /// vector, passing `(indices, cᵀx, Ax)`.
    fn visit(&self, m: usize, f: &mut dyn FnMut(&[usize], &S, &[S])) {
        let p = self.points.len();
        let mut idx = vec![0usize; p];
        let mut cost = vec![S::zero(); p + 1];
        let mut ax = vec![vec![S::zero(); m]; p + 1];
        self.descend(0, &mut idx, &mut cost, &mut ax, f);
    }

    fn descend(
        &self,
        j: usize,
        idx: &mut [usize],
        cost: &mut [S],
        ax: &mut [Vec<S>],
        f: &mut dyn FnMut(&[usize], &S, &[S]),
    ) {
        if j == self.points.len() {
            f(idx, &cost[j], &ax[j]);
            return;
        }
        for k in 0..self.points[j].len() {
            idx[j] = k;
            cost[j + 1] = cost[j].clone() + self.costs[j][k].clone();
            let next: Vec<S> = ax[j]
                .iter()
                .zip(&self.images[j][k])
                .map(|(a, b)| a.clone() + b.clone())
                .collect();
            ax[j + 1] = next;
            self.descend(j + 1, idx, cost, ax, f);
        }
    }

    fn assignment(&self, idx: &[usize]) -> Assignment {
        Assignment::new(idx.iter().enumerate().map(|(j, &k)| self.points[j][k].clone()).collect())
    }
}

/// Exact optimum of the instance, lexicographically smallest on ties.
pub fn brute_force_optimum<S: Scalar>(problem: &BlockProblem<S>) -> Result<BruteForce<S>> {
    brute_force_with_cap(problem, DEFAULT_BRUTE_CAP)
}

pub fn brute_force_with_cap<S: Scalar>(problem: &BlockProblem<S>, cap: usize) -> Result<BruteForce<S>> {
    let tables = Tables::build(problem, cap)?;
    let tol = S::feasibility_tolerance();
    let mut best: Option<(S, Vec<usize>)> = None;
    tables.visit(problem.m(), &mut |idx, cost, ax| {
        let feasible = ax.iter().zip(problem.rhs()).all(|(a, b)| *a <= b.clone() + tol.clone());
        if feasible && best.as_ref().is_none_or(|(v, _)| cost < v) {
            best = Some((cost.clone(), idx.to_vec()));
        }
    });
    let (value, idx) = best.ok_or(Error::Infeasible)?;
    Ok(BruteForce {
        value,
        solution: tables.assignment(&idx),
    })
}

/// `d(λ, ρ) = min_{x ∈ X} cᵀx + λᵀ(Ax − b) + (ρ/2)‖(Ax − b)₊‖²` by enumeration,
/// with a lexicographically smallest minimizer.
pub fn enumerated_dual_value<S: Scalar>(
    problem: &BlockProblem<S>,
    lambda: &[S],
    rho: &S,
    cap: usize,
) -> Result<(S, Assignment)> {
    if lambda.len() != problem.m() {
        return Err(Error::Dimension(format!("lambda has length {}, m = {}", lambda.len(), problem.m())));
    }
    let tables = Tables::build(problem, cap)?;
    let half_rho = rho.clone() * S::half();
    let mut best: Option<(S, Vec<usize>)> = None;
    tables.visit(problem.m(), &mut |idx, cost, ax| {
        let mut v = cost.clone();
        let mut pen = S::zero();
        for ((a, b), l) in ax.iter().zip(problem.rhs()).zip(lambda) {
            let r = a.clone() - b.clone();
            v = v + l.clone() * r.clone();
            let rp = r.positive_part();
            pen = pen + rp.clone() * rp;
        }
        v = v + half_rho.clone() * pen;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, idx.to_vec()));
        }
    });
    let (value, idx) = best.expect("zero vector is always enumerated");
    Ok((value, tables.assignment(&idx)))
}
