//! Augmented Lagrangian `L(x, λ, ρ) = cᵀx + λᵀ(Ax − b) + (ρ/2)‖(Ax − b)₊‖²`
//! and the quantities derived from it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Assignment, BlockProblem};
use crate::oracle::LinearOracle;
use crate::scalar::{inf_norm, norm_sq, Scalar};

/// Multipliers `λ ≥ 0` and penalty `ρ > 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualState<S> {
    pub lambda: Vec<S>,
    pub rho: S,
}

impl<S: Scalar> DualState<S> {
    pub fn new(lambda: Vec<S>, rho: S) -> Result<Self> {
        if lambda.iter().any(|l| *l < S::zero()) {
            return Err(Error::validation("lambda", "negative multiplier"));
        }
        if rho <= S::zero() {
            return Err(Error::validation("rho", "penalty must be positive"));
        }
        Ok(Self { lambda, rho })
    }

    pub fn zero(m: usize, rho: S) -> Result<Self> {
        Self::new(vec![S::zero(); m], rho)
    }

    pub fn lambda_norm(&self) -> f64 {
        norm_sq(&self.lambda).to_f64_lossy().sqrt()
    }
}

/// Residual `r = Ax − b` with its positive part and norms.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation<S> {
    pub residual: Vec<S>,
    pub positive_part: Vec<S>,
    pub inf_norm: S,
    pub two_norm_sq: S,
}

impl<S: Scalar> Violation<S> {
    pub fn from_residual(residual: Vec<S>) -> Self {
        let positive_part: Vec<S> = residual.iter().map(Scalar::positive_part).collect();
        Self {
            inf_norm: inf_norm(&positive_part),
            two_norm_sq: norm_sq(&positive_part),
            residual,
            positive_part,
        }
    }

    pub fn of(problem: &BlockProblem<S>, x: &Assignment) -> Self {
        Self::from_residual(problem.residual(x))
    }

    pub fn is_feasible(&self) -> bool {
        self.inf_norm <= S::feasibility_tolerance()
    }
}

fn check_lambda<S: Scalar>(problem: &BlockProblem<S>, dual: &DualState<S>) -> Result<()> {
    if dual.lambda.len() != problem.m() {
        return Err(Error::Dimension(format!("lambda has length {}, m = {}", dual.lambda.len(), problem.m())));
    }
    Ok(())
}

/// `L` from a precomputed objective and residual.
pub fn al_from_parts<S: Scalar>(objective: S, residual: &[S], dual: &DualState<S>) -> S {
    let mut lin = S::zero();
    let mut pen = S::zero();
    for (r, l) in residual.iter().zip(&dual.lambda) {
        lin = lin + l.clone() * r.clone();
        let rp = r.positive_part();
        pen = pen + rp.clone() * rp;
    }
    objective + lin + dual.rho.clone() * S::half() * pen
}

pub fn al_value<S: Scalar>(problem: &BlockProblem<S>, x: &Assignment, dual: &DualState<S>) -> Result<S> {
    problem.check_dims(x)?;
    check_lambda(problem, dual)?;
    Ok(al_from_parts(problem.objective(x), &problem.residual(x), dual))
}

/// `cᵀx + (ρ/2)‖(Ax − b + λ/ρ)₊‖² − ‖λ‖²/(2ρ)`.
pub fn classical_al_value<S: Scalar>(problem: &BlockProblem<S>, x: &Assignment, dual: &DualState<S>) -> Result<S> {
    problem.check_dims(x)?;
    check_lambda(problem, dual)?;
    let rho = dual.rho.clone();
    let shifted: Vec<S> = problem
        .residual(x)
        .into_iter()
        .zip(&dual.lambda)
        .map(|(r, l)| (r + l.clone() / rho.clone()).positive_part())
        .collect();
    let half = S::half();
    Ok(problem.objective(x) + rho.clone() * half.clone() * norm_sq(&shifted)
        - norm_sq(&dual.lambda) * half / rho)
}

/// `c_j + A_jᵀλ + ρA_jᵀ r₊` for a given residual `r`.
pub fn block_gradient_at<S: Scalar>(problem: &BlockProblem<S>, residual: &[S], dual: &DualState<S>, j: usize) -> Vec<S> {
    let block = &problem.blocks()[j];
    let weights: Vec<S> = residual
        .iter()
        .zip(&dual.lambda)
        .map(|(r, l)| l.clone() + dual.rho.clone() * r.positive_part())
        .collect();
    block
        .coupling
        .transpose_product(&weights)
        .into_iter()
        .zip(&block.cost)
        .map(|(a, c)| a + c.clone())
        .collect()
}

pub fn block_gradient<S: Scalar>(problem: &BlockProblem<S>, x: &Assignment, dual: &DualState<S>, j: usize) -> Result<Vec<S>> {
    problem.block(j)?;
    problem.check_dims(x)?;
    check_lambda(problem, dual)?;
    Ok(block_gradient_at(problem, &problem.residual(x), dual, j))
}

/// Gradient with respect to the stacked `x`, one vector per block.
pub fn full_gradient<S: Scalar>(problem: &BlockProblem<S>, x: &Assignment, dual: &DualState<S>) -> Result<Vec<Vec<S>>> {
    problem.check_dims(x)?;
    check_lambda(problem, dual)?;
    let r = problem.residual(x);
    Ok((0..problem.num_blocks()).map(|j| block_gradient_at(problem, &r, dual, j)).collect())
}

/// `(Ax − b, ½‖(Ax − b)₊‖²)`, a subgradient of `d` when `x` minimizes `L`.
pub fn dual_subgradient<S: Scalar>(problem: &BlockProblem<S>, x: &Assignment) -> (Vec<S>, S) {
    let v = Violation::of(problem, x);
    (v.residual, v.two_norm_sq * S::half())
}

/// Lagrangian relaxation value with the per-block minimizers.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianBound<S> {
    pub value: S,
    pub x: Assignment,
}

/// `Σ_j min_{x_j ∈ X_j} (c_j + A_jᵀλ)ᵀx_j − λᵀb`.
pub fn lr_dual_value<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    lambda: &[S],
    oracles: &[O],
) -> Result<LagrangianBound<S>> {
    if lambda.len() != problem.m() {
        return Err(Error::Dimension(format!("lambda has length {}, m = {}", lambda.len(), problem.m())));
    }
    if oracles.len() != problem.num_blocks() {
        return Err(Error::Dimension(format!("{} oracles for {} blocks", oracles.len(), problem.num_blocks())));
    }
    let mut value = problem
        .rhs()
        .iter()
        .zip(lambda)
        .fold(S::zero(), |acc, (b, l)| acc - b.clone() * l.clone());
    let mut blocks = Vec::with_capacity(problem.num_blocks());
    for (j, (block, oracle)) in problem.blocks().iter().zip(oracles).enumerate() {
        let w: Vec<S> = block
            .coupling
            .transpose_product(lambda)
            .into_iter()
            .zip(&block.cost)
            .map(|(a, c)| a + c.clone())
            .collect();
        let ans = oracle.minimize(&w).map_err(|e| e.in_block(j))?;
        value = value + ans.value;
        blocks.push(ans.x);
    }
    Ok(LagrangianBound {
        value,
        x: Assignment::new(blocks),
    })
}

/// Largest eigenvalue of `AᵀA` by power iteration.
pub fn sigma_max_sq<S: Scalar>(problem: &BlockProblem<S>) -> f64 {
    let n = problem.n();
    if n == 0 || problem.m() == 0 {
        return 0.0;
    }
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut av = vec![0.0; problem.m()];
        let mut at = 0;
        for b in problem.blocks() {
            for (r, a) in av.iter_mut().zip(b.coupling.product_f64(&v[at..at + b.dim()])) {
                *r += a;
            }
            at += b.dim();
        }
        problem
            .blocks()
            .iter()
            .flat_map(|b| b.coupling.transpose_product_f64(&av))
            .collect()
    };
    let starts: [Vec<f64>; 2] = [vec![1.0; n], (0..n).map(|i| 1.0 / (i as f64 + 1.0)).collect()];
    for start in starts {
        if let Some(est) = power_iteration(&apply, start) {
            return est;
        }
    }
    0.0
}

fn power_iteration(apply: &dyn Fn(&[f64]) -> Vec<f64>, mut v: Vec<f64>) -> Option<f64> {
    const REL_TOL: f64 = 1e-10;
    const MAX_ITERS: usize = 100_000;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = norm(&v);
    v.iter_mut().for_each(|a| *a /= nv);
    let mut prev = 0.0;
    for _ in 0..MAX_ITERS {
        let w = apply(&v);
        let est: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let nw = norm(&w);
        if nw == 0.0 {
            return None;
        }
        v = w.into_iter().map(|a| a / nw).collect();
        if (est - prev).abs() <= REL_TOL * est.abs() {
            return Some(est);
        }
        prev = est;
    }
    Some(prev)
}

/// `κ = ρ σ_max(A)²`.
pub fn lipschitz_kappa<S: Scalar>(problem: &BlockProblem<S>, rho: &S) -> S {
    rho.clone() * S::from_f64_lossy(sigma_max_sq(problem))
}

/// Residual `Ax − b` maintained under single-block changes, rebuilt from
/// scratch every [`ResidualCache::REFRESH`] updates.
#[derive(Clone, Debug)]
pub struct ResidualCache<S> {
    r: Vec<S>,
    updates: usize,
}

impl<S: Scalar> ResidualCache<S> {
    pub const REFRESH: usize = 100;

    pub fn new(problem: &BlockProblem<S>, x: &Assignment) -> Self {
        Self {
            r: problem.residual(x),
            updates: 0,
        }
    }

    pub fn residual(&self) -> &[S] {
        &self.r
    }

    /// Applies block `j` changing from `old` to `new`; `x` must already hold
    /// `new`.
    pub fn update(&mut self, problem: &BlockProblem<S>, x: &Assignment, j: usize, old: &[bool], new: &[bool]) {
        if old == new {
            return;
        }
        self.updates += 1;
        if self.updates.is_multiple_of(Self::REFRESH) {
            self.r = problem.residual(x);
            return;
        }
        let coupling = &problem.blocks()[j].coupling;
        for (s, (&o, &n)) in old.iter().zip(new).enumerate() {
            if o == n {
                continue;
            }
            for (row, v) in coupling.column(s) {
                self.r[*row] = if n {
                    self.r[*row].clone() + v.clone()
                } else {
                    self.r[*row].clone() - v.clone()
                };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{e1, x};
    use crate::model::{Block, BlockSpec};
    use crate::oracle::build_oracles;
    use crate::scalar::Rational;
    use crate::sparse::SparseColumns;

    fn r(v: i64) -> Rational {
        Rational::from_int(v)
    }

    fn dual(l: &[i64], rho: i64) -> DualState<Rational> {
        DualState::new(l.iter().map(|&v| r(v)).collect(), r(rho)).unwrap()
    }

    #[test]
    fn al_on_e1() {
        let p = e1::<Rational>();
        for d in [dual(&[0, 0], 1), dual(&[3, 7], 50)] {
            assert_eq!(al_value(&p, &x(&[&[0, 1], &[1, 0]]), &d).unwrap(), r(-4));
        }
        assert_eq!(al_value(&p, &x(&[&[1, 0], &[1, 0]]), &dual(&[1, 0], 2)).unwrap(), r(-3));
        assert_eq!(al_value(&p, &Assignment::zeros(&[2, 2]), &dual(&[0, 0], 1)).unwrap(), r(0));
    }

    #[test]
    fn al_rejects_bad_dims() {
        let p = e1::<Rational>();
        assert!(al_value(&p, &x(&[&[0, 1]]), &dual(&[0, 0], 1)).is_err());
        assert!(al_value(&p, &x(&[&[0, 1], &[0, 0]]), &dual(&[0], 1)).is_err());
    }

    #[test]
    fn classical_form() {
        let p = e1::<Rational>();
        let xs = x(&[&[0, 1], &[1, 0]]);
        assert_eq!(classical_al_value(&p, &xs, &dual(&[2, 0], 2)).unwrap(), r(-4));
        let d0 = dual(&[0, 0], 3);
        let xv = x(&[&[1, 0], &[1, 0]]);
        assert_eq!(classical_al_value(&p, &xv, &d0).unwrap(), al_value(&p, &xv, &d0).unwrap());
        // x = 0, b = 0, λ = 1, ρ = 1: the two terms cancel
        let q = p.with_rhs(vec![r(0), r(0)]).unwrap();
        let z = Assignment::zeros(&[2, 2]);
        assert_eq!(classical_al_value(&q, &z, &dual(&[1, 0], 1)).unwrap(), r(0));
    }

    #[test]
    fn gradients_on_e1() {
        let p = e1::<Rational>();
        let d = dual(&[0, 0], 1);
        let z = Assignment::zeros(&[2, 2]);
        assert_eq!(block_gradient(&p, &z, &d, 0).unwrap(), vec![r(-2), r(-1)]);
        assert_eq!(block_gradient(&p, &x(&[&[1, 0], &[1, 0]]), &d, 0).unwrap(), vec![r(-1), r(-1)]);
        assert!(matches!(block_gradient(&p, &z, &d, 2), Err(Error::BadBlock(2))));
    }

    #[test]
    fn subgradients_on_e1() {
        let p = e1::<Rational>();
        assert_eq!(dual_subgradient(&p, &x(&[&[0, 1], &[1, 0]])), (vec![r(0), r(0)], r(0)));
        assert_eq!(
            dual_subgradient(&p, &x(&[&[1, 0], &[1, 0]])),
            (vec![r(1), r(-1)], Rational::new(1.into(), 2.into()))
        );
        assert_eq!(dual_subgradient(&p, &Assignment::zeros(&[2, 2])).0, vec![r(-1), r(-1)]);
    }

    #[test]
    fn lr_on_e1() {
        let p = e1::<Rational>();
        let o = build_oracles(&p).unwrap();
        assert_eq!(lr_dual_value(&p, &[r(0), r(0)], &o).unwrap().value, r(-5));
        assert_eq!(lr_dual_value(&p, &[r(1), r(1)], &o).unwrap().value, r(-5));
    }

    #[test]
    fn lr_zero_for_nonnegative_costs() {
        let p = e1::<Rational>();
        let mut blocks = p.blocks().to_vec();
        for b in &mut blocks {
            b.cost = vec![r(1), r(2)];
        }
        let q = BlockProblem::new(2, vec![r(1), r(1)], blocks).unwrap();
        let o = build_oracles(&q).unwrap();
        assert_eq!(lr_dual_value(&q, &[r(0), r(0)], &o).unwrap().value, r(0));
    }

    #[test]
    fn kappa_values() {
        let p = e1::<f64>();
        assert_eq!(lipschitz_kappa(&p, &1.0), 2.0);
        assert_eq!(lipschitz_kappa(&p, &3.0), 6.0);
        let pr = e1::<Rational>();
        assert_eq!(lipschitz_kappa(&pr, &r(4)), r(8));

        let k = 5;
        let row = Block {
            cost: vec![0.0; k],
            coupling: SparseColumns::from_triplets(1, k, (0..k).map(|c| (0, c, 1.0))).unwrap(),
            set: BlockSpec::Points(vec![vec![false; k]]),
        };
        let q = BlockProblem::new(1, vec![1.0], vec![row]).unwrap();
        assert!((lipschitz_kappa(&q, &1.0) - k as f64).abs() < 1e-9);
    }

    #[test]
    fn kappa_fallback_start() {
        // A = [1, -1]: the ones vector lies in the kernel
        let b = Block {
            cost: vec![0.0; 2],
            coupling: SparseColumns::from_triplets(1, 2, [(0, 0, 1.0), (0, 1, -1.0)]).unwrap(),
            set: BlockSpec::Points(vec![vec![false; 2]]),
        };
        let q = BlockProblem::new(1, vec![1.0], vec![b]).unwrap();
        assert!((lipschitz_kappa(&q, &1.0_f64) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn residual_cache_tracks_full_recompute() {
        let p = e1::<Rational>();
        let mut xs = Assignment::zeros(&[2, 2]);
        let mut cache = ResidualCache::new(&p, &xs);
        let states: [&[bool]; 3] = [&[true, false], &[false, true], &[false, false]];
        for step in 0..250 {
            let j = step % 2;
            let old = xs.block(j).to_vec();
            let new = states[step % 3].to_vec();
            xs.set_block(j, new.clone());
            cache.update(&p, &xs, j, &old, &new);
            assert_eq!(cache.residual(), p.residual(&xs).as_slice());
        }
    }

    /// Relaxed `L` over real `x`, used only to difference.
    fn relaxed(p: &BlockProblem<Rational>, x: &[Rational], d: &DualState<Rational>) -> Rational {
        let mut ax = vec![r(0); p.m()];
        let mut obj = r(0);
        let mut at = 0;
        for b in p.blocks() {
            let xb = &x[at..at + b.dim()];
            for (acc, v) in ax.iter_mut().zip(b.coupling.product(xb)) {
                *acc = acc.clone() + v;
            }
            for (c, v) in b.cost.iter().zip(xb) {
                obj += c.clone() * v.clone();
            }
            at += b.dim();
        }
        let res: Vec<Rational> = ax.into_iter().zip(p.rhs()).map(|(a, b)| a - b.clone()).collect();
        al_from_parts(obj, &res, d)
    }

    #[test]
    fn gradient_matches_central_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = Rational::new(1.into(), 10_000_000_000i64.into());
        for trial in 0..20 {
            let p = crate::random::generate_random::<Rational>(
                trial,
                &crate::random::RandomSpec {
                    blocks: 3,
                    rows: 3,
                    block_dim: 3,
                    density: 0.6,
                    mode: crate::random::RandomMode::General,
                },
            );
            let dims = p.dims();
            let stacked: Vec<bool> = (0..p.n()).map(|_| rng.gen_bool(0.5)).collect();
            let xs = Assignment::from_stacked(&dims, &stacked);
            let d = dual(&[rng.gen_range(0..3), rng.gen_range(0..3), rng.gen_range(0..3)], rng.gen_range(1..5));
            let g = full_gradient(&p, &xs, &d).unwrap().concat();
            let base: Vec<Rational> = stacked.iter().map(|&b| if b { r(1) } else { r(0) }).collect();
            for i in 0..p.n() {
                let mut up = base.clone();
                up[i] = up[i].clone() + h.clone();
                let mut down = base.clone();
                down[i] = down[i].clone() - h.clone();
                let fd = (relaxed(&p, &up, &d) - relaxed(&p, &down, &d)) / (h.clone() * r(2));
                let err = num::Signed::abs(&(fd - g[i].clone())).to_f64_lossy();
                assert!(err <= 1e-8, "trial {trial} coordinate {i}: error {err}");
            }
        }
    }
}
