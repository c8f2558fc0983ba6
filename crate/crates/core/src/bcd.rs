//! Block coordinate descent on `L(·, λ, ρ)` over `X = X_1 × … × X_p`.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::alfunc::{al_from_parts, block_gradient_at, full_gradient, sigma_max_sq, DualState, ResidualCache};
use crate::error::{Error, Result};
use crate::model::{check_assumptions, Assignment, BlockProblem};
use crate::oracle::LinearOracle;
use crate::scalar::{dot_binary, hamming, norm_sq, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    /// `T_{X_j}(c_j + A_jᵀλ + ρA_jᵀ(others − b + ½)₊)`.
    ClassicalLinearized,
    /// Exact block argmin of `L` by enumeration.
    ClassicalExact,
    /// `T_{X_j}(τ g_j + ½ − x_j)`.
    ProxLinear,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tau<S> {
    /// `τ = 1/(2.01 κ)`, recomputed from the current `ρ`.
    Auto,
    Fixed(S),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcdConfig<S> {
    pub update: UpdateKind,
    pub tau: Tau<S>,
    pub t_max: usize,
    /// Treat the linearized step as exact without checking the structural
    /// assumptions.
    pub assume_binary_coupling: bool,
}

impl<S: Scalar> Default for BcdConfig<S> {
    fn default() -> Self {
        Self {
            update: UpdateKind::ClassicalLinearized,
            tau: Tau::Auto,
            t_max: 100,
            assume_binary_coupling: false,
        }
    }
}

impl<S: Scalar> BcdConfig<S> {
    pub fn new(update: UpdateKind) -> Self {
        Self {
            update,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    FixedPoint,
    TMax,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcdResult<S> {
    pub x: Assignment,
    /// `l_values[0] = L(x⁰)`, then one entry per sweep.
    pub l_values: Vec<S>,
    /// `‖xᵗ⁺¹ − xᵗ‖²` per sweep.
    pub step_norms_sq: Vec<usize>,
    pub termination: Termination,
    pub sweeps: usize,
    /// Step size used by prox-linear sweeps.
    pub tau: Option<S>,
    /// Linearized steps taken without the guarantees that make them exact.
    pub heuristic_step: bool,
    /// Linearized iterates with some entry of `A_j x_j` above 1.
    pub unit_image_violations: usize,
}

/// `1/(2.01 κ)`, or 1 when `κ = 0`.
pub fn auto_tau<S: Scalar>(kappa: &S) -> S {
    if kappa.is_zero() {
        S::one()
    } else {
        S::from_int(100) / (S::from_int(201) * kappa.clone())
    }
}

/// Coefficient `1/(2τ) − κ/2` of the guaranteed prox-linear decrease.
pub fn descent_coefficient<S: Scalar>(tau: &S, kappa: &S) -> S {
    S::half() / tau.clone() - kappa.clone() * S::half()
}

fn add_vec<S: Scalar>(a: Vec<S>, b: &[S]) -> Vec<S> {
    a.into_iter().zip(b).map(|(x, y)| x + y.clone()).collect()
}

fn prox_scores<S: Scalar>(grad: Vec<S>, xj: &[bool], tau: &S) -> Vec<S> {
    grad.into_iter()
        .zip(xj)
        .map(|(g, &on)| {
            let shift = if on { -S::half() } else { S::half() };
            tau.clone() * g + shift
        })
        .collect()
}

fn prox_from_residual<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    oracle: &O,
    x: &Assignment,
    residual: &[S],
    dual: &DualState<S>,
    j: usize,
    tau: &S,
) -> Result<Vec<bool>> {
    let g = block_gradient_at(problem, residual, dual, j);
    Ok(oracle.minimize(&prox_scores(g, x.block(j), tau)).map_err(|e| e.in_block(j))?.x)
}

fn linearized_from_residual<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    oracle: &O,
    x: &Assignment,
    residual: &[S],
    dual: &DualState<S>,
    j: usize,
) -> Result<Vec<bool>> {
    let block = &problem.blocks()[j];
    let own = block.coupling.binary_product(x.block(j));
    // others − b = r − A_j x_j
    let weights: Vec<S> = residual
        .iter()
        .zip(&own)
        .zip(&dual.lambda)
        .map(|((r, a), l)| l.clone() + dual.rho.clone() * (r.clone() - a.clone() + S::half()).positive_part())
        .collect();
    let score = add_vec(block.coupling.transpose_product(&weights), &block.cost);
    Ok(oracle.minimize(&score).map_err(|e| e.in_block(j))?.x)
}

fn exact_from_residual<S: Scalar>(
    problem: &BlockProblem<S>,
    points: &[Vec<bool>],
    x: &Assignment,
    residual: &[S],
    dual: &DualState<S>,
    j: usize,
) -> Vec<bool> {
    let block = &problem.blocks()[j];
    let mut base = residual.to_vec();
    block.coupling.add_binary_product(x.block(j), &mut base, true);
    let mut best: Option<(S, usize)> = None;
    for (i, u) in points.iter().enumerate() {
        let mut r = base.clone();
        block.coupling.add_binary_product(u, &mut r, false);
        let v = al_from_parts(dot_binary(&block.cost, u), &r, dual);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, i));
        }
    }
    points[best.expect("zero vector is always a point").1].clone()
}

/// Prox-linear update of block `j` at the current stacked `x`.
pub fn prox_linear_step<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    oracles: &[O],
    x: &Assignment,
    dual: &DualState<S>,
    j: usize,
    tau: &S,
) -> Result<Vec<bool>> {
    let oracle = oracles.get(j).ok_or(Error::BadBlock(j))?;
    problem.check_dims(x)?;
    prox_from_residual(problem, oracle, x, &problem.residual(x), dual, j, tau)
}

/// Linearized classical update of block `j`.
pub fn classical_step_linearized<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    oracles: &[O],
    x: &Assignment,
    dual: &DualState<S>,
    j: usize,
) -> Result<Vec<bool>> {
    let oracle = oracles.get(j).ok_or(Error::BadBlock(j))?;
    problem.check_dims(x)?;
    linearized_from_residual(problem, oracle, x, &problem.residual(x), dual, j)
}

/// Exact classical update of block `j` by enumerating `X_j`.
pub fn classical_step_exact<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    oracles: &[O],
    x: &Assignment,
    dual: &DualState<S>,
    j: usize,
) -> Result<Vec<bool>> {
    let oracle = oracles.get(j).ok_or(Error::BadBlock(j))?;
    problem.check_dims(x)?;
    let points = oracle.enumerate().map_err(|e| e.in_block(j))?;
    Ok(exact_from_residual(problem, &points, x, &problem.residual(x), dual, j))
}

/// Reusable inner solver. Holds per-instance data that does not depend on
/// `(λ, ρ)`.
pub struct BcdSolver<'a, S, O> {
    problem: &'a BlockProblem<S>,
    oracles: &'a [O],
    cfg: BcdConfig<S>,
    sigma_sq: S,
    points: Option<Vec<Vec<Vec<bool>>>>,
    heuristic: bool,
}

impl<'a, S: Scalar, O: LinearOracle<S>> BcdSolver<'a, S, O> {
    pub fn new(problem: &'a BlockProblem<S>, oracles: &'a [O], cfg: BcdConfig<S>) -> Result<Self> {
        if oracles.len() != problem.num_blocks() {
            return Err(Error::Dimension(format!("{} oracles for {} blocks", oracles.len(), problem.num_blocks())));
        }
        if cfg.t_max == 0 {
            return Err(Error::validation("t_max", "must be at least 1"));
        }
        if let Tau::Fixed(t) = &cfg.tau {
            if *t <= S::zero() {
                return Err(Error::validation("tau", "must be positive"));
            }
        }
        let points = match cfg.update {
            UpdateKind::ClassicalExact => Some(
                oracles
                    .iter()
                    .enumerate()
                    .map(|(j, o)| o.enumerate().map_err(|e| e.in_block(j)))
                    .collect::<Result<_>>()?,
            ),
            _ => None,
        };
        let heuristic = cfg.update == UpdateKind::ClassicalLinearized
            && !cfg.assume_binary_coupling
            && !check_assumptions(problem).all_hold();
        if heuristic {
            debug!("linearized classical step runs as a heuristic on this instance");
        }
        let sigma_sq = match (&cfg.update, &cfg.tau) {
            (UpdateKind::ProxLinear, Tau::Auto) => S::from_f64_lossy(sigma_max_sq(problem)),
            _ => S::zero(),
        };
        Ok(Self {
            problem,
            oracles,
            cfg,
            sigma_sq,
            points,
            heuristic,
        })
    }

    pub fn config(&self) -> &BcdConfig<S> {
        &self.cfg
    }

    pub fn tau_for(&self, rho: &S) -> S {
        match &self.cfg.tau {
            Tau::Fixed(t) => t.clone(),
            Tau::Auto => auto_tau(&(rho.clone() * self.sigma_sq.clone())),
        }
    }

    pub fn solve(&self, x0: &Assignment, dual: &DualState<S>) -> Result<BcdResult<S>> {
        let problem = self.problem;
        problem.check_dims(x0)?;
        if dual.lambda.len() != problem.m() {
            return Err(Error::Dimension("lambda length differs from m".into()));
        }
        for (j, o) in self.oracles.iter().enumerate() {
            if !o.contains(x0.block(j)) {
                return Err(Error::NotMember { block: j });
            }
        }
        let tau = (self.cfg.update == UpdateKind::ProxLinear).then(|| self.tau_for(&dual.rho));
        let mut x = x0.clone();
        let mut cache = ResidualCache::new(problem, &x);
        let mut l_values = vec![al_from_parts(problem.objective(&x), cache.residual(), dual)];
        let mut step_norms_sq = Vec::new();
        let mut unit_image_violations = 0;
        let mut termination = Termination::TMax;
        let mut sweeps = 0;
        while sweeps < self.cfg.t_max {
            let before = x.clone();
            for j in 0..problem.num_blocks() {
                let oracle = &self.oracles[j];
                let new = match self.cfg.update {
                    UpdateKind::ProxLinear => {
                        prox_from_residual(problem, oracle, &x, cache.residual(), dual, j, tau.as_ref().expect("prox tau"))?
                    }
                    UpdateKind::ClassicalLinearized => {
                        let u = linearized_from_residual(problem, oracle, &x, cache.residual(), dual, j)?;
                        if problem.blocks()[j].coupling.binary_product(&u).iter().any(|v| *v > S::one()) {
                            unit_image_violations += 1;
                        }
                        u
                    }
                    UpdateKind::ClassicalExact => {
                        let pts = &self.points.as_ref().expect("points enumerated")[j];
                        exact_from_residual(problem, pts, &x, cache.residual(), dual, j)
                    }
                };
                let old = x.block(j).to_vec();
                x.set_block(j, new.clone());
                cache.update(problem, &x, j, &old, &new);
            }
            sweeps += 1;
            l_values.push(al_from_parts(problem.objective(&x), cache.residual(), dual));
            let moved: usize = before.blocks().iter().zip(x.blocks()).map(|(a, b)| hamming(a, b)).sum();
            step_norms_sq.push(moved);
            if moved == 0 {
                termination = Termination::FixedPoint;
                break;
            }
        }
        if unit_image_violations > 0 && !self.heuristic {
            warn!("{unit_image_violations} linearized iterates exceeded A_j x_j <= 1");
        }
        Ok(BcdResult {
            x,
            l_values,
            step_norms_sq,
            termination,
            sweeps,
            tau,
            heuristic_step: self.heuristic,
            unit_image_violations,
        })
    }
}

pub fn bcd_solve<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    oracles: &[O],
    x0: &Assignment,
    dual: &DualState<S>,
    cfg: &BcdConfig<S>,
) -> Result<BcdResult<S>> {
    BcdSolver::new(problem, oracles, cfg.clone())?.solve(x0, dual)
}

/// Whether `x = T_X(τ g(x) + ½ − x)` with the gradient taken at `x` itself.
pub fn is_tau_stationary<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    oracles: &[O],
    x: &Assignment,
    dual: &DualState<S>,
    tau: &S,
) -> Result<bool> {
    let grads = full_gradient(problem, x, dual)?;
    for (j, (g, oracle)) in grads.into_iter().zip(oracles).enumerate() {
        let ans = oracle.minimize(&prox_scores(g, x.block(j), tau)).map_err(|e| e.in_block(j))?;
        if ans.x != x.block(j) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `τ < 1/(2‖g(x)‖)` with `g(x) ≠ 0`, decided without a square root.
pub fn in_stuck_regime<S: Scalar>(problem: &BlockProblem<S>, x: &Assignment, dual: &DualState<S>, tau: &S) -> Result<bool> {
    let g = full_gradient(problem, x, dual)?.concat();
    let gg = norm_sq(&g);
    Ok(!gg.is_zero() && S::from_int(4) * tau.clone() * tau.clone() * gg < S::one())
}

/// No single-block replacement lowers `L`.
pub fn is_blockwise_optimal<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    oracles: &[O],
    x: &Assignment,
    dual: &DualState<S>,
) -> Result<bool> {
    problem.check_dims(x)?;
    let r = problem.residual(x);
    let current = al_from_parts(problem.objective(x), &r, dual);
    for (j, oracle) in oracles.iter().enumerate() {
        let block = &problem.blocks()[j];
        let mut base = r.clone();
        block.coupling.add_binary_product(x.block(j), &mut base, true);
        let own_cost = dot_binary(&block.cost, x.block(j));
        let rest = problem.objective(x) - own_cost;
        for u in oracle.enumerate().map_err(|e| e.in_block(j))? {
            let mut ru = base.clone();
            block.coupling.add_binary_product(&u, &mut ru, false);
            if al_from_parts(rest.clone() + dot_binary(&block.cost, &u), &ru, dual) < current {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `⌈(2C√n + κn)/κ⌉` with `C = max_{x ∈ X} ‖∇L(x)‖` found by enumerating `X`.
pub fn sweep_bound<S: Scalar>(problem: &BlockProblem<S>, dual: &DualState<S>, kappa: f64, cap: usize) -> Result<u64> {
    let mut points = Vec::new();
    let mut total: usize = 1;
    for (j, b) in problem.blocks().iter().enumerate() {
        let pts = crate::oracle::enumerate_feasible(&b.set, b.dim()).map_err(|e| e.in_block(j))?;
        total = total
            .checked_mul(pts.len())
            .filter(|&t| t <= cap)
            .ok_or(Error::CapExceeded { block: None, cap })?;
        points.push(pts);
    }
    let mut c_max: f64 = 0.0;
    let mut idx = vec![0usize; points.len()];
    loop {
        let x = Assignment::new(idx.iter().enumerate().map(|(j, &k)| points[j][k].clone()).collect());
        let g = full_gradient(problem, &x, dual)?.concat();
        c_max = c_max.max(norm_sq(&g).to_f64_lossy().sqrt());
        let mut j = idx.len();
        loop {
            if j == 0 {
                let n = problem.n() as f64;
                return Ok(((2.0 * c_max * n.sqrt() + kappa * n) / kappa).ceil() as u64);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < points[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Blockwise-feasible start from oracle answers at random weights.
pub fn random_start<S: Scalar, O: LinearOracle<S>>(oracles: &[O], seed: u64) -> Result<Assignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = oracles
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let w: Vec<S> = (0..o.dimension()).map(|_| S::from_int(rng.gen_range(-10..=10))).collect();
            o.minimize(&w).map(|a| a.x).map_err(|e| e.in_block(j))
        })
        .collect::<Result<_>>()?;
    Ok(Assignment::new(blocks))
}
