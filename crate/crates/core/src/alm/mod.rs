//! Outer augmented Lagrangian loop: warm-started BCD, refinement, bounds
//! and projected subgradient updates of `(λ, ρ)`.

mod trace;

pub use trace::{SolveTrace, TraceRow};

use std::time::{Duration, Instant};

use log::{debug, info};

use crate::alfunc::{dual_subgradient, lr_dual_value, DualState, Violation};
use crate::bcd::{BcdConfig, BcdSolver};
use crate::error::{Error, Result};
use crate::model::{enumerated_dual_value, verify_feasible, Assignment, BlockProblem};
use crate::oracle::LinearOracle;
use crate::refine::Refiner;
use crate::scalar::{norm_sq, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum PenaltyMode<S> {
    /// `ρ' = ρ + (α/2)‖(Ax − b)₊‖²`.
    Subgradient,
    /// `ρ' = σρ`.
    Geometric { sigma: S },
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepSchedule<S> {
    /// `β_k = β`.
    Constant(S),
    /// `β_k = β₀/√k`.
    Decay(S),
}

/// Guard on the subgradient norm in the step size.
pub const STEP_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct AlmConfig<S> {
    pub k_max: usize,
    pub penalty: PenaltyMode<S>,
    pub schedule: StepSchedule<S>,
    pub rho0: S,
    pub lambda0: Option<Vec<S>>,
    pub x0: Option<Assignment>,
    pub time_limit: Option<Duration>,
    /// Known optimum `f*`; enables gap1 and the gap stopping rule.
    pub reference_optimum: Option<S>,
    pub gap_threshold: f64,
    /// Upper bound for gap2 in the maximization convention.
    pub upper_bound: Option<S>,
    /// Compute the Lagrangian relaxation bound every iteration.
    pub lower_bounds: bool,
    /// Fill the `ms` column with wall time instead of zeros.
    pub record_time: bool,
}

impl<S: Scalar> Default for AlmConfig<S> {
    fn default() -> Self {
        Self {
            k_max: 500,
            penalty: PenaltyMode::Geometric {
                sigma: S::from_f64_lossy(1.2),
            },
            schedule: StepSchedule::Constant(S::one()),
            rho0: S::one(),
            lambda0: None,
            x0: None,
            time_limit: None,
            reference_optimum: None,
            gap_threshold: 1e-9,
            upper_bound: None,
            lower_bounds: true,
            record_time: false,
        }
    }
}

impl<S: Scalar> AlmConfig<S> {
    fn validate(&self) -> Result<()> {
        if self.rho0 <= S::zero() {
            return Err(Error::validation("rho0", "must be positive"));
        }
        if let PenaltyMode::Geometric { sigma } = &self.penalty {
            if *sigma <= S::one() {
                return Err(Error::validation("sigma", "must exceed 1"));
            }
        }
        let beta = match &self.schedule {
            StepSchedule::Constant(b) | StepSchedule::Decay(b) => b,
        };
        if *beta <= S::zero() {
            return Err(Error::validation("beta", "must be positive"));
        }
        Ok(())
    }
}

/// `λ' = (λ + α r)₊`, `ρ'` per `mode`.
pub fn dual_update<S: Scalar>(dual: &DualState<S>, residual: &[S], alpha: &S, mode: &PenaltyMode<S>) -> DualState<S> {
    let lambda = dual
        .lambda
        .iter()
        .zip(residual)
        .map(|(l, r)| (l.clone() + alpha.clone() * r.clone()).positive_part())
        .collect();
    let rho = match mode {
        PenaltyMode::Subgradient => {
            let pos: Vec<S> = residual.iter().map(Scalar::positive_part).collect();
            dual.rho.clone() + alpha.clone() * S::half() * norm_sq(&pos)
        }
        PenaltyMode::Geometric { sigma } => sigma.clone() * dual.rho.clone(),
    };
    DualState { lambda, rho }
}

/// `α = β_k / max(‖d_g‖, ε)`; `k` counts from 1.
pub fn step_size<S: Scalar>(schedule: &StepSchedule<S>, k: usize, subgrad_norm: &S) -> S {
    let beta = match schedule {
        StepSchedule::Constant(b) => b.clone(),
        StepSchedule::Decay(b0) => b0.clone() / S::from_int(k.max(1) as i64).sqrt_approx(),
    };
    let eps = S::from_f64_lossy(STEP_EPS);
    let norm = if *subgrad_norm > eps { subgrad_norm.clone() } else { eps };
    beta / norm
}

/// Norm of the full subgradient `(Ax − b, ½‖(Ax − b)₊‖²)`.
pub fn subgradient_norm<S: Scalar>(residual: &[S], s_rho: &S) -> S {
    (norm_sq(residual) + s_rho.clone() * s_rho.clone()).sqrt_approx()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsAndGaps<S> {
    pub lr_lb: S,
    pub gap1: Option<f64>,
    pub gap2: Option<f64>,
}

/// `|f − f*| / |f*|`, undefined at `f* = 0`.
pub fn gap1<S: Scalar>(value: &S, reference: &S) -> Option<f64> {
    (!reference.is_zero()).then(|| ((value.clone() - reference.clone()).abs() / reference.abs()).to_f64_lossy())
}

/// `(UB − f)/f` for the profit `f = −value`, undefined at `f = 0`.
pub fn gap2<S: Scalar>(value: &S, upper_bound: &S) -> Option<f64> {
    let profit = -value.clone();
    (!profit.is_zero()).then(|| ((upper_bound.clone() - profit.clone()) / profit).to_f64_lossy())
}

/// Lagrangian bound at `λ` and the gaps of a feasible incumbent. Without an
/// explicit `UB`, gap2 uses the negated Lagrangian bound.
pub fn bounds_and_gaps<S: Scalar, O: LinearOracle<S>>(
    problem: &BlockProblem<S>,
    incumbent: Option<&Assignment>,
    lambda: &[S],
    oracles: &[O],
    reference: Option<&S>,
    upper_bound: Option<&S>,
) -> Result<BoundsAndGaps<S>> {
    let lr_lb = lr_dual_value(problem, lambda, oracles)?.value;
    let (g1, g2) = match incumbent {
        Some(x) => {
            verify_feasible(problem, x).map_err(|_| Error::Infeasible)?;
            let f = problem.objective(x);
            let ub = upper_bound.cloned().unwrap_or_else(|| -lr_lb.clone());
            (reference.and_then(|r| gap1(&f, r)), gap2(&f, &ub))
        }
        None => (None, None),
    };
    Ok(BoundsAndGaps { lr_lb, gap1: g1, gap2: g2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Feasible,
    GapReached,
    KMax,
    TimeLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Incumbent<S> {
    pub x: Assignment,
    pub value: S,
    /// Outer iteration that produced it.
    pub k: usize,
}

#[derive(Clone, Debug)]
pub struct AlmOutcome<S> {
    pub incumbent: Option<Incumbent<S>>,
    pub trace: SolveTrace<S>,
    pub dual: DualState<S>,
    pub best_lower_bound: Option<S>,
    /// Last BCD output.
    pub x: Assignment,
    pub stop: StopReason,
    pub heuristic_step: bool,
}

/// Customized ALM: BCD from the previous iterate, refinement when the BCD
/// output is infeasible, incumbent update when `cᵀx̄ ≤ f*`, then the dual
/// step.
pub fn alm_solve<S: Scalar, O: LinearOracle<S>, R: Refiner<S> + ?Sized>(
    problem: &BlockProblem<S>,
    oracles: &[O],
    bcd_cfg: &BcdConfig<S>,
    cfg: &AlmConfig<S>,
    refiner: &mut R,
) -> Result<AlmOutcome<S>> {
    cfg.validate()?;
    let start = Instant::now();
    let solver = BcdSolver::new(problem, oracles, bcd_cfg.clone())?;
    let lambda = cfg.lambda0.clone().unwrap_or_else(|| vec![S::zero(); problem.m()]);
    let mut dual = DualState::new(lambda, cfg.rho0.clone())?;
    let mut x = cfg.x0.clone().unwrap_or_else(|| Assignment::zeros_for(problem));
    let mut incumbent: Option<Incumbent<S>> = None;
    let mut best_lb: Option<S> = None;
    let mut trace = SolveTrace::default();
    let mut stop = StopReason::KMax;
    let mut heuristic = false;

    for k in 0..cfg.k_max {
        if cfg.time_limit.is_some_and(|t| start.elapsed() >= t) {
            stop = StopReason::TimeLimit;
            break;
        }
        let res = solver.solve(&x, &dual)?;
        heuristic |= res.heuristic_step;
        x = res.x;
        refiner.observe(problem, &x);
        let viol = Violation::of(problem, &x);
        let feasible = viol.is_feasible();
        let candidate = if feasible { Some(x.clone()) } else { refiner.refine(problem)? };
        if let Some(c) = candidate {
            if verify_feasible(problem, &c).is_ok() {
                let v = problem.objective(&c);
                if incumbent.as_ref().is_none_or(|inc| v <= inc.value) {
                    incumbent = Some(Incumbent { x: c, value: v, k });
                }
            } else {
                debug!("k={k}: refinement produced an infeasible candidate; ignored");
            }
        }
        let lb = if cfg.lower_bounds {
            let lb = lr_dual_value(problem, &dual.lambda, oracles)?.value;
            if best_lb.as_ref().is_none_or(|b| lb > *b) {
                best_lb = Some(lb.clone());
            }
            Some(lb)
        } else {
            None
        };
        let inc_value = incumbent.as_ref().map(|i| i.value.clone());
        let g1 = match (&inc_value, &cfg.reference_optimum) {
            (Some(f), Some(r)) => gap1(f, r),
            _ => None,
        };
        let g2 = inc_value.as_ref().and_then(|f| {
            let ub = cfg.upper_bound.clone().or_else(|| best_lb.clone().map(|b| -b))?;
            gap2(f, &ub)
        });
        trace.rows.push(TraceRow {
            k,
            rho: dual.rho.clone(),
            lambda_norm: dual.lambda_norm(),
            l_value: res.l_values.last().cloned().expect("at least L(x0)"),
            lower_bound: lb,
            incumbent: inc_value,
            violation: viol.two_norm_sq.to_f64_lossy().sqrt(),
            gap1: g1,
            gap2: g2,
            ms: if cfg.record_time { start.elapsed().as_millis() as u64 } else { 0 },
        });
        debug!("k={k} rho={} viol={:.3e} sweeps={}", dual.rho, viol.two_norm_sq.to_f64_lossy(), res.sweeps);

        match &cfg.reference_optimum {
            Some(_) if g1.is_some_and(|g| g <= cfg.gap_threshold) => {
                stop = StopReason::GapReached;
                break;
            }
            None if feasible => {
                stop = StopReason::Feasible;
                break;
            }
            _ => {}
        }

        let (s_lambda, s_rho) = dual_subgradient(problem, &x);
        let alpha = step_size(&cfg.schedule, k + 1, &subgradient_norm(&s_lambda, &s_rho));
        dual = dual_update(&dual, &s_lambda, &alpha, &cfg.penalty);
    }
    info!(
        "alm stopped ({stop:?}) after {} iterations, incumbent {:?}",
        trace.len(),
        incumbent.as_ref().map(|i| i.value.to_f64_lossy())
    );
    Ok(AlmOutcome {
        incumbent,
        trace,
        dual,
        best_lower_bound: best_lb,
        x,
        stop,
        heuristic_step: heuristic,
    })
}

/// Dual ascent with the `x`-subproblem solved globally by enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactAscentConfig<S> {
    pub k_max: usize,
    pub penalty: PenaltyMode<S>,
    pub schedule: StepSchedule<S>,
    pub rho0: S,
    pub cap: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactAscent<S> {
    /// `d(λᵏ, ρᵏ)` per iteration.
    pub d_values: Vec<S>,
    pub duals: Vec<DualState<S>>,
    pub best: S,
}

/// Runs until `d(λᵏ, ρᵏ)` reaches `target` or `k_max` iterations pass.
pub fn exact_dual_ascent<S: Scalar>(
    problem: &BlockProblem<S>,
    cfg: &ExactAscentConfig<S>,
    target: Option<&S>,
) -> Result<ExactAscent<S>> {
    let mut dual = DualState::zero(problem.m(), cfg.rho0.clone())?;
    let mut d_values = Vec::new();
    let mut duals = Vec::new();
    let mut best: Option<S> = None;
    for k in 0..cfg.k_max {
        let (d, x) = enumerated_dual_value(problem, &dual.lambda, &dual.rho, cfg.cap)?;
        if best.as_ref().is_none_or(|b| d > *b) {
            best = Some(d.clone());
        }
        d_values.push(d.clone());
        duals.push(dual.clone());
        if target.is_some_and(|t| d == *t) {
            break;
        }
        let (s_lambda, s_rho) = dual_subgradient(problem, &x);
        let alpha = step_size(&cfg.schedule, k + 1, &subgradient_norm(&s_lambda, &s_rho));
        dual = dual_update(&dual, &s_lambda, &alpha, &cfg.penalty);
    }
    Ok(ExactAscent {
        d_values,
        duals,
        best: best.ok_or_else(|| Error::validation("k_max", "must be at least 1"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcd::UpdateKind;
    use crate::model::brute_force_optimum;
    use crate::model::fixtures::{e1, x};
    use crate::oracle::build_oracles;
    use crate::refine::{NoRefinement, SweepRefiner};
    use crate::scalar::Rational;

    fn r(v: i64) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn dual_update_examples() {
        let d = DualState::new(vec![r(0), r(0)], r(1)).unwrap();
        let up = dual_update(&d, &[r(1), r(-1)], &r(1), &PenaltyMode::Subgradient);
        assert_eq!(up.lambda, vec![r(1), r(0)]);
        let up = dual_update(&d, &[r(1), r(0)], &r(2), &PenaltyMode::Subgradient);
        assert_eq!(up.rho, r(2));
        let up = dual_update(&d, &[r(-1), r(-2)], &r(3), &PenaltyMode::Subgradient);
        assert_eq!(up.rho, r(1));
        let up = dual_update(&d, &[r(-1), r(-2)], &r(3), &PenaltyMode::Geometric { sigma: r(2) });
        assert_eq!(up.rho, r(2));
        assert_eq!(up.lambda, vec![r(0), r(0)]);
    }

    #[test]
    fn step_sizes() {
        assert_eq!(step_size(&StepSchedule::Constant(1.0), 1, &2.0), 0.5);
        assert_eq!(step_size(&StepSchedule::Decay(1.0), 4, &1.0), 0.5);
        assert_eq!(step_size(&StepSchedule::Decay(1.0), 4, &2.0), 0.25);
        assert_eq!(step_size(&StepSchedule::Constant(1.0), 1, &0.0), 1.0 / STEP_EPS);
    }

    #[test]
    fn gaps() {
        assert_eq!(gap1(&-4.0, &-4.0), Some(0.0));
        assert_eq!(gap1(&-4.0, &0.0), None);
        let g = gap2(&-100.0, &110.0).unwrap();
        assert!((g - 0.1).abs() < 1e-12);
        assert_eq!(gap2(&0.0, &1.0), None);
    }

    #[test]
    fn e1_bounds() {
        let p = e1::<Rational>();
        let o = build_oracles(&p).unwrap();
        let inc = x(&[&[0, 1], &[1, 0]]);
        let b = bounds_and_gaps(&p, Some(&inc), &[r(0), r(0)], &o, Some(&r(-4)), None).unwrap();
        assert_eq!(b.lr_lb, r(-5));
        assert!(b.lr_lb <= p.objective(&inc));
        assert_eq!(b.gap1, Some(0.0));
        // UB from the bound: (5 - 4)/4
        assert_eq!(b.gap2, Some(0.25));
        let bad = x(&[&[1, 0], &[1, 0]]);
        assert!(bounds_and_gaps(&p, Some(&bad), &[r(0), r(0)], &o, None, None).is_err());
    }

    fn geometric_cfg() -> AlmConfig<Rational> {
        AlmConfig {
            penalty: PenaltyMode::Geometric { sigma: r(2) },
            rho0: r(1),
            k_max: 20,
            ..AlmConfig::default()
        }
    }

    #[test]
    fn e1_alm_exact() {
        let p = e1::<Rational>();
        let o = build_oracles(&p).unwrap();
        let cfg = AlmConfig {
            reference_optimum: Some(r(-4)),
            ..geometric_cfg()
        };
        let out = alm_solve(&p, &o, &BcdConfig::new(UpdateKind::ClassicalExact), &cfg, &mut SweepRefiner::default()).unwrap();
        let inc = out.incumbent.unwrap();
        assert_eq!(inc.value, r(-4));
        assert!(out.trace.len() <= 20);
        assert_eq!(out.stop, StopReason::GapReached);
    }

    #[test]
    fn immediately_feasible() {
        let p = e1::<Rational>().with_rhs(vec![r(5), r(5)]).unwrap();
        let o = build_oracles(&p).unwrap();
        let out = alm_solve(&p, &o, &BcdConfig::new(UpdateKind::ClassicalExact), &geometric_cfg(), &mut NoRefinement).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.stop, StopReason::Feasible);
        assert_eq!(out.incumbent.unwrap().value, brute_force_optimum(&p).unwrap().value);
    }

    #[test]
    fn zero_iterations() {
        let p = e1::<Rational>();
        let o = build_oracles(&p).unwrap();
        let cfg = AlmConfig { k_max: 0, ..geometric_cfg() };
        let out = alm_solve(&p, &o, &BcdConfig::default(), &cfg, &mut NoRefinement).unwrap();
        assert!(out.trace.is_empty());
        assert!(out.incumbent.is_none());
    }

    #[test]
    fn trace_invariants() {
        let p = e1::<Rational>();
        let o = build_oracles(&p).unwrap();
        for penalty in [PenaltyMode::Subgradient, PenaltyMode::Geometric { sigma: Rational::new(6.into(), 5.into()) }] {
            let cfg = AlmConfig {
                penalty,
                k_max: 30,
                reference_optimum: Some(r(-5)), // unattainable, so the loop runs to k_max
                ..geometric_cfg()
            };
            let out = alm_solve(&p, &o, &BcdConfig::new(UpdateKind::ProxLinear), &cfg, &mut SweepRefiner::default()).unwrap();
            assert_eq!(out.trace.len(), 30);
            let rows = &out.trace.rows;
            assert!(rows.windows(2).all(|w| w[0].rho <= w[1].rho));
            let incs: Vec<&Rational> = rows.iter().filter_map(|r| r.incumbent.as_ref()).collect();
            assert!(incs.windows(2).all(|w| w[1] <= w[0]));
            for row in rows {
                if let (Some(lb), Some(inc)) = (&row.lower_bound, &row.incumbent) {
                    assert!(*lb <= r(-4) && r(-4) <= *inc);
                }
            }
        }
    }

    #[test]
    fn exact_ascent_on_e1() {
        let p = e1::<Rational>();
        let cfg = ExactAscentConfig {
            k_max: 200,
            penalty: PenaltyMode::Geometric { sigma: r(2) },
            schedule: StepSchedule::Constant(r(1)),
            rho0: r(1),
            cap: 1_000_000,
        };
        let out = exact_dual_ascent(&p, &cfg, Some(&r(-4))).unwrap();
        assert_eq!(out.best, r(-4));
        assert!(out.d_values.iter().all(|d| *d <= r(-4)));
    }
}
