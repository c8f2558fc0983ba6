//! Reference computations written directly from the definitions, sharing no
//! code paths with the solver beyond reading instance data.

#![allow(dead_code)]

use blockalm::model::{Assignment, BlockProblem, BlockSpec, DagArc, DagPaths};
use blockalm::random::{generate_random, RandomMode, RandomSpec};
use blockalm::{Rational, Scalar};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = Rational;

pub fn q(n: i64) -> Q {
    Q::from_int(n)
}

pub fn frac(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn bits(n: usize, mask: u64) -> Vec<bool> {
    // first coordinate is the most significant bit, so masks run in lex order
    (0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect()
}

fn dag_member(dag: &DagPaths, u: &[bool]) -> bool {
    let chosen: Vec<&DagArc> = dag.arcs.iter().filter(|a| u[a.var]).collect();
    if chosen.is_empty() {
        return dag.include_empty_path;
    }
    let mut cur = dag.source;
    let mut used = 0;
    while cur != dag.sink {
        let outs: Vec<&&DagArc> = chosen.iter().filter(|a| a.from == cur).collect();
        if outs.len() != 1 || used == chosen.len() {
            return false;
        }
        cur = outs[0].to;
        used += 1;
    }
    used == chosen.len()
}

pub fn member<S: Scalar>(spec: &BlockSpec<S>, u: &[bool]) -> bool {
    match spec {
        BlockSpec::Polyhedron { matrix, rhs } => matrix.iter().zip(rhs).all(|(row, d)| {
            let lhs = row.iter().zip(u).filter(|(_, &b)| b).fold(S::zero(), |s, (a, _)| s + a.clone());
            lhs <= *d
        }),
        BlockSpec::Points(points) => points.iter().any(|p| p == u),
        BlockSpec::Dag(dag) => dag_member(dag, u),
    }
}

/// `X_j` in lexicographic order by scanning the whole cube.
pub fn points<S: Scalar>(spec: &BlockSpec<S>, n: usize) -> Vec<Vec<bool>> {
    assert!(n <= 20, "cube too large for reference enumeration");
    (0..1u64 << n).map(|m| bits(n, m)).filter(|u| member(spec, u)).collect()
}

/// All of `X`, lexicographic in the stacked vector.
pub fn product<S: Scalar>(p: &BlockProblem<S>) -> Vec<Assignment> {
    let sets: Vec<Vec<Vec<bool>>> = p.blocks().iter().map(|b| points(&b.set, b.cost.len())).collect();
    let mut out = vec![Vec::new()];
    for set in &sets {
        let mut next = Vec::with_capacity(out.len() * set.len());
        for prefix in &out {
            for u in set {
                let mut v: Vec<Vec<bool>> = prefix.clone();
                v.push(u.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(Assignment::new).collect()
}

pub fn objective<S: Scalar>(p: &BlockProblem<S>, x: &Assignment) -> S {
    let mut s = S::zero();
    for (b, u) in p.blocks().iter().zip(x.blocks()) {
        for (c, &v) in b.cost.iter().zip(u) {
            if v {
                s = s + c.clone();
            }
        }
    }
    s
}

pub fn residual<S: Scalar>(p: &BlockProblem<S>, x: &Assignment) -> Vec<S> {
    let mut r: Vec<S> = p.rhs().iter().map(|b| -b.clone()).collect();
    for (b, u) in p.blocks().iter().zip(x.blocks()) {
        for (i, col, a) in b.coupling.triplets() {
            if u[col] {
                r[i] = r[i].clone() + a.clone();
            }
        }
    }
    r
}

pub fn pos<S: Scalar>(v: &S) -> S {
    if *v > S::zero() {
        v.clone()
    } else {
        S::zero()
    }
}

pub fn feasible<S: Scalar>(p: &BlockProblem<S>, x: &Assignment) -> bool {
    x.num_blocks() == p.num_blocks()
        && p.blocks().iter().zip(x.blocks()).all(|(b, u)| u.len() == b.cost.len() && member(&b.set, u))
        && residual(p, x).iter().all(|r| *r <= S::feasibility_tolerance())
}

/// `cᵀx + λᵀr + (ρ/2)‖r₊‖²` with `r = Ax − b`.
pub fn al<S: Scalar>(p: &BlockProblem<S>, x: &Assignment, lambda: &[S], rho: &S) -> S {
    let r = residual(p, x);
    let mut v = objective(p, x);
    for (l, ri) in lambda.iter().zip(&r) {
        let rp = pos(ri);
        v = v + l.clone() * ri.clone() + rho.clone() * rp.clone() * rp / S::from_int(2);
    }
    v
}

/// Stacked `c + Aᵀ(λ + ρ r₊)`.
pub fn gradient<S: Scalar>(p: &BlockProblem<S>, x: &Assignment, lambda: &[S], rho: &S) -> Vec<Vec<S>> {
    let r = residual(p, x);
    let w: Vec<S> = lambda.iter().zip(&r).map(|(l, ri)| l.clone() + rho.clone() * pos(ri)).collect();
    p.blocks()
        .iter()
        .map(|b| {
            let mut g = b.cost.clone();
            for (i, col, a) in b.coupling.triplets() {
                g[col] = g[col].clone() + a.clone() * w[i].clone();
            }
            g
        })
        .collect()
}

pub fn optimum<S: Scalar>(p: &BlockProblem<S>) -> Option<(S, Assignment)> {
    let mut best: Option<(S, Assignment)> = None;
    for x in product(p) {
        if feasible(p, &x) {
            let v = objective(p, &x);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x));
            }
        }
    }
    best
}

/// `min_{x ∈ X} L(x, λ, ρ)` and the lexicographically first minimizer.
pub fn dual_value<S: Scalar>(p: &BlockProblem<S>, lambda: &[S], rho: &S) -> (S, Assignment) {
    let mut best: Option<(S, Assignment)> = None;
    for x in product(p) {
        let v = al(p, &x, lambda, rho);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    best.expect("X contains the zero vector")
}

pub fn hamming(a: &Assignment, b: &Assignment) -> usize {
    a.stacked().iter().zip(b.stacked()).filter(|(x, y)| **x != *y).count()
}

pub fn small_random(seed: u64, max_blocks: usize, max_rows: usize, max_dim: usize, mode: RandomMode) -> BlockProblem<Q> {
    let mut r = rng(seed ^ 0x5eed);
    let spec = RandomSpec {
        blocks: r.gen_range(1..=max_blocks),
        rows: r.gen_range(1..=max_rows),
        block_dim: r.gen_range(1..=max_dim),
        density: r.gen_range(0.2..0.8),
        mode,
    };
    generate_random(seed, &spec)
}

/// Random forward DAG with at most `max_arcs` arcs, source 0 and sink `nodes - 1`.
pub fn random_dag(r: &mut ChaCha8Rng, max_arcs: usize) -> DagPaths {
    let nodes = r.gen_range(2..=5);
    let mut pairs: Vec<(usize, usize)> = (0..nodes).flat_map(|a| (a + 1..nodes).map(move |b| (a, b))).collect();
    let mut arcs = Vec::new();
    while !pairs.is_empty() && arcs.len() < max_arcs {
        let (from, to) = pairs.swap_remove(r.gen_range(0..pairs.len()));
        if r.gen_bool(0.7) {
            arcs.push((from, to));
        }
    }
    let mut vars: Vec<usize> = (0..arcs.len()).collect();
    vars.shuffle(r);
    DagPaths {
        num_nodes: nodes,
        source: 0,
        sink: nodes - 1,
        arcs: arcs
            .into_iter()
            .zip(vars)
            .map(|((from, to), var)| DagArc { from, to, var })
            .collect(),
        include_empty_path: true,
    }
}

pub fn random_dual(r: &mut ChaCha8Rng, m: usize) -> (Vec<Q>, Q) {
    let lambda = (0..m).map(|_| frac(r.gen_range(0..=12), r.gen_range(1..=4))).collect();
    let rho = frac(r.gen_range(1..=16), r.gen_range(1..=4));
    (lambda, rho)
}

pub fn random_integral_dual(r: &mut ChaCha8Rng, m: usize) -> (Vec<Q>, Q) {
    let lambda = (0..m).map(|_| q(r.gen_range(0..=4))).collect();
    (lambda, q(r.gen_range(1..=4)))
}
