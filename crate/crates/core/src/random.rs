//! Seeded random instances for fuzzing and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Block, BlockProblem, BlockSpec};
use crate::scalar::Scalar;
use crate::sparse::SparseColumns;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomMode {
    /// Small integer data, mixed polyhedral and point blocks.
    General,
    /// 0/1 coupling with `b = 1`; every block point satisfies `A_j u ≤ 1` and
    /// costs sit on uncoupled columns.
    AssumptionConstrained,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    pub blocks: usize,
    pub rows: usize,
    pub block_dim: usize,
    pub density: f64,
    pub mode: RandomMode,
}

pub fn generate_random<S: Scalar>(seed: u64, spec: &RandomSpec) -> BlockProblem<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec.mode {
        RandomMode::General => general(&mut rng, spec),
        RandomMode::AssumptionConstrained => constrained(&mut rng, spec),
    }
}

fn int<S: Scalar>(v: i64) -> S {
    S::from_int(v)
}

fn general<S: Scalar>(rng: &mut ChaCha8Rng, spec: &RandomSpec) -> BlockProblem<S> {
    let (m, n) = (spec.rows, spec.block_dim);
    let rhs = (0..m).map(|_| int(rng.gen_range(1..=3))).collect();
    let blocks = (0..spec.blocks)
        .map(|_| {
            let cost = (0..n).map(|_| int(rng.gen_range(-5..=3))).collect();
            let mut triplets = Vec::new();
            for c in 0..n {
                for r in 0..m {
                    if rng.gen_bool(spec.density.clamp(0.0, 1.0)) {
                        triplets.push((r, c, int(rng.gen_range(1..=2))));
                    }
                }
            }
            let coupling = SparseColumns::from_triplets(m, n, triplets).expect("indices in range");
            let set = if rng.gen_bool(0.5) {
                let rows = rng.gen_range(1..=2);
                BlockSpec::Polyhedron {
                    matrix: (0..rows).map(|_| (0..n).map(|_| int(rng.gen_range(0..=2))).collect()).collect(),
                    rhs: (0..rows).map(|_| int(rng.gen_range(1..=3))).collect(),
                }
            } else {
                let mut points = vec![vec![false; n]];
                for _ in 0..rng.gen_range(1..=2 * n.max(1)) {
                    let u: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
                    if !points.contains(&u) {
                        points.push(u);
                    }
                }
                BlockSpec::Points(points)
            };
            Block { cost, coupling, set }
        })
        .collect();
    BlockProblem::new(m, rhs, blocks).expect("generator output is valid")
}

fn constrained<S: Scalar>(rng: &mut ChaCha8Rng, spec: &RandomSpec) -> BlockProblem<S> {
    let (m, n) = (spec.rows, spec.block_dim.max(1));
    let profit_cols = (n / 3).max(1);
    let coupled = n - profit_cols;
    let blocks = (0..spec.blocks)
        .map(|_| {
            let mut triplets = Vec::new();
            let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
            for (c, col) in columns.iter_mut().enumerate().take(coupled) {
                for r in 0..m {
                    if rng.gen_bool(spec.density.clamp(0.0, 1.0)) {
                        triplets.push((r, c, S::one()));
                        col.push(r);
                    }
                }
            }
            let mut cost = vec![S::zero(); n];
            for c in cost.iter_mut().skip(coupled) {
                *c = int(rng.gen_range(-6..=-1));
            }
            let mut points = vec![vec![false; n]];
            for _ in 0..rng.gen_range(1..=2 * n) {
                let mut u = vec![false; n];
                u[coupled + rng.gen_range(0..profit_cols)] = true;
                let mut used = vec![false; m];
                let mut order: Vec<usize> = (0..coupled).collect();
                order.shuffle(rng);
                for c in order {
                    if rng.gen_bool(0.5) && columns[c].iter().all(|&r| !used[r]) {
                        columns[c].iter().for_each(|&r| used[r] = true);
                        u[c] = true;
                    }
                }
                if !points.contains(&u) {
                    points.push(u);
                }
            }
            Block {
                cost,
                coupling: SparseColumns::from_triplets(m, n, triplets).expect("indices in range"),
                set: BlockSpec::Points(points),
            }
        })
        .collect();
    BlockProblem::new(m, vec![S::one(); m], blocks).expect("generator output is valid")
}
