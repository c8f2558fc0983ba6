//! Structural conditions under which the linearized classical step is exact.

use serde::Serialize;

use super::BlockProblem;
use crate::scalar::Scalar;

/// Largest block dimension for which `{x : A_j x ≤ 1} ⊆ X_j` is checked by
/// enumerating all of `{0,1}^{n_j}`.
const MAX_ENUM_DIM: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Unverified,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssumptionReport {
    /// Every entry of `A` is 0 or 1 and `b = 1`.
    pub binary_coupling: bool,
    /// Per block: the support of `c_j` lies in the zero columns of `A_j`.
    pub cost_support: Vec<bool>,
    /// Per block: `c_j` has at most one nonzero and every 0/1 point with
    /// `A_j x ≤ 1` belongs to `X_j`.
    pub closure_condition: Vec<Verdict>,
}

impl AssumptionReport {
    /// Condition (i) for every block, or (ii) verified for every block.
    pub fn cost_condition(&self) -> bool {
        self.cost_support.iter().all(|&v| v) || self.closure_condition.iter().all(|&v| v == Verdict::Holds)
    }

    pub fn all_hold(&self) -> bool {
        self.binary_coupling && self.cost_condition()
    }
}

pub fn check_assumptions<S: Scalar>(problem: &BlockProblem<S>) -> AssumptionReport {
    let binary_coupling = problem.rhs().iter().all(|b| b.is_one())
        && problem
            .blocks()
            .iter()
            .all(|b| b.coupling.triplets().all(|(_, _, v)| v.is_one()));

    // The zero vector is always in X_j and satisfies A_j x ≤ 1, so (i) reduces
    // to the support condition.
    let cost_support = problem
        .blocks()
        .iter()
        .map(|b| (0..b.dim()).all(|s| b.cost[s].is_zero() || b.coupling.column_is_zero(s)))
        .collect();

    let closure_condition = problem
        .blocks()
        .iter()
        .map(|b| {
            if b.cost.iter().filter(|c| !c.is_zero()).count() > 1 {
                return Verdict::Fails;
            }
            let n = b.dim();
            if n > MAX_ENUM_DIM {
                return Verdict::Unverified;
            }
            let mut u = vec![false; n];
            for mask in 0u32..(1u32 << n) {
                for (s, bit) in u.iter_mut().enumerate() {
                    *bit = mask >> s & 1 == 1;
                }
                let fits = b.coupling.binary_product(&u).iter().all(|v| *v <= S::one());
                if fits && !b.set.contains(&u) {
                    return Verdict::Fails;
                }
            }
            Verdict::Holds
        })
        .collect();

    AssumptionReport { binary_coupling, cost_support, closure_condition }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::e1;
    use crate::model::BlockSpec;
    use crate::scalar::Rational;

    #[test]
    fn e1_report() {
        let r = check_assumptions(&e1::<Rational>());
        assert!(r.binary_coupling);
        // every coupled column carries a cost, and c_j has two nonzeros
        assert_eq!(r.cost_support, vec![false, false]);
        assert_eq!(r.closure_condition, vec![Verdict::Fails, Verdict::Fails]);
        assert!(!r.cost_condition());
    }

    #[test]
    fn rhs_two_breaks_binary_coupling() {
        let p = e1::<Rational>().with_rhs(vec![Rational::from_int(2), Rational::from_int(1)]).unwrap();
        assert!(!check_assumptions(&p).binary_coupling);
    }

    #[test]
    fn single_cost_full_box() {
        let base = e1::<f64>();
        let mut blocks = base.blocks().to_vec();
        for b in &mut blocks {
            b.cost = vec![-1.0, 0.0];
        }
        // X_j = {x : x_1 + x_2 ≤ 1} equals {x : A_j x ≤ 1} only if A_j couples both
        // variables in one row; here A_j = I so (1,1) fits A but not X_j.
        let p = BlockProblem::new(2, vec![1.0, 1.0], blocks.clone()).unwrap();
        assert_eq!(check_assumptions(&p).closure_condition, vec![Verdict::Fails; 2]);

        for b in &mut blocks {
            b.set = BlockSpec::Polyhedron {
                matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                rhs: vec![1.0, 1.0],
            };
        }
        let p = BlockProblem::new(2, vec![1.0, 1.0], blocks).unwrap();
        let r = check_assumptions(&p);
        assert_eq!(r.closure_condition, vec![Verdict::Holds; 2]);
        assert!(r.all_hold());
    }
}
