//! Feasible solutions from past BCD iterates: prefix sweeping over
//! per-block pools, and greedy independent sets on a conflict graph.

use std::collections::{BTreeSet, HashMap};

use log::debug;

use crate::error::{Error, Result};
use crate::model::{verify_feasible, Assignment, BlockProblem};
use crate::scalar::Scalar;

pub const DEFAULT_POOL_CAPACITY: usize = 50;
/// Cheapest nodes used as independent-set seeds, besides the newest ones.
pub const TOP_SEEDS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<S> {
    pub x: Vec<bool>,
    pub cost: S,
    seq: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insert {
    Added,
    /// Added after evicting the worst candidate.
    Replaced,
    Duplicate,
    /// Zero vectors and candidates no better than a full pool's worst.
    Ignored,
}

/// Per-block candidate lists `V_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionPool<S> {
    blocks: Vec<Vec<Candidate<S>>>,
    capacity: usize,
    seq: u64,
}

impl<S: Scalar> SolutionPool<S> {
    pub fn new(num_blocks: usize, capacity: usize) -> Self {
        Self {
            blocks: vec![Vec::new(); num_blocks],
            capacity: capacity.max(1),
            seq: 0,
        }
    }

    pub fn for_problem(problem: &BlockProblem<S>) -> Self {
        Self::new(problem.num_blocks(), DEFAULT_POOL_CAPACITY)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self, j: usize) -> usize {
        self.blocks[j].len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(Vec::is_empty)
    }

    /// Candidates of block `j`, cheapest first, ties in lexicographic order.
    pub fn sorted(&self, j: usize) -> Vec<&Candidate<S>> {
        let mut v: Vec<&Candidate<S>> = self.blocks[j].iter().collect();
        v.sort_by(|a, b| a.cost.partial_cmp(&b.cost).expect("comparable costs").then_with(|| a.x.cmp(&b.x)));
        v
    }

    pub fn insert(&mut self, problem: &BlockProblem<S>, j: usize, v: &[bool]) -> Result<Insert> {
        let block = problem.block(j)?;
        if v.len() != block.dim() || !block.set.contains(v) {
            return Err(Error::NotMember { block: j });
        }
        if v.iter().all(|&b| !b) {
            return Ok(Insert::Ignored);
        }
        let list = &mut self.blocks[j];
        if list.iter().any(|c| c.x == v) {
            return Ok(Insert::Duplicate);
        }
        let cost = problem.block_cost(j, v);
        self.seq += 1;
        let cand = Candidate {
            x: v.to_vec(),
            cost,
            seq: self.seq,
        };
        if list.len() < self.capacity {
            list.push(cand);
            return Ok(Insert::Added);
        }
        let worst = (0..list.len())
            .max_by(|&a, &b| {
                list[a]
                    .cost
                    .partial_cmp(&list[b].cost)
                    .expect("comparable costs")
                    .then_with(|| list[b].seq.cmp(&list[a].seq))
            })
            .expect("pool is full, hence nonempty");
        if cand.cost < list[worst].cost {
            list[worst] = cand;
            Ok(Insert::Replaced)
        } else {
            Ok(Insert::Ignored)
        }
    }
}

/// Blocks by best candidate cost, cheapest first; empty blocks last.
pub fn sweep_order<S: Scalar>(pool: &SolutionPool<S>) -> Vec<usize> {
    let mut keyed: Vec<(Option<S>, usize)> = (0..pool.blocks.len())
        .map(|j| (pool.sorted(j).first().map(|c| c.cost.clone()), j))
        .collect();
    keyed.sort_by(|a, b| match (&a.0, &b.0) {
        (Some(x), Some(y)) => x.partial_cmp(y).expect("comparable costs").then(a.1.cmp(&b.1)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.1.cmp(&b.1),
    });
    keyed.into_iter().map(|(_, j)| j).collect()
}

fn fits<S: Scalar>(acc: &[S], image: &[(usize, S)], rhs: &[S]) -> bool {
    let tol = S::feasibility_tolerance();
    image.iter().all(|(i, v)| {
        let new = acc[*i].clone() + v.clone();
        new <= rhs[*i].clone() + tol.clone() || new <= acc[*i]
    })
}

fn add_image<S: Scalar>(acc: &mut [S], image: &[(usize, S)]) {
    for (i, v) in image {
        acc[*i] = acc[*i].clone() + v.clone();
    }
}

/// Visits blocks in `order`, keeping for each the cheapest negative-cost
/// candidate compatible with the blocks already chosen.
pub fn sweep<S: Scalar>(problem: &BlockProblem<S>, pool: &SolutionPool<S>, order: &[usize]) -> Result<Assignment> {
    let mut x = Assignment::zeros_for(problem);
    let mut acc = vec![S::zero(); problem.m()];
    for &j in order {
        let coupling = &problem.block(j)?.coupling;
        for cand in pool.sorted(j) {
            if cand.cost >= S::zero() {
                break;
            }
            let image = coupling.binary_product_sparse(&cand.x);
            if fits(&acc, &image, problem.rhs()) {
                add_image(&mut acc, &image);
                x.set_block(j, cand.x.clone());
                break;
            }
        }
    }
    verify_feasible(problem, &x).map_err(|_| Error::Infeasible)?;
    Ok(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node<S> {
    pub block: usize,
    pub x: Vec<bool>,
    pub cost: S,
    image: Vec<(usize, S)>,
}

/// Candidates ever seen, with an edge between every pair that cannot be
/// selected together.
#[derive(Clone, Debug)]
pub struct ConflictGraph<S> {
    nodes: Vec<Node<S>>,
    adjacency: Vec<BTreeSet<usize>>,
    index: HashMap<(usize, Vec<bool>), usize>,
}

impl<S: Scalar> Default for ConflictGraph<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> ConflictGraph<S> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            adjacency: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &Node<S> {
        &self.nodes[id]
    }

    pub fn id_of(&self, block: usize, x: &[bool]) -> Option<usize> {
        self.index.get(&(block, x.to_vec())).copied()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(&b)
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    fn conflict(&self, problem: &BlockProblem<S>, a: &Node<S>, b: &Node<S>) -> bool {
        if a.block == b.block {
            return true;
        }
        let tol = S::feasibility_tolerance();
        let mut sums: Vec<(usize, S)> = a.image.clone();
        for (i, v) in &b.image {
            match sums.binary_search_by_key(i, |(r, _)| *r) {
                Ok(pos) => sums[pos].1 = sums[pos].1.clone() + v.clone(),
                Err(pos) => sums.insert(pos, (*i, v.clone())),
            }
        }
        sums.iter().any(|(i, v)| *v > problem.rhs()[*i].clone() + tol.clone())
    }

    /// Adds unseen nonzero candidates; returns the ids of all given
    /// candidates that are in the graph afterwards.
    pub fn update(&mut self, problem: &BlockProblem<S>, candidates: &[(usize, Vec<bool>)]) -> Result<Vec<usize>> {
        let mut ids = Vec::new();
        for (j, x) in candidates {
            let block = problem.block(*j)?;
            if x.iter().all(|&b| !b) {
                continue;
            }
            if !block.set.contains(x) {
                return Err(Error::NotMember { block: *j });
            }
            if let Some(id) = self.id_of(*j, x) {
                ids.push(id);
                continue;
            }
            let node = Node {
                block: *j,
                x: x.clone(),
                cost: problem.block_cost(*j, x),
                image: block.coupling.binary_product_sparse(x),
            };
            let id = self.nodes.len();
            let mut adj = BTreeSet::new();
            for (other, existing) in self.nodes.iter().enumerate() {
                if self.conflict(problem, &node, existing) {
                    adj.insert(other);
                }
            }
            for &other in &adj {
                self.adjacency[other].insert(id);
            }
            self.adjacency.push(adj);
            self.index.insert((*j, x.clone()), id);
            self.nodes.push(node);
            ids.push(id);
        }
        Ok(ids)
    }

    /// Seeds: the cheapest [`TOP_SEEDS`] nodes plus `newest`.
    pub fn default_seeds(&self, newest: &[usize]) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.nodes.len()).collect();
        ids.sort_by(|&a, &b| self.order(a, b));
        let mut seeds: Vec<usize> = ids.into_iter().take(TOP_SEEDS).collect();
        for &n in newest {
            if !seeds.contains(&n) {
                seeds.push(n);
            }
        }
        seeds
    }

    fn order(&self, a: usize, b: usize) -> std::cmp::Ordering {
        self.nodes[a]
            .cost
            .partial_cmp(&self.nodes[b].cost)
            .expect("comparable costs")
            .then(a.cmp(&b))
    }
}

/// Grows a maximal independent set from each seed, scanning negative-cost
/// nodes cheapest first and re-checking the coupling rows cumulatively.
/// Returns the selection with the lowest objective.
pub fn mis_pack<S: Scalar>(problem: &BlockProblem<S>, graph: &ConflictGraph<S>, seeds: &[usize]) -> Result<Assignment> {
    let mut scan: Vec<usize> = (0..graph.len()).filter(|&i| graph.nodes[i].cost < S::zero()).collect();
    scan.sort_by(|&a, &b| graph.order(a, b));
    let mut best: Option<(S, Vec<usize>)> = None;
    for &seed in seeds {
        if seed >= graph.len() {
            continue;
        }
        let mut acc = vec![S::zero(); problem.m()];
        if !fits(&acc, &graph.nodes[seed].image, problem.rhs()) {
            continue;
        }
        add_image(&mut acc, &graph.nodes[seed].image);
        let mut chosen = vec![seed];
        let mut used = vec![false; problem.num_blocks()];
        used[graph.nodes[seed].block] = true;
        for &v in &scan {
            let node = &graph.nodes[v];
            if used[node.block] || chosen.iter().any(|&c| graph.adjacent(c, v)) || !fits(&acc, &node.image, problem.rhs()) {
                continue;
            }
            add_image(&mut acc, &node.image);
            used[node.block] = true;
            chosen.push(v);
        }
        let value = chosen.iter().fold(S::zero(), |s, &c| s + graph.nodes[c].cost.clone());
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, chosen));
        }
    }
    let mut x = Assignment::zeros_for(problem);
    if let Some((_, chosen)) = best {
        for c in chosen {
            x.set_block(graph.nodes[c].block, graph.nodes[c].x.clone());
        }
    }
    verify_feasible(problem, &x).map_err(|_| Error::Infeasible)?;
    Ok(x)
}

/// Hook called by the outer loop.
pub trait Refiner<S: Scalar> {
    /// Records a BCD output.
    fn observe(&mut self, problem: &BlockProblem<S>, x: &Assignment);

    /// A feasible assignment built from what was observed, if any.
    fn refine(&mut self, problem: &BlockProblem<S>) -> Result<Option<Assignment>>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoRefinement;

impl<S: Scalar> Refiner<S> for NoRefinement {
    fn observe(&mut self, _: &BlockProblem<S>, _: &Assignment) {}

    fn refine(&mut self, _: &BlockProblem<S>) -> Result<Option<Assignment>> {
        Ok(None)
    }
}

fn observe_pool<S: Scalar>(pool: &mut Option<SolutionPool<S>>, problem: &BlockProblem<S>, x: &Assignment) {
    let pool = pool.get_or_insert_with(|| SolutionPool::for_problem(problem));
    for (j, xj) in x.blocks().iter().enumerate() {
        if let Err(e) = pool.insert(problem, j, xj) {
            debug!("pool rejected block {j} candidate: {e}");
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepRefiner<S> {
    pub pool: Option<SolutionPool<S>>,
}

impl<S> Default for SweepRefiner<S> {
    fn default() -> Self {
        Self { pool: None }
    }
}

impl<S: Scalar> Refiner<S> for SweepRefiner<S> {
    fn observe(&mut self, problem: &BlockProblem<S>, x: &Assignment) {
        observe_pool(&mut self.pool, problem, x);
    }

    fn refine(&mut self, problem: &BlockProblem<S>) -> Result<Option<Assignment>> {
        let Some(pool) = &self.pool else { return Ok(None) };
        match sweep(problem, pool, &sweep_order(pool)) {
            Ok(x) => Ok(Some(x)),
            Err(Error::Infeasible) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PackingRefiner<S> {
    pub graph: ConflictGraph<S>,
    newest: Vec<usize>,
}

impl<S: Scalar> Default for PackingRefiner<S> {
    fn default() -> Self {
        Self {
            graph: ConflictGraph::new(),
            newest: Vec::new(),
        }
    }
}

impl<S: Scalar> Refiner<S> for PackingRefiner<S> {
    fn observe(&mut self, problem: &BlockProblem<S>, x: &Assignment) {
        let cands: Vec<(usize, Vec<bool>)> = x.blocks().iter().cloned().enumerate().collect();
        match self.graph.update(problem, &cands) {
            Ok(ids) => self.newest = ids,
            Err(e) => debug!("conflict graph rejected candidates: {e}"),
        }
    }

    fn refine(&mut self, problem: &BlockProblem<S>) -> Result<Option<Assignment>> {
        let seeds = self.graph.default_seeds(&self.newest);
        match mis_pack(problem, &self.graph, &seeds) {
            Ok(x) => Ok(Some(x)),
            Err(Error::Infeasible) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{e1, x};
    use crate::model::{Block, BlockSpec};
    use crate::scalar::Rational;
    use crate::sparse::SparseColumns;

    fn r(v: i64) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn pool_dedup_and_guards() {
        let p = e1::<Rational>();
        let mut pool = SolutionPool::for_problem(&p);
        assert_eq!(pool.insert(&p, 0, &[true, false]).unwrap(), Insert::Added);
        assert_eq!(pool.insert(&p, 0, &[true, false]).unwrap(), Insert::Duplicate);
        assert_eq!(pool.len(0), 1);
        assert!(matches!(pool.insert(&p, 0, &[true, true]), Err(Error::NotMember { block: 0 })));
        assert_eq!(pool.insert(&p, 0, &[false, false]).unwrap(), Insert::Ignored);
    }

    #[test]
    fn pool_eviction() {
        let p = e1::<Rational>();
        let mut pool = SolutionPool::new(2, 1);
        pool.insert(&p, 1, &[false, true]).unwrap(); // cost -1
        assert_eq!(pool.insert(&p, 1, &[true, false]).unwrap(), Insert::Replaced); // cost -3
        assert_eq!(pool.sorted(1)[0].x, vec![true, false]);
        assert_eq!(pool.insert(&p, 1, &[false, true]).unwrap(), Insert::Ignored);
    }

    #[test]
    fn sweep_e1() {
        let p = e1::<Rational>();
        let mut pool = SolutionPool::for_problem(&p);
        pool.insert(&p, 0, &[false, true]).unwrap();
        pool.insert(&p, 1, &[true, false]).unwrap();
        assert_eq!(sweep_order(&pool), vec![1, 0]);
        let xs = sweep(&p, &pool, &[1, 0]).unwrap();
        assert_eq!(xs, x(&[&[0, 1], &[1, 0]]));
        assert_eq!(p.objective(&xs), r(-4));
    }

    #[test]
    fn sweep_empty_and_blocked() {
        let p = e1::<Rational>();
        let pool = SolutionPool::for_problem(&p);
        assert!(sweep(&p, &pool, &[0, 1]).unwrap().is_zero());
        let mut pool = SolutionPool::for_problem(&p);
        pool.insert(&p, 0, &[true, false]).unwrap();
        pool.insert(&p, 1, &[true, false]).unwrap();
        let xs = sweep(&p, &pool, &[0, 1]).unwrap();
        assert_eq!(xs, x(&[&[1, 0], &[0, 0]]));
    }

    #[test]
    fn graph_edges_e1() {
        let p = e1::<Rational>();
        let mut g = ConflictGraph::new();
        let ids = g
            .update(&p, &[(0, vec![true, false]), (1, vec![true, false]), (0, vec![false, true])])
            .unwrap();
        assert!(g.adjacent(ids[0], ids[1]));
        assert!(g.adjacent(ids[0], ids[2]));
        assert!(!g.adjacent(ids[2], ids[1]));
        let before = g.num_edges();
        g.update(&p, &[(1, vec![false, true])]).unwrap();
        assert!(g.num_edges() >= before);
        assert_eq!(g.len(), 4);
    }

    #[test]
    fn mis_e1() {
        let p = e1::<Rational>();
        let mut g = ConflictGraph::new();
        let ids = g.update(&p, &[(0, vec![false, true]), (1, vec![true, false])]).unwrap();
        let xs = mis_pack(&p, &g, &ids).unwrap();
        assert_eq!(p.objective(&xs), r(-4));
    }

    /// Blocks with a single variable of cost -1; `rows` lists which blocks
    /// share each coupling row.
    fn singletons(p: usize, rows: &[&[usize]]) -> BlockProblem<Rational> {
        let m = rows.len();
        let blocks = (0..p)
            .map(|j| Block {
                cost: vec![r(-1)],
                coupling: SparseColumns::from_triplets(
                    m,
                    1,
                    rows.iter().enumerate().filter(|(_, bs)| bs.contains(&j)).map(|(i, _)| (i, 0, r(1))),
                )
                .unwrap(),
                set: BlockSpec::Points(vec![vec![false], vec![true]]),
            })
            .collect();
        BlockProblem::new(m, vec![r(1); m], blocks).unwrap()
    }

    #[test]
    fn mis_triangle_and_path() {
        let tri = singletons(3, &[&[0, 1], &[1, 2], &[0, 2]]);
        let mut g = ConflictGraph::new();
        let ids = g.update(&tri, &(0..3).map(|j| (j, vec![true])).collect::<Vec<_>>()).unwrap();
        let xs = mis_pack(&tri, &g, &g.default_seeds(&ids)).unwrap();
        assert_eq!(tri.objective(&xs), r(-1));

        let path = singletons(3, &[&[0, 1], &[1, 2]]);
        let mut g = ConflictGraph::new();
        let ids = g.update(&path, &(0..3).map(|j| (j, vec![true])).collect::<Vec<_>>()).unwrap();
        let xs = mis_pack(&path, &g, &g.default_seeds(&ids)).unwrap();
        assert_eq!(xs, Assignment::new(vec![vec![true], vec![false], vec![true]]));
    }

    #[test]
    fn cumulative_check_catches_triples() {
        // one row with b = 2 shared by three blocks: pairs fit, triples do not
        let base = singletons(3, &[&[0, 1, 2]]);
        let p = base.with_rhs(vec![r(2)]).unwrap();
        let mut g = ConflictGraph::new();
        let ids = g.update(&p, &(0..3).map(|j| (j, vec![true])).collect::<Vec<_>>()).unwrap();
        assert_eq!(g.num_edges(), 0);
        let xs = mis_pack(&p, &g, &ids).unwrap();
        assert_eq!(p.objective(&xs), r(-2));
    }

    #[test]
    fn empty_graph_gives_zero() {
        let p = e1::<Rational>();
        assert!(mis_pack(&p, &ConflictGraph::new(), &[]).unwrap().is_zero());
    }
}
