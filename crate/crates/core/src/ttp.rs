//! Train timetabling instances on space-time networks.
//!
//! Each train gets a DAG block whose source-to-sink paths are its possible
//! schedules; the empty path leaves the train unscheduled. Coupling rows are
//! 0/1 with right-hand side 1.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Block, BlockProblem, BlockSpec, DagArc, DagPaths};
use crate::scalar::Scalar;
use crate::sparse::SparseColumns;

pub use crate::random::{generate_random, RandomMode, RandomSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// From the first station to the last.
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfitMode {
    /// Profit proportional to the distance run.
    Revenue,
    /// Profit 1 per scheduled train.
    Count,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub speed_class: usize,
    pub direction: Direction,
    /// Inclusive window for the departure time at the origin.
    pub depart: [u32; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtpSpec {
    pub stations: Vec<String>,
    /// `runtimes[class][s]`: running time between stations `s` and `s + 1`.
    pub runtimes: Vec<Vec<u32>>,
    pub trains: Vec<TrainSpec>,
    pub horizon: u32,
    pub headway: u32,
    pub profit_mode: ProfitMode,
    /// Inclusive `[min, max]` dwell per station; defaults to `[0, 2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell: Option<Vec<[u32; 2]>>,
    /// Segment lengths for revenue mode; default 1 each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<u32>>,
}

pub const DEFAULT_DWELL: [u32; 2] = [0, 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Arrival,
    Departure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcKind {
    Source,
    /// Running on segment `min(from, to)` between two stations.
    Run { segment: usize },
    Dwell,
    Sink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Source,
    Sink,
    Event { station: usize, time: u32, kind: EventKind },
}

/// The space-time graph of one train; arc `i` is variable `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeNetwork {
    pub nodes: Vec<Node>,
    pub arcs: Vec<(usize, usize, ArcKind)>,
}

impl SpaceTimeNetwork {
    fn dag(&self) -> DagPaths {
        DagPaths {
            num_nodes: self.nodes.len(),
            source: 0,
            sink: 1,
            arcs: self
                .arcs
                .iter()
                .enumerate()
                .map(|(var, &(from, to, _))| DagArc { from, to, var })
                .collect(),
            include_empty_path: true,
        }
    }

    /// Event node entered by arc `var`, if any.
    fn entered(&self, var: usize) -> Option<(usize, u32, EventKind)> {
        match self.nodes[self.arcs[var].1] {
            Node::Event { station, time, kind } => Some((station, time, kind)),
            _ => None,
        }
    }

    fn time_of(&self, node: usize) -> u32 {
        match self.nodes[node] {
            Node::Event { time, .. } => time,
            _ => 0,
        }
    }
}

impl TtpSpec {
    pub fn validate(&self) -> Result<()> {
        let s = self.stations.len();
        if s < 2 {
            return Err(Error::validation("stations", "need at least two stations"));
        }
        if self.horizon == 0 {
            return Err(Error::validation("horizon", "must be positive"));
        }
        if self.headway == 0 {
            return Err(Error::validation("headway", "must be at least 1"));
        }
        for (c, row) in self.runtimes.iter().enumerate() {
            if row.len() != s - 1 {
                return Err(Error::validation(format!("runtimes[{c}]"), format!("expected {} segments", s - 1)));
            }
            if row.contains(&0) {
                return Err(Error::validation(format!("runtimes[{c}]"), "run times must be at least 1"));
            }
        }
        for (i, t) in self.trains.iter().enumerate() {
            if t.speed_class >= self.runtimes.len() {
                return Err(Error::validation(format!("trains[{i}].speed_class"), "unknown speed class"));
            }
            if t.depart[0] > t.depart[1] {
                return Err(Error::validation(format!("trains[{i}].depart"), "empty window"));
            }
        }
        if let Some(d) = &self.dwell {
            if d.len() != s {
                return Err(Error::validation("dwell", format!("expected {s} entries")));
            }
            if d.iter().any(|w| w[0] > w[1]) {
                return Err(Error::validation("dwell", "min exceeds max"));
            }
        }
        if self.distances.as_ref().is_some_and(|d| d.len() != s - 1) {
            return Err(Error::validation("distances", format!("expected {} segments", s - 1)));
        }
        Ok(())
    }

    fn dwell(&self, station: usize) -> [u32; 2] {
        self.dwell.as_ref().map_or(DEFAULT_DWELL, |d| d[station])
    }

    fn route(&self, dir: Direction) -> Vec<usize> {
        let s = self.stations.len();
        match dir {
            Direction::Up => (0..s).collect(),
            Direction::Down => (0..s).rev().collect(),
        }
    }

    /// Space-time network of train `i`, restricted to nodes on some
    /// source-to-sink path within the horizon.
    pub fn network(&self, i: usize) -> SpaceTimeNetwork {
        let train = &self.trains[i];
        let route = self.route(train.direction);
        let runs: Vec<u32> = route
            .windows(2)
            .map(|w| self.runtimes[train.speed_class][w[0].min(w[1])])
            .collect();
        let last = route.len() - 1;
        let horizon = self.horizon;

        // dep[p] / arr[p]: reachable event times at route position p.
        let mut dep: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); last];
        let mut arr: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); last + 1];
        dep[0] = (train.depart[0]..=train.depart[1].min(horizon)).collect();
        for p in 0..last {
            arr[p + 1] = dep[p].iter().map(|t| t + runs[p]).filter(|&t| t <= horizon).collect();
            if p + 1 < last {
                let [lo, hi] = self.dwell(route[p + 1]);
                dep[p + 1] = arr[p + 1]
                    .iter()
                    .flat_map(|t| (lo..=hi).map(move |d| t + d))
                    .filter(|&t| t <= horizon)
                    .collect();
            }
        }
        // keep only times that still reach the destination
        for p in (0..last).rev() {
            let next = arr[p + 1].clone();
            dep[p].retain(|t| next.contains(&(t + runs[p])));
            if p > 0 {
                let [lo, hi] = self.dwell(route[p]);
                let deps = dep[p].clone();
                arr[p].retain(|t| (lo..=hi).any(|d| deps.contains(&(t + d))));
            }
        }

        let mut nodes = vec![Node::Source, Node::Sink];
        let mut ids = BTreeMap::new();
        let mut node = |station: usize, time: u32, kind: EventKind, nodes: &mut Vec<Node>| {
            *ids.entry((station, time, kind)).or_insert_with(|| {
                nodes.push(Node::Event { station, time, kind });
                nodes.len() - 1
            })
        };
        let mut arcs = Vec::new();
        for &t in &dep[0] {
            let to = node(route[0], t, EventKind::Departure, &mut nodes);
            arcs.push((0, to, ArcKind::Source));
        }
        for p in 0..last {
            let segment = route[p].min(route[p + 1]);
            for &t in &dep[p] {
                let from = node(route[p], t, EventKind::Departure, &mut nodes);
                let to = node(route[p + 1], t + runs[p], EventKind::Arrival, &mut nodes);
                arcs.push((from, to, ArcKind::Run { segment }));
            }
            if p + 1 < last {
                let [lo, hi] = self.dwell(route[p + 1]);
                for &t in &arr[p + 1] {
                    let from = node(route[p + 1], t, EventKind::Arrival, &mut nodes);
                    for d in lo..=hi {
                        if dep[p + 1].contains(&(t + d)) {
                            let to = node(route[p + 1], t + d, EventKind::Departure, &mut nodes);
                            arcs.push((from, to, ArcKind::Dwell));
                        }
                    }
                }
            }
        }
        for &t in &arr[last] {
            let from = node(route[last], t, EventKind::Arrival, &mut nodes);
            arcs.push((from, 1, ArcKind::Sink));
        }
        SpaceTimeNetwork { nodes, arcs }
    }
}

/// Builds one DAG block per train with headway rows at every station event
/// and rows forbidding overtaking on a segment.
pub fn build_instance<S: Scalar>(spec: &TtpSpec) -> Result<BlockProblem<S>> {
    spec.validate()?;
    let nets: Vec<SpaceTimeNetwork> = (0..spec.trains.len()).map(|i| spec.network(i)).collect();
    let mut rows: Vec<Vec<(usize, usize)>> = Vec::new();

    // headway: events of one kind at one station in one direction, within
    // [t, t + h - 1]
    let mut windows: BTreeMap<(usize, Direction, EventKind, u32), Vec<(usize, usize)>> = BTreeMap::new();
    for (i, net) in nets.iter().enumerate() {
        let dir = spec.trains[i].direction;
        for var in 0..net.arcs.len() {
            if let Some((station, time, kind)) = net.entered(var) {
                for start in time.saturating_sub(spec.headway - 1)..=time {
                    windows.entry((station, dir, kind, start)).or_default().push((i, var));
                }
            }
        }
    }
    rows.extend(windows.into_values());

    // overtaking: slow arc departing at d1 against the arcs of a faster train
    // departing in (d1, d1 + r_slow - r_fast)
    for (i, slow) in nets.iter().enumerate() {
        for (k, fast) in nets.iter().enumerate() {
            if i == k || spec.trains[i].direction != spec.trains[k].direction {
                continue;
            }
            for (var, &(from, _, kind)) in slow.arcs.iter().enumerate() {
                let ArcKind::Run { segment } = kind else { continue };
                let r_slow = spec.runtimes[spec.trains[i].speed_class][segment];
                let r_fast = spec.runtimes[spec.trains[k].speed_class][segment];
                if r_fast >= r_slow {
                    continue;
                }
                let d1 = slow.time_of(from);
                let mut row = vec![(i, var)];
                for (fv, &(ff, _, fkind)) in fast.arcs.iter().enumerate() {
                    let d2 = fast.time_of(ff);
                    if fkind == kind && d2 > d1 && d2 < d1 + r_slow - r_fast {
                        row.push((k, fv));
                    }
                }
                if row.len() > 1 {
                    rows.push(row);
                }
            }
        }
    }

    // rows touching a single train never bind; identical rows are redundant
    for row in &mut rows {
        row.sort_unstable();
    }
    rows.retain(|row| row.iter().any(|&(i, _)| i != row[0].0));
    rows.sort();
    rows.dedup();

    let m = rows.len();
    let mut triplets: Vec<Vec<(usize, usize, S)>> = vec![Vec::new(); nets.len()];
    for (r, row) in rows.iter().enumerate() {
        for &(i, var) in row {
            triplets[i].push((r, var, S::one()));
        }
    }
    let blocks = nets
        .iter()
        .zip(triplets)
        .map(|(net, t)| {
            let n = net.arcs.len();
            let cost = net
                .arcs
                .iter()
                .map(|&(_, _, kind)| match (spec.profit_mode, kind) {
                    (ProfitMode::Count, ArcKind::Sink) => -S::one(),
                    (ProfitMode::Revenue, ArcKind::Run { segment }) => {
                        -S::from_int(spec.distances.as_ref().map_or(1, |d| d[segment]) as i64)
                    }
                    _ => S::zero(),
                })
                .collect();
            let coupling = SparseColumns::from_triplets(m, n, t).map_err(|e| Error::validation("A", e))?;
            Ok(Block {
                cost,
                coupling,
                set: BlockSpec::Dag(net.dag()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockProblem::new(m, vec![S::one(); m], blocks)?.with_label("ttp"))
}

pub fn parse_spec(text: &str) -> Result<TtpSpec> {
    let spec: TtpSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<TtpSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_spec(&text)
}

/// Stations `0..stations` with unit distances, trains alternating between
/// two speed classes and spread over the horizon so that all fit.
pub fn uncongested_spec(trains: usize, stations: usize, horizon: u32, headway: u32) -> TtpSpec {
    let segments = stations.saturating_sub(1);
    let slow: Vec<u32> = (0..segments).map(|s| 4 + (s as u32 % 2)).collect();
    let fast: Vec<u32> = slow.iter().map(|r| r - 1).collect();
    let per_dir = trains.div_ceil(2).max(1) as u32;
    let spacing = (horizon / 2 / per_dir).max(headway + 1);
    let trains = (0..trains)
        .map(|i| {
            let slot = (i / 2) as u32 * spacing;
            TrainSpec {
                speed_class: (i / 2) % 2,
                direction: if i % 2 == 0 { Direction::Up } else { Direction::Down },
                depart: [slot, slot + 2],
            }
        })
        .collect();
    TtpSpec {
        stations: (0..stations).map(|s| format!("S{s}")).collect(),
        runtimes: vec![slow, fast],
        trains,
        horizon,
        headway,
        profit_mode: ProfitMode::Count,
        dwell: None,
        distances: None,
    }
}
