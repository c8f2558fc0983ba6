//! JSON instance and solution files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_vec, Assignment, Block, BlockProblem, BlockSpec, DagArc, DagPaths};
use crate::error::{Error, Result};
use crate::scalar::{Literal, Scalar};
use crate::sparse::SparseColumns;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    m: usize,
    b: Vec<Literal>,
    blocks: Vec<BlockFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockFile {
    c: Vec<Literal>,
    #[serde(rename = "A")]
    a: Vec<(usize, usize, Literal)>,
    set: SetFile,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SetFile {
    ExplicitPolyhedron {
        #[serde(rename = "B")]
        matrix: Vec<Vec<Literal>>,
        d: Vec<Literal>,
    },
    ExplicitPoints {
        points: Vec<Vec<u8>>,
    },
    DagPaths {
        nodes: usize,
        source: usize,
        sink: usize,
        arcs: Vec<(usize, usize, usize)>,
        include_empty_path: bool,
    },
}

fn bits(field: &str, v: &[u8]) -> Result<Vec<bool>> {
    v.iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::validation(field, format!("entry {other} is not 0 or 1"))),
        })
        .collect()
}

fn from_file<S: Scalar>(file: InstanceFile) -> Result<BlockProblem<S>> {
    let rhs = parse_vec("b", &file.b)?;
    let mut blocks = Vec::with_capacity(file.blocks.len());
    for (j, bf) in file.blocks.into_iter().enumerate() {
        let cost: Vec<S> = parse_vec(&format!("blocks[{j}].c"), &bf.c)?;
        let field_a = format!("blocks[{j}].A");
        let mut triplets = Vec::with_capacity(bf.a.len());
        for (r, c, v) in &bf.a {
            let v = S::parse_literal(v).ok_or_else(|| Error::validation(&field_a, format!("bad value {v:?}")))?;
            triplets.push((*r, *c, v));
        }
        let coupling =
            SparseColumns::from_triplets(file.m, cost.len(), triplets).map_err(|e| Error::validation(&field_a, e))?;
        let set = match bf.set {
            SetFile::ExplicitPolyhedron { matrix, d } => BlockSpec::Polyhedron {
                matrix: matrix
                    .iter()
                    .map(|row| parse_vec(&format!("blocks[{j}].set.B"), row))
                    .collect::<Result<_>>()?,
                rhs: parse_vec(&format!("blocks[{j}].set.d"), &d)?,
            },
            SetFile::ExplicitPoints { points } => BlockSpec::Points(
                points
                    .iter()
                    .map(|p| bits(&format!("blocks[{j}].set.points"), p))
                    .collect::<Result<_>>()?,
            ),
            SetFile::DagPaths {
                nodes,
                source,
                sink,
                arcs,
                include_empty_path,
            } => BlockSpec::Dag(DagPaths {
                num_nodes: nodes,
                source,
                sink,
                arcs: arcs.into_iter().map(|(from, to, var)| DagArc { from, to, var }).collect(),
                include_empty_path,
            }),
        };
        blocks.push(Block { cost, coupling, set });
    }
    let problem = BlockProblem::new(file.m, rhs, blocks)?;
    Ok(match file.label {
        Some(l) => problem.with_label(l),
        None => problem,
    })
}

fn to_file<S: Scalar>(problem: &BlockProblem<S>) -> InstanceFile {
    let lits = |v: &[S]| v.iter().map(Scalar::to_literal).collect::<Vec<_>>();
    InstanceFile {
        m: problem.m(),
        b: lits(problem.rhs()),
        blocks: problem
            .blocks()
            .iter()
            .map(|b| BlockFile {
                c: lits(&b.cost),
                a: b.coupling.triplets().map(|(r, c, v)| (r, c, v.to_literal())).collect(),
                set: match &b.set {
                    BlockSpec::Polyhedron { matrix, rhs } => SetFile::ExplicitPolyhedron {
                        matrix: matrix.iter().map(|r| lits(r)).collect(),
                        d: lits(rhs),
                    },
                    BlockSpec::Points(points) => SetFile::ExplicitPoints {
                        points: points.iter().map(|p| p.iter().map(|&v| v as u8).collect()).collect(),
                    },
                    BlockSpec::Dag(d) => SetFile::DagPaths {
                        nodes: d.num_nodes,
                        source: d.source,
                        sink: d.sink,
                        arcs: d.arcs.iter().map(|a| (a.from, a.to, a.var)).collect(),
                        include_empty_path: d.include_empty_path,
                    },
                },
            })
            .collect(),
        label: problem.label().map(str::to_string),
    }
}

pub fn parse_instance<S: Scalar>(text: &str) -> Result<BlockProblem<S>> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    from_file(file)
}

pub fn to_json_string<S: Scalar>(problem: &BlockProblem<S>) -> String {
    serde_json::to_string_pretty(&to_file(problem)).expect("instance serializes")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_instance<S: Scalar>(path: impl AsRef<Path>) -> Result<BlockProblem<S>> {
    parse_instance(&read(path.as_ref())?)
}

pub fn save_instance<S: Scalar>(problem: &BlockProblem<S>, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &to_json_string(problem))
}

/// `{"blocks": [[0,1],[1,0]], "value": -4}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub blocks: Vec<Vec<u8>>,
    pub value: Literal,
}

pub fn solution_to_json<S: Scalar>(x: &Assignment, value: &S) -> String {
    let file = SolutionFile {
        blocks: x.to_bits(),
        value: value.to_literal(),
    };
    serde_json::to_string_pretty(&file).expect("solution serializes")
}

pub fn parse_solution(text: &str) -> Result<Assignment> {
    let file: SolutionFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let blocks = file
        .blocks
        .iter()
        .enumerate()
        .map(|(j, b)| bits(&format!("blocks[{j}]"), b))
        .collect::<Result<_>>()?;
    Ok(Assignment::new(blocks))
}

pub fn save_solution<S: Scalar>(x: &Assignment, value: &S, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &solution_to_json(x, value))
}

pub fn load_solution(path: impl AsRef<Path>) -> Result<Assignment> {
    parse_solution(&read(path.as_ref())?)
}
