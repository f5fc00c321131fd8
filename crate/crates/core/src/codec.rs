//! Line-oriented text encoding of genomes, used for checkpoints.
//!
//! ```text
//! onenas-genome 1
//! id	12
//! generation	4
//! island	2
//! fitness	1.2500000000000000e-2        (or `-` when unevaluated)
//! lineage	mutation	7
//! inputs	power	wind_speed
//! outputs	power
//! node	0	input:0	simple	0.0000000000000000e0	1	-1.2...e-1
//! edge	0	0	2	0	1	3.4...e-1
//! end
//! ```
//!
//! Fields are tab separated. Reals are written in scientific notation with 17
//! significant digits, which round-trips every `f64` exactly.

use std::fmt::Write as _;

use crate::cells::CellKind;
use crate::error::{Error, Result};
use crate::genome::{EdgeGene, Genome, Lineage, NodeGene, NodeKind, Route};

const MAGIC: &str = "onenas-genome";
const VERSION: u32 = 1;

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Seed => "seed",
        Route::Mutation => "mutation",
        Route::IntraCrossover => "intra_crossover",
        Route::InterCrossover => "inter_crossover",
        Route::Repopulation => "repopulation",
    }
}

fn parse_route(s: &str) -> Result<Route> {
    Ok(match s {
        "seed" => Route::Seed,
        "mutation" => Route::Mutation,
        "intra_crossover" => Route::IntraCrossover,
        "inter_crossover" => Route::InterCrossover,
        "repopulation" => Route::Repopulation,
        _ => return Err(Error::Parse(format!("unknown route `{s}`"))),
    })
}

pub fn encode(genome: &Genome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "id\t{}", genome.id);
    let _ = writeln!(s, "generation\t{}", genome.generation_born);
    let _ = writeln!(s, "island\t{}", genome.island_id);
    let _ = writeln!(s, "fitness\t{}", genome.fitness.map_or("-".to_string(), real));
    let _ = write!(s, "lineage\t{}", route_name(genome.lineage.route));
    for p in &genome.lineage.parents {
        let _ = write!(s, "\t{p}");
    }
    s.push('\n');
    let _ = writeln!(s, "inputs\t{}", genome.input_names.join("\t"));
    let _ = writeln!(s, "outputs\t{}", genome.output_names.join("\t"));
    for n in &genome.nodes {
        let kind = match n.kind {
            NodeKind::Input(i) => format!("input:{i}"),
            NodeKind::Output(i) => format!("output:{i}"),
            NodeKind::Hidden => "hidden".to_string(),
        };
        let _ = write!(s, "node\t{}\t{kind}\t{}\t{}\t{}", n.id, n.cell, real(n.depth), u8::from(n.enabled));
        for p in &n.params {
            let _ = write!(s, "\t{}", real(*p));
        }
        s.push('\n');
    }
    for e in &genome.edges {
        let _ = writeln!(
            s,
            "edge\t{}\t{}\t{}\t{}\t{}\t{}",
            e.id,
            e.source,
            e.target,
            e.time_skip,
            u8::from(e.enabled),
            real(e.weight)
        );
    }
    s.push_str("end\n");
    s
}

fn field<'a>(fields: &[&'a str], i: usize, line: usize) -> Result<&'a str> {
    fields
        .get(i)
        .copied()
        .ok_or_else(|| Error::Parse(format!("line {line}: missing field {i}")))
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("line {line}: bad number `{s}`")))
}

fn flag(s: &str, line: usize) -> Result<bool> {
    match s {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(Error::Parse(format!("line {line}: bad flag `{s}`"))),
    }
}

pub fn decode(text: &str) -> Result<Genome> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty genome file".into()))?;
    let version = header
        .strip_prefix(MAGIC)
        .map(str::trim)
        .ok_or_else(|| Error::Parse("missing genome header".into()))?;
    if version != VERSION.to_string() {
        return Err(Error::Parse(format!("unsupported genome version `{version}`")));
    }
    let mut g = Genome {
        id: 0,
        nodes: Vec::new(),
        edges: Vec::new(),
        input_names: Vec::new(),
        output_names: Vec::new(),
        fitness: None,
        generation_born: 0,
        island_id: 0,
        lineage: Lineage { route: Route::Seed, parents: Vec::new() },
    };
    let mut ended = false;
    for (i, raw) in lines {
        let ln = i + 1;
        if raw.is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        match f[0] {
            "id" => g.id = num(field(&f, 1, ln)?, ln)?,
            "generation" => g.generation_born = num(field(&f, 1, ln)?, ln)?,
            "island" => g.island_id = num(field(&f, 1, ln)?, ln)?,
            "fitness" => {
                let v = field(&f, 1, ln)?;
                g.fitness = if v == "-" { None } else { Some(num(v, ln)?) };
            }
            "lineage" => {
                g.lineage.route = parse_route(field(&f, 1, ln)?)?;
                g.lineage.parents = f[2..].iter().map(|p| num(p, ln)).collect::<Result<_>>()?;
            }
            "inputs" => g.input_names = f[1..].iter().map(|s| s.to_string()).collect(),
            "outputs" => g.output_names = f[1..].iter().map(|s| s.to_string()).collect(),
            "node" => {
                let kind_s = field(&f, 2, ln)?;
                let kind = if kind_s == "hidden" {
                    NodeKind::Hidden
                } else if let Some(i) = kind_s.strip_prefix("input:") {
                    NodeKind::Input(num(i, ln)?)
                } else if let Some(i) = kind_s.strip_prefix("output:") {
                    NodeKind::Output(num(i, ln)?)
                } else {
                    return Err(Error::Parse(format!("line {ln}: bad node kind `{kind_s}`")));
                };
                let cell: CellKind = field(&f, 3, ln)?.parse()?;
                let params: Vec<f64> = f[6..].iter().map(|p| num(p, ln)).collect::<Result<_>>()?;
                if params.len() != cell.parameter_count() {
                    return Err(Error::Parse(format!("line {ln}: {cell} node needs {} parameters", cell.parameter_count())));
                }
                g.nodes.push(NodeGene {
                    id: num(field(&f, 1, ln)?, ln)?,
                    kind,
                    cell,
                    depth: num(field(&f, 4, ln)?, ln)?,
                    enabled: flag(field(&f, 5, ln)?, ln)?,
                    params,
                });
            }
            "edge" => {
                if f.len() != 7 {
                    return Err(Error::Parse(format!("line {ln}: edge record needs 7 fields")));
                }
                g.edges.push(EdgeGene {
                    id: num(f[1], ln)?,
                    source: num(f[2], ln)?,
                    target: num(f[3], ln)?,
                    time_skip: num(f[4], ln)?,
                    enabled: flag(f[5], ln)?,
                    weight: num(f[6], ln)?,
                });
            }
            "end" => {
                ended = true;
                break;
            }
            other => return Err(Error::Parse(format!("line {ln}: unknown record `{other}`"))),
        }
    }
    if !ended {
        return Err(Error::Parse("truncated genome file (no `end`)".into()));
    }
    Ok(g)
}
