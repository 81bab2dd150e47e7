//! Program files (line-oriented text and a JSON mirror) and JSON encodings
//! of distributions and matrices.
//!
//! Text format, one item per line, `#` starts a comment:
//!
//! ```text
//! bp 1
//! n 2 m 1
//! start 0
//! accept 1
//! v 0 i 0 j 0 e00 2 e01 1 e10 1 e11 1
//! v 1 term out 1
//! v 2 term out 0
//! ```
//!
//! The JSON mirror uses the same names: `{"bp": 1, "n": 2, "m": 1,
//! "start": 0, "vertices": [{"v": 0, "i": 0, "j": 0, "e00": 2, ...},
//! {"v": 1, "term": true, "out": 1}]}`.

use std::fmt::Write as _;

use bpderand_core::bp::{BpError, Program, Vertex, VertexId};
use bpderand_core::distribution::{Prob, StochasticMatrix, VertexDistribution};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Program(#[from] BpError),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses either format; JSON is recognized by a leading `{`.
pub fn parse_program(text: &str) -> Result<Program, FormatError> {
    if text.trim_start().starts_with('{') {
        parse_bp_json(text)
    } else {
        parse_bp(text)
    }
}

pub fn parse_bp(text: &str) -> Result<Program, FormatError> {
    let mut header = false;
    let mut dims = None;
    let mut start = None;
    let mut accept = None;
    let mut slots: Vec<Option<Vertex>> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let num = |s: &str| -> Result<usize, FormatError> {
            s.parse()
                .map_err(|_| syntax(line, format!("expected a number, found `{s}`")))
        };
        if !header {
            if toks != ["bp", "1"] {
                return Err(syntax(line, "expected header `bp 1`"));
            }
            header = true;
            continue;
        }
        match toks.as_slice() {
            ["n", n, "m", m] if dims.is_none() => dims = Some((num(n)?, num(m)?)),
            ["start", v] if start.is_none() => start = Some(num(v)?),
            ["accept", v] if accept.is_none() => accept = Some(num(v)?),
            ["v", id, rest @ ..] => {
                let id = num(id)?;
                let vert = match rest {
                    ["term"] => Vertex::Terminal { out: None },
                    ["term", "out", b] => Vertex::Terminal {
                        out: Some(match *b {
                            "0" => false,
                            "1" => true,
                            _ => {
                                return Err(syntax(
                                    line,
                                    format!("output bit must be 0 or 1, found `{b}`"),
                                ))
                            }
                        }),
                    },
                    ["i", i, "j", j, "e00", a, "e01", b, "e10", c, "e11", d] => {
                        Vertex::Nonterminal {
                            i: num(i)?,
                            j: num(j)?,
                            edges: [num(a)?, num(b)?, num(c)?, num(d)?],
                        }
                    }
                    _ => return Err(syntax(line, "malformed vertex line")),
                };
                if slots.len() <= id {
                    slots.resize(id + 1, None);
                }
                if slots[id].replace(vert).is_some() {
                    return Err(syntax(line, format!("vertex {id} defined twice")));
                }
            }
            _ => return Err(syntax(line, format!("unexpected line `{content}`"))),
        }
    }
    if !header {
        return Err(syntax(1, "empty file"));
    }
    let (n, m) = dims.ok_or_else(|| syntax(0, "missing `n <int> m <int>` line"))?;
    let vertices = slots
        .into_iter()
        .enumerate()
        .map(|(id, v)| {
            v.ok_or_else(|| syntax(0, format!("vertex {id} missing; ids must be 0..size")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Program::new(n, m, vertices, start, accept)?)
}

/// Canonical text: header, dimensions, start, accept, vertices by id.
pub fn serialize_bp(p: &Program) -> String {
    let mut s = String::new();
    writeln!(s, "bp {FORMAT_VERSION}").unwrap();
    writeln!(s, "n {} m {}", p.n(), p.m()).unwrap();
    if let Some(v) = p.start() {
        writeln!(s, "start {v}").unwrap();
    }
    if let Some(v) = p.accept() {
        writeln!(s, "accept {v}").unwrap();
    }
    for (id, vert) in p.vertices().iter().enumerate() {
        match vert {
            Vertex::Terminal { out: None } => writeln!(s, "v {id} term"),
            Vertex::Terminal { out: Some(b) } => writeln!(s, "v {id} term out {}", *b as u8),
            Vertex::Nonterminal {
                i,
                j,
                edges: [a, b, c, d],
            } => {
                writeln!(s, "v {id} i {i} j {j} e00 {a} e01 {b} e10 {c} e11 {d}")
            }
        }
        .unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BpJson {
    bp: u32,
    n: usize,
    m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accept: Option<VertexId>,
    vertices: Vec<VertexJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexJson {
    v: VertexId,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    term: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    out: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    i: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    j: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e00: Option<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e01: Option<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e10: Option<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e11: Option<VertexId>,
}

pub fn parse_bp_json(text: &str) -> Result<Program, FormatError> {
    let doc: BpJson = serde_json::from_str(text)?;
    if doc.bp != FORMAT_VERSION {
        return Err(syntax(0, format!("unsupported format version {}", doc.bp)));
    }
    let mut slots: Vec<Option<Vertex>> = vec![None; doc.vertices.len()];
    for (k, vj) in doc.vertices.iter().enumerate() {
        let at = |msg: String| syntax(0, format!("vertices[{k}]: {msg}"));
        let vert = if vj.term {
            Vertex::Terminal {
                out: match vj.out {
                    None => None,
                    Some(0) => Some(false),
                    Some(1) => Some(true),
                    Some(b) => return Err(at(format!("output bit {b}"))),
                },
            }
        } else {
            match (vj.i, vj.j, vj.e00, vj.e01, vj.e10, vj.e11) {
                (Some(i), Some(j), Some(a), Some(b), Some(c), Some(d)) => Vertex::Nonterminal {
                    i,
                    j,
                    edges: [a, b, c, d],
                },
                _ => return Err(at("nonterminal needs i, j, e00, e01, e10, e11".into())),
            }
        };
        let slot = slots
            .get_mut(vj.v)
            .ok_or_else(|| at(format!("id {} out of range", vj.v)))?;
        if slot.replace(vert).is_some() {
            return Err(at(format!("vertex {} defined twice", vj.v)));
        }
    }
    let vertices = slots
        .into_iter()
        .map(|v| v.expect("ids are a permutation"))
        .collect();
    Ok(Program::new(doc.n, doc.m, vertices, doc.start, doc.accept)?)
}

pub fn serialize_bp_json(p: &Program) -> String {
    let vertices = p
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, vert)| match *vert {
            Vertex::Terminal { out } => VertexJson {
                v,
                term: true,
                out: out.map(u8::from),
                i: None,
                j: None,
                e00: None,
                e01: None,
                e10: None,
                e11: None,
            },
            Vertex::Nonterminal { i, j, edges } => VertexJson {
                v,
                term: false,
                out: None,
                i: Some(i),
                j: Some(j),
                e00: Some(edges[0]),
                e01: Some(edges[1]),
                e10: Some(edges[2]),
                e11: Some(edges[3]),
            },
        })
        .collect();
    let doc = BpJson {
        bp: FORMAT_VERSION,
        n: p.n(),
        m: p.m(),
        start: p.start(),
        accept: p.accept(),
        vertices,
    };
    serde_json::to_string_pretty(&doc).expect("plain data serializes")
}

/// Probabilities print as `p/q` for exact values and in shortest
/// round-trip form for floats.
pub trait ProbText {
    fn prob_text(&self) -> String;
}

impl ProbText for f64 {
    fn prob_text(&self) -> String {
        format!("{self}")
    }
}

impl ProbText for num_rational::BigRational {
    fn prob_text(&self) -> String {
        if self.denom() == &num_bigint::BigInt::from(1) {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

/// `{"<vertex id>": "<probability>"}` over the support, in id order.
pub fn distribution_json<W: Prob + ProbText>(d: &VertexDistribution<W>) -> serde_json::Value {
    let map = d
        .support()
        .map(|(v, p)| (v.to_string(), serde_json::Value::String(p.prob_text())))
        .collect::<serde_json::Map<_, _>>();
    serde_json::Value::Object(map)
}

/// Row-major array of rows of probability strings.
pub fn matrix_json<W: Prob + ProbText>(m: &StochasticMatrix<W>) -> serde_json::Value {
    m.rows()
        .map(|row| {
            row.iter()
                .map(|w| serde_json::Value::String(w.prob_text()))
                .collect::<serde_json::Value>()
        })
        .collect::<serde_json::Value>()
}
