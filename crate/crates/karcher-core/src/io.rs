//! Text formats: mesh and vertex-set files in, cochains, vertex fields and
//! sparse systems out.
//!
//! Mesh files hold one record per line: `v <id>` declares a vertex,
//! `s <id...>` an oriented element, `l <i> <j> <length>` an edge length and
//! `p <id> <coords...>` an embedded position; `#` starts a comment.  Vertex
//! sets start with a `manifold <kind> <ambient dim>` header followed by `p`
//! records.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::DVector;
use nalgebra_sparse::CsrMatrix;
use thiserror::Error;

use crate::complex::{Complex, ComplexError, DiscreteMetric};
use crate::manifold::{ManifoldError, ManifoldKind, ManifoldPoint, ManifoldTag};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `manifold` header")]
    MissingHeader,
    #[error("vertex ids must be 0..{count} without gaps; {id} is missing")]
    Gap { id: usize, count: usize },
    #[error("file has no lengths and no positions to derive them from")]
    NoMetric,
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then(|| (i + 1, body.split_whitespace().collect()))
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, ParseError> {
    s.parse()
        .map_err(|_| syntax(line, format!("cannot parse `{s}`")))
}

/// Contents of a mesh file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeshFile {
    pub vertices: Vec<usize>,
    pub elements: Vec<Vec<usize>>,
    pub lengths: Vec<(usize, usize, f64)>,
    pub positions: BTreeMap<usize, Vec<f64>>,
}

pub fn parse_mesh(text: &str) -> Result<MeshFile, ParseError> {
    let mut out = MeshFile::default();
    for (line, fields) in records(text) {
        let args = &fields[1..];
        match fields[0] {
            "v" => {
                let [id] = args else {
                    return Err(syntax(line, "expected `v <id>`"));
                };
                out.vertices.push(parse_num(line, id)?);
            }
            "s" => {
                if args.len() < 2 {
                    return Err(syntax(line, "an element needs at least two vertices"));
                }
                out.elements.push(
                    args.iter()
                        .map(|a| parse_num(line, a))
                        .collect::<Result<_, _>>()?,
                );
            }
            "l" => {
                let [i, j, len] = args else {
                    return Err(syntax(line, "expected `l <i> <j> <length>`"));
                };
                out.lengths.push((
                    parse_num(line, i)?,
                    parse_num(line, j)?,
                    parse_num(line, len)?,
                ));
            }
            "p" => {
                let (id, coords) = args
                    .split_first()
                    .ok_or_else(|| syntax(line, "expected `p <id> <coords...>`"))?;
                let coords = coords
                    .iter()
                    .map(|a| parse_num(line, a))
                    .collect::<Result<_, _>>()?;
                out.positions.insert(parse_num(line, id)?, coords);
            }
            other => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
    }
    Ok(out)
}

impl MeshFile {
    /// Builds the complex over the declared (or used) vertices.
    pub fn complex(&self) -> Result<Complex, ParseError> {
        let count = self
            .vertices
            .iter()
            .chain(self.elements.iter().flatten())
            .max()
            .map_or(0, |m| m + 1);
        Ok(Complex::with_vertex_count(count, self.elements.clone())?)
    }

    /// The metric from explicit lengths, or from positions measured in `tag`.
    pub fn metric(
        &self,
        c: &Complex,
        tag: Option<&ManifoldTag>,
    ) -> Result<DiscreteMetric, ParseError> {
        if !self.lengths.is_empty() {
            return Ok(DiscreteMetric::from_records(c, &self.lengths)?);
        }
        let tag = tag.ok_or(ParseError::NoMetric)?;
        let points = (0..c.vertex_count())
            .map(|v| {
                let p = self.positions.get(&v).ok_or(ParseError::Gap {
                    id: v,
                    count: c.vertex_count(),
                })?;
                Ok(tag.point(p.clone())?)
            })
            .collect::<Result<Vec<_>, ParseError>>()?;
        Ok(DiscreteMetric::from_points(c, tag, &points)?)
    }
}

/// Parses a vertex-set file into its tag and points (ids `0..N`).
pub fn parse_vertex_set(text: &str) -> Result<(ManifoldTag, Vec<ManifoldPoint>), ParseError> {
    let mut tag = None;
    let mut pts = BTreeMap::new();
    for (line, fields) in records(text) {
        match fields[0] {
            "manifold" => {
                let [kind, dim] = &fields[1..] else {
                    return Err(syntax(line, "expected `manifold <kind> <ambient dim>`"));
                };
                let kind = ManifoldKind::parse(kind)
                    .ok_or_else(|| syntax(line, format!("unknown manifold `{kind}`")))?;
                tag = Some(ManifoldTag::from_ambient(kind, parse_num(line, dim)?)?);
            }
            "p" => {
                let t = tag.ok_or(ParseError::MissingHeader)?;
                let (id, coords) = fields[1..]
                    .split_first()
                    .ok_or_else(|| syntax(line, "expected `p <id> <coords...>`"))?;
                let coords: Vec<f64> = coords
                    .iter()
                    .map(|a| parse_num(line, a))
                    .collect::<Result<_, _>>()?;
                pts.insert(parse_num::<usize>(line, id)?, t.point(coords)?);
            }
            other => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
    }
    let tag = tag.ok_or(ParseError::MissingHeader)?;
    let count = pts.len();
    let mut out = Vec::with_capacity(count);
    for (expected, (id, p)) in pts.into_iter().enumerate() {
        if id != expected {
            return Err(ParseError::Gap {
                id: expected,
                count,
            });
        }
        out.push(p);
    }
    Ok((tag, out))
}

/// CSV `degree,simplex_key,coefficient` with keys as `-`-joined vertex ids.
pub fn write_cochain<W: Write>(
    mut w: W,
    c: &Complex,
    degree: usize,
    coeffs: &DVector<f64>,
) -> io::Result<()> {
    writeln!(w, "degree,simplex_key,coefficient")?;
    for (key, v) in c.simplices(degree).iter().zip(coeffs.iter()) {
        let key: Vec<String> = key.iter().map(usize::to_string).collect();
        writeln!(w, "{degree},{},{v:e}", key.join("-"))?;
    }
    Ok(())
}

/// CSV `vertex_id,value...` with one column per component.
pub fn write_vertex_field<W: Write>(mut w: W, values: &[Vec<f64>]) -> io::Result<()> {
    let width = values.first().map_or(1, Vec::len);
    let header: Vec<String> = if width == 1 {
        vec!["value".into()]
    } else {
        (0..width).map(|d| format!("value{d}")).collect()
    };
    writeln!(w, "vertex_id,{}", header.join(","))?;
    for (i, v) in values.iter().enumerate() {
        let cols: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
        writeln!(w, "{i},{}", cols.join(","))?;
    }
    Ok(())
}

/// Coordinate-list text: a `rows cols nnz` header, then `row col value`.
pub fn write_coo<W: Write>(mut w: W, a: &CsrMatrix<f64>) -> io::Result<()> {
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (r, row) in a.row_iter().enumerate() {
        for (c, v) in row.col_indices().iter().zip(row.values()) {
            writeln!(w, "{r} {c} {v:e}")?;
        }
    }
    Ok(())
}
