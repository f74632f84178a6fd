//! JSON and CSV persistence for spaces, cube trees and wavelet bases, plus
//! the report writer.
//!
//! Trees embed their space and bases embed their tree, so each file is
//! self-contained. Real arrays inside bases are either plain JSON numbers or
//! base64 of little-endian `f64` bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dyadic::{Cube, CubeParams, DyadicTree};
use crate::error::{Error, Result};
use crate::space::{FiniteHomSpace, Metric};
use crate::wavelet::{ElementKey, WaveletBasis, WaveletElement};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord: Option<Vec<f64>>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricRecord {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub name: String,
    pub points: Vec<PointRecord>,
    pub metric: MetricRecord,
}

/// Parses a metric kind with its optional parameter.
pub fn metric_from_parts(kind: &str, param: Option<f64>) -> Result<Metric> {
    let need = |what: &str| param.ok_or_else(|| Error::parse("metric.param", format!("{kind} metric needs {what}")));
    Ok(match kind {
        "euclidean" => Metric::Euclidean,
        "snowflake" => Metric::Snowflake { eps: need("eps")? },
        "power" => Metric::Power { p: need("p")? },
        "matrix" => Metric::Matrix,
        other => return Err(Error::parse("metric.kind", format!("unknown metric kind {other:?}"))),
    })
}

impl SpaceFile {
    pub fn from_space(space: &FiniteHomSpace) -> Self {
        let metric = space.metric();
        let coords = space.coords();
        let points = (0..space.n())
            .map(|i| PointRecord { id: i, coord: coords.map(|c| c[i].clone()), weight: space.weight(i) })
            .collect();
        let matrix = (metric == Metric::Matrix).then(|| space.distance_matrix().to_vec());
        Self {
            name: space.name().to_string(),
            points,
            metric: MetricRecord { kind: metric.name().to_string(), param: metric.param(), matrix },
        }
    }

    /// Rebuilds the space; axiom failures surface as their own error kinds.
    pub fn into_space(self) -> Result<FiniteHomSpace> {
        let n = self.points.len();
        let mut order: Vec<Option<PointRecord>> = vec![None; n];
        for (i, p) in self.points.into_iter().enumerate() {
            if p.id >= n || order[p.id].is_some() {
                return Err(Error::parse(format!("points[{i}].id"), format!("ids must be a permutation of 0..{n}, got {}", p.id)));
            }
            let id = p.id;
            order[id] = Some(p);
        }
        let points: Vec<PointRecord> = order.into_iter().map(Option::unwrap).collect();
        let weight: Vec<f64> = points.iter().map(|p| p.weight).collect();
        let metric = metric_from_parts(&self.metric.kind, self.metric.param)?;
        if metric == Metric::Matrix {
            let m = self.metric.matrix.ok_or_else(|| Error::parse("metric.matrix", "matrix metric needs a matrix"))?;
            if m.len() != n * n {
                return Err(Error::parse("metric.matrix", format!("expected {} entries, got {}", n * n, m.len())));
            }
            return FiniteHomSpace::from_matrix(self.name, m, weight);
        }
        let mut coords = Vec::with_capacity(n);
        for (i, p) in points.into_iter().enumerate() {
            let c = p.coord.ok_or_else(|| Error::parse(format!("points[{i}].coord"), "coordinates required for this metric"))?;
            if i > 0 && c.len() != coords.first().map_or(0, |c0: &Vec<f64>| c0.len()) {
                return Err(Error::parse(format!("points[{i}].coord"), "dimension differs from points[0]"));
            }
            coords.push(c);
        }
        FiniteHomSpace::from_coords(self.name, coords, weight, metric)
    }
}

/// How real arrays are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayEncoding {
    #[default]
    Base64,
    Plain,
}

/// A real array as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum F64Array {
    Plain(Vec<f64>),
    Base64(String),
}

impl F64Array {
    pub fn encode(values: &[f64], enc: ArrayEncoding) -> Self {
        match enc {
            ArrayEncoding::Plain => F64Array::Plain(values.to_vec()),
            ArrayEncoding::Base64 => {
                let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
                F64Array::Base64(STANDARD.encode(bytes))
            }
        }
    }

    pub fn decode(&self, context: &str) -> Result<Vec<f64>> {
        match self {
            F64Array::Plain(v) => Ok(v.clone()),
            F64Array::Base64(s) => {
                let bytes = STANDARD.decode(s).map_err(|e| Error::parse(context, format!("bad base64: {e}")))?;
                if bytes.len() % 8 != 0 {
                    return Err(Error::parse(context, format!("{} bytes is not a whole number of f64", bytes.len())));
                }
                Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub space: SpaceFile,
    pub params: CubeParams,
    pub a0: f64,
    pub k_min: i32,
    /// `levels[i]` holds the cubes of level `k_min + i`.
    pub levels: Vec<Vec<Cube>>,
}

impl TreeFile {
    pub fn from_tree(tree: &DyadicTree, space: &FiniteHomSpace) -> Self {
        Self {
            space: SpaceFile::from_space(space),
            params: tree.params,
            a0: tree.a0,
            k_min: tree.k_min,
            levels: tree.levels().map(|(_, c)| c.to_vec()).collect(),
        }
    }

    pub fn into_tree(self) -> Result<(FiniteHomSpace, DyadicTree)> {
        let space = self.space.into_space()?;
        check_partitions(&self.levels, space.n())?;
        let tree = DyadicTree::from_levels(self.params, self.a0, self.k_min, self.levels, space.n())?;
        Ok((space, tree))
    }
}

/// Every level must partition the points, and parent/child links must be
/// mutual and in range.
fn check_partitions(levels: &[Vec<Cube>], n: usize) -> Result<()> {
    for (i, cubes) in levels.iter().enumerate() {
        let mut seen = vec![false; n];
        for (a, c) in cubes.iter().enumerate() {
            let ctx = || format!("levels[{i}][{a}]");
            for &p in &c.members {
                if p >= n || std::mem::replace(&mut seen[p], true) {
                    return Err(Error::parse(ctx(), format!("member {p} out of range or repeated")));
                }
            }
            if !c.members.windows(2).all(|w| w[0] < w[1]) || c.members.binary_search(&c.center).is_err() {
                return Err(Error::parse(ctx(), "members must be ascending and contain the center"));
            }
            match (i, c.parent) {
                (0, _) => {}
                (_, Some(p)) if levels[i - 1].get(p).is_some_and(|q| q.children.contains(&a)) => {}
                _ => return Err(Error::parse(ctx(), "parent link missing or not mutual")),
            }
            if c.children.iter().any(|&ch| levels.get(i + 1).is_none_or(|l| l.get(ch).is_none_or(|q| q.parent != Some(a)))) {
                return Err(Error::parse(ctx(), "child link not mutual"));
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::parse(format!("levels[{i}]"), format!("point {p} is in no cube")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementRecord {
    pub key: ElementKey,
    pub level: i32,
    pub support: crate::dyadic::CubeKey,
    pub center: usize,
    pub piece_level: i32,
    pub pieces: Vec<usize>,
    pub coeffs: F64Array,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisFile {
    pub tree: TreeFile,
    pub encoding: ArrayEncoding,
    pub elements: Vec<ElementRecord>,
}

impl BasisFile {
    pub fn from_basis(basis: &WaveletBasis, space: &FiniteHomSpace, enc: ArrayEncoding) -> Self {
        Self {
            tree: TreeFile::from_tree(&basis.tree, space),
            encoding: enc,
            elements: basis
                .elements()
                .iter()
                .map(|e| ElementRecord {
                    key: e.key,
                    level: e.level,
                    support: e.support,
                    center: e.center,
                    piece_level: e.piece_level,
                    pieces: e.pieces.clone(),
                    coeffs: F64Array::encode(&e.coeffs, enc),
                })
                .collect(),
        }
    }

    pub fn into_basis(self) -> Result<(FiniteHomSpace, WaveletBasis)> {
        let (space, tree) = self.tree.into_tree()?;
        let elements = self
            .elements
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                Ok(WaveletElement {
                    key: r.key,
                    level: r.level,
                    support: r.support,
                    center: r.center,
                    piece_level: r.piece_level,
                    pieces: r.pieces,
                    coeffs: r.coeffs.decode(&format!("elements[{i}].coeffs"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((space, WaveletBasis::from_elements(tree, elements)?))
    }
}

/// Parses JSON, naming the failing field path and line.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::parse(
            format!("{} (line {}, column {})", e.path(), inner.line(), inner.column()),
            inner.to_string(),
        )
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::Io)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string(value)?;
    fs::write(path, text).map_err(Error::Io)
}

pub fn save_space(path: impl AsRef<Path>, space: &FiniteHomSpace) -> Result<()> {
    write_json(path.as_ref(), &SpaceFile::from_space(space))
}

pub fn load_space(path: impl AsRef<Path>) -> Result<FiniteHomSpace> {
    from_json_str::<SpaceFile>(&read(path.as_ref())?)?.into_space()
}

pub fn save_tree(path: impl AsRef<Path>, tree: &DyadicTree, space: &FiniteHomSpace) -> Result<()> {
    write_json(path.as_ref(), &TreeFile::from_tree(tree, space))
}

pub fn load_tree(path: impl AsRef<Path>) -> Result<(FiniteHomSpace, DyadicTree)> {
    from_json_str::<TreeFile>(&read(path.as_ref())?)?.into_tree()
}

pub fn save_basis(path: impl AsRef<Path>, basis: &WaveletBasis, space: &FiniteHomSpace, enc: ArrayEncoding) -> Result<()> {
    write_json(path.as_ref(), &BasisFile::from_basis(basis, space, enc))
}

pub fn load_basis(path: impl AsRef<Path>) -> Result<(FiniteHomSpace, WaveletBasis)> {
    from_json_str::<BasisFile>(&read(path.as_ref())?)?.into_basis()
}

/// Reads `id, weight, coord...` rows. A first row whose `id` field is not an
/// integer is taken as a header.
pub fn space_from_csv(name: &str, text: &str, metric: Metric) -> Result<FiniteHomSpace> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes());
    let mut rows: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse("csv", e.to_string()))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && rec.get(0).is_some_and(|s| s.parse::<usize>().is_err()) {
            continue;
        }
        if rec.len() < 2 {
            return Err(Error::parse(format!("csv line {line}"), "need at least id and weight"));
        }
        let field = |j: usize, what: &str| -> Result<f64> {
            rec[j].parse::<f64>().map_err(|_| Error::parse(format!("csv line {line}, field {}", j + 1), format!("bad {what} {:?}", &rec[j])))
        };
        let id = rec[0].parse::<usize>().map_err(|_| Error::parse(format!("csv line {line}, field 1"), format!("bad id {:?}", &rec[0])))?;
        let weight = field(1, "weight")?;
        let coord = (2..rec.len()).map(|j| field(j, "coordinate")).collect::<Result<Vec<_>>>()?;
        rows.push((id, weight, coord));
    }
    if metric == Metric::Matrix {
        return Err(Error::InvalidSpec("CSV input carries coordinates; choose a coordinate metric".into()));
    }
    let file = SpaceFile {
        name: name.to_string(),
        points: rows.into_iter().map(|(id, weight, coord)| PointRecord { id, coord: Some(coord), weight }).collect(),
        metric: MetricRecord { kind: metric.name().into(), param: metric.param(), matrix: None },
    };
    file.into_space()
}

/// Reads per-point function values: one value per row, or `id, value` rows.
pub fn values_from_csv(text: &str, n: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes());
    let mut out = vec![f64::NAN; n];
    let mut next = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse("csv", e.to_string()))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        let last = rec.len().saturating_sub(1);
        let Ok(v) = rec.get(last).unwrap_or("").parse::<f64>() else {
            if i == 0 {
                continue;
            }
            return Err(Error::parse(format!("csv line {line}, field {}", last + 1), "bad value"));
        };
        let id = if rec.len() >= 2 {
            rec[0].parse::<usize>().map_err(|_| Error::parse(format!("csv line {line}, field 1"), "bad id"))?
        } else {
            next
        };
        if id >= n {
            return Err(Error::parse(format!("csv line {line}"), format!("id {id} out of range for {n} points")));
        }
        out[id] = v;
        next = id + 1;
    }
    if let Some(p) = out.iter().position(|v| v.is_nan()) {
        return Err(Error::parse("csv", format!("no value for point {p}")));
    }
    Ok(out)
}

/// Pretty JSON whose floats carry 17 significant digits.
pub struct ReportFormatter(serde_json::ser::PrettyFormatter<'static>);

impl Default for ReportFormatter {
    fn default() -> Self {
        Self(serde_json::ser::PrettyFormatter::with_indent(b"  "))
    }
}

impl serde_json::ser::Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes a report with [`ReportFormatter`].
pub fn report_to_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ReportFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{build_tree, TreeOptions};
    use crate::generate::{generate, GeneratorSpec};
    use crate::wavelet::build_mra;

    #[test]
    fn space_tree_basis_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate(&GeneratorSpec::snowflake(0.5, 64)).unwrap();
        save_space(dir.path().join("s.json"), &s).unwrap();
        assert_eq!(load_space(dir.path().join("s.json")).unwrap(), s);
        let (tree, _) = build_tree(&s, 1.0, TreeOptions::default()).unwrap();
        save_tree(dir.path().join("t.json"), &tree, &s).unwrap();
        let (s2, t2) = load_tree(dir.path().join("t.json")).unwrap();
        assert_eq!((s2, t2), (s.clone(), tree.clone()));
        let b = build_mra(&tree).unwrap();
        for enc in [ArrayEncoding::Base64, ArrayEncoding::Plain] {
            save_basis(dir.path().join("b.json"), &b, &s, enc).unwrap();
            let (_, b2) = load_basis(dir.path().join("b.json")).unwrap();
            assert_eq!(b2, b);
        }
    }

    #[test]
    fn matrix_space_round_trip_and_errors() {
        let m = vec![0.0, 2.0, 3.0, 2.0, 0.0, 1.5, 3.0, 1.5, 0.0];
        let s = FiniteHomSpace::from_matrix("tri", m, vec![1.0, 0.5, 2.0]).unwrap();
        let text = serde_json::to_string(&SpaceFile::from_space(&s)).unwrap();
        assert_eq!(from_json_str::<SpaceFile>(&text).unwrap().into_space().unwrap(), s);

        let asym = text.replace("[0.0,2.0,3.0,2.0", "[0.0,2.5,3.0,2.0");
        let e = from_json_str::<SpaceFile>(&asym).unwrap().into_space().unwrap_err();
        assert!(e.to_string().contains("asymmetric"), "{e}");
        let neg = text.replace("\"weight\":0.5", "\"weight\":-0.5");
        let e = from_json_str::<SpaceFile>(&neg).unwrap().into_space().unwrap_err();
        assert!(e.to_string().contains("nonpositive weight"), "{e}");
    }

    #[test]
    fn parse_errors_name_the_field() {
        let bad = "{\"name\":\"x\",\n\"points\":[{\"id\":0,\"weight\":\"heavy\"}],\"metric\":{\"kind\":\"matrix\"}}";
        match from_json_str::<SpaceFile>(bad).unwrap_err() {
            Error::Parse { context, .. } => {
                assert!(context.contains("points[0].weight") && context.contains("line 2"), "{context}")
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn csv_space_and_values() {
        let text = "id,weight,x\n0,0.25,0\n2,0.25,0.5\n1,0.25,0.25\n";
        let s = space_from_csv("c", text, Metric::Euclidean).unwrap();
        assert_eq!(s.n(), 3);
        assert_eq!(s.dist(0, 2), 0.5);
        let e = space_from_csv("c", "0,0.25,0\n1,abc,1\n", Metric::Euclidean).unwrap_err();
        assert!(e.to_string().contains("line 2, field 2"), "{e}");
        assert_eq!(values_from_csv("value\n1.5\n2\n-1\n", 3).unwrap(), vec![1.5, 2.0, -1.0]);
        assert_eq!(values_from_csv("2,7\n0,5\n1,6\n", 3).unwrap(), vec![5.0, 6.0, 7.0]);
        assert!(values_from_csv("1\n2\n", 3).is_err());
    }

    #[test]
    fn report_floats_have_seventeen_digits() {
        let s = report_to_string(&serde_json::json!({"a": 0.1, "b": [1.0, f64::NAN]})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("null"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.1));
    }
}
