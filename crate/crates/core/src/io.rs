//! Reading and writing pose graphs in the g2o text format.
//!
//! Supported records (whitespace separated, one per line):
//!
//! ```text
//! VERTEX_SE2 id x y theta
//! EDGE_SE2 i j dx dy dtheta i11 i12 i13 i22 i23 i33
//! VERTEX_SE3:QUAT id x y z qx qy qz qw
//! EDGE_SE3:QUAT i j dx dy dz qx qy qz qw <21 upper-triangular information entries>
//! EDGE_PRIOR_SE2 id x y theta <6 information entries>
//! EDGE_PRIOR_SE3:QUAT id x y z qx qy qz qw <21 information entries>
//! ```
//!
//! The two prior records are an extension of this crate. Blank lines and
//! lines starting with `#` are ignored; any other record type is skipped and
//! counted. Vertex `id` becomes key `x<id>`. 3D information matrices are read
//! in (translation, rotation) order, matching the tangent layout of
//! [`Pose3`].

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use log::warn;
use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::factors::{BetweenFactor, Factor, PriorFactor};
use crate::graph::{key, FactorGraph, Key, Variables};
use crate::liegroups::{Pose2, Pose3, Rot3};
use crate::loss::{LossFunction, RobustKernel};

/// Largest accepted deviation of a file quaternion from unit norm.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    TwoD,
    ThreeD,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::TwoD => "2D",
            Dimension::ThreeD => "3D",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadOptions {
    /// Anchor the lowest-id vertex with a unit prior when the file has none.
    pub auto_prior: bool,
    /// Robust kernel for every edge. File priors and the anchor keep a plain
    /// quadratic loss.
    pub edge_kernel: RobustKernel,
    /// Read 3D information blocks in (rotation, translation) order instead.
    pub permute_3d_info: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            auto_prior: true,
            edge_kernel: RobustKernel::None,
            permute_3d_info: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DatasetBundle {
    pub graph: FactorGraph,
    pub initials: Variables,
    pub vertex_count: usize,
    /// Relative-pose edges.
    pub edge_count: usize,
    /// Prior records read from the file.
    pub prior_count: usize,
    /// `None` for an empty bundle.
    pub dimension: Option<Dimension>,
    /// Lines with unknown record types.
    pub skipped: usize,
    /// Graph index of the automatically added anchor prior.
    pub anchor: Option<usize>,
}

impl DatasetBundle {
    pub fn empty() -> Self {
        Self {
            graph: FactorGraph::new(),
            initials: Variables::new(),
            vertex_count: 0,
            edge_count: 0,
            prior_count: 0,
            dimension: None,
            skipped: 0,
            anchor: None,
        }
    }

    /// One-line summary, e.g. `5 vertices, 5 edges + 1 prior, 2D`.
    pub fn summary(&self) -> String {
        let mut s = format!("{} vertices, {} edges", self.vertex_count, self.edge_count);
        if self.prior_count > 0 {
            let plural = if self.prior_count == 1 { "" } else { "s" };
            s += &format!(" + {} prior{plural}", self.prior_count);
        }
        if let Some(d) = self.dimension {
            s += &format!(", {d}");
        }
        s
    }

    /// Writes the bundle with its own initial values.
    pub fn save<W: Write>(&self, out: W) -> Result<()> {
        self.save_with_values(&self.initials, out)
    }

    /// Writes the bundle's factors with `values` as vertices, leaving out the
    /// automatic anchor.
    pub fn save_with_values<W: Write>(&self, values: &Variables, out: W) -> Result<()> {
        save_pose_graph(&self.graph, values, self.anchor, out)
    }
}

enum Record {
    Vertex2(u64, Pose2),
    Vertex3(u64, Pose3),
    Edge2(u64, u64, Pose2, DMatrix<f64>),
    Edge3(u64, u64, Pose3, DMatrix<f64>),
    Prior2(u64, Pose2, DMatrix<f64>),
    Prior3(u64, Pose3, DMatrix<f64>),
}

struct Fields<'a> {
    line: usize,
    tokens: std::str::SplitWhitespace<'a>,
}

impl Fields<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn id(&mut self) -> Result<u64> {
        let t = self.tokens.next().ok_or_else(|| self.err("missing vertex id"))?;
        t.parse().map_err(|_| self.err(format!("invalid vertex id `{t}`")))
    }

    fn num(&mut self) -> Result<f64> {
        let t = self.tokens.next().ok_or_else(|| self.err("too few fields"))?;
        let v: f64 = t.parse().map_err(|_| self.err(format!("invalid number `{t}`")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite number `{t}`")));
        }
        Ok(v)
    }

    fn nums<const N: usize>(&mut self) -> Result<[f64; N]> {
        let mut out = [0.0; N];
        for v in out.iter_mut() {
            *v = self.num()?;
        }
        Ok(out)
    }

    fn end(&mut self) -> Result<()> {
        match self.tokens.next() {
            Some(t) => Err(self.err(format!("unexpected trailing field `{t}`"))),
            None => Ok(()),
        }
    }

    fn pose2(&mut self) -> Result<Pose2> {
        let [x, y, theta] = self.nums()?;
        Ok(Pose2::new(x, y, theta))
    }

    fn pose3(&mut self) -> Result<Pose3> {
        let [x, y, z, qx, qy, qz, qw] = self.nums()?;
        let norm = (qx * qx + qy * qy + qz * qz + qw * qw).sqrt();
        if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
            return Err(self.err(format!("quaternion norm {norm} is not 1")));
        }
        Ok(Pose3::new(Rot3::from_quaternion(qw, qx, qy, qz), Vector3::new(x, y, z)))
    }

    fn information(&mut self, n: usize, permute: bool) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.num()?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        if permute {
            // (ω, t) → (t, ω)
            let p = [3, 4, 5, 0, 1, 2];
            m = DMatrix::from_fn(6, 6, |i, j| m[(p[i], p[j])]);
        }
        Ok(m)
    }
}

fn parse_line(line: usize, text: &str, options: &LoadOptions) -> Result<Option<Record>> {
    let mut tokens = text.split_whitespace();
    let Some(tag) = tokens.next() else {
        return Ok(None);
    };
    let mut f = Fields { line, tokens };
    let permute = options.permute_3d_info;
    let record = match tag {
        "VERTEX_SE2" => Record::Vertex2(f.id()?, f.pose2()?),
        "VERTEX_SE3:QUAT" => Record::Vertex3(f.id()?, f.pose3()?),
        "EDGE_SE2" => Record::Edge2(f.id()?, f.id()?, f.pose2()?, f.information(3, false)?),
        "EDGE_SE3:QUAT" => Record::Edge3(f.id()?, f.id()?, f.pose3()?, f.information(6, permute)?),
        "EDGE_PRIOR_SE2" => Record::Prior2(f.id()?, f.pose2()?, f.information(3, false)?),
        "EDGE_PRIOR_SE3:QUAT" => Record::Prior3(f.id()?, f.pose3()?, f.information(6, permute)?),
        other => {
            warn!("line {line}: skipping unsupported record {other}");
            return Ok(None);
        }
    };
    f.end()?;
    Ok(Some(record))
}

/// Parses a g2o stream into a factor graph and initial values.
pub fn load_pose_graph<R: BufRead>(source: R, options: &LoadOptions) -> Result<DatasetBundle> {
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, text) in source.lines().enumerate() {
        let text = text?;
        let line = i + 1;
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_line(line, trimmed, options)? {
            Some(r) => records.push((line, r)),
            None => skipped += 1,
        }
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "input contains no pose-graph records".into(),
        });
    }

    let mut bundle = DatasetBundle::empty();
    bundle.skipped = skipped;
    let mut ids = BTreeSet::new();
    let set_dim = |bundle: &mut DatasetBundle, line: usize, d: Dimension| -> Result<()> {
        match bundle.dimension {
            Some(existing) if existing != d => Err(Error::Parse {
                line,
                message: format!("{d} record in a {existing} file"),
            }),
            _ => {
                bundle.dimension = Some(d);
                Ok(())
            }
        }
    };
    for (line, r) in &records {
        let (id, d) = match r {
            Record::Vertex2(id, p) => {
                bundle.initials.add(key('x', *id), *p);
                (*id, Dimension::TwoD)
            }
            Record::Vertex3(id, p) => {
                bundle.initials.add(key('x', *id), *p);
                (*id, Dimension::ThreeD)
            }
            _ => continue,
        };
        set_dim(&mut bundle, *line, d)?;
        if !ids.insert(id) {
            return Err(Error::Parse {
                line: *line,
                message: format!("duplicate vertex {id}"),
            });
        }
    }
    bundle.vertex_count = ids.len();

    let known = |line: usize, id: u64| -> Result<Key> {
        if ids.contains(&id) {
            Ok(key('x', id))
        } else {
            Err(Error::UnknownVertex { line, id })
        }
    };
    let loss_at = |line: usize, info: &DMatrix<f64>| -> Result<LossFunction> {
        LossFunction::from_information(info).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })
    };
    let kernel = options.edge_kernel;
    for (line, r) in records {
        match r {
            Record::Vertex2(..) | Record::Vertex3(..) => {}
            Record::Edge2(i, j, m, info) => {
                set_dim(&mut bundle, line, Dimension::TwoD)?;
                let loss = loss_at(line, &info)?.with_kernel(kernel);
                bundle.graph.add(BetweenFactor::new(known(line, i)?, known(line, j)?, m, loss));
                bundle.edge_count += 1;
            }
            Record::Edge3(i, j, m, info) => {
                set_dim(&mut bundle, line, Dimension::ThreeD)?;
                let loss = loss_at(line, &info)?.with_kernel(kernel);
                bundle.graph.add(BetweenFactor::new(known(line, i)?, known(line, j)?, m, loss));
                bundle.edge_count += 1;
            }
            Record::Prior2(i, p, info) => {
                set_dim(&mut bundle, line, Dimension::TwoD)?;
                bundle.graph.add(PriorFactor::new(known(line, i)?, p, loss_at(line, &info)?));
                bundle.prior_count += 1;
            }
            Record::Prior3(i, p, info) => {
                set_dim(&mut bundle, line, Dimension::ThreeD)?;
                bundle.graph.add(PriorFactor::new(known(line, i)?, p, loss_at(line, &info)?));
                bundle.prior_count += 1;
            }
        }
    }

    if options.auto_prior && bundle.prior_count == 0 {
        add_auto_prior(&mut bundle)?;
    }
    Ok(bundle)
}

/// Anchors the gauge with a unit-weight prior on the lowest-id vertex at its
/// initial value, and records it as the bundle's anchor. Does nothing for an
/// empty bundle.
pub fn add_auto_prior(bundle: &mut DatasetBundle) -> Result<()> {
    let Some(k) = bundle.initials.keys().find(|k| k.symbol() == 'x') else {
        return Ok(());
    };
    match bundle.dimension {
        Some(Dimension::TwoD) => {
            let p = *bundle.initials.at::<Pose2>(k)?;
            bundle.graph.add(PriorFactor::new(k, p, None));
        }
        _ => {
            let p = *bundle.initials.at::<Pose3>(k)?;
            bundle.graph.add(PriorFactor::new(k, p, None));
        }
    }
    bundle.anchor = Some(bundle.graph.len() - 1);
    Ok(())
}

/// Reads a file from disk.
pub fn load_file(path: impl AsRef<std::path::Path>, options: &LoadOptions) -> Result<DatasetBundle> {
    let file = std::fs::File::open(path)?;
    load_pose_graph(std::io::BufReader::new(file), options)
}

/// Shortest round-trip text for `v`, in exponent form outside [1e-4, 1e15).
/// Negative zero is written as `0`.
fn format_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn pose2_fields(p: &Pose2) -> String {
    format!("{} {} {}", format_num(p.x()), format_num(p.y()), format_num(p.theta()))
}

fn pose3_fields(p: &Pose3) -> String {
    let t = p.translation();
    let [w, x, y, z] = p.rotation().coords();
    [t.x, t.y, t.z, x, y, z, w].map(format_num).join(" ")
}

fn upper_triangle(loss: Option<&LossFunction>, n: usize) -> String {
    let info = loss.map_or_else(|| DMatrix::identity(n, n), |l| l.information());
    let mut parts = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            parts.push(format_num(info[(i, j)]));
        }
    }
    parts.join(" ")
}

fn vertex_id(k: Key) -> Result<u64> {
    if k.symbol() == 'x' {
        Ok(k.index())
    } else {
        Err(Error::Unsupported(format!("key {k} is not a pose vertex")))
    }
}

/// Writes vertices from `values` and every factor of `graph` except the one
/// at `skip`. All variables must be `Pose2`, or all `Pose3`. Numbers are
/// written in shortest round-trip form.
pub fn save_pose_graph<W: Write>(
    graph: &FactorGraph,
    values: &Variables,
    skip: Option<usize>,
    mut out: W,
) -> Result<()> {
    let mut dimension = None;
    for (k, v) in values.iter() {
        let id = vertex_id(k)?;
        let (line, d) = if let Some(p) = v.as_any().downcast_ref::<Pose2>() {
            (format!("VERTEX_SE2 {id} {}", pose2_fields(p)), Dimension::TwoD)
        } else if let Some(p) = v.as_any().downcast_ref::<Pose3>() {
            (format!("VERTEX_SE3:QUAT {id} {}", pose3_fields(p)), Dimension::ThreeD)
        } else {
            return Err(Error::Unsupported(format!("variable {k} of type {}", v.type_name())));
        };
        if dimension.is_some_and(|e| e != d) {
            return Err(Error::Unsupported("mixed 2D and 3D poses".into()));
        }
        dimension = Some(d);
        writeln!(out, "{line}")?;
    }
    for (index, factor) in graph.iter().enumerate() {
        if Some(index) == skip {
            continue;
        }
        writeln!(out, "{}", factor_line(factor.as_ref())?)?;
    }
    Ok(())
}

fn factor_line(f: &dyn Factor) -> Result<String> {
    let ids = |f: &dyn Factor| -> Result<Vec<u64>> { f.keys().iter().map(|k| vertex_id(*k)).collect() };
    if let Some(b) = f.downcast_ref::<BetweenFactor<Pose2>>() {
        let k = ids(f)?;
        return Ok(format!(
            "EDGE_SE2 {} {} {} {}",
            k[0],
            k[1],
            pose2_fields(b.measured()),
            upper_triangle(f.loss(), 3)
        ));
    }
    if let Some(b) = f.downcast_ref::<BetweenFactor<Pose3>>() {
        let k = ids(f)?;
        return Ok(format!(
            "EDGE_SE3:QUAT {} {} {} {}",
            k[0],
            k[1],
            pose3_fields(b.measured()),
            upper_triangle(f.loss(), 6)
        ));
    }
    if let Some(p) = f.downcast_ref::<PriorFactor<Pose2>>() {
        return Ok(format!(
            "EDGE_PRIOR_SE2 {} {} {}",
            ids(f)?[0],
            pose2_fields(p.prior()),
            upper_triangle(f.loss(), 3)
        ));
    }
    if let Some(p) = f.downcast_ref::<PriorFactor<Pose3>>() {
        return Ok(format!(
            "EDGE_PRIOR_SE3:QUAT {} {} {}",
            ids(f)?[0],
            pose3_fields(p.prior()),
            upper_triangle(f.loss(), 6)
        ));
    }
    Err(Error::Unsupported(format!("factor {f:?} has no g2o record")))
}
