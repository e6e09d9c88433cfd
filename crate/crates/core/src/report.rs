//! Plain-text serialization of results.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), which
//! round-trips any `f64` exactly, so reports are bit-reproducible.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::adapt::{IterationRecord, StudyReport};
use crate::estimator::IndicatorReport;
use crate::galerkin::DiscreteFunction;
use crate::mesh::Mesh;

/// `x` with 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// `vertex_id,x,y,E,osc,n_elements_in_star`.
pub fn indicator_csv(report: &IndicatorReport) -> String {
    let mut s = String::from("vertex_id,x,y,E,osc,n_elements_in_star\n");
    for v in &report.vertices {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            v.vertex,
            fmt_float(v.x),
            fmt_float(v.y),
            fmt_float(v.indicator),
            fmt_float(v.oscillation),
            v.n_elements
        );
    }
    s
}

/// `vertex_id,x,y,u`: nodal values, zero on the boundary.
pub fn solution_csv(mesh: &Mesh, u: &DiscreteFunction) -> String {
    let mut s = String::from("vertex_id,x,y,u\n");
    for (z, (&[x, y], &value)) in mesh.vertices().iter().zip(u.values()).enumerate() {
        let _ = writeln!(s, "{z},{},{},{}", fmt_float(x), fmt_float(y), fmt_float(value));
    }
    s
}

/// One row per adaptive iteration. Wall-clock times are left to the JSON
/// summary so that the CSV is deterministic.
pub fn iterations_csv(records: &[IterationRecord]) -> String {
    let mut s = String::from(
        "iteration,dofs,elements,estimator,oscillation,classic_estimator,error,effectivity,\
         classic_effectivity,marked_vertices,marked_elements,solver_iterations\n",
    );
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.dofs,
            r.elements,
            fmt_float(r.estimator),
            opt(r.oscillation),
            fmt_float(r.classic_estimator),
            opt(r.error),
            opt(r.effectivity),
            opt(r.classic_effectivity),
            r.marked_vertices,
            r.marked_elements,
            r.solver_iterations
        );
    }
    s
}

/// `kappa,iteration,dofs,estimator,oscillation,error,effectivity`.
pub fn study_csv(study: &StudyReport) -> String {
    let mut s = String::from("kappa,iteration,dofs,estimator,oscillation,error,effectivity\n");
    for r in &study.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_float(r.kappa),
            r.iteration,
            r.dofs,
            fmt_float(r.estimator),
            fmt_float(r.oscillation),
            fmt_float(r.error),
            fmt_float(r.effectivity)
        );
    }
    s
}

/// Pretty JSON whose numbers use the same 17-digit format as the CSVs.
struct DigitsFormatter(PrettyFormatter<'static>);

impl Formatter for DigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON; non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, DigitsFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

/// Global quantities of one estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub kappa: f64,
    pub preset: String,
    pub elements: usize,
    pub dofs: usize,
    pub estimator: f64,
    pub oscillation: f64,
    pub classic_estimator: f64,
    pub error: Option<f64>,
    pub effectivity: Option<f64>,
    pub solver_iterations: Option<usize>,
}

impl Summary {
    pub fn from_report(report: &IndicatorReport, preset: &str, elements: usize, dofs: usize, error: Option<f64>) -> Self {
        Self {
            kappa: report.kappa,
            preset: preset.into(),
            elements,
            dofs,
            estimator: report.estimator,
            oscillation: report.oscillation,
            classic_estimator: report.classic_estimator,
            error,
            effectivity: error.map(|e| report.total() / e),
            solver_iterations: None,
        }
    }
}
