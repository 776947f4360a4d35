//! Structured output: report documents, tables, the config file, and a JSON
//! writer that prints every float with 17 significant digits and sorted keys.

use std::collections::BTreeMap;
use std::io;

use nalgebra::DMatrix;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::dual::{CriticalPoint, CubicSolveTrace, DualRoot, Regime, RegimeTag};
use crate::oracle::{FdReport, GridSearchResult};
use crate::perturbation::PerturbationTrace;
use crate::problem::ProblemSpec;
use crate::reduction::GeneralSolution;
use crate::triality::{DirectionProbe, Inertia, SaddleCone};

pub const SOLVE_SCHEMA: &str = "doublewell/solve-report/v1";
pub const CLASSIFY_SCHEMA: &str = "doublewell/classify-report/v1";
pub const PERTURB_SCHEMA: &str = "doublewell/perturb-report/v1";
pub const SWEEP_SCHEMA: &str = "doublewell/sweep-table/v1";
pub const REDUCE_SCHEMA: &str = "doublewell/reduce-report/v1";
pub const VERIFY_SCHEMA: &str = "doublewell/verify-report/v1";

/// Pretty JSON with floats written as `d.dddddddddddddddde±x`.
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serialize to pretty JSON with sorted keys and 17-digit floats.
pub fn to_document<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // going through Value sorts object keys
    let value = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Timings {
    pub total_us: u64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SolveReport {
    pub schema: String,
    pub spec: ProblemSpec,
    pub regime: Regime,
    pub roots: Vec<DualRoot>,
    pub trace: CubicSolveTrace,
    pub critical_points: Vec<CriticalPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saddle_cone: Option<SaddleCone>,
    /// `|Π(x_i) − Π^d(σ_i)|` per point.
    pub duality_gaps: Vec<f64>,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct PointAnalysis {
    pub root_index: u8,
    pub hessian_eigenvalues: Vec<f64>,
    pub inertia: Inertia,
    /// `∇²Π^d(σ_i)`
    pub dual_hessian: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct ClassifyReport {
    pub schema: String,
    pub solve: SolveReport,
    pub analysis: Vec<PointAnalysis>,
    /// Curvature probes at the saddle along `f` and orthogonal to it.
    pub saddle_probes: Vec<DirectionProbe>,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct PerturbReport {
    pub schema: String,
    pub spec: ProblemSpec,
    pub trace: PerturbationTrace,
    pub residual_max: f64,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SweepRow {
    pub force_norm: f64,
    pub sigma1: f64,
    #[serde(default)]
    pub sigma2: Option<f64>,
    #[serde(default)]
    pub sigma3: Option<f64>,
    pub primal_min_value: f64,
    pub regime: RegimeTag,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SweepTable {
    pub schema: String,
    pub alpha: f64,
    pub lambda: f64,
    pub direction: Vec<f64>,
    pub threshold_force_norm: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("force_norm,sigma1,sigma2,sigma3,primal_min_value,regime\n");
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(r.force_norm),
                fmt_f64(r.sigma1),
                opt(r.sigma2),
                opt(r.sigma3),
                fmt_f64(r.primal_min_value),
                r.regime
            ));
        }
        out
    }
}

pub fn perturbation_csv(trace: &PerturbationTrace) -> String {
    let mut out = String::from("k,sigma1,sigma2,sigma3,gap1,gap2,gap3\n");
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    for s in &trace.steps {
        let gaps = [dist(&s.x[0], &trace.limits.x1), dist(&s.x[1], &trace.limits.x2), dist(&s.x[2], &trace.limits.x3)];
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.k,
            fmt_f64(s.sigma[0]),
            fmt_f64(s.sigma[1]),
            fmt_f64(s.sigma[2]),
            fmt_f64(gaps[0]),
            fmt_f64(gaps[1]),
            fmt_f64(gaps[2])
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct ReduceReport {
    pub schema: String,
    pub alpha: f64,
    pub lambda: f64,
    pub b: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub solution: GeneralSolution,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SamplingSummary {
    pub count: usize,
    pub excluded: usize,
    pub agreement_fraction: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub spec: ProblemSpec,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub failures: Vec<String>,
    #[serde(default)]
    pub finite_differences: Option<FdReport>,
    #[serde(default)]
    pub grid: Option<GridSearchResult>,
    #[serde(default)]
    pub saddle_sampling: Option<SamplingSummary>,
}

/// Flat key/value problem file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub f: Option<Vec<f64>>,
    pub n: Option<usize>,
    /// Row-major entries of `B`.
    #[serde(rename = "B")]
    pub b: Option<Vec<f64>>,
    /// `[rows, cols]` of `B`.
    #[serde(rename = "B_dims")]
    pub b_dims: Option<[usize; 2]>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn operator(&self) -> Result<Option<DMatrix<f64>>, String> {
        match (&self.b, &self.b_dims) {
            (None, None) => Ok(None),
            (Some(data), Some([rows, cols])) => {
                if rows * cols != data.len() {
                    return Err(format!("B has {} entries but B_dims is {rows}x{cols}", data.len()));
                }
                Ok(Some(DMatrix::from_row_slice(*rows, *cols, data)))
            }
            _ => Err("B and B_dims must be given together".into()),
        }
    }
}

/// Rows of a matrix, for serialization.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Long-format plot samples, `series,t,value`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotData {
    pub series: BTreeMap<String, Vec<(f64, f64)>>,
}

impl PlotData {
    pub fn push(&mut self, name: &str, t: f64, value: f64) {
        self.series.entry(name.to_string()).or_default().push((t, value));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,t,value\n");
        for (name, pts) in &self.series {
            for (t, v) in pts {
                out.push_str(&format!("{name},{},{}\n", fmt_f64(*t), fmt_f64(*v)));
            }
        }
        out
    }
}
