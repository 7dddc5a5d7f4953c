use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::numerics::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Normal,
    Logistic,
    Laplace,
}

impl NoiseFamily {
    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Normal => "normal",
            NoiseFamily::Logistic => "logistic",
            NoiseFamily::Laplace => "laplace",
        }
    }
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(NoiseFamily::Normal),
            "logistic" => Ok(NoiseFamily::Logistic),
            "laplace" => Ok(NoiseFamily::Laplace),
            other => Err(Error::InvalidParameter(format!(
                "unknown noise family `{other}` (expected normal, logistic or laplace)"
            ))),
        }
    }
}

/// Mean-zero, symmetric noise with a scale parameter (standard deviation for
/// normal, `s` for logistic, `b` for laplace).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Noise {
    pub family: NoiseFamily,
    pub scale: f64,
}

impl Noise {
    pub fn new(family: NoiseFamily, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise scale must be positive, got {scale}")));
        }
        Ok(Self { family, scale })
    }

    pub fn cdf(&self, e: f64) -> f64 {
        let z = e / self.scale;
        match self.family {
            NoiseFamily::Normal => 0.5 * erfc(-z / std::f64::consts::SQRT_2),
            NoiseFamily::Logistic => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let ez = z.exp();
                    ez / (1.0 + ez)
                }
            }
            NoiseFamily::Laplace => {
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
        }
    }

    pub fn density(&self, e: f64) -> f64 {
        let z = e / self.scale;
        let standard = match self.family {
            NoiseFamily::Normal => (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            NoiseFamily::Logistic => {
                let ez = (-z.abs()).exp();
                ez / ((1.0 + ez) * (1.0 + ez))
            }
            NoiseFamily::Laplace => 0.5 * (-z.abs()).exp(),
        };
        standard / self.scale
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let z = match self.family {
            NoiseFamily::Normal => Normal::standard().inverse_cdf(p),
            NoiseFamily::Logistic => p.ln() - (-p).ln_1p(),
            NoiseFamily::Laplace => {
                if p < 0.5 {
                    (2.0 * p).ln()
                } else {
                    -(2.0 * (1.0 - p)).ln()
                }
            }
        };
        z * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    AdditiveNoise,
    Power,
    ExpTilt,
    Table,
    Custom,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::AdditiveNoise => "additive_noise",
            KernelFamily::Power => "power",
            KernelFamily::ExpTilt => "exp_tilt",
            KernelFamily::Table => "table",
            KernelFamily::Custom => "custom",
        }
    }
}

/// A user-supplied conditional valuation family. Only `cdf` and `density` are
/// required; a missing type derivative is estimated by finite differences, and
/// a missing quantile makes infinite supports integrate without truncation.
pub trait CustomKernel: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn support(&self) -> Interval;
    fn cdf(&self, v: f64, x: f64) -> f64;
    fn density(&self, v: f64, x: f64) -> f64;

    fn type_derivative(&self, _v: f64, _x: f64) -> Option<f64> {
        None
    }

    fn quantile(&self, _v: f64, _p: f64) -> Option<f64> {
        None
    }

    /// Signal values for which the family is defined.
    fn admits_type(&self, _v: f64) -> bool {
        true
    }
}

/// Declared integrable bound `b(V) >= |dH_v(V)/dv|`. Only spot-checked.
#[derive(Clone)]
pub struct DominatingBound {
    pub name: String,
    bound: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl DominatingBound {
    pub fn new(name: impl Into<String>, bound: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            bound: Arc::new(bound),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.bound)(x)
    }
}

impl fmt::Debug for DominatingBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DominatingBound").field("name", &self.name).finish()
    }
}

/// Conditional valuation distributions `H_v` indexed by the signal `v`.
///
/// The evaluators are total: outside the value support `cdf` clamps to 0 or 1
/// and `density` is 0, which the shift diagnostics rely on.
#[derive(Debug, Clone)]
pub struct ValuationKernel {
    repr: Repr,
    bound: Option<DominatingBound>,
}

#[derive(Debug, Clone)]
enum Repr {
    Additive(Noise),
    Power,
    ExpTilt,
    Table(Arc<TableKernel>),
    Custom(Arc<dyn CustomKernel>),
}

const UNIT: Interval = Interval {
    lower: 0.0,
    upper: 1.0,
};

impl ValuationKernel {
    /// `V = v + noise` on the real line.
    pub fn additive(noise: Noise) -> Self {
        Self::from_repr(Repr::Additive(noise))
    }

    /// `H_v(V) = V^v` on `(0, 1)`; needs `v > 0`.
    pub fn power() -> Self {
        Self::from_repr(Repr::Power)
    }

    /// Density proportional to `exp(v V)` on `(0, 1)`.
    pub fn exp_tilt() -> Self {
        Self::from_repr(Repr::ExpTilt)
    }

    /// Bilinear interpolation of `H` tabulated on `types x values`; `cdf` is
    /// row-major with one row per type node.
    pub fn table(types: Vec<f64>, values: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        Ok(Self::from_repr(Repr::Table(Arc::new(TableKernel::new(types, values, cdf)?))))
    }

    pub fn custom(kernel: Arc<dyn CustomKernel>) -> Self {
        Self::from_repr(Repr::Custom(kernel))
    }

    fn from_repr(repr: Repr) -> Self {
        Self { repr, bound: None }
    }

    pub fn with_dominating_bound(mut self, bound: DominatingBound) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn dominating_bound(&self) -> Option<&DominatingBound> {
        self.bound.as_ref()
    }

    pub fn family(&self) -> KernelFamily {
        match self.repr {
            Repr::Additive(_) => KernelFamily::AdditiveNoise,
            Repr::Power => KernelFamily::Power,
            Repr::ExpTilt => KernelFamily::ExpTilt,
            Repr::Table(_) => KernelFamily::Table,
            Repr::Custom(_) => KernelFamily::Custom,
        }
    }

    pub fn label(&self) -> String {
        match &self.repr {
            Repr::Additive(n) => format!("additive_noise({}, scale {})", n.family.name(), n.scale),
            Repr::Custom(c) => format!("custom({})", c.name()),
            _ => self.family().name().to_string(),
        }
    }

    pub fn noise(&self) -> Option<Noise> {
        match self.repr {
            Repr::Additive(n) => Some(n),
            _ => None,
        }
    }

    /// Raw `(types, values, cdf)` of a table kernel.
    pub fn table_data(&self) -> Option<(&[f64], &[f64], &[f64])> {
        match &self.repr {
            Repr::Table(t) => Some((&t.types, &t.values, &t.cdf)),
            _ => None,
        }
    }

    pub fn support(&self) -> Interval {
        match &self.repr {
            Repr::Additive(_) => Interval::real_line(),
            Repr::Power | Repr::ExpTilt => UNIT,
            Repr::Table(t) => t.support(),
            Repr::Custom(c) => c.support(),
        }
    }

    /// Errors unless the family is defined at signal value `v`.
    pub fn admits_type(&self, v: f64) -> Result<()> {
        let ok = match &self.repr {
            Repr::Additive(_) | Repr::ExpTilt => v.is_finite(),
            Repr::Power => v > 0.0 && v.is_finite(),
            Repr::Table(t) => t.type_range().contains_closed(v),
            Repr::Custom(c) => c.admits_type(v),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "kernel {} is not defined at signal value {v}",
                self.label()
            )))
        }
    }

    pub fn cdf(&self, v: f64, x: f64) -> f64 {
        match &self.repr {
            Repr::Additive(n) => n.cdf(x - v),
            Repr::Power => clamp_unit(x, |x| (v * x.ln()).exp()),
            Repr::ExpTilt => clamp_unit(x, |x| exp_tilt::cdf(v, x)),
            Repr::Table(t) => t.cdf(v, x),
            Repr::Custom(c) => c.cdf(v, x),
        }
    }

    pub fn density(&self, v: f64, x: f64) -> f64 {
        match &self.repr {
            Repr::Additive(n) => n.density(x - v),
            Repr::Power => inside_unit(x, |x| v * ((v - 1.0) * x.ln()).exp()),
            Repr::ExpTilt => inside_unit(x, |x| exp_tilt::density(v, x)),
            Repr::Table(t) => t.density(v, x),
            Repr::Custom(c) => c.density(v, x),
        }
    }

    /// `dH_v(x)/dv` when the family has a closed form.
    pub fn analytic_type_derivative(&self, v: f64, x: f64) -> Option<f64> {
        match &self.repr {
            Repr::Additive(n) => Some(-n.density(x - v)),
            Repr::Power => Some(inside_unit(x, |x| x.ln() * (v * x.ln()).exp())),
            Repr::ExpTilt => Some(inside_unit(x, |x| exp_tilt::type_derivative(v, x))),
            Repr::Table(t) => Some(t.type_derivative(v, x)),
            Repr::Custom(c) => c.type_derivative(v, x),
        }
    }

    pub fn quantile(&self, v: f64, p: f64) -> Option<f64> {
        match &self.repr {
            Repr::Additive(n) => Some(v + n.quantile(p)),
            Repr::Power => Some((p.ln() / v).exp()),
            Repr::ExpTilt => Some(exp_tilt::quantile(v, p)),
            Repr::Table(t) => Some(t.quantile(v, p)),
            Repr::Custom(c) => c.quantile(v, p),
        }
    }
}

fn clamp_unit(x: f64, f: impl Fn(f64) -> f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        f(x)
    }
}

fn inside_unit(x: f64, f: impl Fn(f64) -> f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        f(x)
    }
}

/// `h_v(V) = v e^{vV} / (e^v - 1)` on `(0, 1)`, with series near `v = 0`.
mod exp_tilt {
    const SERIES_BELOW: f64 = 1e-3;

    pub(super) fn cdf(v: f64, x: f64) -> f64 {
        if v.abs() < SERIES_BELOW {
            let a = x * (x - 1.0);
            return x + v * a / 2.0 + v * v * a * (2.0 * x - 1.0) / 12.0 + v.powi(3) * a * a / 24.0;
        }
        (v * x).exp_m1() / v.exp_m1()
    }

    pub(super) fn density(v: f64, x: f64) -> f64 {
        if v.abs() < SERIES_BELOW {
            return 1.0
                + v * (2.0 * x - 1.0) / 2.0
                + v * v * (6.0 * x * x - 6.0 * x + 1.0) / 12.0
                + v.powi(3) * x * (x - 1.0) * (2.0 * x - 1.0) / 12.0;
        }
        v * (v * x).exp() / v.exp_m1()
    }

    pub(super) fn type_derivative(v: f64, x: f64) -> f64 {
        if v.abs() < SERIES_BELOW {
            let a = x * (x - 1.0);
            return a / 2.0 + v * a * (2.0 * x - 1.0) / 6.0 + v * v * a * a / 8.0;
        }
        let e = v.exp_m1();
        (x * (v * x).exp() * e - (v * x).exp_m1() * v.exp()) / (e * e)
    }

    pub(super) fn quantile(v: f64, p: f64) -> f64 {
        if v.abs() < 1e-12 {
            return p;
        }
        (p * v.exp_m1()).ln_1p() / v
    }
}

/// `H` tabulated on a rectangular lattice.
#[derive(Debug)]
struct TableKernel {
    types: Vec<f64>,
    values: Vec<f64>,
    cdf: Vec<f64>,
}

/// Position of a coordinate in a lattice axis.
#[derive(Debug, Clone, Copy)]
struct Locate {
    cell: usize,
    t: f64,
    /// Lattice line the coordinate sits on (within snapping tolerance).
    line: Option<usize>,
}

const SNAP: f64 = 1e-9;

fn locate(axis: &[f64], x: f64) -> Locate {
    let n = axis.len();
    let cell = axis.partition_point(|&a| a <= x).saturating_sub(1).min(n - 2);
    let width = axis[cell + 1] - axis[cell];
    let t = ((x - axis[cell]) / width).clamp(0.0, 1.0);
    if t <= SNAP {
        Locate { cell, t: 0.0, line: Some(cell) }
    } else if t >= 1.0 - SNAP {
        Locate {
            cell,
            t: 1.0,
            line: Some(cell + 1),
        }
    } else {
        Locate { cell, t, line: None }
    }
}

/// Cells whose slope is averaged at a coordinate: one inside a cell, the two
/// neighbours on an interior lattice line, the single adjacent one at an edge.
fn slope_cells(axis: &[f64], loc: Locate) -> Vec<(usize, f64)> {
    match loc.line {
        None => vec![(loc.cell, loc.t)],
        Some(k) => {
            let mut cells = Vec::with_capacity(2);
            if k > 0 {
                cells.push((k - 1, 1.0));
            }
            if k + 1 < axis.len() {
                cells.push((k, 0.0));
            }
            cells
        }
    }
}

impl TableKernel {
    fn new(types: Vec<f64>, values: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        let (n, m) = (types.len(), values.len());
        let bad = |msg: String| Err(Error::InvalidParameter(format!("table kernel: {msg}")));
        if n < 2 || m < 2 {
            return bad("needs at least 2 type nodes and 2 value nodes".into());
        }
        if cdf.len() != n * m {
            return bad(format!("expected {} cdf entries, got {}", n * m, cdf.len()));
        }
        if types.iter().chain(&values).chain(&cdf).any(|x| !x.is_finite()) {
            return bad("entries must be finite".into());
        }
        for (name, axis) in [("type", &types), ("value", &values)] {
            if let Some(i) = (1..axis.len()).find(|&i| axis[i] <= axis[i - 1]) {
                return bad(format!("{name} nodes must be strictly increasing (index {i})"));
            }
        }
        for i in 0..n {
            let row = &cdf[i * m..(i + 1) * m];
            if let Some(j) = (1..m).find(|&j| row[j] <= row[j - 1]) {
                return bad(format!("row {i} must be strictly increasing in V (index {j})"));
            }
            if row[0] < 0.0 || row[0] > 1e-6 || row[m - 1] > 1.0 || row[m - 1] < 1.0 - 1e-6 {
                return bad(format!("row {i} must run from ~0 to ~1 across the value support"));
            }
        }
        Ok(Self { types, values, cdf })
    }

    fn support(&self) -> Interval {
        Interval {
            lower: self.values[0],
            upper: *self.values.last().unwrap(),
        }
    }

    fn type_range(&self) -> Interval {
        Interval {
            lower: self.types[0],
            upper: *self.types.last().unwrap(),
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.cdf[i * self.values.len() + j]
    }

    fn cdf(&self, v: f64, x: f64) -> f64 {
        let s = self.support();
        if x <= s.lower {
            return 0.0;
        }
        if x >= s.upper {
            return 1.0;
        }
        let lv = locate(&self.types, v);
        let lx = locate(&self.values, x);
        let (i, j, a, b) = (lv.cell, lx.cell, lv.t, lx.t);
        (1.0 - a) * (1.0 - b) * self.at(i, j)
            + (1.0 - a) * b * self.at(i, j + 1)
            + a * (1.0 - b) * self.at(i + 1, j)
            + a * b * self.at(i + 1, j + 1)
    }

    fn density(&self, v: f64, x: f64) -> f64 {
        if !self.support().contains_open(x) {
            return 0.0;
        }
        let lv = locate(&self.types, v);
        let (i, a) = (lv.cell, lv.t);
        let cells = slope_cells(&self.values, locate(&self.values, x));
        let total: f64 = cells
            .iter()
            .map(|&(j, _)| {
                let dx = self.values[j + 1] - self.values[j];
                ((1.0 - a) * (self.at(i, j + 1) - self.at(i, j))
                    + a * (self.at(i + 1, j + 1) - self.at(i + 1, j)))
                    / dx
            })
            .sum();
        total / cells.len() as f64
    }

    fn type_derivative(&self, v: f64, x: f64) -> f64 {
        if !self.support().contains_open(x) {
            return 0.0;
        }
        let lx = locate(&self.values, x);
        let (j, b) = (lx.cell, lx.t);
        let cells = slope_cells(&self.types, locate(&self.types, v));
        let total: f64 = cells
            .iter()
            .map(|&(i, _)| {
                let dv = self.types[i + 1] - self.types[i];
                ((1.0 - b) * (self.at(i + 1, j) - self.at(i, j))
                    + b * (self.at(i + 1, j + 1) - self.at(i, j + 1)))
                    / dv
            })
            .sum();
        total / cells.len() as f64
    }

    fn quantile(&self, v: f64, p: f64) -> f64 {
        let lv = locate(&self.types, v);
        let (i, a) = (lv.cell, lv.t);
        let m = self.values.len();
        let row = |j: usize| (1.0 - a) * self.at(i, j) + a * self.at(i + 1, j);
        if p <= row(0) {
            return self.values[0];
        }
        if p >= row(m - 1) {
            return self.values[m - 1];
        }
        let (mut lo, mut hi) = (0, m - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if row(mid) <= p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (r0, r1) = (row(lo), row(hi));
        self.values[lo] + (p - r0) / (r1 - r0) * (self.values[hi] - self.values[lo])
    }
}
