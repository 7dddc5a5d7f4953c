//! Hazard rates, the `gamma` ratio, the virtual value `psi`, and lattice
//! checks of the regularity conditions A0, A1, A2, strict dominance and
//! monotone `psi`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    value_lattice, Environment, GridSpec, ModelDescription, Settings, ToleranceConfig, Truncation,
};
use crate::numerics::{monotone_violations, Direction};

/// `1 - F` at or below this is treated as the top of the signal support.
pub const SURVIVAL_FLOOR: f64 = 1e-15;
/// Kernel densities below this make `gamma` meaningless.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Largest share of failed grid evaluations tolerated before a check aborts.
pub const MAX_FAILED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hazard {
    /// `f / (1 - F)`.
    pub hazard: f64,
    /// `(1 - F) / f`.
    pub inverse_hazard: f64,
}

pub fn hazard(env: &(impl Environment + ?Sized), v: f64) -> Result<Hazard> {
    let p = env.signal_at(v)?;
    if p.survival <= SURVIVAL_FLOOR {
        return Err(Error::NearEndpoint {
            v,
            survival: p.survival,
        });
    }
    if !(p.density > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "signal density vanishes at v = {v}; the hazard is undefined"
        )));
    }
    Ok(Hazard {
        hazard: p.density / p.survival,
        inverse_hazard: p.survival / p.density,
    })
}

/// `gamma(v, V) = -(dH_v(V)/dv) / h_v(V)`.
pub fn gamma(env: &(impl Environment + ?Sized), v: f64, x: f64) -> Result<f64> {
    let p = env.conditional(v)?.point(x)?;
    if !(p.density >= DENSITY_FLOOR) {
        return Err(Error::DensityUnderflow { v, x });
    }
    Ok(-p.type_derivative / p.density)
}

/// `psi(v, V) = V - gamma(v, V) (1 - F(v)) / f(v)`.
pub fn virtual_value(env: &(impl Environment + ?Sized), v: f64, x: f64) -> Result<f64> {
    let h = hazard(env, v)?;
    Ok(x - h.inverse_hazard * gamma(env, v, x)?)
}

/// `E[gamma | v]`, by quadrature of `gamma h` over the value support.
pub fn conditional_gamma_mean(env: &(impl Environment + ?Sized), v: f64, settings: &Settings) -> Result<f64> {
    let c = env.conditional(v)?.with_step(settings.tolerances.derivative_step);
    let q = c.integrate(
        |x| {
            let h = c.density(x);
            if h < DENSITY_FLOOR {
                return 0.0;
            }
            let g = -c.type_derivative(x).unwrap_or(f64::NAN) / h;
            g * h
        },
        settings,
    )?;
    Ok(q.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Assumption {
    /// Inverse hazard weakly decreasing in `v` (hazard weakly increasing).
    A0,
    /// `(dH/dv)/h` weakly increasing in `V`.
    A1,
    /// `(dH/dv)/h` weakly increasing in `v`.
    A2,
    /// `dH/dv < 0` at every interior point.
    #[serde(rename = "FOSD")]
    Fosd,
    /// `psi` weakly increasing in `v` and in `V`.
    #[serde(rename = "PSI")]
    Psi,
}

impl Assumption {
    pub const ALL: [Assumption; 5] = [
        Assumption::A0,
        Assumption::A1,
        Assumption::A2,
        Assumption::Fosd,
        Assumption::Psi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Assumption::A0 => "A0",
            Assumption::A1 => "A1",
            Assumption::A2 => "A2",
            Assumption::Fosd => "FOSD",
            Assumption::Psi => "PSI",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Assumption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Assumption::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown assumption `{s}`")))
    }
}

/// Scalar fields available on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    #[serde(rename = "H")]
    Cdf,
    #[serde(rename = "h")]
    Density,
    #[serde(rename = "dHdv")]
    TypeDerivative,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "psi")]
    Psi,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [
        Quantity::Cdf,
        Quantity::Density,
        Quantity::TypeDerivative,
        Quantity::Gamma,
        Quantity::Psi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Cdf => "H",
            Quantity::Density => "h",
            Quantity::TypeDerivative => "dHdv",
            Quantity::Gamma => "gamma",
            Quantity::Psi => "psi",
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown quantity `{s}` (expected H, h, dHdv, gamma or psi)")))
    }
}

/// Kernel primitives and `gamma` at one lattice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub cdf: f64,
    pub density: f64,
    pub type_derivative: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalFailure {
    pub v: f64,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub message: String,
}

/// Every primitive on the `signals x values` lattice, evaluated once and
/// shared by all checks.
#[derive(Debug, Clone)]
pub struct GridEvaluation {
    pub signals: Vec<f64>,
    pub values: Vec<f64>,
    pub truncation: Truncation,
    pub inverse_hazard: Vec<Option<f64>>,
    cells: Vec<Option<Cell>>,
    pub failures: Vec<EvalFailure>,
}

impl GridEvaluation {
    pub fn cell(&self, i: usize, j: usize) -> Option<Cell> {
        self.cells[i * self.values.len() + j]
    }

    pub fn get(&self, i: usize, j: usize, q: Quantity) -> Option<f64> {
        let c = self.cell(i, j)?;
        Some(match q {
            Quantity::Cdf => c.cdf,
            Quantity::Density => c.density,
            Quantity::TypeDerivative => c.type_derivative,
            Quantity::Gamma => c.gamma,
            Quantity::Psi => self.values[j] - self.inverse_hazard[i]? * c.gamma,
        })
    }

    /// Lattice points missing a kernel cell or a hazard value.
    pub fn excluded(&self) -> usize {
        let n = self.values.len();
        (0..self.signals.len())
            .map(|i| {
                if self.inverse_hazard[i].is_none() {
                    n
                } else {
                    (0..n).filter(|&j| self.cell(i, j).is_none()).count()
                }
            })
            .sum()
    }

    pub fn total(&self) -> usize {
        self.signals.len() * self.values.len()
    }

    /// `(v, V, value)` triples, row-major in `v`; excluded points carry NaN.
    pub fn triples(&self, q: Quantity) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.total());
        for (i, &v) in self.signals.iter().enumerate() {
            for (j, &x) in self.values.iter().enumerate() {
                out.push((v, x, self.get(i, j, q).unwrap_or(f64::NAN)));
            }
        }
        out
    }
}

/// Evaluates the lattice in parallel (rows collected in order). Aborts when
/// more than 1% of the points fail, naming the bounding box of the failures.
pub fn evaluate_grid(env: &(impl Environment + ?Sized), settings: &Settings) -> Result<GridEvaluation> {
    settings.validate()?;
    let signals = env.signal_lattice(&settings.grid)?;
    let lattice = value_lattice(env, &settings.grid)?;
    let values = lattice.points;
    let step = settings.tolerances.derivative_step;

    let rows: Vec<(Option<f64>, Vec<Option<Cell>>, Vec<EvalFailure>)> = signals
        .par_iter()
        .map(|&v| {
            let mut failures = Vec::new();
            let inv = match hazard(env, v) {
                Ok(h) => Some(h.inverse_hazard),
                Err(e) => {
                    failures.push(EvalFailure {
                        v,
                        value: None,
                        message: e.to_string(),
                    });
                    None
                }
            };
            let cond = match env.conditional(v) {
                Ok(c) => c.with_step(step),
                Err(e) => {
                    failures.push(EvalFailure {
                        v,
                        value: None,
                        message: e.to_string(),
                    });
                    return (inv, vec![None; values.len()], failures);
                }
            };
            let cells = values
                .iter()
                .map(|&x| {
                    let cell = cond.point(x).and_then(|p| {
                        if !(p.density >= DENSITY_FLOOR) {
                            return Err(Error::DensityUnderflow { v, x });
                        }
                        let g = -p.type_derivative / p.density;
                        if !g.is_finite() {
                            return Err(Error::Numerics(crate::numerics::NumericsError::NonFinite { x }));
                        }
                        Ok(Cell {
                            cdf: p.cdf,
                            density: p.density,
                            type_derivative: p.type_derivative,
                            gamma: g,
                        })
                    });
                    match cell {
                        Ok(c) => Some(c),
                        Err(e) => {
                            failures.push(EvalFailure {
                                v,
                                value: Some(x),
                                message: e.to_string(),
                            });
                            None
                        }
                    }
                })
                .collect();
            (inv, cells, failures)
        })
        .collect();

    let mut inverse_hazard = Vec::with_capacity(signals.len());
    let mut cells = Vec::with_capacity(signals.len() * values.len());
    let mut failures = Vec::new();
    for (inv, row, fails) in rows {
        inverse_hazard.push(inv);
        cells.extend(row);
        failures.extend(fails);
    }
    let eval = GridEvaluation {
        signals,
        values,
        truncation: lattice.truncation,
        inverse_hazard,
        cells,
        failures,
    };
    let failed = eval.excluded();
    if failed as f64 > MAX_FAILED_FRACTION * eval.total() as f64 {
        return Err(Error::Aborted {
            failed,
            total: eval.total(),
            region: failure_region(&eval),
        });
    }
    Ok(eval)
}

fn failure_region(eval: &GridEvaluation) -> String {
    let (mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for f in &eval.failures {
        vlo = vlo.min(f.v);
        vhi = vhi.max(f.v);
        let (a, b) = match f.value {
            Some(x) => (x, x),
            None => (eval.values[0], *eval.values.last().unwrap()),
        };
        xlo = xlo.min(a);
        xhi = xhi.max(b);
    }
    let first = eval.failures.first().map(|f| f.message.as_str()).unwrap_or("");
    format!("v in [{vlo}, {vhi}], V in [{xlo}, {xhi}]; first failure: {first}")
}

/// A lattice point in a witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub v: f64,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    pub valuation: Option<f64>,
    pub value: f64,
}

/// One violation: an adjacent pair moving the wrong way, or a single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub from: GridPoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<GridPoint>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub assumption: Assumption,
    pub pass: bool,
    /// Sorted by decreasing magnitude.
    pub witnesses: Vec<Witness>,
    pub grid: GridSpec,
    pub tolerances: ToleranceConfig,
    pub truncation: Truncation,
    /// Largest adjacent move against the direction that the slack absorbed.
    pub slack_consumed: f64,
    pub points_evaluated: usize,
    pub points_excluded: usize,
    /// A pass only certifies the lattice, not the continuum.
    pub grid_relative: bool,
}

struct Scan {
    witnesses: Vec<Witness>,
    slack_consumed: f64,
}

impl Scan {
    fn new() -> Self {
        Self {
            witnesses: Vec::new(),
            slack_consumed: 0.0,
        }
    }

    /// Scans one line of the lattice; `coord` maps a line index to a point.
    fn line(
        &mut self,
        points: &[(f64, f64, Option<f64>)],
        along_v: bool,
        direction: Direction,
        slack: f64,
    ) {
        let kept: Vec<&(f64, f64, Option<f64>)> = points.iter().filter(|p| p.2.is_some()).collect();
        if kept.len() < 2 {
            return;
        }
        let xs: Vec<f64> = kept.iter().map(|p| if along_v { p.0 } else { p.1 }).collect();
        let ys: Vec<f64> = kept.iter().map(|p| p.2.unwrap()).collect();
        let Ok(all) = monotone_violations(&xs, &ys, direction, 0.0) else {
            return;
        };
        for pv in all {
            let at = |k: usize| {
                let p = kept[k];
                GridPoint {
                    v: p.0,
                    valuation: (!p.1.is_nan()).then_some(p.1),
                    value: p.2.unwrap(),
                }
            };
            if pv.magnitude > slack {
                self.witnesses.push(Witness {
                    from: at(pv.index),
                    to: Some(at(pv.index + 1)),
                    magnitude: pv.magnitude,
                });
            } else {
                self.slack_consumed = self.slack_consumed.max(pv.magnitude);
            }
        }
    }
}

fn witness_order(a: &Witness, b: &Witness) -> Ordering {
    b.magnitude
        .total_cmp(&a.magnitude)
        .then(a.from.v.total_cmp(&b.from.v))
        .then(a.from.valuation.unwrap_or(f64::NAN).total_cmp(&b.from.valuation.unwrap_or(f64::NAN)))
        .then_with(|| {
            let key = |w: &Witness| w.to.map(|p| (p.v, p.valuation.unwrap_or(f64::NAN)));
            match (key(a), key(b)) {
                (Some(x), Some(y)) => x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)),
                (x, y) => x.is_some().cmp(&y.is_some()),
            }
        })
}

/// Runs one check on an already evaluated lattice.
pub fn check_on_grid(eval: &GridEvaluation, which: Assumption, settings: &Settings) -> CheckReport {
    let slack = settings.tolerances.monotonicity_slack;
    let (nv, nx) = (eval.signals.len(), eval.values.len());
    let mut scan = Scan::new();
    let row = |i: usize, q: Quantity| -> Vec<(f64, f64, Option<f64>)> {
        (0..nx).map(|j| (eval.signals[i], eval.values[j], eval.get(i, j, q))).collect()
    };
    let col = |j: usize, q: Quantity| -> Vec<(f64, f64, Option<f64>)> {
        (0..nv).map(|i| (eval.signals[i], eval.values[j], eval.get(i, j, q))).collect()
    };
    // A1/A2 scan -gamma = (dH/dv)/h increasing; equivalently gamma decreasing.
    match which {
        Assumption::A0 => {
            let pts: Vec<_> = (0..nv).map(|i| (eval.signals[i], f64::NAN, eval.inverse_hazard[i])).collect();
            scan.line(&pts, true, Direction::Decreasing, slack);
        }
        Assumption::A1 => (0..nv).for_each(|i| scan.line(&row(i, Quantity::Gamma), false, Direction::Decreasing, slack)),
        Assumption::A2 => (0..nx).for_each(|j| scan.line(&col(j, Quantity::Gamma), true, Direction::Decreasing, slack)),
        Assumption::Psi => {
            (0..nv).for_each(|i| scan.line(&row(i, Quantity::Psi), false, Direction::Increasing, slack));
            (0..nx).for_each(|j| scan.line(&col(j, Quantity::Psi), true, Direction::Increasing, slack));
        }
        Assumption::Fosd => {
            for i in 0..nv {
                for j in 0..nx {
                    if let Some(c) = eval.cell(i, j) {
                        if c.type_derivative >= 0.0 {
                            scan.witnesses.push(Witness {
                                from: GridPoint {
                                    v: eval.signals[i],
                                    valuation: Some(eval.values[j]),
                                    value: c.type_derivative,
                                },
                                to: None,
                                magnitude: c.type_derivative,
                            });
                        }
                    }
                }
            }
        }
    }
    let mut witnesses = scan.witnesses;
    witnesses.sort_by(witness_order);
    let excluded = eval.excluded();
    CheckReport {
        assumption: which,
        pass: witnesses.is_empty(),
        witnesses,
        grid: settings.grid,
        tolerances: settings.tolerances,
        truncation: eval.truncation,
        slack_consumed: scan.slack_consumed,
        points_evaluated: eval.total() - excluded,
        points_excluded: excluded,
        grid_relative: true,
    }
}

pub fn check_assumption(env: &(impl Environment + ?Sized), which: Assumption, settings: &Settings) -> Result<CheckReport> {
    let eval = evaluate_grid(env, settings)?;
    Ok(check_on_grid(&eval, which, settings))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub model: ModelDescription,
    /// A0, A1 and A2 all pass.
    pub es_regular: bool,
    /// `psi` monotone in both coordinates.
    pub psi_regular: bool,
    pub checks: Vec<CheckReport>,
    pub hazard: Option<Range>,
    pub gamma: Option<Range>,
    pub settings: Settings,
    pub failures: Vec<EvalFailure>,
}

impl RegularityReport {
    pub fn check(&self, which: Assumption) -> &CheckReport {
        self.checks.iter().find(|c| c.assumption == which).expect("all checks present")
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<Assumption> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.assumption).collect()
    }
}

fn range(it: impl Iterator<Item = f64>) -> Option<Range> {
    it.fold(None, |acc, x| match acc {
        None => Some(Range { min: x, max: x }),
        Some(r) => Some(Range {
            min: r.min.min(x),
            max: r.max.max(x),
        }),
    })
}

pub fn regularity_report(env: &(impl Environment + ?Sized), settings: &Settings) -> Result<RegularityReport> {
    let eval = evaluate_grid(env, settings)?;
    Ok(report_from_grid(env.describe(), &eval, settings))
}

pub fn report_from_grid(model: ModelDescription, eval: &GridEvaluation, settings: &Settings) -> RegularityReport {
    let checks: Vec<CheckReport> = Assumption::ALL.iter().map(|&a| check_on_grid(eval, a, settings)).collect();
    let pass = |a: Assumption| checks.iter().any(|c| c.assumption == a && c.pass);
    let es_regular = pass(Assumption::A0) && pass(Assumption::A1) && pass(Assumption::A2);
    let psi_regular = pass(Assumption::Psi);
    let nx = eval.values.len();
    RegularityReport {
        model,
        es_regular,
        psi_regular,
        hazard: range(eval.inverse_hazard.iter().flatten().map(|r| 1.0 / r)),
        gamma: range((0..eval.signals.len()).flat_map(|i| (0..nx).filter_map(move |j| eval.cell(i, j).map(|c| c.gamma)))),
        checks,
        settings: *settings,
        failures: eval.failures.clone(),
    }
}
