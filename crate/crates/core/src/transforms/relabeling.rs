use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{conditional_mean, conditional_mean_derivative, Environment, GridSpec, Settings};
use crate::numerics::{integrate_with, CompensatedSum, Interval, NumericsError, QuadratureOptions};

/// Nodes of the dense lattice behind integral-defined maps and inverses.
pub const DENSE_NODES: usize = 2049;
/// Target for `phi(phi^{-1}(w)) = w`.
pub const INVERSE_TOL: f64 = 1e-10;
const CELL_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelabelingKind {
    /// `phi' = (1 - F) / f`.
    InverseHazardIntegral,
    /// `phi' = f / (1 - F)`, so `phi = w_lo - ln(1 - F)`.
    IntegratedHazard,
    /// `phi' = hazard / running max of the hazard`.
    RunningmaxHazard,
    /// `phi = E[V | v]`.
    Mean,
    /// `phi = a v + b`.
    Affine,
}

impl RelabelingKind {
    pub const ALL: [RelabelingKind; 5] = [
        RelabelingKind::InverseHazardIntegral,
        RelabelingKind::IntegratedHazard,
        RelabelingKind::RunningmaxHazard,
        RelabelingKind::Mean,
        RelabelingKind::Affine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelabelingKind::InverseHazardIntegral => "inverse_hazard_integral",
            RelabelingKind::IntegratedHazard => "integrated_hazard",
            RelabelingKind::RunningmaxHazard => "runningmax_hazard",
            RelabelingKind::Mean => "mean",
            RelabelingKind::Affine => "affine",
        }
    }
}

impl fmt::Display for RelabelingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelabelingKind {
    type Err = Error;

    /// Accepts `-` or `_` as separators.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_").to_ascii_lowercase();
        RelabelingKind::ALL
            .into_iter()
            .find(|k| k.name() == norm || (norm == "runningmax" && *k == RelabelingKind::RunningmaxHazard))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown relabeling kind `{s}` (expected inverse-hazard-integral, integrated-hazard, \
                     runningmax-hazard, mean or affine)"
                ))
            })
    }
}

/// A strictly increasing map `phi` of the signal space with derivative and
/// inverse, bound to the environment it relabels.
#[derive(Clone)]
pub struct Relabeling {
    kind: RelabelingKind,
    params: Vec<f64>,
    base: Arc<dyn Environment>,
    settings: Settings,
    domain: Interval,
    codomain: Interval,
    map: Map,
}

impl fmt::Debug for Relabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Relabeling")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("domain", &self.domain)
            .field("codomain", &self.codomain)
            .finish()
    }
}

#[derive(Clone)]
enum Map {
    Affine { slope: f64, intercept: f64 },
    /// `phi(v) = nodes_phi[k] + int_{nodes[k]}^v phi'`.
    Integral { nodes: Arc<[f64]>, phi: Arc<[f64]>, running_min: Option<Arc<[f64]>> },
    /// `phi = lower - ln(1 - F)`; `phi` at the dense nodes kept for bracketing.
    LogSurvival { lower: f64, nodes: Arc<[f64]>, phi: Arc<[f64]> },
    /// `phi = mu`; `mu` at the dense nodes kept for bracketing.
    Mean { nodes: Arc<[f64]>, phi: Arc<[f64]> },
}

fn dense_nodes(domain: Interval) -> Vec<f64> {
    let n = DENSE_NODES - 1;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|k| domain.lower + domain.width() * k as f64 / n as f64)
        .collect();
    nodes[n] = domain.upper;
    nodes
}

fn cell_options() -> QuadratureOptions {
    QuadratureOptions::with_rel_tol(CELL_REL_TOL)
}

/// Inverse hazard `(1 - F)/f`, infinite where `f = 0 < 1 - F` and zero at the top.
fn inverse_hazard(base: &dyn Environment, v: f64) -> Result<f64> {
    let p = base.signal_at(v)?;
    Ok(if p.survival <= 0.0 {
        0.0
    } else if p.density <= 0.0 {
        f64::INFINITY
    } else {
        p.survival / p.density
    })
}

pub fn make_relabeling(
    base: Arc<dyn Environment>,
    kind: RelabelingKind,
    params: &[f64],
    settings: &Settings,
) -> Result<Relabeling> {
    settings.validate()?;
    let domain = base.signal_support();
    if !domain.is_bounded() {
        return Err(Error::Construction(format!("signal support {domain} must be bounded")));
    }
    let lower_param = |default: f64| -> Result<f64> {
        match params {
            [] => Ok(default),
            [w] if w.is_finite() => Ok(*w),
            _ => Err(Error::InvalidParameter(format!("{kind} takes one finite parameter (w_lo), got {params:?}"))),
        }
    };
    let (map, params) = match kind {
        RelabelingKind::Affine => {
            let (slope, intercept) = match params {
                [] => (1.0, 0.0),
                [a, b] => (*a, *b),
                _ => return Err(Error::InvalidParameter(format!("affine takes [slope, intercept], got {params:?}"))),
            };
            if !(slope > 0.0 && slope.is_finite() && intercept.is_finite()) {
                return Err(Error::InvalidParameter(format!("affine slope must be positive, got {slope}")));
            }
            (Map::Affine { slope, intercept }, vec![slope, intercept])
        }
        RelabelingKind::IntegratedHazard => {
            let lower = lower_param(0.0)?;
            let nodes = dense_nodes(domain);
            let phi = nodes
                .iter()
                .map(|&v| Ok(lower - base.signal_at(v)?.survival.ln()))
                .collect::<Result<Vec<f64>>>()?;
            (
                Map::LogSurvival {
                    lower,
                    nodes: nodes.into(),
                    phi: phi.into(),
                },
                vec![lower],
            )
        }
        RelabelingKind::InverseHazardIntegral => {
            let lower = lower_param(0.0)?;
            let nodes = dense_nodes(domain);
            let phi = cumulate(&nodes, lower, |v| inverse_hazard(base.as_ref(), v).unwrap_or(f64::NAN), "inverse hazard")?;
            (
                Map::Integral {
                    nodes: nodes.into(),
                    phi: phi.into(),
                    running_min: None,
                },
                vec![lower],
            )
        }
        RelabelingKind::RunningmaxHazard => {
            let lower = lower_param(0.0)?;
            let nodes = dense_nodes(domain);
            let spacing = nodes[1] - nodes[0];
            let n = nodes.len();
            let samples = nodes
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let at = if k == 0 {
                        v + 1e-6 * spacing
                    } else if k == n - 1 {
                        v - 1e-6 * spacing
                    } else {
                        v
                    };
                    inverse_hazard(base.as_ref(), at)
                })
                .collect::<Result<Vec<f64>>>()?;
            let running: Vec<f64> = samples
                .iter()
                .scan(f64::INFINITY, |m, &r| {
                    *m = m.min(r);
                    Some(*m)
                })
                .collect();
            if !running.iter().all(|m| m.is_finite()) {
                return Err(Error::Construction("inverse hazard is infinite across the whole support".into()));
            }
            let running: Arc<[f64]> = running.into();
            let nodes: Arc<[f64]> = nodes.into();
            let derivative = {
                let (nodes, running) = (nodes.clone(), running.clone());
                let base = base.clone();
                move |v: f64| runningmax_derivative(base.as_ref(), &nodes, &running, v).unwrap_or(f64::NAN)
            };
            let phi = cumulate(&nodes, lower, derivative, "running-max hazard ratio")?;
            (
                Map::Integral {
                    nodes,
                    phi: phi.into(),
                    running_min: Some(running),
                },
                vec![lower],
            )
        }
        RelabelingKind::Mean => {
            if !params.is_empty() {
                return Err(Error::InvalidParameter("mean relabeling takes no parameters".into()));
            }
            let nodes = dense_nodes(domain);
            let phi = nodes
                .par_iter()
                .map(|&v| conditional_mean(base.as_ref(), v, settings))
                .collect::<Result<Vec<f64>>>()?;
            if let Some(k) = (1..phi.len()).find(|&k| !(phi[k] > phi[k - 1])) {
                return Err(Error::Construction(format!(
                    "conditional mean is not strictly increasing between v = {} and v = {}",
                    nodes[k - 1],
                    nodes[k]
                )));
            }
            (
                Map::Mean {
                    nodes: nodes.into(),
                    phi: phi.into(),
                },
                Vec::new(),
            )
        }
    };
    let mut r = Relabeling {
        kind,
        params,
        base,
        settings: *settings,
        domain,
        codomain: domain,
        map,
    };
    let lo = r.phi(domain.lower)?;
    let hi = r.phi(domain.upper)?;
    r.codomain = Interval::new(lo, hi).map_err(|_| Error::Construction(format!("degenerate codomain [{lo}, {hi}]")))?;
    Ok(r)
}

/// `phi` at every node by cell-wise quadrature of `phi'`, summed with compensation.
fn cumulate<D>(nodes: &[f64], lower: f64, derivative: D, what: &str) -> Result<Vec<f64>>
where
    D: Fn(f64) -> f64 + Sync,
{
    let cells = (0..nodes.len() - 1)
        .into_par_iter()
        .map(|k| {
            integrate_with(&derivative, Interval::new(nodes[k], nodes[k + 1])?, &cell_options())
                .map(|q| q.value)
                .map_err(|e| match e {
                    NumericsError::NonConvergent { lower: a, upper: b, .. } => {
                        let endpoint = if (a - nodes[0]).abs() <= (nodes[nodes.len() - 1] - b).abs() {
                            nodes[0]
                        } else {
                            nodes[nodes.len() - 1]
                        };
                        Error::Integrability {
                            what: what.to_string(),
                            endpoint,
                        }
                    }
                    NumericsError::NonFinite { x } => Error::Integrability {
                        what: what.to_string(),
                        endpoint: x,
                    },
                    other => other.into(),
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut sum = CompensatedSum::default();
    sum.add(lower);
    let mut phi = Vec::with_capacity(nodes.len());
    phi.push(lower);
    for c in cells {
        sum.add(c);
        phi.push(sum.value());
    }
    Ok(phi)
}

fn locate(nodes: &[f64], v: f64) -> usize {
    nodes.partition_point(|&x| x <= v).saturating_sub(1).min(nodes.len() - 2)
}

/// `m(v) / r(v)`, with `m` the piecewise-linear running minimum of the inverse
/// hazard `r`, floored by `r` itself so that `phi' <= 1`.
fn runningmax_derivative(base: &dyn Environment, nodes: &[f64], running: &[f64], v: f64) -> Result<f64> {
    let r = inverse_hazard(base, v)?;
    let k = locate(nodes, v);
    let t = ((v - nodes[k]) / (nodes[k + 1] - nodes[k])).clamp(0.0, 1.0);
    let interp = running[k] + t * (running[k + 1] - running[k]);
    Ok(if r == 0.0 {
        1.0
    } else if r.is_infinite() {
        0.0
    } else {
        interp.min(r) / r
    })
}

impl Relabeling {
    pub fn kind(&self) -> RelabelingKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn base(&self) -> &Arc<dyn Environment> {
        &self.base
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    /// `[v_lo, v_hi]`.
    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// `[w_lo, w_hi]`; `w_hi` is infinite for the integrated hazard.
    pub fn codomain(&self) -> Interval {
        self.codomain
    }

    fn check_domain(&self, v: f64) -> Result<()> {
        if self.domain.contains_closed(v) {
            Ok(())
        } else {
            Err(Error::OutOfSupport {
                what: "signal",
                x: v,
                support: self.domain,
            })
        }
    }

    pub fn phi(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        match &self.map {
            Map::Affine { slope, intercept } => Ok(slope * v + intercept),
            Map::LogSurvival { lower, .. } => Ok(lower - self.base.signal_at(v)?.survival.ln()),
            Map::Mean { .. } => conditional_mean(self.base.as_ref(), v, &self.settings),
            Map::Integral { nodes, phi, .. } => {
                let k = locate(nodes, v);
                let (a, b) = (nodes[k], nodes[k + 1]);
                let d = |u: f64| self.phi_prime(u).unwrap_or(f64::NAN);
                let opts = cell_options();
                if v == a {
                    return Ok(phi[k]);
                }
                if v == b {
                    return Ok(phi[k + 1]);
                }
                if v - a <= b - v {
                    Ok(phi[k] + integrate_with(d, Interval::new(a, v)?, &opts)?.value)
                } else {
                    Ok(phi[k + 1] - integrate_with(d, Interval::new(v, b)?, &opts)?.value)
                }
            }
        }
    }

    pub fn phi_prime(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        match &self.map {
            Map::Affine { slope, .. } => Ok(*slope),
            Map::LogSurvival { .. } => {
                let p = self.base.signal_at(v)?;
                Ok(if p.survival <= 0.0 { f64::INFINITY } else { p.density / p.survival })
            }
            Map::Mean { .. } => conditional_mean_derivative(self.base.as_ref(), v, &self.settings),
            Map::Integral { nodes, running_min, .. } => match running_min {
                None => inverse_hazard(self.base.as_ref(), v),
                Some(m) => runningmax_derivative(self.base.as_ref(), nodes, m, v),
            },
        }
    }

    /// `phi^{-1}(w)`: bracketed on the dense lattice, then Newton steps
    /// safeguarded by bisection.
    pub fn inverse(&self, w: f64) -> Result<f64> {
        if !self.codomain.contains_closed(w) {
            return Err(Error::OutOfSupport {
                what: "relabeled signal",
                x: w,
                support: self.codomain,
            });
        }
        if w == self.codomain.lower {
            return Ok(self.domain.lower);
        }
        if w == self.codomain.upper {
            return Ok(self.domain.upper);
        }
        let (nodes, phi) = match &self.map {
            Map::Affine { slope, intercept } => {
                return Ok(((w - intercept) / slope).clamp(self.domain.lower, self.domain.upper));
            }
            Map::Integral { nodes, phi, .. } | Map::LogSurvival { nodes, phi, .. } | Map::Mean { nodes, phi } => {
                (nodes, phi)
            }
        };
        let k = phi.partition_point(|&p| p <= w).saturating_sub(1).min(nodes.len() - 2);
        if phi[k] == w {
            return Ok(nodes[k]);
        }
        let (mut a, mut b) = (nodes[k], nodes[k + 1]);
        let (pa, pb) = (phi[k], phi[k + 1]);
        let mut v = if pb.is_finite() {
            a + (b - a) * ((w - pa) / (pb - pa)).clamp(0.0, 1.0)
        } else {
            0.5 * (a + b)
        };
        for _ in 0..200 {
            let g = self.phi(v)? - w;
            if g.abs() <= 2.0 * f64::EPSILON * w.abs() || g == 0.0 {
                return Ok(v);
            }
            if g < 0.0 {
                a = v;
            } else {
                b = v;
            }
            let d = self.phi_prime(v)?;
            let step = g / d;
            let newton = v - step;
            if d > 0.0 && d.is_finite() && newton > a && newton < b {
                if step.abs() <= 16.0 * f64::EPSILON * v.abs().max(f64::MIN_POSITIVE) {
                    return Ok(newton);
                }
                v = newton;
            } else {
                v = 0.5 * (a + b);
            }
            if b - a <= 4.0 * f64::EPSILON * v.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        let residual = self.phi(v)? - w;
        if residual.abs() > INVERSE_TOL * w.abs().max(1.0) {
            return Err(Error::Construction(format!(
                "inverse of {} did not converge at w = {w} (residual {residual:e})",
                self.kind
            )));
        }
        Ok(v)
    }

    /// `(v, phi(v), phi'(v))` on the interior signal lattice of `grid`.
    pub fn lattice(&self, grid: &GridSpec) -> Result<Vec<[f64; 3]>> {
        self.base
            .signal_lattice(grid)?
            .into_iter()
            .map(|v| Ok([v, self.phi(v)?, self.phi_prime(v)?]))
            .collect()
    }

    pub fn label(&self) -> String {
        if self.params.is_empty() {
            self.kind.name().to_string()
        } else {
            format!("{}{:?}", self.kind.name(), self.params)
        }
    }
}
