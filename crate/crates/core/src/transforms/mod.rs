//! Relabelings `w = phi(v)` of the signal space and the environments they
//! induce: `F~(w) = F(v)`, `f~(w) = f(v)/phi'(v)`, `H~_w = H_v` and
//! `dH~/dw = (dH/dv)/phi'(v)` with `v = phi^{-1}(w)`.

mod relabeling;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use relabeling::{make_relabeling, Relabeling, RelabelingKind, DENSE_NODES, INVERSE_TOL};

use crate::error::{Error, Result};
use crate::model::{
    write_model_file, Conditional, Environment, GridSpec, LoadedModel, ModelDescription, Settings, SignalPoint,
    TransformRecord, ValuationKernel,
};
use crate::numerics::{differentiate_within, Interval, StepPolicy};
use crate::regularity::{gamma, hazard, virtual_value};

/// Number of interior points probed by the construction self-check.
pub const SELF_CHECK_POINTS: usize = 32;
/// Largest relative residual the self-check accepts.
pub const SELF_CHECK_TOL: f64 = 1e-6;
const SELF_CHECK_SEED: u64 = 0x5eed_5c4e_e11;

/// An environment seen through a relabeling of its signal space.
#[derive(Debug, Clone)]
pub struct TransformedModel {
    relabeling: Arc<Relabeling>,
}

/// Builds the relabeled environment and verifies, at 32 fixed pseudo-random
/// interior points, that finite differences of `F~` and `H~` in `w` match
/// `f~` and `dH~/dw`, and that `phi(phi^{-1}(w)) = w`.
pub fn apply_relabeling(relabeling: Relabeling) -> Result<TransformedModel> {
    let tm = TransformedModel {
        relabeling: Arc::new(relabeling),
    };
    tm.self_check()?;
    Ok(tm)
}

impl TransformedModel {
    pub fn relabeling(&self) -> &Relabeling {
        &self.relabeling
    }

    pub fn base(&self) -> &Arc<dyn Environment> {
        self.relabeling.base()
    }

    fn self_check(&self) -> Result<()> {
        let r = &*self.relabeling;
        let base = r.base();
        let dom = r.domain();
        let settings = r.settings();
        let margin = settings.grid.endpoint_margin.max(1e-3) * dom.width();
        let mut rng = ChaCha8Rng::seed_from_u64(SELF_CHECK_SEED);
        let values = crate::model::value_lattice(base.as_ref(), &settings.grid)?.points;
        let codomain = r.codomain();
        for _ in 0..SELF_CHECK_POINTS {
            let v = rng.gen_range(dom.lower + margin..dom.upper - margin);
            let p: f64 = rng.gen_range(0.05..0.95);
            let w = r.phi(v)?;
            let back = r.inverse(w)?;
            let round = r.phi(back)?;
            if (round - w).abs() > INVERSE_TOL * w.abs().max(1.0) {
                return Err(Error::SelfCheck(format!("phi(phi^-1({w})) = {round}")));
            }
            let d = r.phi_prime(v)?;
            let step = StepPolicy {
                absolute: 1e-5 * dom.width() * d,
                relative: 0.0,
            };

            let f_tilde = self.signal_at(w)?.density;
            let fd = differentiate_within(|u| self.signal_at(u).map(|s| -s.survival).unwrap_or(f64::NAN), w, step, codomain)?;
            check_residual("f~ against dF~/dw", w, None, fd.value, f_tilde)?;

            let cond = base.conditional(v)?;
            let x = cond.quantile(p).filter(|q| q.is_finite()).unwrap_or_else(|| {
                let k = ((values.len() - 1) as f64 * (0.25 + 0.5 * p)).round() as usize;
                values[k]
            });
            let analytic = self.conditional(w)?.with_step(settings.tolerances.derivative_step).type_derivative(x)?;
            let fd = differentiate_within(
                |u| self.conditional(u).map(|c| c.cdf(x)).unwrap_or(f64::NAN),
                w,
                step,
                codomain,
            )?;
            check_residual("dH~/dw", w, Some(x), fd.value, analytic)?;
        }
        Ok(())
    }
}

fn check_residual(what: &str, w: f64, x: Option<f64>, numeric: f64, analytic: f64) -> Result<()> {
    let residual = (numeric - analytic).abs() / analytic.abs().max(1e-12);
    if residual > SELF_CHECK_TOL || !residual.is_finite() {
        let at = match x {
            Some(x) => format!("w = {w}, V = {x}"),
            None => format!("w = {w}"),
        };
        return Err(Error::SelfCheck(format!(
            "{what} at {at}: finite difference {numeric:e} vs identity {analytic:e} (relative residual {residual:e})"
        )));
    }
    Ok(())
}

impl Environment for TransformedModel {
    fn signal_support(&self) -> Interval {
        self.relabeling.codomain()
    }

    fn signal_at(&self, w: f64) -> Result<SignalPoint> {
        let r = &self.relabeling;
        let v = r.inverse(w)?;
        let p = r.base().signal_at(v)?;
        let d = r.phi_prime(v)?;
        Ok(SignalPoint {
            cdf: p.cdf,
            survival: p.survival,
            density: if p.density == 0.0 { 0.0 } else { p.density / d },
        })
    }

    fn conditional(&self, w: f64) -> Result<Conditional<'_>> {
        let r = &self.relabeling;
        let v = r.inverse(w)?;
        let d = r.phi_prime(v)?;
        Ok(r.base().conditional(v)?.relabeled(w, 1.0 / d))
    }

    fn kernel(&self) -> &ValuationKernel {
        self.relabeling.base().kernel()
    }

    /// The base lattice pushed through `phi`, so grids stay matched.
    fn signal_lattice(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let r = &self.relabeling;
        r.base().signal_lattice(grid)?.into_iter().map(|v| r.phi(v)).collect()
    }

    fn describe(&self) -> ModelDescription {
        let mut d = self.relabeling.base().describe();
        let label = self.relabeling.label();
        d.relabeling = Some(match d.relabeling {
            Some(inner) => format!("{label} . {inner}"),
            None => label,
        });
        d.signal_support = self.relabeling.codomain().to_string();
        d
    }
}

/// `(gamma~, psi~)` at relabeled signal `w`.
pub fn transformed_gamma_psi(tm: &TransformedModel, w: f64, x: f64) -> Result<(f64, f64)> {
    Ok((gamma(tm, w, x)?, virtual_value(tm, w, x)?))
}

/// `(w, f~/(1 - F~))` over the relabeled signal lattice.
pub fn transformed_hazard_profile(tm: &TransformedModel, grid: &GridSpec) -> Result<Vec<(f64, f64)>> {
    tm.signal_lattice(grid)?
        .into_iter()
        .map(|w| Ok((w, hazard(tm, w)?.hazard)))
        .collect()
}

/// Relative tolerance for the tabulated `phi` when a derived file is reloaded.
pub const ROUND_TRIP_TOL: f64 = 1e-8;

/// Renders the derived model file for a relabeled environment built on a
/// file-backed base model.
pub fn derived_model_file(loaded: &LoadedModel, tm: &TransformedModel) -> Result<String> {
    let r = tm.relabeling();
    let record = TransformRecord {
        kind: r.kind().name().to_string(),
        params: r.params().to_vec(),
        lattice: r.lattice(&loaded.settings.grid)?,
    };
    Ok(write_model_file(&loaded.model, &loaded.settings, Some(&record)))
}

/// The environment described by a loaded file: the base model, or the base
/// model under the recorded relabeling (rebuilt from kind and parameters and
/// checked against the tabulated lattice).
pub fn instantiate(loaded: &LoadedModel) -> Result<Arc<dyn Environment>> {
    let base: Arc<dyn Environment> = Arc::new(loaded.model.clone());
    let Some(record) = &loaded.transform else {
        return Ok(base);
    };
    let kind: RelabelingKind = record.kind.parse()?;
    let relabeling = make_relabeling(base, kind, &record.params, &loaded.settings)?;
    for &[v, w, d] in &record.lattice {
        let (w2, d2) = (relabeling.phi(v)?, relabeling.phi_prime(v)?);
        let close = |a: f64, b: f64| (a - b).abs() <= ROUND_TRIP_TOL * a.abs().max(b.abs()).max(1.0);
        if !close(w, w2) || !close(d, d2) {
            return Err(Error::Load(format!(
                "[transform] lattice row ({v}, {w}, {d}) disagrees with the rebuilt map ({w2}, {d2})"
            )));
        }
    }
    Ok(Arc::new(apply_relabeling(relabeling)?))
}

/// Convenience: build and apply in one step.
pub fn relabel(
    base: Arc<dyn Environment>,
    kind: RelabelingKind,
    params: &[f64],
    settings: &Settings,
) -> Result<TransformedModel> {
    apply_relabeling(make_relabeling(base, kind, params, settings)?)
}
