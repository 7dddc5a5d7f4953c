use serde::{Deserialize, Serialize};

use super::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// One adjacent pair that moves against the scan direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    /// Index of the left sample of the pair.
    pub index: usize,
    pub from: (f64, f64),
    pub to: (f64, f64),
    /// How far the pair moves against the direction (positive = violation).
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneVerdict {
    pub direction: Direction,
    pub pass: bool,
    /// `max(0, largest adjacent move against the direction)`.
    pub worst_violation: f64,
    /// Worst adjacent pair, present whenever `worst_violation > 0`.
    pub witness: Option<PairViolation>,
}

fn validate(xs: &[f64], ys: &[f64]) -> Result<(), NumericsError> {
    if xs.len() != ys.len() {
        return Err(NumericsError::LengthMismatch {
            abscissae: xs.len(),
            values: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(NumericsError::TooFewSamples(xs.len()));
    }
    for i in 1..xs.len() {
        if !(xs[i] > xs[i - 1]) {
            return Err(NumericsError::Unordered { index: i });
        }
    }
    if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
        return Err(NumericsError::NonFinite { x: xs[i] });
    }
    Ok(())
}

fn pair(xs: &[f64], ys: &[f64], i: usize, direction: Direction) -> PairViolation {
    let magnitude = match direction {
        Direction::Increasing => ys[i] - ys[i + 1],
        Direction::Decreasing => ys[i + 1] - ys[i],
    };
    PairViolation {
        index: i,
        from: (xs[i], ys[i]),
        to: (xs[i + 1], ys[i + 1]),
        magnitude,
    }
}

/// Checks weak monotonicity of `ys` over strictly increasing `xs`; a pair may
/// move against `direction` by at most `slack`.
pub fn monotone_scan(
    xs: &[f64],
    ys: &[f64],
    direction: Direction,
    slack: f64,
) -> Result<MonotoneVerdict, NumericsError> {
    validate(xs, ys)?;
    let mut witness: Option<PairViolation> = None;
    for i in 0..xs.len() - 1 {
        let p = pair(xs, ys, i, direction);
        if p.magnitude > 0.0 && witness.map_or(true, |w| p.magnitude > w.magnitude) {
            witness = Some(p);
        }
    }
    let worst_violation = witness.map_or(0.0, |w| w.magnitude);
    Ok(MonotoneVerdict {
        direction,
        pass: worst_violation <= slack,
        worst_violation,
        witness,
    })
}

/// Every adjacent pair whose move against `direction` exceeds `slack`, in
/// sample order.
pub fn monotone_violations(
    xs: &[f64],
    ys: &[f64],
    direction: Direction,
    slack: f64,
) -> Result<Vec<PairViolation>, NumericsError> {
    validate(xs, ys)?;
    Ok((0..xs.len() - 1)
        .map(|i| pair(xs, ys, i, direction))
        .filter(|p| p.magnitude > slack)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_are_weakly_increasing() {
        let v = monotone_scan(&[0.0, 1.0, 2.0], &[1.0, 1.0, 2.0], Direction::Increasing, 0.0).unwrap();
        assert!(v.pass);
        assert!(v.witness.is_none());
    }

    #[test]
    fn power_kernel_gamma_is_not_decreasing_at_small_values() {
        // gamma = -(V ln V)/v at v = 1 and V = 0.1, 0.3.
        let g = |x: f64| -x * x.ln();
        let ys = [g(0.1), g(0.3)];
        assert!((ys[0] - 0.23026).abs() < 1e-5 && (ys[1] - 0.36119).abs() < 1e-5);
        let v = monotone_scan(&[0.1, 0.3], &ys, Direction::Decreasing, 1e-8).unwrap();
        assert!(!v.pass);
        let w = v.witness.unwrap();
        assert_eq!((w.from.0, w.to.0), (0.1, 0.3));
    }

    #[test]
    fn slack_absorbs_noise() {
        let v = monotone_scan(&[0.0, 1.0, 2.0], &[1.0, 1.0 + 1e-12, 1.0], Direction::Decreasing, 1e-8)
            .unwrap();
        assert!(v.pass);
        assert!(v.worst_violation > 0.0);
    }

    #[test]
    fn argument_errors() {
        assert_eq!(
            monotone_scan(&[0.0], &[1.0], Direction::Increasing, 0.0).unwrap_err(),
            NumericsError::TooFewSamples(1)
        );
        assert!(monotone_scan(&[1.0, 0.0], &[1.0, 2.0], Direction::Increasing, 0.0).is_err());
    }
}
