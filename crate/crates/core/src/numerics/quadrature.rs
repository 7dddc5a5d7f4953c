use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{CompensatedSum, Interval, NumericsError};

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections applied to any one subinterval.
    pub max_depth: u32,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_depth: 48,
            max_intervals: 4000,
        }
    }
}

impl QuadratureOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Integrates `f` over `domain` to relative tolerance `rel_tol`.
///
/// Unbounded ends are mapped onto a finite parameter interval first:
/// `x = t/(1-t^2)` on `(-1, 1)` for the real line and `x = a + t/(1-t)` for a
/// half line. A non-finite integrand value is an error that carries its
/// location.
pub fn integrate<F>(f: F, domain: Interval, rel_tol: f64) -> Result<Quadrature, NumericsError>
where
    F: Fn(f64) -> f64,
{
    integrate_with(f, domain, &QuadratureOptions::with_rel_tol(rel_tol))
}

pub fn integrate_with<F>(
    f: F,
    domain: Interval,
    opts: &QuadratureOptions,
) -> Result<Quadrature, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let Interval { lower, upper } = Interval::new(domain.lower, domain.upper)?;
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => adaptive(&f, lower, upper, opts, &|t| t),
        (false, false) => {
            let map = |t: f64| t / (1.0 - t * t);
            let g = |t: f64| {
                let d = 1.0 - t * t;
                let x = t / d;
                if !x.is_finite() {
                    return 0.0;
                }
                f(x) * (1.0 + t * t) / (d * d)
            };
            adaptive(&g, -1.0, 1.0, opts, &map)
        }
        (true, false) => {
            let map = move |t: f64| lower + t / (1.0 - t);
            let g = |t: f64| {
                let d = 1.0 - t;
                let x = lower + t / d;
                if !x.is_finite() {
                    return 0.0;
                }
                f(x) / (d * d)
            };
            adaptive(&g, 0.0, 1.0, opts, &map)
        }
        (false, true) => {
            let map = move |t: f64| upper - t / (1.0 - t);
            let g = |t: f64| {
                let d = 1.0 - t;
                let x = upper - t / d;
                if !x.is_finite() {
                    return 0.0;
                }
                f(x) / (d * d)
            };
            adaptive(&g, 0.0, 1.0, opts, &map)
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    // Max-heap on error; ties broken by position so pop order is reproducible.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn adaptive<G, M>(
    g: &G,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
    to_x: &M,
) -> Result<Quadrature, NumericsError>
where
    G: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    let first = qk15(g, a, b, 0, to_x)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut resabs = first.resabs;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    loop {
        let tol = opts
            .abs_tol
            .max(opts.rel_tol * value.abs())
            .max(100.0 * f64::EPSILON * resabs);
        if error <= tol {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        if worst.depth >= opts.max_depth || heap.len() + 2 > opts.max_intervals {
            let (lo, hi) = ordered(to_x(worst.a), to_x(worst.b));
            heap.push(worst);
            let (partial, err) = totals(&heap);
            return Err(NumericsError::NonConvergent {
                partial,
                error: err,
                lower: lo,
                upper: hi,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = qk15(g, worst.a, mid, worst.depth + 1, to_x)?;
        let right = qk15(g, mid, worst.b, worst.depth + 1, to_x)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        resabs += left.resabs + right.resabs - worst.resabs;
        heap.push(left);
        heap.push(right);
    }

    let intervals = heap.len();
    let (value, error) = totals(&heap);
    Ok(Quadrature {
        value,
        error,
        intervals,
    })
}

fn ordered(x: f64, y: f64) -> (f64, f64) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

// Summation in left-to-right order so the result does not depend on heap layout.
fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    let mut segments: Vec<&Segment> = heap.iter().collect();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = CompensatedSum::default();
    let mut error = CompensatedSum::default();
    for s in segments {
        value.add(s.value);
        error.add(s.error);
    }
    (value.value(), error.value())
}

fn qk15<G, M>(g: &G, a: f64, b: f64, depth: u32, to_x: &M) -> Result<Segment, NumericsError>
where
    G: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |t: f64| -> Result<f64, NumericsError> {
        let y = g(t);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(NumericsError::NonFinite { x: to_x(t) })
        }
    };

    let fc = eval(center)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }

    Ok(Segment {
        a,
        b,
        value,
        error,
        resabs: res_abs,
        depth,
    })
}
