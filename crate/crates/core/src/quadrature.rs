//! Globally adaptive Gauss–Kronrod quadrature.
//!
//! Each panel is integrated with the 15-point Kronrod rule and its embedded
//! 7-point Gauss rule; the QUADPACK error heuristic turns their difference
//! into an error estimate. The panel with the largest estimate is bisected
//! until the total estimate meets the tolerance or the panel budget runs out.
//! The final sum runs over panels ordered by left endpoint, so results are
//! bit-reproducible for fixed inputs.

// Published coefficients are kept digit for digit.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Axis, Error, Result};

/// Accuracy target and panel budget for one integration axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub const fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.abs_tol) || !ok(self.rel_tol) {
            return domain("tolerances must be finite and nonnegative");
        }
        if self.abs_tol == 0.0 && self.rel_tol == 0.0 {
            return domain("at least one of abs_tol and rel_tol must be positive");
        }
        if self.max_subdivisions < 1 {
            return domain("max_subdivisions must be at least 1");
        }
        Ok(())
    }

    pub fn on(self, lower: f64, upper: f64) -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
            lower,
            upper,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-10, 200)
    }
}

/// Tolerance and integration bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub lower: f64,
    pub upper: f64,
}

impl QuadratureSpec {
    pub fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.abs_tol, self.rel_tol, self.max_subdivisions)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerance().validate()?;
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return domain("integration bounds must be finite");
        }
        if self.lower >= self.upper {
            return domain(format!(
                "lower bound {} must be below upper bound {}",
                self.lower, self.upper
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadratureResult {
    /// Turns a non-converged result into an error tagged with `axis`.
    pub fn require_converged(self, axis: Axis) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                axis,
                value: self.value,
                error_estimate: self.error_estimate,
                evaluations: self.evaluations,
            })
        }
    }
}

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
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5]` and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // max-heap on error; ties broken by position so the order is total
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn eval<F>(f: &mut F, axis: Axis, x: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let v = f(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand { axis, abscissa: x })
    }
}

fn gk15<F>(f: &mut F, axis: Axis, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, axis, centre)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(f, axis, centre - dx)?;
        let f2 = eval(f, axis, centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let h = half.abs();
    let value = resk * half;
    resabs *= h;
    resasc *= h;
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel { a, b, value, error })
}

fn adaptive<F>(
    mut f: F,
    axis: Axis,
    spec: &QuadratureSpec,
    points: &[f64],
) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    let tol = spec.tolerance();
    let mut edges: Vec<f64> = points
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > spec.lower && *p < spec.upper)
        .collect();
    edges.push(spec.lower);
    edges.push(spec.upper);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::with_capacity(tol.max_subdivisions + edges.len());
    let mut evaluations = 0;
    for w in edges.windows(2) {
        heap.push(gk15(&mut f, axis, w[0], w[1])?);
        evaluations += 15;
    }
    let budget = tol.max_subdivisions.max(heap.len());

    let totals = |heap: &BinaryHeap<Panel>| {
        heap.iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };
    let (mut value, mut error) = totals(&heap);
    let mut converged = error <= tol.target(value);
    while !converged && heap.len() < budget {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel is at the floating-point resolution; cannot refine
            heap.push(worst);
            break;
        }
        let left = gk15(&mut f, axis, worst.a, mid)?;
        let right = gk15(&mut f, axis, mid, worst.b)?;
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        converged = error <= tol.target(value);
    }

    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum::<f64>();
    let error = panels.iter().map(|p| p.error).sum::<f64>();
    Ok(QuadratureResult {
        value,
        error_estimate: error,
        evaluations,
        converged: error <= tol.target(value),
    })
}

/// Integrates `f` over `[spec.lower, spec.upper]`.
pub fn integrate<F>(f: F, spec: &QuadratureSpec) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    integrate_with_points(f, spec, &[])
}

/// Integrates `f` with panel boundaries forced at `points` (kinks or other
/// features the rule should not straddle). Points outside the open interval
/// are ignored.
pub fn integrate_with_points<F>(
    f: F,
    spec: &QuadratureSpec,
    points: &[f64],
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    adaptive(|x| Ok(f(x)), Axis::Outer, spec, points)
}

/// Integrates a fallible integrand; errors raised by `f` abort the
/// integration and are returned unchanged. Non-finite values are reported
/// against `axis`.
pub fn try_integrate<F>(
    f: F,
    axis: Axis,
    spec: &QuadratureSpec,
    points: &[f64],
) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    adaptive(f, axis, spec, points)
}

/// Computes `∫_outer ∫_inner f(x, y) dy dx` by nesting.
///
/// The error budget is split evenly: the outer rule runs at half the outer
/// tolerances and each inner integral at an absolute tolerance of at most
/// `outer.abs_tol / (2 (outer.upper - outer.lower))` (with a purely relative
/// outer tolerance, the inner integrals use half of it). The worst inner error
/// times the outer length is added to the returned estimate. An inner
/// integral that fails to converge is reported as an error on the inner axis.
pub fn integrate_2d<F>(
    f: F,
    outer: &QuadratureSpec,
    inner: &QuadratureSpec,
) -> Result<QuadratureResult>
where
    F: Fn(f64, f64) -> f64,
{
    outer.validate()?;
    inner.validate()?;
    let length = outer.upper - outer.lower;
    let share = 0.5 * outer.abs_tol / length;
    let mut inner_spec = *inner;
    if share > 0.0 {
        // a relative inner target would let the larger of the two win
        inner_spec.abs_tol = if inner.abs_tol > 0.0 {
            inner.abs_tol.min(share)
        } else {
            share
        };
        inner_spec.rel_tol = 0.0;
    } else {
        inner_spec.rel_tol = if inner.rel_tol > 0.0 {
            inner.rel_tol.min(0.5 * outer.rel_tol)
        } else {
            0.5 * outer.rel_tol
        };
    }
    let mut outer_spec = *outer;
    outer_spec.abs_tol *= 0.5;
    outer_spec.rel_tol *= 0.5;
    let mut inner_evals = 0;
    let mut worst_inner = 0.0_f64;
    let mut res = adaptive(
        |x| {
            let r = adaptive(|y| Ok(f(x, y)), Axis::Inner, &inner_spec, &[])?
                .require_converged(Axis::Inner)?;
            inner_evals += r.evaluations;
            worst_inner = worst_inner.max(r.error_estimate);
            Ok(r.value)
        },
        Axis::Outer,
        &outer_spec,
        &[],
    )?;
    res.evaluations += inner_evals;
    res.error_estimate += worst_inner * length;
    res.converged = res.converged && res.error_estimate <= outer.tolerance().target(res.value);
    Ok(res)
}
