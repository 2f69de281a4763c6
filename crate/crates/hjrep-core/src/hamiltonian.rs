//! Hamiltonian models, numerical Legendre-Fenchel conjugation and compact
//! truncated epigraph slices.
//!
//! A model supplies the evaluator `H(t,x,p)` together with its growth
//! coefficient `c(t)` (so that `|H(t,x,p)-H(t,x,q)| <= c(t)(1+|x|)|p-q|`) and
//! local Lipschitz coefficient `k_R(t)` in the state. The conjugate
//!
//! ```text
//! H*(t,x,v) = sup_p { <v,p> - H(t,x,p) }
//! ```
//!
//! is computed by golden-section concave maximization over an expanding
//! bracket; divergence outside the domain window `|v| <= c(t)(1+|x|)` is
//! detected through the growth of the running maximum. The truncated slice
//!
//! ```text
//! E(t,x; cap) = { (v, eta) : H*(t,x,v) <= eta <= cap }
//! ```
//!
//! is materialized as a convex polygon whose lower chain samples the graph of
//! the conjugate on a banded domain grid merged with wall points found by
//! bisection in the vertical coordinate (the conjugate may blow up at the
//! open domain boundary, so uniform grids alone undersample the walls).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::geom::Polygon;
use crate::num1d::{bisect_monotone, golden_max, golden_min};

/// Extended-real conjugate values; `f64::INFINITY` is the +inf sentinel.
pub type ExtReal = f64;

/// Bracket expansion limit for the inner maximization.
pub const P_MAX: f64 = 1e6;
/// Divergence cap: a running maximum past this is reported as +inf.
pub const D_DIV: f64 = 1e8;
/// Relative boundary band for domain-grid sampling.
pub const BAND: f64 = 1e-3;
/// Golden-section tolerance of the inner maximization.
pub const P_TOL: f64 = 1e-10;

/// A Hamiltonian `H(t,x,p)`, convex in `p`, with its regularity coefficients.
pub trait HamiltonianModel: Send + Sync {
    /// State dimension `n`.
    fn state_dim(&self) -> usize;

    fn eval(&self, t: f64, x: &[f64], p: &[f64]) -> f64;

    /// Growth coefficient `c(t) >= 0` of the gradient bound
    /// `c(t)(1+|x|)|p-q|`.
    fn growth_coeff(&self, t: f64) -> f64;

    /// Local state-Lipschitz coefficient `k_R(t)` valid on the ball of radius
    /// `radius`.
    fn lipschitz_coeff(&self, t: f64, radius: f64) -> f64;

    /// Whether `t -> H(t,.,.)` is continuous (as opposed to merely piecewise
    /// continuous). Recorded as audit metadata.
    fn continuous_in_time(&self) -> bool {
        true
    }

    /// Closed-form conjugate for oracle models (`f64::INFINITY` outside the
    /// effective domain); `None` when only the numerical path exists.
    fn conjugate_closed_form(&self, _t: f64, _x: &[f64], _v: &[f64]) -> Option<ExtReal> {
        None
    }

    /// Closure of the effective domain of `H*(t,x,.)` for n = 1, when known.
    fn domain_hint(&self, _t: f64, _x: &[f64]) -> Option<(f64, f64)> {
        None
    }

    fn name(&self) -> &str;
}

pub type ModelRef = Arc<dyn HamiltonianModel>;

/// Parameter map for the builtin registry.
#[derive(Debug, Clone, Default)]
pub struct ModelParams {
    pub values: BTreeMap<String, f64>,
    /// Base model name for wrappers such as `shifted`.
    pub base: Option<String>,
}

impl ModelParams {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }
}

/// Worked model with closed-form conjugate: `H(x,p) = (sqrt|xp| - 1)^2` for
/// `|xp| > 1`, zero otherwise; `H*(x,v) = |v| / (|x| - |v|)` on `(-|x|,|x|)`.
#[derive(Debug, Clone)]
pub struct SqrtExample;

impl HamiltonianModel for SqrtExample {
    fn state_dim(&self) -> usize {
        1
    }
    fn eval(&self, _t: f64, x: &[f64], p: &[f64]) -> f64 {
        let xp = (x[0] * p[0]).abs();
        if xp > 1.0 {
            let s = xp.sqrt() - 1.0;
            s * s
        } else {
            0.0
        }
    }
    fn growth_coeff(&self, _t: f64) -> f64 {
        1.0
    }
    fn lipschitz_coeff(&self, _t: f64, _radius: f64) -> f64 {
        1.0
    }
    fn conjugate_closed_form(&self, _t: f64, x: &[f64], v: &[f64]) -> Option<ExtReal> {
        let (x, v) = (x[0], v[0]);
        Some(if x == 0.0 {
            if v == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else if v.abs() < x.abs() {
            v.abs() / (x.abs() - v.abs())
        } else {
            f64::INFINITY
        })
    }
    fn domain_hint(&self, _t: f64, x: &[f64]) -> Option<(f64, f64)> {
        Some((-x[0].abs(), x[0].abs()))
    }
    fn name(&self) -> &str {
        "sqrt_example"
    }
}

/// `H = 0`; the conjugate is the indicator of `{0}`.
#[derive(Debug, Clone)]
pub struct ZeroModel {
    pub n: usize,
}

impl HamiltonianModel for ZeroModel {
    fn state_dim(&self) -> usize {
        self.n
    }
    fn eval(&self, _t: f64, _x: &[f64], _p: &[f64]) -> f64 {
        0.0
    }
    fn growth_coeff(&self, _t: f64) -> f64 {
        0.0
    }
    fn lipschitz_coeff(&self, _t: f64, _radius: f64) -> f64 {
        0.0
    }
    fn conjugate_closed_form(&self, _t: f64, _x: &[f64], v: &[f64]) -> Option<ExtReal> {
        let nrm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        Some(if nrm == 0.0 { 0.0 } else { f64::INFINITY })
    }
    fn domain_hint(&self, _t: f64, _x: &[f64]) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }
    fn name(&self) -> &str {
        "zero"
    }
}

/// `H = |p|^2 / 2`, `H* = |v|^2 / 2`. The declared growth coefficient `c`
/// fixes the domain window `c(1+|x|)` used by the domain-window clamp; the quadratic
/// violates the global gradient bound, so the window is a model parameter
/// rather than a derived quantity.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    pub n: usize,
    pub c: f64,
}

impl HamiltonianModel for QuadraticModel {
    fn state_dim(&self) -> usize {
        self.n
    }
    fn eval(&self, _t: f64, _x: &[f64], p: &[f64]) -> f64 {
        0.5 * p.iter().map(|c| c * c).sum::<f64>()
    }
    fn growth_coeff(&self, _t: f64) -> f64 {
        self.c
    }
    fn lipschitz_coeff(&self, _t: f64, _radius: f64) -> f64 {
        0.0
    }
    fn conjugate_closed_form(&self, _t: f64, _x: &[f64], v: &[f64]) -> Option<ExtReal> {
        Some(0.5 * v.iter().map(|c| c * c).sum::<f64>())
    }
    fn domain_hint(&self, t: f64, x: &[f64]) -> Option<(f64, f64)> {
        let w = conjugate_domain_bound(self, t, x);
        Some((-w, w))
    }
    fn name(&self) -> &str {
        "quadratic"
    }
}

/// `H = <p, b(t,x)> - l0(t,x)` with affine coefficients
/// `b(t,x) = b0 + b1 x`, `l0(t,x) = l00 + l01 x` (n = 1); the conjugate is
/// `l0` at `v = b` and +inf elsewhere.
#[derive(Debug, Clone)]
pub struct LinearDriftModel {
    pub b0: f64,
    pub b1: f64,
    pub l00: f64,
    pub l01: f64,
}

impl LinearDriftModel {
    fn b(&self, x: f64) -> f64 {
        self.b0 + self.b1 * x
    }
    fn l0(&self, x: f64) -> f64 {
        self.l00 + self.l01 * x
    }
}

impl HamiltonianModel for LinearDriftModel {
    fn state_dim(&self) -> usize {
        1
    }
    fn eval(&self, _t: f64, x: &[f64], p: &[f64]) -> f64 {
        p[0] * self.b(x[0]) - self.l0(x[0])
    }
    fn growth_coeff(&self, _t: f64) -> f64 {
        // |H(p)-H(q)| = |b||p-q| and |b0 + b1 x| <= max(|b0|,|b1|) (1+|x|).
        self.b0.abs().max(self.b1.abs())
    }
    fn lipschitz_coeff(&self, _t: f64, _radius: f64) -> f64 {
        self.b1.abs() + self.l01.abs()
    }
    fn conjugate_closed_form(&self, _t: f64, x: &[f64], v: &[f64]) -> Option<ExtReal> {
        let scale = 1.0 + self.b(x[0]).abs();
        Some(if (v[0] - self.b(x[0])).abs() <= 1e-12 * scale {
            self.l0(x[0])
        } else {
            f64::INFINITY
        })
    }
    fn domain_hint(&self, _t: f64, x: &[f64]) -> Option<(f64, f64)> {
        Some((self.b(x[0]), self.b(x[0])))
    }
    fn name(&self) -> &str {
        "linear_drift"
    }
}

/// `H + delta`; the conjugate shifts to `H* - delta` exactly.
pub struct ShiftedModel {
    pub base: ModelRef,
    pub delta: f64,
    label: String,
}

impl HamiltonianModel for ShiftedModel {
    fn state_dim(&self) -> usize {
        self.base.state_dim()
    }
    fn eval(&self, t: f64, x: &[f64], p: &[f64]) -> f64 {
        self.base.eval(t, x, p) + self.delta
    }
    fn growth_coeff(&self, t: f64) -> f64 {
        self.base.growth_coeff(t)
    }
    fn lipschitz_coeff(&self, t: f64, radius: f64) -> f64 {
        self.base.lipschitz_coeff(t, radius)
    }
    fn continuous_in_time(&self) -> bool {
        self.base.continuous_in_time()
    }
    fn conjugate_closed_form(&self, t: f64, x: &[f64], v: &[f64]) -> Option<ExtReal> {
        self.base.conjugate_closed_form(t, x, v).map(|c| c - self.delta)
    }
    fn domain_hint(&self, t: f64, x: &[f64]) -> Option<(f64, f64)> {
        self.base.domain_hint(t, x)
    }
    fn name(&self) -> &str {
        &self.label
    }
}

/// Wraps a model into `H + delta`.
pub fn shifted(base: ModelRef, delta: f64) -> ModelRef {
    let label = format!("shifted({}, {delta})", base.name());
    Arc::new(ShiftedModel { base, delta, label })
}

/// Builtin model registry.
///
/// Names: `sqrt_example`, `zero`, `quadratic` (param `c`, default 2),
/// `linear_drift` (params `b0`, `b1`, `l00`, `l01`), `shifted` (param
/// `delta`, base model via `ModelParams::base`).
pub fn builtin(name: &str, params: &ModelParams) -> Result<ModelRef> {
    match name {
        "sqrt_example" => Ok(Arc::new(SqrtExample)),
        "zero" => Ok(Arc::new(ZeroModel {
            n: params.get("n").unwrap_or(1.0) as usize,
        })),
        "quadratic" => Ok(Arc::new(QuadraticModel {
            n: params.get("n").unwrap_or(1.0) as usize,
            c: params.get("c").unwrap_or(2.0),
        })),
        "linear_drift" => Ok(Arc::new(LinearDriftModel {
            b0: params.get("b0").unwrap_or(0.0),
            b1: params.get("b1").unwrap_or(0.0),
            l00: params.get("l00").unwrap_or(0.0),
            l01: params.get("l01").unwrap_or(0.0),
        })),
        "shifted" => {
            let base_name = params
                .base
                .as_deref()
                .ok_or_else(|| CoreError::BadModelParam("shifted requires a base model".into()))?;
            let delta = params
                .get("delta")
                .ok_or_else(|| CoreError::BadModelParam("shifted requires `delta`".into()))?;
            let inner = ModelParams {
                values: params.values.clone(),
                base: None,
            };
            Ok(shifted(builtin(base_name, &inner)?, delta))
        }
        other => Err(CoreError::UnknownModel(other.to_string())),
    }
}

/// `c(t)(1+|x|)`, the radius bounding `dom H*(t,x,.)` under the gradient
/// growth condition.
pub fn conjugate_domain_bound(model: &dyn HamiltonianModel, t: f64, x: &[f64]) -> f64 {
    let nrm: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    model.growth_coeff(t) * (1.0 + nrm)
}

/// Numerical conjugate `H*(t,x,v)` with the domain-window clamp: values outside
/// `|v| <= c(t)(1+|x|)` are +inf by fiat, values inside come from the closed
/// form when the model has one, otherwise from [`conjugate_numeric`].
pub fn conjugate(model: &dyn HamiltonianModel, t: f64, x: &[f64], v: &[f64]) -> ExtReal {
    let w = conjugate_domain_bound(model, t, x);
    let nrm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if nrm > w * (1.0 + 1e-12) {
        return f64::INFINITY;
    }
    if let Some(cf) = model.conjugate_closed_form(t, x, v) {
        return cf;
    }
    conjugate_unclamped(model, t, x, v)
}

/// Numerical conjugate ignoring any closed form (the window clamp still
/// applies). Used to cross-check oracle models against the search path.
pub fn conjugate_numeric(model: &dyn HamiltonianModel, t: f64, x: &[f64], v: &[f64]) -> ExtReal {
    let w = conjugate_domain_bound(model, t, x);
    let nrm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if nrm > w * (1.0 + 1e-12) {
        return f64::INFINITY;
    }
    conjugate_unclamped(model, t, x, v)
}

/// Conjugation with a concavity guard: the inner objective
/// `p -> <v,p> - H(t,x,p)` is sampled for midpoint-concavity violations
/// before the search, so models that break convexity in `p` surface as a
/// model error instead of a silent local maximum.
pub fn conjugate_checked(
    model: &dyn HamiltonianModel,
    t: f64,
    x: &[f64],
    v: &[f64],
) -> Result<ExtReal> {
    let defect = convexity_defect(model, t, x, 8.0 * (1.0 + x.iter().map(|c| c.abs()).fold(0.0, f64::max)), 128, 0x51);
    if defect > 1e-9 {
        return Err(CoreError::NonConvexModel {
            t,
            x: x.to_vec(),
            detail: format!("midpoint convexity defect {defect:.3e}"),
        });
    }
    Ok(conjugate(model, t, x, v))
}

/// Pure expanding-bracket maximization of `p -> <v,p> - H(t,x,p)` without the
/// window shortcut; +inf is reported when the running maximum keeps growing
/// past the bracket limit or exceeds the divergence cap.
pub fn conjugate_unclamped(model: &dyn HamiltonianModel, t: f64, x: &[f64], v: &[f64]) -> ExtReal {
    match model.state_dim() {
        1 => conjugate_1d(model, t, x, v[0]),
        2 => conjugate_2d(model, t, x, v),
        n => panic!("conjugate: unsupported state dimension {n}"),
    }
}

fn conjugate_1d(model: &dyn HamiltonianModel, t: f64, x: &[f64], v: f64) -> ExtReal {
    let psi = |p: f64| v * p - model.eval(t, x, &[p]);
    let mut radius = 4.0 * (1.0 + v.abs() + x[0].abs());
    let mut prev_max = f64::NEG_INFINITY;
    loop {
        let (arg, max) = golden_max(&psi, -radius, radius, P_TOL * (1.0 + 2.0 * radius));
        if max > D_DIV {
            return f64::INFINITY;
        }
        let interior = arg.abs() < 0.98 * radius;
        if interior {
            return max;
        }
        if radius >= P_MAX {
            // Flat tail (e.g. a linear objective with zero slope) versus
            // genuine divergence.
            let growth_tol = 1e-9 * (1.0 + max.abs());
            if prev_max.is_finite() && (max - prev_max).abs() <= growth_tol {
                return max;
            }
            return f64::INFINITY;
        }
        prev_max = max;
        radius = (radius * 2.0).min(P_MAX);
    }
}

/// Coordinate-wise refinement for n = 2: alternate golden sections per
/// coordinate on an expanding box.
fn conjugate_2d(model: &dyn HamiltonianModel, t: f64, x: &[f64], v: &[f64]) -> ExtReal {
    let xn: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let vn: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut radius = 4.0 * (1.0 + vn + xn);
    let mut prev_max = f64::NEG_INFINITY;
    loop {
        let mut p = [0.0f64, 0.0];
        let mut max = v[0] * p[0] + v[1] * p[1] - model.eval(t, x, &p);
        for _ in 0..24 {
            for k in 0..2 {
                let frozen = p;
                let obj = |s: f64| {
                    let mut q = frozen;
                    q[k] = s;
                    v[0] * q[0] + v[1] * q[1] - model.eval(t, x, &q)
                };
                let (arg, m) = golden_max(&obj, -radius, radius, P_TOL * (1.0 + 2.0 * radius));
                p[k] = arg;
                max = m;
            }
        }
        if max > D_DIV {
            return f64::INFINITY;
        }
        if p[0].abs() < 0.98 * radius && p[1].abs() < 0.98 * radius {
            return max;
        }
        if radius >= P_MAX {
            let growth_tol = 1e-9 * (1.0 + max.abs());
            if prev_max.is_finite() && (max - prev_max).abs() <= growth_tol {
                return max;
            }
            return f64::INFINITY;
        }
        prev_max = max;
        radius = (radius * 2.0).min(P_MAX);
    }
}

/// Closure `[lo, hi]` of the effective domain of `H*(t,x,.)` (n = 1),
/// intersected with the window. Uses the model hint when present, otherwise
/// locates the finite region by scanning and pins the endpoints by bisection
/// on the finite/infinite transition.
pub fn domain_interval(model: &dyn HamiltonianModel, t: f64, x: &[f64]) -> Result<(f64, f64)> {
    let w = conjugate_domain_bound(model, t, x);
    if let Some((lo, hi)) = model.domain_hint(t, x) {
        return Ok((lo.max(-w), hi.min(w)));
    }
    let finite = |v: f64| conjugate(model, t, x, &[v]).is_finite();
    const SCAN: usize = 257;
    let mut seed = None;
    for k in 0..SCAN {
        let v = -w + 2.0 * w * (k as f64) / ((SCAN - 1) as f64);
        if finite(v) {
            seed = Some(v);
            break;
        }
    }
    let seed = seed.ok_or_else(|| {
        CoreError::Invalid("could not locate dom H*; provide a domain hint".into())
    })?;
    let lo = if finite(-w) {
        -w
    } else {
        bisect_monotone(&|v| if finite(v) { 1.0 } else { 0.0 }, -w, seed, 0.5, true)
    };
    let hi = if finite(w) {
        w
    } else {
        bisect_monotone(&|v| if finite(v) { 1.0 } else { 0.0 }, seed, w, 0.5, false)
    };
    Ok((lo, hi))
}

/// The banded sub-interval of the domain: relative distance `band` from each
/// endpoint (the conjugate may be unbounded on the open domain, the band
/// keeps grids finite).
pub fn banded_interval(dom: (f64, f64), band: f64) -> (f64, f64) {
    let half = 0.5 * (dom.1 - dom.0);
    let mid = 0.5 * (dom.0 + dom.1);
    (mid - (1.0 - band) * half, mid + (1.0 - band) * half)
}

/// A compact truncated epigraph slice `{(v,eta): H*(t,x,v) <= eta <= cap}`
/// materialized as a convex polygon.
#[derive(Debug, Clone)]
pub struct EpigraphSlice {
    pub body: Polygon,
    /// Domain window radius `c(t)(1+|x|)`.
    pub window: f64,
    /// Height cap actually used.
    pub cap: f64,
    /// Closure of the detected effective domain.
    pub dom: (f64, f64),
    /// Relative boundary band of the sampling grid.
    pub band: f64,
    /// Minimum of the conjugate on the banded grid.
    pub conj_min: f64,
}

/// Lower-chain sampling density of slice polygons.
pub const N_SLICE_V: usize = 360;
/// Wall sampling density (per side, by height).
pub const N_SLICE_WALL: usize = 128;

/// Builds the truncated slice at `(t,x)`. `cap = None` applies the default
/// rule `2 * (banded-grid maximum of H*) + 10`; an explicit cap below the
/// conjugate minimum is an error.
pub fn epigraph_slice(
    model: &dyn HamiltonianModel,
    t: f64,
    x: &[f64],
    cap: Option<f64>,
) -> Result<EpigraphSlice> {
    if model.state_dim() != 1 {
        return Err(CoreError::UnsupportedDimension {
            op: "epigraph_slice",
            dim: model.state_dim(),
        });
    }
    let window = conjugate_domain_bound(model, t, x);
    let dom = domain_interval(model, t, x)?;
    let (blo, bhi) = banded_interval(dom, BAND);
    let conj = |v: f64| conjugate(model, t, x, &[v]);

    const GRID: usize = 512;
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    for k in 0..=GRID {
        let v = blo + (bhi - blo) * (k as f64) / (GRID as f64);
        let c = conj(v);
        if c.is_finite() {
            gmax = gmax.max(c);
            gmin = gmin.min(c);
        }
    }
    if !gmin.is_finite() {
        return Err(CoreError::Invalid(
            "conjugate has no finite values on the banded domain".into(),
        ));
    }
    // Refine the minimum (the grid value biases the cap check).
    let (_, refined_min) = golden_min(&conj, blo, bhi, 1e-12 * (1.0 + bhi - blo));
    let conj_min = gmin.min(refined_min);
    let cap = match cap {
        Some(c) => {
            if c < conj_min + 1e-9 {
                return Err(CoreError::CapTooLow { cap: c, min: conj_min });
            }
            c
        }
        None => 2.0 * gmax + 10.0,
    };

    let body = slice_polygon(&conj, dom, (blo, bhi), cap)?;
    Ok(EpigraphSlice {
        body,
        window,
        cap,
        dom,
        band: BAND,
        conj_min,
    })
}

/// Polygonizes `{(v,eta): phi(v) <= eta <= cap}` for a convex `phi` finite on
/// the open interval `dom`, sampling the graph on the banded interval and the
/// near-vertical walls by height.
fn slice_polygon(
    phi: &dyn Fn(f64) -> f64,
    dom: (f64, f64),
    banded: (f64, f64),
    cap: f64,
) -> Result<Polygon> {
    let (blo, bhi) = banded;
    let mut pts: Vec<[f64; 2]> = Vec::new();
    if bhi - blo <= 1e-14 * (1.0 + blo.abs()) {
        // Degenerate domain: a vertical segment.
        let v = 0.5 * (blo + bhi);
        let base = phi(v);
        if !base.is_finite() || base > cap {
            return Err(CoreError::CapTooLow { cap, min: base });
        }
        return Polygon::from_points(&[[v, base], [v, cap]]);
    }
    for k in 0..=N_SLICE_V {
        let v = blo + (bhi - blo) * (k as f64) / (N_SLICE_V as f64);
        let c = phi(v);
        if c.is_finite() && c <= cap {
            pts.push([v, c.max(-1e14)]);
            pts.push([v, cap]);
        }
    }
    if pts.is_empty() {
        return Err(CoreError::Invalid("slice is empty below the cap".into()));
    }
    // Wall points: where the graph crosses each height level, found by
    // bisection on each side of the minimizer (phi is convex, hence monotone
    // on either side).
    let (vmin, phimin) = golden_min(phi, blo, bhi, 1e-12 * (1.0 + bhi - blo));
    let lo_anchor = phi(blo);
    let hi_anchor = phi(bhi);
    for (side_in, side_out, anchor) in [(vmin, dom.0, lo_anchor), (vmin, dom.1, hi_anchor)] {
        let base = if anchor.is_finite() { anchor } else { phimin };
        if cap <= base {
            continue;
        }
        for j in 1..=N_SLICE_WALL {
            let eta = base + (cap - base) * (j as f64) / (N_SLICE_WALL as f64);
            let increasing = side_out > side_in;
            let guard = |v: f64| {
                let c = phi(v);
                if c.is_finite() {
                    c
                } else {
                    2.0 * cap + 1e6
                }
            };
            let v = bisect_monotone(&guard, side_in.min(side_out), side_in.max(side_out), eta, increasing);
            let c = phi(v);
            if c.is_finite() && c <= cap {
                pts.push([v, c]);
                pts.push([v, cap]);
            }
        }
    }
    Polygon::from_points(&pts)
}

/// Measured Hausdorff gap between the truncated slices at `x` and `y` under a
/// common cap, paired with the theoretical bound `2 k_R(t) |x-y|`.
#[derive(Debug, Clone)]
pub struct SliceGap {
    pub gap: f64,
    pub bound: f64,
    pub cap: f64,
}

pub fn hausdorff_slice_gap(
    model: &dyn HamiltonianModel,
    t: f64,
    x: f64,
    y: f64,
    cap: Option<f64>,
) -> Result<SliceGap> {
    let cap = match cap {
        Some(c) => c,
        None => {
            let a = epigraph_slice(model, t, &[x], None)?;
            let b = epigraph_slice(model, t, &[y], None)?;
            a.cap.min(b.cap)
        }
    };
    let a = epigraph_slice(model, t, &[x], Some(cap))?;
    let b = epigraph_slice(model, t, &[y], Some(cap))?;
    let gap = crate::geom::hausdorff_polygons(&a.body, &b.body);
    let radius = x.abs().max(y.abs());
    let bound = 2.0 * model.lipschitz_coeff(t, radius) * (x - y).abs();
    Ok(SliceGap { gap, bound, cap })
}

/// Midpoint-convexity check of `H(t,x,.)` on sampled pairs; returns the worst
/// violation (positive means non-convex beyond tolerance).
pub fn convexity_defect(
    model: &dyn HamiltonianModel,
    t: f64,
    x: &[f64],
    p_radius: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    use rand::RngExt;
    let mut rng = crate::rng::rng_for(seed, 11);
    let n = model.state_dim();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-p_radius..p_radius)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-p_radius..p_radius)).collect();
        let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
        let defect = model.eval(t, x, &mid)
            - 0.5 * (model.eval(t, x, &p) + model.eval(t, x, &q));
        worst = worst.max(defect);
    }
    worst
}

/// Cross-checks the declared `c(t)` and `k_R(t)` against finite-difference
/// samples; returns warning strings (never fails — the declared coefficients
/// stay authoritative).
pub fn coefficient_warnings(
    model: &dyn HamiltonianModel,
    t: f64,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Vec<String> {
    use rand::RngExt;
    let mut rng = crate::rng::rng_for(seed, 12);
    let n = model.state_dim();
    let c = model.growth_coeff(t);
    let k = model.lipschitz_coeff(t, radius);
    let mut warnings = Vec::new();
    let mut worst_c: f64 = 0.0;
    let mut worst_k: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..radius)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..radius)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let xn: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let pn: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dpq: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let dxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dpq > 1e-9 {
            let lhs = (model.eval(t, &x, &p) - model.eval(t, &x, &q)).abs();
            worst_c = worst_c.max(lhs / ((1.0 + xn) * dpq));
        }
        if dxy > 1e-9 {
            let lhs = (model.eval(t, &x, &p) - model.eval(t, &y, &p)).abs();
            worst_k = worst_k.max(lhs / ((1.0 + pn) * dxy));
        }
    }
    if worst_c > c * (1.0 + 1e-6) + 1e-12 {
        warnings.push(format!(
            "declared c(t)={c} but sampled gradient-growth ratio reached {worst_c:.6} at t={t}"
        ));
    }
    if worst_k > k * (1.0 + 1e-6) + 1e-12 {
        warnings.push(format!(
            "declared k_R(t)={k} but sampled state-Lipschitz ratio reached {worst_k:.6} at t={t} (R={radius})"
        ));
    }
    warnings
}
