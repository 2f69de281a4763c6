//! Compact-convex-set primitives.
//!
//! The default realization of a planar body is a dense boundary polygon
//! ([`Polygon`], canonicalized to a CCW convex vertex cycle, possibly
//! degenerate: a point or a segment). Balls ([`Ball`]) are kept exact in any
//! dimension. The operations mirror the set-valued toolbox used by the
//! parameterization:
//!
//! - `support(K, u) = max_{z in K} <u, z>`
//! - `d(y, K) = inf_{z in K} |y - z|` and the nearest point
//! - the ball-clamped intersection `P(y,K) = K ∩ B(y, 2 d(y,K))`, Lipschitz
//!   with constant 5 in `(y, K)` jointly,
//! - the Steiner point `s_m(K) = m ∫ u σ(K,u) μ(du)` over the unit sphere
//!   (normalized measure), a Lipschitz selection with constant `m`,
//! - the Hausdorff distance `ℋ(K,D)`.
//!
//! For polygons the support, projection, Hausdorff distance and Steiner point
//! are computed exactly (the Steiner integral has a closed form over each
//! vertex normal cone). The clamp `K ∩ B` discretizes circular arcs at
//! `N_DISK` nodes; the documented bias is O(radius / N_DISK^2).

use crate::error::{CoreError, Result};

/// Polygon sampling density used when a ball must be polygonized.
pub const N_POLY: usize = 720;
/// Arc discretization for disk intersections.
pub const N_DISK: usize = 2048;
/// Sphere quadrature nodes for Steiner points in dimension m >= 3.
pub const N_SPHERE: usize = 4096;
/// Steiner refinement-doubling stopping tolerance.
pub const EPS_STEIN: f64 = 1e-8;
/// Membership/projection tolerance on polygon (exact arithmetic) paths.
pub const EPS_PROJ: f64 = 1e-9;

pub type P2 = [f64; 2];

#[inline]
fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}
#[inline]
fn add(a: P2, b: P2) -> P2 {
    [a[0] + b[0], a[1] + b[1]]
}
#[inline]
fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
#[inline]
fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
#[inline]
fn norm(a: P2) -> f64 {
    a[0].hypot(a[1])
}

/// Distance from `p` to the segment `[a, b]`, with the attaining point.
fn segment_nearest(p: P2, a: P2, b: P2) -> (f64, P2) {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 <= f64::MIN_POSITIVE {
        return (norm(sub(p, a)), a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    let q = add(a, [ab[0] * t, ab[1] * t]);
    (norm(sub(p, q)), q)
}

/// A compact convex polygon in the plane, stored as a CCW convex vertex
/// cycle. Degenerate bodies (a single point, a segment) are allowed and all
/// operations handle them.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    verts: Vec<P2>,
}

impl Polygon {
    /// Builds the convex hull of `points` (Andrew monotone chain); the result
    /// may be degenerate if the input is (near-)collinear.
    pub fn from_points(points: &[P2]) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(CoreError::DegenerateBody(
                "empty or non-finite point set".into(),
            ));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = pts
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(1.0f64, f64::max);
        let eq_tol = 1e-13 * scale;
        pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= eq_tol && (a[1] - b[1]).abs() <= eq_tol);
        if pts.len() == 1 {
            return Ok(Polygon { verts: pts });
        }
        let cross_tol = 1e-16 * scale * scale;
        let build = |iter: &mut dyn Iterator<Item = P2>| {
            let mut chain: Vec<P2> = Vec::new();
            for p in iter {
                while chain.len() >= 2 {
                    let r = cross(
                        sub(chain[chain.len() - 1], chain[chain.len() - 2]),
                        sub(p, chain[chain.len() - 2]),
                    );
                    if r <= cross_tol {
                        chain.pop();
                    } else {
                        break;
                    }
                }
                chain.push(p);
            }
            chain
        };
        let lower = build(&mut pts.iter().copied());
        let upper = build(&mut pts.iter().rev().copied());
        let mut verts = lower;
        verts.pop();
        verts.extend_from_slice(&upper[..upper.len().saturating_sub(1)]);
        if verts.is_empty() {
            verts = vec![pts[0]];
        }
        Ok(Polygon { verts })
    }

    /// Regular `n`-gon inscribed in the circle of the given center and radius.
    pub fn ball(center: P2, radius: f64, n: usize) -> Result<Self> {
        if radius < 0.0 || !radius.is_finite() {
            return Err(CoreError::DegenerateBody("negative or NaN radius".into()));
        }
        if radius == 0.0 {
            return Ok(Polygon {
                verts: vec![center],
            });
        }
        let n = n.max(8);
        let verts = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            })
            .collect();
        Ok(Polygon { verts })
    }

    /// Axis-aligned rectangle `[x0,x1] x [y0,y1]`.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Polygon::from_points(&[[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn vertices(&self) -> &[P2] {
        &self.verts
    }

    pub fn translate(&self, v: P2) -> Polygon {
        Polygon {
            verts: self.verts.iter().map(|p| add(*p, v)).collect(),
        }
    }

    /// `max_{z in K} <u, z>`; exact (vertex maximum).
    pub fn support(&self, u: P2) -> f64 {
        self.verts
            .iter()
            .map(|v| dot(*v, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nearest boundary-or-interior point to `p` and its distance (0 inside).
    pub fn nearest(&self, p: P2) -> (f64, P2) {
        match self.verts.len() {
            1 => (norm(sub(p, self.verts[0])), self.verts[0]),
            2 => segment_nearest(p, self.verts[0], self.verts[1]),
            _ => {
                if self.contains(p) {
                    return (0.0, p);
                }
                let n = self.verts.len();
                let mut best = (f64::INFINITY, p);
                for i in 0..n {
                    let cand = segment_nearest(p, self.verts[i], self.verts[(i + 1) % n]);
                    if cand.0 < best.0 {
                        best = cand;
                    }
                }
                best
            }
        }
    }

    pub fn distance(&self, p: P2) -> f64 {
        self.nearest(p).0
    }

    /// Membership within `EPS_PROJ` (degenerate bodies fall back to the
    /// distance test).
    pub fn contains(&self, p: P2) -> bool {
        let n = self.verts.len();
        if n < 3 {
            let scale = 1.0 + self.verts.iter().map(|v| norm(*v)).fold(0.0, f64::max);
            return self.nearest_degenerate(p) <= EPS_PROJ * scale;
        }
        let scale = 1.0 + self.verts.iter().map(|v| norm(*v)).fold(0.0, f64::max);
        let tol = EPS_PROJ * scale;
        for i in 0..n {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % n];
            if cross(sub(b, a), sub(p, a)) < -tol * norm(sub(b, a)).max(1e-300) {
                return false;
            }
        }
        true
    }

    fn nearest_degenerate(&self, p: P2) -> f64 {
        match self.verts.len() {
            1 => norm(sub(p, self.verts[0])),
            2 => segment_nearest(p, self.verts[0], self.verts[1]).0,
            _ => unreachable!(),
        }
    }

    /// Upper bound on the diameter (bounding-box diagonal).
    pub fn diameter_bound(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &self.verts {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        norm(sub(hi, lo))
    }

    /// Exact Steiner point: the sphere integral `2 ∫ u σ(K,u) μ(du)` has a
    /// closed form over each vertex normal cone.
    pub fn steiner(&self) -> P2 {
        let n = self.verts.len();
        if n == 1 {
            return self.verts[0];
        }
        // Outward normal angle of each directed edge (CCW cycle).
        let edges: Vec<(P2, P2)> = if n == 2 {
            vec![
                (self.verts[0], self.verts[1]),
                (self.verts[1], self.verts[0]),
            ]
        } else {
            (0..n)
                .map(|i| (self.verts[i], self.verts[(i + 1) % n]))
                .collect()
        };
        let m = edges.len();
        let normal_angle = |e: (P2, P2)| -> f64 {
            let d = sub(e.1, e.0);
            d[1].atan2(d[0]) - std::f64::consts::FRAC_PI_2
        };
        let mut sx = 0.0;
        let mut sy = 0.0;
        for i in 0..m {
            // Cone of the vertex shared by edge i-1 and edge i.
            let v = edges[i].0;
            let prev = normal_angle(edges[(i + m - 1) % m]);
            let mut next = normal_angle(edges[i]);
            while next < prev - 1e-15 {
                next += 2.0 * std::f64::consts::PI;
            }
            let (a, b) = (prev, next);
            let i_cc = 0.5 * (b - a) + 0.25 * ((2.0 * b).sin() - (2.0 * a).sin());
            let i_ss = 0.5 * (b - a) - 0.25 * ((2.0 * b).sin() - (2.0 * a).sin());
            let i_sc = 0.25 * ((2.0 * a).cos() - (2.0 * b).cos());
            sx += v[0] * i_cc + v[1] * i_sc;
            sy += v[0] * i_sc + v[1] * i_ss;
        }
        [
            sx / std::f64::consts::PI,
            sy / std::f64::consts::PI,
        ]
    }
}

/// Closed Euclidean ball in R^m, kept exact in any dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius < 0.0 || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::DegenerateBody("invalid ball".into()));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        let cu: f64 = self.center.iter().zip(u).map(|(c, u)| c * u).sum();
        cu + self.radius
    }

    pub fn distance(&self, z: &[f64]) -> f64 {
        let d: f64 = self
            .center
            .iter()
            .zip(z)
            .map(|(c, z)| (z - c) * (z - c))
            .sum::<f64>()
            .sqrt();
        (d - self.radius).max(0.0)
    }

    pub fn nearest(&self, z: &[f64]) -> Vec<f64> {
        let d: f64 = self
            .center
            .iter()
            .zip(z)
            .map(|(c, z)| (z - c) * (z - c))
            .sum::<f64>()
            .sqrt();
        if d <= self.radius || d == 0.0 {
            return z.to_vec();
        }
        let t = self.radius / d;
        self.center
            .iter()
            .zip(z)
            .map(|(c, z)| c + (z - c) * t)
            .collect()
    }
}

/// A compact convex body exposed through support / membership / nearest-point
/// oracles. Planar bodies default to the polygon realization.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Polygon(Polygon),
    Ball(Ball),
}

impl ConvexBody {
    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Polygon(_) => 2,
            ConvexBody::Ball(b) => b.dim(),
        }
    }

    /// Support value in the given direction; non-unit directions are
    /// normalized.
    pub fn support(&self, direction: &[f64]) -> Result<f64> {
        let nrm: f64 = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(CoreError::Invalid("zero or non-finite direction".into()));
        }
        if direction.len() != self.dim() {
            return Err(CoreError::UnsupportedDimension {
                op: "support",
                dim: direction.len(),
            });
        }
        let u: Vec<f64> = direction.iter().map(|d| d / nrm).collect();
        Ok(match self {
            ConvexBody::Polygon(p) => p.support([u[0], u[1]]),
            ConvexBody::Ball(b) => b.support(&u),
        })
    }

    pub fn distance_to(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(CoreError::UnsupportedDimension {
                op: "distance_to",
                dim: point.len(),
            });
        }
        Ok(match self {
            ConvexBody::Polygon(p) => p.distance([point[0], point[1]]),
            ConvexBody::Ball(b) => b.distance(point),
        })
    }

    pub fn nearest_point(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() {
            return Err(CoreError::UnsupportedDimension {
                op: "nearest_point",
                dim: point.len(),
            });
        }
        Ok(match self {
            ConvexBody::Polygon(p) => p.nearest([point[0], point[1]]).1.to_vec(),
            ConvexBody::Ball(b) => b.nearest(point),
        })
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        let scale = 1.0 + point.iter().map(|p| p.abs()).fold(0.0, f64::max);
        Ok(self.distance_to(point)? <= EPS_PROJ * scale)
    }

    pub fn diameter_bound(&self) -> f64 {
        match self {
            ConvexBody::Polygon(p) => p.diameter_bound(),
            ConvexBody::Ball(b) => 2.0 * b.radius,
        }
    }

    fn as_polygon(&self) -> Result<Polygon> {
        match self {
            ConvexBody::Polygon(p) => Ok(p.clone()),
            ConvexBody::Ball(b) => {
                if b.dim() != 2 {
                    return Err(CoreError::UnsupportedDimension {
                        op: "polygonize",
                        dim: b.dim(),
                    });
                }
                Polygon::ball([b.center[0], b.center[1]], b.radius, 2 * N_POLY)
            }
        }
    }
}

impl From<Polygon> for ConvexBody {
    fn from(p: Polygon) -> Self {
        ConvexBody::Polygon(p)
    }
}
impl From<Ball> for ConvexBody {
    fn from(b: Ball) -> Self {
        ConvexBody::Ball(b)
    }
}

/// `support` as a free function (spec surface).
pub fn support(body: &ConvexBody, direction: &[f64]) -> Result<f64> {
    body.support(direction)
}

/// `distance_to` as a free function (spec surface).
pub fn distance_to(body: &ConvexBody, point: &[f64]) -> Result<f64> {
    body.distance_to(point)
}

/// The ball-clamped intersection map `P(y, K) = K ∩ B(y, 2 d(y, K))`.
///
/// Returns the singleton `{y}` when `y ∈ K`. Planar only; circular arcs of
/// the ball boundary are sampled at `N_DISK` nodes.
pub fn clamp_intersection(body: &ConvexBody, anchor: &[f64]) -> Result<ConvexBody> {
    if anchor.len() != 2 || body.dim() != 2 {
        return Err(CoreError::UnsupportedDimension {
            op: "clamp_intersection",
            dim: body.dim().max(anchor.len()),
        });
    }
    let poly = body.as_polygon()?;
    let y = [anchor[0], anchor[1]];
    let (d, _) = poly.nearest(y);
    let scale = 1.0 + norm(y) + poly.diameter_bound();
    if d <= EPS_PROJ * scale {
        return Ok(ConvexBody::Polygon(Polygon { verts: vec![y] }));
    }
    let r = 2.0 * d;
    clamp_polygon_disk(&poly, y, r).map(ConvexBody::Polygon)
}

/// Intersection of a convex polygon with a closed disk, as a polygon whose
/// arc portions are sampled at `N_DISK` resolution.
fn clamp_polygon_disk(poly: &Polygon, c: P2, r: f64) -> Result<Polygon> {
    let n = poly.verts.len();
    let r_tol = r + 1e-12 * (1.0 + r + norm(c));
    let mut cand: Vec<P2> = Vec::new();
    for v in &poly.verts {
        if norm(sub(*v, c)) <= r_tol {
            cand.push(*v);
        }
    }
    // Edge-circle crossings.
    let edge_count = if n >= 3 { n } else { n - 1 };
    for i in 0..edge_count {
        let a = poly.verts[i];
        let b = poly.verts[(i + 1) % n];
        let ab = sub(b, a);
        let ac = sub(a, c);
        let qa = dot(ab, ab);
        if qa <= f64::MIN_POSITIVE {
            continue;
        }
        let qb = 2.0 * dot(ac, ab);
        let qc = dot(ac, ac) - r * r;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
            if (-1e-12..=1.0 + 1e-12).contains(&t) {
                let t = t.clamp(0.0, 1.0);
                cand.push(add(a, [ab[0] * t, ab[1] * t]));
            }
        }
    }
    // Arc samples inside the polygon.
    for k in 0..N_DISK {
        let th = 2.0 * std::f64::consts::PI * (k as f64) / (N_DISK as f64);
        let p = [c[0] + r * th.cos(), c[1] + r * th.sin()];
        if poly.contains(p) {
            cand.push(p);
        }
    }
    if cand.is_empty() {
        return Err(CoreError::DegenerateBody(
            "empty polygon-disk intersection".into(),
        ));
    }
    Polygon::from_points(&cand)
}

/// Steiner point of a body.
///
/// Polygons use the exact normal-cone formula; planar support-only bodies use
/// trapezoidal angular quadrature with refinement doubling; `m >= 3` uses a
/// deterministic quasi-Monte-Carlo sphere rule with antithetic nodes.
pub fn steiner_point(body: &ConvexBody) -> Result<Vec<f64>> {
    match body {
        ConvexBody::Polygon(p) => Ok(p.steiner().to_vec()),
        ConvexBody::Ball(b) => Ok(b.center.clone()),
    }
}

/// Angular-quadrature Steiner point for an arbitrary planar support oracle.
/// Exposed for cross-checking the exact polygon formula.
pub fn steiner_quadrature_2d(support: &dyn Fn(P2) -> f64, n_nodes: usize) -> P2 {
    let n = n_nodes.max(16);
    let mut s = [0.0, 0.0];
    for k in 0..n {
        let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
        let u = [th.cos(), th.sin()];
        let sigma = support(u);
        s[0] += u[0] * sigma;
        s[1] += u[1] * sigma;
    }
    // s_2 = 2 * mean(u sigma) over the normalized sphere measure.
    [2.0 * s[0] / n as f64, 2.0 * s[1] / n as f64]
}

/// Steiner point from a support oracle with refinement doubling; errors when
/// successive refinements disagree by more than `EPS_STEIN`.
pub fn steiner_from_support_2d(support: &dyn Fn(P2) -> f64, scale: f64) -> Result<P2> {
    let mut n = N_SPHERE;
    let mut prev = steiner_quadrature_2d(support, n);
    for _ in 0..6 {
        n *= 2;
        let next = steiner_quadrature_2d(support, n);
        let gap = norm(sub(next, prev));
        if gap <= EPS_STEIN * scale.max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(CoreError::QuadratureDivergence {
        gap: norm(sub(prev, steiner_quadrature_2d(support, 2 * n))),
        tol: EPS_STEIN * scale.max(1.0),
    })
}

/// Deterministic QMC Steiner point in dimension m >= 3 from a support oracle:
/// Halton nodes mapped to the sphere through Gaussian normalization, used with
/// antithetic pairs; refinement-doubling stopping rule at `tol` (the QMC rule
/// cannot reach the planar `EPS_STEIN`, so the tolerance is explicit here).
pub fn steiner_qmc(
    support: &dyn Fn(&[f64]) -> f64,
    m: usize,
    n_sphere: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    if m < 3 {
        return Err(CoreError::UnsupportedDimension {
            op: "steiner_qmc",
            dim: m,
        });
    }
    let run = |n: usize| -> Vec<f64> {
        let mut acc = vec![0.0; m];
        for k in 0..n {
            let u = sphere_node(k, m);
            let neg: Vec<f64> = u.iter().map(|x| -x).collect();
            let (sp, sn) = (support(&u), support(&neg));
            for j in 0..m {
                acc[j] += u[j] * sp - u[j] * sn;
            }
        }
        acc.iter().map(|a| (m as f64) * a / (2.0 * n as f64)).collect()
    };
    let mut n = n_sphere.max(256);
    let mut prev = run(n);
    for _ in 0..5 {
        n *= 2;
        let next = run(n);
        let gap: f64 = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if gap <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(CoreError::QuadratureDivergence { gap: f64::NAN, tol })
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index + 1;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Rational approximation of the inverse standard normal CDF (Acklam).
fn inv_normal_cdf(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inv_normal_cdf(1.0 - p)
    }
}

fn sphere_node(index: usize, m: usize) -> Vec<f64> {
    const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let mut v: Vec<f64> = (0..m)
        .map(|j| inv_normal_cdf(halton(index, PRIMES[j % PRIMES.len()])))
        .collect();
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 1e-12 {
        v = vec![0.0; m];
        v[0] = 1.0;
        return v;
    }
    v.iter().map(|x| x / n).collect()
}

/// Hausdorff distance `max{ sup_{ξ∈K} d(ξ,D), sup_{ξ∈D} d(ξ,K) }`.
///
/// Exact for polygon pairs (the sup of a convex function over a polygon is
/// attained at a vertex) and for ball pairs; mixed pairs polygonize the ball.
pub fn hausdorff(a: &ConvexBody, b: &ConvexBody) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(CoreError::UnsupportedDimension {
            op: "hausdorff",
            dim: a.dim().max(b.dim()),
        });
    }
    match (a, b) {
        (ConvexBody::Ball(p), ConvexBody::Ball(q)) => {
            let d: f64 = p
                .center
                .iter()
                .zip(&q.center)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            Ok((d + p.radius - q.radius).max(d + q.radius - p.radius).max(0.0))
        }
        _ => {
            let pa = a.as_polygon()?;
            let pb = b.as_polygon()?;
            Ok(hausdorff_polygons(&pa, &pb))
        }
    }
}

pub(crate) fn hausdorff_polygons(a: &Polygon, b: &Polygon) -> f64 {
    let dir = |from: &Polygon, to: &Polygon| -> f64 {
        from.verts
            .iter()
            .map(|v| to.distance(*v))
            .fold(0.0f64, f64::max)
    };
    dir(a, b).max(dir(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn support_ball_exact() {
        let b = ConvexBody::Ball(Ball::new(vec![1.0, 2.0], 3.0).unwrap());
        assert!(close(b.support(&[1.0, 0.0]).unwrap(), 4.0, 1e-12));
    }

    #[test]
    fn support_rect_axis() {
        let r: ConvexBody = Polygon::rect(0.0, 2.0, 0.0, 4.0).unwrap().into();
        assert!(close(r.support(&[0.0, 1.0]).unwrap(), 4.0, 1e-12));
    }

    #[test]
    fn support_triangle_diagonal() {
        // Oracle: straight vertex enumeration of <u, v>.
        let vs = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let t: ConvexBody = Polygon::from_points(&vs).unwrap().into();
        let u = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let oracle = vs
            .iter()
            .map(|v| v[0] * u[0] + v[1] * u[1])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(close(t.support(&u).unwrap(), oracle, 1e-12));
        assert!(close(oracle, 1.0 / 2f64.sqrt(), 1e-12));
    }

    #[test]
    fn distance_ball_outside() {
        let b = ConvexBody::Ball(Ball::new(vec![0.0, 0.0], 1.0).unwrap());
        assert!(close(b.distance_to(&[3.0, 0.0]).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn distance_inside_zero() {
        let r: ConvexBody = Polygon::rect(0.0, 2.0, 0.0, 4.0).unwrap().into();
        assert_eq!(r.distance_to(&[1.0, 1.0]).unwrap(), 0.0);
        assert!(r.contains(&[1.0, 1.0]).unwrap());
    }

    #[test]
    fn distance_triangle_hypotenuse() {
        let t = Polygon::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        // Projection of (1,1) onto the segment (1,0)-(0,1) is (1/2,1/2).
        let (d, q) = t.nearest([1.0, 1.0]);
        assert!(close(d, 2f64.sqrt() / 2.0, 1e-12));
        assert!(close(q[0], 0.5, 1e-12) && close(q[1], 0.5, 1e-12));
    }

    #[test]
    fn nearest_point_membership() {
        let bodies: Vec<ConvexBody> = vec![
            Polygon::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
                .unwrap()
                .into(),
            Polygon::rect(-1.0, 1.0, -2.0, 5.0).unwrap().into(),
            ConvexBody::Ball(Ball::new(vec![0.5, -0.5], 2.0).unwrap()),
        ];
        for body in &bodies {
            for p in [[3.0, 4.0], [-2.0, 1.0], [0.2, 0.2], [10.0, -10.0]] {
                let q = body.nearest_point(&p).unwrap();
                assert!(body.contains(&q).unwrap());
            }
        }
    }

    #[test]
    fn clamp_anchor_inside_is_singleton() {
        let r: ConvexBody = Polygon::rect(0.0, 2.0, 0.0, 4.0).unwrap().into();
        let c = clamp_intersection(&r, &[1.0, 1.0]).unwrap();
        match c {
            ConvexBody::Polygon(p) => {
                assert_eq!(p.vertices().len(), 1);
                assert!(close(p.vertices()[0][0], 1.0, 1e-12));
            }
            _ => panic!("expected polygon"),
        }
    }

    #[test]
    fn clamp_far_anchor_recovers_body() {
        // All of B((0,0),1) lies within distance 4 = 2 d((3,0), K) of (3,0).
        let k: ConvexBody = Polygon::ball([0.0, 0.0], 1.0, N_POLY).unwrap().into();
        let c = clamp_intersection(&k, &[3.0, 0.0]).unwrap();
        assert!(hausdorff(&c, &k).unwrap() <= 1e-6);
    }

    #[test]
    fn clamp_segment_interval() {
        // K = {0} x [0, 6], anchor (0, -2): d = 2, so P = {0} x [0, 2].
        let k: ConvexBody = Polygon::from_points(&[[0.0, 0.0], [0.0, 6.0]]).unwrap().into();
        let c = clamp_intersection(&k, &[0.0, -2.0]).unwrap();
        let expect: ConvexBody = Polygon::from_points(&[[0.0, 0.0], [0.0, 2.0]]).unwrap().into();
        assert!(hausdorff(&c, &expect).unwrap() <= 1e-9);
    }

    #[test]
    fn steiner_ball_center() {
        let b = Polygon::ball([1.0, 2.0], 3.0, N_POLY).unwrap();
        let s = b.steiner();
        assert!(close(s[0], 1.0, 1e-8) && close(s[1], 2.0, 1e-8));
    }

    #[test]
    fn steiner_rect_center() {
        let r = Polygon::rect(0.0, 2.0, 0.0, 4.0).unwrap();
        let s = r.steiner();
        assert!(close(s[0], 1.0, 1e-12) && close(s[1], 2.0, 1e-12));
    }

    #[test]
    fn steiner_triangle_value() {
        // Quadrature oracle at 1e5 nodes against the closed-form cone sums.
        let t = Polygon::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = t.steiner();
        let tq = t.clone();
        let q = steiner_quadrature_2d(&move |u| tq.support(u), 100_000);
        assert!(close(s[0], q[0], 1e-5) && close(s[1], q[1], 1e-5));
        assert!(close(s[0], 0.375, 1e-5) && close(s[1], 0.375, 1e-5));
    }

    #[test]
    fn steiner_segment_midpoint() {
        let seg = Polygon::from_points(&[[0.0, 0.0], [0.0, 2.0]]).unwrap();
        let s = seg.steiner();
        assert!(close(s[0], 0.0, 1e-12) && close(s[1], 1.0, 1e-12));
    }

    #[test]
    fn steiner_point_membership_assorted() {
        let bodies = [
            Polygon::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap(),
            Polygon::from_points(&[[0.0, 0.0], [3.0, 1.0], [2.5, 4.0], [-1.0, 2.0]]).unwrap(),
            Polygon::rect(-5.0, -1.0, 2.0, 3.0).unwrap(),
        ];
        for b in bodies {
            let s = b.steiner();
            assert!(b.contains(s), "steiner point left {:?}", b.vertices());
        }
    }

    #[test]
    fn steiner_qmc_ball_center() {
        let ball = Ball::new(vec![0.5, -1.0, 2.0], 1.5).unwrap();
        let s = steiner_qmc(&|u: &[f64]| ball.support(u), 3, 4096, 5e-3).unwrap();
        for (si, ci) in s.iter().zip(&ball.center) {
            assert!(close(*si, *ci, 1e-2));
        }
    }

    #[test]
    fn steiner_from_support_refinement() {
        // Generic support-oracle path with refinement doubling.
        let ball = Ball::new(vec![0.7, -1.3], 2.0).unwrap();
        let s = steiner_from_support_2d(&move |u: P2| ball.support(&u), 5.0).unwrap();
        assert!(close(s[0], 0.7, 1e-6) && close(s[1], -1.3, 1e-6));
    }

    #[test]
    fn hausdorff_mixed_ball_polygon() {
        // Ball against its own polygonization: within the sampling bias.
        let b = ConvexBody::Ball(Ball::new(vec![0.5, 0.5], 1.0).unwrap());
        let p: ConvexBody = Polygon::ball([0.5, 0.5], 1.0, N_POLY).unwrap().into();
        assert!(hausdorff(&b, &p).unwrap() <= 1e-4);
        // Shifted ball versus the polygon: close to the exact distance 0.5.
        let b2 = ConvexBody::Ball(Ball::new(vec![1.0, 0.5], 1.0).unwrap());
        let h = hausdorff(&b2, &p).unwrap();
        assert!(close(h, 0.5, 1e-3), "h={h}");
    }

    #[test]
    fn hausdorff_identity_and_balls() {
        let k: ConvexBody = Polygon::rect(0.0, 1.0, 0.0, 1.0).unwrap().into();
        assert_eq!(hausdorff(&k, &k).unwrap(), 0.0);
        let b1 = ConvexBody::Ball(Ball::new(vec![0.0, 0.0], 1.0).unwrap());
        let b2 = ConvexBody::Ball(Ball::new(vec![0.0, 0.0], 2.0).unwrap());
        assert!(close(hausdorff(&b1, &b2).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn hausdorff_ball_pair_bound() {
        // H(B(x,r), B(y,s)) <= |x-y| + |r-s| on random ball pairs.
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let y = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let r = rng.random_range(0.0..3.0);
            let s = rng.random_range(0.0..3.0);
            let h = hausdorff(
                &ConvexBody::Ball(Ball::new(x.to_vec(), r).unwrap()),
                &ConvexBody::Ball(Ball::new(y.to_vec(), s).unwrap()),
            )
            .unwrap();
            let bound = ((x[0] - y[0]).hypot(x[1] - y[1])) + (r - s).abs();
            assert!(h <= bound + 1e-12);
        }
    }

    #[test]
    fn hull_collinear_degenerates_to_segment() {
        let p = Polygon::from_points(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert_eq!(p.vertices().len(), 2);
    }
}
