//! Numeric kernels on flat `f64` slices: Poincaré-ball operations (Möbius
//! addition, exponential/logarithmic maps at the origin, hyperbolic distance),
//! block-diagonal Givens rotations and the Euclidean flexible addition.
//!
//! Every forward kernel has a matching `*_backward` that *accumulates* the
//! vector-Jacobian product into caller-provided gradient buffers and returns
//! the gradient with respect to the curvature where one exists. Backward
//! kernels recompute the scalar intermediates they need from the inputs, so
//! callers only keep the forward inputs around.
//!
//! No `d × d` matrix is ever materialized; a rotation costs `O(d)`.

use smallvec::SmallVec;

/// Stack buffer for kernel temporaries; spills to the heap above 128 dims.
pub(crate) type Buf = SmallVec<[f64; 128]>;

#[inline]
pub(crate) fn buf(d: usize) -> Buf {
    SmallVec::from_elem(0.0, d)
}

/// Ball guard: points are kept at norm at most `(1 - BALL_EPS) / sqrt(c)`.
pub const BALL_EPS: f64 = 1e-5;
/// Guard for the flexible-addition denominator `1 + <x, y>`.
pub const DEN_EPS: f64 = 1e-6;
/// Upper clamp of every `artanh` argument.
pub const ATANH_MAX: f64 = 1.0 - 1e-10;
/// Below this norm the exp/log maps return their limit (the identity).
pub const MIN_NORM: f64 = 1e-15;

/// Trainable curvature. Stored unconstrained, used through `softplus` so the
/// effective value is always strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    raw: f64,
}

impl Curvature {
    pub fn from_raw(raw: f64) -> Self {
        Curvature { raw }
    }

    /// Inverse softplus; `c` must be positive.
    pub fn from_value(c: f64) -> Self {
        assert!(c > 0.0, "curvature must be positive, got {c}");
        Curvature {
            raw: raw_for_curvature(c),
        }
    }

    pub fn raw(&self) -> f64 {
        self.raw
    }

    pub fn value(&self) -> f64 {
        softplus(self.raw)
    }
}

/// Raw storage value whose softplus equals `c`.
pub fn raw_for_curvature(c: f64) -> f64 {
    // log(exp(c) - 1), written to stay accurate for small and large c
    if c > 30.0 {
        c
    } else {
        c.exp_m1().ln()
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Element-wise scaling used by the flexible addition: either a full
/// d-vector or a single scalar broadcast over all coordinates.
#[derive(Debug, Clone, Copy)]
pub enum Scaling<'a> {
    PerCoord(&'a [f64]),
    Uniform(f64),
}

impl Scaling<'_> {
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Scaling::PerCoord(a) => a[i],
            Scaling::Uniform(a) => *a,
        }
    }
}

/// Gradient destination matching [`Scaling`].
pub enum ScalingGrad<'a> {
    PerCoord(&'a mut [f64]),
    Uniform(&'a mut f64),
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

fn atanh_clamped(u: f64) -> (f64, bool) {
    if u > ATANH_MAX {
        (ATANH_MAX.atanh(), true)
    } else {
        (u.atanh(), false)
    }
}

// ---------------------------------------------------------------------------
// Ball projection

/// Largest admissible norm inside the ball of curvature `c`.
#[inline]
pub fn ball_radius(c: f64) -> f64 {
    (1.0 - BALL_EPS) / c.sqrt()
}

pub fn project_to_ball(x: &[f64], c: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    project_to_ball_in_place(&mut out, c);
    out
}

pub fn project_to_ball_in_place(x: &mut [f64], c: f64) {
    let n = norm(x);
    let max = ball_radius(c);
    if n > max {
        let s = max / n;
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// Backward of [`project_to_ball`] evaluated at the unprojected input `x`.
pub fn project_to_ball_backward(x: &[f64], c: f64, gy: &[f64], gx: &mut [f64]) -> f64 {
    let n = norm(x);
    let max = ball_radius(c);
    if n <= max {
        for (g, &v) in gx.iter_mut().zip(gy) {
            *g += v;
        }
        return 0.0;
    }
    // y = x * max / n
    let s = max / n;
    let xg = dot(x, gy);
    let k = xg / (n * n);
    for i in 0..x.len() {
        gx[i] += s * (gy[i] - k * x[i]);
    }
    // dmax/dc = -max / (2c), y = s x
    -(s * xg) / (2.0 * c)
}

// ---------------------------------------------------------------------------
// Möbius addition

struct MobiusTerms {
    a: f64,
    b: f64,
    den: f64,
    xy: f64,
    x2: f64,
    y2: f64,
}

fn mobius_terms(x: &[f64], y: &[f64], c: f64) -> MobiusTerms {
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let a = 1.0 + 2.0 * c * xy + c * y2;
    let b = 1.0 - c * x2;
    let den = (1.0 + 2.0 * c * xy + c * c * x2 * y2).max(MIN_NORM);
    MobiusTerms {
        a,
        b,
        den,
        xy,
        x2,
        y2,
    }
}

/// Möbius addition `x ⊕_c y`, projected back into the ball.
pub fn mobius_add(x: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    mobius_add_into(x, y, c, &mut out);
    out
}

pub fn mobius_add_into(x: &[f64], y: &[f64], c: f64, out: &mut [f64]) {
    let m = mobius_terms(x, y, c);
    let (a, b) = (m.a / m.den, m.b / m.den);
    for i in 0..x.len() {
        out[i] = a * x[i] + b * y[i];
    }
    project_to_ball_in_place(out, c);
}

/// Accumulates `∂/∂x` and `∂/∂y` of `<gz, x ⊕_c y>`; returns `∂/∂c`.
pub fn mobius_add_backward(
    x: &[f64],
    y: &[f64],
    c: f64,
    gz: &[f64],
    gx: &mut [f64],
    gy: &mut [f64],
) -> f64 {
    let d = x.len();
    let m = mobius_terms(x, y, c);
    let inv = 1.0 / m.den;

    // unprojected sum, needed for the projection Jacobian and for ∂/∂den
    let mut z = buf(d);
    for i in 0..d {
        z[i] = (m.a * x[i] + m.b * y[i]) * inv;
    }
    let mut gzu = buf(d);
    let mut gc = project_to_ball_backward(&z, c, gz, &mut gzu);

    let g_a = dot(&gzu, x) * inv;
    let g_b = dot(&gzu, y) * inv;
    let g_den = -dot(&gzu, &z) * inv;

    // a = 1 + 2c<x,y> + c|y|², b = 1 - c|x|², den = 1 + 2c<x,y> + c²|x|²|y|²
    let c2 = c * c;
    let cx = -2.0 * c * g_b + g_den * 2.0 * c2 * m.y2;
    let cy_x = 2.0 * c * g_a + g_den * 2.0 * c;
    let cy_y = 2.0 * c * g_a + g_den * 2.0 * c2 * m.x2;
    let cx_y = 2.0 * c * g_a + g_den * 2.0 * c;
    for i in 0..d {
        gx[i] += m.a * inv * gzu[i] + cx * x[i] + cx_y * y[i];
        gy[i] += m.b * inv * gzu[i] + cy_x * x[i] + cy_y * y[i];
    }
    gc += g_a * (2.0 * m.xy + m.y2) - g_b * m.x2 + g_den * (2.0 * m.xy + 2.0 * c * m.x2 * m.y2);
    gc
}

// ---------------------------------------------------------------------------
// Exponential / logarithmic maps at the origin

/// `exp_0^c(x) = tanh(√c‖x‖) x / (√c‖x‖)`.
pub fn exp_map0(x: &[f64], c: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    exp_map0_into(x, c, &mut out);
    out
}

pub fn exp_map0_into(x: &[f64], c: f64, out: &mut [f64]) {
    let n = norm(x);
    if n < MIN_NORM {
        out.copy_from_slice(x);
        return;
    }
    let u = c.sqrt() * n;
    let s = u.tanh() / u;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = s * v;
    }
}

pub fn exp_map0_backward(x: &[f64], c: f64, gy: &[f64], gx: &mut [f64]) -> f64 {
    let n = norm(x);
    if n < MIN_NORM {
        for (g, &v) in gx.iter_mut().zip(gy) {
            *g += v;
        }
        return 0.0;
    }
    let sc = c.sqrt();
    let u = sc * n;
    let t = u.tanh();
    let s = t / u;
    // d(tanh u / u)/du
    let ds_du = (u * (1.0 - t * t) - t) / (u * u);
    let xg = dot(x, gy);
    let k = ds_du * sc * xg / n;
    for i in 0..x.len() {
        gx[i] += s * gy[i] + k * x[i];
    }
    ds_du * n / (2.0 * sc) * xg
}

/// `log_0^c(x) = artanh(√c‖x‖) x / (√c‖x‖)`, argument clamped below 1.
pub fn log_map0(x: &[f64], c: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    log_map0_into(x, c, &mut out);
    out
}

pub fn log_map0_into(x: &[f64], c: f64, out: &mut [f64]) {
    let n = norm(x);
    if n < MIN_NORM {
        out.copy_from_slice(x);
        return;
    }
    let u = c.sqrt() * n;
    let (at, _) = atanh_clamped(u);
    let s = at / u;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = s * v;
    }
}

pub fn log_map0_backward(x: &[f64], c: f64, gy: &[f64], gx: &mut [f64]) -> f64 {
    let n = norm(x);
    if n < MIN_NORM {
        for (g, &v) in gx.iter_mut().zip(gy) {
            *g += v;
        }
        return 0.0;
    }
    let sc = c.sqrt();
    let u = sc * n;
    let (at, clamped) = atanh_clamped(u);
    let s = at / u;
    let ds_du = if clamped {
        -at / (u * u)
    } else {
        (u / (1.0 - u * u) - at) / (u * u)
    };
    let xg = dot(x, gy);
    let k = ds_du * sc * xg / n;
    for i in 0..x.len() {
        gx[i] += s * gy[i] + k * x[i];
    }
    ds_du * n / (2.0 * sc) * xg
}

// ---------------------------------------------------------------------------
// Givens rotations

#[inline]
fn unit_pair(a: f64, b: f64) -> (f64, f64, f64) {
    let n = (a * a + b * b).sqrt();
    if n < MIN_NORM {
        (1.0, 0.0, 0.0)
    } else {
        (a / n, b / n, n)
    }
}

/// Block-diagonal rotation: pair `(rot[2i], rot[2i+1])`, normalized to unit
/// length, rotates `(x[2i], x[2i+1])`. Zero pairs act as the identity.
pub fn givens_rotate(rot: &[f64], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    givens_rotate_into(rot, x, &mut out);
    out
}

pub fn givens_rotate_into(rot: &[f64], x: &[f64], out: &mut [f64]) {
    debug_assert!(x.len().is_multiple_of(2) && rot.len() == x.len());
    for ((r, v), o) in rot
        .chunks_exact(2)
        .zip(x.chunks_exact(2))
        .zip(out.chunks_exact_mut(2))
    {
        let (cos, sin, _) = unit_pair(r[0], r[1]);
        o[0] = cos * v[0] - sin * v[1];
        o[1] = sin * v[0] + cos * v[1];
    }
}

pub fn givens_rotate_backward(
    rot: &[f64],
    x: &[f64],
    gy: &[f64],
    grot: &mut [f64],
    gx: &mut [f64],
) {
    for i in (0..x.len()).step_by(2) {
        let (a, b) = (rot[i], rot[i + 1]);
        let (cos, sin, n) = unit_pair(a, b);
        let (x0, x1) = (x[i], x[i + 1]);
        let (g0, g1) = (gy[i], gy[i + 1]);
        gx[i] += cos * g0 + sin * g1;
        gx[i + 1] += -sin * g0 + cos * g1;
        if n >= MIN_NORM {
            let g_cos = g0 * x0 + g1 * x1;
            let g_sin = -g0 * x1 + g1 * x0;
            let n3 = n * n * n;
            let k = (g_cos * b - g_sin * a) / n3;
            grot[i] += b * k;
            grot[i + 1] -= a * k;
        }
    }
}

/// `Rot ⊗_c x = exp_0^c(Rot · log_0^c(x))`, projected into the ball.
pub fn mobius_matvec_rot(rot: &[f64], x: &[f64], c: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    mobius_matvec_rot_into(rot, x, c, &mut out);
    out
}

pub fn mobius_matvec_rot_into(rot: &[f64], x: &[f64], c: f64, out: &mut [f64]) {
    let d = x.len();
    let mut tmp = buf(d);
    log_map0_into(x, c, &mut tmp);
    givens_rotate_into(rot, &tmp, out);
    tmp.copy_from_slice(out);
    exp_map0_into(&tmp, c, out);
    project_to_ball_in_place(out, c);
}

pub fn mobius_matvec_rot_backward(
    rot: &[f64],
    x: &[f64],
    c: f64,
    gy: &[f64],
    grot: &mut [f64],
    gx: &mut [f64],
) -> f64 {
    let d = x.len();
    let mut l = buf(d);
    log_map0_into(x, c, &mut l);
    let mut rl = buf(d);
    givens_rotate_into(rot, &l, &mut rl);
    let mut e = buf(d);
    exp_map0_into(&rl, c, &mut e);

    let mut ge = buf(d);
    let mut gc = project_to_ball_backward(&e, c, gy, &mut ge);
    let mut grl = buf(d);
    gc += exp_map0_backward(&rl, c, &ge, &mut grl);
    let mut gl = buf(d);
    givens_rotate_backward(rot, &l, &grl, grot, &mut gl);
    gc += log_map0_backward(x, c, &gl, gx);
    gc
}

// ---------------------------------------------------------------------------
// Flexible addition

#[inline]
fn guard_den(s: f64) -> (f64, bool) {
    if s.abs() < DEN_EPS {
        (if s < 0.0 { -DEN_EPS } else { DEN_EPS }, true)
    } else {
        (s, false)
    }
}

/// `α ⊙ (x + y) / (1 + <x, y>)`.
pub fn flexible_add(x: &[f64], y: &[f64], alpha: Scaling<'_>) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    flexible_add_into(x, y, alpha, &mut out);
    out
}

pub fn flexible_add_into(x: &[f64], y: &[f64], alpha: Scaling<'_>, out: &mut [f64]) {
    let (den, _) = guard_den(1.0 + dot(x, y));
    let inv = 1.0 / den;
    let sums = out.iter_mut().zip(x.iter().zip(y));
    match alpha {
        Scaling::PerCoord(a) => {
            for ((o, (xi, yi)), ai) in sums.zip(a) {
                *o = ai * (xi + yi) * inv;
            }
        }
        Scaling::Uniform(a) => {
            let k = a * inv;
            for (o, (xi, yi)) in sums {
                *o = k * (xi + yi);
            }
        }
    }
}

pub fn flexible_add_backward(
    x: &[f64],
    y: &[f64],
    alpha: Scaling<'_>,
    gz: &[f64],
    gx: &mut [f64],
    gy: &mut [f64],
    galpha: ScalingGrad<'_>,
) {
    let d = x.len();
    let (den, guarded) = guard_den(1.0 + dot(x, y));
    let inv = 1.0 / den;
    // <gz, z> where z = α (x + y) / den
    let mut gz_z = 0.0;
    match galpha {
        ScalingGrad::PerCoord(ga) => {
            for i in 0..d {
                let u = (x[i] + y[i]) * inv;
                ga[i] += gz[i] * u;
                gz_z += gz[i] * alpha.at(i) * u;
            }
        }
        ScalingGrad::Uniform(ga) => {
            let mut acc = 0.0;
            for i in 0..d {
                let u = (x[i] + y[i]) * inv;
                acc += gz[i] * u;
                gz_z += gz[i] * alpha.at(i) * u;
            }
            *ga += acc;
        }
    }
    let g_s = if guarded { 0.0 } else { -gz_z * inv };
    for i in 0..d {
        let gu = gz[i] * alpha.at(i) * inv;
        gx[i] += gu + g_s * y[i];
        gy[i] += gu + g_s * x[i];
    }
}

/// `‖(-q) ⊕_α t‖`, computed in one pass without materializing the sum.
pub fn flexible_residual_norm(q: &[f64], t: &[f64], alpha: Scaling<'_>) -> f64 {
    let (qt, s) = residual_sums(q, t, alpha);
    let (den, _) = guard_den(1.0 - qt);
    s.sqrt() / den.abs()
}

/// `(<q, t>, Σ αᵢ² (tᵢ - qᵢ)²)`
#[inline]
fn residual_sums(q: &[f64], t: &[f64], alpha: Scaling<'_>) -> (f64, f64) {
    let mut qt = 0.0;
    let mut s = 0.0;
    match alpha {
        Scaling::PerCoord(a) => {
            for i in 0..q.len() {
                let u = t[i] - q[i];
                qt += q[i] * t[i];
                s += a[i] * a[i] * u * u;
            }
        }
        Scaling::Uniform(a) => {
            for i in 0..q.len() {
                let u = t[i] - q[i];
                qt += q[i] * t[i];
                s += u * u;
            }
            s *= a * a;
        }
    }
    (qt, s)
}

/// Accumulates gradients of `g · ‖(-q) ⊕_α t‖`. Returns the norm.
pub fn flexible_residual_norm_backward(
    q: &[f64],
    t: &[f64],
    alpha: Scaling<'_>,
    g: f64,
    gq: &mut [f64],
    gt: &mut [f64],
    galpha: ScalingGrad<'_>,
) -> f64 {
    let (qt, s) = residual_sums(q, t, alpha);
    let (den, guarded) = guard_den(1.0 - qt);
    let n = s.sqrt() / den.abs();
    if n < MIN_NORM {
        return n;
    }
    // z = α ⊙ u / den with u = t - q; ∂n/∂z = z / n
    let k = g / (n * den * den);
    let g_s = if guarded { 0.0 } else { -g * n / den };
    match (alpha, galpha) {
        (Scaling::PerCoord(a), ScalingGrad::PerCoord(ga)) => {
            for i in 0..q.len() {
                let u = t[i] - q[i];
                let w = k * a[i] * a[i] * u;
                gq[i] -= w + g_s * t[i];
                gt[i] += w - g_s * q[i];
                ga[i] += k * a[i] * u * u;
            }
        }
        (alpha, mut galpha) => {
            let mut acc = 0.0;
            for i in 0..q.len() {
                let u = t[i] - q[i];
                let a = alpha.at(i);
                let w = k * a * a * u;
                gq[i] -= w + g_s * t[i];
                gt[i] += w - g_s * q[i];
                match &mut galpha {
                    ScalingGrad::PerCoord(ga) => ga[i] += k * a * u * u,
                    ScalingGrad::Uniform(_) => acc += k * a * u * u,
                }
            }
            if let ScalingGrad::Uniform(ga) = galpha {
                *ga += acc;
            }
        }
    }
    n
}

// ---------------------------------------------------------------------------
// Hyperbolic distance

/// `(2/√c) artanh(√c ‖(-x) ⊕_c y‖)`.
pub fn hyperbolic_distance(x: &[f64], y: &[f64], c: f64) -> f64 {
    let neg: Buf = x.iter().map(|v| -v).collect();
    let mut z = buf(x.len());
    mobius_add_into(&neg, y, c, &mut z);
    distance_from_sum(&z, c)
}

/// Distance given an already computed `(-x) ⊕_c y`.
pub(crate) fn distance_from_sum(z: &[f64], c: f64) -> f64 {
    let sc = c.sqrt();
    let (at, _) = atanh_clamped(sc * norm(z));
    2.0 * at / sc
}

/// Accumulates gradients of `g · d_c(x, y)`; returns `∂/∂c`.
pub fn hyperbolic_distance_backward(
    x: &[f64],
    y: &[f64],
    c: f64,
    g: f64,
    gx: &mut [f64],
    gy: &mut [f64],
) -> f64 {
    let d = x.len();
    let neg: Buf = x.iter().map(|v| -v).collect();
    let mut z = buf(d);
    mobius_add_into(&neg, y, c, &mut z);
    let n = norm(&z);
    let sc = c.sqrt();
    let u = sc * n;
    let (at, clamped) = atanh_clamped(u);

    // d = 2 artanh(√c n) / √c
    let dd_dn = if clamped { 0.0 } else { 2.0 / (1.0 - u * u) };
    let mut gc = -g * at / (c * sc);
    if !clamped {
        gc += g * n / (c * (1.0 - u * u));
    }
    if n < MIN_NORM {
        return gc;
    }
    let k = g * dd_dn / n;
    let gz: Buf = z.iter().map(|v| k * v).collect();
    let mut gneg = buf(d);
    gc += mobius_add_backward(&neg, y, c, &gz, &mut gneg, gy);
    for i in 0..d {
        gx[i] -= gneg[i];
    }
    gc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mobius_add_identity_and_inverse() {
        let y = [0.1, -0.2, 0.3, 0.05];
        let z = mobius_add(&[0.0; 4], &y, 0.7);
        for (a, b) in z.iter().zip(&y) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let x = [0.2, 0.1, -0.4, 0.3];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let z = mobius_add(&x, &neg, 1.3);
        assert!(norm(&z) < 1e-15);
    }

    #[test]
    fn mobius_add_scalar_example() {
        // numerator 2.18 * 0.3, denominator 1.1881
        let z = mobius_add(&[0.3, 0.0], &[0.3, 0.0], 1.0);
        assert_abs_diff_eq!(z[0], 2.18 * 0.3 / 1.1881, epsilon = 1e-12);
        assert_abs_diff_eq!(z[0], 0.550459, epsilon = 1e-6);
        assert_eq!(z[1], 0.0);
    }

    #[test]
    fn exp_log_examples() {
        assert_eq!(exp_map0(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(log_map0(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
        let e = exp_map0(&[1.0, 0.0], 1.0);
        assert_abs_diff_eq!(e[0], 1.0f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(e[0], 0.761594, epsilon = 1e-6);
        let l = log_map0(&[1.0f64.tanh(), 0.0], 1.0);
        assert_abs_diff_eq!(l[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn givens_examples() {
        let x = [0.3, -1.2, 2.0, 0.5];
        assert_eq!(givens_rotate(&[1.0, 0.0, 1.0, 0.0], &x), x.to_vec());
        let y = givens_rotate(&[0.0, 1.0], &[1.0, 0.0]);
        assert_abs_diff_eq!(y[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], 1.0, epsilon = 1e-15);
        // unnormalized pair acts as the same rotation
        let y2 = givens_rotate(&[0.0, 5.0], &[1.0, 0.0]);
        assert_abs_diff_eq!(y2[1], 1.0, epsilon = 1e-15);
        // zero pair falls back to the identity
        assert_eq!(givens_rotate(&[0.0, 0.0], &[0.4, 0.7]), vec![0.4, 0.7]);
    }

    #[test]
    fn matvec_rot_fixed_points() {
        let x = [0.2, -0.1, 0.05, 0.4];
        let y = mobius_matvec_rot(&[1.0, 0.0, 1.0, 0.0], &x, 1.0);
        for (a, b) in y.iter().zip(&x) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_eq!(
            mobius_matvec_rot(&[0.3, 0.8, -1.0, 0.2], &[0.0; 4], 2.0),
            vec![0.0; 4]
        );
    }

    #[test]
    fn flexible_add_examples() {
        let x = [0.4, -0.7];
        assert_eq!(
            flexible_add(&x, &[0.0, 0.0], Scaling::Uniform(1.0)),
            x.to_vec()
        );
        assert_eq!(
            flexible_add(&x, &[0.0, 0.0], Scaling::PerCoord(&[2.0, 2.0])),
            vec![0.8, -1.4]
        );
        let z = flexible_add(&[0.3, 0.0], &[0.3, 0.0], Scaling::Uniform(1.0));
        assert_abs_diff_eq!(z[0], 0.6 / 1.09, epsilon = 1e-15);
        assert_abs_diff_eq!(z[0], 0.550459, epsilon = 1e-6);
    }

    #[test]
    fn flexible_add_guards_vanishing_denominator() {
        // <x, y> = -1 exactly
        let z = flexible_add(&[1.0, 0.0], &[-1.0, 0.5], Scaling::Uniform(1.0));
        assert!(z.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(z[1], 0.5 / DEN_EPS, epsilon = 1e-6);
    }

    #[test]
    fn distance_examples() {
        let x = [0.1, 0.2, -0.3, 0.05];
        assert_abs_diff_eq!(hyperbolic_distance(&x, &x, 1.0), 0.0, epsilon = 1e-12);
        let d = hyperbolic_distance(&[0.0, 0.0], &[0.5, 0.0], 1.0);
        assert_abs_diff_eq!(d, 2.0 * 0.5f64.atanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(d, 1.098612, epsilon = 1e-6);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_ball(&[0.1, 0.0], 1.0), vec![0.1, 0.0]);
        let p = project_to_ball(&[2.0, 0.0], 1.0);
        assert_abs_diff_eq!(p[0], 1.0 - BALL_EPS, epsilon = 1e-15);
        assert!(norm_sq(&project_to_ball(&[3.0, 4.0], 4.0)) < 0.25);
    }

    #[test]
    fn curvature_roundtrip() {
        for c in [1e-3, 0.5, 1.0, 7.0, 50.0] {
            let k = Curvature::from_value(c);
            assert_abs_diff_eq!(k.value(), c, epsilon = 1e-9 * c.max(1.0));
        }
        assert!(Curvature::from_raw(-800.0).value() >= 0.0);
    }
}
