//! The straightening change of coordinates.
//!
//! `φ(x, z) = (ξ, z)` where `ξ` is the `x`-block of the flow of
//! `−Σ zᵏ g_k` started at `(x, z)` and run for unit time; the `z`-block of
//! that flow lands exactly on `0`. `φ⁻¹(ξ, η)` runs `+Σ ηᵏ g_k` from
//! `(ξ, 0)`. When the `g_k` commute, `∇φ·g_α = e_{n+α}` and the drift
//! becomes `F = (F̃, 0)` with `F̃ = ∇ₓφ·f̃`.
//!
//! All flows are fixed-step RK4 with `steps` steps per unit time.
//! Jacobians come from the variational equation integrated alongside.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, VarId};
use crate::ode::Rk4;
use crate::system::SystemSpec;

pub const DEFAULT_FLOW_STEPS: usize = 200;
const MIN_FLOW_STEPS: usize = 10;
const CACHE_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    Off,
    /// Exact-input memoization of chart evaluations.
    Memo,
}

/// `φ⁻¹` at a point together with the Jacobians needed to push fields forward.
#[derive(Debug, Clone)]
pub struct Chart {
    /// Reconstructed state `x` with `(x, η) = φ⁻¹(ξ, η)`.
    pub x: Vec<f64>,
    /// `∂x/∂ξ`, n×n.
    pub dx_dxi: DMatrix<f64>,
    /// `∇ₓφ(x, η) = (∂x/∂ξ)⁻¹`, n×n.
    pub grad_x_phi: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sens {
    None,
    Start,
    StartAndDelta,
}

struct FlowOut {
    y: Vec<f64>,
    /// ∂y(1)/∂y(0), row-major (n+m)².
    m: Vec<f64>,
    /// ∂y(1)/∂δ, row-major (n+m)×m.
    s: Vec<f64>,
}

/// Flow settings and Jacobian tables for one system.
pub struct TransformContext<'s> {
    spec: &'s SystemSpec,
    steps: usize,
    policy: CachePolicy,
    /// `jac_g[k][i][j] = ∂g̃_k^i / ∂y_j`, `i < n`, `j < n + m`.
    jac_g: Vec<Vec<Vec<Expr>>>,
    cache: Mutex<HashMap<Vec<u64>, Arc<Chart>>>,
}

impl<'s> TransformContext<'s> {
    pub fn new(spec: &'s SystemSpec) -> Self {
        let (n, m) = (spec.n(), spec.m());
        let jac_g = spec
            .impulses()
            .iter()
            .map(|g| {
                (0..n)
                    .map(|i| (0..n + m).map(|j| g.components()[i].diff(VarId(j))).collect())
                    .collect()
            })
            .collect();
        Self {
            spec,
            steps: DEFAULT_FLOW_STEPS,
            policy: CachePolicy::Memo,
            jac_g,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        if steps < MIN_FLOW_STEPS {
            return Err(Error::invariant(
                "steps",
                format!("flow step count must be at least {MIN_FLOW_STEPS}"),
            ));
        }
        self.steps = steps;
        self.clear_cache();
        Ok(self)
    }

    pub fn with_cache(mut self, policy: CachePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn spec(&self) -> &'s SystemSpec {
        self.spec
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache poisoned").clear();
    }

    fn dims(&self) -> (usize, usize) {
        (self.spec.n(), self.spec.m())
    }

    /// Integrates `ẏ = Σ δᵏ g_k(y)` over unit time from `start = (x, z)`.
    fn flow(&self, start: &[f64], delta: &[f64], sens: Sens) -> Result<FlowOut> {
        let (n, m) = self.dims();
        let d = n + m;
        let with_m = sens != Sens::None;
        let with_s = sens == Sens::StartAndDelta;
        let len = d + if with_m { d * d } else { 0 } + if with_s { d * m } else { 0 };

        let mut state = vec![0.0; len];
        state[..d].copy_from_slice(start);
        if with_m {
            for i in 0..d {
                state[d + i * d + i] = 1.0;
            }
        }

        let l = self.spec.l();
        let mut vals = vec![f64::NAN; d + l];
        let mut g_val = vec![0.0; m * n];
        let mut a_mat = vec![0.0; n * d];
        let h = 1.0 / self.steps as f64;
        let mut rk = Rk4::new(len);

        for _ in 0..self.steps {
            rk.step(&mut state, h, |_, y, out| {
                vals[..d].copy_from_slice(&y[..d]);
                for (k, g) in self.spec.impulses().iter().enumerate() {
                    for i in 0..n {
                        g_val[k * n + i] = g.components()[i].eval(&vals)?;
                    }
                }
                for i in 0..n {
                    out[i] = (0..m).map(|k| delta[k] * g_val[k * n + i]).sum();
                }
                out[n..d].copy_from_slice(delta);
                if !with_m {
                    return Ok(());
                }
                // A = Σ δᵏ ∇g_k, only the first n rows are nonzero.
                a_mat.iter_mut().for_each(|v| *v = 0.0);
                for (k, jac) in self.jac_g.iter().enumerate() {
                    if delta[k] == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        for j in 0..d {
                            let e = &jac[i][j];
                            if !e.is_zero() {
                                a_mat[i * d + j] += delta[k] * e.eval(&vals)?;
                            }
                        }
                    }
                }
                let (mo, rest) = out[d..].split_at_mut(d * d);
                let mi = &y[d..d + d * d];
                for i in 0..d {
                    for c in 0..d {
                        mo[i * d + c] = if i < n {
                            (0..d).map(|j| a_mat[i * d + j] * mi[j * d + c]).sum()
                        } else {
                            0.0
                        };
                    }
                }
                if with_s {
                    let si = &y[d + d * d..];
                    for i in 0..d {
                        for k in 0..m {
                            let gk = if i < n {
                                g_val[k * n + i]
                            } else if i - n == k {
                                1.0
                            } else {
                                0.0
                            };
                            let lin: f64 = if i < n {
                                (0..d).map(|j| a_mat[i * d + j] * si[j * m + k]).sum()
                            } else {
                                0.0
                            };
                            rest[i * m + k] = lin + gk;
                        }
                    }
                }
                Ok(())
            })?;
        }

        let y = state[..d].to_vec();
        let mmat = if with_m {
            state[d..d + d * d].to_vec()
        } else {
            Vec::new()
        };
        let s = if with_s {
            state[d + d * d..].to_vec()
        } else {
            Vec::new()
        };
        Ok(FlowOut { y, m: mmat, s })
    }

    fn check_lens(&self, x: &[f64], z: &[f64]) -> Result<()> {
        let (n, m) = self.dims();
        if x.len() != n || z.len() != m {
            return Err(Error::Dimension(format!(
                "expected ({n}, {m}) components, got ({}, {})",
                x.len(),
                z.len()
            )));
        }
        Ok(())
    }

    /// `x`-block of the flow of `Σ δᵏ g_k` from `(x, z_start)`: slides `x`
    /// along its leaf from control value `z_start` to `z_start + δ`.
    pub fn shift(&self, x: &[f64], z_start: &[f64], delta: &[f64]) -> Result<Vec<f64>> {
        self.check_lens(x, z_start)?;
        let start: Vec<f64> = x.iter().chain(z_start).copied().collect();
        let mut y = self.flow(&start, delta, Sens::None)?.y;
        y.truncate(x.len());
        Ok(y)
    }

    fn shift_with_jacobian(&self, x: &[f64], z_start: &[f64], delta: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let (n, m) = self.dims();
        let d = n + m;
        let start: Vec<f64> = x.iter().chain(z_start).copied().collect();
        let out = self.flow(&start, delta, Sens::Start)?;
        let jac = DMatrix::from_fn(n, n, |i, j| out.m[i * d + j]);
        Ok((out.y[..n].to_vec(), jac))
    }

    /// `φ(x, z) = (ξ, z)`.
    pub fn phi(&self, x: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_lens(x, z)?;
        let n = x.len();
        let start: Vec<f64> = x.iter().chain(z).copied().collect();
        let delta: Vec<f64> = z.iter().map(|v| -v).collect();
        let out = self.flow(&start, &delta, Sens::None)?;
        let landing = out.y[n..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if landing > 1e-12 * (1.0 + z.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
            return Err(Error::NonFinite);
        }
        Ok((out.y[..n].to_vec(), z.to_vec()))
    }

    /// `φ⁻¹(ξ, η) = (x, η)`.
    pub fn phi_inverse(&self, xi: &[f64], eta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_lens(xi, eta)?;
        let zero = vec![0.0; eta.len()];
        Ok((self.shift(xi, &zero, eta)?, eta.to_vec()))
    }

    /// Jacobian of `φ` at `(x, z)`, `(n+m)²` with bottom rows `(0 | I)`.
    pub fn dphi(&self, x: &[f64], z: &[f64]) -> Result<DMatrix<f64>> {
        self.check_lens(x, z)?;
        let (n, m) = self.dims();
        let d = n + m;
        let start: Vec<f64> = x.iter().chain(z).copied().collect();
        let delta: Vec<f64> = z.iter().map(|v| -v).collect();
        let out = self.flow(&start, &delta, Sens::StartAndDelta)?;
        // ξ(x, z) = Y(x, z; δ = −z): ∂ξ/∂z = ∂Y/∂z − ∂Y/∂δ.
        Ok(DMatrix::from_fn(d, d, |i, j| {
            if i >= n {
                return if i == j { 1.0 } else { 0.0 };
            }
            if j < n {
                out.m[i * d + j]
            } else {
                out.m[i * d + j] - out.s[i * m + (j - n)]
            }
        }))
    }

    /// `φ⁻¹(ξ, η)` with `∂x/∂ξ` and its inverse `∇ₓφ`. Memoized on exact inputs.
    pub fn chart(&self, xi: &[f64], eta: &[f64]) -> Result<Arc<Chart>> {
        self.check_lens(xi, eta)?;
        let key: Option<Vec<u64>> =
            (self.policy == CachePolicy::Memo).then(|| xi.iter().chain(eta).map(|v| v.to_bits()).collect());
        if let Some(k) = &key {
            if let Some(c) = self.cache.lock().expect("cache poisoned").get(k) {
                return Ok(Arc::clone(c));
            }
        }
        let zero = vec![0.0; eta.len()];
        let (x, dx_dxi) = self.shift_with_jacobian(xi, &zero, eta)?;
        let grad_x_phi = dx_dxi
            .clone()
            .try_inverse()
            .ok_or(Error::SingularJacobian(f64::INFINITY))?;
        let chart = Arc::new(Chart { x, dx_dxi, grad_x_phi });
        if let Some(k) = key {
            let mut cache = self.cache.lock().expect("cache poisoned");
            if cache.len() >= CACHE_LIMIT {
                cache.clear();
            }
            cache.insert(k, Arc::clone(&chart));
        }
        Ok(chart)
    }

    /// Transformed drift `F̃(ξ, η, a) = ∇ₓφ(x, η)·f̃(x, η, a)` with `(x, η) = φ⁻¹(ξ, η)`.
    pub fn transformed_f(&self, xi: &[f64], eta: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let chart = self.chart(xi, eta)?;
        self.push_drift(&chart, eta, a)
    }

    pub(crate) fn push_drift(&self, chart: &Chart, eta: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let n = self.spec.n();
        let f = self.spec.eval_aug_f(&chart.x, eta, a)?;
        Ok((0..n)
            .map(|i| (0..n).map(|j| chart.grad_x_phi[(i, j)] * f[j]).sum())
            .collect())
    }

    /// Full transformed drift `F = ∇φ·f` in `ℝⁿ⁺ᵐ` computed through [`dphi`](Self::dphi).
    /// Fails with [`Error::FlowBox`] if the `z`-block is not zero to 1e-10.
    pub fn transformed_field(&self, xi: &[f64], eta: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let (x, z) = self.phi_inverse(xi, eta)?;
        let jac = self.dphi(&x, &z)?;
        let f = self.spec.eval_aug_f(&x, &z, a)?;
        let big = &jac * nalgebra::DVector::from_vec(f);
        let n = self.spec.n();
        let zblock = big.rows(n, self.spec.m()).amax();
        if zblock > 1e-10 {
            return Err(Error::FlowBox(zblock));
        }
        Ok(big.iter().copied().collect())
    }

    /// Flow-box audit: `max ‖∇φ·g_α − e_{n+α}‖∞` over samples and `α`.
    pub fn verify_flowbox(&self, samples: &[(Vec<f64>, Vec<f64>)], tol: f64) -> FlowboxReport {
        let (n, m) = self.dims();
        let mut per_field = vec![0.0f64; m];
        let mut worst: Option<(usize, usize)> = None;
        let mut max_residual = 0.0f64;
        let mut failures = Vec::new();
        for (k, (x, z)) in samples.iter().enumerate() {
            let res = (|| -> Result<Vec<f64>> {
                let jac = self.dphi(x, z)?;
                (0..m)
                    .map(|alpha| {
                        let g = self.spec.eval_aug_g(alpha + 1, x, z)?;
                        let pushed = &jac * nalgebra::DVector::from_vec(g);
                        Ok(pushed
                            .iter()
                            .enumerate()
                            .map(|(i, v)| (v - if i == n + alpha { 1.0 } else { 0.0 }).abs())
                            .fold(0.0, f64::max))
                    })
                    .collect()
            })();
            match res {
                Ok(r) => {
                    for (alpha, v) in r.into_iter().enumerate() {
                        per_field[alpha] = per_field[alpha].max(v);
                        if worst.is_none() || v > max_residual {
                            max_residual = v;
                            worst = Some((alpha + 1, k));
                        }
                    }
                }
                Err(e) => failures.push((k, e.to_string())),
            }
        }
        FlowboxReport {
            tol,
            samples: samples.len(),
            max_residual,
            per_field,
            worst_field: worst.map(|w| w.0),
            worst_sample: worst.map(|w| w.1),
            failures,
            pass: max_residual <= tol && worst.is_some(),
        }
    }

    /// The `u₂`-transport of the drift at `(x, u₁, a)`.
    ///
    /// `x` is slid along its leaf from control value `u₁` to `u₂`, the drift
    /// is evaluated there, and the result is pulled back with the Jacobian of
    /// the reverse slide. For impulse fields independent of `u` this is
    /// literally `∇ₓφ(φ(x, u₁−u₂), u₂−u₁)·f̃(φ(x, u₁−u₂), u₂, a)`.
    pub fn transport(&self, x: &[f64], u1: &[f64], u2: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let undefined = |e: Error| match e {
            Error::Domain(msg) => Error::TransportUndefined(msg),
            Error::NonFinite => Error::TransportUndefined("flow left the domain".into()),
            other => other,
        };
        let forward: Vec<f64> = u2.iter().zip(u1).map(|(b, a)| b - a).collect();
        let back: Vec<f64> = forward.iter().map(|v| -v).collect();
        let moved = self.shift(x, u1, &forward).map_err(undefined)?;
        let (_, jac) = self.shift_with_jacobian(&moved, u2, &back).map_err(undefined)?;
        let f = self.spec.eval_aug_f(&moved, u2, a).map_err(undefined)?;
        let n = x.len();
        Ok((0..n).map(|i| (0..n).map(|j| jac[(i, j)] * f[j]).sum()).collect())
    }

    /// `∇Ψ(ξ, η)` for `Ψ = γ∘φ⁻¹`, as a row of length `n + m`.
    pub fn grad_psi(&self, xi: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
        let (x, z) = self.phi_inverse(xi, eta)?;
        let jac = self.dphi(&x, &z)?;
        let cond = condition_number(&jac);
        if !(cond <= 1e12) {
            return Err(Error::SingularJacobian(cond));
        }
        let inv = jac.try_inverse().ok_or(Error::SingularJacobian(cond))?;
        let grad = self.spec.grad_cost(&x, &z)?;
        let d = grad.len();
        Ok((0..d).map(|j| (0..d).map(|i| grad[i] * inv[(i, j)]).sum()).collect())
    }
}

pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowboxReport {
    pub tol: f64,
    pub samples: usize,
    pub max_residual: f64,
    /// Max residual per impulse field, in field order.
    pub per_field: Vec<f64>,
    /// One-based.
    pub worst_field: Option<usize>,
    pub worst_sample: Option<usize>,
    pub failures: Vec<(usize, String)>,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::SystemDocument;

    fn spec(n: usize, m: usize, f: &[&str], g: &[&[&str]]) -> SystemSpec {
        SystemSpec::from_document(&SystemDocument {
            n,
            m,
            l: 1,
            horizon: 1.0,
            x0: vec![0.5; n],
            u0: vec![0.0; m],
            u_box: vec![[-2.0, 2.0]; m],
            a_box: vec![[-1.0, 1.0]],
            f: f.iter().map(|s| s.to_string()).collect(),
            g: g.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
            gamma: "x1".into(),
        })
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn phi_on_closed_forms() {
        let s = spec(1, 1, &["a1"], &[&["1"]]);
        let ctx = TransformContext::new(&s);
        let (xi, eta) = ctx.phi(&[3.0], &[1.0]).unwrap();
        assert!(close(&xi, &[2.0], 1e-13) && eta == vec![1.0]);
        let (x, _) = ctx.phi_inverse(&[2.0], &[1.0]).unwrap();
        assert!(close(&x, &[3.0], 1e-13));

        let s = spec(1, 1, &["a1"], &[&["x1"]]);
        let ctx = TransformContext::new(&s);
        let ln2 = 2f64.ln();
        let (xi, _) = ctx.phi(&[2.0], &[ln2]).unwrap();
        assert!(close(&xi, &[1.0], 1e-10), "{xi:?}");
        let (x, _) = ctx.phi_inverse(&[1.0], &[ln2]).unwrap();
        assert!(close(&x, &[2.0], 1e-10));
        let (xi, _) = ctx.phi(&[0.7], &[0.0]).unwrap();
        assert_eq!(xi, vec![0.7]);
    }

    #[test]
    fn dphi_closed_forms() {
        let s = spec(1, 1, &["a1"], &[&["1"]]);
        let j = TransformContext::new(&s).dphi(&[0.3], &[1.2]).unwrap();
        assert!((j[(0, 0)] - 1.0).abs() < 1e-12 && (j[(0, 1)] + 1.0).abs() < 1e-12);
        assert_eq!((j[(1, 0)], j[(1, 1)]), (0.0, 1.0));

        let s = spec(1, 1, &["a1"], &[&["x1"]]);
        let (x, z) = (1.7, 0.6);
        let j = TransformContext::new(&s).dphi(&[x], &[z]).unwrap();
        assert!((j[(0, 0)] - (-z).exp()).abs() < 1e-10);
        assert!((j[(0, 1)] + x * (-z).exp()).abs() < 1e-10);

        let s = spec(2, 2, &["0", "0"], &[&["x2", "0"], &["0", "x1*x2"]]);
        let j = TransformContext::new(&s).dphi(&[0.4, -0.9], &[0.0, 0.0]).unwrap();
        assert!((j.view((0, 0), (2, 2)) - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn transformed_drift_closed_forms() {
        let s = spec(1, 1, &["a1"], &[&["1"]]);
        let ctx = TransformContext::new(&s);
        assert!(close(
            &ctx.transformed_f(&[0.4], &[1.3], &[0.7]).unwrap(),
            &[0.7],
            1e-13
        ));

        let s = spec(1, 1, &["a1"], &[&["x1"]]);
        let ctx = TransformContext::new(&s);
        let v = ctx.transformed_f(&[0.4], &[1.3], &[0.7]).unwrap();
        assert!(close(&v, &[(-1.3f64).exp() * 0.7], 1e-10));
        let full = ctx.transformed_field(&[0.4], &[1.3], &[0.7]).unwrap();
        assert!(close(&full[..1], &v, 1e-10));

        let s = spec(1, 1, &["0"], &[&["x1"]]);
        let ctx = TransformContext::new(&s);
        assert_eq!(ctx.transformed_f(&[0.4], &[1.3], &[0.7]).unwrap(), vec![0.0]);
    }

    #[test]
    fn flowbox_audit() {
        let s = spec(1, 1, &["a1"], &[&["x1"]]);
        let ctx = TransformContext::new(&s);
        let r = ctx.verify_flowbox(&s.default_samples(100, 2.0), 1e-6);
        assert!(r.pass, "{r:?}");

        let s = spec(2, 2, &["0", "0"], &[&["x1", "0"], &["0", "x2"]]);
        let r = TransformContext::new(&s).verify_flowbox(&s.default_samples(100, 2.0), 1e-6);
        assert!(r.pass, "{r:?}");

        let s = spec(2, 2, &["0", "0"], &[&["1", "0"], &["x1", "0"]]);
        let r = TransformContext::new(&s).verify_flowbox(&s.default_samples(100, 2.0), 1e-6);
        assert!(!r.pass && r.max_residual > 0.1, "{r:?}");
    }

    #[test]
    fn transport_examples() {
        let s = spec(1, 1, &["a1*x1"], &[&["x1"]]);
        let ctx = TransformContext::new(&s);
        let t = ctx.transport(&[0.8], &[0.4], &[0.4], &[0.5]).unwrap();
        assert!(close(&t, &[0.4], 1e-14));

        let s = spec(1, 1, &["a1"], &[&["1"]]);
        let ctx = TransformContext::new(&s);
        let t = ctx.transport(&[0.8], &[-1.0], &[1.5], &[0.3]).unwrap();
        assert!(close(&t, &[0.3], 1e-13));

        let s = spec(1, 1, &["a1"], &[&["x1"]]);
        let ctx = TransformContext::new(&s);
        let t = ctx.transport(&[1.0], &[0.0], &[2f64.ln()], &[1.0]).unwrap();
        assert!(close(&t, &[0.5], 1e-10), "{t:?}");
    }

    #[test]
    fn transport_reports_domain_errors() {
        let s = spec(1, 1, &["log(x1)"], &[&["1"]]);
        let ctx = TransformContext::new(&s);
        let e = ctx.transport(&[0.5], &[0.0], &[-1.0], &[0.0]).unwrap_err();
        assert!(matches!(e, Error::TransportUndefined(_)), "{e:?}");
    }

    #[test]
    fn grad_psi_closed_forms() {
        let s = spec(1, 1, &["a1"], &[&["1"]]);
        let g = TransformContext::new(&s).grad_psi(&[0.3], &[-0.4]).unwrap();
        assert!(close(&g, &[1.0, 1.0], 1e-12));

        let s = spec(1, 1, &["a1"], &[&["x1"]]);
        let (xi, eta) = (0.6, 0.8);
        let g = TransformContext::new(&s).grad_psi(&[xi], &[eta]).unwrap();
        assert!(close(&g, &[eta.exp(), xi * eta.exp()], 1e-9), "{g:?}");
    }

    #[test]
    fn cache_is_transparent() {
        let s = spec(2, 2, &["a1*x2", "x1*sin(u1)"], &[&["x1", "0"], &["0", "x2"]]);
        let memo = TransformContext::new(&s);
        let plain = TransformContext::new(&s).with_cache(CachePolicy::Off);
        for _ in 0..2 {
            let a = memo.transformed_f(&[0.3, 0.9], &[0.2, -0.1], &[0.5]).unwrap();
            let b = plain.transformed_f(&[0.3, 0.9], &[0.2, -0.1], &[0.5]).unwrap();
            assert_eq!(a, b);
        }
        assert!(TransformContext::new(&s).with_steps(5).is_err());
    }
}
