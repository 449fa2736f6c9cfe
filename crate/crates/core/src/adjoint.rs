//! Costates.
//!
//! The production route solves the adjoint of the straightened problem,
//! `π̇₁ = −π₁·∇_ξF̃`, `π̇₂ = −π₁·∇_ηF̃`, `π(T) = ∇Ψ(ξ(T), η(T))` with
//! `Ψ = γ∘φ⁻¹`, and pulls it back to the original costate through
//! `p = π·∇φ(x, u)`. The pull-back is evaluated on both sides of every jump.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, VarId};
use crate::ode::hermite_mid;
use crate::propagate::Trajectory;
use crate::sampling;
use crate::system::{Interval, SystemSpec};
use crate::transform::TransformContext;

/// Terminal consistency tolerance for `p(T) = ∇γ(x(T), u(T))`.
pub const TERMINAL_TOL: f64 = 1e-7;

/// `∇Ψ(ξ, η)` with `Ψ = γ∘φ⁻¹`.
pub fn grad_psi(ctx: &TransformContext<'_>, xi: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
    ctx.grad_psi(xi, eta)
}

fn fd_step(v: f64) -> f64 {
    1e-5 * v.abs().max(1.0)
}

/// `[∇_ξF̃ | ∇_ηF̃]` at `(ξ, η, a)`, n×(n+m), by central differences.
pub fn jacobian_f(ctx: &TransformContext<'_>, xi: &[f64], eta: &[f64], a: &[f64]) -> Result<DMatrix<f64>> {
    let (n, m) = (xi.len(), eta.len());
    let mut jac = DMatrix::zeros(n, n + m);
    let mut point: Vec<f64> = xi.iter().chain(eta).copied().collect();
    for j in 0..n + m {
        let base = point[j];
        let e = fd_step(base);
        point[j] = base + e;
        let plus = ctx.transformed_f(&point[..n], &point[n..], a)?;
        point[j] = base - e;
        let minus = ctx.transformed_f(&point[..n], &point[n..], a)?;
        point[j] = base;
        let width = (base + e) - (base - e);
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / width;
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjointNode {
    pub t: f64,
    /// `(π₁, π₂)`, continuous in time.
    pub pi: Vec<f64>,
    /// `(p₁, p₂)` on each side; empty until [`pull_back_adjoint`] runs.
    pub p_left: Vec<f64>,
    pub p_right: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AdjointArc {
    n: usize,
    nodes: Vec<AdjointNode>,
    /// `π` at cell midpoints.
    pi_mid: Vec<Vec<f64>>,
}

impl AdjointArc {
    pub fn nodes(&self) -> &[AdjointNode] {
        &self.nodes
    }

    pub fn pi_mid(&self) -> &[Vec<f64>] {
        &self.pi_mid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_pulled_back(&self) -> bool {
        self.nodes.first().is_some_and(|n| !n.p_left.is_empty())
    }
}

fn row_times(pi1: &[f64], jac: &DMatrix<f64>) -> Vec<f64> {
    (0..jac.ncols())
        .map(|j| -(0..pi1.len()).map(|i| pi1[i] * jac[(i, j)]).sum::<f64>())
        .collect()
}

/// Backward RK4 of the transformed adjoint on the trajectory's grid.
pub fn solve_transformed_adjoint(ctx: &TransformContext<'_>, traj: &Trajectory) -> Result<AdjointArc> {
    let n = ctx.spec().n();
    let cells = traj.cells();
    if cells.is_empty() {
        return Err(Error::GridMismatch("trajectory has no cells".into()));
    }
    let nodes = traj.nodes();
    // Jacobians at the start, midpoint and end of each cell, with the cell's control.
    let jacs: Vec<[DMatrix<f64>; 3]> = cells
        .par_iter()
        .enumerate()
        .map(|(k, c)| {
            let u0 = traj.cell_control(c, c.t0);
            let um = traj.cell_control(c, c.mid());
            let u1 = traj.cell_control(c, c.t1);
            Ok([
                jacobian_f(ctx, &nodes[k].xi, &u0, &c.a)?,
                jacobian_f(ctx, &c.xi_mid, &um, &c.a)?,
                jacobian_f(ctx, &nodes[k + 1].xi, &u1, &c.a)?,
            ])
        })
        .collect::<Result<_>>()?;

    let last = nodes.last().unwrap();
    let terminal = ctx.grad_psi(&last.xi, last.u())?;
    let mut pis = vec![Vec::new(); nodes.len()];
    let mut pi_mid = vec![Vec::new(); cells.len()];
    pis[nodes.len() - 1] = terminal;
    for k in (0..cells.len()).rev() {
        let h = cells[k].len();
        let [j0, jm, j1] = &jacs[k];
        let y = pis[k + 1].clone();
        // Integrate in reversed time s = t1 − t: dπ/ds = π₁·J.
        let f = |pi: &[f64], j: &DMatrix<f64>| -> Vec<f64> { row_times(&pi[..n], j).into_iter().map(|v| -v).collect() };
        let axpy = |y: &[f64], c: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
        let k1 = f(&y, j1);
        let k2 = f(&axpy(&y, 0.5 * h, &k1), jm);
        let k3 = f(&axpy(&y, 0.5 * h, &k2), jm);
        let k4 = f(&axpy(&y, h, &k3), j0);
        let next: Vec<f64> = (0..y.len())
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        // Forward-time derivatives at both ends for the midpoint interpolant.
        let d0 = row_times(&next[..n], j0);
        let d1 = row_times(&y[..n], j1);
        pi_mid[k] = hermite_mid(&next, &y, &d0, &d1, h);
        pis[k] = next;
    }
    let nodes = nodes
        .iter()
        .zip(pis)
        .map(|(nd, pi)| AdjointNode {
            t: nd.t,
            pi,
            p_left: Vec::new(),
            p_right: Vec::new(),
        })
        .collect();
    Ok(AdjointArc { n, nodes, pi_mid })
}

pub(crate) fn row_mul(row: &[f64], mat: &DMatrix<f64>) -> Vec<f64> {
    (0..mat.ncols())
        .map(|j| (0..row.len()).map(|i| row[i] * mat[(i, j)]).sum())
        .collect()
}

/// Fills `p = π·∇φ(x, u)` on both sides of every node and checks the terminal condition.
pub fn pull_back_adjoint(ctx: &TransformContext<'_>, arc: &AdjointArc, traj: &Trajectory) -> Result<AdjointArc> {
    let tn = traj.nodes();
    if tn.len() != arc.nodes.len() || tn.iter().zip(&arc.nodes).any(|(a, b)| a.t != b.t) {
        return Err(Error::GridMismatch("adjoint and trajectory grids differ".into()));
    }
    let nodes: Vec<AdjointNode> = tn
        .par_iter()
        .zip(&arc.nodes)
        .map(|(nd, an)| {
            let p_right = row_mul(&an.pi, &ctx.dphi(&nd.x_right, &nd.u_right)?);
            let p_left = if nd.is_jump() {
                row_mul(&an.pi, &ctx.dphi(&nd.x_left, &nd.u_left)?)
            } else {
                p_right.clone()
            };
            Ok(AdjointNode {
                t: nd.t,
                pi: an.pi.clone(),
                p_left,
                p_right,
            })
        })
        .collect::<Result<_>>()?;

    let (last, an) = (tn.last().unwrap(), nodes.last().unwrap());
    let p_t = if last.pointwise_right { &an.p_right } else { &an.p_left };
    let grad = ctx.spec().grad_cost(last.x(), last.u())?;
    let err = p_t.iter().zip(&grad).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(err <= TERMINAL_TOL) {
        return Err(Error::TerminalMismatch(err));
    }
    Ok(AdjointArc {
        n: arc.n,
        nodes,
        pi_mid: arc.pi_mid.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftedPair {
    pub i: usize,
    pub j: usize,
    pub max_norm: f64,
    pub max_state_norm: f64,
    pub max_costate_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftedReport {
    pub tol: f64,
    pub samples: usize,
    pub pairs: Vec<LiftedPair>,
    pub max_norm: f64,
    pub pass: bool,
}

/// Samples `(x, z, p)` around `x₀`, with `z ∈ U` and `p ∈ [−1, 1]ⁿ⁺ᵐ`.
pub fn lifted_samples(spec: &SystemSpec, count: usize, radius: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (n, m) = (spec.n(), spec.m());
    let mut bounds: Vec<Interval> = spec
        .x0()
        .iter()
        .map(|c| Interval::new(c - radius, c + radius))
        .collect();
    bounds.extend(spec.u_box().intervals().iter().copied());
    bounds.extend(std::iter::repeat_n(Interval::new(-1.0, 1.0), n + m));
    sampling::uniform(&bounds, count, seed)
        .into_iter()
        .map(|v| (v[..n].to_vec(), v[n..n + m].to_vec(), v[n + m..].to_vec()))
        .collect()
}

/// Brackets of the lifted fields `𝒢ᵢ(y, p) = (gᵢ(y), −p·∇gᵢ(y))` over `(y, p)`.
pub fn audit_lifted_commutativity(
    spec: &SystemSpec,
    samples: &[(Vec<f64>, Vec<f64>, Vec<f64>)],
    tol: f64,
) -> Result<LiftedReport> {
    let d = spec.n() + spec.m();
    let m = spec.m();
    // grads[i][k][l] = ∂gᵢᵏ/∂y_l, hess[i][k][l][r] = ∂²gᵢᵏ/∂y_l∂y_r
    let grads: Vec<Vec<Vec<Expr>>> = spec
        .impulses()
        .iter()
        .map(|g| {
            g.components()
                .iter()
                .map(|c| (0..d).map(|l| c.diff(VarId(l))).collect())
                .collect()
        })
        .collect();
    let hess: Vec<Vec<Vec<Vec<Expr>>>> = grads
        .iter()
        .map(|gi| {
            gi.iter()
                .map(|row| row.iter().map(|e| (0..d).map(|r| e.diff(VarId(r))).collect()).collect())
                .collect()
        })
        .collect();

    let lifted =
        |i: usize, vals: &[f64], p: &[f64]| -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>)> {
            let g: Vec<f64> = spec.impulses()[i]
                .components()
                .iter()
                .map(|c| c.eval(vals))
                .collect::<Result<_>>()?;
            let dg: Vec<Vec<f64>> = grads[i]
                .iter()
                .map(|row| row.iter().map(|e| e.eval(vals)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            let ddg: Vec<Vec<Vec<f64>>> = hess[i]
                .iter()
                .map(|a| {
                    a.iter()
                        .map(|row| row.iter().map(|e| e.eval(vals)).collect::<Result<_>>())
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;
            let costate: Vec<f64> = (0..d).map(|l| -(0..d).map(|k| p[k] * dg[k][l]).sum::<f64>()).collect();
            Ok((g, costate, dg, ddg))
        };

    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let norms: Vec<(f64, f64)> = samples
                .par_iter()
                .map(|(x, z, p)| {
                    let vals = spec.pack(x, z, None);
                    let (gi, ci, dgi, ddgi) = lifted(i, &vals, p)?;
                    let (gj, cj, dgj, ddgj) = lifted(j, &vals, p)?;
                    // D𝒢ⱼ·𝒢ᵢ − D𝒢ᵢ·𝒢ⱼ, state block then costate block.
                    let state: Vec<f64> = (0..d)
                        .map(|k| (0..d).map(|l| dgj[k][l] * gi[l] - dgi[k][l] * gj[l]).sum())
                        .collect();
                    let dc = |dd: &Vec<Vec<Vec<f64>>>, dg: &Vec<Vec<f64>>, g: &[f64], c: &[f64], l: usize| -> f64 {
                        let wrt_y: f64 = (0..d)
                            .map(|r| -(0..d).map(|k| p[k] * dd[k][l][r]).sum::<f64>() * g[r])
                            .sum();
                        let wrt_p: f64 = (0..d).map(|k| -dg[k][l] * c[k]).sum();
                        wrt_y + wrt_p
                    };
                    let costate: Vec<f64> = (0..d)
                        .map(|l| dc(&ddgj, &dgj, &gi, &ci, l) - dc(&ddgi, &dgi, &gj, &cj, l))
                        .collect();
                    let ns = state.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let nc = costate.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    Ok((ns, nc))
                })
                .collect::<Result<_>>()?;
            let max_state_norm = norms.iter().map(|v| v.0).fold(0.0, f64::max);
            let max_costate_norm = norms.iter().map(|v| v.1).fold(0.0, f64::max);
            pairs.push(LiftedPair {
                i: i + 1,
                j: j + 1,
                max_norm: max_state_norm.max(max_costate_norm),
                max_state_norm,
                max_costate_norm,
            });
        }
    }
    let max_norm = pairs.iter().map(|p| p.max_norm).fold(0.0, f64::max);
    Ok(LiftedReport {
        tol,
        samples: samples.len(),
        pairs,
        max_norm,
        pass: max_norm <= tol,
    })
}
