//! Trajectories of the impulsive system.
//!
//! [`integrate_impulsive`] integrates the straightened system
//! `ξ̇ = F̃(ξ, u(t), a(t))`, which has no `u̇` term, and reconstructs
//! `(x, u)(t) = φ⁻¹(ξ(t), u(t))` at every node and on both sides of every
//! jump. [`integrate_smooth`] integrates the original augmented system
//! directly with `u̇` inserted exactly; it requires a continuous control.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{hermite_mid, Rk4};
use crate::sampling;
use crate::signals::{l1_distance, ControlSignal, OrdinarySignal, Side};
use crate::system::{Interval, SystemSpec};
use crate::transform::TransformContext;

/// Abort threshold on `|(x, u)|∞`.
pub const BLOWUP_NORM: f64 = 1e12;
/// Flow-box residual tolerated at trajectory nodes.
pub const FLOWBOX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// RK4 on `ξ̇ = F̃` plus reconstruction through `φ⁻¹`.
    Transformed,
    /// RK4 on the augmented system with exact `u̇`.
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub t: f64,
    pub x_left: Vec<f64>,
    pub x_right: Vec<f64>,
    pub u_left: Vec<f64>,
    pub u_right: Vec<f64>,
    pub xi: Vec<f64>,
    /// Ordinary control on the cell starting here (the last node repeats the previous cell).
    pub a: Vec<f64>,
    pub pointwise_right: bool,
}

impl Node {
    pub fn is_jump(&self) -> bool {
        self.u_left != self.u_right
    }

    pub fn x(&self) -> &[f64] {
        if self.pointwise_right {
            &self.x_right
        } else {
            &self.x_left
        }
    }

    pub fn u(&self) -> &[f64] {
        if self.pointwise_right {
            &self.u_right
        } else {
            &self.u_left
        }
    }
}

/// Data of the open interval between two consecutive nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub t0: f64,
    pub t1: f64,
    /// Piece of the control signal covering this cell.
    pub piece: usize,
    pub a: Vec<f64>,
    pub xi_mid: Vec<f64>,
    /// `ξ̇` at the two ends, evaluated with this cell's control.
    pub dxi0: Vec<f64>,
    pub dxi1: Vec<f64>,
}

impl Cell {
    pub fn mid(&self) -> f64 {
        0.5 * (self.t0 + self.t1)
    }

    pub fn len(&self) -> f64 {
        self.t1 - self.t0
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    method: Method,
    step: f64,
    nodes: Vec<Node>,
    cells: Vec<Cell>,
    control: ControlSignal,
    ordinary: OrdinarySignal,
}

impl Trajectory {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn control(&self) -> &ControlSignal {
        &self.control
    }

    pub fn ordinary(&self) -> &OrdinarySignal {
        &self.ordinary
    }

    pub fn times(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.t).collect()
    }

    /// Pointwise state at `T`.
    pub fn final_state(&self) -> &[f64] {
        self.nodes.last().unwrap().x()
    }

    /// Control on `cell` at time `t`.
    pub fn cell_control(&self, cell: &Cell, t: f64) -> Vec<f64> {
        self.control.piece_value(cell.piece, t)
    }
}

/// Uniform grid of step `h` merged with `extra` times (breakpoints).
pub fn build_grid(horizon: f64, h: f64, extra: &[f64]) -> Result<Vec<f64>> {
    if !(h > 0.0 && h <= horizon) {
        return Err(Error::InvalidStep { step: h, horizon });
    }
    let merge_tol = 1e-9 * horizon.max(1.0);
    let count = (horizon / h - 1e-9).ceil() as usize;
    let mut fixed: Vec<f64> = extra
        .iter()
        .copied()
        .filter(|t| *t >= 0.0 && *t <= horizon)
        .chain([0.0, horizon])
        .collect();
    fixed.sort_by(f64::total_cmp);
    fixed.dedup_by(|b, a| (*a - *b).abs() <= merge_tol);
    let mut grid: Vec<f64> = (1..count)
        .map(|k| k as f64 * h)
        .filter(|t| {
            let j = fixed.partition_point(|b| b < t);
            let near = |i: usize| i < fixed.len() && (fixed[i] - t).abs() <= merge_tol;
            !(near(j) || (j > 0 && near(j - 1)))
        })
        .chain(fixed.iter().copied())
        .collect();
    grid.sort_by(f64::total_cmp);
    Ok(grid)
}

fn check_dims(spec: &SystemSpec, x0: &[f64], u: &ControlSignal, a: &OrdinarySignal) -> Result<()> {
    if x0.len() != spec.n() || u.dim() != spec.m() || a.values()[0].len() != spec.l() {
        return Err(Error::Dimension("signals do not match the system".into()));
    }
    let (tu, ta) = (u.horizon(), *a.breakpoints().last().unwrap());
    if (tu - spec.horizon()).abs() > 1e-12 || (ta - spec.horizon()).abs() > 1e-12 {
        return Err(Error::GridMismatch(format!(
            "signal horizons ({tu}, {ta}) differ from T = {}",
            spec.horizon()
        )));
    }
    Ok(())
}

fn guard(v: &[f64]) -> Result<()> {
    let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if norm > BLOWUP_NORM {
        return Err(Error::Blowup(BLOWUP_NORM));
    }
    Ok(())
}

fn merged_breakpoints(u: &ControlSignal, a: &OrdinarySignal, extra: &[f64]) -> Vec<f64> {
    u.breakpoints()
        .iter()
        .chain(a.breakpoints())
        .chain(extra)
        .copied()
        .collect()
}

/// Transformed integration from the system's `x₀`.
pub fn integrate_impulsive(
    ctx: &TransformContext<'_>,
    u: &ControlSignal,
    a: &OrdinarySignal,
    step: f64,
) -> Result<Trajectory> {
    integrate_impulsive_from(ctx, ctx.spec().x0(), u, a, step, &[])
}

/// Transformed integration from an explicit initial state, on the grid refined by `extra`.
pub fn integrate_impulsive_from(
    ctx: &TransformContext<'_>,
    x0: &[f64],
    u: &ControlSignal,
    a: &OrdinarySignal,
    step: f64,
    extra: &[f64],
) -> Result<Trajectory> {
    let spec = ctx.spec();
    check_dims(spec, x0, u, a)?;
    let grid = build_grid(spec.horizon(), step, &merged_breakpoints(u, a, extra))?;
    let n = spec.n();

    let u_start = u.value_at(0.0, Side::Left)?;
    let (xi0, _) = ctx.phi(x0, &u_start)?;
    let mut xi = xi0;
    let mut xis = Vec::with_capacity(grid.len());
    let mut cells = Vec::with_capacity(grid.len() - 1);
    let mut rk = Rk4::new(n);
    xis.push(xi.clone());
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let mid = 0.5 * (t0 + t1);
        let piece = u.piece_index(mid);
        let av = a.value_at(mid).to_vec();
        let us = [
            u.piece_value(piece, t0),
            u.piece_value(piece, mid),
            u.piece_value(piece, t1),
        ];
        let start = xi.clone();
        rk.step(&mut xi, h, |stage, y, out| {
            let uv = match stage {
                crate::ode::Stage::Start => &us[0],
                crate::ode::Stage::Mid => &us[1],
                crate::ode::Stage::End => &us[2],
            };
            out.copy_from_slice(&ctx.transformed_f(y, uv, &av)?);
            Ok(())
        })?;
        guard(&xi)?;
        let dxi0 = rk.k1().to_vec();
        let dxi1 = ctx.transformed_f(&xi, &us[2], &av)?;
        let xi_mid = hermite_mid(&start, &xi, &dxi0, &dxi1, h);
        cells.push(Cell {
            t0,
            t1,
            piece,
            a: av,
            xi_mid,
            dxi0,
            dxi1,
        });
        xis.push(xi.clone());
    }

    let nodes = grid
        .iter()
        .zip(&xis)
        .enumerate()
        .map(|(k, (&t, xi))| {
            let u_left = u.value_at(t, Side::Left)?;
            let u_right = u.value_at(t, Side::Right)?;
            let x_right = ctx.chart(xi, &u_right)?.x.clone();
            let x_left = if u_left == u_right {
                x_right.clone()
            } else {
                ctx.chart(xi, &u_left)?.x.clone()
            };
            guard(&x_left)?;
            guard(&x_right)?;
            let pointwise_right = match u.breakpoint_index(t) {
                Some(j) => u.pointwise_side(j) == Side::Right,
                None => true,
            };
            Ok(Node {
                t,
                x_left,
                x_right,
                u_left,
                u_right,
                xi: xi.clone(),
                a: cells[k.min(cells.len() - 1)].a.clone(),
                pointwise_right,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Straightening is only valid for commuting fields; check it where the trajectory goes.
    let probes: Vec<(Vec<f64>, Vec<f64>)> = nodes
        .iter()
        .flat_map(|nd| {
            let mut v = vec![(nd.x_right.clone(), nd.u_right.clone())];
            if nd.is_jump() {
                v.push((nd.x_left.clone(), nd.u_left.clone()));
            }
            v
        })
        .collect();
    let report = ctx.verify_flowbox(&probes, FLOWBOX_TOL);
    if let Some((_, msg)) = report.failures.first() {
        return Err(Error::Domain(msg.clone()));
    }
    if !report.pass {
        return Err(Error::FlowBox(report.max_residual));
    }

    Ok(Trajectory {
        method: Method::Transformed,
        step,
        nodes,
        cells,
        control: u.clone(),
        ordinary: a.clone(),
    })
}

struct DirectRun {
    grid: Vec<f64>,
    xs: Vec<Vec<f64>>,
    pieces: Vec<usize>,
    a: Vec<Vec<f64>>,
}

fn run_direct(
    spec: &SystemSpec,
    x0: &[f64],
    u: &ControlSignal,
    a: &OrdinarySignal,
    step: f64,
    extra: &[f64],
) -> Result<DirectRun> {
    check_dims(spec, x0, u, a)?;
    if !u.is_continuous() {
        return Err(Error::invariant(
            "/control",
            "direct integration needs a continuous control; use the transformed integrator",
        ));
    }
    let grid = build_grid(spec.horizon(), step, &merged_breakpoints(u, a, extra))?;
    let (n, m) = (spec.n(), spec.m());
    let mut x = x0.to_vec();
    let mut xs = vec![x.clone()];
    let mut pieces = Vec::with_capacity(grid.len());
    let mut avals = Vec::with_capacity(grid.len());
    let mut rk = Rk4::new(n);
    let mut vals = Vec::new();
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        let piece = u.piece_index(mid);
        let slope = u.piece_slope(piece);
        let av = a.value_at(mid).to_vec();
        let us = [
            u.piece_value(piece, t0),
            u.piece_value(piece, mid),
            u.piece_value(piece, t1),
        ];
        rk.step(&mut x, t1 - t0, |stage, y, out| {
            let uv = match stage {
                crate::ode::Stage::Start => &us[0],
                crate::ode::Stage::Mid => &us[1],
                crate::ode::Stage::End => &us[2],
            };
            spec.pack_into(&mut vals, y, uv, Some(&av));
            for i in 0..n {
                let mut v = spec.drift().components()[i].eval(&vals)?;
                for k in 0..m {
                    if slope[k] != 0.0 {
                        v += slope[k] * spec.impulses()[k].components()[i].eval(&vals)?;
                    }
                }
                out[i] = v;
            }
            Ok(())
        })?;
        guard(&x)?;
        xs.push(x.clone());
        pieces.push(piece);
        avals.push(av);
    }
    Ok(DirectRun {
        grid,
        xs,
        pieces,
        a: avals,
    })
}

/// Direct integration of the augmented system for a continuous control, from `x₀`.
pub fn integrate_smooth(
    ctx: &TransformContext<'_>,
    u: &ControlSignal,
    a: &OrdinarySignal,
    step: f64,
) -> Result<Trajectory> {
    integrate_smooth_from(ctx, ctx.spec().x0(), u, a, step, &[])
}

/// Direct integration from an explicit initial state. `ξ` is filled in through `φ`.
pub fn integrate_smooth_from(
    ctx: &TransformContext<'_>,
    x0: &[f64],
    u: &ControlSignal,
    a: &OrdinarySignal,
    step: f64,
    extra: &[f64],
) -> Result<Trajectory> {
    let run = run_direct(ctx.spec(), x0, u, a, step, extra)?;
    let mut nodes = Vec::with_capacity(run.grid.len());
    for (k, (&t, x)) in run.grid.iter().zip(&run.xs).enumerate() {
        let uv = u.value_at(t, Side::Pointwise)?;
        let (xi, _) = ctx.phi(x, &uv)?;
        nodes.push(Node {
            t,
            x_left: x.clone(),
            x_right: x.clone(),
            u_left: uv.clone(),
            u_right: uv,
            xi,
            a: run.a[k.min(run.a.len() - 1)].clone(),
            pointwise_right: true,
        });
    }
    let mut cells = Vec::with_capacity(run.pieces.len());
    for (k, &piece) in run.pieces.iter().enumerate() {
        let (n0, n1) = (&nodes[k], &nodes[k + 1]);
        let av = run.a[k].clone();
        let dxi0 = ctx.transformed_f(&n0.xi, &n0.u_right, &av)?;
        let dxi1 = ctx.transformed_f(&n1.xi, &n1.u_left, &av)?;
        let xi_mid = hermite_mid(&n0.xi, &n1.xi, &dxi0, &dxi1, n1.t - n0.t);
        cells.push(Cell {
            t0: n0.t,
            t1: n1.t,
            piece,
            a: av,
            xi_mid,
            dxi0,
            dxi1,
        });
    }
    Ok(Trajectory {
        method: Method::Direct,
        step,
        nodes,
        cells,
        control: u.clone(),
        ordinary: a.clone(),
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Trapezoid `∫|x − x̂|` over a shared grid, using right values at cell starts
/// and left values at cell ends.
fn l1_gap(p: &Trajectory, q: &Trajectory) -> Result<f64> {
    if p.nodes.len() != q.nodes.len() || p.nodes.iter().zip(&q.nodes).any(|(a, b)| a.t != b.t) {
        return Err(Error::GridMismatch("trajectories are on different grids".into()));
    }
    Ok(p.nodes
        .windows(2)
        .zip(q.nodes.windows(2))
        .map(|(a, b)| 0.5 * (a[1].t - a[0].t) * (dist(&a[0].x_right, &b[0].x_right) + dist(&a[1].x_left, &b[1].x_left)))
        .sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxRow {
    pub k: usize,
    /// `∫|x_k − x|` between the mollified and the impulsive trajectories.
    pub l1_gap: f64,
    /// Ratio to the previous row's gap.
    pub ratio: Option<f64>,
    /// `L¹` distance between the mollified and the original control.
    pub control_gap: f64,
}

/// Convergence of classical trajectories for `mollify(u, k)` to the impulsive one.
pub fn approximation_check(
    ctx: &TransformContext<'_>,
    u: &ControlSignal,
    a: &OrdinarySignal,
    ks: &[usize],
    step: f64,
) -> Result<Vec<ApproxRow>> {
    if ks.is_empty() || ks.windows(2).any(|w| w[1] <= w[0]) || ks[0] == 0 {
        return Err(Error::invariant("ks", "k values must be positive and increasing"));
    }
    let mollified: Vec<ControlSignal> = ks.iter().map(|&k| u.mollify(k)).collect();
    let gaps: Vec<(f64, f64)> = mollified
        .par_iter()
        .map(|w| {
            let extra = w.breakpoints();
            let reference = integrate_impulsive_from(ctx, ctx.spec().x0(), u, a, step, extra)?;
            let smooth = integrate_smooth_from_x(ctx, w, a, step, u.breakpoints(), &reference)?;
            Ok((l1_gap(&smooth, &reference)?, l1_distance(u, w)))
        })
        .collect::<Result<_>>()?;
    Ok(ks
        .iter()
        .zip(&gaps)
        .enumerate()
        .map(|(i, (&k, &(gap, cgap)))| ApproxRow {
            k,
            l1_gap: gap,
            ratio: (i > 0).then(|| gap / gaps[i - 1].0),
            control_gap: cgap,
        })
        .collect())
}

/// Direct run without `ξ`, shaped as a trajectory for gap computations.
fn integrate_smooth_from_x(
    ctx: &TransformContext<'_>,
    u: &ControlSignal,
    a: &OrdinarySignal,
    step: f64,
    extra: &[f64],
    like: &Trajectory,
) -> Result<Trajectory> {
    let run = run_direct(ctx.spec(), ctx.spec().x0(), u, a, step, extra)?;
    let nodes = run
        .grid
        .iter()
        .zip(&run.xs)
        .zip(&like.nodes)
        .map(|((&t, x), nd)| Node {
            t,
            x_left: x.clone(),
            x_right: x.clone(),
            u_left: Vec::new(),
            u_right: Vec::new(),
            xi: Vec::new(),
            a: nd.a.clone(),
            pointwise_right: true,
        })
        .collect();
    Ok(Trajectory {
        method: Method::Direct,
        step,
        nodes,
        cells: Vec::new(),
        control: u.clone(),
        ordinary: a.clone(),
    })
}

/// Perturbed pair for the robustness experiment.
#[derive(Debug, Clone)]
pub struct RobustPair {
    pub x0: Vec<f64>,
    pub u: ControlSignal,
    pub x0_hat: Vec<f64>,
    pub u_hat: ControlSignal,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustRow {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `rhs = 0` while `lhs` exceeds the tolerance.
    pub inconsistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessReport {
    pub step: f64,
    pub rows: Vec<RobustRow>,
    /// Empirical constant: the largest ratio.
    pub max_ratio: f64,
}

/// Empirical check of `|x(T) − x̂(T)| + ∫|x − x̂| ≤ M(|x₀ − x̂₀| + |u(0) − û(0)| + |u(T) − û(T)| + ∫|u − û|)`.
pub fn robustness_gap(
    spec: &SystemSpec,
    pairs: &[RobustPair],
    a: &OrdinarySignal,
    step: f64,
    tol: f64,
) -> Result<RobustnessReport> {
    let rows = pairs
        .par_iter()
        .map(|p| {
            let extra: Vec<f64> = p.u.breakpoints().iter().chain(p.u_hat.breakpoints()).copied().collect();
            let r = run_direct(spec, &p.x0, &p.u, a, step, &extra)?;
            let s = run_direct(spec, &p.x0_hat, &p.u_hat, a, step, &extra)?;
            let integral: f64 = r
                .grid
                .windows(2)
                .enumerate()
                .map(|(k, w)| 0.5 * (w[1] - w[0]) * (dist(&r.xs[k], &s.xs[k]) + dist(&r.xs[k + 1], &s.xs[k + 1])))
                .sum();
            let lhs = dist(r.xs.last().unwrap(), s.xs.last().unwrap()) + integral;
            let horizon = spec.horizon();
            let rhs = dist(&p.x0, &p.x0_hat)
                + dist(
                    &p.u.value_at(0.0, Side::Pointwise)?,
                    &p.u_hat.value_at(0.0, Side::Pointwise)?,
                )
                + dist(
                    &p.u.value_at(horizon, Side::Pointwise)?,
                    &p.u_hat.value_at(horizon, Side::Pointwise)?,
                )
                + euclid_l1_distance(&p.u, &p.u_hat, step);
            let (ratio, inconsistent) = if rhs == 0.0 {
                (0.0, lhs > tol)
            } else {
                (lhs / rhs, false)
            };
            Ok(RobustRow {
                lhs,
                rhs,
                ratio,
                inconsistent,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(RobustnessReport { step, rows, max_ratio })
}

/// `∫|u − û|` with the Euclidean norm; exact for `m = 1`, trapezoid otherwise.
fn euclid_l1_distance(u: &ControlSignal, v: &ControlSignal, step: f64) -> f64 {
    if u.dim() == 1 {
        return l1_distance(u, v);
    }
    let extra: Vec<f64> = u.breakpoints().iter().chain(v.breakpoints()).copied().collect();
    let grid = build_grid(u.horizon(), step, &extra).expect("step validated by caller");
    grid.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let (pu, pv) = (u.piece_index(mid), v.piece_index(mid));
            let d0 = dist(&u.piece_value(pu, w[0]), &v.piece_value(pv, w[0]));
            let d1 = dist(&u.piece_value(pu, w[1]), &v.piece_value(pv, w[1]));
            0.5 * (w[1] - w[0]) * (d0 + d1)
        })
        .sum()
}

/// Seeded random pairs: continuous piecewise-linear controls with `knots`
/// uniform knots and values in `U`, initial states within `radius` of `x₀`.
pub fn random_pairs(spec: &SystemSpec, count: usize, knots: usize, radius: f64, seed: u64) -> Vec<RobustPair> {
    let knots = knots.max(2);
    let horizon = spec.horizon();
    let times: Vec<f64> = (0..knots).map(|k| horizon * k as f64 / (knots - 1) as f64).collect();
    let mut bounds: Vec<Interval> = Vec::new();
    for _ in 0..2 {
        bounds.extend(spec.x0().iter().map(|c| Interval::new(c - radius, c + radius)));
        for _ in 0..knots {
            bounds.extend(spec.u_box().intervals().iter().copied());
        }
    }
    let (n, m) = (spec.n(), spec.m());
    let half = n + knots * m;
    sampling::uniform(&bounds, count, seed)
        .into_iter()
        .map(|p| {
            let make = |block: &[f64]| {
                let x0 = block[..n].to_vec();
                let values = block[n..].chunks(m).map(<[f64]>::to_vec).collect();
                (
                    x0,
                    ControlSignal::piecewise_linear(times.clone(), values).expect("uniform knots"),
                )
            };
            let (x0, u) = make(&p[..half]);
            let (x0_hat, u_hat) = make(&p[half..]);
            RobustPair { x0, u, x0_hat, u_hat }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::tests::doc;

    fn spec(f: &str, g: &str, x0: f64) -> SystemSpec {
        let mut d = doc(1, 1, &[f], &[&[g]]);
        d.x0 = vec![x0];
        SystemSpec::from_document(&d).unwrap()
    }

    fn a_const(v: f64) -> OrdinarySignal {
        OrdinarySignal::constant(1.0, vec![v])
    }

    #[test]
    fn grid_refines_breakpoints() {
        let g = build_grid(1.0, 0.25, &[0.3, 0.5]).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        assert!(matches!(build_grid(1.0, 2.0, &[]), Err(Error::InvalidStep { .. })));
        assert!(matches!(build_grid(1.0, 0.0, &[]), Err(Error::InvalidStep { .. })));
    }

    #[test]
    fn smooth_closed_forms() {
        let lin = ControlSignal::piecewise_linear(vec![0.0, 1.0], vec![vec![0.0], vec![1.0]]).unwrap();
        let s = spec("a1", "1", 0.0);
        let ctx = TransformContext::new(&s);
        let tr = integrate_smooth(&ctx, &lin, &a_const(0.0), 1e-3).unwrap();
        assert!((tr.final_state()[0] - 1.0).abs() < 1e-12);

        let s = spec("a1", "x1", 1.0);
        let ctx = TransformContext::new(&s);
        let tr = integrate_smooth(&ctx, &lin, &a_const(0.0), 1e-3).unwrap();
        assert!((tr.final_state()[0] - std::f64::consts::E).abs() < 1e-8);

        let s = spec("0", "x1", 0.7);
        let ctx = TransformContext::new(&s);
        let tr = integrate_smooth(&ctx, &ControlSignal::constant(1.0, vec![0.0]), &a_const(1.0), 0.1).unwrap();
        assert!(tr.nodes().iter().all(|n| n.x_left == vec![0.7]));
    }

    #[test]
    fn impulsive_closed_forms() {
        let s = spec("a1", "1", 0.0);
        let ctx = TransformContext::new(&s);
        let u = ControlSignal::step(1.0, vec![0.0], 0.5, &[2.0]).unwrap();
        let tr = integrate_impulsive(&ctx, &u, &a_const(1.0), 1e-3).unwrap();
        let jump = tr.nodes().iter().find(|n| n.is_jump()).unwrap();
        assert!((jump.t - 0.5).abs() < 1e-15);
        assert!((jump.x_left[0] - 0.5).abs() < 1e-12);
        assert!((jump.x()[0] - 2.5).abs() < 1e-12);
        assert!((tr.final_state()[0] - 3.0).abs() < 1e-8);

        let s = spec("a1", "x1", 1.0);
        let ctx = TransformContext::new(&s);
        let u = ControlSignal::step(1.0, vec![0.0], 0.5, &[2f64.ln()]).unwrap();
        let tr = integrate_impulsive(&ctx, &u, &a_const(0.0), 1e-3).unwrap();
        assert!((tr.final_state()[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn impulsive_rejects_noncommuting_fields() {
        let s = SystemSpec::from_document(&doc(2, 2, &["a1", "0"], &[&["1", "0"], &["x1", "0"]])).unwrap();
        let ctx = TransformContext::new(&s);
        let u = ControlSignal::step(1.0, vec![0.0, 0.0], 0.5, &[0.5, 0.5]).unwrap();
        let e = integrate_impulsive(&ctx, &u, &a_const(0.0), 0.05).unwrap_err();
        assert!(matches!(e, Error::FlowBox(_)), "{e:?}");
    }

    #[test]
    fn smooth_and_impulsive_agree_for_continuous_controls() {
        let s = spec("a1*x1", "x1", 1.0);
        let ctx = TransformContext::new(&s);
        let u = ControlSignal::piecewise_linear(vec![0.0, 0.4, 1.0], vec![vec![0.0], vec![1.2], vec![-0.5]]).unwrap();
        let a = OrdinarySignal::new(vec![0.0, 0.3, 1.0], vec![vec![0.5], vec![-1.0]]).unwrap();
        let p = integrate_smooth(&ctx, &u, &a, 1e-3).unwrap();
        let q = integrate_impulsive(&ctx, &u, &a, 1e-3).unwrap();
        let gap = p
            .nodes()
            .iter()
            .zip(q.nodes())
            .map(|(a, b)| (a.x()[0] - b.x()[0]).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-5, "{gap}");
    }

    #[test]
    fn approximation_halves() {
        let s = spec("a1", "1", 0.0);
        let ctx = TransformContext::new(&s);
        let u = ControlSignal::step(1.0, vec![0.0], 0.5, &[1.0]).unwrap();
        let rows = approximation_check(&ctx, &u, &a_const(1.0), &[10, 20, 40], 1e-3).unwrap();
        assert!((rows[0].l1_gap - 0.05).abs() < 1e-9, "{rows:?}");
        for r in &rows[1..] {
            let q = r.ratio.unwrap();
            assert!((0.4..=0.6).contains(&q), "{rows:?}");
        }
    }

    #[test]
    fn robustness_identical_pair_and_const_bound() {
        let s = spec("a1", "1", 0.0);
        let u = ControlSignal::piecewise_linear(vec![0.0, 1.0], vec![vec![0.0], vec![1.0]]).unwrap();
        let same = RobustPair {
            x0: vec![0.0],
            u: u.clone(),
            x0_hat: vec![0.0],
            u_hat: u,
        };
        let r = robustness_gap(&s, &[same], &a_const(1.0), 1e-2, 1e-12).unwrap();
        assert_eq!(r.rows[0].ratio, 0.0);
        assert!(!r.rows[0].inconsistent);

        let pairs = random_pairs(&s, 20, 5, 1.0, 3);
        let r = robustness_gap(&s, &pairs, &a_const(1.0), 1e-3, 1e-12).unwrap();
        assert!(r.max_ratio <= 2.0 + 1e-9, "{}", r.max_ratio);
    }
}
