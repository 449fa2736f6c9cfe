//! Necessary optimality conditions along a candidate `(x*, u*, a*)`.
//!
//! Conditions are evaluated at probe times, the midpoints of grid cells,
//! where both the transformed data `(ξ*, π)` and the original data
//! `(x*, p)` are available. Margins are reported raw; inequality
//! conditions pass iff the worst margin is `≥ −tol`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adjoint::{pull_back_adjoint, row_mul, solve_transformed_adjoint, AdjointArc};
use crate::error::{Error, Result};
use crate::propagate::{integrate_impulsive, Trajectory};
use crate::signals::{radon_integral, ControlSignal, OrdinarySignal, VariationMap};
use crate::system::{AugField, SystemSpec};
use crate::transform::TransformContext;

/// Agreement required between the two routes to the transport margin.
pub const TRANSPORT_AGREEMENT: f64 = 1e-5;
/// Agreement between the transformed and original forms of the BV variation.
pub const VARIATION_AGREEMENT: f64 = 1e-6;
/// Agreement between `p·[gᵢ, f]` and `π₁·∂F̃/∂ηᵢ`.
pub const BRACKET_AGREEMENT: f64 = 1e-6;
/// Agreement between `Q` and the contracted `η`-Hessian of `F̃`.
pub const HESSIAN_AGREEMENT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `p·gᵢ ≥ −tol`, consistent with the BV-variation condition.
    Derived,
    /// `p·gᵢ ≤ tol`.
    Printed,
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    /// Integration step; `None` means `T/1000`.
    pub step: Option<f64>,
    pub tol: f64,
    pub grid_u: usize,
    pub grid_a: usize,
    pub nc1_orientation: Orientation,
    /// One-sided admissibility radius.
    pub sigma0: f64,
    /// Upper bound on probe times; cells are strided evenly when exceeded.
    pub max_times: usize,
    /// Explicit BV variations. `None` uses `±eᵢ` from four start times.
    pub variations: Option<Vec<VariationMap>>,
    /// Explicit NC-III directions. `None` uses the default set.
    pub directions: Option<Vec<Vec<f64>>>,
    pub random_directions: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            step: None,
            tol: 1e-6,
            grid_u: 9,
            grid_a: 9,
            nc1_orientation: Orientation::Derived,
            sigma0: 1e-6,
            max_times: 100,
            variations: None,
            directions: None,
            random_directions: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Location {
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    /// One-based field index for per-field conditions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub checked: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRecord {
    pub condition: &'static str,
    pub pass: bool,
    pub margin: f64,
    pub argmin: Option<Location>,
    pub counts: Counts,
    /// Largest disagreement of the cross-check attached to this condition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
    pub notes: Vec<String>,
}

impl ConditionRecord {
    fn new(condition: &'static str) -> Self {
        Self {
            condition,
            pass: true,
            margin: 0.0,
            argmin: None,
            counts: Counts::default(),
            cross_check: None,
            notes: Vec::new(),
        }
    }

    /// Keeps the smaller margin; ties keep the earlier location.
    fn offer(&mut self, margin: f64, at: Location) {
        if self.argmin.is_none() || margin < self.margin {
            self.margin = margin;
            self.argmin = Some(at);
        }
    }

    fn cross(&mut self, gap: f64) {
        self.cross_check = Some(self.cross_check.map_or(gap, |c| c.max(gap)));
    }

    fn finish_inequality(mut self, tol: f64, agreement: Option<f64>) -> Self {
        if self.counts.checked == 0 {
            self.notes.push("no admissible points; vacuous".into());
        }
        self.pass = self.margin >= -tol;
        if let (Some(c), Some(limit)) = (self.cross_check, agreement) {
            if !(c <= limit) {
                self.pass = false;
                self.notes.push(format!("cross-check gap {c:e} exceeds {limit:e}"));
            }
        }
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub tol: f64,
    pub step: f64,
    pub probe_times: usize,
    pub nc1_orientation: Orientation,
    pub conditions: Vec<ConditionRecord>,
    pub pass: bool,
}

impl CertificateReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.condition == id)
    }
}

/// Candidate data at one probe time.
#[derive(Debug, Clone)]
pub struct Probe {
    pub t: f64,
    pub cell: usize,
    pub u: Vec<f64>,
    pub a: Vec<f64>,
    pub xi: Vec<f64>,
    pub pi: Vec<f64>,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

/// Probes at cell midpoints, at most `max_times` of them, evenly strided.
pub fn probes(ctx: &TransformContext<'_>, traj: &Trajectory, arc: &AdjointArc, max_times: usize) -> Result<Vec<Probe>> {
    let cells = traj.cells();
    if arc.pi_mid().len() != cells.len() {
        return Err(Error::GridMismatch("adjoint and trajectory grids differ".into()));
    }
    let count = cells.len().min(max_times.max(1));
    let picks: Vec<usize> = (0..count).map(|k| ((2 * k + 1) * cells.len()) / (2 * count)).collect();
    picks
        .par_iter()
        .map(|&k| {
            let c = &cells[k];
            let t = c.mid();
            let u = traj.cell_control(c, t);
            let pi = arc.pi_mid()[k].clone();
            let x = ctx.chart(&c.xi_mid, &u)?.x.clone();
            let p = row_mul(&pi, &ctx.dphi(&x, &u)?);
            Ok(Probe {
                t,
                cell: k,
                u,
                a: c.a.clone(),
                xi: c.xi_mid.clone(),
                pi,
                x,
                p,
            })
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// H-MIN-U over the joint `U×A` lattice and H-MIN-A over `A` with `u = u*`.
/// Also returns the per-probe minimum over the `u`-slice with `a = a*`.
pub fn check_hamiltonian_min(
    ctx: &TransformContext<'_>,
    probes: &[Probe],
    grid_u: usize,
    grid_a: usize,
    tol: f64,
) -> Result<(ConditionRecord, ConditionRecord, Vec<Option<f64>>)> {
    let spec = ctx.spec();
    let n = spec.n();
    let u_lat = spec.u_box().lattice(grid_u);
    let a_lat = spec.a_box().lattice(grid_a);
    struct Local {
        joint: Option<(f64, Vec<f64>, Vec<f64>)>,
        a_only: Option<(f64, Vec<f64>)>,
        slice: Option<f64>,
        checked: usize,
        skipped: usize,
    }
    let locals: Vec<Local> = probes
        .par_iter()
        .map(|pr| {
            let chart_star = ctx.chart(&pr.xi, &pr.u)?;
            let base = dot(&pr.pi[..n], &ctx.push_drift(&chart_star, &pr.u, &pr.a)?);
            let mut loc = Local {
                joint: None,
                a_only: None,
                slice: None,
                checked: 0,
                skipped: 0,
            };
            for uv in &u_lat {
                let chart = match ctx.chart(&pr.xi, uv) {
                    Ok(c) => c,
                    Err(Error::Domain(_)) | Err(Error::NonFinite) | Err(Error::SingularJacobian(_)) => {
                        loc.skipped += a_lat.len() + 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let eval = |av: &[f64]| -> Option<f64> {
                    match ctx.push_drift(&chart, uv, av) {
                        Ok(v) => Some(dot(&pr.pi[..n], &v) - base),
                        Err(_) => None,
                    }
                };
                for av in &a_lat {
                    match eval(av) {
                        Some(m) => {
                            loc.checked += 1;
                            if loc.joint.as_ref().is_none_or(|j| m < j.0) {
                                loc.joint = Some((m, uv.clone(), av.clone()));
                            }
                        }
                        None => loc.skipped += 1,
                    }
                }
                if let Some(m) = eval(&pr.a) {
                    loc.slice = Some(loc.slice.map_or(m, |s: f64| s.min(m)));
                }
            }
            for av in &a_lat {
                match ctx.push_drift(&chart_star, &pr.u, av) {
                    Ok(v) => {
                        let m = dot(&pr.pi[..n], &v) - base;
                        if loc.a_only.as_ref().is_none_or(|j| m < j.0) {
                            loc.a_only = Some((m, av.clone()));
                        }
                    }
                    Err(_) => loc.skipped += 1,
                }
            }
            Ok(loc)
        })
        .collect::<Result<_>>()?;

    let mut hu = ConditionRecord::new("H-MIN-U");
    let mut ha = ConditionRecord::new("H-MIN-A");
    let mut slices = Vec::with_capacity(probes.len());
    for (pr, loc) in probes.iter().zip(locals) {
        hu.counts.checked += loc.checked;
        hu.counts.skipped += loc.skipped;
        if let Some((m, u, a)) = loc.joint {
            hu.offer(
                m,
                Location {
                    t: pr.t,
                    u: Some(u),
                    a: Some(a),
                    ..Default::default()
                },
            );
        }
        if let Some((m, a)) = loc.a_only {
            ha.counts.checked += 1;
            ha.offer(
                m,
                Location {
                    t: pr.t,
                    a: Some(a),
                    ..Default::default()
                },
            );
        }
        slices.push(loc.slice);
    }
    Ok((hu.finish_inequality(tol, None), ha.finish_inequality(tol, None), slices))
}

/// TRANSPORT: `min_u p₁·(T_u f̃ − f̃)` at `(x*, u*, a*)`, cross-checked against the
/// transformed `u`-slice margins from [`check_hamiltonian_min`].
pub fn check_transport(
    ctx: &TransformContext<'_>,
    probes: &[Probe],
    slices: &[Option<f64>],
    grid_u: usize,
    tol: f64,
) -> Result<ConditionRecord> {
    let spec = ctx.spec();
    let n = spec.n();
    let u_lat = spec.u_box().lattice(grid_u);
    let locals: Vec<(Option<(f64, Vec<f64>)>, usize, usize)> = probes
        .par_iter()
        .map(|pr| {
            let f_star = spec.eval_aug_f(&pr.x, &pr.u, &pr.a)?;
            let mut best: Option<(f64, Vec<f64>)> = None;
            let (mut checked, mut skipped) = (0, 0);
            for uv in &u_lat {
                match ctx.transport(&pr.x, &pr.u, uv, &pr.a) {
                    Ok(tv) => {
                        checked += 1;
                        let m: f64 = (0..n).map(|i| pr.p[i] * (tv[i] - f_star[i])).sum();
                        if best.as_ref().is_none_or(|b| m < b.0) {
                            best = Some((m, uv.clone()));
                        }
                    }
                    Err(Error::TransportUndefined(_)) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok((best, checked, skipped))
        })
        .collect::<Result<_>>()?;
    let mut rec = ConditionRecord::new("TRANSPORT");
    for ((pr, (best, checked, skipped)), slice) in probes.iter().zip(locals).zip(slices) {
        rec.counts.checked += checked;
        rec.counts.skipped += skipped;
        if let Some((m, u)) = best {
            if let Some(s) = slice {
                rec.cross((m - s).abs());
            }
            rec.offer(
                m,
                Location {
                    t: pr.t,
                    u: Some(u),
                    ..Default::default()
                },
            );
        }
    }
    Ok(rec.finish_inequality(tol, Some(TRANSPORT_AGREEMENT)))
}

/// `π` at time `t` by linear interpolation between nodes.
fn pi_at(arc: &AdjointArc, t: f64) -> Vec<f64> {
    let nodes = arc.nodes();
    let j = nodes.partition_point(|n| n.t < t).clamp(1, nodes.len() - 1);
    let (a, b) = (&nodes[j - 1], &nodes[j]);
    if (b.t - t).abs() <= 1e-12 {
        return b.pi.clone();
    }
    let w = (t - a.t) / (b.t - a.t);
    a.pi.iter().zip(&b.pi).map(|(x, y)| x + w * (y - x)).collect()
}

/// `ν ≡ ±eᵢ` on `[t, T]` for `t` at the grid nodes nearest `0, T/4, T/2, 3T/4`.
pub fn default_variations(traj: &Trajectory, m: usize) -> Vec<VariationMap> {
    let nodes = traj.nodes();
    let horizon = nodes.last().unwrap().t;
    let mut starts: Vec<f64> = [0.0, 0.25, 0.5, 0.75]
        .iter()
        .map(|f| {
            let target = f * horizon;
            nodes
                .iter()
                .map(|n| n.t)
                .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
                .unwrap()
        })
        .collect();
    starts.dedup();
    let mut out = Vec::new();
    for t in starts {
        for i in 0..m {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; m];
                v[i] = sign;
                out.push(VariationMap::constant(t, horizon, v));
            }
        }
    }
    out
}

/// VARIATION-BV: `π₂(t)·ν(t) + ∫_{[t,T]} π₂ dν̇ ≥ −tol` with the original-coordinates
/// form `p₁·Σ g̃ᵢνⁱ + p₂·ν` as cross-check. With `strict`, an inadmissible variation
/// is an error; otherwise it is skipped and counted.
pub fn check_variation_bv(
    ctx: &TransformContext<'_>,
    traj: &Trajectory,
    arc: &AdjointArc,
    variations: &[VariationMap],
    sigma0: f64,
    tol: f64,
    strict: bool,
) -> Result<ConditionRecord> {
    let spec = ctx.spec();
    let (n, m) = (spec.n(), spec.m());
    let times = traj.times();
    let pi2: Vec<Vec<f64>> = arc.nodes().iter().map(|nd| nd.pi[n..].to_vec()).collect();
    let mut rec = ConditionRecord::new("VARIATION-BV");
    for nu in variations {
        let t = nu.start();
        if let Err(e) = nu.check_admissible(traj.control(), spec.u_box(), sigma0, &times) {
            if strict {
                return Err(e);
            }
            rec.counts.skipped += 1;
            continue;
        }
        let nu_t = nu.value_at(t);
        let pi = pi_at(arc, t);
        let margin = dot(&pi[n..], &nu_t) + radon_integral(&times, &pi2, nu)?;
        rec.counts.checked += 1;

        // Original coordinates, right side at t.
        let k = times.partition_point(|s| *s < t - 1e-12);
        if k < times.len() && (times[k] - t).abs() <= 1e-12 {
            let nd = &traj.nodes()[k];
            let p = &arc.nodes()[k].p_right;
            if !p.is_empty() {
                let mut orig = dot(&p[n..], &nu_t);
                for (i, w) in nu_t.iter().enumerate() {
                    if *w != 0.0 {
                        let g = spec.eval_aug_g(i + 1, &nd.x_right, &nd.u_right)?;
                        orig += w * dot(&p[..n], &g[..n]);
                    }
                }
                rec.cross((orig - dot(&pi[n..], &nu_t)).abs());
            }
        } else {
            rec.notes.push(format!(
                "variation start {t} is not a grid time; original form not evaluated"
            ));
        }
        let mut h = nu_t.clone();
        h.truncate(m);
        rec.offer(
            margin,
            Location {
                t,
                h: Some(h),
                ..Default::default()
            },
        );
    }
    Ok(rec.finish_inequality(tol, Some(VARIATION_AGREEMENT)))
}

fn bump(box_: &SystemSpec, u: &[f64], i: usize, delta: f64) -> bool {
    let mut v = u.to_vec();
    v[i] += delta;
    box_.u_box().contains(&v)
}

fn fd_eta(ctx: &TransformContext<'_>, pr: &Probe, dirs: &[(usize, f64)]) -> Result<f64> {
    let n = pr.xi.len();
    let mut eta = pr.u.clone();
    for (i, d) in dirs {
        eta[*i] += d;
    }
    Ok(dot(&pr.pi[..n], &ctx.transformed_f(&pr.xi, &eta, &pr.a)?))
}

/// NC-I and NC-II.
pub fn check_nc_first(
    ctx: &TransformContext<'_>,
    traj: &Trajectory,
    probes: &[Probe],
    orientation: Orientation,
    sigma0: f64,
    tol: f64,
) -> Result<(ConditionRecord, ConditionRecord)> {
    let spec = ctx.spec();
    let m = spec.m();
    let nodes = traj.nodes();
    // suffix[i][k]: u* + σ₀eᵢ admissible at every node from k on, both sides.
    let suffix: Vec<Vec<bool>> = (0..m)
        .map(|i| {
            let mut ok = vec![true; nodes.len() + 1];
            for k in (0..nodes.len()).rev() {
                ok[k] =
                    ok[k + 1] && bump(spec, &nodes[k].u_left, i, sigma0) && bump(spec, &nodes[k].u_right, i, sigma0);
            }
            ok
        })
        .collect();
    let brackets: Vec<AugField> = spec.impulses().iter().map(|g| spec.bracket(g, spec.drift())).collect();

    let rows: Vec<Vec<(Option<f64>, Option<(f64, f64)>)>> = probes
        .par_iter()
        .map(|pr| {
            (0..m)
                .map(|i| {
                    let one_sided = bump(spec, &pr.u, i, sigma0);
                    let nc1 = if one_sided && suffix[i][pr.cell + 1] {
                        let g = spec.eval_aug_g(i + 1, &pr.x, &pr.u)?;
                        Some(dot(&pr.p, &g))
                    } else {
                        None
                    };
                    let nc2 = if one_sided {
                        let b = spec.eval_field(&brackets[i], &pr.x, &pr.u, Some(&pr.a))?;
                        let symbolic = dot(&pr.p, &b);
                        let e = 1e-5 * pr.u[i].abs().max(1.0);
                        let fd = (fd_eta(ctx, pr, &[(i, e)])? - fd_eta(ctx, pr, &[(i, -e)])?) / (2.0 * e);
                        Some((symbolic, fd))
                    } else {
                        None
                    };
                    Ok((nc1, nc2))
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;

    let mut r1 = ConditionRecord::new("NC-I");
    let mut r2 = ConditionRecord::new("NC-II");
    r1.notes.push(match orientation {
        Orientation::Derived => "orientation derived: margin = p.g_i, pass iff >= -tol".into(),
        Orientation::Printed => "orientation printed: margin = -p.g_i, pass iff >= -tol".into(),
    });
    let mut raw_min = f64::INFINITY;
    let mut raw_max = f64::NEG_INFINITY;
    for (pr, row) in probes.iter().zip(rows) {
        for (i, (nc1, nc2)) in row.into_iter().enumerate() {
            let at = || Location {
                t: pr.t,
                u: Some(pr.u.clone()),
                index: Some(i + 1),
                ..Default::default()
            };
            match nc1 {
                Some(v) => {
                    r1.counts.checked += 1;
                    raw_min = raw_min.min(v);
                    raw_max = raw_max.max(v);
                    let margin = match orientation {
                        Orientation::Derived => v,
                        Orientation::Printed => -v,
                    };
                    r1.offer(margin, at());
                }
                None => r1.counts.skipped += 1,
            }
            match nc2 {
                Some((sym, fd)) => {
                    r2.counts.checked += 1;
                    r2.cross((sym - fd).abs());
                    r2.offer(sym, at());
                }
                None => r2.counts.skipped += 1,
            }
        }
    }
    if r1.counts.checked > 0 {
        r1.notes.push(format!("raw p.g_i range [{raw_min:e}, {raw_max:e}]"));
    }
    Ok((
        r1.finish_inequality(tol, None),
        r2.finish_inequality(tol, Some(BRACKET_AGREEMENT)),
    ))
}

/// Default NC-III directions: `±eᵢ`, `(eᵢ ± eⱼ)/√2` and `count` seeded random unit vectors.
pub fn default_directions(m: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; m];
            v[i] = s;
            out.push(v);
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..m {
        for j in i + 1..m {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; m];
                v[i] = r;
                v[j] = s * r;
                out.push(v);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// NC-III-SYM and NC-III-PSD on the two-sidedly admissible index set `J(t)`.
pub fn check_nc_second(
    ctx: &TransformContext<'_>,
    probes: &[Probe],
    directions: &[Vec<f64>],
    sigma0: f64,
    tol: f64,
) -> Result<(ConditionRecord, ConditionRecord)> {
    let spec = ctx.spec();
    let m = spec.m();
    let inner: Vec<AugField> = spec.impulses().iter().map(|g| spec.bracket(g, spec.drift())).collect();
    // second[j][k] = [g_j, [g_k, f]]
    let second: Vec<Vec<AugField>> = spec
        .impulses()
        .iter()
        .map(|gj| inner.iter().map(|b| spec.bracket(gj, b)).collect())
        .collect();

    struct Local {
        asym: f64,
        hess_gap: f64,
        psd: Option<(f64, Vec<f64>)>,
        checked: usize,
        skipped: usize,
    }
    let locals: Vec<Local> = probes
        .par_iter()
        .map(|pr| {
            let set: Vec<usize> = (0..m)
                .filter(|&i| bump(spec, &pr.u, i, sigma0) && bump(spec, &pr.u, i, -sigma0))
                .collect();
            let mut loc = Local {
                asym: 0.0,
                hess_gap: 0.0,
                psd: None,
                checked: 0,
                skipped: 0,
            };
            if set.is_empty() {
                loc.skipped = 1;
                return Ok(loc);
            }
            loc.checked = 1;
            let mut q = vec![vec![0.0; m]; m];
            for &j in &set {
                for &k in &set {
                    let b = spec.eval_field(&second[j][k], &pr.x, &pr.u, Some(&pr.a))?;
                    q[j][k] = dot(&pr.p, &b);
                }
            }
            for &j in &set {
                for &k in &set {
                    loc.asym = loc.asym.max((q[j][k] - q[k][j]).abs());
                    let (ej, ek) = (1e-4 * pr.u[j].abs().max(1.0), 1e-4 * pr.u[k].abs().max(1.0));
                    let hess = if j == k {
                        (fd_eta(ctx, pr, &[(j, ej)])? - 2.0 * fd_eta(ctx, pr, &[])? + fd_eta(ctx, pr, &[(j, -ej)])?)
                            / (ej * ej)
                    } else {
                        (fd_eta(ctx, pr, &[(j, ej), (k, ek)])?
                            - fd_eta(ctx, pr, &[(j, ej), (k, -ek)])?
                            - fd_eta(ctx, pr, &[(j, -ej), (k, ek)])?
                            + fd_eta(ctx, pr, &[(j, -ej), (k, -ek)])?)
                            / (4.0 * ej * ek)
                    };
                    loc.hess_gap = loc.hess_gap.max((hess - q[j][k]).abs());
                }
            }
            for h in directions {
                if h.iter().enumerate().any(|(i, v)| *v != 0.0 && !set.contains(&i)) {
                    continue;
                }
                let v: f64 = (0..m).map(|j| (0..m).map(|k| h[j] * q[j][k] * h[k]).sum::<f64>()).sum();
                if loc.psd.as_ref().is_none_or(|b| v < b.0) {
                    loc.psd = Some((v, h.clone()));
                }
            }
            Ok(loc)
        })
        .collect::<Result<_>>()?;

    let mut sym = ConditionRecord::new("NC-III-SYM");
    let mut psd = ConditionRecord::new("NC-III-PSD");
    for (pr, loc) in probes.iter().zip(locals) {
        sym.counts.checked += loc.checked;
        sym.counts.skipped += loc.skipped;
        psd.counts.skipped += loc.skipped;
        if loc.checked == 0 {
            continue;
        }
        psd.cross(loc.hess_gap);
        sym.cross(loc.hess_gap);
        if sym.argmin.is_none() || loc.asym > sym.margin {
            sym.margin = loc.asym;
            sym.argmin = Some(Location {
                t: pr.t,
                u: Some(pr.u.clone()),
                ..Default::default()
            });
        }
        match loc.psd {
            Some((v, h)) => {
                psd.counts.checked += 1;
                psd.offer(
                    v,
                    Location {
                        t: pr.t,
                        u: Some(pr.u.clone()),
                        h: Some(h),
                        ..Default::default()
                    },
                );
            }
            None => psd.counts.skipped += 1,
        }
    }
    if sym.counts.checked == 0 {
        sym.notes.push("no two-sidedly admissible index; vacuous".into());
    }
    sym.pass = sym.margin <= tol && sym.cross_check.is_none_or(|c| c <= HESSIAN_AGREEMENT);
    sym.notes.push("margin is max |Q - Q^T|, pass iff <= tol".into());
    Ok((sym, psd.finish_inequality(tol, Some(HESSIAN_AGREEMENT))))
}

/// Runs the whole pipeline on a candidate and evaluates every condition.
pub fn certify(
    ctx: &TransformContext<'_>,
    u_star: &ControlSignal,
    a_star: &OrdinarySignal,
    options: &CertifyOptions,
) -> Result<CertificateReport> {
    let spec = ctx.spec();
    let step = options.step.unwrap_or(spec.horizon() / 1000.0);
    let traj = integrate_impulsive(ctx, u_star, a_star, step).map_err(|e| e.in_stage("integrate"))?;
    let arc = solve_transformed_adjoint(ctx, &traj).map_err(|e| e.in_stage("adjoint"))?;
    let arc = pull_back_adjoint(ctx, &arc, &traj).map_err(|e| e.in_stage("pull-back"))?;
    certify_arcs(ctx, &traj, &arc, options)
}

/// Evaluates every condition on a precomputed trajectory and pulled-back adjoint.
pub fn certify_arcs(
    ctx: &TransformContext<'_>,
    traj: &Trajectory,
    arc: &AdjointArc,
    options: &CertifyOptions,
) -> Result<CertificateReport> {
    let spec = ctx.spec();
    let tol = options.tol;
    let pr = probes(ctx, traj, arc, options.max_times).map_err(|e| e.in_stage("probes"))?;
    let (hu, ha, slices) =
        check_hamiltonian_min(ctx, &pr, options.grid_u, options.grid_a, tol).map_err(|e| e.in_stage("H-MIN"))?;
    let tr = check_transport(ctx, &pr, &slices, options.grid_u, tol).map_err(|e| e.in_stage("TRANSPORT"))?;
    let (variations, strict) = match &options.variations {
        Some(v) => (v.clone(), true),
        None => (default_variations(traj, spec.m()), false),
    };
    let bv = check_variation_bv(ctx, traj, arc, &variations, options.sigma0, tol, strict)
        .map_err(|e| e.in_stage("VARIATION-BV"))?;
    let (n1, n2) = check_nc_first(ctx, traj, &pr, options.nc1_orientation, options.sigma0, tol)
        .map_err(|e| e.in_stage("NC-I/II"))?;
    let directions = match &options.directions {
        Some(d) => d.clone(),
        None => default_directions(spec.m(), options.random_directions, options.seed),
    };
    let (s3, p3) = check_nc_second(ctx, &pr, &directions, options.sigma0, tol).map_err(|e| e.in_stage("NC-III"))?;
    let conditions = vec![hu, ha, tr, bv, n1, n2, s3, p3];
    let pass = conditions.iter().all(|c| c.pass);
    Ok(CertificateReport {
        tol,
        step: traj.step(),
        probe_times: pr.len(),
        nc1_orientation: options.nc1_orientation,
        conditions,
        pass,
    })
}
