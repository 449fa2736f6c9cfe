//! Pointwise-defined controls with jumps, ordinary controls and variation maps.
//!
//! A [`ControlSignal`] stores, at every breakpoint, both one-sided limits and
//! which of them is the pointwise value. Between breakpoints it is linear from
//! the right limit at the start of the piece to the left limit at its end; a
//! piecewise-constant signal is the special case where those two agree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{BoxSet, SystemSpec};

/// Slack for comparing times against breakpoints and the horizon.
const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalKind {
    #[serde(rename = "pwc")]
    PiecewiseConstant,
    #[serde(rename = "pwl")]
    PiecewiseLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Pointwise,
}

/// On-disk form of a control signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalDocument {
    pub kind: SignalKind,
    pub breakpoints: Vec<f64>,
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointwise_side: Option<Vec<Side>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    kind: SignalKind,
    breakpoints: Vec<f64>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    /// `true` where the pointwise value is the right limit.
    pointwise_right: Vec<bool>,
}

fn check_lengths(doc_len: usize, rows: &[Vec<f64>], key: &str) -> Result<usize> {
    if rows.len() != doc_len {
        return Err(Error::schema(
            format!("/{key}"),
            format!("expected {doc_len} rows, one per breakpoint, got {}", rows.len()),
        ));
    }
    let m = rows.first().map_or(0, Vec::len);
    for (j, r) in rows.iter().enumerate() {
        if r.len() != m {
            return Err(Error::schema(format!("/{key}/{j}"), format!("expected {m} components")));
        }
        if let Some(i) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::schema(format!("/{key}/{j}/{i}"), "value is not finite"));
        }
    }
    Ok(m)
}

impl ControlSignal {
    /// Validates structure only; see [`validate_for`](Self::validate_for) for system checks.
    pub fn from_document(doc: &SignalDocument) -> Result<Self> {
        let k = doc.breakpoints.len();
        if k < 2 {
            return Err(Error::schema("/breakpoints", "need at least the two endpoints"));
        }
        if let Some(j) = doc.breakpoints.iter().position(|t| !t.is_finite()) {
            return Err(Error::schema(format!("/breakpoints/{j}"), "value is not finite"));
        }
        if doc.breakpoints[0] != 0.0 {
            return Err(Error::invariant("/breakpoints/0", "first breakpoint must be 0"));
        }
        if let Some(j) = doc.breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invariant(
                format!("/breakpoints/{}", j + 1),
                "breakpoints not increasing",
            ));
        }
        let m = check_lengths(k, &doc.left, "left")?;
        if check_lengths(k, &doc.right, "right")? != m {
            return Err(Error::schema("/right", "left and right rows differ in length"));
        }
        if doc.kind == SignalKind::PiecewiseConstant {
            for j in 1..k {
                if doc.left[j] != doc.right[j - 1] {
                    return Err(Error::invariant(
                        format!("/left/{j}"),
                        "piecewise-constant signal must hold the previous right value",
                    ));
                }
            }
        }
        let pointwise_right = match &doc.pointwise_side {
            None => (0..k).map(|j| j != 0 && j != k - 1).collect(),
            Some(sides) => {
                if sides.len() != k {
                    return Err(Error::schema(
                        "/pointwise_side",
                        format!("expected {k} entries, got {}", sides.len()),
                    ));
                }
                sides
                    .iter()
                    .enumerate()
                    .map(|(j, s)| match s {
                        Side::Left => Ok(false),
                        Side::Right => Ok(true),
                        Side::Pointwise => Err(Error::schema(
                            format!("/pointwise_side/{j}"),
                            "must be \"left\" or \"right\"",
                        )),
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(Self {
            kind: doc.kind,
            breakpoints: doc.breakpoints.clone(),
            left: doc.left.clone(),
            right: doc.right.clone(),
            pointwise_right,
        })
    }

    pub fn to_document(&self) -> SignalDocument {
        SignalDocument {
            kind: self.kind,
            breakpoints: self.breakpoints.clone(),
            left: self.left.clone(),
            right: self.right.clone(),
            pointwise_side: Some(
                self.pointwise_right
                    .iter()
                    .map(|r| if *r { Side::Right } else { Side::Left })
                    .collect(),
            ),
        }
    }

    /// Checks horizon, `u(0) = u₀` and membership in `U` at every stored value.
    pub fn validate_for(&self, spec: &SystemSpec) -> Result<()> {
        if self.dim() != spec.m() {
            return Err(Error::schema(
                "/left/0",
                format!("signal has {} components, system has m = {}", self.dim(), spec.m()),
            ));
        }
        let t_end = *self.breakpoints.last().unwrap();
        if (t_end - spec.horizon()).abs() > TIME_EPS {
            return Err(Error::invariant(
                format!("/breakpoints/{}", self.breakpoints.len() - 1),
                format!("last breakpoint {t_end} must equal T = {}", spec.horizon()),
            ));
        }
        check_in_box(&self.left, &self.breakpoints, spec.u_box(), "left")?;
        check_in_box(&self.right, &self.breakpoints, spec.u_box(), "right")?;
        let u_init = self.pointwise(0);
        if u_init != spec.u0() {
            return Err(Error::invariant(
                "/pointwise_side/0",
                format!("u(0) = {u_init:?} differs from u0 = {:?}", spec.u0()),
            ));
        }
        Ok(())
    }

    /// Piecewise-constant signal from breakpoints and the value on each piece.
    /// The pointwise value at interior jumps is the right limit, `u(0)` is `initial`.
    pub fn piecewise_constant(breakpoints: Vec<f64>, initial: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        let k = breakpoints.len();
        if pieces.len() + 1 != k {
            return Err(Error::Dimension(format!(
                "{} pieces for {} breakpoints",
                pieces.len(),
                k
            )));
        }
        let mut left = vec![initial];
        left.extend(pieces.iter().cloned());
        let mut right = pieces;
        right.push(left[k - 1].clone());
        Self::from_document(&SignalDocument {
            kind: SignalKind::PiecewiseConstant,
            breakpoints,
            left,
            right,
            pointwise_side: None,
        })
    }

    /// Continuous piecewise-linear interpolant of `values` at `breakpoints`.
    pub fn piecewise_linear(breakpoints: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_document(&SignalDocument {
            kind: SignalKind::PiecewiseLinear,
            breakpoints,
            left: values.clone(),
            right: values,
            pointwise_side: None,
        })
    }

    pub fn constant(horizon: f64, value: Vec<f64>) -> Self {
        Self::piecewise_constant(vec![0.0, horizon], value.clone(), vec![value])
            .expect("constant signal is well formed")
    }

    /// `u₀` on `[0, τ)`, `u₀ + Δ` afterwards, right-pointwise at `τ`.
    /// With `τ = 0` the jump happens at `0⁺` and `u(0) = u₀`.
    pub fn step(horizon: f64, u0: Vec<f64>, tau: f64, delta: &[f64]) -> Result<Self> {
        let after: Vec<f64> = u0.iter().zip(delta).map(|(a, b)| a + b).collect();
        if tau == 0.0 {
            Self::piecewise_constant(vec![0.0, horizon], u0, vec![after])
        } else {
            Self::piecewise_constant(vec![0.0, tau, horizon], u0.clone(), vec![u0, after])
        }
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.left[0].len()
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn left_limit(&self, j: usize) -> &[f64] {
        &self.left[j]
    }

    pub fn right_limit(&self, j: usize) -> &[f64] {
        &self.right[j]
    }

    pub fn pointwise(&self, j: usize) -> &[f64] {
        if self.pointwise_right[j] {
            &self.right[j]
        } else {
            &self.left[j]
        }
    }

    /// Pointwise side at breakpoint `j`: [`Side::Left`] or [`Side::Right`].
    pub fn pointwise_side(&self, j: usize) -> Side {
        if self.pointwise_right[j] {
            Side::Right
        } else {
            Side::Left
        }
    }

    pub fn has_jump(&self, j: usize) -> bool {
        self.left[j] != self.right[j]
    }

    /// `true` if there is no jump anywhere, including at the endpoints.
    pub fn is_continuous(&self) -> bool {
        (0..self.breakpoints.len()).all(|j| !self.has_jump(j))
    }

    /// Index of the breakpoint equal to `t` (within 1e-12), if any.
    pub fn breakpoint_index(&self, t: f64) -> Option<usize> {
        let j = self.breakpoints.partition_point(|b| *b < t - TIME_EPS);
        (j < self.breakpoints.len() && (self.breakpoints[j] - t).abs() <= TIME_EPS).then_some(j)
    }

    /// Piece `j` covers `(t_j, t_{j+1})`. For `t` on a breakpoint the piece to its right
    /// is returned, except at `T`.
    pub fn piece_index(&self, t: f64) -> usize {
        let j = self.breakpoints.partition_point(|b| *b <= t);
        j.saturating_sub(1).min(self.breakpoints.len() - 2)
    }

    /// Value of the linear interpolant of piece `j` at `t`, extended beyond the piece.
    pub fn piece_value(&self, j: usize, t: f64) -> Vec<f64> {
        let (t0, t1) = (self.breakpoints[j], self.breakpoints[j + 1]);
        let s = (t - t0) / (t1 - t0);
        self.right[j]
            .iter()
            .zip(&self.left[j + 1])
            .map(|(a, b)| if a == b { *a } else { a + s * (b - a) })
            .collect()
    }

    /// `u̇` on piece `j`.
    pub fn piece_slope(&self, j: usize) -> Vec<f64> {
        let dt = self.breakpoints[j + 1] - self.breakpoints[j];
        self.right[j]
            .iter()
            .zip(&self.left[j + 1])
            .map(|(a, b)| (b - a) / dt)
            .collect()
    }

    pub fn value_at(&self, t: f64, side: Side) -> Result<Vec<f64>> {
        let horizon = self.horizon();
        if !(t >= -TIME_EPS && t <= horizon + TIME_EPS) {
            return Err(Error::OutsideHorizon { t, horizon });
        }
        if let Some(j) = self.breakpoint_index(t) {
            return Ok(match side {
                Side::Left => self.left[j].clone(),
                Side::Right => self.right[j].clone(),
                Side::Pointwise => self.pointwise(j).to_vec(),
            });
        }
        Ok(self.piece_value(self.piece_index(t), t))
    }

    /// Total jump mass plus `∫|u̇|`, in the ℓ¹ norm on `ℝᵐ`.
    pub fn total_variation(&self) -> f64 {
        let jumps: f64 = (0..self.breakpoints.len())
            .map(|j| l1(&self.left[j], &self.right[j]))
            .sum();
        let slopes: f64 = (0..self.breakpoints.len() - 1)
            .map(|j| l1(&self.right[j], &self.left[j + 1]))
            .sum();
        jumps + slopes
    }

    /// Continuous piecewise-linear approximation.
    ///
    /// Each jump at an interior `τ` is replaced by a ramp over `[τ − r, τ + r]`
    /// with `r = 1/k`, clipped to half the distance to neighbouring jumps and
    /// to the horizon. Jumps at `0` or `T` become one-sided ramps of width `r`
    /// that keep the pointwise values `u(0)` and `u(T)`. The `L¹` distance to
    /// the original is `Σ|Δ|·r/2`.
    pub fn mollify(&self, k: usize) -> ControlSignal {
        assert!(k >= 1, "mollify needs k >= 1");
        if self.is_continuous() {
            return self.clone();
        }
        let last = self.breakpoints.len() - 1;
        let horizon = self.horizon();
        let base = 1.0 / k as f64;
        let jumps: Vec<usize> = (0..=last).filter(|&j| self.has_jump(j)).collect();

        // Ramp windows [lo, hi] per jump.
        let mut windows = Vec::with_capacity(jumps.len());
        for (q, &j) in jumps.iter().enumerate() {
            let tau = self.breakpoints[j];
            let mut r = base;
            if q > 0 {
                r = r.min(0.5 * (tau - self.breakpoints[jumps[q - 1]]));
            }
            if q + 1 < jumps.len() {
                r = r.min(0.5 * (self.breakpoints[jumps[q + 1]] - tau));
            }
            let (lo, hi) = if j == 0 {
                (0.0, r.min(horizon))
            } else if j == last {
                ((tau - r).max(0.0), tau)
            } else {
                let r = r.min(tau).min(horizon - tau);
                (tau - r, tau + r)
            };
            windows.push((j, lo, hi));
        }

        let eval = |t: f64| -> Vec<f64> {
            match self.breakpoint_index(t) {
                Some(j) => self.pointwise(j).to_vec(),
                None => self.piece_value(self.piece_index(t), t),
            }
        };
        let mut knots: Vec<(f64, Vec<f64>)> = Vec::new();
        for (j, &t) in self.breakpoints.iter().enumerate() {
            let inside = windows
                .iter()
                .any(|&(_, lo, hi)| t > lo + TIME_EPS && t < hi - TIME_EPS);
            if !inside && !self.has_jump(j) {
                knots.push((t, self.pointwise(j).to_vec()));
            }
        }
        for &(j, lo, hi) in &windows {
            let at_lo = if j == 0 {
                self.pointwise(0).to_vec()
            } else if self.breakpoint_index(lo).is_some() {
                self.value_at(lo, Side::Right).unwrap()
            } else {
                eval(lo)
            };
            let at_hi = if j == last {
                self.pointwise(last).to_vec()
            } else if self.breakpoint_index(hi).is_some() {
                self.value_at(hi, Side::Left).unwrap()
            } else {
                eval(hi)
            };
            knots.push((lo, at_lo));
            knots.push((hi, at_hi));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        knots.dedup_by(|b, a| (a.0 - b.0).abs() <= TIME_EPS);
        let (times, values): (Vec<f64>, Vec<Vec<f64>>) = knots.into_iter().unzip();
        ControlSignal::piecewise_linear(times, values).expect("mollified knots are increasing")
    }
}

fn check_in_box(rows: &[Vec<f64>], times: &[f64], u_box: &BoxSet, key: &str) -> Result<()> {
    for (j, row) in rows.iter().enumerate() {
        if let Some(i) = u_box.violation(row) {
            let iv = u_box.intervals()[i];
            return Err(Error::invariant(
                format!("/{key}/{j}/{i}"),
                format!(
                    "u{} = {} at t = {} outside U = [{}, {}]",
                    i + 1,
                    row[i],
                    times[j],
                    iv.lo,
                    iv.hi
                ),
            ));
        }
    }
    Ok(())
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Exact `∫₀ᵀ |u − v|₁ dt` for two signals on the same horizon.
pub fn l1_distance(u: &ControlSignal, v: &ControlSignal) -> f64 {
    let mut ts: Vec<f64> = u.breakpoints().iter().chain(v.breakpoints()).copied().collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|b, a| (*a - *b).abs() <= TIME_EPS);
    let mut total = 0.0;
    for w in ts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let (ju, jv) = (u.piece_index(mid), v.piece_index(mid));
        let da: Vec<f64> = u
            .piece_value(ju, a)
            .iter()
            .zip(v.piece_value(jv, a))
            .map(|(p, q)| p - q)
            .collect();
        let db: Vec<f64> = u
            .piece_value(ju, b)
            .iter()
            .zip(v.piece_value(jv, b))
            .map(|(p, q)| p - q)
            .collect();
        total += da
            .iter()
            .zip(&db)
            .map(|(p, q)| abs_linear_integral(*p, *q, b - a))
            .sum::<f64>();
    }
    total
}

/// `∫₀ʰ |p + (q − p)s/h| ds`.
fn abs_linear_integral(p: f64, q: f64, h: f64) -> f64 {
    if p * q >= 0.0 {
        0.5 * h * (p.abs() + q.abs())
    } else {
        0.5 * h * (p * p + q * q) / (p.abs() + q.abs())
    }
}

/// Piecewise-constant ordinary control: `values[j]` on `[t_j, t_{j+1})`, the last piece closed.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinarySignal {
    breakpoints: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl OrdinarySignal {
    pub fn new(breakpoints: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(Error::schema(
                "/breakpoints",
                "need one value per piece and at least one piece",
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::invariant("/breakpoints/0", "first breakpoint must be 0"));
        }
        if let Some(j) = breakpoints.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invariant(
                format!("/breakpoints/{}", j + 1),
                "breakpoints not increasing",
            ));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(horizon: f64, value: Vec<f64>) -> Self {
        Self {
            breakpoints: vec![0.0, horizon],
            values: vec![value],
        }
    }

    /// Reads the control-signal file format; it must be piecewise constant.
    pub fn from_document(doc: &SignalDocument) -> Result<Self> {
        if doc.kind != SignalKind::PiecewiseConstant {
            return Err(Error::invariant(
                "/kind",
                "ordinary controls must be piecewise constant",
            ));
        }
        let sig = ControlSignal::from_document(doc)?;
        let k = sig.breakpoints.len();
        Self::new(sig.breakpoints.clone(), sig.right[..k - 1].to_vec())
    }

    pub fn validate_for(&self, spec: &SystemSpec) -> Result<()> {
        let t_end = *self.breakpoints.last().unwrap();
        if (t_end - spec.horizon()).abs() > TIME_EPS {
            return Err(Error::invariant(
                format!("/breakpoints/{}", self.breakpoints.len() - 1),
                format!("last breakpoint {t_end} must equal T = {}", spec.horizon()),
            ));
        }
        for (j, v) in self.values.iter().enumerate() {
            if v.len() != spec.l() {
                return Err(Error::schema(
                    format!("/right/{j}"),
                    format!("expected l = {} components", spec.l()),
                ));
            }
            if let Some(i) = spec.a_box().violation(v) {
                return Err(Error::invariant(
                    format!("/right/{j}/{i}"),
                    format!("a{} = {} at t = {} outside A", i + 1, v[i], self.breakpoints[j]),
                ));
            }
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Value at `t`; right-continuous, left-continuous at `T`.
    pub fn value_at(&self, t: f64) -> &[f64] {
        let j = self.breakpoints.partition_point(|b| *b <= t + TIME_EPS);
        &self.values[j.saturating_sub(1).min(self.values.len() - 1)]
    }
}

/// Variation map `ν` on `[t, T]`, continuous between breakpoints and linear on each
/// piece. Right-continuous at `t` and left-continuous at `T`, so only interior
/// breakpoints carry jumps of `ν̇`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationMap {
    breakpoints: Vec<f64>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl VariationMap {
    pub fn new(breakpoints: Vec<f64>, left: Vec<Vec<f64>>, right: Vec<Vec<f64>>) -> Result<Self> {
        let k = breakpoints.len();
        if k < 2 || left.len() != k || right.len() != k {
            return Err(Error::Dimension("variation map needs matching left/right rows".into()));
        }
        if let Some(j) = breakpoints.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invariant(
                format!("/breakpoints/{}", j + 1),
                "breakpoints not increasing",
            ));
        }
        let mut left = left;
        let mut right = right;
        // Endpoint continuity conventions.
        left[0] = right[0].clone();
        right[k - 1] = left[k - 1].clone();
        Ok(Self {
            breakpoints,
            left,
            right,
        })
    }

    pub fn constant(start: f64, horizon: f64, value: Vec<f64>) -> Self {
        let rows = vec![value.clone(), value];
        Self::new(vec![start, horizon], rows.clone(), rows).expect("constant variation is well formed")
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `ν(s)`, right-continuous in the interior.
    pub fn value_at(&self, s: f64) -> Vec<f64> {
        self.sided(s, Side::Right)
    }

    pub fn sided(&self, s: f64, side: Side) -> Vec<f64> {
        let k = self.breakpoints.len();
        let j = self.breakpoints.partition_point(|b| *b < s - TIME_EPS);
        if j < k && (self.breakpoints[j] - s).abs() <= TIME_EPS {
            return match side {
                Side::Left => self.left[j].clone(),
                _ => self.right[j].clone(),
            };
        }
        let p = j.clamp(1, k - 1) - 1;
        let (t0, t1) = (self.breakpoints[p], self.breakpoints[p + 1]);
        let w = (s - t0) / (t1 - t0);
        self.right[p]
            .iter()
            .zip(&self.left[p + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// Slope of `ν` on the piece containing `s`.
    pub fn slope_at(&self, s: f64) -> Vec<f64> {
        let k = self.breakpoints.len();
        let p = self.breakpoints.partition_point(|b| *b <= s).clamp(1, k - 1) - 1;
        let dt = self.breakpoints[p + 1] - self.breakpoints[p];
        self.right[p]
            .iter()
            .zip(&self.left[p + 1])
            .map(|(a, b)| (b - a) / dt)
            .collect()
    }

    /// Interior jumps `(τ, Δν)`.
    pub fn jumps(&self) -> Vec<(f64, Vec<f64>)> {
        let k = self.breakpoints.len();
        (1..k - 1)
            .filter(|&j| self.left[j] != self.right[j])
            .map(|j| {
                let d = self.right[j].iter().zip(&self.left[j]).map(|(r, l)| r - l).collect();
                (self.breakpoints[j], d)
            })
            .collect()
    }

    /// Checks `u(τ) + σ₀ν(τ) ∈ U` at both sides of every grid time in `[t, T]`.
    /// Returns the first violating time.
    pub fn check_admissible(&self, u: &ControlSignal, u_box: &BoxSet, sigma0: f64, grid: &[f64]) -> Result<()> {
        let mut times: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|s| *s >= self.start() - TIME_EPS && *s <= self.end() + TIME_EPS)
            .chain(self.breakpoints.iter().copied())
            .collect();
        times.sort_by(f64::total_cmp);
        for s in times {
            for side in [Side::Left, Side::Right] {
                let us = u.value_at(s, side)?;
                let nu = self.sided(s, side);
                let p: Vec<f64> = us.iter().zip(&nu).map(|(a, b)| a + sigma0 * b).collect();
                if let Some(i) = u_box.violation(&p) {
                    return Err(Error::Admissibility {
                        t: s,
                        message: format!("u{} + sigma*nu{} = {} leaves U", i + 1, i + 1, p[i]),
                    });
                }
            }
        }
        Ok(())
    }
}

/// `∫_{[t,T]} p₂ dν̇`: point masses at the jumps of `ν` plus the trapezoid rule for
/// `∫ p₂·ν′` over the absolutely continuous part.
///
/// `p2` is sampled at increasing `times`; values between samples are linearly
/// interpolated, so the grid should contain the breakpoints of `ν`.
pub fn radon_integral(times: &[f64], p2: &[Vec<f64>], nu: &VariationMap) -> Result<f64> {
    if times.len() != p2.len() || times.len() < 2 {
        return Err(Error::GridMismatch("sample times and values differ in length".into()));
    }
    let (t, horizon) = (nu.start(), nu.end());
    if times[0] > t + TIME_EPS || *times.last().unwrap() < horizon - TIME_EPS {
        return Err(Error::GridMismatch(format!(
            "samples cover [{}, {}], window is [{t}, {horizon}]",
            times[0],
            times.last().unwrap()
        )));
    }
    let sample = |s: f64| -> Vec<f64> {
        let j = times.partition_point(|b| *b < s - TIME_EPS);
        if j < times.len() && (times[j] - s).abs() <= TIME_EPS {
            return p2[j].clone();
        }
        let j = j.clamp(1, times.len() - 1);
        let w = (s - times[j - 1]) / (times[j] - times[j - 1]);
        p2[j - 1].iter().zip(&p2[j]).map(|(a, b)| a + w * (b - a)).collect()
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut pts: Vec<f64> = times
        .iter()
        .copied()
        .filter(|s| *s > t && *s < horizon)
        .chain(nu.breakpoints().iter().copied())
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|b, a| (*a - *b).abs() <= TIME_EPS);

    let mut total: f64 = nu.jumps().iter().map(|(tau, d)| dot(&sample(*tau), d)).sum();
    let mut prev = sample(pts[0]);
    for w in pts.windows(2) {
        let next = sample(w[1]);
        let slope = nu.slope_at(0.5 * (w[0] + w[1]));
        total += 0.5 * (w[1] - w[0]) * (dot(&prev, &slope) + dot(&next, &slope));
        prev = next;
    }
    Ok(total)
}
