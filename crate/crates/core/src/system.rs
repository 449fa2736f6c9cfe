//! Problem data, augmented vector fields and Lie brackets.
//!
//! Fields live on the augmented space `(x, z)` of dimension `n + m`, where
//! `z` is identified with the impulsive control `u`. Every component is an
//! [`Expr`] over the flat variable layout `[x, u, a]`, so differentiating
//! with respect to `z_α` is differentiating with respect to `u_α`.
//!
//! The bracket convention is `[A, B] = DB·A − DA·B`. With it the drift
//! identity `π·[G_i, F] = π₁·∂F̃/∂η_i` holds in straightened coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Group, Names, VarId};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Axis-aligned box `∏ [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet(Vec<Interval>);

impl BoxSet {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Self(intervals)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.0.len() && self.0.iter().zip(p).all(|(iv, v)| iv.contains(*v))
    }

    /// First component outside the box.
    pub fn violation(&self, p: &[f64]) -> Option<usize> {
        self.0.iter().zip(p).position(|(iv, v)| !iv.contains(*v))
    }

    /// Evenly spaced lattice with `per_dim` points per axis, bounds included.
    pub fn lattice(&self, per_dim: usize) -> Vec<Vec<f64>> {
        let per_dim = per_dim.max(2);
        let axes: Vec<Vec<f64>> = self
            .0
            .iter()
            .map(|iv| {
                (0..per_dim)
                    .map(|k| iv.lo + (iv.hi - iv.lo) * k as f64 / (per_dim - 1) as f64)
                    .collect()
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// On-disk form of a system. Expressions use the names `x1..`, `u1..`, `a1..`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub u0: Vec<f64>,
    #[serde(rename = "U")]
    pub u_box: Vec<[f64; 2]>,
    #[serde(rename = "A")]
    pub a_box: Vec<[f64; 2]>,
    pub f: Vec<String>,
    pub g: Vec<Vec<String>>,
    pub gamma: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Drift,
    /// Zero-based impulse index.
    Impulse(usize),
    Bracket(Box<FieldKind>, Box<FieldKind>),
}

impl FieldKind {
    pub fn involves_drift(&self) -> bool {
        match self {
            FieldKind::Drift => true,
            FieldKind::Impulse(_) => false,
            FieldKind::Bracket(a, b) => a.involves_drift() || b.involves_drift(),
        }
    }
}

/// A vector field on `ℝⁿ⁺ᵐ` given componentwise by expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct AugField {
    kind: FieldKind,
    components: Vec<Expr>,
}

impl AugField {
    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    fn uses_ordinary(&self, names: &Names) -> bool {
        self.components
            .iter()
            .flat_map(|c| c.variables())
            .any(|v| names.group(v) == Group::Ordinary)
    }
}

#[derive(Debug, Clone)]
pub struct SystemSpec {
    names: Names,
    horizon: f64,
    x0: Vec<f64>,
    u0: Vec<f64>,
    u_box: BoxSet,
    a_box: BoxSet,
    drift: AugField,
    impulses: Vec<AugField>,
    cost: Expr,
}

fn check_box(path: &str, raw: &[[f64; 2]], dim: usize) -> Result<BoxSet> {
    if raw.len() != dim {
        return Err(Error::schema(
            path,
            format!("expected {dim} intervals, got {}", raw.len()),
        ));
    }
    let mut out = Vec::with_capacity(dim);
    for (i, [lo, hi]) in raw.iter().enumerate() {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::invariant(
                format!("{path}/{i}"),
                format!("bounds [{lo}, {hi}] must be finite with lower <= upper"),
            ));
        }
        out.push(Interval::new(*lo, *hi));
    }
    Ok(BoxSet::new(out))
}

fn parse_at(path: String, src: &str, names: &Names) -> Result<Expr> {
    parse(src, names).map_err(|e| Error::schema(path, e.to_string()))
}

fn forbid_group(path: &str, e: &Expr, names: &Names, group: Group, what: &str) -> Result<()> {
    if e.variables().into_iter().any(|v| names.group(v) == group) {
        return Err(Error::invariant(path, what));
    }
    Ok(())
}

impl SystemSpec {
    /// Parses and validates a JSON system document.
    pub fn load(text: &str) -> Result<Self> {
        Self::from_document(&crate::io::parse_json::<SystemDocument>(text)?)
    }

    pub fn from_document(doc: &SystemDocument) -> Result<Self> {
        let (n, m, l) = (doc.n, doc.m, doc.l);
        for (name, v) in [("/n", n), ("/m", m), ("/l", l)] {
            if v == 0 {
                return Err(Error::invariant(name, "dimension must be positive"));
            }
        }
        if !(doc.horizon.is_finite() && doc.horizon > 0.0) {
            return Err(Error::invariant("/T", "horizon must be positive and finite"));
        }
        let len_check = |path: &str, got: usize, want: usize| {
            if got != want {
                Err(Error::schema(path, format!("expected {want} entries, got {got}")))
            } else {
                Ok(())
            }
        };
        len_check("/x0", doc.x0.len(), n)?;
        len_check("/u0", doc.u0.len(), m)?;
        len_check("/f", doc.f.len(), n)?;
        len_check("/g", doc.g.len(), m)?;
        if doc.x0.iter().chain(&doc.u0).any(|v| !v.is_finite()) {
            return Err(Error::invariant("/x0", "initial data must be finite"));
        }
        let u_box = check_box("/U", &doc.u_box, m)?;
        let a_box = check_box("/A", &doc.a_box, l)?;
        if let Some(i) = u_box.violation(&doc.u0) {
            return Err(Error::invariant(format!("/u0/{i}"), "u0 outside U"));
        }

        let names = Names::standard(n, m, l);
        let mut drift = Vec::with_capacity(n + m);
        for (j, src) in doc.f.iter().enumerate() {
            drift.push(parse_at(format!("/f/{j}"), src, &names)?);
        }
        drift.extend((0..m).map(|_| Expr::zero()));

        let mut impulses = Vec::with_capacity(m);
        for (alpha, row) in doc.g.iter().enumerate() {
            len_check(&format!("/g/{alpha}"), row.len(), n)?;
            let mut comps = Vec::with_capacity(n + m);
            for (j, src) in row.iter().enumerate() {
                let path = format!("/g/{alpha}/{j}");
                let e = parse_at(path.clone(), src, &names)?;
                forbid_group(&path, &e, &names, Group::Ordinary, "g references ordinary control")?;
                comps.push(e);
            }
            comps.extend((0..m).map(|b| Expr::Num(if b == alpha { 1.0 } else { 0.0 })));
            impulses.push(AugField {
                kind: FieldKind::Impulse(alpha),
                components: comps,
            });
        }

        let cost = parse_at("/gamma".into(), &doc.gamma, &names)?;
        forbid_group(
            "/gamma",
            &cost,
            &names,
            Group::Ordinary,
            "gamma references ordinary control",
        )?;

        Ok(Self {
            names,
            horizon: doc.horizon,
            x0: doc.x0.clone(),
            u0: doc.u0.clone(),
            u_box,
            a_box,
            drift: AugField {
                kind: FieldKind::Drift,
                components: drift,
            },
            impulses,
            cost,
        })
    }

    pub fn n(&self) -> usize {
        self.names.n()
    }

    pub fn m(&self) -> usize {
        self.names.m()
    }

    pub fn l(&self) -> usize {
        self.names.l()
    }

    pub fn names(&self) -> &Names {
        &self.names
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    pub fn u_box(&self) -> &BoxSet {
        &self.u_box
    }

    pub fn a_box(&self) -> &BoxSet {
        &self.a_box
    }

    pub fn drift(&self) -> &AugField {
        &self.drift
    }

    /// Zero-based.
    pub fn impulse(&self, alpha: usize) -> &AugField {
        &self.impulses[alpha]
    }

    pub fn impulses(&self) -> &[AugField] {
        &self.impulses
    }

    pub fn cost(&self) -> &Expr {
        &self.cost
    }

    /// Flat evaluation vector `[x, u, a]`. Missing `a` is filled with NaN,
    /// which only matters for expressions that reference it.
    pub fn pack(&self, x: &[f64], u: &[f64], a: Option<&[f64]>) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.names.len());
        self.pack_into(&mut v, x, u, a);
        v
    }

    pub(crate) fn pack_into(&self, v: &mut Vec<f64>, x: &[f64], u: &[f64], a: Option<&[f64]>) {
        v.clear();
        v.extend_from_slice(x);
        v.extend_from_slice(u);
        match a {
            Some(a) => v.extend_from_slice(a),
            None => v.extend(std::iter::repeat_n(f64::NAN, self.l())),
        }
    }

    fn check_dims(&self, x: &[f64], u: &[f64], a: Option<&[f64]>) -> Result<()> {
        if x.len() != self.n() || u.len() != self.m() || a.is_some_and(|a| a.len() != self.l()) {
            return Err(Error::Dimension(format!(
                "point has dims ({}, {}, {:?}), system has ({}, {}, {})",
                x.len(),
                u.len(),
                a.map(|a| a.len()),
                self.n(),
                self.m(),
                self.l()
            )));
        }
        Ok(())
    }

    /// Evaluates a field at `(x, u, a)`.
    pub fn eval_field(&self, field: &AugField, x: &[f64], u: &[f64], a: Option<&[f64]>) -> Result<Vec<f64>> {
        self.check_dims(x, u, a)?;
        if a.is_none() && field.uses_ordinary(&self.names) {
            return Err(Error::MissingOrdinaryControl);
        }
        let vals = self.pack(x, u, a);
        field.components.iter().map(|c| c.eval(&vals)).collect()
    }

    /// `f(x, u, a) = (f̃, 0)`.
    pub fn eval_aug_f(&self, x: &[f64], u: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.eval_field(&self.drift, x, u, Some(a))
    }

    /// `g_α(x, u) = (g̃_α, e_α)` with one-based `alpha`.
    pub fn eval_aug_g(&self, alpha: usize, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        if alpha == 0 || alpha > self.m() {
            return Err(Error::IndexOutOfRange {
                index: alpha,
                max: self.m(),
            });
        }
        self.eval_field(&self.impulses[alpha - 1], x, u, None)
    }

    /// Symbolic bracket `[A, B] = DB·A − DA·B` in the variables `(x, u)`.
    pub fn bracket(&self, a: &AugField, b: &AugField) -> AugField {
        let dim = self.n() + self.m();
        let components = (0..dim)
            .map(|i| {
                (0..dim).fold(Expr::zero(), |acc, j| {
                    let v = VarId(j);
                    let term = Expr::sub(
                        Expr::mul(b.components[i].diff(v), a.components[j].clone()),
                        Expr::mul(a.components[i].diff(v), b.components[j].clone()),
                    );
                    Expr::add(acc, term)
                })
            })
            .collect();
        AugField {
            kind: FieldKind::Bracket(Box::new(a.kind.clone()), Box::new(b.kind.clone())),
            components,
        }
    }

    /// Evaluates `[A, B]` at a point. `a` must be supplied iff the drift is involved.
    pub fn lie_bracket(
        &self,
        a_field: &AugField,
        b_field: &AugField,
        x: &[f64],
        u: &[f64],
        a: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let involves_drift = a_field.kind.involves_drift() || b_field.kind.involves_drift();
        if involves_drift && a.is_none() {
            return Err(Error::MissingOrdinaryControl);
        }
        let br = self.bracket(a_field, b_field);
        self.eval_field(&br, x, u, a)
    }

    /// Audits pairwise commutativity of the impulse fields over the samples.
    pub fn check_commutativity(&self, samples: &[(Vec<f64>, Vec<f64>)], tol: f64) -> BracketReport {
        let m = self.m();
        let mut pairs = Vec::new();
        for alpha in 0..m {
            for beta in alpha + 1..m {
                let br = self.bracket(&self.impulses[alpha], &self.impulses[beta]);
                let mut audit = PairAudit {
                    alpha: alpha + 1,
                    beta: beta + 1,
                    max_norm: 0.0,
                    worst_sample: None,
                    worst_value: Vec::new(),
                    failures: Vec::new(),
                    pass: true,
                };
                for (k, (x, u)) in samples.iter().enumerate() {
                    match self.eval_field(&br, x, u, None) {
                        Ok(v) => {
                            let norm = v.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
                            if audit.worst_sample.is_none() || norm > audit.max_norm {
                                audit.max_norm = norm;
                                audit.worst_sample = Some(k);
                                audit.worst_value = v;
                            }
                        }
                        Err(e) => audit.failures.push(SampleFailure {
                            index: k,
                            message: e.to_string(),
                        }),
                    }
                }
                audit.pass = audit.max_norm <= tol && audit.failures.is_empty();
                pairs.push(audit);
            }
        }
        BracketReport {
            tol,
            samples: samples.len(),
            pass: pairs.iter().all(|p| p.pass),
            pairs,
        }
    }

    /// Quasi-random `(x, u)` samples: Halton points in `x0 ± radius` crossed with `U`.
    pub fn default_samples(&self, count: usize, radius: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        sampling::state_control_points(&self.x0, radius, &self.u_box, count, None)
    }

    /// Gradient of the cost `γ(x, u)` as a row of length `n + m`.
    pub fn grad_cost(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, u, None)?;
        let vals = self.pack(x, u, None);
        (0..self.n() + self.m())
            .map(|j| self.cost.diff(VarId(j)).eval(&vals))
            .collect()
    }

    pub fn eval_cost(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        self.check_dims(x, u, None)?;
        self.cost.eval(&self.pack(x, u, None))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleFailure {
    pub index: usize,
    pub message: String,
}

/// Commutativity audit of one unordered pair `(α, β)`, one-based.
#[derive(Debug, Clone, Serialize)]
pub struct PairAudit {
    pub alpha: usize,
    pub beta: usize,
    pub max_norm: f64,
    pub worst_sample: Option<usize>,
    pub worst_value: Vec<f64>,
    pub failures: Vec<SampleFailure>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketReport {
    pub tol: f64,
    pub samples: usize,
    pub pairs: Vec<PairAudit>,
    pub pass: bool,
}
