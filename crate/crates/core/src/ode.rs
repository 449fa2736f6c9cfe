//! Classical fixed-step RK4 on flat state vectors.

use crate::error::{Error, Result};

/// Stage position inside a step: start, midpoint (stages 2 and 3) or end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Start,
    Mid,
    End,
}

#[derive(Debug, Default)]
pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Derivative at the start of the last step.
    pub fn k1(&self) -> &[f64] {
        &self.k1
    }

    /// Advances `y` by `h`. `rhs(stage, y, out)` writes `dy/dt` into `out`.
    pub fn step<F>(&mut self, y: &mut [f64], h: f64, mut rhs: F) -> Result<()>
    where
        F: FnMut(Stage, &[f64], &mut [f64]) -> Result<()>,
    {
        let d = y.len();
        if self.k1.len() != d {
            *self = Rk4::new(d);
        }
        rhs(Stage::Start, y, &mut self.k1)?;
        for i in 0..d {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        rhs(Stage::Mid, &self.tmp, &mut self.k2)?;
        for i in 0..d {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        rhs(Stage::Mid, &self.tmp, &mut self.k3)?;
        for i in 0..d {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        rhs(Stage::End, &self.tmp, &mut self.k4)?;
        for i in 0..d {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// Cubic Hermite value at the midpoint of a step of length `h`.
pub(crate) fn hermite_mid(y0: &[f64], y1: &[f64], d0: &[f64], d1: &[f64], h: f64) -> Vec<f64> {
    y0.iter()
        .zip(y1)
        .zip(d0.iter().zip(d1))
        .map(|((a, b), (da, db))| 0.5 * (a + b) + h / 8.0 * (da - db))
        .collect()
}
