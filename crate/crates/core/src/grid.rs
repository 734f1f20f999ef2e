//! Graded meshes on `(0, S]` and discrete mass fields.

use std::sync::Arc;

use crate::numerics::{roots, stencil};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    /// Cells grow by a constant ratio away from `s = 0`; the first cell has
    /// width `s_min`, continuing the pattern of the virtual cell `[0, s_min]`.
    Geometric,
}

/// Treatment of the degenerate left end `s = 0`, which no node represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeftBoundary {
    /// Ghost value `w(0) = 0` at the virtual node `s = 0` (regularized problems).
    DirichletZero,
    /// Ghost obtained by linear extrapolation: no boundary condition is imposed,
    /// matching the outflow structure of the limit problem.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    grading: Grading,
    ratio: f64,
}

/// Default node count.
pub const DEFAULT_NODES: usize = 512;
/// Default `s_min / S`.
pub const DEFAULT_S_MIN_FRACTION: f64 = 1e-6;

pub fn build_grid(m: usize, s_max: f64, s_min: f64, grading: Grading) -> Result<Grid> {
    if m < 2 || !(s_min > 0.0 && s_min < s_max) {
        return Err(Error::Parameter(format!(
            "grid needs M ≥ 2 and 0 < s_min < S (M = {m}, s_min = {s_min}, S = {s_max})"
        )));
    }
    let cells = m - 1;
    let (nodes, ratio) = match grading {
        Grading::Uniform => {
            let h = (s_max - s_min) / cells as f64;
            let mut nodes: Vec<f64> = (0..m).map(|i| s_min + h * i as f64).collect();
            nodes[cells] = s_max;
            (nodes, 1.0)
        }
        Grading::Geometric => {
            let span = s_max - s_min;
            let ratio = geometric_ratio(cells, s_min, span)?;
            // Normalizing by the exact geometric sum spreads the residual of the
            // ratio solve over all cells instead of the last one.
            let total = ratio.powi(cells as i32) - 1.0;
            let mut nodes: Vec<f64> = (0..m)
                .map(|i| if ratio == 1.0 { s_min + span * i as f64 / cells as f64 } else { s_min + span * (ratio.powi(i as i32) - 1.0) / total })
                .collect();
            nodes[cells] = s_max;
            (nodes, ratio)
        }
    };
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("grid nodes not strictly increasing".into()));
    }
    Ok(Grid { nodes, grading, ratio })
}

/// Ratio `q` with `h₀ (q^N − 1)/(q − 1) = span`, `h₀ = s_min`, by bisection.
fn geometric_ratio(cells: usize, h0: f64, span: f64) -> Result<f64> {
    let total = |q: f64| {
        if (q - 1.0).abs() < 1e-14 {
            h0 * cells as f64
        } else {
            h0 * (q.powi(cells as i32) - 1.0) / (q - 1.0)
        }
    };
    if (total(1.0) - span).abs() <= 1e-14 * span {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = if total(1.0) < span { (1.0, 1.0 + 1.0 / cells as f64) } else { (1e-6, 1.0) };
    let mut guard = 0;
    while total(hi) < span {
        lo = hi;
        hi = 1.0 + 2.0 * (hi - 1.0);
        guard += 1;
        if guard > 200 {
            return Err(Error::Parameter("geometric ratio failed to bracket".into()));
        }
    }
    // Large powers overflow; clamping keeps the bracket finite.
    roots::bisect(|q| total(q).min(2.0 * span) - span, lo, hi, 1e-16)
        .map_err(|e| Error::Parameter(format!("geometric ratio: {e}")))
}

impl Grid {
    /// Default graded mesh: 512 nodes, `s_min = 1e−6·S`.
    pub fn default_for(s_max: f64) -> Result<Grid> {
        build_grid(DEFAULT_NODES, s_max, DEFAULT_S_MIN_FRACTION * s_max, Grading::Geometric)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn s_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn s_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Index of the node closest to `s`.
    pub fn nearest(&self, s: f64) -> usize {
        let k = self.nodes.partition_point(|&x| x < s);
        if k == 0 {
            0
        } else if k == self.nodes.len() {
            k - 1
        } else if s - self.nodes[k - 1] <= self.nodes[k] - s {
            k - 1
        } else {
            k
        }
    }
}

/// Mass-function values on a grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    t: f64,
    left: LeftBoundary,
}

impl WField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, t: f64, left: LeftBoundary) -> Self {
        assert_eq!(grid.len(), values.len(), "field length must match grid");
        WField { grid, values, t, left }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn left(&self) -> LeftBoundary {
        self.left
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    /// Linear interpolation in `s`, constant beyond the last node and linear
    /// through the left ghost below the first.
    pub fn interpolate(&self, s: f64) -> f64 {
        let x = self.grid.nodes();
        let k = x.partition_point(|&v| v <= s);
        if k == 0 {
            let slope = match self.left {
                LeftBoundary::DirichletZero => self.values[0] / x[0],
                LeftBoundary::Free => (self.values[1] - self.values[0]) / (x[1] - x[0]),
            };
            return self.values[0] - slope * (x[0] - s);
        }
        if k == x.len() {
            return self.values[k - 1];
        }
        let u = (s - x[k - 1]) / (x[k] - x[k - 1]);
        self.values[k - 1] + u * (self.values[k] - self.values[k - 1])
    }

    /// First and second derivatives at every node.
    pub fn differentiate(&self) -> (Vec<f64>, Vec<f64>) {
        differentiate(self.grid.nodes(), &self.values)
    }
}

/// Central three-point differences inside, one-sided second-order stencils at
/// the ends (three points for `w_s`, four for `w_ss`).
pub fn differentiate(x: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = x.len();
    assert!(m >= 4, "differentiate needs at least four nodes");
    let mut ws = vec![0.0; m];
    let mut wss = vec![0.0; m];
    for i in 1..m - 1 {
        let hm = x[i] - x[i - 1];
        let hp = x[i + 1] - x[i];
        ws[i] = (-hp / (hm * (hm + hp))) * w[i - 1] + ((hp - hm) / (hm * hp)) * w[i] + (hm / (hp * (hm + hp))) * w[i + 1];
        wss[i] = 2.0 * ((w[i + 1] - w[i]) / hp - (w[i] - w[i - 1]) / hm) / (hm + hp);
    }
    let apply = |c: &[f64], idx: &[usize]| -> f64 { c.iter().zip(idx).map(|(c, &j)| c * w[j]).sum() };
    let left3 = stencil::weights(x[0], &x[0..3], 1);
    ws[0] = apply(&left3[1], &[0, 1, 2]);
    let left4 = stencil::weights(x[0], &x[0..4], 2);
    wss[0] = apply(&left4[2], &[0, 1, 2, 3]);
    let r3 = [m - 3, m - 2, m - 1];
    let r4 = [m - 4, m - 3, m - 2, m - 1];
    let right3 = stencil::weights(x[m - 1], &x[m - 3..], 1);
    ws[m - 1] = apply(&right3[1], &r3);
    let right4 = stencil::weights(x[m - 1], &x[m - 4..], 2);
    wss[m - 1] = apply(&right4[2], &r4);
    (ws, wss)
}
