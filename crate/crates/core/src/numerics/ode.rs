//! Dormand–Prince 5(4) integrator for scalar ODEs with Hermite dense output.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct DenseSolution {
    t: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl DenseSolution {
    pub fn t_end(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.t.len() - 1
    }

    /// Cubic Hermite interpolation between accepted steps; clamps to the range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.y[0];
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let i = self.t.partition_point(|&v| v <= t) - 1;
        let h = self.t[i + 1] - self.t[i];
        let u = (t - self.t[i]) / h;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        h00 * self.y[i] + h10 * h * self.dy[i] + h01 * self.y[i + 1] + h11 * h * self.dy[i + 1]
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t_end` with relative tolerance `rtol`.
pub fn solve<F: Fn(f64, f64) -> f64>(f: F, t0: f64, y0: f64, t_end: f64, rtol: f64) -> Result<DenseSolution> {
    let atol = rtol * 1e-3;
    let mut t = t0;
    let mut y = y0;
    let mut out = DenseSolution { t: vec![t0], y: vec![y0], dy: vec![f(t0, y0)] };
    if t_end <= t0 {
        return Ok(out);
    }
    let mut h = (t_end - t0) * 1e-4;
    let h_min = (t_end - t0) * 1e-15;
    let mut k = [0.0; 7];
    while t < t_end {
        if h < h_min {
            return Err(Error::OdeStep { t });
        }
        let h_try = h.min(t_end - t);
        for s in 0..7 {
            let yi = y + h_try * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
            k[s] = f(t + C[s] * h_try, yi);
        }
        let y5 = y + h_try * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
        let y4 = y + h_try * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
        if !y5.is_finite() {
            h *= 0.25;
            continue;
        }
        let sc = atol + rtol * y.abs().max(y5.abs());
        let err = ((y5 - y4) / sc).abs();
        if err <= 1.0 {
            t = if h_try == t_end - t { t_end } else { t + h_try };
            y = y5;
            out.t.push(t);
            out.y.push(y);
            out.dy.push(k[6]);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = h_try * factor;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let sol = solve(|_, y| 3.0 * (y + 1.0), 0.0, 0.0, 1.0, 1e-11).unwrap();
        for t in [0.1, 0.37, 0.5, 1.0] {
            let exact = (3.0 * t as f64).exp() - 1.0;
            assert!((sol.eval(t) - exact).abs() < 1e-8 * exact.max(1.0), "t={t}");
        }
    }
}
