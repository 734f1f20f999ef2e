//! Finite-difference weights on arbitrary nodes (Fornberg's recursion).

/// Weights `c[k][j]` such that `f^{(k)}(z) ≈ Σ_j c[k][j] f(x[j])`, `k ≤ order`.
pub fn weights(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_uniform() {
        let c = weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(c[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(c[2], vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn one_sided_exact_on_cubics() {
        let x = [0.1, 0.25, 0.5, 0.9];
        let c = weights(0.1, &x, 2);
        let f = |t: f64| t * t * t - t;
        let d1: f64 = x.iter().zip(&c[1]).map(|(t, w)| w * f(*t)).sum();
        let d2: f64 = x.iter().zip(&c[2]).map(|(t, w)| w * f(*t)).sum();
        assert!((d1 - (3.0 * 0.01 - 1.0)).abs() < 1e-12);
        assert!((d2 - 0.6).abs() < 1e-11);
    }
}
