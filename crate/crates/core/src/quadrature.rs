//! Gauss-Legendre rules and the bilinear reference element.

use crate::error::{Error, Result};

/// Tensor-product rule on the reference square [-1,1]².
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// 1D Gauss-Legendre nodes and weights on [-1,1], computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > 30 {
        return Err(Error::InvalidArgument(format!(
            "Gauss order {n} unsupported (1..=30)"
        )));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Tensor-product Gauss rule with `order` points per direction.
pub fn gauss_rule(order: usize) -> Result<QuadratureRule> {
    let (x, w) = gauss_legendre(order)?;
    let mut points = Vec::with_capacity(order * order);
    let mut weights = Vec::with_capacity(order * order);
    for j in 0..order {
        for i in 0..order {
            points.push([x[i], x[j]]);
            weights.push(w[i] * w[j]);
        }
    }
    Ok(QuadratureRule { points, weights })
}

/// Bilinear shape functions and their reference gradients.
/// Node order is counter-clockwise from (-1,-1).
pub fn shape_eval(xi: [f64; 2]) -> Result<([f64; 4], [[f64; 2]; 4])> {
    const TOL: f64 = 1e-12;
    if !(xi[0].abs() <= 1.0 + TOL && xi[1].abs() <= 1.0 + TOL) {
        return Err(Error::InvalidArgument(format!(
            "reference coordinate ({}, {}) outside [-1,1]²",
            xi[0], xi[1]
        )));
    }
    Ok(shape_unchecked(xi))
}

pub(crate) fn shape_unchecked(xi: [f64; 2]) -> ([f64; 4], [[f64; 2]; 4]) {
    let (s, t) = (xi[0], xi[1]);
    let n = [
        0.25 * (1.0 - s) * (1.0 - t),
        0.25 * (1.0 + s) * (1.0 - t),
        0.25 * (1.0 + s) * (1.0 + t),
        0.25 * (1.0 - s) * (1.0 + t),
    ];
    let dn = [
        [-0.25 * (1.0 - t), -0.25 * (1.0 - s)],
        [0.25 * (1.0 - t), -0.25 * (1.0 + s)],
        [0.25 * (1.0 + t), 0.25 * (1.0 + s)],
        [-0.25 * (1.0 + t), 0.25 * (1.0 - s)],
    ];
    (n, dn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules() {
        let r = gauss_rule(1).unwrap();
        assert_eq!(r.points, vec![[0.0, 0.0]]);
        assert!((r.weights[0] - 4.0).abs() < 1e-15);
        let r = gauss_rule(2).unwrap();
        let v: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(p, w)| w * p[0].powi(3) * p[1].powi(3))
            .sum();
        assert!(v.abs() < 1e-14);
        let v: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(p, w)| w * p[0].powi(2) * p[1].powi(2))
            .sum();
        assert!((v - 4.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn order_twenty_weights() {
        let r = gauss_rule(20).unwrap();
        assert_eq!(r.points.len(), 400);
        assert!((r.weights.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(gauss_rule(0).is_err());
        assert!(gauss_rule(31).is_err());
        assert!(shape_eval([1.5, 0.0]).is_err());
    }

    #[test]
    fn shape_values() {
        let (n, _) = shape_eval([0.0, 0.0]).unwrap();
        assert_eq!(n, [0.25; 4]);
        let (n, _) = shape_eval([-1.0, -1.0]).unwrap();
        assert_eq!(n, [1.0, 0.0, 0.0, 0.0]);
    }
}
