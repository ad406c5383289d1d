//! Gauss-Legendre rules on `[0,1]` and collapsed (Duffy) Gauss rules on the
//! reference triangle `{(0,0), (1,0), (0,1)}`. All weights are positive.

use super::BasisError;

/// Highest polynomial exactness the rule constructors accept.
pub const MAX_EXACTNESS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
}

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; D]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, w)| w * f(p)).sum()
    }
}

/// `n`-point Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n(z) and P_{n-1}(z)
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree `exactness`.
pub fn edge_rule(exactness: usize) -> Result<QuadratureRule<1>, BasisError> {
    if exactness > MAX_EXACTNESS {
        return Err(BasisError::QuadratureTooHigh(exactness));
    }
    Ok(unit_gauss(exactness))
}

fn unit_gauss(exactness: usize) -> QuadratureRule<1> {
    let (x, w) = gauss_legendre(exactness / 2 + 1);
    QuadratureRule {
        points: x.iter().map(|&xi| [0.5 * (1.0 + xi)]).collect(),
        weights: w.iter().map(|&wi| 0.5 * wi).collect(),
    }
}

/// Collapsed Gauss rule on the reference triangle exact for bivariate
/// polynomials of total degree `exactness`.
///
/// With `x = u`, `y = v (1 - u)` the integrand picks up the Jacobian `1 - u`,
/// so the `u` direction needs one extra degree of exactness.
pub fn triangle_rule(exactness: usize) -> Result<QuadratureRule<2>, BasisError> {
    if exactness > MAX_EXACTNESS {
        return Err(BasisError::QuadratureTooHigh(exactness));
    }
    let u = unit_gauss(exactness + 1);
    let v = unit_gauss(exactness);
    let mut points = Vec::with_capacity(u.len() * v.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (pu, wu) in u.points.iter().zip(&u.weights) {
        for (pv, wv) in v.points.iter().zip(&v.weights) {
            points.push([pu[0], pv[0] * (1.0 - pu[0])]);
            weights.push(wu * wv * (1.0 - pu[0]));
        }
    }
    Ok(QuadratureRule { points, weights })
}
