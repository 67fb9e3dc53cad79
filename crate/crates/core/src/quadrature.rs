//! Symmetric quadrature on the reference triangle and Gauss rules on edges.

/// Rule on the reference triangle `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}` with
/// barycentric points; weights sum to its area `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    /// Six-point rule exact for polynomials of total degree ≤ 4.
    pub fn degree4() -> Self {
        const A1: f64 = 0.445_948_490_915_964_886_318_329_253_883;
        const W1: f64 = 0.223_381_589_678_011_465_695_007_008_433;
        const A2: f64 = 0.091_576_213_509_770_743_459_571_463_402_2;
        const W2: f64 = 0.109_951_743_655_321_867_638_326_324_9;
        let mut points = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for (a, w) in [(A1, W1), (A2, W2)] {
            let b = 1.0 - 2.0 * a;
            for p in [[b, a, a], [a, b, a], [a, a, b]] {
                points.push(p);
                weights.push(0.5 * w);
            }
        }
        Self {
            points,
            weights,
            exactness_degree: 4,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Two-point Gauss–Legendre rule on `[0, 1]` as `(t, weight)`; weights sum to 1.
pub fn gauss_edge() -> [(f64, f64); 2] {
    let d = 0.5 / 3f64.sqrt();
    [(0.5 - d, 0.5), (0.5 + d, 0.5)]
}
