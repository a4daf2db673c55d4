//! Symmetric triangle quadrature.

/// Six-point rule exact for polynomials of degree 4: barycentric
/// coordinates and weights normalized to sum to one.
pub const DUNAVANT4: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445948490915965;
    const B1: f64 = 0.108103018168070;
    const W1: f64 = 0.223381589678011;
    const A2: f64 = 0.091576213509771;
    const B2: f64 = 0.816847572980459;
    const W2: f64 = 0.109951743655322;
    [([A1, A1, B1], W1), ([A1, B1, A1], W1), ([B1, A1, A1], W1), ([A2, A2, B2], W2), ([A2, B2, A2], W2), ([B2, A2, A2], W2)]
};

/// Twelve-point rule exact for polynomials of degree 6.
pub const DUNAVANT6: [([f64; 3], f64); 12] = {
    const A1: f64 = 0.249286745170910;
    const B1: f64 = 0.501426509658179;
    const W1: f64 = 0.116786275726379;
    const A2: f64 = 0.063089014491502;
    const B2: f64 = 0.873821971016996;
    const W2: f64 = 0.050844906370207;
    const C1: f64 = 0.053145049844817;
    const C2: f64 = 0.310352451033784;
    const C3: f64 = 0.636502499121399;
    const W3: f64 = 0.082851075618374;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
        ([C1, C2, C3], W3),
        ([C1, C3, C2], W3),
        ([C2, C1, C3], W3),
        ([C2, C3, C1], W3),
        ([C3, C1, C2], W3),
        ([C3, C2, C1], W3),
    ]
};

/// Three-point Gauss–Legendre rule on `[0, 1]`.
pub const GAUSS3: [(f64, f64); 3] = [(0.1127016653792583, 0.2777777777777778), (0.5, 0.4444444444444444), (0.8872983346207417, 0.2777777777777778)];

/// Five-point Gauss–Legendre rule on `[0, 1]`.
pub const GAUSS5: [(f64, f64); 5] = [
    (0.046910077030668, 0.118463442528095),
    (0.230765344947158, 0.239314335249683),
    (0.5, 0.284444444444444),
    (0.769234655052842, 0.239314335249683),
    (0.953089922969332, 0.118463442528095),
];

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference-triangle moments ∫ x^a y^b = a! b! / (a + b + 2)!, area 1/2.
    #[test]
    fn exact_through_degree_four() {
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let q: f64 = DUNAVANT4.iter().map(|(l, w)| 0.5 * w * l[1].powi(a as i32) * l[2].powi(b as i32)).sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-14, "{a} {b}");
            }
        }
    }

    #[test]
    fn six_exact_through_degree_six() {
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        for a in 0..=6u32 {
            for b in 0..=(6 - a) {
                let q: f64 = DUNAVANT6.iter().map(|(l, w)| 0.5 * w * l[1].powi(a as i32) * l[2].powi(b as i32)).sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-13, "{a} {b}");
            }
        }
    }

    #[test]
    fn gauss_exact_through_degree_five() {
        for p in 0..=5 {
            let q: f64 = GAUSS3.iter().map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14);
        }
        for p in 0..=9 {
            let q: f64 = GAUSS5.iter().map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-13);
        }
    }
}
