use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One term `a cos(nθ) + b sin(nθ)` of a radius function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub n: u32,
    pub a: f64,
    pub b: f64,
}

/// Radius function `ρ(θ) > 0` of a star-shaped domain centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialShape {
    /// `ρ(θ) = scale · Σ_n (a_n cos nθ + b_n sin nθ)`.
    Fourier { modes: Vec<FourierMode>, scale: f64 },
    /// Ellipse with semi-axis `a` along x and `b` along y.
    Ellipse { a: f64, b: f64 },
}

impl RadialShape {
    pub fn disc(radius: f64) -> Self {
        RadialShape::Fourier { modes: vec![FourierMode { n: 0, a: 1.0, b: 0.0 }], scale: radius }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        RadialShape::Ellipse { a, b }
    }

    /// `ρ(θ) = 1 + amplitude · cos(lobes θ)`.
    pub fn star(lobes: u32, amplitude: f64) -> Self {
        RadialShape::Fourier { modes: vec![FourierMode { n: 0, a: 1.0, b: 0.0 }, FourierMode { n: lobes, a: amplitude, b: 0.0 }], scale: 1.0 }
    }

    /// Builds a Fourier shape from `[n, a_n, b_n]` triples. Without an explicit
    /// `n = 0` entry the constant term defaults to 1.
    pub fn from_modes(modes: &[[f64; 3]], scale: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(modes.len() + 1);
        for m in modes {
            if m[0] < 0.0 || m[0].fract() != 0.0 {
                return Err(Error::InvalidDomain(format!("mode index {} is not a non-negative integer", m[0])));
            }
            out.push(FourierMode { n: m[0] as u32, a: m[1], b: m[2] });
        }
        if !out.iter().any(|m| m.n == 0) {
            out.push(FourierMode { n: 0, a: 1.0, b: 0.0 });
        }
        Ok(RadialShape::Fourier { modes: out, scale })
    }

    /// `(ρ, ρ', ρ'')` at angle `theta`.
    pub fn radius(&self, theta: f64) -> [f64; 3] {
        match self {
            RadialShape::Fourier { modes, scale } => {
                let mut r = [0.0; 3];
                for m in modes {
                    let n = m.n as f64;
                    let (s, c) = (n * theta).sin_cos();
                    r[0] += m.a * c + m.b * s;
                    r[1] += n * (-m.a * s + m.b * c);
                    r[2] += -n * n * (m.a * c + m.b * s);
                }
                [scale * r[0], scale * r[1], scale * r[2]]
            }
            RadialShape::Ellipse { a, b } => {
                let (s2, c2) = (2.0 * theta).sin_cos();
                let sin = theta.sin();
                let diff = a * a - b * b;
                let d = b * b + diff * sin * sin;
                let d1 = diff * s2;
                let d2 = 2.0 * diff * c2;
                let ab = a * b;
                let rho = ab * d.powf(-0.5);
                let rho1 = -0.5 * ab * d.powf(-1.5) * d1;
                let rho2 = ab * (0.75 * d.powf(-2.5) * d1 * d1 - 0.5 * d.powf(-1.5) * d2);
                [rho, rho1, rho2]
            }
        }
    }

    /// True when the radius function is constant (a disc about the origin).
    pub fn is_disc(&self) -> bool {
        match self {
            RadialShape::Fourier { modes, .. } => modes.iter().all(|m| m.n == 0 || (m.a == 0.0 && m.b == 0.0)),
            RadialShape::Ellipse { a, b } => a == b,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            RadialShape::Fourier { scale, modes } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidDomain(format!("scale must be positive, got {scale}")));
                }
                if modes.iter().any(|m| !(m.a.is_finite() && m.b.is_finite())) {
                    return Err(Error::InvalidDomain("non-finite mode coefficient".into()));
                }
            }
            RadialShape::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return Err(Error::InvalidDomain(format!("ellipse semi-axes must be positive, got {a}, {b}")));
                }
            }
        }
        Ok(())
    }
}
