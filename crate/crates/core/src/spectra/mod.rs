//! Closed-form Laplace eigenfunctions with exact eigenvalues, unit L²
//! normalisation and analytic gradients, plus test functions with analytic
//! `(Δ + λ²) f`.

pub mod legendre;
mod testfn;

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Field, Manifold, Point, POLE_EPS};
use crate::{Error, Result};

pub use testfn::{apply_helmholtz, bump_test_function, ModeExpansion, TestFunction, TestKind};

/// Largest sectoral degree with a verified normalisation.
pub const MAX_SECTORAL_DEGREE: u32 = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeFamily {
    /// `A sin(⟨k, x⟩ + phase)` on the flat torus.
    TorusPlaneWave { k: Vec<i64>, phase: f64 },
    /// `π^{-1/2} sin(k x + phase)` on the circle.
    CircleMode { k: i64, phase: f64 },
    /// `c_N P_N(cos θ)`.
    Zonal { degree: u32 },
    /// `b_N sin^N θ cos(N φ)`, the real part of the highest-weight harmonic.
    Sectoral { degree: u32 },
}

/// An L²-normalised eigenfunction `Δφ = −λ²φ`.
///
/// `norm_const` is the signed amplitude; negating it gives `−φ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenMode {
    manifold: Manifold,
    family: ModeFamily,
    lambda: f64,
    norm_const: f64,
    #[serde(skip)]
    wave: [f64; 3],
}

pub fn torus_mode(dim: usize, k: &[i64], phase: f64) -> Result<EigenMode> {
    let manifold = Manifold::torus(dim)?;
    if k.len() != dim {
        return Err(Error::InvalidMode(format!(
            "wave vector {k:?} does not match torus dimension {dim}"
        )));
    }
    if k.iter().all(|&c| c == 0) {
        return Err(Error::InvalidMode("k = 0 gives the constant function".into()));
    }
    let mut wave = [0.0; 3];
    for (w, &c) in wave.iter_mut().zip(k) {
        *w = c as f64;
    }
    let lambda = wave.iter().map(|w| w * w).sum::<f64>().sqrt();
    Ok(EigenMode {
        manifold,
        family: ModeFamily::TorusPlaneWave { k: k.to_vec(), phase },
        lambda,
        norm_const: (2.0 / TAU.powi(dim as i32)).sqrt(),
        wave,
    })
}

pub fn circle_mode(k: i64, phase: f64) -> Result<EigenMode> {
    if k < 1 {
        return Err(Error::InvalidMode(format!("circle mode needs k ≥ 1, got {k}")));
    }
    Ok(EigenMode {
        manifold: Manifold::circle(),
        family: ModeFamily::CircleMode { k, phase },
        lambda: k as f64,
        norm_const: 1.0 / PI.sqrt(),
        wave: [k as f64, 0.0, 0.0],
    })
}

pub fn zonal_harmonic(degree: u32) -> Result<EigenMode> {
    if degree < 1 {
        return Err(Error::InvalidMode("zonal harmonic needs N ≥ 1".into()));
    }
    let n = degree as f64;
    Ok(EigenMode {
        manifold: Manifold::sphere(),
        family: ModeFamily::Zonal { degree },
        lambda: (n * (n + 1.0)).sqrt(),
        norm_const: ((2.0 * n + 1.0) / (4.0 * PI)).sqrt(),
        wave: [0.0; 3],
    })
}

pub fn sectoral_harmonic(degree: u32) -> Result<EigenMode> {
    if degree < 1 {
        return Err(Error::InvalidMode("sectoral harmonic needs N ≥ 1".into()));
    }
    if degree > MAX_SECTORAL_DEGREE {
        return Err(Error::InvalidMode(format!(
            "sectoral degree {degree} exceeds {MAX_SECTORAL_DEGREE}"
        )));
    }
    let n = degree as f64;
    Ok(EigenMode {
        manifold: Manifold::sphere(),
        family: ModeFamily::Sectoral { degree },
        lambda: (n * (n + 1.0)).sqrt(),
        norm_const: sectoral_norm(degree),
        wave: [0.0; 3],
    })
}

/// `b_N` with `b_N² · π · ∫₀^π sin^{2N+1}θ dθ = 1`.
///
/// `∫₀^π sin^{2N+1} = √π Γ(N+1)/Γ(N+3/2)`; the Gamma ratio is accumulated in
/// log form as `ln(2/√π) + Σ_{j≤N} ln(j/(j+½))` so large N cannot overflow.
fn sectoral_norm(degree: u32) -> f64 {
    let mut log_ratio = (2.0 / PI.sqrt()).ln();
    for j in 1..=degree {
        let j = j as f64;
        log_ratio += (j / (j + 0.5)).ln();
    }
    (-0.5 * (1.5 * PI.ln() + log_ratio)).exp()
}

impl EigenMode {
    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn family(&self) -> &ModeFamily {
        &self.family
    }

    /// Frequency λ; the eigenvalue is λ².
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eigenvalue(&self) -> f64 {
        match self.family {
            ModeFamily::Zonal { degree } | ModeFamily::Sectoral { degree } => {
                let n = degree as f64;
                n * (n + 1.0)
            }
            ModeFamily::TorusPlaneWave { ref k, .. } => k.iter().map(|c| (c * c) as f64).sum(),
            ModeFamily::CircleMode { k, .. } => (k * k) as f64,
        }
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// `−φ`.
    pub fn negated(&self) -> Self {
        let mut m = self.clone();
        m.norm_const = -m.norm_const;
        m
    }

    /// Exact `sup |φ|`.
    pub fn sup_abs(&self) -> f64 {
        // zonal: |P_N| ≤ 1 with equality at the poles; sectoral: max on the equator
        self.norm_const.abs()
    }

    /// Compact text label, e.g. `torus2 k=(2,3)` or `zonal N=5`.
    pub fn label(&self) -> String {
        let sign = if self.norm_const < 0.0 { "-" } else { "" };
        let body = match &self.family {
            ModeFamily::TorusPlaneWave { k, phase } => {
                let ks: Vec<String> = k.iter().map(i64::to_string).collect();
                format!("{} k=({}){}", self.manifold, ks.join(","), phase_suffix(*phase))
            }
            ModeFamily::CircleMode { k, phase } => format!("circle k={k}{}", phase_suffix(*phase)),
            ModeFamily::Zonal { degree } => format!("zonal N={degree}"),
            ModeFamily::Sectoral { degree } => format!("sectoral N={degree}"),
        };
        format!("{sign}{body}")
    }

    fn phase_arg(&self, p: &Point) -> f64 {
        let phase = match self.family {
            ModeFamily::TorusPlaneWave { phase, .. } | ModeFamily::CircleMode { phase, .. } => phase,
            _ => 0.0,
        };
        self.wave[0] * p[0] + self.wave[1] * p[1] + self.wave[2] * p[2] + phase
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self.family {
            ModeFamily::TorusPlaneWave { .. } | ModeFamily::CircleMode { .. } => {
                self.norm_const * self.phase_arg(p).sin()
            }
            ModeFamily::Zonal { degree } => {
                self.norm_const * legendre::legendre(degree, p[0].cos())
            }
            ModeFamily::Sectoral { degree } => {
                self.norm_const * p[0].sin().powi(degree as i32) * (degree as f64 * p[1]).cos()
            }
        }
    }

    /// Chart partials and metric norm of the gradient.
    pub fn grad(&self, p: &Point) -> (Point, f64) {
        let partials = self.chart_partials(p);
        (partials, self.gradient_norm(p, &partials))
    }

    fn chart_partials(&self, p: &Point) -> Point {
        match self.family {
            ModeFamily::TorusPlaneWave { .. } | ModeFamily::CircleMode { .. } => {
                let c = self.norm_const * self.phase_arg(p).cos();
                [c * self.wave[0], c * self.wave[1], c * self.wave[2]]
            }
            ModeFamily::Zonal { degree } => {
                let (_, d) = legendre::legendre_theta(degree, p[0]);
                [self.norm_const * d, 0.0, 0.0]
            }
            ModeFamily::Sectoral { degree } => {
                let n = degree as f64;
                let (s, c) = p[0].sin_cos();
                let (sn, cn) = (n * p[1]).sin_cos();
                let sp = s.powi(degree as i32 - 1);
                [
                    self.norm_const * n * sp * c * cn,
                    -self.norm_const * n * sp * s * sn,
                    0.0,
                ]
            }
        }
    }

    fn gradient_norm(&self, p: &Point, partials: &Point) -> f64 {
        match self.family {
            ModeFamily::Zonal { .. } => partials[0].abs(),
            ModeFamily::Sectoral { degree } => {
                if p[0] < POLE_EPS || PI - p[0] < POLE_EPS {
                    return if degree == 1 { self.norm_const.abs() } else { 0.0 };
                }
                let n = degree as f64;
                let (s, c) = p[0].sin_cos();
                let (sn, cn) = (n * p[1]).sin_cos();
                self.norm_const.abs() * n * s.powi(degree as i32 - 1) * (c * c * cn * cn + sn * sn).sqrt()
            }
            _ => self.manifold.metric_norm(p, partials),
        }
    }
}

fn phase_suffix(phase: f64) -> String {
    if phase == 0.0 {
        String::new()
    } else {
        format!(" phase={phase}")
    }
}

impl fmt::Display for EigenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Field for EigenMode {
    fn manifold(&self) -> Manifold {
        self.manifold
    }

    fn value(&self, p: &Point) -> f64 {
        self.eval(p)
    }

    fn partials(&self, p: &Point) -> Point {
        self.chart_partials(p)
    }

    fn grad_norm(&self, p: &Point) -> f64 {
        let partials = self.chart_partials(p);
        self.gradient_norm(p, &partials)
    }

    fn split_axis(&self) -> usize {
        match self.family {
            ModeFamily::TorusPlaneWave { ref k, .. } => {
                let mut best = 0;
                for (i, c) in k.iter().enumerate() {
                    if c.abs() > k[best].abs() {
                        best = i;
                    }
                }
                best
            }
            ModeFamily::Sectoral { .. } => 1,
            _ => 0,
        }
    }
}

/// Whether two modes share an eigenvalue exactly.
pub fn same_eigenvalue(a: &EigenMode, b: &EigenMode) -> bool {
    a.manifold == b.manifold && a.eigenvalue() == b.eigenvalue()
}
