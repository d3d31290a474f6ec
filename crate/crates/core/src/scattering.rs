//! Wronskians, scattering coefficients, and band-edge genericity.
//!
//! For real `θ` with `sinθ ≠ 0` the pairs `{f₋, f̄₋}` and `{f₊, f̄₊}` are bases
//! of solutions of `Hu = zu`; expanding one Jost solution in the opposite
//! basis yields the transmission and reflection coefficients
//!
//! ```text
//! W  = [f₊, f₋],        W₁ = [f₊, f̄₋],
//! T  = -2i sinθ / W,    R₋ = -W₁ / W,    R₊ = [f₋, f̄₊] / W,
//! ```
//!
//! where `[u,v](n) = u(n+1)v(n) - u(n)v(n+1)` is the discrete Wronskian
//! (independent of `n` for two solutions). The conserved-flux identities
//! `|T|² + |R±|² = 1` and `T R̄₊ + R₋ T̄ = 0` hold on the open band.
//!
//! At a band edge (`sinθ = 0`) the potential is called *generic* when
//! `W ≠ 0` there and *resonant* when `W = 0`; the free potential is the
//! canonical resonant case.

use num_complex::Complex64;
use serde::Serialize;

use crate::jost::{jost_phase, JostEngine, Sign, SpectralPoint};
use crate::lattice::{ComplexField, LatticeWindow, Potential};
use crate::{Error, Result};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Discrete Wronskian `[u,v](n) = u(n+1)v(n) - u(n)v(n+1)`. Both fields must
/// cover `n` and `n+1`.
pub fn wronskian(u: &ComplexField, v: &ComplexField, n: i64) -> Result<Complex64> {
    for (field, label) in [(u, "first"), (v, "second")] {
        let w = field.window();
        if n < w.n_min() || n + 1 > w.n_max() {
            return Err(Error::OutOfWindow {
                n,
                window: format!("{label} field on {w}"),
            });
        }
    }
    Ok(u.get(n + 1) * v.get(n) - u.get(n) * v.get(n + 1))
}

/// Scattering coefficients at a real spectral parameter.
#[derive(Debug, Clone, Serialize)]
pub struct ScatteringData {
    pub theta: f64,
    /// `[f₊, f₋]`.
    pub w: Complex64,
    /// `[f₊, f̄₋]`.
    pub w1: Complex64,
    pub t: Complex64,
    pub r_minus: Complex64,
    pub r_plus: Complex64,
}

impl ScatteringData {
    /// `|T|² + |R₋|² - 1` (zero on the open band in exact arithmetic).
    pub fn unitarity_defect(&self) -> f64 {
        (self.t.norm_sqr() + self.r_minus.norm_sqr() - 1.0).abs()
    }

    /// `T R̄₊ + R₋ T̄` (zero on the open band in exact arithmetic).
    pub fn cross_defect(&self) -> f64 {
        (self.t * self.r_plus.conj() + self.r_minus * self.t.conj()).norm()
    }
}

/// Wronskians and `(T, R₋, R₊)` via the Jost sweeps.
pub fn scattering_data(q: &Potential, theta: f64) -> Result<ScatteringData> {
    let engine = JostEngine::new(q)?;
    scattering_data_with(&engine, theta)
}

pub(crate) fn scattering_data_with(engine: &JostEngine, theta: f64) -> Result<ScatteringData> {
    let point = SpectralPoint::from_real_theta(theta)?;
    let th = point.theta();
    let out = LatticeWindow::new(-2, 2)?;
    let (mp, _) = engine.m_arrays(Sign::Plus, out, th, false)?;
    let (mm, _) = engine.m_arrays(Sign::Minus, out, th, false)?;
    let f = |sign: Sign, m: &[Complex64], n: i64| {
        jost_phase(sign, n, th) * m[out.index_of(n).expect("inside out window")]
    };
    let fp0 = f(Sign::Plus, &mp, 0);
    let fp1 = f(Sign::Plus, &mp, 1);
    let fm0 = f(Sign::Minus, &mm, 0);
    let fm1 = f(Sign::Minus, &mm, 1);

    let w = fp1 * fm0 - fp0 * fm1;
    let w1 = fp1 * fm0.conj() - fp0 * fm1.conj();
    let scale = fp0.norm() + fp1.norm() + fm0.norm() + fm1.norm();
    if w.norm() <= 1e-13 * scale.max(1.0) {
        return Err(Error::EdgeUndefined {
            what: format!("Wronskian vanishes at θ = {theta} (resonant edge)"),
        });
    }
    let s = point.sin_theta();
    let t = c64(0.0, -2.0) * s / w;
    let r_minus = -w1 / w;
    let r_plus = (fm1 * fp0.conj() - fm0 * fp1.conj()) / w;
    Ok(ScatteringData {
        theta,
        w,
        w1,
        t,
        r_minus,
        r_plus,
    })
}

/// Edge classification of a potential.
#[derive(Debug, Clone, Serialize)]
pub struct GenericityReport {
    /// `W` at `θ = 0` (real for real potentials).
    pub w_at_zero: Complex64,
    /// `W` at `θ = π`.
    pub w_at_pi: Complex64,
    /// `max |W|` over a coarse interior grid, used to scale the threshold.
    pub w_scale: f64,
    /// Absolute threshold below which an edge Wronskian counts as zero.
    pub threshold: f64,
    pub generic_at_zero: bool,
    pub generic_at_pi: bool,
}

impl GenericityReport {
    pub fn is_generic(&self) -> bool {
        self.generic_at_zero && self.generic_at_pi
    }
}

/// Decide whether `q` is generic (edge Wronskians nonzero) by comparing
/// `|W(0)|`, `|W(π)|` against `10⁻⁸ · max|W|` over a 64-point interior grid.
pub fn classify_genericity(q: &Potential) -> Result<GenericityReport> {
    let engine = JostEngine::new(q)?;
    let out = LatticeWindow::new(-2, 2)?;
    let w_at = |theta: f64| -> Result<Complex64> {
        let th = c64(theta, 0.0);
        let (mp, _) = engine.m_arrays(Sign::Plus, out, th, false)?;
        let (mm, _) = engine.m_arrays(Sign::Minus, out, th, false)?;
        let f = |sign: Sign, m: &[Complex64], n: i64| {
            jost_phase(sign, n, th) * m[out.index_of(n).expect("inside out window")]
        };
        Ok(f(Sign::Plus, &mp, 1) * f(Sign::Minus, &mm, 0)
            - f(Sign::Plus, &mp, 0) * f(Sign::Minus, &mm, 1))
    };
    let mut scale = 0.0f64;
    let grid = 64;
    for k in 0..grid {
        let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / grid as f64;
        scale = scale.max(w_at(theta)?.norm());
    }
    let threshold = 1e-8 * scale.max(f64::MIN_POSITIVE);
    let w0 = w_at(0.0)?;
    let wpi = w_at(std::f64::consts::PI)?;
    Ok(GenericityReport {
        w_at_zero: w0,
        w_at_pi: wpi,
        w_scale: scale,
        threshold,
        generic_at_zero: w0.norm() > threshold,
        generic_at_pi: wpi.norm() > threshold,
    })
}
