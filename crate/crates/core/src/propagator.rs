//! Propagators of the linear flow `i ∂_t u = H u` and dispersive diagnostics.
//!
//! The free kernel is explicit,
//! `e^{-itH₀}(n, m) = e^{-2it} i^{|n-m|} J_{|n-m|}(2t)`,
//! and decays like `t^{-1/3}` uniformly in `(n, m)` (the Airy region of the
//! Bessel function). With a potential, the continuous part of the flow is a
//! band integral over the Jost kernel:
//!
//! ```text
//! (e^{-itH} P_c)(n, ν) = (iπ)^{-1} ∫_{-π}^{π} e^{-it(2-2cosθ)}
//!                        f₋(n∧ν, θ) f₊(n∨ν, θ) sinθ / W(θ) dθ,
//! ```
//!
//! evaluated by a midpoint rule on an offset grid (spectrally accurate for
//! periodic integrands; the offset keeps grid points clear of the band
//! edges). At `t = 0` the same integral produces the continuous spectral
//! projector, which is cross-checked against the eigenbasis projector.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::bessel_j_row;
use crate::jost::{jost_phase, JostEngine, Sign};
use crate::lattice::{weighted_norm, ComplexField, Kernel, LatticeWindow, Potential};
use crate::spectral::EigenBasis;
use crate::{Error, Result};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Entry `e^{-itH₀}(n, m)` of the free propagator.
pub fn free_propagator_entry(t: f64, n: i64, m: i64) -> Complex64 {
    let k = (n - m).unsigned_abs() as usize;
    let row = bessel_j_row(2.0 * t.abs(), k);
    let sign = if t >= 0.0 { 1.0 } else { -1.0 };
    (c64(0.0, -2.0 * t)).exp() * (sign * Complex64::i()).powi(k as i32) * row[k]
}

/// Dense free propagator on a window (one Bessel row serves every entry).
pub fn free_propagator(t: f64, window: LatticeWindow) -> Kernel {
    let len = window.len();
    let row = bessel_j_row(2.0 * t.abs(), len);
    let phase = (c64(0.0, -2.0 * t)).exp();
    let sign = if t >= 0.0 { 1.0 } else { -1.0 };
    let entries: Vec<Complex64> = (0..len)
        .map(|k| phase * (sign * Complex64::i()).powi(k as i32) * row[k])
        .collect();
    Kernel::from_fn(window, |n, m| entries[(n - m).unsigned_abs() as usize])
}

/// Midpoint grid size resolving the integrand's bandwidth for time `t` on
/// `window`: oscillation `2t` from the phase, one lattice span from the
/// plane-wave factors, and the potential's own Fourier content.
pub fn suggested_grid(q: &Potential, t: f64, window: LatticeWindow) -> usize {
    let span = window.len() as f64;
    let supp = match q.support() {
        Some((lo, hi)) => (hi - lo + 1) as f64,
        None => 0.0,
    };
    let bandwidth = 2.0 * t.abs() + span + 2.0 * supp;
    ((2.5 * bandwidth + 256.0).ceil() as usize).next_multiple_of(2).max(1024)
}

/// Kernel of `e^{-itH} P_c` on `window` by band quadrature. `grid` overrides
/// the automatic midpoint-rule size (must over-resolve the phase).
pub fn continuous_propagator(
    q: &Potential,
    t: f64,
    window: LatticeWindow,
    grid: Option<usize>,
) -> Result<Kernel> {
    let m_grid = grid.unwrap_or_else(|| suggested_grid(q, t, window));
    let engine = JostEngine::new(q)?;
    let len = window.len();
    let i0 = window.index_of(0).expect("window contains 0");
    let i1 = window.index_of(1).expect("window contains 1");

    // Upper triangle (i <= j) accumulated in packed rows, then mirrored.
    let mut upper = vec![c64(0.0, 0.0); len * len];
    let weight = 2.0 * std::f64::consts::PI / m_grid as f64;
    let prefactor = c64(0.0, -1.0) / std::f64::consts::PI; // 1/(iπ)

    let mut f_minus = vec![c64(0.0, 0.0); len];
    let mut f_plus = vec![c64(0.0, 0.0); len];
    for j in 0..m_grid {
        let theta = -std::f64::consts::PI
            + 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m_grid as f64;
        let th = c64(theta, 0.0);
        let (mp, _) = engine.m_arrays(Sign::Plus, window, th, false)?;
        let (mm, _) = engine.m_arrays(Sign::Minus, window, th, false)?;
        for (idx, n) in window.sites().enumerate() {
            f_minus[idx] = jost_phase(Sign::Minus, n, th) * mm[idx];
            f_plus[idx] = jost_phase(Sign::Plus, n, th) * mp[idx];
        }
        let w = jost_phase(Sign::Plus, 1, th) * mp[i1] * mm[i0]
            - mp[i0] * jost_phase(Sign::Minus, 1, th) * mm[i1];
        let z = 2.0 * (1.0 - theta.cos());
        let coeff =
            prefactor * (c64(0.0, -t * z)).exp() * c64(theta.sin(), 0.0) / w * weight;
        let fm = &f_minus;
        let fp = &f_plus;
        upper
            .par_chunks_mut(len)
            .enumerate()
            .for_each(|(i, row)| {
                let a = coeff * fm[i];
                for (jj, slot) in row.iter_mut().enumerate().skip(i) {
                    *slot += a * fp[jj];
                }
            });
    }
    // Mirror: the kernel is symmetric in (n, ν).
    let mut data = upper;
    for i in 0..len {
        for j in 0..i {
            data[i * len + j] = data[j * len + i];
        }
    }
    Kernel::from_rows(window, data)
}

/// One measurement of the dispersive sup-norm at time `t`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayPoint {
    pub t: f64,
    /// Radius of the block over which the sup was taken.
    pub radius: i64,
    /// `sup |K(t)(n,m)|` over the block.
    pub sup: f64,
    /// `t^{1/3} · sup`.
    pub c_scaled: f64,
}

/// Result of a dispersive decay scan.
#[derive(Debug, Clone, Serialize)]
pub struct DecayScanReport {
    pub points: Vec<DecayPoint>,
    /// Least-squares slope of `log sup` against `log t` over `t >= fit_from`.
    pub slope: f64,
    pub fit_from: f64,
    /// `max_t t^{1/3} sup(t)`.
    pub c_measured: f64,
}

/// Extra block radius beyond `t`, covering the Airy peak at `|n-m| ≈ 2t`
/// (width `O(t^{1/3})`) with margin.
const DECAY_BLOCK_MARGIN: i64 = 66;

/// Measure `sup_{n,m} |e^{-itH}P_c(n,m)|` over a block that grows with `t`
/// and fit the decay exponent. Free potentials use the Bessel form directly.
pub fn decay_scan(q: &Potential, times: &[f64], fit_from: f64) -> Result<DecayScanReport> {
    if times.iter().any(|&t| t <= 0.0) {
        return Err(Error::InvalidArgument("decay scan needs t > 0".into()));
    }
    let points: Vec<DecayPoint> = times
        .iter()
        .map(|&t| {
            let radius = t.ceil() as i64 + DECAY_BLOCK_MARGIN;
            let sup = if q.is_zero() {
                // sup over |n-m| <= 2·radius of |J_k(2t)|.
                let row = bessel_j_row(2.0 * t, 2 * radius as usize);
                row.iter().fold(0.0f64, |a, v| a.max(v.abs()))
            } else {
                let window = LatticeWindow::symmetric(radius)?;
                let kernel = continuous_propagator(q, t, window, None)?;
                kernel.max_abs()
            };
            Ok(DecayPoint {
                t,
                radius,
                sup,
                c_scaled: t.cbrt() * sup,
            })
        })
        .collect::<Result<_>>()?;

    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.t >= fit_from && p.sup > 0.0)
        .map(|p| (p.t.ln(), p.sup.ln()))
        .collect();
    if fit.len() < 2 {
        return Err(Error::InvalidArgument(
            "decay fit needs at least two times at or above fit_from".into(),
        ));
    }
    let n = fit.len() as f64;
    let sx: f64 = fit.iter().map(|p| p.0).sum();
    let sy: f64 = fit.iter().map(|p| p.1).sum();
    let sxx: f64 = fit.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = fit.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let c_measured = points.iter().fold(0.0f64, |a, p| a.max(p.c_scaled));
    Ok(DecayScanReport {
        points,
        slope,
        fit_from,
        c_measured,
    })
}

/// Dual exponent of the admissible pair `2/r + 1/p = 1/2`, `r ∈ [4, ∞]`.
pub fn admissible_exponent(r: f64) -> Result<f64> {
    if r < 4.0 {
        return Err(Error::InvalidArgument(format!(
            "admissible exponent requires r >= 4, got {r}"
        )));
    }
    if r.is_infinite() {
        return Ok(2.0);
    }
    if r == 4.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * r / (r - 4.0))
}

/// Streaming evaluation of the dispersive space-time norm: the `ℓ^{3r/2}`
/// sequence norm over unit time intervals of the interval-maximum of
/// `‖u(t)‖_{ℓ^p}`, with `p` the admissible dual of `r`.
#[derive(Debug, Clone)]
pub struct StrichartzAccumulator {
    r: f64,
    p: f64,
    interval: Option<i64>,
    interval_max: f64,
    acc: f64,
    global_max: f64,
    last_t: f64,
}

impl StrichartzAccumulator {
    pub fn new(r: f64) -> Result<Self> {
        let p = admissible_exponent(r)?;
        Ok(Self {
            r,
            p,
            interval: None,
            interval_max: 0.0,
            acc: 0.0,
            global_max: 0.0,
            last_t: f64::NEG_INFINITY,
        })
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.r, self.p)
    }

    /// Record a sample; times must be nondecreasing.
    pub fn push(&mut self, t: f64, u: &ComplexField) -> Result<()> {
        if t < self.last_t {
            return Err(Error::InvalidArgument(format!(
                "samples must be time-ordered: {t} after {}",
                self.last_t
            )));
        }
        self.last_t = t;
        let norm = weighted_norm(u, self.p, 0.0)?;
        self.push_norm(t, norm)
    }

    /// Record a precomputed `ℓ^p` norm (for streaming pipelines).
    pub fn push_norm(&mut self, t: f64, norm: f64) -> Result<()> {
        if !norm.is_finite() {
            return Err(Error::NonFinite {
                site: t.floor() as i64,
                context: "space-time norm sample",
            });
        }
        let j = t.floor() as i64;
        match self.interval {
            Some(cur) if cur == j => {
                self.interval_max = self.interval_max.max(norm);
            }
            Some(_) => {
                self.fold_interval();
                self.interval = Some(j);
                self.interval_max = norm;
            }
            None => {
                self.interval = Some(j);
                self.interval_max = norm;
            }
        }
        self.global_max = self.global_max.max(norm);
        Ok(())
    }

    fn fold_interval(&mut self) {
        if self.r.is_infinite() {
            return; // sup norm handled by global_max
        }
        let e = 1.5 * self.r;
        self.acc += self.interval_max.powf(e);
    }

    /// Final norm value.
    pub fn value(mut self) -> f64 {
        if self.r.is_infinite() {
            return self.global_max;
        }
        self.fold_interval();
        if self.acc == 0.0 {
            0.0
        } else {
            self.acc.powf(1.0 / (1.5 * self.r))
        }
    }
}

/// Time-integrated local-smoothing measurements.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothingReport {
    pub tau: f64,
    pub t_max: f64,
    pub dt: f64,
    /// `(∫_0^T ‖⟨n⟩^{-τ} e^{-itH} P_c f‖² dt)^{1/2}`.
    pub homogeneous: f64,
    /// Same norm for the retarded Duhamel integral driven by `g`.
    pub duhamel_weighted: f64,
    /// `sup_t ‖v(t)‖_{ℓ²}` for the Duhamel integral.
    pub duhamel_sup: f64,
    /// `(∫_0^T ‖⟨n⟩^{τ} g(t)‖² dt)^{1/2}` (the dual-weighted source size).
    pub source_weighted: f64,
    /// `‖f‖_{ℓ²}`.
    pub data_norm: f64,
    /// Measured limiting-absorption constant and the induced a-priori bound
    /// `√(2π C(τ)) ‖f‖` on the homogeneous norm.
    pub c_tau: f64,
    pub kato_bound: f64,
}

/// Default exponential envelope for the Duhamel source `g(t) = e^{-t/(T/8)} f`.
fn source_envelope(t: f64, t_max: f64) -> f64 {
    (-t / (t_max / 8.0)).exp()
}

/// Measure smoothing norms for the flow generated by `H` on the potential's
/// window: the homogeneous flow from `f`, and the retarded Duhamel integral
/// `v(t) = ∫_0^t e^{-i(t-s)H} P_c g(s) ds` with `g(t) = e^{-8t/T} f`.
pub fn smoothing_norms(
    q: &Potential,
    f: &ComplexField,
    tau: f64,
    t_max: f64,
    dt: f64,
) -> Result<SmoothingReport> {
    if dt <= 0.0 || t_max <= dt {
        return Err(Error::InvalidArgument(
            "smoothing norms need 0 < dt < t_max".into(),
        ));
    }
    let window = q.window();
    if f.window() != window {
        return Err(Error::WindowMismatch {
            left: f.window().to_string(),
            right: window.to_string(),
        });
    }
    let basis = EigenBasis::new(q);
    let n = window.len();
    let steps = (t_max / dt).ceil() as usize;

    // Eigen coefficients of f with discrete modes removed.
    let fv = f.values();
    let mut coeff = vec![c64(0.0, 0.0); n];
    for (j, c) in coeff.iter_mut().enumerate() {
        let mode = basis.mode(j);
        let mut acc = c64(0.0, 0.0);
        for (x, &v) in fv.iter().zip(mode) {
            acc += x * v;
        }
        *c = acc;
    }
    for &j in basis.discrete_indices() {
        coeff[j] = c64(0.0, 0.0);
    }

    let weights: Vec<f64> = window.sites().map(|k| crate::lattice::bracket(k).powf(-tau)).collect();
    let reconstruct = |coef: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![c64(0.0, 0.0); n];
        for (j, &cj) in coef.iter().enumerate() {
            if cj == c64(0.0, 0.0) {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(basis.mode(j)) {
                *o += cj * v;
            }
        }
        out
    };
    let weighted_sq = |vals: &[Complex64]| -> f64 {
        vals.iter()
            .zip(&weights)
            .map(|(v, w)| (v * w).norm_sqr())
            .sum()
    };

    // Homogeneous flow: phases advance the fixed coefficients.
    let mut homo_sq = 0.0;
    let mut hc = coeff.clone();
    for k in 0..=steps {
        let vals = reconstruct(&hc);
        let trapz = if k == 0 || k == steps { 0.5 } else { 1.0 };
        homo_sq += trapz * dt * weighted_sq(&vals);
        if k < steps {
            for (c, &l) in hc.iter_mut().zip(basis.eigenvalues()) {
                *c *= (c64(0.0, -dt * l)).exp();
            }
        }
    }

    // Duhamel integral, midpoint stepping in the eigenbasis.
    let mut duh_sq = 0.0;
    let mut duh_sup = 0.0f64;
    let mut source_sq = 0.0;
    let mut vc = vec![c64(0.0, 0.0); n];
    let dual_weights: Vec<f64> = window.sites().map(|k| crate::lattice::bracket(k).powf(tau)).collect();
    let source_base_sq: f64 = fv
        .iter()
        .zip(&dual_weights)
        .map(|(v, w)| (v * w).norm_sqr())
        .sum();
    for k in 0..=steps {
        let t = k as f64 * dt;
        let vals = reconstruct(&vc);
        let trapz = if k == 0 || k == steps { 0.5 } else { 1.0 };
        duh_sq += trapz * dt * weighted_sq(&vals);
        let l2: f64 = vals.iter().map(|v| v.norm_sqr()).sum::<f64>();
        duh_sup = duh_sup.max(l2.sqrt());
        source_sq += trapz * dt * source_envelope(t, t_max).powi(2) * source_base_sq;
        if k < steps {
            let env = source_envelope(t + 0.5 * dt, t_max);
            for (j, c) in vc.iter_mut().enumerate() {
                let l = basis.eigenvalues()[j];
                let full = (c64(0.0, -dt * l)).exp();
                let half = (c64(0.0, -0.5 * dt * l)).exp();
                *c = full * *c + dt * half * env * coeff[j];
            }
        }
    }

    // Limiting-absorption constant on a modest interior grid.
    let report = crate::spectral::limiting_absorption(q, tau, &crate::spectral::band_grid(32), window)?;
    let data_norm = f.norm_l2();
    Ok(SmoothingReport {
        tau,
        t_max,
        dt,
        homogeneous: homo_sq.sqrt(),
        duhamel_weighted: duh_sq.sqrt(),
        duhamel_sup: duh_sup,
        source_weighted: source_sq.sqrt(),
        data_norm,
        c_tau: report.c_tau,
        kato_bound: (2.0 * std::f64::consts::PI * report.c_tau).sqrt() * data_norm,
    })
}
