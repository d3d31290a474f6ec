//! Resolvent kernels, spectral projections, and limiting-absorption bounds.
//!
//! For `z` off the band the resolvent of `H = -Δ + q` has the rank-one-split
//! kernel
//!
//! ```text
//! (H - z)^{-1}(n, m) = - f₋(n∧m, θ) f₊(n∨m, θ) / W(θ),    z = 2(1 - cosθ),
//! ```
//!
//! with `Im θ < 0`. The kernel is assembled from the normalised parts `m±`
//! and the phase `e^{-iθ(n∨m - n∧m)}` so that nothing overflows deep in the
//! strip. Boundary values `R^±(λ)` on the open band are the same formula at
//! real `θ`: the limit `Im z → 0+` corresponds to `θ = -θ_r` and
//! `Im z → 0-` to `θ = +θ_r`, where `θ_r = arccos(1 - λ/2) ∈ (0, π)`.
//!
//! The discrete part of the spectrum and the projectors `P_d`, `P_c` come
//! from a windowed eigendecomposition (exponentially accurate for compactly
//! supported potentials); the continuous-weight constant
//! `C(τ) = sup_λ ‖⟨n⟩^{-τ} R^±(λ) P_c ⟨m⟩^{-τ}‖` is measured on a grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::jost::{JostEngine, Sign, SpectralPoint};
use crate::lattice::{bracket, ComplexField, Kernel, LatticeWindow, Potential};
use crate::tridiag::decompose_sym_tridiagonal;
use crate::{Error, Result};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Which side of the band a boundary value is taken from: `Plus` is the
/// limit `Im z → 0+`, `Minus` the limit `Im z → 0-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

/// Strip parameter of the boundary value `R^±(λ)`, `λ ∈ (0,4)`.
pub fn boundary_theta(lambda: f64, side: Side) -> Result<f64> {
    if !(0.0..=4.0).contains(&lambda) {
        return Err(Error::OffBand {
            z: c64(lambda, 0.0),
        });
    }
    let theta_r = (1.0 - lambda / 2.0).clamp(-1.0, 1.0).acos();
    Ok(match side {
        Side::Plus => -theta_r,
        Side::Minus => theta_r,
    })
}

/// Resolvent kernel `(H - z)^{-1}` on `window` for `z` off `[0, 4]`,
/// assembled from the Jost solutions. Exact for the whole-line operator (no
/// window truncation error); the window only selects which entries to store.
pub fn resolvent_kernel(q: &Potential, z: Complex64, window: LatticeWindow) -> Result<Kernel> {
    if z.im == 0.0 && (0.0..=4.0).contains(&z.re) {
        return Err(Error::OffBand { z });
    }
    let point = SpectralPoint::from_z(z);
    resolvent_from_point(q, point, window)
}

/// Boundary value `R^±(λ)` of the resolvent on the open band.
pub fn boundary_resolvent(
    q: &Potential,
    lambda: f64,
    side: Side,
    window: LatticeWindow,
) -> Result<Kernel> {
    let theta = boundary_theta(lambda, side)?;
    let point = SpectralPoint::from_real_theta(theta)?;
    if point.is_edge(1e-12) {
        return Err(Error::EdgeUndefined {
            what: format!("boundary resolvent at λ = {lambda}"),
        });
    }
    resolvent_from_point(q, point, window)
}

fn resolvent_from_point(
    q: &Potential,
    point: SpectralPoint,
    window: LatticeWindow,
) -> Result<Kernel> {
    let theta = point.theta();
    let engine = JostEngine::new(q)?;
    let (mp, _) = engine.m_arrays(Sign::Plus, window, theta, false)?;
    let (mm, _) = engine.m_arrays(Sign::Minus, window, theta, false)?;
    let i0 = window.index_of(0).expect("window contains 0");
    let i1 = window.index_of(1).expect("window contains 1");
    let em = (c64(0.0, -1.0) * theta).exp(); // |e^{-iθ}| <= 1 on the strip
    let ep = (c64(0.0, 1.0) * theta).exp();
    let w = em * mp[i1] * mm[i0] - ep * mp[i0] * mm[i1];
    let scale = mp[i0].norm() + mp[i1].norm() + mm[i0].norm() + mm[i1].norm();
    if w.norm() <= 1e-12 * scale.max(1.0) {
        return Err(Error::Hypothesis(format!(
            "Wronskian vanishes at z = {}: eigenvalue or resonant edge",
            point.z()
        )));
    }

    // Phase ladder e^{-iθ d}, d = 0..len-1 (decaying, so stable to chain).
    let len = window.len();
    let mut phases = Vec::with_capacity(len);
    let mut p = c64(1.0, 0.0);
    for _ in 0..len {
        phases.push(p);
        p *= em;
    }
    let minus_inv_w = -c64(1.0, 0.0) / w;
    let data: Vec<Complex64> = (0..len)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mp = &mp;
            let mm = &mm;
            let phases = &phases;
            (0..len).map(move |j| {
                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                minus_inv_w * phases[hi - lo] * mm[lo] * mp[hi]
            })
        })
        .collect();
    Kernel::from_rows(window, data)
}

/// A windowed bound state: eigenvalue outside the continuous band together
/// with its (unit) eigenvector.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub lambda: f64,
    pub mode: Vec<f64>,
}

/// Tolerance separating windowed continuum eigenvalues (inside `[0,4]` up to
/// this margin) from genuine discrete eigenvalues.
pub const EDGE_MARGIN: f64 = 1e-6;

/// Eigendecomposition of `H` on the potential's window (Dirichlet ends),
/// with modes stored contiguously. Provides flows, spectral functions, and
/// the discrete/continuous projectors.
pub struct EigenBasis {
    window: LatticeWindow,
    eigenvalues: Vec<f64>,
    /// Mode `j` occupies `modes[j*len..(j+1)*len]`.
    modes: Vec<f64>,
    discrete: Vec<usize>,
}

impl EigenBasis {
    pub fn new(q: &Potential) -> Self {
        let window = q.window();
        let n = window.len();
        let diag: Vec<f64> = window.sites().map(|k| 2.0 + q.q(k)).collect();
        let off = vec![-1.0; n - 1];
        let eig = decompose_sym_tridiagonal(&diag, &off);
        let mut modes = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                modes[j * n + k] = eig.vectors[k * n + j];
            }
        }
        let discrete = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter_map(|(j, &l)| (!(-EDGE_MARGIN..=4.0 + EDGE_MARGIN).contains(&l)).then_some(j))
            .collect();
        Self {
            window,
            eigenvalues: eig.eigenvalues,
            modes,
            discrete,
        }
    }

    pub fn window(&self) -> LatticeWindow {
        self.window
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode(&self, j: usize) -> &[f64] {
        let n = self.window.len();
        &self.modes[j * n..(j + 1) * n]
    }

    pub fn discrete_indices(&self) -> &[usize] {
        &self.discrete
    }

    pub fn bound_states(&self) -> Vec<BoundState> {
        self.discrete
            .iter()
            .map(|&j| BoundState {
                lambda: self.eigenvalues[j],
                mode: self.mode(j).to_vec(),
            })
            .collect()
    }

    /// `g(H) u`, optionally restricted to the continuous modes.
    pub fn apply_function(
        &self,
        g: impl Fn(f64) -> Complex64,
        u: &ComplexField,
        continuous_only: bool,
    ) -> Result<ComplexField> {
        if u.window() != self.window {
            return Err(Error::WindowMismatch {
                left: u.window().to_string(),
                right: self.window.to_string(),
            });
        }
        let n = self.window.len();
        let uv = u.values();
        let mut out = vec![c64(0.0, 0.0); n];
        for j in 0..n {
            if continuous_only && self.discrete.contains(&j) {
                continue;
            }
            let mode = self.mode(j);
            let mut coeff = c64(0.0, 0.0);
            for (x, &v) in uv.iter().zip(mode) {
                coeff += x * v;
            }
            let gc = g(self.eigenvalues[j]) * coeff;
            for (o, &v) in out.iter_mut().zip(mode) {
                *o += gc * v;
            }
        }
        ComplexField::from_values(self.window, out)
    }

    /// `e^{-itH} u`, optionally with the discrete modes projected out.
    pub fn flow(&self, t: f64, u: &ComplexField, continuous_only: bool) -> Result<ComplexField> {
        self.apply_function(|l| (c64(0.0, -t * l)).exp(), u, continuous_only)
    }

    /// Dense kernel of `g(H)` (optionally continuous modes only).
    pub fn function_kernel(
        &self,
        g: impl Fn(f64) -> Complex64 + Sync,
        continuous_only: bool,
    ) -> Kernel {
        let n = self.window.len();
        let weights: Vec<Complex64> = (0..n)
            .map(|j| {
                if continuous_only && self.discrete.contains(&j) {
                    c64(0.0, 0.0)
                } else {
                    g(self.eigenvalues[j])
                }
            })
            .collect();
        let data: Vec<Complex64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let modes = &self.modes;
                let weights = &weights;
                (0..n).map(move |k| {
                    let mut acc = c64(0.0, 0.0);
                    for j in 0..n {
                        let wj = weights[j];
                        if wj != c64(0.0, 0.0) {
                            acc += wj * modes[j * n + i] * modes[j * n + k];
                        }
                    }
                    acc
                })
            })
            .collect();
        Kernel::from_rows(self.window, data).expect("dimensions agree by construction")
    }

    /// Dense kernel of `e^{-itH}` (optionally continuous modes only).
    pub fn flow_kernel(&self, t: f64, continuous_only: bool) -> Kernel {
        self.function_kernel(|l| (c64(0.0, -t * l)).exp(), continuous_only)
    }

    /// `P_d = Σ_d |φ_d⟩⟨φ_d|` over the discrete modes.
    pub fn projector_discrete(&self) -> Kernel {
        let n = self.window.len();
        let mut k = Kernel::zeros(self.window);
        for &j in &self.discrete {
            let mode = self.mode(j);
            let data = k.data_mut();
            for a in 0..n {
                let va = mode[a];
                if va == 0.0 {
                    continue;
                }
                for b in 0..n {
                    data[a * n + b] += c64(va * mode[b], 0.0);
                }
            }
        }
        k
    }

    /// `P_c = 1 - P_d`.
    pub fn projector_continuous(&self) -> Kernel {
        let pd = self.projector_discrete();
        Kernel::identity(self.window).add_scaled(&pd, c64(-1.0, 0.0)).expect("same window")
    }
}

/// Discrete spectrum of `H` on the potential's window.
pub fn discrete_spectrum(q: &Potential) -> Vec<BoundState> {
    EigenBasis::new(q).bound_states()
}

/// Measured limiting-absorption constant
/// `C(τ) = max over the grid and both sides of ‖⟨n⟩^{-τ} R^±(λ) P_c ⟨m⟩^{-τ}‖`.
#[derive(Debug, Clone, Serialize)]
pub struct LimitingAbsorptionReport {
    pub tau: f64,
    pub c_tau: f64,
    /// `λ` attaining the maximum.
    pub lambda_star: f64,
    pub side_star: Side,
    /// Per-grid-point norms `(λ, ‖·‖ at side +, ‖·‖ at side -)`.
    pub profile: Vec<(f64, f64, f64)>,
}

/// Measure `C(τ)` over a grid of interior band energies.
pub fn limiting_absorption(
    q: &Potential,
    tau: f64,
    lambdas: &[f64],
    window: LatticeWindow,
) -> Result<LimitingAbsorptionReport> {
    if tau <= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "weight exponent τ must exceed 1/2, got {tau}"
        )));
    }
    // Bound states of the windowed operator, transplanted to the target
    // window (zero-extended; the modes decay exponentially).
    let basis = EigenBasis::new(q);
    let bounds: Vec<ComplexField> = basis
        .bound_states()
        .into_iter()
        .map(|bs| {
            let src = ComplexField::from_values(
                basis.window(),
                bs.mode.iter().map(|&v| c64(v, 0.0)).collect(),
            )?;
            Ok(src.transplant(window))
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = window.sites().map(|n| bracket(n).powf(-tau)).collect();

    let evaluate = |lambda: f64, side: Side| -> Result<f64> {
        let r = boundary_resolvent(q, lambda, side, window)?;
        let n = window.len();
        let mut data = r.data().to_vec();
        // Rank-one corrections R P_c = R - Σ_d (Rφ_d) φ_dᵀ.
        for phi in &bounds {
            let rphi = r.apply(phi)?;
            let rv = rphi.values();
            let pv = phi.values();
            for i in 0..n {
                let a = rv[i];
                if a == c64(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] -= a * pv[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] *= weights[i] * weights[j];
            }
        }
        Ok(Kernel::from_rows(window, data)?.op_norm())
    };

    let profile: Vec<(f64, f64, f64)> = lambdas
        .par_iter()
        .map(|&l| {
            let plus = evaluate(l, Side::Plus)?;
            let minus = evaluate(l, Side::Minus)?;
            Ok((l, plus, minus))
        })
        .collect::<Result<_>>()?;
    let mut c_tau = 0.0;
    let mut lambda_star = f64::NAN;
    let mut side_star = Side::Plus;
    for &(l, p, m) in &profile {
        if p > c_tau {
            c_tau = p;
            lambda_star = l;
            side_star = Side::Plus;
        }
        if m > c_tau {
            c_tau = m;
            lambda_star = l;
            side_star = Side::Minus;
        }
    }
    Ok(LimitingAbsorptionReport {
        tau,
        c_tau,
        lambda_star,
        side_star,
        profile,
    })
}

/// Offset grid of `count` interior band energies, avoiding both edges.
pub fn band_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| 4.0 * (k as f64 + 0.5) / count as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j;
    use crate::lattice::apply_hamiltonian;
    use crate::oracles::resolvent_by_solve;

    fn test_potential(window: LatticeWindow) -> Potential {
        Potential::from_fn(window, |n| {
            if n.abs() > 6 {
                0.0
            } else {
                0.6 * (-0.7 * n.abs() as f64).exp() * ((0.8 * n as f64).cos() - 0.35)
            }
        })
        .unwrap()
    }

    #[test]
    fn resolvent_matches_independent_solve() {
        let w = LatticeWindow::symmetric(90).unwrap();
        let q = test_potential(w);
        for &z in &[c64(-1.0, 0.0), c64(2.0, 1.0), c64(5.3, -0.6)] {
            let jost_path = resolvent_kernel(&q, z, w).unwrap();
            let solve_path = resolvent_by_solve(&q, z, w).unwrap();
            let mut worst = 0.0f64;
            for n in -30i64..=30 {
                for m in -30i64..=30 {
                    worst = worst.max((jost_path.get(n, m) - solve_path.get(n, m)).norm());
                }
            }
            assert!(worst < 1e-11, "z = {z}: central deviation {worst}");
        }
    }

    #[test]
    fn resolvent_inverts_the_operator() {
        let w = LatticeWindow::symmetric(40).unwrap();
        let q = test_potential(w);
        let z = c64(1.7, 0.9);
        let kernel = resolvent_kernel(&q, z, w).unwrap();
        for j in [-17i64, -3, 0, 8, 21] {
            let col = ComplexField::from_fn(w, |n| kernel.get(n, j));
            let hcol = apply_hamiltonian(&q, &col).unwrap();
            for n in -39i64..=39 {
                let expected = if n == j { c64(1.0, 0.0) } else { c64(0.0, 0.0) };
                let res = hcol.get(n) - z * col.get(n) - expected;
                assert!(res.norm() < 1e-12, "column {j}, site {n}: {}", res.norm());
            }
        }
    }

    #[test]
    fn resolvent_rejects_band_energies() {
        let w = LatticeWindow::symmetric(10).unwrap();
        let q = test_potential(w);
        assert!(resolvent_kernel(&q, c64(2.0, 0.0), w).is_err());
        assert!(resolvent_kernel(&q, c64(2.0, 0.01), w).is_ok());
    }

    #[test]
    fn boundary_values_are_one_sided_limits() {
        let w = LatticeWindow::symmetric(60).unwrap();
        let q = test_potential(w);
        let lambda = 1.3;
        let eps = 1e-7;
        for (side, im) in [(Side::Plus, eps), (Side::Minus, -eps)] {
            let boundary = boundary_resolvent(&q, lambda, side, w).unwrap();
            let interior = resolvent_kernel(&q, c64(lambda, im), w).unwrap();
            for &(n, m) in &[(0i64, 0i64), (5, -9), (-20, 14)] {
                let b = boundary.get(n, m);
                let i = interior.get(n, m);
                assert!(
                    (b - i).norm() < 1e-4 * b.norm().max(0.1),
                    "side {side:?}, ({n},{m}): {b} vs {i}"
                );
            }
        }
        // The two sides genuinely differ: complex conjugates, not equal.
        let plus = boundary_resolvent(&q, lambda, Side::Plus, w).unwrap();
        let minus = boundary_resolvent(&q, lambda, Side::Minus, w).unwrap();
        assert!((plus.get(0, 0) - minus.get(0, 0).conj()).norm() < 1e-12);
        assert!((plus.get(0, 0) - minus.get(0, 0)).norm() > 1e-3);
    }

    #[test]
    fn boundary_resolvent_solves_on_the_band() {
        let w = LatticeWindow::symmetric(35).unwrap();
        let q = test_potential(w);
        let lambda = 2.6;
        for side in [Side::Plus, Side::Minus] {
            let kernel = boundary_resolvent(&q, lambda, side, w).unwrap();
            let j = 4i64;
            let col = ComplexField::from_fn(w, |n| kernel.get(n, j));
            let hcol = apply_hamiltonian(&q, &col).unwrap();
            for n in -34i64..=34 {
                let expected = if n == j { 1.0 } else { 0.0 };
                let res = hcol.get(n) - lambda * col.get(n) - expected;
                assert!(res.norm() < 1e-11, "side {side:?}, site {n}");
            }
        }
    }

    #[test]
    fn pinned_site_bound_state() {
        // q = -δ₀: single eigenvalue 2 - √5 with mode ∝ e^{-κ|n|},
        // e^{-κ} = (√5 - 1)/2.
        let w = LatticeWindow::symmetric(48).unwrap();
        let q = Potential::single_site(w, -1.0).unwrap();
        let states = discrete_spectrum(&q);
        assert_eq!(states.len(), 1);
        let bs = &states[0];
        assert!((bs.lambda - (2.0 - 5.0f64.sqrt())).abs() < 1e-12);
        let i0 = w.index_of(0).unwrap();
        let ratio = bs.mode[i0 + 1] / bs.mode[i0];
        assert!((ratio - (5.0f64.sqrt() - 1.0) / 2.0).abs() < 1e-10);
        let sym = bs.mode[i0 - 5] / bs.mode[i0 + 5];
        assert!((sym - 1.0).abs() < 1e-10);
    }

    #[test]
    fn projectors_decompose_identity() {
        let w = LatticeWindow::symmetric(30).unwrap();
        let q = Potential::single_site(w, -1.0).unwrap();
        let basis = EigenBasis::new(&q);
        assert_eq!(basis.discrete_indices().len(), 1);
        let pd = basis.projector_discrete();
        let pc = basis.projector_continuous();
        // P_d² = P_d, P_c² = P_c, P_d P_c = 0, P_d + P_c = 1.
        let pd2 = pd.matmul(&pd).unwrap().add_scaled(&pd, c64(-1.0, 0.0)).unwrap();
        assert!(pd2.max_abs() < 1e-12);
        let pc2 = pc.matmul(&pc).unwrap().add_scaled(&pc, c64(-1.0, 0.0)).unwrap();
        assert!(pc2.max_abs() < 1e-12);
        let cross = pd.matmul(&pc).unwrap();
        assert!(cross.max_abs() < 1e-12);
        let sum = pd.add_scaled(&pc, c64(1.0, 0.0)).unwrap();
        let dev = sum.add_scaled(&Kernel::identity(w), c64(-1.0, 0.0)).unwrap();
        assert!(dev.max_abs() < 1e-12);
        // P_d commutes with H: H P_d = λ P_d on the mode.
        let bs = &basis.bound_states()[0];
        let mode = ComplexField::from_values(w, bs.mode.iter().map(|&v| c64(v, 0.0)).collect())
            .unwrap();
        let hmode = apply_hamiltonian(&q, &mode).unwrap();
        let res = hmode.add_scaled(&mode, c64(-bs.lambda, 0.0)).unwrap();
        assert!(res.norm_sup() < 1e-10);
    }

    #[test]
    fn eigen_flow_matches_free_kernel() {
        let w = LatticeWindow::symmetric(80).unwrap();
        let q = Potential::zero(w);
        let basis = EigenBasis::new(&q);
        let t = 2.0;
        let kernel = basis.flow_kernel(t, false);
        for &(n, m) in &[(0i64, 0i64), (1, 0), (4, -3), (-7, 2)] {
            let k = (n - m).unsigned_abs() as usize;
            let exact = (c64(0.0, -2.0 * t)).exp()
                * Complex64::i().powi(k as i32)
                * bessel_j(k, 2.0 * t);
            assert!(
                (kernel.get(n, m) - exact).norm() < 1e-10,
                "({n},{m}): {} vs {exact}",
                kernel.get(n, m)
            );
        }
    }

    #[test]
    fn limiting_absorption_is_finite_for_generic_potential() {
        let w = LatticeWindow::symmetric(48).unwrap();
        let q = Potential::single_site(w, -1.0).unwrap();
        let grid = band_grid(24);
        let report = limiting_absorption(&q, 2.0, &grid, w).unwrap();
        assert!(report.c_tau.is_finite() && report.c_tau > 0.0);
        // Refining the grid toward the edges must not blow up (generic case).
        let fine = band_grid(96);
        let refined = limiting_absorption(&q, 2.0, &fine, w).unwrap();
        assert!(refined.c_tau < 3.0 * report.c_tau + 1.0);
        assert!(limiting_absorption(&q, 0.3, &grid, w).is_err());
    }
}
