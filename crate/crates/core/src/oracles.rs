//! Independent reference implementations.
//!
//! Each routine here recomputes a quantity produced elsewhere in the crate by
//! a different, deliberately straightforward algorithm: plane-wave matching
//! instead of Jost sweeps, direct linear solves instead of kernel formulas,
//! quadrature instead of Bessel recurrences, a full-vector Newton instead of
//! the one-dimensional bifurcation equation. They are slower and make no
//! attempt at edge-case finesse; their value is that they share no code path
//! with the production routines they cross-check.

use num_complex::Complex64;

use crate::lattice::{ComplexField, LatticeWindow, Potential};
use crate::tridiag::solve_tridiagonal;
use crate::{Error, Result};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Scattering data obtained by plane-wave matching across the potential's
/// support, together with the raw matching amplitudes.
///
/// Below the support the solution normalised to `e^{-inθ}` at `+∞` reads
/// `α e^{-inθ} + β e^{inθ}`; above the support the solution normalised to
/// `e^{inθ}` at `-∞` reads `γ e^{inθ} + δ e^{-inθ}`. Then
/// `T = 1/α`, `R₋ = β/α`, `R₊ = δ/α`, and `γ = α` up to rounding.
#[derive(Debug, Clone)]
pub struct TransferData {
    pub theta: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
    pub t: Complex64,
    pub r_minus: Complex64,
    pub r_plus: Complex64,
}

/// Transmission and reflection coefficients by direct transfer of plane waves
/// through the support. Requires real `θ` away from the band edges.
pub fn transfer_scattering(q: &Potential, theta: f64) -> Result<TransferData> {
    let s = theta.sin();
    if s.abs() < 1e-9 {
        return Err(Error::EdgeUndefined {
            what: "transfer matching degenerates where sinθ vanishes".into(),
        });
    }
    let z = 2.0 * (1.0 - theta.cos());
    let (lo, hi) = match q.support() {
        Some(s) => s,
        None => {
            // Free case: T = 1, R = 0.
            return Ok(TransferData {
                theta,
                alpha: c64(1.0, 0.0),
                beta: c64(0.0, 0.0),
                gamma: c64(1.0, 0.0),
                delta: c64(0.0, 0.0),
                t: c64(1.0, 0.0),
                r_minus: c64(0.0, 0.0),
                r_plus: c64(0.0, 0.0),
            });
        }
    };
    let wave = |n: i64, dir: f64| (c64(0.0, dir * n as f64 * theta)).exp();
    let det = c64(0.0, -2.0 * s);

    // Downward pass: u ≡ e^{-inθ} above the support, recursed through it via
    // u(n-1) = (2 + q(n) - z) u(n) - u(n+1).
    let mut u_hi = wave(hi + 2, -1.0);
    let mut u = wave(hi + 1, -1.0);
    let mut n = hi + 1;
    while n > lo - 1 {
        let next = (2.0 + q.q(n) - z) * u - u_hi;
        u_hi = u;
        u = next;
        n -= 1;
    }
    // Now u = value at lo-1, u_hi = value at lo.
    let n0 = lo - 1;
    let u_n0 = u;
    let u_n0m1 = (2.0 + q.q(n0) - z) * u_n0 - u_hi;
    let alpha = (u_n0 * wave(n0 - 1, 1.0) - u_n0m1 * wave(n0, 1.0)) / det;
    let beta = (u_n0m1 * wave(n0, -1.0) - u_n0 * wave(n0 - 1, -1.0)) / det;

    // Upward pass: v ≡ e^{inθ} below the support.
    let mut v_lo = wave(lo - 2, 1.0);
    let mut v = wave(lo - 1, 1.0);
    let mut n = lo - 1;
    while n < hi + 1 {
        let next = (2.0 + q.q(n) - z) * v - v_lo;
        v_lo = v;
        v = next;
        n += 1;
    }
    let n1 = hi + 1;
    let v_n1 = v;
    let v_n1p1 = (2.0 + q.q(n1) - z) * v_n1 - v_lo;
    let gamma = (v_n1 * wave(n1 + 1, -1.0) - v_n1p1 * wave(n1, -1.0)) / det;
    let delta = (v_n1p1 * wave(n1, 1.0) - v_n1 * wave(n1 + 1, 1.0)) / det;

    if alpha.norm() == 0.0 {
        return Err(Error::Hypothesis(
            "vanishing matching amplitude α: transmission undefined".into(),
        ));
    }
    Ok(TransferData {
        theta,
        alpha,
        beta,
        gamma,
        delta,
        t: c64(1.0, 0.0) / alpha,
        r_minus: beta / alpha,
        r_plus: delta / alpha,
    })
}

/// Columns of `(H - z)^{-1}` on a window with Dirichlet truncation, each
/// obtained by an independent tridiagonal solve. For `z` off `[0, 4]` the
/// truncation error decays exponentially away from the window ends.
pub fn resolvent_by_solve(
    q: &Potential,
    z: Complex64,
    window: LatticeWindow,
) -> Result<crate::lattice::Kernel> {
    let n = window.len();
    let sub = vec![c64(-1.0, 0.0); n - 1];
    let sup = vec![c64(-1.0, 0.0); n - 1];
    let diag: Vec<Complex64> = window
        .sites()
        .map(|k| c64(2.0 + q.q(k) - z.re, -z.im))
        .collect();
    let mut kernel = crate::lattice::Kernel::zeros(window);
    for j in 0..n {
        let mut rhs = vec![c64(0.0, 0.0); n];
        rhs[j] = c64(1.0, 0.0);
        let col = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
        for (i, v) in col.into_iter().enumerate() {
            kernel.set(window.site(i), window.site(j), v)?;
        }
    }
    Ok(kernel)
}

/// Free propagator entry `e^{-itH₀}(n,m)` by periodic-trapezoid quadrature of
/// `(2π)^{-1} ∫ e^{-2it(1-cosθ)} e^{iθ(n-m)} dθ`. Spectrally accurate once the
/// grid resolves the phase.
pub fn free_kernel_by_quadrature(t: f64, n: i64, m: i64) -> Complex64 {
    let osc = 2.0 * t.abs() + (n - m).abs() as f64;
    let grid = (8.0 * osc).ceil() as usize + 512;
    let mut acc = c64(0.0, 0.0);
    for k in 0..grid {
        let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / grid as f64;
        let phase = -2.0 * t * (1.0 - theta.cos()) + theta * (n - m) as f64;
        acc += c64(0.0, phase).exp();
    }
    acc / grid as f64
}

/// Residual `Hφ + ωφ - φ⁷` of the standing-wave equation (Dirichlet window).
pub fn standing_wave_residual(q: &Potential, omega: f64, phi: &[f64]) -> Vec<f64> {
    let window = q.window();
    let n = window.len();
    assert_eq!(phi.len(), n, "field length must match the window");
    let mut r = vec![0.0; n];
    for i in 0..n {
        let up = if i + 1 < n { phi[i + 1] } else { 0.0 };
        let dn = if i > 0 { phi[i - 1] } else { 0.0 };
        let v = phi[i];
        r[i] = -up - dn + 2.0 * v + q.q(window.site(i)) * v + omega * v - v.powi(7);
    }
    r
}

/// Full-vector damped Newton iteration for `Hφ + ωφ = φ⁷` starting from
/// `guess`. The Jacobian `H + ω - 7φ⁶` is tridiagonal, so each step is a
/// direct solve. Fails with `NoConvergence` if the residual stalls.
pub fn newton_standing_wave(q: &Potential, omega: f64, guess: &[f64]) -> Result<Vec<f64>> {
    let window = q.window();
    let n = window.len();
    if guess.len() != n {
        return Err(Error::InvalidArgument(format!(
            "guess has {} entries for a window of {} sites",
            guess.len(),
            n
        )));
    }
    let mut phi = guess.to_vec();
    let norm_inf = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut res = standing_wave_residual(q, omega, &phi);
    let mut res_norm = norm_inf(&res);
    let sub = vec![c64(-1.0, 0.0); n - 1];
    let sup = vec![c64(-1.0, 0.0); n - 1];
    for iter in 0..80 {
        if res_norm < 1e-13 * (1.0 + norm_inf(&phi)) {
            return Ok(phi);
        }
        let diag: Vec<Complex64> = (0..n)
            .map(|i| c64(2.0 + q.q(window.site(i)) + omega - 7.0 * phi[i].powi(6), 0.0))
            .collect();
        let rhs: Vec<Complex64> = res.iter().map(|&r| c64(r, 0.0)).collect();
        let step = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = phi
                .iter()
                .zip(&step)
                .map(|(&p, s)| p - lambda * s.re)
                .collect();
            let trial_res = standing_wave_residual(q, omega, &trial);
            let trial_norm = norm_inf(&trial_res);
            if trial_norm < res_norm * (1.0 - 0.25 * lambda) || lambda < 1e-4 {
                phi = trial;
                res = trial_res;
                res_norm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
        if iter == 79 {
            break;
        }
    }
    if res_norm < 1e-13 * (1.0 + norm_inf(&phi)) {
        Ok(phi)
    } else {
        Err(Error::NoConvergence {
            context: "full-vector Newton for the standing wave",
            residual: res_norm,
            iterations: 80,
        })
    }
}

/// Apply `e^{-itH}` (optionally with selected modes removed) to a field using
/// a precomputed Dirichlet eigendecomposition; used as a flow oracle.
///
/// `vectors` uses the `decompose_sym_tridiagonal` layout: component `k` of
/// eigenvector `j` sits at `vectors[k * n + j]`.
pub fn eigen_flow_apply(
    eigenvalues: &[f64],
    vectors: &[f64],
    window: LatticeWindow,
    t: f64,
    u: &ComplexField,
    skip: &[usize],
) -> Result<ComplexField> {
    let n = window.len();
    if u.window() != window {
        return Err(Error::WindowMismatch {
            left: format!("{}", u.window()),
            right: format!("{window}"),
        });
    }
    let mut out = vec![c64(0.0, 0.0); n];
    for j in 0..n {
        if skip.contains(&j) {
            continue;
        }
        let mut coeff = c64(0.0, 0.0);
        for k in 0..n {
            coeff += u.get(window.site(k)) * vectors[k * n + j];
        }
        let phase = (c64(0.0, -t * eigenvalues[j])).exp() * coeff;
        for (k, o) in out.iter_mut().enumerate() {
            *o += phase * vectors[k * n + j];
        }
    }
    ComplexField::from_values(window, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j;
    use crate::tridiag::decompose_sym_tridiagonal;

    #[test]
    fn transfer_single_site_closed_form() {
        // q = c δ₀: T = 2i sinθ / (2i sinθ + c), R₋ = R₊ = -c / (2i sinθ + c).
        let w = LatticeWindow::symmetric(6).unwrap();
        for &c in &[-1.0, 0.35, 2.0] {
            let q = Potential::single_site(w, c).unwrap();
            for &theta in &[0.4, 1.3, -2.2, 2.9] {
                let td = transfer_scattering(&q, theta).unwrap();
                let denom = c64(c, 2.0 * theta.sin());
                let t_exact = c64(0.0, 2.0 * theta.sin()) / denom;
                let r_exact = -c64(c, 0.0) / denom;
                assert!((td.t - t_exact).norm() < 1e-13, "T at θ={theta}, c={c}");
                assert!((td.r_minus - r_exact).norm() < 1e-13);
                assert!((td.r_plus - r_exact).norm() < 1e-13);
                assert!((td.gamma - td.alpha).norm() < 1e-12 * td.alpha.norm());
            }
        }
    }

    #[test]
    fn transfer_unitarity_for_generic_potential() {
        let w = LatticeWindow::symmetric(14).unwrap();
        let q = Potential::from_fn(w, |n| {
            0.5 * (-0.4 * n.abs() as f64).exp() * ((0.9 * n as f64).cos() + 0.2)
        })
        .unwrap();
        for k in 0..50 {
            let theta = -3.1 + 6.2 * (k as f64 + 0.5) / 50.0;
            if theta.sin().abs() < 0.05 {
                continue;
            }
            let td = transfer_scattering(&q, theta).unwrap();
            let unit = td.t.norm_sqr() + td.r_minus.norm_sqr();
            assert!((unit - 1.0).abs() < 1e-12, "|T|²+|R₋|² at θ={theta}: {unit}");
            let unit2 = td.t.norm_sqr() + td.r_plus.norm_sqr();
            assert!((unit2 - 1.0).abs() < 1e-12);
            let cross = td.t * td.r_plus.conj() + td.r_minus * td.t.conj();
            assert!(cross.norm() < 1e-12);
        }
    }

    #[test]
    fn resolvent_solve_matches_free_closed_form() {
        // Free resolvent: (H₀ - z)^{-1}(n,m) = e^{-iθ|n-m|} / (2i sinθ),
        // with θ the strip preimage of z.
        let w = LatticeWindow::symmetric(80).unwrap();
        let q = Potential::zero(w);
        for &z in &[c64(-0.7, 0.0), c64(2.0, 1.1), c64(4.9, -0.3)] {
            let kernel = resolvent_by_solve(&q, z, w).unwrap();
            let theta = crate::jost::SpectralPoint::from_z(z).theta();
            for &(n, m) in &[(0i64, 0i64), (3, -2), (-10, 7), (15, 15)] {
                let exact = (c64(0.0, -((n - m).abs() as f64)) * theta).exp()
                    / (c64(0.0, 2.0) * theta.sin());
                let got = kernel.get(n, m);
                assert!(
                    (got - exact).norm() < 1e-10 * exact.norm().max(1e-3),
                    "z={z}, (n,m)=({n},{m}): {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn quadrature_kernel_matches_bessel() {
        // e^{-itH₀}(n, n+k) = e^{-2it} i^k J_k(2t).
        for &t in &[0.0, 0.7, 2.5, 9.0] {
            for &k in &[0i64, 1, 2, 5, 11] {
                let quad = free_kernel_by_quadrature(t, 0, k);
                let exact = (c64(0.0, -2.0 * t)).exp()
                    * Complex64::i().powi(k as i32)
                    * bessel_j(k.unsigned_abs() as usize, 2.0 * t);
                assert!(
                    (quad - exact).norm() < 1e-11,
                    "t={t}, k={k}: {quad} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn newton_finds_small_wave_near_bifurcation() {
        // Attractive single site: ground state E₀ = √5 - 2 of -Δ - δ₀ flips
        // sign as eigenvalue 2 - √5; the wave bifurcates for ω slightly
        // above E₀ with φ ≈ a φ₀ and a⁶ ≈ (ω - E₀) / ‖φ₀‖₈⁸.
        let w = LatticeWindow::symmetric(40).unwrap();
        let q = Potential::single_site(w, -1.0).unwrap();
        let n = w.len();
        let diag: Vec<f64> = w.sites().map(|k| 2.0 + q.q(k)).collect();
        let off = vec![-1.0; n - 1];
        let eig = decompose_sym_tridiagonal(&diag, &off);
        let e0 = -eig.eigenvalues[0];
        assert!((e0 - (5.0f64.sqrt() - 2.0)).abs() < 1e-10);
        let phi0: Vec<f64> = eig.eigenvector(0).collect();
        let sign = if phi0[n / 2] < 0.0 { -1.0 } else { 1.0 };
        let p8: f64 = phi0.iter().map(|v| v.powi(8)).sum();
        let omega = e0 * 1.1;
        let a = ((omega - e0) / p8).powf(1.0 / 6.0);
        let guess: Vec<f64> = phi0.iter().map(|&v| sign * a * v).collect();
        let phi = newton_standing_wave(&q, omega, &guess).unwrap();
        let res = standing_wave_residual(&q, omega, &phi);
        let rn = res.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        assert!(rn < 1e-13);
        // Stays near the bifurcation profile.
        let dev: f64 = phi
            .iter()
            .zip(&guess)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let amp = guess.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        assert!(dev < 0.15 * amp, "dev {dev} vs amplitude {amp}");
    }

    #[test]
    fn eigen_flow_is_unitary_and_matches_free_kernel() {
        let w = LatticeWindow::symmetric(120).unwrap();
        let n = w.len();
        let diag: Vec<f64> = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let eig = decompose_sym_tridiagonal(&diag, &off);
        let u = ComplexField::delta(w, 0).unwrap();
        let t = 3.0;
        let v = eigen_flow_apply(&eig.eigenvalues, &eig.vectors, w, t, &u, &[]).unwrap();
        assert!((v.norm_l2() - 1.0).abs() < 1e-11);
        for k in -6i64..=6 {
            let exact = (c64(0.0, -2.0 * t)).exp()
                * Complex64::i().powi(k.unsigned_abs() as i32)
                * bessel_j(k.unsigned_abs() as usize, 2.0 * t);
            assert!(
                (v.get(k) - exact).norm() < 1e-10,
                "site {k}: {} vs {exact}",
                v.get(k)
            );
        }
    }

    #[test]
    fn eigen_flow_generates_the_hamiltonian() {
        // (u - e^{-i dt H} u) / (i dt) ≈ H u. A transposed eigenvector layout
        // would fail this at O(1) since the eigenvector matrix of a pinned
        // potential is not symmetric.
        let w = LatticeWindow::symmetric(30).unwrap();
        let q = Potential::single_site(w, -1.0).unwrap();
        let n = w.len();
        let diag: Vec<f64> = w.sites().map(|k| 2.0 + q.q(k)).collect();
        let off = vec![-1.0; n - 1];
        let eig = decompose_sym_tridiagonal(&diag, &off);
        let u = ComplexField::from_fn(w, |k| {
            c64((-0.1 * (k * k) as f64).exp(), 0.3 * (-0.2 * k.abs() as f64).exp())
        });
        let dt = 1e-3;
        let v = eigen_flow_apply(&eig.eigenvalues, &eig.vectors, w, dt, &u, &[]).unwrap();
        let fd = u.sub(&v).unwrap().scale(c64(0.0, -1.0 / dt));
        let hu = crate::lattice::apply_hamiltonian(&q, &u).unwrap();
        let err = fd.sub(&hu).unwrap().norm_sup();
        assert!(err < 0.05, "generator mismatch {err}");
    }
}
