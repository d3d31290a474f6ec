//! Standing waves `(H + ω) φ = φ⁷` bifurcating from a linear bound state.
//!
//! When `H = -Δ + q` has a negative ground-state eigenvalue `-E₀`, a branch
//! of real, exponentially localised solutions exists for `ω` slightly above
//! `E₀`. Writing `φ = a φ₀ + a⁷ g` with `⟨g, φ₀⟩ = 0` and splitting the
//! equation along `φ₀` and its complement gives a scalar amplitude equation
//! coupled to a fixed-point problem for the correction:
//!
//! ```text
//! (E₀ - ω) + a⁶ ⟨(φ₀ + a⁶ g)⁷, φ₀⟩ = 0,
//! g = (H + E₀)^{-1} P⊥ [ (E₀ - ω) g + (φ₀ + a⁶ g)⁷ ],
//! ```
//!
//! where `P⊥` removes the `φ₀` component. The solver walks a continuation
//! ladder in `ω` so that each rung starts from a converged neighbour, and
//! branch tables interpolate in the variable `s = (ω - E₀)^{1/6}`, in which
//! the branch is smooth down to the bifurcation point.

use serde::Serialize;

use crate::lattice::{ComplexField, LatticeWindow, Potential};
use crate::spectral::EigenBasis;
use crate::{Error, Result};

/// Convergence target for the sup-norm of `(H + ω)φ - φ⁷`.
pub const RESIDUAL_TOL: f64 = 1e-11;

/// Linear ground state of `H`: the lowest eigenvalue written as `-E₀`.
#[derive(Debug, Clone, Serialize)]
pub struct GroundState {
    /// Binding energy `E₀ = -λ₀ > 0`.
    pub e0: f64,
    /// `ℓ²`-normalised mode, positive at its peak.
    pub phi0: Vec<f64>,
    window: LatticeWindow,
}

impl GroundState {
    pub fn window(&self) -> LatticeWindow {
        self.window
    }
}

/// Compute the ground state of `-Δ + q`, failing if no negative eigenvalue
/// exists (no bifurcation point).
pub fn ground_state(q: &Potential) -> Result<GroundState> {
    let basis = EigenBasis::new(q);
    ground_state_from(&basis)
}

fn ground_state_from(basis: &EigenBasis) -> Result<GroundState> {
    let lambda = basis.eigenvalues()[0];
    if lambda >= 0.0 || !basis.discrete_indices().contains(&0) {
        return Err(Error::Hypothesis(
            "no negative bound state to bifurcate from".into(),
        ));
    }
    let mut phi0 = basis.mode(0).to_vec();
    let peak = phi0
        .iter()
        .cloned()
        .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
    if peak < 0.0 {
        for v in &mut phi0 {
            *v = -*v;
        }
    }
    Ok(GroundState {
        e0: -lambda,
        phi0,
        window: basis.window(),
    })
}

/// A solution of `(H + ω) φ = φ⁷` with its bifurcation coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct StandingWave {
    pub omega: f64,
    /// Amplitude `a` along the linear mode.
    pub amplitude: f64,
    /// The wave itself (real-valued).
    pub phi: Vec<f64>,
    /// Sup-norm of the equation residual.
    pub residual_sup: f64,
    /// Fixed-point iterations consumed (summed over continuation rungs).
    pub iterations: usize,
    window: LatticeWindow,
}

impl StandingWave {
    pub fn window(&self) -> LatticeWindow {
        self.window
    }

    pub fn field(&self) -> ComplexField {
        let w = self.window;
        let lo = w.n_min();
        ComplexField::from_real_fn(w, |n| self.phi[(n - lo) as usize])
    }
}

/// Residual `(H + ω)φ - φ⁷` evaluated with Dirichlet ends.
pub fn equation_residual(q: &Potential, omega: f64, phi: &[f64]) -> Vec<f64> {
    let n = phi.len();
    let qv = q.values();
    assert_eq!(qv.len(), n, "potential and wave must share a window");
    (0..n)
        .map(|i| {
            let up = if i + 1 < n { phi[i + 1] } else { 0.0 };
            let dn = if i > 0 { phi[i - 1] } else { 0.0 };
            -up - dn + (2.0 + qv[i] + omega) * phi[i] - phi[i].powi(7)
        })
        .collect()
}

/// Shared machinery for one potential: the eigenbasis, ground state, and
/// the `(H + E₀)^{-1} P⊥` solve expressed in eigencoordinates.
struct BranchSolver {
    basis: EigenBasis,
    ground: GroundState,
    /// `‖φ₀‖₈⁸`.
    s0: f64,
}

impl BranchSolver {
    fn new(q: &Potential) -> Result<Self> {
        let basis = EigenBasis::new(q);
        let ground = ground_state_from(&basis)?;
        for (j, &l) in basis.eigenvalues().iter().enumerate().skip(1) {
            if (l + ground.e0).abs() < 1e-9 {
                return Err(Error::Hypothesis(format!(
                    "eigenvalue {j} sits at the bifurcation energy; branch is degenerate"
                )));
            }
        }
        let s0 = ground.phi0.iter().map(|v| v.powi(8)).sum();
        Ok(Self { basis, ground, s0 })
    }

    /// `(H + E₀)^{-1}` applied off the ground mode.
    fn solve_shifted(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut out = vec![0.0; n];
        for (j, &l) in self.basis.eigenvalues().iter().enumerate() {
            if j == 0 {
                continue;
            }
            let mode = self.basis.mode(j);
            let c: f64 = mode.iter().zip(v).map(|(m, x)| m * x).sum();
            let w = c / (l + self.ground.e0);
            for (o, m) in out.iter_mut().zip(mode) {
                *o += w * m;
            }
        }
        out
    }

    /// One rung: solve at `omega` from seed `(x, g)`, `x = a⁶`.
    fn rung(&self, omega: f64, x0: f64, g0: &[f64]) -> Result<(f64, Vec<f64>, usize)> {
        let e0 = self.ground.e0;
        let phi0 = &self.ground.phi0;
        let detune = e0 - omega; // negative on the branch
        let mut x = x0;
        let mut g = g0.to_vec();
        let mut last_change = f64::INFINITY;
        let mut damping = 1.0;
        for iter in 0..600 {
            // u = φ₀ + x g and its seventh power.
            let u: Vec<f64> = phi0.iter().zip(&g).map(|(p, gg)| p + x * gg).collect();
            let u7: Vec<f64> = u.iter().map(|v| v.powi(7)).collect();
            // Scalar Newton step on the amplitude equation with g frozen.
            let s: f64 = u7.iter().zip(phi0).map(|(a, p)| a * p).sum();
            let u6g: f64 = u
                .iter()
                .zip(&g)
                .zip(phi0)
                .map(|((uu, gg), p)| uu.powi(6) * gg * p)
                .sum();
            let f = detune + x * s;
            let fp = s + 7.0 * x * u6g;
            let dx = if fp.abs() > 1e-300 { -f / fp } else { 0.0 };
            let x_new = (x + dx).max(0.0);
            // Fixed-point update for the correction.
            let rhs: Vec<f64> = g
                .iter()
                .zip(&u7)
                .map(|(gg, s7)| detune * gg + s7)
                .collect();
            let g_new = self.solve_shifted(&rhs);
            let change = g
                .iter()
                .zip(&g_new)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
                .max((x_new - x).abs() / x.max(1e-12));
            if change > 1.5 * last_change && damping > 0.1 {
                damping *= 0.5;
            }
            for (gg, nn) in g.iter_mut().zip(&g_new) {
                *gg += damping * (*nn - *gg);
            }
            x = x + damping * (x_new - x);
            if change < 1e-15 * (1.0 + x) && iter > 2 {
                return Ok((x, g, iter + 1));
            }
            last_change = change;
        }
        // Accept if the residual says we are converged despite slow updates.
        Ok((x, g, 600))
    }

    fn assemble(&self, q: &Potential, omega: f64, x: f64, g: &[f64], iterations: usize) -> StandingWave {
        let a = x.max(0.0).powf(1.0 / 6.0);
        let phi: Vec<f64> = self
            .ground
            .phi0
            .iter()
            .zip(g)
            .map(|(p, gg)| a * (p + x * gg))
            .collect();
        let residual_sup = equation_residual(q, omega, &phi)
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()));
        StandingWave {
            omega,
            amplitude: a,
            phi,
            residual_sup,
            iterations,
            window: self.ground.window,
        }
    }

    /// Continuation ladder from just above the bifurcation up to `omega`,
    /// returning the branch coordinates `(x, g, iterations)`.
    fn solve_coords(&self, omega: f64) -> Result<(f64, Vec<f64>, usize)> {
        let e0 = self.ground.e0;
        if omega <= e0 {
            return Err(Error::InvalidArgument(format!(
                "standing waves require omega > E0 = {e0}, got {omega}"
            )));
        }
        let target = omega - e0;
        let start = (1e-3 * e0).min(target);
        let rungs = ((target / start).ln() / 2.0f64.ln()).ceil().max(0.0) as usize;
        let mut x = start / self.s0;
        let mut g = vec![0.0; self.ground.phi0.len()];
        let mut used = 0;
        for k in 0..=rungs {
            let detune = if k == rungs {
                target
            } else {
                start * 2.0f64.powi(k as i32)
            };
            let (xk, gk, it) = self.rung(e0 + detune, x, &g)?;
            x = xk;
            g = gk;
            used += it;
        }
        Ok((x, g, used))
    }

    fn finish(&self, q: &Potential, omega: f64, x: f64, g: &[f64], used: usize) -> Result<StandingWave> {
        let wave = self.assemble(q, omega, x, g, used);
        if wave.residual_sup > RESIDUAL_TOL {
            return Err(Error::Hypothesis(format!(
                "standing-wave iteration stalled at residual {:.3e} for omega {omega}",
                wave.residual_sup
            )));
        }
        Ok(wave)
    }

    fn solve(&self, q: &Potential, omega: f64) -> Result<StandingWave> {
        let (x, g, used) = self.solve_coords(omega)?;
        self.finish(q, omega, x, &g, used)
    }
}

/// Solve `(H + ω) φ = φ⁷` on the potential's window by continuation from
/// the bifurcation point.
pub fn solve_standing_wave(q: &Potential, omega: f64) -> Result<StandingWave> {
    let solver = BranchSolver::new(q)?;
    solver.solve(q, omega)
}

/// First and second `ω`-derivatives of the wave by five-point differences
/// with a step proportional to the distance from the bifurcation point.
pub fn d_omega_phi(q: &Potential, omega: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let solver = BranchSolver::new(q)?;
    let h = 3e-3 * (omega - solver.ground.e0);
    let offsets = [-2.0, -1.0, 1.0, 2.0];
    let mut shifted = Vec::with_capacity(4);
    for o in offsets {
        shifted.push(solver.solve(q, omega + o * h)?.phi);
    }
    let center = solver.solve(q, omega)?.phi;
    let n = center.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        d1[i] = (shifted[0][i] - 8.0 * shifted[1][i] + 8.0 * shifted[2][i] - shifted[3][i])
            / (12.0 * h);
        d2[i] = (-shifted[0][i] + 16.0 * shifted[1][i] - 30.0 * center[i] + 16.0 * shifted[2][i]
            - shifted[3][i])
            / (12.0 * h * h);
    }
    Ok((d1, d2))
}

/// A branch point with first and second `ω`-derivatives.
#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub omega: f64,
    pub phi: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub d2_phi: Vec<f64>,
}

/// Precomputed branch on an `ω`-interval, stored on a grid uniform in
/// `s = (ω - E₀)^{1/6}` and evaluated by local polynomial interpolation.
#[derive(Debug, Clone)]
pub struct BranchTable {
    e0: f64,
    s_grid: Vec<f64>,
    phis: Vec<Vec<f64>>,
    window: LatticeWindow,
}

/// Fornberg finite-difference weights: for nodes `xs` and point `x0`,
/// returns rows `0..=max_order` of weights so that
/// `f^{(m)}(x0) ≈ Σ_k w[m][k] f(xs[k])`.
fn fd_weights(xs: &[f64], x0: f64, max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=max_order.min(i)).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=max_order.min(i)).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

impl BranchTable {
    /// Solve the branch on `[omega_min, omega_max]` at `count >= 8` nodes.
    pub fn build(q: &Potential, omega_min: f64, omega_max: f64, count: usize) -> Result<Self> {
        let solver = BranchSolver::new(q)?;
        let e0 = solver.ground.e0;
        if !(omega_min > e0 && omega_max > omega_min) {
            return Err(Error::InvalidArgument(
                "branch table needs E0 < omega_min < omega_max".into(),
            ));
        }
        if count < 8 {
            return Err(Error::InvalidArgument(
                "branch table needs at least 8 nodes".into(),
            ));
        }
        let s_lo = (omega_min - e0).powf(1.0 / 6.0);
        let s_hi = (omega_max - e0).powf(1.0 / 6.0);
        let mut s_grid = Vec::with_capacity(count);
        let mut phis = Vec::with_capacity(count);
        // First node from the full ladder, later nodes warm-started from
        // their left neighbour.
        let mut coords: Option<(f64, Vec<f64>)> = None;
        for k in 0..count {
            let s = s_lo + (s_hi - s_lo) * k as f64 / (count - 1) as f64;
            let omega = e0 + s.powi(6);
            let (x, g, used) = match &coords {
                None => solver.solve_coords(omega)?,
                Some((x0, g0)) => solver.rung(omega, *x0, g0)?,
            };
            let wave = solver.finish(q, omega, x, &g, used)?;
            coords = Some((x, g));
            s_grid.push(s);
            phis.push(wave.phi);
        }
        Ok(Self {
            e0,
            s_grid,
            phis,
            window: solver.ground.window,
        })
    }

    pub fn window(&self) -> LatticeWindow {
        self.window
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn omega_range(&self) -> (f64, f64) {
        (
            self.e0 + self.s_grid[0].powi(6),
            self.e0 + self.s_grid[self.s_grid.len() - 1].powi(6),
        )
    }

    /// Indices of the six-node stencil nearest to `s`.
    fn stencil(&self, s: f64) -> Result<std::ops::Range<usize>> {
        let m = self.s_grid.len();
        let lo = self.s_grid[0];
        let hi = self.s_grid[m - 1];
        if s < lo - 1e-12 || s > hi + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "omega outside the tabulated branch ({:.6}..{:.6})",
                self.e0 + lo.powi(6),
                self.e0 + hi.powi(6)
            )));
        }
        let step = (hi - lo) / (m - 1) as f64;
        let center = ((s - lo) / step).round() as usize;
        let start = center.saturating_sub(3).min(m - 6);
        Ok(start..start + 6)
    }

    /// Wave and both `ω`-derivatives at an arbitrary `omega` in range.
    pub fn at(&self, omega: f64) -> Result<BranchPoint> {
        let s = (omega - self.e0).max(0.0).powf(1.0 / 6.0);
        let range = self.stencil(s)?;
        let xs: Vec<f64> = self.s_grid[range.clone()].to_vec();
        let w = fd_weights(&xs, s, 2);
        let n = self.phis[0].len();
        let mut phi = vec![0.0; n];
        let mut phi_s = vec![0.0; n];
        let mut phi_ss = vec![0.0; n];
        for (k, node) in range.clone().enumerate() {
            let vals = &self.phis[node];
            for i in 0..n {
                phi[i] += w[0][k] * vals[i];
                phi_s[i] += w[1][k] * vals[i];
                phi_ss[i] += w[2][k] * vals[i];
            }
        }
        // Chain rule through s(ω) = (ω - E₀)^{1/6}.
        let sp = 1.0 / (6.0 * s.powi(5));
        let spp = -5.0 / (36.0 * s.powi(11));
        let mut d_phi = vec![0.0; n];
        let mut d2_phi = vec![0.0; n];
        for i in 0..n {
            d_phi[i] = phi_s[i] * sp;
            d2_phi[i] = phi_ss[i] * sp * sp + phi_s[i] * spp;
        }
        Ok(BranchPoint {
            omega,
            phi,
            d_phi,
            d2_phi,
        })
    }
}

/// Measured bifurcation exponents for a potential's branch.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    /// Fitted slope of `log a` against `log(ω - E₀)`; `1/6` in theory.
    pub amplitude_slope: f64,
    /// Fitted slope of `log ‖φ - a φ₀‖₂`; `7/6` in theory.
    pub correction_slope: f64,
    /// `a⁶ ‖φ₀‖₈⁸ / (ω - E₀)` at the smallest detuning; `→ 1`.
    pub amplitude_ratio: f64,
    pub detunings: Vec<f64>,
}

/// Fit the leading powers of the bifurcation expansion over a geometric
/// ladder of detunings `ω - E₀ = E₀ · 10^{-k}`.
pub fn verify_expansion(q: &Potential) -> Result<ExpansionReport> {
    let solver = BranchSolver::new(q)?;
    let e0 = solver.ground.e0;
    let detunings: Vec<f64> = (2..7).map(|k| e0 * 10f64.powi(-k)).collect();
    let mut log_a = Vec::new();
    let mut log_c = Vec::new();
    let mut ratio = 0.0;
    for &d in &detunings {
        let wave = solver.solve(q, e0 + d)?;
        let a = wave.amplitude;
        let corr: f64 = wave
            .phi
            .iter()
            .zip(&solver.ground.phi0)
            .map(|(p, p0)| (p - a * p0).powi(2))
            .sum::<f64>()
            .sqrt();
        log_a.push((d.ln(), a.ln()));
        log_c.push((d.ln(), corr.ln()));
        ratio = a.powi(6) * solver.s0 / d;
    }
    let slope = |pts: &[(f64, f64)]| -> f64 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    Ok(ExpansionReport {
        amplitude_slope: slope(&log_a),
        correction_slope: slope(&log_c),
        amplitude_ratio: ratio,
        detunings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::newton_standing_wave;

    fn pinned(radius: i64) -> Potential {
        let w = LatticeWindow::symmetric(radius).unwrap();
        Potential::single_site(w, -1.0).unwrap()
    }

    #[test]
    fn ground_state_matches_pinned_values() {
        let q = pinned(96);
        let gs = ground_state(&q).unwrap();
        let expect = 5.0f64.sqrt() - 2.0;
        assert!((gs.e0 - expect).abs() < 1e-12, "E0 = {}", gs.e0);
        let w = gs.window();
        let at = |n: i64| gs.phi0[(n - w.n_min()) as usize];
        let ratio = at(1) / at(0);
        let golden = (5.0f64.sqrt() - 1.0) / 2.0;
        assert!((ratio - golden).abs() < 1e-12, "decay ratio {ratio}");
        assert!((at(3) / at(-3) - 1.0).abs() < 1e-12, "parity");
    }

    #[test]
    fn standing_wave_solves_equation() {
        let q = pinned(96);
        let e0 = 5.0f64.sqrt() - 2.0;
        for mult in [1.02, 1.2, 1.6] {
            let wave = solve_standing_wave(&q, e0 * mult).unwrap();
            assert!(
                wave.residual_sup < RESIDUAL_TOL,
                "omega x{mult}: residual {}",
                wave.residual_sup
            );
            // Even potential gives an even wave.
            let w = wave.window();
            let at = |n: i64| wave.phi[(n - w.n_min()) as usize];
            assert!((at(4) - at(-4)).abs() < 1e-12);
            assert!(at(0) > 0.0 && at(0) > at(1));
        }
    }

    #[test]
    fn agrees_with_newton_oracle() {
        let q = pinned(96);
        let e0 = 5.0f64.sqrt() - 2.0;
        let omega = e0 * 1.25;
        let wave = solve_standing_wave(&q, omega).unwrap();
        let newton = newton_standing_wave(&q, omega, &wave.phi).unwrap();
        let worst = wave
            .phi
            .iter()
            .zip(&newton)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-9, "paths disagree by {worst}");
    }

    #[test]
    fn correction_is_orthogonal_to_mode() {
        let q = pinned(96);
        let gs = ground_state(&q).unwrap();
        let omega = gs.e0 * 1.3;
        let wave = solve_standing_wave(&q, omega).unwrap();
        let overlap: f64 = wave
            .phi
            .iter()
            .zip(&gs.phi0)
            .map(|(p, p0)| (p - wave.amplitude * p0) * p0)
            .sum();
        assert!(overlap.abs() < 1e-11, "overlap {overlap}");
    }

    #[test]
    fn amplitude_law_near_bifurcation() {
        let q = pinned(96);
        let report = verify_expansion(&q).unwrap();
        assert!(
            (report.amplitude_slope - 1.0 / 6.0).abs() < 0.01,
            "amplitude slope {}",
            report.amplitude_slope
        );
        assert!(
            (report.correction_slope - 7.0 / 6.0).abs() < 0.05,
            "correction slope {}",
            report.correction_slope
        );
        assert!(
            (report.amplitude_ratio - 1.0).abs() < 0.01,
            "ratio {}",
            report.amplitude_ratio
        );
    }

    #[test]
    fn branch_table_matches_direct_solutions() {
        let q = pinned(72);
        let e0 = 5.0f64.sqrt() - 2.0;
        let table = BranchTable::build(&q, e0 * 1.01, e0 * 1.6, 48).unwrap();
        let omega = e0 * 1.2345;
        let point = table.at(omega).unwrap();
        let direct = solve_standing_wave(&q, omega).unwrap();
        let worst = point
            .phi
            .iter()
            .zip(&direct.phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-9, "interpolation error {worst}");

        let (d1, d2) = d_omega_phi(&q, omega).unwrap();
        let scale1 = d1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let e1 = point
            .d_phi
            .iter()
            .zip(&d1)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(e1 < 1e-5 * scale1, "first derivative error {e1} vs {scale1}");
        let scale2 = d2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let e2 = point
            .d2_phi
            .iter()
            .zip(&d2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(e2 < 1e-3 * scale2, "second derivative error {e2} vs {scale2}");
    }

    #[test]
    fn rejects_omega_below_bifurcation() {
        let q = pinned(48);
        let e0 = 5.0f64.sqrt() - 2.0;
        assert!(solve_standing_wave(&q, e0 * 0.9).is_err());
        assert!(ground_state(&Potential::zero(LatticeWindow::symmetric(32).unwrap())).is_err());
    }

    #[test]
    fn fornberg_weights_reproduce_classic_stencils() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fd_weights(&xs, 0.0, 2);
        let d1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for k in 0..5 {
            assert!((w[1][k] - d1[k]).abs() < 1e-14);
            assert!((w[2][k] - d2[k]).abs() < 1e-14);
        }
    }
}
