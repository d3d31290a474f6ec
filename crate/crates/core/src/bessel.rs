//! Bessel functions of the first kind, evaluated a whole row at a time.
//!
//! The free lattice propagator is a Bessel convolution, so everything here is
//! geared to producing `J_0(x), …, J_K(x)` for one fixed argument with uniform
//! relative accuracy: backward (Miller) recurrence seeded well above the
//! turning point `k ≈ x`, normalised with `J_0 + 2 J_2 + 2 J_4 + … = 1`.

/// `J_k(x)` for `k = 0, …, k_max` at a single `x ≥ 0`.
pub fn bessel_j_row(x: f64, k_max: usize) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "argument must be finite and >= 0");
    if x == 0.0 {
        let mut row = vec![0.0; k_max + 1];
        row[0] = 1.0;
        return row;
    }
    if x < 0.1 {
        // Ascending series; free of cancellation at tiny argument.
        return (0..=k_max).map(|k| bessel_j_series(x, k)).collect();
    }

    // Seed the backward recurrence above both k_max and the turning point.
    let big = (k_max as f64).max(x);
    let start = (big + 15.0 * big.cbrt() + 25.0).ceil() as usize;
    let mut work = vec![0.0; start + 2];
    work[start + 1] = 0.0;
    work[start] = 1e-250;
    for k in (1..=start).rev() {
        let val = (2.0 * k as f64 / x) * work[k] - work[k + 1];
        work[k - 1] = val;
        if val.abs() > 1e250 {
            // Rescale the whole accumulated tail to dodge overflow. Entries
            // that underflow to zero were already negligible by >= 1e250.
            for w in work.iter_mut() {
                *w *= 1e-250;
            }
        }
    }

    // Normalise: J_0 + 2 Σ_{m>=1} J_{2m} = 1.
    let mut norm = work[0];
    let mut k = 2;
    while k <= start {
        norm += 2.0 * work[k];
        k += 2;
    }
    let inv = 1.0 / norm;
    (0..=k_max)
        .map(|k| if k < work.len() { work[k] * inv } else { 0.0 })
        .collect()
}

/// Ascending series `Σ_m (-1)^m (x/2)^{k+2m} / (m! (k+m)!)`, for small `x`.
fn bessel_j_series(x: f64, k: usize) -> f64 {
    let half = 0.5 * x;
    // Leading coefficient (x/2)^k / k!, built incrementally so large k
    // underflows gracefully to zero.
    let mut lead = 1.0;
    for i in 1..=k {
        lead *= half / i as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let mut term = lead;
    let mut sum = term;
    let x2 = half * half;
    for m in 1..=12 {
        term *= -x2 / (m as f64 * (k + m) as f64);
        sum += term;
        if term.abs() < 1e-20 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Single value `J_k(x)`; prefer [`bessel_j_row`] when several orders are
/// needed at one argument.
pub fn bessel_j(k: usize, x: f64) -> f64 {
    bessel_j_row(x, k)[k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    /// Spectrally exact oracle: `J_k(x) = (2π)^{-1} ∫_{-π}^{π} e^{i(kτ - x sinτ)} dτ`
    /// by the periodic trapezoid rule with far more points than the bandwidth.
    fn bessel_quadrature(k: usize, x: f64) -> f64 {
        let m = 8192;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let tau = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            acc += (Complex64::i() * (k as f64 * tau - x * tau.sin())).exp();
        }
        (acc / m as f64).re
    }

    #[test]
    fn matches_quadrature_across_regimes() {
        for &x in &[0.05, 0.5, 3.0, 12.0, 41.5, 160.0] {
            let k_max = (x as usize + 40).min(220);
            let row = bessel_j_row(x, k_max);
            for k in (0..=k_max).step_by(7) {
                let oracle = bessel_quadrature(k, x);
                assert!(
                    (row[k] - oracle).abs() < 1e-13,
                    "J_{k}({x}): {} vs {oracle}",
                    row[k]
                );
            }
        }
    }

    #[test]
    fn known_values() {
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(0, 0.0) - 1.0).abs() == 0.0);
    }

    #[test]
    fn unitarity_row_sum() {
        // Σ_k J_k(x)² over ℤ is 1; fold negative orders via J_{-k} = (-1)^k J_k.
        for &x in &[0.3, 7.0, 90.0] {
            let k_max = x as usize + 80;
            let row = bessel_j_row(x, k_max);
            let total = row[0] * row[0]
                + 2.0 * row[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-12, "x = {x}: {total}");
        }
    }

    #[test]
    fn three_term_recurrence_holds() {
        let x = 23.7;
        let row = bessel_j_row(x, 60);
        for k in 1..59 {
            let lhs = row[k - 1] + row[k + 1];
            let rhs = 2.0 * k as f64 / x * row[k];
            assert!(
                (lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()),
                "order {k}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn tiny_argument_series_row() {
        let row = bessel_j_row(0.02, 30);
        // J_k(x) ~ (x/2)^k / k!; high orders underflow to zero.
        assert!((row[0] - (1.0 - 1e-4)).abs() < 1e-8);
        assert!((row[1] - 0.01).abs() < 1e-6);
        assert!(row[25].abs() < 1e-50);
    }
}
