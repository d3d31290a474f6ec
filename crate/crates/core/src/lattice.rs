//! Lattice windows, complex fields, potentials and the basic operator actions.
//!
//! All computations live on a finite window `[n_min, n_max] ⊂ ℤ` with
//! Dirichlet convention: sites outside the window read as zero. Quantities
//! attached to the whole lattice (tail weights, Jost functions) extend beyond
//! the window analytically where that extension is exact.

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

/// `⟨n⟩ = (1 + n²)^{1/2}`.
pub fn bracket(n: i64) -> f64 {
    let x = n as f64;
    (1.0 + x * x).sqrt()
}

/// Closed integer interval `[n_min, n_max]` used as the computational window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatticeWindow {
    n_min: i64,
    n_max: i64,
}

impl LatticeWindow {
    /// A window must contain the origin strictly in its interior and hold at
    /// least three sites, so that `-Δ` has a nontrivial interior.
    pub fn new(n_min: i64, n_max: i64) -> Result<Self> {
        if n_min < 0 && n_max > 0 {
            Ok(Self { n_min, n_max })
        } else {
            Err(Error::BadWindow { n_min, n_max })
        }
    }

    /// Symmetric window `[-radius, radius]`.
    pub fn symmetric(radius: i64) -> Result<Self> {
        Self::new(-radius, radius)
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.n_min && n <= self.n_max
    }

    /// Index of site `n` in the backing storage.
    pub fn index_of(&self, n: i64) -> Option<usize> {
        self.contains(n).then(|| (n - self.n_min) as usize)
    }

    /// Site at storage index `i` (must be in range).
    pub fn site(&self, i: usize) -> i64 {
        self.n_min + i as i64
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.n_min..=self.n_max
    }

    /// Smallest window containing both operands.
    pub fn hull(&self, other: &LatticeWindow) -> LatticeWindow {
        LatticeWindow {
            n_min: self.n_min.min(other.n_min),
            n_max: self.n_max.max(other.n_max),
        }
    }
}

impl std::fmt::Display for LatticeWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.n_min, self.n_max)
    }
}

/// Complex-valued field over a window; sites outside read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    window: LatticeWindow,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(window: LatticeWindow) -> Self {
        Self {
            window,
            values: vec![Complex64::new(0.0, 0.0); window.len()],
        }
    }

    pub fn from_values(window: LatticeWindow, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::InvalidArgument(format!(
                "field length {} does not match window {window}",
                values.len()
            )));
        }
        Ok(Self { window, values })
    }

    pub fn from_fn(window: LatticeWindow, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let values = window.sites().map(&mut f).collect();
        Self { window, values }
    }

    pub fn from_real_fn(window: LatticeWindow, mut f: impl FnMut(i64) -> f64) -> Self {
        Self::from_fn(window, |n| Complex64::new(f(n), 0.0))
    }

    /// Kronecker delta at site `n`.
    pub fn delta(window: LatticeWindow, n: i64) -> Result<Self> {
        let mut u = Self::zeros(window);
        u.set(n, Complex64::new(1.0, 0.0))?;
        Ok(u)
    }

    pub fn window(&self) -> LatticeWindow {
        self.window
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Value at site `n`; zero outside the window.
    pub fn get(&self, n: i64) -> Complex64 {
        match self.window.index_of(n) {
            Some(i) => self.values[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, n: i64, v: Complex64) -> Result<()> {
        match self.window.index_of(n) {
            Some(i) => {
                self.values[i] = v;
                Ok(())
            }
            None => Err(Error::OutOfWindow {
                n,
                window: self.window.to_string(),
            }),
        }
    }

    /// Restrict or zero-extend onto another window.
    pub fn transplant(&self, window: LatticeWindow) -> ComplexField {
        ComplexField::from_fn(window, |n| self.get(n))
    }

    /// `⟨u, v⟩ = Σ u(n) conj(v(n))`, over the hull of both windows.
    pub fn inner(&self, other: &ComplexField) -> Complex64 {
        let hull = self.window.hull(&other.window);
        hull.sites()
            .map(|n| self.get(n) * other.get(n).conj())
            .sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> ComplexField {
        ComplexField {
            window: self.window,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `self + c * other`; windows must match.
    pub fn add_scaled(&self, other: &ComplexField, c: Complex64) -> Result<ComplexField> {
        check_windows(self.window, other.window)?;
        Ok(ComplexField {
            window: self.window,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

fn check_windows(left: LatticeWindow, right: LatticeWindow) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::WindowMismatch {
            left: left.to_string(),
            right: right.to_string(),
        })
    }
}

/// Real potential `q` on a window, with precomputed tail weights
/// `η(n) = Σ_{m ≥ n} |q(m)|` and `γ(n) = Σ_{m ≥ n} (m - n) |q(m)|`.
#[derive(Debug, Clone)]
pub struct Potential {
    window: LatticeWindow,
    q: Vec<f64>,
    /// `eta[i] = η(n_min + i)`; suffix sums over the window.
    eta: Vec<f64>,
    /// `gamma[i] = γ(n_min + i)`.
    gamma: Vec<f64>,
}

impl Potential {
    pub fn new(window: LatticeWindow, q: Vec<f64>) -> Result<Self> {
        if q.len() != window.len() {
            return Err(Error::InvalidArgument(format!(
                "potential length {} does not match window {window}",
                q.len()
            )));
        }
        if !q.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "potential contains non-finite samples".into(),
            ));
        }
        let n = q.len();
        // Right-to-left accumulation; γ(n) = γ(n+1) + η(n+1).
        let mut eta = vec![0.0; n];
        let mut gamma = vec![0.0; n];
        let mut eta_next = 0.0;
        let mut gamma_next = 0.0;
        for i in (0..n).rev() {
            let e = eta_next + q[i].abs();
            let g = gamma_next + eta_next;
            eta[i] = e;
            gamma[i] = g;
            eta_next = e;
            gamma_next = g;
        }
        Ok(Self {
            window,
            q,
            eta,
            gamma,
        })
    }

    pub fn from_fn(window: LatticeWindow, mut f: impl FnMut(i64) -> f64) -> Result<Self> {
        let q = window.sites().map(&mut f).collect();
        Self::new(window, q)
    }

    pub fn zero(window: LatticeWindow) -> Self {
        Self::new(window, vec![0.0; window.len()]).expect("zero potential is valid")
    }

    /// `q = c · δ_0`.
    pub fn single_site(window: LatticeWindow, c: f64) -> Result<Self> {
        Self::from_fn(window, |n| if n == 0 { c } else { 0.0 })
    }

    pub fn two_site(window: LatticeWindow, site1: (i64, f64), site2: (i64, f64)) -> Result<Self> {
        if !window.contains(site1.0) || !window.contains(site2.0) {
            return Err(Error::OutOfWindow {
                n: if window.contains(site1.0) { site2.0 } else { site1.0 },
                window: window.to_string(),
            });
        }
        Self::from_fn(window, |n| {
            let mut v = 0.0;
            if n == site1.0 {
                v += site1.1;
            }
            if n == site2.0 {
                v += site2.1;
            }
            v
        })
    }

    /// `q(n) = c e^{-a|n|}` truncated to the window.
    pub fn exponential(window: LatticeWindow, c: f64, a: f64) -> Result<Self> {
        if a <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "exponential decay rate must be positive, got {a}"
            )));
        }
        Self::from_fn(window, |n| c * (-a * n.abs() as f64).exp())
    }

    /// Parse a plain-text table: one `n value` pair per line, `#` comments and
    /// blank lines ignored. Sites absent from the file are zero.
    pub fn from_text(window: LatticeWindow, text: &str) -> Result<Self> {
        let mut q = vec![0.0; window.len()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let bad = |what: &str| {
                Error::InvalidArgument(format!("potential file line {}: {what}", lineno + 1))
            };
            let n: i64 = parts
                .next()
                .ok_or_else(|| bad("missing site"))?
                .parse()
                .map_err(|_| bad("unparsable site"))?;
            let v: f64 = parts
                .next()
                .ok_or_else(|| bad("missing value"))?
                .parse()
                .map_err(|_| bad("unparsable value"))?;
            if parts.next().is_some() {
                return Err(bad("trailing fields"));
            }
            let i = window.index_of(n).ok_or(Error::OutOfWindow {
                n,
                window: window.to_string(),
            })?;
            q[i] = v;
        }
        Self::new(window, q)
    }

    pub fn window(&self) -> LatticeWindow {
        self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    /// Value at site `n`; zero outside the window.
    pub fn q(&self, n: i64) -> f64 {
        match self.window.index_of(n) {
            Some(i) => self.q[i],
            None => 0.0,
        }
    }

    /// Tail weight `η(n) = Σ_{m ≥ n} |q(m)|`, defined for every `n ∈ ℤ`.
    pub fn eta(&self, n: i64) -> f64 {
        if n > self.window.n_max() {
            0.0
        } else if n < self.window.n_min() {
            self.eta[0]
        } else {
            self.eta[(n - self.window.n_min()) as usize]
        }
    }

    /// Tail weight `γ(n) = Σ_{m ≥ n} (m - n) |q(m)|`, defined for every `n ∈ ℤ`.
    pub fn gamma(&self, n: i64) -> f64 {
        if n > self.window.n_max() {
            0.0
        } else if n < self.window.n_min() {
            // γ(n) = γ(n_min) + (n_min - n) η(n_min) below the window.
            self.gamma[0] + (self.window.n_min() - n) as f64 * self.eta[0]
        } else {
            self.gamma[(n - self.window.n_min()) as usize]
        }
    }

    /// `Σ ⟨n⟩^σ |q(n)|`.
    pub fn weighted_l1(&self, sigma: f64) -> f64 {
        self.window
            .sites()
            .map(|n| bracket(n).powf(sigma) * self.q(n).abs())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&v| v == 0.0)
    }

    /// Extremes of the support `{ n : q(n) ≠ 0 }`, or `None` for `q ≡ 0`.
    pub fn support(&self) -> Option<(i64, i64)> {
        let lo = self.window.sites().find(|&n| self.q(n) != 0.0)?;
        let hi = self.window.sites().rev().find(|&n| self.q(n) != 0.0)?;
        Some((lo, hi))
    }

    /// Reflected potential `q̃(n) = q(-n)` on the mirrored window.
    pub fn reflected(&self) -> Result<Potential> {
        let window = LatticeWindow::new(-self.window.n_max(), -self.window.n_min())?;
        Potential::from_fn(window, |n| self.q(-n))
    }

    /// Same samples on a (typically larger) window.
    pub fn transplant(&self, window: LatticeWindow) -> Result<Potential> {
        if let Some((lo, hi)) = self.support() {
            if !window.contains(lo) || !window.contains(hi) {
                return Err(Error::InvalidArgument(format!(
                    "target window {window} does not cover support [{lo}, {hi}]"
                )));
            }
        }
        Potential::from_fn(window, |n| self.q(n))
    }
}

/// `(-Δu)(n) = -u(n+1) - u(n-1) + 2u(n)` with Dirichlet convention at the
/// window boundary.
pub fn apply_laplacian(u: &ComplexField) -> ComplexField {
    let w = u.window();
    ComplexField::from_fn(w, |n| {
        2.0 * u.get(n) - u.get(n + 1) - u.get(n - 1)
    })
}

/// `H u = -Δ u + q u`; the windows of `q` and `u` must agree exactly.
pub fn apply_hamiltonian(q: &Potential, u: &ComplexField) -> Result<ComplexField> {
    check_windows(q.window(), u.window())?;
    let lap = apply_laplacian(u);
    Ok(ComplexField::from_fn(u.window(), |n| {
        lap.get(n) + q.q(n) * u.get(n)
    }))
}

/// Weighted norm `‖u‖_{ℓ^{p,σ}}`.
///
/// For finite `p ≥ 1` this is `(Σ ⟨n⟩^{pσ} |u(n)|^p)^{1/p}`; for `p = ∞` it is
/// `sup_n ⟨n⟩^σ |u(n)|`.
pub fn weighted_norm(u: &ComplexField, p: f64, sigma: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(u
            .window()
            .sites()
            .map(|n| bracket(n).powf(sigma) * u.get(n).norm())
            .fold(0.0, f64::max));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "weighted norm exponent must satisfy p >= 1 (or be infinite), got {p}"
        )));
    }
    let sum: f64 = u
        .window()
        .sites()
        .map(|n| bracket(n).powf(p * sigma) * u.get(n).norm().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// Dense square kernel `K(n, m)` over `window × window`, row-major.
#[derive(Debug, Clone)]
pub struct Kernel {
    window: LatticeWindow,
    data: Vec<Complex64>,
}

impl Kernel {
    pub fn zeros(window: LatticeWindow) -> Self {
        Self {
            window,
            data: vec![Complex64::new(0.0, 0.0); window.len() * window.len()],
        }
    }

    pub fn identity(window: LatticeWindow) -> Self {
        let mut k = Self::zeros(window);
        let n = window.len();
        for i in 0..n {
            k.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        k
    }

    pub fn from_fn(window: LatticeWindow, mut f: impl FnMut(i64, i64) -> Complex64) -> Self {
        let dim = window.len();
        let mut data = Vec::with_capacity(dim * dim);
        for n in window.sites() {
            for m in window.sites() {
                data.push(f(n, m));
            }
        }
        Self { window, data }
    }

    /// Wrap row-major data (row `i` holds `K(site(i), ·)`) already assembled
    /// elsewhere, e.g. by a parallel builder.
    pub fn from_rows(window: LatticeWindow, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != window.len() * window.len() {
            return Err(Error::InvalidArgument(format!(
                "kernel data has {} entries for a {}² window",
                data.len(),
                window.len()
            )));
        }
        Ok(Self { window, data })
    }

    pub fn window(&self) -> LatticeWindow {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.window.len()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, n: i64, m: i64) -> Complex64 {
        match (self.window.index_of(n), self.window.index_of(m)) {
            (Some(i), Some(j)) => self.data[i * self.dim() + j],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, n: i64, m: i64, v: Complex64) -> Result<()> {
        let dim = self.dim();
        let i = self.window.index_of(n).ok_or(Error::OutOfWindow {
            n,
            window: self.window.to_string(),
        })?;
        let j = self.window.index_of(m).ok_or(Error::OutOfWindow {
            n: m,
            window: self.window.to_string(),
        })?;
        self.data[i * dim + j] = v;
        Ok(())
    }

    /// Matrix-vector action `(K u)(n) = Σ_m K(n, m) u(m)`.
    pub fn apply(&self, u: &ComplexField) -> Result<ComplexField> {
        check_windows(self.window, u.window())?;
        let dim = self.dim();
        let mut out = ComplexField::zeros(self.window);
        for i in 0..dim {
            let row = &self.data[i * dim..(i + 1) * dim];
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, v) in row.iter().zip(u.values()) {
                acc += k * v;
            }
            out.values_mut()[i] = acc;
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Kernel) -> Result<Kernel> {
        check_windows(self.window, other.window)?;
        let dim = self.dim();
        let mut out = Kernel::zeros(self.window);
        for i in 0..dim {
            for k in 0..dim {
                let a = self.data[i * dim + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &other.data[k * dim..(k + 1) * dim];
                let orow = &mut out.data[i * dim..(i + 1) * dim];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add_scaled(&self, other: &Kernel, c: Complex64) -> Result<Kernel> {
        check_windows(self.window, other.window)?;
        Ok(Kernel {
            window: self.window,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value by power iteration on `K* K`.
    pub fn op_norm(&self) -> f64 {
        let dim = self.dim();
        if dim == 0 {
            return 0.0;
        }
        // Deterministic start with components at every index parity.
        let mut v: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut norm = 0.0;
        for _ in 0..200 {
            let av = self.mul_vec(&v);
            let atav = self.mul_vec_adjoint(&av);
            let new_norm = vec_norm(&atav).sqrt();
            let vn = vec_norm(&atav);
            if vn == 0.0 {
                return 0.0;
            }
            for (x, y) in v.iter_mut().zip(&atav) {
                *x = y / vn;
            }
            if (new_norm - norm).abs() <= 1e-13 * new_norm.max(1.0) {
                norm = new_norm;
                break;
            }
            norm = new_norm;
        }
        norm
    }

    fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        (0..dim)
            .map(|i| {
                let row = &self.data[i * dim..(i + 1) * dim];
                row.iter().zip(v).map(|(k, x)| k * x).sum()
            })
            .collect()
    }

    fn mul_vec_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for i in 0..dim {
            let row = &self.data[i * dim..(i + 1) * dim];
            let vi = v[i];
            for (o, k) in out.iter_mut().zip(row) {
                *o += k.conj() * vi;
            }
        }
        out
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn window_rejects_bad_bounds() {
        assert!(LatticeWindow::new(0, 5).is_err());
        assert!(LatticeWindow::new(-5, 0).is_err());
        assert!(LatticeWindow::new(3, 7).is_err());
        assert!(LatticeWindow::new(-3, 3).is_ok());
    }

    #[test]
    fn weighted_norm_delta_at_three() {
        let w = LatticeWindow::symmetric(8).unwrap();
        let u = ComplexField::delta(w, 3).unwrap();
        let n = weighted_norm(&u, 2.0, 2.0).unwrap();
        assert!((n - 10.0).abs() < 1e-14, "got {n}");
    }

    #[test]
    fn weighted_norm_two_deltas_l1() {
        let w = LatticeWindow::symmetric(4).unwrap();
        let mut u = ComplexField::zeros(w);
        u.set(1, c(1.0, 0.0)).unwrap();
        u.set(-1, c(1.0, 0.0)).unwrap();
        let n = weighted_norm(&u, 1.0, 1.0).unwrap();
        assert!((n - 2.0 * 2.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn weighted_norm_sup_form() {
        let w = LatticeWindow::symmetric(4).unwrap();
        let mut u = ComplexField::zeros(w);
        u.set(2, c(0.5, 0.0)).unwrap();
        u.set(0, c(1.0, 0.0)).unwrap();
        let n = weighted_norm(&u, f64::INFINITY, 2.0).unwrap();
        // max(⟨0⟩²·1, ⟨2⟩²·0.5) = max(1, 2.5)
        assert!((n - 2.5).abs() < 1e-14);
    }

    #[test]
    fn laplacian_symbol_on_plane_wave() {
        // u(n) = e^{inθ} gives (-Δu)(n) = (2 - 2cosθ) u(n) in the interior.
        let w = LatticeWindow::symmetric(40).unwrap();
        let theta = std::f64::consts::PI / 3.0;
        let u = ComplexField::from_fn(w, |n| (Complex64::i() * theta * n as f64).exp());
        let lap = apply_laplacian(&u);
        let factor = 2.0 - 2.0 * theta.cos(); // = 1 at θ = π/3
        assert!((factor - 1.0).abs() < 1e-15);
        for n in -30..=30 {
            let diff = (lap.get(n) - factor * u.get(n)).norm();
            assert!(diff < 1e-13, "site {n}: {diff}");
        }
    }

    #[test]
    fn hamiltonian_single_site_action() {
        let w = LatticeWindow::symmetric(6).unwrap();
        let q = Potential::single_site(w, -1.0).unwrap();
        let u = ComplexField::from_fn(w, |n| c(1.0 / (1.0 + n.abs() as f64), 0.2 * n as f64));
        let hu = apply_hamiltonian(&q, &u).unwrap();
        let lap = apply_laplacian(&u);
        for n in w.sites() {
            let expect = lap.get(n) + if n == 0 { -u.get(0) } else { c(0.0, 0.0) };
            assert!((hu.get(n) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn hamiltonian_window_mismatch_is_error() {
        let q = Potential::zero(LatticeWindow::symmetric(4).unwrap());
        let u = ComplexField::zeros(LatticeWindow::symmetric(5).unwrap());
        assert!(matches!(
            apply_hamiltonian(&q, &u),
            Err(Error::WindowMismatch { .. })
        ));
    }

    #[test]
    fn laplacian_is_symmetric_and_band_limited() {
        // ⟨-Δu, v⟩ = ⟨u, -Δv⟩ and 0 ≤ ⟨-Δu, u⟩ ≤ 4‖u‖² for interior-supported u.
        let w = LatticeWindow::symmetric(10).unwrap();
        let u = ComplexField::from_fn(w, |n| {
            if n.abs() < 8 {
                c((n as f64 * 0.4).sin(), (n as f64 * 0.9).cos())
            } else {
                c(0.0, 0.0)
            }
        });
        let v = ComplexField::from_fn(w, |n| {
            if n.abs() < 8 {
                c(0.3 * n as f64, (n as f64).cos())
            } else {
                c(0.0, 0.0)
            }
        });
        let lu = apply_laplacian(&u);
        let lv = apply_laplacian(&v);
        assert!((lu.inner(&v) - u.inner(&lv)).norm() < 1e-11);
        let quad = lu.inner(&u).re;
        assert!(quad >= -1e-12);
        assert!(quad <= 4.0 * u.norm_l2().powi(2) + 1e-12);
    }

    #[test]
    fn eta_gamma_match_direct_sums() {
        let w = LatticeWindow::symmetric(12).unwrap();
        let q = Potential::from_fn(w, |n| 0.3 * (-0.5 * n.abs() as f64).exp() * if n % 2 == 0 { 1.0 } else { -1.0 })
            .unwrap();
        for n in -14..=14 {
            let eta_direct: f64 = w
                .sites()
                .rev()
                .filter(|&m| m >= n)
                .map(|m| q.q(m).abs())
                .sum();
            let gamma_direct: f64 = w
                .sites()
                .rev()
                .filter(|&m| m >= n)
                .map(|m| (m - n) as f64 * q.q(m).abs())
                .sum();
            assert_eq!(q.eta(n), eta_direct, "eta at {n}");
            assert!((q.gamma(n) - gamma_direct).abs() < 1e-13 * (1.0 + gamma_direct), "gamma at {n}");
        }
        // Monotonicity of η.
        for n in -12..12 {
            assert!(q.eta(n) >= q.eta(n + 1));
        }
    }

    #[test]
    fn potential_text_round_trip() {
        let w = LatticeWindow::symmetric(5).unwrap();
        let text = "# sample\n0 -1.0\n\n2 0.125\n-3 4e-2\n";
        let q = Potential::from_text(w, text).unwrap();
        assert_eq!(q.q(0), -1.0);
        assert_eq!(q.q(2), 0.125);
        assert_eq!(q.q(-3), 0.04);
        assert_eq!(q.q(1), 0.0);
        assert!(Potential::from_text(w, "9 1.0").is_err());
        assert!(Potential::from_text(w, "1 nope").is_err());
    }

    #[test]
    fn reflection_mirrors_support() {
        let w = LatticeWindow::new(-4, 7).unwrap();
        let q = Potential::two_site(w, (2, 1.5), (-3, -0.5)).unwrap();
        let r = q.reflected().unwrap();
        assert_eq!(r.window().n_min(), -7);
        assert_eq!(r.window().n_max(), 4);
        assert_eq!(r.q(-2), 1.5);
        assert_eq!(r.q(3), -0.5);
        assert_eq!(r.q(0), 0.0);
    }

    #[test]
    fn kernel_apply_and_matmul_agree_with_manual() {
        let w = LatticeWindow::new(-1, 1).unwrap();
        let a = Kernel::from_fn(w, |n, m| c((n + 2 * m) as f64, 0.5 * (n - m) as f64));
        let b = Kernel::from_fn(w, |n, m| c(1.0 / (1.0 + (n - m).abs() as f64), 0.0));
        let u = ComplexField::from_fn(w, |n| c(n as f64, 1.0));
        let au = a.apply(&u).unwrap();
        for n in w.sites() {
            let manual: Complex64 = w.sites().map(|m| a.get(n, m) * u.get(m)).sum();
            assert!((au.get(n) - manual).norm() < 1e-14);
        }
        let ab = a.matmul(&b).unwrap();
        for n in w.sites() {
            for m in w.sites() {
                let manual: Complex64 = w.sites().map(|k| a.get(n, k) * b.get(k, m)).sum();
                assert!((ab.get(n, m) - manual).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn op_norm_of_unitary_diagonal_is_one() {
        let w = LatticeWindow::symmetric(6).unwrap();
        let k = Kernel::from_fn(w, |n, m| {
            if n == m {
                (Complex64::i() * (0.3 * n as f64)).exp()
            } else {
                c(0.0, 0.0)
            }
        });
        assert!((k.op_norm() - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn weighted_norm_is_homogeneous(scale in 0.01f64..100.0, sigma in -2.0f64..3.0) {
            let w = LatticeWindow::symmetric(6).unwrap();
            let u = ComplexField::from_fn(w, |n| c((n as f64 * 0.7).sin(), (n as f64 * 1.3).cos()));
            let su = u.scale(c(scale, 0.0));
            for p in [1.0, 2.0, 4.0, f64::INFINITY] {
                let a = weighted_norm(&su, p, sigma).unwrap();
                let b = scale * weighted_norm(&u, p, sigma).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300));
            }
        }

        #[test]
        fn bracket_weights_are_monotone(n in 0i64..10_000) {
            prop_assert!(bracket(n + 1) > bracket(n));
            prop_assert!(bracket(-n) == bracket(n));
        }
    }
}
