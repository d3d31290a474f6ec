//! `dnls`: command-line driver for the lattice Schrödinger toolkit:
//! Jost solutions, scattering data, resolvents, dispersive propagators,
//! standing-wave branches, and perturbed-soliton simulations.

mod config;
mod output;

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use dnls_core::dynamics::{extract_scattering_state, stability_run, StabilityOptions};
use dnls_core::jost::{jost_m_derivative, jost_m, Sign, SpectralPoint};
use dnls_core::lattice::ComplexField;
use dnls_core::propagator::{admissible_exponent, continuous_propagator, decay_scan, smoothing_norms};
use dnls_core::scattering::{classify_genericity, scattering_data};
use dnls_core::spectral::{resolvent_kernel, EigenBasis};
use dnls_core::standing_wave::{
    equation_residual, ground_state, solve_standing_wave, verify_expansion, BranchTable,
};

use config::{parse_sites, resolve, Kind, Overrides, PotentialSpec, RunSettings};
use output::{num, OutDir};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Parser)]
#[command(
    name = "dnls",
    version,
    about = "Spectral, scattering, and soliton-dynamics toolkit for 1-D lattice Schrödinger operators"
)]
struct Cli {
    /// TOML configuration file (flags override its values).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV tables and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = library default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomised perturbations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Potential family: zero, single, sites, exponential, oscillatory.
    #[arg(long, global = true, value_parser = parse_kind)]
    kind: Option<Kind>,
    /// Half-width of the lattice window.
    #[arg(long, global = true)]
    radius: Option<i64>,
    /// Single-site coupling.
    #[arg(long, global = true)]
    strength: Option<f64>,
    /// Amplitude of the exponential/oscillatory families.
    #[arg(long, global = true)]
    amplitude: Option<f64>,
    /// Geometric ratio of the exponential family.
    #[arg(long, global = true)]
    ratio: Option<f64>,
    /// Frequency of the oscillatory family.
    #[arg(long, global = true)]
    frequency: Option<f64>,
    /// Decay scale of the oscillatory family.
    #[arg(long, global = true)]
    decay: Option<f64>,
    /// Explicit sites, e.g. "0:-0.8,3:0.5" (implies kind = sites).
    #[arg(long, global = true)]
    sites: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a Jost solution and its spectral-parameter derivative.
    Jost {
        /// Real part of θ.
        #[arg(long)]
        theta: f64,
        /// Imaginary part of θ (must be ≤ 0).
        #[arg(long, default_value_t = 0.0)]
        theta_im: f64,
        /// Which solution: plus (decaying at +∞) or minus.
        #[arg(long, default_value = "plus")]
        sign: String,
    },
    /// Tabulate transmission/reflection coefficients over the band.
    Scatter {
        /// Number of grid points strictly inside (0, π).
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Report whether the band edges are generic or resonant.
    Classify,
    /// Bound states and eigen-projector data.
    Spectrum,
    /// Resolvent kernel at an off-band energy.
    Resolvent {
        #[arg(long)]
        z_re: f64,
        #[arg(long, default_value_t = 0.0)]
        z_im: f64,
        /// Output block half-width.
        #[arg(long, default_value_t = 32)]
        block: i64,
    },
    /// Kernel of the continuous flow at a fixed time.
    Propagate {
        #[arg(long)]
        t: f64,
        /// Output block half-width.
        #[arg(long, default_value_t = 32)]
        block: i64,
        /// Override the quadrature grid size.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Measure the dispersive sup-norm decay over a list of times.
    DecayScan {
        /// Comma-separated times.
        #[arg(long, default_value = "10,20,40,80,160")]
        times: String,
        /// Fit the decay exponent using times at or above this value.
        #[arg(long, default_value_t = 10.0)]
        fit_from: f64,
    },
    /// Local-smoothing and admissible-pair norms of the linear flow.
    Norms {
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 30.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        /// Site of the delta data/source.
        #[arg(long, default_value_t = 1)]
        source_site: i64,
        /// Admissible exponent r for the reported dual pair.
        #[arg(long, default_value_t = 4.0)]
        r: f64,
    },
    /// Solve one standing wave on the bifurcating branch.
    StandingWave {
        /// Absolute frequency (overrides --omega-mult).
        #[arg(long)]
        omega: Option<f64>,
        /// Frequency as a multiple of the bifurcation point.
        #[arg(long, default_value_t = 1.2)]
        omega_mult: f64,
        /// Also fit the bifurcation power laws.
        #[arg(long)]
        verify: bool,
    },
    /// Tabulate the standing-wave branch over a frequency interval.
    Sweep {
        #[arg(long, default_value_t = 1.05)]
        lo_mult: f64,
        #[arg(long, default_value_t = 1.6)]
        hi_mult: f64,
        #[arg(long, default_value_t = 24)]
        count: usize,
    },
    /// Evolve a perturbed standing wave and track the modulation data.
    Simulate {
        /// Initial frequency as a multiple of the bifurcation point.
        #[arg(long, default_value_t = 1.3)]
        omega_mult: f64,
        /// Perturbation size.
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 50.0)]
        t_final: f64,
        #[arg(long, default_value_t = 0.015625)]
        dt: f64,
        /// Time between modulation samples.
        #[arg(long, default_value_t = 0.0625)]
        sample: f64,
        /// Time between radiation snapshots.
        #[arg(long, default_value_t = 10.0)]
        snapshot: f64,
        /// Perturbation shape: bump (deterministic) or noise (seeded).
        #[arg(long, default_value = "bump")]
        pert: String,
        /// Also extract the late-time scattering state.
        #[arg(long)]
        extract: bool,
        /// Branch-table frequency range (multiples of the bifurcation
        /// point) and node count.
        #[arg(long, default_value_t = 1.04)]
        table_lo: f64,
        #[arg(long, default_value_t = 1.7)]
        table_hi: f64,
        #[arg(long, default_value_t = 32)]
        table_nodes: usize,
        /// Abort threshold: ‖r‖₂ as a fraction of ‖φ‖₂.
        #[arg(long, default_value_t = 0.75)]
        tube: f64,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let over = Overrides {
        kind: cli.kind,
        radius: cli.radius,
        strength: cli.strength,
        amplitude: cli.amplitude,
        ratio: cli.ratio,
        frequency: cli.frequency,
        decay: cli.decay,
        sites: cli.sites.as_deref().map(parse_sites).transpose()?,
        out_dir: cli.out.clone(),
        threads: cli.threads,
        seed: cli.seed,
    };
    let (spec, settings) = resolve(cli.config.as_deref(), &over)?;
    if settings.threads > 0 {
        // Ignore failure: the pool may already exist in tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.threads)
            .build_global();
    }
    match cli.command {
        Command::Jost { theta, theta_im, sign } => cmd_jost(&spec, &settings, theta, theta_im, &sign),
        Command::Scatter { grid } => cmd_scatter(&spec, &settings, grid),
        Command::Classify => cmd_classify(&spec, &settings),
        Command::Spectrum => cmd_spectrum(&spec, &settings),
        Command::Resolvent { z_re, z_im, block } => cmd_resolvent(&spec, &settings, c64(z_re, z_im), block),
        Command::Propagate { t, block, grid } => cmd_propagate(&spec, &settings, t, block, grid),
        Command::DecayScan { times, fit_from } => cmd_decay(&spec, &settings, &times, fit_from),
        Command::Norms { tau, t_max, dt, source_site, r } => {
            cmd_norms(&spec, &settings, tau, t_max, dt, source_site, r)
        }
        Command::StandingWave { omega, omega_mult, verify } => {
            cmd_standing_wave(&spec, &settings, omega, omega_mult, verify)
        }
        Command::Sweep { lo_mult, hi_mult, count } => cmd_sweep(&spec, &settings, lo_mult, hi_mult, count),
        Command::Simulate {
            omega_mult,
            epsilon,
            t_final,
            dt,
            sample,
            snapshot,
            pert,
            extract,
            table_lo,
            table_hi,
            table_nodes,
            tube,
        } => cmd_simulate(
            &spec, &settings, omega_mult, epsilon, t_final, dt, sample, snapshot, &pert, extract,
            (table_lo, table_hi, table_nodes), tube,
        ),
    }
}

fn parse_sign(s: &str) -> Result<Sign> {
    match s {
        "plus" | "+" => Ok(Sign::Plus),
        "minus" | "-" => Ok(Sign::Minus),
        other => bail!("sign must be plus or minus, got {other:?}"),
    }
}

fn cmd_jost(spec: &PotentialSpec, run: &RunSettings, theta: f64, theta_im: f64, sign: &str) -> Result<()> {
    let q = spec.build()?;
    let sign = parse_sign(sign)?;
    let point = SpectralPoint::from_theta(c64(theta, theta_im))?;
    let data = jost_m(&q, sign, point)?;
    let dot = jost_m_derivative(&q, sign, point)?;
    let mut out = OutDir::create(&run.out_dir)?;
    let w = q.window();
    let path = out.csv(
        "jost.csv",
        "n,m_re,m_im,f_re,f_im,dm_re,dm_im",
        w.sites().map(|n| {
            let m = data.m.get(n);
            let f = data.f.get(n);
            let d = dot.get(n);
            format!(
                "{n},{},{},{},{},{},{}",
                num(m.re), num(m.im), num(f.re), num(f.im), num(d.re), num(d.im)
            )
        }),
    )?;
    println!("wrote {}", path.display());
    out.manifest(
        "jost",
        json!({
            "potential": spec.describe(),
            "theta": theta,
            "theta_im": theta_im,
            "sign": format!("{sign:?}"),
            "energy_re": point.z().re,
            "energy_im": point.z().im,
        }),
        json!({}),
    )?;
    Ok(())
}

fn cmd_scatter(spec: &PotentialSpec, run: &RunSettings, grid: usize) -> Result<()> {
    if grid == 0 {
        bail!("--grid must be positive");
    }
    let q = spec.build()?;
    let mut worst_unitarity = 0.0f64;
    let mut rows = Vec::with_capacity(grid);
    for j in 0..grid {
        let theta = (j as f64 + 0.5) * std::f64::consts::PI / grid as f64;
        let d = scattering_data(&q, theta)?;
        worst_unitarity = worst_unitarity.max(d.unitarity_defect()).max(d.cross_defect());
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{}",
            num(theta),
            num(d.t.re), num(d.t.im),
            num(d.r_minus.re), num(d.r_minus.im),
            num(d.r_plus.re), num(d.r_plus.im),
            num(d.unitarity_defect()), num(d.cross_defect())
        ));
    }
    let report = classify_genericity(&q)?;
    let mut out = OutDir::create(&run.out_dir)?;
    let path = out.csv(
        "scattering.csv",
        "theta,t_re,t_im,rminus_re,rminus_im,rplus_re,rplus_im,unitarity_defect,cross_defect",
        rows,
    )?;
    println!(
        "wrote {} ({} angles, worst identity defect {worst_unitarity:.3e}, generic: {})",
        path.display(),
        grid,
        report.is_generic()
    );
    out.manifest(
        "scatter",
        json!({ "potential": spec.describe(), "grid": grid }),
        json!({
            "worst_identity_defect": worst_unitarity,
            "generic": report.is_generic(),
        }),
    )?;
    Ok(())
}

fn cmd_classify(spec: &PotentialSpec, run: &RunSettings) -> Result<()> {
    let q = spec.build()?;
    let report = classify_genericity(&q)?;
    let mut out = OutDir::create(&run.out_dir)?;
    let value = serde_json::to_value(&report)?;
    out.json("classify.json", &value)?;
    println!(
        "edge behaviour: generic at 0: {}, generic at 4: {} (overall {})",
        report.generic_at_zero,
        report.generic_at_pi,
        if report.is_generic() { "generic" } else { "resonant" }
    );
    out.manifest("classify", json!({ "potential": spec.describe() }), value)?;
    Ok(())
}

fn cmd_spectrum(spec: &PotentialSpec, run: &RunSettings) -> Result<()> {
    let q = spec.build()?;
    let basis = EigenBasis::new(&q);
    let states = basis.bound_states();
    let mut out = OutDir::create(&run.out_dir)?;
    out.csv(
        "bound_states.csv",
        "index,lambda",
        states
            .iter()
            .enumerate()
            .map(|(k, s)| format!("{k},{}", num(s.lambda))),
    )?;
    if !states.is_empty() {
        let w = q.window();
        let header = std::iter::once("n".to_string())
            .chain((0..states.len()).map(|k| format!("mode_{k}")))
            .collect::<Vec<_>>()
            .join(",");
        out.csv(
            "bound_modes.csv",
            &header,
            w.sites().enumerate().map(|(i, n)| {
                let mut row = vec![n.to_string()];
                for s in &states {
                    row.push(num(s.mode[i]));
                }
                row.join(",")
            }),
        )?;
    }
    println!(
        "{} bound state(s): {:?}",
        states.len(),
        states.iter().map(|s| s.lambda).collect::<Vec<_>>()
    );
    out.manifest(
        "spectrum",
        json!({ "potential": spec.describe() }),
        json!({
            "bound_count": states.len(),
            "eigenvalues": states.iter().map(|s| s.lambda).collect::<Vec<_>>(),
        }),
    )?;
    Ok(())
}

fn cmd_resolvent(spec: &PotentialSpec, run: &RunSettings, z: Complex64, block: i64) -> Result<()> {
    let q = spec.build()?;
    let w = q.window();
    if block > w.n_max() {
        bail!("block {block} exceeds the window radius {}", w.n_max());
    }
    let kernel = resolvent_kernel(&q, z, w).map_err(|e| anyhow!("{e}"))?;
    let mut out = OutDir::create(&run.out_dir)?;
    let path = out.csv(
        "resolvent.csv",
        "n,m,re,im",
        (-block..=block).flat_map(|n| {
            let kernel = &kernel;
            (-block..=block).map(move |m| {
                let v = kernel.get(n, m);
                format!("{n},{m},{},{}", num(v.re), num(v.im))
            })
        }),
    )?;
    println!("wrote {} (block half-width {block})", path.display());
    out.manifest(
        "resolvent",
        json!({
            "potential": spec.describe(),
            "z_re": z.re,
            "z_im": z.im,
            "block": block,
        }),
        json!({ "max_abs": kernel.max_abs() }),
    )?;
    Ok(())
}

fn cmd_propagate(
    spec: &PotentialSpec,
    run: &RunSettings,
    t: f64,
    block: i64,
    grid: Option<usize>,
) -> Result<()> {
    let q = spec.build()?;
    let w = q.window();
    if block > w.n_max() {
        bail!("block {block} exceeds the window radius {}", w.n_max());
    }
    let kernel = continuous_propagator(&q, t, w, grid).map_err(|e| anyhow!("{e}"))?;
    let mut out = OutDir::create(&run.out_dir)?;
    let path = out.csv(
        "propagator.csv",
        "n,m,re,im",
        (-block..=block).flat_map(|n| {
            let kernel = &kernel;
            (-block..=block).map(move |m| {
                let v = kernel.get(n, m);
                format!("{n},{m},{},{}", num(v.re), num(v.im))
            })
        }),
    )?;
    println!(
        "wrote {} (t = {t}, sup |kernel| = {:.6e})",
        path.display(),
        kernel.max_abs()
    );
    out.manifest(
        "propagate",
        json!({
            "potential": spec.describe(),
            "t": t,
            "block": block,
            "grid": grid,
        }),
        json!({ "max_abs": kernel.max_abs() }),
    )?;
    Ok(())
}

fn cmd_decay(spec: &PotentialSpec, run: &RunSettings, times: &str, fit_from: f64) -> Result<()> {
    let q = spec.build()?;
    let times: Vec<f64> = times
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().context("bad time value"))
        .collect::<Result<_>>()?;
    let report = decay_scan(&q, &times, fit_from).map_err(|e| anyhow!("{e}"))?;
    let mut out = OutDir::create(&run.out_dir)?;
    let path = out.csv(
        "decay.csv",
        "t,radius,sup,c_scaled",
        report
            .points
            .iter()
            .map(|p| format!("{},{},{},{}", num(p.t), p.radius, num(p.sup), num(p.c_scaled))),
    )?;
    println!(
        "wrote {} (slope {:.4}, scaled constant {:.6e})",
        path.display(),
        report.slope,
        report.c_measured
    );
    out.manifest(
        "decay-scan",
        json!({
            "potential": spec.describe(),
            "times": times,
            "fit_from": fit_from,
        }),
        serde_json::to_value(&report)?,
    )?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_norms(
    spec: &PotentialSpec,
    run: &RunSettings,
    tau: f64,
    t_max: f64,
    dt: f64,
    source_site: i64,
    r: f64,
) -> Result<()> {
    let q = spec.build()?;
    let w = q.window();
    let f = ComplexField::delta(w, source_site).map_err(|e| anyhow!("{e}"))?;
    let report = smoothing_norms(&q, &f, tau, t_max, dt).map_err(|e| anyhow!("{e}"))?;
    let p = admissible_exponent(r).map_err(|e| anyhow!("{e}"))?;
    let mut out = OutDir::create(&run.out_dir)?;
    let value = serde_json::to_value(&report)?;
    out.json("norms.json", &value)?;
    println!(
        "homogeneous smoothing norm {:.6e} (a-priori bound {:.6e}); Duhamel weighted {:.6e}, sup {:.6e}; admissible pair (r, p) = ({r}, {p})",
        report.homogeneous, report.kato_bound, report.duhamel_weighted, report.duhamel_sup
    );
    out.manifest(
        "norms",
        json!({
            "potential": spec.describe(),
            "tau": tau,
            "t_max": t_max,
            "dt": dt,
            "source_site": source_site,
            "r": r,
            "p": p,
        }),
        value,
    )?;
    Ok(())
}

fn cmd_standing_wave(
    spec: &PotentialSpec,
    run: &RunSettings,
    omega: Option<f64>,
    omega_mult: f64,
    verify: bool,
) -> Result<()> {
    let q = spec.build()?;
    let gs = ground_state(&q).map_err(|e| anyhow!("{e}"))?;
    let omega = omega.unwrap_or(gs.e0 * omega_mult);
    let wave = solve_standing_wave(&q, omega).map_err(|e| anyhow!("{e}"))?;
    let residual = equation_residual(&q, omega, &wave.phi);
    let mut out = OutDir::create(&run.out_dir)?;
    let w = q.window();
    let path = out.csv(
        "standing_wave.csv",
        "n,phi,residual",
        w.sites()
            .enumerate()
            .map(|(i, n)| format!("{n},{},{}", num(wave.phi[i]), num(residual[i]))),
    )?;
    println!(
        "wrote {} (omega = {omega:.12}, amplitude = {:.12}, residual sup = {:.3e})",
        path.display(),
        wave.amplitude,
        wave.residual_sup
    );
    let mut summary = json!({
        "omega": omega,
        "bifurcation_point": gs.e0,
        "amplitude": wave.amplitude,
        "residual_sup": wave.residual_sup,
        "iterations": wave.iterations,
    });
    if verify {
        let expansion = verify_expansion(&q).map_err(|e| anyhow!("{e}"))?;
        println!(
            "bifurcation fits: amplitude slope {:.5} (expect 0.16667), correction slope {:.5} (expect 1.16667), amplitude ratio {:.6}",
            expansion.amplitude_slope, expansion.correction_slope, expansion.amplitude_ratio
        );
        summary["expansion"] = serde_json::to_value(&expansion)?;
    }
    out.manifest(
        "standing-wave",
        json!({ "potential": spec.describe(), "omega": omega, "verify": verify }),
        summary,
    )?;
    Ok(())
}

fn cmd_sweep(
    spec: &PotentialSpec,
    run: &RunSettings,
    lo_mult: f64,
    hi_mult: f64,
    count: usize,
) -> Result<()> {
    if count < 2 || !(1.0 < lo_mult && lo_mult < hi_mult) {
        bail!("sweep needs count >= 2 and 1 < lo_mult < hi_mult");
    }
    let q = spec.build()?;
    let gs = ground_state(&q).map_err(|e| anyhow!("{e}"))?;
    let mut rows = Vec::with_capacity(count);
    for k in 0..count {
        let mult = lo_mult + (hi_mult - lo_mult) * k as f64 / (count - 1) as f64;
        let omega = gs.e0 * mult;
        let wave = solve_standing_wave(&q, omega).map_err(|e| anyhow!("{e}"))?;
        let l2: f64 = wave.phi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let peak = wave.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rows.push(format!(
            "{},{},{},{},{},{}",
            num(omega),
            num(omega - gs.e0),
            num(wave.amplitude),
            num(l2),
            num(peak),
            num(wave.residual_sup)
        ));
    }
    let mut out = OutDir::create(&run.out_dir)?;
    let path = out.csv(
        "branch.csv",
        "omega,detuning,amplitude,l2_norm,peak,residual_sup",
        rows,
    )?;
    println!("wrote {} ({count} branch points)", path.display());
    out.manifest(
        "sweep",
        json!({
            "potential": spec.describe(),
            "lo_mult": lo_mult,
            "hi_mult": hi_mult,
            "count": count,
            "bifurcation_point": gs.e0,
        }),
        json!({}),
    )?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    spec: &PotentialSpec,
    run: &RunSettings,
    omega_mult: f64,
    epsilon: f64,
    t_final: f64,
    dt: f64,
    sample: f64,
    snapshot: f64,
    pert: &str,
    extract: bool,
    table: (f64, f64, usize),
    tube: f64,
) -> Result<()> {
    // Radiation travels at speed at most 2; keep it inside the window.
    let needed = (2.0 * t_final).ceil() as i64 + 80;
    let mut sized = spec.clone();
    if sized.radius < needed {
        sized.radius = needed;
    }
    let q = sized.build()?;
    let w = q.window();
    let gs = ground_state(&q).map_err(|e| anyhow!("{e}"))?;
    let omega0 = gs.e0 * omega_mult;
    let (lo, hi, nodes) = table;
    let branch = BranchTable::build(&q, gs.e0 * lo, gs.e0 * hi, nodes).map_err(|e| anyhow!("{e}"))?;

    let perturbation = match pert {
        "bump" => ComplexField::from_fn(w, |n| {
            c64(1.0, 0.35) * epsilon * (-(n as f64).powi(2) / 9.0).exp()
        }),
        "noise" => {
            let mut rng = ChaCha20Rng::seed_from_u64(run.seed);
            let values: Vec<Complex64> = w
                .sites()
                .map(|n| {
                    let env = (-(n as f64).powi(2) / 512.0).exp();
                    c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * epsilon * env
                })
                .collect();
            ComplexField::from_values(w, values).map_err(|e| anyhow!("{e}"))?
        }
        other => bail!("perturbation kind must be bump or noise, got {other:?}"),
    };

    let options = StabilityOptions {
        dt,
        t_final,
        sample_spacing: sample,
        snapshot_spacing: snapshot,
        tube_radius_factor: tube,
    };
    let report = stability_run(&q, &branch, omega0, &perturbation, options).map_err(|e| anyhow!("{e}"))?;

    let mut out = OutDir::create(&run.out_dir)?;
    let path = out.csv(
        "modulation.csv",
        "t,omega,gamma,omega_dot,gamma_dot,r_weighted,r_l2",
        (0..report.times.len()).map(|k| {
            format!(
                "{},{},{},{},{},{},{}",
                num(report.times[k]),
                num(report.omega[k]),
                num(report.gamma[k]),
                num(report.omega_dot[k]),
                num(report.gamma_dot[k]),
                num(report.r_weighted[k]),
                num(report.r_l2[k])
            )
        }),
    )?;
    println!(
        "wrote {} ({} samples; omega {:.9} -> {:.9}; in tube: {})",
        path.display(),
        report.times.len(),
        report.omega_initial,
        report.omega_final,
        report.exit_time.is_none()
    );

    let mut summary = serde_json::to_value(&report)?;
    if extract {
        let extraction = extract_scattering_state(&q, &report.snapshots).map_err(|e| anyhow!("{e}"))?;
        out.csv(
            "scattering_state.csv",
            "n,wplus_re,wplus_im,uplus_re,uplus_im",
            w.sites().map(|n| {
                let wp = extraction.w_plus.get(n);
                let up = extraction.u_plus.get(n);
                format!("{n},{},{},{},{}", num(wp.re), num(wp.im), num(up.re), num(up.im))
            }),
        )?;
        println!(
            "scattering state: cauchy defects {:?}, free fit {:.3e} (conjugate {:.3e})",
            extraction
                .cauchy_defects
                .iter()
                .map(|d| format!("{d:.2e}"))
                .collect::<Vec<_>>(),
            extraction.free_fit_defect,
            extraction.free_fit_defect_conjugate
        );
        summary["extraction"] = json!({
            "cauchy_defects": extraction.cauchy_defects,
            "free_fit_defect": extraction.free_fit_defect,
            "free_fit_defect_conjugate": extraction.free_fit_defect_conjugate,
        });
    }
    out.manifest(
        "simulate",
        json!({
            "potential": sized.describe(),
            "omega_mult": omega_mult,
            "omega0": omega0,
            "epsilon": epsilon,
            "t_final": t_final,
            "dt": dt,
            "sample": sample,
            "snapshot": snapshot,
            "perturbation": pert,
            "seed": run.seed,
            "table": { "lo_mult": lo, "hi_mult": hi, "nodes": nodes },
            "tube_factor": tube,
        }),
        summary,
    )?;
    Ok(())
}
