//! Run configuration: a TOML file plus command-line overrides resolve to a
//! potential and run-level settings.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use dnls_core::lattice::{LatticeWindow, Potential};

/// Potential families constructible from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Zero,
    Single,
    Sites,
    Exponential,
    Oscillatory,
}

impl std::str::FromStr for Kind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zero" => Kind::Zero,
            "single" => Kind::Single,
            "sites" => Kind::Sites,
            "exponential" => Kind::Exponential,
            "oscillatory" => Kind::Oscillatory,
            other => bail!(
                "unknown potential kind {other:?} (expected zero, single, sites, exponential, or oscillatory)"
            ),
        })
    }
}

/// Fully resolved potential description.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub kind: Kind,
    pub radius: i64,
    /// Coupling of the single-site well/barrier.
    pub strength: f64,
    /// Prefactor for the exponential and oscillatory families.
    pub amplitude: f64,
    /// Geometric ratio of the exponential family, `q(n) = A r^{|n|}`.
    pub ratio: f64,
    /// Cosine frequency of the oscillatory family.
    pub frequency: f64,
    /// Exponential scale of the oscillatory family,
    /// `q(n) = A cos(f n) e^{-|n|/d}`.
    pub decay: f64,
    /// Explicit site list for `kind = sites`.
    pub sites: Vec<(i64, f64)>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            kind: Kind::Single,
            radius: 96,
            strength: -1.0,
            amplitude: 0.15,
            ratio: 0.5,
            frequency: 1.3,
            decay: 3.0,
            sites: vec![],
        }
    }
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        let window = LatticeWindow::symmetric(self.radius)
            .with_context(|| format!("bad window radius {}", self.radius))?;
        let q = match self.kind {
            Kind::Zero => Potential::zero(window),
            Kind::Single => Potential::single_site(window, self.strength)?,
            Kind::Sites => {
                if self.sites.is_empty() {
                    bail!("kind = sites requires a non-empty --sites list");
                }
                let sites = self.sites.clone();
                Potential::from_fn(window, move |n| {
                    sites
                        .iter()
                        .filter(|(m, _)| *m == n)
                        .map(|(_, v)| *v)
                        .sum()
                })?
            }
            Kind::Exponential => {
                let (a, r) = (self.amplitude, self.ratio);
                if !(0.0..1.0).contains(&r.abs()) {
                    bail!("exponential ratio must satisfy |r| < 1, got {r}");
                }
                Potential::from_fn(window, move |n| a * r.powi(n.unsigned_abs() as i32))?
            }
            Kind::Oscillatory => {
                let (a, f, d) = (self.amplitude, self.frequency, self.decay);
                if d <= 0.0 {
                    bail!("oscillatory decay scale must be positive, got {d}");
                }
                Potential::from_fn(window, move |n| {
                    a * (f * n as f64).cos() * (-(n.abs() as f64) / d).exp()
                })?
            }
        };
        Ok(q)
    }

    /// Human-readable one-liner for manifests.
    pub fn describe(&self) -> String {
        match self.kind {
            Kind::Zero => format!("zero potential on radius {}", self.radius),
            Kind::Single => format!(
                "single site q(0) = {} on radius {}",
                self.strength, self.radius
            ),
            Kind::Sites => format!("{} explicit sites on radius {}", self.sites.len(), self.radius),
            Kind::Exponential => format!(
                "exponential {} * {}^|n| on radius {}",
                self.amplitude, self.ratio, self.radius
            ),
            Kind::Oscillatory => format!(
                "oscillatory {} * cos({} n) * exp(-|n|/{}) on radius {}",
                self.amplitude, self.frequency, self.decay, self.radius
            ),
        }
    }
}

/// `[potential]` table of the TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialToml {
    kind: Option<String>,
    radius: Option<i64>,
    strength: Option<f64>,
    amplitude: Option<f64>,
    ratio: Option<f64>,
    frequency: Option<f64>,
    decay: Option<f64>,
    sites: Option<Vec<(i64, f64)>>,
}

/// `[run]` table of the TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunToml {
    out_dir: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    potential: Option<PotentialToml>,
    run: Option<RunToml>,
}

/// Run-level settings after merging file and flags.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub out_dir: PathBuf,
    pub threads: usize,
    pub seed: u64,
}

/// Command-line overrides collected by the argument parser.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub kind: Option<Kind>,
    pub radius: Option<i64>,
    pub strength: Option<f64>,
    pub amplitude: Option<f64>,
    pub ratio: Option<f64>,
    pub frequency: Option<f64>,
    pub decay: Option<f64>,
    pub sites: Option<Vec<(i64, f64)>>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

/// Parse `--sites "0:-0.8,3:0.5"`.
pub fn parse_sites(text: &str) -> Result<Vec<(i64, f64)>> {
    text.split(',')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            let (n, v) = part
                .split_once(':')
                .with_context(|| format!("site entry {part:?} is not of the form n:value"))?;
            Ok((
                n.trim().parse::<i64>().context("bad site index")?,
                v.trim().parse::<f64>().context("bad site value")?,
            ))
        })
        .collect()
}

/// Merge defaults, optional TOML file, and flag overrides.
pub fn resolve(config_path: Option<&Path>, over: &Overrides) -> Result<(PotentialSpec, RunSettings)> {
    let file: FileConfig = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let mut spec = PotentialSpec::default();
    if let Some(p) = &file.potential {
        if let Some(k) = &p.kind {
            spec.kind = k.parse()?;
        }
        spec.radius = p.radius.unwrap_or(spec.radius);
        spec.strength = p.strength.unwrap_or(spec.strength);
        spec.amplitude = p.amplitude.unwrap_or(spec.amplitude);
        spec.ratio = p.ratio.unwrap_or(spec.ratio);
        spec.frequency = p.frequency.unwrap_or(spec.frequency);
        spec.decay = p.decay.unwrap_or(spec.decay);
        if let Some(s) = &p.sites {
            spec.sites = s.clone();
        }
    }
    if let Some(k) = over.kind {
        spec.kind = k;
    }
    spec.radius = over.radius.unwrap_or(spec.radius);
    spec.strength = over.strength.unwrap_or(spec.strength);
    spec.amplitude = over.amplitude.unwrap_or(spec.amplitude);
    spec.ratio = over.ratio.unwrap_or(spec.ratio);
    spec.frequency = over.frequency.unwrap_or(spec.frequency);
    spec.decay = over.decay.unwrap_or(spec.decay);
    if let Some(s) = &over.sites {
        spec.sites = s.clone();
        if over.kind.is_none() {
            spec.kind = Kind::Sites;
        }
    }

    let run_file = file.run.unwrap_or_default();
    let settings = RunSettings {
        out_dir: over
            .out_dir
            .clone()
            .or(run_file.out_dir)
            .unwrap_or_else(|| PathBuf::from("out")),
        threads: over.threads.or(run_file.threads).unwrap_or(0),
        seed: over.seed.or(run_file.seed).unwrap_or(1),
    };
    Ok((spec, settings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sites_strings_parse_with_whitespace() {
        let sites = parse_sites(" 0:-0.8, 3:0.5 ,-2:1 ").unwrap();
        assert_eq!(sites, vec![(0, -0.8), (3, 0.5), (-2, 1.0)]);
        assert!(parse_sites("0=-0.8").is_err());
        assert!(parse_sites("a:1").is_err());
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let dir = std::env::temp_dir().join(format!("dnls-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(
            &path,
            "[potential]\nkind = \"exponential\"\nradius = 40\namplitude = 0.25\n\n[run]\nseed = 9\nthreads = 2\n",
        )
        .unwrap();

        let over = Overrides {
            amplitude: Some(0.125),
            seed: Some(11),
            ..Overrides::default()
        };
        let (spec, run) = resolve(Some(&path), &over).unwrap();
        assert_eq!(spec.kind, Kind::Exponential);
        assert_eq!(spec.radius, 40, "file beats default");
        assert_eq!(spec.amplitude, 0.125, "flag beats file");
        assert_eq!(run.seed, 11, "flag beats file");
        assert_eq!(run.threads, 2, "file beats default");
        assert_eq!(run.out_dir, PathBuf::from("out"), "default survives");

        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn sites_flag_implies_sites_kind() {
        let over = Overrides {
            sites: Some(vec![(0, -1.0)]),
            ..Overrides::default()
        };
        let (spec, _) = resolve(None, &over).unwrap();
        assert_eq!(spec.kind, Kind::Sites);
        let q = spec.build().unwrap();
        assert_eq!(q.q(0), -1.0);
        assert_eq!(q.q(1), 0.0);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = std::env::temp_dir().join(format!("dnls-config-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        std::fs::write(&path, "[potential]\nstrengh = -1.0\n").unwrap();
        assert!(resolve(Some(&path), &Overrides::default()).is_err());
        let _ = std::fs::remove_dir_all(&dir);
    }
}
