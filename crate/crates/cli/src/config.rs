//! Flat key=value run-configuration files and CLI-flag merging (flags win).

use anyhow::{anyhow, bail, Context, Result};
use pfqmc::driver::{CavitySource, InlineMode, RunConfig, SystemSource};
use pfqmc::hamiltonian::DecouplingScheme;
use pfqmc::walker::Constraint;
use std::path::PathBuf;

/// Settings collected from one source (config file or command line); `None`
/// means "not given here".
#[derive(Debug, Default, Clone)]
pub struct PartialConfig {
    pub fcidump: Option<PathBuf>,
    pub cavity: Option<PathBuf>,
    pub fixture: Option<String>,
    pub modes: Option<Vec<InlineMode>>,
    pub dtau: Option<f64>,
    pub total_time: Option<f64>,
    pub walkers: Option<usize>,
    pub estimator_stride: Option<usize>,
    pub sr_stride: Option<usize>,
    pub orth_stride: Option<usize>,
    pub scheme: Option<DecouplingScheme>,
    pub constraint: Option<Constraint>,
    pub no_dse: Option<bool>,
    pub seed: Option<u64>,
    pub oracle: Option<bool>,
    pub equilibration_fraction: Option<f64>,
    pub cholesky_tolerance: Option<f64>,
    pub photon_occupation: Option<Vec<usize>>,
    pub out_dir: Option<PathBuf>,
}

impl PartialConfig {
    /// Later sources override earlier ones field by field.
    pub fn overlay(mut self, other: PartialConfig) -> PartialConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            fcidump,
            cavity,
            fixture,
            modes,
            dtau,
            total_time,
            walkers,
            estimator_stride,
            sr_stride,
            orth_stride,
            scheme,
            constraint,
            no_dse,
            seed,
            oracle,
            equilibration_fraction,
            cholesky_tolerance,
            photon_occupation,
            out_dir
        );
        self
    }

    pub fn into_run_config(self) -> Result<(RunConfig, PathBuf)> {
        let system = match (self.fcidump, &self.fixture) {
            (Some(_), Some(_)) => bail!("give either an FCIDUMP path or a fixture, not both"),
            (Some(path), None) => SystemSource::FcidumpPath(path),
            (None, Some(spec)) => {
                let (name, params) = parse_fixture_spec(spec)?;
                SystemSource::Fixture { name, params }
            }
            (None, None) => bail!("no system given: use --fcidump or --fixture"),
        };
        let cavity = match (self.cavity, self.modes) {
            (Some(_), Some(_)) => bail!("give either a cavity file or inline modes, not both"),
            (Some(path), None) => CavitySource::Path(path),
            (None, Some(modes)) => CavitySource::Inline(modes),
            (None, None) => CavitySource::None,
        };
        let mut config = RunConfig::new(system, cavity);
        if let Some(v) = self.dtau {
            config.dtau = v;
        }
        if let Some(v) = self.total_time {
            config.total_time = v;
        }
        if let Some(v) = self.walkers {
            config.n_walkers = v;
        }
        if let Some(v) = self.estimator_stride {
            config.estimator_stride = v;
        }
        if let Some(v) = self.sr_stride {
            config.sr_stride = v;
        }
        if let Some(v) = self.orth_stride {
            config.orth_stride = v;
        }
        if let Some(v) = self.scheme {
            config.scheme = v;
        }
        if let Some(v) = self.constraint {
            config.constraint = v;
        }
        if let Some(v) = self.no_dse {
            config.include_dse = !v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.oracle {
            config.oracle = v;
        }
        if let Some(v) = self.equilibration_fraction {
            config.equilibration_fraction = v;
        }
        if let Some(v) = self.cholesky_tolerance {
            config.cholesky_tolerance = v;
        }
        if let Some(v) = self.photon_occupation {
            config.photon_occupation = v;
        }
        Ok((config, self.out_dir.unwrap_or_else(|| PathBuf::from("."))))
    }
}

/// `name:p1,p2,...` (parameters optional for fixtures that take none).
pub fn parse_fixture_spec(spec: &str) -> Result<(String, Vec<f64>)> {
    let (name, params) = match spec.split_once(':') {
        Some((name, rest)) => {
            let params = rest
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad fixture parameter {s:?}"))
                })
                .collect::<Result<Vec<f64>>>()?;
            (name, params)
        }
        None => (spec, Vec::new()),
    };
    Ok((name.trim().to_string(), params))
}

/// `omega=<real> gdiag=<real> nmax=<int> [dnuc=<real>]`.
pub fn parse_mode_spec(spec: &str) -> Result<InlineMode> {
    let mut omega = None;
    let mut gdiag = None;
    let mut n_max = None;
    let mut dnuc = 0.0;
    for field in spec.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got {field:?}"))?;
        match key {
            "omega" => {
                omega = Some(
                    value
                        .parse()
                        .with_context(|| format!("bad omega {value:?}"))?,
                )
            }
            "gdiag" => {
                gdiag = Some(
                    value
                        .parse()
                        .with_context(|| format!("bad gdiag {value:?}"))?,
                )
            }
            "nmax" => {
                n_max = Some(
                    value
                        .parse()
                        .with_context(|| format!("bad nmax {value:?}"))?,
                )
            }
            "dnuc" => {
                dnuc = value
                    .parse()
                    .with_context(|| format!("bad dnuc {value:?}"))?
            }
            other => bail!("unknown mode key {other:?}"),
        }
    }
    Ok(InlineMode {
        omega: omega.ok_or_else(|| anyhow!("mode is missing omega="))?,
        gdiag: gdiag.unwrap_or(0.0),
        n_max: n_max.ok_or_else(|| anyhow!("mode is missing nmax="))?,
        dnuc,
    })
}

pub fn parse_config_file(text: &str) -> Result<PartialConfig> {
    let mut out = PartialConfig::default();
    let mut modes: Vec<InlineMode> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value, got {line:?}", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let ctx = || format!("line {}: bad value for {key}", lineno + 1);
        match key {
            "fcidump" => out.fcidump = Some(PathBuf::from(value)),
            "cavity" => out.cavity = Some(PathBuf::from(value)),
            "fixture" => out.fixture = Some(value.to_string()),
            "mode" => modes.push(parse_mode_spec(value)?),
            "dtau" => out.dtau = Some(value.parse().with_context(ctx)?),
            "total_time" => out.total_time = Some(value.parse().with_context(ctx)?),
            "walkers" | "n_walkers" => out.walkers = Some(value.parse().with_context(ctx)?),
            "estimator_stride" => out.estimator_stride = Some(value.parse().with_context(ctx)?),
            "sr_stride" => out.sr_stride = Some(value.parse().with_context(ctx)?),
            "orth_stride" => out.orth_stride = Some(value.parse().with_context(ctx)?),
            "scheme" => out.scheme = Some(parse_scheme(value)?),
            "constraint" => out.constraint = Some(parse_constraint(value)?),
            "include_dse" => out.no_dse = Some(!parse_bool(value).with_context(ctx)?),
            "no_dse" => out.no_dse = Some(parse_bool(value).with_context(ctx)?),
            "seed" => out.seed = Some(value.parse().with_context(ctx)?),
            "oracle" => out.oracle = Some(parse_bool(value).with_context(ctx)?),
            "equilibration_fraction" => {
                out.equilibration_fraction = Some(value.parse().with_context(ctx)?)
            }
            "cholesky_tolerance" => out.cholesky_tolerance = Some(value.parse().with_context(ctx)?),
            "photon_occupation" => {
                out.photon_occupation = Some(
                    value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| s.trim().parse::<usize>().with_context(ctx))
                        .collect::<Result<_>>()?,
                )
            }
            "out_dir" => out.out_dir = Some(PathBuf::from(value)),
            other => bail!("line {}: unknown config key {other:?}", lineno + 1),
        }
    }
    if !modes.is_empty() {
        out.modes = Some(modes);
    }
    Ok(out)
}

pub fn parse_scheme(value: &str) -> Result<DecouplingScheme> {
    match value {
        "two" | "two_field" => Ok(DecouplingScheme::TwoField),
        "three" | "three_field" => Ok(DecouplingScheme::ThreeField),
        other => bail!("unknown scheme {other:?} (expected two or three)"),
    }
}

pub fn parse_constraint(value: &str) -> Result<Constraint> {
    match value {
        "free" => Ok(Constraint::Free),
        "phaseless" => Ok(Constraint::Phaseless),
        other => bail!("unknown constraint {other:?} (expected free or phaseless)"),
    }
}

fn parse_bool(value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => bail!("expected a boolean, got {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_roundtrip() {
        let text = "# a comment\nfixture = hubbard_dimer:1,4\nmode = omega=1.0 gdiag=0.1 nmax=5\n\
                    dtau = 0.01\nwalkers = 64\nscheme = three\nconstraint = free\nno_dse = true\n\
                    seed = 9\noracle = on\nout_dir = /tmp/x\n";
        let partial = parse_config_file(text).unwrap();
        let (config, out_dir) = partial.into_run_config().unwrap();
        assert_eq!(config.dtau, 0.01);
        assert_eq!(config.n_walkers, 64);
        assert_eq!(config.scheme, DecouplingScheme::ThreeField);
        assert_eq!(config.constraint, Constraint::Free);
        assert!(!config.include_dse);
        assert!(config.oracle);
        assert_eq!(config.seed, 9);
        assert_eq!(out_dir, PathBuf::from("/tmp/x"));
        match config.system {
            SystemSource::Fixture {
                ref name,
                ref params,
            } => {
                assert_eq!(name, "hubbard_dimer");
                assert_eq!(params, &vec![1.0, 4.0]);
            }
            _ => panic!("expected fixture"),
        }
    }

    #[test]
    fn flags_override_file() {
        let file =
            parse_config_file("fixture = single_level:-1,0.5\ndtau = 0.01\nseed = 1\n").unwrap();
        let flags = PartialConfig {
            dtau: Some(0.002),
            ..Default::default()
        };
        let (config, _) = file.overlay(flags).into_run_config().unwrap();
        assert_eq!(config.dtau, 0.002);
        assert_eq!(config.seed, 1);
    }

    #[test]
    fn bad_keys_and_values_rejected() {
        assert!(parse_config_file("frobnicate = 1\n").is_err());
        assert!(parse_config_file("dtau = fast\n").is_err());
        assert!(parse_mode_spec("omega=1.0").is_err());
        assert!(parse_fixture_spec("hubbard_dimer:one,4").is_err());
    }

    #[test]
    fn system_source_required() {
        assert!(PartialConfig::default().into_run_config().is_err());
    }
}
