//! Command-line flags, the optional TOML config file, and their merge.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rdest::adapt::AdaptOptions;
use rdest::estimator::DEFAULT_DEPTH;
use rdest::mesh::{criss_cross_square, l_shape, load_mesh, two_triangle_square, Mesh};
use rdest::problem::{Preset, Problem};
use rdest::quadrature::DEFAULT_DEGREE;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "rdest", version, about = "Robust a posteriori error estimation for -Δu + κ²u = f")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Galerkin problem; writes solution.csv and summary.json.
    Solve(Flags),
    /// Solve and estimate; writes indicators.csv and summary.json.
    Estimate(Flags),
    /// Run the adaptive loop; writes adapt.csv, summary.json and final_mesh.txt.
    Adapt(Flags),
    /// Adaptive runs for several κ; writes study.csv and study.json.
    Study(Flags),
    /// Check identities and measure constants; writes verify.json. Exit 1 if an identity fails.
    Verify(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Self::Solve(f) | Self::Estimate(f) | Self::Adapt(f) | Self::Study(f) | Self::Verify(f) => f,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Mesh file, or `builtin:two-triangles|criss-cross|l-shape`.
    #[arg(long)]
    pub mesh: Option<String>,
    /// Right-hand side: sinsin, const1 or layer1d.
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Comma-separated list for study and verify.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub kappas: Option<Vec<f64>>,
    #[arg(long)]
    pub theta_mark: Option<f64>,
    #[arg(long)]
    pub max_dof: Option<usize>,
    #[arg(long)]
    pub quad_degree: Option<u32>,
    /// Subdivision depth of the local dual-norm problems.
    #[arg(long)]
    pub dual_depth: Option<u32>,
    /// Relative residual tolerance of the linear solver.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "rdest-out")]
    pub out: PathBuf,
    /// Seed for verify's random sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 picks automatically.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// TOML file with keys kappa, rhs, mesh, quad_degree, tol. Flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Either one value or a list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kappa: Option<OneOrMany>,
    pub rhs: Option<Preset>,
    pub mesh: Option<String>,
    pub quad_degree: Option<u32>,
    pub tol: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config file {}: {e}", path.display())))
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mesh_source: String,
    pub mesh: Mesh,
    pub preset: Preset,
    /// The first entry is the κ of single-κ commands.
    pub kappas: Vec<f64>,
    pub kappa_given: bool,
    pub theta_mark: f64,
    pub max_dof: usize,
    pub quad_degree: u32,
    pub depth: u32,
    pub tol: f64,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        // Relative mesh paths in a config file are relative to the file.
        let file_mesh = file.mesh.as_ref().map(|m| match (&flags.config, m.starts_with("builtin:")) {
            (Some(cfg), false) => cfg.parent().unwrap_or(Path::new("")).join(m).display().to_string(),
            _ => m.clone(),
        });
        let mesh_source = flags.mesh.clone().or(file_mesh).unwrap_or_else(|| "builtin:criss-cross".into());
        let mesh = load_source(&mesh_source)?;

        let kappas = match (&flags.kappas, flags.kappa, &file.kappa) {
            (Some(list), _, _) => Some(list.clone()),
            (None, Some(k), _) => Some(vec![k]),
            (None, None, Some(OneOrMany::One(k))) => Some(vec![*k]),
            (None, None, Some(OneOrMany::Many(list))) => Some(list.clone()),
            (None, None, None) => None,
        };
        let kappa_given = kappas.is_some();
        let kappas = kappas.unwrap_or_else(|| vec![1.0]);
        if kappas.is_empty() {
            return Err(CliError::Usage("empty κ list".into()));
        }
        let preset = flags.preset.or(file.rhs).unwrap_or(Preset::SinSin);
        let quad_degree = flags.quad_degree.or(file.quad_degree).unwrap_or(DEFAULT_DEGREE);
        for &k in &kappas {
            Problem::with_degree(k, preset, quad_degree).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        let tol = flags.tol.or(file.tol).unwrap_or(AdaptOptions::default().solver_tol);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Usage(format!("solver tolerance must lie in (0, 1), got {tol}")));
        }
        let theta_mark = flags.theta_mark.unwrap_or(AdaptOptions::default().theta_mark);
        if !(theta_mark > 0.0 && theta_mark < 1.0) {
            return Err(CliError::Usage(format!("--theta-mark must lie in (0, 1), got {theta_mark}")));
        }
        let depth = flags.dual_depth.unwrap_or(DEFAULT_DEPTH);
        if depth > 6 {
            return Err(CliError::Usage(format!("--dual-depth {depth} is too large (at most 6)")));
        }
        Ok(Self {
            mesh_source,
            mesh,
            preset,
            kappas,
            kappa_given,
            theta_mark,
            max_dof: flags.max_dof.unwrap_or(AdaptOptions::default().max_dof),
            quad_degree,
            depth,
            tol,
            out: flags.out.clone(),
            seed: flags.seed,
        })
    }

    pub fn problem(&self, kappa: f64) -> Problem {
        Problem::with_degree(kappa, self.preset, self.quad_degree).expect("validated in resolve")
    }

    pub fn adapt_options(&self) -> AdaptOptions {
        AdaptOptions {
            theta_mark: self.theta_mark,
            max_dof: self.max_dof,
            depth: self.depth,
            solver_tol: self.tol,
            ..AdaptOptions::default()
        }
    }
}

fn load_source(source: &str) -> Result<Mesh, CliError> {
    match source.strip_prefix("builtin:") {
        Some("two-triangles") => Ok(two_triangle_square()),
        Some("criss-cross") => Ok(criss_cross_square(2)),
        Some("l-shape") => Ok(l_shape(2)),
        Some(other) => Err(CliError::Usage(format!(
            "unknown built-in mesh `{other}` (expected two-triangles, criss-cross or l-shape)"
        ))),
        None => load_mesh(source).map_err(|e| match e {
            rdest::mesh::MeshError::Io { .. } => CliError::Usage(e.to_string()),
            e => CliError::Usage(format!("invalid mesh file {source}: {e}")),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(args: &[&str]) -> Flags {
        let mut all = vec!["rdest", "solve"];
        all.extend_from_slice(args);
        Cli::try_parse_from(all).unwrap().command.flags().clone()
    }

    #[test]
    fn config_accepts_scalar_or_list_kappa() {
        let one: FileConfig = toml::from_str("kappa = 3.0\nrhs = \"const1\"").unwrap();
        assert!(matches!(one.kappa, Some(OneOrMany::One(k)) if k == 3.0));
        assert_eq!(one.rhs, Some(Preset::Const1));
        let many: FileConfig = toml::from_str("kappa = [1.0, 100.0]").unwrap();
        assert!(matches!(many.kappa, Some(OneOrMany::Many(v)) if v == [1.0, 100.0]));
        assert!(toml::from_str::<FileConfig>("kapa = 1.0").is_err());
    }

    #[test]
    fn defaults_and_validation() {
        let cfg = RunConfig::resolve(&flags(&[])).unwrap();
        assert_eq!((cfg.kappas.as_slice(), cfg.kappa_given, cfg.preset), (&[1.0][..], false, Preset::SinSin));
        assert_eq!(cfg.mesh.num_elements(), 16);
        let cfg = RunConfig::resolve(&flags(&["--kappas", "1,1e2", "--kappa", "5"])).unwrap();
        assert_eq!(cfg.kappas, vec![1.0, 100.0]);
        for bad in [&["--kappa", "0"][..], &["--tol", "2"], &["--dual-depth", "9"], &["--quad-degree", "99"]] {
            assert!(matches!(RunConfig::resolve(&flags(bad)), Err(CliError::Usage(_))), "{bad:?}");
        }
    }
}
