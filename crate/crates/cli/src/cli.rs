use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Generate, solve and analyse minimal tubes.
#[derive(Debug, Parser)]
#[command(name = "mintube", version, about)]
pub struct Cli {
    /// Directory for all output files.
    #[arg(
        long,
        global = true,
        env = "MINTUBE_OUT_DIR",
        default_value = "mintube-out"
    )]
    pub out: PathBuf,

    /// Suppress progress and check lines on stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Triangulate a catenoid band and analyse it.
    Catenoid(CatenoidArgs),
    /// Tabulate life-times of higher-dimensional catenoids.
    Ncatenoid(NcatenoidArgs),
    /// Solve for a minimal annulus between two horizontal circles.
    SolveAnnulus(AnnulusArgs),
    /// Analyse a triangle mesh read from an OBJ file.
    Analyze(AnalyzeArgs),
    /// Solve and analyse annuli over a list of circle offsets.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verify {
    /// Report measurements only.
    None,
    /// Evaluate every check; exit non-zero if any fails.
    All,
}

/// Grid resolution written `NUxNV`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Resolution {
    pub nu: usize,
    pub nv: usize,
}

impl Resolution {
    pub fn doubled(self) -> Self {
        Self {
            nu: 2 * self.nu,
            nv: 2 * self.nv,
        }
    }
}

pub fn parse_resolution(s: &str) -> Result<Resolution, String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NUxNV, got {s:?}"))?;
    let nu = a.trim().parse().map_err(|_| format!("bad NU in {s:?}"))?;
    let nv = b.trim().parse().map_err(|_| format!("bad NV in {s:?}"))?;
    Ok(Resolution { nu, nv })
}

/// Ambient dimensions to tabulate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Dimensions(pub Vec<usize>);

/// Inclusive range `A..B` or a single value.
pub fn parse_dimensions(s: &str) -> Result<Dimensions, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad dimension {t:?}"))
    };
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty range {s:?}"));
            }
            Ok(Dimensions((a..=b).collect()))
        }
        None => Ok(Dimensions(vec![parse(s)?])),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CatenoidArgs {
    /// Neck radius.
    #[arg(long)]
    pub a: f64,
    /// Axial extent of the band.
    #[arg(long, num_args = 2, value_names = ["V_MIN", "V_MAX"], allow_negative_numbers = true, default_values_t = [-1.0, 1.0])]
    pub v: Vec<f64>,
    #[arg(long, value_parser = parse_resolution, default_value = "256x128")]
    pub res: Resolution,
    /// Slice levels; defaults to the quarter, half and three-quarter heights.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub levels: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Verify::None)]
    pub verify: Verify,
}

#[derive(Debug, Args, Serialize)]
pub struct NcatenoidArgs {
    /// Ambient dimensions, e.g. `4..7` or `5`.
    #[arg(long, value_parser = parse_dimensions)]
    pub n: Dimensions,
    /// Neck radius.
    #[arg(long, default_value_t = 1.0)]
    pub f0: f64,
    /// Radii, in units of the neck, at which the half-height is sampled.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 100.0, 1000.0])]
    pub caps: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AnnulusArgs {
    /// Radii of the lower and upper circle.
    #[arg(long, num_args = 2, value_names = ["R0", "R1"], default_values_t = [1.0, 1.0])]
    pub r: Vec<f64>,
    /// Heights of the lower and upper circle.
    #[arg(long, num_args = 2, value_names = ["T1", "T2"], allow_negative_numbers = true, default_values_t = [0.0, 1.0])]
    pub heights: Vec<f64>,
    /// Shift of the upper circle along x₁.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub offset: f64,
    #[arg(long, value_parser = parse_resolution, default_value = "64x32")]
    pub res: Resolution,
    /// Number of evenly spaced interior slice levels.
    #[arg(long, default_value_t = 10)]
    pub slices: usize,
    #[arg(long, default_value_t = 50_000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = Verify::None)]
    pub verify: Verify,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// OBJ file to read.
    #[arg(long)]
    pub mesh: PathBuf,
    /// Slice levels; defaults to five evenly spaced interior levels.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub levels: Vec<f64>,
    /// Seed for the random directions used in the identity checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Verify::None)]
    pub verify: Verify,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Offsets of the upper circle.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub offsets: Vec<f64>,
    #[arg(long, num_args = 2, value_names = ["R0", "R1"], default_values_t = [1.0, 1.0])]
    pub r: Vec<f64>,
    #[arg(long, num_args = 2, value_names = ["T1", "T2"], allow_negative_numbers = true, default_values_t = [0.0, 1.0])]
    pub heights: Vec<f64>,
    #[arg(long, value_parser = parse_resolution, default_value = "32x16")]
    pub res: Resolution,
    #[arg(long, default_value_t = 10)]
    pub slices: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_parsing() {
        assert_eq!(
            parse_resolution("256x128").unwrap(),
            Resolution { nu: 256, nv: 128 }
        );
        assert!(parse_resolution("256").is_err());
        assert!(parse_resolution("ax3").is_err());
    }

    #[test]
    fn dimension_parsing() {
        assert_eq!(parse_dimensions("4..7").unwrap().0, vec![4, 5, 6, 7]);
        assert_eq!(parse_dimensions("4..=5").unwrap().0, vec![4, 5]);
        assert_eq!(parse_dimensions("3").unwrap().0, vec![3]);
        assert!(parse_dimensions("7..4").is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn lists_may_start_negative() {
        let cli = Cli::try_parse_from(["mintube", "sweep", "--offsets", "-0.3,0,0.3"]).unwrap();
        let Command::Sweep(args) = cli.command else {
            panic!()
        };
        assert_eq!(args.offsets, vec![-0.3, 0.0, 0.3]);
    }
}
