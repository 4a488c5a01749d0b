//! Experiment configuration: a JSON file mirroring the run parameters,
//! plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use szego_core::diagnostics::TestFunction;
use szego_core::multiindex::truncation_rank;
use szego_core::operator::{
    load_symbol_file, CompactPerturbation, HermitianSymbol, SymmetryMode, WeightFamily,
};

use crate::error::CliError;

/// Truncation sizes used when the config does not pin its own cutoffs; the
/// schedule is clipped to the operator size cap per dimension.
pub const DEFAULT_SCHEDULE: [u32; 8] = [2, 4, 8, 12, 16, 24, 32, 40];

pub const DEFAULT_MAX_RANK: usize = 5_000;
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
pub const DEFAULT_GAP_THRESHOLD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceSpec {
    DruryArveson,
    Bergman { a: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestFunctionSpec {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "x^2")]
    XSquared,
    #[serde(rename = "x^3")]
    XCubed,
    #[serde(rename = "x^4")]
    XFourth,
    #[serde(rename = "log")]
    Log,
    #[serde(rename = "polynomial")]
    Polynomial(Vec<f64>),
}

impl TestFunctionSpec {
    pub fn to_function(&self) -> TestFunction {
        match self {
            TestFunctionSpec::X => TestFunction::Power(1),
            TestFunctionSpec::XSquared => TestFunction::Power(2),
            TestFunctionSpec::XCubed => TestFunction::Power(3),
            TestFunctionSpec::XFourth => TestFunction::Power(4),
            TestFunctionSpec::Log => TestFunction::Log,
            TestFunctionSpec::Polynomial(coeffs) => TestFunction::Polynomial(coeffs.clone()),
        }
    }
}

fn default_test_function() -> TestFunctionSpec {
    TestFunctionSpec::X
}

fn default_mc_samples() -> usize {
    DEFAULT_MC_SAMPLES
}

fn default_gap_threshold() -> f64 {
    DEFAULT_GAP_THRESHOLD
}

fn default_max_rank() -> usize {
    DEFAULT_MAX_RANK
}

/// On-disk shape of the config file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    space: SpaceSpec,
    dimension: usize,
    #[serde(default)]
    cutoffs: Option<Vec<u32>>,
    symbol: PathBuf,
    #[serde(default = "default_test_function")]
    test_function: TestFunctionSpec,
    #[serde(default = "default_mc_samples")]
    mc_samples: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default = "default_gap_threshold")]
    gap_threshold: f64,
    #[serde(default)]
    strict_symmetry: bool,
    #[serde(default = "default_max_rank")]
    max_rank: usize,
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub max_rank: Option<usize>,
}

/// A fully resolved experiment configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub space: SpaceSpec,
    pub dimension: usize,
    pub cutoffs: Vec<u32>,
    pub symbol_path: PathBuf,
    pub test_function: TestFunction,
    pub mc_samples: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub gap_threshold: f64,
    pub strict_symmetry: bool,
    pub max_rank: usize,
    /// SHA-256 of the raw config file bytes, for report provenance.
    pub config_hash: String,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let file: ConfigFile = serde_json::from_slice(&bytes).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: format!("line {}, column {}: {}", e.line(), e.column(), e),
        })?;
        let config_hash = {
            let digest = Sha256::digest(&bytes);
            digest.iter().map(|b| format!("{b:02x}")).collect::<String>()
        };

        let reject = |message: String| -> CliError {
            CliError::Config {
                path: path.to_path_buf(),
                message,
            }
        };

        if file.dimension == 0 {
            return Err(reject("dimension must be >= 1".into()));
        }
        if let SpaceSpec::Bergman { a } = file.space {
            if !(a > -1.0) {
                return Err(reject(format!("bergman parameter must be > -1, got {a}")));
            }
        }
        if !(file.gap_threshold > 0.0) {
            return Err(reject("gap_threshold must be positive".into()));
        }
        if file.test_function == TestFunctionSpec::Log && file.mc_samples < 1000 {
            return Err(reject(
                "mc_samples must be >= 1000 for the non-polynomial test function log".into(),
            ));
        }
        if file.mc_samples == 0 {
            return Err(reject("mc_samples must be >= 1".into()));
        }

        let max_rank = overrides.max_rank.unwrap_or(file.max_rank);
        let cutoffs = match &file.cutoffs {
            Some(list) => {
                if list.is_empty() {
                    return Err(reject("cutoffs must be nonempty".into()));
                }
                if list.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(reject("cutoffs must be strictly increasing".into()));
                }
                list.clone()
            }
            None => default_schedule(file.dimension, max_rank)
                .ok_or_else(|| reject("no default cutoff fits under max_rank".into()))?,
        };

        // The symbol path is resolved relative to the config file location.
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let symbol_path = if file.symbol.is_absolute() {
            file.symbol.clone()
        } else {
            base.join(&file.symbol)
        };
        let output_dir = overrides
            .out
            .clone()
            .or_else(|| file.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));

        Ok(ExperimentConfig {
            space: file.space,
            dimension: file.dimension,
            cutoffs,
            symbol_path,
            test_function: file.test_function.to_function(),
            mc_samples: file.mc_samples,
            seed: overrides.seed.unwrap_or(file.seed),
            output_dir,
            gap_threshold: file.gap_threshold,
            strict_symmetry: file.strict_symmetry,
            max_rank,
            config_hash,
        })
    }

    pub fn weight_family(&self) -> Result<WeightFamily, CliError> {
        Ok(match self.space {
            SpaceSpec::DruryArveson => WeightFamily::drury_arveson(self.dimension),
            SpaceSpec::Bergman { a } => WeightFamily::bergman(self.dimension, a)?,
        })
    }

    pub fn symmetry_mode(&self) -> SymmetryMode {
        if self.strict_symmetry {
            SymmetryMode::Strict
        } else {
            SymmetryMode::AutoComplete
        }
    }

    /// Loads the symbol file and labels the symbol after the file stem.
    pub fn load_symbol(
        &self,
    ) -> Result<(HermitianSymbol, Option<CompactPerturbation>), CliError> {
        let (mut symbol, perturbation) =
            load_symbol_file(&self.symbol_path, self.symmetry_mode())?;
        if symbol.dimension() != self.dimension {
            return Err(CliError::Config {
                path: self.symbol_path.clone(),
                message: format!(
                    "symbol dimension {} does not match config dimension {}",
                    symbol.dimension(),
                    self.dimension
                ),
            });
        }
        if let Some(stem) = self.symbol_path.file_stem().and_then(|s| s.to_str()) {
            symbol.set_label(stem);
        }
        Ok((symbol, perturbation))
    }
}

/// The default cutoff schedule for a dimension, clipped so that every
/// truncation stays under the rank cap.
pub fn default_schedule(dimension: usize, max_rank: usize) -> Option<Vec<u32>> {
    let schedule: Vec<u32> = DEFAULT_SCHEDULE
        .iter()
        .copied()
        .filter(|&n| truncation_rank(dimension, n) <= max_rank.into())
        .collect();
    (!schedule.is_empty()).then_some(schedule)
}
