//! Batch front end for the BIMA/NOMA simulator: config loading, sweeps with
//! analytic and simulated curves side by side, feasibility and complexity
//! reports, and the bundled reproduction recipes.

pub mod config;
mod error;
pub mod recipes;
pub mod report;
pub mod sweep;

pub use error::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_LOW_CONFIDENCE: i32 = 3;

/// Artifact version stamped into every output file.
pub const VERSION: &str = concat!("bima-cli ", env!("CARGO_PKG_VERSION"));

/// Provenance shared by every file of one run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Stamp {
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub interleaver_seed: u64,
}

impl Stamp {
    pub fn of(exp: &config::Experiment) -> Self {
        Stamp {
            version: VERSION,
            config_sha256: exp.config_sha256.clone(),
            seed: exp.seed,
            interleaver_seed: exp.scenario.interleaver_seed,
        }
    }

    /// `# key = value` comment lines for CSV headers.
    pub fn comment_lines(&self) -> String {
        format!(
            "# version = {}\n# config_sha256 = {}\n# seed = {}\n# interleaver_seed = {}\n",
            self.version, self.config_sha256, self.seed, self.interleaver_seed
        )
    }

    pub fn markdown_comment(&self) -> String {
        format!(
            "<!-- {} config_sha256={} seed={} interleaver_seed={} -->\n",
            self.version, self.config_sha256, self.seed, self.interleaver_seed
        )
    }
}
