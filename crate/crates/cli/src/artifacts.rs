//! Versioned files written only by the command-line tool.

use serde::{Deserialize, Serialize};

use mglda::persist::FORMAT_VERSION;
use mglda::ranker::RankerModel;
use mglda::synth::{GroundTruth, MgldaSynthConfig, ReviewSynthConfig};
use mglda::{Error, Result};

fn check(found: u32) -> Result<()> {
    if found == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::FormatVersion {
            found,
            expected: FORMAT_VERSION,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SynthTruth {
    Mglda {
        config: MgldaSynthConfig,
        #[serde(flatten)]
        truth: GroundTruth,
    },
    Reviews {
        config: ReviewSynthConfig,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthTruthFile {
    pub format_version: u32,
    pub seed: u64,
    #[serde(flatten)]
    pub truth: SynthTruth,
}

impl SynthTruthFile {
    pub fn from_json(s: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(s)?;
        check(file.format_version)?;
        Ok(file)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankerFile {
    pub format_version: u32,
    /// Name of the evaluation row this ranker produced.
    pub method: String,
    pub ranker: RankerModel<f64>,
}

impl RankerFile {
    pub fn from_json(s: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(s)?;
        check(file.format_version)?;
        Ok(file)
    }
}

/// First line of every TSV and CSV report.
pub fn report_header() -> String {
    format!("# format_version={FORMAT_VERSION}\n")
}

/// Rejects a report whose first line does not carry the current version.
pub fn check_report(text: &str) -> Result<&str> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let found = first
        .strip_prefix("# format_version=")
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| Error::Invalid("report has no format_version line".into()))?;
    check(found)?;
    Ok(rest)
}
