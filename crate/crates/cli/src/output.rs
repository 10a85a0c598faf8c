//! Failure reporting, parameter resolution and atomic output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mssp_core::calibration::CalibrationReport;
use mssp_core::metrics::CcParams;
use mssp_core::preference::{ChoiceModelParams, RtModelParams};

#[derive(Debug)]
pub struct Failure {
    pub class: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            class: "usage",
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.class {
            "usage" => 2,
            "budget" => 4,
            "calibration" => 5,
            _ => 3,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "class": self.class, "message": self.message } }).to_string()
    }
}

impl From<mssp_core::Error> for Failure {
    fn from(e: mssp_core::Error) -> Self {
        Self {
            class: e.class(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        mssp_core::Error::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        mssp_core::Error::from(e).into()
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| {
        mssp_core::Error::Malformed(format!("{}: {e}", path.display())).into()
    })
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes every file to a sibling temporary first and renames only once all
/// writes succeeded. Without a path the bytes go to stdout.
pub fn emit(outputs: &[(Option<&Path>, Vec<u8>)]) -> CliResult<()> {
    let mut staged: Vec<(PathBuf, &Path)> = Vec::new();
    let result = (|| {
        for (path, bytes) in outputs {
            match path {
                None => std::io::stdout().write_all(bytes)?,
                Some(p) => {
                    let name = p
                        .file_name()
                        .ok_or_else(|| Failure::usage(format!("{} is not a file path", p.display())))?;
                    let tmp = p.with_file_name(format!(
                        ".{}.tmp{}",
                        name.to_string_lossy(),
                        std::process::id()
                    ));
                    fs::write(&tmp, bytes)?;
                    staged.push((tmp, p));
                }
            }
        }
        for (tmp, p) in &staged {
            fs::rename(tmp, p)?;
        }
        Ok(())
    })();
    if result.is_err() {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result
}

fn preset_or_file<T, F>(spec: &str, preset: F, what: &str) -> CliResult<T>
where
    T: for<'de> Deserialize<'de>,
    F: Fn(&str) -> Option<T>,
{
    if let Some(p) = preset(spec) {
        return Ok(p);
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(Failure::usage(format!(
            "{what} {spec:?} is neither a preset (confirmatory, exploratory) nor a file"
        )));
    }
    read_json(path)
}

/// CC parameters from a preset, a parameter file or a calibration report.
pub fn cc_params(spec: &str) -> CliResult<CcParams> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum CcSource {
        Params(CcParams),
        Report(CalibrationReport),
    }
    let params = match preset_or_file(spec, |s| CcParams::preset(s).map(CcSource::Params), "--cc-params")? {
        CcSource::Params(p) => p,
        CcSource::Report(r) => r.best().params,
    };
    params.validate()?;
    Ok(params)
}

pub fn choice_params(spec: &str) -> CliResult<ChoiceModelParams> {
    let p: ChoiceModelParams = preset_or_file(spec, ChoiceModelParams::preset, "--choice-params")?;
    p.validate()?;
    Ok(p)
}

pub fn rt_params(spec: &str) -> CliResult<RtModelParams> {
    preset_or_file(spec, RtModelParams::preset, "--rt-params")
}
