use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use aeroroi::metrics::GroundTruth;
use aeroroi::model::{read_parts_csv, ArrayGeometry, FocusGrid, IdentificationResult, MeasurementConfig, Method, SourcePartSet};
use aeroroi::synth::{read_csm, CrossSpectralMatrix};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Array, grid and flow configurations shared by every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub seed: u64,
    pub geometry: ArrayGeometry,
    pub grid: FocusGrid,
    pub configs: Vec<MeasurementConfig>,
}

/// File names under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.json")
    }

    pub fn truth(&self) -> PathBuf {
        self.root.join("truth.json")
    }

    pub fn csm(&self, config_id: usize) -> PathBuf {
        self.root.join("csm").join(format!("config_{config_id}.csm"))
    }

    pub fn floor_csm(&self, config_id: usize) -> PathBuf {
        self.root.join("csm").join(format!("floor_{config_id}.csm"))
    }

    pub fn parts(&self) -> PathBuf {
        self.root.join("parts.csv")
    }

    fn per_method(&self, prefix: &str, method: Method, ext: &str) -> PathBuf {
        self.root.join(format!("{prefix}_{}.{ext}", method.as_str().to_ascii_lowercase()))
    }

    pub fn result(&self, method: Method) -> PathBuf {
        self.per_method("result", method, "json")
    }

    pub fn spectra(&self, method: Method) -> PathBuf {
        self.per_method("spectra", method, "csv")
    }

    pub fn roi(&self, method: Method) -> PathBuf {
        self.per_method("roi", method, "json")
    }

    pub fn evaluation_csv(&self, method: Method) -> PathBuf {
        self.per_method("evaluation", method, "csv")
    }

    pub fn evaluation_json(&self, method: Method) -> PathBuf {
        self.per_method("evaluation", method, "json")
    }

    pub fn read_dataset(&self) -> CliResult<DatasetInfo> {
        read_json(&self.dataset())
    }

    pub fn read_truth(&self) -> CliResult<GroundTruth> {
        read_json(&self.truth())
    }

    pub fn read_csms(&self, n: usize) -> CliResult<Vec<CrossSpectralMatrix>> {
        (0..n)
            .map(|c| {
                let path = self.csm(c);
                let f = File::open(&path).map_err(|e| missing(&path, e))?;
                read_csm(BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
            })
            .collect()
    }

    pub fn read_parts(&self, info: &DatasetInfo) -> CliResult<SourcePartSet> {
        let path = self.parts();
        let f = File::open(&path).map_err(|e| missing(&path, e))?;
        read_parts_csv(BufReader::new(f), info.grid.clone(), info.configs.clone())
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn read_result(&self, method: Method) -> CliResult<IdentificationResult> {
        read_json(&self.result(method))
    }
}

fn missing(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("cannot open {}: {e}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let f = File::open(path).map_err(|e| missing(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let f = create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(f), value).map_err(aeroroi::Error::from)?;
    Ok(())
}

pub fn create(path: &Path) -> CliResult<File> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(aeroroi::Error::from)?;
    }
    Ok(File::create(path).map_err(aeroroi::Error::from)?)
}
