use std::path::{Path, PathBuf};

use aeroroi::pipeline::{MethodSelection, PipelineConfig};
use clap::Args;
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

/// Options shared by every subcommand. Flags win over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Pipeline config file (TOML).
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Directory holding every artifact of the run.
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
    /// SIND, SIHC or BOTH.
    #[arg(short, long)]
    pub method: Option<MethodSelection>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sets a nested field, e.g. `sind.t_I=20` or `beamforming.loop_gain=0.8`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<PipelineConfig> {
        let mut table = match &self.config {
            Some(path) => read_table(path)?,
            None => Table::new(),
        };
        for item in &self.set {
            apply_override(&mut table, item)?;
        }
        if let Some(s) = &self.scenario {
            table.insert("scenario".into(), Value::String(s.display().to_string()));
        }
        if let Some(o) = &self.output_dir {
            table.insert("output_dir".into(), Value::String(o.display().to_string()));
        }
        if let Some(m) = self.method {
            table.insert("method".into(), Value::try_from(m).map_err(|e| CliError::Config(e.to_string()))?);
        }
        if let Some(seed) = self.seed {
            let seed = i64::try_from(seed).map_err(|_| CliError::Config(format!("seed {seed} exceeds the TOML integer range")))?;
            table.insert("seed".into(), Value::Integer(seed));
        }
        let cfg: PipelineConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_table(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))?;
    // paths inside the file are relative to the file
    let dir = path.parent().unwrap_or(Path::new(""));
    for key in ["scenario", "output_dir"] {
        if let Some(Value::String(s)) = table.get(key) {
            if Path::new(s).is_relative() {
                let joined = dir.join(s).display().to_string();
                table.insert(key.into(), Value::String(joined));
            }
        }
    }
    Ok(table)
}

fn apply_override(table: &mut Table, item: &str) -> CliResult<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad key {key:?} in --set")));
    }
    let value = parse_value(raw.trim());
    let mut node = table;
    for part in &path[..path.len() - 1] {
        node = match node.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new())) {
            Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("{key}: {part} is not a table"))),
        };
    }
    node.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

/// A TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_owned()))
}
