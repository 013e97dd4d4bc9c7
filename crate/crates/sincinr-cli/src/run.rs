//! Per-run plumbing: parameter resolution, atomic output files, manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const EXIT_DATA: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<sincinr::Error> for CliError {
    fn from(e: sincinr::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Flag,
    Config,
    Default,
}

impl Source {
    fn as_str(self) -> &'static str {
        match self {
            Source::Flag => "flag",
            Source::Config => "config",
            Source::Default => "default",
        }
    }
}

/// Resolves parameters as flag > config file > default and records where
/// each value came from.
pub struct Run {
    subcommand: String,
    config: Map<String, Value>,
    config_path: Option<PathBuf>,
    resolved: BTreeMap<String, (Value, Source)>,
    out_dir: PathBuf,
    outputs: Vec<String>,
}

impl Run {
    pub fn new(
        subcommand: &str,
        out_dir: Option<PathBuf>,
        config_path: Option<PathBuf>,
    ) -> CliResult<Self> {
        let config = match &config_path {
            None => Map::new(),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(usage("config file must hold a JSON object")),
                    Err(e) => return Err(usage(format!("config {}: {e}", p.display()))),
                }
            }
        };
        let mut run = Self {
            subcommand: subcommand.to_string(),
            config,
            config_path,
            resolved: BTreeMap::new(),
            out_dir: PathBuf::new(),
            outputs: Vec::new(),
        };
        run.out_dir = run.get("out-dir", out_dir, PathBuf::from("sincinr-out"))?;
        Ok(run)
    }

    pub fn get<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> CliResult<T> {
        match self.get_opt(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default, Source::Default);
                Ok(default)
            }
        }
    }

    /// Like [`get`](Self::get) with no default; unresolved keys are recorded as null.
    pub fn get_opt<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> CliResult<Option<T>> {
        if let Some(v) = flag {
            self.record(key, &v, Source::Flag);
            return Ok(Some(v));
        }
        if let Some(raw) = self.config.get(key) {
            let v: T = serde_json::from_value(raw.clone())
                .map_err(|e| usage(format!("config key {key:?}: {e}")))?;
            self.record(key, &v, Source::Config);
            return Ok(Some(v));
        }
        self.resolved
            .insert(key.to_string(), (Value::Null, Source::Default));
        Ok(None)
    }

    pub fn require<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> CliResult<T> {
        self.get_opt(key, flag)?
            .ok_or_else(|| usage(format!("--{key} is required (flag or config key)")))
    }

    fn record<T: Serialize>(&mut self, key: &str, v: &T, source: Source) {
        let value = serde_json::to_value(v).unwrap_or(Value::Null);
        self.resolved.insert(key.to_string(), (value, source));
    }

    /// Writes `name` under the output directory through a temporary file.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json`: resolved parameters with their sources, the
    /// output list, the source revision and a timestamp.
    pub fn finish(mut self) -> CliResult<()> {
        let resolved: Map<String, Value> = self
            .resolved
            .iter()
            .map(|(k, (v, s))| (k.clone(), json!({ "value": v, "source": s.as_str() })))
            .collect();
        let unused: Vec<&String> = self
            .config
            .keys()
            .filter(|k| !self.resolved.contains_key(*k))
            .collect();
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = json!({
            "subcommand": self.subcommand,
            "configFile": self.config_path.as_ref().map(|p| p.display().to_string()),
            "parameters": resolved,
            "unusedConfigKeys": unused,
            "outputs": self.outputs,
            "gitDescribe": git_describe(),
            "crateVersion": env!("CARGO_PKG_VERSION"),
            "timestampUnix": timestamp,
        });
        self.write_json("manifest.json", &manifest)?;
        Ok(())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}
