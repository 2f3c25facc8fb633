//! Run configuration: defaults, then a TOML file, then `--section.key value`
//! flags. A top-level `seed` fills every module seed the user left unset.

use std::path::{Path, PathBuf};

use primasm_core::metrics::EvalConfig;
use primasm_core::synthetic::GeneratorConfig;
use primasm_model::{ModelConfig, SamplingConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{io_error, CliError, Kind, Result};

pub const SECTIONS: [&str; 6] = ["model", "train", "data", "sampling", "eval", "paths"];

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "PRIMASM_OUT";

/// Module seeds filled from the top-level seed.
const SEED_PATHS: [&[&str]; 5] = [
    &["model", "init_seed"],
    &["train", "seed"],
    &["data", "generator", "seed"],
    &["sampling", "seed"],
    &["eval", "seed"],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Training records written by gen-data.
    pub count: usize,
    /// Additional held-out records.
    pub val_count: usize,
    /// Surface points per record.
    pub points: usize,
    pub generator: GeneratorConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { count: 1000, val_count: 0, points: 2048, generator: GeneratorConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: DataConfig,
    pub sampling: SamplingConfig,
    pub eval: EvalConfig,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.sampling.validate()?;
        self.eval.validate()?;
        self.data.generator.validate()?;
        if self.data.points == 0 {
            return Err(CliError::validation("data.points must be positive"));
        }
        Ok(())
    }

    pub fn require_seed(&self, command: &str) -> Result<u64> {
        self.seed
            .ok_or_else(|| CliError::validation(format!("{command} needs a seed (--seed or `seed` in the config file)")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Parses an override value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn insert(table: &mut Table, path: &[&str], value: Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty key path");
    let mut cur = table;
    for (i, key) in parents.iter().enumerate() {
        let entry = cur.entry(key.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| {
            CliError::validation(format!("`{}` is not a section", path[..=i].join(".")))
        })?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn contains(table: &Table, path: &[&str]) -> bool {
    let (last, parents) = path.split_last().expect("non-empty key path");
    let mut cur = table;
    for key in parents {
        match cur.get(*key).and_then(Value::as_table) {
            Some(t) => cur = t,
            None => return false,
        }
    }
    cur.contains_key(*last)
}

fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// A dotted key and its raw value.
pub type Override = (String, String);

/// Splits `--section.key value` and `--section.key=value` pairs out of `args`.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<Override>)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let key = flag.split('=').next().unwrap_or_default();
        let dotted = key.split_once('.').is_some_and(|(s, _)| SECTIONS.contains(&s));
        if !dotted {
            rest.push(arg);
            continue;
        }
        match flag.split_once('=') {
            Some((k, v)) => overrides.push((k.to_string(), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::validation(format!("--{key} needs a value")))?;
                overrides.push((key.to_string(), v));
            }
        }
    }
    Ok((rest, overrides))
}

/// Builds the effective configuration.
pub fn load(file: Option<&Path>, seed: Option<u64>, overrides: &[Override]) -> Result<RunConfig> {
    let mut user = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            text.parse::<Table>()
                .map_err(|e| CliError::new(Kind::Parse, format!("{}: {}", path.display(), e.to_string().trim())))?
        }
        None => Table::new(),
    };
    for (key, raw) in overrides {
        let path: Vec<&str> = key.split('.').collect();
        if path.iter().any(|k| k.is_empty()) {
            return Err(CliError::validation(format!("malformed key `{key}`")));
        }
        insert(&mut user, &path, parse_value(raw))?;
    }
    if let Some(s) = seed {
        user.insert("seed".into(), Value::Integer(s as i64));
    }
    if let Some(s) = user.get("seed").cloned() {
        for path in SEED_PATHS {
            if !contains(&user, path) {
                insert(&mut user, path, s.clone())?;
            }
        }
    }
    let mut merged = Table::try_from(RunConfig::default()).expect("defaults serialize");
    merge(&mut merged, user);
    let cfg: RunConfig = serde_path_to_error::deserialize(Value::Table(merged)).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        CliError::validation(format!("{path}: {}", inner.lines().next().unwrap_or_default().trim()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Output directory: `--out`, else `paths.out`, else `$PRIMASM_OUT/<command>`,
/// else `runs/<command>`.
pub fn output_dir(flag: Option<&Path>, cfg: &RunConfig, command: &str) -> PathBuf {
    if let Some(p) = flag.or(cfg.paths.out.as_deref()) {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(command),
        _ => PathBuf::from("runs").join(command),
    }
}

/// Creates `dir` and writes the effective configuration into it.
pub fn prepare_output(dir: &Path, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join("config.effective.toml");
    std::fs::write(&path, cfg.to_toml()).map_err(|e| io_error(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(a: &[&str]) -> Vec<String> {
        a.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overrides_are_split_from_flags() {
        let (rest, ov) =
            extract_overrides(args(&["train", "--model.layers", "2", "--seed", "3", "--train.weights.cd=0.5"])).unwrap();
        assert_eq!(rest, args(&["train", "--seed", "3"]));
        assert_eq!(ov, vec![("model.layers".into(), "2".into()), ("train.weights.cd".into(), "0.5".into())]);
        assert!(extract_overrides(args(&["--model.layers"])).is_err());
    }

    #[test]
    fn precedence_and_seed_fill() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        std::fs::write(&file, "seed = 9\n[model]\nlayers = 3\nhidden_size = 64\n[train]\nseed = 1\n").unwrap();
        let cfg = load(Some(&file), None, &[("model.layers".into(), "2".into())]).unwrap();
        assert_eq!(cfg.model.layers, 2);
        assert_eq!(cfg.model.hidden_size, 64);
        assert_eq!(cfg.model.attention_heads, 4);
        assert_eq!(cfg.model.init_seed, 9);
        assert_eq!(cfg.train.seed, 1);
        assert_eq!(cfg.data.generator.seed, 9);
        let flagged = load(Some(&file), Some(5), &[]).unwrap();
        assert_eq!(flagged.seed, Some(5));
        assert_eq!(flagged.sampling.seed, 5);
        // the round trip of the echoed file reproduces the configuration
        let echo = dir.path().join("e.toml");
        std::fs::write(&echo, cfg.to_toml()).unwrap();
        assert_eq!(load(Some(&echo), None, &[]).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let e = load(None, None, &[("model.layerz".into(), "2".into())]).unwrap_err();
        assert_eq!(e.kind, Kind::Validation);
        assert!(e.message.contains("model"), "{}", e.message);
        assert!(e.message.contains("layerz"), "{}", e.message);
        let e = load(None, None, &[("train.weights.xx".into(), "1".into())]).unwrap_err();
        assert!(e.message.contains("train.weights"), "{}", e.message);
    }

    #[test]
    fn invalid_values_are_validation_errors() {
        let e = load(None, None, &[("model.hidden_size".into(), "30".into())]).unwrap_err();
        assert_eq!(e.kind, Kind::Validation);
        let e = load(None, None, &[("train.learning_rate".into(), "oops".into())]).unwrap_err();
        assert_eq!(e.kind, Kind::Validation);
    }

    #[test]
    fn file_errors_have_distinct_kinds() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(load(Some(&dir.path().join("none.toml")), None, &[]).unwrap_err().kind, Kind::NotFound);
        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, "[model\nlayers = ").unwrap();
        assert_eq!(load(Some(&bad), None, &[]).unwrap_err().kind, Kind::Parse);
    }
}
