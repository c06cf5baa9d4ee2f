//! Layered settings: built-in defaults, then a TOML file, then `--set`
//! overrides, then explicit flags.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use crate::CliError;

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// TOML file with settings for this command (flat table of keys)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Override one setting, e.g. `--set pop=20000`; may be repeated
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Output directory (created if missing)
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

/// Settings types implement this to check cross-field constraints.
pub trait Validate {
    fn validate(&self) -> Result<(), CliError>;
}

fn to_table<T: Serialize>(value: &T, what: &str) -> Result<Table, CliError> {
    match Value::try_from(value) {
        Ok(Value::Table(t)) => Ok(t),
        Ok(_) => Err(CliError::Usage(format!("{what} is not a table"))),
        Err(e) => Err(CliError::Usage(format!("{what}: {e}"))),
    }
}

fn parse_override(raw: &str) -> Result<(String, Value), CliError> {
    let (key, value) =
        raw.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{raw}'")))?;
    let key = key.trim().replace('-', "_");
    if key.is_empty() {
        return Err(CliError::Usage(format!("--set has an empty key in '{raw}'")));
    }
    let value = value.trim();
    let parsed = toml::from_str::<Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.to_string()));
    Ok((key, parsed))
}

/// Merges all layers and deserializes the result. Unknown keys are rejected
/// because every settings type denies unknown fields.
pub fn resolve<S, F>(common: &ConfigArgs, flags: &F) -> Result<S, CliError>
where
    S: Serialize + DeserializeOwned + Default + Validate,
    F: Serialize,
{
    let mut table = to_table(&S::default(), "defaults")?;
    if let Some(path) = &common.config {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        let file: Table = text.parse().map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        table.extend(file.into_iter().map(|(k, v)| (k.replace('-', "_"), v)));
    }
    for raw in &common.overrides {
        let (key, value) = parse_override(raw)?;
        table.insert(key, value);
    }
    table.extend(to_table(flags, "flags")?);
    let settings: S = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("invalid configuration: {}", e.message())))?;
    settings.validate()?;
    Ok(settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    #[serde(deny_unknown_fields, default)]
    struct Demo {
        pop: usize,
        name: String,
        list: Vec<f64>,
    }

    impl Default for Demo {
        fn default() -> Self {
            Self { pop: 10, name: "a".into(), list: vec![1.0] }
        }
    }

    impl Validate for Demo {
        fn validate(&self) -> Result<(), CliError> {
            if self.pop == 0 {
                return Err(CliError::Usage("--pop must be positive".into()));
            }
            Ok(())
        }
    }

    #[derive(Serialize, Default)]
    struct DemoFlags {
        #[serde(skip_serializing_if = "Option::is_none")]
        pop: Option<usize>,
    }

    fn common(overrides: &[&str]) -> ConfigArgs {
        ConfigArgs { overrides: overrides.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    #[test]
    fn layers_apply_in_order() {
        let d: Demo = resolve(&common(&[]), &DemoFlags::default()).unwrap();
        assert_eq!(d, Demo::default());
        let d: Demo = resolve(&common(&["pop=30", "name=bee", "list=[2, 3.5]"]), &DemoFlags::default()).unwrap();
        assert_eq!(d, Demo { pop: 30, name: "bee".into(), list: vec![2.0, 3.5] });
        let d: Demo = resolve(&common(&["pop=30"]), &DemoFlags { pop: Some(40) }).unwrap();
        assert_eq!(d.pop, 40);
    }

    #[test]
    fn file_layer_and_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "pop = 7\nname = \"file\"\n").unwrap();
        let mut c = common(&["name=override"]);
        c.config = Some(path.clone());
        let d: Demo = resolve(&c, &DemoFlags::default()).unwrap();
        assert_eq!((d.pop, d.name.as_str()), (7, "override"));

        fs::write(&path, "bogus = 1\n").unwrap();
        let err = resolve::<Demo, _>(&c, &DemoFlags::default()).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        assert!(resolve::<Demo, _>(&common(&["nope=1"]), &DemoFlags::default()).is_err());
        assert!(resolve::<Demo, _>(&common(&["pop"]), &DemoFlags::default()).is_err());
        assert!(resolve::<Demo, _>(&common(&["pop=0"]), &DemoFlags::default()).is_err());
    }
}
