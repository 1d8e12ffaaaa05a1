//! Self-describing JSON reports and the artifacts written next to them.

use std::collections::BTreeMap;

use ratioshift_core::{measure_from_params, LevelParams, MeasureSpec, Profile, TailRule};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, SeedSource};
use crate::CliError;

pub const REPORT_SCHEMA: &str = "ratioshift-report/1";
pub const SPEC_FORMAT: &str = "ratioshift-spec/1";

/// Every number in the tree becomes its decimal string.
fn stringify(v: Value) -> Value {
    match v {
        Value::Number(n) => Value::String(n.to_string()),
        Value::Array(xs) => Value::Array(xs.into_iter().map(stringify).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, x)| (k, stringify(x))).collect()),
        other => other,
    }
}

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_value(config).expect("config serialises");
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub config: Value,
    pub config_hash: String,
    /// Decimal string, like every other number in the report.
    pub seed: String,
    pub seed_source: SeedSource,
    pub sections: BTreeMap<String, Value>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig, seed_source: SeedSource) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            command: command.into(),
            config: stringify(serde_json::to_value(config).expect("config serialises")),
            config_hash: config_hash(config),
            seed: config.seed.to_string(),
            seed_source,
            sections: BTreeMap::new(),
        }
    }

    pub fn section<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        let v = serde_json::to_value(body).map_err(|e| CliError::Internal(e.to_string()))?;
        self.sections.insert(name.into(), stringify(v));
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialises");
        text.push('\n');
        text
    }
}

/// A constructed measure as written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub format: String,
    pub profile: Profile,
    pub tail: TailRule,
    pub params: Vec<LevelParams>,
}

impl SpecFile {
    pub fn new(profile: Profile, tail: TailRule, params: Vec<LevelParams>) -> Self {
        Self { format: SPEC_FORMAT.into(), profile, tail, params }
    }

    pub fn read(text: &str) -> Result<Self, CliError> {
        let spec: SpecFile = serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed spec file: {e}")))?;
        if spec.format != SPEC_FORMAT {
            return Err(CliError::Input(format!("unsupported spec format {:?}", spec.format)));
        }
        Ok(spec)
    }

    pub fn measure(&self) -> Result<MeasureSpec, CliError> {
        let base = measure_from_params(&self.params, &self.profile)?;
        Ok(MeasureSpec::with_tail(base.schedule().clone(), self.tail)?)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("spec serialises");
        text.push('\n');
        text
    }
}

/// Renders rows under a header as CSV text.
pub fn csv_text<I, R>(header: &[&str], rows: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Internal(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}
