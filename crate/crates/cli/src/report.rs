// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// One flat output record; becomes a CSV line.
pub type Row = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

/// Machine-readable record of one command run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub config: Value,
    pub results: Value,
    pub seeds: BTreeMap<String, u64>,
    pub timing: Timing,
}

impl RunReport {
    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> Result<String, CliError> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Seeds of one run. Missing seeds are drawn from the OS and announced on
/// stderr so the run can be repeated.
#[derive(Clone, Debug, Default)]
pub struct Seeds(BTreeMap<String, u64>);

impl Seeds {
    pub fn resolve(&mut self, name: &str, given: Option<u64>) -> u64 {
        let seed = given.unwrap_or_else(|| {
            let s = rand::random::<u64>();
            eprintln!("sampled {name} seed {s}");
            s
        });
        self.0.insert(name.to_owned(), seed);
        seed
    }

    pub fn into_map(self) -> BTreeMap<String, u64> {
        self.0
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Rows as CSV; the header is the sorted union of all keys.
pub fn rows_to_csv(rows: &[Row]) -> Result<String, CliError> {
    let mut columns: Vec<&String> = rows.iter().flat_map(|r| r.keys()).collect();
    columns.sort();
    columns.dedup();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&columns).map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        let record: Vec<String> = columns
            .iter()
            .map(|c| row.get(*c).map(cell).unwrap_or_default())
            .collect();
        writer.write_record(&record).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
