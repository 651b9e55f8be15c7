use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::run::{run, write_atomic, Report};
use crate::scenario::Scenario;

/// Copy of `base` with the numeric field at dotted `path` set to `value`.
pub fn with_value(base: &Scenario, path: &str, value: f64) -> CliResult<Scenario> {
    let mut root = toml::Value::try_from(base).map_err(|e| CliError::Config(e.to_string()))?;
    let mut slot = &mut root;
    for key in path.split('.') {
        slot = slot
            .get_mut(key)
            .ok_or_else(|| CliError::Config(format!("sweep axis {path:?}: no field {key:?}")))?;
    }
    *slot = match slot {
        toml::Value::Float(_) => toml::Value::Float(value),
        toml::Value::Integer(_) if value.fract() == 0.0 => toml::Value::Integer(value as i64),
        toml::Value::Integer(_) => {
            return Err(CliError::Config(format!("sweep axis {path:?} is an integer field, got {value}")))
        }
        _ => return Err(CliError::Config(format!("sweep axis {path:?} is not a numeric field"))),
    };
    let text = toml::to_string(&root).map_err(|e| CliError::Config(e.to_string()))?;
    Scenario::from_toml(&text)
}

pub fn parse_values(list: &str) -> CliResult<Vec<f64>> {
    list.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad sweep value {v:?}"))))
        .collect()
}

#[derive(Debug)]
pub struct SweepEntry {
    pub value: f64,
    pub dir: PathBuf,
    pub outcome: Result<Report, CliError>,
}

/// One run per value, in parallel; a failing run does not stop the others.
pub fn sweep(base: &Scenario, path: &str, values: &[f64], out: &Path, workers: usize) -> CliResult<Vec<SweepEntry>> {
    // Reject a bad axis before starting anything.
    if let Some(v) = values.first() {
        with_value(base, path, *v)?;
    }
    std::fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(k, &value)| {
                let dir = out.join(format!("run_{k:03}"));
                let outcome = with_value(base, path, value).and_then(|s| run(&s, &dir).map(|(r, _)| r));
                SweepEntry { value, dir, outcome }
            })
            .collect()
    });
    write_atomic(&out.join("index.csv"), index_csv(path, &entries).as_bytes())?;
    Ok(entries)
}

fn index_csv(path: &str, entries: &[SweepEntry]) -> String {
    let mut s = format!("# axis={path}\nvalue,dir,status,code,final_regime,spohn_violations,message\n");
    for e in entries {
        let dir = e.dir.file_name().map(|d| d.to_string_lossy().into_owned()).unwrap_or_default();
        match &e.outcome {
            Ok(r) => s += &format!("{:e},{dir},ok,,{},{},\n", e.value, r.final_regime, r.spohn_violations),
            Err(err) => {
                let msg = err.to_string().replace([',', '\n'], ";");
                s += &format!("{:e},{dir},failed,{},,,{msg}\n", e.value, err.code());
            }
        }
    }
    s
}
