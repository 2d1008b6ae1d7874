use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::config::ScenarioConfig;
use super::output::fmt_f64;
use super::run::{run_scenario_status, RunOutcome};
use crate::error::{Error, Result};

/// One swept parameter: a dotted key into the TOML form of the config and
/// the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

impl SweepAxis {
    /// Parses `key=v1,v2,...`; each value is read as a TOML literal, falling
    /// back to a bare string.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, vals) = spec.split_once('=').ok_or_else(|| Error::Config(format!("expected key=values, got {spec}")))?;
        let values: Vec<toml::Value> = vals.split(',').filter(|v| !v.trim().is_empty()).map(|v| parse_literal(v.trim())).collect();
        if key.trim().is_empty() || values.is_empty() {
            return Err(Error::Config(format!("empty sweep axis {spec}")));
        }
        Ok(Self { key: key.trim().into(), values })
    }
}

fn parse_literal(v: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {v}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(v.into())),
        Err(_) => toml::Value::String(v.into()),
    }
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Float(f) => fmt_f64(*f),
        other => other.to_string(),
    }
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = root;
    for p in &parts[..parts.len() - 1] {
        let table = cur.as_table_mut().ok_or_else(|| Error::Config(format!("{key}: {p} is not a table")))?;
        cur = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = cur.as_table_mut().ok_or_else(|| Error::Config(format!("{key} does not name a table field")))?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut BTreeMap<String, String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, x) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

fn to_value(cfg: &ScenarioConfig) -> Result<toml::Value> {
    toml::Value::try_from(cfg).map_err(|e| Error::Config(e.to_string()))
}

/// A config with its sweep coordinates.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub key: Vec<(String, String)>,
    pub config: ScenarioConfig,
}

/// Cartesian product of the axes applied to `base`. Each point is renamed
/// `<base>-<index>` so its output directory is distinct.
pub fn expand_grid(base: &ScenarioConfig, axes: &[SweepAxis]) -> Result<Vec<SweepPoint>> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let mut points = vec![(Vec::new(), to_value(base)?)];
    for axis in axes {
        let mut next = Vec::new();
        for (key, v) in &points {
            for val in &axis.values {
                let mut v2 = v.clone();
                set_path(&mut v2, &axis.key, val.clone())?;
                let mut k2: Vec<(String, String)> = key.clone();
                k2.push((axis.key.clone(), value_text(val)));
                next.push((k2, v2));
            }
        }
        points = next;
    }
    if points.len() < 2 {
        return Err(Error::Config("a sweep needs at least two configurations".into()));
    }
    points
        .into_iter()
        .enumerate()
        .map(|(i, (key, v))| {
            let mut cfg: ScenarioConfig = v.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
            cfg.name = format!("{}-{i}", base.name);
            Ok(SweepPoint { key, config: cfg })
        })
        .collect()
}

/// Pairs explicit configs with the declared parameters they differ in, and
/// rejects configs that differ anywhere else (`name` and `output_dir` are
/// free).
pub fn points_from_configs(cfgs: &[ScenarioConfig], declared: &[String]) -> Result<Vec<SweepPoint>> {
    if cfgs.len() < 2 {
        return Err(Error::Config("a sweep needs at least two configurations".into()));
    }
    let flat: Vec<BTreeMap<String, String>> = cfgs
        .iter()
        .map(|c| {
            let mut m = BTreeMap::new();
            flatten("", &to_value(c)?, &mut m);
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let is_declared = |k: &str| declared.iter().any(|d| k == d || k.starts_with(&format!("{d}.")));
    let keys: BTreeSet<&String> = flat.iter().flat_map(|m| m.keys()).collect();
    for k in keys {
        if k == "name" || k == "output_dir" || is_declared(k) {
            continue;
        }
        if flat.iter().any(|m| m.get(k) != flat[0].get(k)) {
            return Err(Error::Config(format!("configs differ in undeclared parameter {k}")));
        }
    }
    Ok(cfgs
        .iter()
        .zip(&flat)
        .map(|(c, m)| SweepPoint {
            key: declared.iter().map(|d| (d.clone(), m.get(d).cloned().unwrap_or_default())).collect(),
            config: c.clone(),
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub key: Vec<(String, String)>,
    pub exit_code: i32,
    /// `check.verdict`, `check.min_slack`, `check.<constant>` columns.
    pub values: BTreeMap<String, String>,
    pub outcome: Option<RunOutcome>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn columns(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.values.keys()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn to_csv(&self) -> String {
        let keys: Vec<String> = self.rows.first().map(|r| r.key.iter().map(|(k, _)| k.clone()).collect()).unwrap_or_default();
        let cols = self.columns();
        let mut out = keys.join(",");
        if !keys.is_empty() {
            out.push(',');
        }
        out.push_str("exit_code");
        for c in &cols {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            for (_, v) in &r.key {
                out.push_str(v);
                out.push(',');
            }
            out.push_str(&r.exit_code.to_string());
            for c in &cols {
                out.push(',');
                out.push_str(r.values.get(c).map(String::as_str).unwrap_or(""));
            }
            out.push('\n');
        }
        out
    }

    /// Column values in row order, parsed as floats.
    pub fn column_f64(&self, name: &str) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.values.get(name).and_then(|v| v.parse().ok())).collect()
    }
}

/// Runs every point, one scenario per thread, into `<dir>/<name>/`, and
/// writes the merged table to `<dir>/sweep.csv`.
pub fn sweep(points: &[SweepPoint], dir: &Path) -> Result<SweepTable> {
    if points.len() < 2 {
        return Err(Error::Config("a sweep needs at least two configurations".into()));
    }
    std::fs::create_dir_all(dir)?;
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .iter()
            .map(|p| {
                let sub = dir.join(&p.config.name);
                scope.spawn(move || run_scenario_status(&p.config, &sub))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let rows = points
        .iter()
        .zip(results)
        .map(|(p, (code, outcome, err))| {
            let mut values = BTreeMap::new();
            if let Some(e) = err {
                values.insert("error".into(), e.replace(',', ";"));
            }
            if let Some(o) = &outcome {
                for (name, r) in &o.reports {
                    let n = name.as_str();
                    values.insert(format!("{n}.verdict"), format!("{:?}", r.verdict).to_lowercase());
                    values.insert(format!("{n}.min_slack"), r.min_slack.map(fmt_f64).unwrap_or_default());
                    for c in &r.constants {
                        values.insert(format!("{n}.{}", c.name.replace(',', ";")), fmt_f64(c.value));
                    }
                }
            }
            SweepRow { key: p.key.clone(), exit_code: code, values, outcome }
        })
        .collect();
    let table = SweepTable { rows };
    std::fs::write(dir.join("sweep.csv"), table.to_csv())?;
    Ok(table)
}
