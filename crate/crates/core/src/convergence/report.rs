//! CSV and JSON encodings of [`ConvergenceReport`].
//!
//! The CSV form has one row per level under the header
//! `level,h,rms_error,samples,aborts`, followed by `# key=value` comment lines
//! carrying the rest of the report. Both encodings hold the same numbers and
//! parse back to an equal report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Duration;

use super::{ConvergenceReport, ExperimentConfig, LevelRecord, SignPolicy};
use crate::error::{Result, SdeError};
use crate::fmt_num;
use crate::steppers::SchemeId;

pub const CSV_HEADER: &str = "level,h,rms_error,samples,aborts";

fn join<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn malformed(msg: impl Into<String>) -> SdeError {
    SdeError::Report(msg.into())
}

fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| malformed(format!("cannot parse {key} = `{raw}`")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|v| parse(key, v)).collect()
}

fn parse_optional(key: &str, raw: &str) -> Result<Option<f64>> {
    match raw.trim() {
        "" | "undefined" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn sign_policy_name(p: SignPolicy) -> &'static str {
    match p {
        SignPolicy::Independent => "independent",
        SignPolicy::Bridge => "bridge",
    }
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "{CSV_HEADER}");
        for l in &self.levels {
            let rms = l.rms_error.map(fmt_num).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", l.level, fmt_num(l.h), rms, l.samples, l.aborts);
        }
        let optional = |v: Option<f64>| v.map(fmt_num).unwrap_or_else(|| "undefined".into());
        let lines = [
            ("problem", c.problem_id.clone()),
            ("scheme", c.scheme.to_string()),
            ("seed", c.master_seed.to_string()),
            ("realizations", c.realizations.to_string()),
            ("n_fine", c.n_fine.to_string()),
            ("factors", join(&c.levels)),
            ("t0", fmt_num(c.t0)),
            ("t_end", fmt_num(c.t_end)),
            ("signs", sign_policy_name(c.sign_policy).to_string()),
            ("clamps", join(self.levels.iter().map(|l| l.clamps))),
            ("in_fit", join(self.levels.iter().map(|l| u8::from(l.in_fit)))),
            ("slope", optional(self.slope)),
            ("intercept", optional(self.intercept)),
        ];
        for (key, value) in lines {
            let _ = writeln!(out, "# {key}={value}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(comment) = line.strip_prefix('#') {
                let (k, v) = comment
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| malformed(format!("comment line `{line}` is not key=value")))?;
                meta.insert(k.trim().to_string(), v.to_string());
            } else if !line.trim().is_empty() {
                body.push_str(line);
                body.push('\n');
            }
        }
        let get = |key: &str| {
            meta.get(key)
                .map(String::as_str)
                .ok_or_else(|| malformed(format!("missing `# {key}=` line")))
        };

        let scheme = SchemeId::from_str(get("scheme")?).map_err(malformed)?;
        let sign_policy = match get("signs")? {
            "independent" => SignPolicy::Independent,
            "bridge" => SignPolicy::Bridge,
            other => return Err(malformed(format!("unknown sign policy `{other}`"))),
        };
        let config = ExperimentConfig {
            problem_id: get("problem")?.to_string(),
            scheme,
            n_fine: parse("n_fine", get("n_fine")?)?,
            levels: parse_list("factors", get("factors")?)?,
            realizations: parse("realizations", get("realizations")?)?,
            master_seed: parse("seed", get("seed")?)?,
            t0: parse("t0", get("t0")?)?,
            t_end: parse("t_end", get("t_end")?)?,
            sign_policy,
        };
        let clamps: Vec<u64> = parse_list("clamps", get("clamps")?)?;
        let in_fit: Vec<u8> = parse_list("in_fit", get("in_fit")?)?;

        let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
            return Err(malformed(format!("unexpected header `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut levels = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| malformed(e.to_string()))?;
            let factor = *config
                .levels
                .get(i)
                .ok_or_else(|| malformed("more rows than factors"))?;
            levels.push(LevelRecord {
                level: parse("level", &row[0])?,
                factor,
                steps: config.n_fine / factor,
                h: parse("h", &row[1])?,
                rms_error: parse_optional("rms_error", &row[2])?,
                samples: parse("samples", &row[3])?,
                aborts: parse("aborts", &row[4])?,
                clamps: *clamps.get(i).ok_or_else(|| malformed("clamps list too short"))?,
                in_fit: *in_fit.get(i).ok_or_else(|| malformed("in_fit list too short"))? == 1,
            });
        }
        if levels.len() != config.levels.len() {
            return Err(malformed(format!(
                "{} rows for {} factors",
                levels.len(),
                config.levels.len()
            )));
        }
        Ok(Self {
            config,
            levels,
            slope: parse_optional("slope", get("slope")?)?,
            intercept: parse_optional("intercept", get("intercept")?)?,
            wall_time: Duration::ZERO,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| malformed(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergence::ladder;

    fn sample_report() -> ConvergenceReport {
        let mut config = ExperimentConfig::new("ex3", SchemeId::Milstein);
        config.n_fine = 64;
        config.levels = ladder(64, 3).unwrap();
        let levels = config
            .levels
            .iter()
            .enumerate()
            .map(|(i, &f)| LevelRecord {
                level: i,
                factor: f,
                steps: 64 / f,
                h: f as f64 / 64.0,
                rms_error: if i == 2 { None } else { Some(0.1 / (i + 3) as f64) },
                samples: 398 - i,
                aborts: i,
                clamps: 7 * i as u64,
                in_fit: i < 2,
            })
            .collect();
        ConvergenceReport {
            config,
            levels,
            slope: Some(1.0 / 3.0),
            intercept: None,
            wall_time: Duration::from_millis(5),
        }
    }

    #[test]
    fn csv_layout() {
        let csv = sample_report().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("0,1.5625e-2,3.333333333333333e-2,398,0"));
        assert_eq!(lines.nth(1), Some("2,6.25e-2,,396,2"));
        assert!(csv.contains("\n# slope=3.333333333333333e-1\n"));
        assert!(csv.contains("\n# intercept=undefined\n"));
        assert!(csv.contains("\n# seed=42\n"));
    }

    #[test]
    fn csv_and_json_carry_the_same_report() {
        let r = sample_report();
        let from_csv = ConvergenceReport::from_csv(&r.to_csv()).unwrap();
        let from_json = ConvergenceReport::from_json(&r.to_json()).unwrap();
        assert_eq!(from_csv, r);
        assert_eq!(from_json, r);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        let csv = sample_report().to_csv();
        assert!(ConvergenceReport::from_csv(&csv.replace("# seed=42\n", "")).is_err());
        assert!(ConvergenceReport::from_csv(&csv.replace(CSV_HEADER, "a,b,c,d,e")).is_err());
    }
}
