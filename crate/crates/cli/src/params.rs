//! Parameter schema and resolution: built-in defaults, then a config file,
//! then command-line flags.
//!
//! Config files are plain `key = value` lines; `#` starts a comment.

use std::collections::BTreeMap;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Float,
    Count,
    Bool,
    /// Comma-separated counts and inclusive ranges, e.g. `1..10,20,50`.
    CountList,
    Choice(&'static [&'static str]),
}

#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: ParamKind,
    pub default: &'static str,
    pub help: &'static str,
}

impl ParamSpec {
    pub const fn new(
        key: &'static str,
        kind: ParamKind,
        default: &'static str,
        help: &'static str,
    ) -> Self {
        ParamSpec {
            key,
            kind,
            default,
            help,
        }
    }
}

/// Resolved parameters in canonical text form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    values: BTreeMap<String, String>,
}

impl ParamSet {
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("parameter `{key}` is not in the schema"))
    }

    pub fn float(&self, key: &str) -> f64 {
        self.raw(key).parse().expect("canonical float")
    }

    pub fn count(&self, key: &str) -> usize {
        self.raw(key).parse().expect("canonical count")
    }

    pub fn flag(&self, key: &str) -> bool {
        self.raw(key) == "true"
    }

    pub fn counts(&self, key: &str) -> Vec<usize> {
        expand_counts(self.raw(key)).expect("canonical count list")
    }
}

fn expand_counts(text: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim) {
        if let Some((a, b)) = item.split_once("..") {
            let lo: usize = a
                .trim()
                .parse()
                .map_err(|_| format!("bad range start `{a}`"))?;
            let hi: usize = b
                .trim()
                .parse()
                .map_err(|_| format!("bad range end `{b}`"))?;
            if lo > hi {
                return Err(format!("empty range `{item}`"));
            }
            out.extend(lo..=hi);
        } else {
            out.push(item.parse().map_err(|_| format!("bad count `{item}`"))?);
        }
    }
    Ok(out)
}

/// Parses and normalizes one value so equal settings always echo the same text.
pub fn canonicalize(kind: ParamKind, raw: &str) -> Result<String, String> {
    let raw = raw.trim();
    match kind {
        ParamKind::Float => {
            let v: f64 = raw
                .parse()
                .map_err(|_| format!("`{raw}` is not a number"))?;
            if v.is_nan() {
                return Err("NaN is not allowed".into());
            }
            Ok(format!("{v}"))
        }
        ParamKind::Count => raw
            .parse::<usize>()
            .map(|v| v.to_string())
            .map_err(|_| format!("`{raw}` is not a nonnegative integer")),
        ParamKind::Bool => match raw.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok("true".into()),
            "false" | "no" | "0" | "off" => Ok("false".into()),
            _ => Err(format!("`{raw}` is not a boolean")),
        },
        ParamKind::CountList => {
            expand_counts(raw)?;
            Ok(raw
                .split(',')
                .map(|s| s.trim().replace(' ', ""))
                .collect::<Vec<_>>()
                .join(","))
        }
        ParamKind::Choice(options) => {
            if options.contains(&raw) {
                Ok(raw.to_string())
            } else {
                Err(format!("`{raw}` is not one of {}", options.join(", ")))
            }
        }
    }
}

/// Reads `key = value` lines. Duplicate keys are rejected.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`", n + 1))
        })?;
        let key = k.trim().to_string();
        if pairs.iter().any(|(existing, _)| *existing == key) {
            return Err(CliError::Usage(format!(
                "config line {}: `{key}` set twice",
                n + 1
            )));
        }
        pairs.push((key, v.trim().to_string()));
    }
    Ok(pairs)
}

/// Defaults, overridden by `config`, overridden by `flags`.
pub fn resolve(
    schema: &[ParamSpec],
    config: &[(String, String)],
    flags: &[(String, String)],
) -> Result<ParamSet, CliError> {
    let mut values = BTreeMap::new();
    for spec in schema {
        values.insert(
            spec.key.to_string(),
            canonicalize(spec.kind, spec.default).expect("valid default"),
        );
    }
    for (source, pairs) in [("config", config), ("flag", flags)] {
        for (key, raw) in pairs {
            let spec = schema.iter().find(|s| s.key == key).ok_or_else(|| {
                let known: Vec<&str> = schema.iter().map(|s| s.key).collect();
                CliError::Usage(format!(
                    "unknown {source} key `{key}` (known: {})",
                    known.join(", ")
                ))
            })?;
            let value = canonicalize(spec.kind, raw)
                .map_err(|e| CliError::Usage(format!("{source} `{key}`: {e}")))?;
            values.insert(key.clone(), value);
        }
    }
    Ok(ParamSet { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[ParamSpec] = &[
        ParamSpec::new("kappa", ParamKind::Float, "1", ""),
        ParamSpec::new("n", ParamKind::CountList, "1..3", ""),
        ParamSpec::new("modes", ParamKind::Choice(&["both", "lower"]), "both", ""),
    ];

    fn pairs(p: &[(&str, &str)]) -> Vec<(String, String)> {
        p.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn precedence() {
        let config = pairs(&[("kappa", "2"), ("n", "5")]);
        let flags = pairs(&[("kappa", "3e0")]);
        let p = resolve(SCHEMA, &config, &flags).unwrap();
        assert_eq!(p.float("kappa"), 3.0);
        assert_eq!(p.raw("kappa"), "3");
        assert_eq!(p.counts("n"), vec![5]);
        assert_eq!(p.raw("modes"), "both");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            resolve(SCHEMA, &pairs(&[("kapa", "2")]), &[]),
            Err(CliError::Usage(_))
        ));
        assert!(resolve(SCHEMA, &[], &pairs(&[("modes", "upper")])).is_err());
    }

    #[test]
    fn config_format() {
        let parsed = parse_config("# header\nkappa = 2  # trailing\n\n n=1..4,9\n").unwrap();
        assert_eq!(parsed, pairs(&[("kappa", "2"), ("n", "1..4,9")]));
        assert!(parse_config("kappa 2").is_err());
        assert!(parse_config("kappa=1\nkappa=2").is_err());
    }

    #[test]
    fn count_lists() {
        assert_eq!(expand_counts("1..3,7").unwrap(), vec![1, 2, 3, 7]);
        assert!(expand_counts("5..2").is_err());
        assert_eq!(
            canonicalize(ParamKind::CountList, "3 .. 5, 8").unwrap(),
            "3..5,8"
        );
    }
}
