//! Solve configuration files.
//!
//! ```text
//! # comments start with '#'
//! format = 1
//!
//! [problem]
//! case = poisson2d      # poisson1d | poisson2d | poisson3d
//! orders = 2            # one value for every axis, or one per axis
//! elements = 16, 32
//! alpha = 1             # optional, defaults to the case's value
//!
//! [solver]
//! algorithm = a         # a | b
//! residual = true       # optional
//! cache = tables/       # optional spectral table cache directory
//!
//! [output]
//! solution = u.csv      # optional
//! report = report.txt   # optional
//! ```
//!
//! Relative output and cache paths are taken relative to the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sfem::{Algorithm, ManufacturedCase};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub case: ManufacturedCase,
    pub orders: Vec<usize>,
    pub elements: Vec<usize>,
    pub algorithm: Algorithm,
    pub residual: bool,
    pub cache: Option<PathBuf>,
    pub solution: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// A value together with the line it came from.
#[derive(Clone, Debug)]
struct Entry {
    line: usize,
    value: String,
}

const KEYS: &[(&str, &[&str])] = &[
    ("", &["format"]),
    ("problem", &["case", "orders", "elements", "alpha"]),
    ("solver", &["algorithm", "residual", "cache"]),
    ("output", &["solution", "report"]),
];

pub fn load(path: &Path) -> Result<SolveConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        line: None,
        message: format!("cannot read: {e}"),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base).map_err(|(line, message)| CliError::Config {
        path: path.to_path_buf(),
        line,
        message,
    })
}

type ParseError = (Option<usize>, String);

pub fn parse(text: &str, base: &Path) -> Result<SolveConfig, ParseError> {
    let entries = read_entries(text)?;
    let get = |key: &str| entries.get(key);
    let err = |e: &Entry, msg: String| (Some(e.line), msg);

    match get("format") {
        Some(e) => match e.value.parse::<u32>() {
            Ok(FORMAT_VERSION) => {}
            _ => return Err(err(e, format!("unsupported format {:?} (this build reads {FORMAT_VERSION})", e.value))),
        },
        None => return Err((None, format!("missing `format = {FORMAT_VERSION}`"))),
    }

    let case_entry = get("problem.case").ok_or((None, "missing `case` in [problem]".to_string()))?;
    let mut case = ManufacturedCase::by_name(&case_entry.value).ok_or_else(|| {
        err(
            case_entry,
            format!("unknown case {:?} (expected poisson1d, poisson2d or poisson3d)", case_entry.value),
        )
    })?;
    let dim = case.dim();
    if let Some(e) = get("problem.alpha") {
        case.alpha = e
            .value
            .parse()
            .map_err(|_| err(e, format!("alpha must be a number, got {:?}", e.value)))?;
    }
    let per_axis = |key: &str| -> Result<Vec<usize>, ParseError> {
        let e = get(key).ok_or((None, format!("missing `{}` in [problem]", &key[8..])))?;
        let values = e
            .value
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| err(e, format!("expected positive integers, got {:?}", e.value)))?;
        match values.len() {
            1 => Ok(vec![values[0]; dim]),
            len if len == dim => Ok(values),
            len => Err(err(e, format!("{len} values for a {dim}-dimensional case"))),
        }
    };
    let orders = per_axis("problem.orders")?;
    let elements = per_axis("problem.elements")?;

    let algorithm = match get("solver.algorithm") {
        Some(e) => e.value.parse().map_err(|m: String| err(e, m))?,
        None => Algorithm::A,
    };
    if algorithm == Algorithm::B && dim < 2 {
        let e = get("solver.algorithm").expect("algorithm b was given explicitly");
        return Err(err(e, "algorithm b needs at least two dimensions".into()));
    }
    let residual = match get("solver.residual") {
        Some(e) => match e.value.as_str() {
            "true" | "yes" | "1" => true,
            "false" | "no" | "0" => false,
            other => return Err(err(e, format!("residual must be true or false, got {other:?}"))),
        },
        None => false,
    };
    let path = |key: &str| get(key).map(|e| base.join(&e.value));
    Ok(SolveConfig {
        case,
        orders,
        elements,
        algorithm,
        residual,
        cache: path("solver.cache"),
        solution: path("output.solution"),
        report: path("output.report"),
    })
}

fn read_entries(text: &str) -> Result<BTreeMap<String, Entry>, ParseError> {
    let mut section = String::new();
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or((Some(line), format!("unterminated section header {content:?}")))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return Err((Some(line), format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or((Some(line), format!("expected `key = value`, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let allowed = KEYS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, keys)| *keys)
            .unwrap_or(&[]);
        if !allowed.contains(&key) {
            let place = if section.is_empty() {
                "before any section".to_string()
            } else {
                format!("in [{section}]")
            };
            return Err((Some(line), format!("unknown key `{key}` {place}")));
        }
        if value.is_empty() {
            return Err((Some(line), format!("`{key}` has no value")));
        }
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        let entry = Entry {
            line,
            value: value.to_string(),
        };
        if let Some(prev) = entries.insert(full, entry) {
            return Err((Some(line), format!("`{key}` already set on line {}", prev.line)));
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
format = 1
[problem]
case = poisson2d
orders = 2
elements = 8, 16   # per axis
[solver]
algorithm = b
residual = yes
[output]
solution = out/u.csv
";

    #[test]
    fn parses_a_full_config() {
        let c = parse(GOOD, Path::new("/tmp/run")).unwrap();
        assert_eq!(c.case.name, "poisson2d");
        assert_eq!(c.orders, vec![2, 2]);
        assert_eq!(c.elements, vec![8, 16]);
        assert_eq!(c.algorithm, Algorithm::B);
        assert!(c.residual);
        assert_eq!(c.solution.as_deref(), Some(Path::new("/tmp/run/out/u.csv")));
        assert!(c.report.is_none());
    }

    fn error_line(text: &str) -> (Option<usize>, String) {
        parse(text, Path::new(".")).unwrap_err()
    }

    #[test]
    fn errors_carry_line_numbers() {
        let (line, msg) = error_line(&GOOD.replace("elements = 8, 16", "elements = 8, x"));
        assert_eq!(line, Some(5));
        assert!(msg.contains("positive integers"), "{msg}");
        let (line, msg) = error_line(&GOOD.replace("residual = yes", "residuals = yes"));
        assert_eq!(line, Some(8));
        assert!(msg.contains("unknown key"), "{msg}");
        let (line, _) = error_line(&format!("{GOOD}[plot]\n"));
        assert_eq!(line, Some(11));
        let (line, msg) = error_line(&GOOD.replace("orders = 2", "orders = 2, 2, 2"));
        assert_eq!(line, Some(4));
        assert!(msg.contains("3 values"), "{msg}");
        let (line, msg) = error_line(&format!("{GOOD}[problem]\ncase = poisson3d\n"));
        assert_eq!(line, Some(12));
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn algorithm_b_needs_two_dimensions() {
        let text = "format = 1\n[problem]\ncase = poisson1d\norders = 3\nelements = 8\n[solver]\nalgorithm = b\n";
        let (line, msg) = error_line(text);
        assert_eq!(line, Some(7));
        assert!(msg.contains("two dimensions"));
    }

    #[test]
    fn missing_keys_and_versions() {
        assert!(error_line("[problem]\ncase = poisson2d\n").1.contains("format"));
        assert_eq!(error_line("format = 2\n").0, Some(1));
        let (line, msg) = error_line("format = 1\n[problem]\ncase = poisson2d\norders = 2\n");
        assert_eq!(line, None);
        assert!(msg.contains("elements"));
    }
}
