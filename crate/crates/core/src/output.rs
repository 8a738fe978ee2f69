//! Tabular output with a provenance header.
//!
//! Header lines start with `#`. The resolved configuration is embedded
//! between `# config-begin` and `# config-end`, so the file alone is enough
//! to regenerate its data section.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::render_config;
use crate::error::{Error, Result};
use crate::sweep::SweepResult;

pub const CONFIG_BEGIN: &str = "# config-begin";
pub const CONFIG_END: &str = "# config-end";
pub const STATUS_COLUMN: &str = "status";
pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Gnuplot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Tool name and version.
    pub tool: String,
    /// Unix seconds; omitted when `None`.
    pub timestamp: Option<u64>,
}

fn header(result: &SweepResult, prov: &Provenance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", prov.tool);
    let _ = writeln!(out, "# scenario: {}", result.spec.scenario.key());
    let _ = writeln!(out, "# convention: {}", result.spec.convention.key());
    if let Some(ts) = prov.timestamp {
        let _ = writeln!(out, "# timestamp: {ts} (unix seconds)");
    }
    let _ = writeln!(out, "{CONFIG_BEGIN}");
    for line in render_config(&result.params, &result.spec).lines() {
        if line.is_empty() {
            let _ = writeln!(out, "#");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    let _ = writeln!(out, "{CONFIG_END}");
    out
}

fn cells(result: &SweepResult) -> Vec<Vec<String>> {
    result
        .rows
        .iter()
        .map(|row| {
            let mut cells: Vec<String> = row
                .values
                .iter()
                .zip(&result.columns)
                .map(|(v, c)| {
                    if c.integer && v.is_finite() {
                        format!("{}", *v as i64)
                    } else {
                        format!("{v:.16e}")
                    }
                })
                .collect();
            cells.push(row.error.clone().unwrap_or_else(|| STATUS_OK.to_string()));
            cells
        })
        .collect()
}

/// Renders the result as text in the requested format.
pub fn render(result: &SweepResult, prov: &Provenance, format: Format) -> String {
    let mut out = header(result, prov);
    let mut names: Vec<&str> = result.columns.iter().map(|c| c.name.as_str()).collect();
    names.push(STATUS_COLUMN);
    let rows = cells(result);
    match format {
        Format::Csv => {
            out.push_str(&names.join(","));
            out.push('\n');
            for r in rows {
                out.push_str(&r.join(","));
                out.push('\n');
            }
        }
        Format::Gnuplot => {
            let _ = writeln!(out, "# {}", names.join(" "));
            let block = match result.spec.axes.as_slice() {
                [_, inner] => inner.points,
                _ => usize::MAX,
            };
            for (i, r) in rows.into_iter().enumerate() {
                if i > 0 && i % block == 0 {
                    out.push('\n');
                }
                out.push_str(&r.join(" "));
                out.push('\n');
            }
        }
    }
    out
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn emit_csv(result: &SweepResult, prov: &Provenance, path: &Path) -> Result<()> {
    write_file(path, &render(result, prov, Format::Csv))
}

/// A CSV file read back.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedOutput {
    /// The embedded configuration text.
    pub config: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub status: Vec<String>,
}

impl ParsedOutput {
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_csv(text: &str) -> Result<ParsedOutput> {
    let mut config = String::new();
    let mut in_config = false;
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut status = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line == CONFIG_BEGIN {
            in_config = true;
            continue;
        }
        if line == CONFIG_END {
            in_config = false;
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if in_config {
                config.push_str(rest.strip_prefix(' ').unwrap_or(rest));
                config.push('\n');
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        match &columns {
            None => {
                if fields.last() != Some(&STATUS_COLUMN) {
                    return Err(malformed(n, "column header must end with `status`"));
                }
                columns = Some(
                    fields[..fields.len() - 1]
                        .iter()
                        .map(|s| s.to_string())
                        .collect(),
                );
            }
            Some(cols) => {
                if fields.len() != cols.len() + 1 {
                    return Err(malformed(
                        n,
                        format!("expected {} fields, got {}", cols.len() + 1, fields.len()),
                    ));
                }
                let values = fields[..cols.len()]
                    .iter()
                    .map(|f| {
                        f.parse::<f64>()
                            .map_err(|_| malformed(n, format!("`{f}` is not a number")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push(values);
                status.push(fields[cols.len()].to_string());
            }
        }
    }
    Ok(ParsedOutput {
        config,
        columns: columns.ok_or_else(|| malformed(text.lines().count(), "no column header"))?,
        rows,
        status,
    })
}

/// The data section: everything after the header comment block.
pub fn data_section(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::presets::dimensionless_slowfast;
    use crate::sweep::{run_sweep, Axis, AxisName, Scenario, Spacing, SweepSpec};

    fn prov() -> Provenance {
        Provenance {
            tool: "qoems test".into(),
            timestamp: None,
        }
    }

    fn two_axis() -> SweepResult {
        let mut spec = SweepSpec::new(Scenario::Spectrum);
        spec.axes = vec![
            Axis {
                name: AxisName::Kappa,
                min: 0.1,
                max: 0.3,
                points: 3,
                spacing: Spacing::Linear,
            },
            Axis {
                name: AxisName::DeltaBar,
                min: -0.01,
                max: 0.01,
                points: 4,
                spacing: Spacing::Linear,
            },
        ];
        run_sweep(&dimensionless_slowfast(2.0), &spec).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let r = two_axis();
        let text = render(&r, &prov(), Format::Csv);
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.rows.len(), 12);
        for (row, back) in r.rows.iter().zip(&parsed.rows) {
            for (a, b) in row.values.iter().zip(back) {
                assert!(a == b || (a.is_nan() && b.is_nan()));
            }
        }
        assert!(parsed.status.iter().all(|s| s == STATUS_OK));
    }

    #[test]
    fn header_reproduces_data() {
        let r = two_axis();
        let text = render(&r, &prov(), Format::Csv);
        let parsed = parse_csv(&text).unwrap();
        let (p, s) = parse_config(&parsed.config).unwrap();
        let again = render(&run_sweep(&p, &s).unwrap(), &prov(), Format::Csv);
        assert_eq!(data_section(&again), data_section(&text));
        assert_eq!(again, text);
    }

    #[test]
    fn gnuplot_blocks_follow_outer_axis() {
        let text = render(&two_axis(), &prov(), Format::Gnuplot);
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 12 + 2);
        assert_eq!(body[4], "");
        assert_eq!(body[9], "");
        assert!(!body[0].contains(','));
    }

    #[test]
    fn timestamp_is_optional() {
        let r = two_axis();
        let with = render(
            &r,
            &Provenance {
                timestamp: Some(5),
                ..prov()
            },
            Format::Csv,
        );
        assert!(with.contains("# timestamp: 5"));
        assert!(!render(&r, &prov(), Format::Csv).contains("timestamp"));
    }
}
