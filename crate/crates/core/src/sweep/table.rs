//! CSV and JSON serialization of sweep tables.

use std::fmt::Write as _;

use serde::Serialize;

use super::SweepTable;

/// Twelve significant digits, exponent notation, `NaN` for failed points.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_owned()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        // fold −0 into 0
        format!("{:.11e}", v + 0.0)
    }
}

#[derive(Serialize)]
struct JsonTable<'a, P: Serialize> {
    config: Option<&'a P>,
    spec: &'a super::SweepSpec,
    columns: &'a [String],
    rows: &'a [Vec<f64>],
    metadata: &'a super::Metadata,
}

impl SweepTable {
    /// Header line, one line per row, then `#` lines: the provenance record
    /// (typically the run configuration as JSON) and the sweep metadata.
    pub fn to_csv(&self, provenance: &[String]) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        for line in provenance {
            for l in line.lines() {
                let _ = writeln!(out, "# {l}");
            }
        }
        let m = &self.metadata;
        let _ = writeln!(out, "# tool_version: {}", m.tool_version);
        let _ = writeln!(out, "# n_cut: {}", m.n_cut);
        let _ = writeln!(out, "# points: {} failed: {}", m.points, m.failed);
        if let (Some(max), Some(mean)) = (m.residual_max, m.residual_mean) {
            let _ = writeln!(out, "# residual_max: {} residual_mean: {}", format_number(max), format_number(mean));
        }
        for f in &m.failures {
            let _ = writeln!(out, "# failed row {}: {}", f.row, f.message);
        }
        out
    }

    /// Pretty-printed JSON with the provenance record embedded under `config`.
    /// Non-finite values become `null`.
    pub fn to_json<P: Serialize>(&self, provenance: Option<&P>) -> String {
        let t = JsonTable {
            config: provenance,
            spec: &self.spec,
            columns: &self.columns,
            rows: &self.rows,
            metadata: &self.metadata,
        };
        serde_json::to_string_pretty(&t).expect("sweep tables serialize")
    }
}
