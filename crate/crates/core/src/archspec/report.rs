use std::fmt::Write;

use serde::Serialize;

use super::analysis::{LayerAnalysis, ModelAnalysis};
use super::layer::{ModelSpec, TensorShape};

/// Compact count in the `1.8K` / `14.2M` style; values below 1000 print as-is.
pub fn compact_count(n: u64) -> String {
    if n < 1000 {
        return n.to_string();
    }
    // Tenths of the unit, rounded half away from zero in integer arithmetic.
    let tenths = |div: u64| (n * 10 + div / 2) / div;
    let (t, suffix) = match tenths(1_000) {
        t if t < 10_000 => (t, "K"),
        _ => (tenths(1_000_000), "M"),
    };
    match t % 10 {
        0 => format!("{}{suffix}", t / 10),
        d => format!("{}.{d}{suffix}", t / 10),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub layer: String,
    pub kind: String,
    pub input: String,
    pub output: String,
    #[serde(flatten)]
    pub analysis: LayerAnalysis,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub name: String,
    pub rows: Vec<ReportRow>,
    pub total_params: u64,
    pub total_macs: u64,
    pub arena_bytes: u64,
    pub flash_bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_latency_ms: Option<f64>,
}

impl Report {
    pub fn new(model: &ModelSpec, shapes: &[(TensorShape, TensorShape)], analysis: &ModelAnalysis) -> Self {
        let rows = model
            .layer_labels()
            .into_iter()
            .zip(&model.layers)
            .zip(shapes.iter().zip(&analysis.layers))
            .skip(1)
            .map(|((label, layer), (&(i, o), a))| ReportRow {
                layer: label,
                kind: layer.kind().to_string(),
                input: i.to_string(),
                output: o.to_string(),
                analysis: *a,
            })
            .collect();
        Self {
            name: model.name.clone(),
            rows,
            total_params: analysis.total_params,
            total_macs: analysis.total_macs,
            arena_bytes: analysis.arena_bytes,
            flash_bytes: analysis.flash_bytes,
            predicted_latency_ms: None,
        }
    }

    /// Aligned text table with `Layer | Input size | Output size | Weights | MACs` columns.
    pub fn to_text(&self) -> String {
        let header = ["Layer", "Input size", "Output size", "Weights", "MACs", "Act. bytes"];
        let mut table: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.layer.clone(),
                    r.input.clone(),
                    r.output.clone(),
                    compact_count(r.analysis.param_count),
                    compact_count(r.analysis.macs),
                    r.analysis.activation_bytes().to_string(),
                ]
            })
            .collect();
        table.push([
            "Total".into(),
            String::new(),
            String::new(),
            compact_count(self.total_params),
            compact_count(self.total_macs),
            String::new(),
        ]);
        let mut widths = header.map(str::len);
        for row in &table {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            let joined: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", joined.join(" | ").trim_end());
        };
        let _ = writeln!(out, "model: {}", self.name);
        line(&mut out, &header);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let _ = writeln!(out, "{}", rule.join("-+-"));
        for row in &table {
            let cells: Vec<&str> = row.iter().map(String::as_str).collect();
            line(&mut out, &cells);
        }
        let _ = writeln!(out, "params: {}", self.total_params);
        let _ = writeln!(out, "macs: {}", self.total_macs);
        let _ = writeln!(out, "arena_bytes: {}", self.arena_bytes);
        let _ = writeln!(out, "flash_bytes: {}", self.flash_bytes);
        if let Some(ms) = self.predicted_latency_ms {
            let _ = writeln!(out, "predicted_latency_ms: {ms:.3}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_formatting() {
        assert_eq!(compact_count(11), "11");
        assert_eq!(compact_count(510), "510");
        assert_eq!(compact_count(1_824), "1.8K");
        assert_eq!(compact_count(5_000), "5K");
        assert_eq!(compact_count(5_050), "5.1K");
        assert_eq!(compact_count(999_949), "999.9K");
        assert_eq!(compact_count(663_552), "663.6K");
        assert_eq!(compact_count(5_468_400), "5.5M");
        assert_eq!(compact_count(999_960), "1M");
        assert_eq!(compact_count(26_876_342), "26.9M");
    }
}
