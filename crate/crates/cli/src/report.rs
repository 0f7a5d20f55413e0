//! Report rows, sidecar schema and the CSV/JSON writers.

use serde::Serialize;

pub const REPORT_SCHEMA: u32 = 1;

/// Per-stage fit diagnostics recorded in binarize sidecars.
#[derive(Clone, Debug, Serialize)]
pub struct StageInfo {
    pub lambda: f64,
    pub energy: f64,
    pub irls_iters: usize,
    pub objective: f64,
}

/// JSON sidecar written next to every binarize output. Method-specific
/// fields are omitted when they do not apply (an otsu run carries no
/// boosting-stage fields, for example).
#[derive(Clone, Debug, Serialize)]
pub struct Sidecar {
    pub schema: u32,
    pub input: String,
    pub method: String,
    pub rows: usize,
    pub cols: usize,
    pub inverted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_scale: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageInfo>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subtracted_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subtracted_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub foreground_fraction: f64,
    pub seconds: f64,
}

/// Metrics of one successfully evaluated image.
#[derive(Clone, Debug, Serialize)]
pub struct RowData {
    pub fm: f64,
    pub pfm: f64,
    pub psnr: f64,
    pub drd: f64,
    pub mpm: f64,
    /// Global threshold, when the method has one.
    pub tau: Option<f64>,
    /// Boosting stages used (0 for baselines).
    pub stages: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub id: String,
    pub outcome: Result<RowData, String>,
}

/// Arithmetic mean over the successful rows, the aggregation the summary
/// tables use.
pub fn mean_row(rows: &[Row]) -> Option<RowData> {
    let ok: Vec<&RowData> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    if ok.is_empty() {
        return None;
    }
    let n = ok.len() as f64;
    let taus: Vec<f64> = ok.iter().filter_map(|r| r.tau).collect();
    Some(RowData {
        fm: ok.iter().map(|r| r.fm).sum::<f64>() / n,
        pfm: ok.iter().map(|r| r.pfm).sum::<f64>() / n,
        psnr: ok.iter().map(|r| r.psnr).sum::<f64>() / n,
        drd: ok.iter().map(|r| r.drd).sum::<f64>() / n,
        mpm: ok.iter().map(|r| r.mpm).sum::<f64>() / n,
        tau: if taus.is_empty() {
            None
        } else {
            Some(taus.iter().sum::<f64>() / taus.len() as f64)
        },
        stages: 0,
        seconds: ok.iter().map(|r| r.seconds).sum::<f64>() / n,
    })
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Renders the CSV report: a schema comment, the header, one row per image
/// in id order, and a final mean row over the successful ones.
pub fn render_csv(rows: &[Row]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# schema: {REPORT_SCHEMA}\n"));
    out.push_str("id,FM,pFM,PSNR,DRD,MPM,tau,stages,seconds,error\n");
    for row in rows {
        match &row.outcome {
            Ok(d) => out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{:.3},\n",
                csv_escape(&row.id),
                d.fm,
                d.pfm,
                d.psnr,
                d.drd,
                d.mpm,
                fmt_opt(d.tau),
                d.stages,
                d.seconds
            )),
            Err(msg) => out.push_str(&format!(
                "{},,,,,,,,,{}\n",
                csv_escape(&row.id),
                csv_escape(msg)
            )),
        }
    }
    if let Some(mean) = mean_row(rows) {
        out.push_str(&format!(
            "mean,{:.6},{:.6},{:.6},{:.6},{:.6},{},,{:.3},\n",
            mean.fm,
            mean.pfm,
            mean.psnr,
            mean.drd,
            mean.mpm,
            fmt_opt(mean.tau),
            mean.seconds
        ));
    }
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    id: &'a str,
    #[serde(flatten)]
    data: Option<&'a RowData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: u32,
    method: &'a str,
    rows: Vec<JsonRow<'a>>,
    mean: Option<RowData>,
}

pub fn render_json(method: &str, rows: &[Row]) -> String {
    let report = JsonReport {
        schema: REPORT_SCHEMA,
        method,
        rows: rows
            .iter()
            .map(|r| JsonRow {
                id: &r.id,
                data: r.outcome.as_ref().ok(),
                error: r.outcome.as_ref().err().map(|s| s.as_str()),
            })
            .collect(),
        mean: mean_row(rows),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}
