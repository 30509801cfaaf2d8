//! Text renderings of a diversity report.

use crowdwrite_core::diversity::{CellStats, DiversityReport};

use crate::config::ReportFormat;

pub const CSV_COLUMNS: [&str; 8] = [
    "group",
    "class",
    "model",
    "participants",
    "k",
    "silhouette",
    "entropy_mean",
    "entropy_sd",
];

pub fn render(report: &DiversityReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Md => markdown(report),
        ReportFormat::Csv => csv(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

/// k and silhouette of the group's retained clusterings, `;`-joined in rank order.
fn clustering_columns(report: &DiversityReport, cell: &CellStats, precision: Option<usize>) -> (String, String) {
    let metas: Vec<_> = report.clusterings_for(cell.group).collect();
    let ks = metas.iter().map(|m| m.k.to_string()).collect::<Vec<_>>().join(";");
    let sils = metas
        .iter()
        .map(|m| match precision {
            Some(p) => format!("{:.*}", p, m.silhouette),
            None => m.silhouette.to_string(),
        })
        .collect::<Vec<_>>()
        .join(";");
    (ks, sils)
}

pub fn csv(report: &DiversityReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for cell in &report.cells {
        let (k, sil) = clustering_columns(report, cell, None);
        w.write_record([
            cell.group.to_string(),
            cell.class.to_string(),
            cell.model.clone(),
            cell.participants.to_string(),
            k,
            sil,
            cell.entropy_mean.to_string(),
            cell.entropy_sd.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn markdown(report: &DiversityReport) -> String {
    let mut out = format!(
        "| {} |\n|{}\n",
        CSV_COLUMNS.join(" | "),
        " --- |".repeat(CSV_COLUMNS.len())
    );
    for cell in &report.cells {
        let (k, sil) = clustering_columns(report, cell, Some(4));
        let flag = if cell.low_confidence { " (low n)" } else { "" };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {:.4}{} | {:.4} |\n",
            cell.group, cell.class, cell.model, cell.participants, k, sil, cell.entropy_mean, flag, cell.entropy_sd
        ));
    }
    out
}
