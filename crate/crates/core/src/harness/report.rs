use super::EvalReport;
use crate::error::{Error, Result};

/// Published overall result of the full method, shown beside ours.
pub const REFERENCE_LABEL: &str = "CRM-PPO (published)";
pub const REFERENCE_SUCCESS: f64 = 0.95;
pub const REFERENCE_LENGTH: f64 = 273.07;

/// Side-by-side comparison as an aligned text table and its CSV mirror.
/// Every report must cover the same rows.
pub fn emit_report(reports: &[EvalReport], labels: &[&str]) -> Result<(String, String)> {
    if reports.is_empty() || reports.len() != labels.len() {
        return Err(Error::config("compare", "need one label per report and at least one report"));
    }
    let rows = reports[0].labels();
    if let Some(bad) = reports.iter().position(|r| r.labels() != rows) {
        return Err(Error::config(
            "compare",
            format!("report `{}` covers different affordances than `{}`", labels[bad], labels[0]),
        ));
    }

    let mut header = vec!["Affordance".to_string()];
    for l in labels {
        header.push(format!("{l} success"));
        header.push(format!("{l} length"));
    }
    header.push(format!("{REFERENCE_LABEL} success"));
    header.push(format!("{REFERENCE_LABEL} length"));

    let mut table = vec![header];
    for (i, name) in rows.iter().enumerate() {
        let mut line = vec![name.to_string()];
        for r in reports {
            line.push(format!("{:.2}", r.rows[i].success_rate()));
            line.push(format!("{:.2}", r.rows[i].mean_episode_length()));
        }
        if *name == "Overall" {
            line.push(format!("{REFERENCE_SUCCESS:.2}"));
            line.push(format!("{REFERENCE_LENGTH:.2}"));
        } else {
            line.push("-".into());
            line.push("-".into());
        }
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    for (k, row) in table.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        text += cells.join("  ").trim_end();
        text.push('\n');
        if k == 0 {
            text += &"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1));
            text.push('\n');
        }
    }

    let mut csv = String::from("affordance");
    for l in labels {
        let key = l.to_lowercase().replace([' ', '-'], "_");
        csv += &format!(",{key}_success_rate,{key}_mean_episode_length,{key}_n_trials");
    }
    csv += ",reference_success_rate,reference_mean_episode_length\n";
    for (i, name) in rows.iter().enumerate() {
        csv += name;
        for r in reports {
            let row = &r.rows[i];
            csv += &format!(",{},{},{}", row.success_rate(), row.mean_episode_length(), row.n_trials);
        }
        if *name == "Overall" {
            csv += &format!(",{REFERENCE_SUCCESS},{REFERENCE_LENGTH}\n");
        } else {
            csv += ",,\n";
        }
    }
    Ok((text, csv))
}
