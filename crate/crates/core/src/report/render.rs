//! Rendering a [`Report`] as text, JSON, or flat CSV.

use crate::error::Result;
use crate::io::OutputFormat;

use super::{Cell, Report, Section};

/// Format with the given number of significant digits, switching to
/// scientific notation outside a comfortable table range.
pub fn format_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "undefined".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    if v == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    let exp = v.abs().log10().floor() as i32;
    if exp >= digits as i32 || exp < -4 {
        format!("{:.*e}", digits - 1, v)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    }
}

/// Four-decimal p-value, with everything below 5e-5 printed as `0.0000`.
pub fn format_p(p: f64) -> String {
    if !p.is_finite() {
        return "undefined".into();
    }
    if p < 5e-5 {
        "0.0000".into()
    } else {
        format!("{p:.4}")
    }
}

/// Significance stars against ascending thresholds.
pub fn stars(p: f64, levels: &[f64]) -> &'static str {
    if !p.is_finite() {
        return "";
    }
    match levels {
        [a, b, c] => {
            if p < *a {
                "***"
            } else if p < *b {
                "**"
            } else if p < *c {
                "*"
            } else {
                ""
            }
        }
        _ => "",
    }
}

const SIG_DIGITS: usize = 7;

fn cell_text(cell: &Cell, levels: &[f64]) -> String {
    match cell {
        Cell::Empty => String::new(),
        Cell::Text { text } => text.clone(),
        Cell::Integer { value } => value.to_string(),
        Cell::Number { value } => format_sig(*value, SIG_DIGITS),
        Cell::PValue { value } => format_p(*value),
        Cell::Starred { value, p } => {
            format!("{}{}", format_sig(*value, SIG_DIGITS), stars(*p, levels))
        }
        Cell::Paren { value } => format!("({})", format_sig(*value, SIG_DIGITS)),
    }
}

fn render_section_text(out: &mut String, section: &Section, levels: &[f64]) {
    out.push_str(&format!("== {} [{}] ==\n", section.title, section.id));
    if let Some(err) = &section.error {
        let kind = match err.kind {
            super::StageErrorKind::Validation => "validation",
            super::StageErrorKind::Numerical => "numerical",
        };
        out.push_str(&format!("ERROR ({kind}): {}\n", err.message));
    }
    if let Some(table) = &section.table {
        let ncols = table.columns.len();
        let mut texts: Vec<Vec<String>> = Vec::with_capacity(table.rows.len() + 1);
        texts.push(table.columns.clone());
        for row in &table.rows {
            let mut r: Vec<String> = row.iter().map(|c| cell_text(c, levels)).collect();
            r.resize(ncols, String::new());
            texts.push(r);
        }
        let widths: Vec<usize> = (0..ncols)
            .map(|j| texts.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        for (ri, row) in texts.iter().enumerate() {
            let mut line = String::new();
            for (j, cell) in row.iter().enumerate() {
                if j > 0 {
                    line.push_str("  ");
                }
                let pad = widths[j].saturating_sub(cell.chars().count());
                if j == 0 {
                    line.push_str(cell);
                    if j + 1 < ncols {
                        line.push_str(&" ".repeat(pad));
                    }
                } else {
                    line.push_str(&" ".repeat(pad));
                    line.push_str(cell);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
            if ri == 0 {
                let total: usize =
                    widths.iter().sum::<usize>() + 2 * (ncols.saturating_sub(1));
                out.push_str(&"-".repeat(total));
                out.push('\n');
            }
        }
    }
    for note in &section.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    out.push('\n');
}

/// Fixed-layout text rendering; identical reports produce identical bytes.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&report.title);
    out.push('\n');
    out.push_str(&"=".repeat(report.title.chars().count()));
    out.push_str("\n\n");
    for section in &report.sections {
        render_section_text(&mut out, section, &report.significance_levels);
    }
    out
}

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Flat CSV: one line per table cell with section provenance and the
/// full-precision value, plus one line per note and per recorded error.
pub fn render_csv(report: &Report) -> String {
    let mut out = String::from("section,provenance,row,column,text,value\n");
    let levels = &report.significance_levels;
    for section in &report.sections {
        if let Some(err) = &section.error {
            out.push_str(&format!(
                "{},{},,error,{},\n",
                csv_quote(&section.id),
                csv_quote(&section.provenance),
                csv_quote(&err.message)
            ));
        }
        if let Some(table) = &section.table {
            for (ri, row) in table.rows.iter().enumerate() {
                for (ci, cell) in row.iter().enumerate() {
                    if matches!(cell, Cell::Empty) {
                        continue;
                    }
                    let column = table
                        .columns
                        .get(ci)
                        .map(String::as_str)
                        .unwrap_or("");
                    let value = cell
                        .value()
                        .map(|v| format!("{v}"))
                        .unwrap_or_default();
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        csv_quote(&section.id),
                        csv_quote(&section.provenance),
                        ri,
                        csv_quote(column),
                        csv_quote(&cell_text(cell, levels)),
                        value
                    ));
                }
            }
        }
        for note in &section.notes {
            out.push_str(&format!(
                "{},{},,note,{},\n",
                csv_quote(&section.id),
                csv_quote(&section.provenance),
                csv_quote(note)
            ));
        }
    }
    out
}

/// Render in the requested format.
pub fn render(report: &Report, format: OutputFormat) -> Result<String> {
    Ok(match format {
        OutputFormat::Text => render_text(report),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)
                .map_err(|e| crate::error::Error::Config(e.to_string()))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => render_csv(report),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{Section, Table};

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(17.8207, 7), "17.82070");
        assert_eq!(format_sig(0.611, 7), "0.6110000");
        assert_eq!(format_sig(-2.81, 7), "-2.810000");
        assert_eq!(format_sig(0.0, 7), "0.000000");
        assert_eq!(format_sig(12345678.0, 7), "1.234568e7");
        assert_eq!(format_sig(0.00001234, 7), "1.234000e-5");
        assert_eq!(format_sig(f64::NAN, 7), "undefined");
    }

    #[test]
    fn p_value_formatting_floor() {
        assert_eq!(format_p(0.0184), "0.0184");
        assert_eq!(format_p(4.9e-5), "0.0000");
        assert_eq!(format_p(1e-12), "0.0000");
        assert_eq!(format_p(0.5), "0.5000");
    }

    #[test]
    fn star_thresholds() {
        let levels = [0.01, 0.05, 0.10];
        assert_eq!(stars(0.004, &levels), "***");
        assert_eq!(stars(0.02, &levels), "**");
        assert_eq!(stars(0.07, &levels), "*");
        assert_eq!(stars(0.2, &levels), "");
    }

    fn tiny_report() -> Report {
        let mut r = Report::new("t", vec![0.01, 0.05, 0.10]);
        r.sections.push(
            Section::new("a", "A", "estimate").with_table(Table {
                columns: vec!["Variable".into(), "POLS".into()],
                rows: vec![
                    vec![Cell::text("size"), Cell::starred(0.25, 0.004)],
                    vec![Cell::Empty, Cell::paren(2.91)],
                ],
            }),
        );
        r
    }

    #[test]
    fn text_rendering_is_deterministic_and_starred() {
        let a = render_text(&tiny_report());
        let b = render_text(&tiny_report());
        assert_eq!(a, b);
        assert!(a.contains("0.2500000***"), "{a}");
        assert!(a.contains("(2.910000)"), "{a}");
    }

    #[test]
    fn csv_carries_provenance_and_full_precision() {
        let mut r = tiny_report();
        r.sections[0].table.as_mut().unwrap().rows[0][1] =
            Cell::num(0.123456789012345678);
        let csv = render_csv(&r);
        assert!(csv.contains("a,estimate,0,POLS"), "{csv}");
        assert!(csv.contains("0.12345678901234568"), "{csv}");
    }

    #[test]
    fn csv_quotes_commas() {
        assert_eq!(csv_quote("a,b"), "\"a,b\"");
        assert_eq!(csv_quote("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_quote("plain"), "plain");
    }
}
