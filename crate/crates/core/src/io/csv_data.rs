//! CSV schemas and readers.
//!
//! Three schemas are understood:
//!
//! * bank statements: `entity_id, year, net_profit_after_tax, total_assets,
//!   total_equity, net_interest_income, earning_assets, npl, gross_loans,
//!   provisions, tier1, tier2, rwa` — one row per bank-year, every cell
//!   required;
//! * macro series: `year, gdp, inf` — one row per year, every cell required;
//! * prebuilt panel: `entity_id, year`, then any value columns — empty cells
//!   are missing observations.
//!
//! Columns may appear in any order (resolved by header name,
//! case-insensitively); numbers use `.` as the radix point with no
//! thousands separators. Duplicate `(entity, year)` keys are rejected with
//! both file rows cited.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::panel::{MacroRecord, PanelDataset, RawBankRecord};

const BANK_COLUMNS: [&str; 13] = [
    "entity_id",
    "year",
    "net_profit_after_tax",
    "total_assets",
    "total_equity",
    "net_interest_income",
    "earning_assets",
    "npl",
    "gross_loans",
    "provisions",
    "tier1",
    "tier2",
    "rwa",
];

const MACRO_COLUMNS: [&str; 3] = ["year", "gdp", "inf"];

/// Maps declared column names to their positions in the header, demanding an
/// exact (order-free, case-insensitive) match with the schema.
fn resolve_header(
    headers: &csv::StringRecord,
    expected: &[&str],
    schema: &str,
) -> Result<Vec<usize>> {
    let found: Vec<String> = headers
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let mut positions = Vec::with_capacity(expected.len());
    let mut missing = Vec::new();
    for &want in expected {
        match found.iter().position(|h| h == want) {
            Some(p) => positions.push(p),
            None => missing.push(want),
        }
    }
    let extras: Vec<&str> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            !expected
                .iter()
                .any(|e| *e == found[*i])
        })
        .map(|(_, h)| h)
        .collect();
    if !missing.is_empty() || !extras.is_empty() {
        let mut parts = Vec::new();
        if !missing.is_empty() {
            parts.push(format!("missing column(s): {}", missing.join(", ")));
        }
        if !extras.is_empty() {
            parts.push(format!("unexpected column(s): {}", extras.join(", ")));
        }
        return Err(Error::validation(format!(
            "{schema} header does not match the schema ({}); expected: {}; found: {}",
            parts.join("; "),
            expected.join(", "),
            headers.iter().collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(positions)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_number(cell: &str, line: u64, column: &str) -> Result<f64> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return Err(Error::validation(format!(
            "row {line}, column '{column}': empty cell; this schema requires a value in every cell"
        )));
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::validation(format!(
            "row {line}, column '{column}': cannot parse '{trimmed}' as a number"
        ))),
    }
}

fn parse_year(cell: &str, line: u64) -> Result<i32> {
    let trimmed = cell.trim();
    trimmed.parse::<i32>().map_err(|_| {
        Error::validation(format!(
            "row {line}, column 'year': cannot parse '{trimmed}' as an integer year"
        ))
    })
}

/// Read raw bank statements from any reader.
pub fn read_bank_records<R: Read>(reader: R) -> Result<Vec<RawBankRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let pos = resolve_header(rdr.headers()?, &BANK_COLUMNS, "bank CSV")?;
    let mut out = Vec::new();
    let mut seen: HashMap<(String, i32), u64> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        let cell = |j: usize| record.get(pos[j]).unwrap_or("");
        let entity_id = cell(0).trim().to_string();
        if entity_id.is_empty() {
            return Err(Error::validation(format!(
                "row {line}, column 'entity_id': empty entity id"
            )));
        }
        let year = parse_year(cell(1), line)?;
        if let Some(first) = seen.insert((entity_id.clone(), year), line) {
            return Err(Error::validation(format!(
                "duplicate (entity, year) key ('{entity_id}', {year}) at rows {first} and {line}"
            )));
        }
        let num = |j: usize| parse_number(cell(j), line, BANK_COLUMNS[j]);
        out.push(RawBankRecord {
            entity_id,
            period: year,
            net_profit_after_tax: num(2)?,
            total_assets: num(3)?,
            total_equity: num(4)?,
            net_interest_income: num(5)?,
            earning_assets: num(6)?,
            non_performing_loans: num(7)?,
            gross_loans: num(8)?,
            credit_loss_provision: num(9)?,
            tier1_capital: num(10)?,
            tier2_capital: num(11)?,
            risk_weighted_assets: num(12)?,
        });
    }
    if out.is_empty() {
        return Err(Error::validation("bank CSV contains no data rows"));
    }
    Ok(out)
}

/// Read raw bank statements from a file path.
pub fn read_bank_csv(path: impl AsRef<Path>) -> Result<Vec<RawBankRecord>> {
    read_bank_records(File::open(path.as_ref())?)
}

/// Read the macro series from any reader.
pub fn read_macro_records<R: Read>(reader: R) -> Result<Vec<MacroRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let pos = resolve_header(rdr.headers()?, &MACRO_COLUMNS, "macro CSV")?;
    let mut out = Vec::new();
    let mut seen: HashMap<i32, u64> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        let cell = |j: usize| record.get(pos[j]).unwrap_or("");
        let year = parse_year(cell(0), line)?;
        if let Some(first) = seen.insert(year, line) {
            return Err(Error::validation(format!(
                "duplicate year {year} at rows {first} and {line}"
            )));
        }
        out.push(MacroRecord {
            period: year,
            gdp_growth: parse_number(cell(1), line, "gdp")?,
            inflation: parse_number(cell(2), line, "inf")?,
        });
    }
    if out.is_empty() {
        return Err(Error::validation("macro CSV contains no data rows"));
    }
    Ok(out)
}

/// Read the macro series from a file path.
pub fn read_macro_csv(path: impl AsRef<Path>) -> Result<Vec<MacroRecord>> {
    read_macro_records(File::open(path.as_ref())?)
}

/// Read a prebuilt panel (`entity_id, year`, then value columns) from any
/// reader. Entities keep first-appearance order; the period range spans the
/// observed years; empty cells become missing observations.
pub fn read_panel<R: Read>(reader: R) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if cols.len() < 3
        || !cols[0].eq_ignore_ascii_case("entity_id")
        || !cols[1].eq_ignore_ascii_case("year")
    {
        return Err(Error::validation(format!(
            "prebuilt panel header must start with entity_id, year and carry at least one \
             value column; found: {}",
            cols.join(", ")
        )));
    }
    let series_names: Vec<String> = cols[2..].to_vec();
    for (a, name) in series_names.iter().enumerate() {
        if series_names[..a]
            .iter()
            .any(|b| b.eq_ignore_ascii_case(name))
        {
            return Err(Error::validation(format!(
                "duplicate value column '{name}' in panel header"
            )));
        }
    }

    struct Row {
        entity: String,
        year: i32,
        values: Vec<Option<f64>>,
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut seen: HashMap<(String, i32), u64> = HashMap::new();
    let mut entities: Vec<String> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        let entity = record.get(0).unwrap_or("").trim().to_string();
        if entity.is_empty() {
            return Err(Error::validation(format!(
                "row {line}, column 'entity_id': empty entity id"
            )));
        }
        let year = parse_year(record.get(1).unwrap_or(""), line)?;
        if let Some(first) = seen.insert((entity.clone(), year), line) {
            return Err(Error::validation(format!(
                "duplicate (entity, year) key ('{entity}', {year}) at rows {first} and {line}"
            )));
        }
        if !entities.contains(&entity) {
            entities.push(entity.clone());
        }
        let mut values = Vec::with_capacity(series_names.len());
        for (j, name) in series_names.iter().enumerate() {
            let cell = record.get(2 + j).unwrap_or("").trim();
            if cell.is_empty() {
                values.push(None);
            } else {
                values.push(Some(parse_number(cell, line, name)?));
            }
        }
        rows.push(Row {
            entity,
            year,
            values,
        });
    }
    if rows.is_empty() {
        return Err(Error::validation("panel CSV contains no data rows"));
    }

    let first = rows.iter().map(|r| r.year).min().expect("nonempty");
    let last = rows.iter().map(|r| r.year).max().expect("nonempty");
    let n_periods = (last - first + 1) as usize;
    let mut panel = PanelDataset::new(entities.clone(), first, n_periods)?;
    let entity_pos: HashMap<&str, usize> = entities
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_str(), i))
        .collect();
    let mut columns = vec![vec![None; entities.len() * n_periods]; series_names.len()];
    for row in &rows {
        let i = entity_pos[row.entity.as_str()];
        let t = (row.year - first) as usize;
        for (j, v) in row.values.iter().enumerate() {
            columns[j][i * n_periods + t] = *v;
        }
    }
    for (name, col) in series_names.iter().zip(columns) {
        panel.add_series(name.clone(), col)?;
    }
    Ok(panel)
}

/// Read a prebuilt panel from a file path.
pub fn read_panel_csv(path: impl AsRef<Path>) -> Result<PanelDataset> {
    read_panel(File::open(path.as_ref())?)
}

/// Write a panel in the prebuilt schema. One row per (entity, year) with at
/// least one observed series; missing cells are left empty; numbers use the
/// shortest representation that parses back to the same value, so
/// export-then-ingest reproduces the dataset exactly.
pub fn write_panel<W: Write>(writer: W, panel: &PanelDataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["entity_id".to_string(), "year".to_string()];
    header.extend(panel.series_names().iter().cloned());
    wtr.write_record(&header)?;
    for i in 0..panel.n_entities() {
        for t in 0..panel.n_periods() {
            let cells: Vec<String> = (0..panel.series_names().len())
                .map(|s| match panel.value(s, i, t) {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                })
                .collect();
            if cells.iter().all(String::is_empty) {
                continue;
            }
            let mut row = vec![panel.entities()[i].clone(), panel.periods()[t].to_string()];
            row.extend(cells);
            wtr.write_record(&row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Write a panel to a file path in the prebuilt schema.
pub fn write_panel_csv(path: impl AsRef<Path>, panel: &PanelDataset) -> Result<()> {
    write_panel(File::create(path.as_ref())?, panel)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BANK_HEADER: &str = "entity_id,year,net_profit_after_tax,total_assets,total_equity,\
net_interest_income,earning_assets,npl,gross_loans,provisions,tier1,tier2,rwa";

    #[test]
    fn bank_rows_parse_into_records() {
        let csv = format!(
            "{BANK_HEADER}\na,2006,1,100,10,3,80,2,60,0.6,8,4,100\na,2007,1.5,110,11,3,82,2,61,0.7,8,4,101\n"
        );
        let recs = read_bank_records(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].entity_id, "a");
        assert_eq!(recs[1].period, 2007);
        assert_eq!(recs[1].net_profit_after_tax, 1.5);
    }

    #[test]
    fn bank_columns_resolve_in_any_order() {
        let csv = "year,entity_id,net_profit_after_tax,total_assets,total_equity,\
net_interest_income,earning_assets,npl,gross_loans,provisions,tier1,tier2,rwa\n\
2006,a,1,100,10,3,80,2,60,0.6,8,4,100\n";
        let recs = read_bank_records(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].entity_id, "a");
        assert_eq!(recs[0].period, 2006);
    }

    #[test]
    fn missing_column_lists_expected_and_found() {
        let csv = "entity_id,year,total_assets\na,2006,100\n";
        let err = read_bank_records(csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("missing column(s)"), "{err}");
        assert!(err.contains("net_profit_after_tax"), "{err}");
        assert!(err.contains("found: entity_id, year, total_assets"), "{err}");
    }

    #[test]
    fn duplicate_bank_key_cites_both_rows() {
        let csv = format!(
            "{BANK_HEADER}\na,2006,1,100,10,3,80,2,60,0.6,8,4,100\nb,2006,1,100,10,3,80,2,60,0.6,8,4,100\na,2006,1,100,10,3,80,2,60,0.6,8,4,100\n"
        );
        let err = read_bank_records(csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("rows 2 and 4"), "{err}");
    }

    #[test]
    fn non_numeric_cell_cites_row_and_column() {
        let csv = format!("{BANK_HEADER}\na,2006,1,abc,10,3,80,2,60,0.6,8,4,100\n");
        let err = read_bank_records(csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        assert!(err.contains("total_assets"), "{err}");
        assert!(err.contains("'abc'"), "{err}");
    }

    #[test]
    fn empty_bank_cell_is_an_error() {
        let csv = format!("{BANK_HEADER}\na,2006,1,,10,3,80,2,60,0.6,8,4,100\n");
        let err = read_bank_records(csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("empty cell"), "{err}");
    }

    #[test]
    fn macro_rows_parse() {
        let recs = read_macro_records("year,gdp,inf\n2006,7.0,7.5\n2007,7.1,8.3\n".as_bytes())
            .unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].gdp_growth, 7.0);
        assert_eq!(recs[1].inflation, 8.3);
    }

    #[test]
    fn duplicate_macro_year_cites_rows() {
        let err = read_macro_records("year,gdp,inf\n2006,7,7\n2006,7,7\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("rows 2 and 3"), "{err}");
    }

    #[test]
    fn panel_toy_file_with_missing_mask() {
        let csv = "entity_id,year,roa,size\na,2006,1.1,18\na,2007,,18.1\nb,2006,0.9,17\n";
        let p = read_panel(csv.as_bytes()).unwrap();
        assert_eq!(p.n_entities(), 2);
        assert_eq!(p.periods(), &[2006, 2007]);
        let roa = p.series_index("roa").unwrap();
        assert_eq!(p.value(roa, 0, 0), Some(1.1));
        assert_eq!(p.value(roa, 0, 1), None);
        assert_eq!(p.value(roa, 1, 1), None); // absent row
        let size = p.series_index("size").unwrap();
        assert_eq!(p.value(size, 0, 1), Some(18.1));
    }

    #[test]
    fn panel_header_must_lead_with_keys() {
        let err = read_panel("id,year,roa\na,2006,1\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("entity_id"), "{err}");
    }

    #[test]
    fn panel_duplicate_key_cites_both_rows() {
        let csv = "entity_id,year,roa\na,2006,1\na,2006,2\n";
        let err = read_panel(csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("rows 2 and 3"), "{err}");
    }

    #[test]
    fn export_then_ingest_is_identity() {
        // Unbalanced two-entity panel with in-span gaps and negatives.
        let csv = "entity_id,year,roa,nplr\nb9,2006,1.25,2.5\nb9,2008,-0.125,3.75\nzz,2007,0.5,\n";
        let original = read_panel(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_panel(&mut buf, &original).unwrap();
        let reread = read_panel(buf.as_slice()).unwrap();
        assert_eq!(original, reread);
    }

    #[test]
    fn export_round_trips_non_dyadic_values() {
        let mut p = PanelDataset::new(vec!["a".into()], 2006, 2).unwrap();
        p.add_series("v", vec![Some(0.1), Some(1.0 / 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_panel(&mut buf, &p).unwrap();
        let reread = read_panel(buf.as_slice()).unwrap();
        assert_eq!(p, reread);
    }
}
