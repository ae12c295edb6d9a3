//! Financial-ratio construction from raw bank statements plus macro series.
//!
//! Produces the panel with series ROA, ROE, NIM, NPLR, LLPR, CAR, SIZE, GDP,
//! INF. Return ratios use the average of opening and closing balances in the
//! denominator, so each entity's first observed year has missing ROA/ROE by
//! construction. All ratios are stored in percentage points; SIZE is the
//! natural log of total assets.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

/// One bank-year of raw statement lines.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBankRecord {
    pub entity_id: String,
    pub period: i32,
    pub net_profit_after_tax: f64,
    pub total_assets: f64,
    pub total_equity: f64,
    pub net_interest_income: f64,
    pub earning_assets: f64,
    pub non_performing_loans: f64,
    pub gross_loans: f64,
    pub credit_loss_provision: f64,
    pub tier1_capital: f64,
    pub tier2_capital: f64,
    pub risk_weighted_assets: f64,
}

/// One year of macro covariates, already in percentage points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroRecord {
    pub period: i32,
    pub gdp_growth: f64,
    pub inflation: f64,
}

/// Ratio-construction output: the panel plus per-record diagnostics for
/// rejected records and construction-time notes.
#[derive(Debug)]
pub struct RatioBuild {
    pub panel: PanelDataset,
    pub diagnostics: Vec<String>,
}

/// Names of the constructed series, in storage order.
pub const RATIO_SERIES: [&str; 9] = [
    "ROA", "ROE", "NIM", "NPLR", "LLPR", "CAR", "SIZE", "GDP", "INF",
];

/// Build the ratio panel from raw records and macro series.
///
/// Records failing the positivity requirements on total assets, risk-weighted
/// assets, or earning assets are rejected with a diagnostic; a negative
/// gross-loans figure likewise rejects the record, while a zero one only
/// blanks the loan-quality ratios. Every bank-record period must be covered
/// by the macro series.
pub fn compute_ratios(
    records: &[RawBankRecord],
    macros: &[MacroRecord],
) -> Result<RatioBuild> {
    if records.is_empty() {
        return Err(Error::validation("no bank records supplied"));
    }
    let mut macro_by_period: BTreeMap<i32, MacroRecord> = BTreeMap::new();
    for m in macros {
        if macro_by_period.insert(m.period, *m).is_some() {
            return Err(Error::validation(format!(
                "duplicate macro record for period {}",
                m.period
            )));
        }
    }
    if let (Some(&first), Some(&last)) = (
        macro_by_period.keys().next(),
        macro_by_period.keys().next_back(),
    ) {
        for y in first..=last {
            if !macro_by_period.contains_key(&y) {
                return Err(Error::validation(format!(
                    "macro series has a gap at period {y}; periods must be contiguous"
                )));
            }
        }
    }

    let mut diagnostics = Vec::new();
    // (entity, period) -> record, rejecting invalid denominators up front.
    let mut by_key: BTreeMap<(String, i32), RawBankRecord> = BTreeMap::new();
    for r in records {
        let reject = |field: &str| {
            format!(
                "rejected record entity={} period={}: {field} must be positive",
                r.entity_id, r.period
            )
        };
        if r.total_assets <= 0.0 {
            diagnostics.push(reject("total_assets"));
            continue;
        }
        if r.risk_weighted_assets <= 0.0 {
            diagnostics.push(reject("risk_weighted_assets"));
            continue;
        }
        if r.earning_assets <= 0.0 {
            diagnostics.push(reject("earning_assets"));
            continue;
        }
        if r.gross_loans < 0.0 {
            diagnostics.push(format!(
                "rejected record entity={} period={}: gross_loans must be nonnegative",
                r.entity_id, r.period
            ));
            continue;
        }
        if !macro_by_period.contains_key(&r.period) {
            return Err(Error::validation(format!(
                "no macro record for period {} (entity {})",
                r.period, r.entity_id
            )));
        }
        let key = (r.entity_id.clone(), r.period);
        if by_key.insert(key, r.clone()).is_some() {
            return Err(Error::validation(format!(
                "duplicate record for entity {} period {}",
                r.entity_id, r.period
            )));
        }
    }
    if by_key.is_empty() {
        return Err(Error::validation(
            "all bank records were rejected during validation",
        ));
    }

    let mut entities: Vec<String> = by_key.keys().map(|(e, _)| e.clone()).collect();
    entities.dedup();
    let first_period = by_key.keys().map(|&(_, p)| p).min().expect("nonempty");
    let last_period = by_key.keys().map(|&(_, p)| p).max().expect("nonempty");
    let n_periods = (last_period - first_period + 1) as usize;

    let mut panel = PanelDataset::new(entities.clone(), first_period, n_periods)?;
    for name in RATIO_SERIES {
        panel.add_series(name, vec![None; entities.len() * n_periods])?;
    }
    let idx: BTreeMap<&str, usize> = RATIO_SERIES
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, i))
        .collect();

    for (ei, entity) in entities.iter().enumerate() {
        for t in 0..n_periods {
            let period = first_period + t as i32;
            let Some(r) = by_key.get(&(entity.clone(), period)) else {
                continue;
            };
            let prev = if t > 0 {
                by_key.get(&(entity.clone(), period - 1))
            } else {
                None
            };
            // Return ratios need the opening balance from t-1.
            if let Some(p) = prev {
                let avg_assets = 0.5 * (p.total_assets + r.total_assets);
                panel.set_value(
                    idx["ROA"],
                    ei,
                    t,
                    Some(r.net_profit_after_tax / avg_assets * 100.0),
                );
                let avg_equity = 0.5 * (p.total_equity + r.total_equity);
                if avg_equity > 0.0 {
                    panel.set_value(
                        idx["ROE"],
                        ei,
                        t,
                        Some(r.net_profit_after_tax / avg_equity * 100.0),
                    );
                } else {
                    diagnostics.push(format!(
                        "entity={entity} period={period}: nonpositive average equity, ROE left missing"
                    ));
                }
            }
            panel.set_value(
                idx["NIM"],
                ei,
                t,
                Some(r.net_interest_income / r.earning_assets * 100.0),
            );
            if r.gross_loans > 0.0 {
                panel.set_value(
                    idx["NPLR"],
                    ei,
                    t,
                    Some(r.non_performing_loans / r.gross_loans * 100.0),
                );
                panel.set_value(
                    idx["LLPR"],
                    ei,
                    t,
                    Some(r.credit_loss_provision / r.gross_loans * 100.0),
                );
            } else {
                diagnostics.push(format!(
                    "entity={entity} period={period}: zero gross_loans, NPLR/LLPR left missing"
                ));
            }
            panel.set_value(
                idx["CAR"],
                ei,
                t,
                Some((r.tier1_capital + r.tier2_capital) / r.risk_weighted_assets * 100.0),
            );
            panel.set_value(idx["SIZE"], ei, t, Some(r.total_assets.ln()));
            let m = macro_by_period[&period];
            panel.set_value(idx["GDP"], ei, t, Some(m.gdp_growth));
            panel.set_value(idx["INF"], ei, t, Some(m.inflation));
        }
    }

    Ok(RatioBuild { panel, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(entity: &str, period: i32) -> RawBankRecord {
        RawBankRecord {
            entity_id: entity.into(),
            period,
            net_profit_after_tax: 1.0,
            total_assets: 100.0,
            total_equity: 10.0,
            net_interest_income: 3.0,
            earning_assets: 80.0,
            non_performing_loans: 2.0,
            gross_loans: 60.0,
            credit_loss_provision: 0.6,
            tier1_capital: 8.0,
            tier2_capital: 4.0,
            risk_weighted_assets: 100.0,
        }
    }

    fn macros(years: std::ops::RangeInclusive<i32>) -> Vec<MacroRecord> {
        years
            .map(|y| MacroRecord {
                period: y,
                gdp_growth: 6.0,
                inflation: 4.0,
            })
            .collect()
    }

    #[test]
    fn roa_uses_average_denominator() {
        let recs = vec![record("a", 2006), record("a", 2007)];
        let b = compute_ratios(&recs, &macros(2006..=2007)).unwrap();
        let p = &b.panel;
        let roa = p.series_index("ROA").unwrap();
        // First year has no opening balance.
        assert_eq!(p.value(roa, 0, 0), None);
        // NPAT=1 over avg assets (100+100)/2 = 100, times 100 -> 1.0%.
        assert!((p.value(roa, 0, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn car_is_direct_ratio() {
        let recs = vec![record("a", 2006)];
        let b = compute_ratios(&recs, &macros(2006..=2006)).unwrap();
        let p = &b.panel;
        let car = p.series_index("CAR").unwrap();
        assert!((p.value(car, 0, 0).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn size_is_natural_log() {
        let mut r = record("a", 2006);
        r.total_assets = std::f64::consts::E.powi(18);
        let b = compute_ratios(&[r], &macros(2006..=2006)).unwrap();
        let p = &b.panel;
        let size = p.series_index("SIZE").unwrap();
        assert!((p.value(size, 0, 0).unwrap() - 18.0).abs() < 1e-9);
    }

    #[test]
    fn scale_invariance_of_ratios_and_size_shift() {
        let recs = vec![record("a", 2006), record("a", 2007)];
        let base = compute_ratios(&recs, &macros(2006..=2007)).unwrap().panel;
        let k = 1000.0;
        let scaled: Vec<RawBankRecord> = recs
            .iter()
            .map(|r| RawBankRecord {
                entity_id: r.entity_id.clone(),
                period: r.period,
                net_profit_after_tax: r.net_profit_after_tax * k,
                total_assets: r.total_assets * k,
                total_equity: r.total_equity * k,
                net_interest_income: r.net_interest_income * k,
                earning_assets: r.earning_assets * k,
                non_performing_loans: r.non_performing_loans * k,
                gross_loans: r.gross_loans * k,
                credit_loss_provision: r.credit_loss_provision * k,
                tier1_capital: r.tier1_capital * k,
                tier2_capital: r.tier2_capital * k,
                risk_weighted_assets: r.risk_weighted_assets * k,
            })
            .collect();
        let sc = compute_ratios(&scaled, &macros(2006..=2007)).unwrap().panel;
        for name in ["ROA", "ROE", "NIM", "NPLR", "LLPR", "CAR"] {
            let s = base.series_index(name).unwrap();
            for t in 0..2 {
                match (base.value(s, 0, t), sc.value(s, 0, t)) {
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9, "{name} at t={t}"),
                    (None, None) => {}
                    other => panic!("missingness changed for {name}: {other:?}"),
                }
            }
        }
        let s = base.series_index("SIZE").unwrap();
        for t in 0..2 {
            let d = sc.value(s, 0, t).unwrap() - base.value(s, 0, t).unwrap();
            assert!((d - k.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn nonpositive_denominators_reject_record() {
        let mut bad = record("a", 2006);
        bad.total_assets = 0.0;
        let b = compute_ratios(&[bad, record("b", 2006)], &macros(2006..=2006)).unwrap();
        assert_eq!(b.panel.n_entities(), 1);
        assert!(b.diagnostics[0].contains("total_assets"));
    }

    #[test]
    fn zero_gross_loans_blanks_loan_ratios_only() {
        let mut r = record("a", 2006);
        r.gross_loans = 0.0;
        r.non_performing_loans = 0.0;
        r.credit_loss_provision = 0.0;
        let b = compute_ratios(&[r], &macros(2006..=2006)).unwrap();
        let p = &b.panel;
        assert_eq!(p.value(p.series_index("NPLR").unwrap(), 0, 0), None);
        assert_eq!(p.value(p.series_index("LLPR").unwrap(), 0, 0), None);
        assert!(p.value(p.series_index("NIM").unwrap(), 0, 0).is_some());
        assert!(b.diagnostics.iter().any(|d| d.contains("gross_loans")));
    }

    #[test]
    fn missing_macro_period_is_hard_error() {
        let recs = vec![record("a", 2006)];
        assert!(compute_ratios(&recs, &macros(2007..=2007)).is_err());
    }
}
