//! Instrument-directive mini-language.
//!
//! Grammar (whitespace separates groups; `collapse` may close the string):
//!
//! ```text
//! spec  := group+ ["collapse"]
//! group := ["D."] "(" term+ ")" | term
//! term  := [range] lagp* name
//! lagp  := "L" digits? "."          (no digits means lag 1)
//! range := "L(" digits "/" digits? ")."
//! name  := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! A range prefix makes a term gmm-style; `D.(...)` makes the enclosed terms
//! iv-style and differenced; bare terms are iv-style in levels. Stacked lag
//! prefixes accumulate (`L.L.x` is the second lag of `x`). The `collapse`
//! keyword sets the collapsed flag on every gmm-style directive in the string.

use crate::error::{Error, Result};

/// One instrument instruction, either a single column (iv) or a block of
/// period-by-lag columns (gmm).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstrumentDirective {
    /// A single instrument column holding `base` lagged `inner_lag` periods,
    /// optionally first-differenced.
    Iv {
        base: String,
        inner_lag: usize,
        differenced: bool,
    },
    /// A block of instruments holding levels of `base` (already lagged
    /// `inner_lag` periods) at block lags `lag_from..=lag_to`; unbounded
    /// when `lag_to` is `None`.
    Gmm {
        base: String,
        inner_lag: usize,
        lag_from: usize,
        lag_to: Option<usize>,
        collapsed: bool,
    },
}

impl InstrumentDirective {
    /// Series the directive draws from.
    pub fn base(&self) -> &str {
        match self {
            InstrumentDirective::Iv { base, .. } => base,
            InstrumentDirective::Gmm { base, .. } => base,
        }
    }

    pub fn is_gmm(&self) -> bool {
        matches!(self, InstrumentDirective::Gmm { .. })
    }

    /// True for iv-style directives wrapped in `D.(...)`.
    pub fn is_differenced_iv(&self) -> bool {
        matches!(
            self,
            InstrumentDirective::Iv {
                differenced: true,
                ..
            }
        )
    }

    fn validate(&self, at: usize) -> Result<()> {
        if let InstrumentDirective::Gmm {
            lag_from, lag_to, ..
        } = self
        {
            if *lag_from == 0 {
                return Err(parse_err(at, "gmm lag range must start at 1 or later"));
            }
            if let Some(to) = lag_to {
                if lag_from > to {
                    return Err(parse_err(at, "gmm lag range start exceeds its end"));
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for InstrumentDirective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InstrumentDirective::Iv {
                base,
                inner_lag,
                differenced,
            } => {
                if *differenced {
                    write!(f, "D.({}{base})", lag_prefix(*inner_lag))
                } else {
                    write!(f, "{}{base}", lag_prefix(*inner_lag))
                }
            }
            InstrumentDirective::Gmm {
                base,
                inner_lag,
                lag_from,
                lag_to,
                ..
            } => {
                let to = lag_to.map(|t| t.to_string()).unwrap_or_default();
                write!(f, "L({lag_from}/{to}).{}{base}", lag_prefix(*inner_lag))
            }
        }
    }
}

fn lag_prefix(lag: usize) -> String {
    match lag {
        0 => String::new(),
        1 => "L.".to_string(),
        n => format!("L{n}."),
    }
}

/// Canonical string for a directive list: consecutive differenced iv
/// directives merge into one `D.(...)` group, and a trailing `collapse`
/// appears when every gmm directive is collapsed.
pub fn canonical_spec_string(directives: &[InstrumentDirective]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut diff_group: Vec<String> = Vec::new();
    let flush = |group: &mut Vec<String>, parts: &mut Vec<String>| {
        if !group.is_empty() {
            parts.push(format!("D.({})", group.join(" ")));
            group.clear();
        }
    };
    for d in directives {
        match d {
            InstrumentDirective::Iv {
                base,
                inner_lag,
                differenced: true,
            } => diff_group.push(format!("{}{base}", lag_prefix(*inner_lag))),
            other => {
                flush(&mut diff_group, &mut parts);
                let mut s = other.to_string();
                // Per-directive Display never carries the collapse suffix.
                if let InstrumentDirective::Gmm { .. } = other {
                    s = s.trim_end().to_string();
                }
                parts.push(s);
            }
        }
    }
    flush(&mut diff_group, &mut parts);
    let gmms: Vec<&InstrumentDirective> = directives.iter().filter(|d| d.is_gmm()).collect();
    let all_collapsed = !gmms.is_empty()
        && gmms.iter().all(|d| {
            matches!(
                d,
                InstrumentDirective::Gmm {
                    collapsed: true,
                    ..
                }
            )
        });
    let mut out = parts.join(" ");
    if all_collapsed {
        out.push_str(" collapse");
    }
    out
}

fn parse_err(at: usize, expected: &str) -> Error {
    Error::validation(format!(
        "instrument spec parse error at byte {at}: {expected}"
    ))
}

struct Scanner<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(s: &'a str) -> Self {
        Scanner {
            s: s.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn starts_with(&self, pat: &str) -> bool {
        self.s[self.pos..].starts_with(pat.as_bytes())
    }

    fn eat(&mut self, pat: &str) -> bool {
        if self.starts_with(pat) {
            self.pos += pat.len();
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Option<usize> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            std::str::from_utf8(&self.s[start..self.pos])
                .ok()
                .and_then(|t| t.parse().ok())
        }
    }

    fn name(&mut self) -> Option<String> {
        let start = self.pos;
        if self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_alphabetic() || self.s[self.pos] == b'_')
        {
            self.pos += 1;
            while self.pos < self.s.len()
                && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
            {
                self.pos += 1;
            }
            Some(String::from_utf8_lossy(&self.s[start..self.pos]).into_owned())
        } else {
            None
        }
    }

    /// `L(` digits `/` digits? `).` — consumed only when fully present.
    fn try_range(&mut self) -> Result<Option<(usize, Option<usize>)>> {
        if !self.starts_with("L(") {
            return Ok(None);
        }
        let at = self.pos;
        self.pos += 2;
        let from = self
            .digits()
            .ok_or_else(|| parse_err(self.pos, "expected digits after 'L('"))?;
        if !self.eat("/") {
            return Err(parse_err(self.pos, "expected '/' in lag range"));
        }
        let to = self.digits();
        if !self.eat(").") {
            return Err(parse_err(self.pos, "expected ').' closing the lag range"));
        }
        let _ = at;
        Ok(Some((from, to)))
    }

    /// `L` digits? `.` — a lag prefix, which must not be the start of a
    /// range (`L(`) and must be followed by further term content.
    fn try_lag_prefix(&mut self) -> Option<usize> {
        if self.peek() != Some(b'L') || self.starts_with("L(") {
            return None;
        }
        let save = self.pos;
        self.pos += 1;
        let n = self.digits().unwrap_or(1);
        if self.eat(".") {
            Some(n)
        } else {
            self.pos = save;
            None
        }
    }

    /// term := [range] lagp* name
    fn term(&mut self, in_diff_group: bool) -> Result<InstrumentDirective> {
        let at = self.pos;
        let range = self.try_range()?;
        if range.is_some() && in_diff_group {
            return Err(parse_err(
                at,
                "gmm-style lag range is not allowed inside a 'D.(...)' group",
            ));
        }
        let mut inner = 0usize;
        while let Some(l) = self.try_lag_prefix() {
            inner += l;
        }
        let name = self
            .name()
            .ok_or_else(|| parse_err(self.pos, "expected a variable name"))?;
        let d = match range {
            Some((from, to)) => InstrumentDirective::Gmm {
                base: name,
                inner_lag: inner,
                lag_from: from,
                lag_to: to,
                collapsed: false,
            },
            None => InstrumentDirective::Iv {
                base: name,
                inner_lag: inner,
                differenced: in_diff_group,
            },
        };
        d.validate(at)?;
        Ok(d)
    }
}

/// Parse a full instrument-spec string into directives.
pub fn parse_instrument_spec(text: &str) -> Result<Vec<InstrumentDirective>> {
    let mut sc = Scanner::new(text);
    let mut out: Vec<InstrumentDirective> = Vec::new();
    let mut collapse_all = false;
    loop {
        sc.skip_ws();
        if sc.peek().is_none() {
            break;
        }
        let at = sc.pos;
        let differenced = sc.eat("D.(");
        if differenced || sc.eat("(") {
            let mut count = 0usize;
            loop {
                sc.skip_ws();
                if sc.eat(")") {
                    break;
                }
                if sc.peek().is_none() {
                    return Err(parse_err(sc.pos, "expected ')' closing the group"));
                }
                out.push(sc.term(differenced)?);
                count += 1;
            }
            if count == 0 {
                return Err(parse_err(at, "empty instrument group"));
            }
        } else {
            // The `collapse` keyword is only valid as the final token.
            let save = sc.pos;
            if let Some(word) = sc.name() {
                if word == "collapse" {
                    sc.skip_ws();
                    if sc.peek().is_none() {
                        collapse_all = true;
                        break;
                    }
                    return Err(parse_err(
                        save,
                        "'collapse' must be the final token of the spec",
                    ));
                }
            }
            sc.pos = save;
            out.push(sc.term(false)?);
        }
    }
    if out.is_empty() && !collapse_all {
        return Err(parse_err(0, "expected at least one instrument directive"));
    }
    if collapse_all {
        for d in &mut out {
            if let InstrumentDirective::Gmm { collapsed, .. } = d {
                *collapsed = true;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(base: &str, lag: usize, diff: bool) -> InstrumentDirective {
        InstrumentDirective::Iv {
            base: base.into(),
            inner_lag: lag,
            differenced: diff,
        }
    }

    #[test]
    fn differenced_group_of_five() {
        let got = parse_instrument_spec("D.(L2.roa L3.gdp L.inf L.size nplr)").unwrap();
        assert_eq!(
            got,
            vec![
                iv("roa", 2, true),
                iv("gdp", 3, true),
                iv("inf", 1, true),
                iv("size", 1, true),
                iv("nplr", 0, true),
            ]
        );
    }

    #[test]
    fn unbounded_gmm_range() {
        let got = parse_instrument_spec("L(1/).L3.llpr").unwrap();
        assert_eq!(
            got,
            vec![InstrumentDirective::Gmm {
                base: "llpr".into(),
                inner_lag: 3,
                lag_from: 1,
                lag_to: None,
                collapsed: false,
            }]
        );
    }

    #[test]
    fn bare_name_is_level_iv() {
        assert_eq!(parse_instrument_spec("x").unwrap(), vec![iv("x", 0, false)]);
    }

    #[test]
    fn stacked_lag_prefixes_accumulate() {
        assert_eq!(
            parse_instrument_spec("L.L.llpr").unwrap(),
            vec![iv("llpr", 2, false)]
        );
        assert_eq!(
            parse_instrument_spec("L2.L3.x").unwrap(),
            vec![iv("x", 5, false)]
        );
    }

    #[test]
    fn collapse_suffix_sets_gmm_flag() {
        let got = parse_instrument_spec("L(1/4).y x collapse").unwrap();
        assert_eq!(
            got,
            vec![
                InstrumentDirective::Gmm {
                    base: "y".into(),
                    inner_lag: 0,
                    lag_from: 1,
                    lag_to: Some(4),
                    collapsed: true,
                },
                iv("x", 0, false),
            ]
        );
    }

    #[test]
    fn errors_carry_byte_offsets() {
        let err = parse_instrument_spec("D.()").unwrap_err().to_string();
        assert!(err.contains("byte 0") && err.contains("empty"), "{err}");
        let err = parse_instrument_spec("L(/3).x").unwrap_err().to_string();
        assert!(err.contains("digits"), "{err}");
        let err = parse_instrument_spec("D.(L(1/).x)").unwrap_err().to_string();
        assert!(err.contains("not allowed inside"), "{err}");
        let err = parse_instrument_spec("L(3/1).x").unwrap_err().to_string();
        assert!(err.contains("exceeds"), "{err}");
        let err = parse_instrument_spec("D.(x").unwrap_err().to_string();
        assert!(err.contains("')'"), "{err}");
        let err = parse_instrument_spec("collapse x").unwrap_err().to_string();
        assert!(err.contains("final token"), "{err}");
    }

    #[test]
    fn table_strings_round_trip() {
        let strings = [
            "D.(L2.roa L3.gdp L.inf L.size nplr)",
            "D.(L3.roe L2.gdp inf size nplr)",
            "D.(L2.nim L2.gdp size inf L.nplr L.car)",
            "L(1/).L3.llpr",
            "L.L.llpr",
            "L(1/6).roa collapse",
        ];
        for s in strings {
            let parsed = parse_instrument_spec(s).unwrap();
            let canon = canonical_spec_string(&parsed);
            let reparsed = parse_instrument_spec(&canon).unwrap();
            assert_eq!(parsed, reparsed, "round trip failed for '{s}' via '{canon}'");
        }
    }

    #[test]
    fn display_forms() {
        assert_eq!(iv("x", 0, false).to_string(), "x");
        assert_eq!(iv("x", 1, false).to_string(), "L.x");
        assert_eq!(iv("roa", 2, true).to_string(), "D.(L2.roa)");
        let g = InstrumentDirective::Gmm {
            base: "llpr".into(),
            inner_lag: 3,
            lag_from: 1,
            lag_to: None,
            collapsed: false,
        };
        assert_eq!(g.to_string(), "L(1/).L3.llpr");
    }
}
