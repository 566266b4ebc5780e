use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Confidence interval in percent, with open or closed ends.
///
/// Parses and prints `[50, 70]`, `]70, 90]` (or `(70, 90]`), `[a, b[` and
/// `[a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IntervalSpec {
    pub lower: f64,
    pub upper: f64,
    pub lower_inclusive: bool,
    pub upper_inclusive: bool,
}

impl IntervalSpec {
    pub fn new(lower: f64, upper: f64, lower_inclusive: bool, upper_inclusive: bool) -> Result<Self> {
        if !(0.0 <= lower && lower < upper && upper <= 100.0) {
            return Err(Error::InvalidInput(format!(
                "interval bounds must satisfy 0 <= lower < upper <= 100, got {lower}, {upper}"
            )));
        }
        Ok(IntervalSpec {
            lower,
            upper,
            lower_inclusive,
            upper_inclusive,
        })
    }

    /// `[50, 70]`, `]70, 90]`, `]90, 100]`.
    pub fn first_round() -> Vec<IntervalSpec> {
        vec![
            IntervalSpec::new(50.0, 70.0, true, true).unwrap(),
            IntervalSpec::new(70.0, 90.0, false, true).unwrap(),
            IntervalSpec::new(90.0, 100.0, false, true).unwrap(),
        ]
    }

    /// `]99, 100]`.
    pub fn second_round() -> Vec<IntervalSpec> {
        vec![IntervalSpec::new(99.0, 100.0, false, true).unwrap()]
    }

    pub fn contains(&self, percent: f64) -> bool {
        let above = if self.lower_inclusive {
            percent >= self.lower
        } else {
            percent > self.lower
        };
        let below = if self.upper_inclusive {
            percent <= self.upper
        } else {
            percent < self.upper
        };
        above && below
    }

    pub fn overlaps(&self, other: &IntervalSpec) -> bool {
        let (a, b) = if self.lower <= other.lower { (self, other) } else { (other, self) };
        if a.upper > b.lower {
            return true;
        }
        a.upper == b.lower && a.upper_inclusive && b.lower_inclusive
    }

    /// Parses a comma-separated list such as `[50,70],]70,90],]90,100]`.
    pub fn parse_list(s: &str) -> Result<Vec<IntervalSpec>> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        let mut i = 0;
        // an interval ends at its second bracket
        let mut seen_comma = false;
        while i < bytes.len() {
            match bytes[i] {
                b',' if i > start && !seen_comma => seen_comma = true,
                b']' | b'[' | b')' if seen_comma => {
                    out.push(s[start..=i].trim().parse()?);
                    seen_comma = false;
                    i += 1;
                    while i < bytes.len() && (bytes[i] == b',' || bytes[i].is_ascii_whitespace()) {
                        i += 1;
                    }
                    start = i;
                    continue;
                }
                _ => {}
            }
            i += 1;
        }
        if !s[start..].trim().is_empty() {
            return Err(Error::InvalidInput(format!("trailing text in interval list: {:?}", &s[start..])));
        }
        Ok(out)
    }
}

impl fmt::Display for IntervalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lower_inclusive { '[' } else { ']' },
            self.lower,
            self.upper,
            if self.upper_inclusive { ']' } else { '[' }
        )
    }
}

impl FromStr for IntervalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse interval {s:?}"));
        let s = s.trim();
        let mut chars = s.chars();
        let open = chars.next().ok_or_else(bad)?;
        let close = chars.next_back().ok_or_else(bad)?;
        let lower_inclusive = match open {
            '[' => true,
            ']' | '(' => false,
            _ => return Err(bad()),
        };
        let upper_inclusive = match close {
            ']' => true,
            '[' | ')' => false,
            _ => return Err(bad()),
        };
        let (lo, hi) = chars.as_str().split_once(',').ok_or_else(bad)?;
        let lower = lo.trim().parse().map_err(|_| bad())?;
        let upper = hi.trim().parse().map_err(|_| bad())?;
        IntervalSpec::new(lower, upper, lower_inclusive, upper_inclusive)
    }
}

impl TryFrom<String> for IntervalSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<IntervalSpec> for String {
    fn from(i: IntervalSpec) -> String {
        i.to_string()
    }
}
