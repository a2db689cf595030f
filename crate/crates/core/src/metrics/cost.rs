use std::str::FromStr;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostCategory {
    Hardware,
    Inference,
    HumanLabor,
    Gpu,
}

impl CostCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            CostCategory::Hardware => "hardware",
            CostCategory::Inference => "inference",
            CostCategory::HumanLabor => "human_labor",
            CostCategory::Gpu => "gpu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostLine {
    pub category: CostCategory,
    pub hours: f64,
    /// USD per hour.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostAmount {
    pub category: CostCategory,
    pub amount: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub lines: Vec<CostAmount>,
    pub total: Decimal,
}

impl CostBreakdown {
    pub fn amount(&self, category: CostCategory) -> Decimal {
        self.lines
            .iter()
            .filter(|l| l.category == category)
            .map(|l| l.amount)
            .sum()
    }
}

/// Hourly rates per category, USD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostRates {
    pub hardware: f64,
    pub inference: f64,
    pub human_labor: f64,
    pub gpu: f64,
}

impl Default for CostRates {
    fn default() -> Self {
        Self {
            hardware: 0.06,
            inference: 0.04,
            human_labor: 25.0,
            gpu: 3.0,
        }
    }
}

impl CostRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rates.hardware", self.hardware),
            ("rates.inference", self.inference),
            ("rates.human_labor", self.human_labor),
            ("rates.gpu", self.gpu),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(name, "must be a non-negative number"));
            }
        }
        Ok(())
    }
}

/// Decimal with the value of the shortest decimal string that round-trips
/// `v`, so `101.8` is exactly 101.8 rather than its binary neighbor.
fn to_decimal(v: f64, what: &str) -> Result<Decimal> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Input(format!("{what} must be a non-negative number, got {v}")));
    }
    Decimal::from_str(&v.to_string())
        .or_else(|_| Decimal::from_scientific(&format!("{v:e}")))
        .map_err(|e| Error::Input(format!("{what} {v}: {e}")))
}

fn cents(d: Decimal) -> Decimal {
    let mut c = d.round_dp_with_strategy(2, RoundingStrategy::MidpointAwayFromZero);
    c.rescale(2);
    c
}

/// Each line rounded half-up to cents; the total is the rounded sum of the
/// unrounded line amounts.
pub fn cost_report(lines: &[CostLine]) -> Result<CostBreakdown> {
    let mut out = Vec::with_capacity(lines.len());
    let mut total = Decimal::ZERO;
    for l in lines {
        let raw = to_decimal(l.hours, "hours")? * to_decimal(l.rate, "rate")?;
        total += raw;
        out.push(CostAmount {
            category: l.category,
            amount: cents(raw),
        });
    }
    Ok(CostBreakdown {
        lines: out,
        total: cents(total),
    })
}

/// Hours needed for `target_successes` at the observed success throughput.
pub fn effectiveness_hours(hours: f64, successes: usize, target_successes: usize) -> Result<f64> {
    if successes == 0 {
        return Err(Error::UndefinedEfficiency);
    }
    Ok(hours * target_successes as f64 / successes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(category: CostCategory, hours: f64, rate: f64) -> CostLine {
        CostLine { category, hours, rate }
    }

    fn dec(s: &str) -> Decimal {
        Decimal::from_str(s).unwrap()
    }

    #[test]
    fn rounding_per_line_and_total() {
        let b = cost_report(&[
            line(CostCategory::Hardware, 101.8, 0.06),
            line(CostCategory::Inference, 101.8, 0.04),
        ])
        .unwrap();
        assert_eq!(b.lines[0].amount, dec("6.11"));
        assert_eq!(b.lines[1].amount, dec("4.07"));
        assert_eq!(b.total, dec("10.18"));
    }

    #[test]
    fn half_cent_rounds_up() {
        let b = cost_report(&[line(CostCategory::Gpu, 0.125, 1.0)]).unwrap();
        assert_eq!(b.total, dec("0.13"));
    }

    #[test]
    fn negative_hours_rejected() {
        assert!(matches!(
            cost_report(&[line(CostCategory::Gpu, -1.0, 3.0)]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn zero_successes_is_undefined() {
        assert!(matches!(effectiveness_hours(3.0, 0, 100), Err(Error::UndefinedEfficiency)));
        assert_eq!(effectiveness_hours(3.0, 50, 100).unwrap(), 6.0);
    }
}
