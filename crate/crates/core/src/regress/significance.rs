//! Two-sided Student-t significance stars.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stars {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
}

impl Stars {
    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }

    pub fn is_significant(self) -> bool {
        self != Stars::None
    }
}

/// Two-sided p-value of `t` under Student-t with `df` degrees of freedom.
pub fn p_value(t: f64, df: usize) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Stars for a coefficient's t-statistic in a regression with `n`
/// observations and `k` slope regressors (df = n - k - 1).
///
/// `p` must lie strictly below 0.01 / 0.05 / 0.10 for three / two / one stars.
pub fn significance(t_stat: f64, n: usize, k: usize) -> Stars {
    let df = n.saturating_sub(k + 1).max(1);
    stars_for_p(p_value(t_stat, df))
}

pub fn stars_for_p(p: f64) -> Stars {
    if p < 0.01 {
        Stars::Three
    } else if p < 0.05 {
        Stars::Two
    } else if p < 0.10 {
        Stars::One
    } else {
        Stars::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_t_is_none() {
        for n in [3, 30, 40_000] {
            assert_eq!(significance(0.0, n, 1), Stars::None);
        }
    }

    #[test]
    fn reported_t_of_5_903_is_three_stars() {
        assert_eq!(significance(5.903, 40_000, 1), Stars::Three);
        assert_eq!(significance(-5.903, 40_000, 2), Stars::Three);
    }

    #[test]
    fn thresholds_are_strict() {
        assert_eq!(stars_for_p(0.01), Stars::Two);
        assert_eq!(stars_for_p(0.05), Stars::One);
        assert_eq!(stars_for_p(0.10), Stars::None);
        assert_eq!(stars_for_p(0.0999999), Stars::One);
    }

    #[test]
    fn non_finite_t() {
        assert_eq!(significance(f64::NAN, 100, 1), Stars::None);
        assert_eq!(significance(f64::INFINITY, 100, 1), Stars::Three);
    }
}
