//! Frontal:lateral weight pairs written as `A:B`, e.g. `7:3`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{AggregationConfig, MissingViewPolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpRatio {
    pub w_f: f64,
    pub w_l: f64,
}

impl PpRatio {
    pub fn to_config(self, policy: MissingViewPolicy) -> AggregationConfig {
        AggregationConfig::new(self.w_f, self.w_l, policy).expect("PpRatio holds valid weights")
    }
}

impl FromStr for PpRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = || Error::InvalidRatio(s.to_owned());
        let (a, b) = s.split_once(':').ok_or_else(invalid)?;
        let weight = |t: &str| -> Result<f64> {
            let t = t.trim();
            // plain decimal literals only: no sign, exponent, inf or nan
            if t.is_empty() || !t.bytes().all(|c| c.is_ascii_digit() || c == b'.') {
                return Err(invalid());
            }
            t.parse::<f64>().map_err(|_| invalid())
        };
        let (w_f, w_l) = (weight(a)?, weight(b)?);
        let total = w_f + w_l;
        if total <= 0.0 || !total.is_finite() {
            return Err(invalid());
        }
        Ok(PpRatio { w_f, w_l })
    }
}

impl fmt::Display for PpRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.w_f, self.w_l)
    }
}

/// Parses a comma-separated list such as `5:5,7:3,8:2`.
pub fn parse_ratio_list(s: &str) -> Result<Vec<PpRatio>> {
    if s.trim().is_empty() {
        return Err(Error::InvalidRatio(s.to_owned()));
    }
    s.split(',').map(|part| part.trim().parse()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integer_and_decimal() {
        assert_eq!("7:3".parse::<PpRatio>().unwrap(), PpRatio { w_f: 7.0, w_l: 3.0 });
        assert_eq!(
            "0.8:0.2".parse::<PpRatio>().unwrap(),
            PpRatio { w_f: 0.8, w_l: 0.2 }
        );
        assert_eq!(
            " 1 : 0 ".parse::<PpRatio>().unwrap(),
            PpRatio { w_f: 1.0, w_l: 0.0 }
        );
        assert_eq!("7:3".parse::<PpRatio>().unwrap().to_string(), "7:3");
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "0:0", "7", "7:3:1", "-1:2", "a:b", ":3", "inf:1", "1e3:1", "", "7;3", "nan:1",
        ] {
            assert!(bad.parse::<PpRatio>().is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn lists() {
        let ratios = parse_ratio_list("5:5,7:3, 8:2").unwrap();
        assert_eq!(ratios.len(), 3);
        assert_eq!(ratios[2], PpRatio { w_f: 8.0, w_l: 2.0 });
        assert!(parse_ratio_list("5:5,,7:3").is_err());
        assert!(parse_ratio_list("").is_err());
    }
}
