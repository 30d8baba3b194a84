use chrono::NaiveDate;

use crate::error::{HlocError, Result};

/// Closing values indexed by session. Session ids are positions; dates are
/// carried as metadata only and never used for indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    closes: Vec<f64>,
    dates: Vec<Option<NaiveDate>>,
}

impl PriceSeries {
    pub fn new(closes: Vec<f64>) -> Result<Self> {
        let dates = vec![None; closes.len()];
        Self::with_dates(closes, dates)
    }

    pub fn with_dates(closes: Vec<f64>, dates: Vec<Option<NaiveDate>>) -> Result<Self> {
        if closes.len() != dates.len() {
            return Err(HlocError::InvalidData(format!(
                "{} closes but {} dates",
                closes.len(),
                dates.len()
            )));
        }
        if let Some((i, v)) = closes
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(HlocError::InvalidData(format!(
                "close at session {i} is {v}; closes must be finite and positive"
            )));
        }
        Ok(Self { closes, dates })
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn dates(&self) -> &[Option<NaiveDate>] {
        &self.dates
    }

    pub fn date(&self, session: usize) -> Option<NaiveDate> {
        self.dates.get(session).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    /// Sessions `range.start..range.end` re-indexed from zero.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            closes: self.closes[range.clone()].to_vec(),
            dates: self.dates[range].to_vec(),
        }
    }

    /// Multiplies every close by `factor` (must be positive).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_dates(
            self.closes.iter().map(|c| c * factor).collect(),
            self.dates.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_and_non_finite() {
        assert!(PriceSeries::new(vec![1.0, 0.0]).is_err());
        assert!(PriceSeries::new(vec![1.0, -5.0]).is_err());
        assert!(PriceSeries::new(vec![f64::INFINITY]).is_err());
        assert!(PriceSeries::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn slice_reindexes() {
        let s = PriceSeries::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let t = s.slice(1..3);
        assert_eq!(t.closes(), &[2.0, 3.0]);
        assert_eq!(t.len(), 2);
    }
}
