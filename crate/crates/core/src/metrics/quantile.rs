use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantileError {
    #[error("no values")]
    Empty,
    #[error("quantile {0} outside [0, 1]")]
    OutOfRange(f64),
}

// Positions within this distance of a half are treated as exact halves, which
// absorbs binary representation error in fractions like 0.05 or 0.1.
const HALF_TOLERANCE: f64 = 1e-9;

/// 1-based positional index `(n - 1) q + 1`, rounded to nearest with exact
/// halves going to the lower integer.
pub fn quantile_index(n: usize, q: f64) -> Result<usize, QuantileError> {
    if n == 0 {
        return Err(QuantileError::Empty);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(QuantileError::OutOfRange(q));
    }
    let position = (n - 1) as f64 * q + 1.0;
    let floor = position.floor();
    let frac = position - floor;
    let index = if frac <= 0.5 + HALF_TOLERANCE { floor } else { floor + 1.0 };
    Ok((index as usize).clamp(1, n))
}

/// Quantile of an ascending slice. The result is always one of its elements.
pub fn quantile<T: Copy>(sorted_values: &[T], q: f64) -> Result<T, QuantileError> {
    let index = quantile_index(sorted_values.len(), q)?;
    Ok(sorted_values[index - 1])
}

/// Order statistics drawn for each hop distance in the redundancy plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantileSummary {
    pub count: usize,
    pub min: u64,
    pub p5: u64,
    pub p10: u64,
    pub q1: u64,
    pub median: u64,
    pub q3: u64,
    pub p90: u64,
    pub p95: u64,
    pub max: u64,
}

impl QuantileSummary {
    pub const LEVELS: [f64; 9] = [0.0, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 1.0];

    /// Summarises an unsorted sample.
    pub fn from_values(values: &[u64]) -> Result<Self, QuantileError> {
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let q = |level| quantile(&sorted, level);
        Ok(Self {
            count: sorted.len(),
            min: q(0.0)?,
            p5: q(0.05)?,
            p10: q(0.1)?,
            q1: q(0.25)?,
            median: q(0.5)?,
            q3: q(0.75)?,
            p90: q(0.9)?,
            p95: q(0.95)?,
            max: q(1.0)?,
        })
    }

    /// Values in `LEVELS` order.
    pub fn values(&self) -> [u64; 9] {
        [
            self.min, self.p5, self.p10, self.q1, self.median, self.q3, self.p90, self.p95,
            self.max,
        ]
    }
}
