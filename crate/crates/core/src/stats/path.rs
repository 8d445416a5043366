//! Right-continuous step functions and the L1 path metrics on them.

use crate::error::{invalid, Result};

/// Number of terms kept in the weighted metric `d`; the dropped tail is at
/// most `2^-N_CUT`.
pub const N_CUT: usize = 40;

/// Upper bound on the truncation error of [`PathMetric::Weighted`].
pub const D_TAIL_BOUND: f64 = 1.0 / (1u64 << N_CUT) as f64;

/// A cadlag step function on `[0, end]`: `values[i]` holds on
/// `[breaks[i], breaks[i+1])`, the last value up to and including `end`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
    end: f64,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>, end: f64) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return invalid("step function needs one value per breakpoint and at least one piece");
        }
        if breaks[0] != 0.0 {
            return invalid("first breakpoint must be 0");
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("breakpoints must be strictly increasing");
        }
        if !(end >= *breaks.last().unwrap()) || !end.is_finite() {
            return invalid("domain end must be finite and not precede the last breakpoint");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("step values must be finite");
        }
        Ok(StepFunction { breaks, values, end })
    }

    pub fn constant(value: f64, end: f64) -> Result<Self> {
        StepFunction::new(vec![0.0], vec![value], end)
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Right-continuous evaluation; `None` outside `[0, end]`.
    pub fn eval(&self, t: f64) -> Option<f64> {
        if !(t >= 0.0 && t <= self.end) {
            return None;
        }
        let i = self.breaks.partition_point(|&b| b <= t);
        Some(self.values[i - 1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathMetric {
    /// `d_T(f, g) = int_0^T |f - g|`.
    L1 { horizon: f64 },
    /// `d = sum_{n >= 1} 2^-n min(d_n, 1)`, truncated after [`N_CUT`] terms.
    Weighted,
}

/// `int_0^{m} |f - g|` for each mark `m` (marks ascending, within both domains).
fn cumulative_l1(f: &StepFunction, g: &StepFunction, marks: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(marks.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut t = 0.0;
    let mut acc = 0.0;
    for &m in marks {
        while t < m {
            let next_f = f.breaks.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let next_g = g.breaks.get(j + 1).copied().unwrap_or(f64::INFINITY);
            let next = next_f.min(next_g).min(m);
            acc += (f.values[i] - g.values[j]).abs() * (next - t);
            t = next;
            if next_f <= t {
                i += 1;
            }
            if next_g <= t {
                j += 1;
            }
        }
        out.push(acc);
    }
    out
}

pub fn path_distance(f: &StepFunction, g: &StepFunction, metric: PathMetric) -> Result<f64> {
    match metric {
        PathMetric::L1 { horizon } => {
            if !(horizon >= 0.0) {
                return invalid(format!("horizon must be nonnegative, got {horizon}"));
            }
            if f.end < horizon || g.end < horizon {
                return invalid(format!(
                    "domain mismatch: d_T with T = {horizon} needs both paths on [0, T] (ends {} and {})",
                    f.end, g.end
                ));
            }
            Ok(cumulative_l1(f, g, &[horizon])[0])
        }
        PathMetric::Weighted => {
            let cut = N_CUT as f64;
            if f.end < cut || g.end < cut {
                return invalid(format!(
                    "domain mismatch: d needs both paths on [0, {N_CUT}] (ends {} and {})",
                    f.end, g.end
                ));
            }
            let marks: Vec<f64> = (1..=N_CUT).map(|n| n as f64).collect();
            let d_n = cumulative_l1(f, g, &marks);
            let mut weight = 1.0;
            let mut total = 0.0;
            for dn in d_n {
                weight *= 0.5;
                total += weight * dn.min(1.0);
            }
            Ok(total)
        }
    }
}
