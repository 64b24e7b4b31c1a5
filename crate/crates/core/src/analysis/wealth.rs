use crate::engine::RunRecord;
use crate::error::{Error, Result};

/// Number of trailing steps covered by `frac` of `steps`, i.e. `⌈frac · steps⌉`.
pub fn window_len(steps: usize, frac: f64) -> Result<usize> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::invalid(format!("window fraction must lie in (0,1], got {frac}")));
    }
    // Absorb representation error such as 0.1 * 30 = 3.0000000000000004.
    let len = (frac * steps as f64 - 1e-9).ceil().max(0.0) as usize;
    if len == 0 {
        return Err(Error::invalid("steady-state window is empty"));
    }
    Ok(len.min(steps))
}

/// The trailing window of a per-step series that starts at t=0; t=0 is never included.
pub fn tail_window<T>(series: &[T], frac: f64) -> Result<&[T]> {
    let steps = series.len().saturating_sub(1);
    let len = window_len(steps, frac)?;
    Ok(&series[series.len() - len..])
}

/// Mean global net wealth over the final `⌈frac · steps⌉` steps.
pub fn steady_state_wealth(record: &RunRecord, window_frac: f64) -> Result<f64> {
    let tail = tail_window(&record.wealth, window_frac)?;
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}
