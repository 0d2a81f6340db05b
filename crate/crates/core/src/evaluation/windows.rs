use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest test span kept on its own at the end of a plan.
pub const MIN_TAIL: usize = 20;

/// One expanding window: row index ranges into a single stratum's sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub index: usize,
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub windows: Vec<Window>,
}

/// What happens to a final test span shorter than [`MIN_TAIL`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailPolicy {
    /// Extend the previous window's test span.
    Merge,
    /// Keep it as its own window, so earlier windows never depend on how
    /// much data follows them.
    #[default]
    Separate,
}

fn check_test_size(test_size: usize) -> Result<()> {
    if !(20..=30).contains(&test_size) {
        return Err(Error::Protocol(format!("test size {test_size} outside 20..=30")));
    }
    Ok(())
}

/// Plans windows over `n` rows: the first test span starts after one test
/// span of training and (when `validation`) one of validation, then spans
/// advance by `test_size`; a final span under 20 rows is merged.
pub fn plan_windows(n: usize, test_size: usize, validation: bool) -> Result<WindowPlan> {
    check_test_size(test_size)?;
    let v = if validation { test_size } else { 0 };
    plan_windows_from(n, test_size + v, test_size, validation, TailPolicy::Merge)
}

/// Plans windows whose test spans tile `test_start..n`. Validation spans
/// are the `test_size` rows before each test span; training is everything
/// earlier.
pub fn plan_windows_from(
    n: usize,
    test_start: usize,
    test_size: usize,
    validation: bool,
    tail: TailPolicy,
) -> Result<WindowPlan> {
    check_test_size(test_size)?;
    let v = if validation { test_size } else { 0 };
    if test_start < v + 1 || n < test_start + 10 || n < test_size + v + 10 {
        return Err(Error::Protocol(format!(
            "{n} rows cannot hold training, {v} validation and a test span from row {test_start}"
        )));
    }
    let mut windows: Vec<Window> = Vec::new();
    let mut start = test_start;
    while start < n {
        let end = (start + test_size).min(n);
        let short = end - start < MIN_TAIL;
        if short && tail == TailPolicy::Merge && !windows.is_empty() {
            windows.last_mut().expect("non-empty").test.end = end;
            break;
        }
        windows.push(Window {
            index: windows.len(),
            train: 0..start - v,
            validation: start - v..start,
            test: start..end,
        });
        start = end;
    }
    Ok(WindowPlan { windows })
}
