//! Form indices over a team's last `k` results (3 per win, 1 per draw).

/// Default window length.
pub const STREAK_WINDOW: usize = 6;

/// Points value of a draw, used to left-pad short histories.
pub const PAD_POINTS: u8 = 1;

/// Last `k` entries of `history` (oldest first), left-padded with draws.
pub fn window(history: &[u8], k: usize) -> Vec<u8> {
    let take = history.len().min(k);
    let mut out = vec![PAD_POINTS; k - take];
    out.extend_from_slice(&history[history.len() - take..]);
    out
}

/// Plain form: points over the window divided by the maximum `3k`.
pub fn streak(history: &[u8], k: usize) -> f64 {
    assert!(k >= 1, "streak window must be positive");
    let w = window(history, k);
    let total: u32 = w.iter().map(|&p| u32::from(p)).sum();
    f64::from(total) / (3 * k) as f64
}

/// Recency-weighted form: the `i`-th oldest result (1-based) has weight
/// `2i`, normalised by `3k(k+1)` so a perfect run scores exactly 1.
pub fn weighted_streak(history: &[u8], k: usize) -> f64 {
    assert!(k >= 1, "streak window must be positive");
    let w = window(history, k);
    let total: u64 = w
        .iter()
        .enumerate()
        .map(|(i, &p)| 2 * (i as u64 + 1) * u64::from(p))
        .sum();
    total as f64 / (3 * k * (k + 1)) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        assert_eq!(streak(&[3; 6], 6), 1.0);
        assert_eq!(streak(&[0; 6], 6), 0.0);
        assert_eq!(weighted_streak(&[3; 6], 6), 1.0);
        assert_eq!(weighted_streak(&[0; 6], 6), 0.0);
    }

    #[test]
    fn mixed_run() {
        // W W D L W D
        let s = streak(&[3, 3, 1, 0, 3, 1], 6);
        assert!((s - 11.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn single_recent_win() {
        let w = weighted_streak(&[0, 0, 0, 0, 0, 3], 6);
        assert!((w - 36.0 / 126.0).abs() < 1e-15);
    }

    #[test]
    fn short_history_padded_with_draws() {
        assert_eq!(window(&[3, 0], 4), vec![1, 1, 3, 0]);
        assert_eq!(window(&[3, 0, 1, 1, 0, 3, 3], 6), vec![0, 1, 1, 0, 3, 3]);
        assert!((streak(&[], 6) - 1.0 / 3.0).abs() < 1e-15);
    }
}
