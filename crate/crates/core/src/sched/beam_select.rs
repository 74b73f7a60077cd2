use super::pbs::PerBeamOutcome;

/// Round-robin selection: `l_sel` consecutive beams of `preferred` (ascending),
/// starting at `(slot * l_sel) mod |B_p|` with cyclic wraparound.
pub fn rr_beam_select(preferred: &[usize], slot: usize, l_sel: usize) -> Vec<usize> {
    let n = preferred.len();
    if n == 0 {
        return Vec::new();
    }
    if l_sel >= n {
        return preferred.to_vec();
    }
    let start = (slot % n * (l_sel % n)) % n;
    let mut out: Vec<usize> = (0..l_sel).map(|i| preferred[(start + i) % n]).collect();
    out.sort_unstable();
    out
}

/// Weighted-sum-rate selection: the `l_sel` beams with the largest
/// `sum_u w_u SR(u)`, ties broken toward the lower beam index. Returned in
/// ascending beam order.
pub fn wsrb_beam_select(outcomes: &[PerBeamOutcome], l_sel: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = outcomes
        .iter()
        .map(|o| (o.beam, o.weighted_sum_rate))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out: Vec<usize> = ranked.into_iter().take(l_sel).map(|(b, _)| b).collect();
    out.sort_unstable();
    out
}
