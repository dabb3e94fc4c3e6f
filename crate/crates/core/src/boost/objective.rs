//! Negative Cox log partial likelihood (Breslow ties) as a boosting objective.

use crate::error::{Error, Result};

fn check(durations: &[f64], events: &[bool], margins: &[f64]) -> Result<()> {
    if durations.len() != events.len() || durations.len() != margins.len() {
        return Err(Error::Argument("durations, events and margins differ in length".into()));
    }
    if margins.iter().any(|m| !m.is_finite()) {
        return Err(Error::Numeric("margins must be finite".into()));
    }
    Ok(())
}

/// Indices sorted by ascending time, and the start of each equal-time run.
fn time_order(durations: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..durations.len()).collect();
    order.sort_by(|&a, &b| durations[a].total_cmp(&durations[b]).then(a.cmp(&b)));
    let mut starts = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        if k == 0 || durations[i] != durations[order[k - 1]] {
            starts.push(k);
        }
    }
    (order, starts)
}

/// Negative log partial likelihood `Σ_events [log Σ_{t_j ≥ t_i} e^{f_j} − f_i]`.
pub fn cox_loss(durations: &[f64], events: &[bool], margins: &[f64]) -> Result<f64> {
    check(durations, events, margins)?;
    let shift = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (order, starts) = time_order(durations);
    let n = order.len();
    // risk sums for each run, accumulated from the latest time backwards
    let mut loss = 0.0;
    let mut risk = 0.0;
    let mut ends: Vec<usize> = starts.iter().skip(1).copied().collect();
    ends.push(n);
    for (&s, &e) in starts.iter().zip(&ends).rev() {
        for &i in &order[s..e] {
            risk += (margins[i] - shift).exp();
        }
        for &i in &order[s..e] {
            if events[i] {
                loss += risk.ln() + shift - margins[i];
            }
        }
    }
    if !loss.is_finite() {
        return Err(Error::Numeric("cox loss is not finite".into()));
    }
    Ok(loss)
}

/// First derivative and diagonal second derivative of [`cox_loss`] with
/// respect to each subject's margin.
///
/// `g_i = e^{f_i} Σ_{k event, t_k ≤ t_i} 1/R_k − δ_i` and
/// `h_i = e^{f_i} Σ 1/R_k − e^{2f_i} Σ 1/R_k²`, with `R_k` the risk-set sum at
/// `t_k`. Margins are shifted by their maximum before exponentiating.
pub fn cox_grad_hess(
    durations: &[f64],
    events: &[bool],
    margins: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check(durations, events, margins)?;
    let n = durations.len();
    let shift = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = margins.iter().map(|m| (m - shift).exp()).collect();
    let (order, starts) = time_order(durations);
    let mut ends: Vec<usize> = starts.iter().skip(1).copied().collect();
    ends.push(n);

    // risk-set sum at the start of each run, from a suffix pass
    let mut risk_at = vec![0.0; starts.len()];
    let mut risk = 0.0;
    for (r, (&s, &e)) in starts.iter().zip(&ends).enumerate().rev() {
        risk += order[s..e].iter().map(|&i| w[i]).sum::<f64>();
        risk_at[r] = risk;
    }

    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let (mut r1, mut r2) = (0.0, 0.0);
    for (r, (&s, &e)) in starts.iter().zip(&ends).enumerate() {
        let d = order[s..e].iter().filter(|&&i| events[i]).count() as f64;
        if d > 0.0 {
            r1 += d / risk_at[r];
            r2 += d / (risk_at[r] * risk_at[r]);
        }
        for &i in &order[s..e] {
            let g = w[i] * r1 - f64::from(u8::from(events[i]));
            let h = w[i] * r1 - w[i] * w[i] * r2;
            grad[i] = g;
            hess[i] = h;
        }
    }
    if grad.iter().chain(&hess).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("cox gradient is not finite".into()));
    }
    Ok((grad, hess))
}
