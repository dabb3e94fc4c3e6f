//! Right-censored survival primitives: Kaplan-Meier, log-rank and Harrell's
//! concordance.

use std::io::Write;

use crate::error::{Error, Result};
use crate::stats::chi2_sf;

/// One subject: time observed and whether the event (reproduction) happened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalSample {
    pub duration: f64,
    pub event: bool,
}

impl SurvivalSample {
    pub fn event(duration: f64) -> Self {
        Self { duration, event: true }
    }

    pub fn censored(duration: f64) -> Self {
        Self { duration, event: false }
    }
}

/// One row of a product-limit curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveStep {
    pub time: f64,
    /// S(t) just after `time`.
    pub survival: f64,
    pub at_risk: usize,
    pub events: usize,
}

/// Kaplan-Meier estimate, one step per distinct observed time.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSurvivalCurve {
    pub steps: Vec<CurveStep>,
}

impl StepSurvivalCurve {
    /// S(t): product over observed times `<= t`. 1.0 before the first time.
    pub fn survival_at(&self, t: f64) -> f64 {
        let k = self.steps.partition_point(|s| s.time <= t);
        if k == 0 {
            1.0
        } else {
            self.steps[k - 1].survival
        }
    }

    pub fn event_times(&self) -> Vec<f64> {
        self.steps.iter().filter(|s| s.events > 0).map(|s| s.time).collect()
    }

    /// CSV with columns `time,survival,at_risk,events`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "survival", "at_risk", "events"])?;
        for s in &self.steps {
            w.write_record([
                s.time.to_string(),
                s.survival.to_string(),
                s.at_risk.to_string(),
                s.events.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn check_samples(samples: &[SurvivalSample], what: &str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Argument(format!("{what}: no subjects")));
    }
    if let Some(s) = samples.iter().find(|s| !(s.duration > 0.0 && s.duration.is_finite())) {
        return Err(Error::Argument(format!(
            "{what}: duration {} is not positive",
            s.duration
        )));
    }
    Ok(())
}

/// Distinct times ascending with (events, censored) counts at each.
fn tally(samples: &[SurvivalSample]) -> Vec<(f64, usize, usize)> {
    let mut sorted: Vec<_> = samples.to_vec();
    sorted.sort_by(|a, b| a.duration.total_cmp(&b.duration));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    for s in sorted {
        match out.last_mut() {
            Some(last) if last.0 == s.duration => {
                if s.event {
                    last.1 += 1
                } else {
                    last.2 += 1
                }
            }
            _ => out.push((s.duration, usize::from(s.event), usize::from(!s.event))),
        }
    }
    out
}

/// Product-limit estimate. Tied events form a single drop; subjects censored
/// at `t` are still at risk at `t`.
pub fn kaplan_meier(samples: &[SurvivalSample]) -> Result<StepSurvivalCurve> {
    check_samples(samples, "kaplan_meier")?;
    let mut at_risk = samples.len();
    let mut survival = 1.0;
    let mut steps = Vec::new();
    for (time, events, censored) in tally(samples) {
        if events > 0 {
            survival *= 1.0 - events as f64 / at_risk as f64;
        }
        steps.push(CurveStep {
            time,
            survival,
            at_risk,
            events,
        });
        at_risk -= events + censored;
    }
    Ok(StepSurvivalCurve { steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRankResult {
    pub statistic: f64,
    pub p_value: f64,
    pub observed_a: f64,
    pub expected_a: f64,
    pub variance: f64,
}

/// Unweighted two-sample log-rank test (chi-square, 1 degree of freedom).
pub fn log_rank_test(group_a: &[SurvivalSample], group_b: &[SurvivalSample]) -> Result<LogRankResult> {
    check_samples(group_a, "log_rank_test group a")?;
    check_samples(group_b, "log_rank_test group b")?;
    let mut pooled: Vec<(f64, bool, bool)> = group_a
        .iter()
        .map(|s| (s.duration, s.event, true))
        .chain(group_b.iter().map(|s| (s.duration, s.event, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut n_a = group_a.len() as f64;
    let mut n = pooled.len() as f64;
    let (mut observed, mut expected, mut variance) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < pooled.len() {
        let t = pooled[i].0;
        let (mut d, mut d_a, mut leave, mut leave_a) = (0.0, 0.0, 0.0, 0.0);
        while i < pooled.len() && pooled[i].0 == t {
            let (_, ev, in_a) = pooled[i];
            if ev {
                d += 1.0;
                if in_a {
                    d_a += 1.0;
                }
            }
            leave += 1.0;
            if in_a {
                leave_a += 1.0;
            }
            i += 1;
        }
        // a time where one risk set is empty carries no information
        if d > 0.0 && n_a > 0.0 && n - n_a > 0.0 {
            let frac = n_a / n;
            observed += d_a;
            expected += d * frac;
            if n > 1.0 {
                variance += d * frac * (1.0 - frac) * (n - d) / (n - 1.0);
            }
        }
        n -= leave;
        n_a -= leave_a;
    }
    let statistic = if variance > 0.0 {
        (observed - expected).powi(2) / variance
    } else {
        0.0
    };
    Ok(LogRankResult {
        statistic,
        p_value: chi2_sf(statistic, 1.0),
        observed_a: observed,
        expected_a: expected,
        variance,
    })
}

/// Harrell's concordance, `(2C + T) / (2(C + D + T))`.
///
/// `labels` use the signed convention (`+t` event, `-t` censored). A pair
/// (i, j) is comparable when `labels[j] > 0` and `|labels[i]| > labels[j]`;
/// it is concordant when `risk[j] > risk[i]`. Returns 0.5 when nothing is
/// comparable.
pub fn concordance(predicted_risk: &[f64], labels: &[f64]) -> Result<f64> {
    if predicted_risk.len() != labels.len() {
        return Err(Error::Argument(format!(
            "concordance: {} predictions for {} labels",
            predicted_risk.len(),
            labels.len()
        )));
    }
    let counts = concordance_counts(predicted_risk, labels);
    Ok(counts.index())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConcordanceCounts {
    pub concordant: u64,
    pub discordant: u64,
    pub tied: u64,
}

impl ConcordanceCounts {
    pub fn comparable(&self) -> u64 {
        self.concordant + self.discordant + self.tied
    }

    pub fn index(&self) -> f64 {
        let total = self.comparable();
        if total == 0 {
            0.5
        } else {
            (2 * self.concordant + self.tied) as f64 / (2 * total) as f64
        }
    }
}

/// Pair counts behind [`concordance`]. Sorting by time makes this
/// O(n log n + comparable pairs) instead of a full n² sweep.
pub fn concordance_counts(predicted_risk: &[f64], labels: &[f64]) -> ConcordanceCounts {
    assert_eq!(predicted_risk.len(), labels.len());
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| labels[a].abs().total_cmp(&labels[b].abs()));
    let mut counts = ConcordanceCounts::default();
    for (pos, &j) in order.iter().enumerate() {
        if labels[j] <= 0.0 {
            continue;
        }
        let tj = labels[j];
        let start = pos + order[pos..].partition_point(|&i| labels[i].abs() <= tj);
        for &i in &order[start..] {
            let (ri, rj) = (predicted_risk[i], predicted_risk[j]);
            if rj > ri {
                counts.concordant += 1;
            } else if rj == ri {
                counts.tied += 1;
            } else {
                counts.discordant += 1;
            }
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn events(ts: &[f64]) -> Vec<SurvivalSample> {
        ts.iter().map(|&t| SurvivalSample::event(t)).collect()
    }

    #[test]
    fn km_all_events() {
        let c = kaplan_meier(&events(&[1.0, 2.0, 3.0])).unwrap();
        assert_relative_eq!(c.survival_at(1.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.survival_at(2.0), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(c.survival_at(3.0), 0.0);
        assert_eq!(c.survival_at(0.5), 1.0);
    }

    #[test]
    fn km_with_censoring() {
        let s = [
            SurvivalSample::event(1.0),
            SurvivalSample::censored(2.0),
            SurvivalSample::event(3.0),
        ];
        let c = kaplan_meier(&s).unwrap();
        assert_relative_eq!(c.survival_at(1.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.survival_at(2.5), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(c.survival_at(3.0), 0.0);
        assert_eq!(c.steps[2].at_risk, 1);
    }

    #[test]
    fn km_all_censored_stays_at_one() {
        let s: Vec<_> = [1.0, 4.0, 9.0].iter().map(|&t| SurvivalSample::censored(t)).collect();
        let c = kaplan_meier(&s).unwrap();
        assert!(c.steps.iter().all(|st| st.survival == 1.0));
        assert!(c.event_times().is_empty());
    }

    #[test]
    fn km_tied_events_single_drop() {
        let c = kaplan_meier(&events(&[2.0, 2.0, 5.0, 7.0])).unwrap();
        assert_eq!(c.steps[0].events, 2);
        assert_eq!(c.survival_at(2.0), 0.5);
    }

    #[test]
    fn km_rejects_empty() {
        assert!(matches!(kaplan_meier(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn log_rank_identical_groups() {
        let g = events(&[1.0, 3.0, 4.0, 8.0]);
        let r = log_rank_test(&g, &g).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn log_rank_separated_groups() {
        // O - E table by hand:
        //   t=1: n=4, n_a=2, d=1 -> E=1/2, V=1/4
        //   t=2: n=3, n_a=1, d=1 -> E=1/3, V=2/9
        //   t=3,4: group a is empty -> no contribution
        // O=2, E=5/6, V=17/36, statistic = (7/6)^2 / (17/36) = 49/17
        let r = log_rank_test(&events(&[1.0, 2.0]), &events(&[3.0, 4.0])).unwrap();
        assert!((r.expected_a - 5.0 / 6.0).abs() < 1e-15);
        assert!((r.variance - 17.0 / 36.0).abs() < 1e-15);
        assert!((r.statistic - 49.0 / 17.0).abs() < 1e-12);
        assert!((r.p_value - chi2_sf(49.0 / 17.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn log_rank_censored_group_only_counts_shared_risk() {
        // group a censored at 1 and 2 before b's events at 3, 5
        let a = [SurvivalSample::censored(1.0), SurvivalSample::censored(2.0)];
        let b = events(&[3.0, 5.0]);
        let r = log_rank_test(&a, &b).unwrap();
        assert_eq!(r.variance, 0.0);
        assert_eq!(r.statistic, 0.0);
        // a event at 1 with b at risk; b event at 3 after a has left
        let a = [SurvivalSample::event(1.0), SurvivalSample::censored(2.0)];
        let r = log_rank_test(&a, &b).unwrap();
        // only t=1 counts: n=4, n_a=2, d=1 -> O=1, E=1/2, V=1/4 -> stat 1
        assert!((r.statistic - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_rank_rejects_empty_group() {
        assert!(log_rank_test(&[], &events(&[1.0])).is_err());
    }

    #[test]
    fn concordance_examples() {
        assert_eq!(concordance(&[3.0, 2.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(concordance(&[1.0, 1.0, 1.0], &[1.0, 2.0, -3.0]).unwrap(), 0.5);
        // single comparable pair (i=2, j=0): 10 > 5 and risk 2 > 1
        assert_eq!(concordance(&[2.0, 9.0, 1.0], &[5.0, -3.0, 10.0]).unwrap(), 1.0);
        assert_eq!(concordance(&[1.0], &[-2.0]).unwrap(), 0.5);
        assert!(concordance(&[1.0], &[1.0, 2.0]).is_err());
    }
}
