//! Grouped coverage statistics and the summary table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::sweep::ResultRow;

/// Mean and sample standard deviation of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub strategy: String,
    pub alpha: Option<f64>,
    pub n: usize,
    pub lambda: Option<f64>,
    pub runs: usize,
    pub errors: usize,
    pub mean_coverage: f64,
    pub std_coverage: f64,
}

impl AggregateRow {
    /// Row label: the strategy, with its alpha when it has one.
    pub fn label(&self) -> String {
        match self.alpha {
            Some(a) => format!("{}(alpha={})", self.strategy, a),
            None => self.strategy.clone(),
        }
    }

    /// Column label: failure scenario and team size.
    pub fn column(&self) -> String {
        let scenario = match self.lambda {
            Some(l) => format!("lambda={l}"),
            None => "no-failure".to_string(),
        };
        format!("{scenario} n={}", self.n)
    }
}

// f64 keys are ordered through their bit patterns; all values here are
// finite and non-negative, where that order matches numeric order.
type Key = (String, Option<u64>, Option<u64>, usize);

/// Groups rows by (strategy, alpha, lambda, n). Error rows count toward
/// `errors` but not toward the statistics.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<Key, (Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        let key = (
            r.strategy.clone(),
            r.alpha.map(f64::to_bits),
            r.lambda.map(f64::to_bits),
            r.n,
        );
        let g = groups.entry(key).or_default();
        if r.error.is_some() {
            g.1 += 1;
        } else {
            g.0.push(r.coverage_ratio);
        }
    }
    groups
        .into_iter()
        .map(|((strategy, alpha, lambda, n), (xs, errors))| {
            let (mean, std) = mean_std(&xs);
            AggregateRow {
                strategy,
                alpha: alpha.map(f64::from_bits),
                n,
                lambda: lambda.map(f64::from_bits),
                runs: xs.len(),
                errors,
                mean_coverage: mean,
                std_coverage: std,
            }
        })
        .collect()
}

/// Arithmetic mean and sample standard deviation (zero for fewer than two
/// values). The mean of an empty slice is NaN.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Plain-text table: one row per strategy, one column per (scenario, n),
/// cells `mean ± std` in percent. The best mean of each column is starred.
pub fn format_table(aggs: &[AggregateRow]) -> String {
    let mut columns: Vec<(Option<u64>, usize, String)> = aggs
        .iter()
        .map(|a| (a.lambda.map(f64::to_bits), a.n, a.column()))
        .collect();
    columns.sort();
    columns.dedup();
    let mut labels: Vec<String> = aggs.iter().map(AggregateRow::label).collect();
    labels.dedup();
    let mut seen = Vec::new();
    labels.retain(|l| {
        let fresh = !seen.contains(l);
        seen.push(l.clone());
        fresh
    });

    let cell = |label: &str, col: &str| {
        aggs.iter()
            .find(|a| a.label() == label && a.column() == col)
    };
    let best: Vec<Option<f64>> = columns
        .iter()
        .map(|(_, _, c)| {
            aggs.iter()
                .filter(|a| &a.column() == c && a.runs > 0)
                .map(|a| a.mean_coverage)
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
        })
        .collect();

    let mut grid: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["strategy".to_string()];
    header.extend(columns.iter().map(|(_, _, c)| c.clone()));
    grid.push(header);
    for l in &labels {
        let mut line = vec![l.clone()];
        for (ci, (_, _, c)) in columns.iter().enumerate() {
            line.push(match cell(l, c) {
                Some(a) if a.runs > 0 => {
                    let star = if Some(a.mean_coverage) == best[ci] { "*" } else { "" };
                    format!(
                        "{:.1} ± {:.1}{star}",
                        100.0 * a.mean_coverage,
                        100.0 * a.std_coverage
                    )
                }
                Some(_) => "error".to_string(),
                None => "-".to_string(),
            });
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (ri, row) in grid.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
        if ri == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("-|-"));
        }
    }
    out
}

pub fn aggregate_to_csv(aggs: &[AggregateRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for a in aggs {
        w.serialize(a).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(strategy: &str, n: usize, lambda: Option<f64>, cov: f64) -> ResultRow {
        ResultRow {
            run_id: 0,
            strategy: strategy.into(),
            n,
            lambda,
            k: lambda.map(|_| 1.5),
            alpha: None,
            seed: 0,
            map_id: "m".into(),
            coverage_ratio: cov,
            relay_count: 0,
            handoff_count: 0,
            failure_count: 0,
            wall_time_ms: 0,
            error: None,
        }
    }

    #[test]
    fn means_and_std() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[0.2, 0.4, 0.6]);
        assert!((m - 0.4).abs() < 1e-15);
        assert!((s - 0.2).abs() < 1e-15);
    }

    #[test]
    fn grouping_ignores_row_order() {
        let rows = vec![
            row("proid", 3, None, 0.6),
            row("final_only", 3, None, 0.5),
            row("proid", 3, None, 0.8),
            row("proid", 3, Some(1100.0), 0.4),
        ];
        let a = aggregate(&rows);
        let mut rev = rows.clone();
        rev.reverse();
        assert_eq!(aggregate(&rev), a);
        let p = a.iter().find(|x| x.strategy == "proid" && x.lambda.is_none()).unwrap();
        assert_eq!(p.runs, 2);
        assert!((p.mean_coverage - 0.7).abs() < 1e-15);
        let t = format_table(&a);
        assert!(t.contains("70.0 ± 14.1*"), "{t}");
        assert!(t.contains("lambda=1100 n=3"));
    }

    #[test]
    fn single_row_table() {
        let t = format_table(&aggregate(&[row("final_only", 2, None, 0.25)]));
        assert_eq!(t.lines().count(), 3);
        assert!(t.contains("25.0 ± 0.0*"));
    }
}
