// SPDX-License-Identifier: MIT OR Apache-2.0

//! SVG charts from the analysis tables.

use std::collections::BTreeMap;

use super::pipeline::{slug, ALIGNED_CSV, FORGET_CSV, LENS_CSV, METRICS_CSV, TRANSFER_CSV};
use super::run_dir::{strip_stamp, RunDir};
use super::svg::{Chart, Series};
use crate::analysis::{smooth, SMOOTHING_WINDOW};
use crate::corpus::TaskFilter;
use crate::error::{Error, Result};

/// Comma-separated table with a header row; `#` lines are skipped.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = strip_stamp(text).lines().filter(|l| !l.starts_with('#') && !l.is_empty());
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::format("table", "missing header"))?
            .split(',')
            .map(String::from)
            .collect();
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        if let Some(r) = rows.iter().find(|r| r.len() != columns.len()) {
            return Err(Error::format("table", format!("row {r:?} has the wrong width")));
        }
        Ok(Self { columns, rows })
    }

    pub fn col(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::format("table", format!("missing column `{name}`")))
    }

    pub fn num(&self, row: &[String], col: usize) -> f64 {
        row[col].parse().unwrap_or(f64::NAN)
    }
}

/// Points of `y` against `x`, grouped by `group`.
fn grouped(t: &Table, group: &str, x: &str, y: &str) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let (g, xi, yi) = (t.col(group)?, t.col(x)?, t.col(y)?);
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &t.rows {
        out.entry(r[g].clone()).or_default().push((t.num(r, xi), t.num(r, yi)));
    }
    Ok(out)
}

/// Smooth each series over its x order when it has at least 3 points.
fn smoothed(groups: BTreeMap<String, Vec<(f64, f64)>>) -> (Vec<Series>, bool) {
    let mut any = false;
    let series = groups
        .into_iter()
        .map(|(label, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pts.len() >= SMOOTHING_WINDOW {
                any = true;
                let ys = smooth(&pts.iter().map(|p| p.1).collect::<Vec<_>>(), SMOOTHING_WINDOW);
                pts.iter_mut().zip(ys).for_each(|(p, y)| p.1 = y);
            }
            Series { label, points: pts }
        })
        .collect();
    (series, any)
}

const NOTE: &str = "smoothed with a centered window of 3 epochs";

fn epoch_chart(run: &RunDir, file: &str, title: &str, y_label: &str, groups: BTreeMap<String, Vec<(f64, f64)>>) -> Result<()> {
    let (series, any) = smoothed(groups);
    let chart = Chart {
        title,
        x_label: "epoch",
        y_label,
        note: any.then_some(NOTE),
        series,
    };
    run.write_raw(&format!("report/{file}"), chart.render().as_bytes())
}

pub fn report(run: &RunDir) -> Result<()> {
    let metrics = Table::parse(&run.read_text("analyze", METRICS_CSV)?)?;
    for (col, file, title, y) in [
        ("hit_at_10", "hit_at_10.svg", "Circuit Hit@10", "Hit@10"),
        ("circuit_entropy", "entropy.svg", "Circuit entropy", "entropy (nats)"),
        ("jaccard_edges_vs_final", "jaccard_edges.svg", "Edge Jaccard vs final circuit", "Jaccard"),
        ("jaccard_nodes_vs_final", "jaccard_nodes.svg", "Node Jaccard vs final circuit", "Jaccard"),
        ("first_token_accuracy", "first_token_accuracy.svg", "First-token accuracy", "accuracy"),
        ("query_accuracy", "query_accuracy.svg", "Exact-match accuracy", "accuracy"),
    ] {
        epoch_chart(run, file, title, y, grouped(&metrics, "filter", "epoch", col)?)?;
    }

    let filter_col = metrics.col("filter")?;
    let epoch_col = metrics.col("epoch")?;
    let ratio_cols: Vec<usize> = (0..metrics.columns.len())
        .filter(|&i| metrics.columns[i].starts_with("ratio_"))
        .collect();
    let filters: Vec<String> = {
        let mut f: Vec<String> = metrics.rows.iter().map(|r| r[filter_col].clone()).collect();
        f.dedup();
        f
    };
    for f in &filters {
        let rows: Vec<&Vec<String>> = metrics.rows.iter().filter(|r| &r[filter_col] == f).collect();
        let mut groups = BTreeMap::new();
        for &c in &ratio_cols {
            let label = metrics.columns[c].trim_start_matches("ratio_").to_string();
            groups.insert(
                label,
                rows.iter().map(|r| (metrics.num(r, epoch_col), metrics.num(r, c))).collect(),
            );
        }
        let name = f.parse::<TaskFilter>().map(slug).unwrap_or_else(|_| f.to_lowercase());
        epoch_chart(
            run,
            &format!("activation_{name}.svg"),
            &format!("Edge activation ratio by source layer ({f})"),
            "ratio",
            groups,
        )?;
    }
    for kind in ["mover", "relation", "mixture"] {
        let cols: Vec<usize> = (0..metrics.columns.len())
            .filter(|&i| metrics.columns[i].starts_with(&format!("{kind}_l")))
            .collect();
        let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for r in &metrics.rows {
            let total: f64 = cols.iter().map(|&c| metrics.num(r, c)).sum();
            groups
                .entry(r[filter_col].clone())
                .or_default()
                .push((metrics.num(r, epoch_col), total));
        }
        epoch_chart(
            run,
            &format!("heads_{kind}.svg"),
            &format!("{kind} heads in the circuit"),
            "heads",
            groups,
        )?;
    }

    if let Ok(text) = run.read_text("analyze", ALIGNED_CSV) {
        let t = Table::parse(&text)?;
        let chart = Chart {
            title: "Topologies on the final checkpoint",
            x_label: "topology epoch",
            y_label: "Hit@10",
            note: None,
            series: grouped(&t, "filter", "topology_epoch", "hit_at_10")?
                .into_iter()
                .map(|(label, points)| Series { label, points })
                .collect(),
        };
        run.write_raw("report/aligned.svg", chart.render().as_bytes())?;
    }

    if let Ok(text) = run.read_text("lens", LENS_CSV) {
        let t = Table::parse(&text)?;
        let e = t.col("epoch")?;
        let last = t.rows.iter().map(|r| t.num(r, e)).fold(f64::NAN, f64::max);
        let final_rows = Table {
            columns: t.columns.clone(),
            rows: t.rows.iter().filter(|r| t.num(r, e) == last).cloned().collect(),
        };
        for (col, file, title) in [
            ("median_rank", "lens_rank.svg", "Logit lens: target rank (final epoch)"),
            ("mean_probability", "lens_probability.svg", "Logit lens: target probability (final epoch)"),
        ] {
            let chart = Chart {
                title,
                x_label: "layer boundary",
                y_label: col,
                note: None,
                series: grouped(&final_rows, "filter", "layer", col)?
                    .into_iter()
                    .map(|(label, points)| Series { label, points })
                    .collect(),
            };
            run.write_raw(&format!("report/{file}"), chart.render().as_bytes())?;
        }
    }

    if let Ok(text) = run.read_text("transfer", TRANSFER_CSV) {
        let t = Table::parse(&text)?;
        let test_col = t.col("test")?;
        let mut tests: Vec<String> = t.rows.iter().map(|r| r[test_col].clone()).collect();
        tests.sort();
        tests.dedup();
        for test in tests {
            let sub = Table {
                columns: t.columns.clone(),
                rows: t.rows.iter().filter(|r| r[test_col] == test).cloned().collect(),
            };
            let name = test.parse::<TaskFilter>().map(slug).unwrap_or_else(|_| test.to_lowercase());
            epoch_chart(
                run,
                &format!("transfer_{name}.svg"),
                &format!("Circuit transfer to the {test} test set"),
                "Hit@10",
                grouped(&sub, "circuit", "epoch", "hit_at_10")?,
            )?;
        }
    }

    if let Ok(text) = run.read_text("forget", FORGET_CSV) {
        let t = Table::parse(&text)?;
        let groups = grouped(&t, "replay_ratio", "epoch", "jaccard_edges")?
            .into_iter()
            .map(|(k, v)| (format!("replay {k}"), v))
            .collect();
        epoch_chart(run, "forget.svg", "Edge Jaccard vs prior final circuit", "Jaccard", groups)?;
    }
    Ok(())
}
