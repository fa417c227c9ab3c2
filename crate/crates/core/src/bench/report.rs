//! Aggregation of result logs into tables.
//!
//! A report is built from records alone, so it can be regenerated
//! from a log file without re-running anything. The main table has
//! one row per method pairing and one column per dataset and setup;
//! cells show the test metric over final-run seeds and the best cell
//! per column is bold. Ranks follow the shared-rank convention: a
//! method joins the best group when a one-sided rank-sum test cannot
//! separate it from the group's anchor at the 0.05 level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::persist::{Phase, ResultRecord};
use super::runner::{DownstreamKind, FsMethod};
use super::BenchError;
use crate::selectors::FeatureScores;
use crate::stats::{average_matrices, precision_at_k, roc_auc, similarity_matrix};
use crate::stats::{Direction, RankTable};

/// Significance level for merging methods into one rank group.
const P_THRESHOLD: f64 = 0.05;

/// Formats with 6 significant digits, switching to scientific
/// notation outside [1e-4, 1e6).
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..=5).contains(&exp) {
        format!("{x:.5e}")
    } else {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

/// Aggregated view of one experiment cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub config_name: String,
    pub config_hash: String,
    pub dataset: String,
    pub setup: String,
    pub fs_method: FsMethod,
    pub downstream: DownstreamKind,
    /// Rank-table row label, method plus downstream.
    pub method_label: String,
    /// Rank-table column label, dataset plus setup.
    pub column_label: String,
    pub n_search: usize,
    pub n_search_ok: usize,
    pub n_final: usize,
    pub n_final_ok: usize,
    /// Every final run succeeded; the bar for entering rank tables.
    pub complete: bool,
    pub best_val: Option<f64>,
    pub test_mean: Option<f64>,
    pub test_std: Option<f64>,
    /// Mean share of selected features that are extraneous, in
    /// percent.
    pub pct_extraneous: Option<f64>,
    /// Mean ROC-AUC of the importance ranking against the
    /// original-vs-extraneous labels, when scores were logged.
    pub roc_auc: Option<f64>,
    pub precision: Option<f64>,
    pub rank: Option<usize>,
}

/// Tables derived from a result log.
pub struct Report {
    pub rows: Vec<SummaryRow>,
    /// Only methods with a complete cell in every column are ranked.
    pub rank_table: Option<RankTable>,
    /// ranks[method][column], aligned with `rank_table`.
    pub ranks: Vec<Vec<usize>>,
    pub mean_ranks: Vec<f64>,
    /// Per column: (column label, method labels, mean Spearman
    /// similarity between logged importance vectors).
    pub similarity: Vec<(String, Vec<String>, Array2<f64>)>,
    pub markdown: String,
    pub summary_csv: String,
}

fn column_label(dataset: &str, setup: &str) -> String {
    if setup == "none" {
        dataset.to_string()
    } else {
        format!("{dataset}/{setup}")
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

fn scores_of(record: &ResultRecord) -> Option<FeatureScores> {
    let raw = record.scores.as_ref()?;
    FeatureScores::new(raw.clone(), record.fs_method.label(), "train").ok()
}

fn summarize_group(records: &[&ResultRecord]) -> SummaryRow {
    let first = records[0];
    let search: Vec<&&ResultRecord> = records
        .iter()
        .filter(|r| matches!(r.phase, Phase::Search { .. }))
        .collect();
    let finals: Vec<&&ResultRecord> = records
        .iter()
        .filter(|r| matches!(r.phase, Phase::Final { .. }))
        .collect();
    let final_ok: Vec<&&&ResultRecord> =
        finals.iter().filter(|r| r.test_metric.is_some()).collect();
    let tests: Vec<f64> = final_ok.iter().filter_map(|r| r.test_metric).collect();

    let mut pct = Vec::new();
    let mut aucs = Vec::new();
    let mut precisions = Vec::new();
    for r in &final_ok {
        if !r.selected.is_empty() {
            let extraneous = r.selected.iter().filter(|&&i| i >= r.n_original).count();
            pct.push(100.0 * extraneous as f64 / r.selected.len() as f64);
        }
        if r.m_total > r.n_original {
            if let Some(s) = scores_of(r) {
                let mask: Vec<bool> = (0..r.m_total).map(|i| i < r.n_original).collect();
                if let Ok(a) = roc_auc(&s, &mask) {
                    aucs.push(a);
                }
                if let Ok(p) = precision_at_k(&s, &mask) {
                    precisions.push(p);
                }
            }
        }
    }

    SummaryRow {
        config_name: first.config_name.clone(),
        config_hash: first.config_hash.clone(),
        dataset: first.dataset.clone(),
        setup: first.setup.clone(),
        fs_method: first.fs_method,
        downstream: first.downstream,
        method_label: format!("{}+{}", first.fs_method.label(), first.downstream.label()),
        column_label: column_label(&first.dataset, &first.setup),
        n_search: search.len(),
        n_search_ok: search.iter().filter(|r| r.val_metric.is_some()).count(),
        n_final: finals.len(),
        n_final_ok: final_ok.len(),
        complete: !finals.is_empty() && final_ok.len() == finals.len(),
        best_val: search
            .iter()
            .filter_map(|r| r.val_metric)
            .fold(None, |acc, v| {
                Some(match acc {
                    Some(best) if best >= v => best,
                    _ => v,
                })
            }),
        test_mean: (!tests.is_empty()).then(|| mean(&tests)),
        test_std: sample_std(&tests),
        pct_extraneous: (!pct.is_empty()).then(|| mean(&pct)),
        roc_auc: (!aucs.is_empty()).then(|| mean(&aucs)),
        precision: (!precisions.is_empty()).then(|| mean(&precisions)),
        rank: None,
    }
}

/// Final-run metric vectors keyed by (method label, column label),
/// complete cells only. The first complete cell wins when a label
/// pair occurs twice.
fn complete_cells(
    rows: &[SummaryRow],
    groups: &BTreeMap<String, Vec<&ResultRecord>>,
) -> BTreeMap<(String, String), Vec<f64>> {
    let mut cells = BTreeMap::new();
    for row in rows.iter().filter(|r| r.complete) {
        let key = (row.method_label.clone(), row.column_label.clone());
        if cells.contains_key(&key) {
            log::warn!(
                "{}: duplicate cell for ({}, {}); keeping the first",
                row.config_name,
                key.0,
                key.1
            );
            continue;
        }
        let tests: Vec<f64> = groups[&row.config_hash]
            .iter()
            .filter_map(|r| r.test_metric)
            .collect();
        cells.insert(key, tests);
    }
    cells
}

/// Rank table plus per-column ranks and mean ranks, all aligned.
type RankSummary = (Option<RankTable>, Vec<Vec<usize>>, Vec<f64>);

fn build_rank_table(
    cells: &BTreeMap<(String, String), Vec<f64>>,
) -> Result<RankSummary, BenchError> {
    let columns: BTreeSet<String> = cells.keys().map(|(_, c)| c.clone()).collect();
    let methods: Vec<String> = cells
        .keys()
        .map(|(m, _)| m.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|m| {
            let covered = columns
                .iter()
                .all(|c| cells.contains_key(&(m.clone(), c.clone())));
            if !covered {
                log::warn!("method {m} lacks a complete cell in some column; not ranked");
            }
            covered
        })
        .collect();
    if methods.is_empty() || columns.is_empty() {
        return Ok((None, Vec::new(), Vec::new()));
    }
    let columns: Vec<String> = columns.into_iter().collect();
    let grid: Vec<Vec<Vec<f64>>> = methods
        .iter()
        .map(|m| {
            columns
                .iter()
                .map(|c| cells[&(m.clone(), c.clone())].clone())
                .collect()
        })
        .collect();
    let table = RankTable::new(methods, columns.clone(), grid)?;
    let mut ranks = vec![Vec::new(); table.methods.len()];
    for (c, _) in columns.iter().enumerate() {
        for (m, rank) in table
            .ranks_for_dataset(c, Direction::Maximize, P_THRESHOLD)?
            .into_iter()
            .enumerate()
        {
            ranks[m].push(rank);
        }
    }
    let mean_ranks = table.mean_ranks(Direction::Maximize, P_THRESHOLD)?;
    Ok((Some(table), ranks, mean_ranks))
}

/// Spearman similarity between the logged importance vectors of
/// different methods, per column, averaged over seed indices.
fn build_similarity(
    rows: &[SummaryRow],
    groups: &BTreeMap<String, Vec<&ResultRecord>>,
) -> Vec<(String, Vec<String>, Array2<f64>)> {
    let columns: BTreeSet<String> = rows
        .iter()
        .filter(|r| r.complete)
        .map(|r| r.column_label.clone())
        .collect();
    let mut out = Vec::new();
    for column in columns {
        // method label -> finals with scores, keyed by seed index.
        let mut per_method: BTreeMap<String, BTreeMap<usize, FeatureScores>> = BTreeMap::new();
        for row in rows
            .iter()
            .filter(|r| r.complete && r.column_label == column)
        {
            let mut by_seed = BTreeMap::new();
            for record in &groups[&row.config_hash] {
                if let (Phase::Final { seed_index }, Some(s)) = (record.phase, scores_of(record)) {
                    by_seed.insert(seed_index, s);
                }
            }
            if !by_seed.is_empty() {
                per_method
                    .entry(row.method_label.clone())
                    .or_insert(by_seed);
            }
        }
        if per_method.len() < 2 {
            continue;
        }
        let labels: Vec<String> = per_method.keys().cloned().collect();
        let seed_indices: BTreeSet<usize> = per_method
            .values()
            .flat_map(|m| m.keys().copied())
            .collect();
        let mut matrices = Vec::new();
        for seed in seed_indices {
            let vectors: Vec<FeatureScores> = labels
                .iter()
                .filter_map(|l| per_method[l].get(&seed).cloned())
                .collect();
            if vectors.len() != labels.len() {
                continue;
            }
            match similarity_matrix(&vectors) {
                Ok(m) => matrices.push(m),
                // Constant score vectors have no rank correlation;
                // skip the seed rather than fail the report.
                Err(e) => log::warn!("{column}: similarity skipped for one seed: {e}"),
            }
        }
        if let Ok(avg) = average_matrices(&matrices) {
            out.push((column, labels, avg));
        }
    }
    out
}

fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "| {} |", header.join(" | "));
    let _ = writeln!(text, "|{}|", vec!["---"; header.len()].join("|"));
    for row in rows {
        let _ = writeln!(text, "| {} |", row.join(" | "));
    }
    text
}

fn build_markdown(
    rows: &[SummaryRow],
    table: &Option<RankTable>,
    ranks: &[Vec<usize>],
    mean_ranks: &[f64],
    similarity: &[(String, Vec<String>, Array2<f64>)],
) -> String {
    let mut text = String::from("# Benchmark report\n\n");
    text.push_str("## Test metric by method and dataset\n\n");
    text.push_str(
        "Cells show mean ± std of the test metric over final-run seeds \
         (accuracy for classification, negative RMSE for regression; \
         higher is better). Bold marks the best rank group per column; \
         — marks cells without a complete set of final runs.\n\n",
    );

    let columns: Vec<String> = match table {
        Some(t) => t.datasets.clone(),
        None => rows
            .iter()
            .map(|r| r.column_label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let all_methods: Vec<String> = rows
        .iter()
        .map(|r| r.method_label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let cell_text = |method: &str, column: &str| -> String {
        let row = rows
            .iter()
            .find(|r| r.method_label == method && r.column_label == column && r.complete);
        match row {
            Some(r) => {
                let body = match (r.test_mean, r.test_std) {
                    (Some(m), Some(s)) => format!("{} ± {}", sig6(m), sig6(s)),
                    (Some(m), None) => sig6(m),
                    _ => return "—".into(),
                };
                let ranked_index = table
                    .as_ref()
                    .and_then(|t| t.methods.iter().position(|m| m == method));
                let column_index = columns.iter().position(|c| c == column);
                match (ranked_index, column_index) {
                    (Some(mi), Some(ci)) if ranks[mi][ci] == 1 => format!("**{body}**"),
                    _ => body,
                }
            }
            None => "—".into(),
        }
    };

    let mut header: Vec<String> = vec!["Method".into()];
    header.extend(columns.clone());
    header.push("Mean rank".into());
    let mut body = Vec::new();
    for method in &all_methods {
        let pretty = rows
            .iter()
            .find(|r| &r.method_label == method)
            .map(|r| format!("{} + {}", r.fs_method.pretty(), r.downstream.pretty()))
            .unwrap_or_else(|| method.clone());
        let mut row = vec![pretty];
        for column in &columns {
            row.push(cell_text(method, column));
        }
        let rank_text = table
            .as_ref()
            .and_then(|t| t.methods.iter().position(|m| m == method))
            .map(|mi| format!("{:.2}", mean_ranks[mi]))
            .unwrap_or_else(|| "—".into());
        row.push(rank_text);
        body.push(row);
    }
    text.push_str(&markdown_table(&header, &body));

    let with_pct: Vec<&SummaryRow> = rows.iter().filter(|r| r.pct_extraneous.is_some()).collect();
    if !with_pct.is_empty() {
        text.push_str("\n## Extraneous features selected (%)\n\n");
        let rows_text: Vec<Vec<String>> = with_pct
            .iter()
            .map(|r| {
                vec![
                    r.method_label.clone(),
                    r.column_label.clone(),
                    r.pct_extraneous.map(sig6).unwrap_or_default(),
                ]
            })
            .collect();
        text.push_str(&markdown_table(
            &[
                "Method".into(),
                "Column".into(),
                "Extraneous selected %".into(),
            ],
            &rows_text,
        ));
    }

    let with_auc: Vec<&SummaryRow> = rows.iter().filter(|r| r.roc_auc.is_some()).collect();
    if !with_auc.is_empty() {
        text.push_str("\n## Importance ranking vs. feature origin\n\n");
        let rows_text: Vec<Vec<String>> = with_auc
            .iter()
            .map(|r| {
                vec![
                    r.method_label.clone(),
                    r.column_label.clone(),
                    r.roc_auc.map(sig6).unwrap_or_default(),
                    r.precision.map(sig6).unwrap_or_default(),
                ]
            })
            .collect();
        text.push_str(&markdown_table(
            &[
                "Method".into(),
                "Column".into(),
                "ROC-AUC".into(),
                "Precision@k".into(),
            ],
            &rows_text,
        ));
    }

    for (column, labels, matrix) in similarity {
        let _ = writeln!(text, "\n## Importance similarity: {column}\n");
        let mut header: Vec<String> = vec!["".into()];
        header.extend(labels.clone());
        let rows_text: Vec<Vec<String>> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let mut row = vec![l.clone()];
                row.extend((0..labels.len()).map(|j| sig6(matrix[(i, j)])));
                row
            })
            .collect();
        text.push_str(&markdown_table(&header, &rows_text));
    }

    let incomplete: Vec<&SummaryRow> = rows.iter().filter(|r| !r.complete).collect();
    if !incomplete.is_empty() {
        text.push_str("\n## Missing cells\n\n");
        for r in incomplete {
            let _ = writeln!(
                text,
                "- {}: {}/{} final runs succeeded",
                r.config_name, r.n_final_ok, r.n_final
            );
        }
    }
    text
}

fn build_summary_csv(rows: &[SummaryRow]) -> String {
    let mut text = String::from(
        "config_name,dataset,setup,fs_method,downstream,n_search,n_search_ok,n_final,\
         n_final_ok,best_val,test_mean,test_std,pct_extraneous_selected,roc_auc,\
         precision_at_k,rank,config_hash\n",
    );
    let opt = |v: Option<f64>| v.map(sig6).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.config_name,
            r.dataset,
            r.setup,
            r.fs_method.label(),
            r.downstream.label(),
            r.n_search,
            r.n_search_ok,
            r.n_final,
            r.n_final_ok,
            opt(r.best_val),
            opt(r.test_mean),
            opt(r.test_std),
            opt(r.pct_extraneous),
            opt(r.roc_auc),
            opt(r.precision),
            r.rank.map(|v| v.to_string()).unwrap_or_default(),
            r.config_hash,
        );
    }
    text
}

/// Builds every table from a set of records.
pub fn build_report(records: &[ResultRecord]) -> Result<Report, BenchError> {
    let mut groups: BTreeMap<String, Vec<&ResultRecord>> = BTreeMap::new();
    for record in records {
        groups
            .entry(record.config_hash.clone())
            .or_default()
            .push(record);
    }
    let mut rows: Vec<SummaryRow> = groups.values().map(|g| summarize_group(g)).collect();
    rows.sort_by(|a, b| {
        (&a.column_label, &a.method_label, &a.config_name).cmp(&(
            &b.column_label,
            &b.method_label,
            &b.config_name,
        ))
    });

    let cells = complete_cells(&rows, &groups);
    let (rank_table, ranks, mean_ranks) = build_rank_table(&cells)?;
    if let Some(table) = &rank_table {
        for row in rows.iter_mut() {
            if let (Some(mi), Some(ci)) = (
                table.methods.iter().position(|m| *m == row.method_label),
                table.datasets.iter().position(|c| *c == row.column_label),
            ) {
                row.rank = Some(ranks[mi][ci]);
            }
        }
    }
    let similarity = build_similarity(&rows, &groups);
    let markdown = build_markdown(&rows, &rank_table, &ranks, &mean_ranks, &similarity);
    let summary_csv = build_summary_csv(&rows);
    Ok(Report {
        rows,
        rank_table,
        ranks,
        mean_ranks,
        similarity,
        markdown,
        summary_csv,
    })
}

/// Writes report.md, summary.csv, and similarity.csv into `dir`.
pub fn write_report(dir: &Path, report: &Report) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.md"), &report.markdown)?;
    fs::write(dir.join("summary.csv"), &report.summary_csv)?;
    if !report.similarity.is_empty() {
        let mut text = String::new();
        for (column, labels, matrix) in &report.similarity {
            let _ = writeln!(text, "# {column}");
            let _ = writeln!(text, "method,{}", labels.join(","));
            for (i, label) in labels.iter().enumerate() {
                let values: Vec<String> = (0..labels.len()).map(|j| sig6(matrix[(i, j)])).collect();
                let _ = writeln!(text, "{label},{}", values.join(","));
            }
        }
        fs::write(dir.join("similarity.csv"), text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::persist::SCHEMA_VERSION;
    use std::collections::BTreeMap as Map;

    #[test]
    fn sig6_formats_six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.48), "-0.480000");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(123456.789), "123457");
        assert_eq!(sig6(12345678.9), "1.23457e7");
        assert_eq!(sig6(1e-7), "1.00000e-7");
        assert_eq!(sig6(f64::NAN), "NaN");
    }

    fn record(
        name: &str,
        method: FsMethod,
        dataset: &str,
        setup: &str,
        phase: Phase,
        val: Option<f64>,
        test: Option<f64>,
    ) -> ResultRecord {
        ResultRecord {
            schema_version: SCHEMA_VERSION,
            config_hash: format!("h-{name}"),
            config_name: name.into(),
            dataset: dataset.into(),
            setup: setup.into(),
            fs_method: method,
            downstream: DownstreamKind::Mlp,
            phase,
            seed: 1,
            hyperparams: Map::new(),
            selected: vec![0, 1],
            n_original: 2,
            m_total: 2,
            val_metric: val,
            test_metric: test,
            scores: None,
            error: if val.is_none() {
                Some("boom".into())
            } else {
                None
            },
        }
    }

    fn cell(name: &str, method: FsMethod, dataset: &str, tests: &[f64]) -> Vec<ResultRecord> {
        let mut records = vec![record(
            name,
            method,
            dataset,
            "none",
            Phase::Search { trial: 0 },
            Some(tests[0]),
            None,
        )];
        for (i, &t) in tests.iter().enumerate() {
            records.push(record(
                name,
                method,
                dataset,
                "none",
                Phase::Final { seed_index: i },
                Some(t),
                Some(t),
            ));
        }
        records
    }

    #[test]
    fn identical_methods_share_rank_one() {
        let mut records = cell("a", FsMethod::None, "d", &[0.5, 0.5, 0.5]);
        records.extend(cell("b", FsMethod::Univariate, "d", &[0.5, 0.5, 0.5]));
        let report = build_report(&records).unwrap();
        let ranks: Vec<Option<usize>> = report.rows.iter().map(|r| r.rank).collect();
        assert_eq!(ranks, vec![Some(1), Some(1)]);
    }

    #[test]
    fn two_by_two_grid_gets_full_ranks() {
        // Four seeds per cell: with 3 the smallest one-sided rank-sum
        // p-value is exactly 0.05, which cannot separate groups at
        // the 0.05 level.
        let mut records = cell("a1", FsMethod::None, "d1", &[0.1, 0.1, 0.12, 0.11]);
        records.extend(cell("a2", FsMethod::None, "d2", &[0.3, 0.31, 0.3, 0.29]));
        records.extend(cell(
            "b1",
            FsMethod::Univariate,
            "d1",
            &[0.9, 0.92, 0.91, 0.93],
        ));
        records.extend(cell(
            "b2",
            FsMethod::Univariate,
            "d2",
            &[0.8, 0.79, 0.81, 0.78],
        ));
        let report = build_report(&records).unwrap();
        let table = report.rank_table.as_ref().unwrap();
        assert_eq!(table.methods.len(), 2);
        assert_eq!(table.datasets.len(), 2);
        assert_eq!(report.mean_ranks.len(), 2);
        // Univariate wins both columns decisively.
        let uni = table
            .methods
            .iter()
            .position(|m| m == "univariate+mlp")
            .unwrap();
        assert_eq!(report.ranks[uni], vec![1, 1]);
        assert_eq!(report.mean_ranks[uni], 1.0);
        let none = 1 - uni;
        assert_eq!(report.ranks[none], vec![2, 2]);
        assert!(report.markdown.contains("**"));
    }

    #[test]
    fn incomplete_cell_is_excluded_from_ranks() {
        let mut records = cell("a", FsMethod::None, "d", &[0.5, 0.6, 0.55]);
        // Method b has one failed final run.
        let mut b = cell("b", FsMethod::Univariate, "d", &[0.7, 0.7]);
        b.push(record(
            "b",
            FsMethod::Univariate,
            "d",
            "none",
            Phase::Final { seed_index: 2 },
            None,
            None,
        ));
        records.extend(b);
        let report = build_report(&records).unwrap();
        let table = report.rank_table.as_ref().unwrap();
        assert_eq!(table.methods, vec!["none+mlp".to_string()]);
        let b_row = report
            .rows
            .iter()
            .find(|r| r.method_label == "univariate+mlp")
            .unwrap();
        assert!(!b_row.complete);
        assert_eq!(b_row.rank, None);
        assert!(report.markdown.contains("Missing cells"));
    }

    #[test]
    fn all_failed_cell_leaves_no_rank_table() {
        let records = vec![record(
            "a",
            FsMethod::None,
            "d",
            "none",
            Phase::Search { trial: 0 },
            None,
            None,
        )];
        let report = build_report(&records).unwrap();
        assert!(report.rank_table.is_none());
        assert_eq!(report.rows[0].n_search_ok, 0);
    }

    #[test]
    fn percent_extraneous_uses_origin_boundary() {
        let mut records = cell("a", FsMethod::Univariate, "d", &[0.5, 0.5]);
        for r in records.iter_mut() {
            r.setup = "random-0.5".into();
            r.n_original = 4;
            r.m_total = 8;
            if matches!(r.phase, Phase::Final { .. }) {
                // Half the picks sit past the original-column cut.
                r.selected = vec![0, 1, 4, 5];
            }
        }
        let report = build_report(&records).unwrap();
        assert_eq!(report.rows[0].pct_extraneous, Some(50.0));
        assert_eq!(report.rows[0].column_label, "d/random-0.5");
    }

    #[test]
    fn auc_and_precision_come_from_logged_scores() {
        let mut records = cell("a", FsMethod::Univariate, "d", &[0.5, 0.5]);
        for r in records.iter_mut() {
            r.n_original = 2;
            r.m_total = 4;
            if matches!(r.phase, Phase::Final { .. }) {
                r.selected = vec![0, 1];
                // Originals outscore extraneous columns cleanly.
                r.scores = Some(vec![4.0, 3.0, 2.0, 1.0]);
            }
        }
        let report = build_report(&records).unwrap();
        assert_eq!(report.rows[0].roc_auc, Some(1.0));
        assert_eq!(report.rows[0].precision, Some(1.0));
    }

    #[test]
    fn similarity_averages_logged_score_vectors() {
        let mut a = cell("a", FsMethod::Univariate, "d", &[0.5, 0.5]);
        let mut b = cell("b", FsMethod::DeepLasso, "d", &[0.5, 0.5]);
        for r in a.iter_mut().chain(b.iter_mut()) {
            r.m_total = 4;
            r.n_original = 4;
            if matches!(r.phase, Phase::Final { .. }) {
                r.scores = Some(vec![4.0, 3.0, 2.0, 1.0]);
            }
        }
        // Method b ranks features in exactly the opposite order.
        for r in b.iter_mut() {
            if let Some(s) = r.scores.as_mut() {
                s.reverse();
            }
        }
        let records: Vec<ResultRecord> = a.into_iter().chain(b).collect();
        let report = build_report(&records).unwrap();
        assert_eq!(report.similarity.len(), 1);
        let (column, labels, matrix) = &report.similarity[0];
        assert_eq!(column, "d");
        assert_eq!(labels.len(), 2);
        assert!((matrix[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((matrix[(0, 1)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut records = cell("a", FsMethod::None, "d", &[0.5, 0.6]);
        records.extend(cell("b", FsMethod::Univariate, "d", &[0.7, 0.8]));
        let report = build_report(&records).unwrap();
        write_report(dir.path(), &report).unwrap();
        let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
        assert!(md.contains("| Method |"));
        let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("a,d,none,none,mlp"));
    }
}
