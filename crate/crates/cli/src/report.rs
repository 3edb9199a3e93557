//! Markdown and CSV rendering of aggregated sweep results.

use std::collections::BTreeMap;

use clap::ValueEnum;
use dsweep_core::decoding::{DecodingConfig, StrategyKind};
use dsweep_core::sweep::{AggregateRow, Aggregates, RankMetric, Ranking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    /// One row per strategy, averaged over backends and datasets.
    Strategy,
    /// One row per (strategy, backend), averaged over datasets.
    Backend,
    /// One row per (strategy, backend, dataset), seeds collapsed.
    Dataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

/// One displayed line; values are raw (unscaled).
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub strategy: DecodingConfig,
    pub backend: Option<String>,
    pub dataset: Option<String>,
    pub div: f64,
    pub mauve: f64,
    pub coh: f64,
    pub qtext: f64,
    pub coherence_raw: f64,
    pub n_generations: usize,
}

impl From<&AggregateRow> for Line {
    fn from(r: &AggregateRow) -> Self {
        Line {
            strategy: r.strategy.clone(),
            backend: r.backend.clone(),
            dataset: None,
            div: r.div,
            mauve: r.mauve,
            coh: r.coh,
            qtext: r.qtext,
            coherence_raw: r.coherence_raw,
            n_generations: r.n_generations,
        }
    }
}

pub fn lines(agg: &Aggregates, group_by: GroupBy) -> Vec<Line> {
    match group_by {
        GroupBy::Strategy => agg.overall.iter().map(Line::from).collect(),
        GroupBy::Backend => agg.by_backend.iter().map(Line::from).collect(),
        GroupBy::Dataset => agg
            .cells
            .iter()
            .map(|c| Line {
                strategy: c.strategy.clone(),
                backend: Some(c.backend.clone()),
                dataset: Some(c.dataset.clone()),
                div: c.div,
                mauve: c.mauve,
                coh: c.coh,
                qtext: c.qtext,
                coherence_raw: c.coherence_raw,
                n_generations: c.n_generations,
            })
            .collect(),
    }
}

const METRICS: [&str; 5] = ["DIV", "MAUVE", "COH", "QText", "coherence_raw"];

fn values(l: &Line) -> [f64; 5] {
    [l.div, l.mauve, l.coh, l.qtext, l.coherence_raw]
}

fn display(metric: usize, v: f64) -> String {
    if metric == 4 {
        format!("{v:.3}")
    } else {
        format!("{:.2}", v * 100.0)
    }
}

type Family<'a> = (StrategyKind, Option<&'a str>, Option<&'a str>);

/// `bold[i][m]` marks line `i` as holding the maximum of metric `m` within
/// its strategy family (lines sharing kind, backend and dataset).
pub fn bold_marks(lines: &[Line]) -> Vec<[bool; 5]> {
    let mut best: BTreeMap<Family, [f64; 5]> = BTreeMap::new();
    for l in lines {
        let entry = best
            .entry((
                l.strategy.kind(),
                l.backend.as_deref(),
                l.dataset.as_deref(),
            ))
            .or_insert([f64::NEG_INFINITY; 5]);
        for (b, v) in entry.iter_mut().zip(values(l)) {
            if v > *b {
                *b = v;
            }
        }
    }
    lines
        .iter()
        .map(|l| {
            let b = best[&(
                l.strategy.kind(),
                l.backend.as_deref(),
                l.dataset.as_deref(),
            )];
            let v = values(l);
            std::array::from_fn(|m| v[m] == b[m])
        })
        .collect()
}

fn header(out: &mut String, lead: &[&str]) {
    let cols: Vec<&str> = lead.iter().copied().chain(METRICS).collect();
    out.push_str(&format!("| {} |\n", cols.join(" | ")));
    let rules: Vec<&str> = lead
        .iter()
        .map(|_| "---")
        .chain(METRICS.iter().map(|_| "---:"))
        .collect();
    out.push_str(&format!("|{}|\n", rules.join("|")));
}

fn lead_columns(group_by: GroupBy) -> Vec<&'static str> {
    match group_by {
        GroupBy::Strategy => vec!["Strategy"],
        GroupBy::Backend => vec!["Strategy", "Backend"],
        GroupBy::Dataset => vec!["Strategy", "Backend", "Dataset"],
    }
}

fn lead_cells(l: &Line, group_by: GroupBy) -> Vec<String> {
    let mut cells = vec![format!("`{}`", l.strategy.key())];
    if group_by != GroupBy::Strategy {
        cells.push(l.backend.clone().unwrap_or_default());
    }
    if group_by == GroupBy::Dataset {
        cells.push(l.dataset.clone().unwrap_or_default());
    }
    cells
}

fn ranking_table(out: &mut String, title: &str, rows: &[AggregateRow]) {
    out.push_str(&format!("\n### {title}\n\n"));
    header(out, &["#", "Strategy"]);
    for (i, r) in rows.iter().enumerate() {
        let l = Line::from(r);
        let mut cells = vec![(i + 1).to_string(), format!("`{}`", l.strategy.key())];
        cells.extend(values(&l).iter().enumerate().map(|(m, v)| display(m, *v)));
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
}

/// Keys of failed experiments with their reasons, when known.
pub type Failures = Vec<(String, Option<String>)>;

pub fn render_markdown(
    lines: &[Line],
    group_by: GroupBy,
    ranking: &Ranking,
    metric: RankMetric,
    failures: &Failures,
) -> String {
    let mut out = String::from("## Weighted averages\n\n");
    out.push_str("DIV, MAUVE, COH and QText are scaled by 100; coherence_raw is the mean log-probability in nats. ");
    out.push_str("Bold marks the best value within each strategy family.\n\n");
    header(&mut out, &lead_columns(group_by));
    for (l, marks) in lines.iter().zip(bold_marks(lines)) {
        let mut cells = lead_cells(l, group_by);
        for (m, v) in values(l).iter().enumerate() {
            let s = display(m, *v);
            cells.push(if marks[m] { format!("**{s}**") } else { s });
        }
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }

    let n = ranking.top.len();
    out.push_str(&format!("\n## Ranking by {metric}\n"));
    if ranking.truncated {
        out.push_str(&format!(
            "\nOnly {n} strategies are available; both tables list all of them.\n"
        ));
    }
    ranking_table(&mut out, &format!("Top {n}"), &ranking.top);
    ranking_table(&mut out, &format!("Bottom {n}"), &ranking.bottom);

    if !failures.is_empty() {
        out.push_str(&format!("\n## Failed experiments ({})\n\n", failures.len()));
        for (key, reason) in failures {
            match reason {
                Some(r) => out.push_str(&format!("- `{key}`: {r}\n")),
                None => out.push_str(&format!("- `{key}`\n")),
            }
        }
    }
    out
}

pub const CSV_HEADER: [&str; 11] = [
    "section",
    "rank",
    "strategy",
    "backend",
    "dataset",
    "div",
    "mauve",
    "coh",
    "qtext",
    "coherence_raw",
    "n_generations",
];

fn csv_record(section: &str, rank: Option<usize>, l: &Line) -> Vec<String> {
    let mut rec = vec![
        section.to_owned(),
        rank.map(|r| r.to_string()).unwrap_or_default(),
        l.strategy.key(),
        l.backend.clone().unwrap_or_default(),
        l.dataset.clone().unwrap_or_default(),
    ];
    rec.extend(values(l).iter().map(|v| v.to_string()));
    rec.push(l.n_generations.to_string());
    rec
}

/// Unscaled values, shortest round-trip formatting. Sections are `table`,
/// `top` and `bottom`; failed experiments are omitted.
pub fn render_csv(lines: &[Line], ranking: &Ranking) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for l in lines {
        w.write_record(csv_record("table", None, l))?;
    }
    for (section, rows) in [("top", &ranking.top), ("bottom", &ranking.bottom)] {
        for (i, r) in rows.iter().enumerate() {
            w.write_record(csv_record(section, Some(i + 1), &Line::from(r)))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
