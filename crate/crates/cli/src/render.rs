//! Markdown and CSV renderings of analysis results.
//!
//! Markdown layouts follow the published tables: tree types as columns with
//! the observed (or expected) proportion in brackets. CSV layouts are flat
//! and machine-readable.

use std::io;

use treebias_core::analytic::Theorem2Breakdown;
use treebias_core::enumeration::{EnumerationResult, SecondaryExtremeChain};
use treebias_core::simulation::{AppendixRow, ExperimentReport, Table1Row};
use treebias_core::tree::TreeType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

/// A rectangular table of preformatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_markdown(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].len())
                    .chain([self.headers[c].len(), 3])
                    .max()
                    .unwrap_or(3)
            })
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        let mut out = line(&self.headers);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        out.push_str(&line(&rule));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }

    pub fn to_csv(&self) -> io::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        String::from_utf8(bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn render(&self, format: Format) -> io::Result<String> {
        match format {
            Format::Markdown => Ok(self.to_markdown()),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Fixed-point with exact halves rounded away from zero (`format!` rounds them to even).
pub fn fixed(x: f64, precision: usize) -> String {
    if x.is_finite() {
        // Every finite f64 has a terminating expansion within 1100 places.
        let exact = format!("{:.1100}", x.abs());
        let frac = &exact[exact.find('.').unwrap() + 1..];
        let tail = &frac[precision..];
        if tail.starts_with('5') && tail[1..].bytes().all(|b| b == b'0') {
            let nudged = x + x.signum() * 0.5 * 10f64.powi(-(precision as i32) - 1);
            return format!("{nudged:.precision$}");
        }
    }
    format!("{x:.precision$}")
}

/// Two-column `quantity,value` table.
pub fn key_values(pairs: &[(&str, f64)], precision: usize) -> Table {
    let mut t = Table::new(["quantity", "value"]);
    for (k, v) in pairs {
        t.push(vec![k.to_string(), fixed(*v, precision)]);
    }
    t
}

pub fn breakdown(b: &Theorem2Breakdown, precision: usize) -> Table {
    key_values(
        &[
            ("p_extreme", b.p_extreme),
            ("e_size_extreme", b.e_size_extreme),
            ("e_size_not_extreme", b.e_size_not_extreme),
            ("e_size_overall", b.e_size_overall),
            ("ratio", b.ratio_to_true),
        ],
        precision,
    )
}

pub fn chain(c: &SecondaryExtremeChain, pure_chain: f64, first_split: f64, precision: usize) -> Table {
    key_values(
        &[
            ("first_split", first_split),
            ("pure_chain", pure_chain),
            ("prev_not_extreme", c.prev_not_extreme),
            ("prev_extreme", c.prev_extreme),
            ("p_not_extreme", c.p_not_extreme),
            ("weighted", c.weighted),
        ],
        precision,
    )
}

/// Analytic single-positive table: Type 1 ratio with its probability in
/// brackets, Type 2 ratio, overall ratio.
pub fn table1(rows: &[Table1Row], precision: usize, format: Format) -> Table {
    let f = |x| fixed(x, precision);
    match format {
        Format::Markdown => {
            let mut t = Table::new(["n", "Type 1", "Type 2", "Overall"]);
            for r in rows {
                t.push(vec![
                    r.n.to_string(),
                    format!("{} ({})", f(r.type1_ratio), f(r.type1_proportion)),
                    f(r.type2_ratio),
                    f(r.overall_ratio),
                ]);
            }
            t
        }
        Format::Csv => {
            let mut t = Table::new(["n", "type1_ratio", "type1_proportion", "type2_ratio", "overall"]);
            for r in rows {
                t.push(vec![
                    r.n.to_string(),
                    f(r.type1_ratio),
                    f(r.type1_proportion),
                    f(r.type2_ratio),
                    f(r.overall_ratio),
                ]);
            }
            t
        }
    }
}

const MAIN_TYPES: [TreeType; 4] = [TreeType::Type1, TreeType::Type2, TreeType::Type3, TreeType::Type4];

/// Single-positive Monte Carlo report.
///
/// CSV: `n,type,count,proportion,ratio` per observed type, then
/// `n,OVERALL,,1.0,ratio`.
pub fn single_positive(report: &ExperimentReport, precision: usize, format: Format) -> Table {
    let f = |x| fixed(x, precision);
    match format {
        Format::Markdown => {
            let mut others: Vec<TreeType> = report
                .sizes
                .iter()
                .flat_map(|s| s.types.iter().map(|t| t.tree_type))
                .filter(|t| !MAIN_TYPES.contains(t))
                .collect();
            others.sort();
            others.dedup();
            let columns: Vec<TreeType> = MAIN_TYPES.iter().copied().chain(others).collect();
            let mut headers = vec!["n".to_string()];
            headers.extend(columns.iter().map(|t| match t {
                TreeType::Type1 => "Type 1".to_string(),
                TreeType::Type2 => "Type 2".to_string(),
                TreeType::Type3 => "Type 3".to_string(),
                TreeType::Type4 => "Type 4".to_string(),
                other => other.label(),
            }));
            headers.push("Overall".into());
            let mut t = Table::new(headers);
            for s in &report.sizes {
                let mut row = vec![s.n.to_string()];
                row.extend(columns.iter().map(|&ty| match s.get(ty) {
                    Some(st) => format!("{} ({})", f(st.ratio_to_true), f(st.proportion)),
                    None => "NA".to_string(),
                }));
                row.push(f(s.overall_ratio));
                t.push(row);
            }
            t
        }
        Format::Csv => {
            let mut t = Table::new(["n", "type", "count", "proportion", "ratio"]);
            for s in &report.sizes {
                for st in &s.types {
                    t.push(vec![
                        s.n.to_string(),
                        st.tree_type.label(),
                        st.count.to_string(),
                        f(st.proportion),
                        f(st.ratio_to_true),
                    ]);
                }
                t.push(vec![
                    s.n.to_string(),
                    "OVERALL".into(),
                    String::new(),
                    "1.0".into(),
                    f(s.overall_ratio),
                ]);
            }
            t
        }
    }
}

/// Logit-model experiment. CSV: `dgp,b,prevalence,ratio_mean,ratio_sd`.
pub fn appendix(rows: &[AppendixRow], precision: usize, format: Format) -> Table {
    let f = |x| fixed(x, precision);
    match format {
        Format::Markdown => {
            let mut t = Table::new(["dgp", "b", "Prevalence", "Ratio (sd)"]);
            for r in rows {
                t.push(vec![
                    r.dgp.to_string(),
                    r.b.to_string(),
                    f(r.mean_prevalence),
                    format!("{} ({})", f(r.mean_ratio), f(r.sd_ratio)),
                ]);
            }
            t
        }
        Format::Csv => {
            let mut t = Table::new(["dgp", "b", "prevalence", "ratio_mean", "ratio_sd"]);
            for r in rows {
                t.push(vec![
                    r.dgp.to_string(),
                    r.b.to_string(),
                    f(r.mean_prevalence),
                    f(r.mean_ratio),
                    f(r.sd_ratio),
                ]);
            }
            t
        }
    }
}

/// Ordering enumeration. CSV: `n,m,n_orderings,mean_expected_prevalence,ratio`.
pub fn enumeration(results: &[EnumerationResult], precision: usize, format: Format) -> Table {
    let f = |x| fixed(x, precision);
    let with_exact = results.iter().any(|r| r.exact_ratio.is_some());
    let mut headers = match format {
        Format::Markdown => vec!["n", "m", "orderings", "mean estimate", "ratio"],
        Format::Csv => vec!["n", "m", "n_orderings", "mean_expected_prevalence", "ratio"],
    };
    if with_exact && format == Format::Markdown {
        headers.push("exact ratio");
    }
    let mut t = Table::new(headers);
    for r in results {
        let mut row = vec![
            r.n.to_string(),
            r.m.to_string(),
            r.n_orderings.to_string(),
            f(r.mean_expected_prevalence),
            f(r.ratio_to_true),
        ];
        if with_exact && format == Format::Markdown {
            row.push(r.exact_ratio.clone().unwrap_or_default());
        }
        t.push(row);
    }
    t
}
