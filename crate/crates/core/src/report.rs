//! Report rendering shared by the harness and the command-line tool.

use std::fmt::Write as _;

use serde::Serialize;

pub const REPORT_SCHEMA: &str = "cotangent-lab/report/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
    Csv,
}

/// A versioned, serialisable result with a human-readable rendering and a
/// tabular view for plotting.
pub trait Report: Serialize {
    fn passed(&self) -> bool;

    /// Short multi-line summary.
    fn text(&self) -> String;

    /// Header and rows for CSV output.
    fn table(&self) -> (Vec<String>, Vec<Vec<String>>);

    fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialise")
    }

    fn csv(&self) -> String {
        let (header, rows) = self.table();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory CSV");
        for r in rows {
            w.write_record(&r).expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.json(),
            Format::Text => self.text(),
            Format::Csv => self.csv(),
        }
    }
}

/// `1.234e-5`-style number for text reports.
pub fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub(crate) fn header_line(out: &mut String, title: &str, passed: bool) {
    let _ = writeln!(out, "{title}: {}", verdict(passed));
}

/// Several reports of one kind, passing when all of them pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSet<T> {
    pub schema: String,
    pub check: String,
    pub reports: Vec<T>,
    pub passed: bool,
}

impl<T: Report> ReportSet<T> {
    pub fn new(check: impl Into<String>, reports: Vec<T>) -> Self {
        let passed = reports.iter().all(Report::passed);
        ReportSet {
            schema: REPORT_SCHEMA.into(),
            check: check.into(),
            reports,
            passed,
        }
    }
}

impl<T: Report> Report for ReportSet<T> {
    fn passed(&self) -> bool {
        self.passed
    }

    fn text(&self) -> String {
        let mut out = String::new();
        header_line(&mut out, &self.check, self.passed);
        for r in &self.reports {
            for line in r.text().lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
        out
    }

    /// Rows of every member, prefixed with the member index. Members with a
    /// different header than the first are skipped.
    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = None;
        let mut rows = Vec::new();
        for (k, r) in self.reports.iter().enumerate() {
            let (h, body) = r.table();
            let h0 = header.get_or_insert_with(|| h.clone());
            if *h0 != h {
                continue;
            }
            rows.extend(body.into_iter().map(|row| std::iter::once(k.to_string()).chain(row).collect()));
        }
        let mut full = vec!["report".to_string()];
        full.extend(header.unwrap_or_default());
        (full, rows)
    }
}
