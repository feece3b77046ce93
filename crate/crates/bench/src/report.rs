use std::fmt::Write as _;
use std::str::FromStr;

use perceplan::Strategy;

use crate::experiment::RunMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Aligned text, one block per instance, one column per strategy.
    Table,
    /// One row per run.
    Csv,
    /// Mean wall time per (instance, strategy, task), whitespace separated.
    Plotdata,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "plotdata" => Ok(ReportFormat::Plotdata),
            other => Err(format!("unknown report format `{other}` (expected table, csv or plotdata)")),
        }
    }
}

pub const CSV_HEADER: [&str; 9] =
    ["instance", "strategy", "task", "run", "queries", "feasible", "infeasible", "wall_ms", "timed_out"];

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub instance: String,
    pub strategy: String,
    pub task: String,
    pub run: usize,
    pub queries: usize,
    pub feasible: usize,
    pub infeasible: usize,
    pub wall_ms: f64,
    pub timed_out: bool,
}

pub fn emit_report(rows: &[RunMetrics], format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => table(rows),
        ReportFormat::Csv => csv_text(rows),
        ReportFormat::Plotdata => plotdata(rows),
    }
}

fn csv_text(rows: &[RunMetrics]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for m in rows {
        for r in &m.runs {
            w.write_record([
                m.instance.clone(),
                m.strategy.to_string(),
                m.task.to_string(),
                r.run.to_string(),
                r.queries.to_string(),
                r.feasible.to_string(),
                r.infeasible.to_string(),
                r.wall_ms().to_string(),
                r.timed_out.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Reads back the output of the `csv` report.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, csv::Error> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<usize, csv::Error> {
            field(i).parse().map_err(|e| invalid(&record, format!("{}: {e}", CSV_HEADER[i])))
        };
        out.push(CsvRow {
            instance: field(0).to_string(),
            strategy: field(1).to_string(),
            task: field(2).to_string(),
            run: num(3)?,
            queries: num(4)?,
            feasible: num(5)?,
            infeasible: num(6)?,
            wall_ms: field(7).parse().map_err(|e| invalid(&record, format!("wall_ms: {e}")))?,
            timed_out: field(8).parse().map_err(|e| invalid(&record, format!("timed_out: {e}")))?,
        });
    }
    Ok(out)
}

fn invalid(record: &csv::StringRecord, message: String) -> csv::Error {
    let line = record.position().map_or(0, |p| p.line());
    csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {line}: {message}")))
}

fn plotdata(rows: &[RunMetrics]) -> String {
    let mut out = String::from("# instance strategy task mean_wall_s timed_out\n");
    for m in rows {
        let _ = writeln!(
            out,
            "{} {} {} {:.6} {}",
            m.instance,
            m.strategy,
            m.task,
            m.mean_wall_time().as_secs_f64(),
            u8::from(m.timed_out())
        );
    }
    out
}

/// Renders one metric of a table cell.
type Cell = dyn Fn(&RunMetrics) -> String;

fn column_title(s: Strategy) -> &'static str {
    match s {
        Strategy::None => "None",
        Strategy::Filt => "Filt",
        Strategy::Pre => "Pre",
        Strategy::Repl => "Repl",
    }
}

fn table(rows: &[RunMetrics]) -> String {
    const LABEL: usize = 30;
    const COL: usize = 12;
    let mut instances: Vec<&str> = Vec::new();
    for m in rows {
        if !instances.contains(&m.instance.as_str()) {
            instances.push(&m.instance);
        }
    }
    let mut out = String::new();
    for (i, inst) in instances.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "{:<LABEL$}", format!("instance {inst}"));
        for s in Strategy::ALL {
            let _ = write!(out, "{:>COL$}", column_title(s));
        }
        out.push('\n');
        let mut tasks = Vec::new();
        for m in rows.iter().filter(|m| m.instance == *inst) {
            if !tasks.contains(&m.task) {
                tasks.push(m.task);
            }
        }
        for task in tasks {
            let cell = |s: Strategy| rows.iter().find(|m| m.instance == *inst && m.task == task && m.strategy == s);
            let lines: [(&str, &Cell); 4] = [
                ("queries", &|m| format!("{:.1}", m.mean_queries())),
                ("feasible plans", &|m| format!("{:.1}", m.mean_feasible())),
                ("infeasible plans", &|m| format!("{:.1}", m.mean_infeasible())),
                ("time (s)", &|m| {
                    let t = format!("{:.3}", m.mean_wall_time().as_secs_f64());
                    if m.timed_out() {
                        format!(">{t}")
                    } else {
                        t
                    }
                }),
            ];
            for (k, (name, value)) in lines.iter().enumerate() {
                let head = if k == 0 { format!("  {task}") } else { String::new() };
                let _ = write!(out, "{:<LABEL$}", format!("{head:<12}{name}"));
                for s in Strategy::ALL {
                    let v = cell(s).map_or_else(|| "-".to_string(), value);
                    let _ = write!(out, "{v:>COL$}");
                }
                out.push('\n');
            }
        }
    }
    out
}
