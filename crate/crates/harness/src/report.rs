//! Result rows and their CSV form.
//!
//! Files start with `# `-prefixed comment lines (the resolved config), then
//! the header `experiment,N,q,param,L,metric,value,samples` and one line per
//! row. Values use the shortest representation that round-trips; lossless
//! PSNR is written as `inf`.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::HarnessError;

pub const HEADER: [&str; 8] = ["experiment", "N", "q", "param", "L", "metric", "value", "samples"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Bound,
    Log2Bound,
    RhoStar,
    /// 0 = trivial, 1 = interior, 2 = rho = 1.
    Regime,
    MinLOverN,
    ErrorRate,
    PsnrDb,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Bound,
        Metric::Log2Bound,
        Metric::RhoStar,
        Metric::Regime,
        Metric::MinLOverN,
        Metric::ErrorRate,
        Metric::PsnrDb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Bound => "bound",
            Metric::Log2Bound => "log2_bound",
            Metric::RhoStar => "rho_star",
            Metric::Regime => "regime",
            Metric::MinLOverN => "min_l_over_n",
            Metric::ErrorRate => "error_rate",
            Metric::PsnrDb => "psnr_db",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::Parse(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub n: usize,
    pub q: usize,
    /// `key=value` pairs joined by `;`, e.g. `p=0.05;alphabet=32`.
    pub param: String,
    pub l: usize,
    pub metric: Metric,
    pub value: f64,
    pub samples: usize,
}

impl ResultRow {
    /// Looks up `key` in the param string.
    pub fn param_value(&self, key: &str) -> Option<&str> {
        self.param
            .split(';')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }

    fn record(&self) -> [String; 8] {
        [
            self.experiment.clone(),
            self.n.to_string(),
            self.q.to_string(),
            self.param.clone(),
            self.l.to_string(),
            self.metric.to_string(),
            self.value.to_string(),
            self.samples.to_string(),
        ]
    }
}

/// Writes comment lines, the header and all rows.
pub fn write_csv<W: Write>(rows: &[ResultRow], comments: &[String], mut out: W) -> Result<(), HarnessError> {
    for line in comments {
        let line = if line.starts_with('#') { line.clone() } else { format!("# {line}") };
        writeln!(out, "{line}")?;
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], comments: &[String], path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    write_csv(rows, comments, BufWriter::new(file))
}

/// Parses rows written by [`write_csv`], skipping comment lines.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(HarnessError::Parse(format!("unexpected header {header:?}")));
    }
    let field = |s: &str, what: &str| -> Result<usize, HarnessError> {
        s.parse().map_err(|_| HarnessError::Parse(format!("bad {what} {s:?}")))
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        rows.push(ResultRow {
            experiment: r[0].to_owned(),
            n: field(&r[1], "N")?,
            q: field(&r[2], "q")?,
            param: r[3].to_owned(),
            l: field(&r[4], "L")?,
            metric: r[5].parse()?,
            value: r[6]
                .parse()
                .map_err(|_| HarnessError::Parse(format!("bad value {:?}", &r[6])))?,
            samples: field(&r[7], "samples")?,
        });
    }
    Ok(rows)
}

/// 10 log10((2^bits - 1)^2 / mse); infinite for a lossless reconstruction.
pub fn psnr_db(mse: f64, bits: u32) -> f64 {
    if mse == 0.0 {
        return f64::INFINITY;
    }
    let peak = ((1u32 << bits) - 1) as f64;
    10.0 * (peak * peak / mse).log10()
}
