//! Long-format CSV: `scenario,param,value,realization,seed,metric,metric_value`.
//! Floats carry 17 significant digits so a read-back is exact.

use std::borrow::Cow;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{SimError, SimResult};
use crate::sweep::{Record, SweepResult};

pub const HEADER: [&str; 7] = [
    "scenario",
    "param",
    "value",
    "realization",
    "seed",
    "metric",
    "metric_value",
];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Incremental writer; the header is written on creation.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
    path: PathBuf,
}

impl CsvSink<File> {
    pub fn create(path: &Path) -> SimResult<Self> {
        let file = File::create(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::new(file, path)
    }
}

impl<W: Write> CsvSink<W> {
    /// `path` is only used for error messages.
    pub fn new(inner: W, path: &Path) -> SimResult<Self> {
        let mut sink = Self {
            writer: csv::Writer::from_writer(inner),
            path: path.to_path_buf(),
        };
        sink.row(HEADER)?;
        Ok(sink)
    }

    fn row<I, T>(&mut self, fields: I) -> SimResult<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|source| SimError::Csv {
                path: self.path.clone(),
                source,
            })
    }

    pub fn write(&mut self, records: &[Record]) -> SimResult<()> {
        for r in records {
            self.row([
                r.scenario.to_string(),
                r.param.to_string(),
                float(r.value),
                r.realization.to_string(),
                r.seed.to_string(),
                r.metric.to_string(),
                float(r.metric_value),
            ])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> SimResult<W> {
        self.writer.flush().map_err(|source| SimError::Io {
            path: self.path.clone(),
            source,
        })?;
        self.writer.into_inner().map_err(|e| SimError::Io {
            path: self.path,
            source: e.into_error(),
        })
    }
}

pub fn write_csv(result: &SweepResult, path: &Path) -> SimResult<()> {
    let mut sink = CsvSink::create(path)?;
    sink.write(&result.records)?;
    sink.finish().map(|_| ())
}

pub fn read_csv(path: &Path) -> SimResult<Vec<Record>> {
    let csv_err = |source| SimError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(HEADER) {
        return Err(SimError::Record {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}", HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    let mut scenario: Arc<str> = Arc::from("");
    let mut param: Arc<str> = Arc::from("");
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| SimError::Record {
            path: path.to_path_buf(),
            line,
            message,
        };
        let f = |i: usize| -> SimResult<f64> {
            row[i]
                .parse()
                .map_err(|e| bad(format!("{}: {e}", HEADER[i])))
        };
        let u = |i: usize| -> SimResult<u64> {
            row[i]
                .parse()
                .map_err(|e| bad(format!("{}: {e}", HEADER[i])))
        };
        // share repeated labels
        if *scenario != row[0] {
            scenario = Arc::from(&row[0]);
        }
        if *param != row[1] {
            param = Arc::from(&row[1]);
        }
        out.push(Record {
            scenario: scenario.clone(),
            param: param.clone(),
            value: f(2)?,
            realization: u(3)?,
            seed: u(4)?,
            metric: Cow::Owned(row[5].to_string()),
            metric_value: f(6)?,
        });
    }
    Ok(out)
}
