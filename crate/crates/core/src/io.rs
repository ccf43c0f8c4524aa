//! File formats: dense matrix CSV, edge lists, input-state data CSV and
//! trajectory CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::data::DataRecord;
use crate::linalg::Matrix;
use crate::network::TrajectoryRecord;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<File, IoError> {
    File::create(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_cell(cell: &str, context: &str, line: usize) -> Result<f64, IoError> {
    let cell = cell.trim();
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| IoError::Parse {
            context: context.to_string(),
            line,
            message: format!("invalid number {cell:?}"),
        })
}

/// Reads a dense matrix: one row per line, comma-separated decimals.
/// Blank lines are skipped.
pub fn read_matrix<R: Read>(reader: R, context: &str) -> Result<Matrix, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|c| parse_cell(c, context, line))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(IoError::Parse {
                    context: context.to_string(),
                    line,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IoError::Format(format!("{context}: empty matrix")));
    }
    let cols = rows[0].len();
    Ok(Matrix::from_row_iterator(
        rows.len(),
        cols,
        rows.into_iter().flatten(),
    ))
}

pub fn read_matrix_file(path: &Path) -> Result<Matrix, IoError> {
    read_matrix(open(path)?, &path.display().to_string())
}

pub fn write_matrix<W: Write>(mut w: W, m: &Matrix) -> Result<(), IoError> {
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_file(path: &Path, m: &Matrix) -> Result<(), IoError> {
    write_matrix(create(path)?, m)
}

/// Reads an undirected edge list: one `i j` pair per line, 1-based.
/// `#` starts a comment.
pub fn read_edges<R: Read>(reader: R, context: &str) -> Result<Vec<(usize, usize)>, IoError> {
    let mut edges = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parts: Vec<&str> = content.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| IoError::Parse {
                context: context.to_string(),
                line: idx + 1,
                message: format!("invalid agent index {s:?}"),
            })
        };
        match parts.as_slice() {
            [i, j] => edges.push((parse(i)?, parse(j)?)),
            _ => {
                return Err(IoError::Parse {
                    context: context.to_string(),
                    line: idx + 1,
                    message: "expected two indices".into(),
                })
            }
        }
    }
    Ok(edges)
}

pub fn read_edges_file(path: &Path) -> Result<Vec<(usize, usize)>, IoError> {
    read_edges(open(path)?, &path.display().to_string())
}

/// Reads input-state data with header `k,u_1..u_m,x_1..x_n`. Rows run over
/// `k = 0..=T`; the input cells of the last row are left empty.
pub fn read_data<R: Read>(reader: R, context: &str) -> Result<DataRecord, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let fmt = |msg: String| IoError::Format(format!("{context}: {msg}"));
    if header.get(0) != Some("k") {
        return Err(fmt("first column must be `k`".into()));
    }
    let mut m = 0;
    let mut n = 0;
    for name in header.iter().skip(1) {
        if let Some(idx) = name.strip_prefix("u_") {
            if n > 0 || idx != (m + 1).to_string() {
                return Err(fmt(format!("unexpected column {name:?}")));
            }
            m += 1;
        } else if let Some(idx) = name.strip_prefix("x_") {
            if idx != (n + 1).to_string() {
                return Err(fmt(format!("unexpected column {name:?}")));
            }
            n += 1;
        } else {
            return Err(fmt(format!("unexpected column {name:?}")));
        }
    }
    if m == 0 || n == 0 {
        return Err(fmt("need at least one u_ and one x_ column".into()));
    }

    let mut inputs: Vec<Vec<f64>> = Vec::new();
    let mut states: Vec<Vec<f64>> = Vec::new();
    let mut ended = false;
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if ended {
            return Err(IoError::Parse {
                context: context.to_string(),
                line,
                message: "rows after the final (input-free) row".into(),
            });
        }
        let k = parse_cell(&record[0], context, line)?;
        if k != row_idx as f64 {
            return Err(IoError::Parse {
                context: context.to_string(),
                line,
                message: format!("expected k = {row_idx}, found {k}"),
            });
        }
        let u_cells: Vec<&str> = (1..=m).map(|i| &record[i]).collect();
        if u_cells.iter().all(|c| c.is_empty() || *c == "-") {
            ended = true;
        } else {
            inputs.push(
                u_cells
                    .iter()
                    .map(|c| parse_cell(c, context, line))
                    .collect::<Result<_, _>>()?,
            );
        }
        states.push(
            (m + 1..=m + n)
                .map(|i| parse_cell(&record[i], context, line))
                .collect::<Result<_, _>>()?,
        );
    }
    if !ended {
        return Err(fmt("last row must leave the input cells empty".into()));
    }
    let t = inputs.len();
    let u = Matrix::from_iterator(m, t, inputs.into_iter().flatten());
    let x = Matrix::from_iterator(n, t + 1, states.into_iter().flatten());
    DataRecord::new(u, x).map_err(|e| fmt(e.to_string()))
}

pub fn read_data_file(path: &Path) -> Result<DataRecord, IoError> {
    read_data(open(path)?, &path.display().to_string())
}

pub fn write_data<W: Write>(w: W, record: &DataRecord) -> Result<(), IoError> {
    let (m, n) = (record.input_dim(), record.state_dim());
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["k".to_string()];
    header.extend((1..=m).map(|i| format!("u_{i}")));
    header.extend((1..=n).map(|i| format!("x_{i}")));
    wtr.write_record(&header)?;
    for k in 0..=record.len() {
        let mut row = vec![k.to_string()];
        for i in 0..m {
            row.push(if k < record.len() {
                record.inputs()[(i, k)].to_string()
            } else {
                String::new()
            });
        }
        row.extend((0..n).map(|i| record.states()[(i, k)].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Trajectory CSV: header `k,x_1_1,...,x_p_n,disagreement`, where `x_i_j`
/// is component `j` of agent `i`.
pub fn write_trajectory<W: Write>(w: W, record: &TrajectoryRecord) -> Result<(), IoError> {
    let (p, n) = (record.agents(), record.state_dim());
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["k".to_string()];
    for i in 1..=p {
        header.extend((1..=n).map(|j| format!("x_{i}_{j}")));
    }
    header.push("disagreement".into());
    wtr.write_record(&header)?;
    for (k, (x, d)) in record.states().iter().zip(record.disagreement()).enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        row.push(d.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_trajectory_file(path: &Path, record: &TrajectoryRecord) -> Result<(), IoError> {
    write_trajectory(create(path)?, record)
}

/// Serde adapter storing a matrix as a list of rows.
pub mod rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::Matrix;

    pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix, String> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err("ragged matrix rows".into());
        }
        Ok(Matrix::from_row_iterator(
            rows.len(),
            cols,
            rows.iter().flatten().copied(),
        ))
    }

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }

    pub mod list {
        use super::*;

        pub fn serialize<S: Serializer>(ms: &[Matrix], s: S) -> Result<S::Ok, S::Error> {
            ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Matrix>, D::Error> {
            let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
            all.iter()
                .map(|rows| from_rows(rows).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}
