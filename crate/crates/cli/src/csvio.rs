//! CSV readers and writers. All files use a header row, `.` as the
//! decimal separator and LF line endings; floats are written in
//! shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use pradp_core::nalgebra::{Complex, DMatrix, DVector};
use pradp_core::qtracker::{Dataset, Transition};
use pradp_core::reference::{BasisFamily, ParamMatrix};
use pradp_core::sim::Trajectory;

use crate::{CliError, CliResult};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents.as_bytes())?;
    Ok(())
}

fn parse_cell(cell: &str, path: &Path) -> CliResult<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Io(format!("{}: bad number '{cell}'", path.display())))
}

/// `step,r1,...,rn`
pub fn write_reference_samples(path: &Path, samples: &[(usize, DVector<f64>)]) -> CliResult<()> {
    let n = samples.first().map(|(_, v)| v.len()).unwrap_or(0);
    let mut out = String::from("step");
    for i in 1..=n {
        let _ = write!(out, ",r{i}");
    }
    out.push('\n');
    for (step, value) in samples {
        let _ = write!(out, "{step}");
        for v in value.iter() {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn read_reference_samples(path: &Path) -> CliResult<Vec<(usize, DVector<f64>)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Io(format!("{}: empty file", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"step") || columns.len() < 2 {
        return Err(CliError::Io(format!(
            "{}: expected header 'step,r1,...,rn'",
            path.display()
        )));
    }
    let n = columns.len() - 1;
    let mut samples = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n + 1 {
            return Err(CliError::Io(format!(
                "{}: row has {} cells, expected {}",
                path.display(),
                cells.len(),
                n + 1
            )));
        }
        let step = cells[0].trim().parse::<usize>().map_err(|_| {
            CliError::Io(format!("{}: bad step '{}'", path.display(), cells[0]))
        })?;
        let values = cells[1..]
            .iter()
            .map(|c| parse_cell(c, path))
            .collect::<CliResult<Vec<f64>>>()?;
        samples.push((step, DVector::from_vec(values)));
    }
    Ok(samples)
}

/// `x1..xn,u1..um,xn1..xnn,p11..pnp`, one transition per row.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> CliResult<()> {
    let Some(first) = dataset.transitions.first() else {
        return write_file(path, "\n");
    };
    let (n, m, p) = (first.x.len(), first.u.len(), first.params.p());
    let mut out = String::new();
    for i in 1..=n {
        let _ = write!(out, "{}x{i}", if i == 1 { "" } else { "," });
    }
    for i in 1..=m {
        let _ = write!(out, ",u{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",xn{i}");
    }
    for row in 1..=n {
        for col in 1..=p {
            let _ = write!(out, ",p{row}{col}");
        }
    }
    out.push('\n');
    for t in &dataset.transitions {
        let cells: Vec<String> = t
            .x
            .iter()
            .chain(t.u.iter())
            .chain(t.x_next.iter())
            .copied()
            .chain(t.params.rows_stacked().iter().copied())
            .map(fmt_f64)
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn read_dataset(path: &Path, family: BasisFamily) -> CliResult<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Io(format!("{}: empty file", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    let n = columns.iter().take_while(|c| {
        c.starts_with('x') && !c.starts_with("xn")
    }).count();
    let m = columns.iter().skip(n).take_while(|c| c.starts_with('u')).count();
    let n_next = columns
        .iter()
        .skip(n + m)
        .take_while(|c| c.starts_with("xn"))
        .count();
    let p_cols = columns.len() - 2 * n - m;
    if n == 0 || m == 0 || n_next != n || p_cols % n != 0 {
        return Err(CliError::Io(format!(
            "{}: malformed dataset header",
            path.display()
        )));
    }
    let p = p_cols / n;
    if p != family.dim() {
        return Err(CliError::Io(format!(
            "{}: dataset basis dimension {p} does not match the configured family ({})",
            path.display(),
            family.dim()
        )));
    }

    let mut transitions = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells = line
            .split(',')
            .map(|c| parse_cell(c, path))
            .collect::<CliResult<Vec<f64>>>()?;
        if cells.len() != columns.len() {
            return Err(CliError::Io(format!(
                "{}: row has {} cells, expected {}",
                path.display(),
                cells.len(),
                columns.len()
            )));
        }
        let x = DVector::from_column_slice(&cells[0..n]);
        let u = DVector::from_column_slice(&cells[n..n + m]);
        let x_next = DVector::from_column_slice(&cells[n + m..2 * n + m]);
        let stacked = DVector::from_column_slice(&cells[2 * n + m..]);
        let params = ParamMatrix::from_stacked_rows(&stacked, n, family)?;
        transitions.push(Transition { x, u, x_next, params });
    }
    Ok(Dataset { transitions })
}

/// `k,x1,...,xn,u,r1,cost` (`u1..um` for multi-input plants).
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let Some(first) = traj.steps.first() else {
        return write_file(path, "\n");
    };
    let (n, m) = (first.x.len(), first.u.len());
    let mut out = String::from("k");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    if m == 1 {
        out.push_str(",u");
    } else {
        for i in 1..=m {
            let _ = write!(out, ",u{i}");
        }
    }
    out.push_str(",r1,cost\n");
    for s in &traj.steps {
        let _ = write!(out, "{}", s.step);
        for v in s.x.iter() {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        for v in s.u.iter() {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        let _ = write!(out, ",{},{}\n", fmt_f64(s.r[0]), fmt_f64(s.cost));
    }
    write_file(path, &out)
}

/// Long-format matrix dump: `matrix,row,col,value`.
pub struct MatrixDump {
    out: String,
}

impl MatrixDump {
    pub fn new() -> Self {
        MatrixDump {
            out: String::from("matrix,row,col,value\n"),
        }
    }

    pub fn push(&mut self, name: &str, m: &DMatrix<f64>) {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let _ = write!(self.out, "{name},{i},{j},{}\n", fmt_f64(m[(i, j)]));
            }
        }
    }

    /// Complex values as two columns (0 = real, 1 = imaginary).
    pub fn push_complex(&mut self, name: &str, values: &[Complex<f64>]) {
        for (i, v) in values.iter().enumerate() {
            let _ = write!(self.out, "{name},{i},0,{}\n", fmt_f64(v.re));
            let _ = write!(self.out, "{name},{i},1,{}\n", fmt_f64(v.im));
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_file(path, &self.out)
    }
}

impl Default for MatrixDump {
    fn default() -> Self {
        Self::new()
    }
}

/// Packed weight vector, one value per row under a `w` header.
pub fn write_weights(path: &Path, w: &DVector<f64>) -> CliResult<()> {
    let mut out = String::from("w\n");
    for v in w.iter() {
        let _ = write!(out, "{}\n", fmt_f64(*v));
    }
    write_file(path, &out)
}

/// Dense matrix with generated column headers `c1..cs`.
pub fn write_matrix_dense(path: &Path, m: &DMatrix<f64>) -> CliResult<()> {
    let mut out = String::new();
    for j in 1..=m.ncols() {
        let _ = write!(out, "{}c{j}", if j == 1 { "" } else { "," });
    }
    out.push('\n');
    for i in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Gain rows under `l1..lk` headers.
pub fn write_gain(path: &Path, gain: &DMatrix<f64>) -> CliResult<()> {
    let mut out = String::new();
    for j in 1..=gain.ncols() {
        let _ = write!(out, "{}l{j}", if j == 1 { "" } else { "," });
    }
    out.push('\n');
    for i in 0..gain.nrows() {
        let cells: Vec<String> = (0..gain.ncols()).map(|j| fmt_f64(gain[(i, j)])).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn read_gain(path: &Path) -> CliResult<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Io(format!("{}: empty file", path.display())))?;
    let cols = header.split(',').count();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells = line
            .split(',')
            .map(|c| parse_cell(c, path))
            .collect::<CliResult<Vec<f64>>>()?;
        if cells.len() != cols {
            return Err(CliError::Io(format!(
                "{}: inconsistent row width",
                path.display()
            )));
        }
        rows.push(cells);
    }
    if rows.is_empty() {
        return Err(CliError::Io(format!("{}: no gain rows", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// `iter,delta_w`
pub fn write_trace(path: &Path, trace: &[f64]) -> CliResult<()> {
    let mut out = String::from("iter,delta_w\n");
    for (i, d) in trace.iter().enumerate() {
        let _ = write!(out, "{},{}\n", i + 1, fmt_f64(*d));
    }
    write_file(path, &out)
}
