//! Plain-text exports. Every file starts with `# `-prefixed header lines
//! carrying the resolved configuration; JSON files carry them under
//! `"header"`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::bath::KernelTable;
use crate::error::{Error, Result};
use crate::green::GreenTable;
use crate::moments::MomentSeries;

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn write_header(f: &mut impl Write, header: &[String]) -> Result<()> {
    for h in header {
        writeln!(f, "# {h}")?;
    }
    Ok(())
}

/// Two columns `t,<name>`.
pub fn write_kernel_csv(path: &Path, table: &KernelTable, name: &str, header: &[String]) -> Result<()> {
    let mut f = create(path)?;
    write_header(&mut f, header)?;
    writeln!(f, "t,{name}")?;
    for (i, v) in table.values.iter().enumerate() {
        writeln!(f, "{:.12e},{:.12e}", table.grid.t(i), v)?;
    }
    f.flush()?;
    Ok(())
}

/// `t,G,Gdot,Gddot` on every `stride`-th grid point, with an optional
/// extra column aligned with the written rows.
pub fn write_green_csv(
    path: &Path,
    table: &GreenTable,
    stride: usize,
    extra: Option<(&str, &[f64])>,
    header: &[String],
) -> Result<()> {
    let rows: Vec<usize> = green_rows(table, stride);
    if let Some((_, col)) = extra {
        if col.len() != rows.len() {
            return Err(Error::Config(format!(
                "extra column has {} entries for {} rows",
                col.len(),
                rows.len()
            )));
        }
    }
    let mut f = create(path)?;
    write_header(&mut f, header)?;
    match extra {
        Some((name, _)) => writeln!(f, "t,G,Gdot,Gddot,{name}")?,
        None => writeln!(f, "t,G,Gdot,Gddot")?,
    }
    for (k, &i) in rows.iter().enumerate() {
        write!(
            f,
            "{:.12e},{:.12e},{:.12e},{:.12e}",
            table.grid.t(i),
            table.g[i],
            table.g_dot[i],
            table.g_ddot[i]
        )?;
        if let Some((_, col)) = extra {
            write!(f, ",{:.12e}", col[k])?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

/// Grid indices written by [`write_green_csv`]; the last point is always
/// included.
pub fn green_rows(table: &GreenTable, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let last = table.grid.n_steps;
    let mut rows: Vec<usize> = (0..=last).step_by(stride).collect();
    if rows.last() != Some(&last) {
        rows.push(last);
    }
    rows
}

/// `t,A,B,C`.
pub fn write_moments_csv(path: &Path, series: &MomentSeries, header: &[String]) -> Result<()> {
    let mut f = create(path)?;
    write_header(&mut f, header)?;
    writeln!(f, "t,A,B,C")?;
    for i in 0..series.len() {
        writeln!(
            f,
            "{:.12e},{:.12e},{:.12e},{:.12e}",
            series.t[i], series.a[i], series.b[i], series.c[i]
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Pretty-printed JSON object: `{"header": [...], <fields of value>}`.
/// Non-object values land under `"data"`.
pub fn write_json<T: Serialize>(path: &Path, value: &T, header: &[String]) -> Result<()> {
    let body = serde_json::to_value(value).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = serde_json::Map::new();
    out.insert("header".into(), serde_json::json!(header));
    match body {
        serde_json::Value::Object(map) => out.extend(map),
        other => {
            out.insert("data".into(), other);
        }
    }
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, &serde_json::Value::Object(out))
        .map_err(|e| Error::Io(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::green::solve_green;

    #[test]
    fn green_rows_include_last_point() {
        let spec = BathSpec::strictly_ohmic(1.0, 1.0).unwrap();
        let table = solve_green(&spec, 1.0, 100).unwrap();
        let rows = green_rows(&table, 30);
        assert_eq!(rows, vec![0, 30, 60, 90, 100]);
        assert_eq!(green_rows(&table, 1).len(), 101);
    }

    #[test]
    fn json_carries_header() {
        let dir = std::env::temp_dir().join(format!("qbm-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.json");
        write_json(&path, &serde_json::json!({"a": 1.5}), &["cfg".to_string()]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["header"][0], "cfg");
        assert_eq!(v["a"], 1.5);
        std::fs::remove_dir_all(&dir).ok();
    }
}
