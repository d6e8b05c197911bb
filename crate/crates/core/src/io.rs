//! Flat-file output: numeric CSV with a `# key = value` preamble, JSON reports,
//! and mesh files chosen by extension.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::mesh::Mesh;
use crate::verify::VerificationReport;

/// A numeric table written as CSV with full double precision.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    /// Written as `# key = value` lines above the header row.
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Index of a column by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            wr.write_record(row.iter().map(|x| format_f64(*x)))
                .expect("in-memory write");
        }
        out.push_str(
            &String::from_utf8(wr.into_inner().expect("in-memory flush"))
                .expect("csv output is utf-8"),
        );
        out
    }

    /// Parse text produced by [`Self::to_csv_string`].
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut metadata = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(m) => {
                    let (k, v) = m
                        .split_once(" = ")
                        .ok_or_else(|| format!("bad metadata line '{line}'"))?;
                    metadata.push((k.to_string(), v.to_string()));
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let columns = rd
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            rows.push(
                rec.iter()
                    .map(|s| s.parse::<f64>().map_err(|e| format!("'{s}': {e}")))
                    .collect::<Result<_, _>>()?,
            );
        }
        Ok(CsvTable {
            metadata,
            columns,
            rows,
        })
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// 17 significant digits, so values round-trip exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn report_json(report: &VerificationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Mesh format chosen from the file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, Error> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::Ply),
            _ => Err(Error::Config(format!(
                "mesh output {} must end in .obj or .ply",
                path.display()
            ))),
        }
    }
}

/// Write a mesh; OBJ output gets a `.csv` sidecar with the vertex channels.
/// Returns every path written.
pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<Vec<PathBuf>, Error> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut buf = Vec::new();
    match MeshFormat::from_path(path)? {
        MeshFormat::Ply => {
            mesh.write_ply(&mut buf).map_err(io_err)?;
            write_text(path, &String::from_utf8(buf).expect("ply output is utf-8"))?;
            Ok(vec![path.to_path_buf()])
        }
        MeshFormat::Obj => {
            mesh.write_obj(&mut buf).map_err(io_err)?;
            write_text(path, &String::from_utf8(buf).expect("obj output is utf-8"))?;
            let sidecar = path.with_extension("csv");
            let mut side = Vec::new();
            mesh.write_channels_csv(&mut side)
                .map_err(|source| Error::Io {
                    path: sidecar.clone(),
                    source,
                })?;
            write_text(
                &sidecar,
                &String::from_utf8(side).expect("csv output is utf-8"),
            )?;
            Ok(vec![path.to_path_buf(), sidecar])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = CsvTable::new(&["u", "k"]).meta("C", format_f64(169.0 / 9.0));
        t.push(vec![0.1, 1.0 / 3.0]);
        t.push(vec![-2.5e-300, f64::MAX]);
        let s = t.to_csv_string();
        assert!(s.starts_with("# C = 1.8777777777777779e1\nu,k\n"), "{s}");
        assert_eq!(CsvTable::parse(&s).unwrap(), t);
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = format_f64(0.1);
        let mantissa = s.split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
    }

    #[test]
    fn mesh_format_by_extension() {
        assert_eq!(
            MeshFormat::from_path(Path::new("a/b.OBJ")).unwrap(),
            MeshFormat::Obj
        );
        assert_eq!(
            MeshFormat::from_path(Path::new("b.ply")).unwrap(),
            MeshFormat::Ply
        );
        assert!(MeshFormat::from_path(Path::new("b.stl")).is_err());
    }
}
