//! The embeddings CSV: header `id,label,f0,...,f{D-1}`, one row per instance.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{ClassRegistry, Dataset, Instance};

fn load_err(line: u64, message: impl Into<String>) -> Error {
    Error::Load {
        line,
        message: message.into(),
    }
}

pub fn load_embeddings(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_embeddings(file)
}

/// Parses embeddings from any reader. Lines starting with `#` are ignored.
pub fn read_embeddings<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| csv_err(&e))?,
        None => return Err(load_err(1, "missing header")),
    };
    let header_line = line_of(&header);
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(load_err(header_line, "header must start with id,label,f0"));
    }
    let dim = header.len() - 2;
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(load_err(header_line, format!("expected column f{j}, found {name:?}")));
        }
    }

    let mut classes = ClassRegistry::default();
    let mut seen = HashSet::new();
    let mut instances = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_err(&e))?;
        let line = line_of(&rec);
        if rec.len() != dim + 2 {
            return Err(load_err(line, format!("ragged row: expected {} fields, found {}", dim + 2, rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(load_err(line, "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(load_err(line, format!("duplicate id {id:?}")));
        }
        let label = match rec[1].trim() {
            "" => None,
            name => Some(classes.intern(name)),
        };
        let mut features = Vec::with_capacity(dim);
        for (j, field) in rec.iter().skip(2).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| load_err(line, format!("f{j}: not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(load_err(line, format!("f{j}: non-finite value {field:?}")));
            }
            features.push(v);
        }
        instances.push(Instance::new(id, features, label));
    }
    if instances.is_empty() {
        return Err(load_err(header_line, "no data rows"));
    }
    Dataset::new(instances, classes)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn csv_err(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    load_err(line, e.to_string())
}

pub fn write_embeddings(path: &Path, dataset: &Dataset, comments: &[String]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    write_embeddings_to(&mut w, dataset, comments)?;
    w.flush()?;
    Ok(())
}

/// Writes features with 17 significant digits so reading back is lossless.
pub fn write_embeddings_to<W: Write>(w: &mut W, dataset: &Dataset, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut header = String::from("id,label");
    for j in 0..dataset.dim() {
        header.push_str(&format!(",f{j}"));
    }
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for inst in &dataset.instances {
        line.clear();
        line.push_str(&inst.id);
        line.push(',');
        if let Some(y) = inst.label {
            line.push_str(dataset.classes.name(y).unwrap_or_default());
        }
        for v in &inst.features {
            line.push_str(&format!(",{v:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
