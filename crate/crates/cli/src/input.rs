//! Corpus directories and response files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use crate::DataError;

/// A document read from `<doc_id>.txt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub doc_id: String,
    pub path: PathBuf,
    pub text: String,
}

/// Reads every `*.txt` file in `dir`, ordered by doc_id.
pub fn read_corpus(dir: &Path) -> Result<Vec<RawDocument>> {
    let entries = std::fs::read_dir(dir).map_err(|e| DataError(format!("cannot read corpus directory {}: {e}", dir.display())))?;
    let mut docs = Vec::new();
    for entry in entries {
        let path = entry.with_context(|| format!("listing {}", dir.display()))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") || !path.is_file() {
            continue;
        }
        let doc_id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| DataError(format!("{}: file name is not valid UTF-8", path.display())))?
            .to_owned();
        let bytes = std::fs::read(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let text = String::from_utf8(bytes)
            .map_err(|e| DataError(format!("{}: not valid UTF-8 ({e})", path.display())))?;
        docs.push(RawDocument { doc_id, path, text });
    }
    if docs.is_empty() {
        bail!(DataError(format!("corpus directory {} contains no .txt files", dir.display())));
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(docs)
}

/// Reads a two-column CSV whose header starts with `doc_id`.
pub fn read_responses(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.split(',').count() == 2 && h.split(',').next().map(str::trim) == Some("doc_id") => {}
        Some((_, h)) => bail!(DataError(format!("{}:1: expected header \"doc_id,value\", found {h:?}", path.display()))),
        None => bail!(DataError(format!("{}: empty response file", path.display()))),
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, value) = line
            .split_once(',')
            .ok_or_else(|| DataError(format!("{}:{line_no}: expected \"doc_id,value\"", path.display())))?;
        let value: f64 = value.trim().parse().map_err(|_| {
            DataError(format!("{}:{line_no}: field \"value\": invalid number {:?}", path.display(), value.trim()))
        })?;
        if !value.is_finite() {
            bail!(DataError(format!("{}:{line_no}: field \"value\": must be finite", path.display())));
        }
        if out.insert(id.trim().to_owned(), value).is_some() {
            bail!(DataError(format!("{}:{line_no}: duplicate doc_id {:?}", path.display(), id.trim())));
        }
    }
    Ok(out)
}

/// Responses in corpus order; every document must have one.
pub fn align_responses(docs: &[RawDocument], responses: &BTreeMap<String, f64>, source: &Path) -> Result<Vec<f64>> {
    let missing: Vec<&str> = docs
        .iter()
        .filter(|d| !responses.contains_key(&d.doc_id))
        .map(|d| d.doc_id.as_str())
        .collect();
    if !missing.is_empty() {
        const SHOWN: usize = 20;
        let mut list = missing.iter().take(SHOWN).copied().collect::<Vec<_>>().join(", ");
        if missing.len() > SHOWN {
            list.push_str(&format!(", ... ({} more)", missing.len() - SHOWN));
        }
        return Err(anyhow!(DataError(format!(
            "{}: no response for {} document(s): {list}",
            source.display(),
            missing.len()
        ))));
    }
    let ids: BTreeSet<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    let extra = responses.keys().filter(|k| !ids.contains(k.as_str())).count();
    if extra > 0 {
        log::warn!("{}: {extra} response(s) have no matching document and are ignored", source.display());
    }
    Ok(docs.iter().map(|d| responses[&d.doc_id]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn responses_and_alignment() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "doc_id,value\na,1.5\nb,-2\n").unwrap();
        let r = read_responses(&p).unwrap();
        let docs: Vec<RawDocument> = ["a", "b", "c"]
            .iter()
            .map(|id| RawDocument {
                doc_id: id.to_string(),
                path: PathBuf::new(),
                text: String::new(),
            })
            .collect();
        let err = align_responses(&docs, &r, &p).unwrap_err().to_string();
        assert!(err.contains(": c"), "{err}");
        assert_eq!(align_responses(&docs[..2], &r, &p).unwrap(), [1.5, -2.0]);
    }

    #[test]
    fn bad_number_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "doc_id,abnormal_return\na,1\nb,x\n").unwrap();
        let err = read_responses(&p).unwrap_err().to_string();
        assert!(err.contains("r.csv:3"), "{err}");
    }

    #[test]
    fn corpus_rules() {
        let dir = tempfile::tempdir().unwrap();
        assert!(read_corpus(dir.path()).is_err());
        std::fs::write(dir.path().join("b.txt"), "two").unwrap();
        std::fs::write(dir.path().join("a.txt"), "one").unwrap();
        std::fs::write(dir.path().join("notes.md"), "skip").unwrap();
        let docs = read_corpus(dir.path()).unwrap();
        assert_eq!(docs.iter().map(|d| d.doc_id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        std::fs::write(dir.path().join("c.txt"), [0xff, 0xfe, 0x00]).unwrap();
        assert!(read_corpus(dir.path()).unwrap_err().to_string().contains("UTF-8"));
    }
}
