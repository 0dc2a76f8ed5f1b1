//! Labeled tweet datasets in the shared-task TSV layout.
//!
//! Labeled files carry `id<TAB>label<TAB>text` per line, unlabeled files
//! `id<TAB>text`. A leading header line (first field not an integer) is
//! skipped. Text is stored verbatim; normalization is a downstream concern.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One labeled (or unlabeled) text instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub id: u64,
    pub text: String,
    /// 0 = non-ironic, 1 = ironic. None for unlabeled data.
    pub label: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub records: Vec<TweetRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Gold labels, or an error if any record is unlabeled.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.records
            .iter()
            .map(|r| {
                r.label
                    .ok_or_else(|| Error::Invalid(format!("labels required (record id {})", r.id)))
            })
            .collect()
    }
}

/// Reads a TSV dataset. `has_labels` selects the 3-field layout over the
/// 2-field one. Line order is preserved.
pub fn load_dataset(path: &Path, has_labels: bool) -> Result<Dataset> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut first_data_line = true;

    for (lineno, line) in raw.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        // Header: first line whose first field is not an integer.
        if first_data_line && fields[0].trim().parse::<u64>().is_err() {
            first_data_line = false;
            continue;
        }
        first_data_line = false;

        let expected = if has_labels { 3 } else { 2 };
        if fields.len() != expected {
            return Err(Error::Dataset {
                line: lineno,
                reason: format!(
                    "expected {expected} tab-separated fields, got {}",
                    fields.len()
                ),
            });
        }
        let id: u64 = fields[0].trim().parse().map_err(|_| Error::Dataset {
            line: lineno,
            reason: format!("non-integer id `{}`", fields[0]),
        })?;
        if !seen_ids.insert(id) {
            return Err(Error::Dataset {
                line: lineno,
                reason: format!("duplicate id {id}"),
            });
        }
        let (label, text) = if has_labels {
            let label = match fields[1].trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::Dataset {
                        line: lineno,
                        reason: format!("label not in {{0,1}}: `{other}`"),
                    })
                }
            };
            (Some(label), fields[2])
        } else {
            (None, fields[1])
        };
        if text.trim().is_empty() {
            return Err(Error::Dataset {
                line: lineno,
                reason: "empty text".into(),
            });
        }
        records.push(TweetRecord {
            id,
            text: text.to_string(),
            label,
        });
    }

    if records.is_empty() && !raw.lines().any(|l| !l.trim().is_empty()) {
        return Err(Error::Invalid(format!(
            "empty dataset file {}",
            path.display()
        )));
    }
    Ok(Dataset { name, records })
}

/// Writes `id<TAB>label` lines in dataset order, LF endings.
pub fn write_predictions(dataset: &Dataset, labels: &[u8], path: &Path) -> Result<()> {
    if labels.len() != dataset.records.len() {
        return Err(Error::Invalid(format!(
            "{} labels for {} records",
            labels.len(),
            dataset.records.len()
        )));
    }
    let mut out = Vec::new();
    for (record, label) in dataset.records.iter().zip(labels) {
        writeln!(out, "{}\t{}", record.id, label).expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_labeled_lines() {
        let f = tmp("4\t1\tLove waking up to a flooded basement\n7\t0\tgood morning everyone\n");
        let ds = load_dataset(f.path(), true).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(
            ds.records[0],
            TweetRecord {
                id: 4,
                text: "Love waking up to a flooded basement".into(),
                label: Some(1)
            }
        );
        assert_eq!(ds.records[1].label, Some(0));
    }

    #[test]
    fn skips_header_line() {
        let f = tmp("Tweet index\tLabel\tTweet text\n1\t0\thello\n");
        let ds = load_dataset(f.path(), true).unwrap();
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.records[0].id, 1);
    }

    #[test]
    fn rejects_bad_label() {
        let f = tmp("9\t2\tx\n");
        let err = load_dataset(f.path(), true).unwrap_err();
        assert!(err.to_string().contains("label not in {0,1}"));
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn rejects_wrong_field_count_and_bad_id() {
        let f = tmp("1\tonly two fields\n");
        assert!(load_dataset(f.path(), true).is_err());
        let f = tmp("abc\t1\ttext\nxyz\t0\tmore\n");
        // first line is taken as header, second must then parse
        assert!(load_dataset(f.path(), true).is_err());
    }

    #[test]
    fn rejects_empty_file_and_duplicate_ids() {
        let f = tmp("");
        assert!(load_dataset(f.path(), true).is_err());
        let f = tmp("1\t0\ta\n1\t1\tb\n");
        assert!(load_dataset(f.path(), true).is_err());
    }

    #[test]
    fn loads_unlabeled() {
        let f = tmp("3\tsome tweet\n");
        let ds = load_dataset(f.path(), false).unwrap();
        assert_eq!(ds.records[0].label, None);
        assert!(ds.labels().is_err());
    }

    #[test]
    fn prediction_round_trip() {
        let f = tmp("4\t1\tfirst\n7\t0\tsecond\n");
        let ds = load_dataset(f.path(), true).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_predictions(&ds, &[1, 0], out.path()).unwrap();
        let written = std::fs::read_to_string(out.path()).unwrap();
        assert_eq!(written, "4\t1\n7\t0\n");
    }

    #[test]
    fn prediction_length_mismatch() {
        let f = tmp("1\t0\ta\n2\t1\tb\n3\t0\tc\n");
        let ds = load_dataset(f.path(), true).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        assert!(write_predictions(&ds, &[1, 0], out.path()).is_err());
    }

    #[test]
    fn empty_dataset_writes_empty_file() {
        let ds = Dataset {
            name: "empty".into(),
            records: vec![],
        };
        let out = tempfile::NamedTempFile::new().unwrap();
        write_predictions(&ds, &[], out.path()).unwrap();
        assert_eq!(std::fs::read_to_string(out.path()).unwrap(), "");
    }

    #[test]
    fn crlf_accepted() {
        let f = tmp("1\t0\thello\r\n2\t1\tworld\r\n");
        let ds = load_dataset(f.path(), true).unwrap();
        assert_eq!(ds.records[1].text, "world");
    }
}
