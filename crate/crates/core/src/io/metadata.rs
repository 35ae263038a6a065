//! Subject metadata CSV (first row header, one subject per row).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::SubjectRecord;

/// Header names accepted as the subject-id column, compared
/// case-insensitively.
pub const ID_COLUMNS: [&str; 5] = ["subject_id", "subject id", "subjectid", "subject", "id"];

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("no subject-id column in header (expected one of {ID_COLUMNS:?})")]
    MissingIdColumn,
    #[error("subject id '{0}' appears more than once")]
    DuplicateSubjectId(String),
    #[error("row {row}: empty subject id")]
    EmptySubjectId { row: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Parses metadata rows into subject records with empty cluster indices.
/// The id column itself is not repeated in `metadata`.
pub fn load_metadata_csv(bytes: &[u8]) -> Result<Vec<SubjectRecord>, MetadataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader.headers()?.clone();
    let id_col = ID_COLUMNS
        .iter()
        .find_map(|want| {
            headers
                .iter()
                .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(want))
        })
        .ok_or(MetadataError::MissingIdColumn)?;

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let id = record.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(MetadataError::EmptySubjectId { row: row + 1 });
        }
        if !seen.insert(id.clone()) {
            return Err(MetadataError::DuplicateSubjectId(id));
        }
        let mut subject = SubjectRecord::new(id);
        for (col, (name, value)) in headers.iter().zip(record.iter()).enumerate() {
            if col != id_col {
                subject.metadata.insert(name.to_string(), value.to_string());
            }
        }
        out.push(subject);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_one_row() {
        let subjects = load_metadata_csv(b"id,age,gender\nS1,23,F\n").unwrap();
        assert_eq!(subjects.len(), 1);
        assert_eq!(subjects[0].subject_id, "S1");
        assert_eq!(subjects[0].metadata["age"], "23");
        assert_eq!(subjects[0].metadata["gender"], "F");
        assert_eq!(subjects[0].metadata.len(), 2);
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let err = load_metadata_csv(b"id,age\nS1,23\nS1,24\n").unwrap_err();
        assert!(matches!(err, MetadataError::DuplicateSubjectId(id) if id == "S1"));
    }

    #[test]
    fn header_only_gives_no_records() {
        assert!(load_metadata_csv(b"id,age\n").unwrap().is_empty());
    }

    #[test]
    fn missing_id_column() {
        assert!(matches!(load_metadata_csv(b"name,age\nx,1\n"), Err(MetadataError::MissingIdColumn)));
    }

    #[test]
    fn quoted_cells_and_alternative_id_header() {
        let subjects = load_metadata_csv(b"Subject ID,site\n\"S,2\",\"Boston, MA\"\n").unwrap();
        assert_eq!(subjects[0].subject_id, "S,2");
        assert_eq!(subjects[0].metadata["site"], "Boston, MA");
    }
}
