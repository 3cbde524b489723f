//! Append-only JSONL log of confirmed moments.
//!
//! Each record is written and fsynced before the request returns, so a record
//! acknowledged with 201 survives a restart. A torn final line left by a crash
//! mid-write was never acknowledged and is dropped on open.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: u64,
    pub session_id: String,
    pub query_text: String,
    pub video_id: String,
    pub f_s: u64,
    pub f_e: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_text: Option<String>,
    /// RFC 3339, UTC.
    pub created_at: String,
}

/// Request body of `POST /api/v1/annotations`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewAnnotation {
    pub session_id: String,
    #[serde(default)]
    pub query_text: String,
    pub video_id: String,
    pub f_s: u64,
    pub f_e: u64,
    #[serde(default)]
    pub answer_text: Option<String>,
}

#[derive(Debug)]
pub struct AnnotationLog {
    path: PathBuf,
    file: File,
    records: Vec<AnnotationRecord>,
    last_created: Option<OffsetDateTime>,
}

impl AnnotationLog {
    /// Opens or creates the log at `path` and loads its records.
    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;

        let mut records = Vec::new();
        let mut consumed = 0usize;
        for (n, line) in text.split_inclusive('\n').enumerate() {
            let complete = line.ends_with('\n');
            let body = line.trim();
            if body.is_empty() {
                consumed += line.len();
                continue;
            }
            if !complete {
                break;
            }
            let record = serde_json::from_str::<AnnotationRecord>(body).map_err(|e| {
                io::Error::new(io::ErrorKind::InvalidData, format!("{}: line {}: {e}", path.display(), n + 1))
            })?;
            records.push(record);
            consumed += line.len();
        }
        if consumed < text.len() {
            file.set_len(consumed as u64)?;
            file.sync_data()?;
        }
        let last_created = records
            .last()
            .and_then(|r| OffsetDateTime::parse(&r.created_at, &Rfc3339).ok());
        Ok(Self { path: path.to_path_buf(), file, records, last_created })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends `new` durably and returns the stored record.
    /// Timestamps never go backwards, even if the wall clock does.
    pub fn append(&mut self, new: NewAnnotation) -> io::Result<AnnotationRecord> {
        let mut now = OffsetDateTime::now_utc();
        if let Some(last) = self.last_created {
            now = now.max(last);
        }
        let record = AnnotationRecord {
            id: self.records.last().map_or(1, |r| r.id + 1),
            session_id: new.session_id,
            query_text: new.query_text,
            video_id: new.video_id,
            f_s: new.f_s,
            f_e: new.f_e,
            answer_text: new.answer_text,
            created_at: now.format(&Rfc3339).map_err(io::Error::other)?,
        };
        let mut line = serde_json::to_vec(&record).map_err(io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.last_created = Some(now);
        self.records.push(record.clone());
        Ok(record)
    }

    /// Records in insertion order, optionally restricted to one session.
    pub fn list(&self, session_id: Option<&str>) -> Vec<AnnotationRecord> {
        self.records
            .iter()
            .filter(|r| session_id.is_none_or(|s| r.session_id == s))
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
