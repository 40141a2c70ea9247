//! Durable state: an append-only administrative event log plus snapshots,
//! with outbox events committed in the same record as the state change that
//! produced them.
//!
//! `state.log` holds one JSON object per line: `{seq, ts, op, payload,
//! outbox?, crc}`. `seq` is gapless from 1; `crc` is the CRC32 of the record
//! serialized without the crc field. A record either fully commits or is a
//! detectable torn tail, which makes the log-record/outbox-event pairing
//! atomic. Outbox publication state is itself logged (`outbox.ack` records),
//! so replay reconstructs the pending set. Snapshots capture engine state
//! plus outbox bookkeeping at a covered sequence.

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::EngineState;
use crate::error::{EngineError, Result};

pub const LOG_FILE: &str = "state.log";

/// Pseudo-operation carrying a pure outbox emission (e.g. an asynchronous
/// read response); applying it changes no engine state.
pub const OP_OUTBOX_EMIT: &str = "outbox.emit";
/// Pseudo-operation advancing the published watermark.
pub const OP_OUTBOX_ACK: &str = "outbox.ack";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutboxEvent {
    pub oseq: u64,
    pub event_kind: String,
    pub body: Value,
}

/// Public outbox view: an event plus its publication state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutboxRecord {
    pub sequence: u64,
    pub event_kind: String,
    pub body: Value,
    pub published: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub ts: u64,
    pub op: String,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outbox: Option<OutboxEvent>,
    pub crc: u32,
}

#[derive(Serialize)]
struct RecordBody<'a> {
    seq: u64,
    ts: u64,
    op: &'a str,
    payload: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    outbox: &'a Option<OutboxEvent>,
}

fn record_crc(seq: u64, ts: u64, op: &str, payload: &Value, outbox: &Option<OutboxEvent>) -> u32 {
    let body = RecordBody { seq, ts, op, payload, outbox };
    crc32fast::hash(serde_json::to_string(&body).expect("record serializes").as_bytes())
}

impl LogRecord {
    fn checksum_ok(&self) -> bool {
        record_crc(self.seq, self.ts, &self.op, &self.payload, &self.outbox) == self.crc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairMode {
    /// A torn or corrupt tail is an error.
    Strict,
    /// Truncate the log back to the last valid record and continue.
    TruncateTail,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub covers_seq: u64,
    pub next_oseq: u64,
    pub acked_through: u64,
    pub pending: Vec<OutboxEvent>,
    pub state: EngineState,
}

/// An op record to re-apply during startup.
#[derive(Debug, Clone)]
pub struct ReplayOp {
    pub seq: u64,
    pub op: String,
    pub payload: Value,
}

/// Everything `open` recovered: the writable store, the snapshot state (if
/// any) and the op records after it.
#[derive(Debug)]
pub struct Recovered {
    pub store: LogStore,
    pub snapshot: Option<EngineState>,
    pub replay: Vec<ReplayOp>,
}

#[derive(Debug)]
pub struct LogStore {
    dir: PathBuf,
    file: File,
    fsync: bool,
    next_seq: u64,
    next_oseq: u64,
    acked_through: u64,
    pending: VecDeque<OutboxEvent>,
}

fn map_io(e: std::io::Error) -> EngineError {
    if e.kind() == std::io::ErrorKind::StorageFull || e.raw_os_error() == Some(28) {
        EngineError::StorageFull(e.to_string())
    } else {
        EngineError::Io(e)
    }
}

impl LogStore {
    pub fn log_path(dir: &Path) -> PathBuf {
        dir.join(LOG_FILE)
    }

    /// Opens (creating if needed) the log in `dir`, validating checksums and
    /// sequence continuity, and folds outbox bookkeeping. The newest valid
    /// snapshot, when present, short-circuits replay of older records.
    pub fn open(dir: &Path, fsync: bool, repair: RepairMode) -> Result<Recovered> {
        std::fs::create_dir_all(dir).map_err(map_io)?;
        let log_path = Self::log_path(dir);

        let snapshot = Self::latest_snapshot(dir)?;
        let (snap_covers, mut next_oseq, mut acked_through, mut pending, snap_state) =
            match snapshot {
                Some(s) => (s.covers_seq, s.next_oseq, s.acked_through, VecDeque::from(s.pending), Some(s.state)),
                None => (0, 1, 0, VecDeque::new(), None),
            };

        let mut replay = Vec::new();
        let mut last_valid_seq = 0u64;
        let mut valid_bytes = 0u64;
        let mut corrupt: Option<String> = None;

        if log_path.exists() {
            let file = File::open(&log_path).map_err(map_io)?;
            let mut reader = BufReader::new(file);
            let mut line = String::new();
            loop {
                line.clear();
                let n = reader.read_line(&mut line).map_err(map_io)?;
                if n == 0 {
                    break;
                }
                if line.trim().is_empty() {
                    // tolerate a trailing blank line only at EOF
                    valid_bytes += n as u64;
                    continue;
                }
                let record: LogRecord = match serde_json::from_str(line.trim_end()) {
                    Ok(r) => r,
                    Err(e) => {
                        corrupt = Some(format!("unparseable record: {e}"));
                        break;
                    }
                };
                if !record.checksum_ok() {
                    corrupt = Some(format!("checksum mismatch at sequence {}", record.seq));
                    break;
                }
                if record.seq != last_valid_seq + 1 {
                    corrupt = Some(format!(
                        "sequence gap: expected {}, found {}",
                        last_valid_seq + 1,
                        record.seq
                    ));
                    break;
                }
                last_valid_seq = record.seq;
                valid_bytes += n as u64;

                if let Some(event) = &record.outbox {
                    next_oseq = next_oseq.max(event.oseq + 1);
                    if record.seq > snap_covers && event.oseq > acked_through {
                        pending.push_back(event.clone());
                    }
                }
                match record.op.as_str() {
                    OP_OUTBOX_ACK => {
                        let through = record
                            .payload
                            .get("through")
                            .and_then(Value::as_u64)
                            .unwrap_or(0);
                        if through > acked_through {
                            acked_through = through;
                            pending.retain(|e| e.oseq > acked_through);
                        }
                    }
                    OP_OUTBOX_EMIT => {}
                    _ => {
                        if record.seq > snap_covers {
                            replay.push(ReplayOp {
                                seq: record.seq,
                                op: record.op.clone(),
                                payload: record.payload.clone(),
                            });
                        }
                    }
                }
            }
        }

        if let Some(reason) = corrupt {
            match repair {
                RepairMode::Strict => {
                    return Err(EngineError::CorruptLog { last_valid: last_valid_seq, reason })
                }
                RepairMode::TruncateTail => {
                    let f = OpenOptions::new().write(true).open(&log_path).map_err(map_io)?;
                    f.set_len(valid_bytes).map_err(map_io)?;
                    f.sync_data().map_err(map_io)?;
                }
            }
        }

        if snap_covers > last_valid_seq {
            return Err(EngineError::SnapshotLogMismatch {
                snapshot: snap_covers,
                log_tail: last_valid_seq,
            });
        }

        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(map_io)?;
        file.seek(SeekFrom::End(0)).map_err(map_io)?;

        Ok(Recovered {
            store: LogStore {
                dir: dir.to_path_buf(),
                file,
                fsync,
                next_seq: last_valid_seq + 1,
                next_oseq,
                acked_through,
                pending,
            },
            snapshot: snap_state,
            replay,
        })
    }

    fn latest_snapshot(dir: &Path) -> Result<Option<Snapshot>> {
        let mut best: Option<(u64, PathBuf)> = None;
        for entry in std::fs::read_dir(dir).map_err(map_io)? {
            let entry = entry.map_err(map_io)?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if let Some(seq) = name
                .strip_prefix("snapshot-")
                .and_then(|s| s.strip_suffix(".json"))
                .and_then(|s| s.parse::<u64>().ok())
            {
                if best.as_ref().is_none_or(|(b, _)| seq > *b) {
                    best = Some((seq, entry.path()));
                }
            }
        }
        let Some((_, path)) = best else {
            return Ok(None);
        };
        let mut text = String::new();
        File::open(&path).map_err(map_io)?.read_to_string(&mut text).map_err(map_io)?;
        let snap: Snapshot = serde_json::from_str(&text).map_err(|e| EngineError::CorruptLog {
            last_valid: 0,
            reason: format!("snapshot {}: {e}", path.display()),
        })?;
        Ok(Some(snap))
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn tail_seq(&self) -> u64 {
        self.next_seq - 1
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn acked_through(&self) -> u64 {
        self.acked_through
    }

    /// Appends one record; the state change and its outbox event commit in
    /// the same write unit. Returns the record's sequence.
    pub fn append(
        &mut self,
        op: &str,
        payload: Value,
        outbox: Option<(String, Value)>,
    ) -> Result<u64> {
        let seq = self.next_seq;
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let outbox = outbox.map(|(event_kind, body)| {
            let event = OutboxEvent { oseq: self.next_oseq, event_kind, body };
            self.next_oseq += 1;
            event
        });
        let crc = record_crc(seq, ts, op, &payload, &outbox);
        let record = LogRecord { seq, ts, op: op.to_string(), payload, outbox, crc };
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(map_io)?;
        if self.fsync {
            self.file.sync_data().map_err(map_io)?;
        }
        self.next_seq += 1;
        if let Some(event) = record.outbox {
            self.pending.push_back(event);
        }
        Ok(seq)
    }

    /// Unpublished outbox events in sequence order, up to `batch`.
    pub fn unpublished(&self, batch: usize) -> Vec<OutboxRecord> {
        self.pending
            .iter()
            .take(batch)
            .map(|e| OutboxRecord {
                sequence: e.oseq,
                event_kind: e.event_kind.clone(),
                body: e.body.clone(),
                published: false,
            })
            .collect()
    }

    /// Marks events published through `oseq` (inclusive) by logging an ack
    /// record.
    pub fn mark_published(&mut self, through: u64) -> Result<()> {
        if through <= self.acked_through {
            return Ok(());
        }
        self.append(OP_OUTBOX_ACK, serde_json::json!({ "through": through }), None)?;
        self.acked_through = through;
        self.pending.retain(|e| e.oseq > self.acked_through);
        Ok(())
    }

    /// Writes `snapshot-<seq>.json` covering the current log tail.
    pub fn write_snapshot(&self, state: EngineState) -> Result<(u64, PathBuf)> {
        let covers_seq = self.tail_seq();
        let snapshot = Snapshot {
            covers_seq,
            next_oseq: self.next_oseq,
            acked_through: self.acked_through,
            pending: self.pending.iter().cloned().collect(),
            state,
        };
        let path = self.dir.join(format!("snapshot-{covers_seq}.json"));
        let tmp = self.dir.join(format!(".snapshot-{covers_seq}.tmp"));
        let mut f = File::create(&tmp).map_err(map_io)?;
        f.write_all(serde_json::to_string(&snapshot).expect("snapshot serializes").as_bytes())
            .map_err(map_io)?;
        f.sync_data().map_err(map_io)?;
        std::fs::rename(&tmp, &path).map_err(map_io)?;
        Ok((covers_seq, path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn open(dir: &Path) -> Recovered {
        LogStore::open(dir, false, RepairMode::Strict).unwrap()
    }

    #[test]
    fn sequences_are_gapless_and_monotone() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = open(dir.path());
        assert_eq!(r.store.append("a.b", json!({"x": 1}), None).unwrap(), 1);
        assert_eq!(r.store.append("a.c", json!({}), None).unwrap(), 2);
        drop(r);

        let r = open(dir.path());
        assert_eq!(r.store.next_seq(), 3);
        assert_eq!(r.replay.len(), 2);
        assert_eq!(r.replay[0].op, "a.b");
    }

    #[test]
    fn empty_log_recovers_empty() {
        let dir = tempfile::tempdir().unwrap();
        let r = open(dir.path());
        assert_eq!(r.store.tail_seq(), 0);
        assert!(r.snapshot.is_none());
        assert!(r.replay.is_empty());
    }

    #[test]
    fn truncated_tail_reports_corrupt_log() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = open(dir.path());
        r.store.append("a.b", json!({"x": 1}), None).unwrap();
        r.store.append("a.c", json!({"y": 2}), None).unwrap();
        drop(r);

        let path = LogStore::log_path(dir.path());
        let len = std::fs::metadata(&path).unwrap().len();
        let f = OpenOptions::new().write(true).open(&path).unwrap();
        f.set_len(len - 7).unwrap();

        let err = LogStore::open(dir.path(), false, RepairMode::Strict).unwrap_err();
        match err {
            EngineError::CorruptLog { last_valid, .. } => assert_eq!(last_valid, 1),
            other => panic!("expected CorruptLog, got {other:?}"),
        }

        // repair mode drops the torn record and keeps going
        let mut r = LogStore::open(dir.path(), false, RepairMode::TruncateTail).unwrap();
        assert_eq!(r.store.tail_seq(), 1);
        assert_eq!(r.store.append("a.d", json!({}), None).unwrap(), 2);
        drop(r);
        let r = open(dir.path());
        assert_eq!(r.replay.len(), 2);
    }

    #[test]
    fn bitflip_reports_checksum_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = open(dir.path());
        r.store.append("a.b", json!({"x": "hello"}), None).unwrap();
        drop(r);

        let path = LogStore::log_path(dir.path());
        let text = std::fs::read_to_string(&path).unwrap().replace("hello", "jello");
        std::fs::write(&path, text).unwrap();

        let err = LogStore::open(dir.path(), false, RepairMode::Strict).unwrap_err();
        assert_eq!(err.code(), "CorruptLog");
    }

    #[test]
    fn outbox_events_ride_their_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = open(dir.path());
        for i in 0..3 {
            r.store
                .append(
                    "res.create",
                    json!({"id": i}),
                    Some(("res.create".into(), json!({"id": i}))),
                )
                .unwrap();
        }
        let got = r.store.unpublished(10);
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].sequence, 1);
        assert!(got.iter().all(|e| !e.published));

        r.store.mark_published(2).unwrap();
        let got = r.store.unpublished(10);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].sequence, 3);
        drop(r);

        // publication state survives restart
        let r = open(dir.path());
        assert_eq!(r.store.pending_count(), 1);
        assert_eq!(r.store.acked_through(), 2);
    }

    #[test]
    fn snapshot_covers_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = open(dir.path());
        r.store.append("a.b", json!({"n": 1}), None).unwrap();
        r.store.append("a.b", json!({"n": 2}), None).unwrap();
        let state = crate::engine::Engine::new(Default::default()).state();
        r.store.write_snapshot(state).unwrap();
        r.store.append("a.b", json!({"n": 3}), None).unwrap();
        drop(r);

        let r = open(dir.path());
        assert!(r.snapshot.is_some());
        // only the suffix after the snapshot replays
        assert_eq!(r.replay.len(), 1);
        assert_eq!(r.replay[0].payload, json!({"n": 3}));
    }

    #[test]
    fn snapshot_beyond_log_tail_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = open(dir.path());
        r.store.append("a.b", json!({}), None).unwrap();
        let state = crate::engine::Engine::new(Default::default()).state();
        r.store.write_snapshot(state).unwrap();
        drop(r);

        // wipe the log but keep the snapshot
        std::fs::write(LogStore::log_path(dir.path()), "").unwrap();
        let err = LogStore::open(dir.path(), false, RepairMode::Strict).unwrap_err();
        assert_eq!(err.code(), "SnapshotLogMismatch");
    }
}
