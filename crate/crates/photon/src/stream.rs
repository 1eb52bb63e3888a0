//! Two-channel detection timestamps and the `PSTM` binary format.
//!
//! Layout, little-endian: a 16-byte header (`b"PSTM"`, `u32` version,
//! 8 reserved bytes), then 9-byte records of `u64` time in ps and a `u8`
//! channel (0 = plus, 1 = minus). Duration and run metadata live in a JSON
//! sidecar next to the binary file.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{PhotonError, Result};

pub const MAGIC: &[u8; 4] = b"PSTM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;
const RECORD_LEN: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Plus,
    Minus,
}

impl Channel {
    fn code(self) -> u8 {
        match self {
            Channel::Plus => 0,
            Channel::Minus => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub time_ps: u64,
    pub channel: Channel,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamMetadata {
    pub excitation_power_uw: Option<f64>,
    pub hwp_angle_deg: Option<f64>,
}

/// Sidecar contents.
#[derive(Serialize, Deserialize)]
struct Sidecar {
    duration_ps: u64,
    events: usize,
    #[serde(flatten)]
    metadata: StreamMetadata,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimestampStream {
    pub events: Vec<Event>,
    pub duration_ps: u64,
    pub metadata: StreamMetadata,
}

impl TimestampStream {
    /// Sorts the events by time (stable, so equal times keep their order).
    pub fn new(mut events: Vec<Event>, duration_ps: u64, metadata: StreamMetadata) -> Result<Self> {
        events.sort_by_key(|e| e.time_ps);
        if let Some(last) = events.last() {
            if last.time_ps > duration_ps {
                return Err(PhotonError::InvalidParameter(format!(
                    "event at {} ps beyond duration {duration_ps} ps",
                    last.time_ps
                )));
            }
        }
        Ok(Self {
            events,
            duration_ps,
            metadata,
        })
    }

    pub fn times(&self, ch: Channel) -> Vec<u64> {
        self.events.iter().filter(|e| e.channel == ch).map(|e| e.time_ps).collect()
    }

    pub fn count(&self, ch: Channel) -> usize {
        self.events.iter().filter(|e| e.channel == ch).count()
    }

    /// Interleaves two streams on a common clock, e.g. two emitters.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut events = self.events.clone();
        events.extend_from_slice(&other.events);
        Self::new(events, self.duration_ps.max(other.duration_ps), self.metadata.clone())
    }

    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[0u8; 8])?;
        for e in &self.events {
            w.write_all(&e.time_ps.to_le_bytes())?;
            w.write_all(&[e.channel.code()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a binary body; the duration defaults to the last event time.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let parse = |offset: usize, message: &str| PhotonError::Parse {
            offset: offset as u64,
            message: message.into(),
        };
        if bytes.len() < HEADER_LEN {
            return Err(parse(bytes.len(), "truncated header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(parse(0, "bad magic, expected PSTM"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(parse(4, &format!("unsupported version {version}")));
        }
        let body = &bytes[HEADER_LEN..];
        if !body.len().is_multiple_of(RECORD_LEN) {
            let at = HEADER_LEN + body.len() / RECORD_LEN * RECORD_LEN;
            return Err(parse(at, "truncated record"));
        }
        let mut events = Vec::with_capacity(body.len() / RECORD_LEN);
        let mut last = 0;
        for (n, rec) in body.chunks_exact(RECORD_LEN).enumerate() {
            let at = HEADER_LEN + n * RECORD_LEN;
            let time_ps = u64::from_le_bytes(rec[..8].try_into().unwrap());
            let channel = match rec[8] {
                0 => Channel::Plus,
                1 => Channel::Minus,
                c => return Err(parse(at + 8, &format!("unknown channel {c}"))),
            };
            if time_ps < last {
                return Err(parse(at, "timestamps decrease"));
            }
            last = time_ps;
            events.push(Event { time_ps, channel });
        }
        Ok(Self {
            events,
            duration_ps: last,
            metadata: StreamMetadata::default(),
        })
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// Writes `path` and its JSON sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.write_binary(fs::File::create(path)?)?;
        let side = Sidecar {
            duration_ps: self.duration_ps,
            events: self.events.len(),
            metadata: self.metadata.clone(),
        };
        fs::write(Self::sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }

    /// Reads `path`, taking duration and metadata from the sidecar if present.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut s = Self::from_bytes(&fs::read(path)?)?;
        let side = Self::sidecar_path(path);
        if side.exists() {
            let meta: Sidecar = serde_json::from_str(&fs::read_to_string(side)?)?;
            if meta.duration_ps < s.duration_ps {
                return Err(PhotonError::InvalidParameter(format!(
                    "sidecar duration {} ps precedes the last event",
                    meta.duration_ps
                )));
            }
            s.duration_ps = meta.duration_ps;
            s.metadata = meta.metadata;
        }
        Ok(s)
    }
}
