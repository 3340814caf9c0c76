//! Binary snapshot of a [`Dataset`].
//!
//! All integers are little-endian.
//!
//! ```text
//! magic      4 bytes   "CSCD"
//! version    u32       1
//! users      u64 count, then per label: u32 byte length + UTF-8 bytes
//! tags       u64 count, then per label: u32 byte length + UTF-8 bytes
//! events     u64 count, then per event: u32 user, u32 tag, i64 time_ms, u8 is_first_usage
//! edges      u64 count, then per edge:  u32 src, u32 dst, u8 has_since, i64 since_ms
//! ```
//!
//! Label tables are in handle order (lexicographic), events in
//! `(time, user, tag)` order and edges in `(src, dst)` order. `since_ms` is
//! 0 when `has_since` is 0. Trailing bytes are an error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AdoptionEvent, Dataset, FollowEdge, TagId, UserId};
use crate::error::{Error, Result};
use crate::time::Timestamp;

pub const MAGIC: &[u8; 4] = b"CSCD";
pub const VERSION: u32 = 1;

pub fn write<W: Write>(d: &Dataset, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for table in [d.users(), d.tags()] {
        w.write_all(&(table.len() as u64).to_le_bytes())?;
        for label in table.labels() {
            let len = u32::try_from(label.len()).map_err(|_| Error::Snapshot("label longer than 4 GiB".into()))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(label.as_bytes())?;
        }
    }
    w.write_all(&(d.events().len() as u64).to_le_bytes())?;
    for e in d.events() {
        w.write_all(&e.user.0.to_le_bytes())?;
        w.write_all(&e.tag.0.to_le_bytes())?;
        w.write_all(&e.time.0.to_le_bytes())?;
        w.write_all(&[u8::from(e.is_first_usage)])?;
    }
    w.write_all(&(d.edges().len() as u64).to_le_bytes())?;
    for e in d.edges() {
        w.write_all(&e.src.0.to_le_bytes())?;
        w.write_all(&e.dst.0.to_le_bytes())?;
        w.write_all(&[u8::from(e.since.is_some())])?;
        w.write_all(&e.since.map_or(0, |t| t.0).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save(d: &Dataset, path: &Path) -> Result<()> {
    write(d, File::create(path)?)
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(truncated)?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.bytes()?))
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let n = self.u64()?;
        usize::try_from(n).map_err(|_| Error::Snapshot(format!("{what} count {n} too large")))
    }

    fn labels(&mut self, what: &str) -> Result<Vec<String>> {
        let n = self.count(what)?;
        let mut out = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let len = self.u32()? as usize;
            let mut buf = Vec::with_capacity(len.min(1 << 20));
            (&mut self.inner)
                .take(len as u64)
                .read_to_end(&mut buf)
                .map_err(truncated)?;
            if buf.len() != len {
                return Err(Error::Snapshot("truncated label".into()));
            }
            out.push(String::from_utf8(buf).map_err(|_| Error::Snapshot(format!("{what} label is not UTF-8")))?);
        }
        Ok(out)
    }

    fn flag(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Snapshot(format!("invalid flag byte {b}"))),
        }
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Snapshot("unexpected end of file".into())
    } else {
        Error::Io(e)
    }
}

/// Reads only the magic and version. `Ok(None)` when the magic does not match.
pub fn peek_version<R: Read>(input: R) -> Result<Option<u32>> {
    let mut c = Cursor { inner: input };
    let magic: [u8; 4] = match c.bytes() {
        Ok(m) => m,
        Err(Error::Snapshot(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if &magic != MAGIC {
        return Ok(None);
    }
    match c.u32() {
        Ok(v) => Ok(Some(v)),
        Err(Error::Snapshot(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn read<R: Read>(input: R) -> Result<Dataset> {
    let mut c = Cursor {
        inner: BufReader::new(input),
    };
    if &c.bytes::<4>()? != MAGIC {
        return Err(Error::Snapshot("bad magic bytes".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::SnapshotVersion {
            found: version,
            supported: VERSION,
        });
    }
    let users = c.labels("user")?;
    let tags = c.labels("tag")?;
    let n_events = c.count("event")?;
    let mut events = Vec::with_capacity(n_events.min(1 << 24));
    for _ in 0..n_events {
        events.push(AdoptionEvent {
            user: UserId(c.u32()?),
            tag: TagId(c.u32()?),
            time: Timestamp(c.i64()?),
            is_first_usage: c.flag()?,
        });
    }
    let n_edges = c.count("edge")?;
    let mut edges = Vec::with_capacity(n_edges.min(1 << 24));
    for _ in 0..n_edges {
        let src = UserId(c.u32()?);
        let dst = UserId(c.u32()?);
        let has_since = c.flag()?;
        let since = c.i64()?;
        edges.push(FollowEdge {
            src,
            dst,
            since: has_since.then_some(Timestamp(since)),
        });
    }
    let mut rest = [0u8; 1];
    if c.inner.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes after edge table".into()));
    }
    Dataset::from_parts(users, tags, events, edges)
}

pub fn load(path: &Path) -> Result<Dataset> {
    read(File::open(path)?)
}
