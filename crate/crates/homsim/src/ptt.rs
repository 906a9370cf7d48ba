//! PTT binary timestamp files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! header  (24 bytes): magic "PTT1" | version u16 (=1) | channel count u16
//!                     | tick resolution in femtoseconds u64 | record count u64
//! record  (12 bytes): channel u8 | flags u8 (reserved, 0) | reserved u16 (0)
//!                     | timestamp in ticks u64
//! ```
//!
//! Timestamps must be nondecreasing per channel. Fixed-width records make
//! the format stream-appendable: the writer backpatches the record count on
//! `finish`. The default resolution of 1000 fs stores picosecond timestamps
//! verbatim; other resolutions convert with floor rounding.

use std::io::{Read, Seek, SeekFrom, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PTT1";
pub const VERSION: u16 = 1;
/// 1000 fs per tick = 1 tick per picosecond.
pub const DEFAULT_RESOLUTION_FS: u64 = 1_000;
pub const HEADER_LEN: usize = 24;
pub const RECORD_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PttHeader {
    pub version: u16,
    pub channel_count: u16,
    pub resolution_fs: u64,
    pub n_records: u64,
}

/// One record: channel index and timestamp in picoseconds.
pub type PttRecord = (u8, u64);

pub struct PttWriter<W: Write + Seek> {
    w: W,
    resolution_fs: u64,
    n_records: u64,
    last_per_channel: Vec<Option<u64>>,
}

impl<W: Write + Seek> PttWriter<W> {
    pub fn new(mut w: W, channel_count: u16, resolution_fs: u64) -> Result<Self> {
        if resolution_fs == 0 {
            return Err(Error::config("tick resolution must be nonzero"));
        }
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&channel_count.to_le_bytes())?;
        w.write_all(&resolution_fs.to_le_bytes())?;
        w.write_all(&0u64.to_le_bytes())?;
        Ok(PttWriter {
            w,
            resolution_fs,
            n_records: 0,
            last_per_channel: vec![None; 256],
        })
    }

    fn ticks(&self, t_ps: u64) -> Result<u64> {
        t_ps.checked_mul(1_000)
            .map(|fs| fs / self.resolution_fs)
            .ok_or_else(|| Error::domain("timestamp overflows femtosecond range"))
    }

    pub fn write_record(&mut self, channel: u8, t_ps: u64) -> Result<()> {
        let ticks = self.ticks(t_ps)?;
        let last = &mut self.last_per_channel[channel as usize];
        if let Some(prev) = *last {
            if ticks < prev {
                return Err(Error::precondition(format!(
                    "channel {channel} timestamps must be nondecreasing"
                )));
            }
        }
        *last = Some(ticks);
        self.w.write_all(&[channel, 0])?;
        self.w.write_all(&0u16.to_le_bytes())?;
        self.w.write_all(&ticks.to_le_bytes())?;
        self.n_records += 1;
        Ok(())
    }

    /// Backpatch the record count and return the underlying writer.
    pub fn finish(mut self) -> Result<W> {
        self.w.seek(SeekFrom::Start(16))?;
        self.w.write_all(&self.n_records.to_le_bytes())?;
        self.w.flush()?;
        Ok(self.w)
    }
}

pub struct PttReader<R: Read> {
    r: R,
    pub header: PttHeader,
    read: u64,
    last_per_channel: Vec<Option<u64>>,
}

impl<R: Read> PttReader<R> {
    pub fn new(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| Error::malformed("truncated PTT header"))?;
        if header[..4] != MAGIC {
            return Err(Error::malformed("bad PTT magic"));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(Error::malformed(format!("unsupported PTT version {version}")));
        }
        let channel_count = u16::from_le_bytes([header[6], header[7]]);
        let resolution_fs = u64::from_le_bytes(header[8..16].try_into().unwrap());
        if resolution_fs == 0 {
            return Err(Error::malformed("zero tick resolution"));
        }
        let n_records = u64::from_le_bytes(header[16..24].try_into().unwrap());
        Ok(PttReader {
            r,
            header: PttHeader { version, channel_count, resolution_fs, n_records },
            read: 0,
            last_per_channel: vec![None; 256],
        })
    }

    /// Next record, converted to picoseconds; `None` at the declared end.
    pub fn next_record(&mut self) -> Result<Option<PttRecord>> {
        if self.read >= self.header.n_records {
            return Ok(None);
        }
        let mut rec = [0u8; RECORD_LEN];
        self.r
            .read_exact(&mut rec)
            .map_err(|_| Error::malformed("truncated PTT record"))?;
        let channel = rec[0];
        let ticks = u64::from_le_bytes(rec[4..12].try_into().unwrap());
        let last = &mut self.last_per_channel[channel as usize];
        if let Some(prev) = *last {
            if ticks < prev {
                return Err(Error::malformed(format!(
                    "channel {channel} records out of order"
                )));
            }
        }
        *last = Some(ticks);
        self.read += 1;
        let t_ps = (ticks as u128 * self.header.resolution_fs as u128 / 1_000) as u64;
        Ok(Some((channel, t_ps)))
    }

    pub fn read_all(mut self) -> Result<Vec<PttRecord>> {
        let mut out = Vec::with_capacity(self.header.n_records.min(1 << 24) as usize);
        while let Some(rec) = self.next_record()? {
            out.push(rec);
        }
        Ok(out)
    }
}

/// Read one channel's timestamps from a PTT file.
pub fn read_channel(path: &std::path::Path, channel: u8) -> Result<(PttHeader, Vec<u64>)> {
    let file = std::fs::File::open(path)?;
    let mut reader = PttReader::new(std::io::BufReader::new(file))?;
    let header = reader.header;
    let mut out = Vec::new();
    while let Some((ch, t)) = reader.next_record()? {
        if ch == channel {
            out.push(t);
        }
    }
    Ok((header, out))
}
