//! OGSQ1 container.
//!
//! Little-endian layout:
//!
//! ```text
//! offset  size  field
//! 0       5     magic "OGSQ1"
//! 5       2     version (1)
//! 7       2     height
//! 9       2     width
//! 11      4     frame count
//! 15      2     fps
//! 17      ...   per frame: height*width measurement bytes, then height*width truth bytes
//! ```
//!
//! Payload bytes are 0 (free) or 1 (occupied).

use std::io::{Read, Write};
use std::path::Path;

use super::{FramePair, SequenceRecord};
use crate::error::{Error, Result};
use crate::grid::GridFrame;

pub const OGSQ_MAGIC: &[u8; 5] = b"OGSQ1";
pub const OGSQ_HEADER_LEN: usize = 17;
const VERSION: u16 = 1;

fn malformed(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        format: "OGSQ1",
        offset: offset as u64,
        reason: reason.into(),
    }
}

pub fn write_ogsq<W: Write>(record: &SequenceRecord, mut sink: W) -> Result<()> {
    let count = u32::try_from(record.len())
        .map_err(|_| Error::InvalidConfig(format!("{} frames exceed u32", record.len())))?;
    let mut header = Vec::with_capacity(OGSQ_HEADER_LEN);
    header.extend_from_slice(OGSQ_MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&(record.height() as u16).to_le_bytes());
    header.extend_from_slice(&(record.width() as u16).to_le_bytes());
    header.extend_from_slice(&count.to_le_bytes());
    header.extend_from_slice(&record.fps().to_le_bytes());
    sink.write_all(&header)?;
    for pair in record.frames() {
        sink.write_all(pair.measurement.cells())?;
        sink.write_all(pair.truth.cells())?;
    }
    sink.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(malformed(
                self.bytes.len(),
                format!(
                    "truncated while reading {what}: need {n} bytes at offset {}",
                    self.pos
                ),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn read_ogsq<R: Read>(mut source: R) -> Result<SequenceRecord> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };

    let magic = cur.take(OGSQ_MAGIC.len(), "magic")?;
    if magic != OGSQ_MAGIC {
        return Err(malformed(
            0,
            format!("bad magic {:?}", String::from_utf8_lossy(magic)),
        ));
    }
    let version = cur.u16("version")?;
    if version != VERSION {
        return Err(malformed(5, format!("unsupported version {version}")));
    }
    let height = usize::from(cur.u16("height")?);
    let width = usize::from(cur.u16("width")?);
    if height == 0 || width == 0 {
        return Err(malformed(7, format!("zero extent {height}x{width}")));
    }
    let count = cur.u32("frame count")? as usize;
    let fps = cur.u16("fps")?;

    let cells = height * width;
    let mut frames = Vec::with_capacity(count.min(bytes.len() / (2 * cells) + 1));
    let grid = |cur: &mut Cursor, what: &str| -> Result<GridFrame> {
        let start = cur.pos;
        let raw = cur.take(cells, what)?;
        if let Some(k) = raw.iter().position(|&b| b > 1) {
            return Err(malformed(
                start + k,
                format!("payload byte {} is not 0 or 1", raw[k]),
            ));
        }
        GridFrame::from_cells(height, width, raw.to_vec())
    };
    for t in 0..count {
        let measurement = grid(&mut cur, &format!("frame {t} measurement"))?;
        let truth = grid(&mut cur, &format!("frame {t} truth"))?;
        frames.push(FramePair { measurement, truth });
    }
    if cur.pos != bytes.len() {
        return Err(malformed(
            cur.pos,
            format!("{} trailing bytes", bytes.len() - cur.pos),
        ));
    }
    SequenceRecord::new(height, width, fps, frames)
}

pub fn save_ogsq(record: &SequenceRecord, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ogsq(record, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Stream(source) => Error::io(path, source),
        other => other,
    })
}

pub fn load_ogsq(path: &Path) -> Result<SequenceRecord> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ogsq(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Stream(source) => Error::io(path, source),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn record(height: usize, width: usize, cells: &[u8], fps: u16) -> SequenceRecord {
        let n = height * width;
        let frames = cells
            .chunks_exact(2 * n)
            .map(|c| FramePair {
                measurement: GridFrame::from_cells(height, width, c[..n].to_vec()).unwrap(),
                truth: GridFrame::from_cells(height, width, c[n..].to_vec()).unwrap(),
            })
            .collect();
        SequenceRecord::new(height, width, fps, frames).unwrap()
    }

    fn encode(r: &SequenceRecord) -> Vec<u8> {
        let mut buf = Vec::new();
        write_ogsq(r, &mut buf).unwrap();
        buf
    }

    #[test]
    fn empty_record_is_header_only() {
        let bytes = encode(&record(50, 50, &[], 30));
        assert_eq!(bytes.len(), OGSQ_HEADER_LEN);
        assert_eq!(
            bytes,
            [b'O', b'G', b'S', b'Q', b'1', 1, 0, 50, 0, 50, 0, 0, 0, 0, 0, 30, 0]
        );
    }

    #[test]
    fn golden_single_frame_layout() {
        let r = record(1, 3, &[0, 1, 0, 1, 1, 0], 30);
        let bytes = encode(&r);
        assert_eq!(&bytes[7..11], &[1, 0, 3, 0]);
        assert_eq!(&bytes[11..15], &[1, 0, 0, 0]);
        assert_eq!(&bytes[17..], &[0, 1, 0, 1, 1, 0]);
    }

    #[test]
    fn bad_magic_reports_offset_zero() {
        let mut bytes = encode(&record(2, 2, &[0; 8], 30));
        bytes[0] = b'X';
        let err = read_ogsq(&bytes[..]).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 0, .. }), "{err}");
    }

    #[test]
    fn non_binary_payload_reports_offset() {
        let mut bytes = encode(&record(2, 2, &[0; 8], 30));
        bytes[OGSQ_HEADER_LEN + 5] = 2;
        let err = read_ogsq(&bytes[..]).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 22, .. }), "{err}");
    }

    #[test]
    fn truncation_is_rejected() {
        let bytes = encode(&record(2, 2, &[1; 16], 30));
        for cut in [3, 10, OGSQ_HEADER_LEN + 1, bytes.len() - 1] {
            let err = read_ogsq(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, Error::Format { offset, .. } if offset == cut as u64),
                "{err}"
            );
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = encode(&record(2, 2, &[0; 8], 30));
        bytes.push(0);
        assert!(read_ogsq(&bytes[..]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn round_trip_is_identity(
            height in 1usize..12,
            width in 1usize..12,
            frames in 0usize..6,
            fps in any::<u16>(),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cells: Vec<u8> = (0..2 * height * width * frames).map(|_| rng.gen_range(0..2)).collect();
            let r = record(height, width, &cells, fps);
            let bytes = encode(&r);
            prop_assert_eq!(bytes.len(), OGSQ_HEADER_LEN + cells.len());
            prop_assert_eq!(read_ogsq(&bytes[..]).unwrap(), r);
        }
    }
}
