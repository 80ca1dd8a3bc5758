//! `GOCC` binary occupancy records, little-endian:
//!
//! ```text
//! magic "GOCC" | version u32 = 1
//! min xyz f64×3 | max xyz f64×3 | voxel size f64×3 | dims u32×3
//! instance count u32
//! per instance: track_id i64 (−1 = none) | class u16 | score f32 |
//!               voxel count u32 | voxel indices u32×count, ascending
//! ```
//!
//! A file holds one record per frame, back to back.

use std::path::Path;

use super::IoError;
use crate::grid::VoxelGridSpec;
use crate::instance::SparseInstanceOccupancy;
use crate::metrics::OccFrame;

pub const GOCC_MAGIC: [u8; 4] = *b"GOCC";
pub const GOCC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OccFile {
    pub frames: Vec<OccFrame>,
}

pub fn encode_occ_frame(frame: &OccFrame, out: &mut Vec<u8>) {
    out.extend_from_slice(&GOCC_MAGIC);
    out.extend_from_slice(&GOCC_VERSION.to_le_bytes());
    let g = &frame.grid;
    for v in g.min_corner().iter().chain(&g.max_corner()).chain(&g.voxel_size()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for d in g.dims() {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&(frame.instances.len() as u32).to_le_bytes());
    for inst in &frame.instances {
        let track = inst.track_id.map_or(-1i64, i64::from);
        out.extend_from_slice(&track.to_le_bytes());
        out.extend_from_slice(&inst.class_id.to_le_bytes());
        out.extend_from_slice(&inst.score.to_le_bytes());
        out.extend_from_slice(&(inst.len() as u32).to_le_bytes());
        for v in inst.voxels() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn encode_occ(file: &OccFile) -> Vec<u8> {
    let mut out = Vec::new();
    for f in &file.frames {
        encode_occ_frame(f, &mut out);
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    record: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N], IoError> {
        let end = self.pos + N;
        let bytes = self.buf.get(self.pos..end).ok_or_else(|| IoError::Truncated {
            record: self.record,
            msg: format!("reading {what} at byte {}", self.pos),
        })?;
        self.pos = end;
        Ok(bytes.try_into().unwrap())
    }

    fn u32(&mut self, what: &str) -> Result<u32, IoError> {
        self.take::<4>(what).map(u32::from_le_bytes)
    }

    fn f64(&mut self, what: &str) -> Result<f64, IoError> {
        self.take::<8>(what).map(f64::from_le_bytes)
    }
}

fn decode_frame(c: &mut Cursor) -> Result<OccFrame, IoError> {
    let record = c.record;
    let magic = c.take::<4>("magic")?;
    if magic != GOCC_MAGIC {
        return Err(IoError::BadMagic(magic));
    }
    let version = c.u32("version")?;
    if version != GOCC_VERSION {
        return Err(IoError::VersionUnsupported(version));
    }
    let mut vals = [0.0; 9];
    for v in &mut vals {
        *v = c.f64("grid")?;
    }
    let stored = [c.u32("dims")?, c.u32("dims")?, c.u32("dims")?];
    let grid = VoxelGridSpec::new(
        [vals[0], vals[1], vals[2]],
        [vals[3], vals[4], vals[5]],
        [vals[6], vals[7], vals[8]],
    )
    .map_err(|e| IoError::DimsInconsistent {
        record,
        stored,
        msg: e.to_string(),
    })?;
    if grid.dims() != stored {
        return Err(IoError::DimsInconsistent {
            record,
            stored,
            msg: format!("corners and voxel size give {:?}", grid.dims()),
        });
    }
    let count = c.u32("instance count")?;
    let mut instances = Vec::with_capacity(count.min(1 << 16) as usize);
    for n in 0..count as usize {
        let loc = format!("record {record}, instance {n}");
        let track = i64::from_le_bytes(c.take::<8>("track id")?);
        let track_id = match track {
            -1 => None,
            t if (0..=u32::MAX as i64).contains(&t) => Some(t as u32),
            t => return Err(IoError::invariant(loc, "track_id", format!("{t} is not a valid id"))),
        };
        let class_id = u16::from_le_bytes(c.take::<2>("class")?);
        let score = f32::from_le_bytes(c.take::<4>("score")?);
        if !(0.0..=1.0).contains(&score) {
            return Err(IoError::invariant(loc, "score", format!("{score} not in [0, 1]")));
        }
        let len = c.u32("voxel count")? as usize;
        let bytes = c
            .buf
            .get(c.pos..c.pos + 4 * len)
            .ok_or_else(|| IoError::Truncated {
                record,
                msg: format!("instance {n} declares {len} voxels"),
            })?;
        c.pos += 4 * len;
        let voxels: Vec<u32> = bytes
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if voxels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IoError::IndicesNotAscending { record, instance: n });
        }
        let inst = SparseInstanceOccupancy::new(class_id, score, track_id, voxels, grid.num_voxels())
            .map_err(|e| IoError::invariant(loc, "voxels", e))?;
        instances.push(inst);
    }
    Ok(OccFrame::new(grid, instances))
}

pub fn decode_occ(bytes: &[u8]) -> Result<OccFile, IoError> {
    let mut c = Cursor {
        buf: bytes,
        pos: 0,
        record: 0,
    };
    let mut frames = Vec::new();
    while c.pos < bytes.len() {
        frames.push(decode_frame(&mut c)?);
        c.record += 1;
    }
    Ok(OccFile { frames })
}

pub fn read_occ(path: impl AsRef<Path>) -> Result<OccFile, IoError> {
    decode_occ(&std::fs::read(path)?)
}

pub fn write_occ(file: &OccFile, path: impl AsRef<Path>) -> Result<(), IoError> {
    std::fs::write(path, encode_occ(file))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> OccFile {
        let grid = VoxelGridSpec::occ3d();
        let a = SparseInstanceOccupancy::new(2, 0.5, Some(9), vec![0, 5, 639_999], grid.num_voxels()).unwrap();
        let b = SparseInstanceOccupancy::new(0, 0.25, None, vec![], grid.num_voxels()).unwrap();
        OccFile {
            frames: vec![OccFrame::new(grid, vec![a, b]), OccFrame::new(grid, vec![])],
        }
    }

    #[test]
    fn empty_frame_is_header_only() {
        let f = OccFile {
            frames: vec![OccFrame::new(VoxelGridSpec::occ3d(), vec![])],
        };
        assert_eq!(encode_occ(&f).len(), 4 + 4 + (6 + 3) * 8 + 3 * 4 + 4);
        assert_eq!(encode_occ(&f).len(), 96);
    }

    #[test]
    fn roundtrip_is_byte_exact() {
        let bytes = encode_occ(&sample());
        let back = decode_occ(&bytes).unwrap();
        assert_eq!(back, sample());
        assert_eq!(encode_occ(&back), bytes);
        assert_eq!(decode_occ(&[]).unwrap().frames.len(), 0);
    }

    #[test]
    fn corrupted_inputs() {
        let bytes = encode_occ(&sample());

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_occ(&bad), Err(IoError::BadMagic(m)) if &m == b"XOCC"));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_occ(&bad), Err(IoError::VersionUnsupported(2))));

        let mut bad = bytes.clone();
        bad[80] = 201; // dims x
        assert!(matches!(decode_occ(&bad), Err(IoError::DimsInconsistent { .. })));

        // swap the first two voxel indices of instance 0
        let mut bad = bytes.clone();
        let first = 96 + 8 + 2 + 4 + 4;
        bad[first..first + 4].copy_from_slice(&5u32.to_le_bytes());
        bad[first + 4..first + 8].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            decode_occ(&bad),
            Err(IoError::IndicesNotAscending { record: 0, instance: 0 })
        ));

        // index beyond the grid
        let mut bad = bytes.clone();
        let last = first + 8;
        bad[last..last + 4].copy_from_slice(&640_000u32.to_le_bytes());
        assert!(matches!(decode_occ(&bad), Err(IoError::InvariantViolation { .. })));

        assert!(matches!(decode_occ(&bytes[..bytes.len() - 3]), Err(IoError::Truncated { record: 1, .. })));
        assert!(matches!(decode_occ(&bytes[..130]), Err(IoError::Truncated { record: 0, .. })));
    }
}
