//! Minimal NIfTI-1 reader and writer.
//!
//! Only what mask evaluation needs is read: `sizeof_hdr`, `dim`, `datatype`,
//! `bitpix`, `pixdim`, `vox_offset` and the magic string. Orientation
//! (qform/sform) is ignored. Byte order is detected from `sizeof_hdr`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::mask::{Spacing, VoxelMask};
use crate::error::{Error, Result};

pub const HEADER_SIZE: usize = 348;
pub const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
pub const MAGIC_PAIR: &[u8; 4] = b"ni1\0";

/// Stored element type of a NIfTI payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Datatype {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl Datatype {
    pub fn from_code(code: i16) -> Result<Self> {
        Ok(match code {
            2 => Datatype::U8,
            4 => Datatype::I16,
            8 => Datatype::I32,
            16 => Datatype::F32,
            64 => Datatype::F64,
            other => return Err(Error::UnsupportedDatatype(other)),
        })
    }

    pub fn code(self) -> i16 {
        match self {
            Datatype::U8 => 2,
            Datatype::I16 => 4,
            Datatype::I32 => 8,
            Datatype::F32 => 16,
            Datatype::F64 => 64,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Datatype::U8 => 1,
            Datatype::I16 => 2,
            Datatype::I32 | Datatype::F32 => 4,
            Datatype::F64 => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NiftiHeader {
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub magic: [u8; 4],
    pub little_endian: bool,
}

impl NiftiHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_SIZE {
            return Err(Error::MalformedHeader(format!(
                "need {HEADER_SIZE} header bytes, got {}",
                bytes.len()
            )));
        }
        if LittleEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
            Ok(Self::parse_with::<LittleEndian>(bytes, true)?)
        } else if BigEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
            Ok(Self::parse_with::<BigEndian>(bytes, false)?)
        } else {
            Err(Error::MalformedHeader(format!(
                "sizeof_hdr is {} (expected {HEADER_SIZE})",
                LittleEndian::read_i32(&bytes[0..4])
            )))
        }
    }

    fn parse_with<B: ByteOrder>(bytes: &[u8], little_endian: bool) -> Result<Self> {
        let mut dim = [0i16; 8];
        for (i, d) in dim.iter_mut().enumerate() {
            *d = B::read_i16(&bytes[40 + 2 * i..]);
        }
        let mut pixdim = [0f32; 8];
        for (i, p) in pixdim.iter_mut().enumerate() {
            *p = B::read_f32(&bytes[76 + 4 * i..]);
        }
        let mut magic = [0u8; 4];
        magic.copy_from_slice(&bytes[344..348]);
        if &magic != MAGIC_SINGLE && &magic != MAGIC_PAIR {
            return Err(Error::MalformedHeader(format!("bad magic {magic:?}")));
        }
        Ok(NiftiHeader {
            dim,
            datatype: B::read_i16(&bytes[70..]),
            bitpix: B::read_i16(&bytes[72..]),
            pixdim,
            vox_offset: B::read_f32(&bytes[108..]),
            magic,
            little_endian,
        })
    }

    /// Spatial extent. Extra dimensions are allowed only when they are singleton.
    pub fn dims(&self) -> Result<[usize; 3]> {
        let ndim = self.dim[0];
        if !(1..=7).contains(&ndim) {
            return Err(Error::MalformedHeader(format!("dim[0] = {ndim}")));
        }
        let mut out = [1usize; 3];
        for axis in 1..=ndim as usize {
            let d = self.dim[axis];
            if d < 1 {
                return Err(Error::MalformedHeader(format!("dim[{axis}] = {d}")));
            }
            if axis <= 3 {
                out[axis - 1] = d as usize;
            } else if d != 1 {
                return Err(Error::MalformedHeader(format!(
                    "non-singleton dim[{axis}] = {d}; only 3D masks are supported"
                )));
            }
        }
        Ok(out)
    }

    pub fn spacing(&self) -> Result<Spacing> {
        let ndim = self.dim[0].clamp(1, 3) as usize;
        let mut s = [1f64; 3];
        for axis in 1..=3 {
            // axes beyond dim[0] are degenerate; their pixdim is often left at 0
            if axis <= ndim || self.pixdim[axis] != 0.0 {
                s[axis - 1] = self.pixdim[axis] as f64;
            }
        }
        Spacing::new(s[0], s[1], s[2])
    }

    pub fn datatype(&self) -> Result<Datatype> {
        let dt = Datatype::from_code(self.datatype)?;
        if self.bitpix as usize != dt.size() * 8 {
            return Err(Error::MalformedHeader(format!(
                "bitpix {} does not match datatype {}",
                self.bitpix, self.datatype
            )));
        }
        Ok(dt)
    }

    pub fn to_bytes(&self) -> [u8; HEADER_SIZE] {
        let mut b = [0u8; HEADER_SIZE];
        if self.little_endian {
            self.write_with::<LittleEndian>(&mut b);
        } else {
            self.write_with::<BigEndian>(&mut b);
        }
        b
    }

    fn write_with<B: ByteOrder>(&self, b: &mut [u8; HEADER_SIZE]) {
        B::write_i32(&mut b[0..4], HEADER_SIZE as i32);
        b[38] = b'r'; // regular
        for (i, d) in self.dim.iter().enumerate() {
            B::write_i16(&mut b[40 + 2 * i..], *d);
        }
        B::write_i16(&mut b[70..], self.datatype);
        B::write_i16(&mut b[72..], self.bitpix);
        for (i, p) in self.pixdim.iter().enumerate() {
            B::write_f32(&mut b[76 + 4 * i..], *p);
        }
        B::write_f32(&mut b[108..], self.vox_offset);
        B::write_f32(&mut b[112..], 1.0); // scl_slope
        b[123] = 10; // xyzt_units: mm, s
        b[344..348].copy_from_slice(&self.magic);
    }

    pub fn for_mask(mask: &VoxelMask, datatype: Datatype) -> Self {
        let [nx, ny, nz] = mask.dims();
        let s = mask.spacing();
        NiftiHeader {
            dim: [3, nx as i16, ny as i16, nz as i16, 1, 1, 1, 1],
            datatype: datatype.code(),
            bitpix: (datatype.size() * 8) as i16,
            pixdim: [1.0, s.dx as f32, s.dy as f32, s.dz as f32, 1.0, 1.0, 1.0, 1.0],
            vox_offset: (HEADER_SIZE + 4) as f32,
            magic: *MAGIC_SINGLE,
            little_endian: true,
        }
    }
}

pub fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

pub(crate) fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    if is_gzip(&raw) {
        let mut out = Vec::with_capacity(raw.len() * 4);
        MultiGzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Decodes a single-file (`n+1`) NIfTI image held in memory.
pub fn decode(bytes: &[u8], threshold: f64) -> Result<VoxelMask> {
    let header = NiftiHeader::parse(bytes)?;
    if &header.magic != MAGIC_SINGLE {
        return Err(Error::MalformedHeader(
            "`ni1` header needs its companion .img file".into(),
        ));
    }
    let offset = header.vox_offset as usize;
    if header.vox_offset < HEADER_SIZE as f32 || offset > bytes.len() {
        return Err(Error::MalformedHeader(format!(
            "vox_offset {} outside file of {} bytes",
            header.vox_offset,
            bytes.len()
        )));
    }
    decode_payload(&header, &bytes[offset..], threshold)
}

/// Converts a raw payload to a mask using an already-parsed header.
pub fn decode_payload(header: &NiftiHeader, payload: &[u8], threshold: f64) -> Result<VoxelMask> {
    let dims = header.dims()?;
    let spacing = header.spacing()?;
    let dt = header.datatype()?;
    let n = dims[0] * dims[1] * dims[2];
    let expected = n * dt.size();
    if payload.len() != expected {
        return Err(Error::PayloadMismatch {
            expected,
            actual: payload.len(),
        });
    }
    let data = if header.little_endian {
        binarize::<LittleEndian>(payload, dt, threshold)
    } else {
        binarize::<BigEndian>(payload, dt, threshold)
    };
    VoxelMask::from_bools(dims, data, spacing)
}

fn binarize<B: ByteOrder>(payload: &[u8], dt: Datatype, t: f64) -> Vec<bool> {
    match dt {
        Datatype::U8 => payload.iter().map(|&v| v as f64 > t).collect(),
        Datatype::I16 => payload
            .chunks_exact(2)
            .map(|c| B::read_i16(c) as f64 > t)
            .collect(),
        Datatype::I32 => payload
            .chunks_exact(4)
            .map(|c| B::read_i32(c) as f64 > t)
            .collect(),
        Datatype::F32 => payload
            .chunks_exact(4)
            .map(|c| B::read_f32(c) as f64 > t)
            .collect(),
        Datatype::F64 => payload
            .chunks_exact(8)
            .map(|c| B::read_f64(c) > t)
            .collect(),
    }
}

/// Reads `.nii`, `.nii.gz`, or an `.hdr`/`.img` pair.
pub fn read(path: &Path, threshold: f64) -> Result<VoxelMask> {
    let bytes = read_maybe_gz(path)?;
    let header = NiftiHeader::parse(&bytes)?;
    if &header.magic == MAGIC_SINGLE {
        return decode(&bytes, threshold);
    }
    let img = companion_image(path).ok_or_else(|| {
        Error::MalformedHeader(format!("no .img file next to {}", path.display()))
    })?;
    let payload = read_maybe_gz(&img)?;
    let offset = header.vox_offset.max(0.0) as usize;
    if offset > payload.len() {
        return Err(Error::PayloadMismatch {
            expected: offset,
            actual: payload.len(),
        });
    }
    decode_payload(&header, &payload[offset..], threshold)
}

fn companion_image(hdr: &Path) -> Option<PathBuf> {
    let name = hdr.file_name()?.to_str()?;
    let stem = name
        .strip_suffix(".hdr.gz")
        .or_else(|| name.strip_suffix(".hdr"))?;
    [".img", ".img.gz"]
        .iter()
        .map(|ext| hdr.with_file_name(format!("{stem}{ext}")))
        .find(|p| p.exists())
}

/// Encodes a mask as a single-file little-endian NIfTI-1 image.
pub fn encode(mask: &VoxelMask, datatype: Datatype) -> Vec<u8> {
    let header = NiftiHeader::for_mask(mask, datatype);
    let mut out = Vec::with_capacity(HEADER_SIZE + 4 + mask.total_voxels() * datatype.size());
    out.extend_from_slice(&header.to_bytes());
    out.extend_from_slice(&[0u8; 4]);
    let mut buf = [0u8; 8];
    for &v in mask.data() {
        let bytes: &[u8] = match datatype {
            Datatype::U8 => {
                buf[0] = v as u8;
                &buf[..1]
            }
            Datatype::I16 => {
                LittleEndian::write_i16(&mut buf, v as i16);
                &buf[..2]
            }
            Datatype::I32 => {
                LittleEndian::write_i32(&mut buf, v as i32);
                &buf[..4]
            }
            Datatype::F32 => {
                LittleEndian::write_f32(&mut buf, v as u8 as f32);
                &buf[..4]
            }
            Datatype::F64 => {
                LittleEndian::write_f64(&mut buf, v as u8 as f64);
                &buf[..8]
            }
        };
        out.extend_from_slice(bytes);
    }
    out
}

/// Writes a NIfTI-1 file, gzip-compressed when the path ends in `.gz`.
pub fn write(path: &Path, mask: &VoxelMask, datatype: Datatype) -> Result<()> {
    let bytes = encode(mask, datatype);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let res = if gz {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::fast());
        enc.write_all(&bytes).and_then(|_| enc.finish()).map(|_| ())
    } else {
        let mut w = BufWriter::new(file);
        w.write_all(&bytes).and_then(|_| w.flush())
    };
    res.map_err(|e| Error::io(path, e))
}
