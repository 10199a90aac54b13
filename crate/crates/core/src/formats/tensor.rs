use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::channel::ConditionVector;
use crate::codec::{ChannelImage, IMAGE_COLS, IMAGE_PIXELS, IMAGE_ROWS};
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"CHIM";
pub const TENSOR_VERSION: u32 = 1;

/// Images with their conditions, as stored in a `CHIM` file.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    pub images: Vec<ChannelImage>,
    pub conditions: Vec<ConditionVector>,
}

/// Pixels are stored as f32, so writing rounds them once; a file read back
/// and written again is byte-identical.
pub fn write_images<W: Write>(mut w: W, images: &[ChannelImage], conditions: &[ConditionVector]) -> Result<()> {
    if images.len() != conditions.len() {
        return Err(Error::Shape {
            expected: format!("{} conditions", images.len()),
            actual: format!("{} conditions", conditions.len()),
        });
    }
    let count = u32::try_from(images.len()).map_err(|_| Error::Config("too many images for one file".into()))?;
    w.write_all(TENSOR_MAGIC)?;
    w.write_u32::<LittleEndian>(TENSOR_VERSION)?;
    w.write_u32::<LittleEndian>(count)?;
    w.write_u32::<LittleEndian>(IMAGE_ROWS as u32)?;
    w.write_u32::<LittleEndian>(IMAGE_COLS as u32)?;
    let mut buf = Vec::with_capacity(IMAGE_PIXELS * 4);
    for img in images {
        buf.clear();
        for &p in img.pixels() {
            buf.extend_from_slice(&(p as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    for c in conditions {
        w.write_f64::<LittleEndian>(c.dist2d)?;
        w.write_f64::<LittleEndian>(c.height)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_images<R: Read>(mut r: R) -> Result<ImageTensor> {
    const WHAT: &str = "image tensor";
    let truncated = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format(WHAT, "truncated file")
        } else {
            Error::Io(e)
        }
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::format(WHAT, "bad magic"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(truncated)?;
    if version != TENSOR_VERSION {
        return Err(Error::Version {
            what: WHAT,
            found: version.to_string(),
        });
    }
    let count = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let rows = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let cols = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    if (rows, cols) != (IMAGE_ROWS, IMAGE_COLS) {
        return Err(Error::format(
            WHAT,
            format!("images are {rows}x{cols}, expected {IMAGE_ROWS}x{IMAGE_COLS}"),
        ));
    }
    let mut images = Vec::with_capacity(count.min(1 << 20));
    let mut raw = vec![0u8; IMAGE_PIXELS * 4];
    for _ in 0..count {
        r.read_exact(&mut raw).map_err(truncated)?;
        let pixels = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        images.push(ChannelImage::from_pixels(pixels)?);
    }
    let mut conditions = Vec::with_capacity(images.len());
    for _ in 0..count {
        let d = r.read_f64::<LittleEndian>().map_err(truncated)?;
        let h = r.read_f64::<LittleEndian>().map_err(truncated)?;
        conditions.push(ConditionVector::new(d, h).map_err(|e| Error::format(WHAT, e))?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::format(WHAT, "trailing bytes"));
    }
    Ok(ImageTensor { images, conditions })
}
