//! On-disk formats.
//!
//! | artifact        | layout                                               |
//! |-----------------|------------------------------------------------------|
//! | link dataset    | JSON Lines, `# {header}` first line                  |
//! | image tensor    | binary `CHIM`, little-endian f32 pixels              |
//! | codec           | versioned JSON                                       |
//! | checkpoint      | binary `CHCK`, JSON metadata, layer table, f64 data  |
//! | reports         | CSV with `#` comment lines carrying the seed         |
//!
//! Every format carries a version; readers accept any minor revision of the
//! major version they know and reject the rest.

mod checkpoint;
mod codec_file;
mod dataset;
pub mod reports;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, Model, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use codec_file::{read_codec, write_codec, CodecFile, CODEC_FORMAT};
pub use dataset::{read_dataset, write_dataset, DatasetHeader, DATASET_FORMAT};
pub use tensor::{read_images, write_images, ImageTensor, TENSOR_MAGIC, TENSOR_VERSION};

use crate::error::{Error, Result};

/// Version written by this build for the text formats.
pub const FORMAT_VERSION: &str = "1.0";
const MAJOR: u32 = 1;

pub(crate) fn check_version(what: &'static str, version: &str) -> Result<()> {
    let major = version.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(MAJOR) {
        return Err(Error::Version {
            what,
            found: version.to_string(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minor_revisions_are_accepted() {
        assert!(check_version("x", "1.0").is_ok());
        assert!(check_version("x", "1.7").is_ok());
        assert!(check_version("x", "2.0").is_err());
        assert!(check_version("x", "").is_err());
    }
}
