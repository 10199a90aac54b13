use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::channel::ConditionVector;
use crate::codec::ChannelImage;
use crate::error::{Error, Result};
use crate::genmodel::{
    ConditionNormalizer, Critic, EmpiricalResampler, GenerativeBackend, Generator, Mlp, ResamplerConfig, TrainingSet,
    WganGp, WganGpHyperparams,
};
use crate::rng::{substream, Stream};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CHCK";
pub const CHECKPOINT_VERSION: u32 = 1;
const WHAT: &str = "checkpoint";

/// Any trained backend.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    WganGp(WganGp),
    Resampler(EmpiricalResampler),
}

impl GenerativeBackend for Model {
    fn name(&self) -> &'static str {
        match self {
            Model::WganGp(m) => m.name(),
            Model::Resampler(m) => m.name(),
        }
    }

    fn sample(&self, cond: &ConditionVector, n: usize, seed: u64) -> Result<Vec<ChannelImage>> {
        match self {
            Model::WganGp(m) => m.sample(cond, n, seed),
            Model::Resampler(m) => m.sample(cond, n, seed),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "kebab-case")]
enum Meta {
    WganGp {
        hyper: WganGpHyperparams,
        normalizer: ConditionNormalizer,
        generator_params: usize,
        critic_params: usize,
    },
    Resampler {
        config: ResamplerConfig,
    },
}

struct Entry {
    name: String,
    rows: usize,
    cols: usize,
}

fn mlp_entries(prefix: &str, net: &Mlp, out: &mut Vec<Entry>) {
    for (l, layer) in net.layers.iter().enumerate() {
        out.push(Entry {
            name: format!("{prefix}.{l}.weight"),
            rows: layer.weight.nrows(),
            cols: layer.weight.ncols(),
        });
        out.push(Entry {
            name: format!("{prefix}.{l}.bias"),
            rows: 1,
            cols: layer.bias.len(),
        });
    }
}

fn wgan_entries(m: &WganGp) -> Vec<Entry> {
    let mut e = Vec::new();
    mlp_entries("generator.embed", &m.generator.embed, &mut e);
    mlp_entries("generator.body", &m.generator.body, &mut e);
    mlp_entries("critic.embed", &m.critic.embed, &mut e);
    mlp_entries("critic.body", &m.critic.body, &mut e);
    e
}

fn resampler_entries(n: usize, pixels: usize) -> Vec<Entry> {
    vec![
        Entry {
            name: "images".into(),
            rows: n,
            cols: pixels,
        },
        Entry {
            name: "conditions".into(),
            rows: n,
            cols: 2,
        },
    ]
}

fn u32_of(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Config(format!("{v} does not fit the checkpoint header")))
}

pub fn write_checkpoint<W: Write>(mut w: W, model: &Model, seed: u64) -> Result<()> {
    let (meta, entries, payload): (Meta, Vec<Entry>, Vec<&[f64]>) = match model {
        Model::WganGp(m) => {
            m.validate()?;
            let mut tensors = m.generator.tensors();
            tensors.extend(m.critic.tensors());
            (
                Meta::WganGp {
                    hyper: m.hyper.clone(),
                    normalizer: m.normalizer,
                    generator_params: m.generator.num_params(),
                    critic_params: m.critic.num_params(),
                },
                wgan_entries(m),
                tensors,
            )
        }
        Model::Resampler(m) => {
            let conds: Vec<f64> = m.data.conditions.iter().flat_map(|c| [c.dist2d, c.height]).collect();
            let meta = Meta::Resampler { config: m.config };
            let entries = resampler_entries(m.data.len(), m.data.pixels());
            let images = m.data.images.as_slice().expect("standard layout");
            // Conditions are borrowed from a temporary, so write right here.
            return write_parts(&mut w, seed, &meta, &entries, &[images, &conds]);
        }
    };
    write_parts(&mut w, seed, &meta, &entries, &payload)
}

fn write_parts<W: Write>(w: &mut W, seed: u64, meta: &Meta, entries: &[Entry], payload: &[&[f64]]) -> Result<()> {
    let meta = serde_json::to_vec(meta).expect("metadata serializes");
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
    w.write_u64::<LittleEndian>(seed)?;
    w.write_u32::<LittleEndian>(u32_of(meta.len())?)?;
    w.write_all(&meta)?;
    w.write_u32::<LittleEndian>(u32_of(entries.len())?)?;
    for e in entries {
        w.write_u32::<LittleEndian>(u32_of(e.name.len())?)?;
        w.write_all(e.name.as_bytes())?;
        w.write_u32::<LittleEndian>(u32_of(e.rows)?)?;
        w.write_u32::<LittleEndian>(u32_of(e.cols)?)?;
    }
    let mut buf = Vec::new();
    for t in payload {
        buf.clear();
        buf.reserve(t.len() * 8);
        for v in *t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::format(WHAT, "truncated file")
    } else {
        Error::Io(e)
    }
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut raw = vec![0u8; n * 8];
    r.read_exact(&mut raw).map_err(truncated)?;
    let v: Vec<f64> = raw
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::format(WHAT, "non-finite parameter"));
    }
    Ok(v)
}

fn check_table(found: &[Entry], expected: &[Entry]) -> Result<()> {
    if found.len() != expected.len() {
        return Err(Error::format(
            WHAT,
            format!("{} tensors, expected {}", found.len(), expected.len()),
        ));
    }
    for (f, e) in found.iter().zip(expected) {
        if f.name != e.name || f.rows != e.rows || f.cols != e.cols {
            return Err(Error::format(
                WHAT,
                format!(
                    "tensor `{}` {}x{} where `{}` {}x{} was expected",
                    f.name, f.rows, f.cols, e.name, e.rows, e.cols
                ),
            ));
        }
    }
    Ok(())
}

/// Returns the model and the seed it was trained with.
pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(Model, u64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::format(WHAT, "bad magic"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(truncated)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            what: WHAT,
            found: version.to_string(),
        });
    }
    let seed = r.read_u64::<LittleEndian>().map_err(truncated)?;
    let meta_len = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let mut meta = vec![0u8; meta_len];
    r.read_exact(&mut meta).map_err(truncated)?;
    let meta: Meta = serde_json::from_slice(&meta).map_err(|e| Error::format(WHAT, format!("metadata: {e}")))?;

    let count = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let mut table = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        if len > 4096 {
            return Err(Error::format(WHAT, "tensor name too long"));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name).map_err(|_| Error::format(WHAT, "tensor name is not UTF-8"))?;
        let rows = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let cols = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        table.push(Entry { name, rows, cols });
    }

    let model = match meta {
        Meta::WganGp { hyper, normalizer, .. } => {
            hyper.validate().map_err(|e| Error::format(WHAT, e))?;
            // Skeleton with the right shapes; every value is overwritten.
            let mut rng = substream(0, Stream::Init, 0);
            let generator = Generator::new(&hyper.architecture, hyper.noise_dim, hyper.pixels(), &mut rng);
            let critic = Critic::new(&hyper.architecture, hyper.pixels(), &mut rng);
            let mut m = WganGp {
                hyper,
                normalizer,
                generator,
                critic,
            };
            check_table(&table, &wgan_entries(&m))?;
            let WganGp { generator, critic, .. } = &mut m;
            let mut slots = generator.tensors_mut();
            slots.extend(critic.tensors_mut());
            for slot in slots {
                let v = read_f64s(&mut r, slot.len())?;
                slot.copy_from_slice(&v);
            }
            m.validate().map_err(|e| Error::format(WHAT, e))?;
            Model::WganGp(m)
        }
        Meta::Resampler { config } => {
            let (n, pixels) = table
                .first()
                .map(|e| (e.rows, e.cols))
                .ok_or_else(|| Error::format(WHAT, "empty tensor table"))?;
            check_table(&table, &resampler_entries(n, pixels))?;
            let images = read_f64s(&mut r, n * pixels)?;
            let conds = read_f64s(&mut r, n * 2)?;
            let conditions = conds
                .chunks_exact(2)
                .map(|c| ConditionVector::new(c[0], c[1]))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::format(WHAT, e))?;
            let images = Array2::from_shape_vec((n, pixels), images).expect("sized by the table");
            let data = TrainingSet::new(images, conditions)?;
            Model::Resampler(EmpiricalResampler::fit(data, config).map_err(|e| Error::format(WHAT, e))?)
        }
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::format(WHAT, "trailing bytes"));
    }
    Ok((model, seed))
}
