//! Model checkpoints.
//!
//! ```text
//! "SKCK"  u32 version  u8 variant
//! u32 classes, k, edge_hidden, edge_out, emb_dims, fourier_grid
//! 4 × (u32 grid_size, u32 window_size, u32 stride, u8 smooth_init, u8 window, f64 kaiser_beta)
//! u32 class-name count, then per name: u32 byte length + UTF-8
//! u32 tensor count, then per tensor: u32 length + f32 values
//! ```
//! All fields little-endian; tensors in the order of [`LiteDgcnn::params`].

use std::fs;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{LiteDgcnn, ModelConfig, ModelVariant, StftLayerSpec};
use crate::ndcore::{Rng, Tensor};
use crate::windows::WindowKind;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SKCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A model plus the class names it was trained on.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: LiteDgcnn<f32>,
    pub class_names: Vec<String>,
}

fn u32_field(v: usize, what: &str) -> Result<[u8; 4]> {
    u32::try_from(v).map(u32::to_le_bytes).map_err(|_| Error::Checkpoint(format!("{what} = {v} does not fit in u32")))
}

pub fn write_checkpoint_to(w: &mut impl Write, model: &LiteDgcnn<f32>, class_names: &[String]) -> Result<()> {
    let c = model.config();
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&[c.variant.tag()])?;
    for (v, what) in [
        (c.classes, "classes"),
        (c.k, "k"),
        (c.edge_hidden, "edge_hidden"),
        (c.edge_out, "edge_out"),
        (c.emb_dims, "emb_dims"),
        (c.fourier_grid, "fourier_grid"),
    ] {
        w.write_all(&u32_field(v, what)?)?;
    }
    for s in &c.stft {
        w.write_all(&u32_field(s.grid_size, "grid_size")?)?;
        w.write_all(&u32_field(s.window_size, "window_size")?)?;
        w.write_all(&u32_field(s.stride, "stride")?)?;
        w.write_all(&[s.smooth_init as u8, s.window.tag()])?;
        w.write_all(&s.kaiser_beta.to_le_bytes())?;
    }
    w.write_all(&u32_field(class_names.len(), "class count")?)?;
    for name in class_names {
        w.write_all(&u32_field(name.len(), "name length")?)?;
        w.write_all(name.as_bytes())?;
    }
    let params = model.params();
    w.write_all(&u32_field(params.len(), "tensor count")?)?;
    for p in params {
        w.write_all(&u32_field(p.len(), "tensor length")?)?;
        for &v in p.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_checkpoint(path: impl AsRef<Path>, model: &LiteDgcnn<f32>, class_names: &[String]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_checkpoint_to(&mut w, model, class_names)?;
    w.flush()?;
    Ok(())
}

struct Reader<'a, R: Read>(&'a mut R);

impl<R: Read> Reader<'_, R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Checkpoint("file is truncated".into()),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes()?) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()?;
        let mut buf = Vec::new();
        (&mut *self.0).take(len as u64).read_to_end(&mut buf)?;
        if buf.len() != len {
            return Err(Error::Checkpoint("file is truncated".into()));
        }
        String::from_utf8(buf).map_err(|_| Error::Checkpoint("class name is not UTF-8".into()))
    }
}

/// Reads a checkpoint; with `expected`, a different variant is rejected.
pub fn read_checkpoint_from(r: &mut impl Read, expected: Option<ModelVariant>) -> Result<Checkpoint> {
    let mut rd = Reader(r);
    if &rd.bytes::<4>()? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = rd.u32()?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(Error::Checkpoint(format!("checkpoint version {version} is not supported")));
    }
    let variant = ModelVariant::from_tag(rd.u8()?)?;
    if let Some(want) = expected {
        if want != variant {
            return Err(Error::Checkpoint(format!("checkpoint holds a {variant} model, expected {want}")));
        }
    }
    let classes = rd.u32()?;
    let k = rd.u32()?;
    let edge_hidden = rd.u32()?;
    let edge_out = rd.u32()?;
    let emb_dims = rd.u32()?;
    let fourier_grid = rd.u32()?;
    let mut stft = [StftLayerSpec::new(1, 1, 1, false, WindowKind::Boxcar); 4];
    for s in &mut stft {
        s.grid_size = rd.u32()?;
        s.window_size = rd.u32()?;
        s.stride = rd.u32()?;
        s.smooth_init = match rd.u8()? {
            0 => false,
            1 => true,
            v => return Err(Error::Checkpoint(format!("bad smooth flag {v}"))),
        };
        s.window = WindowKind::from_tag(rd.u8()?).map_err(|e| Error::Checkpoint(e.to_string()))?;
        s.kaiser_beta = rd.f64()?;
    }
    let config = ModelConfig { variant, classes, k, edge_hidden, edge_out, emb_dims, stft, fourier_grid };
    config.validate().map_err(|e| Error::Checkpoint(format!("invalid model config: {e}")))?;

    let names = rd.u32()?;
    if names != 0 && names != classes {
        return Err(Error::Checkpoint(format!("{names} class names for {classes} classes")));
    }
    let class_names = (0..names).map(|_| rd.string()).collect::<Result<Vec<_>>>()?;

    let mut model = LiteDgcnn::<f32>::build(config, &mut Rng::new(0))?;
    let count = rd.u32()?;
    let mut params = model.params_mut();
    if count != params.len() {
        return Err(Error::Checkpoint(format!("{count} tensors, model has {}", params.len())));
    }
    for (i, p) in params.iter_mut().enumerate() {
        let len = rd.u32()?;
        if len != p.len() {
            return Err(Error::Checkpoint(format!("tensor {i}: length {len}, expected {}", p.len())));
        }
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let v = f32::from_le_bytes(rd.bytes()?);
            if !v.is_finite() {
                return Err(Error::Checkpoint(format!("tensor {i} holds a non-finite value")));
            }
            data.push(v);
        }
        **p = Tensor::new(p.shape(), data)?;
    }
    if rd.0.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Checkpoint("trailing bytes after the last tensor".into()));
    }
    Ok(Checkpoint { model, class_names })
}

pub fn read_checkpoint(path: impl AsRef<Path>, expected: Option<ModelVariant>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    read_checkpoint_from(&mut BufReader::new(file), expected)
}
