//! Binary little-endian formats for velocity snapshots, training pairs and
//! closure parameters.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::closures::mlp::{Dense, Mlp};
use crate::closures::nets::{ConvNet, GConvNet, GLayer, TbnnNet};
use crate::closures::{ClosureModel, ModelKind};
use crate::error::{Error, Result};
use crate::fft::C64;
use crate::filtering::SnapshotPair;
use crate::grid::Grid;
use crate::projection::LayerKind;
use crate::simulation::Snapshot;
use crate::spectral::SpectralVelocity;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"LESNAP01";
pub const PAIR_MAGIC: &[u8; 8] = b"LESSFS01";
pub const MODEL_MAGIC: &[u8; 8] = b"SGSNET01";
const VERSION: u32 = 1;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8], path: &'a Path, magic: &[u8; 8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..8] != magic {
            return Err(Error::format(
                path,
                format!("missing {} header", String::from_utf8_lossy(magic)),
            ));
        }
        Ok(Cursor { bytes, pos: 8, path })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(self.path, "unexpected end of file"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| self.bad("size overflow"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn complex(&mut self, n: usize) -> Result<Vec<C64>> {
        let v = self.f64s(2 * n)?;
        Ok(v.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect())
    }

    fn bad(&self, reason: &str) -> Error {
        Error::format(self.path, reason)
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.bad("trailing bytes after payload"));
        }
        Ok(())
    }
}

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_complex(buf: &mut Vec<u8>, data: &[C64]) {
    for z in data {
        put_f64(buf, z.re);
        put_f64(buf, z.im);
    }
}

fn grid_from_header(c: &Cursor, n: u32, length: f64) -> Result<Grid> {
    if n > 1 << 16 {
        return Err(c.bad(&format!("implausible grid size {n}")));
    }
    Grid::new(n as usize, length).map_err(|e| c.bad(&e.to_string()))
}

pub fn encode_snapshot(s: &Snapshot) -> Vec<u8> {
    let g = s.u.grid;
    let mut buf = Vec::with_capacity(36 + 48 * g.len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    put_u32(&mut buf, VERSION as usize);
    put_u32(&mut buf, g.n());
    put_f64(&mut buf, g.length());
    put_u32(&mut buf, 3);
    put_f64(&mut buf, s.time);
    for c in &s.u.comp {
        put_complex(&mut buf, c);
    }
    buf
}

pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<Snapshot> {
    let mut c = Cursor::new(bytes, path, SNAPSHOT_MAGIC)?;
    if c.u32()? != VERSION {
        return Err(c.bad("unsupported version"));
    }
    let n = c.u32()?;
    let length = c.f64()?;
    let components = c.u32()?;
    if components != 3 {
        return Err(c.bad("expected 3 velocity components"));
    }
    let time = c.f64()?;
    let grid = grid_from_header(&c, n, length)?;
    let comp = [c.complex(grid.len())?, c.complex(grid.len())?, c.complex(grid.len())?];
    c.finish()?;
    Ok(Snapshot {
        time,
        u: SpectralVelocity::from_components(grid, comp)?,
    })
}

pub fn write_snapshot(path: &Path, s: &Snapshot) -> Result<()> {
    Ok(fs::write(path, encode_snapshot(s))?)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    decode_snapshot(&fs::read(path)?, path)
}

pub fn encode_pair(p: &SnapshotPair) -> Vec<u8> {
    let g = p.u_bar.grid;
    let mut buf = Vec::with_capacity(32 + 96 * g.len());
    buf.extend_from_slice(PAIR_MAGIC);
    put_u32(&mut buf, VERSION as usize);
    put_u32(&mut buf, g.n());
    put_f64(&mut buf, g.length());
    put_f64(&mut buf, p.time);
    for c in &p.u_bar.comp {
        put_complex(&mut buf, c);
    }
    for c in 0..6 {
        for t in &p.tau {
            put_f64(&mut buf, t[c]);
        }
    }
    buf
}

pub fn decode_pair(bytes: &[u8], path: &Path) -> Result<SnapshotPair> {
    let mut c = Cursor::new(bytes, path, PAIR_MAGIC)?;
    if c.u32()? != VERSION {
        return Err(c.bad("unsupported version"));
    }
    let n = c.u32()?;
    let length = c.f64()?;
    let time = c.f64()?;
    let grid = grid_from_header(&c, n, length)?;
    let comp = [c.complex(grid.len())?, c.complex(grid.len())?, c.complex(grid.len())?];
    let mut tau = vec![[0.0; 6]; grid.len()];
    for k in 0..6 {
        let v = c.f64s(grid.len())?;
        for (t, x) in tau.iter_mut().zip(v) {
            t[k] = x;
        }
    }
    c.finish()?;
    Ok(SnapshotPair {
        time,
        u_bar: SpectralVelocity::from_components(grid, comp)?,
        tau,
    })
}

pub fn write_pair(path: &Path, p: &SnapshotPair) -> Result<()> {
    Ok(fs::write(path, encode_pair(p))?)
}

pub fn read_pair(path: &Path) -> Result<SnapshotPair> {
    decode_pair(&fs::read(path)?, path)
}

const DENSE_KIND: u8 = 0;

fn layer_header(buf: &mut Vec<u8>, kind: u8, dims: (usize, usize), channels: (usize, usize)) {
    buf.push(kind);
    put_u32(buf, dims.0);
    put_u32(buf, dims.1);
    put_u32(buf, channels.0);
    put_u32(buf, channels.1);
}

pub fn encode_model(model: &ClosureModel) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    buf.push(model.kind().tag());
    let params: Vec<f64> = match model {
        ClosureModel::NoModel | ClosureModel::Clark => {
            put_u32(&mut buf, 0);
            Vec::new()
        }
        ClosureModel::Smagorinsky { cs } => {
            put_u32(&mut buf, 0);
            vec![*cs]
        }
        ClosureModel::Tbnn(TbnnNet { net }) | ClosureModel::Conv(ConvNet { net }) => {
            put_u32(&mut buf, net.layers.len());
            for l in &net.layers {
                layer_header(&mut buf, DENSE_KIND, (l.out_dim(), l.in_dim()), (0, 0));
            }
            net.params()
        }
        ClosureModel::GConv(net) => {
            put_u32(&mut buf, net.layers.len());
            for l in &net.layers {
                layer_header(
                    &mut buf,
                    1 + l.kind.tag(),
                    (l.kind.out_dim(), l.kind.in_dim()),
                    (l.c_out, l.c_in),
                );
            }
            crate::closures::PointNet::params(net)
        }
    };
    for p in params {
        put_f64(&mut buf, p);
    }
    buf
}

struct LayerHeader {
    kind: u8,
    dims: (usize, usize),
    channels: (usize, usize),
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<ClosureModel> {
    let mut c = Cursor::new(bytes, path, MODEL_MAGIC)?;
    let tag = c.u8()?;
    let kind = ModelKind::from_tag(tag).ok_or_else(|| c.bad(&format!("unknown model tag {tag}")))?;
    let n_layers = c.u32()? as usize;
    if n_layers > 1024 {
        return Err(c.bad("implausible layer count"));
    }
    let mut headers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        headers.push(LayerHeader {
            kind: c.u8()?,
            dims: (c.u32()? as usize, c.u32()? as usize),
            channels: (c.u32()? as usize, c.u32()? as usize),
        });
    }
    let no_layers = |c: &Cursor| {
        if n_layers == 0 {
            Ok(())
        } else {
            Err(c.bad("this model has no layers"))
        }
    };
    let model = match kind {
        ModelKind::NoModel => {
            no_layers(&c)?;
            ClosureModel::NoModel
        }
        ModelKind::Clark => {
            no_layers(&c)?;
            ClosureModel::Clark
        }
        ModelKind::Smagorinsky => {
            no_layers(&c)?;
            ClosureModel::Smagorinsky { cs: c.f64()? }
        }
        ModelKind::Tbnn | ModelKind::Conv => {
            let net = read_dense(&mut c, &headers)?;
            let (i, o) = if kind == ModelKind::Tbnn { (5, 7) } else { (9, 6) };
            if net.in_dim() != i || net.out_dim() != o {
                return Err(c.bad("network input/output widths do not match the model"));
            }
            if kind == ModelKind::Tbnn {
                ClosureModel::Tbnn(TbnnNet { net })
            } else {
                ClosureModel::Conv(ConvNet { net })
            }
        }
        ModelKind::GConv => ClosureModel::GConv(read_gconv(&mut c, &headers)?),
    };
    c.finish()?;
    Ok(model)
}

fn read_dense(c: &mut Cursor, headers: &[LayerHeader]) -> Result<Mlp> {
    if headers.is_empty() {
        return Err(c.bad("network without layers"));
    }
    let mut layers = Vec::with_capacity(headers.len());
    for (l, h) in headers.iter().enumerate() {
        if h.kind != DENSE_KIND || h.channels != (0, 0) {
            return Err(c.bad("expected a dense layer"));
        }
        if l > 0 && headers[l - 1].dims.0 != h.dims.1 {
            return Err(c.bad("consecutive layer widths disagree"));
        }
        let (o, i) = h.dims;
        let w = c.f64s(o * i)?;
        let b = c.f64s(o)?;
        layers.push(Dense {
            w: Array2::from_shape_vec((o, i), w).map_err(|e| c.bad(&e.to_string()))?,
            b: Array1::from(b),
            relu: l + 1 < headers.len(),
        });
    }
    Ok(Mlp { layers })
}

fn read_gconv(c: &mut Cursor, headers: &[LayerHeader]) -> Result<GConvNet> {
    if headers.len() < 2 {
        return Err(c.bad("group network needs lift and final layers"));
    }
    let mut layers = Vec::with_capacity(headers.len());
    for (l, h) in headers.iter().enumerate() {
        let kind = h
            .kind
            .checked_sub(1)
            .and_then(LayerKind::from_tag)
            .ok_or_else(|| c.bad("expected a group layer"))?;
        let expected = if l == 0 {
            LayerKind::Lift
        } else if l + 1 == headers.len() {
            LayerKind::Final
        } else {
            LayerKind::Inner
        };
        if kind != expected || h.dims != (kind.out_dim(), kind.in_dim()) {
            return Err(c.bad("group layer sequence is malformed"));
        }
        let (c_out, c_in) = h.channels;
        let chained = if l == 0 { c_in == 1 } else { c_in == headers[l - 1].channels.0 };
        if !chained || c_out == 0 || (kind == LayerKind::Final && c_out != 1) {
            return Err(c.bad("group layer channel counts disagree"));
        }
        let theta = c.f64s(c_out * c_in * kind.expected_rank())?;
        let bias = if kind == LayerKind::Final {
            Vec::new()
        } else {
            c.f64s(c_out)?
        };
        layers.push(GLayer {
            kind,
            c_out,
            c_in,
            theta,
            bias,
        });
    }
    Ok(GConvNet::from_layers(layers))
}

pub fn write_model(path: &Path, model: &ClosureModel) -> Result<()> {
    Ok(fs::write(path, encode_model(model))?)
}

pub fn read_model(path: &Path) -> Result<ClosureModel> {
    decode_model(&fs::read(path)?, path)
}
