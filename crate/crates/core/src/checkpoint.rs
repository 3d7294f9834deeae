//! Binary restart files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "NSSETDCK" | version u32 | n u64 | length f64 | eps f64 | kappa f64 | a f64
//! | dealias u8 | scheme u8 | t_start f64 | segment_steps u64 | dt f64 | step_count u64
//! | u^n, u^{n-1}, u^{n-2} as n*n f64 rasters | FNV-1a 64 checksum of everything before
//! ```
//!
//! Files are written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::schemes::{Integrator, Scheme, SchemeState};
use crate::spectral::Field;

pub const MAGIC: &[u8; 8] = b"NSSETDCK";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 * 5 + 2 + 8 * 4;

/// Everything needed to continue a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub n: usize,
    pub length: f64,
    pub params: ModelParams,
    pub scheme: Scheme,
    pub t_start: f64,
    pub segment_steps: u64,
    pub dt: f64,
    pub step_count: u64,
    /// `[u^n, u^{n-1}, u^{n-2}]`
    pub history: [Field; 3],
}

impl Checkpoint {
    pub fn capture(integrator: &Integrator, state: &SchemeState) -> Self {
        Self {
            n: integrator.grid().n(),
            length: integrator.grid().length(),
            params: *integrator.params(),
            scheme: integrator.scheme(),
            t_start: state.segment_start(),
            segment_steps: state.segment_steps(),
            dt: state.dt(),
            step_count: state.step_count(),
            history: state.history().clone(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t_start + self.segment_steps as f64 * self.dt
    }

    /// Rebuilds the scheme state; the integrator must match grid and model.
    pub fn restore(&self, integrator: &mut Integrator) -> Result<SchemeState> {
        let g = integrator.grid();
        if g.n() != self.n || g.length() != self.length {
            return Err(Error::Checkpoint(format!(
                "grid mismatch: checkpoint has N = {}, L = {}, integrator has N = {}, L = {}",
                self.n,
                self.length,
                g.n(),
                g.length()
            )));
        }
        if *integrator.params() != self.params || integrator.scheme() != self.scheme {
            return Err(Error::Checkpoint("model parameters or scheme differ from the checkpoint".into()));
        }
        integrator.restore(self.history.clone(), self.t_start, self.segment_steps, self.dt, self.step_count)
    }

    /// Refuses to continue a run under a different grid, model, or scheme.
    pub fn check_config(&self, cfg: &RunConfig) -> Result<()> {
        let g = cfg.grid_config()?;
        let mut diffs = Vec::new();
        if g.n != self.n {
            diffs.push(format!("N {} vs {}", self.n, g.n));
        }
        if g.length != self.length {
            diffs.push(format!("L {} vs {}", self.length, g.length));
        }
        if cfg.model != self.params {
            diffs.push(format!("model {:?} vs {:?}", self.params, cfg.model));
        }
        if cfg.scheme != self.scheme {
            diffs.push(format!("scheme {:?} vs {:?}", self.scheme, cfg.scheme));
        }
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(Error::Checkpoint(format!("checkpoint does not match config: {}", diffs.join(", "))))
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let nn = self.n * self.n;
        let mut b = Vec::with_capacity(HEADER_LEN + 3 * nn * 8 + 8);
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(self.n as u64).to_le_bytes());
        for v in [self.length, self.params.eps, self.params.kappa, self.params.a] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.push(self.params.dealias as u8);
        b.push(scheme_code(self.scheme));
        b.extend_from_slice(&self.t_start.to_le_bytes());
        b.extend_from_slice(&self.segment_steps.to_le_bytes());
        b.extend_from_slice(&self.dt.to_le_bytes());
        b.extend_from_slice(&self.step_count.to_le_bytes());
        for f in &self.history {
            for v in f.values() {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        let sum = fnv1a64(&b);
        b.extend_from_slice(&sum.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER_LEN + 8 {
            return Err(Error::Checkpoint(format!("file too short ({} bytes)", b.len())));
        }
        if &b[..8] != MAGIC {
            return Err(Error::Checkpoint("bad magic, not a checkpoint file".into()));
        }
        let (body, tail) = b.split_at(b.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
        if fnv1a64(body) != stored {
            return Err(Error::Checkpoint("checksum mismatch, file is corrupt or truncated".into()));
        }
        let mut r = Reader { b: body, pos: 8 };
        let version = u32::from_le_bytes(r.take::<4>());
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}, expected {VERSION}")));
        }
        let n = r.u64() as usize;
        let length = r.f64();
        let (eps, kappa, a) = (r.f64(), r.f64(), r.f64());
        let dealias = match r.take::<1>()[0] {
            0 => false,
            1 => true,
            x => return Err(Error::Checkpoint(format!("bad dealias flag {x}"))),
        };
        let scheme = scheme_from_code(r.take::<1>()[0])?;
        let t_start = r.f64();
        let segment_steps = r.u64();
        let dt = r.f64();
        let step_count = r.u64();
        let nn = n.checked_mul(n).ok_or_else(|| Error::Checkpoint(format!("absurd grid size {n}")))?;
        if body.len() - HEADER_LEN != 3 * nn * 8 {
            return Err(Error::Checkpoint(format!(
                "payload has {} bytes, header N = {n} needs {}",
                body.len() - HEADER_LEN,
                3 * nn * 8
            )));
        }
        let mut raster = || -> Result<Field> {
            let v: Vec<f64> = (0..nn).map(|_| r.f64()).collect();
            Field::from_values(n, v)
        };
        let history = [raster()?, raster()?, raster()?];
        let mut params = ModelParams::new(eps, kappa, a);
        params.dealias = dealias;
        Ok(Self { n, length, params, scheme, t_start, segment_steps, dt, step_count, history })
    }
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> [u8; K] {
        let out = self.b[self.pos..self.pos + K].try_into().expect("length checked");
        self.pos += K;
        out
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take::<8>())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take::<8>())
    }
}

fn scheme_code(s: Scheme) -> u8 {
    match s {
        Scheme::Etd1 => 1,
        Scheme::Etdms2 => 2,
        Scheme::Etd3 => 3,
    }
}

fn scheme_from_code(c: u8) -> Result<Scheme> {
    match c {
        1 => Ok(Scheme::Etd1),
        2 => Ok(Scheme::Etdms2),
        3 => Ok(Scheme::Etd3),
        _ => Err(Error::Checkpoint(format!("unknown scheme code {c}"))),
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &byte in data {
        h ^= byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Writes to `path.tmp` and renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &ck.to_bytes())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::StartupPolicy;
    use crate::spectral::SpectralGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let mut field = || Field::from_values(n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let mut params = ModelParams::new(0.1, 0.25, 3.5);
        params.dealias = true;
        Checkpoint {
            n,
            length: 2.5,
            params,
            scheme: Scheme::Etdms2,
            t_start: 0.125,
            segment_steps: 17,
            dt: 1.0 / 3.0,
            step_count: 40,
            history: [field(), field(), field()],
        }
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/ck.bin");
        write_checkpoint(&ck, &path).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), ck);
        assert!(!dir.path().join("sub/ck.bin.tmp").exists());
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample().to_bytes();
        for cut in [0, 10, HEADER_LEN, bytes.len() - 9, bytes.len() - 1] {
            assert!(Checkpoint::from_bytes(&bytes[..cut]).is_err(), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 5] ^= 0x10;
        let err = Checkpoint::from_bytes(&flipped).unwrap_err();
        assert!(err.to_string().contains("checksum"));
        let mut wrong_version = bytes[..bytes.len() - 8].to_vec();
        wrong_version[8] = 9;
        let sum = fnv1a64(&wrong_version);
        wrong_version.extend_from_slice(&sum.to_le_bytes());
        assert!(Checkpoint::from_bytes(&wrong_version).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn restore_refuses_other_grid() {
        let ck = sample();
        let grid = SpectralGrid::new(8, 2.5).unwrap();
        let mut it = Integrator::new(grid, ck.params, ck.scheme).unwrap();
        assert!(ck.restore(&mut it).is_err());
        let grid = SpectralGrid::new(6, 2.5).unwrap();
        let mut it = Integrator::new(grid, ModelParams::new(0.1, 0.25, 1.0), ck.scheme).unwrap();
        assert!(ck.restore(&mut it).is_err());
    }

    #[test]
    fn capture_then_restore_continues_identically() {
        let grid = SpectralGrid::new(8, 1.0).unwrap();
        let p = ModelParams::new(0.2, 0.25, 1.0);
        let mut it = Integrator::new(grid.clone(), p, Scheme::Etd3).unwrap();
        let u0 = Field::from_fn(&grid, |x, y| 0.1 * (6.0 * x).sin() * (2.0 * std::f64::consts::PI * y).cos());
        let mut s = it.init_state(&u0, 0.0, 0.01, StartupPolicy::CopyInitial).unwrap();
        for _ in 0..3 {
            it.step(&mut s).unwrap();
        }
        let ck = Checkpoint::from_bytes(&Checkpoint::capture(&it, &s).to_bytes()).unwrap();
        let mut r = ck.restore(&mut it).unwrap();
        assert_eq!(ck.t(), s.t());
        for _ in 0..3 {
            it.step(&mut s).unwrap();
            it.step(&mut r).unwrap();
        }
        assert_eq!(s.history(), r.history());
    }
}
