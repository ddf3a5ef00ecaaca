use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::ArrayGeometry;

/// Magic bytes opening every CSM file.
pub const CSM_MAGIC: &[u8; 8] = b"AEROCSM1";
const CSM_VERSION: u32 = 1;

/// Per-frequency Hermitian matrices of microphone cross-spectra, Pa²/Hz.
///
/// Storage is one flat row-major buffer, `[freq][row][col]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSpectralMatrix {
    freqs_hz: Vec<f64>,
    n_mics: usize,
    data: Vec<Complex64>,
    num_averages: usize,
    geometry_hash: u64,
}

impl CrossSpectralMatrix {
    pub fn new(
        freqs_hz: Vec<f64>,
        n_mics: usize,
        data: Vec<Complex64>,
        num_averages: usize,
        geometry_hash: u64,
    ) -> Result<Self> {
        if data.len() != freqs_hz.len() * n_mics * n_mics {
            return Err(Error::Shape(format!(
                "{} values do not fill {} matrices of {n_mics}x{n_mics}",
                data.len(),
                freqs_hz.len()
            )));
        }
        if freqs_hz.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Input("CSM frequencies must be strictly increasing".into()));
        }
        Ok(Self {
            freqs_hz,
            n_mics,
            data,
            num_averages,
            geometry_hash,
        })
    }

    pub fn zeros(freqs_hz: Vec<f64>, n_mics: usize, geometry_hash: u64) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); freqs_hz.len() * n_mics * n_mics];
        Self {
            freqs_hz,
            n_mics,
            data,
            num_averages: 0,
            geometry_hash,
        }
    }

    /// Same matrices tagged with the hash of `geometry`.
    pub fn with_geometry(mut self, geometry: &ArrayGeometry) -> Result<Self> {
        if geometry.len() != self.n_mics {
            return Err(Error::Shape(format!(
                "CSM has {} microphones, geometry has {}",
                self.n_mics,
                geometry.len()
            )));
        }
        self.geometry_hash = geometry_hash(geometry);
        Ok(self)
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn n_freqs(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn n_mics(&self) -> usize {
        self.n_mics
    }

    pub fn num_averages(&self) -> usize {
        self.num_averages
    }

    pub fn geometry_hash(&self) -> u64 {
        self.geometry_hash
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Row-major matrix of bin `f`.
    pub fn matrix(&self, f: usize) -> &[Complex64] {
        let mm = self.n_mics * self.n_mics;
        &self.data[f * mm..(f + 1) * mm]
    }

    pub fn get(&self, f: usize, m: usize, n: usize) -> Complex64 {
        self.matrix(f)[m * self.n_mics + n]
    }

    pub fn auto_spectrum(&self, f: usize, m: usize) -> f64 {
        self.get(f, m, m).re
    }

    /// Largest `|C_mn - conj(C_nm)|` over all bins, relative to each bin's largest entry.
    pub fn max_hermitian_error(&self) -> f64 {
        let n = self.n_mics;
        let mut worst: f64 = 0.0;
        for f in 0..self.n_freqs() {
            let c = self.matrix(f);
            let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if scale == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in i..n {
                    let e = (c[i * n + j] - c[j * n + i].conj()).norm() / scale;
                    worst = worst.max(e);
                }
            }
        }
        worst
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n_mics != other.n_mics || self.freqs_hz != other.freqs_hz {
            return Err(Error::Shape(format!(
                "CSM axes differ: {} mics / {} bins vs {} mics / {} bins",
                self.n_mics,
                self.n_freqs(),
                other.n_mics,
                other.n_freqs()
            )));
        }
        if self.geometry_hash != other.geometry_hash {
            return Err(Error::Shape("CSMs were recorded with different array geometries".into()));
        }
        Ok(())
    }
}

/// Element-wise `signal - noise`. Diagonals may turn negative and are kept.
pub fn denoise_csm(signal: &CrossSpectralMatrix, noise: &CrossSpectralMatrix) -> Result<CrossSpectralMatrix> {
    signal.check_compatible(noise)?;
    let data = signal.data.iter().zip(&noise.data).map(|(a, b)| a - b).collect();
    Ok(CrossSpectralMatrix {
        data,
        num_averages: signal.num_averages.min(noise.num_averages),
        ..signal.clone()
    })
}

/// Element-wise sum of CSMs of mutually uncorrelated sources.
pub fn superpose_csms(csms: &[CrossSpectralMatrix]) -> Result<CrossSpectralMatrix> {
    let (first, rest) = csms
        .split_first()
        .ok_or_else(|| Error::Shape("nothing to superpose".into()))?;
    let mut out = first.clone();
    for c in rest {
        out.check_compatible(c)?;
        for (a, b) in out.data.iter_mut().zip(&c.data) {
            *a += b;
        }
        out.num_averages = out.num_averages.min(c.num_averages);
    }
    Ok(out)
}

/// First 8 bytes (little-endian) of SHA-256 over the microphone coordinates
/// written as little-endian `f64` triples.
pub fn geometry_hash(geometry: &ArrayGeometry) -> u64 {
    let mut h = Sha256::new();
    for p in geometry.mic_positions() {
        for v in p {
            h.update(v.to_le_bytes());
        }
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Writes the binary CSM container. Values are narrowed to `complex64`.
pub fn write_csm<W: Write>(mut w: W, csm: &CrossSpectralMatrix) -> Result<()> {
    let as_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in u32")))
    };
    w.write_all(CSM_MAGIC)?;
    w.write_all(&CSM_VERSION.to_le_bytes())?;
    w.write_all(&as_u32(csm.n_mics, "mic count")?.to_le_bytes())?;
    w.write_all(&as_u32(csm.n_freqs(), "bin count")?.to_le_bytes())?;
    w.write_all(&as_u32(csm.num_averages, "average count")?.to_le_bytes())?;
    w.write_all(&csm.geometry_hash.to_le_bytes())?;
    for f in &csm.freqs_hz {
        w.write_all(&f.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(csm.data.len() * 8);
    for c in &csm.data {
        buf.extend_from_slice(&(c.re as f32).to_le_bytes());
        buf.extend_from_slice(&(c.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Reads a container written by [`write_csm`].
pub fn read_csm<R: Read>(mut r: R) -> Result<CrossSpectralMatrix> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic)?;
    if &magic != CSM_MAGIC {
        return Err(Error::Format("not a CSM file (bad magic)".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut next_u32 = |r: &mut R| -> Result<u32> {
        read_exact(r, &mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = next_u32(&mut r)?;
    if version != CSM_VERSION {
        return Err(Error::Format(format!("unsupported CSM version {version}")));
    }
    let n_mics = next_u32(&mut r)? as usize;
    let n_freqs = next_u32(&mut r)? as usize;
    let num_averages = next_u32(&mut r)? as usize;
    let mut u64buf = [0u8; 8];
    read_exact(&mut r, &mut u64buf)?;
    let geometry_hash = u64::from_le_bytes(u64buf);
    let mut freqs = Vec::with_capacity(n_freqs);
    for _ in 0..n_freqs {
        read_exact(&mut r, &mut u64buf)?;
        freqs.push(f64::from_le_bytes(u64buf));
    }
    let n_vals = n_freqs
        .checked_mul(n_mics)
        .and_then(|v| v.checked_mul(n_mics))
        .ok_or_else(|| Error::Format("CSM dimensions overflow".into()))?;
    let mut payload = vec![0u8; n_vals * 8];
    read_exact(&mut r, &mut payload)?;
    let data = payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after CSM payload".into()));
    }
    CrossSpectralMatrix::new(freqs, n_mics, data, num_averages, geometry_hash)
        .map_err(|e| Error::Format(e.to_string()))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated CSM file".into()),
        _ => Error::Io(e),
    })
}
