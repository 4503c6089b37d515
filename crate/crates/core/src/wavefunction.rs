//! Wave functions on a grid, the projection-valued measure and Gaussian
//! packet construction.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{PsdError, Result};
use crate::fft::GridFft;
use crate::grid::{Axis, Grid, Region};

/// Complex amplitudes over the cells of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amps: Vec<C64>,
}

impl WaveFunction {
    pub fn new(grid: Grid, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(PsdError::InvalidArgument(format!(
                "{} amplitudes for a grid of {} cells",
                amps.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, amps })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, amps: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let amps = grid.positions().map(f).collect();
        Self { grid, amps }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { grid: self.grid, amps: self.amps.iter().map(|a| a * factor).collect() }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(PsdError::InvalidArgument("cannot normalize a null state".into()));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn add(&self, other: &WaveFunction) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid, amps })
    }

    pub fn sub(&self, other: &WaveFunction) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid, amps })
    }

    /// Sum of a non-empty list of wave functions on one grid.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a WaveFunction>) -> Result<Self> {
        let mut iter = items.into_iter();
        let first = iter.next().ok_or_else(|| PsdError::InvalidArgument("sum of an empty list".into()))?;
        let mut acc = first.clone();
        for w in iter {
            acc.grid.check_same(&w.grid)?;
            acc.amps.iter_mut().zip(&w.amps).for_each(|(a, b)| *a += b);
        }
        Ok(acc)
    }

    /// Probability mass inside a region.
    pub fn mass_in(&self, region: &Region) -> Result<f64> {
        self.grid.check_same(region.grid())?;
        let s: f64 = self.amps.iter().zip(region.mask()).filter(|(_, &m)| m).map(|(a, _)| a.norm_sqr()).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Expectation of the position along `axis`, normalized by the norm².
    pub fn mean_position(&self, axis: usize) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            num += p * self.grid.position(i)[axis];
            den += p;
        }
        num / den
    }

    /// Expectation of the wave number along `axis`, from the spectral
    /// first moment.
    pub fn mean_momentum(&self, axis: usize) -> f64 {
        let fft = GridFft::new(&self.grid);
        let mut spec = self.amps.clone();
        fft.forward(&mut spec);
        let ks = self.grid.axis(axis).wave_numbers();
        let n1 = self.grid.shape()[1];
        let mut num = 0.0;
        let mut den = 0.0;
        for (idx, z) in spec.iter().enumerate() {
            let (i0, i1) = (idx / n1, idx % n1);
            let k = if axis == 0 { ks[i0] } else { ks[i1] };
            let p = z.norm_sqr();
            num += p * k;
            den += p;
        }
        num / den
    }
}

/// ⟨ψ|φ⟩ = Σ conj(ψ)·φ·(cell volume).
pub fn inner(psi: &WaveFunction, phi: &WaveFunction) -> Result<C64> {
    psi.grid.check_same(&phi.grid)?;
    let s: C64 = psi.amps.iter().zip(&phi.amps).map(|(a, b)| a.conj() * b).sum();
    Ok(s * psi.grid.cell_volume())
}

/// E(Δ)ψ: zero the amplitudes outside the region.
pub fn project(psi: &WaveFunction, region: &Region) -> Result<WaveFunction> {
    psi.grid.check_same(region.grid())?;
    let zero = C64::new(0.0, 0.0);
    let amps = psi.amps.iter().zip(region.mask()).map(|(&a, &m)| if m { a } else { zero }).collect();
    Ok(WaveFunction { grid: psi.grid, amps })
}

/// Parameters of a Gaussian packet. `width` is the position standard
/// deviation of |ψ|² along each axis: ψ ∝ exp(-(x-x₀)²/(4σ²) + ik·x + iφ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketParams {
    pub center: [f64; 2],
    pub momentum: [f64; 2],
    pub width: [f64; 2],
    #[serde(default)]
    pub phase: f64,
}

impl PacketParams {
    pub fn line(center: f64, momentum: f64, width: f64) -> Self {
        Self { center: [center, 0.0], momentum: [momentum, 0.0], width: [width, 1.0], phase: 0.0 }
    }
}

/// Distance from the packet center to the nearest grid boundary, in widths,
/// minimized over the grid's axes.
pub fn boundary_clearance(grid: &Grid, p: &PacketParams) -> f64 {
    grid.axes()
        .iter()
        .enumerate()
        .map(|(i, a): (usize, &Axis)| {
            let d = (p.center[i] - a.min).min(a.max() - p.center[i]);
            d / p.width[i]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Normalized Gaussian packet. Rejects widths below two cells; warns when
/// the packet sits closer than six widths to a boundary.
pub fn gaussian_packet(grid: &Grid, p: &PacketParams) -> Result<WaveFunction> {
    for (i, a) in grid.axes().iter().enumerate() {
        if !(p.width[i] > 0.0) {
            return Err(PsdError::InvalidArgument("packet width must be positive".into()));
        }
        if p.width[i] < 2.0 * a.spacing() {
            return Err(PsdError::Resolvability {
                constraint: "width >= 2 cells",
                detail: format!("width {} on axis {i} with spacing {}", p.width[i], a.spacing()),
            });
        }
    }
    if boundary_clearance(grid, p) < 6.0 {
        log::warn!("packet centered at {:?} is within six widths of the boundary", p.center);
    }
    let dim = grid.dim();
    let psi = WaveFunction::from_fn(*grid, |x| {
        let mut arg = 0.0;
        let mut phase = p.phase;
        #[allow(clippy::needless_range_loop)]
        for i in 0..dim {
            let d = x[i] - p.center[i];
            arg -= d * d / (4.0 * p.width[i] * p.width[i]);
            phase += p.momentum[i] * x[i];
        }
        C64::from_polar(arg.exp(), phase)
    });
    psi.normalized()
}

/// Serialized wave function: grid metadata plus interleaved (re, im)
/// pairs in row-major cell order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFunctionRecord {
    pub dim: usize,
    pub axes: Vec<Axis>,
    pub amplitudes: Vec<f64>,
}

const BINARY_MAGIC: &[u8; 4] = b"PSDW";

impl WaveFunction {
    pub fn to_record(&self) -> WaveFunctionRecord {
        WaveFunctionRecord {
            dim: self.grid.dim(),
            axes: self.grid.axes().to_vec(),
            amplitudes: self.amps.iter().flat_map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn from_record(rec: &WaveFunctionRecord) -> Result<Self> {
        let grid = match (rec.dim, rec.axes.as_slice()) {
            (1, [a]) => Grid::one_d(Axis::new(a.min, a.extent, a.cells)?),
            (2, [a, b]) => Grid::two_d(Axis::new(a.min, a.extent, a.cells)?, Axis::new(b.min, b.extent, b.cells)?),
            _ => return Err(PsdError::InvalidArgument("record must have dim 1 or 2 with matching axes".into())),
        };
        if rec.amplitudes.len() != 2 * grid.len() {
            return Err(PsdError::InvalidArgument("amplitude list length must be 2 × cells".into()));
        }
        let amps = rec.amplitudes.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
        Self::new(grid, amps)
    }

    /// Flat little-endian binary: magic, dim (u32), per axis (cells u64,
    /// min f64, extent f64), then (re, im) f64 pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 24 * 2 + 16 * self.amps.len());
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(self.grid.dim() as u32).to_le_bytes());
        for a in self.grid.axes() {
            out.extend_from_slice(&(a.cells as u64).to_le_bytes());
            out.extend_from_slice(&a.min.to_le_bytes());
            out.extend_from_slice(&a.extent.to_le_bytes());
        }
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = || PsdError::InvalidArgument("malformed wave function binary".into());
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + n).ok_or_else(bad)?;
            pos += n;
            Ok(s)
        };
        if take(4)? != BINARY_MAGIC {
            return Err(bad());
        }
        let dim = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        if dim != 1 && dim != 2 {
            return Err(bad());
        }
        let mut axes = Vec::with_capacity(dim);
        for _ in 0..dim {
            let cells = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
            let min = f64::from_le_bytes(take(8)?.try_into().unwrap());
            let extent = f64::from_le_bytes(take(8)?.try_into().unwrap());
            axes.push(Axis::new(min, extent, cells)?);
        }
        let grid = if dim == 1 { Grid::one_d(axes[0]) } else { Grid::two_d(axes[0], axes[1]) };
        let mut amps = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = f64::from_le_bytes(take(8)?.try_into().unwrap());
            let im = f64::from_le_bytes(take(8)?.try_into().unwrap());
            amps.push(C64::new(re, im));
        }
        if pos != bytes.len() {
            return Err(bad());
        }
        Self::new(grid, amps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Partition;

    fn line() -> Grid {
        Grid::line(80.0, 1024).unwrap()
    }

    #[test]
    fn packet_is_normalized_and_centered() {
        let g = line();
        let psi = gaussian_packet(&g, &PacketParams::line(3.3, 0.0, 2.0)).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        assert!((psi.mean_position(0) - 3.3).abs() < 0.5 * g.axis(0).spacing());
        assert!((inner(&psi, &psi).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn packet_mean_momentum() {
        let g = line();
        let psi = gaussian_packet(&g, &PacketParams::line(0.0, 1.7, 2.0)).unwrap();
        let dk = 2.0 * std::f64::consts::PI / g.axis(0).extent;
        assert!((psi.mean_momentum(0) - 1.7).abs() < dk);
    }

    #[test]
    fn narrow_packet_rejected() {
        let g = line();
        let err = gaussian_packet(&g, &PacketParams::line(0.0, 0.0, 0.1)).unwrap_err();
        assert!(matches!(err, PsdError::Resolvability { .. }));
    }

    #[test]
    fn disjoint_supports_are_orthogonal() {
        let g = Grid::line(8.0, 8).unwrap();
        let a = WaveFunction::from_fn(g, |x| if x[0] < 0.0 { C64::new(1.0, 2.0) } else { C64::new(0.0, 0.0) });
        let b = WaveFunction::from_fn(g, |x| if x[0] >= 0.0 { C64::new(-3.0, 1.0) } else { C64::new(0.0, 0.0) });
        assert_eq!(inner(&a, &b).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn projection_complement_reconstructs_bit_exactly() {
        let g = line();
        let psi = gaussian_packet(&g, &PacketParams::line(1.0, 0.8, 3.0)).unwrap();
        let r = Partition::split_axis0(g, 0.7).block(0);
        let sum = project(&psi, &r).unwrap().add(&project(&psi, &r.complement()).unwrap()).unwrap();
        assert_eq!(sum, psi);
        assert_eq!(project(&psi, &Region::all(g)).unwrap(), psi);
        assert_eq!(project(&psi, &Region::none(g)).unwrap().norm_sqr(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = WaveFunction::zeros(Grid::line(8.0, 8).unwrap());
        let b = WaveFunction::zeros(Grid::line(8.0, 16).unwrap());
        assert!(matches!(inner(&a, &b), Err(PsdError::GridMismatch(_))));
    }

    #[test]
    fn binary_and_json_records() {
        let g = Grid::plane([6.0, 4.0], [8, 4]).unwrap();
        let psi = WaveFunction::from_fn(g, |x| C64::new(x[0], x[1] * 0.5));
        let back = WaveFunction::from_bytes(&psi.to_bytes()).unwrap();
        assert_eq!(back, psi);
        let json = serde_json::to_string(&psi.to_record()).unwrap();
        let rec: WaveFunctionRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(WaveFunction::from_record(&rec).unwrap(), psi);
        assert!(WaveFunction::from_bytes(&psi.to_bytes()[..20]).is_err());
    }
}
