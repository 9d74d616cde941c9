//! Finite-difference generator on a uniform grid with Dirichlet closure.
//!
//! Second-order terms are written in flux form with the coefficients sampled
//! at cell midpoints, and the coupling is sampled at nodes. With the mass
//! matrix `M = blockdiag(a h DᵀD, h I, h DᵀD, h I)` this makes
//! `sᵀ M A s = -h Σ b |Dv|² - h Σ d |Dz|²` an exact identity.

use crate::error::{Error, Result};
use crate::linalg::{BandedMatrix, CsrMatrix, Scalar};
use crate::model::SystemConfig;

/// Minimum number of midpoints inside a support before a grid counts as
/// resolving it.
pub const MIN_MIDPOINTS_PER_SUPPORT: usize = 4;

/// Uniform grid with `n` interior nodes `x_j = j h`, `j = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub length: f64,
    /// Profiles whose support holds fewer than [`MIN_MIDPOINTS_PER_SUPPORT`]
    /// midpoints.
    pub under_resolved: Vec<&'static str>,
}

impl Grid {
    /// Coordinate of the interior node with zero-based index `i`.
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Coordinate of midpoint `m` in `0..=n`, between nodes `m` and `m + 1`
    /// (boundary nodes included).
    pub fn midpoint(&self, m: usize) -> f64 {
        (m as f64 + 0.5) * self.h
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..=self.n).map(|m| self.midpoint(m)).collect()
    }

    pub fn is_under_resolved(&self) -> bool {
        !self.under_resolved.is_empty()
    }
}

pub fn build_grid(cfg: &SystemConfig, n: usize) -> Result<Grid> {
    if n < 2 {
        return Err(Error::BadParameters(format!("need at least 2 interior nodes, got {n}")));
    }
    let h = cfg.length / (n + 1) as f64;
    let mut grid = Grid { n, h, length: cfg.length, under_resolved: Vec::new() };
    for (name, p) in cfg.profiles() {
        if p.is_zero() {
            continue;
        }
        let inside = (0..=n).filter(|&m| p.at(grid.midpoint(m)) != 0.0).count();
        if inside == 0 {
            return Err(Error::ResolutionTooCoarse { profile: name });
        }
        if inside < MIN_MIDPOINTS_PER_SUPPORT {
            grid.under_resolved.push(name);
        }
    }
    Ok(grid)
}

/// Which of the four state components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    U = 0,
    V = 1,
    Y = 2,
    Z = 3,
}

/// Discrete `(u, v, y, z)` on the interior nodes, stored block after block.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T = f64> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> StateVector<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); 4 * n] }
    }

    pub fn from_blocks(u: &[T], v: &[T], y: &[T], z: &[T]) -> Result<Self> {
        let n = u.len();
        for b in [v, y, z] {
            if b.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: b.len() });
            }
        }
        let mut data = Vec::with_capacity(4 * n);
        for b in [u, v, y, z] {
            data.extend_from_slice(b);
        }
        Ok(Self { n, data })
    }

    /// Wraps a flat `(u | v | y | z)` vector.
    pub fn from_flat(data: Vec<T>) -> Result<Self> {
        if !data.len().is_multiple_of(4) {
            return Err(Error::DimensionMismatch {
                expected: 4 * (data.len() / 4),
                found: data.len(),
            });
        }
        Ok(Self { n: data.len() / 4, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, b: Block) -> &[T] {
        let k = b as usize;
        &self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn block_mut(&mut self, b: Block) -> &mut [T] {
        let k = b as usize;
        &mut self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn u(&self) -> &[T] {
        self.block(Block::U)
    }
    pub fn v(&self) -> &[T] {
        self.block(Block::V)
    }
    pub fn y(&self) -> &[T] {
        self.block(Block::Y)
    }
    pub fn z(&self) -> &[T] {
        self.block(Block::Z)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: T, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + alpha * b).collect();
        Self { n: self.n, data }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&a| alpha * a).collect() }
    }
}

/// Lower-bidiagonal Cholesky factor of a symmetric tridiagonal block.
#[derive(Debug, Clone)]
struct Bidiagonal {
    diag: Vec<f64>,
    /// `sub[i] = L[i + 1][i]`.
    sub: Vec<f64>,
}

impl Bidiagonal {
    fn cholesky(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut l = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let mut d = diag[i];
            if i > 0 {
                let m = off[i - 1] / l[i - 1];
                s.push(m);
                d -= m * m;
            }
            if !(d > 0.0) {
                return Err(Error::SingularSystem { row: i });
            }
            l.push(d.sqrt());
        }
        Ok(Self { diag: l, sub: s })
    }

    fn apply_lt<T: Scalar>(&self, x: &mut [T]) {
        let n = x.len();
        for i in 0..n {
            let mut acc = x[i] * T::from_real(self.diag[i]);
            if i + 1 < n {
                acc += x[i + 1] * T::from_real(self.sub[i]);
            }
            x[i] = acc;
        }
    }

    fn apply_l<T: Scalar>(&self, x: &mut [T]) {
        for i in (0..x.len()).rev() {
            let mut acc = x[i] * T::from_real(self.diag[i]);
            if i > 0 {
                acc += x[i - 1] * T::from_real(self.sub[i - 1]);
            }
            x[i] = acc;
        }
    }

    fn solve_l<T: Scalar>(&self, x: &mut [T]) {
        for i in 0..x.len() {
            let mut acc = x[i];
            if i > 0 {
                acc -= x[i - 1] * T::from_real(self.sub[i - 1]);
            }
            x[i] = acc / T::from_real(self.diag[i]);
        }
    }

    fn solve_lt<T: Scalar>(&self, x: &mut [T]) {
        let n = x.len();
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= x[i + 1] * T::from_real(self.sub[i]);
            }
            x[i] = acc / T::from_real(self.diag[i]);
        }
    }
}

/// Cholesky factor `L` of the mass matrix, `M = L Lᵀ`.
///
/// `M` is block diagonal with tridiagonal blocks, so `L` is block
/// lower-bidiagonal and every product or solve is linear in the size.
#[derive(Debug, Clone)]
pub struct MassFactor {
    n: usize,
    blocks: [Bidiagonal; 4],
}

impl MassFactor {
    fn new(n: usize, h: f64, a: f64) -> Result<Self> {
        let stiff = |k: f64| Bidiagonal::cholesky(&vec![2.0 * k / h; n], &vec![-k / h; n - 1]);
        let lumped = || Bidiagonal::cholesky(&vec![h; n], &vec![0.0; n - 1]);
        Ok(Self { n, blocks: [stiff(a)?, lumped()?, stiff(1.0)?, lumped()?] })
    }

    fn for_blocks<T: Scalar>(&self, x: &mut [T], f: impl Fn(&Bidiagonal, &mut [T])) {
        assert_eq!(x.len(), 4 * self.n);
        for (blk, chunk) in self.blocks.iter().zip(x.chunks_mut(self.n)) {
            f(blk, chunk);
        }
    }

    /// `x <- Lᵀ x`.
    pub fn apply_lt<T: Scalar>(&self, x: &mut [T]) {
        self.for_blocks(x, Bidiagonal::apply_lt);
    }

    /// `x <- L x`.
    pub fn apply_l<T: Scalar>(&self, x: &mut [T]) {
        self.for_blocks(x, Bidiagonal::apply_l);
    }

    /// `x <- L⁻¹ x`.
    pub fn solve_l<T: Scalar>(&self, x: &mut [T]) {
        self.for_blocks(x, Bidiagonal::solve_l);
    }

    /// `x <- L⁻ᵀ x`.
    pub fn solve_lt<T: Scalar>(&self, x: &mut [T]) {
        self.for_blocks(x, Bidiagonal::solve_lt);
    }

    /// Dense lower factor, block-ordered. Intended for small `n`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let dim = 4 * self.n;
        let mut out = vec![vec![0.0; dim]; dim];
        for (k, blk) in self.blocks.iter().enumerate() {
            let off = k * self.n;
            for i in 0..self.n {
                out[off + i][off + i] = blk.diag[i];
                if i + 1 < self.n {
                    out[off + i + 1][off + i] = blk.sub[i];
                }
            }
        }
        out
    }
}

/// Map from block ordering `(u | v | y | z)` to node-interleaved ordering,
/// in which the generator has bandwidth 7.
#[inline]
pub fn interleaved_index(n: usize, k: usize) -> usize {
    let (block, j) = (k / n, k % n);
    4 * j + block
}

/// The assembled generator `A` together with the mass matrix `M`.
#[derive(Debug, Clone)]
pub struct DiscreteGenerator {
    pub cfg: SystemConfig,
    pub grid: Grid,
    /// `b` at midpoints `0..=n`.
    pub b_mid: Vec<f64>,
    /// `d` at midpoints `0..=n`.
    pub d_mid: Vec<f64>,
    /// `c` at interior nodes.
    pub c_node: Vec<f64>,
    matrix: CsrMatrix<f64>,
    mass: CsrMatrix<f64>,
    mass_factor: MassFactor,
}

/// Triplets of the flux-form operator `w -> (κ w_x)_x` on a block.
fn flux_laplacian(
    trip: &mut Vec<(usize, usize, f64)>,
    row_off: usize,
    col_off: usize,
    kappa: &[f64],
    h: f64,
) {
    let n = kappa.len() - 1;
    let h2 = h * h;
    for i in 0..n {
        let (kl, kr) = (kappa[i], kappa[i + 1]);
        trip.push((row_off + i, col_off + i, -(kl + kr) / h2));
        if i > 0 {
            trip.push((row_off + i, col_off + i - 1, kl / h2));
        }
        if i + 1 < n {
            trip.push((row_off + i, col_off + i + 1, kr / h2));
        }
    }
}

pub fn assemble_generator(cfg: &SystemConfig, grid: &Grid) -> Result<DiscreteGenerator> {
    let (n, h, len) = (grid.n, grid.h, cfg.length);
    if (grid.length - len).abs() > 0.0 {
        return Err(Error::BadParameters("grid was built for a different domain".into()));
    }
    let mids = grid.midpoints();
    let nodes = grid.nodes();
    let sample = |p: &crate::model::CoefficientProfile, xs: &[f64]| -> Result<Vec<f64>> {
        xs.iter().map(|&x| p.eval(x, len)).collect()
    };
    let b_mid = sample(&cfg.profile_b, &mids)?;
    let d_mid = sample(&cfg.profile_d, &mids)?;
    let c_node = sample(&cfg.profile_c, &nodes)?;
    let a = cfg.wave_speed_sq;

    let (u, v, y, z) = (0, n, 2 * n, 3 * n);
    let mut trip = Vec::with_capacity(22 * n);
    for i in 0..n {
        trip.push((u + i, v + i, 1.0));
        trip.push((y + i, z + i, 1.0));
        trip.push((v + i, z + i, -c_node[i]));
        trip.push((z + i, v + i, c_node[i]));
    }
    flux_laplacian(&mut trip, v, u, &vec![a; n + 1], h);
    flux_laplacian(&mut trip, v, v, &b_mid, h);
    flux_laplacian(&mut trip, z, y, &vec![1.0; n + 1], h);
    flux_laplacian(&mut trip, z, z, &d_mid, h);
    let matrix = CsrMatrix::from_triplets(4 * n, 4 * n, trip);

    let mut mtrip = Vec::with_capacity(10 * n);
    for (blk, k) in [(u, a / h), (y, 1.0 / h)] {
        for i in 0..n {
            mtrip.push((blk + i, blk + i, 2.0 * k));
            if i + 1 < n {
                mtrip.push((blk + i, blk + i + 1, -k));
                mtrip.push((blk + i + 1, blk + i, -k));
            }
        }
    }
    for blk in [v, z] {
        for i in 0..n {
            mtrip.push((blk + i, blk + i, h));
        }
    }
    let mass = CsrMatrix::from_triplets(4 * n, 4 * n, mtrip);
    let mass_factor = MassFactor::new(n, h, a)?;

    Ok(DiscreteGenerator {
        cfg: *cfg,
        grid: grid.clone(),
        b_mid,
        d_mid,
        c_node,
        matrix,
        mass,
        mass_factor,
    })
}

impl DiscreteGenerator {
    /// Builds the grid and assembles in one go.
    pub fn new(cfg: &SystemConfig, n: usize) -> Result<Self> {
        let grid = build_grid(cfg, n)?;
        assemble_generator(cfg, &grid)
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Number of unknowns, `4n`.
    pub fn dim(&self) -> usize {
        4 * self.grid.n
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.matrix
    }

    pub fn mass(&self) -> &CsrMatrix<f64> {
        &self.mass
    }

    pub fn mass_factor(&self) -> &MassFactor {
        &self.mass_factor
    }

    /// Largest frequency at which the discrete dispersion still tracks the
    /// continuum to a few percent.
    pub fn resolution_limit(&self) -> f64 {
        0.3 * self.cfg.wave_speed_sq.sqrt() / self.grid.h
    }

    fn check_dim<T: Scalar>(&self, s: &StateVector<T>) -> Result<()> {
        if s.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: s.n() });
        }
        Ok(())
    }

    /// Forward differences `(Dw)_m = (w_{m+1} - w_m) / h`, `m = 0..=n`,
    /// with zero Dirichlet values at both ends.
    pub fn forward_difference<T: Scalar>(&self, w: &[T]) -> Vec<T> {
        let n = w.len();
        let inv_h = T::from_real(1.0 / self.grid.h);
        (0..=n)
            .map(|m| {
                let right = if m < n { w[m] } else { T::zero() };
                let left = if m > 0 { w[m - 1] } else { T::zero() };
                (right - left) * inv_h
            })
            .collect()
    }

    /// The `(n + 1) x n` forward-difference matrix `D`.
    pub fn difference_matrix(&self) -> CsrMatrix<f64> {
        let n = self.n();
        let inv_h = 1.0 / self.grid.h;
        let mut trip = Vec::with_capacity(2 * n);
        for m in 0..=n {
            if m < n {
                trip.push((m, m, inv_h));
            }
            if m > 0 {
                trip.push((m, m - 1, -inv_h));
            }
        }
        CsrMatrix::from_triplets(n + 1, n, trip)
    }

    /// `A s`, computed block by block from the stencils.
    pub fn apply<T: Scalar>(&self, s: &StateVector<T>) -> Result<StateVector<T>> {
        self.check_dim(s)?;
        let n = self.n();
        let h = T::from_real(self.grid.h);
        let a = T::from_real(self.cfg.wave_speed_sq);
        let flux_div = |kappa: &dyn Fn(usize) -> T, w: &[T]| -> Vec<T> {
            let dw = self.forward_difference(w);
            (0..n).map(|i| (kappa(i + 1) * dw[i + 1] - kappa(i) * dw[i]) / h).collect()
        };
        let b = |m: usize| T::from_real(self.b_mid[m]);
        let d = |m: usize| T::from_real(self.d_mid[m]);
        let stiff_u = flux_div(&|_| a, s.u());
        let damp_v = flux_div(&b, s.v());
        let stiff_y = flux_div(&|_| T::one(), s.y());
        let damp_z = flux_div(&d, s.z());

        let mut out = StateVector::zeros(n);
        out.block_mut(Block::U).copy_from_slice(s.v());
        out.block_mut(Block::Y).copy_from_slice(s.z());
        for i in 0..n {
            let c = T::from_real(self.c_node[i]);
            out.block_mut(Block::V)[i] = stiff_u[i] + damp_v[i] - c * s.z()[i];
            out.block_mut(Block::Z)[i] = stiff_y[i] + damp_z[i] + c * s.v()[i];
        }
        Ok(out)
    }

    /// `‖s‖²_M = sᵀ M s` from explicit differences.
    pub fn mass_norm_sq<T: Scalar>(&self, s: &StateVector<T>) -> Result<f64> {
        self.check_dim(s)?;
        let h = self.grid.h;
        let sq = |w: &[T]| w.iter().map(|x| x.modulus().powi(2)).sum::<f64>();
        let du = self.forward_difference(s.u());
        let dy = self.forward_difference(s.y());
        Ok(h * sq(s.v())
            + self.cfg.wave_speed_sq * h * sq(&du)
            + h * sq(s.z())
            + h * sq(&dy))
    }

    /// Discrete energy `½ sᵀ M s`.
    pub fn energy<T: Scalar>(&self, s: &StateVector<T>) -> Result<f64> {
        Ok(0.5 * self.mass_norm_sq(s)?)
    }

    /// `Re⟨A s, s⟩_M = -h Σ b |Dv|² - h Σ d |Dz|²`.
    pub fn dissipation_rate<T: Scalar>(&self, s: &StateVector<T>) -> Result<f64> {
        self.check_dim(s)?;
        let h = self.grid.h;
        let weighted = |kappa: &[f64], w: &[T]| {
            self.forward_difference(w)
                .iter()
                .zip(kappa)
                .map(|(dw, k)| k * dw.modulus().powi(2))
                .sum::<f64>()
        };
        Ok(-h * weighted(&self.b_mid, s.v()) - h * weighted(&self.d_mid, s.z()))
    }

    /// `Re⟨x, y⟩_M` through the assembled mass matrix.
    pub fn mass_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut my = vec![0.0; y.len()];
        self.mass.mul_vec(y, &mut my);
        x.iter().zip(&my).map(|(a, b)| a * b).sum()
    }

    /// `shift I + scale A` in node-interleaved ordering (bandwidth 7).
    pub fn banded_shifted<T>(&self, shift: T, scale: T) -> BandedMatrix<T>
    where
        T: Scalar + std::ops::Mul<f64, Output = T>,
    {
        let n = self.n();
        let mut m = BandedMatrix::zeros(4 * n, 7, 7);
        for (r, c, v) in self.matrix.iter() {
            m.add(interleaved_index(n, r), interleaved_index(n, c), scale * v);
        }
        for k in 0..4 * n {
            m.add(k, k, shift);
        }
        m
    }
}
