//! Discretization of `H = -Δ + V` and its full eigendecomposition.
//!
//! Every spectral operation in the crate is diagonal in the eigenbasis held by
//! [`DiscretizedHamiltonian`]. Eigenvectors are stored orthonormal in the
//! Euclidean sense (`Q`); the grid functions `Φ_j = Q_j / √h` are then
//! orthonormal for the `h`-weighted inner product, so analysis is
//! `c = √h Qᵀu` and synthesis is `u = Q c / √h`.

use std::borrow::Cow;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::potential::{PotentialSpec, SampledPotential};
use crate::spectral::{second_derivative_matrix, FourierOps};

pub const RESIDUAL_TOL: f64 = 1e-8;
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;
/// Relative tolerance for detecting a reflection-symmetric potential.
const REFLECTION_TOL: f64 = 1e-13;
/// QR sweeps allowed per matrix row before the solver is declared stuck.
const EIGEN_SWEEPS_PER_ROW: usize = 64;

/// `-D² + diag(V)` together with the gauge-normalized samples it was built from.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub grid: Grid1D,
    pub potential: SampledPotential,
    pub matrix: Array2<f64>,
}

pub fn assemble_hamiltonian(grid: &Grid1D, potential: &PotentialSpec) -> Result<AssembledOperator> {
    let sampled = potential.sample(grid)?;
    let mut matrix = second_derivative_matrix(grid)?;
    matrix.mapv_inplace(|v| -v);
    for (i, v) in sampled.v.iter().enumerate() {
        matrix[[i, i]] += v;
    }
    Ok(AssembledOperator { grid: *grid, potential: sampled, matrix })
}

/// Dense symmetric eigensolve. Eigenvalues ascend; columns of the returned
/// matrix are orthonormal for the inner product `weight · Σ f_i g_i`.
pub fn symmetric_eigen(matrix: &Array2<f64>, weight: f64) -> Result<(Vec<f64>, Array2<f64>)> {
    let (rows, cols) = matrix.dim();
    if rows != cols {
        return Err(Error::Shape { expected: rows, found: cols });
    }
    let scale = matrix.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..rows {
        for j in 0..i {
            if (matrix[[i, j]] - matrix[[j, i]]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidInput(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let m = DMatrix::from_fn(rows, cols, |i, j| matrix[[i, j]]);
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, EIGEN_SWEEPS_PER_ROW * rows.max(1))
        .ok_or_else(|| Error::numerical(None, "symmetric eigensolver did not converge"))?;

    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if let Some(&bad) = order.iter().find(|&&k| !eig.eigenvalues[k].is_finite()) {
        return Err(Error::numerical(bad, "non-finite eigenvalue"));
    }
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let norm = weight.sqrt().recip();
    let mut vectors = Array2::from_shape_fn((rows, cols), |(i, j)| eig.eigenvectors[(i, order[j])] * norm);
    // sign convention: largest-magnitude entry of each column is positive
    for mut col in vectors.columns_mut() {
        let pivot = col.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
    Ok((values, vectors))
}

#[derive(Debug, Clone)]
pub struct DiscretizedHamiltonian {
    grid: Grid1D,
    v_values: Vec<f64>,
    gauge_shift: f64,
    eigenvalues: Vec<f64>,
    /// Euclidean-orthonormal eigenvectors, one per column.
    basis: Array2<f64>,
    /// Invariant subspaces used for the basis transforms.
    blocks: Vec<Block>,
    fourier: FourierOps,
}

/// Eigenvectors of one invariant subspace, in orthonormal reduced
/// coordinates. Each coordinate is a sparse combination of grid nodes.
#[derive(Debug, Clone)]
struct Block {
    coords: Vec<Vec<(usize, f64)>>,
    /// Global mode index of each local eigenvector.
    modes: Vec<usize>,
    /// Row-major `V`: row `a` holds coordinate `a` of every local eigenvector.
    rows: Vec<f64>,
    /// Row-major `Vᵀ`: row `k` is local eigenvector `k`.
    cols: Vec<f64>,
}

/// Splits the grid into even and odd functions under `x ↦ -x` (node `i` ↦
/// node `(n - i) mod n`) when `V` is reflection symmetric, which halves the
/// size of every dense transform. Otherwise a single identity block.
fn invariant_subspaces(v: &[f64]) -> Vec<Vec<Vec<(usize, f64)>>> {
    let n = v.len();
    let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let symmetric = n % 2 == 0 && (1..n).all(|i| (v[i] - v[n - i]).abs() <= REFLECTION_TOL * scale);
    if !symmetric {
        return vec![(0..n).map(|i| vec![(i, 1.0)]).collect()];
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut even = vec![vec![(0, 1.0)], vec![(n / 2, 1.0)]];
    let mut odd = Vec::with_capacity(n / 2 - 1);
    for i in 1..n / 2 {
        even.push(vec![(i, r), (n - i, r)]);
        odd.push(vec![(i, r), (n - i, -r)]);
    }
    vec![even, odd]
}

/// `out = Σ_a x_a · M[a, :]` for a row-major `M` of width `dim`.
fn combine_rows(m: &[f64], dim: usize, x: &[C64], out_re: &mut [f64], out_im: &mut [f64]) {
    out_re.fill(0.0);
    out_im.fill(0.0);
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
        // SAFETY: the target features required by the callee were detected at runtime.
        unsafe { accumulate_rows_fma(m, dim, x, out_re, out_im) };
        return;
    }
    accumulate_rows(m, dim, x, out_re, out_im);
}

fn accumulate_rows(m: &[f64], dim: usize, x: &[C64], out_re: &mut [f64], out_im: &mut [f64]) {
    for (row, z) in m.chunks_exact(dim).zip(x) {
        if z.re == 0.0 && z.im == 0.0 {
            continue;
        }
        for ((q, re), im) in row.iter().zip(out_re.iter_mut()).zip(out_im.iter_mut()) {
            *re += z.re * q;
            *im += z.im * q;
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn accumulate_rows_fma(m: &[f64], dim: usize, x: &[C64], out_re: &mut [f64], out_im: &mut [f64]) {
    for (row, z) in m.chunks_exact(dim).zip(x) {
        if z.re == 0.0 && z.im == 0.0 {
            continue;
        }
        for ((q, re), im) in row.iter().zip(out_re.iter_mut()).zip(out_im.iter_mut()) {
            *re = z.re.mul_add(*q, *re);
            *im = z.im.mul_add(*q, *im);
        }
    }
}

/// Newton-Schulz steps `V ← V (3I - VᵀV) / 2` towards the nearest orthogonal
/// matrix. A Gram defect left by the eigensolver makes every round trip
/// through the basis scale the mass by the same tiny factor, which adds up
/// over long runs.
fn polish_orthonormal(v: &mut Array2<f64>) {
    let dim = v.ncols();
    for _ in 0..2 {
        let mut correction = v.t().dot(v) * -0.5;
        for k in 0..dim {
            correction[[k, k]] += 1.5;
        }
        *v = v.dot(&correction);
    }
}

/// Builds the operator and diagonalizes it, checking the residual and
/// orthonormality invariants against the assembled matrix.
pub fn eigendecompose(op: &AssembledOperator) -> Result<DiscretizedHamiltonian> {
    let n = op.grid.n_points();
    let (rows, cols) = op.matrix.dim();
    if rows != n || cols != n {
        return Err(Error::Shape { expected: n, found: rows });
    }
    let subspaces = invariant_subspaces(&op.potential.v);
    let mut local = Vec::with_capacity(n);
    let mut reduced_vectors = Vec::with_capacity(subspaces.len());
    for (b, coords) in subspaces.iter().enumerate() {
        let dim = coords.len();
        let reduced = Array2::from_shape_fn((dim, dim), |(a, c)| {
            coords[a]
                .iter()
                .flat_map(|&(i, wi)| coords[c].iter().map(move |&(j, wj)| wi * wj * op.matrix[[i, j]]))
                .sum::<f64>()
        });
        let (values, mut vectors) = symmetric_eigen(&reduced, 1.0)?;
        polish_orthonormal(&mut vectors);
        local.extend(values.into_iter().enumerate().map(|(k, mu)| (mu, b, k)));
        reduced_vectors.push(vectors);
    }
    local.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let eigenvalues: Vec<f64> = local.iter().map(|l| l.0).collect();
    let mut basis = Array2::<f64>::zeros((n, n));
    let mut modes: Vec<Vec<usize>> = subspaces.iter().map(|c| vec![0; c.len()]).collect();
    for (g, &(_, b, k)) in local.iter().enumerate() {
        modes[b][k] = g;
        for (a, coord) in subspaces[b].iter().enumerate() {
            for &(i, w) in coord {
                basis[[i, g]] += w * reduced_vectors[b][[a, k]];
            }
        }
        // sign convention on the full vector: largest-magnitude entry positive
        let col = basis.column(g);
        let pivot = col.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            basis.column_mut(g).mapv_inplace(|v| -v);
            reduced_vectors[b].column_mut(k).mapv_inplace(|v| -v);
        }
    }

    let hq = op.matrix.dot(&basis);
    for j in 0..n {
        let mu = eigenvalues[j];
        let res = hq
            .column(j)
            .iter()
            .zip(basis.column(j))
            .map(|(a, b)| (a - mu * b).powi(2))
            .sum::<f64>()
            .sqrt();
        // Euclidean residual of a unit vector equals the h-weighted residual of Φ_j
        if res > RESIDUAL_TOL * (1.0 + mu.abs()) {
            return Err(Error::numerical(j, format!("eigen-residual {res:e} for eigenvalue {mu}")));
        }
    }
    let gram = basis.t().dot(&basis);
    for ((j, k), g) in gram.indexed_iter() {
        let target = if j == k { 1.0 } else { 0.0 };
        if (g - target).abs() > ORTHONORMALITY_TOL {
            return Err(Error::numerical(j.max(k), format!("loss of orthonormality between modes {j} and {k}")));
        }
    }

    let blocks = subspaces
        .into_iter()
        .zip(modes)
        .zip(reduced_vectors)
        .map(|((coords, modes), v)| Block {
            coords,
            modes,
            rows: v.iter().copied().collect(),
            cols: v.t().iter().copied().collect(),
        })
        .collect();

    Ok(DiscretizedHamiltonian {
        grid: op.grid,
        v_values: op.potential.v.clone(),
        gauge_shift: op.potential.gauge_shift,
        eigenvalues,
        basis,
        blocks,
        fourier: FourierOps::new(&op.grid)?,
    })
}

impl DiscretizedHamiltonian {
    pub fn new(grid: &Grid1D, potential: &PotentialSpec) -> Result<Self> {
        eigendecompose(&assemble_hamiltonian(grid, potential)?)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n_points()
    }

    /// Gauge-normalized potential samples (`V >= 1`).
    pub fn v_values(&self) -> &[f64] {
        &self.v_values
    }

    pub fn gauge_shift(&self) -> f64 {
        self.gauge_shift
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Spectrum of the operator built from the potential before normalization.
    pub fn unshifted_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|mu| mu - self.gauge_shift).collect()
    }

    pub fn fourier(&self) -> &FourierOps {
        &self.fourier
    }

    /// Whether the transforms use the even/odd splitting.
    pub fn is_reflection_symmetric(&self) -> bool {
        self.blocks.len() == 2
    }

    /// `Φ_j` sampled on the grid (unit norm in the discrete L² product).
    pub fn eigenfunction(&self, j: usize) -> Vec<C64> {
        let scale = self.grid.spacing().sqrt().recip();
        self.basis.column(j).iter().map(|&q| C64::from(q * scale)).collect()
    }

    pub fn basis(&self) -> ArrayView2<'_, f64> {
        self.basis.view()
    }

    /// `c_j = ⟨u, Φ_j⟩` for every mode.
    pub fn analyze(&self, u: &[C64]) -> Vec<C64> {
        let scale = self.grid.spacing().sqrt();
        let mut c = vec![C64::new(0.0, 0.0); self.n()];
        for block in &self.blocks {
            let dim = block.coords.len();
            let x: Vec<C64> = block.coords.iter().map(|coord| coord.iter().map(|&(i, w)| u[i] * w).sum()).collect();
            let (mut re, mut im) = (vec![0.0; dim], vec![0.0; dim]);
            combine_rows(&block.rows, dim, &x, &mut re, &mut im);
            for (k, &g) in block.modes.iter().enumerate() {
                c[g] = C64::new(re[k], im[k]) * scale;
            }
        }
        c
    }

    /// `u = Σ_j c_j Φ_j` using the first `c.len()` modes.
    pub fn synthesize(&self, c: &[C64]) -> Vec<C64> {
        let scale = self.grid.spacing().sqrt().recip();
        let zero = C64::new(0.0, 0.0);
        let mut u = vec![zero; self.n()];
        for block in &self.blocks {
            let dim = block.coords.len();
            let x: Vec<C64> = block.modes.iter().map(|&g| c.get(g).copied().unwrap_or(zero)).collect();
            let (mut re, mut im) = (vec![0.0; dim], vec![0.0; dim]);
            combine_rows(&block.cols, dim, &x, &mut re, &mut im);
            for (a, coord) in block.coords.iter().enumerate() {
                let z = C64::new(re[a], im[a]) * scale;
                for &(i, w) in coord {
                    u[i] += z * w;
                }
            }
        }
        u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Repr {
    Grid(Vec<C64>),
    /// Coefficients on the first `len` eigenmodes.
    Eigen(Vec<C64>),
}

/// A wavefunction tied to the Hamiltonian whose eigenbasis it is expanded in.
#[derive(Debug, Clone)]
pub struct State<'h> {
    ham: &'h DiscretizedHamiltonian,
    repr: Repr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolevNorm {
    L2,
    /// `‖H^{1/2} u‖₂`
    CalH1,
    /// `(‖Δu‖₂² + ‖Vu‖₂²)^{1/2}`
    CalH2,
    GradL2,
    VL2,
    DeltaL2,
}

impl<'h> State<'h> {
    pub fn from_grid(ham: &'h DiscretizedHamiltonian, values: Vec<C64>) -> Result<Self> {
        if values.len() != ham.n() {
            return Err(Error::Shape { expected: ham.n(), found: values.len() });
        }
        Ok(Self { ham, repr: Repr::Grid(values) })
    }

    pub fn from_coeffs(ham: &'h DiscretizedHamiltonian, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() > ham.n() {
            return Err(Error::Shape { expected: ham.n(), found: coeffs.len() });
        }
        Ok(Self { ham, repr: Repr::Eigen(coeffs) })
    }

    pub fn eigenmode(ham: &'h DiscretizedHamiltonian, j: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); ham.n()];
        c[j] = C64::new(1.0, 0.0);
        Self { ham, repr: Repr::Eigen(c) }
    }

    pub fn zero(ham: &'h DiscretizedHamiltonian) -> Self {
        Self { ham, repr: Repr::Grid(vec![C64::new(0.0, 0.0); ham.n()]) }
    }

    pub fn hamiltonian(&self) -> &'h DiscretizedHamiltonian {
        self.ham
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.repr, Repr::Grid(_))
    }

    pub fn to_eigenbasis(&self) -> State<'h> {
        State { ham: self.ham, repr: Repr::Eigen(self.coeffs().into_owned()) }
    }

    pub fn to_grid(&self) -> State<'h> {
        State { ham: self.ham, repr: Repr::Grid(self.grid_values().into_owned()) }
    }

    pub fn grid_values(&self) -> Cow<'_, [C64]> {
        match &self.repr {
            Repr::Grid(u) => Cow::Borrowed(u),
            Repr::Eigen(c) => Cow::Owned(self.ham.synthesize(c)),
        }
    }

    pub fn coeffs(&self) -> Cow<'_, [C64]> {
        match &self.repr {
            Repr::Grid(u) => Cow::Owned(self.ham.analyze(u)),
            Repr::Eigen(c) => Cow::Borrowed(c),
        }
    }

    pub fn into_grid_values(self) -> Vec<C64> {
        match self.repr {
            Repr::Grid(u) => u,
            Repr::Eigen(c) => self.ham.synthesize(&c),
        }
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        match self.repr {
            Repr::Grid(u) => self.ham.analyze(&u),
            Repr::Eigen(c) => c,
        }
    }

    /// Keeps the first `n_modes` coefficients.
    pub fn truncate(&self, n_modes: usize) -> Result<State<'h>> {
        if n_modes > self.ham.n() {
            return Err(Error::Shape { expected: self.ham.n(), found: n_modes });
        }
        let mut c = self.coeffs().into_owned();
        c.truncate(n_modes);
        Ok(State { ham: self.ham, repr: Repr::Eigen(c) })
    }

    /// Functional calculus `f(H)u`, realized as `c_j ↦ f(μ_j) c_j`.
    pub fn apply_spectral_weight<F>(&self, f: F) -> Result<State<'h>>
    where
        F: Fn(f64) -> C64,
    {
        let mut c = self.coeffs().into_owned();
        for (j, (cj, &mu)) in c.iter_mut().zip(self.ham.eigenvalues()).enumerate() {
            let w = f(mu);
            if !w.is_finite() {
                return Err(Error::numerical(j, format!("spectral weight is not finite at eigenvalue {mu}")));
            }
            *cj *= w;
        }
        Ok(State { ham: self.ham, repr: Repr::Eigen(c) })
    }

    pub fn map_coeffs<F: Fn(usize, C64) -> C64>(&self, f: F) -> State<'h> {
        let c = self.coeffs().iter().enumerate().map(|(j, &cj)| f(j, cj)).collect();
        State { ham: self.ham, repr: Repr::Eigen(c) }
    }

    pub fn norm(&self, which: SobolevNorm) -> f64 {
        let h = self.ham.grid.spacing();
        let grid_l2 = |v: &[C64]| (h * v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        match which {
            SobolevNorm::L2 => match &self.repr {
                Repr::Grid(u) => grid_l2(u),
                Repr::Eigen(c) => c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            },
            SobolevNorm::CalH1 => self
                .coeffs()
                .iter()
                .zip(self.ham.eigenvalues())
                .map(|(c, mu)| mu * c.norm_sqr())
                .sum::<f64>()
                .sqrt(),
            SobolevNorm::GradL2 => grid_l2(&self.ham.fourier.gradient(&self.grid_values())),
            SobolevNorm::DeltaL2 => grid_l2(&self.ham.fourier.laplacian(&self.grid_values())),
            SobolevNorm::VL2 => {
                let vu: Vec<C64> = self.grid_values().iter().zip(&self.ham.v_values).map(|(u, v)| u * v).collect();
                grid_l2(&vu)
            }
            SobolevNorm::CalH2 => {
                let d = self.norm(SobolevNorm::DeltaL2);
                let v = self.norm(SobolevNorm::VL2);
                (d * d + v * v).sqrt()
            }
        }
    }

    /// Discrete L² inner product `⟨self, other⟩`.
    pub fn inner(&self, other: &State<'_>) -> C64 {
        let a = self.coeffs();
        let b = other.coeffs();
        a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
    }

    pub fn sub(&self, other: &State<'_>) -> State<'h> {
        let a = self.coeffs();
        let b = other.coeffs();
        let n = a.len().max(b.len());
        let zero = C64::new(0.0, 0.0);
        let c = (0..n)
            .map(|j| a.get(j).copied().unwrap_or(zero) - b.get(j).copied().unwrap_or(zero))
            .collect();
        State { ham: self.ham, repr: Repr::Eigen(c) }
    }
}
