//! Dense complex matrices, state diagnostics and the two building blocks of
//! the master equation: the GKSL generator and the memory superoperator.
//!
//! # Jump convention
//!
//! Both superoperators put the dagger on the *left* of the jump term:
//!
//! ```text
//! (L rho)   = -i[H, rho] + sum_a ( L_a^dag rho L_a - 1/2 {L_a L_a^dag, rho} )
//! (R rho)   = s(t - t') sum_a ( A_a^dag rho(t') A_a - 1/2 {A_a A_a^dag, rho(t)} )
//! ```
//!
//! This is the mirror image of the more common `L rho L^dag` form. With a
//! two-level annihilation operator `sigma`, the channel `L = sqrt(gamma) sigma^dag`
//! is *decay* and `L = sqrt(gamma) sigma` is *pumping*. Flipping the convention
//! silently swaps the two, which is why tests pin it down explicitly.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Entrywise Hermiticity tolerance.
pub const TOL_HERM: f64 = 1e-10;
/// Allowed negative eigenvalue for objects asserted to be states.
pub const TOL_POS: f64 = 1e-7;
/// Allowed negative value of the scalar memory function.
pub const TOL_KERNEL: f64 = 1e-9;

const TOL_RATE_DENSITY: f64 = 1e-12;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Two-level lowering operator `|g><e|` in the basis `(|g>, |e>)`.
pub fn sigma_minus() -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(2, 2);
    s[(0, 1)] = c64(1.0, 0.0);
    s
}

pub fn projector(dim: usize, k: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(dim, dim);
    p[(k, k)] = c64(1.0, 0.0);
    p
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// max |m - m^dag| entrywise.
pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_dim(m: &ComplexMatrix, dim: usize) -> Result<()> {
    let d = ensure_square(m)?;
    if d != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: d,
        });
    }
    Ok(())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    ensure_square(m)?;
    let dev = hermiticity_error(m);
    if dev > TOL_HERM {
        return Err(Error::NotHermitian {
            what: "matrix",
            deviation: dev,
        });
    }
    Ok(hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// A density matrix, possibly sub-normalized (`trace_target < 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    trace_target: f64,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_trace(matrix, 1.0)
    }

    /// A state prepared with probability `p`; `matrix` is stored as given.
    pub fn with_trace(matrix: ComplexMatrix, trace_target: f64) -> Result<Self> {
        ensure_square(&matrix)?;
        if !is_finite(&matrix) {
            return Err(Error::NonFinite("density matrix"));
        }
        Ok(Self {
            matrix,
            trace_target,
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim).scale(1.0 / dim as f64),
            trace_target: 1.0,
        }
    }

    pub fn pure(psi: &[C64]) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi);
        let norm2 = v.norm_squared();
        Self {
            matrix: (&v * v.adjoint()).unscale(norm2),
            trace_target: 1.0,
        }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        Self {
            matrix: projector(dim, k),
            trace_target: 1.0,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace_target(&self) -> f64 {
        self.trace_target
    }

    pub fn scaled(&self, p: f64) -> Self {
        Self {
            matrix: self.matrix.scale(p),
            trace_target: self.trace_target * p,
        }
    }
}

/// Deviations of a matrix from being a valid (sub-normalized) state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub trace_error: f64,
    pub herm_error: f64,
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    pub fn is_state(&self, trace_tol: f64) -> bool {
        self.herm_error <= TOL_HERM
            && self.trace_error <= trace_tol
            && self.min_eigenvalue >= -TOL_POS
    }
}

pub fn validate_density(rho: &DensityMatrix) -> Diagnostics {
    diagnose(rho.matrix(), rho.trace_target())
}

pub(crate) fn diagnose(m: &ComplexMatrix, trace_target: f64) -> Diagnostics {
    let tr = trace(m);
    Diagnostics {
        trace_error: (tr - c64(trace_target, 0.0)).norm(),
        herm_error: hermiticity_error(m),
        min_eigenvalue: hermitian_eigenvalues(m)
            .into_iter()
            .fold(f64::INFINITY, f64::min),
    }
}

/// Hamiltonian and Lindblad operators valid from `start` onwards.
#[derive(Debug, Clone)]
struct Segment {
    start: f64,
    hamiltonian: ComplexMatrix,
    lindblads: Vec<ComplexMatrix>,
}

/// Markovian GKSL generator, optionally piecewise constant in time.
#[derive(Debug, Clone)]
pub struct GkslGenerator {
    dim: usize,
    segments: Vec<Segment>,
}

impl GkslGenerator {
    pub fn new(hamiltonian: ComplexMatrix, lindblads: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = ensure_square(&hamiltonian)?;
        let seg = Self::check_segment(dim, f64::NEG_INFINITY, hamiltonian, lindblads)?;
        Ok(Self {
            dim,
            segments: vec![seg],
        })
    }

    pub fn hamiltonian_only(hamiltonian: ComplexMatrix) -> Result<Self> {
        Self::new(hamiltonian, Vec::new())
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            segments: vec![Segment {
                start: f64::NEG_INFINITY,
                hamiltonian: ComplexMatrix::zeros(dim, dim),
                lindblads: Vec::new(),
            }],
        }
    }

    /// Switch to a new Hamiltonian and Lindblad set at time `start`.
    pub fn with_segment(
        mut self,
        start: f64,
        hamiltonian: ComplexMatrix,
        lindblads: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        let last = self.segments.last().map_or(f64::NEG_INFINITY, |s| s.start);
        if start <= last {
            return Err(Error::Precondition(format!(
                "segment start {start} must be after {last}"
            )));
        }
        let seg = Self::check_segment(self.dim, start, hamiltonian, lindblads)?;
        self.segments.push(seg);
        Ok(self)
    }

    fn check_segment(
        dim: usize,
        start: f64,
        hamiltonian: ComplexMatrix,
        lindblads: Vec<ComplexMatrix>,
    ) -> Result<Segment> {
        ensure_dim(&hamiltonian, dim)?;
        let dev = hermiticity_error(&hamiltonian);
        if dev > TOL_HERM {
            return Err(Error::NotHermitian {
                what: "hamiltonian",
                deviation: dev,
            });
        }
        if !is_finite(&hamiltonian) {
            return Err(Error::NonFinite("hamiltonian"));
        }
        for l in &lindblads {
            ensure_dim(l, dim)?;
            if !is_finite(l) {
                return Err(Error::NonFinite("lindblad operator"));
            }
        }
        Ok(Segment {
            start,
            hamiltonian,
            lindblads,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn segment(&self, t: f64) -> &Segment {
        self.segments
            .iter()
            .rev()
            .find(|s| s.start <= t)
            .unwrap_or(&self.segments[0])
    }

    pub fn hamiltonian(&self, t: f64) -> &ComplexMatrix {
        &self.segment(t).hamiltonian
    }

    pub fn lindblads(&self, t: f64) -> &[ComplexMatrix] {
        &self.segment(t).lindblads
    }

    pub fn is_time_dependent(&self) -> bool {
        self.segments.len() > 1
    }

    /// Lindblad count of the first segment; continuous measurements index into it.
    pub fn channel_count(&self) -> usize {
        self.segments[0].lindblads.len()
    }
}

/// `(L rho)(t) = -i[H, rho] + sum_a (L_a^dag rho L_a - 1/2 {L_a L_a^dag, rho})`.
pub fn apply_gksl(gen: &GkslGenerator, rho: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    ensure_dim(rho, gen.dim())?;
    Ok(gksl_unchecked(gen, rho, t))
}

pub(crate) fn gksl_unchecked(gen: &GkslGenerator, rho: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let seg = gen.segment(t);
    let h = &seg.hamiltonian;
    let mut out = (h * rho - rho * h) * c64(0.0, -1.0);
    for l in &seg.lindblads {
        let ld = l.adjoint();
        let lld = l * &ld;
        out += &ld * rho * l;
        out -= (&lld * rho + rho * &lld).scale(0.5);
    }
    out
}

pub type MemoryFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Factored memory kernel `R_a(t, t') = sqrt(s(t - t')) A_a`.
#[derive(Clone)]
pub struct MemoryKernel {
    dim: usize,
    memory_function: Option<MemoryFn>,
    jump_ops: Vec<ComplexMatrix>,
    drain: ComplexMatrix,
    normalization: f64,
    label: String,
}

impl fmt::Debug for MemoryKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MemoryKernel")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("jump_ops", &self.jump_ops.len())
            .field("normalization", &self.normalization)
            .finish()
    }
}

impl MemoryKernel {
    /// Checks that `sum_a A_a A_a^dag = c0 I` with `c0 > 0`.
    pub fn new(
        dim: usize,
        memory_function: MemoryFn,
        jump_ops: Vec<ComplexMatrix>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if jump_ops.is_empty() {
            return Err(Error::Precondition(
                "memory kernel needs at least one jump operator".into(),
            ));
        }
        let mut drain = ComplexMatrix::zeros(dim, dim);
        for a in &jump_ops {
            ensure_dim(a, dim)?;
            drain += a * a.adjoint();
        }
        let c0 = trace(&drain).re / dim as f64;
        let residual = max_abs_diff(&drain, &identity(dim).scale(c0));
        if !(c0 > 0.0) || residual > TOL_RATE_DENSITY * c0.max(1.0) {
            return Err(Error::KernelNormalization { residual });
        }
        Ok(Self {
            dim,
            memory_function: Some(memory_function),
            jump_ops,
            drain,
            normalization: c0,
            label: label.into(),
        })
    }

    /// `s(lag) = amplitude * exp(-rate * lag)`.
    pub fn exponential(amplitude: f64, rate: f64, jump_ops: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = jump_ops.first().map_or(0, |a| a.nrows());
        Self::new(
            dim,
            Arc::new(move |lag: f64| amplitude * (-rate * lag).exp()),
            jump_ops,
            format!("exponential(amplitude={amplitude}, rate={rate})"),
        )
    }

    /// No memory at all.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            memory_function: None,
            jump_ops: Vec::new(),
            drain: ComplexMatrix::zeros(dim, dim),
            normalization: 0.0,
            label: "zero".into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.memory_function.is_none()
    }

    pub fn jump_ops(&self) -> &[ComplexMatrix] {
        &self.jump_ops
    }

    /// `c0` in `sum_a A_a A_a^dag = c0 I`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `s(lag)`, rejecting values below `-TOL_KERNEL`.
    pub fn memory_value(&self, lag: f64) -> Result<f64> {
        let Some(f) = &self.memory_function else {
            return Ok(0.0);
        };
        if lag < 0.0 {
            return Err(Error::Precondition(format!("negative lag {lag}")));
        }
        let v = f(lag);
        if !v.is_finite() {
            return Err(Error::NonFinite("memory function"));
        }
        if v < -TOL_KERNEL {
            return Err(Error::KernelPositivity { lag, value: v });
        }
        Ok(v)
    }

    /// Rate density `p(t, t') = s(t - t') c0`.
    pub fn rate_density(&self, lag: f64) -> Result<f64> {
        Ok(self.memory_value(lag)? * self.normalization)
    }

    /// `sum_a A_a^dag rho A_a`.
    pub(crate) fn jump(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for a in &self.jump_ops {
            out += a.adjoint() * rho * a;
        }
        out
    }

    /// `1/2 {sum_a A_a A_a^dag, rho}`.
    pub(crate) fn drain(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        (&self.drain * rho + rho * &self.drain).scale(0.5)
    }
}

/// `s(lag) sum_a (A_a^dag rho_retarded A_a - 1/2 {A_a A_a^dag, rho_current})`.
///
/// The jump acts on the retarded state and the anticommutator on the current
/// one; swapping them breaks complete positivity.
pub fn apply_memory(
    kernel: &MemoryKernel,
    rho_retarded: &ComplexMatrix,
    rho_current: &ComplexMatrix,
    lag: f64,
) -> Result<ComplexMatrix> {
    ensure_dim(rho_retarded, kernel.dim())?;
    ensure_dim(rho_current, kernel.dim())?;
    let s = kernel.memory_value(lag)?;
    if kernel.is_zero() {
        return Ok(ComplexMatrix::zeros(kernel.dim(), kernel.dim()));
    }
    Ok((kernel.jump(rho_retarded) - kernel.drain(rho_current)).scale(s))
}
