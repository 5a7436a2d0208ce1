//! Dense complex linear algebra for qubit (2×2) and two-qubit (4×4) operators.
//!
//! Matrices are stored inline in a fixed 16-entry buffer so every value is
//! `Copy` and nothing in the hot paths allocates.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix of dimension 2 or 4, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: [C64; 16],
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: [ZERO; 16],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be 4 or 16.
    pub fn from_row_major(entries: &[C64]) -> Result<Self> {
        let dim = match entries.len() {
            4 => 2,
            16 => 4,
            n => {
                return Err(Error::Dimension(format!(
                    "expected 4 or 16 entries, got {n}"
                )))
            }
        };
        let mut m = Self::zeros(dim)?;
        m.data[..entries.len()].copy_from_slice(entries);
        Ok(m)
    }

    /// Zero matrix of any size up to 4; only for internal sub-blocks.
    pub(crate) fn zeros_any(dim: usize) -> Self {
        assert!((1..=4).contains(&dim), "block dimension {dim} out of range");
        Self {
            dim,
            data: [ZERO; 16],
        }
    }

    pub(crate) fn from_real2(rows: [[f64; 2]; 2]) -> Self {
        let mut data = [ZERO; 16];
        for i in 0..2 {
            for j in 0..2 {
                data[i * 2 + j] = C64::new(rows[i][j], 0.0);
            }
        }
        Self { dim: 2, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data[..self.dim * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.data.iter_mut().for_each(|z| *z *= s);
        out
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        let mut out = *self;
        out.data.iter_mut().for_each(|z| *z *= s);
        out
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        same_dim(self, rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut out = Self {
            dim: n,
            data: [ZERO; 16],
        };
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    /// Kronecker product of two 2×2 matrices.
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        if self.dim != 2 || rhs.dim != 2 {
            return Err(Error::Dimension(format!(
                "tensor product needs two 2x2 factors, got {}x{} and {}x{}",
                self.dim, self.dim, rhs.dim, rhs.dim
            )));
        }
        let mut out = Self {
            dim: 4,
            data: [ZERO; 16],
        };
        for i in 0..2 {
            for j in 0..2 {
                let a = self.get(i, j);
                for k in 0..2 {
                    for l in 0..2 {
                        out.set(2 * i + k, 2 * j + l, a * rhs.get(k, l));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// `tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> C64 {
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * rhs.data[k * n + i];
            }
        }
        acc
    }

    /// `⟨u|self|v⟩` for column vectors of matching length.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                row += self.data[i * n + j] * v[j];
            }
            acc += u[i].conj() * row;
        }
        acc
    }

    /// `|v⟩⟨v|` for a vector of length 2 or 4.
    pub fn outer(v: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(v.len())?;
        for i in 0..v.len() {
            for j in 0..v.len() {
                m.set(i, j, v[i] * v[j].conj());
            }
        }
        Ok(m)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::Dimension(format!("unsupported dimension {dim}")))
    }
}

fn same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim == b.dim {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "dimension mismatch: {} vs {}",
            a.dim, b.dim
        )))
    }
}

// The operator impls assume equal dimensions; every caller in the crate builds
// operands of the same size. Use `checked_mul` on untrusted inputs.
impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        self.mul_unchecked(&rhs)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        self.data
            .iter_mut()
            .zip(rhs.data.iter())
            .for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        self.data
            .iter_mut()
            .zip(rhs.data.iter())
            .for_each(|(a, b)| *a -= b);
        self
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A complex matrix known to equal its conjugate transpose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianOperator(ComplexMatrix);

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let tol = Tolerances::default().hermiticity;
        if !matrix.is_hermitian(tol) {
            return Err(Error::NotHermitian(matrix.max_abs_diff(&matrix.adjoint())));
        }
        Ok(Self::symmetrized(matrix))
    }

    /// Wraps `(M + M†)/2`; for operators that are Hermitian by construction.
    pub(crate) fn symmetrized(matrix: ComplexMatrix) -> Self {
        Self((matrix + matrix.adjoint()).scale(0.5))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(Self(ComplexMatrix::identity(dim)?))
    }

    /// Real linear combination of Hermitian operators stays Hermitian.
    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// Expectation value `tr(self · ρ)` for a state of the same dimension.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        self.0.trace_product(rho.matrix()).re
    }

    pub fn expectation_pure(&self, psi: &[C64]) -> f64 {
        self.0.sandwich(psi, psi).re
    }
}

impl Add for HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// Names accepted by [`pauli`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliName {
    X,
    Y,
    Z,
    /// `(σ_z + σ_x)/√2`
    H,
    /// `(σ_z − σ_x)/√2`
    M,
    Identity,
}

impl std::str::FromStr for PauliName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Self::X),
            "y" => Ok(Self::Y),
            "z" => Ok(Self::Z),
            "h" => Ok(Self::H),
            "m" => Ok(Self::M),
            "i" | "id" | "identity" => Ok(Self::Identity),
            other => Err(Error::Input(format!("unknown Pauli operator `{other}`"))),
        }
    }
}

pub fn pauli(name: PauliName) -> HermitianOperator {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let m = match name {
        PauliName::X => ComplexMatrix::from_real2([[0.0, 1.0], [1.0, 0.0]]),
        PauliName::Z => ComplexMatrix::from_real2([[1.0, 0.0], [0.0, -1.0]]),
        PauliName::H => ComplexMatrix::from_real2([[r, r], [r, -r]]),
        PauliName::M => ComplexMatrix::from_real2([[r, -r], [-r, -r]]),
        PauliName::Identity => ComplexMatrix::from_real2([[1.0, 0.0], [0.0, 1.0]]),
        PauliName::Y => {
            let mut m = ComplexMatrix::from_real2([[0.0, 0.0], [0.0, 0.0]]);
            m.set(0, 1, C64::new(0.0, -1.0));
            m.set(1, 0, C64::new(0.0, 1.0));
            m
        }
    };
    HermitianOperator(m)
}

/// Looks a Pauli operator up by its string name (`x`, `y`, `z`, `h`, `m`, `identity`).
pub fn pauli_by_name(name: &str) -> Result<HermitianOperator> {
    Ok(pauli(name.parse()?))
}

/// Qubit observable `c_z σ_z + c_x σ_x` with real coefficients.
pub fn bloch_zx(cz: f64, cx: f64) -> HermitianOperator {
    HermitianOperator(ComplexMatrix::from_real2([[cz, cx], [cx, -cz]]))
}

pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    Ok(HermitianOperator(a.0.kron(&b.0)?))
}

/// Spectral decomposition with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<C64>>,
}

impl Eigen {
    /// Rebuilds `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let mut m = ComplexMatrix::zeros_any(n);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                for j in 0..n {
                    let z = m.get(i, j) + v[i] * v[j].conj() * *lam;
                    m.set(i, j, z);
                }
            }
        }
        m
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn eig_hermitian(op: &HermitianOperator) -> Eigen {
    jacobi(op.matrix())
}

/// Eigendecomposition of a Hermitian block of any size up to 4.
pub(crate) fn eig_block(m: &ComplexMatrix) -> Eigen {
    jacobi(m)
}

/// Same as [`eig_hermitian`] but validates a raw matrix first.
pub fn eig_hermitian_checked(m: &ComplexMatrix) -> Result<Eigen> {
    let op = HermitianOperator::new(*m)?;
    Ok(eig_hermitian(&op))
}

fn jacobi(input: &ComplexMatrix) -> Eigen {
    let n = input.dim;
    let mut a = *input;
    let mut v = ComplexMatrix::zeros_any(n);
    for i in 0..n {
        v.set(i, i, ONE);
    }
    let scale = a
        .entries()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).norm_sqr())
            .sum();
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane.
                let pc = phase.conj();
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = pc * (-s);
                let jqq = pc * c;
                // A ← A J
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * jpp + akq * jqp);
                    a.set(k, q, akp * jpq + akq * jqq);
                }
                // A ← J† A
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, jpp.conj() * apk + jqp.conj() * aqk);
                    a.set(q, k, jpq.conj() * apk + jqq.conj() * aqk);
                }
                a.set(p, q, ZERO);
                a.set(q, p, ZERO);
                a.set(p, p, C64::new(a.get(p, p).re, 0.0));
                a.set(q, q, C64::new(a.get(q, q).re, 0.0));
                // V ← V J
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * jpp + vkq * jqp);
                    v.set(k, q, vkp * jpq + vkq * jqq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).re.total_cmp(&a.get(i, i).re));
    let values = order.iter().map(|&i| a.get(i, i).re).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|row| v.get(row, col)).collect())
        .collect();
    Eigen { values, vectors }
}

/// Unit-norm pure state of two qubits in the computational basis `|00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState([C64; 4]);

impl PureState {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > Tolerances::default().state_norm {
            return Err(Error::InvalidState(format!(
                "squared norm {norm} differs from 1"
            )));
        }
        Ok(Self(amplitudes))
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amplitudes: [C64; 4]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let mut a = amplitudes;
        a.iter_mut().for_each(|z| *z /= norm);
        Ok(Self(a))
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.0
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix(ComplexMatrix::outer(&self.0).expect("length 4"))
    }

    pub fn overlap(&self, other: &[C64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    }
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn phi_plus() -> PureState {
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PureState([r, ZERO, ZERO, r])
}

/// Positive semidefinite, unit-trace 4×4 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let tol = Tolerances::default();
        if matrix.dim != 4 {
            return Err(Error::Dimension(format!(
                "density matrix must be 4x4, got {}x{}",
                matrix.dim, matrix.dim
            )));
        }
        if !matrix.is_hermitian(tol.hermiticity) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let sym = HermitianOperator::symmetrized(matrix);
        let lmin = eig_hermitian(&sym).min();
        if lmin < -tol.positivity {
            return Err(Error::InvalidState(format!("negative eigenvalue {lmin}")));
        }
        Ok(Self(*sym.matrix()))
    }

    /// Wraps a matrix that is a state by construction (mixtures, channel outputs).
    pub(crate) fn trusted(matrix: ComplexMatrix) -> Self {
        Self(*HermitianOperator::symmetrized(matrix).matrix())
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix::identity(4).expect("dim 4").scale(0.25))
    }

    /// Convex combination `p·self + (1−p)·other`.
    pub fn mix(&self, other: &Self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Input(format!("mixing weight {p} outside [0, 1]")));
        }
        Ok(Self(self.0.scale(p) + other.0.scale(1.0 - p)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn rank(&self, tol: f64) -> usize {
        eig_hermitian(&HermitianOperator(self.0))
            .values
            .iter()
            .filter(|&&l| l > tol)
            .count()
    }
}

/// `⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`.
pub fn fidelity_with_pure(rho: &DensityMatrix, psi: &PureState) -> f64 {
    rho.0.sandwich(&psi.0, &psi.0).re.clamp(0.0, 1.0)
}
