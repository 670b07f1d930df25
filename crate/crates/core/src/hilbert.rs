//! Finite-dimensional Hilbert-space primitives: density operators,
//! observables in spectral form, projector algebra, basis pairs and seeded
//! random instances.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::format::MatrixJson;
use crate::rng::stream_rng;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Hermiticity bound for a stored density operator.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unit-trace bound for a stored density operator.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue a stored density operator may have is `-PSD_TOL`.
pub const PSD_TOL: f64 = 1e-10;
/// Hermiticity bound for inputs to spectral decomposition.
pub const INPUT_HERMITIAN_TOL: f64 = 1e-10;
/// Projector algebra bound (idempotence, orthogonality, completeness).
pub const PROJECTOR_TOL: f64 = 1e-10;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |M - M^dagger|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors as matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let (values, _) = hermitian_eigen(m);
    values.first().copied().unwrap_or(0.0)
}

/// Rank-one projector `|v><v|` onto the normalized direction of `v`.
pub fn projector(v: &CVector) -> CMatrix {
    let u = v.normalize();
    &u * u.adjoint()
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(-1., 0.)])
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn require_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Density operators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NotSquare,
    Hermiticity,
    Trace,
    Positivity,
}

/// One failed density-operator invariant.
///
/// `measured` is `max|M - M^dagger|` for hermiticity, `|Tr M - 1|` for the
/// trace and the minimum eigenvalue for positivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityViolation {
    pub kind: ViolationKind,
    pub measured: f64,
}

/// Checks the three density-operator invariants at a common tolerance.
/// An empty report means the matrix is a valid state.
pub fn validate_density(m: &CMatrix, tol: f64) -> Vec<DensityViolation> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return vec![DensityViolation {
            kind: ViolationKind::NotSquare,
            measured: f64::NAN,
        }];
    }
    let mut report = Vec::new();
    let herm = hermiticity_residual(m);
    if herm > tol {
        report.push(DensityViolation {
            kind: ViolationKind::Hermiticity,
            measured: herm,
        });
    }
    let tr = (trace(m) - 1.0).norm();
    if tr > tol {
        report.push(DensityViolation {
            kind: ViolationKind::Trace,
            measured: tr,
        });
    }
    let min_eig = min_eigenvalue(m);
    if min_eig < -tol {
        report.push(DensityViolation {
            kind: ViolationKind::Positivity,
            measured: min_eig,
        });
    }
    report
}

/// A system state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates at the stored-state tolerances and takes ownership.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        require_square(&matrix)?;
        let herm = hermiticity_residual(&matrix);
        let tr = (trace(&matrix) - 1.0).norm();
        let min_eig = min_eigenvalue(&matrix);
        if herm > HERMITIAN_TOL || tr > TRACE_TOL || min_eig < -PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "hermiticity {herm:e}, trace residual {tr:e}, min eigenvalue {min_eig:e}"
            )));
        }
        Ok(DensityOperator { matrix })
    }

    /// Accepts a matrix satisfying the invariants at `tol`, then Hermitizes
    /// and renormalizes it so the strict invariants hold.
    pub fn from_approx(matrix: CMatrix, tol: f64) -> Result<Self> {
        require_square(&matrix)?;
        let report = validate_density(&matrix, tol);
        if let Some(v) = report.first() {
            return Err(Error::InvalidDensity(format!(
                "{:?} violated (measured {:e})",
                v.kind, v.measured
            )));
        }
        Ok(Self::repaired(matrix))
    }

    /// Hermitizes and divides by the real trace, without validation.
    pub(crate) fn repaired(matrix: CMatrix) -> Self {
        let h = hermitian_part(&matrix);
        let tr = trace(&h).re;
        DensityOperator {
            matrix: h.unscale(tr),
        }
    }

    /// `|psi><psi|` for the normalized direction of `psi`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if psi.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("state vector must be nonzero".into()));
        }
        Ok(DensityOperator {
            matrix: projector(psi),
        })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        assert!(n >= 1, "dimension must be >= 1");
        DensityOperator {
            matrix: CMatrix::identity(n, n).unscale(n as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `Tr(rho op)`.
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        // Tr(AB) = sum_ij A_ij B_ji
        self.matrix
            .row_iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, a)| a * op[(j, i)])
                    .sum::<Complex64>()
            })
            .sum()
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.matrix).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        let m = raw.to_matrix().map_err(serde::de::Error::custom)?;
        DensityOperator::from_approx(m, 1e-8).map_err(serde::de::Error::custom)
    }
}

/// `Tr(rho P)` clamped to `[0, 1]`.
pub fn born_probability(rho: &DensityOperator, proj: &CMatrix) -> Result<f64> {
    require_dim(rho.dim(), proj.nrows())?;
    require_dim(rho.dim(), proj.ncols())?;
    Ok(rho.expectation(proj).re.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

/// Hermitian operator stored as distinct ascending eigenvalues with their
/// orthogonal eigenprojectors. Degenerate eigenvalues share one projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    eigenvalues: Vec<f64>,
    projectors: Vec<CMatrix>,
}

/// Residuals of the projector algebra of an [`Observable`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralResiduals {
    pub idempotence: f64,
    pub orthogonality: f64,
    pub completeness: f64,
}

impl Observable {
    /// Spectral decomposition with the default degeneracy tolerance
    /// `1e-8 * max|eigenvalue|`.
    pub fn from_hermitian(h: &CMatrix) -> Result<Self> {
        let n = require_square(h)?;
        let scale = hermitian_eigen(h)
            .0
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol = if scale > 0.0 { 1e-8 * scale } else { 1e-8 };
        let _ = n;
        spectral_decompose(h, tol)
    }

    /// Builds an observable from explicit eigenvalue/projector pairs. Pairs
    /// are sorted by eigenvalue; the projector algebra is checked.
    pub fn from_projectors(pairs: Vec<(f64, CMatrix)>) -> Result<Self> {
        let mut pairs = pairs;
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("observable needs at least one projector".into()));
        }
        let n = require_square(&pairs[0].1)?;
        for (_, p) in &pairs {
            require_dim(n, p.nrows())?;
            require_dim(n, p.ncols())?;
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("eigenvalues must be distinct".into()));
        }
        let (eigenvalues, projectors) = pairs.into_iter().unzip();
        let obs = Observable {
            eigenvalues,
            projectors,
        };
        let r = obs.residuals();
        let worst = r.idempotence.max(r.orthogonality).max(r.completeness);
        if worst > PROJECTOR_TOL {
            return Err(Error::NotAProjector { residual: worst });
        }
        Ok(obs)
    }

    /// Non-degenerate observable with eigenvalue `values[i]` on `vectors[i]`.
    pub fn from_eigenbasis(values: &[f64], vectors: &[CVector]) -> Result<Self> {
        if values.len() != vectors.len() {
            return Err(Error::DimensionMismatch {
                expected: vectors.len(),
                found: values.len(),
            });
        }
        Observable::from_projectors(
            values
                .iter()
                .zip(vectors)
                .map(|(&a, v)| (a, projector(v)))
                .collect(),
        )
    }

    /// The two-outcome observable `{0: I - P, 1: P}` of a projector.
    pub fn two_outcome(p: &CMatrix) -> Result<Self> {
        let n = require_square(p)?;
        let residual = max_abs(&(p * p - p)).max(hermiticity_residual(p));
        if residual > PROJECTOR_TOL {
            return Err(Error::NotAProjector { residual });
        }
        let complement = CMatrix::identity(n, n) - p;
        Ok(Observable {
            eigenvalues: vec![0.0, 1.0],
            projectors: vec![complement, p.clone()],
        })
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    /// Number of distinct eigenvalues.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn projector(&self, n: usize) -> &CMatrix {
        &self.projectors[n]
    }

    /// `sum_n f(a_n) P_n`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(CMatrix::zeros(n, n), |acc, (&a, p)| acc + p.scale(f(a)))
    }

    /// `sum_n a_n P_n`.
    pub fn matrix(&self) -> CMatrix {
        self.apply_fn(|a| a)
    }

    /// Born weights `Tr(rho P_n)` in eigenvalue order.
    pub fn born_weights(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        self.projectors
            .iter()
            .map(|p| born_probability(rho, p))
            .collect()
    }

    /// `sum_n a_n^k Tr(rho P_n)`.
    pub fn moment(&self, rho: &DensityOperator, k: i32) -> Result<f64> {
        let w = self.born_weights(rho)?;
        Ok(w.iter()
            .zip(&self.eigenvalues)
            .map(|(w, a)| w * a.powi(k))
            .sum())
    }

    pub fn commutes_with(&self, other: &Observable, tol: f64) -> bool {
        self.projectors.iter().all(|p| {
            other
                .projectors
                .iter()
                .all(|q| max_abs(&commutator(p, q)) <= tol)
        })
    }

    pub fn residuals(&self) -> SpectralResiduals {
        let n = self.dim();
        let mut idempotence = 0.0_f64;
        let mut orthogonality = 0.0_f64;
        for (i, p) in self.projectors.iter().enumerate() {
            idempotence = idempotence
                .max(max_abs(&(p * p - p)))
                .max(hermiticity_residual(p));
            for q in &self.projectors[i + 1..] {
                orthogonality = orthogonality.max(max_abs(&(p * q)));
            }
        }
        let sum = self
            .projectors
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, p| acc + p);
        SpectralResiduals {
            idempotence,
            orthogonality,
            completeness: max_abs(&(sum - CMatrix::identity(n, n))),
        }
    }
}

/// Spectral decomposition `H = sum_n a_n P_n`, merging eigenvalues closer
/// than `degeneracy_tol` into one projector.
pub fn spectral_decompose(h: &CMatrix, degeneracy_tol: f64) -> Result<Observable> {
    let n = require_square(h)?;
    if !(degeneracy_tol > 0.0) {
        return Err(Error::InvalidArgument("degeneracy_tol must be > 0".into()));
    }
    let residual = hermiticity_residual(h);
    if residual > INPUT_HERMITIAN_TOL {
        return Err(Error::NonHermitianInput { residual });
    }
    let (values, vectors) = hermitian_eigen(h);

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match groups.last_mut() {
            Some(g) if values[i] - values[*g.last().unwrap()] <= degeneracy_tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }

    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    for g in groups {
        let mean = g.iter().map(|&i| values[i]).sum::<f64>() / g.len() as f64;
        let p = g.iter().fold(CMatrix::zeros(n, n), |acc, &i| {
            let v = vectors.column(i);
            acc + v * v.adjoint()
        });
        eigenvalues.push(mean);
        projectors.push(hermitian_part(&p));
    }
    Ok(Observable {
        eigenvalues,
        projectors,
    })
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

fn ginibre(n: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Hilbert-Schmidt distributed density operator `G G^dagger / Tr(G G^dagger)`
/// with `G` complex Ginibre; deterministic in `seed`.
pub fn random_density(n: usize, seed: u64) -> DensityOperator {
    assert!(n >= 1, "dimension must be >= 1");
    let mut rng = stream_rng(seed, &[0x0de5]);
    let g = ginibre(n, &mut rng);
    DensityOperator::repaired(&g * g.adjoint())
}

/// GUE-like Hermitian matrix `(G + G^dagger) / 2`; deterministic in `seed`.
pub fn random_hermitian(n: usize, seed: u64) -> CMatrix {
    assert!(n >= 1, "dimension must be >= 1");
    let mut rng = stream_rng(seed, &[0x4e12]);
    hermitian_part(&ginibre(n, &mut rng))
}

/// Haar-random unit vector; deterministic in `seed`.
pub fn random_unit_vector(n: usize, seed: u64) -> CVector {
    assert!(n >= 1, "dimension must be >= 1");
    let mut rng = stream_rng(seed, &[0x7ec7]);
    CVector::from_fn(n, |_, _| {
        c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
    .normalize()
}

// ---------------------------------------------------------------------------
// Basis pairs
// ---------------------------------------------------------------------------

const BASIS_ORTHONORMAL_TOL: f64 = 1e-12;
const MUTUAL_OVERLAP_MIN: f64 = 1e-10;

/// Two orthonormal bases `{|k>}` and `{|mu)}` with no mutually orthogonal
/// pair, plus the overlap table `overlaps[(mu, k)] = (mu|k>`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    basis_k: Vec<CVector>,
    basis_mu: Vec<CVector>,
    overlaps: CMatrix,
}

fn check_orthonormal(basis: &[CVector], n: usize) -> Result<()> {
    if basis.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.len(),
        });
    }
    for v in basis {
        require_dim(n, v.len())?;
    }
    let mut residual = 0.0_f64;
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((u.dotc(v) - target).norm());
        }
    }
    if residual > BASIS_ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { residual });
    }
    Ok(())
}

/// Validates both bases and precomputes the overlap table.
pub fn make_basis_pair(basis_k: Vec<CVector>, basis_mu: Vec<CVector>) -> Result<BasisPair> {
    let n = basis_k.len();
    if n == 0 {
        return Err(Error::InvalidArgument("bases must be nonempty".into()));
    }
    check_orthonormal(&basis_k, n)?;
    check_orthonormal(&basis_mu, n)?;
    let overlaps = CMatrix::from_fn(n, n, |mu, k| basis_mu[mu].dotc(&basis_k[k]));
    for k in 0..n {
        for mu in 0..n {
            let overlap = overlaps[(mu, k)].norm();
            if overlap < MUTUAL_OVERLAP_MIN {
                return Err(Error::MutuallyOrthogonalPair { k, mu, overlap });
            }
        }
    }
    Ok(BasisPair {
        basis_k,
        basis_mu,
        overlaps,
    })
}

pub fn computational_basis(n: usize) -> Vec<CVector> {
    (0..n)
        .map(|i| CVector::from_fn(n, |r, _| if r == i { c64(1., 0.) } else { c64(0., 0.) }))
        .collect()
}

/// Discrete-Fourier basis `|mu)_j = exp(2 pi i mu j / N) / sqrt(N)`.
pub fn fourier_basis(n: usize) -> Vec<CVector> {
    let norm = (n as f64).sqrt();
    (0..n)
        .map(|mu| {
            CVector::from_fn(n, |j, _| {
                let phase = 2.0 * PI * ((mu * j) % n) as f64 / n as f64;
                Complex64::from_polar(1.0 / norm, phase)
            })
        })
        .collect()
}

impl BasisPair {
    /// Computational basis paired with the discrete-Fourier basis. For
    /// `N = 2` this is the `sigma_z` / `sigma_x` pair with `mu = 0` the `+`
    /// state and `mu = 1` the `-` state.
    pub fn computational_fourier(n: usize) -> Self {
        make_basis_pair(computational_basis(n), fourier_basis(n))
            .expect("computational/Fourier pair is always valid")
    }

    pub fn dim(&self) -> usize {
        self.basis_k.len()
    }

    pub fn basis_k(&self) -> &[CVector] {
        &self.basis_k
    }

    pub fn basis_mu(&self) -> &[CVector] {
        &self.basis_mu
    }

    /// `(mu|k>`.
    pub fn overlap(&self, mu: usize, k: usize) -> Complex64 {
        self.overlaps[(mu, k)]
    }

    pub fn overlaps(&self) -> &CMatrix {
        &self.overlaps
    }

    pub fn k_projector(&self, k: usize) -> CMatrix {
        projector(&self.basis_k[k])
    }

    pub fn mu_projector(&self, mu: usize) -> CMatrix {
        projector(&self.basis_mu[mu])
    }

    /// `<k|M|k'>` for a matrix given in the computational basis.
    pub fn k_element(&self, m: &CMatrix, k: usize, k_prime: usize) -> Complex64 {
        self.basis_k[k].dotc(&(m * &self.basis_k[k_prime]))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorJson {
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisPairJson {
    basis_k: Vec<VectorJson>,
    basis_mu: Vec<VectorJson>,
}

fn to_vector_json(v: &CVector) -> VectorJson {
    VectorJson {
        re: v.iter().map(|z| z.re).collect(),
        im: v.iter().map(|z| z.im).collect(),
    }
}

fn from_vector_json(v: VectorJson) -> std::result::Result<CVector, String> {
    if v.re.len() != v.im.len() {
        return Err("vector re/im lengths differ".into());
    }
    Ok(CVector::from_iterator(
        v.re.len(),
        v.re.iter().zip(&v.im).map(|(&r, &i)| c64(r, i)),
    ))
}

impl Serialize for BasisPair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BasisPairJson {
            basis_k: self.basis_k.iter().map(to_vector_json).collect(),
            basis_mu: self.basis_mu.iter().map(to_vector_json).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BasisPair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = BasisPairJson::deserialize(d)?;
        let conv = |vs: Vec<VectorJson>| -> std::result::Result<Vec<CVector>, D::Error> {
            vs.into_iter()
                .map(|v| from_vector_json(v).map_err(D::Error::custom))
                .collect()
        };
        let k = conv(raw.basis_k)?;
        let mu = conv(raw.basis_mu)?;
        make_basis_pair(k, mu).map_err(D::Error::custom)
    }
}
