//! Spectral analysis of saddle-point matrices
//!
//! ```text
//! N = [  X   Z^T ]
//!     [ -Z    Y  ]
//! ```
//!
//! with X symmetric positive definite (n x n), Z full row rank (m x n,
//! m <= n) and Y symmetric positive semidefinite (m x m). For Y = 0 the
//! eigenvalues of N obey a scalar quadratic in the Rayleigh quotients of
//! X and Z^T Z over the upper eigenvector block, which is what makes the
//! damping-injection tuning rules possible: realness of the spectrum,
//! real parts and moduli of complex pairs are all readable from those
//! quotients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Validated saddle-point matrix. Immutable after construction and safe
/// to share across threads.
#[derive(Debug, Clone)]
pub struct SaddlePointMatrix {
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl SaddlePointMatrix {
    /// Validates block dimensions, symmetry, definiteness and the rank
    /// of Z, then assembles the value.
    pub fn new(x: DMatrix<f64>, z: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        let n = x.nrows();
        let m = y.nrows();
        if x.ncols() != n || y.ncols() != m {
            return Err(Error::DimensionMismatch(
                "X and Y must be square".into(),
            ));
        }
        if z.nrows() != m || z.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Z must be {m}x{n}, got {}x{}",
                z.nrows(),
                z.ncols()
            )));
        }
        if m > n {
            return Err(Error::DimensionMismatch(format!(
                "m = {m} exceeds n = {n}"
            )));
        }
        linalg::check_symmetric(&x, "X")?;
        if !linalg::is_positive_definite(&x) {
            return Err(Error::NotPositiveDefiniteX);
        }
        if m > 0 {
            linalg::check_symmetric(&y, "Y")?;
            if !linalg::is_positive_semidefinite(&y) {
                return Err(Error::NotPositiveSemidefiniteY);
            }
            let r = linalg::rank(&z);
            if r < m {
                return Err(Error::RankDeficientZ { rank: r, expected: m });
            }
        }
        Ok(Self { x, z, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.y.nrows()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// True when the Y block is exactly zero.
    pub fn y_is_zero(&self) -> bool {
        self.y.iter().all(|&e| e == 0.0)
    }

    /// Z^T Z, the Gram matrix entering every Rayleigh-quotient identity.
    pub fn ztz(&self) -> DMatrix<f64> {
        linalg::symmetrize(&(self.z.transpose() * &self.z))
    }

    /// Materializes the full (n+m) x (n+m) matrix [[X, Z^T], [-Z, Y]].
    pub fn full(&self) -> DMatrix<f64> {
        let n = self.n();
        let m = self.m();
        let mut full = DMatrix::zeros(n + m, n + m);
        full.view_mut((0, 0), (n, n)).copy_from(&self.x);
        full.view_mut((0, n), (n, m)).copy_from(&self.z.transpose());
        full.view_mut((n, 0), (m, n)).copy_from(&(-&self.z));
        full.view_mut((n, n), (m, m)).copy_from(&self.y);
        full
    }
}

/// One eigenvalue of N with its eigenvector split into the upper block
/// v (length n) and lower block w (length m). The stacked vector has
/// unit norm.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: C64,
    pub v: DVector<C64>,
    pub w: DVector<C64>,
}

impl EigenPair {
    /// True when the eigenvalue is real up to the realness tolerance.
    pub fn is_real(&self) -> bool {
        linalg::is_effectively_real(self.lambda)
    }

    /// Damping ratio |Re| / |lambda|; exactly 1 for real eigenvalues.
    pub fn damping_ratio(&self) -> f64 {
        if self.is_real() {
            1.0
        } else {
            self.lambda.re.abs() / self.lambda.norm()
        }
    }

    /// Rayleigh quotient v^* X v / v^* v.
    pub fn x_quotient(&self, n_mat: &SaddlePointMatrix) -> f64 {
        linalg::hermitian_quotient(n_mat.x(), &self.v)
    }

    /// Rayleigh quotient v^* (Z^T Z) v / v^* v.
    pub fn ztz_quotient(&self, n_mat: &SaddlePointMatrix) -> f64 {
        linalg::hermitian_quotient(&n_mat.ztz(), &self.v)
    }
}

/// Outcome of the realness classification over the whole spectrum.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// All eigenpairs, sorted by ascending real part then |Im|.
    pub pairs: Vec<EigenPair>,
    /// True iff every eigenvalue is real up to the realness tolerance.
    pub all_real: bool,
    /// The slowest eigenvalue: minimal Re among Re > 0, ties resolved
    /// toward larger |Im| (the conservative, lower-damping report).
    /// Represented with Im >= 0.
    pub dominant: C64,
    /// Damping ratio of the dominant eigenvalue, in [0, 1].
    pub dominant_zeta: f64,
    /// Discriminant (v^*Xv/v^*v)^2 - 4 v^*(Z^T Z)v/(v^*v) per pair.
    pub per_pair_discriminants: Vec<f64>,
}

/// Builds a [`SaddlePointMatrix`] after validating every block invariant.
pub fn assemble_saddle(
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    y: DMatrix<f64>,
) -> Result<SaddlePointMatrix> {
    SaddlePointMatrix::new(x, z, y)
}

/// All n+m eigenpairs of N, conjugate-closed, each with residual
/// `||N eta - lambda eta|| <= 1e-8 ||N||`.
pub fn eigen_pairs(n_mat: &SaddlePointMatrix) -> Result<Vec<EigenPair>> {
    let full = n_mat.full();
    let raw = linalg::dense_eigenpairs(&full)?;
    let n = n_mat.n();
    Ok(raw
        .into_iter()
        .map(|(lambda, eta)| EigenPair {
            lambda,
            v: eta.rows(0, n).into_owned(),
            w: eta.rows(n, n_mat.m()).into_owned(),
        })
        .collect())
}

fn dominant_of(pairs: &[EigenPair]) -> Result<(C64, f64)> {
    let mut best: Option<&EigenPair> = None;
    for pair in pairs {
        if pair.lambda.re <= 0.0 {
            return Err(Error::UnstableSpectrum);
        }
        let better = match best {
            None => true,
            Some(b) => {
                pair.lambda.re < b.lambda.re
                    || (pair.lambda.re == b.lambda.re
                        && pair.lambda.im.abs() > b.lambda.im.abs())
            }
        };
        if better {
            best = Some(pair);
        }
    }
    let best = best.ok_or(Error::UnstableSpectrum)?;
    let rep = if best.lambda.im < 0.0 {
        best.lambda.conj()
    } else {
        best.lambda
    };
    Ok((rep, best.damping_ratio()))
}

/// Classifies the spectrum of a Y = 0 saddle-point matrix: computes all
/// eigenpairs, their quotient discriminants, and the dominant pair.
pub fn check_real_spectrum(n_mat: &SaddlePointMatrix) -> Result<SpectrumReport> {
    if !n_mat.y_is_zero() {
        return Err(Error::NonzeroY);
    }
    let pairs = eigen_pairs(n_mat)?;
    let ztz = n_mat.ztz();
    let per_pair_discriminants = pairs
        .iter()
        .map(|pair| {
            let xq = linalg::hermitian_quotient(n_mat.x(), &pair.v);
            let zq = linalg::hermitian_quotient(&ztz, &pair.v);
            xq * xq - 4.0 * zq
        })
        .collect();
    let all_real = pairs.iter().all(EigenPair::is_real);
    let (dominant, dominant_zeta) = dominant_of(&pairs)?;
    Ok(SpectrumReport {
        pairs,
        all_real,
        dominant,
        dominant_zeta,
        per_pair_discriminants,
    })
}

/// The slowest pole and its damping ratio. Errors when any eigenvalue
/// sits outside the open right half-plane.
pub fn dominant_damping(report: &SpectrumReport) -> Result<(C64, f64)> {
    dominant_of(&report.pairs)
}

/// Residuals of the complex-pair identities: for each non-real
/// eigenpair returns
/// `r1 = |v^*Xv/(v^*v) - 2 Re(lambda)|` and
/// `r2 = |v^*(Z^T Z)v/(v^*v) - |lambda|^2|`.
/// Real spectra produce an empty list.
pub fn complex_pair_residuals(n_mat: &SaddlePointMatrix) -> Result<Vec<(f64, f64)>> {
    if !n_mat.y_is_zero() {
        return Err(Error::NonzeroY);
    }
    let pairs = eigen_pairs(n_mat)?;
    let ztz = n_mat.ztz();
    Ok(pairs
        .iter()
        .filter(|pair| !pair.is_real())
        .map(|pair| {
            let xq = linalg::hermitian_quotient(n_mat.x(), &pair.v);
            let zq = linalg::hermitian_quotient(&ztz, &pair.v);
            let r1 = (xq - 2.0 * pair.lambda.re).abs();
            let r2 = (zq - pair.lambda.norm_sqr()).abs();
            (r1, r2)
        })
        .collect())
}
