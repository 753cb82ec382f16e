//! Noise models: square-root-information whitening and robust kernels.
//!
//! A [`LossFunction`] holds an upper-triangular `R` with `RᵀR = Σ⁻¹`, so that
//! `‖Rv‖² = vᵀΣ⁻¹v`. An optional [`RobustKernel`] down-weights large whitened
//! residuals by rescaling both the residual and the Jacobian rows with `√w`,
//! where `w = ρ'(‖Rv‖²)`. The cost reported for a factor is `ρ(‖Rv‖²)`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_HUBER_THRESHOLD: f64 = 1.345;
pub const DEFAULT_CAUCHY_SCALE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum RobustKernel {
    #[default]
    None,
    /// Quadratic up to `k`, linear beyond.
    Huber(f64),
    /// `ρ(s) = k² ln(1 + s/k²)`.
    Cauchy(f64),
}

impl RobustKernel {
    pub fn huber(k: f64) -> Result<Self> {
        check_param(k).map(RobustKernel::Huber)
    }

    pub fn cauchy(k: f64) -> Result<Self> {
        check_param(k).map(RobustKernel::Cauchy)
    }

    /// IRLS weight for a whitened residual of norm `rnorm`.
    pub fn weight(&self, rnorm: f64) -> f64 {
        robust_weight(*self, rnorm)
    }

    /// Robust cost of a squared whitened norm `s`.
    pub fn rho(&self, s: f64) -> f64 {
        match *self {
            RobustKernel::None => s,
            RobustKernel::Huber(k) => {
                if s <= k * k {
                    s
                } else {
                    2.0 * k * s.sqrt() - k * k
                }
            }
            RobustKernel::Cauchy(k) => k * k * (s / (k * k)).ln_1p(),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, RobustKernel::None)
    }
}

fn check_param(k: f64) -> Result<f64> {
    if k > 0.0 && k.is_finite() {
        Ok(k)
    } else {
        Err(Error::InvalidLoss(format!(
            "robust kernel parameter must be positive, got {k}"
        )))
    }
}

/// `w(r)` in (0, 1], non-increasing in `rnorm`, with `w(0) = 1`.
pub fn robust_weight(kernel: RobustKernel, rnorm: f64) -> f64 {
    match kernel {
        RobustKernel::None => 1.0,
        RobustKernel::Huber(k) => {
            if rnorm <= k {
                1.0
            } else {
                k / rnorm
            }
        }
        RobustKernel::Cauchy(k) => {
            let u = rnorm / k;
            1.0 / (1.0 + u * u)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Whitening {
    Unit(usize),
    Diagonal(DVector<f64>),
    /// Upper triangular `r`, and the information matrix it was built from so
    /// that it can be reported without round-off.
    Full {
        r: DMatrix<f64>,
        information: DMatrix<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossFunction {
    whitening: Whitening,
    kernel: RobustKernel,
}

impl LossFunction {
    /// Identity whitening of dimension `dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            whitening: Whitening::Unit(dim),
            kernel: RobustKernel::None,
        }
    }

    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self> {
        Self::diagonal_sigmas(&vec![sigma; dim])
    }

    /// `R = diag(1/σ₁, …, 1/σₘ)`.
    pub fn diagonal_sigmas(sigmas: &[f64]) -> Result<Self> {
        if let Some(bad) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidLoss(format!(
                "sigmas must be positive, got {bad}"
            )));
        }
        Ok(Self {
            whitening: Whitening::Diagonal(DVector::from_iterator(
                sigmas.len(),
                sigmas.iter().map(|s| 1.0 / s),
            )),
            kernel: RobustKernel::None,
        })
    }

    /// From a covariance Σ: `R` is the upper Cholesky factor of Σ⁻¹.
    pub fn from_covariance(sigma: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(sigma, "covariance")?;
        let chol = Cholesky::new(sigma.clone()).ok_or_else(|| {
            Error::InvalidLoss("covariance is not positive definite".into())
        })?;
        let information = chol.inverse();
        Self::from_information(&symmetrize(&information))
    }

    /// From an information matrix Σ⁻¹ directly, without inverting twice.
    pub fn from_information(information: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(information, "information")?;
        let information = symmetrize(information);
        let chol = Cholesky::new(information.clone()).ok_or_else(|| {
            Error::InvalidLoss("information matrix is not positive definite".into())
        })?;
        let r = chol.l().transpose();
        Ok(Self {
            whitening: Whitening::Full { r, information },
            kernel: RobustKernel::None,
        })
    }

    pub fn with_kernel(mut self, kernel: RobustKernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn kernel(&self) -> RobustKernel {
        self.kernel
    }

    pub fn dim(&self) -> usize {
        match &self.whitening {
            Whitening::Unit(n) => *n,
            Whitening::Diagonal(d) => d.len(),
            Whitening::Full { r, .. } => r.nrows(),
        }
    }

    /// The whitening matrix `R`.
    pub fn sqrt_information(&self) -> DMatrix<f64> {
        match &self.whitening {
            Whitening::Unit(n) => DMatrix::identity(*n, *n),
            Whitening::Diagonal(d) => DMatrix::from_diagonal(d),
            Whitening::Full { r, .. } => r.clone(),
        }
    }

    /// The information matrix `RᵀR` this loss represents.
    pub fn information(&self) -> DMatrix<f64> {
        match &self.whitening {
            Whitening::Unit(n) => DMatrix::identity(*n, *n),
            Whitening::Diagonal(d) => DMatrix::from_diagonal(&d.map(|x| x * x)),
            Whitening::Full { information, .. } => information.clone(),
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "loss function".into(),
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }

    /// `Rv`, ignoring the robust kernel.
    pub fn whiten(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(v.len())?;
        Ok(match &self.whitening {
            Whitening::Unit(_) => v.clone(),
            Whitening::Diagonal(d) => v.component_mul(d),
            Whitening::Full { r, .. } => r * v,
        })
    }

    fn whiten_rows(&self, m: &mut DMatrix<f64>) {
        match &self.whitening {
            Whitening::Unit(_) => {}
            Whitening::Diagonal(d) => {
                for (i, mut row) in m.row_iter_mut().enumerate() {
                    row *= d[i];
                }
            }
            Whitening::Full { r, .. } => *m = r * &*m,
        }
    }

    /// `√w · Rv`.
    pub fn whiten_error(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let mut r = self.whiten(v)?;
        if !self.kernel.is_none() {
            r *= self.kernel.weight(r.norm()).sqrt();
        }
        Ok(r)
    }

    /// Applies the same transform as [`whiten_error`](Self::whiten_error)
    /// to every Jacobian block and to the residual.
    pub fn whiten_system(
        &self,
        mut blocks: Vec<DMatrix<f64>>,
        v: DVector<f64>,
    ) -> Result<(Vec<DMatrix<f64>>, DVector<f64>)> {
        self.check_dim(v.len())?;
        for b in &blocks {
            self.check_dim(b.nrows())?;
        }
        let mut r = self.whiten(&v)?;
        for b in blocks.iter_mut() {
            self.whiten_rows(b);
        }
        if !self.kernel.is_none() {
            let scale = self.kernel.weight(r.norm()).sqrt();
            r *= scale;
            for b in blocks.iter_mut() {
                *b *= scale;
            }
        }
        Ok((blocks, r))
    }

    /// `ρ(‖Rv‖²)`.
    pub fn cost(&self, v: &DVector<f64>) -> Result<f64> {
        let r = self.whiten(v)?;
        Ok(self.kernel.rho(r.norm_squared()))
    }
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidLoss(format!("{what} matrix is not square")));
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-9 * scale {
        return Err(Error::InvalidLoss(format!("{what} matrix is not symmetric")));
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}
