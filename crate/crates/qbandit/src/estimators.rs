//! Online (weighted) least squares, confidence ellipsoids and the
//! median-of-means estimator bank.

use crate::error::{Error, Result};
use crate::matcore::{axpy, eig_sym, sub, EigenDecomposition, SymMatrix};

/// Regularised, optionally weighted Gram matrix `V = λ₀I + Σ w_s a_s a_sᵀ`
/// with a cached eigendecomposition.
///
/// The decomposition is recomputed after every update: all dimensions here
/// are tiny, so a fresh Jacobi solve is cheaper and more robust than any
/// incremental scheme.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    lambda0: f64,
    v: SymMatrix,
    eig: EigenDecomposition,
    log_det0: f64,
}

impl DesignMatrix {
    /// `V₀ = λ₀ I_dim`.
    pub fn new(dim: usize, lambda0: f64) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(Error::contract(format!(
                "regulariser must be finite and positive, got {lambda0}"
            )));
        }
        if dim == 0 {
            return Err(Error::contract("design dimension must be positive"));
        }
        let v = SymMatrix::scaled_identity(dim, lambda0);
        let eig = eig_sym(&v)?;
        Ok(Self {
            lambda0,
            log_det0: dim as f64 * lambda0.ln(),
            v,
            eig,
        })
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// Regulariser `λ₀`.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// The matrix `V`.
    pub fn matrix(&self) -> &SymMatrix {
        &self.v
    }

    /// Cached eigendecomposition of `V`.
    pub fn eig(&self) -> &EigenDecomposition {
        &self.eig
    }

    /// `λ_min(V)`.
    pub fn lambda_min(&self) -> f64 {
        self.eig.min()
    }

    /// `λ_max(V)`.
    pub fn lambda_max(&self) -> f64 {
        self.eig.max()
    }

    /// `ln det V`, accumulated from the eigenvalues.
    pub fn log_det(&self) -> f64 {
        self.eig.log_det()
    }

    /// `ln(det V / det V₀)`.
    pub fn log_det_ratio(&self) -> f64 {
        self.log_det() - self.log_det0
    }

    /// `V ← V + w·a aᵀ`.
    pub fn update(&mut self, a: &[f64], w: f64) -> Result<()> {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::contract(format!(
                "design weight must be finite and nonnegative, got {w}"
            )));
        }
        self.v.add_rank1(a, w)?;
        self.eig = eig_sym(&self.v)?;
        Ok(())
    }

    /// Appends one coordinate with diagonal entry `λ₀` (the design of a
    /// problem whose feature space just grew by one orthogonal direction).
    pub fn grow(&mut self) -> Result<()> {
        self.v.extend_diag(self.lambda0);
        self.log_det0 += self.lambda0.ln();
        self.eig = eig_sym(&self.v)?;
        Ok(())
    }

    /// `V⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: b.len(),
            });
        }
        self.eig.solve(b)
    }

    /// `‖x‖_{V⁻¹}`.
    pub fn inv_norm(&self, x: &[f64]) -> f64 {
        self.eig.inv_quad_form(x).max(0.0).sqrt()
    }

    /// `‖x‖²_V`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.v.quad_form(x)
    }
}

/// Weighted least-squares accumulator: `θ̂ = V⁻¹ Σ w_s X_s a_s`.
#[derive(Debug, Clone)]
pub struct LseAccumulator {
    design: DesignMatrix,
    moment: Vec<f64>,
}

impl LseAccumulator {
    /// Fresh accumulator with regulariser `λ₀`.
    pub fn new(dim: usize, lambda0: f64) -> Result<Self> {
        Ok(Self {
            design: DesignMatrix::new(dim, lambda0)?,
            moment: vec![0.0; dim],
        })
    }

    /// Design matrix.
    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    /// Moment vector `Σ w X a`.
    pub fn moment(&self) -> &[f64] {
        &self.moment
    }

    /// Adds the observation `(a, x)` with weight `w > 0`.
    pub fn update(&mut self, a: &[f64], x: f64, w: f64) -> Result<()> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::contract(format!(
                "observation weight must be finite and positive, got {w}"
            )));
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
        self.design.update(a, w)?;
        axpy(&mut self.moment, w * x, a);
        Ok(())
    }

    /// Appends one zero-moment coordinate (see [`DesignMatrix::grow`]).
    pub fn grow(&mut self) -> Result<()> {
        self.design.grow()?;
        self.moment.push(0.0);
        Ok(())
    }

    /// The least-squares estimate `V⁻¹·moment`.
    pub fn estimate(&self) -> Result<Vec<f64>> {
        self.design.solve(&self.moment)
    }
}

/// Confidence ellipsoid `{x : ‖x − center‖²_metric ≤ radius_sq}`.
#[derive(Debug, Clone)]
pub struct ConfidenceEllipsoid {
    center: Vec<f64>,
    metric: SymMatrix,
    radius_sq: f64,
}

impl ConfidenceEllipsoid {
    /// Builds an ellipsoid; the radius must be finite and positive and the
    /// metric positive definite.
    pub fn new(center: Vec<f64>, metric: SymMatrix, radius_sq: f64) -> Result<Self> {
        if !(radius_sq.is_finite() && radius_sq > 0.0) {
            return Err(Error::contract(format!(
                "ellipsoid radius must be finite and positive, got {radius_sq}"
            )));
        }
        if center.len() != metric.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                found: center.len(),
            });
        }
        let min = eig_sym(&metric)?.min();
        if min <= 0.0 {
            return Err(Error::Singular(min));
        }
        Ok(Self {
            center,
            metric,
            radius_sq,
        })
    }

    /// The ellipsoid around an accumulator's estimate with its design as metric.
    pub fn around(acc: &LseAccumulator, radius_sq: f64) -> Result<Self> {
        Self::new(acc.estimate()?, acc.design().matrix().clone(), radius_sq)
    }

    /// Center.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Squared radius `β`.
    pub fn radius_sq(&self) -> f64 {
        self.radius_sq
    }

    /// `‖x − center‖²_metric`.
    pub fn distance_sq(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                found: x.len(),
            });
        }
        Ok(self.metric.quad_form(&sub(x, &self.center)))
    }

    /// Membership test.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.distance_sq(x)? <= self.radius_sq)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "failure probability must lie in (0, 1), got {delta}"
        )))
    }
}

/// LinUCB confidence radius
/// `β_t = (η√(2 ln(1/δ) + d ln((dλ + tL²)/(dλ))) + η√λ)²`.
pub fn beta_linucb(t: f64, delta: f64, lambda: f64, l: f64, eta: f64, d: usize) -> Result<f64> {
    check_delta(delta)?;
    if !(t >= 0.0 && lambda > 0.0 && d >= 1) {
        return Err(Error::contract("beta_linucb needs t ≥ 0, λ > 0 and d ≥ 1"));
    }
    let d = d as f64;
    let inner = 2.0 * (1.0 / delta).ln() + d * ((d * lambda + t * l * l) / (d * lambda)).ln();
    Ok((eta * inner.sqrt() + eta * lambda.sqrt()).powi(2))
}

/// Weighted confidence radius
/// `β = (√(2 ln(1/δ) + ln(det V / det V₀)) + √λ₀)²`.
pub fn beta_weighted(design: &DesignMatrix, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let ratio = design.log_det_ratio();
    if ratio < (1.0f64 - 1e-9).ln() {
        return Err(Error::contract(format!(
            "design determinant shrank (log ratio {ratio})"
        )));
    }
    let inner = 2.0 * (1.0 / delta).ln() + ratio.max(0.0);
    Ok((inner.sqrt() + design.lambda0().sqrt()).powi(2))
}

/// Constant median-of-means radius `β_w = 9(√(9d) + λ‖θ‖)²`.
pub fn beta_mom(d: usize, lambda: f64, theta_norm: f64) -> f64 {
    9.0 * ((9.0 * d as f64).sqrt() + lambda * theta_norm).powi(2)
}

/// `k` weighted least-squares estimators sharing a single design matrix.
///
/// Every round updates the shared design once with the common `(a, w)` and
/// each accumulator with its own reward.
#[derive(Debug, Clone)]
pub struct MomBank {
    design: DesignMatrix,
    moments: Vec<Vec<f64>>,
}

impl MomBank {
    /// `k ≥ 1` fresh accumulators.
    pub fn new(dim: usize, lambda0: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::contract("median of means needs k ≥ 1"));
        }
        Ok(Self {
            design: DesignMatrix::new(dim, lambda0)?,
            moments: vec![vec![0.0; dim]; k],
        })
    }

    /// Number of accumulators.
    pub fn k(&self) -> usize {
        self.moments.len()
    }

    /// Shared design matrix.
    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    /// Updates the shared design with `(a, w)` and accumulator `i` with
    /// `rewards[i]`.
    pub fn update(&mut self, a: &[f64], rewards: &[f64], w: f64) -> Result<()> {
        if rewards.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: rewards.len(),
            });
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::contract(format!(
                "observation weight must be finite and positive, got {w}"
            )));
        }
        if rewards.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("reward"));
        }
        self.design.update(a, w)?;
        for (m, x) in self.moments.iter_mut().zip(rewards) {
            axpy(m, w * x, a);
        }
        Ok(())
    }

    /// All `k` estimates.
    pub fn estimates(&self) -> Result<Vec<Vec<f64>>> {
        self.moments.iter().map(|m| self.design.solve(m)).collect()
    }
}

/// Median-of-means selection: the estimate whose (lower) median
/// `V`-distance to the other estimates is smallest, ties to the lowest index.
pub fn mom_select(bank: &MomBank) -> Result<Vec<f64>> {
    let est = bank.estimates()?;
    Ok(est[mom_index(&est, bank.design().matrix())].clone())
}

/// Index selected by [`mom_select`] for explicit estimates and metric.
pub fn mom_index(estimates: &[Vec<f64>], metric: &SymMatrix) -> usize {
    let k = estimates.len();
    if k <= 2 {
        return 0;
    }
    let mut dist = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = metric
                .quad_form(&sub(&estimates[i], &estimates[j]))
                .max(0.0)
                .sqrt();
            dist[i * k + j] = d;
            dist[j * k + i] = d;
        }
    }
    let mut best = (0, f64::INFINITY);
    let mut row = Vec::with_capacity(k - 1);
    for j in 0..k {
        row.clear();
        row.extend((0..k).filter(|&i| i != j).map(|i| dist[j * k + i]));
        row.sort_by(f64::total_cmp);
        let med = row[(row.len() - 1) / 2];
        if med < best.1 {
            best = (j, med);
        }
    }
    best.0
}

/// Both sides of the elliptical potential inequality for the actions
/// `a_1..a_T` with `V₀ = λ₀ I` and `‖a_t‖ ≤ L`:
/// returns `(Σ_t min{1, ‖a_t‖²_{V_{t−1}⁻¹}}, 2d ln((tr V₀ + T L²)/(d det V₀^{1/d})))`.
pub fn elliptical_potential(actions: &[Vec<f64>], lambda0: f64, l: f64) -> Result<(f64, f64)> {
    let d = actions.first().map_or(1, Vec::len);
    let mut design = DesignMatrix::new(d, lambda0)?;
    let mut lhs = 0.0;
    for a in actions {
        lhs += design.eig().inv_quad_form(a).min(1.0);
        design.update(a, 1.0)?;
    }
    let df = d as f64;
    let rhs = 2.0 * df * ((df * lambda0 + actions.len() as f64 * l * l) / (df * lambda0)).ln();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lse_single_update() {
        let mut acc = LseAccumulator::new(2, 1.0).unwrap();
        assert_eq!(acc.estimate().unwrap(), vec![0.0, 0.0]);
        acc.update(&[1.0, 0.0], 1.0, 1.0).unwrap();
        let e = acc.estimate().unwrap();
        assert_abs_diff_eq!(e[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lse_zero_reward_and_linearity() {
        let mut acc = LseAccumulator::new(2, 1.0).unwrap();
        acc.update(&[0.6, 0.8], 0.0, 1.0).unwrap();
        assert_eq!(acc.moment(), &[0.0, 0.0]);
        let mut a = LseAccumulator::new(2, 1.0).unwrap();
        let mut b = LseAccumulator::new(2, 1.0).unwrap();
        a.update(&[0.6, 0.8], 0.3, 0.5).unwrap();
        a.update(&[0.6, 0.8], 0.3, 0.5).unwrap();
        b.update(&[0.6, 0.8], 0.3, 1.0).unwrap();
        for (x, y) in a.moment().iter().zip(b.moment()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
        for (x, y) in a
            .design()
            .matrix()
            .as_slice()
            .iter()
            .zip(b.design().matrix().as_slice())
        {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
        assert!(a.update(&[1.0, 0.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn lse_recovers_noiseless_theta() {
        let theta = [0.3, -0.5, 0.8];
        let mut acc = LseAccumulator::new(3, 1e-8).unwrap();
        for a in [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.6, 0.8],
            [0.6, 0.0, 0.8],
        ] {
            acc.update(&a, crate::matcore::dot(&a, &theta), 1.0)
                .unwrap();
        }
        for (e, t) in acc.estimate().unwrap().iter().zip(theta) {
            assert_abs_diff_eq!(*e, t, epsilon = 1e-6);
        }
    }

    #[test]
    fn beta_linucb_examples() {
        let b0 = beta_linucb(0.0, 0.1, 1.0, 1.0, 1.0, 3).unwrap();
        assert_abs_diff_eq!(
            b0,
            ((2.0 * 10f64.ln()).sqrt() + 1.0).powi(2),
            epsilon = 1e-12
        );
        assert_eq!(beta_linucb(50.0, 0.1, 1.0, 1.0, 0.0, 3).unwrap(), 0.0);
        // Independent evaluation: 2 ln 10 + 3 ln(103/3).
        let direct = ((2.0 * 10f64.ln() + 3.0 * (103.0f64 / 3.0).ln()).sqrt() + 1.0).powi(2);
        assert_abs_diff_eq!(
            beta_linucb(100.0, 0.1, 1.0, 1.0, 1.0, 3).unwrap(),
            direct,
            epsilon = 1e-12
        );
        assert!(beta_linucb(1.0, 1.0, 1.0, 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn beta_weighted_examples() {
        let mut design = DesignMatrix::new(3, 2.0).unwrap();
        let b = beta_weighted(&design, 0.5).unwrap();
        assert_abs_diff_eq!(
            b,
            ((2.0 * 2f64.ln()).sqrt() + 2f64.sqrt()).powi(2),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            beta_weighted(&design, 1.0 - 1e-15).unwrap(),
            2.0,
            epsilon = 1e-6
        );
        design.update(&[1.0, 0.0, 0.0], 1.0).unwrap();
        let expect = ((2.0 * 2f64.ln() + 1.5f64.ln()).sqrt() + 2f64.sqrt()).powi(2);
        assert_abs_diff_eq!(
            beta_weighted(&design, 0.5).unwrap(),
            expect,
            epsilon = 1e-12
        );
    }

    #[test]
    fn beta_mom_examples() {
        assert_abs_diff_eq!(
            beta_mom(3, 2.0, 1.0),
            279.0 + 108.0 * 3f64.sqrt(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(beta_mom(3, 2.0, 1.0), 466.061, epsilon = 1e-3);
        assert_abs_diff_eq!(beta_mom(5, 0.0, 1.0), 405.0, epsilon = 1e-12);
        assert_abs_diff_eq!(beta_mom(1, 1.0, 1.0), 144.0, epsilon = 1e-12);
    }

    #[test]
    fn mom_select_examples() {
        let metric = SymMatrix::identity(2);
        let single = vec![vec![0.1, 0.2]];
        assert_eq!(mom_index(&single, &metric), 0);
        let same = vec![vec![0.3, 0.3]; 3];
        assert_eq!(mom_index(&same, &metric), 0);
        let outlier = vec![vec![10.0, 10.0], vec![0.5, 0.5], vec![0.5, 0.5]];
        assert_ne!(mom_index(&outlier, &metric), 0);
        let outlier = vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![-9.0, 4.0]];
        assert_ne!(mom_index(&outlier, &metric), 2);
    }

    #[test]
    fn mom_bank_shares_design() {
        let mut bank = MomBank::new(2, 1.0, 3).unwrap();
        bank.update(&[1.0, 0.0], &[1.0, 0.0, -0.2], 1.0).unwrap();
        let e = bank.estimates().unwrap();
        assert_abs_diff_eq!(e[0][0], 0.5);
        assert_abs_diff_eq!(e[1][0], 0.0);
        assert_abs_diff_eq!(e[2][0], -0.1);
        assert_abs_diff_eq!(bank.design().matrix().get(0, 0), 2.0);
        assert_eq!(mom_select(&bank).unwrap(), e[1]);
        assert!(MomBank::new(2, 1.0, 0).is_err());
    }

    #[test]
    fn ellipsoid_membership() {
        let ell =
            ConfidenceEllipsoid::new(vec![0.0, 0.0], SymMatrix::diag(&[4.0, 1.0]), 1.0).unwrap();
        assert!(ell.contains(&[0.0, 0.0]).unwrap());
        assert!(ell.contains(&[0.4, 0.0]).unwrap());
        assert!(!ell.contains(&[0.6, 0.0]).unwrap());
        let unit = ConfidenceEllipsoid::new(vec![1.0, 1.0], SymMatrix::identity(2), 1.0).unwrap();
        assert!(!unit.contains(&[3.0, 1.0]).unwrap());
        assert!(ConfidenceEllipsoid::new(vec![0.0], SymMatrix::identity(1), 0.0).is_err());
    }

    #[test]
    fn elliptical_potential_holds_on_a_fixed_sequence() {
        let actions: Vec<Vec<f64>> = (0..200)
            .map(|i| vec![(i as f64).cos(), (i as f64).sin(), 0.0])
            .collect();
        let (lhs, rhs) = elliptical_potential(&actions, 1.0, 1.0).unwrap();
        assert!(lhs <= rhs);
    }
}
