//! Problem data and validation.
//!
//! A problem is sampled on a uniform grid: coefficient paths `A, B, C, D, G`
//! hold one matrix per node, the running weights `Q, R` live on the triangle
//! `{(t_i, s_j) : i <= j}`. Validation checks the standing assumptions on the
//! samples: `Q >= 0`, `R >= delta I`, `G >= 0` (positivity) and monotone
//! nondecrease in the first time variable (the discount structure that makes
//! the diagonal a priori bound work). All norms are Frobenius.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("invalid problem data: {0}")]
    Invalid(String),
}

/// Uniform grid `t_i = i T / N`, `i = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self, ProblemError> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(ProblemError::Invalid(format!(
                "horizon must be a positive real, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(ProblemError::Invalid("grid needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `N + 1`.
    pub fn num_nodes(&self) -> usize {
        self.steps + 1
    }

    /// Spacing `T / N`.
    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Node `t_i = i T / N`; exact at both endpoints.
    pub fn node(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.steps as f64
    }
}

/// How a sampled path is read between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interp {
    Linear,
    /// Value of the left node on `[t_k, t_{k+1})`; used for bounded
    /// measurable coefficients that are not continuous.
    PiecewiseConstantLeft,
}

/// `(M + M')/2`.
pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrized(m).symmetric_eigen().eigenvalues.min()
}

fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// One matrix per grid node, fixed shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPath {
    values: Vec<DMatrix<f64>>,
    interp: Interp,
}

impl MatrixPath {
    pub fn new(values: Vec<DMatrix<f64>>, interp: Interp) -> Result<Self, ProblemError> {
        let first = values
            .first()
            .ok_or_else(|| ProblemError::ShapeMismatch("empty matrix path".into()))?;
        let (rows, cols) = first.shape();
        for (i, v) in values.iter().enumerate() {
            if v.shape() != (rows, cols) {
                return Err(ProblemError::ShapeMismatch(format!(
                    "path node {i} is {:?}, expected {:?}",
                    v.shape(),
                    (rows, cols)
                )));
            }
            if !all_finite(v) {
                return Err(ProblemError::NonFinite(format!("path node {i}")));
            }
        }
        Ok(Self { values, interp })
    }

    pub fn constant(value: DMatrix<f64>, num_nodes: usize) -> Result<Self, ProblemError> {
        Self::new(vec![value; num_nodes], Interp::Linear)
    }

    /// Sample a closure at the grid nodes.
    pub fn from_fn(
        grid: &TimeGrid,
        interp: Interp,
        f: impl Fn(f64) -> DMatrix<f64>,
    ) -> Result<Self, ProblemError> {
        Self::new((0..grid.num_nodes()).map(|i| f(grid.node(i))).collect(), interp)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.values[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.values[0].ncols()
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn node(&self, i: usize) -> &DMatrix<f64> {
        &self.values[i]
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    /// Value at time `t` (clamped to `[0, T]`) per the interpolation mode.
    pub fn eval(&self, grid: &TimeGrid, t: f64) -> DMatrix<f64> {
        let n = grid.steps();
        debug_assert_eq!(self.values.len(), n + 1);
        let u = (t / grid.dt()).clamp(0.0, n as f64);
        let k = (u.floor() as usize).min(n - 1);
        match self.interp {
            Interp::PiecewiseConstantLeft => {
                if u >= n as f64 {
                    self.values[n].clone()
                } else {
                    self.values[k].clone()
                }
            }
            Interp::Linear => {
                let w = u - k as f64;
                &self.values[k] * (1.0 - w) + &self.values[k + 1] * w
            }
        }
    }

    /// Largest Frobenius norm over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Symmetric matrices on the triangle `{(i, j) : 0 <= i <= j <= N}`.
///
/// Row `i` holds `j = i..N`; every write passes through [`symmetrized`], so
/// stored values are symmetric to machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeField {
    dim: usize,
    steps: usize,
    rows: Vec<Vec<DMatrix<f64>>>,
}

impl TwoTimeField {
    pub fn from_fn(
        grid: &TimeGrid,
        dim: usize,
        f: impl Fn(f64, f64) -> DMatrix<f64>,
    ) -> Result<Self, ProblemError> {
        let n = grid.steps();
        let mut rows = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut row = Vec::with_capacity(n - i + 1);
            for j in i..=n {
                let v = f(grid.node(i), grid.node(j));
                if v.shape() != (dim, dim) {
                    return Err(ProblemError::ShapeMismatch(format!(
                        "field entry ({i}, {j}) is {:?}, expected ({dim}, {dim})",
                        v.shape()
                    )));
                }
                if !all_finite(&v) {
                    return Err(ProblemError::NonFinite(format!("field entry ({i}, {j})")));
                }
                row.push(symmetrized(&v));
            }
            rows.push(row);
        }
        Ok(Self { dim, steps: n, rows })
    }

    pub fn constant(value: DMatrix<f64>, grid: &TimeGrid) -> Result<Self, ProblemError> {
        let dim = value.nrows();
        Self::from_fn(grid, dim, |_, _| value.clone())
    }

    /// Build from explicit rows, row `i` covering `j = i..N`.
    pub fn from_rows(rows: Vec<Vec<DMatrix<f64>>>, dim: usize) -> Result<Self, ProblemError> {
        let n = rows.len().checked_sub(1).ok_or_else(|| {
            ProblemError::ShapeMismatch("two-time field needs at least one row".into())
        })?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n - i + 1 {
                return Err(ProblemError::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    n - i + 1
                )));
            }
            for (off, v) in row.iter().enumerate() {
                if v.shape() != (dim, dim) {
                    return Err(ProblemError::ShapeMismatch(format!(
                        "field entry ({i}, {}) has shape {:?}",
                        i + off,
                        v.shape()
                    )));
                }
                if !all_finite(v) {
                    return Err(ProblemError::NonFinite(format!("field entry ({i}, {})", i + off)));
                }
            }
        }
        let rows = rows
            .into_iter()
            .map(|row| row.iter().map(symmetrized).collect())
            .collect();
        Ok(Self { dim, steps: n, rows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn get(&self, i: usize, j: usize) -> &DMatrix<f64> {
        assert!(i <= j && j <= self.steps, "index ({i}, {j}) outside the triangle");
        &self.rows[i][j - i]
    }

    pub fn set(&mut self, i: usize, j: usize, value: &DMatrix<f64>) {
        assert!(i <= j && j <= self.steps, "index ({i}, {j}) outside the triangle");
        self.rows[i][j - i] = symmetrized(value);
    }

    pub fn row(&self, i: usize) -> &[DMatrix<f64>] {
        &self.rows[i]
    }

    /// Linear interpolation in the second variable along row `i`;
    /// `s` is clamped to `[t_i, T]`.
    pub fn eval_in_s(&self, grid: &TimeGrid, i: usize, s: f64) -> DMatrix<f64> {
        let n = self.steps;
        if i == n {
            return self.rows[i][0].clone();
        }
        let u = (s / grid.dt()).clamp(i as f64, n as f64);
        let k = (u.floor() as usize).clamp(i, n - 1);
        let w = u - k as f64;
        &self.rows[i][k - i] * (1.0 - w) + &self.rows[i][k + 1 - i] * w
    }

    /// Linear interpolation in the first variable along column `j`;
    /// `t` is clamped to `[0, s_j]`.
    pub fn eval_in_t(&self, grid: &TimeGrid, j: usize, t: f64) -> DMatrix<f64> {
        let u = (t / grid.dt()).clamp(0.0, j as f64);
        if j == 0 {
            return self.rows[0][0].clone();
        }
        let k = (u.floor() as usize).min(j - 1);
        let w = u - k as f64;
        &self.rows[k][j - k] * (1.0 - w) + &self.rows[k + 1][j - k - 1] * w
    }

    /// Largest Frobenius norm over the triangle.
    pub fn sup_norm(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Feedback gain samples, one `m x n` matrix per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    gains: Vec<DMatrix<f64>>,
}

impl Strategy {
    pub fn new(gains: Vec<DMatrix<f64>>) -> Result<Self, ProblemError> {
        let first = gains
            .first()
            .ok_or_else(|| ProblemError::ShapeMismatch("empty strategy".into()))?;
        let shape = first.shape();
        for (i, g) in gains.iter().enumerate() {
            if g.shape() != shape {
                return Err(ProblemError::ShapeMismatch(format!(
                    "gain {i} has shape {:?}, expected {shape:?}",
                    g.shape()
                )));
            }
            if !all_finite(g) {
                return Err(ProblemError::NonFinite(format!("gain {i}")));
            }
        }
        Ok(Self { gains })
    }

    pub fn constant(gain: DMatrix<f64>, num_nodes: usize) -> Result<Self, ProblemError> {
        Self::new(vec![gain; num_nodes])
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gain(&self, i: usize) -> &DMatrix<f64> {
        &self.gains[i]
    }

    pub fn gains(&self) -> &[DMatrix<f64>] {
        &self.gains
    }

    pub fn eval(&self, grid: &TimeGrid, s: f64, interp: Interp) -> DMatrix<f64> {
        let n = grid.steps();
        let u = (s / grid.dt()).clamp(0.0, n as f64);
        let k = (u.floor() as usize).min(n - 1);
        match interp {
            Interp::PiecewiseConstantLeft => {
                if u >= n as f64 {
                    self.gains[n].clone()
                } else {
                    self.gains[k].clone()
                }
            }
            Interp::Linear => {
                let w = u - k as f64;
                &self.gains[k] * (1.0 - w) + &self.gains[k + 1] * w
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.gains.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    /// `sup_i |self_i - other_i|_F`.
    pub fn sup_distance(&self, other: &Strategy) -> f64 {
        assert_eq!(self.gains.len(), other.gains.len());
        self.gains
            .iter()
            .zip(&other.gains)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// The map `t_i -> P(t_i, t_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalField {
    values: Vec<DMatrix<f64>>,
}

impl DiagonalField {
    pub fn new(values: Vec<DMatrix<f64>>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> &DMatrix<f64> {
        &self.values[i]
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &DiagonalField) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all nodes.
    pub fn min_eigenvalue(&self) -> f64 {
        self.values
            .iter()
            .map(min_symmetric_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// A fully sampled control problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub n: usize,
    pub m: usize,
    pub grid: TimeGrid,
    pub a: MatrixPath,
    pub b: MatrixPath,
    pub c: MatrixPath,
    pub d: MatrixPath,
    pub g: MatrixPath,
    pub q: TwoTimeField,
    pub r: TwoTimeField,
    pub delta: f64,
}

impl ProblemSpec {
    /// Structural checks: dimensions, lengths, positivity of `delta`.
    /// An uncontrolled problem (`m = 0`) is rejected; the feedback gain
    /// would be undefined.
    pub fn check_shapes(&self) -> Result<(), ProblemError> {
        if self.n == 0 {
            return Err(ProblemError::Invalid("state dimension n must be >= 1".into()));
        }
        if self.m == 0 {
            return Err(ProblemError::Invalid(
                "control dimension m must be >= 1 (uncontrolled problems are out of scope)".into(),
            ));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(ProblemError::Invalid(format!(
                "delta must be a positive real, got {}",
                self.delta
            )));
        }
        let nodes = self.grid.num_nodes();
        let checks: [(&str, &MatrixPath, usize, usize); 5] = [
            ("A", &self.a, self.n, self.n),
            ("B", &self.b, self.n, self.m),
            ("C", &self.c, self.n, self.n),
            ("D", &self.d, self.n, self.m),
            ("G", &self.g, self.n, self.n),
        ];
        for (name, path, rows, cols) in checks {
            if path.len() != nodes {
                return Err(ProblemError::ShapeMismatch(format!(
                    "{name} has {} nodes, grid has {nodes}",
                    path.len()
                )));
            }
            if (path.rows(), path.cols()) != (rows, cols) {
                return Err(ProblemError::ShapeMismatch(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    path.rows(),
                    path.cols()
                )));
            }
        }
        if self.q.dim() != self.n || self.q.steps() != self.grid.steps() {
            return Err(ProblemError::ShapeMismatch("Q inconsistent with n and the grid".into()));
        }
        if self.r.dim() != self.m || self.r.steps() != self.grid.steps() {
            return Err(ProblemError::ShapeMismatch("R inconsistent with m and the grid".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PsdMargins {
    /// `min eig Q(t_i, s_j)` over the triangle.
    pub q: f64,
    /// `min eig (R(t_i, s_j) - delta I)` over the triangle.
    pub r: f64,
    /// `min eig G(t_i)` over the nodes.
    pub g: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MonotonicityMargins {
    /// `min eig (Q(t_{i+1}, s_j) - Q(t_i, s_j))` over valid pairs.
    pub q: f64,
    pub r: f64,
    pub g: f64,
}

/// Scalar stand-ins for the matrix upper bounds of the monotonicity
/// assumption: the sup of Frobenius norms over the samples.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivedBounds {
    pub g_hat: f64,
    pub q_hat: f64,
    pub r_hat: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValidationReport {
    pub h2_ok: bool,
    pub h3_ok: bool,
    pub psd_margins: PsdMargins,
    pub monotonicity_margins: MonotonicityMargins,
    pub derived_bounds: DerivedBounds,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "positivity (Q/R-deltaI/G min eig): {:.3e} / {:.3e} / {:.3e}; \
             monotonicity (Q/R/G min eig): {:.3e} / {:.3e} / {:.3e}; \
             bounds gHat={:.6e} qHat={:.6e} rHat={:.6e}",
            self.psd_margins.q,
            self.psd_margins.r,
            self.psd_margins.g,
            self.monotonicity_margins.q,
            self.monotonicity_margins.r,
            self.monotonicity_margins.g,
            self.derived_bounds.g_hat,
            self.derived_bounds.q_hat,
            self.derived_bounds.r_hat,
        )
    }
}

/// Check the positivity and monotonicity assumptions on the sampled data.
///
/// Positivity: `Q(t_i, s_j) >= 0`, `R(t_i, s_j) >= delta I`, `G(t_i) >= 0`.
/// Monotonicity (first argument): `Q(t_i, s_j) <= Q(t_{i+1}, s_j)`, likewise
/// `R` and `G`. Each margin is the smallest eigenvalue of the tested
/// difference; a margin below `-tol` clears the corresponding flag.
pub fn validate_problem(spec: &ProblemSpec, tol: f64) -> Result<ValidationReport, ProblemError> {
    spec.check_shapes()?;
    if !tol.is_finite() || tol < 0.0 {
        return Err(ProblemError::Invalid(format!("tolerance must be >= 0, got {tol}")));
    }
    let n = spec.grid.steps();
    let delta_eye_m = DMatrix::<f64>::identity(spec.m, spec.m) * spec.delta;

    let mut q_psd = f64::INFINITY;
    let mut r_psd = f64::INFINITY;
    let mut g_psd = f64::INFINITY;
    let mut q_mono = f64::INFINITY;
    let mut r_mono = f64::INFINITY;
    let mut g_mono = f64::INFINITY;
    let mut q_hat: f64 = 0.0;
    let mut r_hat: f64 = 0.0;
    let mut g_hat: f64 = 0.0;

    for i in 0..=n {
        let gi = spec.g.node(i);
        g_psd = g_psd.min(min_symmetric_eigenvalue(gi));
        g_hat = g_hat.max(gi.norm());
        if i < n {
            g_mono = g_mono.min(min_symmetric_eigenvalue(&(spec.g.node(i + 1) - gi)));
        }
        for j in i..=n {
            let qij = spec.q.get(i, j);
            let rij = spec.r.get(i, j);
            q_psd = q_psd.min(min_symmetric_eigenvalue(qij));
            r_psd = r_psd.min(min_symmetric_eigenvalue(&(rij - &delta_eye_m)));
            q_hat = q_hat.max(qij.norm());
            r_hat = r_hat.max(rij.norm());
            if i + 1 <= j {
                q_mono = q_mono.min(min_symmetric_eigenvalue(&(spec.q.get(i + 1, j) - qij)));
                r_mono = r_mono.min(min_symmetric_eigenvalue(&(spec.r.get(i + 1, j) - rij)));
            }
        }
    }

    let psd_margins = PsdMargins { q: q_psd, r: r_psd, g: g_psd };
    let monotonicity_margins = MonotonicityMargins { q: q_mono, r: r_mono, g: g_mono };
    Ok(ValidationReport {
        h2_ok: q_psd >= -tol && r_psd >= -tol && g_psd >= -tol,
        h3_ok: q_mono >= -tol && r_mono >= -tol && g_mono >= -tol,
        psd_margins,
        monotonicity_margins,
        derived_bounds: DerivedBounds { g_hat, q_hat, r_hat },
    })
}

/// Uniform bound on the diagonal field:
/// `(gHat + T qHat) exp( int_0^T (2|A(s)| + |C(s)|^2) ds )`,
/// with the integral by the trapezoid rule on the grid.
pub fn apriori_bound(spec: &ProblemSpec) -> f64 {
    let n = spec.grid.steps();
    let dt = spec.grid.dt();
    let integrand =
        |i: usize| 2.0 * spec.a.node(i).norm() + spec.c.node(i).norm().powi(2);
    let mut integral = 0.5 * (integrand(0) + integrand(n));
    for i in 1..n {
        integral += integrand(i);
    }
    integral *= dt;

    let mut g_hat: f64 = 0.0;
    for i in 0..=n {
        g_hat = g_hat.max(spec.g.node(i).norm());
    }
    let mut q_hat: f64 = 0.0;
    for i in 0..=n {
        for j in i..=n {
            q_hat = q_hat.max(spec.q.get(i, j).norm());
        }
    }
    (g_hat + spec.grid.horizon() * q_hat) * integral.exp()
}

/// Uniform bound on the feedback gain:
/// `(1/delta) (sup|B| + sup|D| sup|C|) * apriori_bound`.
pub fn theta_bound(spec: &ProblemSpec) -> f64 {
    (spec.b.sup_norm() + spec.d.sup_norm() * spec.c.sup_norm()) / spec.delta
        * apriori_bound(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    /// Scalar problem with constant data.
    pub(crate) fn scalar_spec(
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        q: f64,
        r: f64,
        g: f64,
        delta: f64,
        horizon: f64,
        steps: usize,
    ) -> ProblemSpec {
        let grid = TimeGrid::new(horizon, steps).unwrap();
        let nodes = grid.num_nodes();
        ProblemSpec {
            n: 1,
            m: 1,
            grid,
            a: MatrixPath::constant(scalar(a), nodes).unwrap(),
            b: MatrixPath::constant(scalar(b), nodes).unwrap(),
            c: MatrixPath::constant(scalar(c), nodes).unwrap(),
            d: MatrixPath::constant(scalar(d), nodes).unwrap(),
            g: MatrixPath::constant(scalar(g), nodes).unwrap(),
            q: TwoTimeField::constant(scalar(q), &grid).unwrap(),
            r: TwoTimeField::constant(scalar(r), &grid).unwrap(),
            delta,
        }
    }

    #[test]
    fn grid_nodes_are_exact() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(grid.node(0), 0.0);
        assert_eq!(grid.node(4), 1.0);
        assert_eq!(grid.dt(), 0.25);
        for i in 0..4 {
            assert_relative_eq!(grid.node(i + 1) - grid.node(i), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn path_interpolation_modes() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let vals = vec![scalar(0.0), scalar(1.0), scalar(4.0)];
        let lin = MatrixPath::new(vals.clone(), Interp::Linear).unwrap();
        assert_relative_eq!(lin.eval(&grid, 0.25)[(0, 0)], 0.5);
        assert_relative_eq!(lin.eval(&grid, 0.75)[(0, 0)], 2.5);
        let pc = MatrixPath::new(vals, Interp::PiecewiseConstantLeft).unwrap();
        assert_eq!(pc.eval(&grid, 0.25)[(0, 0)], 0.0);
        assert_eq!(pc.eval(&grid, 0.5)[(0, 0)], 1.0);
        assert_eq!(pc.eval(&grid, 1.0)[(0, 0)], 4.0);
    }

    #[test]
    fn two_time_field_stays_symmetric_after_writes() {
        let grid = TimeGrid::new(1.0, 3).unwrap();
        let mut field = TwoTimeField::constant(DMatrix::identity(2, 2), &grid).unwrap();
        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        field.set(1, 2, &skew);
        let v = field.get(1, 2);
        assert!((v - v.transpose()).norm() <= 1e-12);
        assert_relative_eq!(v[(0, 1)], 1.0);
    }

    #[test]
    fn validate_constant_weights() {
        let spec = scalar_spec(0.3, 1.0, 0.2, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 4);
        let rep = validate_problem(&spec, 1e-12).unwrap();
        assert!(rep.h2_ok && rep.h3_ok);
        assert_relative_eq!(rep.derived_bounds.g_hat, 1.0);
        assert_relative_eq!(rep.derived_bounds.q_hat, 1.0);
        assert_relative_eq!(rep.derived_bounds.r_hat, 1.0);
    }

    #[test]
    fn validate_flags_delta_floor_violation() {
        let spec = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0, 0.5, 1.0, 1.0, 1.0, 4);
        let rep = validate_problem(&spec, 1e-12).unwrap();
        assert!(!rep.h2_ok);
        assert_relative_eq!(rep.psd_margins.r, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn validate_increasing_terminal_weight() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let mut spec = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 4);
        spec.g = MatrixPath::from_fn(&grid, Interp::Linear, |t| scalar(t)).unwrap();
        let rep = validate_problem(&spec, 1e-12).unwrap();
        assert!(rep.monotonicity_margins.g >= 0.0);
        assert_relative_eq!(rep.derived_bounds.g_hat, 1.0);
    }

    #[test]
    fn validate_rejects_uncontrolled_problem() {
        let mut spec = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 4);
        spec.m = 0;
        assert!(matches!(validate_problem(&spec, 0.0), Err(ProblemError::Invalid(_))));
    }

    #[test]
    fn apriori_bound_zero_exponent() {
        let spec = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10);
        assert_relative_eq!(apriori_bound(&spec), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn apriori_bound_constant_drift() {
        // (g + T q) e^{2 a T} with a = 0.5, g = q = T = 1.
        let spec = scalar_spec(0.5, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10);
        assert_relative_eq!(apriori_bound(&spec), 2.0 * 1.0f64.exp(), epsilon = 1e-12);
        assert_relative_eq!(apriori_bound(&spec), 5.43656365691809, epsilon = 1e-10);
    }

    #[test]
    fn apriori_bound_matches_refined_quadrature() {
        // 2x2 paths whose integrand 2|A| + |C|^2 is linear in t, so the
        // trapezoid rule is exact at every resolution: the coarse value must
        // match an independent 16x-refined quadrature of the same closures.
        let a_of = |t: f64| DMatrix::from_row_slice(2, 2, &[0.3 * t, 0.0, 0.0, 0.4 * t]);
        let c_of = |t: f64| {
            DMatrix::from_row_slice(2, 2, &[(0.5 * t).sqrt(), 0.0, 0.0, (0.25 * t).sqrt()])
        };
        let steps = 16;
        let grid = TimeGrid::new(2.0, steps).unwrap();
        let nodes = grid.num_nodes();
        let mut spec = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0, steps);
        spec.n = 2;
        spec.m = 1;
        spec.a = MatrixPath::from_fn(&grid, Interp::Linear, a_of).unwrap();
        spec.c = MatrixPath::from_fn(&grid, Interp::Linear, c_of).unwrap();
        spec.b = MatrixPath::constant(DMatrix::from_element(2, 1, 1.0), nodes).unwrap();
        spec.d = MatrixPath::constant(DMatrix::zeros(2, 1), nodes).unwrap();
        spec.g = MatrixPath::constant(DMatrix::identity(2, 2), nodes).unwrap();
        spec.q = TwoTimeField::constant(DMatrix::identity(2, 2), &grid).unwrap();

        // independent quadrature at 16x resolution
        let fine = 16 * steps;
        let dt = 2.0 / fine as f64;
        let f = |t: f64| 2.0 * a_of(t).norm() + c_of(t).norm().powi(2);
        let mut integral = 0.5 * (f(0.0) + f(2.0));
        for k in 1..fine {
            integral += f(k as f64 * dt);
        }
        integral *= dt;
        let g_hat = 2.0f64.sqrt();
        let q_hat = 2.0f64.sqrt();
        let expected = (g_hat + 2.0 * q_hat) * integral.exp();

        assert_relative_eq!(apriori_bound(&spec), expected, epsilon = 1e-8);
    }

    #[test]
    fn theta_bound_trivial_cases() {
        let spec = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10);
        assert_relative_eq!(theta_bound(&spec), 2.0, epsilon = 1e-14);
        let spec2 = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0, 2.0, 1.0, 2.0, 1.0, 10);
        assert_relative_eq!(theta_bound(&spec2), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn theta_bound_matches_hand_assembled_product() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let mut spec = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.7, 1.0, 8);
        spec.n = 2;
        spec.b =
            MatrixPath::from_fn(&grid, Interp::Linear, |t| DMatrix::from_row_slice(2, 1, &[t, 1.0]))
                .unwrap();
        spec.d = MatrixPath::from_fn(&grid, Interp::Linear, |t| {
            DMatrix::from_row_slice(2, 1, &[0.5 * t, 0.2])
        })
        .unwrap();
        spec.a = MatrixPath::constant(DMatrix::zeros(2, 2), 9).unwrap();
        spec.c = MatrixPath::constant(
            DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, 0.3]),
            9,
        )
        .unwrap();
        spec.g = MatrixPath::constant(DMatrix::identity(2, 2), 9).unwrap();
        spec.q = TwoTimeField::constant(DMatrix::identity(2, 2), &grid).unwrap();

        // independent max/norm routine: explicit loops over entries
        let frob = |m: &DMatrix<f64>| m.iter().map(|x| x * x).sum::<f64>().sqrt();
        let max_norm = |p: &MatrixPath| {
            p.values().iter().map(frob).fold(0.0f64, f64::max)
        };
        let expected = (max_norm(&spec.b) + max_norm(&spec.d) * max_norm(&spec.c)) / spec.delta
            * apriori_bound(&spec);
        assert_relative_eq!(theta_bound(&spec), expected, epsilon = 1e-10);
    }

    #[test]
    fn validation_monotone_in_tolerance() {
        let spec = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0, 0.999, 1.0, 1.0, 1.0, 4);
        let tight = validate_problem(&spec, 1e-6).unwrap();
        let loose = validate_problem(&spec, 1e-2).unwrap();
        assert!(!tight.h2_ok);
        assert!(loose.h2_ok);
    }

    #[test]
    fn bounds_invariant_under_refinement_for_constant_data() {
        let coarse = scalar_spec(0.4, 0.8, 0.3, 0.1, 2.0, 1.5, 0.7, 1.0, 1.0, 10);
        let fine = scalar_spec(0.4, 0.8, 0.3, 0.1, 2.0, 1.5, 0.7, 1.0, 1.0, 80);
        assert_relative_eq!(apriori_bound(&coarse), apriori_bound(&fine), epsilon = 1e-12);
        assert_relative_eq!(theta_bound(&coarse), theta_bound(&fine), epsilon = 1e-12);
    }
}
