//! Diffusion coefficients `G : R^n x R^n -> L(R^d, R^n)`.
//!
//! A map is evaluated at `(x, y) = (y_t, y_{t-r})` and returns an `n x d`
//! matrix. Partial derivatives are returned as one `n x d` block per state
//! coordinate `e`, i.e. `∂G/∂x_e` and `∂G/∂y_e`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Partial derivatives with respect to the current and the delayed argument.
pub type Partials = (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>);

const FD_STEP: f64 = 1e-5;

pub trait SmoothMap: Send + Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;

    fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64>;

    /// `(∂G/∂x_e, ∂G/∂y_e)` for `e = 0..n`. Defaults to central differences.
    fn partials(&self, x: &DVector<f64>, y: &DVector<f64>) -> Partials {
        fd_partials(self, x, y)
    }

    /// Directional derivative of the partials along `(dx, dy)`, i.e.
    /// `D(∂G/∂x_e)[dx, dy]` and `D(∂G/∂y_e)[dx, dy]`. Defaults to central
    /// differences of [`SmoothMap::partials`].
    fn second_directional(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        dx: &DVector<f64>,
        dy: &DVector<f64>,
    ) -> Partials {
        let scale = dx.norm().max(dy.norm());
        let n = self.state_dim();
        let d = self.noise_dim();
        if scale == 0.0 {
            return (vec![DMatrix::zeros(n, d); n], vec![DMatrix::zeros(n, d); n]);
        }
        let eps = FD_STEP / scale;
        let (px, py) = self.partials(&(x + dx * eps), &(y + dy * eps));
        let (mx, my) = self.partials(&(x - dx * eps), &(y - dy * eps));
        let diff = |a: Vec<DMatrix<f64>>, b: Vec<DMatrix<f64>>| {
            a.into_iter().zip(b).map(|(p, q)| (p - q) / (2.0 * eps)).collect()
        };
        (diff(px, mx), diff(py, my))
    }

    /// Whether `partials` is exact rather than a finite-difference fallback.
    fn exact_partials(&self) -> bool {
        false
    }

    /// Declared smoothness class `C^k_b`.
    fn smoothness(&self) -> u32 {
        2
    }

    /// Bound on `|G|` (infinite for unbounded maps).
    fn sup_bound(&self) -> f64 {
        f64::INFINITY
    }

    /// True when `G` vanishes identically.
    fn is_zero(&self) -> bool {
        false
    }
}

fn fd_partials<G: SmoothMap + ?Sized>(g: &G, x: &DVector<f64>, y: &DVector<f64>) -> Partials {
    let n = g.state_dim();
    let mut px = Vec::with_capacity(n);
    let mut py = Vec::with_capacity(n);
    for e in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[e] += FD_STEP;
        xm[e] -= FD_STEP;
        px.push((g.eval(&xp, y) - g.eval(&xm, y)) / (2.0 * FD_STEP));
        let mut yp = y.clone();
        let mut ym = y.clone();
        yp[e] += FD_STEP;
        ym[e] -= FD_STEP;
        py.push((g.eval(x, &yp) - g.eval(x, &ym)) / (2.0 * FD_STEP));
    }
    (px, py)
}

/// Largest relative mismatch between the supplied partials and central
/// differences with step `fd_step`, over `probes` random points in the cube
/// `[-radius, radius]^{2n}`.
pub fn check_partials<G: SmoothMap + ?Sized>(g: &G, probes: usize, fd_step: f64, radius: f64, seed: u64) -> f64 {
    let n = g.state_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let x = DVector::from_fn(n, |_, _| rng.random_range(-radius..radius));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-radius..radius));
        let (px, py) = g.partials(&x, &y);
        for e in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[e] += fd_step;
            xm[e] -= fd_step;
            let fx = (g.eval(&xp, &y) - g.eval(&xm, &y)) / (2.0 * fd_step);
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[e] += fd_step;
            ym[e] -= fd_step;
            let fy = (g.eval(&x, &yp) - g.eval(&x, &ym)) / (2.0 * fd_step);
            for (a, b) in [(&px[e], fx), (&py[e], fy)] {
                let rel = (a - &b).norm() / (1.0 + b.norm());
                worst = worst.max(rel);
            }
        }
    }
    worst
}

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("coefficient `{name}` has {got} entries, expected {expected}")]
    WrongSize {
        name: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("dimensions must be positive")]
    ZeroDimension,
}

/// Scalar profile `φ` applied coordinate-wise to the state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    /// `φ(u) = u`.
    Linear,
    /// `φ(u) = tanh(u)`.
    Tanh,
    /// `φ(u) = Σ_i p_i tanh(u)^i` (`i >= 1`): a polynomial in the saturated
    /// variable, hence bounded with bounded derivatives.
    BoundedPolynomial { poly: Vec<f64> },
}

impl Profile {
    /// `(φ(u), φ'(u), φ''(u))`.
    fn jet(&self, u: f64) -> (f64, f64, f64) {
        match self {
            Profile::Linear => (u, 1.0, 0.0),
            Profile::Tanh => {
                let t = u.tanh();
                let s = 1.0 - t * t;
                (t, s, -2.0 * t * s)
            }
            Profile::BoundedPolynomial { poly } => {
                let t = u.tanh();
                let s = 1.0 - t * t;
                // P(t), P'(t), P''(t) with P(t) = Σ p_i t^{i+1}
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                for (i, c) in poly.iter().enumerate() {
                    let k = (i + 1) as f64;
                    p += c * t.powi(i as i32 + 1);
                    dp += c * k * t.powi(i as i32);
                    if i >= 1 {
                        ddp += c * k * (k - 1.0) * t.powi(i as i32 - 1);
                    }
                }
                (p, dp * s, ddp * s * s - 2.0 * t * s * dp)
            }
        }
    }
}

/// Separable built-in diffusion
/// `G(x,y)_{ab} = c_{ab} + Σ_e C_{eab} φ(x_e) + D_{eab} φ(y_e)`.
///
/// Coefficient arrays are flattened row-major: `constant` is `n x d`,
/// `current` and `delayed` are `n x n x d` indexed `[e][a][b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuiltinDiffusion {
    #[serde(flatten)]
    pub profile: Profile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constant: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub current: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delayed: Vec<f64>,
}

/// A [`BuiltinDiffusion`] bound to its dimensions, ready for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableDiffusion {
    n: usize,
    d: usize,
    profile: Profile,
    constant: DMatrix<f64>,
    current: Vec<DMatrix<f64>>,
    delayed: Vec<DMatrix<f64>>,
}

impl BuiltinDiffusion {
    pub fn zero() -> Self {
        BuiltinDiffusion {
            profile: Profile::Linear,
            constant: vec![],
            current: vec![],
            delayed: vec![],
        }
    }

    pub fn bind(&self, n: usize, d: usize) -> Result<SeparableDiffusion, DiffusionError> {
        if n == 0 || d == 0 {
            return Err(DiffusionError::ZeroDimension);
        }
        let check = |name: &'static str, v: &Vec<f64>, expected: usize| {
            if v.is_empty() || v.len() == expected {
                Ok(())
            } else {
                Err(DiffusionError::WrongSize {
                    name,
                    got: v.len(),
                    expected,
                })
            }
        };
        check("constant", &self.constant, n * d)?;
        check("current", &self.current, n * n * d)?;
        check("delayed", &self.delayed, n * n * d)?;
        let blocks = |v: &Vec<f64>| -> Vec<DMatrix<f64>> {
            (0..n)
                .map(|e| {
                    if v.is_empty() {
                        DMatrix::zeros(n, d)
                    } else {
                        DMatrix::from_row_slice(n, d, &v[e * n * d..(e + 1) * n * d])
                    }
                })
                .collect()
        };
        Ok(SeparableDiffusion {
            n,
            d,
            profile: self.profile.clone(),
            constant: if self.constant.is_empty() {
                DMatrix::zeros(n, d)
            } else {
                DMatrix::from_row_slice(n, d, &self.constant)
            },
            current: blocks(&self.current),
            delayed: blocks(&self.delayed),
        })
    }
}

impl SeparableDiffusion {
    /// Identity-like additive noise `G ≡ I` (requires `n == d`).
    pub fn additive_identity(n: usize) -> Self {
        SeparableDiffusion {
            n,
            d: n,
            profile: Profile::Linear,
            constant: DMatrix::identity(n, n),
            current: vec![DMatrix::zeros(n, n); n],
            delayed: vec![DMatrix::zeros(n, n); n],
        }
    }

    pub fn zero(n: usize, d: usize) -> Self {
        SeparableDiffusion {
            n,
            d,
            profile: Profile::Linear,
            constant: DMatrix::zeros(n, d),
            current: vec![DMatrix::zeros(n, d); n],
            delayed: vec![DMatrix::zeros(n, d); n],
        }
    }

    pub fn new(
        profile: Profile,
        constant: DMatrix<f64>,
        current: Vec<DMatrix<f64>>,
        delayed: Vec<DMatrix<f64>>,
    ) -> Self {
        let (n, d) = constant.shape();
        assert!(current.len() == n && delayed.len() == n, "one block per state coordinate");
        SeparableDiffusion {
            n,
            d,
            profile,
            constant,
            current,
            delayed,
        }
    }

    /// Multiply every coefficient by `eps`.
    pub fn scaled(&self, eps: f64) -> Self {
        let mut out = self.clone();
        out.constant *= eps;
        out.current.iter_mut().for_each(|m| *m *= eps);
        out.delayed.iter_mut().for_each(|m| *m *= eps);
        out
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Frobenius norm of `DG(0,0)` as a map `R^{2n} -> R^{n x d}`.
    pub fn linearization_norm(&self) -> f64 {
        let slope = self.profile.jet(0.0).1;
        let s: f64 = self
            .current
            .iter()
            .chain(&self.delayed)
            .map(|m| m.norm_squared())
            .sum();
        slope.abs() * s.sqrt()
    }
}

impl SmoothMap for SeparableDiffusion {
    fn state_dim(&self) -> usize {
        self.n
    }

    fn noise_dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        let mut g = self.constant.clone();
        for e in 0..self.n {
            g += &self.current[e] * self.profile.jet(x[e]).0;
            g += &self.delayed[e] * self.profile.jet(y[e]).0;
        }
        g
    }

    fn partials(&self, x: &DVector<f64>, y: &DVector<f64>) -> Partials {
        let px = (0..self.n).map(|e| &self.current[e] * self.profile.jet(x[e]).1).collect();
        let py = (0..self.n).map(|e| &self.delayed[e] * self.profile.jet(y[e]).1).collect();
        (px, py)
    }

    fn second_directional(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        dx: &DVector<f64>,
        dy: &DVector<f64>,
    ) -> Partials {
        let px = (0..self.n)
            .map(|e| &self.current[e] * (self.profile.jet(x[e]).2 * dx[e]))
            .collect();
        let py = (0..self.n)
            .map(|e| &self.delayed[e] * (self.profile.jet(y[e]).2 * dy[e]))
            .collect();
        (px, py)
    }

    fn exact_partials(&self) -> bool {
        true
    }

    fn smoothness(&self) -> u32 {
        // every profile is C^∞ with bounded derivatives of order >= 1
        4
    }

    fn sup_bound(&self) -> f64 {
        let coeff: f64 = self.current.iter().chain(&self.delayed).map(|m| m.norm()).sum();
        match &self.profile {
            Profile::Linear if coeff > 0.0 => f64::INFINITY,
            Profile::Linear => self.constant.norm(),
            Profile::Tanh => self.constant.norm() + coeff,
            Profile::BoundedPolynomial { poly } => {
                self.constant.norm() + coeff * poly.iter().map(|p| p.abs()).sum::<f64>()
            }
        }
    }

    fn is_zero(&self) -> bool {
        self.constant.iter().all(|v| *v == 0.0)
            && self.current.iter().chain(&self.delayed).all(|m| m.iter().all(|v| *v == 0.0))
    }
}

/// Wraps a closure `G(x, y)` and differentiates it numerically.
pub struct FiniteDifferenceMap<F> {
    n: usize,
    d: usize,
    f: F,
}

impl<F> FiniteDifferenceMap<F>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    pub fn new(n: usize, d: usize, f: F) -> Self {
        FiniteDifferenceMap { n, d, f }
    }
}

impl<F> SmoothMap for FiniteDifferenceMap<F>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    fn state_dim(&self) -> usize {
        self.n
    }
    fn noise_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        (self.f)(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(profile: Profile) -> SeparableDiffusion {
        let spec = BuiltinDiffusion {
            profile,
            constant: vec![0.1, 0.0, 0.0, 0.2],
            current: vec![0.3, -0.2, 0.1, 0.4, 0.0, 0.5, -0.1, 0.2],
            delayed: vec![0.2, 0.1, 0.0, -0.3, 0.6, 0.0, 0.1, 0.1],
        };
        spec.bind(2, 2).unwrap()
    }

    #[test]
    fn builtin_partials_match_finite_differences() {
        for p in [
            Profile::Linear,
            Profile::Tanh,
            Profile::BoundedPolynomial { poly: vec![1.0, 0.5, -0.3] },
        ] {
            let g = sample(p);
            assert!(check_partials(&g, 100, 1e-4, 2.0, 11) < 1e-6);
        }
    }

    #[test]
    fn second_directional_matches_fallback() {
        let g = sample(Profile::BoundedPolynomial { poly: vec![1.0, 0.5, -0.3] });
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let y = DVector::from_vec(vec![1.1, 0.2]);
        let dx = DVector::from_vec(vec![0.5, 1.0]);
        let dy = DVector::from_vec(vec![-0.2, 0.4]);
        let exact = g.second_directional(&x, &y, &dx, &dy);
        let wrapped = FiniteDifferenceMap::new(2, 2, |a: &DVector<f64>, b: &DVector<f64>| g.eval(a, b));
        let approx = wrapped.second_directional(&x, &y, &dx, &dy);
        for (a, b) in exact.0.iter().chain(&exact.1).zip(approx.0.iter().chain(&approx.1)) {
            assert!((a - b).norm() < 1e-4, "{a} vs {b}");
        }
        assert!(!wrapped.exact_partials());
    }

    #[test]
    fn binding_validates_sizes() {
        let mut spec = BuiltinDiffusion::zero();
        spec.current = vec![1.0; 3];
        assert!(matches!(spec.bind(1, 1), Err(DiffusionError::WrongSize { .. })));
        let g = BuiltinDiffusion::zero().bind(2, 3).unwrap();
        assert!(g.is_zero());
        assert_eq!(g.sup_bound(), 0.0);
    }

    #[test]
    fn json_schema() {
        let json = r#"{"profile":"bounded_polynomial","poly":[1.0,-0.2],"current":[0.05]}"#;
        let spec: BuiltinDiffusion = serde_json::from_str(json).unwrap();
        let g = spec.bind(1, 1).unwrap();
        assert!((g.linearization_norm() - 0.05).abs() < 1e-15);
        assert!(g.sup_bound().is_finite());
        let g = sample(Profile::Linear).scaled(0.0);
        assert!(g.is_zero());
    }
}
