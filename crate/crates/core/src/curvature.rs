//! Sharpness probes for the loss landscape.
//!
//! The tail-index controller consumes the log-compressed Hutchinson trace
//! `s_t = ln(1 + |Tr H|)`, smoothed by an EMA. Power-iteration λ_max is
//! provided for diagnostics and for comparison with the edge-of-stability
//! threshold `2/η`.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Access to Hessian-vector products `H(θ)·v`.
pub trait HvpOracle {
    fn hvp(&self, theta: &[f64], v: &[f64]) -> Result<Vec<f64>>;
}

impl<F> HvpOracle for F
where
    F: Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    fn hvp(&self, theta: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self(theta, v)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rademacher<R: RngCore + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut v = Vec::with_capacity(dim);
    while v.len() < dim {
        let bits = rng.next_u64();
        let take = (dim - v.len()).min(64);
        v.extend((0..take).map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 }));
    }
    v
}

/// Hutchinson estimate `(1/probes) Σ vᵀHv` with Rademacher probes.
pub fn hutchinson_trace<H, R>(hvp: &H, theta: &[f64], probes: usize, rng: &mut R) -> Result<f64>
where
    H: HvpOracle + ?Sized,
    R: RngCore + ?Sized,
{
    if probes == 0 {
        return Err(Error::param("probes", "must be >= 1"));
    }
    let mut total = 0.0;
    for _ in 0..probes {
        let v = rademacher(theta.len(), rng);
        let hv = hvp.hvp(theta, &v)?;
        if hv.len() != v.len() {
            return Err(Error::Config(format!(
                "hvp returned length {}, expected {}",
                hv.len(),
                v.len()
            )));
        }
        let q = dot(&v, &hv);
        if !q.is_finite() {
            return Err(Error::Curvature("non-finite Hessian-vector product".into()));
        }
        total += q;
    }
    Ok(total / probes as f64)
}

/// `ln(1 + |trace|)`.
pub fn sharpness_signal(trace: f64) -> f64 {
    trace.abs().ln_1p()
}

/// Smoothed sharpness as seen by the tail-index controller.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpnessState {
    pub ema: f64,
    pub last_raw: f64,
    pub rho: f64,
    pub probes_per_step: usize,
    pub step_count: u64,
}

impl Default for SharpnessState {
    fn default() -> Self {
        Self {
            ema: 0.0,
            last_raw: 0.0,
            rho: 0.05,
            probes_per_step: 1,
            step_count: 0,
        }
    }
}

impl SharpnessState {
    pub fn new(rho: f64, probes_per_step: usize) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::param("rho", format!("must lie in (0, 1], got {rho}")));
        }
        if !(1..=3).contains(&probes_per_step) {
            return Err(Error::param(
                "probes_per_step",
                format!("must lie in [1, 3], got {probes_per_step}"),
            ));
        }
        Ok(Self {
            rho,
            probes_per_step,
            ..Self::default()
        })
    }

    /// `ema ← (1-ρ)·ema + ρ·s_t`.
    pub fn update_ema(&self, s_t: f64) -> Self {
        Self {
            ema: (1.0 - self.rho) * self.ema + self.rho * s_t,
            last_raw: s_t,
            step_count: self.step_count + 1,
            ..self.clone()
        }
    }
}

/// Result of [`estimate_lambda_max`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaMax {
    /// Signed Rayleigh quotient; compare `value.abs()` with `2/η`.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on `hvp` from a random unit start.
///
/// Returns the eigenvalue of largest magnitude (sign included) once successive
/// Rayleigh quotients differ by less than `tol`, or the last estimate with
/// `converged = false` after `iterations` products.
pub fn estimate_lambda_max<H, R>(
    hvp: &H,
    theta: &[f64],
    iterations: usize,
    tol: f64,
    rng: &mut R,
) -> Result<LambdaMax>
where
    H: HvpOracle + ?Sized,
    R: RngCore + ?Sized,
{
    if iterations == 0 {
        return Err(Error::param("iterations", "must be >= 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("must be > 0, got {tol}")));
    }
    let mut v: Vec<f64> = (0..theta.len()).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut v).ok_or_else(|| Error::Curvature("zero start vector".into()))?;
    let mut previous = f64::NAN;
    for it in 1..=iterations {
        let hv = hvp.hvp(theta, &v)?;
        let rq = dot(&v, &hv);
        if !rq.is_finite() {
            return Err(Error::Curvature("non-finite Rayleigh quotient".into()));
        }
        if (rq - previous).abs() < tol {
            return Ok(LambdaMax {
                value: rq,
                iterations: it,
                converged: true,
            });
        }
        previous = rq;
        v = hv;
        if normalize(&mut v).is_none() {
            // Hv = 0: v lies in the null space and H has no larger eigenvalue along it.
            return Ok(LambdaMax {
                value: rq,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(LambdaMax {
        value: previous,
        iterations,
        converged: false,
    })
}

fn normalize(v: &mut [f64]) -> Option<f64> {
    let n = dot(v, v).sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(n)
}

/// Edge-of-stability threshold `2/η`.
pub fn edge_of_stability(eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::param("eta", format!("must be > 0, got {eta}")));
    }
    Ok(2.0 / eta)
}

/// Central-difference Hessian-vector product from a gradient oracle:
/// `(∇L(θ + εv) − ∇L(θ − εv)) / 2ε`.
pub fn fd_hvp<G>(grad: G, theta: &[f64], v: &[f64], eps: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(eps > 0.0) {
        return Err(Error::param("eps", format!("must be > 0, got {eps}")));
    }
    if v.len() != theta.len() {
        return Err(Error::Config(format!(
            "direction length {} != parameter length {}",
            v.len(),
            theta.len()
        )));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; theta.len()]);
    }
    let plus: Vec<f64> = theta.iter().zip(v).map(|(t, d)| t + eps * d).collect();
    let minus: Vec<f64> = theta.iter().zip(v).map(|(t, d)| t - eps * d).collect();
    let gp = grad(&plus)?;
    let gm = grad(&minus)?;
    let out: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Curvature("non-finite gradient in finite difference".into()));
    }
    Ok(out)
}

/// `√ε_mach · (1 + ‖θ‖∞)`.
pub fn default_fd_eps(theta: &[f64]) -> f64 {
    let inf_norm = theta.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    f64::EPSILON.sqrt() * (1.0 + inf_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable_noise::stream_rng;

    fn diag_hvp(d: Vec<f64>) -> impl Fn(&[f64], &[f64]) -> Result<Vec<f64>> {
        move |_t: &[f64], v: &[f64]| Ok(v.iter().zip(&d).map(|(x, h)| x * h).collect())
    }

    #[test]
    fn trace_of_diag_quadratic() {
        let mut rng = stream_rng(0, 0);
        let hvp = diag_hvp(vec![1.0, 2.0, 3.0]);
        let t = hutchinson_trace(&hvp, &[0.0; 3], 1000, &mut rng).unwrap();
        // Diagonal H: every Rademacher probe is exact.
        assert!((t - 6.0).abs() / 6.0 < 0.05, "{t}");
    }

    #[test]
    fn trace_of_dense_quadratic_within_five_percent() {
        // Off-diagonal entries make single probes noisy; exact trace is 6.
        let a = [[1.0, 0.8, -0.5], [0.8, 2.0, 0.3], [-0.5, 0.3, 3.0]];
        let hvp = move |_t: &[f64], v: &[f64]| -> Result<Vec<f64>> {
            Ok((0..3).map(|i| (0..3).map(|j| a[i][j] * v[j]).sum()).collect())
        };
        let mut rng = stream_rng(1, 0);
        let t = hutchinson_trace(&hvp, &[0.0; 3], 1000, &mut rng).unwrap();
        assert!((t - 6.0).abs() / 6.0 < 0.05, "{t}");
    }

    #[test]
    fn zero_hessian_gives_zero_trace() {
        let mut rng = stream_rng(0, 0);
        let hvp = |_t: &[f64], v: &[f64]| -> Result<Vec<f64>> { Ok(vec![0.0; v.len()]) };
        for probes in [1, 2, 3, 50] {
            assert_eq!(hutchinson_trace(&hvp, &[1.0; 7], probes, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn identity_single_probe_is_exact() {
        let mut rng = stream_rng(5, 0);
        let hvp = |_t: &[f64], v: &[f64]| -> Result<Vec<f64>> { Ok(v.to_vec()) };
        for d in [1, 17, 64, 65, 300] {
            assert_eq!(hutchinson_trace(&hvp, &vec![0.0; d], 1, &mut rng).unwrap(), d as f64);
        }
    }

    #[test]
    fn hutchinson_errors() {
        let mut rng = stream_rng(0, 0);
        let bad = |_t: &[f64], v: &[f64]| -> Result<Vec<f64>> { Ok(vec![f64::NAN; v.len()]) };
        assert!(matches!(hutchinson_trace(&bad, &[0.0; 3], 1, &mut rng), Err(Error::Curvature(_))));
        let ok = |_t: &[f64], v: &[f64]| -> Result<Vec<f64>> { Ok(v.to_vec()) };
        assert!(hutchinson_trace(&ok, &[0.0; 3], 0, &mut rng).is_err());
    }

    #[test]
    fn probe_variance_shrinks_with_more_probes() {
        let a: Vec<Vec<f64>> = (0..10)
            .map(|i| (0..10).map(|j| 1.0 / (1.0 + (i as f64 - j as f64).abs())).collect())
            .collect();
        let hvp = move |_t: &[f64], v: &[f64]| -> Result<Vec<f64>> {
            Ok(a.iter().map(|row| dot(row, v)).collect())
        };
        let mut rng = stream_rng(3, 0);
        let theta = [0.0; 10];
        let sample = |probes: usize, rng: &mut crate::stable_noise::StreamRng| -> Vec<f64> {
            (0..10_000).map(|_| hutchinson_trace(&hvp, &theta, probes, rng).unwrap()).collect()
        };
        let v1 = crate::stats::variance(&sample(1, &mut rng));
        let v3 = crate::stats::variance(&sample(3, &mut rng));
        assert!(v3 <= v1, "{v3} > {v1}");
    }

    #[test]
    fn sharpness_signal_values() {
        assert_eq!(sharpness_signal(0.0), 0.0);
        let e = std::f64::consts::E;
        assert!((sharpness_signal(e - 1.0) - 1.0).abs() < 1e-15);
        assert!((sharpness_signal(-(e * e - 1.0)) - 2.0).abs() < 1e-15);
        assert_eq!(sharpness_signal(-3.5), sharpness_signal(3.5));
        assert!(sharpness_signal(2.0) > sharpness_signal(1.0));
    }

    #[test]
    fn ema_examples() {
        let s = SharpnessState::default();
        assert_eq!(s.rho, 0.05);
        assert_eq!(s.ema, 0.0);
        let s1 = s.update_ema(1.0);
        assert!((s1.ema - 0.05).abs() < 1e-15);
        assert_eq!(s1.last_raw, 1.0);
        assert_eq!(s1.step_count, 1);

        let fixed = SharpnessState { ema: 0.7, ..SharpnessState::default() };
        assert!((fixed.update_ema(0.7).ema - 0.7).abs() < 1e-15);

        let c = 2.3;
        let mut st = SharpnessState::default();
        for _ in 0..200 {
            st = st.update_ema(c);
        }
        let closed = c * (1.0 - 0.95f64.powi(200));
        assert!((st.ema - closed).abs() < 1e-4);
        assert_eq!(st.step_count, 200);
    }

    #[test]
    fn sharpness_state_validation() {
        assert!(SharpnessState::new(0.0, 1).is_err());
        assert!(SharpnessState::new(1.5, 1).is_err());
        assert!(SharpnessState::new(0.05, 0).is_err());
        assert!(SharpnessState::new(0.05, 4).is_err());
        assert!(SharpnessState::new(1.0, 3).is_ok());
    }

    #[test]
    fn lambda_max_of_diag() {
        let mut rng = stream_rng(2, 0);
        let est = estimate_lambda_max(&diag_hvp(vec![1.0, 2.0, 10.0]), &[0.0; 3], 1000, 1e-6, &mut rng).unwrap();
        assert!(est.converged);
        assert!((est.value - 10.0).abs() < 1e-3, "{est:?}");
    }

    #[test]
    fn lambda_max_identity_one_iteration() {
        let mut rng = stream_rng(2, 0);
        let id = |_t: &[f64], v: &[f64]| -> Result<Vec<f64>> { Ok(v.to_vec()) };
        let est = estimate_lambda_max(&id, &[0.0; 20], 1, 1e-6, &mut rng).unwrap();
        assert!((est.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_max_keeps_sign_of_dominant_eigenvalue() {
        let mut rng = stream_rng(8, 0);
        let est = estimate_lambda_max(&diag_hvp(vec![5.0, -9.0]), &[0.0; 2], 1000, 1e-9, &mut rng).unwrap();
        assert!((est.value + 9.0).abs() < 1e-3, "{est:?}");
        assert!(est.value.abs() > edge_of_stability(0.5).unwrap());
    }

    #[test]
    fn lambda_max_unconverged_flag() {
        let mut rng = stream_rng(8, 0);
        let h = diag_hvp((1..=50).map(|i| i as f64).collect());
        let est = estimate_lambda_max(&h, &[0.0; 50], 3, 1e-12, &mut rng).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
    }

    #[test]
    fn edge_of_stability_values() {
        assert!((edge_of_stability(0.01).unwrap() - 200.0).abs() < 1e-12);
        assert_eq!(edge_of_stability(2.0).unwrap(), 1.0);
        assert!((edge_of_stability(0.001).unwrap() - 2000.0).abs() < 1e-9);
        assert!(edge_of_stability(0.0).is_err());
        assert!(edge_of_stability(-1.0).is_err());
    }

    #[test]
    fn fd_hvp_on_quadratic_matches_analytic() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 2.0]];
        let grad = |t: &[f64]| -> Result<Vec<f64>> {
            Ok((0..3).map(|i| (0..3).map(|j| a[i][j] * t[j]).sum()).collect())
        };
        let theta = [0.3, -1.2, 2.5];
        let v = [1.0, -0.5, 0.25];
        let got = fd_hvp(grad, &theta, &v, default_fd_eps(&theta)).unwrap();
        for i in 0..3 {
            let exact: f64 = (0..3).map(|j| a[i][j] * v[j]).sum();
            assert!((got[i] - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{i}: {} vs {exact}", got[i]);
        }
    }

    #[test]
    fn fd_hvp_linear_and_zero_direction() {
        let grad = |_t: &[f64]| -> Result<Vec<f64>> { Ok(vec![3.0, -1.0]) };
        let out = fd_hvp(grad, &[1.0, 2.0], &[0.7, 0.1], 1e-4).unwrap();
        assert!(out.iter().all(|x| x.abs() < 1e-8));
        let out = fd_hvp(grad, &[1.0, 2.0], &[0.0, 0.0], 1e-4).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
        assert!(fd_hvp(grad, &[1.0, 2.0], &[1.0, 0.0], 0.0).is_err());
        let nan = |_t: &[f64]| -> Result<Vec<f64>> { Ok(vec![f64::NAN, 0.0]) };
        assert!(matches!(fd_hvp(nan, &[1.0, 2.0], &[1.0, 0.0], 1e-4), Err(Error::Curvature(_))));
    }
}
