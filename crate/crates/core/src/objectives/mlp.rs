use rand::{Rng, RngCore};

use super::{check_len, Objective};
use crate::error::{Error, Result};

/// Parameter initialisation for [`Mlp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Every weight and bias is zero. Hidden units then stay symmetric and
    /// receive zero gradient.
    Zeros,
    /// Weights `U(−√(6/fan_in), √(6/fan_in))`, biases zero.
    KaimingUniform,
}

impl std::str::FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" | "zero" => Ok(Init::Zeros),
            "kaiming" | "kaiming_uniform" => Ok(Init::KaimingUniform),
            other => Err(Error::Config(format!("unknown init {other:?} (zeros | kaiming)"))),
        }
    }
}

/// Rows of flattened inputs with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    pub inputs: Vec<f64>,
    pub labels: Vec<u8>,
    pub input_dim: usize,
}

impl LabeledBatch {
    pub fn new(inputs: Vec<f64>, labels: Vec<u8>, input_dim: usize) -> Result<Self> {
        check_len("inputs", inputs.len(), labels.len() * input_dim)?;
        Ok(Self {
            inputs,
            labels,
            input_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Layer widths of a fully connected ReLU network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self {
            widths: vec![784, 256, 128, 10],
        }
    }
}

/// Fully connected ReLU network with softmax cross-entropy loss averaged over
/// the batch.
///
/// The flat parameter vector stores, per layer, the weight matrix
/// (`out × in`, row-major) followed by the bias. ReLU has derivative 0 at 0.
#[derive(Debug, Clone)]
pub struct Mlp {
    widths: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub correct: usize,
    pub count: usize,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.correct as f64 / self.count as f64
        }
    }
}

struct Forward {
    /// Pre-activations per layer; the last entry holds the logits.
    pre: Vec<Vec<f64>>,
    /// Post-ReLU activations of the hidden layers.
    hidden: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new(spec: &MlpSpec) -> Result<Self> {
        let widths = spec.widths.clone();
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {widths:?}")));
        }
        if *widths.last().unwrap() > 256 {
            return Err(Error::Config("at most 256 output classes".into()));
        }
        let mut offsets = Vec::with_capacity(widths.len());
        let mut dim = 0;
        for w in widths.windows(2) {
            offsets.push(dim);
            dim += w[1] * w[0] + w[1];
        }
        Ok(Self { widths, offsets, dim })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// `(weight_offset, bias_offset, fan_in, fan_out)` of layer `l`.
    pub fn layer_layout(&self, l: usize) -> (usize, usize, usize, usize) {
        let (fi, fo) = (self.widths[l], self.widths[l + 1]);
        (self.offsets[l], self.offsets[l] + fi * fo, fi, fo)
    }

    pub fn init<R: RngCore + ?Sized>(&self, init: Init, rng: &mut R) -> Vec<f64> {
        let mut theta = vec![0.0; self.dim];
        if init == Init::KaimingUniform {
            for l in 0..self.layers() {
                let (w_off, b_off, fan_in, _) = self.layer_layout(l);
                let bound = (6.0 / fan_in as f64).sqrt();
                for w in &mut theta[w_off..b_off] {
                    *w = rng.random_range(-bound..bound);
                }
            }
        }
        theta
    }

    fn check(&self, theta: &[f64], batch: &LabeledBatch) -> Result<()> {
        check_len("theta", theta.len(), self.dim)?;
        if batch.input_dim != self.input_dim() {
            return Err(Error::Config(format!(
                "batch input dimension {} does not match network input {}",
                batch.input_dim,
                self.input_dim()
            )));
        }
        if batch.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        if let Some(&y) = batch.labels.iter().find(|&&y| y as usize >= self.classes()) {
            return Err(Error::Config(format!("label {y} out of range for {} classes", self.classes())));
        }
        Ok(())
    }

    fn forward(&self, theta: &[f64], batch: &LabeledBatch) -> Forward {
        let n = batch.len();
        let mut pre = Vec::with_capacity(self.layers());
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(self.layers() - 1);
        for l in 0..self.layers() {
            let (w_off, b_off, fi, fo) = self.layer_layout(l);
            let input = if l == 0 { &batch.inputs } else { &hidden[l - 1] };
            let mut z = repeat_rows(&theta[b_off..b_off + fo], n);
            gemm(n, fi, fo, input, false, &theta[w_off..b_off], true, 1.0, &mut z);
            if l + 1 < self.layers() {
                hidden.push(z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect());
            }
            pre.push(z);
        }
        Forward { pre, hidden }
    }

    /// Mean loss and the count of correct argmax predictions (ties go to the
    /// lowest class index).
    pub fn evaluate(&self, theta: &[f64], batch: &LabeledBatch) -> Result<Evaluation> {
        self.check(theta, batch)?;
        let fwd = self.forward(theta, batch);
        let logits = fwd.pre.last().unwrap();
        let k = self.classes();
        let mut loss = 0.0;
        let mut correct = 0;
        for (row, &y) in logits.chunks_exact(k).zip(&batch.labels) {
            loss += log_sum_exp(row) - row[y as usize];
            let mut best = 0;
            for j in 1..k {
                if row[j] > row[best] {
                    best = j;
                }
            }
            correct += usize::from(best == y as usize);
        }
        let loss = loss / batch.len() as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("loss {loss}")));
        }
        Ok(Evaluation {
            loss,
            correct,
            count: batch.len(),
        })
    }

    /// Softmax probabilities and `(P − Y)/n`, the gradient with respect to the
    /// logits.
    fn output_grad(&self, logits: &[f64], labels: &[u8]) -> (f64, Vec<f64>, Vec<f64>) {
        let k = self.classes();
        let inv_n = 1.0 / labels.len() as f64;
        let mut probs = vec![0.0; logits.len()];
        let mut loss = 0.0;
        for ((row, p), &y) in logits.chunks_exact(k).zip(probs.chunks_exact_mut(k)).zip(labels) {
            let lse = log_sum_exp(row);
            loss += lse - row[y as usize];
            for (pj, &zj) in p.iter_mut().zip(row) {
                *pj = (zj - lse).exp();
            }
        }
        let mut g = probs.clone();
        for (row, &y) in g.chunks_exact_mut(k).zip(labels) {
            row[y as usize] -= 1.0;
            for v in row.iter_mut() {
                *v *= inv_n;
            }
        }
        (loss * inv_n, probs, g)
    }

    /// Backpropagates `g` (gradient with respect to the pre-activation of
    /// layer `l`) one layer down, masking with the ReLU of layer `l − 1`.
    fn back_through(&self, theta_w: &[f64], g: &[f64], n: usize, l: usize, mask: &[f64]) -> Vec<f64> {
        let (_, _, fi, fo) = self.layer_layout(l);
        let mut dh = vec![0.0; n * fi];
        gemm(n, fo, fi, g, false, theta_w, false, 0.0, &mut dh);
        for (d, &z) in dh.iter_mut().zip(mask) {
            if z <= 0.0 {
                *d = 0.0;
            }
        }
        dh
    }
}

impl Objective for Mlp {
    type Batch = LabeledBatch;

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &[f64], batch: &LabeledBatch) -> Result<f64> {
        Ok(self.evaluate(theta, batch)?.loss)
    }

    fn loss_grad(&self, theta: &[f64], batch: &LabeledBatch) -> Result<(f64, Vec<f64>)> {
        self.check(theta, batch)?;
        let n = batch.len();
        let fwd = self.forward(theta, batch);
        let (loss, _, mut g) = self.output_grad(fwd.pre.last().unwrap(), &batch.labels);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("loss {loss}")));
        }
        let mut grad = vec![0.0; self.dim];
        for l in (0..self.layers()).rev() {
            let (w_off, b_off, fi, fo) = self.layer_layout(l);
            let input = if l == 0 { &batch.inputs } else { &fwd.hidden[l - 1] };
            gemm(fo, n, fi, &g, true, input, false, 0.0, &mut grad[w_off..b_off]);
            col_sum_into(&g, fo, &mut grad[b_off..b_off + fo]);
            if l > 0 {
                g = self.back_through(&theta[w_off..b_off], &g, n, l, &fwd.pre[l - 1]);
            }
        }
        Ok((loss, grad))
    }

    /// Exact Hessian-vector product by forward-over-reverse differentiation.
    fn hvp(&self, theta: &[f64], v: &[f64], batch: &LabeledBatch) -> Result<Vec<f64>> {
        self.check(theta, batch)?;
        check_len("v", v.len(), self.dim)?;
        let n = batch.len();
        let k = self.classes();
        let fwd = self.forward(theta, batch);

        // Directional derivative of every activation along v.
        let mut r_pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers());
        let mut r_hidden: Vec<Vec<f64>> = Vec::with_capacity(self.layers() - 1);
        for l in 0..self.layers() {
            let (w_off, b_off, fi, fo) = self.layer_layout(l);
            let input = if l == 0 { &batch.inputs } else { &fwd.hidden[l - 1] };
            let mut rz = repeat_rows(&v[b_off..b_off + fo], n);
            gemm(n, fi, fo, input, false, &v[w_off..b_off], true, 1.0, &mut rz);
            if l > 0 {
                gemm(n, fi, fo, &r_hidden[l - 1], false, &theta[w_off..b_off], true, 1.0, &mut rz);
            }
            if l + 1 < self.layers() {
                r_hidden.push(
                    rz.iter()
                        .zip(&fwd.pre[l])
                        .map(|(&r, &z)| if z > 0.0 { r } else { 0.0 })
                        .collect(),
                );
            }
            r_pre.push(rz);
        }

        let (_, probs, mut g) = self.output_grad(fwd.pre.last().unwrap(), &batch.labels);
        let inv_n = 1.0 / n as f64;
        let mut rg = vec![0.0; n * k];
        for ((p, rz), out) in probs
            .chunks_exact(k)
            .zip(r_pre.last().unwrap().chunks_exact(k))
            .zip(rg.chunks_exact_mut(k))
        {
            let mean: f64 = p.iter().zip(rz).map(|(a, b)| a * b).sum();
            for ((o, &pj), &rj) in out.iter_mut().zip(p).zip(rz) {
                *o = pj * (rj - mean) * inv_n;
            }
        }

        let mut hv = vec![0.0; self.dim];
        for l in (0..self.layers()).rev() {
            let (w_off, b_off, fi, fo) = self.layer_layout(l);
            let input = if l == 0 { &batch.inputs } else { &fwd.hidden[l - 1] };
            gemm(fo, n, fi, &rg, true, input, false, 0.0, &mut hv[w_off..b_off]);
            if l > 0 {
                gemm(fo, n, fi, &g, true, &r_hidden[l - 1], false, 1.0, &mut hv[w_off..b_off]);
            }
            col_sum_into(&rg, fo, &mut hv[b_off..b_off + fo]);
            if l > 0 {
                let mask = &fwd.pre[l - 1];
                let mut r_dh = vec![0.0; n * fi];
                gemm(n, fo, fi, &rg, false, &theta[w_off..b_off], false, 0.0, &mut r_dh);
                gemm(n, fo, fi, &g, false, &v[w_off..b_off], false, 1.0, &mut r_dh);
                for (d, &z) in r_dh.iter_mut().zip(mask) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
                g = self.back_through(&theta[w_off..b_off], &g, n, l, mask);
                rg = r_dh;
            }
        }
        if hv.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Hessian-vector product".into()));
        }
        Ok(hv)
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + row.iter().map(|&z| (z - m).exp()).sum::<f64>().ln()
}

fn repeat_rows(row: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(row.len() * n);
    for _ in 0..n {
        out.extend_from_slice(row);
    }
    out
}

fn col_sum_into(m: &[f64], cols: usize, out: &mut [f64]) {
    out.fill(0.0);
    for row in m.chunks_exact(cols) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

/// `C ← beta·C + op(A)·op(B)` for row-major storage, where `op(A)` is
/// `m × k` and `op(B)` is `k × n`. `ta` / `tb` mean the stored matrix is the
/// transpose.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, beta: f64, c: &mut [f64]) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above bound every index the strides can reach.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::testing::{fd_partial, hvp_vs_fd, rel_err};
    use crate::stable_noise::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn synthetic(n: usize, d: usize, k: u8, seed: u64) -> LabeledBatch {
        let mut rng = stream_rng(seed, 9);
        let inputs = (0..n * d).map(|_| rng.random_range(0.0..1.0)).collect();
        let labels = (0..n).map(|_| rng.random_range(0..k)).collect();
        LabeledBatch::new(inputs, labels, d).unwrap()
    }

    fn small() -> Mlp {
        Mlp::new(&MlpSpec {
            widths: vec![12, 9, 7, 5],
        })
        .unwrap()
    }

    #[test]
    fn gemm_matches_naive_for_all_transpositions() {
        let (m, k, n) = (3, 4, 2);
        let a: Vec<f64> = (0..m * k).map(|i| i as f64 * 0.5 - 1.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64).sin()).collect();
        let naive = |a: &dyn Fn(usize, usize) -> f64, b: &dyn Fn(usize, usize) -> f64| {
            let mut c = vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    c[i * n + j] = (0..k).map(|l| a(i, l) * b(l, j)).sum();
                }
            }
            c
        };
        let at: Vec<f64> = (0..k * m).map(|idx| a[(idx % m) * k + idx / m]).collect();
        let bt: Vec<f64> = (0..n * k).map(|idx| b[(idx % k) * n + idx / k]).collect();
        let expect = naive(&|i, l| a[i * k + l], &|l, j| b[l * n + j]);
        for (ta, tb) in [(false, false), (true, false), (false, true), (true, true)] {
            let mut c = vec![0.0; m * n];
            gemm(m, k, n, if ta { &at } else { &a }, ta, if tb { &bt } else { &b }, tb, 0.0, &mut c);
            assert!(rel_err(&c, &expect) < 1e-14, "{ta} {tb}");
        }
    }

    #[test]
    fn parameter_count() {
        let mlp = Mlp::new(&MlpSpec::default()).unwrap();
        assert_eq!(mlp.dim(), 784 * 256 + 256 + 256 * 128 + 128 + 128 * 10 + 10);
    }

    #[test]
    fn zero_parameters_give_uniform_loss() {
        let mlp = small();
        let batch = synthetic(6, 12, 5, 1);
        let loss = mlp.loss(&vec![0.0; mlp.dim()], &batch).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_init_gradient_only_reaches_output_bias() {
        let mlp = small();
        let batch = synthetic(10, 12, 5, 2);
        let g = mlp.grad(&vec![0.0; mlp.dim()], &batch).unwrap();
        let (_, b_off, _, fo) = mlp.layer_layout(2);
        assert!(g[..b_off].iter().all(|&x| x == 0.0));
        assert!(g[b_off..b_off + fo].iter().any(|&x| x != 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mlp = small();
        for probe in 0..100u64 {
            let mut rng = stream_rng(probe, 1);
            let theta = mlp.init(Init::KaimingUniform, &mut rng);
            let batch = synthetic(4, 12, 5, probe);
            let g = mlp.grad(&theta, &batch).unwrap();
            let idx: Vec<usize> = (0..20).map(|_| rng.random_range(0..mlp.dim())).collect();
            let fd: Vec<f64> = idx.iter().map(|&i| fd_partial(&mlp, &theta, &batch, i, 1e-6)).collect();
            let exact: Vec<f64> = idx.iter().map(|&i| g[i]).collect();
            assert!(rel_err(&fd, &exact) < 1e-5, "probe {probe}: {}", rel_err(&fd, &exact));
        }
    }

    #[test]
    fn hvp_matches_fd_hvp() {
        let mlp = small();
        for probe in 0..100u64 {
            let mut rng = stream_rng(probe, 2);
            let theta = mlp.init(Init::KaimingUniform, &mut rng);
            let v: Vec<f64> = (0..mlp.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let batch = synthetic(4, 12, 5, probe + 1000);
            let err = hvp_vs_fd(&mlp, &theta, &v, &batch);
            assert!(err < 1e-4, "probe {probe}: {err}");
        }
    }

    #[test]
    fn hvp_is_symmetric() {
        let mlp = small();
        let mut rng = stream_rng(5, 3);
        let theta = mlp.init(Init::KaimingUniform, &mut rng);
        let batch = synthetic(8, 12, 5, 5);
        let u: Vec<f64> = (0..mlp.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let w: Vec<f64> = (0..mlp.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let hu = mlp.hvp(&theta, &u, &batch).unwrap();
        let hw = mlp.hvp(&theta, &w, &batch).unwrap();
        let a: f64 = w.iter().zip(&hu).map(|(x, y)| x * y).sum();
        let b: f64 = u.iter().zip(&hw).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn rejects_bad_labels_and_shapes() {
        let mlp = small();
        let theta = vec![0.0; mlp.dim()];
        let bad = LabeledBatch::new(vec![0.0; 12], vec![7], 12).unwrap();
        assert!(mlp.loss(&theta, &bad).is_err());
        assert!(LabeledBatch::new(vec![0.0; 11], vec![0], 12).is_err());
        assert!(mlp.loss(&theta[1..], &synthetic(2, 12, 5, 0)).is_err());
    }

    #[test]
    fn kaiming_bounds() {
        let mlp = small();
        let theta = mlp.init(Init::KaimingUniform, &mut stream_rng(0, 0));
        for l in 0..3 {
            let (w_off, b_off, fi, fo) = mlp.layer_layout(l);
            let bound = (6.0 / fi as f64).sqrt();
            assert!(theta[w_off..b_off].iter().all(|w| w.abs() < bound));
            assert!(theta[b_off..b_off + fo].iter().all(|&b| b == 0.0));
        }
    }
}
