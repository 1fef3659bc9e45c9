//! Two-layer fully-connected compression model: an encoder projecting
//! features to a bottleneck sized by the information capacity, and a linear
//! decoder projecting back. Includes batch forward/backward passes and an
//! optional post-training uniform quantizer for the bottleneck codes.

use crate::error::{Error, Result};
use crate::numcore::{Matrix, Rng};

/// Encoder activation. The decoder output is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
        }
    }

    pub fn to_byte(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::domain(format!(
                "unknown activation '{other}' (expected identity or relu)"
            ))),
        }
    }
}

/// Information capacity in bytes maps one byte per bottleneck channel.
pub fn ic_to_bottleneck(ic_bytes: usize) -> Result<usize> {
    if ic_bytes == 0 {
        return Err(Error::domain("information capacity must be >= 1 byte"));
    }
    Ok(ic_bytes)
}

/// Shape and activation of the codec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecConfig {
    pub input_dim: usize,
    pub ic_bytes: usize,
    pub bottleneck_dim: usize,
    pub activation: Activation,
}

impl CodecConfig {
    pub fn new(input_dim: usize, ic_bytes: usize, activation: Activation) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::domain("input dimension must be >= 1"));
        }
        let bottleneck_dim = ic_to_bottleneck(ic_bytes)?;
        Ok(CodecConfig {
            input_dim,
            ic_bytes,
            bottleneck_dim,
            activation,
        })
    }
}

/// Weights and biases of the two layers.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecParams {
    /// bottleneck_dim x input_dim
    pub enc_weight: Matrix,
    /// length bottleneck_dim
    pub enc_bias: Vec<f64>,
    /// input_dim x bottleneck_dim
    pub dec_weight: Matrix,
    /// length input_dim
    pub dec_bias: Vec<f64>,
}

impl CodecParams {
    pub fn input_dim(&self) -> usize {
        self.enc_weight.cols()
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.enc_weight.rows()
    }

    /// Pass-through codec: square identity layers, zero biases.
    pub fn identity(dim: usize) -> Result<Self> {
        Ok(CodecParams {
            enc_weight: Matrix::identity(dim)?,
            enc_bias: vec![0.0; dim],
            dec_weight: Matrix::identity(dim)?,
            dec_bias: vec![0.0; dim],
        })
    }
}

/// Xavier-uniform initialization: weights uniform in
/// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]` per layer,
/// biases zero. Deterministic given the generator state.
pub fn init_codec(config: &CodecConfig, rng: &mut Rng) -> Result<CodecParams> {
    let (d, b) = (config.input_dim, config.bottleneck_dim);
    let bound = (6.0 / (d + b) as f64).sqrt();
    let mut enc = Matrix::zeros(b, d)?;
    for v in enc.data_mut() {
        *v = rng.uniform(-bound, bound);
    }
    let mut dec = Matrix::zeros(d, b)?;
    for v in dec.data_mut() {
        *v = rng.uniform(-bound, bound);
    }
    Ok(CodecParams {
        enc_weight: enc,
        enc_bias: vec![0.0; b],
        dec_weight: dec,
        dec_bias: vec![0.0; d],
    })
}

/// Encoder: `activation(enc_weight * x + enc_bias)`.
pub fn encode(params: &CodecParams, activation: Activation, x: &[f64]) -> Result<Vec<f64>> {
    let mut z = params.enc_weight.matvec(x)?;
    for (zi, bi) in z.iter_mut().zip(params.enc_bias.iter()) {
        *zi += bi;
    }
    if activation == Activation::Relu {
        for zi in z.iter_mut() {
            if *zi < 0.0 {
                *zi = 0.0;
            }
        }
    }
    Ok(z)
}

/// Decoder: `dec_weight * code + dec_bias` (always linear).
pub fn decode(params: &CodecParams, code: &[f64]) -> Result<Vec<f64>> {
    let mut y = params.dec_weight.matvec(code)?;
    for (yi, bi) in y.iter_mut().zip(params.dec_bias.iter()) {
        *yi += bi;
    }
    Ok(y)
}

/// Intermediate values retained by `forward_batch` for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// n x input_dim, the batch inputs
    pub inputs: Matrix,
    /// n x bottleneck_dim, pre-activation encoder outputs
    pub pre_codes: Matrix,
    /// n x bottleneck_dim, post-activation codes
    pub codes: Matrix,
}

/// Gradients for the four parameter tensors, shaped like `CodecParams`.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub enc_weight: Matrix,
    pub enc_bias: Vec<f64>,
    pub dec_weight: Matrix,
    pub dec_bias: Vec<f64>,
}

/// Row-wise encode/decode of a batch. Each row goes through the same code
/// path as `encode` and `decode`, so results are bitwise equal to a
/// per-sample loop.
pub fn forward_batch(
    params: &CodecParams,
    activation: Activation,
    inputs: &Matrix,
) -> Result<(Matrix, Matrix, ForwardCache)> {
    if inputs.cols() != params.input_dim() {
        return Err(Error::shape(format!(
            "batch has {} columns, codec expects {}",
            inputs.cols(),
            params.input_dim()
        )));
    }
    let n = inputs.rows();
    let b = params.bottleneck_dim();
    let mut pre_codes = Matrix::zeros(n, b)?;
    let mut codes = Matrix::zeros(n, b)?;
    let mut recons = Matrix::zeros(n, params.input_dim())?;
    for r in 0..n {
        let pre = encode(params, Activation::Identity, inputs.row(r))?;
        pre_codes.row_mut(r).copy_from_slice(&pre);
        let mut code = pre;
        if activation == Activation::Relu {
            for c in code.iter_mut() {
                if *c < 0.0 {
                    *c = 0.0;
                }
            }
        }
        let recon = decode(params, &code)?;
        codes.row_mut(r).copy_from_slice(&code);
        recons.row_mut(r).copy_from_slice(&recon);
    }
    let cache = ForwardCache {
        inputs: inputs.clone(),
        pre_codes,
        codes: codes.clone(),
    };
    Ok((codes, recons, cache))
}

/// Backpropagate reconstruction-space gradients through both layers.
///
/// The ReLU gradient is zero at pre-activation exactly 0.
pub fn backward_batch(
    params: &CodecParams,
    activation: Activation,
    cache: &ForwardCache,
    recon_grads: &Matrix,
) -> Result<ParamGrads> {
    let n = cache.inputs.rows();
    if recon_grads.rows() != n || recon_grads.cols() != params.input_dim() {
        return Err(Error::shape(format!(
            "recon_grads is {}x{}, expected {}x{}",
            recon_grads.rows(),
            recon_grads.cols(),
            n,
            params.input_dim()
        )));
    }
    if cache.codes.cols() != params.bottleneck_dim() {
        return Err(Error::shape("cache bottleneck width does not match params"));
    }

    let dec_bias = recon_grads.column_sums();
    // d L / d dec_weight = recon_grads^T . codes
    let dec_weight = recon_grads.transpose().matmul(&cache.codes)?;
    // gradient at the (post-activation) codes
    let code_grads = recon_grads.matmul(&params.dec_weight)?;
    // through the activation
    let mut pre_grads = code_grads;
    if activation == Activation::Relu {
        for r in 0..n {
            for c in 0..pre_grads.cols() {
                if cache.pre_codes.get(r, c) <= 0.0 {
                    pre_grads.set(r, c, 0.0);
                }
            }
        }
    }
    let enc_bias = pre_grads.column_sums();
    let enc_weight = pre_grads.transpose().matmul(&cache.inputs)?;

    Ok(ParamGrads {
        enc_weight,
        enc_bias,
        dec_weight,
        dec_bias,
    })
}

/// Uniform quantizer specification over a closed code range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantSpec {
    pub levels: u32,
    pub lo: f64,
    pub hi: f64,
}

impl QuantSpec {
    pub fn new(levels: u32, lo: f64, hi: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::domain(format!("need at least 2 levels, got {levels}")));
        }
        if !(lo < hi) {
            return Err(Error::domain(format!("invalid range [{lo}, {hi})")));
        }
        Ok(QuantSpec { levels, lo, hi })
    }
}

/// Mid-rise uniform quantization of `clamp(code, lo, hi)` into `levels` bins;
/// the dequantized value is the bin center. Returns (indices, dequantized).
pub fn quantize_code(code: &[f64], q: &QuantSpec) -> Result<(Vec<u32>, Vec<f64>)> {
    QuantSpec::new(q.levels, q.lo, q.hi)?;
    let width = (q.hi - q.lo) / q.levels as f64;
    let mut indices = Vec::with_capacity(code.len());
    let mut dequant = Vec::with_capacity(code.len());
    for &x in code {
        let clamped = x.clamp(q.lo, q.hi);
        let mut idx = ((clamped - q.lo) / width).floor() as i64;
        if idx >= q.levels as i64 {
            idx = q.levels as i64 - 1;
        }
        if idx < 0 {
            idx = 0;
        }
        indices.push(idx as u32);
        dequant.push(q.lo + (idx as f64 + 0.5) * width);
    }
    Ok((indices, dequant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::finite_diff_grad;
    use proptest::prelude::*;

    #[test]
    fn ic_mapping() {
        assert_eq!(ic_to_bottleneck(16).unwrap(), 16);
        assert_eq!(ic_to_bottleneck(256).unwrap(), 256);
        assert_eq!(ic_to_bottleneck(1).unwrap(), 1);
        assert!(ic_to_bottleneck(0).is_err());
    }

    #[test]
    fn init_is_deterministic_with_zero_biases_and_bounded_weights() {
        let cfg = CodecConfig::new(2048, 16, Activation::Identity).unwrap();
        let a = init_codec(&cfg, &mut Rng::new(9)).unwrap();
        let b = init_codec(&cfg, &mut Rng::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.enc_bias.iter().all(|&v| v == 0.0));
        assert!(a.dec_bias.iter().all(|&v| v == 0.0));
        let bound = (6.0 / 2064.0f64).sqrt();
        assert!(a.enc_weight.data().iter().all(|&v| v.abs() <= bound));
        assert!(a.dec_weight.data().iter().all(|&v| v.abs() <= bound));
    }

    #[test]
    fn encode_hand_cases() {
        // zero weights and biases -> zero code
        let params = CodecParams {
            enc_weight: Matrix::zeros(1, 2).unwrap(),
            enc_bias: vec![0.0],
            dec_weight: Matrix::zeros(2, 1).unwrap(),
            dec_bias: vec![0.0; 2],
        };
        assert_eq!(
            encode(&params, Activation::Identity, &[3.0, -4.0]).unwrap(),
            vec![0.0]
        );

        // identity configuration passes the input through
        let id = CodecParams::identity(3).unwrap();
        let x = [0.5, -1.0, 2.0];
        assert_eq!(encode(&id, Activation::Identity, &x).unwrap(), x.to_vec());

        // W=[[1,1]], b=[0.5], x=[1,2] -> [3.5]
        let params = CodecParams {
            enc_weight: Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            enc_bias: vec![0.5],
            dec_weight: Matrix::zeros(2, 1).unwrap(),
            dec_bias: vec![0.0; 2],
        };
        assert_eq!(
            encode(&params, Activation::Identity, &[1.0, 2.0]).unwrap(),
            vec![3.5]
        );
    }

    #[test]
    fn decode_hand_cases() {
        let params = CodecParams {
            enc_weight: Matrix::zeros(1, 2).unwrap(),
            enc_bias: vec![0.0],
            dec_weight: Matrix::from_rows(&[vec![2.0], vec![0.0]]).unwrap(),
            dec_bias: vec![1.0, 1.0],
        };
        assert_eq!(decode(&params, &[3.0]).unwrap(), vec![7.0, 1.0]);

        let zero = CodecParams {
            enc_weight: Matrix::zeros(2, 2).unwrap(),
            enc_bias: vec![0.0; 2],
            dec_weight: Matrix::zeros(2, 2).unwrap(),
            dec_bias: vec![0.0; 2],
        };
        assert_eq!(decode(&zero, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);

        let id = CodecParams::identity(2).unwrap();
        assert_eq!(decode(&id, &[4.0, -1.0]).unwrap(), vec![4.0, -1.0]);
    }

    #[test]
    fn forward_batch_matches_per_row_loop_bitwise() {
        let cfg = CodecConfig::new(8, 3, Activation::Relu).unwrap();
        let mut rng = Rng::new(21);
        let params = init_codec(&cfg, &mut rng).unwrap();
        let mut x = Matrix::zeros(4, 8).unwrap();
        for v in x.data_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        let (codes, recons, _) = forward_batch(&params, Activation::Relu, &x).unwrap();
        for r in 0..4 {
            let code = encode(&params, Activation::Relu, x.row(r)).unwrap();
            let recon = decode(&params, &code).unwrap();
            assert_eq!(codes.row(r), code.as_slice());
            assert_eq!(recons.row(r), recon.as_slice());
        }
    }

    #[test]
    fn forward_batch_row_permutation_permutes_outputs() {
        let cfg = CodecConfig::new(6, 2, Activation::Identity).unwrap();
        let mut rng = Rng::new(33);
        let params = init_codec(&cfg, &mut rng).unwrap();
        let mut x = Matrix::zeros(3, 6).unwrap();
        for v in x.data_mut() {
            *v = rng.uniform(-2.0, 2.0);
        }
        let perm = [2usize, 0, 1];
        let permuted = Matrix::from_rows(&perm.iter().map(|&i| x.row(i).to_vec()).collect::<Vec<_>>()).unwrap();
        let (_, r1, _) = forward_batch(&params, Activation::Identity, &x).unwrap();
        let (_, r2, _) = forward_batch(&params, Activation::Identity, &permuted).unwrap();
        for (out_row, &src) in perm.iter().enumerate() {
            assert_eq!(r2.row(out_row), r1.row(src));
        }
    }

    #[test]
    fn backward_zero_grads_give_zero_param_grads() {
        let cfg = CodecConfig::new(5, 2, Activation::Relu).unwrap();
        let mut rng = Rng::new(5);
        let params = init_codec(&cfg, &mut rng).unwrap();
        let mut x = Matrix::zeros(3, 5).unwrap();
        for v in x.data_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        let (_, _, cache) = forward_batch(&params, Activation::Relu, &x).unwrap();
        let zeros = Matrix::zeros(3, 5).unwrap();
        let g = backward_batch(&params, Activation::Relu, &cache, &zeros).unwrap();
        assert!(g.enc_weight.data().iter().all(|&v| v == 0.0));
        assert!(g.dec_weight.data().iter().all(|&v| v == 0.0));
        assert!(g.enc_bias.iter().all(|&v| v == 0.0));
        assert!(g.dec_bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_network_chain_rule() {
        // 1 -> 1 -> 1 identity network, loss = recon. Hand chain rule:
        // recon = wd * (we * x + be) + bd
        // d/dwd = code, d/dbd = 1, d/dwe = wd * x, d/dbe = wd
        let we = 1.5;
        let wd = -0.75;
        let be = 0.2;
        let bd = 0.1;
        let x = 2.0;
        let params = CodecParams {
            enc_weight: Matrix::from_vec(1, 1, vec![we]).unwrap(),
            enc_bias: vec![be],
            dec_weight: Matrix::from_vec(1, 1, vec![wd]).unwrap(),
            dec_bias: vec![bd],
        };
        let xm = Matrix::from_vec(1, 1, vec![x]).unwrap();
        let (codes, _, cache) = forward_batch(&params, Activation::Identity, &xm).unwrap();
        let ones = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        let g = backward_batch(&params, Activation::Identity, &cache, &ones).unwrap();
        assert_eq!(g.dec_weight.get(0, 0), codes.get(0, 0));
        assert_eq!(g.dec_bias[0], 1.0);
        assert_eq!(g.enc_weight.get(0, 0), wd * x);
        assert_eq!(g.enc_bias[0], wd);
    }

    #[test]
    fn backward_matches_finite_differences() {
        // random 32 -> 8 codec, composite loss: weighted sum of squared recons
        for &activation in &[Activation::Identity, Activation::Relu] {
            let cfg = CodecConfig::new(32, 8, activation).unwrap();
            let mut rng = Rng::new(77);
            let params = init_codec(&cfg, &mut rng).unwrap();
            let mut x = Matrix::zeros(4, 32).unwrap();
            for v in x.data_mut() {
                *v = rng.uniform(-1.0, 1.0);
            }
            let mut coeff = Matrix::zeros(4, 32).unwrap();
            for v in coeff.data_mut() {
                *v = rng.uniform(-1.0, 1.0);
            }
            let loss_of = |p: &CodecParams| -> f64 {
                let (_, recons, _) = forward_batch(p, activation, &x).unwrap();
                let mut acc = 0.0;
                for (r, c) in recons.data().iter().zip(coeff.data().iter()) {
                    acc += 0.5 * c * r * r;
                }
                acc
            };
            let (_, recons, cache) = forward_batch(&params, activation, &x).unwrap();
            let mut recon_grads = Matrix::zeros(4, 32).unwrap();
            for i in 0..recon_grads.data().len() {
                recon_grads.data_mut()[i] = coeff.data()[i] * recons.data()[i];
            }
            let analytic = backward_batch(&params, activation, &cache, &recon_grads).unwrap();

            let check = |flat: &[f64], rebuild: &dyn Fn(&[f64]) -> CodecParams, analytic: &[f64]| {
                let fd = finite_diff_grad(|v| loss_of(&rebuild(v)), flat, 1e-5).unwrap();
                let num: f64 = analytic.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let den = analytic
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
                    .max(fd.iter().map(|v| v * v).sum::<f64>().sqrt())
                    .max(1e-12);
                assert!(num / den < 1e-6, "relative gradient error {}", num / den);
            };

            let base = params.clone();
            check(
                params.enc_weight.data(),
                &|v| {
                    let mut p = base.clone();
                    p.enc_weight = Matrix::from_vec(8, 32, v.to_vec()).unwrap();
                    p
                },
                analytic.enc_weight.data(),
            );
            check(
                &params.enc_bias,
                &|v| {
                    let mut p = base.clone();
                    p.enc_bias = v.to_vec();
                    p
                },
                &analytic.enc_bias,
            );
            check(
                params.dec_weight.data(),
                &|v| {
                    let mut p = base.clone();
                    p.dec_weight = Matrix::from_vec(32, 8, v.to_vec()).unwrap();
                    p
                },
                analytic.dec_weight.data(),
            );
            check(
                &params.dec_bias,
                &|v| {
                    let mut p = base.clone();
                    p.dec_bias = v.to_vec();
                    p
                },
                &analytic.dec_bias,
            );
        }
    }

    #[test]
    fn identity_codec_is_affine() {
        // with Identity activation the whole codec is affine in the input
        let cfg = CodecConfig::new(6, 3, Activation::Identity).unwrap();
        let mut rng = Rng::new(55);
        let params = init_codec(&cfg, &mut rng).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let y: Vec<f64> = (0..6).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let a = rng.uniform(-1.5, 1.5);
            let b = rng.uniform(-1.5, 1.5);
            let mix: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
            let f = |v: &[f64]| {
                let code = encode(&params, Activation::Identity, v).unwrap();
                decode(&params, &code).unwrap()
            };
            let fm = f(&mix);
            let fx = f(&x);
            let fy = f(&y);
            for i in 0..6 {
                // subtract the bias contribution to isolate the linear part
                let lin_mix = fm[i] - params.dec_bias[i] - linear_bias(&params, i);
                let lin_x = fx[i] - params.dec_bias[i] - linear_bias(&params, i);
                let lin_y = fy[i] - params.dec_bias[i] - linear_bias(&params, i);
                assert!((lin_mix - (a * lin_x + b * lin_y)).abs() < 1e-9);
            }
        }
    }

    /// Contribution of enc_bias through the decoder at output coordinate `i`.
    fn linear_bias(params: &CodecParams, i: usize) -> f64 {
        let mut acc = 0.0;
        for (j, b) in params.enc_bias.iter().enumerate() {
            acc += params.dec_weight.get(i, j) * b;
        }
        acc
    }

    #[test]
    fn quantize_hand_case() {
        let q = QuantSpec::new(4, 0.0, 1.0).unwrap();
        let (idx, deq) = quantize_code(&[0.6], &q).unwrap();
        assert_eq!(idx, vec![2]);
        assert!((deq[0] - 0.625).abs() < 1e-15);
    }

    #[test]
    fn quantize_endpoints() {
        let q = QuantSpec::new(256, -1.0, 1.0).unwrap();
        let (idx, _) = quantize_code(&[-1.0, 1.0], &q).unwrap();
        assert_eq!(idx, vec![0, 255]);
    }

    #[test]
    fn quantize_rejects_bad_range() {
        assert!(QuantSpec::new(4, 1.0, 1.0).is_err());
        assert!(QuantSpec::new(4, 2.0, 1.0).is_err());
        assert!(QuantSpec::new(1, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn quantization_error_bound(
            x in proptest::collection::vec(-3.0..3.0f64, 1..16),
            levels in 2u32..512,
        ) {
            let q = QuantSpec::new(levels, -3.0, 3.0).unwrap();
            let (_, deq) = quantize_code(&x, &q).unwrap();
            let bound = (q.hi - q.lo) / (2.0 * levels as f64);
            for (orig, d) in x.iter().zip(&deq) {
                prop_assert!((orig - d).abs() <= bound + 1e-12);
            }
        }
    }
}
