//! Training objectives: the MSE distance, the similarity loss, the
//! margin-based discrimination loss over (anchor, positive, negative)
//! triplets, their weighted combination, and analytic gradients for all of
//! them.

use crate::error::{Error, Result};

/// Default triplet margin.
pub const DEFAULT_MARGIN: f64 = 0.3;

/// One triplet of equal-dimension feature vectors. The anchor and positive
/// are intended to share a class label and the negative to differ; the miner
/// enforces that, and debug builds assert it there.
#[derive(Debug, Clone)]
pub struct Triplet {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl Triplet {
    pub fn new(anchor: Vec<f64>, positive: Vec<f64>, negative: Vec<f64>) -> Result<Self> {
        if anchor.len() != positive.len() || anchor.len() != negative.len() {
            return Err(Error::shape(format!(
                "triplet members must share one dimension, got {}/{}/{}",
                anchor.len(),
                positive.len(),
                negative.len()
            )));
        }
        if anchor.is_empty() {
            return Err(Error::domain("triplet vectors must be non-empty"));
        }
        Ok(Triplet {
            anchor,
            positive,
            negative,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }
}

/// Which objective drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LossKind {
    Sim,
    Dis,
    Combined,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Sim => "sim",
            LossKind::Dis => "dis",
            LossKind::Combined => "combined",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sim" => Ok(LossKind::Sim),
            "dis" => Ok(LossKind::Dis),
            "combined" => Ok(LossKind::Combined),
            other => Err(Error::domain(format!(
                "unknown loss kind '{other}' (expected sim, dis, or combined)"
            ))),
        }
    }
}

/// Objective selection plus its hyperparameters.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub kind: LossKind,
    pub alpha: f64,
    pub weight_sim: f64,
    pub weight_dis: f64,
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Self {
        LossSpec {
            kind,
            alpha: DEFAULT_MARGIN,
            weight_sim: 1.0,
            weight_dis: 1.0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_weights(mut self, weight_sim: f64, weight_dis: f64) -> Self {
        self.weight_sim = weight_sim;
        self.weight_dis = weight_dis;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 {
            return Err(Error::domain(format!("margin must be >= 0, got {}", self.alpha)));
        }
        if self.weight_sim < 0.0 || self.weight_dis < 0.0 {
            return Err(Error::domain("loss weights must be >= 0"));
        }
        if self.kind == LossKind::Combined && self.weight_sim + self.weight_dis <= 0.0 {
            return Err(Error::domain("combined loss needs weight_sim + weight_dis > 0"));
        }
        Ok(())
    }
}

/// Mean squared difference: `(1/dim) * sum_i (x_i - y_i)^2`.
///
/// This is the distance measure used everywhere: in the triplet loss, in
/// mining, and in retrieval/verification evaluation.
pub fn mse_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "distance between vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::domain("distance of empty vectors is undefined"));
    }
    let mut acc = 0.0;
    for i in 0..x.len() {
        let d = x[i] - y[i];
        acc += d * d;
    }
    Ok(acc / x.len() as f64)
}

/// Similarity objective: MSE between a reconstruction and its original.
pub fn sim_loss(recon: &[f64], orig: &[f64]) -> Result<f64> {
    mse_distance(recon, orig)
}

/// Gradient of `sim_loss` with respect to the reconstruction:
/// `(2/dim) * (recon - orig)`.
pub fn sim_loss_grad(recon: &[f64], orig: &[f64]) -> Result<Vec<f64>> {
    if recon.len() != orig.len() {
        return Err(Error::shape(format!(
            "gradient between vectors of length {} and {}",
            recon.len(),
            orig.len()
        )));
    }
    let scale = 2.0 / recon.len() as f64;
    Ok(recon
        .iter()
        .zip(orig.iter())
        .map(|(r, o)| scale * (r - o))
        .collect())
}

/// Discrimination objective on a triplet:
/// `max(d(A,P) - d(A,N) + alpha, 0)` with `d` the MSE distance.
pub fn dis_loss(t: &Triplet, alpha: f64) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::domain(format!("margin must be >= 0, got {alpha}")));
    }
    let dap = mse_distance(&t.anchor, &t.positive)?;
    let dan = mse_distance(&t.anchor, &t.negative)?;
    Ok((dap - dan + alpha).max(0.0))
}

/// Subgradient of `dis_loss` with respect to (anchor, positive, negative).
///
/// Inside the hinge (`loss > 0`):
///   gP = (2/dim)(P - A), gN = -(2/dim)(N - A), gA = (2/dim)((A-P) - (A-N)).
/// At or below the boundary (`loss <= 0`, including exactly 0) all three are
/// zero, so clamped triplets stay inert.
pub fn dis_loss_grads(t: &Triplet, alpha: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let loss = dis_loss(t, alpha)?;
    let dim = t.dim();
    if loss <= 0.0 {
        return Ok((vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]));
    }
    let scale = 2.0 / dim as f64;
    let mut ga = vec![0.0; dim];
    let mut gp = vec![0.0; dim];
    let mut gn = vec![0.0; dim];
    for i in 0..dim {
        let a = t.anchor[i];
        let p = t.positive[i];
        let n = t.negative[i];
        gp[i] = scale * (p - a);
        gn[i] = -scale * (n - a);
        ga[i] = scale * ((a - p) - (a - n));
    }
    Ok((ga, gp, gn))
}

/// Combined objective on one triplet: the SIM term averaged over the three
/// (reconstruction, original) pairs plus the DIS term on the reconstructed
/// triplet, weighted by the spec. Requires `kind == Combined`.
pub fn combined_loss(recon: &Triplet, orig: &Triplet, spec: &LossSpec) -> Result<f64> {
    if spec.kind != LossKind::Combined {
        return Err(Error::domain(format!(
            "combined_loss called with kind '{}'",
            spec.kind.name()
        )));
    }
    spec.validate()?;
    let sim = (sim_loss(&recon.anchor, &orig.anchor)?
        + sim_loss(&recon.positive, &orig.positive)?
        + sim_loss(&recon.negative, &orig.negative)?)
        / 3.0;
    let dis = dis_loss(recon, spec.alpha)?;
    Ok(spec.weight_sim * sim + spec.weight_dis * dis)
}
