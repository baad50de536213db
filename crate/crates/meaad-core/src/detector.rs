//! The attack detector: a from-scratch MLP binary classifier plus the
//! support-intersection voting baseline.
//!
//! Architecture is d -> 512 -> 256 -> 1 with ReLU hidden activations and a
//! sigmoid output head trained with binary cross-entropy. Training runs a
//! fixed number of SGD-with-momentum steps on batches drawn uniformly with
//! replacement; initialization and batch sampling share one seeded stream,
//! so a (dataset, hyperparams, seed) triple reproduces the model bitwise.
//!
//! Matrix products are computed over fixed 128-row blocks. Blocks are
//! independent (disjoint output rows, fixed summation order per element), so
//! the rayon and sequential builds produce identical bytes.

use ndarray::{azip, linalg::general_mat_mul, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::features::ContextFeature;
use crate::parallel;
use crate::retrieval::SupportSet;

pub const HIDDEN_LAYER_1: usize = 512;
pub const HIDDEN_LAYER_2: usize = 256;

/// Row-block size for parallel matrix work; fixed so the reduction order
/// never depends on thread count.
const ROW_BLOCK: usize = 256;

/// Training knobs. Defaults: lr 1e-4, momentum 0.9, batch 1024,
/// 5000 iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub iterations: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            momentum: 0.9,
            batch_size: 1024,
            iterations: 5000,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must be in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// MLP weights plus the training metadata that produced them.
///
/// Weight matrices are stored input-major: `w1` is (d x h1), so a batch
/// forward is `x . w1`. Fields are public for serialization and for
/// finite-difference tests; invariants (finite weights, consistent shapes)
/// are maintained by the construction paths.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: f64,
    pub hyperparams: Hyperparams,
    pub seed: u64,
}

impl DetectorModel {
    /// Seeded initial model: uniform Xavier weights, zero biases.
    ///
    /// Weights are drawn in a fixed order (w1, w2, w3, each row-major) from
    /// `U(-l, l)` with `l = sqrt(6 / (fan_in + fan_out))`.
    pub fn init(
        input_dim: usize,
        hidden: (usize, usize),
        hyperparams: Hyperparams,
        seed: u64,
    ) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        Self::init_from_rng(input_dim, hidden, hyperparams, seed, &mut rng)
    }

    fn init_from_rng(
        input_dim: usize,
        hidden: (usize, usize),
        hyperparams: Hyperparams,
        seed: u64,
        rng: &mut StdRng,
    ) -> Self {
        let mut xavier = |rows: usize, cols: usize| -> Array2<f64> {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let mut m = Array2::zeros((rows, cols));
            for r in 0..rows {
                for c in 0..cols {
                    m[(r, c)] = limit * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
            m
        };
        let (h1, h2) = hidden;
        DetectorModel {
            w1: xavier(input_dim, h1),
            b1: Array1::zeros(h1),
            w2: xavier(h1, h2),
            b2: Array1::zeros(h2),
            w3: xavier(h2, 1),
            b3: 0.0,
            hyperparams,
            seed,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_sizes(&self) -> (usize, usize) {
        (self.w1.ncols(), self.w2.ncols())
    }
}

/// One training example: a context feature with its class label
/// (0 benign, 1 adversarial).
#[derive(Debug, Clone)]
pub struct LabeledExample {
    pub feature: ContextFeature,
    pub label: u8,
}

/// Final model plus the per-iteration training loss.
#[derive(Debug, Clone)]
pub struct TrainedDetector {
    pub model: DetectorModel,
    pub loss_trajectory: Vec<f64>,
}

/// Analytic gradients of the mean BCE loss over one batch.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub dw1: Array2<f64>,
    pub db1: Array1<f64>,
    pub dw2: Array2<f64>,
    pub db2: Array1<f64>,
    pub dw3: Array2<f64>,
    pub db3: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// Largest f64 strictly below 1; keeps reported probabilities in (0, 1).
const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

/// Forward pass for one feature vector, returning the attack probability.
pub fn mlp_forward(model: &DetectorModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: x.len(),
        });
    }
    let xv = ArrayView1::from(x);
    let mut a1 = xv.dot(&model.w1);
    a1 += &model.b1;
    a1.mapv_inplace(|v| v.max(0.0));
    let mut a2 = a1.dot(&model.w2);
    a2 += &model.b2;
    a2.mapv_inplace(|v| v.max(0.0));
    let z = a2.dot(&model.w3.column(0)) + model.b3;
    if !z.is_finite() {
        return Err(Error::NonFinite(format!("mlp output logit {z}")));
    }
    Ok(sigmoid(z).clamp(f64::MIN_POSITIVE, ONE_MINUS))
}

/// A thresholded detector decision.
#[derive(Debug, Clone, Copy)]
pub struct Prediction {
    pub label: u8,
    pub probability: f64,
}

/// Labels attack when the probability is at or above the threshold
/// (default 0.5; the boundary itself counts as attack).
pub fn predict(model: &DetectorModel, x: &[f64], threshold: f64) -> Result<Prediction> {
    let probability = mlp_forward(model, x)?;
    Ok(Prediction {
        label: u8::from(probability >= threshold),
        probability,
    })
}

// ---------------------------------------------------------------------------
// Batch forward/backward.
// ---------------------------------------------------------------------------

struct Scratch {
    x: Array2<f64>,
    y: Array1<f64>,
    h1: Array2<f64>,
    h2: Array2<f64>,
    z3: Array1<f64>,
    g3: Array1<f64>,
    d1: Array2<f64>,
    d2: Array2<f64>,
    dw1: Array2<f64>,
    db1: Array1<f64>,
    dw2: Array2<f64>,
    db2: Array1<f64>,
    dw3: Array2<f64>,
    db3: f64,
}

impl Scratch {
    fn new(batch: usize, d: usize, h1: usize, h2: usize) -> Self {
        Scratch {
            x: Array2::zeros((batch, d)),
            y: Array1::zeros(batch),
            h1: Array2::zeros((batch, h1)),
            h2: Array2::zeros((batch, h2)),
            z3: Array1::zeros(batch),
            g3: Array1::zeros(batch),
            d1: Array2::zeros((batch, h1)),
            d2: Array2::zeros((batch, h2)),
            dw1: Array2::zeros((d, h1)),
            db1: Array1::zeros(h1),
            dw2: Array2::zeros((h1, h2)),
            db2: Array1::zeros(h2),
            dw3: Array2::zeros((h2, 1)),
            db3: 0.0,
        }
    }
}

/// C = A . B, computed over fixed row blocks of C. Blocks have disjoint
/// outputs and a fixed per-element summation order, so thread scheduling
/// cannot change the result.
fn gemm_blocked(a: ArrayView2<f64>, b: ArrayView2<f64>, c: &mut Array2<f64>) {
    debug_assert_eq!(a.nrows(), c.nrows());
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(b.ncols(), c.ncols());
    let blocks: Vec<_> = c
        .axis_chunks_iter_mut(Axis(0), ROW_BLOCK)
        .zip(a.axis_chunks_iter(Axis(0), ROW_BLOCK))
        .collect();
    parallel::for_each(blocks, |(mut cb, ab)| {
        general_mat_mul(1.0, &ab, &b, 0.0, &mut cb);
    });
}

/// out = relu(out + bias), rows independent.
fn bias_relu(out: &mut Array2<f64>, bias: &Array1<f64>) {
    let bias = bias.view();
    let blocks: Vec<_> = out.axis_chunks_iter_mut(Axis(0), ROW_BLOCK).collect();
    parallel::for_each(blocks, |mut block| {
        for mut row in block.rows_mut() {
            azip!((v in &mut row, &b in &bias) *v = (*v + b).max(0.0));
        }
    });
}

/// Forward/backward over one batch held in `scratch`, filling the gradient
/// fields and returning the mean BCE loss.
fn forward_backward(model: &DetectorModel, scratch: &mut Scratch) -> f64 {
    let batch = scratch.x.nrows();
    let inv_batch = 1.0 / batch as f64;
    let w3col = model.w3.column(0);

    // Forward.
    gemm_blocked(scratch.x.view(), model.w1.view(), &mut scratch.h1);
    bias_relu(&mut scratch.h1, &model.b1);
    gemm_blocked(scratch.h1.view(), model.w2.view(), &mut scratch.h2);
    bias_relu(&mut scratch.h2, &model.b2);
    for (z, row) in scratch.z3.iter_mut().zip(scratch.h2.rows()) {
        *z = row.dot(&w3col) + model.b3;
    }

    // Mean BCE from logits: max(z,0) - z*y + ln(1 + exp(-|z|)).
    let mut loss = 0.0;
    for (&z, &y) in scratch.z3.iter().zip(scratch.y.iter()) {
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
    }
    loss *= inv_batch;

    // Backward.
    for ((g, &z), &y) in scratch
        .g3
        .iter_mut()
        .zip(scratch.z3.iter())
        .zip(scratch.y.iter())
    {
        *g = (sigmoid(z) - y) * inv_batch;
    }

    scratch.db3 = scratch.g3.sum();
    {
        let g3_2d = scratch.g3.view().insert_axis(Axis(1));
        gemm_blocked(scratch.h2.t(), g3_2d, &mut scratch.dw3);
    }

    // delta2 = relu'(z2) * (g3 outer w3), with per-block bias-gradient
    // partials reduced in block order.
    {
        let blocks: Vec<_> = scratch
            .d2
            .axis_chunks_iter_mut(Axis(0), ROW_BLOCK)
            .zip(scratch.h2.axis_chunks_iter(Axis(0), ROW_BLOCK))
            .zip(scratch.g3.axis_chunks_iter(Axis(0), ROW_BLOCK))
            .collect();
        let partials = parallel::map_owned(blocks, |((mut db, hb), gb)| {
            let mut colsum = Array1::<f64>::zeros(db.ncols());
            for ((mut drow, hrow), &g) in db.rows_mut().into_iter().zip(hb.rows()).zip(gb.iter()) {
                azip!((d in &mut drow, s in &mut colsum, &h in &hrow, &w in &w3col) {
                    let v = if h > 0.0 { g * w } else { 0.0 };
                    *d = v;
                    *s += v;
                });
            }
            colsum
        });
        scratch.db2.fill(0.0);
        for p in partials {
            scratch.db2 += &p;
        }
    }
    gemm_blocked(scratch.h1.t(), scratch.d2.view(), &mut scratch.dw2);

    // delta1 = relu'(z1) * (delta2 . w2^T), same fused bias partials.
    gemm_blocked(scratch.d2.view(), model.w2.t(), &mut scratch.d1);
    {
        let blocks: Vec<_> = scratch
            .d1
            .axis_chunks_iter_mut(Axis(0), ROW_BLOCK)
            .zip(scratch.h1.axis_chunks_iter(Axis(0), ROW_BLOCK))
            .collect();
        let partials = parallel::map_owned(blocks, |(mut db, hb)| {
            let mut colsum = Array1::<f64>::zeros(db.ncols());
            for (mut drow, hrow) in db.rows_mut().into_iter().zip(hb.rows()) {
                azip!((d in &mut drow, s in &mut colsum, &h in &hrow) {
                    if h <= 0.0 {
                        *d = 0.0;
                    }
                    *s += *d;
                });
            }
            colsum
        });
        scratch.db1.fill(0.0);
        for p in partials {
            scratch.db1 += &p;
        }
    }
    gemm_blocked(scratch.x.t(), scratch.d1.view(), &mut scratch.dw1);

    loss
}

/// Mean BCE loss of the model on a batch. Shares the forward code used in
/// training, so finite differences of this function check the real path.
pub fn batch_loss(model: &DetectorModel, xs: ArrayView2<f64>, ys: &[u8]) -> Result<f64> {
    let (loss, _) = batch_forward_backward(model, xs, ys)?;
    Ok(loss)
}

/// Mean BCE loss and its analytic gradients on a batch.
pub fn batch_gradients(
    model: &DetectorModel,
    xs: ArrayView2<f64>,
    ys: &[u8],
) -> Result<(f64, Gradients)> {
    batch_forward_backward(model, xs, ys)
}

fn batch_forward_backward(
    model: &DetectorModel,
    xs: ArrayView2<f64>,
    ys: &[u8],
) -> Result<(f64, Gradients)> {
    if xs.nrows() != ys.len() {
        return Err(Error::LengthMismatch(xs.nrows(), ys.len()));
    }
    if xs.nrows() == 0 {
        return Err(Error::Empty);
    }
    if xs.ncols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: xs.ncols(),
        });
    }
    let (h1, h2) = model.hidden_sizes();
    let mut scratch = Scratch::new(xs.nrows(), xs.ncols(), h1, h2);
    scratch.x.assign(&xs);
    for (slot, &y) in scratch.y.iter_mut().zip(ys) {
        *slot = f64::from(y);
    }
    let loss = forward_backward(model, &mut scratch);
    let grads = Gradients {
        dw1: scratch.dw1,
        db1: scratch.db1,
        dw2: scratch.dw2,
        db2: scratch.db2,
        dw3: scratch.dw3,
        db3: scratch.db3,
    };
    Ok((loss, grads))
}

/// Trains the detector: seeded Xavier init, then `iterations` steps of
/// classical momentum (`v <- momentum*v - lr*grad; w <- w + v`) on batches
/// sampled uniformly with replacement.
pub fn train_detector(
    dataset: &[LabeledExample],
    hyperparams: Hyperparams,
    seed: u64,
) -> Result<TrainedDetector> {
    hyperparams.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty);
    }
    let d = dataset[0].feature.dim();
    for ex in dataset {
        if ex.feature.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: ex.feature.dim(),
            });
        }
        if ex.label > 1 {
            return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
        }
    }
    if dataset.iter().all(|e| e.label == 0) || dataset.iter().all(|e| e.label == 1) {
        return Err(Error::SingleClassDataset);
    }

    let m = dataset.len();
    let mut data = Array2::zeros((m, d));
    let mut labels = Array1::zeros(m);
    for (i, ex) in dataset.iter().enumerate() {
        let flat = ex.feature.flat();
        data.row_mut(i).assign(&ArrayView1::from(flat.as_slice()));
        labels[i] = f64::from(ex.label);
    }

    // One stream drives init then batch sampling, in that order.
    let mut rng = StdRng::seed_from_u64(seed);
    let mut model = DetectorModel::init_from_rng(
        d,
        (HIDDEN_LAYER_1, HIDDEN_LAYER_2),
        hyperparams,
        seed,
        &mut rng,
    );

    let mut scratch = Scratch::new(hyperparams.batch_size, d, HIDDEN_LAYER_1, HIDDEN_LAYER_2);
    let mut vel_w1 = Array2::<f64>::zeros(model.w1.raw_dim());
    let mut vel_b1 = Array1::<f64>::zeros(model.b1.raw_dim());
    let mut vel_w2 = Array2::<f64>::zeros(model.w2.raw_dim());
    let mut vel_b2 = Array1::<f64>::zeros(model.b2.raw_dim());
    let mut vel_w3 = Array2::<f64>::zeros(model.w3.raw_dim());
    let mut vel_b3 = 0.0f64;

    let mu = hyperparams.momentum;
    let lr = hyperparams.learning_rate;
    let mut loss_trajectory = Vec::with_capacity(hyperparams.iterations);

    for _ in 0..hyperparams.iterations {
        for b in 0..hyperparams.batch_size {
            let idx = rng.random_range(0..m);
            scratch.x.row_mut(b).assign(&data.row(idx));
            scratch.y[b] = labels[idx];
        }
        let loss = forward_backward(&model, &mut scratch);
        loss_trajectory.push(loss);

        azip!((v in &mut vel_w1, &g in &scratch.dw1) *v = mu * *v - lr * g);
        model.w1 += &vel_w1;
        azip!((v in &mut vel_b1, &g in &scratch.db1) *v = mu * *v - lr * g);
        model.b1 += &vel_b1;
        azip!((v in &mut vel_w2, &g in &scratch.dw2) *v = mu * *v - lr * g);
        model.w2 += &vel_w2;
        azip!((v in &mut vel_b2, &g in &scratch.db2) *v = mu * *v - lr * g);
        model.b2 += &vel_b2;
        azip!((v in &mut vel_w3, &g in &scratch.dw3) *v = mu * *v - lr * g);
        model.w3 += &vel_w3;
        vel_b3 = mu * vel_b3 - lr * scratch.db3;
        model.b3 += vel_b3;
    }

    Ok(TrainedDetector {
        model,
        loss_trajectory,
    })
}

// ---------------------------------------------------------------------------
// Voting baseline.
// ---------------------------------------------------------------------------

/// The voting baseline's decision for one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VotingDecision {
    pub label: u8,
    pub common_count: usize,
}

/// Counts the support samples common to every expert and labels attack when
/// the count is strictly below the threshold (a count equal to the threshold
/// is benign).
pub fn voting_detect(supports: &[SupportSet], threshold: usize) -> Result<VotingDecision> {
    if supports.len() < 2 {
        return Err(Error::SingleExpert);
    }
    let k = supports[0].k();
    for s in supports {
        if s.k() != k {
            return Err(Error::MismatchedSupportSizes(k, s.k()));
        }
    }
    let mut common = supports[0].item_id_set();
    for s in &supports[1..] {
        let ids = s.item_id_set();
        common.retain(|id| ids.contains(id));
    }
    let common_count = common.len();
    Ok(VotingDecision {
        label: u8::from(common_count < threshold),
        common_count,
    })
}
