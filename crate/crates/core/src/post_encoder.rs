//! LSTM over a user's posts, projected to a 30-wide behaviour vector.
//!
//! Sequences are batched by time step: they are sorted by length, so the
//! sequences still running at step `t` always form a prefix of the batch and
//! every step is one matrix product.

use std::ops::Range;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data_model::{PostRecord, IMAGE_WIDTH, TEXT_WIDTH};
use crate::error::{Error, Result};
use crate::params::ParamSet;

pub const POST_BEHAVIOR_WIDTH: usize = 30;
pub const LSTM_HIDDEN: usize = 300;
pub const POST_INPUT_WIDTH: usize = TEXT_WIDTH + IMAGE_WIDTH + 1;
pub const DEFAULT_MAX_POSTS: usize = 200;

pub const TEXT_COLUMNS: Range<usize> = 0..TEXT_WIDTH;
pub const IMAGE_COLUMNS: Range<usize> = TEXT_WIDTH..TEXT_WIDTH + IMAGE_WIDTH;
pub const HOUR_COLUMN: Range<usize> = TEXT_WIDTH + IMAGE_WIDTH..POST_INPUT_WIDTH;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HourEncoding {
    /// `hour / 23`.
    #[default]
    Normalized,
    /// The integer hour as is.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceConfig {
    #[serde(default)]
    pub hour_encoding: HourEncoding,
    /// Only the most recent `max_posts` posts are encoded.
    #[serde(default = "default_max_posts")]
    pub max_posts: usize,
}

fn default_max_posts() -> usize {
    DEFAULT_MAX_POSTS
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            hour_encoding: HourEncoding::Normalized,
            max_posts: DEFAULT_MAX_POSTS,
        }
    }
}

/// One row per post: text ‖ image ‖ hour.
#[derive(Clone, Debug, PartialEq)]
pub struct PostSequenceTensor {
    rows: Array2<f64>,
}

impl PostSequenceTensor {
    pub fn from_rows(rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(Error::Shape("post sequence needs at least one row".into()));
        }
        Ok(PostSequenceTensor { rows })
    }

    /// A user without posts becomes a single all-zero row.
    pub fn from_posts(posts: &[PostRecord], config: &SequenceConfig) -> Self {
        let keep = &posts[posts.len().saturating_sub(config.max_posts.max(1))..];
        if keep.is_empty() {
            return PostSequenceTensor {
                rows: Array2::zeros((1, POST_INPUT_WIDTH)),
            };
        }
        let mut rows = Array2::zeros((keep.len(), POST_INPUT_WIDTH));
        for (mut row, post) in rows.outer_iter_mut().zip(keep) {
            let row = row.as_slice_mut().expect("standard layout");
            row[TEXT_COLUMNS].copy_from_slice(&post.text_embedding);
            row[IMAGE_COLUMNS].copy_from_slice(&post.image_embedding);
            row[HOUR_COLUMN.start] = match config.hour_encoding {
                HourEncoding::Normalized => f64::from(post.hour) / 23.0,
                HourEncoding::Raw => f64::from(post.hour),
            };
        }
        PostSequenceTensor { rows }
    }

    pub fn rows(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn width(&self) -> usize {
        self.rows.ncols()
    }

    pub fn zero_columns(&mut self, cols: Range<usize>) {
        self.rows.slice_mut(s![.., cols]).fill(0.0);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostBehaviorVector {
    pub values: Vec<f64>,
}

impl PostBehaviorVector {
    pub fn zeros() -> Self {
        PostBehaviorVector {
            values: vec![0.0; POST_BEHAVIOR_WIDTH],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl Default for LstmDims {
    fn default() -> Self {
        LstmDims {
            input: POST_INPUT_WIDTH,
            hidden: LSTM_HIDDEN,
            output: POST_BEHAVIOR_WIDTH,
        }
    }
}

/// Gate columns are ordered input, forget, cell, output.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w_input: Array2<f64>,
    pub w_hidden: Array2<f64>,
    pub bias: Array1<f64>,
    pub w_proj: Array2<f64>,
    pub b_proj: Array1<f64>,
}

impl LstmParams {
    pub fn zeros(dims: LstmDims) -> Self {
        let LstmDims { input, hidden, output } = dims;
        LstmParams {
            w_input: Array2::zeros((input, 4 * hidden)),
            w_hidden: Array2::zeros((hidden, 4 * hidden)),
            bias: Array1::zeros(4 * hidden),
            w_proj: Array2::zeros((hidden, output)),
            b_proj: Array1::zeros(output),
        }
    }

    /// Weights uniform in ±1/sqrt(fan_in), biases zero.
    pub fn init<R: Rng + ?Sized>(dims: LstmDims, rng: &mut R) -> Self {
        let mut p = Self::zeros(dims);
        uniform_fill(&mut p.w_input, rng);
        uniform_fill(&mut p.w_hidden, rng);
        uniform_fill(&mut p.w_proj, rng);
        p
    }

    pub fn dims(&self) -> LstmDims {
        LstmDims {
            input: self.w_input.nrows(),
            hidden: self.w_hidden.nrows(),
            output: self.w_proj.ncols(),
        }
    }

    fn check(&self) -> Result<()> {
        let LstmDims { input, hidden, output } = self.dims();
        let ok = self.w_input.dim() == (input, 4 * hidden)
            && self.w_hidden.dim() == (hidden, 4 * hidden)
            && self.bias.len() == 4 * hidden
            && self.w_proj.dim() == (hidden, output)
            && self.b_proj.len() == output;
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("inconsistent LSTM parameter shapes".into()))
        }
    }
}

pub(crate) fn uniform_fill<R: Rng + ?Sized>(w: &mut Array2<f64>, rng: &mut R) {
    let bound = 1.0 / (w.nrows() as f64).sqrt();
    w.mapv_inplace(|_| rng.random_range(-bound..bound));
}

impl ParamSet for LstmParams {
    fn tensors(&self) -> Vec<(&'static str, ArrayViewD<'_, f64>)> {
        vec![
            ("lstm.w_input", self.w_input.view().into_dyn()),
            ("lstm.w_hidden", self.w_hidden.view().into_dyn()),
            ("lstm.bias", self.bias.view().into_dyn()),
            ("lstm.w_proj", self.w_proj.view().into_dyn()),
            ("lstm.b_proj", self.b_proj.view().into_dyn()),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, ArrayViewMutD<'_, f64>)> {
        vec![
            ("lstm.w_input", self.w_input.view_mut().into_dyn()),
            ("lstm.w_hidden", self.w_hidden.view_mut().into_dyn()),
            ("lstm.bias", self.bias.view_mut().into_dyn()),
            ("lstm.w_proj", self.w_proj.view_mut().into_dyn()),
            ("lstm.b_proj", self.b_proj.view_mut().into_dyn()),
        ]
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Forward values of a batch of sequences, kept for the backward pass.
///
/// Per-step rows are stored time-major: step `t` occupies rows
/// `offsets[t]..offsets[t] + active[t]`, in length-sorted order.
#[derive(Clone, Debug)]
pub struct LstmCache {
    dims: LstmDims,
    /// Sorted position -> caller's sequence index.
    order: Vec<usize>,
    lens: Vec<usize>,
    offsets: Vec<usize>,
    active: Vec<usize>,
    x: Array2<f64>,
    gates: Array2<f64>,
    cells: Array2<f64>,
    hidden: Array2<f64>,
    /// Last hidden state per sequence, caller order.
    finals: Array2<f64>,
    pre_proj: Array2<f64>,
    /// ReLU(finals · W0 + b0), caller order.
    pub behavior: Array2<f64>,
}

impl LstmCache {
    pub fn batch_len(&self) -> usize {
        self.order.len()
    }

    /// Hidden outputs of sequence `seq`, one row per post.
    pub fn outputs(&self, seq: usize) -> Array2<f64> {
        let k = self.order.iter().position(|&o| o == seq).expect("sequence in batch");
        let mut out = Array2::zeros((self.lens[k], self.dims.hidden));
        for t in 0..self.lens[k] {
            out.row_mut(t).assign(&self.hidden.row(self.offsets[t] + k));
        }
        out
    }

    pub fn final_state(&self, seq: usize) -> Array1<f64> {
        self.finals.row(seq).to_owned()
    }

    pub fn behavior_vector(&self, seq: usize) -> PostBehaviorVector {
        PostBehaviorVector {
            values: self.behavior.row(seq).to_vec(),
        }
    }
}

/// Run every sequence through the LSTM and the projection.
pub fn forward_batch(seqs: &[&PostSequenceTensor], params: &LstmParams) -> Result<LstmCache> {
    params.check()?;
    let dims = params.dims();
    let h = dims.hidden;
    for seq in seqs {
        if seq.width() != dims.input {
            return Err(Error::Shape(format!(
                "post rows have width {}, expected {}",
                seq.width(),
                dims.input
            )));
        }
    }

    let mut order: Vec<usize> = (0..seqs.len()).collect();
    order.sort_by(|&a, &b| seqs[b].len().cmp(&seqs[a].len()).then(a.cmp(&b)));
    let lens: Vec<usize> = order.iter().map(|&i| seqs[i].len()).collect();
    let steps = lens.first().copied().unwrap_or(0);
    let active: Vec<usize> = (0..steps).map(|t| lens.iter().take_while(|&&l| l > t).count()).collect();
    let mut offsets = Vec::with_capacity(steps);
    let mut total = 0;
    for &a in &active {
        offsets.push(total);
        total += a;
    }

    let mut x = Array2::zeros((total, dims.input));
    for t in 0..steps {
        for k in 0..active[t] {
            x.row_mut(offsets[t] + k).assign(&seqs[order[k]].rows.row(t));
        }
    }

    let mut gates = x.dot(&params.w_input);
    let mut cells = Array2::<f64>::zeros((total, h));
    let mut hidden = Array2::<f64>::zeros((total, h));
    for t in 0..steps {
        let (a, off) = (active[t], offsets[t]);
        let (mut z, prev_h) = if t == 0 {
            (gates.slice_mut(s![off..off + a, ..]), None)
        } else {
            let prev = offsets[t - 1];
            (gates.slice_mut(s![off..off + a, ..]), Some(hidden.slice(s![prev..prev + a, ..])))
        };
        if let Some(prev_h) = prev_h {
            general_mat_mul(1.0, &prev_h, &params.w_hidden, 1.0, &mut z);
        }
        z += &params.bias;
        for r in 0..a {
            let zr = z.row_mut(r).into_slice().expect("contiguous row");
            let (i_f, g_o) = zr.split_at_mut(2 * h);
            i_f.iter_mut().for_each(|v| *v = sigmoid(*v));
            let (g, o) = g_o.split_at_mut(h);
            g.iter_mut().for_each(|v| *v = v.tanh());
            o.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        for r in 0..a {
            let zr = gates.row(off + r);
            let zr = zr.as_slice().expect("contiguous row");
            let c_prev: Option<Vec<f64>> = (t > 0).then(|| cells.row(offsets[t - 1] + r).to_vec());
            let mut c_row = cells.row_mut(off + r);
            let c_row = c_row.as_slice_mut().expect("contiguous row");
            for j in 0..h {
                let cp = c_prev.as_ref().map_or(0.0, |c| c[j]);
                c_row[j] = zr[h + j] * cp + zr[j] * zr[2 * h + j];
            }
            let c_row = c_row.to_vec();
            let mut h_row = hidden.row_mut(off + r);
            for j in 0..h {
                h_row[j] = zr[3 * h + j] * c_row[j].tanh();
            }
        }
    }

    let mut finals = Array2::zeros((seqs.len(), h));
    for (k, &seq) in order.iter().enumerate() {
        let t = lens[k] - 1;
        finals.row_mut(seq).assign(&hidden.row(offsets[t] + k));
    }
    let pre_proj = finals.dot(&params.w_proj) + &params.b_proj;
    let behavior = pre_proj.mapv(|v| v.max(0.0));

    Ok(LstmCache {
        dims,
        order,
        lens,
        offsets,
        active,
        x,
        gates,
        cells,
        hidden,
        finals,
        pre_proj,
        behavior,
    })
}

/// Accumulate parameter gradients for `upstream` = dLoss/d(behaviour), one
/// row per sequence in caller order. With `input_grads` the gradients with
/// respect to every post row are returned as well.
pub fn backward_batch(
    cache: &LstmCache,
    params: &LstmParams,
    upstream: ArrayView2<'_, f64>,
    grads: &mut LstmParams,
    input_grads: bool,
) -> Result<Option<Vec<Array2<f64>>>> {
    if params.dims() != cache.dims || grads.dims() != cache.dims {
        return Err(Error::Shape("LSTM cache does not match the parameters".into()));
    }
    if upstream.dim() != (cache.batch_len(), cache.dims.output) {
        return Err(Error::Shape(format!(
            "upstream gradient is {:?}, expected {:?}",
            upstream.dim(),
            (cache.batch_len(), cache.dims.output)
        )));
    }
    let h = cache.dims.hidden;

    let mut dpre = upstream.to_owned();
    ndarray::Zip::from(&mut dpre)
        .and(&cache.pre_proj)
        .for_each(|d, &p| {
            if p <= 0.0 {
                *d = 0.0;
            }
        });
    general_mat_mul(1.0, &cache.finals.t(), &dpre, 1.0, &mut grads.w_proj);
    grads.b_proj += &dpre.sum_axis(Axis(0));
    let dfinal = dpre.dot(&params.w_proj.t());

    let total = cache.x.nrows();
    let mut dz_all = Array2::<f64>::zeros((total, 4 * h));
    let steps = cache.active.len();
    let mut dh_carry = Array2::<f64>::zeros((0, h));
    let mut dc_carry = Array2::<f64>::zeros((0, h));
    for t in (0..steps).rev() {
        let (a, off) = (cache.active[t], cache.offsets[t]);
        let carried = dh_carry.nrows();
        let mut dh = Array2::<f64>::zeros((a, h));
        let mut dc = Array2::<f64>::zeros((a, h));
        dh.slice_mut(s![..carried, ..]).assign(&dh_carry);
        dc.slice_mut(s![..carried, ..]).assign(&dc_carry);
        // sequences ending at this step sit at the tail of the active prefix
        for k in carried..a {
            dh.row_mut(k).assign(&dfinal.row(cache.order[k]));
        }

        let mut dc_prev = Array2::<f64>::zeros((a, h));
        for r in 0..a {
            let g = cache.gates.row(off + r);
            let g = g.as_slice().expect("contiguous row");
            let c = cache.cells.row(off + r);
            let c_prev = (t > 0).then(|| cache.cells.row(cache.offsets[t - 1] + r));
            let mut dz = dz_all.row_mut(off + r);
            let dz = dz.as_slice_mut().expect("contiguous row");
            for j in 0..h {
                let (ig, fg, gg, og) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = c[j].tanh();
                let dhj = dh[[r, j]];
                let dct = dc[[r, j]] + dhj * og * (1.0 - tc * tc);
                let cp = c_prev.as_ref().map_or(0.0, |c| c[j]);
                dz[j] = dct * gg * ig * (1.0 - ig);
                dz[h + j] = dct * cp * fg * (1.0 - fg);
                dz[2 * h + j] = dct * ig * (1.0 - gg * gg);
                dz[3 * h + j] = dhj * tc * og * (1.0 - og);
                dc_prev[[r, j]] = dct * fg;
            }
        }

        let dz = dz_all.slice(s![off..off + a, ..]);
        if t > 0 {
            let prev = cache.offsets[t - 1];
            let h_prev = cache.hidden.slice(s![prev..prev + a, ..]);
            general_mat_mul(1.0, &h_prev.t(), &dz, 1.0, &mut grads.w_hidden);
            dh_carry = dz.dot(&params.w_hidden.t());
            dc_carry = dc_prev;
        }
    }

    grads.bias += &dz_all.sum_axis(Axis(0));
    general_mat_mul(1.0, &cache.x.t(), &dz_all, 1.0, &mut grads.w_input);

    if !input_grads {
        return Ok(None);
    }
    let dx_all = dz_all.dot(&params.w_input.t());
    let mut out: Vec<Array2<f64>> = vec![Array2::zeros((0, 0)); cache.batch_len()];
    for (k, &seq) in cache.order.iter().enumerate() {
        let mut dx = Array2::zeros((cache.lens[k], cache.dims.input));
        for t in 0..cache.lens[k] {
            dx.row_mut(t).assign(&dx_all.row(cache.offsets[t] + k));
        }
        out[seq] = dx;
    }
    Ok(Some(out))
}

/// Hidden outputs (one row per post) and the final output.
pub fn lstm_forward(seq: &PostSequenceTensor, params: &LstmParams) -> Result<(Array2<f64>, Array1<f64>)> {
    let cache = forward_batch(&[seq], params)?;
    Ok((cache.outputs(0), cache.final_state(0)))
}

pub fn encode_post_behavior(seq: &PostSequenceTensor, params: &LstmParams) -> Result<PostBehaviorVector> {
    Ok(forward_batch(&[seq], params)?.behavior_vector(0))
}

/// Behaviour vector of a user with no posts: one all-zero row.
pub fn encode_empty_user(params: &LstmParams) -> Result<PostBehaviorVector> {
    let seq = PostSequenceTensor::from_rows(Array2::zeros((1, params.dims().input)))?;
    encode_post_behavior(&seq, params)
}

/// Gradients of `upstream · behaviour` for one sequence: parameters and post rows.
pub fn lstm_backward(
    seq: &PostSequenceTensor,
    params: &LstmParams,
    upstream: &[f64],
) -> Result<(LstmParams, Array2<f64>)> {
    let cache = forward_batch(&[seq], params)?;
    let up = ArrayView2::from_shape((1, upstream.len()), upstream)
        .map_err(|e| Error::Shape(e.to_string()))?;
    let mut grads = LstmParams::zeros(params.dims());
    let dx = backward_batch(&cache, params, up, &mut grads, true)?
        .expect("input gradients requested")
        .pop()
        .expect("one sequence");
    Ok((grads, dx))
}
