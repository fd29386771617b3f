use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    let scale = (1.0 / rows.max(1) as f64).sqrt();
    let normal = Normal::new(0.0, scale).expect("positive scale");
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng))
}

fn check_cols(x: &Array2<f64>, cols: usize) -> Result<()> {
    if x.ncols() != cols {
        return Err(Error::ShapeMismatch {
            expected: (x.nrows(), cols),
            actual: x.dim(),
        });
    }
    Ok(())
}

/// y = x·W + b with `W: [in × out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if weight.ncols() != bias.len() {
            return Err(Error::invalid("bias length must equal output width"));
        }
        Ok(Self { weight, bias })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, inputs: usize, outputs: usize) -> Self {
        Self {
            weight: random_matrix(rng, inputs, outputs),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_cols(x, self.inputs())?;
        Ok(x.dot(&self.weight) + &self.bias)
    }
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// Bias-free multi-head cross-attention.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadAttention {
    heads: usize,
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_v: Array2<f64>,
    pub w_o: Array2<f64>,
}

impl MultiHeadAttention {
    /// Query width `d_model`, context width `d_context`; `heads` must divide
    /// `d_model`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        d_model: usize,
        d_context: usize,
        heads: usize,
    ) -> Result<Self> {
        if heads == 0 || !d_model.is_multiple_of(heads) {
            return Err(Error::invalid(format!(
                "{heads} heads do not divide width {d_model}"
            )));
        }
        Ok(Self {
            heads,
            w_q: random_matrix(rng, d_model, d_model),
            w_k: random_matrix(rng, d_context, d_model),
            w_v: random_matrix(rng, d_context, d_model),
            w_o: random_matrix(rng, d_model, d_model),
        })
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn d_model(&self) -> usize {
        self.w_q.nrows()
    }

    pub fn d_context(&self) -> usize {
        self.w_k.nrows()
    }

    /// Output `[Lq × d_model]` and one `[Lq × Lk]` attention map per head.
    pub fn forward(
        &self,
        query: &Array2<f64>,
        context: &Array2<f64>,
    ) -> Result<(Array2<f64>, Vec<Array2<f64>>)> {
        check_cols(query, self.d_model())?;
        check_cols(context, self.d_context())?;
        if context.nrows() == 0 {
            return Err(Error::invalid("attention context has no rows"));
        }
        let q = query.dot(&self.w_q);
        let k = context.dot(&self.w_k);
        let v = context.dot(&self.w_v);
        let dh = self.d_model() / self.heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut merged = Array2::zeros((query.nrows(), self.d_model()));
        let mut maps = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            softmax_rows(&mut scores);
            merged.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
            maps.push(scores);
        }
        Ok((merged.dot(&self.w_o), maps))
    }
}

/// Encoded conditions; a missing entry is replaced by that condition's null
/// row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionBundle {
    pub text: Option<Array2<f64>>,
    pub beats: Option<Array2<f64>>,
    pub chords: Option<Array2<f64>>,
}

impl ConditionBundle {
    pub fn presence(&self) -> [bool; 3] {
        [self.text.is_some(), self.beats.is_some(), self.chords.is_some()]
    }
}

/// Per-head attention weights of one block.
pub type AttentionMaps = Vec<Array2<f64>>;

/// Cross-attention over text, then beats, then chords, each with a residual
/// connection.
#[derive(Debug, Clone, PartialEq)]
pub struct MunetConditioning {
    pub text_attention: MultiHeadAttention,
    pub beat_attention: MultiHeadAttention,
    pub chord_attention: MultiHeadAttention,
    pub null_text: Array1<f64>,
    pub null_beats: Array1<f64>,
    pub null_chords: Array1<f64>,
}

impl MunetConditioning {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, d_model: usize, heads: usize) -> Result<Self> {
        let normal = Normal::new(0.0, 0.02).expect("positive scale");
        let null = |rng: &mut R| Array1::from_shape_simple_fn(d_model, || normal.sample(rng));
        Ok(Self {
            text_attention: MultiHeadAttention::random(rng, d_model, d_model, heads)?,
            beat_attention: MultiHeadAttention::random(rng, d_model, d_model, heads)?,
            chord_attention: MultiHeadAttention::random(rng, d_model, d_model, heads)?,
            null_text: null(rng),
            null_beats: null(rng),
            null_chords: null(rng),
        })
    }

    /// Conditioned features and the attention maps of every block, in
    /// text, beats, chords order.
    pub fn forward(
        &self,
        u: &Array2<f64>,
        bundle: &ConditionBundle,
    ) -> Result<(Array2<f64>, Vec<AttentionMaps>)> {
        let stages = [
            (&self.text_attention, &bundle.text, &self.null_text),
            (&self.beat_attention, &bundle.beats, &self.null_beats),
            (&self.chord_attention, &bundle.chords, &self.null_chords),
        ];
        let mut x = u.clone();
        let mut maps = Vec::with_capacity(3);
        for (attn, cond, null) in stages {
            let null_row;
            let context = match cond {
                Some(c) if c.nrows() > 0 => c,
                _ => {
                    null_row = null.clone().insert_axis(Axis(0));
                    &null_row
                }
            };
            let (out, m) = attn.forward(&x, context)?;
            x = x + out;
            maps.push(m);
        }
        Ok((x, maps))
    }
}

/// A_τ = U + MHA(U, text); A_b = A_τ + MHA(A_τ, beats);
/// A_c = A_b + MHA(A_b, chords).
pub fn munet_condition(
    u: &Array2<f64>,
    bundle: &ConditionBundle,
    params: &MunetConditioning,
) -> Result<Array2<f64>> {
    params.forward(u, bundle).map(|(x, _)| x)
}
