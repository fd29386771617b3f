use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{
    diffusion_loss_with_draws, forward_sample, mpe_embed, ConditionBundle, Denoiser, Latent,
    LossDraw, NoiseSchedule, SinusoidConfig,
};
use crate::error::{Error, Result};

const STEP_EMBED_DIM: usize = 16;
const STEP_EMBED_BASE: f64 = 1000.0;

/// Two-layer tanh MLP over `[flattened z_n ⊕ step embedding ⊕ pooled
/// conditions]`, predicting the noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDenoiser {
    shape: (usize, usize),
    cond_width: usize,
    step_embed: SinusoidConfig,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Hidden activations and output for one input.
struct Pass {
    input: Array1<f64>,
    hidden: Array1<f64>,
    output: Array1<f64>,
}

impl ToyDenoiser {
    /// `cond_width` is the row width of each condition matrix; conditions
    /// are mean-pooled per type and concatenated.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        shape: (usize, usize),
        cond_width: usize,
        hidden: usize,
    ) -> Self {
        let step_embed =
            SinusoidConfig::new(STEP_EMBED_DIM, STEP_EMBED_BASE).expect("valid constants");
        let d = shape.0 * shape.1;
        let inputs = d + STEP_EMBED_DIM + 3 * cond_width;
        let n1 = Normal::new(0.0, (1.0 / inputs as f64).sqrt()).expect("positive");
        let n2 = Normal::new(0.0, (1.0 / hidden as f64).sqrt()).expect("positive");
        Self {
            shape,
            cond_width,
            step_embed,
            w1: Array2::from_shape_simple_fn((inputs, hidden), || n1.sample(rng)),
            b1: Array1::zeros(hidden),
            w2: Array2::from_shape_simple_fn((hidden, d), || n2.sample(rng) * 0.1),
            b2: Array1::zeros(d),
        }
    }

    pub fn latent_shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn cond_width(&self) -> usize {
        self.cond_width
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Parameters in w1, b1, w2, b2 order.
    pub fn params(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .copied()
            .collect()
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "{} parameters for a model with {}",
                p.len(),
                self.param_count()
            )));
        }
        let mut it = p.iter().copied();
        for v in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
        {
            *v = it.next().expect("length checked");
        }
        Ok(())
    }

    fn pooled(&self, cond: Option<&ConditionBundle>) -> Result<Array1<f64>> {
        let mut out = Array1::zeros(3 * self.cond_width);
        let Some(bundle) = cond else {
            return Ok(out);
        };
        for (i, m) in [&bundle.text, &bundle.beats, &bundle.chords].into_iter().enumerate() {
            if let Some(m) = m.as_ref().filter(|m| m.nrows() > 0) {
                if m.ncols() != self.cond_width {
                    return Err(Error::ShapeMismatch {
                        expected: (m.nrows(), self.cond_width),
                        actual: m.dim(),
                    });
                }
                let mean = m.mean_axis(Axis(0)).expect("non-empty");
                out.slice_mut(s![i * self.cond_width..(i + 1) * self.cond_width])
                    .assign(&mean);
            }
        }
        Ok(out)
    }

    fn pass(&self, z: &Latent, n: usize, cond: Option<&ConditionBundle>) -> Result<Pass> {
        if z.dim() != self.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                actual: z.dim(),
            });
        }
        let flat = Array1::from_iter(z.iter().copied());
        let input = concatenate![
            Axis(0),
            flat,
            mpe_embed(n as f64, &self.step_embed),
            self.pooled(cond)?
        ];
        let hidden = (input.dot(&self.w1) + &self.b1).mapv(f64::tanh);
        let output = hidden.dot(&self.w2) + &self.b2;
        Ok(Pass {
            input,
            hidden,
            output,
        })
    }

    /// Loss over fixed draws and its gradient in [`Self::params`] order.
    pub fn loss_and_grad(
        &self,
        z0: &[Latent],
        draws: &[LossDraw],
        sched: &NoiseSchedule,
        gamma: &[f64],
        cond: Option<&ConditionBundle>,
    ) -> Result<(f64, Vec<f64>)> {
        if z0.len() != draws.len() || z0.is_empty() {
            return Err(Error::invalid("need one draw per latent and at least one latent"));
        }
        if gamma.len() != sched.steps() {
            return Err(Error::invalid("step weights must match schedule length"));
        }
        let mut gw1 = Array2::zeros(self.w1.dim());
        let mut gb1 = Array1::zeros(self.b1.len());
        let mut gw2 = Array2::zeros(self.w2.dim());
        let mut gb2 = Array1::zeros(self.b2.len());
        let mut loss = 0.0;
        let scale = 1.0 / z0.len() as f64;
        for (z, d) in z0.iter().zip(draws) {
            let z_n = forward_sample(z, d.n, &d.eps, sched)?;
            let p = self.pass(&z_n, d.n, cond)?;
            let g = gamma[d.n - 1];
            let diff = &p.output - &Array1::from_iter(d.eps.iter().copied());
            loss += g * diff.dot(&diff) * scale;
            let d_out = diff * (2.0 * g * scale);
            let d_hidden = self.w2.dot(&d_out) * p.hidden.mapv(|h| 1.0 - h * h);
            gw2 += &outer(&p.hidden, &d_out);
            gb2 += &d_out;
            gw1 += &outer(&p.input, &d_hidden);
            gb1 += &d_hidden;
        }
        let grad = gw1
            .iter()
            .chain(gb1.iter())
            .chain(gw2.iter())
            .chain(gb2.iter())
            .copied()
            .collect();
        Ok((loss, grad))
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    a.view()
        .insert_axis(Axis(1))
        .dot(&b.view().insert_axis(Axis(0)))
}

impl Denoiser for ToyDenoiser {
    fn predict(&self, z: &Latent, n: usize, cond: Option<&ConditionBundle>) -> Result<Latent> {
        let p = self.pass(z, n, cond)?;
        Ok(Latent::from_shape_vec(self.shape, p.output.to_vec()).expect("output matches shape"))
    }
}

/// Losses recorded by [`ToyTrainer::train`] on a fixed evaluation draw set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Evaluation loss every `eval_every` steps, starting at step 0.
    pub history: Vec<f64>,
}

/// Adam on minibatches of freshly drawn (n, ε).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyTrainer {
    pub steps: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub eval_every: usize,
    pub eval_size: usize,
}

impl Default for ToyTrainer {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch: 32,
            learning_rate: 3e-3,
            eval_every: 100,
            eval_size: 512,
        }
    }
}

impl ToyTrainer {
    /// Synthetic clean latents: a fixed unit pattern scaled by a small
    /// random amplitude of random sign.
    pub fn synthetic_latents<R: Rng + ?Sized>(
        rng: &mut R,
        count: usize,
        shape: (usize, usize),
    ) -> Vec<Latent> {
        let d = (shape.0 * shape.1) as f64;
        let pattern = Latent::from_shape_fn(shape, |(i, j)| {
            ((i * shape.1 + j) as f64 * 0.7).sin() * (2.0 / d).sqrt()
        });
        (0..count)
            .map(|_| {
                let amp = rng.random_range(0.05..0.15) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                &pattern * amp
            })
            .collect()
    }

    pub fn train<R: Rng + ?Sized>(
        &self,
        model: &mut ToyDenoiser,
        data: &[Latent],
        sched: &NoiseSchedule,
        rng: &mut R,
    ) -> Result<TrainReport> {
        if data.is_empty() || self.batch == 0 {
            return Err(Error::invalid("training needs data and a positive batch size"));
        }
        let gamma = vec![1.0; sched.steps()];
        let eval_z: Vec<Latent> = (0..self.eval_size)
            .map(|_| data[rng.random_range(0..data.len())].clone())
            .collect();
        let eval_draws: Vec<LossDraw> = eval_z
            .iter()
            .map(|z| LossDraw::sample(rng, sched.steps(), z.dim()))
            .collect();
        let evaluate = |m: &ToyDenoiser| {
            diffusion_loss_with_draws(m, &eval_z, &eval_draws, sched, &gamma, None)
        };
        let initial_loss = evaluate(model)?;
        let mut history = vec![initial_loss];

        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let mut params = model.params();
        let mut m = vec![0.0; params.len()];
        let mut v = vec![0.0; params.len()];
        for step in 1..=self.steps {
            let batch: Vec<Latent> = (0..self.batch)
                .map(|_| data[rng.random_range(0..data.len())].clone())
                .collect();
            let draws: Vec<LossDraw> = batch
                .iter()
                .map(|z| LossDraw::sample(rng, sched.steps(), z.dim()))
                .collect();
            let (_, grad) = model.loss_and_grad(&batch, &draws, sched, &gamma, None)?;
            let c1 = 1.0 - b1.powi(step as i32);
            let c2 = 1.0 - b2.powi(step as i32);
            for i in 0..params.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                params[i] -= self.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
            model.set_params(&params)?;
            if self.eval_every > 0 && step % self.eval_every == 0 {
                history.push(evaluate(model)?);
            }
        }
        let final_loss = evaluate(model)?;
        Ok(TrainReport {
            initial_loss,
            final_loss,
            history,
        })
    }
}
