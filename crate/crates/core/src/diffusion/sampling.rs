use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ConditionBundle, Latent, NoiseSchedule};
use crate::error::{Error, Result};

fn same_shape(a: &Latent, b: &Latent) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

/// Standard normal latent of the given shape.
pub fn gaussian_latent<R: Rng + ?Sized>(rng: &mut R, shape: (usize, usize)) -> Latent {
    Array2::from_shape_simple_fn(shape, || rng.sample(StandardNormal))
}

/// z_n = √ᾱ_n·z0 + √(1−ᾱ_n)·ε.
pub fn forward_sample(z0: &Latent, n: usize, eps: &Latent, sched: &NoiseSchedule) -> Result<Latent> {
    same_shape(z0, eps)?;
    sched.check_step(n)?;
    let ab = sched.alpha_bar(n);
    Ok(z0 * ab.sqrt() + eps * (1.0 - ab).sqrt())
}

/// Apply z_n = √(1−β_n)·z_{n−1} + √β_n·ε_n for n = 1..=noises.len().
pub fn forward_chain(z0: &Latent, noises: &[Latent], sched: &NoiseSchedule) -> Result<Latent> {
    if noises.len() > sched.steps() {
        return Err(Error::invalid("more noises than schedule steps"));
    }
    let mut z = z0.clone();
    for (i, eps) in noises.iter().enumerate() {
        same_shape(&z, eps)?;
        let b = sched.beta(i + 1);
        z = z * (1.0 - b).sqrt() + eps * b.sqrt();
    }
    Ok(z)
}

/// Guided noise estimate w·ε_c + (1−w)·ε_u.
pub fn cfg_mix(eps_cond: &Latent, eps_uncond: &Latent, w: f64) -> Result<Latent> {
    same_shape(eps_cond, eps_uncond)?;
    let mut out = eps_cond * w;
    out.scaled_add(1.0 - w, eps_uncond);
    Ok(out)
}

/// μ = (z_n − (1−α_n)/√(1−ᾱ_n)·ε̂)/√α_n, plus √β̃_n·noise when noise is given.
pub fn reverse_step(
    z_n: &Latent,
    eps_hat: &Latent,
    n: usize,
    sched: &NoiseSchedule,
    noise: Option<&Latent>,
) -> Result<Latent> {
    same_shape(z_n, eps_hat)?;
    sched.check_step(n)?;
    let alpha = sched.alpha(n);
    let coef = (1.0 - alpha) / (1.0 - sched.alpha_bar(n)).sqrt();
    let mut mu = (z_n - &(eps_hat * coef)) / alpha.sqrt();
    if let Some(noise) = noise {
        same_shape(z_n, noise)?;
        mu.scaled_add(sched.beta_tilde(n).sqrt(), noise);
    }
    Ok(mu)
}

/// A noise predictor ε̂(z_n, n, C); `cond = None` is the unconditional branch.
pub trait Denoiser {
    fn predict(&self, z: &Latent, n: usize, cond: Option<&ConditionBundle>) -> Result<Latent>;
}

/// Predicts the exact noise separating `z_n` from a known `z0`.
#[derive(Debug, Clone)]
pub struct OracleDenoiser<'a> {
    pub z0: Latent,
    pub sched: &'a NoiseSchedule,
}

impl Denoiser for OracleDenoiser<'_> {
    fn predict(&self, z: &Latent, n: usize, _cond: Option<&ConditionBundle>) -> Result<Latent> {
        same_shape(z, &self.z0)?;
        self.sched.check_step(n)?;
        let ab = self.sched.alpha_bar(n);
        Ok((z - &(&self.z0 * ab.sqrt())) / (1.0 - ab).sqrt())
    }
}

/// Reverse diffusion from `z_N` to a clean latent with guidance `w`. With
/// `rng = None` every step is mean-only.
pub fn toy_denoise_loop<D: Denoiser + ?Sized, R: Rng + ?Sized>(
    denoiser: &D,
    z_big_n: &Latent,
    bundle: Option<&ConditionBundle>,
    sched: &NoiseSchedule,
    w: f64,
    mut rng: Option<&mut R>,
) -> Result<Latent> {
    let mut z = z_big_n.clone();
    for n in (1..=sched.steps()).rev() {
        let eps_c = denoiser.predict(&z, n, bundle)?;
        let eps_u = denoiser.predict(&z, n, None)?;
        let eps = cfg_mix(&eps_c, &eps_u, w)?;
        let noise = rng.as_deref_mut().map(|r| gaussian_latent(r, z.dim()));
        z = reverse_step(&z, &eps, n, sched, noise.as_ref())?;
    }
    Ok(z)
}

/// One Monte-Carlo draw of the noise-estimation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LossDraw {
    pub n: usize,
    pub eps: Latent,
}

impl LossDraw {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, steps: usize, shape: (usize, usize)) -> Self {
        Self {
            n: rng.random_range(1..=steps),
            eps: gaussian_latent(rng, shape),
        }
    }
}

/// Mean over items of γ_n·‖ε − ε̂(forward_sample(z0, n, ε), n, C)‖² for
/// fixed draws.
pub fn diffusion_loss_with_draws<D: Denoiser + ?Sized>(
    denoiser: &D,
    z0: &[Latent],
    draws: &[LossDraw],
    sched: &NoiseSchedule,
    gamma: &[f64],
    cond: Option<&ConditionBundle>,
) -> Result<f64> {
    if gamma.len() != sched.steps() {
        return Err(Error::invalid(format!(
            "{} step weights for {} steps",
            gamma.len(),
            sched.steps()
        )));
    }
    if z0.len() != draws.len() || z0.is_empty() {
        return Err(Error::invalid("need one draw per latent and at least one latent"));
    }
    let mut total = 0.0;
    for (z, d) in z0.iter().zip(draws) {
        let z_n = forward_sample(z, d.n, &d.eps, sched)?;
        let pred = denoiser.predict(&z_n, d.n, cond)?;
        same_shape(&d.eps, &pred)?;
        total += gamma[d.n - 1] * (&d.eps - &pred).mapv(|v| v * v).sum();
    }
    Ok(total / z0.len() as f64)
}

/// Noise-estimation loss with n uniform in 1..=N and ε standard normal.
pub fn diffusion_loss<D: Denoiser + ?Sized, R: Rng + ?Sized>(
    denoiser: &D,
    z0: &[Latent],
    sched: &NoiseSchedule,
    gamma: &[f64],
    cond: Option<&ConditionBundle>,
    rng: &mut R,
) -> Result<f64> {
    let draws: Vec<LossDraw> = z0
        .iter()
        .map(|z| LossDraw::sample(rng, sched.steps(), z.dim()))
        .collect();
    diffusion_loss_with_draws(denoiser, z0, &draws, sched, gamma, cond)
}
