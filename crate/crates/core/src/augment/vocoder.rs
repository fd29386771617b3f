//! Phase-vocoder time scaling with identity phase locking.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

pub const VOCODER_WINDOW: usize = 2048;
pub const VOCODER_HOP: usize = 512;

fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Local magnitude maxima over +-2 bins.
fn peaks(mag: &[f64]) -> Vec<usize> {
    let n = mag.len();
    (0..n)
        .filter(|&k| {
            let lo = k.saturating_sub(2);
            let hi = (k + 2).min(n - 1);
            mag[k] > 0.0 && (lo..=hi).all(|j| j == k || mag[k] >= mag[j])
        })
        .collect()
}

/// Time-scale `samples` so that the output is `len / rate` samples long
/// (`rate > 1` is faster) without changing pitch.
pub fn time_scale(samples: &[f64], rate: f64) -> Vec<f64> {
    assert!(rate > 0.0 && rate.is_finite());
    let n_fft = VOCODER_WINDOW;
    let half = n_fft / 2;
    let syn_hop = VOCODER_HOP;
    let ana_hop = syn_hop as f64 * rate;
    let out_len = (samples.len() as f64 / rate).round() as usize;

    let mut padded = vec![0.0; samples.len() + n_fft];
    padded[half..half + samples.len()].copy_from_slice(samples);
    let window: Vec<f64> = (0..n_fft)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n_fft as f64).cos())
        .collect();

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n_fft);
    let inv = planner.plan_fft_inverse(n_fft);
    let n_bins = half + 1;
    let omega: Vec<f64> = (0..n_bins)
        .map(|k| 2.0 * PI * k as f64 / n_fft as f64)
        .collect();

    let positions: Vec<usize> = (0..)
        .map(|m| (m as f64 * ana_hop).round() as usize)
        .take_while(|&p| p + n_fft <= padded.len())
        .collect();
    let total = (positions.len().saturating_sub(1)) * syn_hop + n_fft;
    let mut out = vec![0.0; total.max(out_len + n_fft)];
    let mut norm = vec![0.0; out.len()];

    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut prev_phase = vec![0.0; n_bins];
    let mut syn_phase = vec![0.0; n_bins];
    let mut prev_pos = 0usize;

    for (m, &pos) in positions.iter().enumerate() {
        for i in 0..n_fft {
            buf[i] = Complex::new(padded[pos + i] * window[i], 0.0);
        }
        fwd.process(&mut buf);
        let mag: Vec<f64> = buf[..n_bins].iter().map(|c| c.norm()).collect();
        let phase: Vec<f64> = buf[..n_bins].iter().map(|c| c.arg()).collect();

        if m == 0 {
            syn_phase.copy_from_slice(&phase);
        } else {
            let dt = (pos - prev_pos) as f64;
            let pk = peaks(&mag);
            let last = syn_phase.clone();
            let advance = |k: usize| -> f64 {
                let expected = omega[k] * dt;
                let dev = wrap_phase(phase[k] - prev_phase[k] - expected);
                let inst = omega[k] + if dt > 0.0 { dev / dt } else { 0.0 };
                last[k] + syn_hop as f64 * inst
            };
            if pk.is_empty() {
                for (k, p) in syn_phase.iter_mut().enumerate() {
                    *p = advance(k);
                }
            } else {
                let peak_phase: Vec<f64> = pk.iter().map(|&p| advance(p)).collect();
                // Each bin follows the nearest peak's phase rotation.
                let mut owner = 0usize;
                for (k, p_out) in syn_phase.iter_mut().enumerate() {
                    while owner + 1 < pk.len()
                        && (pk[owner + 1] as isize - k as isize).abs()
                            < (pk[owner] as isize - k as isize).abs()
                    {
                        owner += 1;
                    }
                    let p = pk[owner];
                    *p_out = peak_phase[owner] + (phase[k] - phase[p]);
                }
            }
        }
        prev_phase.copy_from_slice(&phase);
        prev_pos = pos;

        for k in 0..n_bins {
            buf[k] = Complex::from_polar(mag[k], syn_phase[k]);
        }
        for k in n_bins..n_fft {
            buf[k] = buf[n_fft - k].conj();
        }
        inv.process(&mut buf);
        let start = m * syn_hop;
        for i in 0..n_fft {
            let w = window[i];
            out[start + i] += buf[i].re / n_fft as f64 * w;
            norm[start + i] += w * w;
        }
    }

    let floor = 1e-3;
    (0..out_len)
        .map(|i| {
            let j = i + half;
            if j < out.len() && norm[j] > floor {
                out[j] / norm[j]
            } else {
                0.0
            }
        })
        .collect()
}
