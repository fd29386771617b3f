use ndarray::{concatenate, Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{fme_embed, mpe_embed, Linear, SinusoidConfig};
use crate::error::{Error, Result};
use crate::mir::{BeatGrid, ChordSequence, ChordType};

/// Root position and inverted.
pub const INVERSION_STATES: usize = 2;
const BEAT_TYPES: usize = 4;

fn one_hot(index: usize, len: usize) -> Array1<f64> {
    let mut v = Array1::zeros(len);
    v[index] = 1.0;
    v
}

fn null_row<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Array1<f64> {
    let normal = Normal::new(0.0, 0.02).expect("positive scale");
    Array1::from_shape_simple_fn(d, || normal.sample(rng))
}

fn stack(rows: Vec<Array1<f64>>) -> Array2<f64> {
    let views: Vec<_> = rows.iter().map(|r| r.view().insert_axis(Axis(0))).collect();
    concatenate(Axis(0), &views).expect("rows share a width")
}

/// Beat rows: `W_b(onehot₄(type) ⊕ mpe(time))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatEncoder {
    pub mpe: SinusoidConfig,
    pub linear: Linear,
    pub null_row: Array1<f64>,
}

impl BeatEncoder {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, mpe: SinusoidConfig, d_model: usize) -> Self {
        Self {
            mpe,
            linear: Linear::random(rng, BEAT_TYPES + mpe.dim(), d_model),
            null_row: null_row(rng, d_model),
        }
    }

    pub fn input_dim(&self) -> usize {
        BEAT_TYPES + self.mpe.dim()
    }

    /// Unprojected row for one beat.
    pub fn features(&self, beat_type: u8, time: f64) -> Result<Array1<f64>> {
        if !(1..=BEAT_TYPES as u8).contains(&beat_type) {
            return Err(Error::invalid(format!("beat type {beat_type} outside 1..=4")));
        }
        let oh = one_hot(beat_type as usize - 1, BEAT_TYPES);
        Ok(concatenate![Axis(0), oh, mpe_embed(time, &self.mpe)])
    }

    /// `[L × d_model]`, or the null row for an empty grid.
    pub fn encode(&self, grid: &BeatGrid) -> Result<Array2<f64>> {
        if grid.is_empty() {
            return Ok(self.null_row.clone().insert_axis(Axis(0)));
        }
        let rows = grid
            .entries()
            .iter()
            .map(|b| self.features(b.beat_type, b.time))
            .collect::<Result<Vec<_>>>()?;
        self.linear.forward(&stack(rows))
    }
}

/// Chord rows: `W_c(fme(root) ⊕ onehot(type) ⊕ onehot(inversion) ⊕ mpe(time))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordEncoder {
    pub fme: SinusoidConfig,
    pub mpe: SinusoidConfig,
    pub linear: Linear,
    pub null_row: Array1<f64>,
}

impl ChordEncoder {
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        fme: SinusoidConfig,
        mpe: SinusoidConfig,
        d_model: usize,
    ) -> Self {
        let inputs = fme.dim() + ChordType::ALL.len() + INVERSION_STATES + mpe.dim();
        Self {
            fme,
            mpe,
            linear: Linear::random(rng, inputs, d_model),
            null_row: null_row(rng, d_model),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.linear.inputs()
    }

    /// Unprojected row; `root` is a pitch-class number and may be fractional.
    pub fn features(&self, root: f64, ctype: ChordType, inverted: bool, time: f64) -> Array1<f64> {
        concatenate![
            Axis(0),
            fme_embed(root, &self.fme),
            one_hot(ctype.index(), ChordType::ALL.len()),
            one_hot(inverted as usize, INVERSION_STATES),
            mpe_embed(time, &self.mpe)
        ]
    }

    /// `[L × d_model]`, or the null row for an empty sequence.
    pub fn encode(&self, seq: &ChordSequence) -> Result<Array2<f64>> {
        if seq.is_empty() {
            return Ok(self.null_row.clone().insert_axis(Axis(0)));
        }
        let rows = seq
            .entries()
            .iter()
            .map(|c| self.features(c.root.index() as f64, c.ctype, c.inverted, c.time))
            .collect();
        self.linear.forward(&stack(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::rotation;
    use crate::mir::{ChordEvent, PitchClass};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SinusoidConfig {
        SinusoidConfig::new(32, 10_000.0).unwrap()
    }

    fn close(a: &Array1<f64>, b: &Array1<f64>, tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn shapes_and_null_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let be = BeatEncoder::random(&mut rng, cfg(), 64);
        let grid = BeatGrid::cycling(3, 1, &[0.5, 1.0, 1.5, 2.0, 2.5]).unwrap();
        assert_eq!(be.encode(&grid).unwrap().dim(), (5, 64));
        let empty = be.encode(&BeatGrid::cycling(4, 1, &[]).unwrap()).unwrap();
        assert_eq!(empty.dim(), (1, 64));
        assert_eq!(empty.row(0), be.null_row.view());
        assert!(be.features(5, 0.0).is_err());

        let ce = ChordEncoder::random(&mut rng, cfg(), cfg(), 64);
        assert_eq!(ce.input_dim(), 32 + 11 + 2 + 32);
        let seq = ChordSequence::new(vec![
            ChordEvent::new(PitchClass::A, ChordType::Minor, 0.0),
            ChordEvent::new(PitchClass::C, ChordType::Major7, 2.0),
        ])
        .unwrap();
        let out = ce.encode(&seq).unwrap();
        assert_eq!(out.dim(), (2, 64));
        assert!(out.iter().all(|v| v.is_finite()));
        assert_eq!(ce.encode(&ChordSequence::empty()).unwrap().dim(), (1, 64));
    }

    proptest! {
        #[test]
        fn beat_time_shift_rotates_positional_block(t in 0.0f64..10.0, s in 0.01f64..10.0, ty in 1u8..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let be = BeatEncoder::random(&mut rng, cfg(), 16);
            let grid = BeatGrid::new(4, vec![
                crate::mir::Beat { beat_type: ty, time: t },
                crate::mir::Beat { beat_type: ty, time: t + s },
            ]).unwrap();
            let out = be.encode(&grid).unwrap();
            let rotated = rotation(s, &be.mpe).dot(&mpe_embed(t, &be.mpe));
            let x = concatenate![Axis(0), one_hot(ty as usize - 1, 4), rotated];
            let want = x.dot(&be.linear.weight) + &be.linear.bias;
            prop_assert!(close(&out.row(1).to_owned(), &want, 1e-9));
        }

        #[test]
        fn transposition_rotates_root_block(root in 0u8..12, k in 0u8..12, ty in 0usize..11, inv in any::<bool>(), t in 0.0f64..10.0) {
            prop_assume!(root + k < 12);
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let ce = ChordEncoder::random(&mut rng, cfg(), cfg(), 16);
            let mut ev = ChordEvent::new(PitchClass::new(root + k).unwrap(), ChordType::ALL[ty], t);
            ev.inverted = inv;
            let out = ce.encode(&ChordSequence::new(vec![ev]).unwrap()).unwrap();
            let base = ce.features(root as f64, ChordType::ALL[ty], inv, t);
            let d = ce.fme.dim();
            let mut moved = base.clone();
            moved.slice_mut(ndarray::s![..d]).assign(&rotation(k as f64, &ce.fme).dot(&base.slice(ndarray::s![..d])));
            let want = moved.dot(&ce.linear.weight) + &ce.linear.bias;
            prop_assert!(close(&out.row(0).to_owned(), &want, 1e-9));
        }
    }
}
