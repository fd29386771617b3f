use serde::{Deserialize, Serialize};

/// Classical tempo words binned by BPM over half-open intervals `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TempoMarking {
    Grave,
    Largo,
    Adagio,
    Andante,
    Moderato,
    Allegro,
    Vivace,
    Presto,
    Prestissimo,
}

impl TempoMarking {
    pub const ALL: [TempoMarking; 9] = [
        TempoMarking::Grave,
        TempoMarking::Largo,
        TempoMarking::Adagio,
        TempoMarking::Andante,
        TempoMarking::Moderato,
        TempoMarking::Allegro,
        TempoMarking::Vivace,
        TempoMarking::Presto,
        TempoMarking::Prestissimo,
    ];

    /// `(lo, hi]` in BPM; the last bin is open-ended.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            TempoMarking::Grave => (0.0, 40.0),
            TempoMarking::Largo => (40.0, 60.0),
            TempoMarking::Adagio => (60.0, 70.0),
            TempoMarking::Andante => (70.0, 90.0),
            TempoMarking::Moderato => (90.0, 110.0),
            TempoMarking::Allegro => (110.0, 140.0),
            TempoMarking::Vivace => (140.0, 160.0),
            TempoMarking::Presto => (160.0, 210.0),
            TempoMarking::Prestissimo => (210.0, f64::INFINITY),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TempoMarking::Grave => "Grave",
            TempoMarking::Largo => "Largo",
            TempoMarking::Adagio => "Adagio",
            TempoMarking::Andante => "Andante",
            TempoMarking::Moderato => "Moderato",
            TempoMarking::Allegro => "Allegro",
            TempoMarking::Vivace => "Vivace",
            TempoMarking::Presto => "Presto",
            TempoMarking::Prestissimo => "Prestissimo",
        }
    }
}

/// Bin lookup; total over positive BPM values.
pub fn tempo_to_marking(bpm: f64) -> TempoMarking {
    TempoMarking::ALL
        .into_iter()
        .find(|m| bpm <= m.bounds().1)
        .unwrap_or(TempoMarking::Prestissimo)
}
