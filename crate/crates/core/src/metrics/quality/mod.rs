use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::Array2;

use crate::error::{Error, Result};

/// Floor applied to generated probabilities inside the KL log ratio.
pub const KL_FLOOR: f64 = 1e-12;

/// Embedding rows `[n × d]` from some external model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    vectors: Array2<f64>,
    source_tag: String,
}

impl EmbeddingSet {
    pub fn new(vectors: Array2<f64>, source_tag: impl Into<String>) -> Result<Self> {
        if vectors.ncols() == 0 {
            return Err(Error::invalid("embeddings must have at least one dimension"));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embeddings contain non-finite values"));
        }
        Ok(Self {
            vectors,
            source_tag: source_tag.into(),
        })
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// Mean and unbiased covariance.
    fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let (n, d) = self.vectors.dim();
        let m = DMatrix::from_row_iterator(n, d, self.vectors.iter().copied());
        let mean = m.row_mean().transpose();
        let mut centered = m;
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        (mean, cov)
    }
}

/// Eigenvalues of a symmetric matrix after symmetrizing away rounding noise.
fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new((m + m.transpose()) * 0.5)
}

/// Principal square root of a positive semi-definite matrix; negative
/// eigenvalues are clamped to 0.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = sym_eigen(m);
    let roots = e.eigenvalues.map(|l| l.max(0.0).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&roots) * e.eigenvectors.transpose()
}

/// Fréchet distance between Gaussians fitted to two embedding sets:
/// ‖μa − μb‖² + Tr(Σa + Σb − 2(ΣaΣb)^½).
///
/// Tr((ΣaΣb)^½) is computed as Σ√λ over the eigenvalues of the symmetric
/// matrix √Σa·Σb·√Σa, clamped at 0.
pub fn frechet_distance(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: (a.n(), a.dim()),
            actual: (b.n(), b.dim()),
        });
    }
    if a.n() < 2 || b.n() < 2 {
        return Err(Error::invalid("Fréchet distance needs at least 2 vectors per set"));
    }
    let (mu_a, cov_a) = a.moments();
    let (mu_b, cov_b) = b.moments();
    let root_a = psd_sqrt(&cov_a);
    let inner = &root_a * &cov_b * &root_a;
    let tr_sqrt: f64 = sym_eigen(&inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let d = (mu_a - mu_b).norm_squared() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
    if !d.is_finite() {
        return Err(Error::Numerical("Fréchet distance is not finite".into()));
    }
    Ok(d.max(0.0))
}

/// Probability rows keyed by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySet {
    ids: Vec<String>,
    rows: Array2<f64>,
}

impl ProbabilitySet {
    /// Rows must be non-negative and sum to 1 within 1e-6; ids unique.
    pub fn new(ids: Vec<String>, rows: Array2<f64>) -> Result<Self> {
        if ids.len() != rows.nrows() {
            return Err(Error::invalid(format!(
                "{} ids for {} probability rows",
                ids.len(),
                rows.nrows()
            )));
        }
        for (id, row) in ids.iter().zip(rows.rows()) {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::invalid(format!("row {id:?} has negative or non-finite entries")));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("row {id:?} sums to {sum}, not 1")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(*id)) {
            return Err(Error::invalid(format!("duplicate id {dup:?}")));
        }
        Ok(Self { ids, rows })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn classes(&self) -> usize {
        self.rows.ncols()
    }
}

/// Mean over paired ids of KL(reference ‖ generated), with generated
/// probabilities floored at [`KL_FLOOR`]. Every reference id must appear in
/// the generated set and vice versa.
pub fn kl_divergence(generated: &ProbabilitySet, reference: &ProbabilitySet) -> Result<f64> {
    if generated.classes() != reference.classes() {
        return Err(Error::invalid(format!(
            "class counts differ: {} vs {}",
            generated.classes(),
            reference.classes()
        )));
    }
    if generated.ids.len() != reference.ids.len() {
        return Err(Error::invalid("generated and reference ids are not paired one-to-one"));
    }
    if reference.ids.is_empty() {
        return Err(Error::invalid("no probability rows to compare"));
    }
    let index: HashMap<&str, usize> = generated
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut total = 0.0;
    for (id, p) in reference.ids.iter().zip(reference.rows.rows()) {
        let &gi = index
            .get(id.as_str())
            .ok_or_else(|| Error::invalid(format!("id {id:?} has no generated row")))?;
        let q = generated.rows.row(gi);
        total += p
            .iter()
            .zip(q.iter())
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, q)| p * (p / q.max(KL_FLOOR)).ln())
            .sum::<f64>();
    }
    Ok(total / reference.ids.len() as f64)
}

#[cfg(test)]
mod tests;
