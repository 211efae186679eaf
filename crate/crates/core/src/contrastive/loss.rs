use crate::error::{Error, Result};
use crate::nn::{euclidean_distance, Vector};

/// Margin contrastive loss for one pair.
///
/// `similar`: `d²`; dissimilar: `max(0, margin − d)²`, with `d` the
/// Euclidean distance between the embeddings.
pub fn pair_loss(h_i: &[f64], h_j: &[f64], similar: bool, margin: f64) -> Result<f64> {
    check(h_i, h_j, margin)?;
    Ok(loss_from_distance(
        euclidean_distance(h_i, h_j),
        similar,
        margin,
    ))
}

pub fn loss_from_distance(d: f64, similar: bool, margin: f64) -> f64 {
    if similar {
        d * d
    } else {
        let gap = (margin - d).max(0.0);
        gap * gap
    }
}

/// Loss and its gradient with respect to `h_i`; the gradient for `h_j` is
/// the negation.
///
/// At zero distance the dissimilar branch has no defined direction and the
/// gradient is taken as zero.
pub fn pair_loss_grad(
    h_i: &[f64],
    h_j: &[f64],
    similar: bool,
    margin: f64,
) -> Result<(f64, Vector)> {
    check(h_i, h_j, margin)?;
    let diff: Vector = h_i.iter().zip(h_j).map(|(a, b)| a - b).collect();
    let d = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    let loss = loss_from_distance(d, similar, margin);
    let coef = if similar {
        2.0
    } else if d < margin && d > 0.0 {
        -2.0 * (margin - d) / d
    } else {
        0.0
    };
    Ok((loss, diff.into_iter().map(|v| coef * v).collect()))
}

fn check(h_i: &[f64], h_j: &[f64], margin: f64) -> Result<()> {
    if h_i.len() != h_j.len() {
        return Err(Error::ShapeMismatch(format!(
            "embeddings of length {} and {}",
            h_i.len(),
            h_j.len()
        )));
    }
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::Config(format!("margin must be > 0, got {margin}")));
    }
    Ok(())
}
