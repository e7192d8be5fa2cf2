use crate::error::{Error, Result};
use crate::numerics::{row_variance_total, DenseMatrix};

/// `1 − totalVar(x − x̂) / totalVar(x)`.
pub fn explained_variance(x: &DenseMatrix, x_hat: &DenseMatrix) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::shape(
            "explained_variance",
            format!("{:?}", x.shape()),
            format!("{:?}", x_hat.shape()),
        ));
    }
    let total = row_variance_total(x)?;
    if total == 0.0 {
        return Err(Error::UndefinedInput("input has zero total variance".into()));
    }
    let residual = row_variance_total(&x.sub(x_hat)?)?;
    Ok(1.0 - residual / total)
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::UndefinedInput(format!("{name} has a negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::UndefinedInput(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

/// `D_KL(p ‖ q)` in nats; `0 · ln(0 / q)` counts as zero.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}

/// Fraction of the zero-ablation KL gap closed by the SAE reconstruction:
/// 1 for a perfect reconstruction, 0 for no better than ablating.
pub fn kl_divergence_score(p_orig: &[f64], p_sae: &[f64], p_ablated: &[f64]) -> Result<f64> {
    if p_sae.len() != p_orig.len() || p_ablated.len() != p_orig.len() {
        return Err(Error::shape(
            "kl_divergence_score",
            format!("three vectors of length {}", p_orig.len()),
            format!("lengths {} and {}", p_sae.len(), p_ablated.len()),
        ));
    }
    check_distribution("p_orig", p_orig)?;
    check_distribution("p_sae", p_sae)?;
    check_distribution("p_ablated", p_ablated)?;
    let baseline = kl_divergence(p_ablated, p_orig);
    if !(baseline > 0.0 && baseline.is_finite()) {
        return Err(Error::UndefinedInput(format!("undefined baseline: D_KL(ablated ‖ orig) = {baseline}")));
    }
    Ok((baseline - kl_divergence(p_sae, p_orig)) / baseline)
}
