//! Euclidean projection onto the probability simplex by the sorted
//! cumulative-threshold rule: with entries sorted descending, the largest
//! prefix whose running average (minus 1/len) stays below its last entry
//! fixes the shift θ, and the projection is max(v − θ, 0) componentwise.

use crate::numkit::NumError;

/// Projects `v` onto { w : wᵢ ≥ 0, Σwᵢ = 1 } in Euclidean norm.
pub fn project_to_simplex(v: &[f64]) -> Result<Vec<f64>, NumError> {
    if v.is_empty() {
        return Err(NumError::Domain("cannot project an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(NumError::NonFinite("simplex projection input".into()));
    }

    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries compare"));

    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }

    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}
