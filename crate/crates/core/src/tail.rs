//! Certified tail bounds for truncated Gaussian lattice sums.
//!
//! All truncations in this crate have the shape "sum over lattice points
//! `h` with `‖h‖ ≤ R`" where `‖·‖` is a positive definite quadratic norm
//! and every term satisfies `|term(h)| ≤ K·exp(−a‖h‖² + b‖h‖)`.

/// Bound on `Σ_{h ∈ ℤᵈ, ‖h‖ > R} exp(−a‖h‖² + b‖h‖)`.
///
/// `lambda_min` is the smallest eigenvalue of the norm's Gram matrix in
/// lattice coordinates, so `#{‖h‖ ≤ t} ≤ (2t/√λ_min + 1)^d`. The sum is
/// split into unit shells `t < ‖h‖ ≤ t + 1` starting at `t = R`; each shell
/// contributes at most its point count times the supremum of the radial
/// profile over the shell. Returns `f64::INFINITY` for invalid input.
pub fn gaussian_tail_bound(dim: usize, lambda_min: f64, a: f64, b: f64, radius: f64) -> f64 {
    if !(a > 0.0 && lambda_min > 0.0 && radius >= 0.0 && b >= 0.0) {
        return f64::INFINITY;
    }
    let peak = b / (2.0 * a);
    let profile = |t: f64| (-a * t * t + b * t).exp();
    let shell_sup = |t: f64| {
        if t + 1.0 <= peak {
            profile(t + 1.0)
        } else if t < peak {
            profile(peak)
        } else {
            profile(t)
        }
    };
    let count = |t: f64| (2.0 * t / lambda_min.sqrt() + 1.0).powi(dim as i32);

    let mut total = 0.0;
    let mut prev = f64::INFINITY;
    let mut t = radius;
    for _ in 0..100_000 {
        let term = count(t + 1.0) * shell_sup(t);
        total += term;
        if t > peak && term > 0.0 && prev.is_finite() {
            let ratio = term / prev;
            if ratio < 0.5 && term < 1e-30 * total.max(1e-300) {
                // Remaining shells decay faster than a geometric series with this ratio.
                return total + term * ratio / (1.0 - ratio);
            }
        }
        if term == 0.0 && t > peak {
            return total;
        }
        prev = term;
        t += 1.0;
    }
    f64::INFINITY
}

/// Smallest radius on the grid `step·k` whose tail bound is below `tolerance`.
pub fn radius_for_tolerance(dim: usize, lambda_min: f64, a: f64, b: f64, tolerance: f64) -> Option<f64> {
    let step = 0.25;
    (1..4000)
        .map(|k| k as f64 * step)
        .find(|&r| gaussian_tail_bound(dim, lambda_min, a, b, r) < tolerance)
}
