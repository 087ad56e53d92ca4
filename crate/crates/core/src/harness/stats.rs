/// Half-width of the normal-approximation 95% interval for a proportion.
pub fn wald_ci95(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let p = successes as f64 / trials as f64;
    1.96 * (p * (1.0 - p) / trials as f64).sqrt()
}
