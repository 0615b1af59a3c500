//! Standard-normal helpers shared by the quantizer and the analysis layer.

use libm::erfc;

/// Standard normal cumulative distribution function `Φ(x)`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density `φ(x)`.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Upper tail `1 − Φ(x)`, evaluated without cancellation for large `x`.
pub fn std_normal_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_points() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.0) - 0.841344746068543).abs() < 1e-12);
        assert!((std_normal_cdf(-1.96) - 0.024997895148220).abs() < 1e-12);
    }

    #[test]
    fn tail_matches_cdf() {
        for &x in &[-3.0, -0.5, 0.0, 0.7, 2.5] {
            assert!((std_normal_tail(x) - (1.0 - std_normal_cdf(x))).abs() < 1e-14);
        }
        // deep tail stays accurate
        assert!((std_normal_tail(6.0) - 9.865876450377018e-10).abs() < 1e-18);
    }

    #[test]
    fn pdf_normalization() {
        // Simpson quadrature of the density over [-8, 8]
        let n = 4000;
        let h = 16.0 / n as f64;
        let mut acc = std_normal_pdf(-8.0) + std_normal_pdf(8.0);
        for i in 1..n {
            let x = -8.0 + i as f64 * h;
            acc += std_normal_pdf(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        assert!((acc * h / 3.0 - 1.0).abs() < 1e-10);
    }
}
