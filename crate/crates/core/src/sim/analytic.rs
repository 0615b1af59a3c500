//! Closed-form performance curves over the sweep grid.

use crate::bussgang::{asymptotic_params, asymptotic_sindr, ber_approximation};
use crate::error::{Error, Result};
use crate::sim::{MetricKind, ResultRow, SimConfig};

/// Emits the large-system BER and rate approximations for every linear
/// precoder over the SNR grid, at the configured DAC resolution. Infinite
/// resolution reduces to the unquantized closed forms.
pub fn analytic_curves(cfg: &SimConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let p = 1.0;
    let mut rows = Vec::new();
    for &sel in &cfg.precoders {
        let kind = sel.linear_kind().ok_or_else(|| {
            Error::Config(format!("analytic curves exist for linear precoders only, got '{}'", sel.tag()))
        })?;
        for &snr in &cfg.snr_db {
            let rho = 10f64.powf(snr / 10.0);
            let params = asymptotic_params(cfg.dac.levels(), cfg.b, p, rho)?;
            let gamma_bar = asymptotic_sindr(kind, params.rho_bar, cfg.b, cfg.u)?;
            let base = ResultRow {
                precoder: sel.tag().to_string(),
                b: cfg.b,
                u: cfg.u,
                levels: cfg.dac.levels(),
                snr_db: snr,
                eps: None,
                metric: MetricKind::AnalyticBer,
                value: ber_approximation(gamma_bar),
                stderr: 0.0,
                trials: 0,
            };
            rows.push(ResultRow {
                metric: MetricKind::AnalyticRate,
                value: cfg.u as f64 * (1.0 + gamma_bar).log2(),
                ..base.clone()
            });
            rows.push(base);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bussgang::{asymptotic_sindr, ber_approximation};
    use crate::linear::PrecoderKind;
    use crate::sim::{DacConfig, PrecoderSel, SimConfig};

    #[test]
    fn infinite_resolution_matches_unquantized_formulas() {
        let mut cfg = SimConfig::new(128, 16);
        cfg.dac = DacConfig::Infinite;
        cfg.precoders = vec![PrecoderSel::Zf];
        cfg.snr_db = vec![0.0, 5.0];
        let rows = analytic_curves(&cfg).unwrap();
        for row in rows.iter().filter(|r| r.metric == MetricKind::AnalyticBer) {
            let rho = 10f64.powf(row.snr_db / 10.0);
            let want = ber_approximation(asymptotic_sindr(PrecoderKind::Zf, rho, 128, 16).unwrap());
            assert_eq!(row.value, want);
        }
        // ZF at rho_bar = 1 and B/U = 8: per-user rate log2(8) = 3 bits
        let rate0 = rows
            .iter()
            .find(|r| r.metric == MetricKind::AnalyticRate && r.snr_db == 0.0)
            .unwrap();
        assert!((rate0.value / 16.0 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nonlinear_selection_is_rejected() {
        let mut cfg = SimConfig::new(8, 2);
        cfg.precoders = vec![PrecoderSel::Squid];
        assert!(analytic_curves(&cfg).is_err());
    }
}
