//! Static drive-noise model, reproducible ensembles, robust statistics and
//! the clock sensitivity budget.

use crate::error::{CoreError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Standard deviations of the per-shot drive imperfections, plus the ensemble
/// seed. Amplitude errors are fractional, phase errors are in units of pi
/// radians, and timing/tilt errors are in units of the nominal sideband rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma_a: f64,
    pub sigma_phi: f64,
    pub sigma_t: f64,
    pub independent_tones: bool,
    pub seed: u64,
}

impl NoiseSpec {
    /// Shared-mode noise: one amplitude and one phase draw applied to both
    /// tones. Fails on negative or non-finite widths.
    pub fn new(sigma_a: f64, sigma_phi: f64, sigma_t: f64, seed: u64) -> Result<Self> {
        for (name, s) in [("sigma_a", sigma_a), ("sigma_phi", sigma_phi), ("sigma_t", sigma_t)] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {s}"
                )));
            }
        }
        Ok(Self {
            sigma_a,
            sigma_phi,
            sigma_t,
            independent_tones: false,
            seed,
        })
    }

    /// Draw amplitude and phase errors separately for the two tones.
    pub fn with_independent_tones(mut self) -> Self {
        self.independent_tones = true;
        self
    }
}

/// One static error draw: fractional amplitude errors and phase offsets for
/// the (carrier, sideband) tones, and the tilt error in units of the nominal
/// sideband rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRealization {
    pub eps_a: [f64; 2],
    pub eps_phi: [f64; 2],
    pub eps_t: f64,
}

impl NoiseRealization {
    /// The noise-free draw.
    pub fn quiet() -> Self {
        Self {
            eps_a: [0.0, 0.0],
            eps_phi: [0.0, 0.0],
            eps_t: 0.0,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic draw for one ensemble member. The stream key mixes the seed
/// with the realization index so any member can be regenerated in isolation.
pub fn sample_realization(spec: &NoiseSpec, index: u64) -> NoiseRealization {
    let key = splitmix64(spec.seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let mut gauss = |sigma: f64| -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        sigma * z
    };
    let phase_width = spec.sigma_phi * std::f64::consts::PI;
    if spec.independent_tones {
        let a0 = gauss(spec.sigma_a);
        let a1 = gauss(spec.sigma_a);
        let p0 = gauss(phase_width);
        let p1 = gauss(phase_width);
        let t = gauss(spec.sigma_t);
        NoiseRealization {
            eps_a: [a0, a1],
            eps_phi: [p0, p1],
            eps_t: t,
        }
    } else {
        let a = gauss(spec.sigma_a);
        let p = gauss(phase_width);
        let t = gauss(spec.sigma_t);
        NoiseRealization {
            eps_a: [a, a],
            eps_phi: [p, p],
            eps_t: t,
        }
    }
}

/// Ensemble outcome: per-realization values in index order (failures skipped),
/// the midpoint median and the central 95.6 percent interval.
#[derive(Debug)]
pub struct EnsembleResult {
    pub count: usize,
    pub values: Vec<f64>,
    pub failures: Vec<CoreError>,
    pub median: f64,
    pub interval: (f64, f64),
}

/// Runs a protocol over `count` deterministic noise draws, in parallel, and
/// reduces the surviving values to robust statistics. Failed realizations are
/// recorded (wrapped with their index) rather than aborting the ensemble.
///
/// Fails when `count` is zero or every realization fails.
pub fn ensemble_run<F>(spec: &NoiseSpec, count: usize, protocol: F) -> Result<EnsembleResult>
where
    F: Fn(usize, &NoiseRealization) -> Result<f64> + Sync,
{
    if count == 0 {
        return Err(CoreError::InvalidParameter(
            "ensemble needs at least one realization".into(),
        ));
    }
    let raw: Vec<Result<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let draw = sample_realization(spec, i as u64);
            protocol(i, &draw).map_err(|e| CoreError::Realization {
                index: i,
                source: Box::new(e),
            })
        })
        .collect();

    let mut values = Vec::with_capacity(count);
    let mut failures = Vec::new();
    for r in raw {
        match r {
            Ok(v) => values.push(v),
            Err(e) => failures.push(e),
        }
    }
    if values.is_empty() {
        return Err(CoreError::NoConvergence(format!(
            "all {count} realizations failed; first: {}",
            failures[0]
        )));
    }
    let (median, interval) = median_and_interval(&values);
    Ok(EnsembleResult {
        count,
        values,
        failures,
        median,
        interval,
    })
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Midpoint median and the linearly interpolated [0.022, 0.978] quantile pair
/// (the central 95.6 percent of the distribution).
///
/// Panics on an empty slice.
pub fn median_and_interval(values: &[f64]) -> (f64, (f64, f64)) {
    assert!(!values.is_empty(), "statistics of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    (median, (quantile(&sorted, 0.022), quantile(&sorted, 0.978)))
}

/// One fluctuating drive amplitude: its operating value and the absolute
/// standard deviation of its shot-to-shot fluctuations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel {
    pub value: f64,
    pub sigma: f64,
}

/// Technical-noise variance estimate with its finite-difference slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct StatNoiseReport {
    pub sigma2: f64,
    pub derivatives: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Atom-averaged technical variance of a collective observable:
/// sigma_s^2 = sum_beta sigma_beta^2 N (N-1) (d<o>/dOmega_beta)^2,
/// with the single-atom slopes taken by central differences at relative step
/// 1e-4. Each slope is cross-checked against a halved step; disagreement
/// beyond a 0.1 percent relative floor keeps the finer estimate and records a
/// warning.
///
/// Fails on zero atoms, a zero channel value, or a failed observable call.
pub fn statistical_noise_sigma2<F>(
    channels: &[NoiseChannel],
    atoms: usize,
    observable: F,
) -> Result<StatNoiseReport>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if atoms == 0 {
        return Err(CoreError::InvalidParameter(
            "atom number must be positive".into(),
        ));
    }
    let base: Vec<f64> = channels.iter().map(|c| c.value).collect();
    let mut derivatives = Vec::with_capacity(channels.len());
    let mut warnings = Vec::new();
    for (i, ch) in channels.iter().enumerate() {
        if ch.value == 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "channel {i} has zero operating value; the relative step is undefined"
            )));
        }
        let slope_at = |h: f64| -> Result<f64> {
            let mut up = base.clone();
            let mut dn = base.clone();
            up[i] += h;
            dn[i] -= h;
            Ok((observable(&up)? - observable(&dn)?) / (2.0 * h))
        };
        let h = 1e-4 * ch.value.abs();
        let coarse = slope_at(h)?;
        let fine = slope_at(0.5 * h)?;
        let scale = fine.abs().max(coarse.abs()).max(1e-12);
        if (fine - coarse).abs() > 1e-3 * scale {
            warnings.push(format!(
                "channel {i}: slope {coarse:.6e} vs {fine:.6e} under step halving; using the finer step"
            ));
        }
        derivatives.push(fine);
    }
    let n = atoms as f64;
    let sigma2 = channels
        .iter()
        .zip(&derivatives)
        .map(|(ch, d)| ch.sigma.powi(2) * n * (n - 1.0) * d * d)
        .sum();
    Ok(StatNoiseReport {
        sigma2,
        derivatives,
        warnings,
    })
}

/// Single-shot clock instability: the detuning variance
/// (N/4 + sigma_s^2) / (t_l^2 (dO/dphi)^2) for a collective observable O with
/// phase slope `slope` at interrogation time `t_l`.
///
/// Fails on zero atoms, non-positive time or vanishing slope.
pub fn clock_sensitivity(atoms: usize, sigma_s2: f64, t_l: f64, slope: f64) -> Result<f64> {
    if atoms == 0 {
        return Err(CoreError::InvalidParameter(
            "atom number must be positive".into(),
        ));
    }
    if !(t_l > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "interrogation time must be positive, got {t_l}"
        )));
    }
    if slope == 0.0 || !slope.is_finite() {
        return Err(CoreError::InvalidParameter(
            "observable slope must be finite and non-zero".into(),
        ));
    }
    let n = atoms as f64;
    Ok((n / 4.0 + sigma_s2) / (t_l * t_l * slope * slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::{Binomial, Distribution};

    #[test]
    fn draws_are_deterministic_and_distinct() {
        let spec = NoiseSpec::new(0.01, 0.005, 0.001, 42).unwrap();
        let a = sample_realization(&spec, 7);
        let b = sample_realization(&spec, 7);
        let c = sample_realization(&spec, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let other_seed = NoiseSpec::new(0.01, 0.005, 0.001, 43).unwrap();
        assert_ne!(a, sample_realization(&other_seed, 7));
    }

    #[test]
    fn zero_widths_give_quiet_draws() {
        let spec = NoiseSpec::new(0.0, 0.0, 0.0, 5).unwrap();
        for i in 0..20 {
            assert_eq!(sample_realization(&spec, i), NoiseRealization::quiet());
        }
        assert!(NoiseSpec::new(-0.1, 0.0, 0.0, 0).is_err());
        assert!(NoiseSpec::new(0.0, f64::NAN, 0.0, 0).is_err());
    }

    #[test]
    fn shared_and_independent_tone_modes() {
        let shared = NoiseSpec::new(0.01, 0.005, 0.001, 11).unwrap();
        let indep = shared.with_independent_tones();
        let s = sample_realization(&shared, 3);
        assert_eq!(s.eps_a[0], s.eps_a[1]);
        assert_eq!(s.eps_phi[0], s.eps_phi[1]);
        let mut any_split = false;
        for i in 0..10 {
            let d = sample_realization(&indep, i);
            any_split |= d.eps_a[0] != d.eps_a[1];
        }
        assert!(any_split);
    }

    #[test]
    fn sample_moments_match_the_spec_widths() {
        let spec = NoiseSpec::new(0.01, 0.005, 0.001, 99).unwrap();
        let n = 20_000;
        let draws: Vec<NoiseRealization> =
            (0..n).map(|i| sample_realization(&spec, i)).collect();
        let mean_a: f64 = draws.iter().map(|d| d.eps_a[0]).sum::<f64>() / n as f64;
        let var_a: f64 =
            draws.iter().map(|d| (d.eps_a[0] - mean_a).powi(2)).sum::<f64>() / n as f64;
        let var_p: f64 = draws.iter().map(|d| d.eps_phi[0].powi(2)).sum::<f64>() / n as f64;
        let var_t: f64 = draws.iter().map(|d| d.eps_t.powi(2)).sum::<f64>() / n as f64;
        assert!(mean_a.abs() < 3.0 * 0.01 / (n as f64).sqrt());
        assert_relative_eq!(var_a.sqrt(), 0.01, max_relative = 0.05);
        assert_relative_eq!(var_p.sqrt(), 0.005 * std::f64::consts::PI, max_relative = 0.05);
        assert_relative_eq!(var_t.sqrt(), 0.001, max_relative = 0.05);
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median_and_interval(&[3.0, 1.0, 2.0, 5.0, 4.0]).0, 3.0);
        assert_eq!(median_and_interval(&[4.0, 1.0, 3.0, 2.0]).0, 2.5);
        let (m, (lo, hi)) = median_and_interval(&[1.5]);
        assert_eq!((m, lo, hi), (1.5, 1.5, 1.5));
    }

    #[test]
    fn interval_matches_gaussian_quantiles() {
        let spec = NoiseSpec::new(1.0, 0.0, 0.0, 314).unwrap();
        let values: Vec<f64> = (0..100_000)
            .map(|i| sample_realization(&spec, i).eps_a[0])
            .collect();
        let (median, (lo, hi)) = median_and_interval(&values);
        assert!(median.abs() < 0.02);
        assert_relative_eq!(lo, -2.0141, epsilon = 0.05);
        assert_relative_eq!(hi, 2.0141, epsilon = 0.05);
        let inside = values.iter().filter(|v| (lo..=hi).contains(v)).count();
        let coverage = inside as f64 / values.len() as f64;
        assert!((coverage - 0.956).abs() < 0.005, "coverage {coverage}");
    }

    #[test]
    fn ensemble_is_reproducible_and_records_failures() {
        let spec = NoiseSpec::new(0.01, 0.0, 0.0, 2024).unwrap();
        let protocol = |i: usize, d: &NoiseRealization| -> crate::Result<f64> {
            if i == 3 {
                Err(CoreError::NoConvergence("synthetic".into()))
            } else {
                Ok(1.0 + d.eps_a[0])
            }
        };
        let a = ensemble_run(&spec, 50, protocol).unwrap();
        let b = ensemble_run(&spec, 50, protocol).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.values.len(), 49);
        assert_eq!(a.failures.len(), 1);
        match &a.failures[0] {
            CoreError::Realization { index, .. } => assert_eq!(*index, 3),
            other => panic!("unexpected failure {other:?}"),
        }

        let constant = ensemble_run(&spec, 25, |_, _| Ok(7.0)).unwrap();
        assert_eq!(constant.median, 7.0);
        assert_eq!(constant.interval, (7.0, 7.0));

        assert!(ensemble_run(&spec, 4, |_, _| -> crate::Result<f64> {
            Err(CoreError::NoConvergence("always".into()))
        })
        .is_err());
        assert!(ensemble_run(&spec, 0, |_, _| Ok(0.0)).is_err());
    }

    #[test]
    fn technical_variance_of_a_quadratic_observable() {
        let omega = 2.0 * std::f64::consts::PI * 10.0;
        let c = 0.013;
        let channels = [NoiseChannel {
            value: omega,
            sigma: 0.01 * omega,
        }];
        let report =
            statistical_noise_sigma2(&channels, 11, |v| Ok(c * v[0] * v[0])).unwrap();
        assert!(report.warnings.is_empty());
        assert_relative_eq!(report.derivatives[0], 2.0 * c * omega, max_relative = 1e-6);
        let expected = (0.01 * omega).powi(2) * 110.0 * (2.0 * c * omega).powi(2);
        assert_relative_eq!(report.sigma2, expected, max_relative = 1e-5);

        let pair = statistical_noise_sigma2(&channels, 2, |v| Ok(c * v[0] * v[0])).unwrap();
        assert_relative_eq!(report.sigma2 / pair.sigma2, 110.0 / 2.0, max_relative = 1e-6);
    }

    #[test]
    fn slope_check_flags_non_smooth_observables() {
        let channels = [NoiseChannel {
            value: 1.0,
            sigma: 0.1,
        }];
        let kink = 1.0 + 0.25e-4;
        let report =
            statistical_noise_sigma2(&channels, 5, |v| Ok((v[0] - kink).abs())).unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert!(statistical_noise_sigma2(
            &[NoiseChannel {
                value: 0.0,
                sigma: 0.1
            }],
            5,
            |v| Ok(v[0])
        )
        .is_err());
    }

    #[test]
    fn sensitivity_reduces_to_projection_noise() {
        let atoms = 100;
        let slope = 0.5 * atoms as f64;
        let formula = clock_sensitivity(atoms, 0.0, 1.0, slope).unwrap();
        assert_relative_eq!(formula, 1.0 / atoms as f64, max_relative = 1e-12);
        assert!(clock_sensitivity(0, 0.0, 1.0, 1.0).is_err());
        assert!(clock_sensitivity(10, 0.0, 0.0, 1.0).is_err());
        assert!(clock_sensitivity(10, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn binomial_sampling_reproduces_the_variance_formula() {
        // Collective signal O = sum_i o_i with single-atom excitation
        // p(phi) = (1 + sin phi)/2 read at phi = 0 by n = 100 atoms. The
        // estimator phi_hat = (2k/n - 1) has variance matching the
        // projection-noise formula to ten percent over 10^4 shots.
        let atoms = 100u64;
        let shots = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(777);
        let bin = Binomial::new(atoms, 0.5).unwrap();
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..shots {
            let k = bin.sample(&mut rng) as f64;
            let phi_hat = 2.0 * k / atoms as f64 - 1.0;
            sum += phi_hat;
            sum2 += phi_hat * phi_hat;
        }
        let mean = sum / shots as f64;
        let var = sum2 / shots as f64 - mean * mean;
        let slope = 0.5 * atoms as f64;
        let formula = clock_sensitivity(atoms as usize, 0.0, 1.0, slope).unwrap();
        assert_relative_eq!(var, formula, max_relative = 0.1);
    }
}
