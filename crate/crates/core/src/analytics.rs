//! Momentum-space band theory and closed-form predictions: dispersion, Berry
//! connection, winding number, Zak phase, the mean-displacement and bond
//! current integrals, and the tilt-response S function.

use crate::error::{CoreError, Result};
use crate::evolve::Propagator;
use crate::model::{build_rm_hamiltonian, LatticeParams, RmParameters};
use crate::state::{localized_state, measure, Level};

/// Default Brillouin-zone discretization.
pub const DEFAULT_BZ_POINTS: usize = 4096;

/// Tolerance on |omega_b/omega_a - 1| below which the couplings count as
/// critical and the winding number is refused.
pub const CRITICAL_RATIO_TOLERANCE: f64 = 1e-9;

const S_FUNCTION_CELLS: usize = 96;

/// Band quantities sampled on a uniform k-grid over (-pi, pi].
///
/// energies holds E_k = sqrt(omega_a^2 + omega_b^2 + 2 omega_a omega_b cos k)/2,
/// phases the unwrapped argument of omega_a + omega_b exp(ik), and berry the
/// connection A(k) = -(1/2) dphi/dk.
#[derive(Debug, Clone, PartialEq)]
pub struct BandData {
    pub momenta: Vec<f64>,
    pub energies: Vec<f64>,
    pub phases: Vec<f64>,
    pub berry: Vec<f64>,
}

fn check_couplings(omega_a: f64, omega_b: f64) -> Result<()> {
    if omega_a < 0.0 || omega_b < 0.0 || (omega_a == 0.0 && omega_b == 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "couplings must be non-negative and not both zero, got ({omega_a}, {omega_b})"
        )));
    }
    Ok(())
}

fn check_not_critical(omega_a: f64, omega_b: f64) -> Result<()> {
    let scale = 0.5 * (omega_a + omega_b);
    if (omega_b - omega_a).abs() < CRITICAL_RATIO_TOLERANCE * scale {
        return Err(CoreError::CriticalPoint {
            tolerance: CRITICAL_RATIO_TOLERANCE,
        });
    }
    Ok(())
}

fn band_energy(omega_a: f64, omega_b: f64, k: f64) -> f64 {
    0.5 * (omega_a * omega_a + omega_b * omega_b + 2.0 * omega_a * omega_b * k.cos())
        .max(0.0)
        .sqrt()
}

/// dphi/dk for phi = arg(omega_a + omega_b exp(ik)).
fn phase_derivative(omega_a: f64, omega_b: f64, k: f64) -> f64 {
    let denom = omega_a * omega_a + omega_b * omega_b + 2.0 * omega_a * omega_b * k.cos();
    omega_b * (omega_b + omega_a * k.cos()) / denom
}

/// Periodic trapezoid quadrature over (-pi, pi].
fn bz_integrate<F: Fn(f64) -> f64>(points: usize, f: F) -> f64 {
    let dk = 2.0 * std::f64::consts::PI / points as f64;
    let mut acc = 0.0;
    for j in 0..points {
        let k = -std::f64::consts::PI + (j as f64 + 1.0) * dk;
        acc += f(k);
    }
    acc * dk
}

/// Samples the band quantities on `points` momenta. Fails on invalid
/// couplings.
pub fn band_data(omega_a: f64, omega_b: f64, points: usize) -> Result<BandData> {
    check_couplings(omega_a, omega_b)?;
    if points < 8 {
        return Err(CoreError::InvalidParameter(
            "band data needs at least 8 momentum points".into(),
        ));
    }
    let dk = 2.0 * std::f64::consts::PI / points as f64;
    let mut momenta = Vec::with_capacity(points);
    let mut energies = Vec::with_capacity(points);
    let mut phases = Vec::with_capacity(points);
    let mut berry = Vec::with_capacity(points);
    let mut last_phase: Option<f64> = None;
    for j in 0..points {
        let k = -std::f64::consts::PI + (j as f64 + 1.0) * dk;
        momenta.push(k);
        energies.push(band_energy(omega_a, omega_b, k));
        berry.push(-0.5 * phase_derivative(omega_a, omega_b, k));
        let raw = (omega_b * k.sin()).atan2(omega_a + omega_b * k.cos());
        let unwrapped = match last_phase {
            None => raw,
            Some(prev) => {
                let mut v = raw;
                while v - prev > std::f64::consts::PI {
                    v -= 2.0 * std::f64::consts::PI;
                }
                while prev - v > std::f64::consts::PI {
                    v += 2.0 * std::f64::consts::PI;
                }
                v
            }
        };
        phases.push(unwrapped);
        last_phase = Some(unwrapped);
    }
    Ok(BandData {
        momenta,
        energies,
        phases,
        berry,
    })
}

impl BandData {
    pub fn csv_header() -> &'static str {
        "k,E_k,phi_k,A_k"
    }

    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for i in 0..self.momenta.len() {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.momenta[i], self.energies[i], self.phases[i], self.berry[i]
            ));
        }
        out
    }
}

/// Winding number of the coupling vector, with the raw Brillouin-zone
/// integral before rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub number: i32,
    pub raw: f64,
}

/// Winding of (omega_a + omega_b exp(ik)) around the origin on an n-point
/// grid. Fails on invalid couplings or at the critical ratio.
pub fn winding_number_on_grid(omega_a: f64, omega_b: f64, points: usize) -> Result<Winding> {
    check_couplings(omega_a, omega_b)?;
    check_not_critical(omega_a, omega_b)?;
    let raw = bz_integrate(points, |k| phase_derivative(omega_a, omega_b, k))
        / (2.0 * std::f64::consts::PI);
    Ok(Winding {
        number: raw.round() as i32,
        raw,
    })
}

/// Winding number on the default 4096-point grid.
pub fn winding_number(omega_a: f64, omega_b: f64) -> Result<Winding> {
    winding_number_on_grid(omega_a, omega_b, DEFAULT_BZ_POINTS)
}

/// Zak phase -pi * W_raw in radians.
pub fn zak_phase(omega_a: f64, omega_b: f64) -> Result<f64> {
    Ok(-std::f64::consts::PI * winding_number(omega_a, omega_b)?.raw)
}

/// Limit-safe (1 - cos(2 E t)) / E^2, which tends to 2 t^2 as E -> 0.
fn displacement_kernel(e: f64, t: f64, scale: f64) -> f64 {
    if e > 1e-9 * scale {
        (1.0 - (2.0 * e * t).cos()) / (e * e)
    } else {
        2.0 * t * t
    }
}

/// Limit-safe sin(2 E t) / E, which tends to 2 t as E -> 0.
fn current_kernel(e: f64, t: f64, scale: f64) -> f64 {
    if e > 1e-9 * scale {
        (2.0 * e * t).sin() / e
    } else {
        2.0 * t
    }
}

/// Closed-form mean displacement x(T)/a_L of the driven wavepacket,
///
///   x(T) = omega_b/(16 pi) * Int dk (omega_a cos k + omega_b)
///          * (1 - cos(2 E_k T)) / E_k^2,
///
/// which reduces to (1 - cos(omega_b T))/2 in the dimerized limit and has the
/// long-time average W/2 away from criticality.
pub fn analytic_mean_displacement(omega_a: f64, omega_b: f64, t: f64) -> f64 {
    let scale = 0.5 * (omega_a + omega_b);
    omega_b
        * bz_integrate(DEFAULT_BZ_POINTS, |k| {
            let e = band_energy(omega_a, omega_b, k);
            (omega_a * k.cos() + omega_b) * displacement_kernel(e, t, scale)
        })
        / (16.0 * std::f64::consts::PI)
}

/// Closed-form sideband bond current,
///
///   I_y(t) = 1/(8 pi) * Int dk (omega_a cos k + omega_b) * sin(2 E_k t) / E_k,
///
/// satisfying omega_b * Int_0^T I_y dt = x(T)/a_L.
pub fn analytic_iy(omega_a: f64, omega_b: f64, t: f64) -> f64 {
    let scale = 0.5 * (omega_a + omega_b);
    bz_integrate(DEFAULT_BZ_POINTS, |k| {
        let e = band_energy(omega_a, omega_b, k);
        (omega_a * k.cos() + omega_b) * current_kernel(e, t, scale)
    }) / (8.0 * std::f64::consts::PI)
}

/// Linear-response coefficient of I_x with respect to the detuning delta;
/// equals analytic_mean_displacement / omega_b.
pub fn delta_response(omega_a: f64, omega_b: f64, t: f64) -> f64 {
    analytic_mean_displacement(omega_a, omega_b, t) / omega_b
}

/// First-order I_x prediction c_delta(t) * delta + (S(t)/omega_b) * delta_t
/// for small symmetry-breaking terms.
pub fn linear_response_ix(omega_a: f64, omega_b: f64, delta: f64, delta_t: f64, t: f64) -> f64 {
    delta_response(omega_a, omega_b, t) * delta
        + s_function(omega_a, omega_b, t) / omega_b * delta_t
}

/// Dimensionless tilt-response coefficient S(t) = omega_b * dI_x/d(delta_t),
/// evaluated as a central finite difference of brute-force evolution from the
/// centered g state; in the dimerized limit S = (1 - cos(omega_b t))/2.
pub fn s_function(omega_a: f64, omega_b: f64, t: f64) -> f64 {
    let lattice = LatticeParams::new(S_FUNCTION_CELLS).expect("fixed size is valid");
    let psi0 = localized_state(lattice, lattice.center(), Level::Ground)
        .expect("center site exists");
    let h = 1e-4 * omega_b;
    let ix_at = |delta_t: f64| {
        let ham = build_rm_hamiltonian(
            lattice,
            &RmParameters::new(omega_a, omega_b, 0.0, delta_t),
        );
        let prop = Propagator::new(&ham).expect("finite Hamiltonian");
        measure(&prop.advance(&psi0, t)).i_x
    };
    omega_b * (ix_at(h) - ix_at(-h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::evolve_const;
    use approx::assert_relative_eq;

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn band_energies_match_dispersion() {
        let (oa, ob) = (3.0, 7.0);
        let data = band_data(oa, ob, 64).unwrap();
        for (k, e) in data.momenta.iter().zip(&data.energies) {
            let want = 0.5 * (oa * oa + ob * ob + 2.0 * oa * ob * k.cos()).sqrt();
            assert_relative_eq!(*e, want, epsilon = 1e-13);
        }
        // Unwrapped phase is continuous: no jump approaches pi.
        for w in data.phases.windows(2) {
            assert!((w[1] - w[0]).abs() < 1.0);
        }
    }

    #[test]
    fn winding_distinguishes_the_two_phases() {
        let ob = 10.0;
        assert_eq!(winding_number(ob / 0.3, ob).unwrap().number, 0);
        assert_eq!(winding_number(ob / 3.0, ob).unwrap().number, 1);
        assert_eq!(winding_number(5.0, 0.0).unwrap().number, 0);
        assert!(matches!(
            winding_number(4.0, 4.0),
            Err(CoreError::CriticalPoint { .. })
        ));
        assert!(winding_number(-1.0, 2.0).is_err());
        assert!(winding_number(0.0, 0.0).is_err());
    }

    #[test]
    fn winding_raw_value_is_quantized() {
        for r in [0.3, 0.5, 2.0, 3.0] {
            let w = winding_number_on_grid(10.0 / r, 10.0, 10_000).unwrap();
            assert!(
                (w.raw - w.raw.round()).abs() < 1e-6,
                "raw {} at r = {r}",
                w.raw
            );
        }
    }

    #[test]
    fn winding_depends_only_on_the_ratio() {
        for lambda in [0.1, 1.0, 250.0] {
            let w = winding_number(lambda * 2.0, lambda * 5.0).unwrap();
            assert_eq!(w.number, 1);
            assert_relative_eq!(w.raw, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn zak_phase_tracks_the_winding() {
        assert_relative_eq!(
            zak_phase(10.0 / 3.0, 10.0).unwrap(),
            -std::f64::consts::PI,
            epsilon = 1e-6
        );
        assert!(zak_phase(10.0 / 0.3, 10.0).unwrap().abs() < 1e-6);
    }

    #[test]
    fn dimerized_mean_displacement_is_rabi_like() {
        let ob = TWO_PI * 10.0;
        for obt in [0.0, 0.7, 2.0, 9.4] {
            let t = obt / ob;
            assert_relative_eq!(
                analytic_mean_displacement(0.0, ob, t),
                (1.0 - obt.cos()) / 2.0,
                epsilon = 1e-10,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                analytic_iy(0.0, ob, t),
                obt.sin() / 2.0,
                epsilon = 1e-10,
                max_relative = 1e-10
            );
        }
    }

    /// Long-time average of x(T) at the critical ratio; the k-integral gives
    /// exactly 1/4 there (the integrand collapses to a constant).
    #[test]
    fn mean_displacement_long_time_average_at_critical_ratio() {
        let ob = TWO_PI * 10.0;
        let samples = 400;
        let mut acc = 0.0;
        for i in 0..samples {
            let obt = 40.0 + 60.0 * (i as f64 + 0.5) / samples as f64;
            acc += analytic_mean_displacement(ob, ob, obt / ob);
        }
        acc /= samples as f64;
        assert!((acc - 0.25).abs() < 0.01, "average {acc}");
    }

    #[test]
    fn long_time_average_reaches_half_winding() {
        let ob = TWO_PI * 10.0;
        for (r, want) in [(0.3, 0.0), (3.0, 0.5)] {
            let oa = ob / r;
            let samples = 400;
            let mut acc = 0.0;
            for i in 0..samples {
                let obt = 60.0 + 60.0 * (i as f64 + 0.5) / samples as f64;
                acc += analytic_mean_displacement(oa, ob, obt / ob);
            }
            acc /= samples as f64;
            assert!((acc - want).abs() < 0.02, "r = {r}: average {acc}");
        }
    }

    #[test]
    fn current_integral_reproduces_displacement() {
        let ob = TWO_PI * 10.0;
        let oa = ob / 2.0;
        let t_end = 3.0 / ob * TWO_PI;
        // Simpson integration of I_y over [0, T].
        let n = 4000;
        let dt = t_end / n as f64;
        let mut integral = analytic_iy(oa, ob, 0.0) + analytic_iy(oa, ob, t_end);
        for i in 1..n {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            integral += weight * analytic_iy(oa, ob, i as f64 * dt);
        }
        integral *= dt / 3.0;
        assert_relative_eq!(
            ob * integral,
            analytic_mean_displacement(oa, ob, t_end),
            epsilon = 1e-8
        );
    }

    #[test]
    fn analytic_current_matches_lattice_evolution() {
        let ob = TWO_PI * 10.0;
        let oa = ob / 2.0;
        let lattice = LatticeParams::new(128).unwrap();
        let psi0 = localized_state(lattice, 64, Level::Ground).unwrap();
        let h = build_rm_hamiltonian(lattice, &RmParameters::new(oa, ob, 0.0, 0.0));
        for obt in [1.0, 3.0, 10.0, 20.0] {
            let t = obt / ob;
            let brute = measure(&evolve_const(&h, &psi0, t).unwrap()).i_y;
            assert_relative_eq!(analytic_iy(oa, ob, t), brute, epsilon = 1e-6);
        }
    }

    #[test]
    fn dimerized_linear_response_closed_form() {
        let ob = TWO_PI * 10.0;
        let (delta, delta_t) = (0.02 * ob, 0.013 * ob);
        for obt in [0.9, std::f64::consts::PI, 5.0] {
            let t = obt / ob;
            let want = (delta + delta_t) * (1.0 - obt.cos()) / 2.0 / ob;
            assert_relative_eq!(
                linear_response_ix(0.0, ob, delta, delta_t, t),
                want,
                epsilon = 1e-6,
                max_relative = 1e-4
            );
        }
    }

    #[test]
    fn delta_slope_matches_frozen_oracle_values() {
        let ob = TWO_PI * 10.0;
        let t = std::f64::consts::PI / ob;
        assert_relative_eq!(
            ob * delta_response(ob / 3.0, ob, t),
            0.86930636,
            epsilon = 1e-6
        );
        assert_relative_eq!(
            ob * delta_response(ob / 0.3, ob, t),
            -0.03075834,
            epsilon = 1e-6
        );
    }

    #[test]
    fn delta_slope_agrees_with_finite_difference_of_evolution() {
        let ob = TWO_PI * 10.0;
        let oa = ob / 3.0;
        let t = std::f64::consts::PI / ob;
        let lattice = LatticeParams::new(64).unwrap();
        let psi0 = localized_state(lattice, 32, Level::Ground).unwrap();
        let h = 1e-5 * ob;
        let ix_at = |delta: f64| {
            let ham = build_rm_hamiltonian(lattice, &RmParameters::new(oa, ob, delta, 0.0));
            measure(&evolve_const(&ham, &psi0, t).unwrap()).i_x
        };
        let fd = (ix_at(h) - ix_at(-h)) / (2.0 * h);
        assert_relative_eq!(delta_response(oa, ob, t), fd, epsilon = 1e-7);
    }

    #[test]
    fn s_function_limits() {
        let ob = TWO_PI * 10.0;
        assert!(s_function(0.0, ob, 0.0).abs() < 1e-9);
        assert_relative_eq!(
            s_function(0.0, ob, std::f64::consts::PI / ob),
            1.0,
            epsilon = 1e-6
        );
        // Bounded and oscillatory across a coupling-ratio sweep.
        for r in [0.3, 0.5, 1.0, 2.0, 3.0] {
            let s = s_function(ob / r, ob, 2.5 / ob * TWO_PI);
            assert!(s.is_finite() && s.abs() < 10.0, "S = {s} at r = {r}");
        }
    }

    #[test]
    fn band_csv_has_four_columns() {
        let data = band_data(1.0, 2.0, 16).unwrap();
        let rows = data.csv_rows();
        assert_eq!(rows.lines().count(), 16);
        assert_eq!(rows.lines().next().unwrap().split(',').count(), 4);
        assert_eq!(BandData::csv_header().split(',').count(), 4);
    }
}
