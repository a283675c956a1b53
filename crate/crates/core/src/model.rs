//! Lattice geometry, drive parameters and Hamiltonian construction.
//!
//! The chain lives in the interleaved site basis (l, g) -> 2l, (l, e) -> 2l + 1,
//! which makes every Hamiltonian in this crate tridiagonal.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Geometry of the open chain: a number of unit cells, each holding one g and
/// one e slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub cells: usize,
}

impl LatticeParams {
    /// Fails if fewer than two unit cells are requested.
    pub fn new(cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "lattice needs at least 2 cells, got {cells}"
            )));
        }
        Ok(Self { cells })
    }

    /// Dimension of the single-particle Hilbert space.
    pub fn dim(&self) -> usize {
        2 * self.cells
    }

    /// Central cell, the default starting site for every protocol.
    pub fn center(&self) -> usize {
        self.cells / 2
    }
}

/// Parameters of the tilted Rice-Mele Hamiltonian, all angular frequencies in
/// rad/s.
///
/// omega_a couples g and e within a cell (carrier), omega_b couples e of cell
/// l to g of cell l+1 (sideband). delta is the g-e detuning entering the
/// diagonal as +delta/2 on g and -delta/2 on e; delta_t is the residual tilt
/// per cell. The phases multiply the couplings as exp(i*phase) and default to
/// zero, where both couplings are real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmParameters {
    pub omega_a: f64,
    pub omega_b: f64,
    pub delta: f64,
    pub delta_t: f64,
    #[serde(default)]
    pub phase_a: f64,
    #[serde(default)]
    pub phase_b: f64,
}

impl RmParameters {
    pub fn new(omega_a: f64, omega_b: f64, delta: f64, delta_t: f64) -> Self {
        Self {
            omega_a,
            omega_b,
            delta,
            delta_t,
            phase_a: 0.0,
            phase_b: 0.0,
        }
    }

    pub fn with_phases(mut self, phase_a: f64, phase_b: f64) -> Self {
        self.phase_a = phase_a;
        self.phase_b = phase_b;
        self
    }

    /// Coupling ratio omega_b / omega_a.
    pub fn ratio(&self) -> f64 {
        self.omega_b / self.omega_a
    }
}

/// Hermitian tridiagonal matrix stored as its real diagonal and complex
/// superdiagonal; `off[i]` is the element at row i, column i+1, and the
/// subdiagonal is its conjugate mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub diag: Vec<f64>,
    pub off: Vec<Complex64>,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// out = H * v, without allocating.
    pub fn matvec(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.diag.len();
        debug_assert_eq!(v.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = v[i] * self.diag[i];
            if i > 0 {
                acc += self.off[i - 1].conj() * v[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * v[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Dense copy for eigendecomposition.
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(self.diag[i], 0.0);
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i].conj();
            }
        }
        m
    }

    /// Upper bound on the spectral norm (maximum absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        let n = self.dim();
        let mut bound: f64 = 0.0;
        for i in 0..n {
            let mut row = self.diag[i].abs();
            if i > 0 {
                row += self.off[i - 1].norm();
            }
            if i + 1 < n {
                row += self.off[i].norm();
            }
            bound = bound.max(row);
        }
        bound
    }

    pub fn is_finite(&self) -> bool {
        self.diag.iter().all(|d| d.is_finite())
            && self.off.iter().all(|o| o.re.is_finite() && o.im.is_finite())
    }
}

/// Builds the tilted Rice-Mele Hamiltonian on the open chain.
///
/// In the interleaved basis the element at (2l+1, 2l) is omega_a/2 *
/// exp(i*phase_a), the element at (2l+1, 2l+2) is omega_b/2 * exp(i*phase_b),
/// and the diagonal carries delta/2 * (n_g - n_e) + delta_t * l.
pub fn build_rm_hamiltonian(lattice: LatticeParams, p: &RmParameters) -> Hamiltonian {
    let cells = lattice.cells;
    let n = lattice.dim();
    let half_a = Complex64::from_polar(0.5 * p.omega_a, p.phase_a);
    let half_b = Complex64::from_polar(0.5 * p.omega_b, p.phase_b);

    let mut diag = vec![0.0; n];
    let mut off = vec![Complex64::new(0.0, 0.0); n - 1];
    for l in 0..cells {
        let tilt = p.delta_t * l as f64;
        diag[2 * l] = 0.5 * p.delta + tilt;
        diag[2 * l + 1] = -0.5 * p.delta + tilt;
        off[2 * l] = half_a.conj();
        if l + 1 < cells {
            off[2 * l + 1] = half_b;
        }
    }
    Hamiltonian { diag, off }
}

/// Bare two-tone drive before the Wannier-Stark dressing: tone Rabi rates
/// omega_c (carrier) and omega_s (sideband) in rad/s, the dimensionless
/// intensity overlap i0, the bare tunneling j and ladder splitting delta_ws in
/// rad/s, and the relative tone phase phi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BareDrives {
    pub omega_c: f64,
    pub omega_s: f64,
    #[serde(default = "default_intensity")]
    pub i0: f64,
    pub tunneling: f64,
    pub splitting: f64,
    pub phi: f64,
}

fn default_intensity() -> f64 {
    1.0
}

impl BareDrives {
    /// Modulation index fed to the Bessel factors: 4 J sin(phi/2) / Delta.
    pub fn bessel_argument(&self) -> f64 {
        4.0 * self.tunneling * (0.5 * self.phi).sin() / self.splitting
    }
}

/// Effective lattice couplings produced by a bare drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDrives {
    pub params: RmParameters,
    pub bessel_argument: f64,
}

/// Dresses the bare tones with the Wannier-Stark Bessel factors:
/// omega_a = omega_c * i0 * J_0(arg) and omega_b = omega_s * i0 * |J_{-1}(arg)|,
/// with delta = delta_t = 0.
pub fn derive_effective_drives(bare: &BareDrives) -> EffectiveDrives {
    let arg = bare.bessel_argument();
    let omega_a = bare.omega_c * bare.i0 * bessel_j(0, arg);
    let omega_b = bare.omega_s * bare.i0 * bessel_j(-1, arg).abs();
    EffectiveDrives {
        params: RmParameters::new(omega_a, omega_b, 0.0, 0.0),
        bessel_argument: arg,
    }
}

/// Light-shift magnitudes per level caused by the off-resonant channel of each
/// tone, as (carrier-tone shift, sideband-tone shift).
///
/// The carrier tone leaks into the sideband channel with amplitude
/// omega_c * i0 * J_1(arg), giving (omega_c i0 J_1)^2 / (4 delta_ws); the
/// sideband tone leaks into the carrier channel with amplitude
/// omega_s * i0 * J_0(arg), giving (omega_s i0 J_0)^2 / (4 delta_ws). The two
/// dressed levels shift oppositely, so the full differential shift on the
/// detuning delta is twice each magnitude: the sideband tone lowers delta, the
/// carrier tone raises it.
pub fn ac_stark_shift(bare: &BareDrives) -> Result<(f64, f64)> {
    if bare.splitting == 0.0 {
        return Err(CoreError::InvalidParameter(
            "ac Stark shift needs a nonzero ladder splitting".into(),
        ));
    }
    let arg = bare.bessel_argument();
    let carrier_leak = bare.omega_c * bare.i0 * bessel_j(1, arg);
    let sideband_leak = bare.omega_s * bare.i0 * bessel_j(0, arg);
    Ok((
        carrier_leak * carrier_leak / (4.0 * bare.splitting),
        sideband_leak * sideband_leak / (4.0 * bare.splitting),
    ))
}

/// Bessel function of the first kind J_n(x) for any integer order, using
/// J_{-n}(x) = (-1)^n J_n(x).
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if n >= 0 {
        libm::jn(n, x)
    } else {
        let v = libm::jn(-n, x);
        if n % 2 == 0 {
            v
        } else {
            -v
        }
    }
}

/// Matrix of Bessel amplitudes J_{l-m}(2 j / delta_ws) connecting the site
/// basis to the Wannier-Stark basis, for indices l, m in -range..=range.
///
/// Panics if range < 1 or delta_ws <= 0.
pub fn ws_coupling_matrix(tunneling: f64, splitting: f64, range: i32) -> nalgebra::DMatrix<f64> {
    assert!(range >= 1, "range must be at least 1");
    assert!(splitting > 0.0, "splitting must be positive");
    let x = 2.0 * tunneling / splitting;
    let size = (2 * range + 1) as usize;
    nalgebra::DMatrix::from_fn(size, size, |row, col| {
        bessel_j(row as i32 - col as i32, x)
    })
}

/// Which of the two drive tones a single-tone Hamiltonian represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tone {
    Carrier,
    Sideband,
}

/// Single-tone Hamiltonian retaining the counter-rotating channel.
///
/// Each tone drives its resonant channel with a static coupling and the other
/// channel with a coupling oscillating at the ladder splitting: the sideband
/// tone puts omega_s i0 J_{-1}/2 on the sideband bonds and
/// omega_s i0 J_0 exp(i delta_ws t)/2 on the carrier bonds, the carrier tone
/// puts omega_c i0 J_0/2 on the carrier bonds and
/// omega_c i0 J_{-1} exp(-i delta_ws t)/2 on the sideband bonds.
#[derive(Debug, Clone, Copy)]
pub struct CounterRotatingTone {
    pub bare: BareDrives,
    pub lattice: LatticeParams,
    pub tone: Tone,
}

pub fn build_counterrotating_hamiltonian(
    bare: &BareDrives,
    lattice: LatticeParams,
    tone: Tone,
) -> CounterRotatingTone {
    CounterRotatingTone {
        bare: *bare,
        lattice,
        tone,
    }
}

impl CounterRotatingTone {
    /// Instantaneous Hermitian matrix at time t.
    pub fn hamiltonian_at(&self, t: f64) -> Hamiltonian {
        let arg = self.bare.bessel_argument();
        let j0 = bessel_j(0, arg);
        let jm1 = bessel_j(-1, arg);
        let phase = self.bare.splitting * t;
        // Amplitudes multiplying a_le^dag a_lg (carrier bonds) and
        // a_le^dag a_{l+1,g} (sideband bonds).
        let (carrier_amp, sideband_amp) = match self.tone {
            Tone::Sideband => {
                let scale = self.bare.omega_s * self.bare.i0;
                (
                    Complex64::from_polar(scale * j0, phase),
                    Complex64::new(scale * jm1, 0.0),
                )
            }
            Tone::Carrier => {
                let scale = self.bare.omega_c * self.bare.i0;
                (
                    Complex64::new(scale * j0, 0.0),
                    Complex64::from_polar(scale * jm1, -phase),
                )
            }
        };

        let cells = self.lattice.cells;
        let n = self.lattice.dim();
        let mut off = vec![Complex64::new(0.0, 0.0); n - 1];
        for l in 0..cells {
            off[2 * l] = 0.5 * carrier_amp.conj();
            if l + 1 < cells {
                off[2 * l + 1] = 0.5 * sideband_amp;
            }
        }
        Hamiltonian {
            diag: vec![0.0; n],
            off,
        }
    }
}
