//! Single-particle wavefunction on the chain and the measured observables.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::LatticeParams;

/// Internal level of an atom within a unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Ground,
    Excited,
}

impl Level {
    /// Slot index of (cell, level) in the interleaved basis.
    pub fn slot(self, cell: usize) -> usize {
        match self {
            Level::Ground => 2 * cell,
            Level::Excited => 2 * cell + 1,
        }
    }
}

/// Normalized wavefunction in the interleaved (cell, level) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    lattice: LatticeParams,
    pub(crate) amplitudes: Vec<Complex64>,
}

const NORM_TOLERANCE: f64 = 1e-9;

impl QuantumState {
    /// Builds a state from raw amplitudes. Fails on a length mismatch or when
    /// the norm deviates from 1 by more than 1e-9.
    pub fn from_amplitudes(lattice: LatticeParams, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != lattice.dim() {
            return Err(CoreError::InvalidParameter(format!(
                "amplitude vector has length {}, lattice dimension is {}",
                amplitudes.len(),
                lattice.dim()
            )));
        }
        let state = Self {
            lattice,
            amplitudes,
        };
        state.check_norm()?;
        Ok(state)
    }

    pub(crate) fn from_amplitudes_unchecked(
        lattice: LatticeParams,
        amplitudes: Vec<Complex64>,
    ) -> Self {
        Self {
            lattice,
            amplitudes,
        }
    }

    pub(crate) fn check_norm(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(CoreError::InvalidParameter(format!(
                "state norm {norm} deviates from 1 beyond {NORM_TOLERANCE:.0e}"
            )));
        }
        Ok(())
    }

    pub fn lattice(&self) -> LatticeParams {
        self.lattice
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, cell: usize, level: Level) -> Complex64 {
        self.amplitudes[level.slot(cell)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Total population on the two outermost cells, the quantity watched by
    /// the edge-leakage guard.
    pub fn edge_occupation(&self) -> f64 {
        let n = self.amplitudes.len();
        self.amplitudes[0].norm_sqr()
            + self.amplitudes[1].norm_sqr()
            + self.amplitudes[n - 2].norm_sqr()
            + self.amplitudes[n - 1].norm_sqr()
    }

    /// Inner product <self|other>.
    pub fn overlap(&self, other: &QuantumState) -> Result<Complex64> {
        if self.lattice != other.lattice {
            return Err(CoreError::InvalidParameter(
                "states live on different lattices".into(),
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// A basis state with unit amplitude at (l_0, level). Fails when the site is
/// outside the chain.
pub fn localized_state(lattice: LatticeParams, l_0: usize, level: Level) -> Result<QuantumState> {
    if l_0 >= lattice.cells {
        return Err(CoreError::InvalidParameter(format!(
            "site {l_0} outside chain of {} cells",
            lattice.cells
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); lattice.dim()];
    amplitudes[level.slot(l_0)] = Complex64::new(1.0, 0.0);
    Ok(QuantumState {
        lattice,
        amplitudes,
    })
}

/// Squared overlap |<a|b>|^2.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    Ok(a.overlap(b)?.norm_sqr())
}

/// All observables read out by the protocols.
///
/// Sign conventions are pinned by two contract states: (|l,e> + i|l+1,g>)/sqrt2
/// has I_y = +1/2, and (|l,e> + |l+1,g>)/sqrt2 has I_x = +1/2. S_y is the
/// on-site carrier analogue, x the mean cell index, and d_eg the separation
/// between the e and g centers of mass (None when either population is below
/// 1e-6).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableSet {
    pub s_z: f64,
    pub i_x: f64,
    pub i_y: f64,
    pub s_y: f64,
    pub n_e: f64,
    pub n_g: f64,
    pub x: f64,
    pub d_eg: Option<f64>,
}

const POPULATION_FLOOR: f64 = 1e-6;

/// Computes every observable in one pass over the amplitudes.
pub fn measure(state: &QuantumState) -> ObservableSet {
    let cells = state.lattice.cells;
    let amp = &state.amplitudes;
    let mut n_g = 0.0;
    let mut n_e = 0.0;
    let mut x_g = 0.0;
    let mut x_e = 0.0;
    let mut s_y = 0.0;
    let mut i_x = 0.0;
    let mut i_y = 0.0;
    for l in 0..cells {
        let g = amp[2 * l];
        let e = amp[2 * l + 1];
        let pg = g.norm_sqr();
        let pe = e.norm_sqr();
        n_g += pg;
        n_e += pe;
        x_g += l as f64 * pg;
        x_e += l as f64 * pe;
        s_y += (e.conj() * g).im;
        if l + 1 < cells {
            let bond = e.conj() * amp[2 * l + 2];
            i_x += bond.re;
            i_y += bond.im;
        }
    }
    let d_eg = if n_e < POPULATION_FLOOR || n_g < POPULATION_FLOOR {
        None
    } else {
        Some(x_e / n_e - x_g / n_g)
    };
    ObservableSet {
        s_z: 0.5 * (n_e - n_g),
        i_x,
        i_y,
        s_y,
        n_e,
        n_g,
        x: x_g + x_e,
        d_eg,
    }
}

impl ObservableSet {
    pub fn csv_header() -> &'static str {
        "t,S_z,I_x,I_y,S_y,n_e,n_g,x,d_eg"
    }

    /// One flat CSV row prefixed with the time stamp; an undefined d_eg is
    /// written as nan.
    pub fn csv_row(&self, t: f64) -> String {
        format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            t,
            self.s_z,
            self.i_x,
            self.i_y,
            self.s_y,
            self.n_e,
            self.n_g,
            self.x,
            match self.d_eg {
                Some(v) => format!("{v:.12e}"),
                None => "nan".to_string(),
            }
        )
    }
}
