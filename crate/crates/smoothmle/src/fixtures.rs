//! Named fixture distributions.
//!
//! The spiked fixtures are analytic mixtures. The sawtooth fixture is a grid
//! density: a standard normal plus a triangle wave of slope ±Δ over teeth of
//! width w on [−H, H], clamped at zero and renormalized.

use serde::{Deserialize, Serialize};

use crate::distributions::{Component, Distribution};
use crate::error::{Result, SmleError};
use crate::special::std_normal_pdf;

/// Largest fraction of mass the sawtooth clamp may remove before the fixture is rejected.
pub const SAWTOOTH_CLAMP_BUDGET: f64 = 0.01;

/// Half-width of the sawtooth grid span.
pub const SAWTOOTH_SPAN: f64 = 10.0;

/// Grid nodes per sawtooth tooth.
pub const SAWTOOTH_NODES_PER_TOOTH: f64 = 16.0;

fn default_mass() -> f64 {
    0.001
}
fn default_loc() -> f64 {
    4.0
}
fn default_spike_width() -> f64 {
    0.002
}
fn default_slope() -> f64 {
    8.0
}
fn default_tooth() -> f64 {
    0.02
}
fn default_half_width() -> f64 {
    1.0
}
fn default_atoms() -> Vec<(f64, f64)> {
    vec![(0.25, -1.0), (0.5, 0.0), (0.25, 1.0)]
}

/// Fixture descriptions; `name` selects the variant in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FixtureSpec {
    /// N(0, 1).
    Gaussian,
    /// Laplace with scale 1.
    Laplace,
    /// Atoms given as (weight, location).
    DiracMixture {
        #[serde(default = "default_atoms")]
        atoms: Vec<(f64, f64)>,
    },
    /// (1−mass)·Laplace(1) + mass·N(loc, width²).
    SpikedLaplace {
        #[serde(default = "default_mass")]
        mass: f64,
        #[serde(default = "default_loc")]
        loc: f64,
        #[serde(default = "default_spike_width")]
        width: f64,
    },
    /// (1−mass)·N(0,1) + mass·N(loc, width²); width 0 is a Dirac spike.
    SpikedGaussian {
        #[serde(default = "default_mass")]
        mass: f64,
        #[serde(default = "default_loc")]
        loc: f64,
        #[serde(default)]
        width: f64,
    },
    /// Standard normal plus a sawtooth of slope ±`slope`, teeth of width `tooth_width`, on |x| ≤ `half_width`.
    SawtoothGaussian {
        #[serde(default = "default_slope")]
        slope: f64,
        #[serde(default = "default_tooth")]
        tooth_width: f64,
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
}

impl FixtureSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Laplace => "laplace",
            Self::DiracMixture { .. } => "dirac_mixture",
            Self::SpikedLaplace { .. } => "spiked_laplace",
            Self::SpikedGaussian { .. } => "spiked_gaussian",
            Self::SawtoothGaussian { .. } => "sawtooth_gaussian",
        }
    }

    pub fn dirac_mixture() -> Self {
        Self::DiracMixture { atoms: default_atoms() }
    }

    pub fn spiked_laplace() -> Self {
        Self::SpikedLaplace { mass: default_mass(), loc: default_loc(), width: default_spike_width() }
    }

    pub fn spiked_gaussian() -> Self {
        Self::SpikedGaussian { mass: default_mass(), loc: default_loc(), width: 0.0 }
    }

    pub fn sawtooth_gaussian() -> Self {
        Self::SawtoothGaussian {
            slope: default_slope(),
            tooth_width: default_tooth(),
            half_width: default_half_width(),
        }
    }

    /// The six fixtures with default parameters.
    pub fn all() -> Vec<Self> {
        vec![
            Self::Gaussian,
            Self::Laplace,
            Self::dirac_mixture(),
            Self::spiked_laplace(),
            Self::spiked_gaussian(),
            Self::sawtooth_gaussian(),
        ]
    }

    /// Looks up a fixture with default parameters by name.
    pub fn by_name(name: &str) -> Option<Self> {
        Self::all().into_iter().find(|f| f.name() == name)
    }

    pub fn build(&self) -> Result<Distribution> {
        make_fixture(self)
    }
}

/// Materializes a fixture.
pub fn make_fixture(spec: &FixtureSpec) -> Result<Distribution> {
    let invalid = |m: String| SmleError::InvalidFixture(m);
    match *spec {
        FixtureSpec::Gaussian => Ok(Distribution::standard_normal()),
        FixtureSpec::Laplace => Distribution::laplace(1.0),
        FixtureSpec::DiracMixture { ref atoms } => {
            Distribution::mixture(atoms.iter().map(|&(w, x)| (w, Component::Normal { mean: x, sigma: 0.0 })).collect())
                .map_err(|e| invalid(e.to_string()))
        }
        FixtureSpec::SpikedLaplace { mass, loc, width } => {
            check_spike(mass, loc, width, false)?;
            let base = Component::Laplace { loc: 0.0, scale: 1.0 };
            spiked(base, mass, Component::Normal { mean: loc, sigma: width })
        }
        FixtureSpec::SpikedGaussian { mass, loc, width } => {
            check_spike(mass, loc, width, true)?;
            let base = Component::Normal { mean: 0.0, sigma: 1.0 };
            spiked(base, mass, Component::Normal { mean: loc, sigma: width })
        }
        FixtureSpec::SawtoothGaussian { slope, tooth_width, half_width } => {
            sawtooth_gaussian(slope, tooth_width, half_width)
        }
    }
}

fn check_spike(mass: f64, loc: f64, width: f64, allow_atom: bool) -> Result<()> {
    if !(0.0..1.0).contains(&mass) {
        return Err(SmleError::InvalidFixture(format!("spike mass {mass} outside [0, 1)")));
    }
    if !loc.is_finite() {
        return Err(SmleError::InvalidFixture("spike location must be finite".into()));
    }
    let ok = if allow_atom { width >= 0.0 } else { width > 0.0 };
    if !(ok && width.is_finite()) {
        return Err(SmleError::InvalidFixture(format!("invalid spike width {width}")));
    }
    Ok(())
}

fn spiked(base: Component, mass: f64, spike: Component) -> Result<Distribution> {
    if mass == 0.0 {
        Distribution::mixture(vec![(1.0, base)])
    } else {
        Distribution::mixture(vec![(1.0 - mass, base), (mass, spike)])
    }
}

/// Zero-mean triangle wave with slopes ±1 and teeth of width `w`, starting at 0 for u = 0.
fn triangle(u: f64, w: f64) -> f64 {
    let period = 2.0 * w;
    let v = u.rem_euclid(period);
    if v < 0.5 * w {
        v
    } else if v < 1.5 * w {
        w - v
    } else {
        v - period
    }
}

fn sawtooth_gaussian(slope: f64, w: f64, half: f64) -> Result<Distribution> {
    if !(slope.is_finite() && slope >= 0.0) {
        return Err(SmleError::InvalidFixture(format!("sawtooth slope {slope} must be ≥ 0")));
    }
    if !(w.is_finite() && w > 0.0 && half.is_finite() && half > 0.0) {
        return Err(SmleError::InvalidFixture("sawtooth widths must be > 0".into()));
    }
    if half + w > SAWTOOTH_SPAN {
        return Err(SmleError::InvalidFixture(format!("sawtooth region half-width {half} exceeds the grid span")));
    }
    let dx = w / SAWTOOTH_NODES_PER_TOOTH;
    let nodes = (2.0 * SAWTOOTH_SPAN / dx).round() as usize + 1;
    if nodes > 1 << 24 {
        return Err(SmleError::InvalidFixture(format!("tooth width {w} needs too many grid nodes")));
    }
    let x0 = -SAWTOOTH_SPAN;
    let mut clamped = 0.0;
    let density: Vec<f64> = (0..nodes)
        .map(|k| {
            let x = x0 + dx * k as f64;
            let saw = if x.abs() <= half { slope * triangle(x + half, w) } else { 0.0 };
            let v = std_normal_pdf(x) + saw;
            if v < 0.0 {
                clamped -= v * dx;
                0.0
            } else {
                v
            }
        })
        .collect();
    if clamped > SAWTOOTH_CLAMP_BUDGET {
        return Err(SmleError::InvalidFixture(format!(
            "sawtooth clamp removes {clamped:.4} mass, above the budget {SAWTOOTH_CLAMP_BUDGET}"
        )));
    }
    Distribution::grid_normalized(x0, dx, density)
}
