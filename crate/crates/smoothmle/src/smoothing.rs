//! The r-smoothed model f_r = f ∗ N(0, r²): density, score s_r = f_r'/f_r,
//! its derivative, Fisher information and offset score moments.
//!
//! The score follows s_r(x) = −E[Z | X = x]/r² with Z = x − Y, Y ~ f; for
//! f = δ₀ this gives s_r(x) = −x/r².

use std::sync::OnceLock;

use crate::components::KernelMixture;
use crate::distributions::Distribution;
use crate::error::{Result, SmleError};
use crate::model::{zones_from_scan, CurvatureZone, LocationModel, PointEval};
use crate::quadrature::{integrate, Tolerance};
use crate::table::Table;

#[derive(Debug, Clone)]
enum Repr {
    Analytic(KernelMixture),
    Table(Table),
}

/// f convolved with N(0, r²). Immutable apart from lazily filled caches.
#[derive(Debug, Clone)]
pub struct SmoothedModel {
    base: Distribution,
    r: f64,
    repr: Repr,
    breakpoints: Vec<f64>,
    fisher: OnceLock<f64>,
    zones: OnceLock<Vec<CurvatureZone>>,
}

/// Builds f_r; fails with `InvalidRadius` unless r > 0.
pub fn smooth(d: &Distribution, r: f64) -> Result<SmoothedModel> {
    SmoothedModel::new(d, r)
}

impl SmoothedModel {
    pub fn new(d: &Distribution, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(SmleError::InvalidRadius(r));
        }
        let (repr, breakpoints) = match d {
            Distribution::Mixture(m) => {
                let km = KernelMixture::new(m, r)?;
                let bp = km.breakpoints();
                (Repr::Analytic(km), bp)
            }
            Distribution::Grid(g) => {
                let t = Table::new(g, r);
                let (lo, hi) = t.range();
                let step = r / 4.0;
                let count = ((hi - lo) / step).ceil().max(1.0) as usize;
                let mut bp: Vec<f64> = (0..=count).map(|i| lo + (hi - lo) * i as f64 / count as f64).collect();
                bp.dedup();
                (Repr::Table(t), bp)
            }
        };
        Ok(Self { base: d.clone(), r, repr, breakpoints, fisher: OnceLock::new(), zones: OnceLock::new() })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    /// True when f_r is evaluated from closed forms (mixture bases).
    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Repr::Analytic(_))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> PointEval {
        match &self.repr {
            Repr::Analytic(km) => km.eval(x),
            Repr::Table(t) => t.eval(x),
        }
    }

    /// f_r(x) > 0.
    pub fn pdf(&self, x: f64) -> f64 {
        self.eval(x).log_pdf.exp()
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        self.eval(x).log_pdf
    }

    /// s_r(x) = f_r'(x)/f_r(x).
    pub fn score(&self, x: f64) -> f64 {
        self.eval(x).score
    }

    /// s_r'(x).
    pub fn score_deriv(&self, x: f64) -> f64 {
        self.eval(x).score_deriv
    }

    /// Partition of the effective support used for integrals against f_r.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Interval outside which f_r is negligible.
    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    /// ∫ f_r(x) g(x) dx.
    pub fn expect<G: FnMut(f64, &PointEval) -> f64>(&self, mut g: G) -> Result<f64> {
        Ok(integrate(
            |x| {
                let e = self.eval(x);
                let p = e.log_pdf.exp();
                if p == 0.0 {
                    0.0
                } else {
                    p * g(x, &e)
                }
            },
            &self.breakpoints,
            Tolerance::default(),
        )?
        .value)
    }

    /// I_r = E[s_r²], cached after the first successful call.
    pub fn fisher_info(&self) -> Result<f64> {
        if let Some(v) = self.fisher.get() {
            return Ok(*v);
        }
        let v = self.expect(|_, e| e.score * e.score)?;
        Ok(*self.fisher.get_or_init(|| v))
    }

    /// E_{x~f_r}[s_r(x+eps)^k], or E|s_r(x+eps)|^k when `absolute`.
    pub fn score_moment(&self, eps: f64, k: u32, absolute: bool) -> Result<f64> {
        if eps.abs() > 0.5 * self.r {
            return Err(SmleError::OffsetTooLarge { eps, limit: 0.5 * self.r });
        }
        if k == 0 {
            return Err(SmleError::InvalidArgument("moment order must be ≥ 1".into()));
        }
        self.expect(|x, e| {
            let s = if eps == 0.0 { e.score } else { self.score(x + eps) };
            if absolute {
                s.abs().powi(k as i32)
            } else {
                s.powi(k as i32)
            }
        })
    }

    /// Points at which to scan pointwise properties: a uniform grid over the central mass.
    pub fn scan_points(&self, count: usize) -> Vec<f64> {
        let lo = self.base.quantile(1e-6).unwrap_or(self.support().0) - 4.0 * self.r;
        let hi = self.base.quantile(1.0 - 1e-6).unwrap_or(self.support().1) + 4.0 * self.r;
        (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1).max(1) as f64).collect()
    }

    fn compute_zones(&self) -> Vec<CurvatureZone> {
        let pts: Vec<f64> = match &self.repr {
            Repr::Analytic(km) => km.scan_lattice(),
            Repr::Table(t) => {
                let h = t.spacing();
                t.node_points().flat_map(|x| [x, x + 0.5 * h]).collect()
            }
        };
        let deriv: Vec<f64> = pts.iter().map(|&x| self.eval(x).score_deriv).collect();
        zones_from_scan(&pts, &deriv)
    }
}

impl LocationModel for SmoothedModel {
    #[inline]
    fn eval(&self, x: f64) -> PointEval {
        SmoothedModel::eval(self, x)
    }

    fn curvature_zones(&self) -> &[CurvatureZone] {
        self.zones.get_or_init(|| self.compute_zones())
    }
}
