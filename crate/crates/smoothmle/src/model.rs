//! Pointwise log-likelihood models used by the estimators.

use crate::components::KernelMixture;
use crate::distributions::{Distribution, GridPdf};
use crate::error::{Result, SmleError};

/// Log-density, score and score derivative at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub log_pdf: f64,
    pub score: f64,
    pub score_deriv: f64,
}

/// Interval on which the score derivative may be positive, with an upper bound on it there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureZone {
    pub lo: f64,
    pub hi: f64,
    pub max_deriv: f64,
}

/// A location model log g(x − λ) as seen by the likelihood optimizers.
pub trait LocationModel: Sync {
    fn eval(&self, x: f64) -> PointEval;

    /// Zones outside of which the score derivative is ≤ 0 (log-concave pieces).
    fn curvature_zones(&self) -> &[CurvatureZone];

    /// True if log g is −∞ somewhere (bounded support), which defeats curvature bounds.
    fn has_bounded_support(&self) -> bool {
        false
    }

    fn log_pdf(&self, x: f64) -> f64 {
        self.eval(x).log_pdf
    }

    fn score(&self, x: f64) -> f64 {
        self.eval(x).score
    }
}

/// Groups scan points where s' > 0 into padded zones with an inflated maximum.
pub(crate) fn zones_from_scan(points: &[f64], deriv: &[f64]) -> Vec<CurvatureZone> {
    let mut zones = Vec::new();
    let n = points.len();
    let mut i = 0;
    while i < n {
        if deriv[i] > 0.0 {
            let start = i;
            let mut max = deriv[i];
            while i + 1 < n && deriv[i + 1] > 0.0 {
                i += 1;
                max = max.max(deriv[i]);
            }
            let lo =
                if start > 0 { points[start - 1] } else { points[start] - (points[1.min(n - 1)] - points[0]).abs() };
            let hi =
                if i + 1 < n { points[i + 1] } else { points[i] + (points[n - 1] - points[n.saturating_sub(2)]).abs() };
            let merge = zones.last().is_some_and(|z: &CurvatureZone| z.hi >= lo);
            if merge {
                let z = zones.last_mut().expect("checked");
                z.hi = hi;
                z.max_deriv = z.max_deriv.max(1.5 * max);
            } else {
                zones.push(CurvatureZone { lo, hi, max_deriv: 1.5 * max });
            }
        }
        i += 1;
    }
    zones
}

/// The unsmoothed base model, for the plain-MLE baseline.
#[derive(Debug, Clone)]
pub struct RawModel {
    inner: RawInner,
    zones: Vec<CurvatureZone>,
}

#[derive(Debug, Clone)]
enum RawInner {
    Analytic(KernelMixture),
    Grid(GridPdf),
}

impl RawModel {
    /// Fails with `AtomDensityUndefined` when the base has an atom.
    pub fn new(d: &Distribution) -> Result<Self> {
        match d {
            Distribution::Mixture(m) => {
                if let Some(c) = m.components().iter().find(|c| c.is_atom()) {
                    return Err(SmleError::AtomDensityUndefined(c.center()));
                }
                let km = KernelMixture::new(m, 0.0)?;
                let pts = km.scan_lattice();
                let deriv: Vec<f64> = pts.iter().map(|&x| km.eval(x).score_deriv).collect();
                let zones = zones_from_scan(&pts, &deriv);
                Ok(Self { inner: RawInner::Analytic(km), zones })
            }
            Distribution::Grid(g) => Ok(Self { inner: RawInner::Grid(g.clone()), zones: Vec::new() }),
        }
    }
}

impl LocationModel for RawModel {
    fn eval(&self, x: f64) -> PointEval {
        match &self.inner {
            RawInner::Analytic(km) => km.eval(x),
            RawInner::Grid(g) => {
                let f = g.pdf(x);
                let u = (x - g.x0()) / g.dx();
                let last = g.density().len() - 1;
                let slope = if u >= 0.0 && u <= last as f64 {
                    let k = (u.floor() as usize).min(last - 1);
                    (g.density()[k + 1] - g.density()[k]) / g.dx()
                } else {
                    0.0
                };
                let score = if f > 0.0 { slope / f } else { 0.0 };
                PointEval { log_pdf: f.ln(), score, score_deriv: -score * score }
            }
        }
    }

    fn curvature_zones(&self) -> &[CurvatureZone] {
        &self.zones
    }

    fn has_bounded_support(&self) -> bool {
        matches!(self.inner, RawInner::Grid(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zones_group_positive_runs() {
        let pts: Vec<f64> = (0..10).map(f64::from).collect();
        let d = [-1.0, 2.0, 3.0, -1.0, -1.0, -1.0, 1.0, -1.0, -1.0, -1.0];
        let z = zones_from_scan(&pts, &d);
        assert_eq!(z.len(), 2);
        assert_eq!((z[0].lo, z[0].hi, z[0].max_deriv), (0.0, 3.0, 4.5));
        assert_eq!((z[1].lo, z[1].hi), (5.0, 7.0));
    }

    #[test]
    fn raw_model_rejects_atoms() {
        let d = Distribution::dirac(1.0).unwrap();
        assert_eq!(RawModel::new(&d).unwrap_err(), SmleError::AtomDensityUndefined(1.0));
    }

    #[test]
    fn raw_laplace_is_concave() {
        let m = RawModel::new(&Distribution::laplace(1.0).unwrap()).unwrap();
        assert!(m.curvature_zones().is_empty());
        assert_eq!(m.eval(2.0).score, -1.0);
    }
}
