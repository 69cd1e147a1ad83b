//! Base location models f: Gaussian/atom/Laplace mixtures and grid densities.
//!
//! A [`Distribution`] is immutable after construction. Mixture components are
//! kept analytic so that smoothing has closed forms; grid densities are
//! piecewise linear between nodes and zero outside the grid.

use rand::Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmleError};
use crate::fixtures::FixtureSpec;
use crate::special::{std_normal_cdf, std_normal_pdf};

/// One analytic mixture component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    /// N(mean, sigma²); `sigma == 0` is a Dirac atom at `mean`.
    Normal { mean: f64, sigma: f64 },
    /// Laplace density e^{−|x−loc|/scale} / (2·scale).
    Laplace { loc: f64, scale: f64 },
}

impl Component {
    pub fn center(&self) -> f64 {
        match *self {
            Component::Normal { mean, .. } => mean,
            Component::Laplace { loc, .. } => loc,
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Component::Normal { sigma, .. } => sigma,
            Component::Laplace { scale, .. } => scale,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(*self, Component::Normal { sigma, .. } if sigma == 0.0)
    }

    fn pdf(&self, x: f64) -> f64 {
        match *self {
            Component::Normal { mean, sigma } => {
                if sigma == 0.0 {
                    0.0
                } else {
                    std_normal_pdf((x - mean) / sigma) / sigma
                }
            }
            Component::Laplace { loc, scale } => (-(x - loc).abs() / scale).exp() / (2.0 * scale),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match *self {
            Component::Normal { mean, sigma } => {
                if sigma == 0.0 {
                    if x >= mean {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    std_normal_cdf((x - mean) / sigma)
                }
            }
            Component::Laplace { loc, scale } => {
                let y = (x - loc) / scale;
                if y < 0.0 {
                    0.5 * y.exp()
                } else {
                    1.0 - 0.5 * (-y).exp()
                }
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Component::Normal { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma * z
            }
            Component::Laplace { loc, scale } => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    loc + scale * e
                } else {
                    loc - scale * e
                }
            }
        }
    }
}

/// Finite mixture with strictly positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    weights: Vec<f64>,
    components: Vec<Component>,
}

impl Mixture {
    pub fn new(parts: Vec<(f64, Component)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(SmleError::InvalidDistribution("mixture has no components".into()));
        }
        let mut total = 0.0;
        for (w, c) in &parts {
            if !(w.is_finite() && *w > 0.0) {
                return Err(SmleError::InvalidDistribution(format!("weight {w} must be > 0")));
            }
            if !c.center().is_finite() {
                return Err(SmleError::InvalidDistribution("non-finite location".into()));
            }
            match *c {
                Component::Normal { sigma, .. } if !(sigma.is_finite() && sigma >= 0.0) => {
                    return Err(SmleError::InvalidDistribution(format!("sigma {sigma} must be ≥ 0")));
                }
                Component::Laplace { scale, .. } if !(scale.is_finite() && scale > 0.0) => {
                    return Err(SmleError::InvalidDistribution(format!("laplace scale {scale} must be > 0")));
                }
                _ => {}
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(SmleError::InvalidDistribution(format!("mixture weights sum to {total}, expected 1")));
        }
        let (weights, components) = parts.into_iter().unzip();
        Ok(Self { weights, components })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Component)> + '_ {
        self.weights.iter().copied().zip(self.components.iter().copied())
    }
}

/// Piecewise-linear density on the nodes x0 + k·dx, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPdf {
    x0: f64,
    dx: f64,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GridPdf {
    /// Builds a grid density that must already trapezoid-integrate to 1 within 1e−6;
    /// the values are then rescaled to unit mass exactly.
    pub fn new(x0: f64, dx: f64, density: Vec<f64>) -> Result<Self> {
        let mass = Self::validate(x0, dx, &density)?;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(SmleError::InvalidDistribution(format!("grid density integrates to {mass}, expected 1")));
        }
        Ok(Self::build(x0, dx, density, mass))
    }

    /// Builds a grid density, rescaling any positive mass to one.
    pub fn normalized(x0: f64, dx: f64, density: Vec<f64>) -> Result<Self> {
        let mass = Self::validate(x0, dx, &density)?;
        Ok(Self::build(x0, dx, density, mass))
    }

    fn validate(x0: f64, dx: f64, density: &[f64]) -> Result<f64> {
        if !(x0.is_finite() && dx.is_finite() && dx > 0.0) {
            return Err(SmleError::InvalidDistribution(format!("grid needs dx > 0, got {dx}")));
        }
        if density.len() < 2 {
            return Err(SmleError::InvalidDistribution("grid needs at least two nodes".into()));
        }
        if density.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SmleError::InvalidDistribution("grid densities must be finite and ≥ 0".into()));
        }
        let mass = trapezoid(density, dx);
        if mass <= 0.0 {
            return Err(SmleError::InvalidDistribution("grid density has zero mass".into()));
        }
        Ok(mass)
    }

    fn build(x0: f64, dx: f64, mut density: Vec<f64>, mass: f64) -> Self {
        density.iter_mut().for_each(|v| *v /= mass);
        let mut cumulative = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in density.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dx;
            cumulative.push(acc);
        }
        Self { x0, dx, density, cumulative }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn x_end(&self) -> f64 {
        self.x0 + self.dx * (self.density.len() - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.x0 + self.dx * k as f64
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let u = (x - self.x0) / self.dx;
        let last = self.density.len() - 1;
        if !(u >= 0.0 && u <= last as f64) {
            return 0.0;
        }
        let k = (u.floor() as usize).min(last - 1);
        let t = u - k as f64;
        self.density[k] * (1.0 - t) + self.density[k + 1] * t
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let u = (x - self.x0) / self.dx;
        let last = self.density.len() - 1;
        if u <= 0.0 {
            return 0.0;
        }
        if u >= last as f64 {
            return 1.0;
        }
        let k = (u.floor() as usize).min(last - 1);
        let t = (u - k as f64) * self.dx;
        let (a, b) = (self.density[k], self.density[k + 1]);
        (self.cumulative[k] + a * t + (b - a) * t * t / (2.0 * self.dx)).min(1.0)
    }

    /// inf{x : cdf(x) ≥ p} for p ∈ [0, 1).
    fn inverse_cdf(&self, p: f64) -> f64 {
        let last = self.density.len() - 1;
        // first cell k with cumulative[k+1] ≥ p and positive mass
        let mut k = self.cumulative.partition_point(|&c| c < p).max(1) - 1;
        while k < last - 1 && self.cumulative[k + 1] <= self.cumulative[k] {
            k += 1;
        }
        if k >= last {
            return self.x_end();
        }
        let c = (p - self.cumulative[k]).max(0.0);
        let a = (self.density[k + 1] - self.density[k]) / (2.0 * self.dx);
        let b = self.density[k];
        let disc = (b * b + 4.0 * a * c).max(0.0);
        let denom = b + disc.sqrt();
        let t = if denom > 0.0 { (2.0 * c / denom).min(self.dx) } else { 0.0 };
        self.node(k) + t
    }
}

fn trapezoid(values: &[f64], dx: f64) -> f64 {
    values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum()
}

/// Coarse classification of a [`Distribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistKind {
    Mixture,
    Laplace,
    Grid,
}

/// A base location model.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Mixture(Mixture),
    Grid(GridPdf),
}

impl Distribution {
    pub fn normal(mean: f64, sigma: f64) -> Result<Self> {
        Ok(Self::Mixture(Mixture::new(vec![(1.0, Component::Normal { mean, sigma })])?))
    }

    pub fn standard_normal() -> Self {
        Self::normal(0.0, 1.0).expect("valid")
    }

    pub fn dirac(at: f64) -> Result<Self> {
        Self::normal(at, 0.0)
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        Self::laplace_at(0.0, scale)
    }

    pub fn laplace_at(loc: f64, scale: f64) -> Result<Self> {
        Ok(Self::Mixture(Mixture::new(vec![(1.0, Component::Laplace { loc, scale })])?))
    }

    pub fn mixture(parts: Vec<(f64, Component)>) -> Result<Self> {
        Ok(Self::Mixture(Mixture::new(parts)?))
    }

    pub fn grid(x0: f64, dx: f64, density: Vec<f64>) -> Result<Self> {
        Ok(Self::Grid(GridPdf::new(x0, dx, density)?))
    }

    pub fn grid_normalized(x0: f64, dx: f64, density: Vec<f64>) -> Result<Self> {
        Ok(Self::Grid(GridPdf::normalized(x0, dx, density)?))
    }

    pub fn kind(&self) -> DistKind {
        match self {
            Self::Mixture(m) => {
                if m.components().len() == 1 && matches!(m.components()[0], Component::Laplace { .. }) {
                    DistKind::Laplace
                } else {
                    DistKind::Mixture
                }
            }
            Self::Grid(_) => DistKind::Grid,
        }
    }

    pub fn has_atom(&self) -> bool {
        match self {
            Self::Mixture(m) => m.components().iter().any(Component::is_atom),
            Self::Grid(_) => false,
        }
    }

    /// Density f(x). Atoms carry no density; querying exactly at an atom is an error.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        match self {
            Self::Mixture(m) => {
                let mut acc = 0.0;
                for (w, c) in m.iter() {
                    if c.is_atom() && c.center() == x {
                        return Err(SmleError::AtomDensityUndefined(x));
                    }
                    acc += w * c.pdf(x);
                }
                Ok(acc)
            }
            Self::Grid(g) => Ok(g.pdf(x)),
        }
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Mixture(m) => m.iter().map(|(w, c)| w * c.cdf(x)).sum::<f64>().clamp(0.0, 1.0),
            Self::Grid(g) => g.cdf(x),
        }
    }

    /// inf{x : cdf(x) ≥ p} for p ∈ (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(SmleError::InvalidProbability(p));
        }
        Ok(match self {
            Self::Grid(g) => g.inverse_cdf(p),
            Self::Mixture(m) => {
                if let [Component::Laplace { loc, scale }] = m.components() {
                    if p < 0.5 {
                        loc + scale * (2.0 * p).ln()
                    } else {
                        loc - scale * (2.0 * (1.0 - p)).ln()
                    }
                } else {
                    self.bisect_quantile(m, p)
                }
            }
        })
    }

    fn bisect_quantile(&self, m: &Mixture, p: f64) -> f64 {
        let spread = m.components().iter().map(|c| c.scale()).fold(1e-3, f64::max);
        let mut lo = m.components().iter().map(|c| c.center()).fold(f64::INFINITY, f64::min) - spread;
        let mut hi = m.components().iter().map(|c| c.center()).fold(f64::NEG_INFINITY, f64::max) + spread;
        let mut step = spread;
        while self.cdf(lo) >= p {
            lo -= step;
            step *= 2.0;
        }
        step = spread;
        while self.cdf(hi) < p {
            hi += step;
            step *= 2.0;
        }
        // invariant: cdf(lo) < p ≤ cdf(hi)
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // Snap onto an atom sitting inside the final bracket.
        for c in m.components() {
            if c.is_atom() && c.center() > lo && c.center() <= hi && self.cdf(c.center()) >= p {
                return c.center();
            }
        }
        hi
    }

    /// quantile(0.75) − quantile(0.25).
    pub fn iqr(&self) -> f64 {
        let q3 = self.quantile(0.75).expect("0.75 is a valid probability");
        let q1 = self.quantile(0.25).expect("0.25 is a valid probability");
        q3 - q1
    }

    /// n i.i.d. draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            Self::Mixture(m) => {
                if m.components().len() == 1 {
                    let c = m.components()[0];
                    return (0..n).map(|_| c.sample(rng)).collect();
                }
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        let mut pick = m.components().len() - 1;
                        for (i, w) in m.weights().iter().enumerate() {
                            acc += w;
                            if u < acc {
                                pick = i;
                                break;
                            }
                        }
                        m.components()[pick].sample(rng)
                    })
                    .collect()
            }
            Self::Grid(g) => (0..n).map(|_| g.inverse_cdf(rng.random::<f64>())).collect(),
        }
    }

    /// An interval holding all but a negligible amount of mass, used to size tables.
    pub fn effective_support(&self) -> (f64, f64) {
        match self {
            Self::Mixture(m) => {
                let lo = m.components().iter().map(|c| c.center() - 40.0 * c.scale()).fold(f64::INFINITY, f64::min);
                let hi = m.components().iter().map(|c| c.center() + 40.0 * c.scale()).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            Self::Grid(g) => (g.x0(), g.x_end()),
        }
    }

    /// Smallest length scale of the model (component sigma/scale or grid spacing); 0 for atoms.
    pub fn min_scale(&self) -> f64 {
        match self {
            Self::Mixture(m) => m.components().iter().map(|c| c.scale()).fold(f64::INFINITY, f64::min),
            Self::Grid(g) => g.dx(),
        }
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Mixture { components } => Self::mixture(
                components
                    .iter()
                    .map(|c| {
                        let comp = match c.family {
                            Family::Normal => Component::Normal { mean: c.mu, sigma: c.sigma },
                            Family::Laplace => Component::Laplace { loc: c.mu, scale: c.sigma },
                        };
                        (c.w, comp)
                    })
                    .collect(),
            ),
            DistributionSpec::Laplace { scale, loc } => Self::laplace_at(*loc, *scale),
            DistributionSpec::Grid { x0, dx, pdf } => Self::grid(*x0, *dx, pdf.clone()),
            DistributionSpec::Fixture(f) => f.build(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DistributionSpec = serde_json::from_str(text)
            .map_err(|e| SmleError::InvalidDistribution(format!("bad distribution JSON: {e}")))?;
        Self::from_spec(&spec)
    }
}

/// Component family in the JSON mixture format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Normal,
    Laplace,
}

/// One mixture component in the JSON format; `sigma` is the Laplace scale for that family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub w: f64,
    pub mu: f64,
    pub sigma: f64,
    #[serde(default)]
    pub family: Family,
}

/// JSON distribution description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistributionSpec {
    Mixture {
        components: Vec<ComponentSpec>,
    },
    Laplace {
        scale: f64,
        #[serde(default)]
        loc: f64,
    },
    Grid {
        x0: f64,
        dx: f64,
        pdf: Vec<f64>,
    },
    Fixture(FixtureSpec),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn pdf_examples() {
        let g = Distribution::standard_normal();
        assert!((g.pdf(0.0).unwrap() - 0.398_942_280).abs() < 1e-9);
        let l = Distribution::laplace(1.0).unwrap();
        assert_eq!(l.pdf(0.0).unwrap(), 0.5);
        let grid = Distribution::grid_normalized(0.0, 1.0, vec![1.0, 1.0]).unwrap();
        assert!((grid.pdf(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(grid.pdf(1.5).unwrap(), 0.0);
    }

    #[test]
    fn atom_pdf_is_an_error_only_at_the_atom() {
        let d = Distribution::dirac(0.0).unwrap();
        assert_eq!(d.pdf(0.0), Err(SmleError::AtomDensityUndefined(0.0)));
        assert_eq!(d.pdf(0.1).unwrap(), 0.0);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(Distribution::standard_normal().cdf(0.0), 0.5);
        let l = Distribution::laplace(1.0).unwrap();
        assert!((l.cdf(2f64.ln()) - 0.75).abs() < 1e-15);
        assert_eq!(Distribution::dirac(0.0).unwrap().cdf(0.0), 1.0);
    }

    #[test]
    fn quantile_examples() {
        let l = Distribution::laplace(1.0).unwrap();
        assert!((l.quantile(0.75).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((Distribution::standard_normal().quantile(0.75).unwrap() - 0.674_489_750_196_081_7).abs() < 1e-12);
        assert!(Distribution::standard_normal().quantile(0.5).unwrap().abs() < 1e-15);
        assert_eq!(l.quantile(0.0), Err(SmleError::InvalidProbability(0.0)));
        assert_eq!(l.quantile(1.0), Err(SmleError::InvalidProbability(1.0)));
        assert_eq!(Distribution::dirac(3.0).unwrap().quantile(0.3).unwrap(), 3.0);
    }

    #[test]
    fn iqr_examples() {
        assert!((Distribution::laplace(1.0).unwrap().iqr() - 1.386_294).abs() < 1e-6);
        assert_eq!(Distribution::dirac(0.0).unwrap().iqr(), 0.0);
        assert!((Distribution::standard_normal().iqr() - 1.348_980).abs() < 1e-6);
    }

    #[test]
    fn grid_quantile_inverts_cdf() {
        let g = Distribution::grid_normalized(-1.0, 0.5, vec![0.0, 1.0, 3.0, 0.0, 2.0]).unwrap();
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let q = g.quantile(p).unwrap();
            assert!((g.cdf(q) - p).abs() < 1e-12, "p={p} q={q}");
        }
    }

    #[test]
    fn grid_rejects_bad_mass() {
        assert!(Distribution::grid(0.0, 1.0, vec![1.0, 2.0]).is_err());
        assert!(Distribution::grid(0.0, 1.0, vec![1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn dirac_samples_are_constant() {
        let d = Distribution::dirac(3.0).unwrap();
        assert_eq!(d.sample(4, &mut stream(1, "t", &[])), vec![3.0; 4]);
    }

    #[test]
    fn json_round_trip() {
        let d = Distribution::from_json(
            r#"{"type":"mixture","components":[{"w":0.5,"mu":0,"sigma":1},{"w":0.5,"mu":2,"sigma":0}]}"#,
        )
        .unwrap();
        assert!(d.has_atom());
        let l = Distribution::from_json(r#"{"type":"laplace","scale":2}"#).unwrap();
        assert_eq!(l.kind(), DistKind::Laplace);
        let f =
            Distribution::from_json(r#"{"type":"fixture","name":"spiked_laplace","mass":0.001,"loc":4,"width":0.002}"#)
                .unwrap();
        assert_eq!(f.kind(), DistKind::Mixture);
        assert!(Distribution::from_json(r#"{"type":"mixture","components":[{"w":0.4,"mu":0,"sigma":1}]}"#).is_err());
    }
}
