//! Gauss–Legendre based rules on intervals, the unit sphere and planes.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::Vec3;

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("quadrature order must be positive"));
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Composite Gauss–Legendre rule on `[a, b]`: the interval is split at every
/// breakpoint inside it and then into panels no wider than `max_panel`.
pub fn composite_rule(a: f64, b: f64, breakpoints: &[f64], max_panel: f64, order: usize) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let base = gauss_legendre(order, -1.0, 1.0);
    let mut out = Vec::new();
    for win in cuts.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let panels = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
        let width = (hi - lo) / panels as f64;
        for p in 0..panels {
            let mid = lo + width * (p as f64 + 0.5);
            out.extend(base.iter().map(|&(x, w)| (mid + 0.5 * width * x, 0.5 * width * w)));
        }
    }
    out
}

/// Product rule on S²: Gauss–Legendre in cos θ times uniform azimuth.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    polar: usize,
    azimuthal: usize,
}

impl SphereQuadrature {
    pub fn new(polar: usize, azimuthal: usize) -> Self {
        assert!(polar >= 1 && azimuthal >= 1, "sphere rule orders must be positive");
        let mut nodes = Vec::with_capacity(polar * azimuthal);
        let mut weights = Vec::with_capacity(polar * azimuthal);
        let dphi = 2.0 * PI / azimuthal as f64;
        for (mu, w) in gauss_legendre(polar, -1.0, 1.0) {
            let st = (1.0 - mu * mu).max(0.0).sqrt();
            for a in 0..azimuthal {
                let phi = dphi * (a as f64 + 0.5);
                nodes.push(Vec3::new(st * phi.cos(), st * phi.sin(), mu));
                weights.push(w * dphi);
            }
        }
        Self {
            nodes,
            weights,
            polar,
            azimuthal,
        }
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Total degree of spherical polynomials integrated exactly.
    pub fn exactness_degree(&self) -> usize {
        (2 * self.polar - 1).min(self.azimuthal - 1)
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.polar, self.azimuthal)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec3, f64)> {
        self.nodes.iter().zip(self.weights.iter().copied())
    }
}

impl Default for SphereQuadrature {
    fn default() -> Self {
        Self::new(6, 12)
    }
}

/// Polar rule on a plane: Gauss–Legendre radius on `[0, cutoff]` times a
/// uniform angle. Points are `centre + ρ(cos θ e₁ + sin θ e₂)` with weight
/// `ρ w_ρ Δθ`.
#[derive(Debug, Clone)]
pub struct PlaneQuadrature {
    radial: Vec<(f64, f64)>,
    angles: Vec<(f64, f64)>,
    cutoff: f64,
}

impl PlaneQuadrature {
    pub fn new(radial_order: usize, angular_order: usize, cutoff: f64) -> Self {
        assert!(cutoff > 0.0, "plane cutoff must be positive");
        assert!(angular_order >= 1, "angular order must be positive");
        let dth = 2.0 * PI / angular_order as f64;
        let angles = (0..angular_order)
            .map(|a| {
                let th = dth * (a as f64 + 0.5);
                (th.cos(), th.sin())
            })
            .collect();
        let radial = gauss_legendre(radial_order, 0.0, cutoff)
            .into_iter()
            .map(|(r, w)| (r, r * w * dth))
            .collect();
        Self { radial, angles, cutoff }
    }

    /// Default cutoff 7/√(min mass), 24 radial and 16 angular nodes.
    pub fn with_defaults(min_mass: f64) -> Self {
        Self::new(24, 16, 7.0 / min_mass.sqrt())
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.radial.len(), self.angles.len())
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(w, weight)` for every node of the rule placed in the plane
    /// spanned by the orthonormal pair `(e1, e2)` around `centre`.
    pub fn for_each(&self, centre: &Vec3, e1: &Vec3, e2: &Vec3, mut f: impl FnMut(Vec3, f64)) {
        for &(r, wr) in &self.radial {
            for &(c, s) in &self.angles {
                f(centre + (e1 * c + e2 * s) * r, wr);
            }
        }
    }
}
