//! Binary collision kinematics: the ω-parametrization, the w-plane and
//! sphere parametrizations used by the kernels, and the mass-weighted energy
//! inequality behind the collision-frequency bounds.
//!
//! Every function takes a [`CollisionChannel`] in its canonical reading:
//! species α enters in level `i` and leaves in level `k`, species β enters in
//! level `j` and leaves in level `l`. The parametrizations differ only in
//! which velocities play the pre- and post-collision roles; see [`Pairing`].

use crate::mixture_model::{CollisionChannel, Mixture};
use crate::Vec3;

/// Two velocities and the derived relative and centre-of-mass velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionPair {
    pub xi: Vec3,
    pub xi_star: Vec3,
    pub g: Vec3,
    pub g_norm: f64,
    /// (m_α ξ + m_β ξ*)/(m_α + m_β).
    pub center: Vec3,
}

impl CollisionPair {
    pub fn new(xi: Vec3, xi_star: Vec3, m_alpha: f64, m_beta: f64) -> Self {
        let g = xi - xi_star;
        Self {
            xi,
            xi_star,
            g,
            g_norm: g.norm(),
            center: (xi * m_alpha + xi_star * m_beta) / (m_alpha + m_beta),
        }
    }

    /// Unit vector along g. Requires |g| > 0.
    pub fn direction(&self) -> Vec3 {
        assert!(self.g_norm > 0.0, "coincident velocities have no direction");
        self.g / self.g_norm
    }
}

/// The velocities completing a collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostState {
    pub xi_prime: Vec3,
    pub xi_star_prime: Vec3,
    /// Relative speed of the pair produced by the collision.
    pub g_prime_norm: f64,
}

/// Result of a parametrized collision: open channels carry the post state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Collision {
    Open(PostState),
    Closed,
}

impl Collision {
    pub fn open(self) -> Option<PostState> {
        match self {
            Collision::Open(p) => Some(p),
            Collision::Closed => None,
        }
    }
}

/// Which velocities enter and leave the collision.
///
/// * `Omega`: (ξ, ξ*) → (ξ′, ξ*′)
/// * `SwappedPartner`: (ξ, ξ′) → (ξ*, ξ*′), ξ and ξ* both of species α
/// * `SharedPartner`: (ξ, ξ*′) → (ξ′, ξ*)
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    Omega,
    SwappedPartner,
    SharedPartner,
}

/// Momentum and energy balance of a collision (incoming minus outgoing),
/// with the magnitude used to make them relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationResiduals {
    pub momentum: Vec3,
    /// Balance of m|v|² + 2I summed over the pair.
    pub energy: f64,
    pub momentum_scale: f64,
    pub energy_scale: f64,
}

impl ConservationResiduals {
    /// Largest of the two relative residuals.
    pub fn relative(&self) -> f64 {
        let pm = self.momentum.norm() / self.momentum_scale.max(f64::MIN_POSITIVE);
        let pe = self.energy.abs() / self.energy_scale.max(f64::MIN_POSITIVE);
        pm.max(pe)
    }
}

/// ω-parametrized post-collision velocities.
///
/// # Panics
/// If ω is not a unit vector.
pub fn omega_post_state(mix: &Mixture, pair: &CollisionPair, ch: &CollisionChannel, omega: &Vec3) -> Collision {
    assert!((omega.norm() - 1.0).abs() <= 1e-12, "omega must be a unit vector");
    let (ma, mb) = (mix.mass(ch.alpha), mix.mass(ch.beta));
    let g2 = pair.g_norm * pair.g_norm - 2.0 * ch.delta_i_tilde;
    if g2 <= 0.0 {
        return Collision::Closed;
    }
    let gp = g2.sqrt();
    let center = (pair.xi * ma + pair.xi_star * mb) / (ma + mb);
    Collision::Open(PostState {
        xi_prime: center + omega * (mb / (ma + mb) * gp),
        xi_star_prime: center - omega * (ma / (ma + mb) * gp),
        g_prime_norm: gp,
    })
}

/// Momentum and energy balance of `post` completing `pair` under `pairing`.
pub fn check_conservation(
    mix: &Mixture,
    pair: &CollisionPair,
    post: &PostState,
    ch: &CollisionChannel,
    pairing: Pairing,
) -> ConservationResiduals {
    let (ma, mb) = (mix.mass(ch.alpha), mix.mass(ch.beta));
    let (ia, jb, ka, lb) = (
        mix.energy(ch.alpha, ch.i),
        mix.energy(ch.beta, ch.j),
        mix.energy(ch.alpha, ch.k),
        mix.energy(ch.beta, ch.l),
    );
    // (α in, β in, α out, β out)
    let (a_in, b_in, a_out, b_out) = match pairing {
        Pairing::Omega => (pair.xi, pair.xi_star, post.xi_prime, post.xi_star_prime),
        Pairing::SwappedPartner => (pair.xi, post.xi_prime, pair.xi_star, post.xi_star_prime),
        Pairing::SharedPartner => (pair.xi, post.xi_star_prime, post.xi_prime, pair.xi_star),
    };
    let momentum = a_in * ma + b_in * mb - a_out * ma - b_out * mb;
    let terms = [
        ma * a_in.norm_squared(),
        mb * b_in.norm_squared(),
        2.0 * ia,
        2.0 * jb,
        ma * a_out.norm_squared(),
        mb * b_out.norm_squared(),
        2.0 * ka,
        2.0 * lb,
    ];
    let energy = terms[0] + terms[1] + terms[2] + terms[3] - terms[4] - terms[5] - terms[6] - terms[7];
    ConservationResiduals {
        momentum,
        energy,
        momentum_scale: ma * (a_in.norm() + a_out.norm()) + mb * (b_in.norm() + b_out.norm()),
        energy_scale: terms.iter().sum(),
    }
}

/// Orthonormal basis of the plane orthogonal to ξ − ξ*, identical for both
/// orderings of the pair: the direction is taken from the lexicographically
/// smaller endpoint, and Gram–Schmidt starts from the coordinate axis least
/// aligned with it.
pub fn plane_basis(xi: &Vec3, xi_star: &Vec3) -> (Vec3, Vec3) {
    let lex_less = |a: &Vec3, b: &Vec3| {
        for c in 0..3 {
            if a[c] != b[c] {
                return a[c] < b[c];
            }
        }
        false
    };
    let (lo, hi) = if lex_less(xi, xi_star) { (xi, xi_star) } else { (xi_star, xi) };
    let d = hi - lo;
    let n = d / d.norm();
    let axis = (0..3)
        .min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs()))
        .unwrap_or(0);
    let mut e = Vec3::zeros();
    e[axis] = 1.0;
    let e1 = e - n * n.dot(&e);
    let e1 = e1 / e1.norm();
    let e2 = n.cross(&e1);
    (e1, e2)
}

fn assert_orthogonal(w: &Vec3, n: &Vec3) {
    assert!(
        w.dot(n).abs() <= 1e-9 * (1.0 + w.norm()),
        "w must lie in the plane orthogonal to g"
    );
}

/// w-parametrized collision of the gain term in which the perturbation sits
/// on the second species-α velocity: (ξ, ξ′) → (ξ*, ξ*′), with
/// ξ′ = ξ* + w + χ₋n and ξ*′ = ξ + w + χ₊n.
///
/// # Panics
/// If |g| = 0 or w is not orthogonal to g.
pub fn swapped_plane_post_state(mix: &Mixture, pair: &CollisionPair, ch: &CollisionChannel, w: &Vec3) -> Collision {
    let n = pair.direction();
    assert_orthogonal(w, &n);
    let (ma, mb) = (mix.mass(ch.alpha), mix.mass(ch.beta));
    let g = pair.g_norm;
    // incoming minus outgoing internal energy
    let released = -ch.delta_i;
    let base = released / (ma * g);
    let shift = (ma - mb) / (2.0 * mb) * g;
    let (chi_plus, chi_minus) = (base + shift, base - shift);
    let xi_prime = pair.xi_star + w + n * chi_minus;
    let xi_star_prime = pair.xi + w + n * chi_plus;
    let g_in = pair.xi - xi_prime;
    let g_out2 = g_in.norm_squared() - 2.0 * ch.delta_i_tilde;
    if g_out2 <= 0.0 {
        return Collision::Closed;
    }
    Collision::Open(PostState {
        xi_prime,
        xi_star_prime,
        g_prime_norm: (pair.xi_star - xi_star_prime).norm(),
    })
}

/// Sphere-parametrized collision (ξ, ξ*′) → (ξ′, ξ*) for unequal masses,
/// with g′ = ξ′ − ξ*′ = |g′| ω.
///
/// # Panics
/// If the masses are equal or ω is not a unit vector.
pub fn partner_sphere_post_state(mix: &Mixture, pair: &CollisionPair, ch: &CollisionChannel, omega: &Vec3) -> Collision {
    assert!((omega.norm() - 1.0).abs() <= 1e-12, "omega must be a unit vector");
    let (ma, mb) = (mix.mass(ch.alpha), mix.mass(ch.beta));
    let hat = ch
        .delta_i_hat
        .expect("the sphere parametrization requires unequal masses");
    let gp2 = pair.g_norm * pair.g_norm + 2.0 * hat;
    if gp2 <= 0.0 {
        return Collision::Closed;
    }
    let gp = gp2.sqrt();
    let gab = (pair.xi * ma - pair.xi_star * mb) / (ma - mb);
    Collision::Open(PostState {
        xi_prime: gab - omega * (mb / (ma - mb) * gp),
        xi_star_prime: gab - omega * (ma / (ma - mb) * gp),
        g_prime_norm: gp,
    })
}

/// Plane-parametrized collision (ξ, ξ*′) → (ξ′, ξ*) for equal masses:
/// ξ′ = ξ + w − χn and ξ*′ = ξ* + w − χn.
///
/// # Panics
/// If the masses differ, |g| = 0, or w is not orthogonal to g.
pub fn partner_plane_post_state(
    mix: &Mixture,
    pair: &CollisionPair,
    ch: &CollisionChannel,
    w: &Vec3,
) -> Collision {
    let (ma, mb) = (mix.mass(ch.alpha), mix.mass(ch.beta));
    assert!(ma == mb, "the equal-mass parametrization requires equal masses");
    let n = pair.direction();
    assert_orthogonal(w, &n);
    let chi = ch.delta_i / (ma * pair.g_norm);
    let shift = w - n * chi;
    let xi_prime = pair.xi + shift;
    let xi_star_prime = pair.xi_star + shift;
    let g_in2 = (pair.xi - xi_star_prime).norm_squared();
    if g_in2 <= 2.0 * ch.delta_i_tilde {
        return Collision::Closed;
    }
    Collision::Open(PostState {
        xi_prime,
        xi_star_prime,
        g_prime_norm: (xi_prime - pair.xi_star).norm(),
    })
}

/// ρ = ((√m_α − √m_β)/(√m_α + √m_β))².
pub fn mass_ratio_rho(m_alpha: f64, m_beta: f64) -> f64 {
    let (a, b) = (m_alpha.sqrt(), m_beta.sqrt());
    let r = (a - b) / (a + b);
    r * r
}

/// A collision (ξ, ξ*′) → (ξ′, ξ*) rebuilt from ξ, the unit vector η along
/// ξ − ξ′, the length q = |ξ − ξ′| and the component w̃ of ξ* orthogonal to η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassRatioSample {
    pub m_alpha: f64,
    pub m_beta: f64,
    pub xi: Vec3,
    pub xi_star: Vec3,
    pub eta: Vec3,
    pub q: f64,
    /// Outgoing minus incoming internal energy.
    pub delta_i: f64,
    pub xi_prime: Vec3,
    pub xi_star_prime: Vec3,
}

impl MassRatioSample {
    /// Builds the sample. The component of ξ* along η is fixed by energy
    /// conservation: r* = r − χ + ((m_α − m_β)/(2m_β)) q with r = ξ·η and
    /// χ = ΔI/(m_α q). For q = 0 the collision is trivial and requires ΔI = 0.
    ///
    /// # Panics
    /// If η is not a unit vector, or q = 0 with ΔI ≠ 0.
    pub fn construct(m_alpha: f64, m_beta: f64, xi: Vec3, eta: Vec3, q: f64, delta_i: f64, w_tilde: Vec3) -> Self {
        assert!((eta.norm() - 1.0).abs() <= 1e-12, "eta must be a unit vector");
        let w_perp = w_tilde - eta * eta.dot(&w_tilde);
        if q == 0.0 {
            assert!(delta_i == 0.0, "a grazing sample cannot exchange internal energy");
            let xi_star = w_tilde;
            return Self {
                m_alpha,
                m_beta,
                xi,
                xi_star,
                eta,
                q,
                delta_i,
                xi_prime: xi,
                xi_star_prime: xi_star,
            };
        }
        let r = xi.dot(&eta);
        let chi = delta_i / (m_alpha * q);
        let r_star = r - chi + (m_alpha - m_beta) / (2.0 * m_beta) * q;
        let xi_star = w_perp + eta * r_star;
        Self {
            m_alpha,
            m_beta,
            xi,
            xi_star,
            eta,
            q,
            delta_i,
            xi_prime: xi - eta * q,
            xi_star_prime: xi_star - eta * (m_alpha / m_beta * q),
        }
    }
}

/// m_α|ξ′|² + m_β|ξ*′|² − ρ(m_α|ξ|² + m_β|ξ*|²) − (1+ρ)((m_α−m_β)/(m_α+m_β))ΔI.
pub fn mass_ratio_gap_with_rho(s: &MassRatioSample, rho: f64) -> f64 {
    let (ma, mb) = (s.m_alpha, s.m_beta);
    ma * s.xi_prime.norm_squared() + mb * s.xi_star_prime.norm_squared()
        - rho * (ma * s.xi.norm_squared() + mb * s.xi_star.norm_squared())
        - (1.0 + rho) * (ma - mb) / (ma + mb) * s.delta_i
}

/// [`mass_ratio_gap_with_rho`] at the closed-form ρ.
pub fn mass_ratio_gap(s: &MassRatioSample) -> f64 {
    mass_ratio_gap_with_rho(s, mass_ratio_rho(s.m_alpha, s.m_beta))
}
