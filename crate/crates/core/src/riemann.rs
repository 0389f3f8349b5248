//! Exact solution of the Riemann problem for the 1D γ-law Euler equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primitive state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannState {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl RiemannState {
    pub fn new(rho: f64, u: f64, p: f64) -> Self {
        Self { rho, u, p }
    }

    pub fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }

    /// Conserved variables `(ρ, ρu, E)`.
    pub fn conserved(&self, gamma: f64) -> [f64; 3] {
        [
            self.rho,
            self.rho * self.u,
            0.5 * self.rho * self.u * self.u + self.p / (gamma - 1.0),
        ]
    }

    /// Physical flux `(ρu, ρu² + p, (E + p)u)`.
    pub fn flux(&self, gamma: f64) -> [f64; 3] {
        let e = self.conserved(gamma)[2];
        [self.rho * self.u, self.rho * self.u * self.u + self.p, (e + self.p) * self.u]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Rarefaction,
    Shock,
}

/// Star-region solution and the wave on each side of the contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarRegion {
    pub p: f64,
    pub u: f64,
    pub rho_left: f64,
    pub rho_right: f64,
    pub left_wave: Wave,
    pub right_wave: Wave,
    /// Residual `|f(p*)|` of the pressure function at the returned root.
    pub residual: f64,
}

/// Pressure function of one side, `f_K(p)`, and its derivative.
pub fn pressure_function(p: f64, side: &RiemannState, gamma: f64) -> (f64, f64) {
    let c = side.sound_speed(gamma);
    if p > side.p {
        let a = 2.0 / ((gamma + 1.0) * side.rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * side.p;
        let q = (a / (p + b)).sqrt();
        ((p - side.p) * q, q * (1.0 - 0.5 * (p - side.p) / (b + p)))
    } else {
        let ratio = p / side.p;
        let f = 2.0 * c / (gamma - 1.0) * (ratio.powf((gamma - 1.0) / (2.0 * gamma)) - 1.0);
        let df = ratio.powf(-(gamma + 1.0) / (2.0 * gamma)) / (side.rho * c);
        (f, df)
    }
}

const TOL: f64 = 1e-12;

fn validate(s: &RiemannState, gamma: f64) -> Result<()> {
    if !(s.rho > 0.0 && s.p > 0.0 && s.u.is_finite()) {
        return Err(Error::domain(format!("Riemann state needs positive density and pressure: {s:?}")));
    }
    if !(gamma > 1.0) {
        return Err(Error::domain(format!("gamma must exceed 1, got {gamma}")));
    }
    Ok(())
}

/// Star pressure by safeguarded Newton iteration with bisection fallback.
pub fn star_region(left: &RiemannState, right: &RiemannState, gamma: f64) -> Result<StarRegion> {
    validate(left, gamma)?;
    validate(right, gamma)?;
    let (cl, cr) = (left.sound_speed(gamma), right.sound_speed(gamma));
    let du = right.u - left.u;
    if 2.0 / (gamma - 1.0) * (cl + cr) <= du {
        return Err(Error::RiemannVacuum);
    }
    let f = |p: f64| {
        let (fl, dl) = pressure_function(p, left, gamma);
        let (fr, dr) = pressure_function(p, right, gamma);
        (fl + fr + du, dl + dr)
    };

    // f is increasing and concave in p, negative as p -> 0 without vacuum.
    let mut lo = 0.0;
    let mut hi = left.p.max(right.p);
    while f(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric("star pressure not bracketed".into()));
        }
    }
    let z = (gamma - 1.0) / (2.0 * gamma);
    let guess = ((cl + cr - 0.5 * (gamma - 1.0) * du) / (cl / left.p.powf(z) + cr / right.p.powf(z))).powf(1.0 / z);
    let mut p = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };

    for _ in 0..200 {
        let (fv, dv) = f(p);
        if fv.abs() <= TOL {
            break;
        }
        if fv < 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let newton = p - fv / dv;
        let next = if newton > lo && newton < hi && dv > 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - p).abs() <= 4.0 * f64::EPSILON * p {
            p = next;
            break;
        }
        p = next;
    }
    let residual = f(p).0.abs();
    if !(residual <= TOL * 10.0) || !p.is_finite() {
        return Err(Error::Numeric(format!("star pressure did not converge (|f| = {residual:e})")));
    }

    let (fl, _) = pressure_function(p, left, gamma);
    let (fr, _) = pressure_function(p, right, gamma);
    let u = 0.5 * (left.u + right.u) + 0.5 * (fr - fl);
    let g1 = (gamma - 1.0) / (gamma + 1.0);
    let star_rho = |side: &RiemannState| {
        if p > side.p {
            let r = p / side.p;
            side.rho * (r + g1) / (g1 * r + 1.0)
        } else {
            side.rho * (p / side.p).powf(1.0 / gamma)
        }
    };
    let wave = |side: &RiemannState| if p > side.p { Wave::Shock } else { Wave::Rarefaction };
    Ok(StarRegion {
        p,
        u,
        rho_left: star_rho(left),
        rho_right: star_rho(right),
        left_wave: wave(left),
        right_wave: wave(right),
        residual,
    })
}

/// Exact solution of a Riemann problem, sampled on rays `ξ = x/t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannSolution {
    pub left: RiemannState,
    pub right: RiemannState,
    pub gamma: f64,
    pub star: StarRegion,
}

impl RiemannSolution {
    pub fn new(left: RiemannState, right: RiemannState, gamma: f64) -> Result<Self> {
        let star = star_region(&left, &right, gamma)?;
        Ok(Self {
            left,
            right,
            gamma,
            star,
        })
    }

    /// Shock speed on the given side, if that wave is a shock.
    pub fn shock_speed(&self, right_side: bool) -> Option<f64> {
        let g = self.gamma;
        let s = &self.star;
        let (side, wave, sign) = if right_side {
            (&self.right, s.right_wave, 1.0)
        } else {
            (&self.left, s.left_wave, -1.0)
        };
        (wave == Wave::Shock).then(|| {
            let c = side.sound_speed(g);
            side.u + sign * c * ((g + 1.0) / (2.0 * g) * s.p / side.p + (g - 1.0) / (2.0 * g)).sqrt()
        })
    }

    pub fn sample(&self, xi: f64) -> RiemannState {
        let g = self.gamma;
        let s = &self.star;
        let g1 = (g - 1.0) / (g + 1.0);
        if xi <= s.u {
            let l = &self.left;
            let cl = l.sound_speed(g);
            match s.left_wave {
                Wave::Shock => {
                    if xi <= self.shock_speed(false).unwrap() {
                        *l
                    } else {
                        RiemannState::new(s.rho_left, s.u, s.p)
                    }
                }
                Wave::Rarefaction => {
                    let c_star = cl * (s.p / l.p).powf((g - 1.0) / (2.0 * g));
                    if xi <= l.u - cl {
                        *l
                    } else if xi >= s.u - c_star {
                        RiemannState::new(s.rho_left, s.u, s.p)
                    } else {
                        let c = 2.0 / (g + 1.0) * cl + g1 * (l.u - xi);
                        let u = 2.0 / (g + 1.0) * (cl + 0.5 * (g - 1.0) * l.u + xi);
                        let rho = l.rho * (c / cl).powf(2.0 / (g - 1.0));
                        RiemannState::new(rho, u, l.p * (c / cl).powf(2.0 * g / (g - 1.0)))
                    }
                }
            }
        } else {
            let r = &self.right;
            let cr = r.sound_speed(g);
            match s.right_wave {
                Wave::Shock => {
                    if xi >= self.shock_speed(true).unwrap() {
                        *r
                    } else {
                        RiemannState::new(s.rho_right, s.u, s.p)
                    }
                }
                Wave::Rarefaction => {
                    let c_star = cr * (s.p / r.p).powf((g - 1.0) / (2.0 * g));
                    if xi >= r.u + cr {
                        *r
                    } else if xi <= s.u + c_star {
                        RiemannState::new(s.rho_right, s.u, s.p)
                    } else {
                        let c = 2.0 / (g + 1.0) * cr - g1 * (r.u - xi);
                        let u = 2.0 / (g + 1.0) * (-cr + 0.5 * (g - 1.0) * r.u + xi);
                        let rho = r.rho * (c / cr).powf(2.0 / (g - 1.0));
                        RiemannState::new(rho, u, r.p * (c / cr).powf(2.0 * g / (g - 1.0)))
                    }
                }
            }
        }
    }
}

/// Solution at similarity coordinate `xi = x / t`.
pub fn exact_riemann(left: &RiemannState, right: &RiemannState, gamma: f64, xi: f64) -> Result<RiemannState> {
    Ok(RiemannSolution::new(*left, *right, gamma)?.sample(xi))
}
