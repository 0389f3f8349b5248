//! Reference computations that share no code path with the solver.

use kinmix_core::{RiemannState, SymMat};
use nalgebra::{DMatrix, DVector};

/// Equality-constrained least squares `min Σ (G_j - G̃_j)² / h_j²` subject to
/// `Σ_j w_j φ_r(v_j) G_j = a_r`, solved through the full KKT system.
pub fn kkt_projection(g_tilde: &[f64], h: &[f64], constraints: &[Vec<f64>], a: &[f64]) -> Vec<f64> {
    let m = g_tilde.len();
    let k = constraints.len();
    let mut kkt = DMatrix::<f64>::zeros(m + k, m + k);
    let mut rhs = DVector::<f64>::zeros(m + k);
    for j in 0..m {
        let d = 2.0 / (h[j] * h[j]);
        kkt[(j, j)] = d;
        rhs[j] = d * g_tilde[j];
    }
    for (r, row) in constraints.iter().enumerate() {
        for j in 0..m {
            kkt[(m + r, j)] = row[j];
            kkt[(j, m + r)] = row[j];
        }
        rhs[m + r] = a[r];
    }
    let sol = kkt.full_piv_lu().solve(&rhs).expect("KKT system is nonsingular");
    sol.iter().take(m).copied().collect()
}

/// Second moment after relaxation from the unfactored implicit relation
/// `Σ = Σ* + (λΔt/ε) (ρ(τ(Σ) + u⊗u) - Σ)` with
/// `τ(Σ) = ν (Σ/ρ - u⊗u) + (1 - ν) (T n / ρ) I`, iterated to a fixed point.
#[allow(clippy::too_many_arguments)]
pub fn sigma_fixed_point(
    sigma_star: &SymMat,
    rho: f64,
    n: f64,
    u: &[f64],
    temperature: f64,
    lambda: f64,
    dt: f64,
    eps: f64,
    nu: f64,
) -> SymMat {
    let dim = u.len();
    let k = lambda * dt / eps;
    let mut sigma = *sigma_star;
    for _ in 0..500 {
        let next = SymMat::from_fn(dim, |i, j| {
            let uu = u[i] * u[j];
            let theta = sigma.get(i, j) / rho - uu;
            let iso = if i == j { (1.0 - nu) * temperature * n / rho } else { 0.0 };
            let target = rho * (nu * theta + iso + uu);
            (sigma_star.get(i, j) + k * target) / (1.0 + k)
        });
        let change = (next - sigma).max_abs();
        sigma = next;
        if change <= 1e-17 * sigma.max_abs() {
            break;
        }
    }
    sigma
}

/// Star pressure of the ideal-gas Riemann problem by plain bisection on the
/// velocity jump `u_R - u_L + f_L(p) + f_R(p)`.
pub fn bisection_star_pressure(l: &RiemannState, r: &RiemannState, gamma: f64) -> f64 {
    let side = |p: f64, s: &RiemannState| {
        let c = (gamma * s.p / s.rho).sqrt();
        if p > s.p {
            let a = 2.0 / ((gamma + 1.0) * s.rho);
            let b = (gamma - 1.0) / (gamma + 1.0) * s.p;
            (p - s.p) * (a / (p + b)).sqrt()
        } else {
            2.0 * c / (gamma - 1.0) * ((p / s.p).powf((gamma - 1.0) / (2.0 * gamma)) - 1.0)
        }
    };
    let jump = |p: f64| side(p, l) + side(p, r) + r.u - l.u;
    let (mut lo, mut hi) = (1e-14, 10.0 * l.p.max(r.p));
    while jump(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if jump(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mixture equilibrium `(u, T)` reached from a set of Maxwellian components
/// `(m_p, n, u, T)`: shared velocity and temperature with the same totals.
pub fn mixture_equilibrium(components: &[(f64, f64, Vec<f64>, f64)]) -> (Vec<f64>, f64) {
    let dim = components[0].2.len();
    let (mut rho, mut n, mut energy) = (0.0, 0.0, 0.0);
    let mut mom = vec![0.0; dim];
    for (m, nc, u, t) in components {
        rho += m * nc;
        n += nc;
        let u2: f64 = u.iter().map(|x| x * x).sum();
        energy += 0.5 * m * nc * u2 + 0.5 * dim as f64 * nc * t;
        for d in 0..dim {
            mom[d] += m * nc * u[d];
        }
    }
    let u: Vec<f64> = mom.iter().map(|p| p / rho).collect();
    let u2: f64 = u.iter().map(|x| x * x).sum();
    let t = (energy - 0.5 * rho * u2) / (0.5 * dim as f64 * n);
    (u, t)
}

/// Cell averages of the exact density on `cells` uniform cells of `[0, 1]`,
/// with the discontinuity at `interface`, by midpoint sub-sampling.
pub fn exact_density_averages(
    l: &RiemannState,
    r: &RiemannState,
    gamma: f64,
    interface: f64,
    time: f64,
    cells: usize,
) -> Vec<f64> {
    const SUB: usize = 64;
    let sol = kinmix_core::RiemannSolution::new(*l, *r, gamma).expect("admissible states");
    let dx = 1.0 / cells as f64;
    (0..cells)
        .map(|i| {
            (0..SUB)
                .map(|s| {
                    let x = (i as f64 + (s as f64 + 0.5) / SUB as f64) * dx;
                    sol.sample((x - interface) / time).rho
                })
                .sum::<f64>()
                / SUB as f64
        })
        .collect()
}
