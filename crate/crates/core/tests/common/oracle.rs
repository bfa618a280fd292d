//! Dense reference assemblies written from cell coordinates, used as
//! oracles for the sparse and spectral solves.

use super::{dense, lu_solve, ops, random_vec, rel_err, rng};
use nalgebra::DMatrix;
use nsfp_core::grid::BoundaryCondition;
use nsfp_core::linalg::SolverSettings;
use nsfp_core::model::{eos_pressure, ModelParams};
use nsfp_core::ops::DiscreteOperators;
use nsfp_core::regularization::CutoffParams;
use nsfp_core::solvers::*;
use nsfp_core::stress::{PsiField, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const BCS: [BoundaryCondition; 2] = [BoundaryCondition::Periodic, BoundaryCondition::NoSlipNeumann];

pub fn tight() -> SolverSettings {
    SolverSettings {
        rel_tol: 1e-14,
        max_iter: Some(2000),
    }
}

/// Grid geometry for the dense oracles, written from cell coordinates.
pub struct Geo {
    pub n: usize,
    pub h: f64,
    pub periodic: bool,
}

impl Geo {
    pub fn of(o: &DiscreteOperators) -> Self {
        assert_eq!(o.omega.nx, o.omega.ny);
        Geo {
            n: o.omega.nx,
            h: o.omega.lx / o.omega.nx as f64,
            periodic: o.omega.bc == BoundaryCondition::Periodic,
        }
    }

    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn nb(&self, c: usize, dir: usize, step: isize) -> Option<usize> {
        let n = self.n as isize;
        let (mut ix, mut iy) = ((c / self.n) as isize, (c % self.n) as isize);
        if dir == 0 {
            ix += step;
        } else {
            iy += step;
        }
        if !(0..n).contains(&ix) || !(0..n).contains(&iy) {
            if !self.periodic {
                return None;
            }
            ix = ix.rem_euclid(n);
            iy = iy.rem_euclid(n);
        }
        Some((ix * n + iy) as usize)
    }

    /// (l, r, dir) for every face, left to right.
    pub fn faces(&self) -> Vec<(usize, usize, usize)> {
        let mut f = Vec::new();
        for c in 0..self.cells() {
            for dir in 0..2 {
                if let Some(r) = self.nb(c, dir, 1) {
                    f.push((c, r, dir));
                }
            }
        }
        f
    }

    /// Dense Σ_f (φ_r − φ_l)(ψ_r − ψ_l) on a square grid (a_f/h = 1), with
    /// the no-slip wall terms when `walls`.
    pub fn stiffness(&self, walls: bool) -> DMatrix<f64> {
        let mut k = dense(self.cells());
        for (l, r, _) in self.faces() {
            k[(l, l)] += 1.0;
            k[(r, r)] += 1.0;
            k[(l, r)] -= 1.0;
            k[(r, l)] -= 1.0;
        }
        if walls && !self.periodic {
            for c in 0..self.cells() {
                for dir in 0..2 {
                    for s in [-1, 1] {
                        if self.nb(c, dir, s).is_none() {
                            k[(c, c)] += 2.0;
                        }
                    }
                }
            }
        }
        k
    }

    /// Central gradient [∂x ux, ∂y ux, ∂x uy, ∂y uy] with odd wall ghosts.
    pub fn grad(&self, ux: &[f64], uy: &[f64], c: usize) -> [f64; 4] {
        let val = |u: &[f64], dir: usize, s: isize| match self.nb(c, dir, s) {
            Some(m) => u[m],
            None => -u[c],
        };
        let d = |u: &[f64], dir: usize| (val(u, dir, 1) - val(u, dir, -1)) / (2.0 * self.h);
        [d(ux, 0), d(ux, 1), d(uy, 0), d(uy, 1)]
    }

    /// Cell divergence of the face-averaged normal velocity.
    pub fn div(&self, ux: &[f64], uy: &[f64], c: usize) -> f64 {
        let mut s = 0.0;
        for (dir, u) in [ux, uy].into_iter().enumerate() {
            for st in [-1isize, 1] {
                if let Some(m) = self.nb(c, dir, st) {
                    s += st as f64 * 0.5 * (u[c] + u[m]) / self.h;
                }
            }
        }
        s
    }
}

pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

// ---------------------------------------------------------------- continuity

pub fn dense_continuity_step(g: &Geo, rho: &[f64], ux: &[f64], uy: &[f64], alpha: f64, tau: f64) -> Vec<f64> {
    let n = g.cells();
    let v = g.h * g.h;
    let mut a = g.stiffness(false) * (tau * alpha);
    for c in 0..n {
        a[(c, c)] += v;
    }
    for (l, r, dir) in g.faces() {
        let u = if dir == 0 { 0.5 * (ux[l] + ux[r]) } else { 0.5 * (uy[l] + uy[r]) };
        // flux l → r = h(u⁺ρ_l + u⁻ρ_r)
        a[(l, l)] += tau * g.h * u.max(0.0);
        a[(l, r)] += tau * g.h * u.min(0.0);
        a[(r, l)] -= tau * g.h * u.max(0.0);
        a[(r, r)] -= tau * g.h * u.min(0.0);
    }
    let b: Vec<f64> = rho.iter().map(|r| v * r).collect();
    lu_solve(a, &b)
}

pub fn random_params(r: &mut ChaCha8Rng) -> ModelParams {
    ModelParams {
        dt: r.gen_range(0.005..0.05),
        alpha: r.gen_range(0.0..0.1),
        kappa: r.gen_range(0.0..0.1),
        mu_s: r.gen_range(0.5..2.0),
        mu_b: r.gen_range(0.0..1.0),
        eps: r.gen_range(0.01..0.2),
        z_int: r.gen_range(0.05..0.5),
        lambda: r.gen_range(0.2..2.0),
        ..ModelParams::default()
    }
}


pub struct MomentumCase {
    pub rho_n: Vec<f64>,
    pub rho_prev: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub p_bar: Vec<f64>,
    pub tau1: Vec<Tensor>,
    pub varrho: Vec<f64>,
    pub varrho_beta: Vec<f64>,
    pub force: Vec<[f64; 2]>,
}

impl MomentumCase {
    pub fn random(r: &mut ChaCha8Rng, n: usize, faces: usize) -> Self {
        MomentumCase {
            rho_n: random_vec(r, n, 0.3, 2.0),
            rho_prev: random_vec(r, n, 0.3, 2.0),
            ux: random_vec(r, n, -1.0, 1.0),
            uy: random_vec(r, n, -1.0, 1.0),
            p_bar: random_vec(r, n, 0.0, 3.0),
            tau1: (0..n).map(|_| core::array::from_fn(|_| r.gen_range(-1.0..1.0))).collect(),
            varrho: random_vec(r, n, 0.5, 1.5),
            varrho_beta: random_vec(r, faces, 0.5, 1.5),
            force: (0..n).map(|_| [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]).collect(),
        }
    }

    pub fn data(&self) -> MomentumData<'_> {
        MomentumData {
            rho_n: &self.rho_n,
            rho_prev: &self.rho_prev,
            ux_prev: &self.ux,
            uy_prev: &self.uy,
            p_bar: &self.p_bar,
            tau1: &self.tau1,
            varrho: &self.varrho,
            varrho_beta: &self.varrho_beta,
            force: &self.force,
            pressure_lag: None,
        }
    }
}

/// The momentum bilinear form b(u, w) written cell by cell.
pub fn momentum_form(g: &Geo, m: &MomentumCase, p: &ModelParams, u: &[f64], w: &[f64]) -> f64 {
    let n = g.cells();
    let v = g.h * g.h;
    let (ux, uy) = u.split_at(n);
    let (wx, wy) = w.split_at(n);
    let k = g.stiffness(true);
    let kform = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[i] * k[(i, j)] * b[j];
            }
        }
        s
    };
    let mut s = 0.0;
    for c in 0..n {
        s += v * 0.5 * (m.rho_n[c] + m.rho_prev[c]) * (ux[c] * wx[c] + uy[c] * wy[c]);
        s += p.dt * p.mu_b * v * g.div(ux, uy, c) * g.div(wx, wy, c);
        let gu = g.grad(ux, uy, c);
        let gw = g.grad(wx, wy, c);
        let a = [m.rho_prev[c] * m.ux[c], m.rho_prev[c] * m.uy[c]];
        let adv_u = [a[0] * gu[0] + a[1] * gu[1], a[0] * gu[2] + a[1] * gu[3]];
        let adv_w = [a[0] * gw[0] + a[1] * gw[1], a[0] * gw[2] + a[1] * gw[3]];
        s += 0.5 * p.dt * v * (adv_u[0] * wx[c] + adv_u[1] * wy[c] - adv_w[0] * ux[c] - adv_w[1] * uy[c]);
    }
    s + p.dt * 0.5 * p.mu_s * (kform(ux, wx) + kform(uy, wy))
}

/// The momentum load ℓ(w).
pub fn momentum_load(g: &Geo, m: &MomentumCase, p: &ModelParams, w: &[f64]) -> f64 {
    let n = g.cells();
    let v = g.h * g.h;
    let (wx, wy) = w.split_at(n);
    let mut s = 0.0;
    for c in 0..n {
        s += v * m.rho_prev[c] * (m.ux[c] * wx[c] + m.uy[c] * wy[c]);
        s += p.dt * v * m.rho_n[c] * (m.force[c][0] * wx[c] + m.force[c][1] * wy[c]);
        let gw = g.grad(wx, wy, c);
        let t = m.tau1[c];
        let pb = m.p_bar[c];
        let st = [t[0] - pb, t[1], t[2], t[3] - pb];
        s -= p.dt * v * (0..4).map(|k| st[k] * gw[k]).sum::<f64>();
    }
    for (i, (l, r, dir)) in g.faces().into_iter().enumerate() {
        let wn = if dir == 0 { wx[l] + wx[r] } else { wy[l] + wy[r] };
        s -= p.z_int * p.dt * g.h * m.varrho_beta[i] * (m.varrho[r] - m.varrho[l]) * wn;
    }
    s
}


/// Dense v·W + c_x S_x⊗W + c_q I⊗S_q.
pub fn dense_fp(g: &Geo, o: &DiscreteOperators, c_x: f64, c_q: f64) -> DMatrix<f64> {
    let nq = o.nq();
    let n = g.cells();
    let v = g.h * g.h;
    let w = &o.cfg.weights;
    let sx = g.stiffness(false);
    let mut a = dense(n * nq);
    for c in 0..n {
        for d in 0..n {
            if sx[(c, d)] == 0.0 {
                continue;
            }
            for j in 0..nq {
                a[(c * nq + j, d * nq + j)] += c_x * sx[(c, d)] * w[j];
            }
        }
        for j in 0..nq {
            a[(c * nq + j, c * nq + j)] += v * w[j];
        }
        for f in &o.q_faces {
            let s = c_q * f.weight / (f.dist * f.dist);
            let (ia, ib) = (c * nq + f.a, c * nq + f.b);
            a[(ia, ia)] += s;
            a[(ib, ib)] += s;
            a[(ia, ib)] -= s;
            a[(ib, ia)] -= s;
        }
    }
    a
}


/// Worst relative error of the continuity slab (every level and p̄) against
/// the dense implicit-Euler oracle, over 20 random instances per BC.
pub fn continuity_sweep(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for bc in BCS {
        let o = ops(4, 4, 4, 8, bc);
        let g = Geo::of(&o);
        let n = o.cells();
        for _ in 0..20 {
            let p = random_params(&mut r);
            let m_sub = r.gen_range(1..5);
            let rho = random_vec(&mut r, n, 0.2, 2.0);
            let ux = random_vec(&mut r, n, -1.0, 1.0);
            let uy = random_vec(&mut r, n, -1.0, 1.0);
            let slab = continuity_substep(&rho, &ux, &uy, &p, m_sub, &o, &tight()).unwrap();
            assert_eq!(slab.levels.len(), m_sub + 1);
            let mut want = rho.clone();
            let mut p_bar = vec![0.0; n];
            for s in 0..m_sub {
                want = dense_continuity_step(&g, &want, &ux, &uy, p.alpha, p.dt / m_sub as f64);
                worst = worst.max(rel_err(&slab.levels[s + 1], &want));
                for c in 0..n {
                    p_bar[c] += eos_pressure(want[c], &p).unwrap() / m_sub as f64;
                }
            }
            worst = worst.max(rel_err(&slab.p_bar, &p_bar));
        }
    }
    worst
}

/// Momentum solve against LU on the matrix of the bilinear form.
pub fn momentum_sweep(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for bc in BCS {
        let o = ops(4, 4, 4, 8, bc);
        let g = Geo::of(&o);
        let n = o.cells();
        for f in o.faces.iter().zip(g.faces()) {
            assert_eq!((f.0.l, f.0.r, f.0.dir), f.1);
        }
        for _ in 0..20 {
            let p = random_params(&mut r);
            let m = MomentumCase::random(&mut r, n, o.faces.len());
            let mut a = dense(2 * n);
            let mut b = vec![0.0; 2 * n];
            for i in 0..2 * n {
                let ei = unit(2 * n, i);
                b[i] = momentum_load(&g, &m, &p, &ei);
                for j in 0..2 * n {
                    a[(i, j)] = momentum_form(&g, &m, &p, &unit(2 * n, j), &ei);
                }
            }
            let want = lu_solve(a, &b);
            let (ux, uy) = momentum_solve(&m.data(), &p, &o, &tight()).unwrap();
            let got: Vec<f64> = ux.into_iter().chain(uy).collect();
            worst = worst.max(rel_err(&got, &want));
        }
    }
    worst
}

/// Fokker–Planck spectral solve against LU on the assembled matrix.
pub fn fokker_planck_sweep(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for bc in BCS {
        let o = ops(4, 4, 4, 8, bc);
        let g = Geo::of(&o);
        let (n, nq) = (o.cells(), o.nq());
        for _ in 0..20 {
            let p = random_params(&mut r);
            let cut = CutoffParams::new(p.l_cut, 0.0).unwrap();
            let prev = PsiField::new(random_vec(&mut r, n * nq, 0.2, 3.0), n, nq).unwrap();
            let lag = PsiField::new(random_vec(&mut r, n * nq, 0.2, 3.0), n, nq).unwrap();
            let ux = random_vec(&mut r, n, -1.0, 1.0);
            let uy = random_vec(&mut r, n, -1.0, 1.0);
            let rhs = fokker_planck_rhs(&prev, &lag, &ux, &uy, &p, &cut, &o).unwrap();
            let (cx, cq) = fp_coefficients(&p, &o);
            let want = lu_solve(dense_fp(&g, &o, cx, cq), &rhs);
            let got = fokker_planck_solve(&prev, &lag, &ux, &uy, &p, &cut, &o).unwrap();
            worst = worst.max(rel_err(&got.values, &want));
        }
    }
    worst
}

/// The three initial projections (ρ₀, u₀, ψ̂₀) against dense LU.
pub fn initial_projection_sweep(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for bc in BCS {
        let o = ops(4, 4, 4, 8, bc);
        let g = Geo::of(&o);
        let (n, nq) = (o.cells(), o.nq());
        let v = g.h * g.h;
        for _ in 0..20 {
            let alpha = r.gen_range(0.001..0.5);
            let rho0 = random_vec(&mut r, n, 0.0, 2.0);
            let mut a = g.stiffness(false) * alpha;
            for c in 0..n {
                a[(c, c)] += v;
            }
            let b: Vec<f64> = rho0.iter().map(|x| v * x).collect();
            let got = project_initial_density(&rho0, alpha, &o, &tight()).unwrap();
            worst = worst.max(rel_err(&got, &lu_solve(a, &b)));

            let dt = r.gen_range(0.001..0.1);
            let rho = random_vec(&mut r, n, 0.2, 2.0);
            let ux0 = random_vec(&mut r, n, -1.0, 1.0);
            let uy0 = random_vec(&mut r, n, -1.0, 1.0);
            let mut a = g.stiffness(true) * dt;
            for c in 0..n {
                a[(c, c)] += v * rho[c];
            }
            let (ux, uy) = project_initial_velocity(&ux0, &uy0, &rho, dt, &o, &tight()).unwrap();
            for (got, u0) in [(ux, ux0), (uy, uy0)] {
                let b: Vec<f64> = (0..n).map(|c| v * rho[c] * u0[c]).collect();
                worst = worst.max(rel_err(&got, &lu_solve(a.clone(), &b)));
            }

            let l = r.gen_range(1.5..4.0);
            let psi0 = PsiField::new(random_vec(&mut r, n * nq, 0.0, 5.0), n, nq).unwrap();
            let b: Vec<f64> = (0..n * nq).map(|i| v * o.cfg.weights[i % nq] * psi0.values[i].min(l)).collect();
            let got = smooth_initial_psi(&psi0, l, dt, &o).unwrap();
            worst = worst.max(rel_err(&got.values, &lu_solve(dense_fp(&g, &o, dt, dt * v), &b)));
            // maximum principle: values stay in [0, L]
            assert!(got.min() >= -1e-12 && got.max() <= l + 1e-12);
        }
    }
    worst
}
