//! Discrete operators on Ω and D.
//!
//! On Ω, scalar gradients live on faces, `(φ_r − φ_l)/h`, and the divergence
//! of face fluxes lives on cells; with the dual volume h_x·h_y on faces the
//! pair is exactly skew-adjoint. Velocities are cell-centred; their gradient
//! is the central difference with odd ghost values at no-slip walls, which
//! reproduces the face-average divergence exactly.
//!
//! On D (one spring), the q-flux faces are the radial faces between
//! neighbouring shells and the angular faces between neighbouring sectors.
//! Each face carries a flux weight w_f ≈ ∫ M over its dual cell, a distance,
//! and the tensor n_f ⊗ q_f used by the drag term. Nothing crosses ∂D, so the
//! no-flux condition there is built in.
//!
//! The implicit Fokker-Planck matrix `v·(I⊗W) + c_x (S_x⊗W) + c_q (I⊗S_q)` is
//! inverted exactly by fast diagonalization: S_x factors over the two axes,
//! and S_q decouples into angular Fourier modes, each a small generalized
//! eigenproblem in the radial index.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::SymmetricEigen;
use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, ConfigGrid, Face, OmegaGrid};
use crate::math::{cos, sin, sqrt};
use crate::model::{boltzmann_factor, ChainParams, ModelParams};

/// A q-direction flux face between nodes `a` and `b` (direction a → b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QFace {
    pub a: usize,
    pub b: usize,
    /// Flux weight w_f.
    pub weight: f64,
    pub dist: f64,
    /// n_f ⊗ q_f, row-major.
    pub nq: [f64; 4],
}

impl QFace {
    /// w_f / dist², the stiffness coefficient.
    pub fn stiffness(&self) -> f64 {
        self.weight / (self.dist * self.dist)
    }

    /// w_f / dist, the coefficient of a difference in a flux.
    pub fn flux_coeff(&self) -> f64 {
        self.weight / self.dist
    }
}

/// Eigen-factorization of the x and q stiffness operators.
#[derive(Debug, Clone)]
struct Spectral {
    qx: Vec<f64>,
    lx: Vec<f64>,
    qy: Vec<f64>,
    ly: Vec<f64>,
    phi: Vec<f64>,
    ym: Vec<Vec<f64>>,
    mu: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    pub omega: OmegaGrid,
    pub cfg: ConfigGrid,
    pub faces: Vec<Face>,
    pub q_faces: Vec<QFace>,
    /// (1/4λ) A_11.
    pub q_diffusion: f64,
    spectral: Spectral,
}

fn graph_laplacian_1d(n: usize, periodic: bool) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    let mut link = |i: usize, j: usize| {
        a[i * n + i] += 1.0;
        a[j * n + j] += 1.0;
        a[i * n + j] -= 1.0;
        a[j * n + i] -= 1.0;
    };
    for i in 0..n - 1 {
        link(i, i + 1);
    }
    if periodic {
        link(n - 1, 0);
    }
    a
}

/// Builds the q-flux faces of a single spring grid.
fn build_q_faces(cfg: &ConfigGrid, chain: &ChainParams) -> Vec<QFace> {
    let g = &cfg.springs[0];
    let nt = g.n_theta;
    let dth = g.dtheta();
    let z = chain.partition(0) * g.raw_sum;
    let mut faces = Vec::with_capacity(2 * g.nodes());
    for a in 0..g.n_r {
        for c in 0..nt {
            let j = a * nt + c;
            if a + 1 < g.n_r {
                let rf = g.r_edges[a + 1];
                let dist = g.r_nodes[a + 1] - g.r_nodes[a];
                let m = boltzmann_factor(rf * rf, g.b) / z;
                let t = g.theta_nodes[c];
                let e = [cos(t), sin(t)];
                faces.push(QFace {
                    a: j,
                    b: (a + 1) * nt + c,
                    weight: dth * m * rf * dist,
                    dist,
                    nq: [rf * e[0] * e[0], rf * e[0] * e[1], rf * e[1] * e[0], rf * e[1] * e[1]],
                });
            }
            let ra = g.r_nodes[a];
            let tf = (c + 1) as f64 * dth;
            let er = [cos(tf), sin(tf)];
            let et = [-sin(tf), cos(tf)];
            faces.push(QFace {
                a: j,
                b: a * nt + (c + 1) % nt,
                weight: g.shell_weight[a],
                dist: ra * dth,
                nq: [
                    ra * et[0] * er[0],
                    ra * et[0] * er[1],
                    ra * et[1] * er[0],
                    ra * et[1] * er[1],
                ],
            });
        }
    }
    faces
}

fn build_spectral(omega: &OmegaGrid, cfg: &ConfigGrid, q_faces: &[QFace]) -> Spectral {
    let periodic = omega.bc == BoundaryCondition::Periodic;
    let ex = SymmetricEigen::new(&graph_laplacian_1d(omega.nx, periodic), omega.nx);
    let ey = SymmetricEigen::new(&graph_laplacian_1d(omega.ny, periodic), omega.ny);
    let g = &cfg.springs[0];
    let (nr, nt) = (g.n_r, g.n_theta);
    let et = SymmetricEigen::new(&graph_laplacian_1d(nt, true), nt);
    // radial tridiagonal part and angular coefficient per shell
    let mut tr = vec![0.0; nr * nr];
    let mut kappa = vec![0.0; nr];
    for f in q_faces {
        let (aa, ca) = (f.a / nt, f.a % nt);
        let ab = f.b / nt;
        if aa != ab {
            if ca == 0 {
                let s = f.stiffness();
                tr[aa * nr + aa] += s;
                tr[ab * nr + ab] += s;
                tr[aa * nr + ab] -= s;
                tr[ab * nr + aa] -= s;
            }
        } else if ca == 0 {
            kappa[aa] = f.stiffness();
        }
    }
    let wsq: Vec<f64> = g.shell_weight.iter().map(|w| 1.0 / sqrt(*w)).collect();
    let mut ym = Vec::with_capacity(nt);
    let mut mu = Vec::with_capacity(nt);
    for m in 0..nt {
        let ell = et.values[m];
        let mut h = tr.clone();
        for a in 0..nr {
            h[a * nr + a] += ell * kappa[a];
        }
        for a in 0..nr {
            for b in 0..nr {
                h[a * nr + b] *= wsq[a] * wsq[b];
            }
        }
        let e = SymmetricEigen::new(&h, nr);
        let mut y = e.vectors;
        for a in 0..nr {
            for k in 0..nr {
                y[a * nr + k] *= wsq[a];
            }
        }
        ym.push(y);
        mu.push(e.values);
    }
    Spectral {
        qx: ex.vectors,
        lx: ex.values,
        qy: ey.vectors,
        ly: ey.values,
        phi: et.vectors,
        ym,
        mu,
    }
}

/// Assembles all operators for a K = 1 chain.
pub fn assemble_operators(
    omega: &OmegaGrid,
    cfg: &ConfigGrid,
    chain: &ChainParams,
    params: &ModelParams,
) -> Result<DiscreteOperators> {
    if chain.springs() != 1 || cfg.springs.len() != 1 {
        return Err(Error::Assembly(String::from(
            "the Fokker-Planck operators are built for K = 1 chains",
        )));
    }
    if (cfg.springs[0].b - chain.b(0)).abs() > 0.0 {
        return Err(Error::Assembly(String::from(
            "configuration grid was built for a different chain",
        )));
    }
    if !(params.lambda > 0.0) {
        return Err(Error::invalid("lambda", "requires λ > 0"));
    }
    let q_faces = build_q_faces(cfg, chain);
    let spectral = build_spectral(omega, cfg, &q_faces);
    Ok(DiscreteOperators {
        omega: omega.clone(),
        cfg: cfg.clone(),
        faces: omega.faces(),
        q_faces,
        q_diffusion: chain.rouse_entry(0, 0) / (4.0 * params.lambda),
        spectral,
    })
}

impl DiscreteOperators {
    pub fn cells(&self) -> usize {
        self.omega.cells()
    }

    pub fn nq(&self) -> usize {
        self.cfg.nodes()
    }

    /// Face coefficient a_f / h = dual volume / h².
    pub fn face_stiffness(&self, f: &Face) -> f64 {
        self.omega.face_area(f.dir) / self.omega.h(f.dir)
    }

    /// Scalar gradient on faces.
    pub fn grad_x(&self, phi: &[f64]) -> Vec<f64> {
        self.faces
            .iter()
            .map(|f| (phi[f.r] - phi[f.l]) / self.omega.h(f.dir))
            .collect()
    }

    /// Divergence on cells of a face flux (positive from l to r).
    pub fn div_x(&self, flux: &[f64]) -> Vec<f64> {
        let v = self.omega.volume();
        let mut d = vec![0.0; self.cells()];
        for (f, &q) in self.faces.iter().zip(flux) {
            let a = self.omega.face_area(f.dir) / v;
            d[f.l] += q * a;
            d[f.r] -= q * a;
        }
        d
    }

    /// Face inner product with the dual volume as weight.
    pub fn face_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.omega.volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Cell inner product.
    pub fn cell_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.omega.volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Laplacian with homogeneous Neumann (or periodic) conditions,
    /// `div_x ∘ grad_x`. Entries sum to zero.
    pub fn laplace_neumann(&self, phi: &[f64]) -> Vec<f64> {
        self.div_x(&self.grad_x(phi))
    }

    /// Laplacian for a velocity component: zero wall value at half a cell
    /// from the wall centre (no-slip), periodic otherwise.
    pub fn laplace_dirichlet(&self, phi: &[f64]) -> Vec<f64> {
        let mut l = self.laplace_neumann(phi);
        if self.omega.bc == BoundaryCondition::NoSlipNeumann {
            for c in 0..self.cells() {
                for dir in 0..2 {
                    let h = self.omega.h(dir);
                    for step in [-1isize, 1] {
                        if self.omega.neighbor(c, dir, step).is_none() {
                            l[c] -= 2.0 * phi[c] / (h * h);
                        }
                    }
                }
            }
        }
        l
    }

    /// Weak scalar stiffness Σ_f (a_f/h)(φ_r − φ_l)(ψ_r − ψ_l) as triplets.
    pub fn scalar_stiffness(&self, scale: f64, offset: usize, out: &mut Vec<(usize, usize, f64)>) {
        for f in &self.faces {
            let s = scale * self.face_stiffness(f);
            out.push((offset + f.l, offset + f.l, s));
            out.push((offset + f.r, offset + f.r, s));
            out.push((offset + f.l, offset + f.r, -s));
            out.push((offset + f.r, offset + f.l, -s));
        }
    }

    /// Weak velocity-component stiffness: scalar stiffness plus the wall
    /// terms of the no-slip condition.
    pub fn velocity_stiffness(&self, scale: f64, offset: usize, out: &mut Vec<(usize, usize, f64)>) {
        self.scalar_stiffness(scale, offset, out);
        if self.omega.bc == BoundaryCondition::NoSlipNeumann {
            for c in 0..self.cells() {
                for dir in 0..2 {
                    let s = 2.0 * scale * self.omega.face_area(dir) / self.omega.h(dir);
                    for step in [-1isize, 1] {
                        if self.omega.neighbor(c, dir, step).is_none() {
                            out.push((offset + c, offset + c, s));
                        }
                    }
                }
            }
        }
    }

    /// Σ_f (a_f/h)(φ_r − φ_l)(ψ_r − ψ_l), plus no-slip wall terms when
    /// `velocity` is set.
    pub fn stiffness_form(&self, a: &[f64], b: &[f64], velocity: bool) -> f64 {
        let mut s = 0.0;
        for f in &self.faces {
            s += self.face_stiffness(f) * (a[f.r] - a[f.l]) * (b[f.r] - b[f.l]);
        }
        if velocity && self.omega.bc == BoundaryCondition::NoSlipNeumann {
            for c in 0..self.cells() {
                for dir in 0..2 {
                    let k = 2.0 * self.omega.face_area(dir) / self.omega.h(dir);
                    for step in [-1isize, 1] {
                        if self.omega.neighbor(c, dir, step).is_none() {
                            s += k * a[c] * b[c];
                        }
                    }
                }
            }
        }
        s
    }

    /// Central-difference stencil of ∂/∂x_dir at cell c for a velocity
    /// component (odd ghosts at no-slip walls).
    pub fn vel_stencil(&self, c: usize, dir: usize) -> [(usize, f64); 2] {
        let h2 = 2.0 * self.omega.h(dir);
        let plus = match self.omega.neighbor(c, dir, 1) {
            Some(p) => (p, 1.0 / h2),
            None => (c, -1.0 / h2),
        };
        let minus = match self.omega.neighbor(c, dir, -1) {
            Some(m) => (m, -1.0 / h2),
            None => (c, 1.0 / h2),
        };
        [plus, minus]
    }

    /// ∇_h u per cell, row-major [∂x ux, ∂y ux, ∂x uy, ∂y uy].
    pub fn velocity_gradient(&self, ux: &[f64], uy: &[f64]) -> Vec<[f64; 4]> {
        (0..self.cells())
            .map(|c| {
                let mut g = [0.0; 4];
                for dir in 0..2 {
                    for (n, w) in self.vel_stencil(c, dir) {
                        g[dir] += w * ux[n];
                        g[2 + dir] += w * uy[n];
                    }
                }
                g
            })
            .collect()
    }

    /// Symmetric part D(u) of the discrete velocity gradient.
    pub fn strain(&self, ux: &[f64], uy: &[f64]) -> Vec<[f64; 4]> {
        self.velocity_gradient(ux, uy)
            .into_iter()
            .map(|g| {
                let off = 0.5 * (g[1] + g[2]);
                [g[0], off, off, g[3]]
            })
            .collect()
    }

    /// Cell divergence of the velocity (face-average normal velocities,
    /// zero at walls).
    pub fn velocity_divergence(&self, ux: &[f64], uy: &[f64]) -> Vec<f64> {
        let un = self.face_normal_velocity(ux, uy);
        self.div_x(&un)
    }

    /// Normal velocity on each interior face, the average of the two cells.
    pub fn face_normal_velocity(&self, ux: &[f64], uy: &[f64]) -> Vec<f64> {
        self.faces
            .iter()
            .map(|f| {
                let u = if f.dir == 0 { ux } else { uy };
                0.5 * (u[f.l] + u[f.r])
            })
            .collect()
    }

    /// Weak q-stiffness S_q φ for one q-vector: Σ_f (w_f/dist²)(φ_b − φ_a)(δ_b − δ_a).
    pub fn q_stiffness_apply(&self, phi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; phi.len()];
        for f in &self.q_faces {
            let flux = f.stiffness() * (phi[f.b] - phi[f.a]);
            out[f.a] -= flux;
            out[f.b] += flux;
        }
        out
    }

    /// The Fokker-Planck q-operator in strong form, (1/W_j)(S_q φ)_j scaled
    /// by (1/4λ)A_11. Vanishes on constants.
    pub fn fp_q_operator(&self, phi: &[f64]) -> Vec<f64> {
        let s = self.q_stiffness_apply(phi);
        s.iter()
            .zip(&self.cfg.weights)
            .map(|(x, w)| self.q_diffusion * x / w)
            .collect()
    }

    /// Solves v·X W + c_x S_x X W + c_q X S_q = R for X laid out [cell][node].
    pub fn spectral_solve(&self, rhs: &[f64], c_x: f64, c_q: f64) -> Vec<f64> {
        let sp = &self.spectral;
        let nq = self.nq();
        let (nx, ny) = (self.omega.nx, self.omega.ny);
        let g = &self.cfg.springs[0];
        let (nr, nt) = (g.n_r, g.n_theta);
        let v = self.omega.volume();
        let rx = self.omega.hy() / self.omega.hx();
        let ry = self.omega.hx() / self.omega.hy();
        let mut w = rhs.to_vec();
        let mut tmp = vec![0.0; nq];
        for cell in w.chunks_mut(nq) {
            q_forward(cell, &mut tmp, &sp.phi, &sp.ym, nr, nt);
        }
        axis_transform(&mut w, &sp.qx, nx, ny * nq, true);
        for ix in 0..nx {
            axis_transform(&mut w[ix * ny * nq..(ix + 1) * ny * nq], &sp.qy, ny, nq, true);
        }
        for ix in 0..nx {
            for iy in 0..ny {
                let lam = v + c_x * (rx * sp.lx[ix] + ry * sp.ly[iy]);
                let base = (ix * ny + iy) * nq;
                for k in 0..nr {
                    for m in 0..nt {
                        w[base + k * nt + m] /= lam + c_q * sp.mu[m][k];
                    }
                }
            }
        }
        for ix in 0..nx {
            axis_transform(&mut w[ix * ny * nq..(ix + 1) * ny * nq], &sp.qy, ny, nq, false);
        }
        axis_transform(&mut w, &sp.qx, nx, ny * nq, false);
        for cell in w.chunks_mut(nq) {
            q_backward(cell, &mut tmp, &sp.phi, &sp.ym, nr, nt);
        }
        // Both stiffness parts annihilate constants, so Σ W x = Σ rhs / v
        // holds exactly; restore it against rounding in the eigenvectors.
        let target: f64 = rhs.iter().sum::<f64>() / v;
        let weights = &self.cfg.weights;
        let mass: f64 = w.chunks(nq).map(|c| c.iter().zip(weights).map(|(x, q)| x * q).sum::<f64>()).sum();
        let shift = (target - mass) / self.cells() as f64;
        if shift != 0.0 {
            w.iter_mut().for_each(|x| *x += shift);
        }
        w
    }

    /// Applies the matrix inverted by [`DiscreteOperators::spectral_solve`].
    pub fn spectral_apply(&self, x: &[f64], c_x: f64, c_q: f64) -> Vec<f64> {
        let nq = self.nq();
        let n = self.cells();
        let v = self.omega.volume();
        let w = &self.cfg.weights;
        let mut out = vec![0.0; x.len()];
        for c in 0..n {
            let xc = &x[c * nq..(c + 1) * nq];
            let sq = self.q_stiffness_apply(xc);
            for j in 0..nq {
                out[c * nq + j] = v * w[j] * xc[j] + c_q * sq[j];
            }
        }
        for f in &self.faces {
            let s = c_x * self.face_stiffness(f);
            for j in 0..nq {
                let d = s * w[j] * (x[f.r * nq + j] - x[f.l * nq + j]);
                out[f.l * nq + j] -= d;
                out[f.r * nq + j] += d;
            }
        }
        out
    }
}

/// In-place transform along the leading axis of a [n][block] array:
/// forward computes Qᵀ·data, backward Q·data.
fn axis_transform(data: &mut [f64], q: &[f64], n: usize, block: usize, forward: bool) {
    let src = data.to_vec();
    data.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..n {
        let out = &mut data[i * block..(i + 1) * block];
        for k in 0..n {
            let coef = if forward { q[k * n + i] } else { q[i * n + k] };
            if coef == 0.0 {
                continue;
            }
            let s = &src[k * block..(k + 1) * block];
            for (o, x) in out.iter_mut().zip(s) {
                *o += coef * x;
            }
        }
    }
}

fn q_forward(cell: &mut [f64], tmp: &mut [f64], phi: &[f64], ym: &[Vec<f64>], nr: usize, nt: usize) {
    // angular: tmp[a][m] = Σ_c cell[a][c] Φ[c][m]
    for a in 0..nr {
        for m in 0..nt {
            let mut s = 0.0;
            for c in 0..nt {
                s += cell[a * nt + c] * phi[c * nt + m];
            }
            tmp[a * nt + m] = s;
        }
    }
    // radial per mode: cell[k][m] = Σ_a tmp[a][m] Y_m[a][k]
    for m in 0..nt {
        let y = &ym[m];
        for k in 0..nr {
            let mut s = 0.0;
            for a in 0..nr {
                s += tmp[a * nt + m] * y[a * nr + k];
            }
            cell[k * nt + m] = s;
        }
    }
}

fn q_backward(cell: &mut [f64], tmp: &mut [f64], phi: &[f64], ym: &[Vec<f64>], nr: usize, nt: usize) {
    for m in 0..nt {
        let y = &ym[m];
        for a in 0..nr {
            let mut s = 0.0;
            for k in 0..nr {
                s += cell[k * nt + m] * y[a * nr + k];
            }
            tmp[a * nt + m] = s;
        }
    }
    for a in 0..nr {
        for c in 0..nt {
            let mut s = 0.0;
            for m in 0..nt {
                s += tmp[a * nt + m] * phi[c * nt + m];
            }
            cell[a * nt + c] = s;
        }
    }
}
