//! Grids on the physical box Ω and on the configuration domain D.
//!
//! Ω is split into `nx × ny` equal cells, indexed row-major `c = ix·ny + iy`.
//!
//! Each spring domain B(0, √b) carries a polar finite-volume grid: shells
//! bounded by radii `r_e[a]` (uniform in r), `n_θ` equal sectors. A node sits
//! at the Maxwellian-weighted root-mean-square radius of its shell, so the
//! one-point rule per cell integrates 1 and |q|² exactly against M. The node
//! weight is the exact M-mass of its cell (adaptive quadrature), normalized so
//! the weights sum to one.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{cos, sin, sqrt, PI};
use crate::model::{boltzmann_factor, spring_potential, ChainParams, PARTITION_REL_TOL};
use crate::quadrature::adaptive_gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Periodic,
    /// No-slip velocity, homogeneous Neumann for ρ and ψ̂.
    NoSlipNeumann,
}

/// Interior face between cells `l` and `r`; `dir` 0 means normal along x.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub l: usize,
    pub r: usize,
    pub dir: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaGrid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub bc: BoundaryCondition,
}

impl OmegaGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, bc: BoundaryCondition) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::invalid("grid", "requires nx, ny ≥ 3"));
        }
        if !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::invalid("grid", "requires lx, ly > 0"));
        }
        Ok(OmegaGrid { nx, ny, lx, ly, bc })
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn h(&self, dir: usize) -> f64 {
        if dir == 0 {
            self.hx()
        } else {
            self.hy()
        }
    }

    /// Cell volume h_x·h_y.
    pub fn volume(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn measure(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    pub fn coords(&self, c: usize) -> (usize, usize) {
        (c / self.ny, c % self.ny)
    }

    pub fn center(&self, c: usize) -> (f64, f64) {
        let (ix, iy) = self.coords(c);
        ((ix as f64 + 0.5) * self.hx(), (iy as f64 + 0.5) * self.hy())
    }

    /// Neighbour of `c` in direction `dir`, `step` = ±1; `None` across a wall.
    pub fn neighbor(&self, c: usize, dir: usize, step: isize) -> Option<usize> {
        let (ix, iy) = self.coords(c);
        let (i, n) = if dir == 0 { (ix, self.nx) } else { (iy, self.ny) };
        let j = i as isize + step;
        let j = if j < 0 || j >= n as isize {
            match self.bc {
                BoundaryCondition::Periodic => (j + n as isize) as usize % n,
                BoundaryCondition::NoSlipNeumann => return None,
            }
        } else {
            j as usize
        };
        Some(if dir == 0 { self.index(j, iy) } else { self.index(ix, j) })
    }

    /// All interior faces (periodic grids include the wrap-around faces).
    pub fn faces(&self) -> Vec<Face> {
        let mut f = Vec::new();
        for c in 0..self.cells() {
            for dir in 0..2 {
                if let Some(r) = self.neighbor(c, dir, 1) {
                    f.push(Face { l: c, r, dir });
                }
            }
        }
        f
    }

    /// Area of a face with normal `dir` (a length in 2-D).
    pub fn face_area(&self, dir: usize) -> f64 {
        if dir == 0 {
            self.hy()
        } else {
            self.hx()
        }
    }

    /// Quadrature weights of the cells.
    pub fn weights(&self) -> Vec<f64> {
        vec![self.volume(); self.cells()]
    }
}

/// Polar grid on one spring domain B(0, √b).
#[derive(Debug, Clone, PartialEq)]
pub struct SpringGrid {
    pub b: f64,
    pub n_r: usize,
    pub n_theta: usize,
    /// Shell radii, `n_r + 1` values from 0 to √b.
    pub r_edges: Vec<f64>,
    /// Node radius per shell.
    pub r_nodes: Vec<f64>,
    /// Node angles (c + ½)Δθ.
    pub theta_nodes: Vec<f64>,
    /// Normalized weight of each node of shell a.
    pub shell_weight: Vec<f64>,
    /// Raw M-mass of each node of shell a (before renormalization).
    pub raw_shell_weight: Vec<f64>,
    /// U'(r_a²/2) at the node radius.
    pub du_node: Vec<f64>,
    /// U' averaged over the shell with weight M|q|², used by the Kramers
    /// moment so that shells near ∂D are integrated exactly.
    pub du_shell: Vec<f64>,
    /// Σ raw weights, i.e. the grid's estimate of ∫M before rescaling.
    pub raw_sum: f64,
}

impl SpringGrid {
    pub fn new(chain: &ChainParams, i: usize, n_r: usize, n_theta: usize) -> Result<Self> {
        if chain.dim() != 2 {
            return Err(Error::invalid("d", "configuration grids require d = 2"));
        }
        if n_r < 4 {
            return Err(Error::invalid("nq_r", "requires nq_r ≥ 4"));
        }
        if n_theta < 8 || n_theta % 2 != 0 {
            return Err(Error::invalid("nq_theta", "requires an even nq_theta ≥ 8"));
        }
        let b = chain.b(i);
        let z = chain.partition(i);
        let rb = sqrt(b);
        let r_edges: Vec<f64> = (0..=n_r).map(|a| rb * a as f64 / n_r as f64).collect();
        let dtheta = 2.0 * PI / n_theta as f64;
        let mut r_nodes = Vec::with_capacity(n_r);
        let mut raw = Vec::with_capacity(n_r);
        let mut du_node = Vec::with_capacity(n_r);
        let mut du_shell = Vec::with_capacity(n_r);
        for a in 0..n_r {
            let (lo, hi) = (r_edges[a], r_edges[a + 1]);
            let m0 = adaptive_gauss_legendre(|r| boltzmann_factor(r * r, b) * r, lo, hi, PARTITION_REL_TOL)?;
            let m2 = adaptive_gauss_legendre(
                |r| boltzmann_factor(r * r, b) * r * r * r,
                lo,
                hi,
                PARTITION_REL_TOL,
            )?;
            // ∫ M U' r³ dr with M U' = (1 − r²/b)^{b/2 − 1}
            let mu2 = adaptive_gauss_legendre(
                |r| {
                    let x = 1.0 - r * r / b;
                    if x <= 0.0 {
                        0.0
                    } else {
                        crate::math::powf(x, 0.5 * b - 1.0) * r * r * r
                    }
                },
                lo,
                hi,
                PARTITION_REL_TOL,
            )?;
            let ra = sqrt(m2 / m0);
            r_nodes.push(ra);
            raw.push(dtheta * m0 / z);
            du_node.push(spring_potential(0.5 * ra * ra, i, chain)?.1);
            du_shell.push(mu2 / m2);
        }
        let raw_sum: f64 = raw.iter().map(|w| w * n_theta as f64).sum();
        let defect = (raw_sum - 1.0).abs();
        if defect > 1e-4 {
            return Err(Error::QuadratureNotConverged { defect });
        }
        let shell_weight = raw.iter().map(|w| w / raw_sum).collect();
        let theta_nodes = (0..n_theta).map(|c| (c as f64 + 0.5) * dtheta).collect();
        Ok(SpringGrid {
            b,
            n_r,
            n_theta,
            r_edges,
            r_nodes,
            theta_nodes,
            shell_weight,
            raw_shell_weight: raw,
            du_node,
            du_shell,
            raw_sum,
        })
    }

    pub fn nodes(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    /// Connector of node j = a·n_θ + c.
    pub fn node(&self, j: usize) -> [f64; 2] {
        let (a, c) = (j / self.n_theta, j % self.n_theta);
        let r = self.r_nodes[a];
        let t = self.theta_nodes[c];
        [r * cos(t), r * sin(t)]
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.shell_weight[j / self.n_theta]
    }
}

/// Tensor product of the spring grids; node index is row-major over springs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigGrid {
    pub springs: Vec<SpringGrid>,
    pub weights: Vec<f64>,
}

impl ConfigGrid {
    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    /// Splits a node index into per-spring indices.
    pub fn split(&self, mut j: usize) -> Vec<usize> {
        let mut idx = vec![0; self.springs.len()];
        for (s, g) in self.springs.iter().enumerate().rev() {
            idx[s] = j % g.nodes();
            j /= g.nodes();
        }
        idx
    }

    /// Connector q_i at node j.
    pub fn connector(&self, j: usize, i: usize) -> [f64; 2] {
        if self.springs.len() == 1 {
            return self.springs[0].node(j);
        }
        let idx = self.split(j);
        self.springs[i].node(idx[i])
    }
}

/// Builds the Maxwellian-weighted configuration grid.
pub fn build_config_grid(chain: &ChainParams, n_r: usize, n_theta: usize) -> Result<ConfigGrid> {
    let mut springs = Vec::with_capacity(chain.springs());
    for i in 0..chain.springs() {
        springs.push(SpringGrid::new(chain, i, n_r, n_theta)?);
    }
    let mut weights = vec![1.0];
    for g in &springs {
        let mut next = Vec::with_capacity(weights.len() * g.nodes());
        for &w in &weights {
            for j in 0..g.nodes() {
                next.push(w * g.weight(j));
            }
        }
        weights = next;
    }
    Ok(ConfigGrid { springs, weights })
}

/// Builds the physical grid.
pub fn build_omega_grid(nx: usize, ny: usize, lx: f64, ly: f64, bc: BoundaryCondition) -> Result<OmegaGrid> {
    OmegaGrid::new(nx, ny, lx, ly, bc)
}

/// ∫_D M φ1 φ2 dq on the configuration grid.
pub fn weighted_inner_product_q(phi1: &[f64], phi2: &[f64], cfg: &ConfigGrid) -> Result<f64> {
    let n = cfg.nodes();
    for p in [phi1, phi2] {
        if p.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: p.len(),
            });
        }
    }
    Ok(phi1
        .iter()
        .zip(phi2)
        .zip(&cfg.weights)
        .map(|((a, b), w)| w * a * b)
        .sum())
}

/// ∫_Ω ∫_D M φ1 φ2 dq dx for fields laid out as [cell][node].
pub fn weighted_inner_product(
    phi1: &[f64],
    phi2: &[f64],
    omega: &OmegaGrid,
    cfg: &ConfigGrid,
) -> Result<f64> {
    let n = omega.cells() * cfg.nodes();
    for p in [phi1, phi2] {
        if p.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: p.len(),
            });
        }
    }
    let nq = cfg.nodes();
    let mut s = 0.0;
    for c in 0..omega.cells() {
        let mut sc = 0.0;
        for j in 0..nq {
            sc += cfg.weights[j] * phi1[c * nq + j] * phi2[c * nq + j];
        }
        s += sc;
    }
    Ok(omega.volume() * s)
}
