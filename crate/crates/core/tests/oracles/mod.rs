//! Test-only reference implementations, independent of the library code
//! they are compared against.

use nalgebra::{DMatrix, DVector};
use posnet::{Edge, NetworkGraph};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Strongly connected graph on `n` vertices: a random Hamiltonian cycle plus
/// up to `extra` further edges, outgoing weights normalized to one.
pub fn strongly_connected(r: &mut ChaCha8Rng, n: usize, extra: usize) -> NetworkGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let mut pairs: Vec<(usize, usize)> = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
    for _ in 0..extra {
        let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
        if a != b && !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }
    let raw: Vec<f64> = pairs.iter().map(|_| r.gen_range(0.2..1.0)).collect();
    let mut total = vec![0.0; n];
    for (&(a, _), w) in pairs.iter().zip(&raw) {
        total[a] += w;
    }
    let edges = pairs.iter().zip(&raw).map(|(&(a, b), w)| Edge::new(a, b, w / total[a])).collect();
    NetworkGraph::kirchhoff(n, edges).expect("valid Kirchhoff graph")
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conic hull membership by Caratheodory enumeration: `t` is in the cone iff
/// it is a nonnegative combination of some linearly independent subset, so
/// every subset of at most `d` generators is tried with a least-squares solve.
pub fn brute_force_member(gens: &[Vec<f64>], t: &[f64]) -> bool {
    let d = t.len();
    if t.iter().all(|&v| v == 0.0) {
        return true;
    }
    let k = gens.len();
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        if idx.len() > d {
            continue;
        }
        let g = DMatrix::from_fn(d, idx.len(), |i, c| gens[idx[c]][i]);
        let svd = g.clone().svd(true, true);
        if svd.singular_values.iter().any(|&s| s < 1e-10) {
            continue;
        }
        let rhs = DVector::from_column_slice(t);
        let lambda = svd.solve(&rhs, 1e-12).expect("full rank");
        let residual = (&g * &lambda - &rhs).amax();
        if residual <= 1e-9 && lambda.iter().all(|&l| l >= -1e-12) {
            return true;
        }
    }
    false
}

/// Classical fourth-order Runge-Kutta for `y' = f(x, y)` from `x0` to `x1`.
pub fn rk4(f: impl Fn(f64, f64) -> f64, x0: f64, y0: f64, x1: f64, steps: usize) -> Vec<f64> {
    let h = (x1 - x0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y);
    for s in 0..steps {
        let x = x0 + s as f64 * h;
        let k1 = f(x, y);
        let k2 = f(x + 0.5 * h, y + 0.5 * h * k1);
        let k3 = f(x + 0.5 * h, y + 0.5 * h * k2);
        let k4 = f(x + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push(y);
    }
    out
}

/// Thomas algorithm for a tridiagonal system; `lower[0]` and
/// `upper[n - 1]` are ignored.
pub fn tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Crank-Nicolson for `z_t = c z_xx - q z` with homogeneous Neumann ends on a
/// uniform grid, using ghost-node reflection.
pub fn crank_nicolson(z0: &[f64], c: f64, q: f64, t: f64, steps: usize) -> Vec<f64> {
    let n = z0.len();
    let h = 1.0 / (n - 1) as f64;
    let dt = t / steps as f64;
    let r = 0.5 * dt * c / (h * h);
    // Off-diagonals of the Neumann Laplacian: doubled at the two ends.
    let lo: Vec<f64> = (0..n).map(|i| if i == n - 1 { 2.0 } else { 1.0 }).collect();
    let up: Vec<f64> = (0..n).map(|i| if i == 0 { 2.0 } else { 1.0 }).collect();
    let diag = vec![1.0 + 2.0 * r + 0.5 * dt * q; n];
    let lower: Vec<f64> = lo.iter().map(|v| -r * v).collect();
    let upper: Vec<f64> = up.iter().map(|v| -r * v).collect();
    let mut z = z0.to_vec();
    for _ in 0..steps {
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let neighbours = match i {
                    0 => 2.0 * z[1],
                    _ if i == n - 1 => 2.0 * z[n - 2],
                    _ => z[i - 1] + z[i + 1],
                };
                (1.0 - 2.0 * r - 0.5 * dt * q) * z[i] + r * neighbours
            })
            .collect();
        z = tridiagonal(&lower, &diag, &upper, &rhs);
    }
    z
}
