//! Small dense-vector helpers shared by the verification, witness and solver
//! code. Points are plain `&[f64]` slices of the ambient dimension.

use rand::Rng;
use rand_distr::StandardNormal;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

/// Sine of the angle between `p` and `q`, via the Lagrange identity
/// `|p ^ q|^2 = sum_{i<j} (p_i q_j - p_j q_i)^2`, which stays accurate for
/// nearly parallel vectors.
pub fn sine_between(p: &[f64], q: &[f64]) -> f64 {
    let mut wedge = 0.0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let w = p[i] * q[j] - p[j] * q[i];
            wedge += w * w;
        }
    }
    let denom = norm(p) * norm(q);
    if denom == 0.0 {
        return 0.0;
    }
    (wedge.sqrt() / denom).min(1.0)
}

/// Sine of the angle at the middle vertex of the triple, where the middle
/// vertex is the one opposite the longest side.
pub fn middle_sine(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let ab = dist_sq(a, b);
    let bc = dist_sq(b, c);
    let ca = dist_sq(c, a);
    let (m, x, y) = if ab >= bc && ab >= ca {
        (c, a, b)
    } else if bc >= ca {
        (a, b, c)
    } else {
        (b, c, a)
    };
    sine_between(&sub(x, m), &sub(y, m))
}

/// Vertices of a regular simplex with `m` vertices and the given edge length,
/// in `R^(m-1)`, centroid at the origin. Uses the Helmert basis of the
/// hyperplane orthogonal to `(1, ..., 1)`.
pub fn simplex_coordinates(m: usize, edge: f64) -> Vec<Vec<f64>> {
    assert!(m >= 1, "a simplex needs at least one vertex");
    let s = edge / std::f64::consts::SQRT_2;
    (0..m)
        .map(|i| {
            (1..m)
                .map(|k| {
                    let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
                    let entry = if i < k {
                        1.0
                    } else if i == k {
                        -(k as f64)
                    } else {
                        0.0
                    };
                    s * entry * scale
                })
                .collect()
        })
        .collect()
}

/// Circumradius of a regular simplex with `m` unit edges.
pub fn simplex_circumradius(m: usize) -> f64 {
    ((m as f64 - 1.0) / (2.0 * m as f64)).sqrt()
}

/// Row-major `dim x dim` orthogonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Orthogonal {
    pub dim: usize,
    pub rows: Vec<f64>,
}

impl Orthogonal {
    pub fn identity(dim: usize) -> Self {
        let mut rows = vec![0.0; dim * dim];
        for i in 0..dim {
            rows[i * dim + i] = 1.0;
        }
        Self { dim, rows }
    }

    /// Haar-distributed orthogonal matrix (Gram-Schmidt on Gaussian rows).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let mut rows: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
            let mut ok = true;
            for i in 0..dim {
                for j in 0..i {
                    let (head, tail) = rows.split_at_mut(i * dim);
                    let prev = &head[j * dim..(j + 1) * dim];
                    let cur = &mut tail[..dim];
                    let p = dot(prev, cur);
                    for k in 0..dim {
                        cur[k] -= p * prev[k];
                    }
                }
                let row = &mut rows[i * dim..(i + 1) * dim];
                let n = norm(row);
                if n < 1e-8 {
                    ok = false;
                    break;
                }
                row.iter_mut().for_each(|x| *x /= n);
            }
            if ok {
                return Self { dim, rows };
            }
        }
    }

    /// Householder reflection exchanging the unit vector `a` and `e_0`.
    pub fn householder_to_e0(a: &[f64]) -> Self {
        let dim = a.len();
        let mut w = a.to_vec();
        w[0] -= 1.0;
        let n = norm(&w);
        if n < 1e-14 {
            return Self::identity(dim);
        }
        w.iter_mut().for_each(|x| *x /= n);
        let mut rows = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                rows[i * dim + j] = if i == j { 1.0 } else { 0.0 } - 2.0 * w[i] * w[j];
            }
        }
        Self { dim, rows }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| dot(&self.rows[i * self.dim..(i + 1) * self.dim], x))
            .collect()
    }

    pub fn compose(&self, other: &Self) -> Self {
        // self * other
        let d = self.dim;
        let mut rows = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                rows[i * d + j] = (0..d).map(|k| self.rows[i * d + k] * other.rows[k * d + j]).sum();
            }
        }
        Self { dim: d, rows }
    }

    /// Embed an orthogonal map of `R^(dim-1)` acting on coordinates `1..dim`.
    pub fn block_tail(inner: &Self) -> Self {
        let d = inner.dim + 1;
        let mut rows = vec![0.0; d * d];
        rows[0] = 1.0;
        for i in 0..inner.dim {
            for j in 0..inner.dim {
                rows[(i + 1) * d + (j + 1)] = inner.rows[i * inner.dim + j];
            }
        }
        Self { dim: d, rows }
    }
}

/// Isometry `x -> to_origin + Q (x - from_origin)` that sends the ray from
/// `from_u` towards `from_v` onto the ray from `to_u` towards `to_v`, composed
/// with an arbitrary orthogonal map `spin` of the orthogonal complement of
/// that ray.
pub struct AxisMap {
    from_origin: Vec<f64>,
    to_origin: Vec<f64>,
    q: Orthogonal,
}

impl AxisMap {
    pub fn new(from_u: &[f64], from_v: &[f64], to_u: &[f64], to_v: &[f64], spin: &Orthogonal) -> Self {
        let a = normalized(&sub(from_v, from_u));
        let b = normalized(&sub(to_v, to_u));
        let ha = Orthogonal::householder_to_e0(&a);
        let hb = Orthogonal::householder_to_e0(&b);
        let q = hb.compose(&Orthogonal::block_tail(spin)).compose(&ha);
        Self {
            from_origin: from_u.to_vec(),
            to_origin: to_u.to_vec(),
            q,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let rel = sub(x, &self.from_origin);
        let mut y = self.q.apply(&rel);
        for (yi, oi) in y.iter_mut().zip(&self.to_origin) {
            *yi += oi;
        }
        y
    }
}

/// Uniformly random unit vector orthogonal to the unit vector `axis`.
pub fn random_unit_orthogonal<R: Rng + ?Sized>(axis: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..axis.len()).map(|_| rng.sample(StandardNormal)).collect();
        let p = dot(&w, axis);
        for (wi, ai) in w.iter_mut().zip(axis) {
            *wi -= p * ai;
        }
        let n = norm(&w);
        if n > 1e-8 {
            w.iter_mut().for_each(|x| *x /= n);
            return w;
        }
    }
}

/// Orthonormal basis of `span(vectors)` by modified Gram-Schmidt, dropping
/// vectors whose residual norm falls below `tol`.
pub fn orthonormal_basis(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let p = dot(&w, b);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= p * bi;
            }
        }
        let n = norm(&w);
        if n > tol {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
        }
    }
    basis
}
