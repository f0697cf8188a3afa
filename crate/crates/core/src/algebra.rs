//! Metric 2-step nilpotent Lie algebras `n = h ⊕ z` and their simply
//! connected groups in exponential coordinates.
//!
//! The centre `z` is stored as coefficient vectors over a declared-orthonormal
//! basis `{e_a}`; each `e_a` acts on `h` through a skew matrix `J_a`, and the
//! bracket is *defined* by `⟨[h, k], e_a⟩ = ⟨J_a h, k⟩`. Exponential
//! coordinates are the only chart: a group point is an algebra vector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

const SKEW_TOL: f64 = 1e-12;

pub(crate) mod dvec_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(v))
    }
}

/// An element of `n = z ⊕ h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraVector {
    #[serde(with = "dvec_serde")]
    pub z: DVector<f64>,
    #[serde(with = "dvec_serde")]
    pub h: DVector<f64>,
}

impl AlgebraVector {
    pub fn new(z: DVector<f64>, h: DVector<f64>) -> Self {
        Self { z, h }
    }

    pub fn zeros(dim_z: usize, dim_h: usize) -> Self {
        Self {
            z: DVector::zeros(dim_z),
            h: DVector::zeros(dim_h),
        }
    }

    pub fn from_slices(z: &[f64], h: &[f64]) -> Self {
        Self {
            z: DVector::from_column_slice(z),
            h: DVector::from_column_slice(h),
        }
    }

    /// Split a flat `(z..., h...)` coordinate list.
    pub fn from_flat(dim_z: usize, flat: &[f64]) -> Self {
        Self::from_slices(&flat[..dim_z], &flat[dim_z..])
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.z.iter().chain(self.h.iter()).copied().collect()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.z.dot(&other.z) + self.h.dot(&other.h)
    }

    pub fn norm_squared(&self) -> f64 {
        self.z.norm_squared() + self.h.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            z: &self.z * s,
            h: &self.h * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            z: &self.z + &other.z,
            h: &self.h + &other.h,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            z: &self.z - &other.z,
            h: &self.h - &other.h,
        }
    }

    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self {
            z: &self.z + &other.z * s,
            h: &self.h + &other.h * s,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.z.len(), self.h.len())
    }
}

/// A point of the simply connected group, in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupPoint {
    pub coords: AlgebraVector,
}

impl GroupPoint {
    pub fn identity(dim_z: usize, dim_h: usize) -> Self {
        Self {
            coords: AlgebraVector::zeros(dim_z, dim_h),
        }
    }

    pub fn new(z: DVector<f64>, h: DVector<f64>) -> Self {
        Self {
            coords: AlgebraVector::new(z, h),
        }
    }

    pub fn from_slices(z: &[f64], h: &[f64]) -> Self {
        Self {
            coords: AlgebraVector::from_slices(z, h),
        }
    }

    /// `Ex`: exponential coordinates are the chart, so this is the identity.
    pub fn exp(v: AlgebraVector) -> Self {
        Self { coords: v }
    }

    /// `Log`, the inverse of [`GroupPoint::exp`].
    pub fn log(&self) -> &AlgebraVector {
        &self.coords
    }

    pub fn z(&self) -> &DVector<f64> {
        &self.coords.z
    }

    pub fn h(&self) -> &DVector<f64> {
        &self.coords.h
    }

    pub fn is_identity(&self) -> bool {
        self.coords.z.iter().chain(self.coords.h.iter()).all(|x| *x == 0.0)
    }

    /// Euclidean distance between coordinate vectors.
    pub fn coord_distance(&self, other: &Self) -> f64 {
        self.coords.sub(&other.coords).norm()
    }
}

/// Structure data of a metric 2-step nilpotent Lie algebra.
#[derive(Debug, Clone)]
pub struct StepTwoAlgebra {
    dim_h: usize,
    j: Vec<DMatrix<f64>>,
    labels: Option<Vec<String>>,
    normalization: Option<String>,
    /// `√Σ_a ‖J_a‖²_op`, an upper bound for `‖[h, k]‖ / (‖h‖ ‖k‖)`.
    bracket_bound: f64,
    /// Every `J_a` is block diagonal on the coordinate planes `(2j, 2j+1)`.
    complex_diagonal: bool,
}

impl StepTwoAlgebra {
    /// Validate and build an algebra from its J-maps.
    ///
    /// An empty list gives the abelian algebra `h = ℝ^dim_h`, which the
    /// reduction code treats as flat Euclidean space.
    pub fn new(dim_h: usize, j: Vec<DMatrix<f64>>) -> Result<Self> {
        if dim_h == 0 {
            return Err(Error::Argument("dim_h must be positive".into()));
        }
        for (a, m) in j.iter().enumerate() {
            if m.nrows() != dim_h || m.ncols() != dim_h {
                return Err(Error::Argument(format!(
                    "J_{a} is {}x{}, expected {dim_h}x{dim_h}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let asym = (m + m.transpose()).amax();
            if asym > SKEW_TOL {
                return Err(Error::Argument(format!(
                    "J_{a} is not skew-symmetric (max |J + Jᵀ| = {asym:.3e})"
                )));
            }
        }
        let dim_z = j.len();
        if dim_z > 0 {
            let pairs = dim_h * (dim_h - 1) / 2;
            if pairs < dim_z {
                return Err(Error::Argument(format!(
                    "dim_z = {dim_z} exceeds dim so(h) = {pairs}; bracket cannot be surjective"
                )));
            }
            let mut m = DMatrix::zeros(dim_z, pairs);
            for (a, ja) in j.iter().enumerate() {
                let mut col = 0;
                for i in 0..dim_h {
                    for k in (i + 1)..dim_h {
                        // ⟨J_a e_i, e_k⟩
                        m[(a, col)] = ja[(k, i)];
                        col += 1;
                    }
                }
            }
            let sv = m.singular_values();
            let smax = sv.max();
            let rank = sv.iter().filter(|s| **s > 1e-10 * smax.max(1.0)).count();
            if rank != dim_z {
                return Err(Error::Argument(format!(
                    "bracket is not surjective onto z: rank {rank} < dim_z {dim_z}"
                )));
            }
        }
        let bracket_bound = j
            .iter()
            .map(|m| {
                let s = m.singular_values();
                let top = s.max();
                top * top
            })
            .sum::<f64>()
            .sqrt();
        let complex_diagonal = dim_h % 2 == 0
            && j.iter().all(|m| {
                (0..dim_h).all(|r| {
                    // only the off-diagonal entries of the 2×2 diagonal blocks may be non-zero
                    (0..dim_h).all(|c| (r / 2 == c / 2 && r != c) || m[(r, c)] == 0.0)
                })
            });
        Ok(Self {
            dim_h,
            j,
            labels: None,
            normalization: None,
            bracket_bound,
            complex_diagonal,
        })
    }

    pub fn abelian(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn with_normalization(mut self, note: impl Into<String>) -> Self {
        self.normalization = Some(note.into());
        self
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_z(&self) -> usize {
        self.j.len()
    }

    pub fn dim(&self) -> usize {
        self.dim_h + self.j.len()
    }

    pub fn j_maps(&self) -> &[DMatrix<f64>] {
        &self.j
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn normalization(&self) -> Option<&str> {
        self.normalization.as_deref()
    }

    pub fn bracket_bound(&self) -> f64 {
        self.bracket_bound
    }

    pub(crate) fn is_complex_diagonal(&self) -> bool {
        self.complex_diagonal
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint::identity(self.dim_z(), self.dim_h)
    }

    pub fn check_vector(&self, v: &AlgebraVector) -> Result<()> {
        check_len("z-component", self.dim_z(), v.z.len())?;
        check_len("h-component", self.dim_h, v.h.len())
    }

    pub fn check_point(&self, p: &GroupPoint) -> Result<()> {
        self.check_vector(&p.coords)
    }

    /// `[h, k]`, the z-vector with entries `⟨J_a h, k⟩`.
    pub fn bracket(&self, h: &DVector<f64>, k: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("bracket argument", self.dim_h, h.len())?;
        check_len("bracket argument", self.dim_h, k.len())?;
        let mut out = DVector::zeros(self.dim_z());
        self.bracket_into(h.as_slice(), k.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    pub(crate) fn bracket_into(&self, h: &[f64], k: &[f64], out: &mut [f64]) {
        let n = self.dim_h;
        for (a, ja) in self.j.iter().enumerate() {
            let data = ja.as_slice();
            let mut acc = 0.0;
            // column-major: J[(r, c)] = data[c * n + r]
            for c in 0..n {
                let hc = h[c];
                if hc == 0.0 {
                    continue;
                }
                let col = &data[c * n..(c + 1) * n];
                let mut s = 0.0;
                for r in 0..n {
                    s += col[r] * k[r];
                }
                acc += hc * s;
            }
            out[a] = acc;
        }
    }

    /// `Σ_a z_a J_a`.
    pub fn j_action(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_len("j_action argument", self.dim_z(), z.len())?;
        let mut m = DMatrix::zeros(self.dim_h, self.dim_h);
        for (za, ja) in z.iter().zip(&self.j) {
            if *za != 0.0 {
                m += ja * *za;
            }
        }
        Ok(m)
    }

    /// Group law `(z₁,h₁)(z₂,h₂) = (z₁ + z₂ + ½[h₁,h₂], h₁ + h₂)`.
    pub fn bch_multiply(&self, p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.multiply_unchecked(p, q))
    }

    pub(crate) fn multiply_unchecked(&self, p: &GroupPoint, q: &GroupPoint) -> GroupPoint {
        let mut br = DVector::zeros(self.dim_z());
        self.bracket_into(p.h().as_slice(), q.h().as_slice(), br.as_mut_slice());
        GroupPoint::new(p.z() + q.z() + br * 0.5, p.h() + q.h())
    }

    pub fn inverse(&self, p: &GroupPoint) -> GroupPoint {
        GroupPoint::new(-p.z(), -p.h())
    }

    /// Differential of left translation by `g`: `(δz, δh) ↦ (δz + ½[h_g, δh], δh)`.
    pub fn left_translate_tangent(&self, g: &GroupPoint, u: &AlgebraVector) -> AlgebraVector {
        let mut br = DVector::zeros(self.dim_z());
        self.bracket_into(g.h().as_slice(), u.h.as_slice(), br.as_mut_slice());
        AlgebraVector::new(&u.z + br * 0.5, u.h.clone())
    }

    /// Pull a coordinate tangent vector at `p` back to the identity (`dL_{p⁻¹}`).
    pub fn to_body(&self, p: &GroupPoint, u: &AlgebraVector) -> AlgebraVector {
        let mut br = DVector::zeros(self.dim_z());
        self.bracket_into(p.h().as_slice(), u.h.as_slice(), br.as_mut_slice());
        AlgebraVector::new(&u.z - br * 0.5, u.h.clone())
    }

    /// Left-invariant metric evaluated on coordinate tangent vectors at `p`.
    pub fn metric_at(&self, p: &GroupPoint, u: &AlgebraVector, v: &AlgebraVector) -> Result<f64> {
        self.check_point(p)?;
        self.check_vector(u)?;
        self.check_vector(v)?;
        Ok(self.to_body(p, u).dot(&self.to_body(p, v)))
    }

    /// Serializable form: `{dim_h, dim_z, J}` with row-major matrices.
    pub fn to_json(&self) -> AlgebraJson {
        AlgebraJson {
            dim_h: self.dim_h,
            dim_z: self.dim_z(),
            j: self
                .j
                .iter()
                .map(|m| {
                    let mut flat = Vec::with_capacity(self.dim_h * self.dim_h);
                    for r in 0..self.dim_h {
                        for c in 0..self.dim_h {
                            flat.push(m[(r, c)]);
                        }
                    }
                    MatrixJson::RowMajor(flat)
                })
                .collect(),
            labels: self.labels.clone(),
            normalization: self.normalization.clone(),
        }
    }

    pub fn from_json(doc: &AlgebraJson) -> Result<Self> {
        if doc.j.len() != doc.dim_z {
            return Err(Error::Argument(format!(
                "algebra document declares dim_z = {} but lists {} J-maps",
                doc.dim_z,
                doc.j.len()
            )));
        }
        let n = doc.dim_h;
        let mut maps = Vec::with_capacity(doc.dim_z);
        for (a, m) in doc.j.iter().enumerate() {
            let flat: Vec<f64> = match m {
                MatrixJson::RowMajor(v) => v.clone(),
                MatrixJson::Rows(rows) => {
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(Error::Argument(format!("J_{a} has a row of wrong length")));
                    }
                    rows.iter().flatten().copied().collect()
                }
            };
            if flat.len() != n * n {
                return Err(Error::Argument(format!(
                    "J_{a} has {} entries, expected {}",
                    flat.len(),
                    n * n
                )));
            }
            maps.push(DMatrix::from_row_slice(n, n, &flat));
        }
        let mut alg = Self::new(n, maps)?;
        alg.labels = doc.labels.clone();
        alg.normalization = doc.normalization.clone();
        Ok(alg)
    }
}

/// A J-matrix as stored on disk: either flat row-major or a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    RowMajor(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub dim_h: usize,
    pub dim_z: usize,
    #[serde(rename = "J")]
    pub j: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
}

pub const NQ_NORMALIZATION: &str = "z basis orthonormal under <A,B> = -Re tr(AB) on diagonal imaginary matrices";

/// Eigenvalue vectors `(λ_1, …, λ_q)` of the orthonormalized torus basis
/// `diag(iλ_1, …, iλ_q)`, `Σ λ_j = 0`.
pub fn nq_torus_basis(q: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(q.saturating_sub(1));
    for k in 0..q.saturating_sub(1) {
        let mut v = vec![0.0; q];
        v[k] = 1.0;
        v[k + 1] = -1.0;
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v);
    }
    basis
}

/// Real `2q × 2q` matrix of `diag(iλ_1, …, iλ_q)` acting on `ℂ^q = ℝ^{2q}`
/// with coordinates `(Re w_1, Im w_1, Re w_2, …)`.
pub fn complex_diagonal_matrix(lambdas: &[f64]) -> DMatrix<f64> {
    let n = 2 * lambdas.len();
    let mut m = DMatrix::zeros(n, n);
    for (j, l) in lambdas.iter().enumerate() {
        m[(2 * j, 2 * j + 1)] = -l;
        m[(2 * j + 1, 2 * j)] = *l;
    }
    m
}

/// The group `N_q`: `h = ℂ^q`, `z` = Lie algebra of the maximal torus of `SU(q)`.
pub fn build_nq(q: usize) -> Result<StepTwoAlgebra> {
    if q < 2 {
        return Err(Error::Argument(format!("build_nq needs q >= 2, got {q}")));
    }
    let maps = nq_torus_basis(q)
        .iter()
        .map(|l| complex_diagonal_matrix(l))
        .collect();
    let mut labels: Vec<String> = (1..q).map(|a| format!("t{a}")).collect();
    for j in 1..=q {
        labels.push(format!("re_w{j}"));
        labels.push(format!("im_w{j}"));
    }
    Ok(StepTwoAlgebra::new(2 * q, maps)?
        .with_labels(labels)
        .with_normalization(NQ_NORMALIZATION))
}

/// One invariant block of a skew matrix acting on `h`: a 2-plane `(u, w)`
/// on which it acts as `[[0, −λ], [λ, 0]]`, or a single kernel line.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBlock {
    pub lambda: f64,
    pub u: DVector<f64>,
    pub w: Option<DVector<f64>>,
    /// Coordinates of `h₀` in `(u, w)`; `b = 0` for a line.
    pub a: f64,
    pub b: f64,
}

impl EigenBlock {
    pub fn dim(&self) -> usize {
        if self.w.is_some() {
            2
        } else {
            1
        }
    }

    pub fn weight(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub blocks: Vec<EigenBlock>,
    /// Index into `blocks` of the largest projection of `h₀` and its squared norm.
    pub dominant: (usize, f64),
}

impl SpectralData {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.lambda).collect()
    }

    pub fn dominant_block(&self) -> &EigenBlock {
        &self.blocks[self.dominant.0]
    }

    pub fn projection_sum(&self) -> f64 {
        self.blocks.iter().map(EigenBlock::weight).sum()
    }
}

/// Decompose `h` into the invariant planes of `j_action(z0)` and project `h0`.
pub fn spectral_decompose(alg: &StepTwoAlgebra, z0: &DVector<f64>, h0: &DVector<f64>) -> Result<SpectralData> {
    check_len("z0", alg.dim_z(), z0.len())?;
    check_len("h0", alg.dim_h(), h0.len())?;
    let n = alg.dim_h();
    let zmat = alg.j_action(z0)?;
    let mut planes: Vec<(f64, DVector<f64>, Option<DVector<f64>>)> = Vec::new();

    let coordinate_pairs = |planes: &mut Vec<(f64, DVector<f64>, Option<DVector<f64>>)>, with_lambda: bool| {
        for j in 0..n / 2 {
            let lambda = if with_lambda { zmat[(2 * j + 1, 2 * j)] } else { 0.0 };
            planes.push((lambda, unit(n, 2 * j), Some(unit(n, 2 * j + 1))));
        }
        if n % 2 == 1 {
            planes.push((0.0, unit(n, n - 1), None));
        }
    };

    if zmat.iter().all(|x| *x == 0.0) {
        coordinate_pairs(&mut planes, false);
    } else if alg.is_complex_diagonal() {
        coordinate_pairs(&mut planes, true);
    } else {
        let s = zmat.transpose() * &zmat;
        let eig = s.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &k| eig.eigenvalues[k].total_cmp(&eig.eigenvalues[i]));
        let top = eig.eigenvalues[order[0]].max(1.0);
        let tol = 1e-9 * top;
        let mut i = 0;
        while i < n {
            let mu = eig.eigenvalues[order[i]];
            let mut end = i + 1;
            while end < n && (eig.eigenvalues[order[end]] - mu).abs() <= tol {
                end += 1;
            }
            let cluster: Vec<DVector<f64>> = order[i..end]
                .iter()
                .map(|&c| eig.eigenvectors.column(c).into_owned())
                .collect();
            let mut chosen: Vec<DVector<f64>> = Vec::new();
            let kernel = mu <= tol;
            let lambda = mu.max(0.0).sqrt();
            for cand in &cluster {
                let mut u = cand.clone();
                for c in &chosen {
                    u -= c * c.dot(&u);
                }
                let nu = u.norm();
                if nu < 1e-8 {
                    continue;
                }
                u /= nu;
                if kernel {
                    chosen.push(u);
                } else {
                    let mut w = &zmat * &u / lambda;
                    for c in &chosen {
                        w -= c * c.dot(&w);
                    }
                    w -= &u * u.dot(&w);
                    let nw = w.norm();
                    w /= nw;
                    chosen.push(u.clone());
                    chosen.push(w.clone());
                    planes.push((lambda, u, Some(w)));
                }
            }
            if kernel {
                let mut it = chosen.into_iter();
                while let Some(u) = it.next() {
                    let w = it.next();
                    planes.push((0.0, u, w));
                }
            }
            i = end;
        }
    }

    let blocks: Vec<EigenBlock> = planes
        .into_iter()
        .map(|(lambda, u, w)| {
            let a = u.dot(h0);
            let b = w.as_ref().map_or(0.0, |w| w.dot(h0));
            EigenBlock { lambda, u, w, a, b }
        })
        .collect();
    let dominant = blocks
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, b)| if b.weight() > acc.1 { (i, b.weight()) } else { acc });
    Ok(SpectralData {
        blocks,
        dominant: (dominant.0, dominant.1.max(0.0)),
    })
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}
