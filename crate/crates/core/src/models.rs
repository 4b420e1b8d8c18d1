//! Low-dimensional model sets and their orthogonal projections.
//!
//! Every variant is a homogeneous, proximinal subset of `ℝ^N`. Low-rank
//! matrices are flattened row-major, so a `rows × cols` model lives in
//! `ℝ^(rows·cols)`.
//!
//! When the distance minimizer is not unique the canonical representative
//! keeps the lowest indices (coordinates, Haar coefficients, or subspaces).
//! [`ModelSet::project_all`] lists the alternatives for sparse and union
//! models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    binomial, haar_forward, haar_inverse, is_power_of_two, sample_gaussian, svd_small, Combinations,
    Matrix, RngStream, Vector,
};

const TIE_RTOL: f64 = 1e-12;
const MAX_MINIMIZERS: u128 = 64;
const SECANT_RETRIES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSet {
    SparseK { n: usize, k: usize },
    Subspace { basis: Matrix },
    UnionOfSubspaces { bases: Vec<Matrix> },
    LowRank { rows: usize, cols: usize, rank: usize },
    HaarSparseK { n: usize, k: usize },
}

#[derive(Clone, Debug)]
pub struct ProjectionResult {
    pub canonical: Vector,
    /// Every distance minimizer, canonical first. `None` when the model does
    /// not enumerate ties or the minimizer is unique.
    pub minimizers: Option<Vec<Vector>>,
}

impl ModelSet {
    pub fn sparse(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("sparse model needs 1 <= k <= N, got k={k}, N={n}")));
        }
        Ok(ModelSet::SparseK { n, k })
    }

    pub fn haar_sparse(n: usize, k: usize) -> Result<Self> {
        if !is_power_of_two(n) {
            return Err(Error::HaarDimension(n));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("haar model needs 1 <= k <= N, got k={k}, N={n}")));
        }
        Ok(ModelSet::HaarSparseK { n, k })
    }

    pub fn low_rank(rows: usize, cols: usize, rank: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if rank == 0 || rank > rows.min(cols) {
            return Err(Error::InvalidParameter(format!(
                "low-rank model needs 1 <= r <= min(rows, cols), got r={rank}"
            )));
        }
        if rows.min(cols) > 64 {
            return Err(Error::InvalidParameter("low-rank model limited to min(rows, cols) <= 64".into()));
        }
        Ok(ModelSet::LowRank { rows, cols, rank })
    }

    pub fn subspace(basis: Matrix) -> Result<Self> {
        check_orthonormal(&basis)?;
        Ok(ModelSet::Subspace { basis })
    }

    pub fn union(bases: Vec<Matrix>) -> Result<Self> {
        let first = bases.first().ok_or(Error::EmptyMatrix)?;
        let n = first.rows();
        for b in &bases {
            if b.rows() != n {
                return Err(Error::DimensionMismatch { expected: n, found: b.rows() });
            }
            check_orthonormal(b)?;
        }
        Ok(ModelSet::UnionOfSubspaces { bases })
    }

    /// `span{(1, ε)} ∪ span{(1, -ε)}` in `ℝ²`.
    pub fn eps_lines(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        let s = (1.0 + eps * eps).sqrt();
        let v = Matrix::new(2, 1, vec![1.0 / s, eps / s])?;
        let w = Matrix::new(2, 1, vec![1.0 / s, -eps / s])?;
        Self::union(vec![v, w])
    }

    /// Orthonormalizes the given spanning vectors (Gram–Schmidt) into a subspace model.
    pub fn span(vectors: &[Vector]) -> Result<Self> {
        let mut cols: Vec<Vector> = Vec::new();
        for v in vectors {
            let mut w = v.clone();
            for _ in 0..2 {
                for c in &cols {
                    w = w.axpy(-c.dot(&w), c);
                }
            }
            let n = w.norm();
            if n > 1e-12 * (1.0 + v.norm()) {
                cols.push(w.scale(1.0 / n));
            }
        }
        Self::subspace(Matrix::from_columns(&cols)?)
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            ModelSet::SparseK { n, .. } | ModelSet::HaarSparseK { n, .. } => *n,
            ModelSet::Subspace { basis } => basis.rows(),
            ModelSet::UnionOfSubspaces { bases } => bases[0].rows(),
            ModelSet::LowRank { rows, cols, .. } => rows * cols,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSet::SparseK { .. } => "sparse",
            ModelSet::Subspace { .. } => "subspace",
            ModelSet::UnionOfSubspaces { .. } => "union",
            ModelSet::LowRank { .. } => "low-rank",
            ModelSet::HaarSparseK { .. } => "haar-sparse",
        }
    }

    /// The canonical orthogonal projection of `z` onto the model.
    pub fn project(&self, z: &Vector) -> Result<Vector> {
        z.check_dim(self.ambient_dim())?;
        Ok(match self {
            ModelSet::SparseK { k, .. } => hard_threshold(z, *k),
            ModelSet::HaarSparseK { k, .. } => {
                let c = haar_forward(z)?;
                haar_inverse(&hard_threshold(&c, *k))?
            }
            ModelSet::Subspace { basis } => project_onto_basis(basis, z),
            ModelSet::UnionOfSubspaces { bases } => {
                let (projections, best) = union_projections(bases, z);
                projections.into_iter().nth(best).expect("non-empty union")
            }
            ModelSet::LowRank { rows, cols, rank } => truncate_rank(*rows, *cols, *rank, z)?,
        })
    }

    /// Orthogonal projection with tie enumeration.
    pub fn project_all(&self, z: &Vector) -> Result<ProjectionResult> {
        z.check_dim(self.ambient_dim())?;
        match self {
            ModelSet::SparseK { k, .. } => {
                let minimizers = sparse_minimizers(z, *k)?;
                Ok(ProjectionResult { canonical: minimizers[0].clone(), minimizers: multi(minimizers) })
            }
            ModelSet::HaarSparseK { k, .. } => {
                let c = haar_forward(z)?;
                let minimizers = sparse_minimizers(&c, *k)?
                    .iter()
                    .map(haar_inverse)
                    .collect::<Result<Vec<_>>>()?;
                Ok(ProjectionResult { canonical: minimizers[0].clone(), minimizers: multi(minimizers) })
            }
            ModelSet::UnionOfSubspaces { bases } => {
                let (projections, best) = union_projections(bases, z);
                let dists: Vec<f64> = projections.iter().map(|p| p.distance(z)).collect();
                let dmin = dists[best];
                let slack = TIE_RTOL * dmin + 1e-15 * z.norm();
                let mut list = vec![projections[best].clone()];
                for (j, p) in projections.iter().enumerate() {
                    if j != best && dists[j] <= dmin + slack {
                        list.push(p.clone());
                    }
                }
                if list.len() as u128 > MAX_MINIMIZERS {
                    return Err(Error::TooManyMinimizers(list.len() as u128));
                }
                Ok(ProjectionResult { canonical: list[0].clone(), minimizers: multi(list) })
            }
            _ => Ok(ProjectionResult { canonical: self.project(z)?, minimizers: None }),
        }
    }

    /// `‖x − P(x)‖ ≤ tol·(1 + ‖x‖)`
    pub fn membership(&self, x: &Vector, tol: f64) -> Result<bool> {
        let p = self.project(x)?;
        Ok(p.distance(x) <= tol * (1.0 + x.norm()))
    }

    /// A random element of the model; every support or subspace has
    /// positive probability.
    pub fn sample(&self, rng: &mut RngStream) -> Vector {
        match self {
            ModelSet::SparseK { n, k } => sparse_sample(*n, *k, *n, rng),
            ModelSet::HaarSparseK { n, k } => {
                haar_inverse(&sparse_sample(*n, *k, *n, rng)).expect("power-of-two length")
            }
            ModelSet::Subspace { basis } => combine(basis, rng),
            ModelSet::UnionOfSubspaces { bases } => {
                let j = rng.next_below(bases.len() as u64) as usize;
                combine(&bases[j], rng)
            }
            ModelSet::LowRank { rows, cols, rank } => {
                let left = sample_gaussian(rng, rows * rank);
                let right = sample_gaussian(rng, rank * cols);
                let l = Matrix::from_raw(*rows, *rank, left.into_vec());
                let r = Matrix::from_raw(*rank, *cols, right.into_vec());
                l.matmul(&r).expect("conformant").scale(1.0 / (*rank as f64).sqrt()).to_vector()
            }
        }
    }

    /// Like [`ModelSet::sample`], but for sparse models the support is drawn
    /// from the first `limit` coordinates (Haar: the `limit` coarsest
    /// coefficients). Other variants ignore `limit`.
    pub fn sample_restricted(&self, rng: &mut RngStream, limit: usize) -> Result<Vector> {
        match self {
            ModelSet::SparseK { n, k } | ModelSet::HaarSparseK { n, k } => {
                if limit < *k || limit > *n {
                    return Err(Error::InvalidParameter(format!(
                        "support limit {limit} must lie in [k, N] = [{k}, {n}]"
                    )));
                }
                let v = sparse_sample(*n, *k, limit, rng);
                if matches!(self, ModelSet::HaarSparseK { .. }) {
                    haar_inverse(&v)
                } else {
                    Ok(v)
                }
            }
            _ => Ok(self.sample(rng)),
        }
    }

    /// A unit vector `(x₁ − x₂)/‖x₁ − x₂‖` of the secant set.
    pub fn secant_sample(&self, rng: &mut RngStream) -> Result<Vector> {
        for _ in 0..SECANT_RETRIES {
            let a = self.sample(rng);
            let b = self.sample(rng);
            let d = a.sub(&b);
            let n = d.norm();
            if n > 1e-12 * (1.0 + a.norm() + b.norm()) {
                return Ok(d.scale(1.0 / n));
            }
        }
        Err(Error::DegenerateSecant(SECANT_RETRIES))
    }

    /// Elements of the model whose span is the span of the whole model.
    pub fn spanning_directions(&self) -> Vec<Vector> {
        match self {
            ModelSet::SparseK { n, .. } => (0..*n).map(|i| Vector::basis(*n, i)).collect(),
            ModelSet::HaarSparseK { n, .. } => (0..*n)
                .map(|i| haar_inverse(&Vector::basis(*n, i)).expect("power-of-two length"))
                .collect(),
            ModelSet::Subspace { basis } => (0..basis.cols()).map(|j| basis.column(j)).collect(),
            ModelSet::UnionOfSubspaces { bases } => bases
                .iter()
                .flat_map(|b| (0..b.cols()).map(move |j| b.column(j)))
                .collect(),
            ModelSet::LowRank { rows, cols, .. } => {
                let n = rows * cols;
                (0..n).map(|i| Vector::basis(n, i)).collect()
            }
        }
    }

    /// Points known to stress restricted Lipschitz constants: `k+1` equal
    /// entries for sparse models, sums and differences of generators for
    /// unions, `r+1` equal singular values for low rank.
    pub fn extremal_points(&self) -> Vec<Vector> {
        match self {
            ModelSet::SparseK { n, k } if k < n => vec![Vector::ones_prefix(*n, k + 1)],
            ModelSet::HaarSparseK { n, k } if k < n => {
                vec![haar_inverse(&Vector::ones_prefix(*n, k + 1)).expect("power-of-two length")]
            }
            ModelSet::UnionOfSubspaces { bases } => {
                let m = bases.len().min(16);
                let mut out = Vec::new();
                for i in 0..m {
                    for j in i + 1..m {
                        let a = bases[i].column(0);
                        let b = bases[j].column(0);
                        for combo in [a.add(&b), a.sub(&b)] {
                            if combo.norm() > 1e-12 {
                                out.push(combo.scale(1.0 / combo.norm()));
                            }
                        }
                    }
                }
                out
            }
            ModelSet::LowRank { rows, cols, rank } if *rank < (*rows).min(*cols) => {
                let mut m = Matrix::zeros(*rows, *cols);
                for i in 0..=*rank {
                    m.set(i, i, 1.0);
                }
                vec![m.to_vector()]
            }
            _ => Vec::new(),
        }
    }
}

fn multi(list: Vec<Vector>) -> Option<Vec<Vector>> {
    if list.len() > 1 {
        Some(list)
    } else {
        None
    }
}

fn check_orthonormal(basis: &Matrix) -> Result<()> {
    if basis.cols() > basis.rows() {
        return Err(Error::InvalidParameter("subspace basis has more columns than rows".into()));
    }
    let defect = basis.orthonormality_defect();
    if defect > 1e-10 {
        return Err(Error::InvalidParameter(format!("basis columns are not orthonormal (defect {defect:.3e})")));
    }
    Ok(())
}

/// Indices ordered by decreasing magnitude, ties broken by lower index.
pub(crate) fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    idx
}

/// Keeps the `k` largest-magnitude entries (lowest index on ties).
pub fn hard_threshold(z: &Vector, k: usize) -> Vector {
    let order = magnitude_order(z.as_slice());
    let mut out = vec![0.0; z.dim()];
    for &i in order.iter().take(k) {
        out[i] = z[i];
    }
    Vector::from_raw(out)
}

fn sparse_minimizers(z: &Vector, k: usize) -> Result<Vec<Vector>> {
    let canonical = hard_threshold(z, k);
    let n = z.dim();
    if k >= n {
        return Ok(vec![canonical]);
    }
    let order = magnitude_order(z.as_slice());
    let tau = z[order[k - 1]].abs();
    if tau == 0.0 {
        return Ok(vec![canonical]);
    }
    let lo = tau * (1.0 - TIE_RTOL);
    let hi = tau * (1.0 + TIE_RTOL);
    let definite: Vec<usize> = (0..n).filter(|&i| z[i].abs() > hi).collect();
    let tied: Vec<usize> = (0..n).filter(|&i| z[i].abs() >= lo && z[i].abs() <= hi).collect();
    let need = k - definite.len();
    let count = binomial(tied.len(), need);
    if count <= 1 {
        return Ok(vec![canonical]);
    }
    if count > MAX_MINIMIZERS {
        return Err(Error::TooManyMinimizers(count));
    }
    let mut list = vec![canonical.clone()];
    for pick in Combinations::new(tied.len(), need) {
        let mut v = vec![0.0; n];
        for &i in &definite {
            v[i] = z[i];
        }
        for &p in &pick {
            v[tied[p]] = z[tied[p]];
        }
        let v = Vector::from_raw(v);
        if v != canonical {
            list.push(v);
        }
    }
    Ok(list)
}

fn project_onto_basis(basis: &Matrix, z: &Vector) -> Vector {
    let coeffs = basis.matvec_t(z).expect("ambient dimension checked");
    basis.matvec(&coeffs).expect("ambient dimension checked")
}

/// Projections onto each subspace and the index of the canonical one.
fn union_projections(bases: &[Matrix], z: &Vector) -> (Vec<Vector>, usize) {
    let projections: Vec<Vector> = bases.iter().map(|b| project_onto_basis(b, z)).collect();
    let dists: Vec<f64> = projections.iter().map(|p| p.distance(z)).collect();
    let dmin = dists.iter().cloned().fold(f64::INFINITY, f64::min);
    let slack = TIE_RTOL * dmin + 1e-15 * z.norm();
    let best = dists.iter().position(|&d| d <= dmin + slack).expect("non-empty union");
    (projections, best)
}

fn truncate_rank(rows: usize, cols: usize, rank: usize, z: &Vector) -> Result<Vector> {
    let m = Matrix::from_vector(rows, cols, z)?;
    let svd = svd_small(&m)?;
    let mut out = Matrix::zeros(rows, cols);
    for t in 0..rank.min(svd.s.dim()) {
        let s = svd.s[t];
        if s == 0.0 {
            continue;
        }
        for i in 0..rows {
            let ui = svd.u.get(i, t) * s;
            for j in 0..cols {
                out.set(i, j, out.get(i, j) + ui * svd.v.get(j, t));
            }
        }
    }
    Ok(out.to_vector())
}

fn sparse_sample(n: usize, k: usize, limit: usize, rng: &mut RngStream) -> Vector {
    let support = rng.choose_distinct(limit, k);
    let mut v = vec![0.0; n];
    for i in support {
        v[i] = rng.normal();
    }
    Vector::from_raw(v)
}

fn combine(basis: &Matrix, rng: &mut RngStream) -> Vector {
    let g = sample_gaussian(rng, basis.cols());
    basis.matvec(&g).expect("conformant")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(data: &[f64]) -> Vector {
        Vector::new(data.to_vec()).unwrap()
    }

    fn all_variants() -> Vec<ModelSet> {
        let plane = ModelSet::span(&[v(&[1.0, 0.0, 1.0, 0.0]), v(&[0.0, 1.0, 0.0, -1.0])]).unwrap();
        let ModelSet::Subspace { basis: b1 } = plane.clone() else { unreachable!() };
        let ModelSet::Subspace { basis: b2 } =
            ModelSet::span(&[v(&[1.0, 1.0, 0.0, 0.0]), v(&[0.0, 0.0, 1.0, 2.0])]).unwrap()
        else {
            unreachable!()
        };
        vec![
            ModelSet::sparse(8, 3).unwrap(),
            plane,
            ModelSet::union(vec![b1, b2]).unwrap(),
            ModelSet::eps_lines(0.1).unwrap(),
            ModelSet::low_rank(4, 3, 1).unwrap(),
            ModelSet::haar_sparse(16, 3).unwrap(),
        ]
    }

    #[test]
    fn sparse_keeps_top_magnitudes() {
        let set = ModelSet::sparse(3, 2).unwrap();
        assert_eq!(set.project(&v(&[3.0, 1.0, 2.0])).unwrap(), v(&[3.0, 0.0, 2.0]));
    }

    #[test]
    fn sparse_ties_take_lowest_index_and_enumerate() {
        let set = ModelSet::sparse(4, 2).unwrap();
        let r = set.project_all(&v(&[1.0, 3.0, 1.0, -1.0])).unwrap();
        assert_eq!(r.canonical, v(&[1.0, 3.0, 0.0, 0.0]));
        let list = r.minimizers.unwrap();
        assert_eq!(list.len(), 3);
        let d0 = list[0].distance(&v(&[1.0, 3.0, 1.0, -1.0]));
        for m in &list {
            assert!((m.distance(&v(&[1.0, 3.0, 1.0, -1.0])) - d0).abs() <= 1e-12 * d0);
        }
    }

    #[test]
    fn too_many_ties_is_an_error() {
        let set = ModelSet::sparse(12, 6).unwrap();
        assert!(matches!(set.project_all(&Vector::constant(12, 1.0)), Err(Error::TooManyMinimizers(924))));
    }

    #[test]
    fn eps_lines_report_both_minimizers() {
        let eps = 0.1;
        let set = ModelSet::eps_lines(eps).unwrap();
        let z = v(&[1.0, 0.0]);
        let r = set.project_all(&z).unwrap();
        let list = r.minimizers.unwrap();
        assert_eq!(list.len(), 2);
        let s = 1.0 + eps * eps;
        assert!(list[0].distance(&v(&[1.0 / s, eps / s])) < 1e-15);
        assert!(list[1].distance(&v(&[1.0 / s, -eps / s])) < 1e-15);
        for m in &list {
            assert!((m.distance(&z) - eps / s.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn full_rank_projection_is_identity() {
        let set = ModelSet::low_rank(3, 3, 3).unwrap();
        let z = sample_gaussian(&mut RngStream::new(3, 3), 9);
        assert!(set.project(&z).unwrap().distance(&z) < 1e-12);
    }

    #[test]
    fn membership_examples() {
        let s = ModelSet::sparse(4, 2).unwrap();
        assert!(s.membership(&v(&[1.0, 0.0, 2.0, 0.0]), 1e-12).unwrap());
        assert!(!s.membership(&v(&[1.0, 1.0, 1.0, 0.0]), 1e-12).unwrap());
        let line = ModelSet::span(&[v(&[1.0, 0.0])]).unwrap();
        assert!(!line.membership(&v(&[0.0, 1.0]), 1e-12).unwrap());
        for set in all_variants() {
            assert!(set.membership(&Vector::zeros(set.ambient_dim()), 1e-12).unwrap());
            assert_eq!(set.project(&Vector::zeros(set.ambient_dim())).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn samples_are_members() {
        let mut rng = RngStream::new(1, 0);
        for set in all_variants() {
            for _ in 0..20 {
                let x = set.sample(&mut rng);
                assert!(set.membership(&x, 1e-10).unwrap(), "{}", set.name());
            }
        }
        let s = ModelSet::sparse(8, 2).unwrap();
        assert!(s.sample(&mut rng).count_nonzero(0.0) <= 2);
        let lr = ModelSet::low_rank(4, 4, 1).unwrap();
        let m = Matrix::from_vector(4, 4, &lr.sample(&mut rng)).unwrap();
        assert!(svd_small(&m).unwrap().s[1] <= 1e-10);
    }

    #[test]
    fn sampling_visits_many_supports() {
        let s = ModelSet::sparse(8, 2).unwrap();
        let mut supports = std::collections::HashSet::new();
        for id in 0..100 {
            let x = s.sample(&mut RngStream::new(4, id));
            let sup: Vec<usize> = (0..8).filter(|&i| x[i] != 0.0).collect();
            supports.insert(sup);
        }
        assert!(supports.len() >= 2);
    }

    #[test]
    fn secants_are_unit_and_structured() {
        let mut rng = RngStream::new(8, 1);
        let s1 = ModelSet::sparse(6, 1).unwrap();
        for _ in 0..1000 {
            let d = s1.secant_sample(&mut rng).unwrap();
            assert!((d.norm() - 1.0).abs() < 1e-12);
            assert!(d.count_nonzero(0.0) <= 2);
        }
        let plane = ModelSet::span(&[v(&[1.0, 1.0, 0.0])]).unwrap();
        let d = plane.secant_sample(&mut rng).unwrap();
        assert!(plane.membership(&d, 1e-12).unwrap());
    }

    #[test]
    fn restricted_sampling_stays_coarse() {
        let h = ModelSet::haar_sparse(64, 4).unwrap();
        let x = h.sample_restricted(&mut RngStream::new(1, 2), 8).unwrap();
        let c = haar_forward(&x).unwrap();
        assert!(c.as_slice()[8..].iter().all(|v| v.abs() < 1e-12));
        assert!(h.sample_restricted(&mut RngStream::new(1, 2), 2).is_err());
    }

    #[test]
    fn spanning_directions_lie_in_the_model() {
        for set in all_variants() {
            for d in set.spanning_directions() {
                assert!(set.membership(&d, 1e-12).unwrap(), "{}", set.name());
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(ModelSet::sparse(3, 0).is_err());
        assert!(ModelSet::sparse(3, 4).is_err());
        assert!(ModelSet::low_rank(3, 3, 4).is_err());
        assert!(ModelSet::haar_sparse(12, 2).is_err());
        let bad = Matrix::new(2, 1, vec![1.0, 1.0]).unwrap();
        assert!(ModelSet::subspace(bad).is_err());
        assert!(matches!(
            ModelSet::sparse(3, 2).unwrap().project(&Vector::zeros(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn seeded(seed: u64, set: &ModelSet) -> Vector {
            let mut rng = RngStream::new(seed, 77);
            // mix a model element with isotropic noise
            set.sample(&mut rng).add(&sample_gaussian(&mut rng, set.ambient_dim()))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn projection_geometry(seed in 0u64..100_000, which in 0usize..6) {
                let set = &all_variants()[which];
                let z = seeded(seed, set);
                let p = set.project(&z).unwrap();
                let scale = 1.0 + z.norm_sq();
                // projection direction is orthogonal to the projection
                prop_assert!(p.dot(&p.sub(&z)).abs() <= 1e-9 * scale);
                // Pythagoras
                let lhs = z.norm_sq();
                let rhs = z.sub(&p).norm_sq() + p.norm_sq();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
                // idempotence
                prop_assert!(set.project(&p).unwrap().distance(&p) <= 1e-12 * (1.0 + p.norm()));
                // membership of the projection
                prop_assert!(set.membership(&p, 1e-10).unwrap());
            }

            #[test]
            fn projection_is_homogeneous(seed in 0u64..100_000, which in 0usize..6) {
                let set = &all_variants()[which];
                let z = seeded(seed, set);
                let p = set.project(&z).unwrap();
                for lambda in [-2.0, 0.5, 3.0] {
                    let pl = set.project(&z.scale(lambda)).unwrap();
                    let d1 = pl.distance(&z.scale(lambda));
                    let d2 = p.distance(&z) * f64::abs(lambda);
                    prop_assert!((d1 - d2).abs() <= 1e-9 * (1.0 + d2));
                    prop_assert!(pl.distance(&p.scale(lambda)) <= 1e-9 * (1.0 + z.norm() * f64::abs(lambda)));
                }
            }

            #[test]
            fn residual_distance_is_one_lipschitz(seed in 0u64..100_000, which in 0usize..6) {
                let set = &all_variants()[which];
                let z = seeded(seed, set);
                let y = seeded(seed + 1_000_000, set);
                let dz = z.distance(&set.project(&z).unwrap());
                let dy = y.distance(&set.project(&y).unwrap());
                prop_assert!((dz - dy).abs() <= z.distance(&y) + 1e-12);
            }
        }
    }
}
