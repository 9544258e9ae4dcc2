//! Symmetry groups `Γ ≤ Isom(R^d)` with exact element identity.
//!
//! Structured kinds (cyclic, reflection, dihedral, Klein half-turns,
//! signed permutations, translation lattices and their products) use
//! symbolic canonical forms, so element equality never goes through
//! floating point. Only the `Generated` kind, which holds arbitrary
//! orthogonal matrices, snaps matrix entries to a 1e-9 grid for hashing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::{Error, Result};

/// Per-entry tolerance for orthogonality and representation checks.
pub const ORTHO_TOL: f64 = 1e-9;

const SNAP_GRID: f64 = 1e-9;

/// Default cap on the size of a finitely-generated closure.
pub const DEFAULT_CLOSURE_CAP: usize = 10_000;

/// An affine isometry `x ↦ linear·x + translation`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsometryRep {
    pub linear: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl IsometryRep {
    pub fn identity(dim: usize) -> Self {
        IsometryRep {
            linear: DMatrix::identity(dim, dim),
            translation: DVector::zeros(dim),
        }
    }

    /// Builds a representation, checking dimension and orthogonality.
    pub fn new(linear: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        let d = linear.nrows();
        if d == 0 || d > 8 {
            return Err(Error::BadDimension(d));
        }
        if linear.ncols() != d || translation.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: linear.ncols().max(translation.len()),
            });
        }
        let gram = linear.transpose() * &linear;
        let id = DMatrix::<f64>::identity(d, d);
        if (gram - id).amax() > ORTHO_TOL {
            return Err(Error::NotOrthogonal);
        }
        Ok(IsometryRep { linear, translation })
    }

    pub fn dim(&self) -> usize {
        self.linear.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.linear * x + &self.translation
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &IsometryRep) -> IsometryRep {
        IsometryRep {
            linear: &self.linear * &other.linear,
            translation: &self.linear * &other.translation + &self.translation,
        }
    }

    pub fn inverse(&self) -> IsometryRep {
        let lt = self.linear.transpose();
        let t = -(&lt * &self.translation);
        IsometryRep { linear: lt, translation: t }
    }
}

/// Rotation `R_k(θ)` in the plane spanned by basis vectors `f_k` and `f_d`,
/// mapping `f_d ↦ cos θ·f_d + sin θ·f_k`. `axis_pair` is 1-based, `1 ≤ k ≤ d−1`.
pub fn approx_rotation_rep(dim: usize, axis_pair: usize, theta: f64) -> IsometryRep {
    assert!(axis_pair >= 1 && axis_pair < dim, "axis pair index out of range");
    let (k, d) = (axis_pair - 1, dim - 1);
    let mut m = DMatrix::identity(dim, dim);
    m[(k, k)] = theta.cos();
    m[(k, d)] = theta.sin();
    m[(d, k)] = -theta.sin();
    m[(d, d)] = theta.cos();
    IsometryRep { linear: m, translation: DVector::zeros(dim) }
}

/// The reflection `σ` fixing `f_1,…,f_{d−1}` and negating `f_d`.
pub fn last_axis_reflection_rep(dim: usize) -> IsometryRep {
    let mut m = DMatrix::identity(dim, dim);
    m[(dim - 1, dim - 1)] = -1.0;
    IsometryRep { linear: m, translation: DVector::zeros(dim) }
}

/// Reflection `S_k(θ) = R_k(π−θ/2)^{-1} σ R_k(π−θ/2)`: an involutory
/// isometry of determinant −1 whose mirror is tilted by θ/2 from σ's.
pub fn approx_reflection_rep(dim: usize, axis_pair: usize, theta: f64) -> IsometryRep {
    let r = approx_rotation_rep(dim, axis_pair, PI - theta / 2.0);
    let sigma = last_axis_reflection_rep(dim);
    r.inverse().compose(&sigma).compose(&r)
}

/// Serializable group descriptor; also the JSON schema for groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupDescriptor {
    /// Rotations by multiples of 2π/n about the origin of the plane.
    Cyclic { n: u32 },
    /// The two-element group generated by one plane reflection.
    Reflection {
        #[serde(default)]
        axis_angle: f64,
    },
    /// Rotations by multiples of 2π/n plus n reflections (order 2n).
    Dihedral {
        n: u32,
        #[serde(default)]
        axis_angle: f64,
    },
    /// Half-turns about the three coordinate axes of R^3 plus the identity.
    Klein3d {},
    /// All d×d matrices with one ±1 entry per row and column.
    SignedPerm { d: u8 },
    /// Translation lattice spanned by the basis rows (rank ≤ d).
    Translations { basis: Vec<Vec<f64>> },
    /// Translations composed with {±I}.
    TransInv { basis: Vec<Vec<f64>> },
    /// Translations composed with a finite point group preserving the lattice.
    TransPoint {
        basis: Vec<Vec<f64>>,
        point: Box<GroupDescriptor>,
    },
    /// Closure of explicit orthogonal matrices (optionally with translations).
    Generated {
        matrices: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        translations: Vec<Vec<f64>>,
        #[serde(default)]
        closure_cap: Option<usize>,
    },
}

/// Canonical element form: totally ordered, hashable, exact for the
/// structured kinds.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonicalForm {
    /// Rotation index composed with an optional reflection (2D kinds).
    RotRefl { rot: u32, refl: bool },
    /// 0 = identity, 1..=3 = half-turn about the x/y/z axis.
    Klein(u8),
    /// `(M x)_i = ±x_{perm[i]}`, sign negative when `neg[i]`.
    SignedPerm { perm: Vec<u8>, neg: Vec<bool> },
    /// Integer coordinates with respect to the lattice basis.
    Lattice(Vec<i64>),
    /// Lattice coordinates plus an inversion bit.
    LatticeInv { coeffs: Vec<i64>, inv: bool },
    /// Lattice coordinates plus a point-group element.
    LatticePoint {
        coeffs: Vec<i64>,
        point: Box<CanonicalForm>,
    },
    /// Matrix entries snapped to a 1e-9 grid (Generated kind only).
    Snapped {
        linear: Vec<i64>,
        translation: Vec<i64>,
    },
}

fn snap(x: f64) -> i64 {
    (x / SNAP_GRID).round() as i64
}

fn unsnap(v: i64) -> f64 {
    v as f64 * SNAP_GRID
}

fn snap_rep(rep: &IsometryRep) -> CanonicalForm {
    let d = rep.dim();
    let mut linear = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            linear.push(snap(rep.linear[(i, j)]));
        }
    }
    CanonicalForm::Snapped {
        linear,
        translation: rep.translation.iter().map(|&x| snap(x)).collect(),
    }
}

struct GroupInner {
    descriptor: GroupDescriptor,
    dim: usize,
    /// Lattice basis as matrix columns, with its inverse on the spanned
    /// subspace (square case only), for lattice-kind coordinate arithmetic.
    basis: Option<(DMatrix<f64>, Option<DMatrix<f64>>)>,
    point: Option<SymmetryGroup>,
    closure_cap: usize,
}

/// A symmetry group; cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct SymmetryGroup {
    inner: Arc<GroupInner>,
}

impl PartialEq for SymmetryGroup {
    fn eq(&self, other: &Self) -> bool {
        self.inner.descriptor == other.inner.descriptor
    }
}

impl std::fmt::Debug for SymmetryGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SymmetryGroup({:?})", self.inner.descriptor)
    }
}

/// Group element: a group handle plus a canonical form.
#[derive(Clone)]
pub struct GroupElement {
    group: SymmetryGroup,
    form: CanonicalForm,
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.form == other.form
    }
}
impl Eq for GroupElement {}

impl std::hash::Hash for GroupElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.form.hash(state);
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.form.cmp(&other.form)
    }
}

impl std::fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.form)
    }
}

impl GroupElement {
    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }

    pub fn form(&self) -> &CanonicalForm {
        &self.form
    }

    pub fn is_identity(&self) -> bool {
        self.form == self.group.identity().form
    }

    pub fn inverse(&self) -> GroupElement {
        self.group.inverse(self)
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        self.group.compose(self, other)
    }

    pub fn rep(&self) -> IsometryRep {
        self.group.represent(self)
    }

    pub fn linear_part(&self) -> DMatrix<f64> {
        self.rep().linear
    }

    /// True when the linear part has determinant −1.
    pub fn is_orientation_reversing(&self) -> bool {
        self.linear_part().determinant() < 0.0
    }
}

fn basis_matrix(basis: &[Vec<f64>]) -> Result<(usize, DMatrix<f64>, Option<DMatrix<f64>>)> {
    if basis.is_empty() {
        return Err(Error::DegenerateParameter("empty lattice basis".into()));
    }
    let d = basis[0].len();
    if d == 0 || d > 8 {
        return Err(Error::BadDimension(d));
    }
    for b in basis {
        if b.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: b.len() });
        }
    }
    let r = basis.len();
    if r > d {
        return Err(Error::DegenerateParameter(format!(
            "lattice rank {r} exceeds dimension {d}"
        )));
    }
    let m = DMatrix::from_fn(d, r, |i, j| basis[j][i]);
    if m.rank(1e-12) < r {
        return Err(Error::DegenerateParameter(
            "lattice basis vectors are linearly dependent".into(),
        ));
    }
    let inv = if r == d { m.clone().try_inverse() } else { None };
    Ok((d, m, inv))
}

impl SymmetryGroup {
    pub fn from_descriptor(descriptor: GroupDescriptor) -> Result<SymmetryGroup> {
        let (dim, basis, point, cap) = match &descriptor {
            GroupDescriptor::Cyclic { n } | GroupDescriptor::Dihedral { n, .. } => {
                if *n == 0 {
                    return Err(Error::DegenerateParameter("group order n must be ≥ 1".into()));
                }
                (2, None, None, DEFAULT_CLOSURE_CAP)
            }
            GroupDescriptor::Reflection { .. } => (2, None, None, DEFAULT_CLOSURE_CAP),
            GroupDescriptor::Klein3d {} => (3, None, None, DEFAULT_CLOSURE_CAP),
            GroupDescriptor::SignedPerm { d } => {
                let d = *d as usize;
                if d == 0 || d > 8 {
                    return Err(Error::BadDimension(d));
                }
                (d, None, None, DEFAULT_CLOSURE_CAP)
            }
            GroupDescriptor::Translations { basis } | GroupDescriptor::TransInv { basis } => {
                let (d, m, inv) = basis_matrix(basis)?;
                (d, Some((m, inv)), None, DEFAULT_CLOSURE_CAP)
            }
            GroupDescriptor::TransPoint { basis, point } => {
                let (d, m, inv) = basis_matrix(basis)?;
                let pg = SymmetryGroup::from_descriptor((**point).clone())?;
                if pg.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: pg.dim() });
                }
                // Every point generator must map the lattice into itself.
                let binv = inv.clone().ok_or_else(|| {
                    Error::DegenerateParameter(
                        "translation-point products need a full-rank lattice".into(),
                    )
                })?;
                for g in pg.generators() {
                    let act = &binv * g.linear_part() * &m;
                    for &x in act.iter() {
                        if (x - x.round()).abs() > 1e-7 {
                            return Err(Error::DegenerateParameter(
                                "point group does not preserve the lattice".into(),
                            ));
                        }
                    }
                }
                (d, Some((m, Some(binv))), Some(pg), DEFAULT_CLOSURE_CAP)
            }
            GroupDescriptor::Generated { matrices, translations, closure_cap } => {
                if matrices.is_empty() {
                    return Err(Error::DegenerateParameter("no generator matrices".into()));
                }
                let d = matrices[0].len();
                for (i, m) in matrices.iter().enumerate() {
                    let lin = DMatrix::from_fn(d, d, |r, c| m[r][c]);
                    let t = translations
                        .get(i)
                        .map(|t| DVector::from_vec(t.clone()))
                        .unwrap_or_else(|| DVector::zeros(d));
                    IsometryRep::new(lin, t)?;
                }
                (d, None, None, closure_cap.unwrap_or(DEFAULT_CLOSURE_CAP))
            }
        };
        Ok(SymmetryGroup {
            inner: Arc::new(GroupInner { descriptor, dim, basis, point, closure_cap: cap }),
        })
    }

    pub fn cyclic(n: u32) -> SymmetryGroup {
        SymmetryGroup::from_descriptor(GroupDescriptor::Cyclic { n }).unwrap()
    }

    pub fn reflection() -> SymmetryGroup {
        SymmetryGroup::from_descriptor(GroupDescriptor::Reflection { axis_angle: 0.0 }).unwrap()
    }

    pub fn dihedral(n: u32) -> SymmetryGroup {
        SymmetryGroup::from_descriptor(GroupDescriptor::Dihedral { n, axis_angle: 0.0 }).unwrap()
    }

    pub fn klein3d() -> SymmetryGroup {
        SymmetryGroup::from_descriptor(GroupDescriptor::Klein3d {}).unwrap()
    }

    pub fn signed_perm(d: u8) -> SymmetryGroup {
        SymmetryGroup::from_descriptor(GroupDescriptor::SignedPerm { d }).unwrap()
    }

    pub fn translations(basis: Vec<Vec<f64>>) -> Result<SymmetryGroup> {
        SymmetryGroup::from_descriptor(GroupDescriptor::Translations { basis })
    }

    pub fn trans_inv(basis: Vec<Vec<f64>>) -> Result<SymmetryGroup> {
        SymmetryGroup::from_descriptor(GroupDescriptor::TransInv { basis })
    }

    pub fn trans_point(basis: Vec<Vec<f64>>, point: GroupDescriptor) -> Result<SymmetryGroup> {
        SymmetryGroup::from_descriptor(GroupDescriptor::TransPoint {
            basis,
            point: Box::new(point),
        })
    }

    pub fn generated(reps: &[IsometryRep]) -> Result<SymmetryGroup> {
        let matrices = reps
            .iter()
            .map(|r| {
                (0..r.dim())
                    .map(|i| (0..r.dim()).map(|j| r.linear[(i, j)]).collect())
                    .collect()
            })
            .collect();
        let translations = reps.iter().map(|r| r.translation.iter().copied().collect()).collect();
        SymmetryGroup::from_descriptor(GroupDescriptor::Generated {
            matrices,
            translations,
            closure_cap: None,
        })
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.inner.descriptor
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    fn lattice_rank(&self) -> usize {
        self.inner.basis.as_ref().map(|(m, _)| m.ncols()).unwrap_or(0)
    }

    /// Order of the group when the kind is finite by construction.
    pub fn order(&self) -> Option<usize> {
        match &self.inner.descriptor {
            GroupDescriptor::Cyclic { n } => Some(*n as usize),
            GroupDescriptor::Reflection { .. } => Some(2),
            GroupDescriptor::Dihedral { n, .. } => Some(2 * *n as usize),
            GroupDescriptor::Klein3d {} => Some(4),
            GroupDescriptor::SignedPerm { d } => {
                let d = *d as usize;
                Some((1..=d).product::<usize>() << d)
            }
            _ => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        let form = match &self.inner.descriptor {
            GroupDescriptor::Cyclic { .. }
            | GroupDescriptor::Reflection { .. }
            | GroupDescriptor::Dihedral { .. } => CanonicalForm::RotRefl { rot: 0, refl: false },
            GroupDescriptor::Klein3d {} => CanonicalForm::Klein(0),
            GroupDescriptor::SignedPerm { d } => CanonicalForm::SignedPerm {
                perm: (0..*d).collect(),
                neg: vec![false; *d as usize],
            },
            GroupDescriptor::Translations { .. } => {
                CanonicalForm::Lattice(vec![0; self.lattice_rank()])
            }
            GroupDescriptor::TransInv { .. } => CanonicalForm::LatticeInv {
                coeffs: vec![0; self.lattice_rank()],
                inv: false,
            },
            GroupDescriptor::TransPoint { .. } => CanonicalForm::LatticePoint {
                coeffs: vec![0; self.lattice_rank()],
                point: Box::new(self.inner.point.as_ref().unwrap().identity().form),
            },
            GroupDescriptor::Generated { .. } => snap_rep(&IsometryRep::identity(self.dim())),
        };
        GroupElement { group: self.clone(), form }
    }

    fn element(&self, form: CanonicalForm) -> GroupElement {
        GroupElement { group: self.clone(), form }
    }

    pub(crate) fn element_from_form(&self, form: CanonicalForm) -> GroupElement {
        self.element(form)
    }

    /// Rotation by `2πk/n` in a cyclic or dihedral group.
    pub fn rotation(&self, k: u32) -> Result<GroupElement> {
        match &self.inner.descriptor {
            GroupDescriptor::Cyclic { n } | GroupDescriptor::Dihedral { n, .. } => {
                Ok(self.element(CanonicalForm::RotRefl { rot: k % n, refl: false }))
            }
            GroupDescriptor::Reflection { .. } => {
                Ok(self.element(CanonicalForm::RotRefl { rot: 0, refl: k % 2 == 1 }))
            }
            _ => Err(Error::DegenerateParameter("rotation() needs a 2D point-group kind".into())),
        }
    }

    /// `rot(2πk/n) ∘ σ` in a dihedral (or reflection) group.
    pub fn rotation_reflection(&self, k: u32) -> Result<GroupElement> {
        match &self.inner.descriptor {
            GroupDescriptor::Dihedral { n, .. } => {
                Ok(self.element(CanonicalForm::RotRefl { rot: k % n, refl: true }))
            }
            GroupDescriptor::Reflection { .. } => {
                Ok(self.element(CanonicalForm::RotRefl { rot: 0, refl: true }))
            }
            _ => Err(Error::DegenerateParameter("reflection needs a dihedral kind".into())),
        }
    }

    /// Klein half-turn about axis 1..=3 (0 gives the identity).
    pub fn klein(&self, axis: u8) -> Result<GroupElement> {
        match &self.inner.descriptor {
            GroupDescriptor::Klein3d {} => Ok(self.element(CanonicalForm::Klein(axis & 3))),
            _ => Err(Error::DegenerateParameter("klein() needs the klein3d kind".into())),
        }
    }

    pub fn signed_perm_element(&self, perm: Vec<u8>, neg: Vec<bool>) -> Result<GroupElement> {
        match &self.inner.descriptor {
            GroupDescriptor::SignedPerm { d } => {
                let d = *d as usize;
                let mut seen = vec![false; d];
                if perm.len() != d || neg.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: perm.len() });
                }
                for &p in &perm {
                    if p as usize >= d || seen[p as usize] {
                        return Err(Error::DegenerateParameter("not a permutation".into()));
                    }
                    seen[p as usize] = true;
                }
                Ok(self.element(CanonicalForm::SignedPerm { perm, neg }))
            }
            _ => Err(Error::DegenerateParameter("needs the signed_perm kind".into())),
        }
    }

    /// Lattice translation with the given integer coordinates.
    pub fn translation(&self, coeffs: Vec<i64>) -> Result<GroupElement> {
        let r = self.lattice_rank();
        if coeffs.len() != r {
            return Err(Error::DimensionMismatch { expected: r, got: coeffs.len() });
        }
        match &self.inner.descriptor {
            GroupDescriptor::Translations { .. } => Ok(self.element(CanonicalForm::Lattice(coeffs))),
            GroupDescriptor::TransInv { .. } => {
                Ok(self.element(CanonicalForm::LatticeInv { coeffs, inv: false }))
            }
            GroupDescriptor::TransPoint { .. } => Ok(self.element(CanonicalForm::LatticePoint {
                coeffs,
                point: Box::new(self.inner.point.as_ref().unwrap().identity().form),
            })),
            _ => Err(Error::DegenerateParameter("needs a lattice kind".into())),
        }
    }

    pub fn trans_inv_element(&self, coeffs: Vec<i64>, inv: bool) -> Result<GroupElement> {
        match &self.inner.descriptor {
            GroupDescriptor::TransInv { .. } => {
                let r = self.lattice_rank();
                if coeffs.len() != r {
                    return Err(Error::DimensionMismatch { expected: r, got: coeffs.len() });
                }
                Ok(self.element(CanonicalForm::LatticeInv { coeffs, inv }))
            }
            _ => Err(Error::DegenerateParameter("needs the trans_inv kind".into())),
        }
    }

    pub fn trans_point_element(
        &self,
        coeffs: Vec<i64>,
        point: &GroupElement,
    ) -> Result<GroupElement> {
        match &self.inner.descriptor {
            GroupDescriptor::TransPoint { .. } => {
                let r = self.lattice_rank();
                if coeffs.len() != r {
                    return Err(Error::DimensionMismatch { expected: r, got: coeffs.len() });
                }
                if Some(point.group()) != self.inner.point.as_ref() {
                    return Err(Error::MixedGroups);
                }
                Ok(self.element(CanonicalForm::LatticePoint {
                    coeffs,
                    point: Box::new(point.form.clone()),
                }))
            }
            _ => Err(Error::DegenerateParameter("needs the trans_point kind".into())),
        }
    }

    /// Element of a generated group from an explicit isometry.
    pub fn snapped_element(&self, rep: &IsometryRep) -> Result<GroupElement> {
        match &self.inner.descriptor {
            GroupDescriptor::Generated { .. } => {
                if rep.dim() != self.dim() {
                    return Err(Error::DimensionMismatch { expected: self.dim(), got: rep.dim() });
                }
                Ok(self.element(snap_rep(rep)))
            }
            _ => Err(Error::DegenerateParameter("needs the generated kind".into())),
        }
    }

    /// The point group factor of a `TransPoint` product.
    pub fn point_group(&self) -> Option<&SymmetryGroup> {
        self.inner.point.as_ref()
    }

    pub fn compose(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        if a.group != *self || b.group != *self {
            return Err(Error::MixedGroups);
        }
        let form = match (&self.inner.descriptor, &a.form, &b.form) {
            (
                GroupDescriptor::Cyclic { n },
                CanonicalForm::RotRefl { rot: ka, .. },
                CanonicalForm::RotRefl { rot: kb, .. },
            ) => CanonicalForm::RotRefl { rot: (ka + kb) % n, refl: false },
            (
                GroupDescriptor::Reflection { .. },
                CanonicalForm::RotRefl { refl: sa, .. },
                CanonicalForm::RotRefl { refl: sb, .. },
            ) => CanonicalForm::RotRefl { rot: 0, refl: sa ^ sb },
            (
                GroupDescriptor::Dihedral { n, .. },
                CanonicalForm::RotRefl { rot: ka, refl: sa },
                CanonicalForm::RotRefl { rot: kb, refl: sb },
            ) => {
                // (R_a σ^{sa})(R_b σ^{sb}) = R_{a + (−1)^{sa} b} σ^{sa⊕sb}
                let kb = if *sa { (*n - *kb) % *n } else { *kb };
                CanonicalForm::RotRefl { rot: (ka + kb) % n, refl: sa ^ sb }
            }
            (GroupDescriptor::Klein3d {}, CanonicalForm::Klein(x), CanonicalForm::Klein(y)) => {
                CanonicalForm::Klein(x ^ y)
            }
            (
                GroupDescriptor::SignedPerm { .. },
                CanonicalForm::SignedPerm { perm: pa, neg: na },
                CanonicalForm::SignedPerm { perm: pb, neg: nb },
            ) => {
                // (a∘b x)_i = sa_i (b x)_{pa_i} = sa_i sb_{pa_i} x_{pb_{pa_i}}
                let d = pa.len();
                let mut perm = vec![0u8; d];
                let mut neg = vec![false; d];
                for i in 0..d {
                    let j = pa[i] as usize;
                    perm[i] = pb[j];
                    neg[i] = na[i] ^ nb[j];
                }
                CanonicalForm::SignedPerm { perm, neg }
            }
            (
                GroupDescriptor::Translations { .. },
                CanonicalForm::Lattice(ca),
                CanonicalForm::Lattice(cb),
            ) => CanonicalForm::Lattice(ca.iter().zip(cb).map(|(x, y)| x + y).collect()),
            (
                GroupDescriptor::TransInv { .. },
                CanonicalForm::LatticeInv { coeffs: ca, inv: ia },
                CanonicalForm::LatticeInv { coeffs: cb, inv: ib },
            ) => {
                let s = if *ia { -1 } else { 1 };
                CanonicalForm::LatticeInv {
                    coeffs: ca.iter().zip(cb).map(|(x, y)| x + s * y).collect(),
                    inv: ia ^ ib,
                }
            }
            (
                GroupDescriptor::TransPoint { .. },
                CanonicalForm::LatticePoint { coeffs: ca, point: ga },
                CanonicalForm::LatticePoint { coeffs: cb, point: gb },
            ) => {
                let pg = self.inner.point.as_ref().unwrap();
                let ea = pg.element((**ga).clone());
                let eb = pg.element((**gb).clone());
                let prod = pg.compose(&ea, &eb)?;
                let act = self.lattice_action(&ea)?;
                let mut coeffs = ca.clone();
                for (i, c) in coeffs.iter_mut().enumerate() {
                    for (j, y) in cb.iter().enumerate() {
                        *c += act[(i, j)] * y;
                    }
                }
                CanonicalForm::LatticePoint { coeffs, point: Box::new(prod.form) }
            }
            (GroupDescriptor::Generated { .. }, _, _) => {
                snap_rep(&self.represent(a).compose(&self.represent(b)))
            }
            _ => return Err(Error::MixedGroups),
        };
        Ok(self.element(form))
    }

    /// Integer action of a point-group element on lattice coordinates.
    fn lattice_action(&self, g: &GroupElement) -> Result<DMatrix<i64>> {
        let (b, binv) = self.inner.basis.as_ref().unwrap();
        let binv = binv.as_ref().unwrap();
        let act = binv * g.linear_part() * b;
        let r = act.nrows();
        let mut m = DMatrix::<i64>::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                let x = act[(i, j)];
                if (x - x.round()).abs() > 1e-7 {
                    return Err(Error::DegenerateParameter(
                        "point-group element does not preserve the lattice".into(),
                    ));
                }
                m[(i, j)] = x.round() as i64;
            }
        }
        Ok(m)
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        let form = match (&self.inner.descriptor, &a.form) {
            (GroupDescriptor::Cyclic { n }, CanonicalForm::RotRefl { rot, .. }) => {
                CanonicalForm::RotRefl { rot: (n - rot) % n, refl: false }
            }
            (GroupDescriptor::Reflection { .. }, f) => f.clone(),
            (GroupDescriptor::Dihedral { n, .. }, CanonicalForm::RotRefl { rot, refl }) => {
                if *refl {
                    // reflections are involutions
                    CanonicalForm::RotRefl { rot: *rot, refl: true }
                } else {
                    CanonicalForm::RotRefl { rot: (n - rot) % n, refl: false }
                }
            }
            (GroupDescriptor::Klein3d {}, f) => f.clone(),
            (GroupDescriptor::SignedPerm { .. }, CanonicalForm::SignedPerm { perm, neg }) => {
                let d = perm.len();
                let mut p = vec![0u8; d];
                let mut s = vec![false; d];
                for i in 0..d {
                    p[perm[i] as usize] = i as u8;
                    s[perm[i] as usize] = neg[i];
                }
                CanonicalForm::SignedPerm { perm: p, neg: s }
            }
            (_, CanonicalForm::Lattice(c)) => {
                CanonicalForm::Lattice(c.iter().map(|x| -x).collect())
            }
            (_, CanonicalForm::LatticeInv { coeffs, inv }) => {
                // (t_c ∘ ι^ε)^{-1} = t_{-(−1)^ε c} ∘ ι^ε
                let s = if *inv { 1 } else { -1 };
                CanonicalForm::LatticeInv {
                    coeffs: coeffs.iter().map(|x| s * x).collect(),
                    inv: *inv,
                }
            }
            (GroupDescriptor::TransPoint { .. }, CanonicalForm::LatticePoint { coeffs, point }) => {
                let pg = self.inner.point.as_ref().unwrap();
                let g = pg.element((**point).clone());
                let ginv = pg.inverse(&g);
                let act = self.lattice_action(&ginv).expect("validated on construction");
                let mut c = vec![0i64; coeffs.len()];
                for (i, ci) in c.iter_mut().enumerate() {
                    for (j, y) in coeffs.iter().enumerate() {
                        *ci -= act[(i, j)] * y;
                    }
                }
                CanonicalForm::LatticePoint { coeffs: c, point: Box::new(ginv.form) }
            }
            (GroupDescriptor::Generated { .. }, _) => snap_rep(&self.represent(a).inverse()),
            _ => unreachable!("element form does not match group kind"),
        };
        self.element(form)
    }

    pub fn represent(&self, a: &GroupElement) -> IsometryRep {
        let d = self.dim();
        match (&self.inner.descriptor, &a.form) {
            (
                GroupDescriptor::Cyclic { n } | GroupDescriptor::Dihedral { n, .. },
                CanonicalForm::RotRefl { rot, refl },
            ) => {
                let angle = 2.0 * PI * *rot as f64 / *n as f64;
                let axis = match &self.inner.descriptor {
                    GroupDescriptor::Dihedral { axis_angle, .. } => *axis_angle,
                    _ => 0.0,
                };
                rot_refl_rep(angle, *refl, axis)
            }
            (GroupDescriptor::Reflection { axis_angle }, CanonicalForm::RotRefl { refl, .. }) => {
                rot_refl_rep(0.0, *refl, *axis_angle)
            }
            (GroupDescriptor::Klein3d {}, CanonicalForm::Klein(k)) => {
                let mut m = DMatrix::identity(3, 3);
                if *k != 0 {
                    let axis = (*k - 1) as usize;
                    for i in 0..3 {
                        if i != axis {
                            m[(i, i)] = -1.0;
                        }
                    }
                }
                IsometryRep { linear: m, translation: DVector::zeros(3) }
            }
            (GroupDescriptor::SignedPerm { .. }, CanonicalForm::SignedPerm { perm, neg }) => {
                let mut m = DMatrix::zeros(d, d);
                for i in 0..d {
                    m[(i, perm[i] as usize)] = if neg[i] { -1.0 } else { 1.0 };
                }
                IsometryRep { linear: m, translation: DVector::zeros(d) }
            }
            (_, CanonicalForm::Lattice(c)) => IsometryRep {
                linear: DMatrix::identity(d, d),
                translation: self.lattice_vector(c),
            },
            (_, CanonicalForm::LatticeInv { coeffs, inv }) => {
                let mut m = DMatrix::identity(d, d);
                if *inv {
                    m *= -1.0;
                }
                IsometryRep { linear: m, translation: self.lattice_vector(coeffs) }
            }
            (GroupDescriptor::TransPoint { .. }, CanonicalForm::LatticePoint { coeffs, point }) => {
                let pg = self.inner.point.as_ref().unwrap();
                let g = pg.element((**point).clone());
                IsometryRep {
                    linear: g.linear_part(),
                    translation: self.lattice_vector(coeffs),
                }
            }
            (GroupDescriptor::Generated { .. }, CanonicalForm::Snapped { linear, translation }) => {
                IsometryRep {
                    linear: DMatrix::from_fn(d, d, |i, j| unsnap(linear[i * d + j])),
                    translation: DVector::from_fn(d, |i, _| unsnap(translation[i])),
                }
            }
            _ => unreachable!("element form does not match group kind"),
        }
    }

    fn lattice_vector(&self, coeffs: &[i64]) -> DVector<f64> {
        let (b, _) = self.inner.basis.as_ref().unwrap();
        let mut v = DVector::zeros(self.dim());
        for (j, &c) in coeffs.iter().enumerate() {
            v += b.column(j) * c as f64;
        }
        v
    }

    pub fn linear_part(&self, a: &GroupElement) -> DMatrix<f64> {
        self.represent(a).linear
    }

    /// True for kinds whose element count is fixed a priori.
    pub fn is_finite_kind(&self) -> bool {
        self.order().is_some()
    }

    /// All elements, identity first, in a deterministic order.
    pub fn enumerate(&self) -> Result<Vec<GroupElement>> {
        match &self.inner.descriptor {
            GroupDescriptor::Cyclic { n } => Ok((0..*n)
                .map(|k| self.element(CanonicalForm::RotRefl { rot: k, refl: false }))
                .collect()),
            GroupDescriptor::Reflection { .. } => Ok(vec![
                self.element(CanonicalForm::RotRefl { rot: 0, refl: false }),
                self.element(CanonicalForm::RotRefl { rot: 0, refl: true }),
            ]),
            GroupDescriptor::Dihedral { n, .. } => {
                let mut out = Vec::with_capacity(2 * *n as usize);
                for refl in [false, true] {
                    for k in 0..*n {
                        out.push(self.element(CanonicalForm::RotRefl { rot: k, refl }));
                    }
                }
                Ok(out)
            }
            GroupDescriptor::Klein3d {} => {
                Ok((0..4).map(|k| self.element(CanonicalForm::Klein(k))).collect())
            }
            GroupDescriptor::SignedPerm { d } => {
                let d = *d as usize;
                let mut perms = Vec::new();
                let mut cur: Vec<u8> = (0..d as u8).collect();
                loop {
                    perms.push(cur.clone());
                    if !next_permutation(&mut cur) {
                        break;
                    }
                }
                let mut out = Vec::new();
                for p in &perms {
                    for bits in 0..(1u32 << d) {
                        let neg = (0..d).map(|i| bits >> i & 1 == 1).collect();
                        out.push(self.element(CanonicalForm::SignedPerm {
                            perm: p.clone(),
                            neg,
                        }));
                    }
                }
                Ok(out)
            }
            GroupDescriptor::Generated { .. } => self.closure(),
            other => Err(Error::UnsupportedEnumeration(descriptor_kind(other).into())),
        }
    }

    /// BFS closure of a generated group, aborting above the cap.
    fn closure(&self) -> Result<Vec<GroupElement>> {
        let gens = self.generators();
        let id = self.identity();
        let mut seen: HashSet<CanonicalForm> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(id.form.clone());
        queue.push_back(id.clone());
        let mut out = vec![id];
        while let Some(e) = queue.pop_front() {
            for g in &gens {
                for prod in [self.compose(&e, g)?, self.compose(&e, &g.inverse())?] {
                    if seen.insert(prod.form.clone()) {
                        if seen.len() > self.inner.closure_cap {
                            return Err(Error::ClosureCapExceeded { cap: self.inner.closure_cap });
                        }
                        queue.push_back(prod.clone());
                        out.push(prod);
                    }
                }
            }
        }
        let id_form = out[0].form.clone();
        out.sort();
        if let Some(pos) = out.iter().position(|e| e.form == id_form) {
            out.swap(0, pos);
        }
        Ok(out)
    }

    /// A finite generating set (used by the trivial-flex system).
    pub fn generators(&self) -> Vec<GroupElement> {
        match &self.inner.descriptor {
            GroupDescriptor::Cyclic { n } => {
                if *n <= 1 {
                    vec![]
                } else {
                    vec![self.element(CanonicalForm::RotRefl { rot: 1, refl: false })]
                }
            }
            GroupDescriptor::Reflection { .. } => {
                vec![self.element(CanonicalForm::RotRefl { rot: 0, refl: true })]
            }
            GroupDescriptor::Dihedral { n, .. } => {
                let mut gens = vec![self.element(CanonicalForm::RotRefl { rot: 0, refl: true })];
                if *n > 1 {
                    gens.insert(0, self.element(CanonicalForm::RotRefl { rot: 1, refl: false }));
                }
                gens
            }
            GroupDescriptor::Klein3d {} => {
                vec![
                    self.element(CanonicalForm::Klein(1)),
                    self.element(CanonicalForm::Klein(2)),
                ]
            }
            GroupDescriptor::SignedPerm { d } => {
                let d = *d as usize;
                let mut gens = Vec::new();
                let mut neg = vec![false; d];
                neg[0] = true;
                gens.push(self.element(CanonicalForm::SignedPerm {
                    perm: (0..d as u8).collect(),
                    neg,
                }));
                if d >= 2 {
                    let mut swap: Vec<u8> = (0..d as u8).collect();
                    swap.swap(0, 1);
                    gens.push(self.element(CanonicalForm::SignedPerm {
                        perm: swap,
                        neg: vec![false; d],
                    }));
                    let cycle: Vec<u8> =
                        (0..d).map(|i| ((i + 1) % d) as u8).collect();
                    gens.push(self.element(CanonicalForm::SignedPerm {
                        perm: cycle,
                        neg: vec![false; d],
                    }));
                }
                gens
            }
            GroupDescriptor::Translations { .. } => {
                let r = self.lattice_rank();
                (0..r)
                    .map(|i| {
                        let mut c = vec![0i64; r];
                        c[i] = 1;
                        self.element(CanonicalForm::Lattice(c))
                    })
                    .collect()
            }
            GroupDescriptor::TransInv { .. } => {
                let r = self.lattice_rank();
                let mut gens: Vec<GroupElement> = (0..r)
                    .map(|i| {
                        let mut c = vec![0i64; r];
                        c[i] = 1;
                        self.element(CanonicalForm::LatticeInv { coeffs: c, inv: false })
                    })
                    .collect();
                gens.push(self.element(CanonicalForm::LatticeInv {
                    coeffs: vec![0; r],
                    inv: true,
                }));
                gens
            }
            GroupDescriptor::TransPoint { .. } => {
                let r = self.lattice_rank();
                let pg = self.inner.point.as_ref().unwrap();
                let mut gens: Vec<GroupElement> = (0..r)
                    .map(|i| {
                        let mut c = vec![0i64; r];
                        c[i] = 1;
                        self.element(CanonicalForm::LatticePoint {
                            coeffs: c,
                            point: Box::new(pg.identity().form),
                        })
                    })
                    .collect();
                for g in pg.generators() {
                    gens.push(self.element(CanonicalForm::LatticePoint {
                        coeffs: vec![0; r],
                        point: Box::new(g.form),
                    }));
                }
                gens
            }
            GroupDescriptor::Generated { matrices, translations, .. } => {
                let d = self.dim();
                matrices
                    .iter()
                    .enumerate()
                    .map(|(i, m)| {
                        let lin = DMatrix::from_fn(d, d, |r, c| m[r][c]);
                        let t = translations
                            .get(i)
                            .map(|t| DVector::from_vec(t.clone()))
                            .unwrap_or_else(|| DVector::zeros(d));
                        self.element(snap_rep(&IsometryRep { linear: lin, translation: t }))
                    })
                    .collect()
            }
        }
    }

    /// Element `R_k(θ)` of a generated group: the rotation in the
    /// `f_k f_d`-plane mapping `f_d ↦ cos θ·f_d + sin θ·f_k`.
    pub fn approx_rotation(&self, axis_pair: usize, theta: f64) -> Result<GroupElement> {
        self.snapped_element(&approx_rotation_rep(self.dim(), axis_pair, theta))
    }

    /// Element `S_k(θ) = R_k(π−θ/2)^{-1} σ R_k(π−θ/2)` of a generated
    /// group (involutory, determinant −1).
    pub fn approx_reflection(&self, axis_pair: usize, theta: f64) -> Result<GroupElement> {
        self.snapped_element(&approx_reflection_rep(self.dim(), axis_pair, theta))
    }

    /// Dimension `k(Γ)` of the space of isometries preserving Γ-symmetry:
    /// the solution space of `{(T,x) : T skew, Tγ_ℓ = γ_ℓT, T t_γ + x = γ_ℓ x}`
    /// over all generators γ.
    pub fn trivial_flex_dimension(&self) -> usize {
        trivial_motion_space(self).len()
    }
}

/// `R(angle) ∘ σ_axis^refl` where `σ_axis` reflects across the line at
/// `axis_angle` through the origin.
fn rot_refl_rep(angle: f64, refl: bool, axis_angle: f64) -> IsometryRep {
    let (c, s) = (angle.cos(), angle.sin());
    let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let lin = if refl {
        let (c2, s2) = ((2.0 * axis_angle).cos(), (2.0 * axis_angle).sin());
        let sigma = DMatrix::from_row_slice(2, 2, &[c2, s2, s2, -c2]);
        rot * sigma
    } else {
        rot
    };
    IsometryRep { linear: lin, translation: DVector::zeros(2) }
}

fn next_permutation(p: &mut [u8]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn descriptor_kind(d: &GroupDescriptor) -> &'static str {
    match d {
        GroupDescriptor::Cyclic { .. } => "cyclic",
        GroupDescriptor::Reflection { .. } => "reflection",
        GroupDescriptor::Dihedral { .. } => "dihedral",
        GroupDescriptor::Klein3d {} => "klein3d",
        GroupDescriptor::SignedPerm { .. } => "signed_perm",
        GroupDescriptor::Translations { .. } => "translations",
        GroupDescriptor::TransInv { .. } => "trans_inv",
        GroupDescriptor::TransPoint { .. } => "trans_point",
        GroupDescriptor::Generated { .. } => "generated",
    }
}

/// Basis of the `(T, x)` solution space of the symmetry-preservation
/// system, with `T` skew-symmetric. Each entry is `(T, x)`.
pub fn trivial_motion_space(group: &SymmetryGroup) -> Vec<(DMatrix<f64>, DVector<f64>)> {
    let d = group.dim();
    let skew_dim = d * (d - 1) / 2;
    let nvars = skew_dim + d;
    let skew_basis: Vec<DMatrix<f64>> = {
        let mut out = Vec::with_capacity(skew_dim);
        for a in 0..d {
            for b in (a + 1)..d {
                let mut m = DMatrix::zeros(d, d);
                m[(a, b)] = 1.0;
                m[(b, a)] = -1.0;
                out.push(m);
            }
        }
        out
    };

    let gens = group.generators();
    let nrows = gens.len() * (d * d + d);
    let mut sys = DMatrix::<f64>::zeros(nrows.max(1), nvars);
    let mut row = 0;
    for g in &gens {
        let rep = g.rep();
        for (v, e) in skew_basis.iter().enumerate() {
            let comm = e * &rep.linear - &rep.linear * e;
            for i in 0..d {
                for j in 0..d {
                    sys[(row + i * d + j, v)] = comm[(i, j)];
                }
            }
            let tv = e * &rep.translation;
            for i in 0..d {
                sys[(row + d * d + i, v)] = tv[i];
            }
        }
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                sys[(row + d * d + i, skew_dim + j)] = delta - rep.linear[(i, j)];
            }
        }
        row += d * d + d;
    }

    let null = nullspace(&sys, 1e-9);
    null.into_iter()
        .map(|v| {
            let mut t = DMatrix::zeros(d, d);
            for (idx, e) in skew_basis.iter().enumerate() {
                t += e * v[idx];
            }
            let x = DVector::from_fn(d, |i, _| v[skew_dim + i]);
            (t, x)
        })
        .collect()
}

/// Orthonormal basis of the kernel of `m`.
pub fn nullspace(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    if m.ncols() == 0 {
        return vec![];
    }
    if m.nrows() == 0 {
        return (0..m.ncols())
            .map(|i| DVector::from_fn(m.ncols(), |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
    }
    // nalgebra's thin SVD returns min(m,n) rows of V^T; pad so every
    // kernel direction shows up.
    if m.nrows() < m.ncols() {
        let mut padded = DMatrix::zeros(m.ncols(), m.ncols());
        padded.rows_mut(0, m.nrows()).copy_from(m);
        return nullspace(&padded, tol);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = tol * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    (rank..vt.nrows()).map(|i| vt.row(i).transpose()).collect()
}
