//! Exterior algebra over `R^n` for `n <= 8`.
//!
//! Elements of `Λ_k R^n` ([`MultiVector`]) and `Λ^k R^n` ([`CoVector`]) are
//! stored densely over the increasing `k`-subsets of `{0, .., n-1}` in
//! lexicographic order. Subsets are handled internally as bitmasks, which is
//! why the dimension is capped at [`MAX_DIM`].
//!
//! An element may carry a *witness*: a list of `k` vectors whose wedge product
//! is exactly the element. Witnesses survive wedge products, scaling and linear
//! pushforward, and they are what [`Graded::simple_mass`] needs.

use std::fmt;
use std::marker::PhantomData;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use thiserror::Error;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("dimension {0} is outside the supported range 0..={MAX_DIM}")]
    UnsupportedDimension(usize),
    #[error("grade {grade} is out of range for dimension {dim}")]
    GradeOutOfRange { grade: usize, dim: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("grade mismatch: {0} vs {1}")]
    GradeMismatch(usize, usize),
    #[error("coefficient array has length {got}, expected {expected}")]
    CoefficientLength { got: usize, expected: usize },
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("mass undefined without simple witness")]
    MassUndefined,
}

pub type Result<T> = std::result::Result<T, ExteriorError>;

/// Marker for elements of `Λ_k` (vectors).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Up;

/// Marker for elements of `Λ^k` (forms).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Down;

/// A homogeneous element of grade `k` in the exterior algebra of `R^n`.
///
/// `V` is either [`Up`] or [`Down`]; the pairing is only defined between the
/// two, so mixing them up is a type error.
#[derive(Clone, PartialEq)]
pub struct Graded<V> {
    dim: usize,
    grade: usize,
    coeffs: Vec<f64>,
    witness: Option<Vec<Vec<f64>>>,
    overflow: bool,
    _variance: PhantomData<V>,
}

pub type MultiVector = Graded<Up>;
pub type CoVector = Graded<Down>;

struct BasisTables {
    // subsets[n][k] lists the k-subsets of {0..n-1} as bitmasks in lex order
    subsets: Vec<Vec<Vec<u16>>>,
    // rank[n][mask] is the position of `mask` inside subsets[n][popcount(mask)]
    rank: Vec<Vec<u16>>,
}

fn tables() -> &'static BasisTables {
    static TABLES: OnceLock<BasisTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut subsets = Vec::with_capacity(MAX_DIM + 1);
        let mut rank = Vec::with_capacity(MAX_DIM + 1);
        for n in 0..=MAX_DIM {
            let mut by_grade = Vec::with_capacity(n + 1);
            let mut ranks = vec![0u16; 1 << n];
            for k in 0..=n {
                let mut list = Vec::new();
                let mut current = Vec::with_capacity(k);
                lex_subsets(n, k, 0, &mut current, &mut list);
                for (i, &mask) in list.iter().enumerate() {
                    ranks[mask as usize] = i as u16;
                }
                by_grade.push(list);
            }
            subsets.push(by_grade);
            rank.push(ranks);
        }
        BasisTables { subsets, rank }
    })
}

fn lex_subsets(n: usize, k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<u16>) {
    if current.len() == k {
        out.push(current.iter().fold(0u16, |m, &i| m | (1 << i)));
        return;
    }
    for i in start..n {
        current.push(i);
        lex_subsets(n, k, i + 1, current, out);
        current.pop();
    }
}

/// Basis bitmasks of `Λ_k R^n` in lexicographic order.
pub fn basis(n: usize, k: usize) -> &'static [u16] {
    &tables().subsets[n][k]
}

/// Position of a basis bitmask in the lexicographic order of its grade.
pub fn basis_rank(n: usize, mask: u16) -> usize {
    tables().rank[n][mask as usize] as usize
}

/// Increasing index list of a basis bitmask.
pub fn mask_indices(mask: u16) -> Vec<usize> {
    (0..16).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Sign of the permutation that sorts the concatenation `a ++ b` of two
/// disjoint increasing index sets.
fn merge_sign(a: u16, b: u16) -> f64 {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let q = rest.trailing_zeros();
        swaps += (a >> (q + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check_shape(dim: usize, grade: usize) -> Result<()> {
    if dim > MAX_DIM {
        return Err(ExteriorError::UnsupportedDimension(dim));
    }
    if grade > dim {
        return Err(ExteriorError::GradeOutOfRange { grade, dim });
    }
    Ok(())
}

/// Determinant of a small row-major square matrix by partial pivoting.
pub(crate) fn small_det(mat: &mut [f64], k: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..k {
        let mut pivot = col;
        for row in col + 1..k {
            if mat[row * k + col].abs() > mat[pivot * k + col].abs() {
                pivot = row;
            }
        }
        let p = mat[pivot * k + col];
        if p == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..k {
                mat.swap(col * k + c, pivot * k + c);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..k {
            let factor = mat[row * k + col] / p;
            if factor != 0.0 {
                for c in col..k {
                    mat[row * k + c] -= factor * mat[col * k + c];
                }
            }
        }
    }
    det
}

impl<V> Graded<V> {
    fn raw(dim: usize, grade: usize, coeffs: Vec<f64>, witness: Option<Vec<Vec<f64>>>) -> Self {
        Self {
            dim,
            grade,
            coeffs,
            witness,
            overflow: false,
            _variance: PhantomData,
        }
    }

    pub fn zero(dim: usize, grade: usize) -> Result<Self> {
        check_shape(dim, grade)?;
        Ok(Self::raw(dim, grade, vec![0.0; binomial(dim, grade)], None))
    }

    /// Grade-0 element with value `c`.
    pub fn scalar(dim: usize, c: f64) -> Result<Self> {
        check_shape(dim, 0)?;
        Ok(Self::raw(dim, 0, vec![c], None))
    }

    pub fn from_coeffs(dim: usize, grade: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_shape(dim, grade)?;
        let expected = binomial(dim, grade);
        if coeffs.len() != expected {
            return Err(ExteriorError::CoefficientLength {
                got: coeffs.len(),
                expected,
            });
        }
        Ok(Self::raw(dim, grade, coeffs, None))
    }

    /// `coeff * e_{i1} ∧ .. ∧ e_{ik}` for an arbitrary index tuple. The tuple
    /// is sorted with the permutation sign; a repeated index gives zero.
    pub fn from_indices(dim: usize, indices: &[usize], coeff: f64) -> Result<Self> {
        let grade = indices.len();
        check_shape(dim, grade)?;
        let mut out = Self::zero(dim, grade)?;
        let mut mask = 0u16;
        let mut sign = 1.0;
        for &i in indices {
            if i >= dim {
                return Err(ExteriorError::IndexOutOfRange { index: i, dim });
            }
            let bit = 1u16 << i;
            if mask & bit != 0 {
                return Ok(out);
            }
            sign *= merge_sign(mask, bit);
            mask |= bit;
        }
        out.coeffs[basis_rank(dim, mask)] = sign * coeff;
        Ok(out)
    }

    /// Grade-1 element with a witness.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        check_shape(v.len(), 1)?;
        Ok(Self::raw(v.len(), 1, v.to_vec(), Some(vec![v.to_vec()])))
    }

    /// The simple element `v1 ∧ .. ∧ vk`, keeping the factors as witness.
    pub fn from_vectors(dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        check_shape(dim, vectors.len())?;
        let mut acc = Self::raw(dim, 0, vec![1.0], None);
        for v in vectors {
            if v.len() != dim {
                return Err(ExteriorError::DimensionMismatch(dim, v.len()));
            }
            acc = acc.wedge(&Self::from_vector(v)?)?;
        }
        acc.witness = Some(vectors.to_vec());
        Ok(acc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn witness(&self) -> Option<&[Vec<f64>]> {
        self.witness.as_deref()
    }

    /// Set when a wedge product overflowed the top grade.
    pub fn is_flagged(&self) -> bool {
        self.overflow
    }

    /// Coefficient of the basis element with the given increasing indices.
    pub fn coeff(&self, indices: &[usize]) -> f64 {
        let mask = indices.iter().fold(0u16, |m, &i| m | (1 << i));
        if mask.count_ones() as usize != self.grade || indices.len() != self.grade {
            return 0.0;
        }
        self.coeffs[basis_rank(self.dim, mask)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Euclidean norm of the coefficient array.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let witness = self.witness.as_ref().map(|w| {
            let mut w = w.clone();
            if let Some(first) = w.first_mut() {
                first.iter_mut().for_each(|x| *x *= s);
            }
            w
        });
        let mut out = Self::raw(
            self.dim,
            self.grade,
            self.coeffs.iter().map(|c| c * s).collect(),
            witness,
        );
        out.overflow = self.overflow;
        if self.grade == 0 {
            out.witness = None;
        }
        out
    }

    /// Sum of two elements of the same shape; the witness is dropped.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut out = Self::raw(
            self.dim,
            self.grade,
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            None,
        );
        out.overflow = self.overflow || other.overflow;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch(self.dim, other.dim));
        }
        if self.grade != other.grade {
            return Err(ExteriorError::GradeMismatch(self.grade, other.grade));
        }
        Ok(())
    }

    /// Exterior product. If `j + k > n` the result is the zero element of
    /// grade `n` with [`Graded::is_flagged`] set.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch(self.dim, other.dim));
        }
        let n = self.dim;
        let grade = self.grade + other.grade;
        if grade > n {
            let mut out = Self::zero(n, n)?;
            out.overflow = true;
            return Ok(out);
        }
        let mut coeffs = vec![0.0; binomial(n, grade)];
        let left = basis(n, self.grade);
        let right = basis(n, other.grade);
        for (&ma, &ca) in left.iter().zip(&self.coeffs) {
            if ca == 0.0 {
                continue;
            }
            for (&mb, &cb) in right.iter().zip(&other.coeffs) {
                if cb == 0.0 || ma & mb != 0 {
                    continue;
                }
                coeffs[basis_rank(n, ma | mb)] += merge_sign(ma, mb) * ca * cb;
            }
        }
        let witness = match (&self.witness, &other.witness) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        let mut out = Self::raw(n, grade, coeffs, witness);
        out.overflow = self.overflow || other.overflow;
        if out.grade == 0 {
            out.witness = None;
        }
        Ok(out)
    }

    /// `Λ^k A` applied to this element, where `A` is an `m × n` matrix.
    /// Coefficients are computed from the `k × k` minors of `A`; a witness is
    /// mapped vector by vector.
    pub fn push_linear(&self, a: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        if n != self.dim {
            return Err(ExteriorError::DimensionMismatch(n, self.dim));
        }
        let k = self.grade;
        check_shape(m, k)?;
        let rows = basis(m, k);
        let cols = basis(n, k);
        let mut coeffs = vec![0.0; rows.len()];
        let mut minor = vec![0.0; k * k];
        for (ci, &cmask) in cols.iter().enumerate() {
            let c = self.coeffs[ci];
            if c == 0.0 {
                continue;
            }
            let col_idx = mask_indices(cmask);
            for (ri, &rmask) in rows.iter().enumerate() {
                let row_idx = mask_indices(rmask);
                for (p, &r) in row_idx.iter().enumerate() {
                    for (q, &s) in col_idx.iter().enumerate() {
                        minor[p * k + q] = a[(r, s)];
                    }
                }
                coeffs[ri] += c * small_det(&mut minor, k);
            }
        }
        let witness = self.witness.as_ref().map(|w| {
            w.iter()
                .map(|v| {
                    (0..m)
                        .map(|r| (0..n).map(|s| a[(r, s)] * v[s]).sum())
                        .collect()
                })
                .collect()
        });
        let mut out = Self::raw(m, k, coeffs, witness);
        out.overflow = self.overflow;
        Ok(out)
    }

    /// Mass norm of a simple element: `sqrt(det Gram(v1..vk))` of the witness,
    /// or the coefficient norm when the grade is `0`, `1` or `n`.
    pub fn simple_mass(&self) -> Result<f64> {
        if self.grade == 0 || self.grade == 1 || self.grade == self.dim {
            return Ok(self.coeff_norm());
        }
        let w = self.witness.as_ref().ok_or(ExteriorError::MassUndefined)?;
        let k = w.len();
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] = w[i].iter().zip(&w[j]).map(|(a, b)| a * b).sum();
            }
        }
        Ok(small_det(&mut gram, k).max(0.0).sqrt())
    }
}

impl MultiVector {
    /// The duality pairing `⟨self, w⟩`. Grades must agree.
    pub fn pair(&self, w: &CoVector) -> Result<f64> {
        if self.dim != w.dim {
            return Err(ExteriorError::DimensionMismatch(self.dim, w.dim));
        }
        if self.grade != w.grade {
            return Err(ExteriorError::GradeMismatch(self.grade, w.grade));
        }
        Ok(self.coeffs.iter().zip(&w.coeffs).map(|(a, b)| a * b).sum())
    }
}

impl CoVector {
    /// Interior product `i_v self`, contracting in the first slot.
    pub fn contract(&self, v: &[f64]) -> Result<CoVector> {
        if v.len() != self.dim {
            return Err(ExteriorError::DimensionMismatch(self.dim, v.len()));
        }
        if self.grade == 0 {
            return CoVector::zero(self.dim, 0);
        }
        let n = self.dim;
        let mut out = CoVector::zero(n, self.grade - 1)?;
        for (&mask, &c) in basis(n, self.grade).iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            for (p, i) in mask_indices(mask).into_iter().enumerate() {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                out.coeffs[basis_rank(n, mask & !(1 << i))] += sign * v[i] * c;
            }
        }
        Ok(out)
    }
}

impl<V> std::ops::Neg for Graded<V> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<V> fmt::Debug for Graded<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        write!(f, "Λ{}(R^{})[", self.grade, self.dim)?;
        for (&mask, &c) in basis(self.dim, self.grade).iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let idx: Vec<String> = mask_indices(mask)
                .iter()
                .map(|i| (i + 1).to_string())
                .collect();
            write!(f, "{c}·e{}", idx.join(""))?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, "]")
    }
}
