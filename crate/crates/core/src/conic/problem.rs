use crate::error::{Error, Result};
use crate::qmath::{c64, identity, matrix_unit, total_dim, zeros, CMatrix, C64};

/// Handle of a matrix variable inside an [`SdpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId(pub(crate) usize);

impl BlockId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A matrix variable. `hermitian = false` restricts it to real symmetric matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub name: String,
    pub dim: usize,
    pub hermitian: bool,
}

impl BlockSpec {
    /// Number of real coordinates.
    pub fn real_dim(&self) -> usize {
        if self.hermitian {
            self.dim * self.dim
        } else {
            self.dim * (self.dim + 1) / 2
        }
    }
}

/// Linear map on matrices `X ↦ Σ_k c_k L_k X R_k`.
///
/// Every map used in this crate (scaling, partial trace, partial transpose,
/// sub-block selection, trace functionals, scalar broadcast) has this form,
/// and maps compose by multiplying their terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LinMap {
    pub in_dim: usize,
    pub out_dim: usize,
    pub terms: Vec<(C64, CMatrix, CMatrix)>,
}

impl LinMap {
    pub fn identity(n: usize) -> Self {
        Self::scale(n, 1.0)
    }

    pub fn scale(n: usize, a: f64) -> Self {
        Self {
            in_dim: n,
            out_dim: n,
            terms: vec![(c64(a, 0.0), identity(n), identity(n))],
        }
    }

    /// `X ↦ L X L†`.
    pub fn congruence(l: &CMatrix) -> Self {
        Self {
            in_dim: l.ncols(),
            out_dim: l.nrows(),
            terms: vec![(c64(1.0, 0.0), l.clone(), l.adjoint())],
        }
    }

    /// `X ↦ tr(W X)` as a 1×1 matrix.
    pub fn trace_with(w: &CMatrix) -> Self {
        let n = w.nrows();
        let terms = (0..n)
            .map(|k| {
                let left = CMatrix::from_fn(1, n, |_, j| w[(k, j)]);
                let mut right = zeros(n, 1);
                right[(k, 0)] = c64(1.0, 0.0);
                (c64(1.0, 0.0), left, right)
            })
            .collect();
        Self {
            in_dim: n,
            out_dim: 1,
            terms,
        }
    }

    /// 1×1 input `x ↦ x·M`.
    pub fn broadcast(m: &CMatrix) -> Self {
        let n = m.nrows();
        let terms = (0..n)
            .map(|k| {
                let left = CMatrix::from_fn(n, 1, |i, _| m[(i, k)]);
                let mut right = zeros(1, n);
                right[(0, k)] = c64(1.0, 0.0);
                (c64(1.0, 0.0), left, right)
            })
            .collect();
        Self {
            in_dim: 1,
            out_dim: n,
            terms,
        }
    }

    /// Partial trace over the factors not listed in `keep`.
    pub fn partial_trace(dims: &[usize], keep: &[usize]) -> Result<Self> {
        let n = total_dim(dims);
        let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
        if keep.iter().any(|&k| k >= dims.len()) {
            return Err(Error::InvalidSubsystem(format!("keep {keep:?} for dims {dims:?}")));
        }
        let mut sorted_keep = keep.to_vec();
        sorted_keep.sort_unstable();
        if sorted_keep != keep {
            return Err(Error::InvalidSubsystem("keep list must be ascending".into()));
        }
        let keep_dim: usize = keep.iter().map(|&k| dims[k]).product();
        let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
        let nt = total_dim(&traced_dims);
        let mut terms = Vec::with_capacity(nt);
        for t in 0..nt {
            let td = crate::qmath::digits(t, &traced_dims);
            // L = I_keep ⊗ ⟨t| arranged in the original factor order
            let mut l = zeros(keep_dim, n);
            for col in 0..n {
                let d = crate::qmath::digits(col, dims);
                if traced.iter().zip(&td).all(|(&k, &v)| d[k] == v) {
                    let kd: Vec<usize> = keep.iter().map(|&k| d[k]).collect();
                    let kdims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
                    let row = crate::qmath::from_digits(&kd, &kdims);
                    l[(row, col)] = c64(1.0, 0.0);
                }
            }
            let r = l.adjoint();
            terms.push((c64(1.0, 0.0), l, r));
        }
        Ok(Self {
            in_dim: n,
            out_dim: keep_dim,
            terms,
        })
    }

    /// Transpose of one tensor factor: `Σ_ij (I⊗|i⟩⟨j|⊗I) X (I⊗|i⟩⟨j|⊗I)`.
    pub fn partial_transpose(dims: &[usize], subsystem: usize) -> Result<Self> {
        if subsystem >= dims.len() {
            return Err(Error::InvalidSubsystem(format!(
                "subsystem {subsystem} for dims {dims:?}"
            )));
        }
        let before: usize = dims[..subsystem].iter().product();
        let after: usize = dims[subsystem + 1..].iter().product();
        let d = dims[subsystem];
        let mut terms = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let e = identity(before)
                    .kronecker(&matrix_unit(d, i, j))
                    .kronecker(&identity(after));
                terms.push((c64(1.0, 0.0), e.clone(), e));
            }
        }
        let n = total_dim(dims);
        Ok(Self {
            in_dim: n,
            out_dim: n,
            terms,
        })
    }

    /// Principal sub-block on the listed row/column indices.
    pub fn select(n: usize, indices: &[usize]) -> Self {
        let mut l = zeros(indices.len(), n);
        for (r, &i) in indices.iter().enumerate() {
            l[(r, i)] = c64(1.0, 0.0);
        }
        Self::congruence(&l)
    }

    /// `self` followed by `after`.
    pub fn then(&self, after: &LinMap) -> LinMap {
        assert_eq!(self.out_dim, after.in_dim, "LinMap composition shape");
        let mut terms = Vec::with_capacity(self.terms.len() * after.terms.len());
        for (c2, l2, r2) in &after.terms {
            for (c1, l1, r1) in &self.terms {
                terms.push((c1 * c2, l2 * l1, r1 * r2));
            }
        }
        LinMap {
            in_dim: self.in_dim,
            out_dim: after.out_dim,
            terms,
        }
    }

    pub fn scaled(mut self, a: f64) -> Self {
        for t in &mut self.terms {
            t.0 *= a;
        }
        self
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = zeros(self.out_dim, self.out_dim);
        for (c, l, r) in &self.terms {
            out += (l * x * r) * *c;
        }
        out
    }

    /// Adjoint for the real inner product `Re tr(A† B)`, Hermitian part taken.
    pub fn adjoint_apply(&self, y: &CMatrix) -> CMatrix {
        let mut out = zeros(self.in_dim, self.in_dim);
        for (c, l, r) in &self.terms {
            out += (l.adjoint() * y * r.adjoint()) * c.conj();
        }
        crate::qmath::hermitian_part(&out)
    }
}

/// Affine matrix-valued expression `Σ maps(blocks) + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub dim: usize,
    pub terms: Vec<(BlockId, LinMap)>,
    pub constant: CMatrix,
}

impl Expr {
    pub fn var(block: BlockId, dim: usize) -> Self {
        Self {
            dim,
            terms: vec![(block, LinMap::identity(dim))],
            constant: zeros(dim, dim),
        }
    }

    pub fn constant(m: CMatrix) -> Self {
        Self {
            dim: m.nrows(),
            terms: Vec::new(),
            constant: m,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(zeros(dim, dim))
    }

    /// Scalar (1×1) block times a fixed matrix.
    pub fn scalar_times(block: BlockId, m: &CMatrix) -> Self {
        Self {
            dim: m.nrows(),
            terms: vec![(block, LinMap::broadcast(m))],
            constant: zeros(m.nrows(), m.nrows()),
        }
    }

    pub fn term(block: BlockId, map: LinMap) -> Self {
        let dim = map.out_dim;
        Self {
            dim,
            terms: vec![(block, map)],
            constant: zeros(dim, dim),
        }
    }

    pub fn map(&self, m: &LinMap) -> Self {
        assert_eq!(self.dim, m.in_dim, "expression/map shape");
        Self {
            dim: m.out_dim,
            terms: self.terms.iter().map(|(b, t)| (*b, t.then(m))).collect(),
            constant: m.apply(&self.constant),
        }
    }

    pub fn plus(mut self, other: &Expr) -> Self {
        assert_eq!(self.dim, other.dim, "expression sum shape");
        self.terms.extend(other.terms.iter().cloned());
        self.constant += &other.constant;
        self
    }

    pub fn minus(self, other: &Expr) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    pub fn plus_const(mut self, m: &CMatrix) -> Self {
        self.constant += m;
        self
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(b, t)| (*b, t.clone().scaled(a)))
                .collect(),
            constant: &self.constant * c64(a, 0.0),
        }
    }

    pub fn trace(&self) -> Self {
        self.map(&LinMap::trace_with(&identity(self.dim)))
    }

    pub fn trace_with(&self, w: &CMatrix) -> Self {
        self.map(&LinMap::trace_with(w))
    }

    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Self> {
        Ok(self.map(&LinMap::partial_trace(dims, keep)?))
    }

    pub fn partial_transpose(&self, dims: &[usize], subsystem: usize) -> Result<Self> {
        Ok(self.map(&LinMap::partial_transpose(dims, subsystem)?))
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        self.map(&LinMap::select(self.dim, indices))
    }

    /// Value at given block values.
    pub fn eval(&self, blocks: &[CMatrix]) -> CMatrix {
        let mut out = self.constant.clone();
        for (b, m) in &self.terms {
            out += m.apply(&blocks[b.0]);
        }
        out
    }
}

/// `expr` equals `target` on the listed entries (all entries when `entries` is `None`).
#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub expr: Expr,
    pub target: CMatrix,
    pub entries: Option<Vec<(usize, usize)>>,
}

impl Equality {
    pub fn all(expr: Expr, target: CMatrix) -> Self {
        Self {
            expr,
            target,
            entries: None,
        }
    }

    pub fn entries(expr: Expr, target: CMatrix, entries: Vec<(usize, usize)>) -> Self {
        Self {
            expr,
            target,
            entries: Some(entries),
        }
    }

    /// Scalar equality on a 1×1 expression.
    pub fn scalar(expr: Expr, target: f64) -> Self {
        let mut t = zeros(1, 1);
        t[(0, 0)] = c64(target, 0.0);
        Self::all(expr, t)
    }

    pub(crate) fn entry_list(&self) -> Vec<(usize, usize)> {
        match &self.entries {
            Some(e) => e.clone(),
            None => {
                let n = self.expr.dim;
                (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
            }
        }
    }
}

/// `expr ⪰ 0` for a Hermitian-valued expression.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdConstraint {
    pub expr: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A semidefinite program over Hermitian (or real symmetric) matrix blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub equalities: Vec<Equality>,
    pub psd: Vec<PsdConstraint>,
    /// 1×1 expression; its real part is the objective.
    pub objective: Expr,
    pub sense: Sense,
}

impl Default for SdpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        Self {
            blocks: Vec::new(),
            equalities: Vec::new(),
            psd: Vec::new(),
            objective: Expr::zero(1),
            sense: Sense::Minimize,
        }
    }

    pub fn add_block(&mut self, name: &str, dim: usize, hermitian: bool) -> BlockId {
        self.blocks.push(BlockSpec {
            name: name.to_string(),
            dim,
            hermitian,
        });
        BlockId(self.blocks.len() - 1)
    }

    /// Real scalar variable (a 1×1 real block).
    pub fn add_scalar(&mut self, name: &str) -> BlockId {
        self.add_block(name, 1, false)
    }

    pub fn var(&self, b: BlockId) -> Expr {
        Expr::var(b, self.blocks[b.0].dim)
    }

    pub fn add_equality(&mut self, eq: Equality) {
        self.equalities.push(eq);
    }

    pub fn add_psd(&mut self, expr: Expr) {
        self.psd.push(PsdConstraint { expr });
    }

    /// `expr ≥ 0` for a 1×1 expression.
    pub fn add_nonneg(&mut self, expr: Expr) {
        assert_eq!(expr.dim, 1, "nonnegativity needs a scalar expression");
        self.add_psd(expr);
    }

    pub fn set_objective(&mut self, sense: Sense, expr: Expr) {
        self.sense = sense;
        self.objective = expr;
    }

    pub fn block(&self, b: BlockId) -> &BlockSpec {
        &self.blocks[b.0]
    }

    /// Dimensional consistency of every expression.
    pub fn validate(&self) -> Result<()> {
        let check_expr = |e: &Expr, what: &str| -> Result<()> {
            if e.constant.nrows() != e.dim || e.constant.ncols() != e.dim {
                return Err(Error::InvalidProblem(format!("{what}: constant shape")));
            }
            for (b, m) in &e.terms {
                let spec = self
                    .blocks
                    .get(b.0)
                    .ok_or_else(|| Error::InvalidProblem(format!("{what}: undeclared block {}", b.0)))?;
                if m.in_dim != spec.dim || m.out_dim != e.dim {
                    return Err(Error::InvalidProblem(format!(
                        "{what}: map {}→{} applied to block '{}' of size {} in an expression of size {}",
                        m.in_dim, m.out_dim, spec.name, spec.dim, e.dim
                    )));
                }
                for (_, l, r) in &m.terms {
                    if l.nrows() != m.out_dim
                        || l.ncols() != m.in_dim
                        || r.nrows() != m.in_dim
                        || r.ncols() != m.out_dim
                    {
                        return Err(Error::InvalidProblem(format!("{what}: malformed map term")));
                    }
                }
            }
            Ok(())
        };
        if self.objective.dim != 1 {
            return Err(Error::InvalidProblem("objective must be scalar".into()));
        }
        check_expr(&self.objective, "objective")?;
        for (k, eq) in self.equalities.iter().enumerate() {
            check_expr(&eq.expr, &format!("equality {k}"))?;
            if eq.target.nrows() != eq.expr.dim || eq.target.ncols() != eq.expr.dim {
                return Err(Error::InvalidProblem(format!("equality {k}: target shape")));
            }
            if let Some(list) = &eq.entries {
                if list.iter().any(|&(i, j)| i >= eq.expr.dim || j >= eq.expr.dim) {
                    return Err(Error::InvalidProblem(format!("equality {k}: entry out of range")));
                }
            }
        }
        for (k, c) in self.psd.iter().enumerate() {
            check_expr(&c.expr, &format!("psd {k}"))?;
        }
        if self.blocks.iter().any(|b| b.dim == 0) {
            return Err(Error::InvalidProblem("zero-sized block".into()));
        }
        Ok(())
    }
}
