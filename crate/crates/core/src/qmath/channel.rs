use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::ops::permute_subsystems;
use super::{
    c64, eigh, hermiticity_error, identity, max_abs, min_eigenvalue, partial_trace_matrix,
    total_dim, zeros, CMatrix, DensityMatrix, PSD_TOL, TRACE_TOL,
};
use crate::error::{Error, Result};

/// Trace convention of a Choi matrix `J = Σ_ij |i⟩⟨j| ⊗ 𝓔(|i⟩⟨j|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiNormalization {
    /// `tr J = 1`: the Choi state `(I ⊗ 𝓔)(φ₊)`.
    TraceOne,
    /// `tr J = d_in`, `tr_out J = I`.
    TraceDin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Kraus,
    Choi,
}

/// A completely positive trace-preserving map. The Choi matrix (trace-`d_in`
/// convention, input factor first) is always held; Kraus operators are kept
/// when the channel was built from them and derived on demand otherwise.
#[derive(Debug, Clone)]
pub struct Channel {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    choi: CMatrix,
    kraus: OnceLock<Vec<CMatrix>>,
    origin: Origin,
}

fn validate_dims(dims: &[usize], what: &str) -> Result<usize> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidChannel(format!("bad {what} dims {dims:?}")));
    }
    Ok(total_dim(dims))
}

fn vectorize_kraus(k: &CMatrix) -> Vec<super::C64> {
    // |K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩
    let (dout, din) = (k.nrows(), k.ncols());
    let mut v = Vec::with_capacity(din * dout);
    for i in 0..din {
        for a in 0..dout {
            v.push(k[(a, i)]);
        }
    }
    v
}

fn choi_from_kraus(kraus: &[CMatrix], din: usize, dout: usize) -> CMatrix {
    let n = din * dout;
    let mut j = zeros(n, n);
    for k in kraus {
        let v = vectorize_kraus(k);
        for r in 0..n {
            if v[r] == c64(0.0, 0.0) {
                continue;
            }
            for s in 0..n {
                j[(r, s)] += v[r] * v[s].conj();
            }
        }
    }
    j
}

/// Kraus decomposition of a trace-`d_in` Choi matrix from its eigenvectors.
pub fn choi_to_kraus(choi: &CMatrix, din: usize, dout: usize) -> Vec<CMatrix> {
    let (vals, vecs) = eigh(choi);
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let mut out = Vec::new();
    for (k, &lam) in vals.iter().enumerate().rev() {
        if lam <= 1e-14 * scale {
            continue;
        }
        let s = lam.sqrt();
        let mut kr = zeros(dout, din);
        for i in 0..din {
            for a in 0..dout {
                kr[(a, i)] = vecs[(i * dout + a, k)] * c64(s, 0.0);
            }
        }
        out.push(kr);
    }
    if out.is_empty() {
        out.push(zeros(dout, din));
    }
    out
}

/// Choi matrix of a channel in the requested normalization.
pub fn kraus_to_choi(ch: &Channel, normalization: ChoiNormalization) -> Result<CMatrix> {
    let kraus = ch.kraus();
    let (din, dout) = (ch.in_dim(), ch.out_dim());
    for k in kraus {
        if k.nrows() != dout || k.ncols() != din {
            return Err(Error::InvalidChannel(format!(
                "Kraus operator is {}x{}, expected {dout}x{din}",
                k.nrows(),
                k.ncols()
            )));
        }
    }
    let j = choi_from_kraus(kraus, din, dout);
    Ok(match normalization {
        ChoiNormalization::TraceDin => j,
        ChoiNormalization::TraceOne => j / c64(din as f64, 0.0),
    })
}

impl Channel {
    pub fn from_kraus(in_dims: Vec<usize>, out_dims: Vec<usize>, kraus: Vec<CMatrix>) -> Result<Self> {
        let din = validate_dims(&in_dims, "input")?;
        let dout = validate_dims(&out_dims, "output")?;
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("empty Kraus list".into()));
        }
        let mut completeness = zeros(din, din);
        for k in &kraus {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator is {}x{}, expected {dout}x{din}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            completeness += k.adjoint() * k;
        }
        let err = max_abs(&(completeness - identity(din)));
        if err > TRACE_TOL {
            return Err(Error::InvalidChannel(format!(
                "Kraus completeness violated by {err:.2e}"
            )));
        }
        let choi = choi_from_kraus(&kraus, din, dout);
        let cell = OnceLock::new();
        let _ = cell.set(kraus);
        Ok(Self {
            in_dims,
            out_dims,
            choi,
            kraus: cell,
            origin: Origin::Kraus,
        })
    }

    /// Validates positivity (min eig ≥ −1e-9) and `tr_out J = I` within 1e-9.
    pub fn from_choi(
        in_dims: Vec<usize>,
        out_dims: Vec<usize>,
        choi: CMatrix,
        normalization: ChoiNormalization,
    ) -> Result<Self> {
        let din = validate_dims(&in_dims, "input")?;
        let dout = validate_dims(&out_dims, "output")?;
        let n = din * dout;
        if !choi.is_square() || choi.nrows() != n {
            return Err(Error::InvalidChannel(format!(
                "Choi matrix is {}x{}, expected {n}x{n}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        let herr = hermiticity_error(&choi);
        if herr > 1e-10 {
            return Err(Error::InvalidChannel(format!(
                "Choi matrix not Hermitian (error {herr:.2e})"
            )));
        }
        let mut j = super::hermitian_part(&choi);
        if normalization == ChoiNormalization::TraceOne {
            j *= c64(din as f64, 0.0);
        }
        let lmin = min_eigenvalue(&j);
        if lmin < -PSD_TOL {
            return Err(Error::InvalidChannel(format!(
                "Choi matrix has negative eigenvalue {lmin:.3e}"
            )));
        }
        let tr_out = partial_trace_matrix(&j, &[din, dout], &[0])?;
        let err = max_abs(&(tr_out - identity(din)));
        if err > TRACE_TOL {
            return Err(Error::InvalidChannel(format!(
                "partial trace over output differs from identity by {err:.2e}"
            )));
        }
        Ok(Self {
            in_dims,
            out_dims,
            choi: j,
            kraus: OnceLock::new(),
            origin: Origin::Choi,
        })
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let d = total_dim(&dims);
        Self::from_kraus(dims.clone(), dims, vec![identity(d)]).expect("identity is a channel")
    }

    pub fn unitary(u: CMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::from_kraus(dims.clone(), dims, vec![u])
    }

    /// Completely dephasing channel in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let kraus = (0..d).map(|i| super::matrix_unit(d, i, i)).collect();
        Self::from_kraus(vec![d], vec![d], kraus).expect("dephasing is a channel")
    }

    /// `ρ ↦ (1−q)ρ + q·tr(ρ)·I/d`.
    pub fn depolarizing(d: usize, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidChannel(format!("depolarizing weight {q}")));
        }
        let id = Self::identity(vec![d]);
        let full = Self::replacement(&DensityMatrix::maximally_mixed(vec![d]), vec![d]);
        id.mix(&full, 1.0 - q)
    }

    /// `ρ ↦ tr(ρ)·σ`.
    pub fn replacement(sigma: &DensityMatrix, in_dims: Vec<usize>) -> Self {
        let din = total_dim(&in_dims);
        let choi = super::kron(&identity(din), sigma.matrix());
        Self {
            in_dims,
            out_dims: sigma.dims().to_vec(),
            choi,
            kraus: OnceLock::new(),
            origin: Origin::Choi,
        }
    }

    /// Assembles a channel from a Choi matrix that the caller has already certified.
    pub(crate) fn from_choi_trusted(in_dims: Vec<usize>, out_dims: Vec<usize>, choi: CMatrix) -> Self {
        Self {
            in_dims,
            out_dims,
            choi,
            kraus: OnceLock::new(),
            origin: Origin::Choi,
        }
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_dim(&self) -> usize {
        total_dim(&self.in_dims)
    }

    pub fn out_dim(&self) -> usize {
        total_dim(&self.out_dims)
    }

    pub fn is_kraus_native(&self) -> bool {
        self.origin == Origin::Kraus
    }

    pub fn kraus(&self) -> &[CMatrix] {
        self.kraus
            .get_or_init(|| choi_to_kraus(&self.choi, self.in_dim(), self.out_dim()))
    }

    /// Choi matrix; the trace-`d_in` form is borrowed, the trace-one form copied.
    pub fn choi(&self, normalization: ChoiNormalization) -> CMatrix {
        match normalization {
            ChoiNormalization::TraceDin => self.choi.clone(),
            ChoiNormalization::TraceOne => &self.choi / c64(self.in_dim() as f64, 0.0),
        }
    }

    pub fn choi_ref(&self) -> &CMatrix {
        &self.choi
    }

    /// Action on an operator over the full input space.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let (din, dout) = (self.in_dim(), self.out_dim());
        if let Some(kraus) = self.kraus.get() {
            let mut out = zeros(dout, dout);
            for k in kraus {
                out += k * x * k.adjoint();
            }
            return out;
        }
        let mut out = zeros(dout, dout);
        for i in 0..din {
            for j in 0..din {
                let w = x[(i, j)];
                if w == c64(0.0, 0.0) {
                    continue;
                }
                out += self.choi.view((i * dout, j * dout), (dout, dout)) * w;
            }
        }
        out
    }

    /// Heisenberg-picture action `𝓔†(Y)`.
    pub fn apply_adjoint(&self, y: &CMatrix) -> CMatrix {
        let (din, dout) = (self.in_dim(), self.out_dim());
        if let Some(kraus) = self.kraus.get() {
            let mut out = zeros(din, din);
            for k in kraus {
                out += k.adjoint() * y * k;
            }
            return out;
        }
        CMatrix::from_fn(din, din, |i, j| {
            let block = self.choi.view((j * dout, i * dout), (dout, dout));
            (y * block).trace()
        })
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.in_dim() {
            return Err(Error::InvalidShape(format!(
                "state of dimension {} into channel with input {}",
                rho.dim(),
                self.in_dim()
            )));
        }
        DensityMatrix::new(self.apply(rho.matrix()), self.out_dims.clone())
    }

    /// `self ⊗ other`, input factors of `self` first.
    pub fn tensor(&self, other: &Channel) -> Channel {
        let mut in_dims = self.in_dims.clone();
        in_dims.extend_from_slice(&other.in_dims);
        let mut out_dims = self.out_dims.clone();
        out_dims.extend_from_slice(&other.out_dims);
        if let (Some(ka), Some(kb)) = (self.kraus.get(), other.kraus.get()) {
            if ka.len() * kb.len() <= 256 {
                let kraus: Vec<CMatrix> = ka
                    .iter()
                    .flat_map(|a| kb.iter().map(move |b| a.kronecker(b)))
                    .collect();
                let choi = choi_from_kraus(&kraus, total_dim(&in_dims), total_dim(&out_dims));
                let cell = OnceLock::new();
                let _ = cell.set(kraus);
                return Channel {
                    in_dims,
                    out_dims,
                    choi,
                    kraus: cell,
                    origin: Origin::Kraus,
                };
            }
        }
        // (in_a out_a in_b out_b) -> (in_a in_b out_a out_b)
        let j = self.choi.kronecker(&other.choi);
        let dims = [self.in_dim(), self.out_dim(), other.in_dim(), other.out_dim()];
        let choi = permute_subsystems(&j, &dims, &[0, 2, 1, 3]).expect("valid permutation");
        Channel {
            in_dims,
            out_dims,
            choi,
            kraus: OnceLock::new(),
            origin: Origin::Choi,
        }
    }

    /// `after ∘ self`.
    pub fn then(&self, after: &Channel) -> Result<Channel> {
        if after.in_dim() != self.out_dim() {
            return Err(Error::InvalidShape(format!(
                "composing output {} with input {}",
                self.out_dim(),
                after.in_dim()
            )));
        }
        let kraus: Vec<CMatrix> = after
            .kraus()
            .iter()
            .flat_map(|b| self.kraus().iter().map(move |a| b * a))
            .collect();
        let din = self.in_dim();
        let dout = after.out_dim();
        let choi = choi_from_kraus(&kraus, din, dout);
        let cell = OnceLock::new();
        let _ = cell.set(kraus);
        Ok(Channel {
            in_dims: self.in_dims.clone(),
            out_dims: after.out_dims.clone(),
            choi,
            kraus: cell,
            origin: Origin::Kraus,
        })
    }

    /// `p·self + (1−p)·other`.
    pub fn mix(&self, other: &Channel, p: f64) -> Result<Channel> {
        if self.in_dim() != other.in_dim() || self.out_dim() != other.out_dim() {
            return Err(Error::InvalidShape("mixing channels of different shape".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidRequest(format!("mixing weight {p}")));
        }
        let choi = &self.choi * c64(p, 0.0) + &other.choi * c64(1.0 - p, 0.0);
        let kraus = OnceLock::new();
        let mut origin = Origin::Choi;
        if let (Some(ka), Some(kb)) = (self.kraus.get(), other.kraus.get()) {
            let (sp, sq) = (p.sqrt(), (1.0 - p).sqrt());
            let list: Vec<CMatrix> = ka
                .iter()
                .map(|k| k * c64(sp, 0.0))
                .chain(kb.iter().map(|k| k * c64(sq, 0.0)))
                .collect();
            let _ = kraus.set(list);
            origin = Origin::Kraus;
        }
        Ok(Channel {
            in_dims: self.in_dims.clone(),
            out_dims: self.out_dims.clone(),
            choi,
            kraus,
            origin,
        })
    }

    /// Max deviation from `tr_out J = I` and the most negative Choi eigenvalue (as a positive number).
    pub fn cptp_residuals(&self) -> (f64, f64) {
        let (din, dout) = (self.in_dim(), self.out_dim());
        let tr_out = partial_trace_matrix(&self.choi, &[din, dout], &[0]).expect("consistent dims");
        let tp = max_abs(&(tr_out - identity(din)));
        let cp = (-min_eigenvalue(&self.choi)).max(0.0);
        (tp, cp)
    }
}

/// Applies `ch` to the listed subsystems of `rho` (in the order the channel expects them).
/// The output factors replace the addressed ones in place; when the channel
/// changes the number of factors, `subsystems` must cover the whole state.
pub fn apply_channel(ch: &Channel, rho: &DensityMatrix, subsystems: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.dims();
    for &s in subsystems {
        if s >= dims.len() {
            return Err(Error::InvalidSubsystem(format!(
                "subsystem {s} out of range for {} subsystems",
                dims.len()
            )));
        }
    }
    let mut seen = subsystems.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != subsystems.len() {
        return Err(Error::InvalidSubsystem(format!("repeated subsystem in {subsystems:?}")));
    }
    let addressed: Vec<usize> = subsystems.iter().map(|&s| dims[s]).collect();
    if total_dim(&addressed) != ch.in_dim() {
        return Err(Error::InvalidSubsystem(format!(
            "subsystems {subsystems:?} have dims {addressed:?}, channel expects {:?}",
            ch.in_dims()
        )));
    }
    let covers_all = subsystems.len() == dims.len();
    if covers_all && subsystems.iter().enumerate().all(|(k, &s)| k == s) {
        return DensityMatrix::new(ch.apply(rho.matrix()), ch.out_dims().to_vec());
    }
    let same_arity = ch.out_dims().len() == subsystems.len() && ch.in_dims().len() == subsystems.len();
    if !same_arity && !covers_all {
        return Err(Error::InvalidSubsystem(
            "channel changes the number of factors; address every subsystem".into(),
        ));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !subsystems.contains(k)).collect();
    let mut perm = subsystems.to_vec();
    perm.extend_from_slice(&rest);
    let front = permute_subsystems(rho.matrix(), dims, &perm)?;
    let rest_dim: usize = rest.iter().map(|&k| dims[k]).product();
    let acted = if let Some(kraus) = ch.kraus.get() {
        let id = identity(rest_dim);
        let mut out = zeros(ch.out_dim() * rest_dim, ch.out_dim() * rest_dim);
        for k in kraus {
            let kk = k.kronecker(&id);
            out += &kk * &front * kk.adjoint();
        }
        out
    } else {
        let ext = ch.tensor(&Channel::identity(vec![rest_dim]));
        ext.apply(&front)
    };
    if covers_all && !same_arity {
        return DensityMatrix::new(acted, ch.out_dims().to_vec());
    }
    // factors are now (outputs in channel order, rest); move them back
    let mut new_dims: Vec<usize> = ch.out_dims().to_vec();
    new_dims.extend(rest.iter().map(|&k| dims[k]));
    let mut inverse = vec![0; dims.len()];
    for (pos, &orig) in perm.iter().enumerate() {
        inverse[orig] = pos;
    }
    let back = permute_subsystems(&acted, &new_dims, &inverse)?;
    let final_dims: Vec<usize> = inverse.iter().map(|&p| new_dims[p]).collect();
    DensityMatrix::new(back, final_dims)
}
