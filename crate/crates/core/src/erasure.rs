//! Resource erasure by permutation mixing: binomial tail bounds, the mixed
//! channel `Γ_n = (1/n) Σ_i Θ^{⊗(i−1)} ⊗ Ψ ⊗ Θ^{⊗(n−i)}`, its distance to
//! `Θ^{⊗n}`, and the erasure-cost bounds built on the smoothed channel robustness.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conic::SolverConfig;
use crate::dynamic_measures::{diamond_distance, smoothed_channel_robustness, SmoothingConfig, MIO_TOL};
use crate::error::{Error, Result};
use crate::freesets::{mio_violation, FreeSetModel};
use crate::qmath::{
    c64, eigh, kron_all, max_eigenvalue, permute_subsystems, psd_sqrt, random_channel, rng_from_seed,
    trace_norm, CMatrix, Channel, ChoiNormalization, C64,
};

/// Largest Choi side length of `Γ_n` that is ever materialized.
pub const GAMMA_CHOI_LIMIT: usize = 4096;
/// Largest Choi side length for which the dense trace-norm route is used.
pub const DENSE_CHOI_LIMIT: usize = 256;
/// Largest `n` for which the diamond distance is computed by SDP.
pub const DIAMOND_MAX_N: usize = 2;

/// Rational strictly above π.
fn pi_upper() -> BigRational {
    BigRational::new(BigInt::from(3_141_592_653_589_794_u64), BigInt::from(1_000_000_000_000_000_u64))
}

/// Rational strictly below `e^{1/6}` (a truncated series with positive terms).
fn exp_sixth_lower() -> BigRational {
    let x = BigRational::new(BigInt::one(), BigInt::from(6));
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for k in 1..=20u32 {
        term = term * &x / BigRational::from_integer(BigInt::from(k));
        sum += &term;
    }
    sum
}

fn binomial(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

fn rational_pow(x: &BigRational, e: u64) -> BigRational {
    let mut r = BigRational::one();
    for _ in 0..e {
        r *= x;
    }
    r
}

/// `C(n,k) p^k (1−p)^{n−k}` exactly.
pub fn binomial_pmf_exact(n: u64, k: u64, p: &BigRational) -> BigRational {
    if k > n {
        return BigRational::zero();
    }
    let q = BigRational::one() - p;
    BigRational::from_integer(binomial(n, k)) * rational_pow(p, k) * rational_pow(&q, n - k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfBound {
    pub pmf: f64,
    /// `e^{1/12} / √(2π np(1−p) − 2π)`.
    pub bound: f64,
    /// `pmf ≤ bound` decided in rational arithmetic with outward-rounded constants.
    pub certified: bool,
}

/// Binomial pmf against its Stirling-type bound, valid for `k ≤ ⌊np⌋` and `np(1−p) > 1`.
pub fn binomial_pmf_bound_exact(n: u64, p: &BigRational, k: u64) -> Result<PmfBound> {
    if *p <= BigRational::zero() || *p >= BigRational::one() {
        return Err(Error::InvalidRequest("p must lie in (0, 1)".into()));
    }
    let np = BigRational::from_integer(BigInt::from(n)) * p;
    if BigRational::from_integer(BigInt::from(k)) > np.floor() {
        return Err(Error::InvalidRequest(format!("k = {k} exceeds ⌊np⌋")));
    }
    let var = &np * (BigRational::one() - p);
    let excess = &var - BigRational::one();
    if excess <= BigRational::zero() {
        return Err(Error::InvalidRequest("np(1−p) > 1 is required".into()));
    }
    let pmf = binomial_pmf_exact(n, k, p);
    let lhs = &pmf * &pmf * BigRational::from_integer(BigInt::from(2)) * pi_upper() * &excess;
    let certified = lhs <= exp_sixth_lower();
    let var_f = var.to_f64().unwrap_or(f64::NAN);
    let bound = (1.0f64 / 12.0).exp() / (2.0 * std::f64::consts::PI * (var_f - 1.0)).sqrt();
    Ok(PmfBound {
        pmf: pmf.to_f64().unwrap_or(f64::NAN),
        bound,
        certified,
    })
}

/// [`binomial_pmf_bound_exact`] with `p` taken as the exact value of the float.
pub fn binomial_pmf_bound(n: u64, p: f64, k: u64) -> Result<PmfBound> {
    let pr = BigRational::from_float(p).ok_or_else(|| Error::InvalidRequest(format!("p = {p}")))?;
    binomial_pmf_bound_exact(n, &pr, k)
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidRequest(format!("mixing weight {p} outside (0, 1)")))
    }
}

/// `(1/p) Σ_k C(n,k) p^k (1−p)^{n−k} |p − k/n|`, summed in log space.
pub fn exact_sum_bound(n: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    if n == 0 {
        return Err(Error::InvalidRequest("n must be positive".into()));
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_c = 0.0f64;
    let mut sum = 0.0;
    for k in 0..=n {
        if k > 0 {
            log_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let dev = (p - k as f64 / n as f64).abs();
        if dev > 0.0 {
            sum += (log_c + k as f64 * lp + (n - k) as f64 * lq + dev.ln()).exp();
        }
    }
    Ok(sum / p)
}

/// `√2 (1−p) e^{1/12} / √(π p (n−1)(1−p) − π)`, defined when the radicand is positive.
pub fn closed_form_bound(n: u64, p: f64) -> Option<f64> {
    if !(p > 0.0 && p < 1.0) || n < 2 {
        return None;
    }
    let pi = std::f64::consts::PI;
    let rad = pi * p * (n - 1) as f64 * (1.0 - p) - pi;
    (rad > 0.0).then(|| 2f64.sqrt() * (1.0 - p) * (1.0f64 / 12.0).exp() / rad.sqrt())
}

/// Right-hand side of `n − 1 ≥ 2(1−p)e^{1/6}/(ε²πp) + 1/(p(1−p))`.
fn threshold_rhs(epsilon: f64, p: f64) -> f64 {
    2.0 * (1.0 - p) * (1.0f64 / 6.0).exp() / (epsilon * epsilon * std::f64::consts::PI * p) + 1.0 / (p * (1.0 - p))
}

/// Smallest `n` with `n − 1 ≥ 2(1−p)e^{1/6}/(ε²πp) + 1/(p(1−p))`.
pub fn threshold_n(epsilon: f64, p: f64) -> Result<u64> {
    check_p(p)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidRequest(format!("ε = {epsilon} must be positive")));
    }
    Ok(threshold_rhs(epsilon, p).ceil() as u64 + 1)
}

/// `log₂(2(1−L)e^{1/6}/(η²πL) + 1/(L(1−L)) + 1)`; `None` when `L ∉ (0,1)`.
pub fn cost_upper_expression(l: f64, eta: f64) -> Option<f64> {
    (l > 0.0 && l < 1.0 && eta > 0.0).then(|| (threshold_rhs(eta, l) + 1.0).log2())
}

fn check_pair(psi: &Channel, theta: &Channel) -> Result<()> {
    if psi.in_dim() != theta.in_dim() || psi.out_dim() != theta.out_dim() {
        return Err(Error::InvalidShape("Ψ and Θ must act on the same spaces".into()));
    }
    Ok(())
}

/// `Γ_n` as an explicit channel. Its Choi matrix has side `(d_in d_out)^n`,
/// capped at [`GAMMA_CHOI_LIMIT`].
pub fn build_gamma_n(psi: &Channel, theta: &Channel, n: usize) -> Result<Channel> {
    check_pair(psi, theta)?;
    if n == 0 {
        return Err(Error::InvalidRequest("n must be positive".into()));
    }
    let (din, dout) = (psi.in_dim(), psi.out_dim());
    let site = din * dout;
    let side = site.checked_pow(n as u32).filter(|&s| s <= GAMMA_CHOI_LIMIT);
    let side = side.ok_or_else(|| Error::TooLarge(format!("Choi side {site}^{n} exceeds {GAMMA_CHOI_LIMIT}")))?;
    let (a, b) = (psi.choi_ref(), theta.choi_ref());
    let mut interleaved = CMatrix::zeros(side, side);
    for i in 0..n {
        let factors: Vec<&CMatrix> = (0..n).map(|k| if k == i { a } else { b }).collect();
        interleaved += kron_all(factors);
    }
    interleaved /= c64(n as f64, 0.0);
    // (in_1 out_1 … in_n out_n) -> (in_1 … in_n out_1 … out_n)
    let dims: Vec<usize> = (0..n).flat_map(|_| [din, dout]).collect();
    let perm: Vec<usize> = (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect();
    let choi = permute_subsystems(&interleaved, &dims, &perm)?;
    let in_dims: Vec<usize> = (0..n).flat_map(|_| psi.in_dims().to_vec()).collect();
    let out_dims: Vec<usize> = (0..n).flat_map(|_| psi.out_dims().to_vec()).collect();
    Ok(Channel::from_choi_trusted(in_dims, out_dims, choi))
}

/// `Θ^{⊗n}` by repeated channel tensoring.
fn tensor_power(theta: &Channel, n: usize) -> Channel {
    let mut acc = theta.clone();
    for _ in 1..n {
        acc = acc.tensor(theta);
    }
    acc
}

/// `‖J_{Γ_n} − J_{Θ^{⊗n}}‖₁` in the trace-one Choi convention, from dense matrices.
pub fn choi_distance_dense(psi: &Channel, theta: &Channel, n: usize) -> Result<f64> {
    let gamma = build_gamma_n(psi, theta, n)?;
    let power = tensor_power(theta, n);
    let diff = gamma.choi(ChoiNormalization::TraceOne) - power.choi(ChoiNormalization::TraceOne);
    trace_norm(&diff)
}

/// Integer partitions of `n` with at most `max_rows` parts, largest part first.
fn partitions(n: usize, max_rows: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, cap: usize, rows: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        if rows == 0 {
            return;
        }
        for part in (1..=cap.min(rem)).rev() {
            cur.push(part);
            rec(rem - part, part, rows - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, max_rows, &mut Vec::new(), &mut out);
    out
}

fn column_lengths(shape: &[usize]) -> Vec<usize> {
    (0..shape[0]).map(|c| shape.iter().filter(|&&r| r > c).count()).collect()
}

/// Number of standard Young tableaux (hook-length formula).
pub fn hook_length_dimension(shape: &[usize]) -> u128 {
    let n: usize = shape.iter().sum();
    let cols = column_lengths(shape);
    let mut num: u128 = (1..=n as u128).product();
    let mut den: u128 = 1;
    for (r, &len) in shape.iter().enumerate() {
        for c in 0..len {
            den *= ((len - c - 1) + (cols[c] - r - 1) + 1) as u128;
        }
    }
    let g = gcd(num, den);
    num /= g;
    num / (den / g)
}

/// Dimension of the `U(d)` irrep of the given shape (hook-content formula).
pub fn hook_content_dimension(shape: &[usize], d: usize) -> u128 {
    let cols = column_lengths(shape);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for (r, &len) in shape.iter().enumerate() {
        for c in 0..len {
            let content = d as i128 + c as i128 - r as i128;
            if content <= 0 {
                return 0;
            }
            num *= content as u128;
            den *= ((len - c - 1) + (cols[c] - r - 1) + 1) as u128;
            let g = gcd(num, den);
            num /= g;
            den /= g;
        }
    }
    num / den
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// All permutations of `items`, each paired with its sign.
fn signed_permutations(items: &[usize]) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut cur = items.to_vec();
    fn rec(k: usize, cur: &mut Vec<usize>, sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if k == cur.len() {
            out.push((cur.clone(), sign));
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(k + 1, cur, if i == k { sign } else { -sign }, out);
            cur.swap(k, i);
        }
    }
    rec(0, &mut cur, 1.0, &mut out);
    out
}

/// Tensor-product vectors over `n` sites of dimension `s`.
struct Sites {
    s: usize,
    n: usize,
}

impl Sites {
    fn len(&self) -> usize {
        self.s.pow(self.n as u32)
    }

    /// Permutes site contents: the factor at site `from[k]` moves to site `to[k]`.
    fn permute(&self, v: &[C64], from: &[usize], to: &[usize]) -> Vec<C64> {
        let mut site_map: Vec<usize> = (0..self.n).collect();
        for (&f, &t) in from.iter().zip(to) {
            site_map[t] = f;
        }
        let strides: Vec<usize> = (0..self.n).map(|k| self.s.pow((self.n - 1 - k) as u32)).collect();
        let mut out = vec![c64(0.0, 0.0); v.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut src = 0;
            for t in 0..self.n {
                let digit = (idx / strides[t]) % self.s;
                src += digit * strides[site_map[t]];
            }
            *slot = v[src];
        }
        out
    }

    /// Applies `a` to one site.
    fn apply_site(&self, v: &[C64], a: &CMatrix, site: usize) -> Vec<C64> {
        let stride = self.s.pow((self.n - 1 - site) as u32);
        let block = stride * self.s;
        let mut out = vec![c64(0.0, 0.0); v.len()];
        for base in (0..v.len()).step_by(block) {
            for inner in 0..stride {
                for r in 0..self.s {
                    let mut acc = c64(0.0, 0.0);
                    for c in 0..self.s {
                        acc += a[(r, c)] * v[base + c * stride + inner];
                    }
                    out[base + r * stride + inner] = acc;
                }
            }
        }
        out
    }

    fn apply_product(&self, v: &[C64], factors: &[&CMatrix]) -> Vec<C64> {
        let mut w = v.to_vec();
        for (site, f) in factors.iter().enumerate() {
            w = self.apply_site(&w, f, site);
        }
        w
    }

    /// Young symmetrizer of the row-reading tableau: column antisymmetrizer after row symmetrizer.
    fn young_symmetrize(&self, v: &[C64], shape: &[usize]) -> Vec<C64> {
        let mut rows = Vec::new();
        let mut next = 0;
        for &len in shape {
            rows.push((next..next + len).collect::<Vec<_>>());
            next += len;
        }
        let cols: Vec<Vec<usize>> = (0..shape[0])
            .map(|c| rows.iter().filter(|r| r.len() > c).map(|r| r[c]).collect())
            .collect();
        let mut w = v.to_vec();
        for (group, signed) in rows.iter().map(|r| (r, false)).chain(cols.iter().map(|c| (c, true))) {
            if group.len() < 2 {
                continue;
            }
            let mut acc = vec![c64(0.0, 0.0); w.len()];
            for (perm, sign) in signed_permutations(group) {
                let moved = self.permute(&w, group, &perm);
                let sg = if signed { sign } else { 1.0 };
                for (a, m) in acc.iter_mut().zip(moved) {
                    *a += m * sg;
                }
            }
            w = acc;
        }
        w
    }
}

/// `‖J_{Γ_n} − J_{Θ^{⊗n}}‖₁` (trace-one convention) through the permutation
/// symmetry of the difference: `‖X‖₁ = Σ_λ f_λ ‖X_λ‖₁` with `X_λ` the
/// compression of `X` to the range of a Young symmetrizer of shape `λ`.
pub fn choi_distance_symmetric(psi: &Channel, theta: &Channel, n: usize, seed: u64) -> Result<f64> {
    check_pair(psi, theta)?;
    if n == 0 {
        return Err(Error::InvalidRequest("n must be positive".into()));
    }
    let din = psi.in_dim() as f64;
    let a = psi.choi_ref() / c64(din, 0.0);
    let b = theta.choi_ref() / c64(din, 0.0);
    let s = a.nrows();
    let sites = Sites { s, n };
    if sites.len() > 1 << 16 {
        return Err(Error::TooLarge(format!("{s}^{n} dimensional site space")));
    }
    let apply_x = |v: &[C64]| -> Vec<C64> {
        let mut out = vec![c64(0.0, 0.0); v.len()];
        for i in 0..n {
            let factors: Vec<&CMatrix> = (0..n).map(|k| if k == i { &a } else { &b }).collect();
            for (o, w) in out.iter_mut().zip(sites.apply_product(v, &factors)) {
                *o += w / n as f64;
            }
        }
        let all_b: Vec<&CMatrix> = vec![&b; n];
        for (o, w) in out.iter_mut().zip(sites.apply_product(v, &all_b)) {
            *o -= w;
        }
        out
    };
    let mut rng = rng_from_seed(seed);
    let mut total = 0.0;
    let mut covered: u128 = 0;
    for shape in partitions(n, s) {
        let d_lambda = hook_content_dimension(&shape, s) as usize;
        let f_lambda = hook_length_dimension(&shape);
        covered += f_lambda * d_lambda as u128;
        let probes = d_lambda + 8;
        let mut v = CMatrix::zeros(sites.len(), probes);
        for c in 0..probes {
            let g: Vec<C64> = (0..sites.len())
                .map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let y = sites.young_symmetrize(&g, &shape);
            v.set_column(c, &nalgebra::DVector::from_vec(y));
        }
        let q = orthonormal_range(&v, d_lambda)?;
        let mut xq = CMatrix::zeros(sites.len(), d_lambda);
        for c in 0..d_lambda {
            let col: Vec<C64> = q.column(c).iter().copied().collect();
            xq.set_column(c, &nalgebra::DVector::from_vec(apply_x(&col)));
        }
        let block = q.adjoint() * xq;
        total += f_lambda as f64 * trace_norm(&crate::qmath::hermitian_part(&block))?;
    }
    if covered != sites.len() as u128 {
        return Err(Error::InvalidRequest("Schur–Weyl dimensions do not add up".into()));
    }
    Ok(total)
}

/// Orthonormal basis of the column range of `v`, which must have rank `rank`.
fn orthonormal_range(v: &CMatrix, rank: usize) -> Result<CMatrix> {
    let gram = v.adjoint() * v;
    let (vals, vecs) = eigh(&gram);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 1e-12 * top).collect();
    if keep.len() != rank {
        return Err(Error::InvalidRequest(format!(
            "symmetrizer range has numerical rank {} instead of {rank}",
            keep.len()
        )));
    }
    let mut q = CMatrix::zeros(v.nrows(), rank);
    for (c, &k) in keep.iter().enumerate() {
        let col = v * vecs.column(k) / c64(vals[k].sqrt(), 0.0);
        q.set_column(c, &col);
    }
    // one re-orthonormalization pass against rounding
    let g = q.adjoint() * &q;
    let inv = crate::qmath::hermitian_fn(&g, |x| 1.0 / x.sqrt());
    Ok(q * inv)
}

/// Trace-one Choi distance, dense when small and symmetry-reduced otherwise.
pub fn choi_distance(psi: &Channel, theta: &Channel, n: usize) -> Result<f64> {
    let site = psi.in_dim() * psi.out_dim();
    match site.checked_pow(n as u32) {
        Some(side) if side <= DENSE_CHOI_LIMIT => choi_distance_dense(psi, theta, n),
        _ => choi_distance_symmetric(psi, theta, n, 0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErasureReport {
    pub n: u64,
    pub p: f64,
    pub epsilon: f64,
    pub exact_sum_bound: f64,
    pub closed_form_bound: Option<f64>,
    /// `‖J_{Γ_n} − J_{Θ^{⊗n}}‖₁` with trace-one Choi matrices.
    pub measured_choi_trace_distance: f64,
    /// The same with trace-`d_in^n` Choi matrices.
    pub measured_choi_trace_distance_unnormalized: f64,
    /// `½‖Γ_n − Θ^{⊗n}‖◇`, for `n ≤ 2` on request.
    pub measured_diamond_distance: Option<f64>,
    pub threshold_n: u64,
    /// Cost upper expression evaluated at `L = p`, `η = ε`.
    pub cost_upper: Option<f64>,
    pub chain_holds: bool,
}

/// Evaluates the full bound chain for `Θ = pΨ + (1−p)Φ`, which must be MIO.
pub fn mixing_deviation_bound(
    psi: &Channel,
    phi: &Channel,
    p: f64,
    n: usize,
    epsilon: f64,
    compute_diamond: bool,
    cfg: &SolverConfig,
) -> Result<ErasureReport> {
    check_p(p)?;
    check_pair(psi, phi)?;
    let theta = psi.mix(phi, p)?;
    let violation = mio_violation(&theta);
    if violation > MIO_TOL {
        return Err(Error::HypothesisViolated(format!(
            "pΨ + (1−p)Φ is not MIO (violation {violation:.3e})"
        )));
    }
    let exact = exact_sum_bound(n as u64, p)?;
    let closed = closed_form_bound(n as u64, p);
    let measured = choi_distance(psi, &theta, n)?;
    let unnormalized = measured * (psi.in_dim() as f64).powi(n as i32);
    let diamond = if compute_diamond && n <= DIAMOND_MAX_N {
        let gamma = build_gamma_n(psi, &theta, n)?;
        Some(diamond_distance(&gamma, &tensor_power(&theta, n), cfg)?.value)
    } else {
        None
    };
    let mut chain_holds = measured <= exact + 1e-6 && closed.is_none_or(|c| exact <= c + 1e-6);
    if let Some(d) = diamond {
        chain_holds &= d <= measured + 1e-6;
    }
    Ok(ErasureReport {
        n: n as u64,
        p,
        epsilon,
        exact_sum_bound: exact,
        closed_form_bound: closed,
        measured_choi_trace_distance: measured,
        measured_choi_trace_distance_unnormalized: unnormalized,
        measured_diamond_distance: diamond,
        threshold_n: threshold_n(epsilon, p)?,
        cost_upper: cost_upper_expression(p, epsilon),
        chain_holds,
    })
}

/// A pair `(Ψ, Φ)` of channels on `d` levels with `pΨ + (1−p)Φ` MIO.
///
/// `Θ` is a random MIO channel blended with complete depolarization so its
/// Choi matrix is invertible; `Ψ = (1−s)Θ + sN` and `Φ = (1+r)Θ − rN` with
/// `r = ps/(1−p)` as large as complete positivity of `Φ` allows.
pub fn sample_mixing_pair<R: Rng + ?Sized>(rng: &mut R, d: usize, p: f64) -> Result<(Channel, Channel)> {
    check_p(p)?;
    let model = FreeSetModel::incoherent(d)?;
    let free = model.sample_free_channel(rng);
    let noise = Channel::depolarizing(d, 1.0)?;
    let w: f64 = rng.random_range(0.3..1.0);
    let theta = noise.mix(&free, w)?;
    let env = rng.random_range(1..=2);
    let target = random_channel(rng, &[d], &[d], Some(env));
    let jt = theta.choi_ref();
    let inv_sqrt = crate::qmath::hermitian_fn(&psd_sqrt(jt), |x| 1.0 / x);
    let ratio = max_eigenvalue(&crate::qmath::hermitian_part(&(&inv_sqrt * target.choi_ref() * &inv_sqrt)));
    let r_max = if ratio > 1.0 { 1.0 / (ratio - 1.0) } else { f64::INFINITY };
    let s = (0.95 * r_max * (1.0 - p) / p).min(1.0);
    let r = p * s / (1.0 - p);
    let psi = target.mix(&theta, s)?;
    let phi_choi = jt * c64(1.0 + r, 0.0) - target.choi_ref() * c64(r, 0.0);
    let phi = Channel::from_choi(vec![d], vec![d], phi_choi, ChoiNormalization::TraceDin)?;
    Ok((psi, phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFlag {
    Regular,
    /// `L′ = 1`: the channel is already free, nothing to erase.
    Degenerate,
    /// `L′ = 0`: the upper expression diverges.
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBoundReport {
    pub epsilon: f64,
    pub eta: f64,
    /// Smoothed robustness at radius `ε − η` (an upper estimate).
    pub l_prime: f64,
    /// Smoothed robustness at radius `√(ε(2−ε))` (an upper estimate).
    pub l_double_prime: f64,
    pub lower_radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub flag: CostFlag,
    /// The smoothed values come from a heuristic search and only bound the infimum from above.
    pub uses_upper_estimates: bool,
    /// The lower bound compares a probability with a log-count and is weak.
    pub lower_bound_is_weak: bool,
}

/// Erasure-cost sandwich `L″ ≤ C^ε ≤ log₂(…L′…)`.
pub fn destruction_cost_bounds(
    e: &Channel,
    epsilon: f64,
    eta: f64,
    sc: &SmoothingConfig,
    cfg: &SolverConfig,
) -> Result<CostBoundReport> {
    if !(0.0 < eta && eta < epsilon && epsilon < 1.0) {
        return Err(Error::InvalidRequest(format!("need 0 < η < ε < 1, got η = {eta}, ε = {epsilon}")));
    }
    let lower_radius = (epsilon * (2.0 - epsilon)).sqrt();
    let l1 = smoothed_channel_robustness(e, epsilon - eta, sc, cfg)?.upper_estimate;
    let l2 = if lower_radius < 1.0 {
        smoothed_channel_robustness(e, lower_radius, sc, cfg)?.upper_estimate
    } else {
        0.0
    };
    let (upper, flag) = if l1 >= 1.0 - 1e-9 {
        (0.0, CostFlag::Degenerate)
    } else if l1 <= 1e-12 {
        (f64::INFINITY, CostFlag::Divergent)
    } else {
        (cost_upper_expression(l1, eta).expect("L′ in (0,1)"), CostFlag::Regular)
    };
    Ok(CostBoundReport {
        epsilon,
        eta,
        l_prime: l1,
        l_double_prime: l2,
        lower_radius,
        lower: l2,
        upper,
        flag,
        uses_upper_estimates: true,
        lower_bound_is_weak: true,
    })
}
