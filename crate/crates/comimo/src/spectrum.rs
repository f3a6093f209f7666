//! Singular-spectrum machinery for the stacked composite channel.
//!
//! Appending relay rows to the direct channel modifies its squared singular
//! values through a rank-N2 Hermitian update of the diagonal Gram matrix.
//! This module reduces the stacked channel to a compact matrix in both
//! dimension regimes, solves the secular equation of each rank-one step with
//! deflation, iterates the update across relay rows while rotating the
//! eigenbasis, and exposes the interlacing and per-index shift diagnostics.

use crate::error::{Error, Result};
use crate::linalg::{svd_sorted, CMat, CVec};
use num_complex::Complex64;

/// Weights below `DEFLATION_REL * sum(weights)` are deflated: the root is
/// pinned at the pole.
const DEFLATION_REL: f64 = 1e-14;
/// Poles closer than `CLUSTER_REL` (relative to the largest pole) are
/// collapsed to a single representative carrying the summed weight.
const CLUSTER_REL: f64 = 1e-12;
/// Root-finder convergence: |F| below this, or interval width below
/// `WIDTH_REL * (1 + |pole|)`.
const SECULAR_F_TOL: f64 = 1e-13;
const WIDTH_REL: f64 = 1e-14;

/// Non-negative singular values in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Domain(format!("singular value {v} at index {i} invalid")));
            }
            if i > 0 && *v > values[i - 1] {
                return Err(Error::Domain(format!(
                    "singular values not descending at index {i}: {} < {v}",
                    values[i - 1]
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn from_matrix(a: &CMat) -> Self {
        Self { values: crate::linalg::singular_values(a) }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Rank-one update instance: poles are the squared base singular values
/// (descending), weights the squared magnitudes of the projected relay row.
#[derive(Debug, Clone)]
pub struct SecularProblem {
    poles: Vec<f64>,
    weights: Vec<f64>,
}

impl SecularProblem {
    pub fn new(poles: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if poles.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "poles ({}) and weights ({}) must have equal length",
                poles.len(),
                weights.len()
            )));
        }
        for (i, p) in poles.iter().enumerate() {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::Domain(format!("pole {p} at index {i} invalid")));
            }
            if i > 0 && *p > poles[i - 1] {
                return Err(Error::Domain(format!("poles not descending at index {i}")));
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("weights must be finite and non-negative".into()));
        }
        Ok(Self { poles, weights })
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The secular function `F(x) = 1 + sum_i w_i / (d_i - x)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        1.0 + self
            .poles
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w / (d - x))
            .sum::<f64>()
    }
}

/// Which dimension regime the reduction used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionCase {
    /// Direct link has at least as many receive antennas as transmit (N1 >= M).
    Tall,
    /// Fewer receive antennas than transmit (N1 < M); needs the QR step.
    Wide,
}

/// Compact form whose singular values equal the nonzero singular values of
/// the stacked channel, plus the factors needed to rebuild the stack.
#[derive(Debug, Clone)]
pub struct ReducedForm {
    /// The compact matrix A.
    pub a: CMat,
    pub case: ReductionCase,
    /// Squared base singular values on the diagonal block, descending,
    /// including structural zeros in the wide case.
    pub base_poles: Vec<f64>,
    /// The transformed relay rows forming the lower block of A.
    pub rows: CMat,
    /// Left singular vectors of the direct link (thin).
    pub u_h1: CMat,
    /// Right singular basis of the direct link; full M x M in the wide case.
    pub v_h1: CMat,
    /// Orthonormal factor of the out-of-row-space QR step (wide case only).
    pub q22: Option<CMat>,
}

impl ReducedForm {
    /// Updated singular spectrum of the stack via the iterated rank-one
    /// secular update in the reduced frame.
    pub fn updated_spectrum(&self) -> SingularSpectrum {
        let vals = iterated_rank_update(self.base_poles.clone(), &self.rows);
        SingularSpectrum { values: vals.into_iter().map(|x| x.max(0.0).sqrt()).collect() }
    }

    /// Rebuilds the stacked channel from the retained factors.
    pub fn reconstruct(&self) -> CMat {
        match self.case {
            ReductionCase::Tall => {
                let m = self.v_h1.nrows();
                let d = self.a.view((0, 0), (m, m));
                let vt = self.v_h1.adjoint();
                let top = &self.u_h1 * d * &vt;
                let bottom = &self.rows * &vt;
                crate::composite::stack_channel(&top, &bottom).expect("factor dims consistent")
            }
            ReductionCase::Wide => {
                let n1 = self.u_h1.ncols();
                let m = self.v_h1.nrows();
                let q22 = self.q22.as_ref().expect("wide form retains q22");
                let n2p = q22.ncols();
                let v1 = self.v_h1.view((0, 0), (m, n1));
                let v2 = self.v_h1.view((0, n1), (m, m - n1));
                let mut w = CMat::zeros(m, n1 + n2p);
                w.view_mut((0, 0), (m, n1)).copy_from(&v1);
                if n2p > 0 {
                    w.view_mut((0, n1), (m, n2p)).copy_from(&(v2 * q22));
                }
                let wt = w.adjoint();
                let top = &self.u_h1 * self.a.view((0, 0), (n1, n1 + n2p)) * &wt;
                let bottom = &self.rows * &wt;
                crate::composite::stack_channel(&top, &bottom).expect("factor dims consistent")
            }
        }
    }
}

/// Reduction for the tall regime (N1 >= M): A = [D; H2 V] is (M+N2) x M.
pub fn reduce_tall(h1: &CMat, h2: &CMat) -> Result<ReducedForm> {
    let (n1, m) = (h1.nrows(), h1.ncols());
    if n1 < m {
        return Err(Error::RegimeMismatch(format!("tall reduction needs N1 >= M, got {n1} < {m}")));
    }
    if h2.nrows() > 0 && h2.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "h2 has {} columns, h1 has {m}",
            h2.ncols()
        )));
    }
    let (u1, s, v) = svd_sorted(h1);
    let n2 = h2.nrows();
    let h2p = if n2 > 0 { h2 * &v } else { CMat::zeros(0, m) };
    let mut a = CMat::zeros(m + n2, m);
    for i in 0..m {
        a[(i, i)] = Complex64::new(s[i], 0.0);
    }
    if n2 > 0 {
        a.view_mut((m, 0), (n2, m)).copy_from(&h2p);
    }
    let base_poles = s.iter().map(|x| x * x).collect();
    Ok(ReducedForm { a, case: ReductionCase::Tall, base_poles, rows: h2p, u_h1: u1, v_h1: v, q22: None })
}

/// Reduction for the wide regime (N1 < M): the out-of-row-space part of the
/// relay rows is compressed by a QR step, giving
/// A = [[D, 0], [H2' V1, R22]] of size (N1+N2) x (N1 + min(N2, M-N1)).
pub fn reduce_wide(h1: &CMat, h2: &CMat) -> Result<ReducedForm> {
    let (n1, m) = (h1.nrows(), h1.ncols());
    if n1 >= m {
        return Err(Error::RegimeMismatch(format!("wide reduction needs N1 < M, got {n1} >= {m}")));
    }
    if h2.nrows() > 0 && h2.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "h2 has {} columns, h1 has {m}",
            h2.ncols()
        )));
    }
    let (u1, s, v1) = svd_sorted(h1);
    let comp = crate::linalg::orthonormal_completion(&v1);
    let mut v_full = CMat::zeros(m, m);
    v_full.view_mut((0, 0), (m, n1)).copy_from(&v1);
    v_full.view_mut((0, n1), (m, m - n1)).copy_from(&comp);
    let n2 = h2.nrows();
    let k = m - n1;
    let h2p = if n2 > 0 { h2 * &v_full } else { CMat::zeros(0, m) };
    let h2p1 = h2p.view((0, 0), (n2, n1)).into_owned();
    let h2p2 = h2p.view((0, n1), (n2, k)).into_owned();

    let n2p = n2.min(k);
    let (q22, r22) = if n2 > 0 && n2p > 0 {
        // H2'_2 Q = R with R lower-trapezoidal: QR of the adjoint.
        let qr = h2p2.adjoint().qr();
        (qr.q(), qr.r().adjoint())
    } else {
        (CMat::zeros(k, 0), CMat::zeros(n2, 0))
    };

    let mut a = CMat::zeros(n1 + n2, n1 + n2p);
    for i in 0..n1 {
        a[(i, i)] = Complex64::new(s[i], 0.0);
    }
    let mut rows = CMat::zeros(n2, n1 + n2p);
    if n2 > 0 {
        rows.view_mut((0, 0), (n2, n1)).copy_from(&h2p1);
        if n2p > 0 {
            rows.view_mut((0, n1), (n2, n2p)).copy_from(&r22);
        }
        a.view_mut((n1, 0), (n2, n1 + n2p)).copy_from(&rows);
    }

    let mut base_poles: Vec<f64> = s.iter().map(|x| x * x).collect();
    base_poles.resize(n1 + n2p, 0.0);
    Ok(ReducedForm {
        a,
        case: ReductionCase::Wide,
        base_poles,
        rows,
        u_h1: u1,
        v_h1: v_full,
        q22: Some(q22),
    })
}

/// Dispatches on the dimension regime.
pub fn reduce(h1: &CMat, h2: &CMat) -> Result<ReducedForm> {
    if h1.nrows() >= h1.ncols() {
        reduce_tall(h1, h2)
    } else {
        reduce_wide(h1, h2)
    }
}

/// Roots of the secular equation after deflation, as squared singular
/// values in descending order. Root i lies in the gap above pole i;
/// deflated indices return their pole unchanged.
pub fn secular_roots(problem: &SecularProblem) -> SingularSpectrum {
    let solved = solve_rank_one(&problem.poles, &problem.weights);
    let mut values = solved.eigenvalues;
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    SingularSpectrum { values }
}

/// Iterated rank-N2 update: applies one secular solve per relay row of
/// `h2_rows * v_h1`, re-projecting each subsequent row onto the updated
/// eigenbasis. Returns the full updated spectrum (length M), including
/// structural zeros when the base spectrum is shorter than M.
pub fn rank_update(base: &SingularSpectrum, h2_rows: &CMat, v_h1: &CMat) -> Result<SingularSpectrum> {
    let m = v_h1.nrows();
    if v_h1.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "right singular basis must be square, got {}x{}",
            v_h1.nrows(),
            v_h1.ncols()
        )));
    }
    if h2_rows.nrows() > 0 && h2_rows.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "relay rows have {} columns, basis is {m}-dimensional",
            h2_rows.ncols()
        )));
    }
    if base.len() > m {
        return Err(Error::DimensionMismatch(format!(
            "base spectrum has {} values, basis is {m}-dimensional",
            base.len()
        )));
    }
    let mut poles: Vec<f64> = base.values().iter().map(|x| x * x).collect();
    poles.resize(m, 0.0);
    let projected = if h2_rows.nrows() > 0 { h2_rows * v_h1 } else { CMat::zeros(0, m) };
    let vals = iterated_rank_update(poles, &projected);
    Ok(SingularSpectrum { values: vals.into_iter().map(|x| x.max(0.0).sqrt()).collect() })
}

/// One rank-one step of the iterated update, exposed for diagnostics:
/// eigenvalues (descending) and the unitary eigenbasis of
/// `diag(poles) + z z^H`. Subsequent relay rows must be rotated by the
/// returned basis before their own update.
pub fn rank_one_update(poles: &[f64], z: &CVec) -> Result<(Vec<f64>, CMat)> {
    if poles.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "poles ({}) and update vector ({}) must have equal length",
            poles.len(),
            z.len()
        )));
    }
    for (i, p) in poles.iter().enumerate() {
        if !p.is_finite() || *p < 0.0 || (i > 0 && *p > poles[i - 1]) {
            return Err(Error::Domain("poles must be finite, non-negative, descending".into()));
        }
    }
    let eig = rank_one_eigen(poles, z);
    Ok((eig.values, eig.basis))
}

/// Per-index interlacing margins for one rank-one update.
#[derive(Debug, Clone)]
pub struct InterlacingReport {
    /// Smallest slack of the two bounds at each index; negative means violated.
    pub margins: Vec<f64>,
    pub pass: bool,
    pub first_violation: Option<usize>,
    pub tolerance: f64,
}

/// Checks `old_1 + ||h'|| >= new_1 >= old_1` and
/// `old_{i-1} >= new_i >= old_i` for i >= 2, with 1e-10 absolute slack.
pub fn interlacing_check(
    old: &SingularSpectrum,
    new: &SingularSpectrum,
    h_norm: f64,
) -> Result<InterlacingReport> {
    if old.len() != new.len() {
        return Err(Error::DimensionMismatch(format!(
            "spectra must have equal length, got {} and {}",
            old.len(),
            new.len()
        )));
    }
    let tolerance = 1e-10;
    let o = old.values();
    let n = new.values();
    let mut margins = Vec::with_capacity(o.len());
    for i in 0..o.len() {
        let upper = if i == 0 { o[0] + h_norm - n[0] } else { o[i - 1] - n[i] };
        let lower = n[i] - o[i];
        margins.push(upper.min(lower));
    }
    let first_violation = margins.iter().position(|&m| m < -tolerance);
    Ok(InterlacingReport { pass: first_violation.is_none(), margins, first_violation, tolerance })
}

/// Per-index decomposition of the rank-one update: `delta_i` is the
/// cross-term sum at root i and `shift_i = w_i / (1 + delta_i)` satisfies
/// `pole_i + shift_i = root_i`.
#[derive(Debug, Clone)]
pub struct ShiftReport {
    pub deltas: Vec<f64>,
    pub shifts: Vec<f64>,
}

pub fn singular_shift(problem: &SecularProblem, roots: &SingularSpectrum) -> ShiftReport {
    let d = problem.poles();
    let w = problem.weights();
    let r = roots.values();
    let mut deltas = Vec::with_capacity(d.len());
    let mut shifts = Vec::with_capacity(d.len());
    for i in 0..d.len() {
        if w[i] == 0.0 {
            // Deflated index: the root sits exactly on the pole.
            let delta: f64 = (0..d.len())
                .filter(|&m| m != i && d[m] != r[i])
                .map(|m| w[m] / (d[m] - r[i]))
                .sum();
            deltas.push(delta);
            shifts.push(0.0);
            continue;
        }
        let delta: f64 = (0..d.len()).filter(|&m| m != i).map(|m| w[m] / (d[m] - r[i])).sum();
        deltas.push(delta);
        shifts.push(w[i] / (1.0 + delta));
    }
    ShiftReport { deltas, shifts }
}

/// True iff every updated singular value is at least the base one
/// (1e-12 slack): the stacked-channel monotonicity property.
pub fn monotonicity_check(old: &SingularSpectrum, new: &SingularSpectrum) -> bool {
    if old.len() != new.len() {
        return false;
    }
    old.values().iter().zip(new.values()).all(|(o, n)| *n >= o - 1e-12)
}

// ---------------------------------------------------------------------------
// Secular solver internals
// ---------------------------------------------------------------------------

struct RankOneSolution {
    /// Unsorted: eigenvalue for each input index (deflated indices keep
    /// their pole).
    eigenvalues: Vec<f64>,
}

struct RankOneEigen {
    /// Descending eigenvalues.
    values: Vec<f64>,
    /// Unitary eigenbasis matching `values` column-for-column.
    basis: CMat,
}

/// A solved root kept as shift pole + offset so that differences against
/// nearby poles stay accurate.
#[derive(Debug, Clone, Copy)]
struct ActiveRoot {
    value: f64,
    /// Index into the active pole array the offset is anchored to.
    anchor: usize,
    offset: f64,
}

fn solve_rank_one(poles: &[f64], weights: &[f64]) -> RankOneSolution {
    let n = poles.len();
    let sum_w: f64 = weights.iter().sum();
    if sum_w <= 0.0 || n == 0 {
        return RankOneSolution { eigenvalues: poles.to_vec() };
    }

    let (active_idx, active_w) = deflate(poles, weights, sum_w);
    let active_d: Vec<f64> = active_idx.iter().map(|&i| poles[i]).collect();
    let roots = solve_active(&active_d, &active_w, sum_w);

    let mut eigenvalues = poles.to_vec();
    for (j, root) in roots.iter().enumerate() {
        eigenvalues[active_idx[j]] = root.value;
    }
    RankOneSolution { eigenvalues }
}

/// Groups near-equal poles, sums their weights onto the first member, and
/// drops negligible weights. Returns the surviving indices (descending pole
/// order) and their weights.
fn deflate(poles: &[f64], weights: &[f64], sum_w: f64) -> (Vec<usize>, Vec<f64>) {
    let n = poles.len();
    let cluster_tol = CLUSTER_REL * poles.first().copied().unwrap_or(0.0).abs().max(1.0);
    let deflate_tol = DEFLATION_REL * sum_w;

    let mut merged = weights.to_vec();
    let mut rep = 0usize;
    for i in 1..n {
        if (poles[rep] - poles[i]).abs() <= cluster_tol {
            merged[rep] += merged[i];
            merged[i] = 0.0;
        } else {
            rep = i;
        }
    }

    let mut idx = Vec::new();
    let mut w = Vec::new();
    for i in 0..n {
        if merged[i] > deflate_tol {
            idx.push(i);
            w.push(merged[i]);
        }
    }
    (idx, w)
}

/// Solves every interval of the deflated problem. Poles strictly
/// descending, weights strictly positive.
fn solve_active(d: &[f64], w: &[f64], sum_w: f64) -> Vec<ActiveRoot> {
    (0..d.len()).map(|j| solve_interval(d, w, j, sum_w)).collect()
}

/// Root j lies in (d_j, d_{j-1}), or (d_0, d_0 + sum_w] for j = 0. The
/// secular function is increasing between consecutive poles, so bisection
/// brackets are exact; Newton accelerates inside the bracket.
fn solve_interval(d: &[f64], w: &[f64], j: usize, sum_w: f64) -> ActiveRoot {
    let lo = d[j];
    let (hi, top) = if j == 0 {
        let mut cap = d[0] + sum_w;
        // F(d_0 + sum_w) >= 0 analytically; nudge the cap if rounding says no.
        if eval_shifted(d, w, 0, cap - d[0]).0 < 0.0 {
            cap += 1.0;
        }
        (cap, true)
    } else {
        (d[j - 1], false)
    };

    // Choose the anchor pole: near the end of the interval the root sits at,
    // so shifted denominators keep full relative precision. The top interval
    // always anchors at its pole.
    let anchor = if top {
        j
    } else {
        let mid = 0.5 * (lo + hi);
        let (fmid, _) = eval_shifted(d, w, j, mid - lo);
        if fmid > 0.0 {
            j
        } else {
            j - 1
        }
    };
    let s = d[anchor];

    // Bracket in offset coordinates t (root = s + t).
    let (mut tlo, mut thi) = (lo - s, hi - s);
    let width_tol = WIDTH_REL * (1.0 + d[j].abs());
    let mut t = 0.5 * (tlo + thi);
    for _ in 0..200 {
        let (f, fp) = eval_shifted(d, w, anchor, t);
        if f.abs() < SECULAR_F_TOL {
            break;
        }
        if f < 0.0 {
            tlo = t;
        } else {
            thi = t;
        }
        if thi - tlo < width_tol {
            break;
        }
        let newton = t - f / fp;
        t = if newton > tlo && newton < thi { newton } else { 0.5 * (tlo + thi) };
    }
    ActiveRoot { value: s + t, anchor, offset: t }
}

/// Secular function and derivative at `x = d[anchor] + t`, evaluated in
/// shifted coordinates so terms near the anchor pole do not cancel.
fn eval_shifted(d: &[f64], w: &[f64], anchor: usize, t: f64) -> (f64, f64) {
    let s = d[anchor];
    let mut f = 1.0;
    let mut fp = 0.0;
    for i in 0..d.len() {
        let den = (d[i] - s) - t;
        let term = w[i] / den;
        f += term;
        fp += term / den;
    }
    (f, fp)
}

/// Full rank-one eigen-decomposition of `diag(poles) + z z^H` with poles
/// descending. Weights are rebuilt from the computed roots (Loewner
/// formula) before forming eigenvectors, which keeps the basis orthogonal
/// even when roots hug their poles.
fn rank_one_eigen(poles: &[f64], z: &CVec) -> RankOneEigen {
    let n = poles.len();
    let weights: Vec<f64> = z.iter().map(|c| c.norm_sqr()).collect();
    let sum_w: f64 = weights.iter().sum();
    if sum_w <= 0.0 || n == 0 {
        return RankOneEigen { values: poles.to_vec(), basis: CMat::identity(n, n) };
    }

    // Phase reduction: diag(d) + z z^H = Ph (diag(d) + u u^T) Ph^H.
    let mut u: Vec<f64> = z.iter().map(|c| c.norm()).collect();
    let phases: Vec<Complex64> = z
        .iter()
        .zip(&u)
        .map(|(c, &m)| if m > 0.0 { c / m } else { Complex64::new(1.0, 0.0) })
        .collect();

    // Cluster rotations concentrate each near-equal pole group's weight on
    // its first member.
    let cluster_tol = CLUSTER_REL * poles[0].abs().max(1.0);
    let mut rotations: Vec<(usize, usize, f64, f64)> = Vec::new();
    let mut rep = 0usize;
    for i in 1..n {
        if (poles[rep] - poles[i]).abs() <= cluster_tol {
            if u[i] > 0.0 {
                let h = u[rep].hypot(u[i]);
                rotations.push((rep, i, u[rep] / h, u[i] / h));
                u[rep] = h;
                u[i] = 0.0;
            }
        } else {
            rep = i;
        }
    }

    let deflate_tol = DEFLATION_REL * sum_w;
    let mut active_idx = Vec::new();
    for (i, &ui) in u.iter().enumerate() {
        if ui * ui > deflate_tol {
            active_idx.push(i);
        }
    }

    let mut values = poles.to_vec();
    let mut vectors: Vec<Option<Vec<f64>>> = vec![None; n];

    if !active_idx.is_empty() {
        let da: Vec<f64> = active_idx.iter().map(|&i| poles[i]).collect();
        let wa: Vec<f64> = active_idx.iter().map(|&i| u[i] * u[i]).collect();
        let roots = solve_active(&da, &wa, sum_w);
        let k = da.len();

        // Difference root_j - pole_i through the anchored representation.
        let diff = |root: &ActiveRoot, i: usize| (da[root.anchor] - da[i]) + root.offset;

        // Loewner reconstruction of the weight magnitudes.
        let mut u_hat = vec![0.0f64; k];
        for i in 0..k {
            let mut prod = diff(&roots[i], i);
            for jj in 0..k {
                if jj != i {
                    prod *= diff(&roots[jj], i) / (da[jj] - da[i]);
                }
            }
            u_hat[i] = prod.max(0.0).sqrt();
        }

        for (j, root) in roots.iter().enumerate() {
            values[active_idx[j]] = root.value;
            let mut vec_full = vec![0.0f64; n];
            let mut norm2 = 0.0;
            for i in 0..k {
                let c = u_hat[i] / (-diff(root, i));
                vec_full[active_idx[i]] = c;
                norm2 += c * c;
            }
            let inv = 1.0 / norm2.sqrt();
            for v in vec_full.iter_mut() {
                *v *= inv;
            }
            vectors[active_idx[j]] = Some(vec_full);
        }
    }

    // Sort all eigenpairs descending (ties keep input order).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));

    let mut real_basis = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut sorted_values = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        sorted_values.push(values[src]);
        match &vectors[src] {
            Some(v) => {
                for (row, &x) in v.iter().enumerate() {
                    real_basis[(row, col)] = x;
                }
            }
            None => real_basis[(src, col)] = 1.0,
        }
    }

    // Undo the cluster rotations (left-multiply in reverse order).
    for &(r, m, c, s) in rotations.iter().rev() {
        for col in 0..n {
            let xr = real_basis[(r, col)];
            let xm = real_basis[(m, col)];
            real_basis[(r, col)] = c * xr - s * xm;
            real_basis[(m, col)] = s * xr + c * xm;
        }
    }

    // Reattach entry phases.
    let mut basis = CMat::zeros(n, n);
    for row in 0..n {
        for col in 0..n {
            basis[(row, col)] = phases[row] * real_basis[(row, col)];
        }
    }
    RankOneEigen { values: sorted_values, basis }
}

/// Applies `rank_one_eigen` once per row, rotating remaining rows into the
/// updated eigenbasis between steps. Returns squared singular values,
/// descending.
fn iterated_rank_update(mut poles: Vec<f64>, rows: &CMat) -> Vec<f64> {
    if rows.nrows() == 0 {
        return poles;
    }
    let mut cur = rows.clone();
    for k in 0..cur.nrows() {
        let z = CVec::from_iterator(cur.ncols(), cur.row(k).iter().map(|c| c.conj()));
        let eig = rank_one_eigen(&poles, &z);
        poles = eig.values;
        if k + 1 < cur.nrows() {
            cur = &cur * &eig.basis;
        }
    }
    poles
}
