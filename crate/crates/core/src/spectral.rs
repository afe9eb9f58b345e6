//! Spectral data of `D = −½ J (d/dt + E)` acting on loops `S¹ → ℝ²ⁿ ⊗ ℂ`.
//!
//! On the Fourier mode `e^{2πimt} v` the operator acts as
//! `H_m = −½ J (2πim + E)`. It is self-adjoint for the metric `G = ΩJ`;
//! since `GJ = −Ω`, `G H_m = ½ Ω (E + 2πim)`, and the eigenvalues of `H_m` are
//! those of the Hermitian matrix `L⁻¹ (G H_m) L⁻ᴴ` where `G = L Lᵀ`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cabs, complexify, cplx, lit, max_abs, to_f64, wrap, CMatrix, Real, Tolerances};
use crate::symplectic::{
    block_diag, omega_gram, CartanBlock, CartanDecomposition, ComplexStructure, OperatorSpec,
};

/// Closed-form `|det D|` of one block, after discarding the free-operator factors.
pub fn block_abs_det<T: Real>(b: &CartanBlock<T>) -> Result<T> {
    let half = lit::<T>(0.5);
    Ok(match *b {
        CartanBlock::Unitary { h } => {
            let s = (h * half).sin();
            let d = lit::<T>(4.0) * s * s;
            if wrap(h, T::two_pi()).is_zero() || d.is_zero() {
                return Err(Error::DegenerateFixedPoint(format!(
                    "unitary angle {} gives a zero mode",
                    to_f64(h)
                )));
            }
            d
        }
        CartanBlock::Hyperbolic { h } => {
            let s = (h * half).exp() - (-h * half).exp();
            s * s
        }
        CartanBlock::ComplexQuad { z } => {
            let f = |w: Complex<T>| {
                let e = crate::scalar::cexp(w * cplx(half, T::zero()));
                let a = cabs(e - e.inv());
                a * a
            };
            f(z) * f(z.conj())
        }
        CartanBlock::NegHyperbolic { h } => {
            let c = (h * half).exp() + (-h * half).exp();
            c * c
        }
    })
}

/// Product of [`block_abs_det`] over the blocks.
pub fn abs_det<T: Real>(dec: &CartanDecomposition<T>) -> Result<T> {
    dec.blocks
        .iter()
        .try_fold(T::one(), |acc, b| Ok(acc * block_abs_det(b)?))
}

/// Truncated product `∏_{|m| ≤ M} |det(J (E − 2πim))|`, each `m ≠ 0` factor
/// divided by its free counterpart `(2π|m|)²ⁿ`.
///
/// Accumulated as a sum of logarithms in the fixed order `m = 0, 1, −1, 2, −2, …`.
pub fn truncated_det_oracle<T: Real>(spec: &OperatorSpec<T>, m_max: u64) -> T {
    let j = complexify(spec.complex_structure().matrix());
    let je = &j * spec.generator();
    let dim = je.nrows();
    let two_pi = T::two_pi();
    let factor = |m: i64| -> T {
        let shift = cplx(T::zero(), -two_pi * lit::<T>(m as f64));
        let a = &je + &j * shift;
        let d = cabs(a.determinant());
        if m == 0 {
            d.ln()
        } else {
            d.ln() - lit::<T>(dim as f64) * (two_pi * lit::<T>(m.unsigned_abs() as f64)).ln()
        }
    };
    let mut log = factor(0);
    for m in 1..=m_max as i64 {
        log += factor(m);
        log += factor(-m);
    }
    log.exp()
}

/// Richardson step `2 P(2M) − P(M)` on [`truncated_det_oracle`], removing the
/// leading `1/M` truncation error.
pub fn extrapolated_det_oracle<T: Real>(spec: &OperatorSpec<T>, m_max: u64) -> T {
    let p1 = truncated_det_oracle(spec, m_max);
    let p2 = truncated_det_oracle(spec, 2 * m_max);
    lit::<T>(2.0) * p2 - p1
}

/// Closed-form eta invariant of one block with its standard complex structure.
pub fn block_eta<T: Real>(b: &CartanBlock<T>) -> Result<T> {
    match *b {
        CartanBlock::Unitary { h } => {
            let hn = wrap(h, T::two_pi());
            if hn.is_zero() {
                return Err(Error::DegenerateFixedPoint(
                    "unitary angle in 2πℤ gives a zero mode".into(),
                ));
            }
            Ok(lit::<T>(2.0) - lit::<T>(2.0) * hn / T::pi())
        }
        _ => Ok(T::zero()),
    }
}

/// Sum of [`block_eta`] over the blocks (not reduced mod 2).
pub fn eta<T: Real>(dec: &CartanDecomposition<T>) -> Result<T> {
    dec.blocks
        .iter()
        .try_fold(T::zero(), |acc, b| Ok(acc + block_eta(b)?))
}

/// `Tr(JE)/π` reduced to `[0, 2)`.
pub fn eta_trace_formula<T: Real>(spec: &OperatorSpec<T>) -> T {
    wrap(spec.je().trace().re / T::pi(), lit::<T>(2.0))
}

/// Operator of a single block with its standard complex structure.
pub fn block_operator<T: Real>(b: &CartanBlock<T>) -> OperatorSpec<T> {
    OperatorSpec::from_decomposition(&CartanDecomposition {
        blocks: vec![*b],
        conjugator: DMatrix::identity(b.dim(), b.dim()),
        source: b.group_element(),
    })
}

/// Operator of a full decomposition, assembled block-diagonally in standard form.
pub fn standard_form_operator<T: Real>(dec: &CartanDecomposition<T>) -> OperatorSpec<T> {
    let dim = dec.source.nrows();
    OperatorSpec::from_decomposition(&CartanDecomposition {
        blocks: dec.blocks.clone(),
        conjugator: DMatrix::identity(dim, dim),
        source: dec.standard_form(),
    })
}

/// Coefficients of `E = Σ₁ [[0,1],[1,0]] + Σ₂ [[0,−1],[1,0]] + Σ₃ [[1,0],[0,−1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl2Coefficients<T: Real> {
    pub sigma1: T,
    pub sigma2: T,
    pub sigma3: T,
}

impl<T: Real> Sl2Coefficients<T> {
    pub fn new(sigma1: T, sigma2: T, sigma3: T) -> Self {
        Self {
            sigma1,
            sigma2,
            sigma3,
        }
    }

    pub fn generator(&self) -> DMatrix<T> {
        let (a, b, c) = (self.sigma1, self.sigma2, self.sigma3);
        DMatrix::from_row_slice(2, 2, &[c, a - b, a + b, -c])
    }

    /// `√(Σ₁² + Σ₃²)`.
    pub fn kappa(&self) -> T {
        (self.sigma1 * self.sigma1 + self.sigma3 * self.sigma3).sqrt()
    }

    /// `(J₀, E)`; the generator only needs to be self-adjoint here, not to
    /// exponentiate to a regular element.
    pub fn operator(&self) -> OperatorSpec<T> {
        OperatorSpec::from_parts_unchecked(ComplexStructure::standard(1), complexify(&self.generator()))
    }

    pub fn scaled(&self, t: T) -> Self {
        Self::new(self.sigma1 * t, self.sigma2 * t, self.sigma3 * t)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.sigma1 + o.sigma1, self.sigma2 + o.sigma2, self.sigma3 + o.sigma3)
    }
}

/// Eigenvalues grouped by Fourier mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum<T: Real> {
    pub modes: Vec<(i64, Vec<T>)>,
}

impl<T: Real> ModeSpectrum<T> {
    pub fn flatten(&self) -> Vec<T> {
        self.modes.iter().flat_map(|(_, v)| v.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.modes.iter().map(|(_, v)| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A block together with its truncated spectrum for the standard complex structure.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpectrum<T: Real> {
    pub block: CartanBlock<T>,
    pub spectrum: ModeSpectrum<T>,
}

fn mode_order(m_range: u64) -> Vec<i64> {
    let r = m_range as i64;
    (-r..=r).collect()
}

/// `λ_m^± = ½(Σ₂ ± √(Σ₁² + Σ₃² + 4π²m²))` for `|m| ≤ m_range`, sorted within each mode.
pub fn sl2_eigenvalues<T: Real>(c: &Sl2Coefficients<T>, m_range: u64) -> ModeSpectrum<T> {
    let half = lit::<T>(0.5);
    let k2 = c.sigma1 * c.sigma1 + c.sigma3 * c.sigma3;
    let modes = mode_order(m_range)
        .into_iter()
        .map(|m| {
            let tm = T::two_pi() * lit::<T>(m as f64);
            let r = (k2 + tm * tm).sqrt();
            (m, vec![half * (c.sigma2 - r), half * (c.sigma2 + r)])
        })
        .collect();
    ModeSpectrum { modes }
}

/// Hermitian model of the mode operators of one operator:
/// `H̃_m = ½ (B + 2πim A)` with `A = L⁻¹ Ω L⁻ᴴ`, `B = L⁻¹ Ω E L⁻ᴴ`.
struct ModeModel<T: Real> {
    a: CMatrix<T>,
    b: CMatrix<T>,
}

fn whitening<T: Real>(j: &ComplexStructure<T>) -> Result<CMatrix<T>> {
    let g = j.metric();
    let sym = (&g + g.transpose()) * lit::<T>(0.5);
    let chol = Cholesky::new(sym)
        .ok_or_else(|| Error::InvalidComplexStructure("metric is not positive definite".into()))?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::InvalidComplexStructure("metric factor is singular".into()))?;
    Ok(complexify(&linv))
}

impl<T: Real> ModeModel<T> {
    fn new(spec: &OperatorSpec<T>, w: &CMatrix<T>) -> Self {
        let omega = complexify(&omega_gram::<T>(spec.half_dim()));
        let wh = w.adjoint();
        Self {
            a: w * &omega * &wh,
            b: w * (&omega * spec.generator()) * &wh,
        }
    }

    fn lerp(&self, other: &Self, t: T) -> Self {
        let s = cplx(T::one() - t, T::zero());
        let t = cplx(t, T::zero());
        Self {
            a: &self.a * s + &other.a * t,
            b: &self.b * s + &other.b * t,
        }
    }

    fn eigenvalues(&self, m: i64) -> Vec<T> {
        let shift = cplx(T::zero(), T::two_pi() * lit::<T>(m as f64));
        let h = (&self.b + &self.a * shift) * cplx(lit::<T>(0.5), T::zero());
        let herm = (&h + h.adjoint()) * cplx(lit::<T>(0.5), T::zero());
        let mut ev: Vec<T> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}

/// Eigenvalues of `D` on the modes `|m| ≤ m_range`, sorted within each mode.
pub fn mode_spectrum<T: Real>(spec: &OperatorSpec<T>, m_range: u64) -> Result<ModeSpectrum<T>> {
    let w = whitening(spec.complex_structure())?;
    let model = ModeModel::new(spec, &w);
    Ok(ModeSpectrum {
        modes: mode_order(m_range)
            .into_iter()
            .map(|m| (m, model.eigenvalues(m)))
            .collect(),
    })
}

pub fn block_spectrum<T: Real>(b: &CartanBlock<T>, m_range: u64) -> Result<BlockSpectrum<T>> {
    Ok(BlockSpectrum {
        block: *b,
        spectrum: mode_spectrum(&block_operator(b), m_range)?,
    })
}

/// Regularized eta sums at several `s` and their extrapolation to `s = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaEstimate<T: Real> {
    pub value: T,
    /// `(s, Σ sign λ |λ|^{−s} e^{−(λ/Λ)²})` at each sample.
    pub curve: Vec<(T, T)>,
    /// Width `Λ` of the Gaussian spectral cutoff.
    pub cutoff: T,
}

pub const DEFAULT_S_VALUES: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Eta invariant from a truncated spectrum.
///
/// A plain truncated `Σ sign λ |λ|^{−s}` carries an `O(M^{−s})` edge error
/// that no small-`s` fit removes, so every term is damped by `e^{−(λ/Λ)²}` with
/// `Λ = max|λ|/6`. The damped sums are fitted by the interpolating polynomial
/// through the samples and evaluated at `s = 0`.
pub fn eta_regularized_sum<T: Real>(eigs: &[T], s_values: &[T], tol_kernel: T) -> Result<EtaEstimate<T>> {
    if s_values.is_empty() {
        return Err(Error::Config("at least one s value is required".into()));
    }
    if let Some(l) = eigs.iter().find(|l| l.abs() <= tol_kernel) {
        return Err(Error::Kernel(format!(
            "eigenvalue {:.3e} is within the kernel tolerance",
            to_f64(*l)
        )));
    }
    let lmax = eigs.iter().fold(T::zero(), |a, l| a.max(l.abs()));
    let cutoff = (lmax / lit::<T>(6.0)).max(T::one());
    let curve: Vec<(T, T)> = s_values
        .iter()
        .map(|&s| {
            let sum = eigs.iter().fold(T::zero(), |acc, &l| {
                let x = l / cutoff;
                let w = l.abs().powf(-s) * (-(x * x)).exp();
                if l > T::zero() {
                    acc + w
                } else {
                    acc - w
                }
            });
            (s, sum)
        })
        .collect();
    // Lagrange interpolation at s = 0.
    let mut value = T::zero();
    for (i, &(si, yi)) in curve.iter().enumerate() {
        let mut w = T::one();
        for (j, &(sj, _)) in curve.iter().enumerate() {
            if i != j {
                w *= sj / (sj - si);
            }
        }
        value += w * yi;
    }
    Ok(EtaEstimate {
        value,
        curve,
        cutoff,
    })
}

/// [`eta_regularized_sum`] over the mode spectrum of an operator.
pub fn eta_of_operator<T: Real>(
    spec: &OperatorSpec<T>,
    m_range: u64,
    s_values: &[T],
    tol_kernel: T,
) -> Result<EtaEstimate<T>> {
    let eigs = mode_spectrum(spec, m_range)?.flatten();
    eta_regularized_sum(&eigs, s_values, tol_kernel)
}

/// One signed zero crossing along a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing<T: Real> {
    pub tau: T,
    pub mode: i64,
    pub index: usize,
    pub direction: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFlowResult<T: Real> {
    pub flow: i64,
    pub crossings: Vec<Crossing<T>>,
    /// Interior sample parameters at which some eigenvalue lay within the kernel tolerance.
    pub kernel_hits: Vec<T>,
    /// `Σ_m (#neg(start) − #neg(end))`, computed without any eigenvalue tracking.
    pub endpoint_count: i64,
    /// Intervals that were subdivided to resolve a close encounter.
    pub refinements: usize,
}

/// Eigenvalue-vs-parameter samples along a linear path, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample<T: Real> {
    pub tau: T,
    pub mode: i64,
    pub eigenvalues: Vec<T>,
}

const MAX_REFINE_DEPTH: u32 = 6;
const REFINE_SPLIT: usize = 4;

fn same_complex_structure<T: Real>(a: &OperatorSpec<T>, b: &OperatorSpec<T>, tol: T) -> Result<()> {
    let ja = a.complex_structure().matrix();
    let jb = b.complex_structure().matrix();
    if ja.shape() != jb.shape() {
        return Err(Error::Dimension("path endpoints have different dimensions".into()));
    }
    if !(max_abs(&(ja - jb)) <= tol) {
        return Err(Error::UnsupportedPath(
            "endpoints use different complex structures".into(),
        ));
    }
    Ok(())
}

/// Greedy nearest-value matching; `perm[i]` is the index in `b` matched to `a[i]`.
fn match_nearest<T: Real>(a: &[T], b: &[T]) -> Vec<usize> {
    let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            pairs.push(((x - y).abs(), i, j));
        }
    }
    pairs.sort_by(|p, q| {
        p.0.partial_cmp(&q.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(p.1.cmp(&q.1))
            .then(p.2.cmp(&q.2))
    });
    let mut perm = vec![usize::MAX; a.len()];
    let mut used = vec![false; b.len()];
    for (_, i, j) in pairs {
        if perm[i] == usize::MAX && !used[j] {
            perm[i] = j;
            used[j] = true;
        }
    }
    perm
}

fn min_gap<T: Real>(v: &[T], i: usize) -> T {
    v.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .fold(T::max_value().unwrap_or(T::one()), |acc, (_, &y)| acc.min((y - v[i]).abs()))
}

struct FlowCounter<'a, T: Real> {
    start: &'a ModeModel<T>,
    end: &'a ModeModel<T>,
    tol: &'a Tolerances,
    crossings: Vec<Crossing<T>>,
    kernel_hits: Vec<T>,
    refinements: usize,
}

impl<T: Real> FlowCounter<'_, T> {
    fn at(&self, tau: T, m: i64) -> Vec<T> {
        self.start.lerp(self.end, tau).eigenvalues(m)
    }

    fn interval(&mut self, m: i64, ta: T, tb: T, ea: &[T], eb: &[T], depth: u32) -> Result<()> {
        let perm = match_nearest(ea, eb);
        let tol_match = lit::<T>(self.tol.matching);
        let sign_change = |i: usize| (ea[i] < T::zero()) != (eb[perm[i]] < T::zero());
        let ambiguous = (0..ea.len())
            .any(|i| sign_change(i) && (min_gap(ea, i) <= tol_match || min_gap(eb, perm[i]) <= tol_match));
        if ambiguous {
            if depth >= MAX_REFINE_DEPTH {
                return Err(Error::Matching(format!(
                    "mode {m}: eigenvalues closer than {:.1e} near a crossing at τ ∈ [{:.6}, {:.6}]",
                    self.tol.matching,
                    to_f64(ta),
                    to_f64(tb)
                )));
            }
            self.refinements += 1;
            let n = REFINE_SPLIT;
            let mut prev_t = ta;
            let mut prev_e = ea.to_vec();
            for k in 1..=n {
                let t = if k == n {
                    tb
                } else {
                    ta + (tb - ta) * lit::<T>(k as f64 / n as f64)
                };
                let e = if k == n { eb.to_vec() } else { self.at(t, m) };
                self.interval(m, prev_t, t, &prev_e, &e, depth + 1)?;
                prev_t = t;
                prev_e = e;
            }
            return Ok(());
        }
        for i in 0..ea.len() {
            if sign_change(i) {
                let (x, y) = (ea[i], eb[perm[i]]);
                let tau = ta + (tb - ta) * x / (x - y);
                self.crossings.push(Crossing {
                    tau,
                    mode: m,
                    index: i,
                    direction: if x < T::zero() { 1 } else { -1 },
                });
            }
        }
        Ok(())
    }
}

fn count_negative<T: Real>(v: &[T]) -> i64 {
    v.iter().filter(|x| **x < T::zero()).count() as i64
}

/// Signed count of eigenvalues of `D_τ` crossing zero along
/// `E_τ = (1 − τ) E₀ + τ E₁`, with `J` fixed. Negative-to-positive counts `+1`.
pub fn spectral_flow_linear<T: Real>(
    spec0: &OperatorSpec<T>,
    spec1: &OperatorSpec<T>,
    steps: usize,
    m_range: u64,
    tol: &Tolerances,
) -> Result<SpectralFlowResult<T>> {
    if steps == 0 {
        return Err(Error::Config("steps must be positive".into()));
    }
    same_complex_structure(spec0, spec1, lit::<T>(tol.symp))?;
    let w = whitening(spec0.complex_structure())?;
    let m0 = ModeModel::new(spec0, &w);
    let m1 = ModeModel::new(spec1, &w);
    let tol_kernel = lit::<T>(tol.kernel);

    let mut counter = FlowCounter {
        start: &m0,
        end: &m1,
        tol,
        crossings: Vec::new(),
        kernel_hits: Vec::new(),
        refinements: 0,
    };
    let mut endpoint_count = 0i64;
    let taus: Vec<T> = (0..=steps)
        .map(|i| lit::<T>(i as f64) / lit::<T>(steps as f64))
        .collect();

    for m in mode_order(m_range) {
        let mut prev = m0.eigenvalues(m);
        let last = m1.eigenvalues(m);
        for (which, ev) in [("start", &prev), ("end", &last)] {
            if let Some(l) = ev.iter().find(|l| l.abs() <= tol_kernel) {
                return Err(Error::Kernel(format!(
                    "{which} operator has eigenvalue {:.3e} on mode {m}",
                    to_f64(*l)
                )));
            }
        }
        endpoint_count += count_negative(&prev) - count_negative(&last);
        for i in 1..=steps {
            let tau = taus[i];
            let cur = if i == steps { last.clone() } else { counter.at(tau, m) };
            if i < steps && cur.iter().any(|l| l.abs() <= tol_kernel) {
                counter.kernel_hits.push(tau);
            }
            counter.interval(m, taus[i - 1], tau, &prev, &cur, 0)?;
            prev = cur;
        }
    }

    let mut crossings = counter.crossings;
    crossings.sort_by(|a, b| {
        a.tau
            .partial_cmp(&b.tau)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.mode.cmp(&b.mode))
            .then(a.index.cmp(&b.index))
    });
    let mut kernel_hits = counter.kernel_hits;
    kernel_hits.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    kernel_hits.dedup();
    let flow: i64 = crossings.iter().map(|c| c.direction as i64).sum();
    if flow != endpoint_count {
        return Err(Error::OracleMismatch(format!(
            "tracked flow {flow} disagrees with endpoint count {endpoint_count}"
        )));
    }
    Ok(SpectralFlowResult {
        flow,
        crossings,
        kernel_hits,
        endpoint_count,
        refinements: counter.refinements,
    })
}

/// Eigenvalues of the selected modes at `steps + 1` equally spaced points of
/// the linear path.
pub fn path_samples<T: Real>(
    spec0: &OperatorSpec<T>,
    spec1: &OperatorSpec<T>,
    steps: usize,
    modes: &[i64],
    tol: &Tolerances,
) -> Result<Vec<PathSample<T>>> {
    same_complex_structure(spec0, spec1, lit::<T>(tol.symp))?;
    let w = whitening(spec0.complex_structure())?;
    let m0 = ModeModel::new(spec0, &w);
    let m1 = ModeModel::new(spec1, &w);
    let mut out = Vec::with_capacity((steps + 1) * modes.len());
    for i in 0..=steps {
        let tau = lit::<T>(i as f64) / lit::<T>(steps.max(1) as f64);
        let model = m0.lerp(&m1, tau);
        for &m in modes {
            out.push(PathSample {
                tau,
                mode: m,
                eigenvalues: model.eigenvalues(m),
            });
        }
    }
    Ok(out)
}

/// Block-diagonal operator of several blocks, standard complex structure on each.
pub fn blocks_operator<T: Real>(blocks: &[CartanBlock<T>]) -> OperatorSpec<T> {
    let parts: Vec<_> = blocks.iter().map(|b| b.group_element()).collect();
    let dim: usize = blocks.iter().map(|b| b.dim()).sum();
    OperatorSpec::from_decomposition(&CartanDecomposition {
        blocks: blocks.to_vec(),
        conjugator: DMatrix::identity(dim, dim),
        source: block_diag(&parts),
    })
}
