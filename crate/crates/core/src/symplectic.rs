//! Matrix-level foundations: membership in `Sp(2n, ℝ)`, Cartan-type
//! classification, block decomposition, canonical complex structures and
//! logarithms into the (possibly complexified) symplectic Lie algebra.
//!
//! Conventions. Coordinates are ordered `(q₁…qₙ, p₁…pₙ)` and
//! `J₀ = [[0, −I], [I, 0]]`. The symplectic form is `ω(u, v) = uᵀ J₀ᵀ v`, so
//! that `ω(u, J₀u) = |u|²` and `J₀` is a positive complex structure.
//! Inside a Cartan block the same convention is used block-locally: 2×2
//! blocks carry `[[0, −1], [1, 0]]`, the 4×4 quadruple block carries
//! `[[0, −I₂], [I₂, 0]]`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{
    carg, cabs, complexify, cplx, lit, max_abs, max_abs_c, to_f64, wrap, CMatrix, Real, Tolerances,
};

/// `J₀ = [[0, −I], [I, 0]]` of size `2n`.
pub fn standard_j0<T: Real>(n: usize) -> DMatrix<T> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -T::one();
        j[(n + i, i)] = T::one();
    }
    j
}

/// Gram matrix of ω: `ω(u, v) = uᵀ Ω v` with `Ω = J₀ᵀ`.
pub(crate) fn omega_gram<T: Real>(n: usize) -> DMatrix<T> {
    standard_j0::<T>(n).transpose()
}

fn even_square<T: Real>(m: &DMatrix<T>) -> Result<usize> {
    if !m.is_square() || m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "expected an even-dimensional square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows() / 2)
}

fn symplectic_defect<T: Real>(m: &DMatrix<T>, n: usize) -> T {
    let j0 = standard_j0::<T>(n);
    max_abs(&(m.transpose() * &j0 * m - &j0))
}

/// True iff `‖MᵀJ₀M − J₀‖_max ≤ tol`.
pub fn check_symplectic<T: Real>(m: &DMatrix<T>, tol: T) -> Result<bool> {
    let n = even_square(m)?;
    Ok(symplectic_defect(m, n) <= tol)
}

/// An element of `Sp(2n, ℝ)`, typically the differential of a map at a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix<T: Real> {
    n: usize,
    entries: DMatrix<T>,
}

impl<T: Real> SymplecticMatrix<T> {
    pub fn new(entries: DMatrix<T>, tol: T) -> Result<Self> {
        let n = even_square(&entries)?;
        let defect = symplectic_defect(&entries, n);
        if !(defect <= tol) {
            return Err(Error::NotSymplectic {
                defect: to_f64(defect),
                tol: to_f64(tol),
            });
        }
        // det = 1 is implied by symplecticity; checked on its own anyway.
        let scale = max_abs(&entries).max(T::one()).powi(2 * n as i32);
        let det_err = (entries.determinant() - T::one()).abs();
        if !(det_err <= tol * scale) {
            return Err(Error::NotSymplectic {
                defect: to_f64(det_err),
                tol: to_f64(tol * scale),
            });
        }
        Ok(Self { n, entries })
    }

    pub fn from_row_slice(dim: usize, data: &[T], tol: T) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{} entries cannot fill a {dim}x{dim} matrix",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data), tol)
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.entries
    }

    pub fn trace(&self) -> T {
        self.entries.trace()
    }
}

/// Trace classification of `SL(2, ℝ) = Sp(2, ℝ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sl2Class {
    Hyperbolic,
    Unitary,
    Parabolic,
}

pub fn classify_sl2<T: Real>(m: &SymplecticMatrix<T>, tol_trace: T) -> Result<Sl2Class> {
    if m.half_dim() != 1 {
        return Err(Error::Dimension(format!(
            "trace classification needs a 2x2 matrix, got {0}x{0}",
            m.dim()
        )));
    }
    let t = m.trace().abs();
    let two = lit::<T>(2.0);
    Ok(if (t - two).abs() <= tol_trace {
        Sl2Class::Parabolic
    } else if t > two {
        Sl2Class::Hyperbolic
    } else {
        Sl2Class::Unitary
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockKind {
    Unitary,
    Hyperbolic,
    ComplexQuad,
    NegHyperbolic,
}

/// One block of a Cartan-subalgebra representative.
///
/// * `Unitary { h }`: generator `[[0, −h], [h, 0]]`, `h ∈ (0, 2π)`.
/// * `Hyperbolic { h }`: generator `diag(h, −h)`, `h > 0`.
/// * `ComplexQuad { z }`: generator `diag(A, −Aᵀ)` with `A = [[x, −y], [y, x]]`, `z = x + iy`,
///   normalized to `x > 0`, `y > 0`.
/// * `NegHyperbolic { h }`: complex generator `diag(h + iπ, −h + iπ)`, `h ≥ 0`; exponentiates
///   to `−diag(eʰ, e⁻ʰ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CartanBlock<T: Real> {
    Unitary { h: T },
    Hyperbolic { h: T },
    ComplexQuad { z: Complex<T> },
    NegHyperbolic { h: T },
}

impl<T: Real> CartanBlock<T> {
    /// Unitary block with angle reduced to `(0, 2π)`.
    pub fn unitary(h: T) -> Result<Self> {
        let two_pi = T::two_pi();
        let hn = wrap(h, two_pi);
        let eps = lit::<T>(1e-12) * h.abs().max(T::one());
        if hn <= eps || two_pi - hn <= eps {
            return Err(Error::DegenerateFixedPoint(format!(
                "unitary angle {} is a multiple of 2π (1 is an eigenvalue)",
                to_f64(h)
            )));
        }
        Ok(Self::Unitary { h: hn })
    }

    pub fn hyperbolic(h: T) -> Result<Self> {
        if h.is_zero() {
            return Err(Error::DegenerateFixedPoint(
                "hyperbolic parameter 0 gives eigenvalue 1".into(),
            ));
        }
        Ok(Self::Hyperbolic { h: h.abs() })
    }

    pub fn neg_hyperbolic(h: T) -> Self {
        Self::NegHyperbolic { h: h.abs() }
    }

    pub fn complex_quad(z: Complex<T>) -> Result<Self> {
        if z.re.is_zero() || z.im.is_zero() {
            return Err(Error::InvalidBlock(format!(
                "complex quadruple needs Re z ≠ 0 and Im z ≠ 0, got {} + {}i",
                to_f64(z.re),
                to_f64(z.im)
            )));
        }
        Ok(Self::ComplexQuad {
            z: cplx(z.re.abs(), z.im.abs()),
        })
    }

    pub fn kind(&self) -> BlockKind {
        match self {
            Self::Unitary { .. } => BlockKind::Unitary,
            Self::Hyperbolic { .. } => BlockKind::Hyperbolic,
            Self::ComplexQuad { .. } => BlockKind::ComplexQuad,
            Self::NegHyperbolic { .. } => BlockKind::NegHyperbolic,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::ComplexQuad { .. } => 4,
            _ => 2,
        }
    }

    /// Lie-algebra generator `E_b` with `exp(E_b)` the block of the standard form.
    pub fn generator(&self) -> CMatrix<T> {
        let zero = T::zero();
        match *self {
            Self::Unitary { h } => {
                complexify(&DMatrix::from_row_slice(2, 2, &[zero, -h, h, zero]))
            }
            Self::Hyperbolic { h } => complexify(&DMatrix::from_row_slice(2, 2, &[h, zero, zero, -h])),
            Self::ComplexQuad { z } => {
                let (x, y) = (z.re, z.im);
                complexify(&DMatrix::from_row_slice(
                    4,
                    4,
                    &[
                        x, -y, zero, zero, //
                        y, x, zero, zero, //
                        zero, zero, -x, -y, //
                        zero, zero, y, -x,
                    ],
                ))
            }
            Self::NegHyperbolic { h } => {
                let pi = T::pi();
                let mut e = CMatrix::<T>::zeros(2, 2);
                e[(0, 0)] = cplx(h, pi);
                e[(1, 1)] = cplx(-h, pi);
                e
            }
        }
    }

    /// The block of the standard-form group element, `exp(E_b)`, in closed form.
    pub fn group_element(&self) -> DMatrix<T> {
        let zero = T::zero();
        match *self {
            Self::Unitary { h } => {
                let (s, c) = (h.sin(), h.cos());
                DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
            }
            Self::Hyperbolic { h } => DMatrix::from_row_slice(2, 2, &[h.exp(), zero, zero, (-h).exp()]),
            Self::ComplexQuad { z } => {
                let (x, y) = (z.re, z.im);
                let (s, c) = (y.sin(), y.cos());
                let (a, b) = (x.exp(), (-x).exp());
                DMatrix::from_row_slice(
                    4,
                    4,
                    &[
                        a * c, -a * s, zero, zero, //
                        a * s, a * c, zero, zero, //
                        zero, zero, b * c, -b * s, //
                        zero, zero, b * s, b * c,
                    ],
                )
            }
            Self::NegHyperbolic { h } => {
                DMatrix::from_row_slice(2, 2, &[-h.exp(), zero, zero, -(-h).exp()])
            }
        }
    }

    /// Canonical complex structure of the block.
    pub fn standard_j(&self) -> DMatrix<T> {
        standard_j0(self.dim() / 2)
    }

    /// Eigenvalues of the generator.
    pub fn generator_eigenvalues(&self) -> Vec<Complex<T>> {
        let zero = T::zero();
        match *self {
            Self::Unitary { h } => vec![cplx(zero, h), cplx(zero, -h)],
            Self::Hyperbolic { h } => vec![cplx(h, zero), cplx(-h, zero)],
            Self::ComplexQuad { z } => vec![z, -z, z.conj(), -z.conj()],
            Self::NegHyperbolic { h } => vec![cplx(h, T::pi()), cplx(-h, T::pi())],
        }
    }
}

pub(crate) fn block_diag<N>(blocks: &[DMatrix<N>]) -> DMatrix<N>
where
    N: nalgebra::Scalar + Zero,
{
    let dim: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::from_element(dim, dim, N::zero());
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

/// A positive complex structure compatible with ω.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure<T: Real> {
    j: DMatrix<T>,
}

impl<T: Real> ComplexStructure<T> {
    pub fn standard(n: usize) -> Self {
        Self { j: standard_j0(n) }
    }

    /// Validates `J² = −I`, `ω(J·, J·) = ω` and positivity of `ω(·, J·)`.
    pub fn new(j: DMatrix<T>, tol: T) -> Result<Self> {
        let n = even_square(&j)?;
        let id = DMatrix::<T>::identity(2 * n, 2 * n);
        let sq = max_abs(&(&j * &j + &id));
        if !(sq <= tol) {
            return Err(Error::InvalidComplexStructure(format!(
                "J² + I has max entry {:.3e}",
                to_f64(sq)
            )));
        }
        if !(symplectic_defect(&j, n) <= tol) {
            return Err(Error::InvalidComplexStructure(
                "J does not preserve ω".into(),
            ));
        }
        let g = omega_gram::<T>(n) * &j;
        let sym = (&g + g.transpose()) * lit::<T>(0.5);
        if !(max_abs(&(&g - &sym)) <= tol * max_abs(&g).max(T::one())) {
            return Err(Error::InvalidComplexStructure(
                "ω(·, J·) is not symmetric".into(),
            ));
        }
        let min_eig = SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .fold(T::max_value().unwrap_or(T::one()), |a, &b| a.min(b));
        if !(min_eig > T::zero()) {
            return Err(Error::InvalidComplexStructure(format!(
                "ω(·, J·) is not positive definite (min eigenvalue {:.3e})",
                to_f64(min_eig)
            )));
        }
        Ok(Self { j })
    }

    pub(crate) fn new_unchecked(j: DMatrix<T>) -> Self {
        Self { j }
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.j
    }

    pub fn half_dim(&self) -> usize {
        self.j.nrows() / 2
    }

    /// Gram matrix of the compatible metric `g(u, v) = ω(u, Jv)`.
    pub fn metric(&self) -> DMatrix<T> {
        omega_gram::<T>(self.half_dim()) * &self.j
    }

    /// `g J g⁻¹`; stays positive when `g` is symplectic.
    pub fn conjugated(&self, g: &DMatrix<T>, tol: T) -> Result<Self> {
        let gi = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidComplexStructure("conjugator is singular".into()))?;
        Self::new(g * &self.j * gi, tol)
    }
}

/// Block decomposition `M = g · diag(exp E_b) · g⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanDecomposition<T: Real> {
    pub blocks: Vec<CartanBlock<T>>,
    /// Columns are the block bases; `gᵀΩg` is block-diagonal with block-local ω.
    pub conjugator: DMatrix<T>,
    pub source: DMatrix<T>,
}

impl<T: Real> CartanDecomposition<T> {
    pub fn half_dim(&self) -> usize {
        self.source.nrows() / 2
    }

    pub fn standard_form(&self) -> DMatrix<T> {
        let parts: Vec<_> = self.blocks.iter().map(|b| b.group_element()).collect();
        block_diag(&parts)
    }

    pub fn standard_generator(&self) -> CMatrix<T> {
        let parts: Vec<_> = self.blocks.iter().map(|b| b.generator()).collect();
        block_diag(&parts)
    }

    pub fn reassemble(&self) -> DMatrix<T> {
        let gi = self
            .conjugator
            .clone()
            .try_inverse()
            .expect("conjugator is invertible by construction");
        &self.conjugator * self.standard_form() * gi
    }

    pub fn is_all_unitary(&self) -> bool {
        self.blocks.iter().all(|b| b.kind() == BlockKind::Unitary)
    }
}

struct Cluster<T: Real> {
    center: Complex<T>,
    mult: usize,
}

fn cluster_eigenvalues<T: Real>(mut eigs: Vec<Complex<T>>, tol: T) -> Vec<Cluster<T>> {
    eigs.sort_by(|a, b| {
        let ka = (cabs(*a), carg(*a));
        let kb = (cabs(*b), carg(*b));
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut clusters: Vec<(Complex<T>, usize)> = Vec::new();
    for l in eigs {
        let scale = cabs(l).max(T::one());
        match clusters
            .iter_mut()
            .find(|(c, k)| cabs(*c / lit::<T>(*k as f64) - l) <= tol * scale)
        {
            Some((sum, k)) => {
                *sum += l;
                *k += 1;
            }
            None => clusters.push((l, 1)),
        }
    }
    clusters
        .into_iter()
        .map(|(sum, k)| Cluster {
            center: sum / lit::<T>(k as f64),
            mult: k,
        })
        .collect()
}

/// The `k` right singular vectors of smallest singular value, or `None` if the
/// `k`-th smallest singular value exceeds `tol`.
fn null_space_c<T: Real>(a: CMatrix<T>, k: usize, tol: T) -> Option<CMatrix<T>> {
    let dim = a.ncols();
    let svd = a.svd(false, true);
    let vt = svd.v_t?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| {
        svd.singular_values[i]
            .partial_cmp(&svd.singular_values[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if idx.len() < k || !(svd.singular_values[idx[k - 1]] <= tol) {
        return None;
    }
    let mut out = CMatrix::<T>::zeros(dim, k);
    for (c, &i) in idx.iter().take(k).enumerate() {
        for r in 0..dim {
            out[(r, c)] = vt[(i, r)].conj();
        }
    }
    Some(out)
}

fn null_space_r<T: Real>(a: DMatrix<T>, k: usize, tol: T) -> Option<DMatrix<T>> {
    let dim = a.ncols();
    let svd = a.svd(false, true);
    let vt = svd.v_t?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| {
        svd.singular_values[i]
            .partial_cmp(&svd.singular_values[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if idx.len() < k || !(svd.singular_values[idx[k - 1]] <= tol) {
        return None;
    }
    let mut out = DMatrix::<T>::zeros(dim, k);
    for (c, &i) in idx.iter().take(k).enumerate() {
        for r in 0..dim {
            out[(r, c)] = vt[(i, r)];
        }
    }
    Some(out)
}

/// Unit norm, largest-magnitude component positive.
fn canonical_direction<T: Real>(v: &mut DMatrix<T>, col: usize) {
    let mut c = v.column_mut(col);
    let norm = c.norm();
    let mut pivot = T::zero();
    for x in c.iter() {
        if x.abs() > pivot.abs() {
            pivot = *x;
        }
    }
    let s = if pivot < T::zero() { -norm } else { norm };
    c /= s;
}

fn omega_pair<T: Real>(
    omega: &DMatrix<T>,
    u: nalgebra::DVectorView<'_, T>,
    v: nalgebra::DVectorView<'_, T>,
) -> T {
    (u.transpose() * omega * v)[(0, 0)]
}

struct Builder<'a, T: Real> {
    m: &'a DMatrix<T>,
    omega: DMatrix<T>,
    null_tol: T,
    blocks: Vec<CartanBlock<T>>,
    columns: Vec<nalgebra::DVector<T>>,
}

impl<T: Real> Builder<'_, T> {
    fn push(&mut self, block: CartanBlock<T>, cols: Vec<nalgebra::DVector<T>>) {
        self.blocks.push(block);
        self.columns.extend(cols);
    }

    fn shifted_c(&self, l: Complex<T>) -> CMatrix<T> {
        let dim = self.m.nrows();
        complexify(self.m) - CMatrix::<T>::identity(dim, dim) * l
    }

    fn shifted_r(&self, l: T) -> DMatrix<T> {
        let dim = self.m.nrows();
        self.m - DMatrix::<T>::identity(dim, dim) * l
    }

    fn defective(&self, l: Complex<T>, k: usize) -> Error {
        Error::Parabolic(format!(
            "eigenvalue {:.6}{:+.6}i of multiplicity {k} has a deficient eigenspace",
            to_f64(l.re),
            to_f64(l.im)
        ))
    }

    /// Conjugate pair `e^{±iφ}` on the unit circle; `l` has positive imaginary part.
    fn unitary(&mut self, l: Complex<T>, k: usize) -> Result<()> {
        let mut v = null_space_c(self.shifted_c(l), k, self.null_tol).ok_or_else(|| self.defective(l, k))?;
        let omega_c = complexify(&self.omega);
        if k > 1 {
            // Diagonalize the Krein form −(i/2) v^H Ω v on the eigenspace.
            let krein = (v.adjoint() * &omega_c * &v) * cplx(T::zero(), lit::<T>(-0.5));
            let herm = (&krein + krein.adjoint()) * cplx(lit::<T>(0.5), T::zero());
            let eig = SymmetricEigen::new(herm);
            v = &v * eig.eigenvectors;
        }
        let phi = carg(l);
        for c in 0..k {
            let a = v.column(c).map(|z| z.re);
            let b = v.column(c).map(|z| z.im);
            let w = omega_pair(&self.omega, a.as_view(), b.as_view());
            if !(w.abs() > self.null_tol) {
                return Err(self.defective(l, k));
            }
            let s = w.abs().sqrt();
            let (p, q, h) = if w > T::zero() {
                (a / s, b / s, T::two_pi() - phi)
            } else {
                (a / s, -b / s, phi)
            };
            self.push(CartanBlock::Unitary { h }, vec![p, q]);
        }
        Ok(())
    }

    /// Eigenvalue −1 with a `2r`-dimensional eigenspace: `r` blocks `Unitary(π)`.
    fn minus_one(&mut self, k: usize) -> Result<()> {
        let l = cplx(-T::one(), T::zero());
        if !k.is_multiple_of(2) {
            return Err(self.defective(l, k));
        }
        let basis = null_space_r(self.shifted_r(-T::one()), k, self.null_tol)
            .ok_or_else(|| self.defective(l, k))?;
        let mut pool: Vec<nalgebra::DVector<T>> = basis.column_iter().map(|c| c.into_owned()).collect();
        while !pool.is_empty() {
            let e = pool.remove(0);
            let (best, wbest) = pool
                .iter()
                .enumerate()
                .map(|(i, f)| (i, omega_pair(&self.omega, e.as_view(), f.as_view())))
                .fold((usize::MAX, T::zero()), |acc, (i, w)| {
                    if w.abs() > acc.1.abs() {
                        (i, w)
                    } else {
                        acc
                    }
                });
            if best == usize::MAX || !(wbest.abs() > self.null_tol) {
                return Err(self.defective(l, k));
            }
            let f = pool.remove(best) / wbest;
            for x in pool.iter_mut() {
                let wf = omega_pair(&self.omega, x.as_view(), f.as_view());
                let we = omega_pair(&self.omega, x.as_view(), e.as_view());
                *x = &*x - &e * wf + &f * we;
            }
            self.push(CartanBlock::Unitary { h: T::pi() }, vec![e, f]);
        }
        Ok(())
    }

    /// Real pair `{λ, 1/λ}` with `|λ| > 1`.
    fn real_pair(&mut self, l: T, k: usize) -> Result<()> {
        let lc = cplx(l, T::zero());
        let mut u = null_space_r(self.shifted_r(l), k, self.null_tol).ok_or_else(|| self.defective(lc, k))?;
        let w = null_space_r(self.shifted_r(T::one() / l), k, self.null_tol)
            .ok_or_else(|| self.defective(lc.inv(), k))?;
        for c in 0..k {
            canonical_direction(&mut u, c);
        }
        let pairing = u.transpose() * &self.omega * &w;
        let pinv = pairing
            .try_inverse()
            .ok_or_else(|| Error::OracleMismatch("eigenspaces of λ and 1/λ are not ω-paired".into()))?;
        let mut w = w * pinv;
        for c in 0..k {
            let t = (w.column(c).norm() / u.column(c).norm()).sqrt();
            u.column_mut(c).scale_mut(t);
            w.column_mut(c).unscale_mut(t);
        }
        let h = l.abs().ln();
        for c in 0..k {
            let block = if l > T::zero() {
                CartanBlock::Hyperbolic { h }
            } else {
                CartanBlock::NegHyperbolic { h }
            };
            self.push(block, vec![u.column(c).into_owned(), w.column(c).into_owned()]);
        }
        Ok(())
    }

    /// Quadruple `{λ, λ̄, 1/λ, 1/λ̄}` with `|λ| > 1`, `Im λ > 0`.
    fn quadruple(&mut self, l: Complex<T>, k: usize) -> Result<()> {
        if k != 1 {
            return Err(Error::Unsupported(
                "repeated complex quadruples are not decomposed".into(),
            ));
        }
        let mu = l.conj().inv();
        let v = null_space_c(self.shifted_c(l), 1, self.null_tol).ok_or_else(|| self.defective(l, 1))?;
        let w = null_space_c(self.shifted_c(mu), 1, self.null_tol).ok_or_else(|| self.defective(mu, 1))?;
        let p1 = v.column(0).map(|z| z.re);
        let p2 = v.column(0).map(|z| -z.im);
        let q1 = w.column(0).map(|z| z.re);
        let q2 = w.column(0).map(|z| -z.im);
        let p = DMatrix::from_columns(&[p1.clone(), p2.clone()]);
        let q = DMatrix::from_columns(&[q1, q2]);
        let pairing = p.transpose() * &self.omega * &q;
        let pinv = pairing
            .try_inverse()
            .ok_or_else(|| Error::OracleMismatch("quadruple planes are not ω-paired".into()))?;
        let q = q * pinv;
        let t = (q.norm() / p.norm()).sqrt();
        let z = cplx(cabs(l).ln(), carg(l));
        self.push(
            CartanBlock::ComplexQuad { z },
            vec![p1 * t, p2 * t, q.column(0) / t, q.column(1) / t],
        );
        Ok(())
    }
}

/// Splits a regular symplectic matrix into Cartan blocks.
///
/// Hyperbolic and quadruple bases are only fixed up to the centralizer
/// `diag(s, 1/s)` of their block; the expanding and contracting halves are
/// scaled to equal norm.
pub fn cartan_decompose<T: Real>(
    m: &SymplecticMatrix<T>,
    tol: &Tolerances,
) -> Result<CartanDecomposition<T>> {
    let mat = m.matrix();
    let dim = m.dim();
    let scale = max_abs(mat).max(T::one());
    let eigs: Vec<Complex<T>> = mat.complex_eigenvalues().iter().copied().collect();
    let one = cplx(T::one(), T::zero());
    let tol_eig = lit::<T>(tol.eig);
    if let Some(l) = eigs.iter().find(|l| cabs(**l - one) <= tol_eig) {
        return Err(Error::DegenerateFixedPoint(format!(
            "1 is an eigenvalue of df (closest eigenvalue {:.3e}{:+.3e}i)",
            to_f64(l.re),
            to_f64(l.im)
        )));
    }

    let tol_cluster = lit::<T>(1e-6);
    let clusters = cluster_eigenvalues(eigs, tol_cluster);
    if let Some(c) = clusters.iter().find(|c| cabs(c.center - one) <= tol_cluster) {
        return Err(if c.mult > 1 {
            Error::DegenerateFixedPoint("1 is a repeated eigenvalue of df".into())
        } else {
            Error::DegenerateFixedPoint("df has an eigenvalue within clustering distance of 1".into())
        });
    }

    let mut b = Builder {
        m: mat,
        omega: omega_gram::<T>(m.half_dim()),
        null_tol: lit::<T>(1e-6) * scale,
        blocks: Vec::new(),
        columns: Vec::new(),
    };

    for c in &clusters {
        let l = c.center;
        let r = cabs(l);
        let real = l.im.abs() <= tol_cluster * r.max(T::one());
        let on_circle = (r - T::one()).abs() <= tol_cluster;
        if on_circle && real {
            b.minus_one(c.mult)?;
        } else if on_circle {
            if l.im > T::zero() {
                let l = l / r;
                b.unitary(l, c.mult)?;
            }
        } else if real {
            if r > T::one() {
                b.real_pair(l.re, c.mult)?;
            }
        } else if r > T::one() && l.im > T::zero() {
            b.quadruple(l, c.mult)?;
        }
    }

    if b.columns.len() != dim {
        return Err(Error::OracleMismatch(format!(
            "eigenvalue pairing covered {} of {dim} dimensions",
            b.columns.len()
        )));
    }
    let dec = CartanDecomposition {
        blocks: b.blocks,
        conjugator: DMatrix::from_columns(&b.columns),
        source: mat.clone(),
    };
    let err = max_abs(&(dec.reassemble() - mat));
    if !(err <= lit::<T>(tol.decomp) * scale) {
        return Err(Error::OracleMismatch(format!(
            "block reassembly error {:.3e}",
            to_f64(err)
        )));
    }
    Ok(dec)
}

/// Canonical complex structure of a decomposition: block-standard `J`
/// conjugated back by the conjugator.
pub fn standard_j<T: Real>(dec: &CartanDecomposition<T>) -> ComplexStructure<T> {
    let parts: Vec<_> = dec.blocks.iter().map(|b| b.standard_j()).collect();
    let g = &dec.conjugator;
    let gi = g.clone().try_inverse().expect("conjugator is invertible by construction");
    ComplexStructure::new_unchecked(g * block_diag(&parts) * gi)
}

/// The pair `(J, E)` defining `D = −½ J (d/dt + E)` on loops.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec<T: Real> {
    j: ComplexStructure<T>,
    e: CMatrix<T>,
}

impl<T: Real> OperatorSpec<T> {
    /// Validates that `JE` is self-adjoint for the metric of `J` and that
    /// `exp(E)` is a real symplectic matrix.
    pub fn new(j: ComplexStructure<T>, e: CMatrix<T>, tol: &Tolerances) -> Result<Self> {
        let dim = j.matrix().nrows();
        if e.nrows() != dim || e.ncols() != dim {
            return Err(Error::Dimension(format!(
                "generator is {}x{}, complex structure is {dim}x{dim}",
                e.nrows(),
                e.ncols()
            )));
        }
        let spec = Self { j, e };
        let scale = max_abs_c(&spec.e).max(T::one());
        let sa = spec.self_adjoint_defect();
        if !(sa <= lit::<T>(tol.symp) * scale) {
            return Err(Error::InvalidOperator(format!(
                "JE is not self-adjoint (defect {:.3e})",
                to_f64(sa)
            )));
        }
        let ex = spec.e.clone().exp();
        let imag = ex.map(|z| z.im);
        let re = ex.map(|z| z.re);
        let ex_scale = max_abs(&re).max(T::one());
        let decomp = lit::<T>(tol.decomp);
        if !(max_abs(&imag) <= decomp * ex_scale)
            || !(symplectic_defect(&re, dim / 2) <= decomp * ex_scale * ex_scale)
        {
            return Err(Error::InvalidOperator(
                "exp(E) is not a real symplectic matrix".into(),
            ));
        }
        Ok(spec)
    }

    /// Pairs `J` and `E` without any validation.
    pub fn from_parts_unchecked(j: ComplexStructure<T>, e: CMatrix<T>) -> Self {
        Self { j, e }
    }

    pub fn from_real(j: ComplexStructure<T>, e: &DMatrix<T>, tol: &Tolerances) -> Result<Self> {
        Self::new(j, complexify(e), tol)
    }

    /// Generator and structure of a decomposition: `E = g · diag(E_b) · g⁻¹`.
    pub fn from_decomposition(dec: &CartanDecomposition<T>) -> Self {
        let g = complexify(&dec.conjugator);
        let gi = g.clone().try_inverse().expect("conjugator is invertible by construction");
        Self {
            j: standard_j(dec),
            e: g * dec.standard_generator() * gi,
        }
    }

    pub fn half_dim(&self) -> usize {
        self.j.half_dim()
    }

    pub fn complex_structure(&self) -> &ComplexStructure<T> {
        &self.j
    }

    pub fn generator(&self) -> &CMatrix<T> {
        &self.e
    }

    pub fn je(&self) -> CMatrix<T> {
        complexify(self.j.matrix()) * &self.e
    }

    /// `‖JE − (JE)*‖_max`, the adjoint taken for the metric `ω(·, J·)`.
    pub fn self_adjoint_defect(&self) -> T {
        let g = complexify(&self.j.metric());
        let gi = match g.clone().try_inverse() {
            Some(x) => x,
            None => return T::max_value().unwrap_or(T::one()),
        };
        let a = self.je();
        let adj = &gi * a.adjoint() * &g;
        max_abs_c(&(a - adj))
    }
}

/// Logarithm `E` of a regular `M` with `exp E = M`, together with its
/// canonical complex structure.
pub fn log_generator<T: Real>(m: &SymplecticMatrix<T>, tol: &Tolerances) -> Result<OperatorSpec<T>> {
    let dec = cartan_decompose(m, tol)?;
    let spec = OperatorSpec::from_decomposition(&dec);
    let ex = spec.e.clone().exp();
    let scale = max_abs(m.matrix()).max(T::one());
    let err = max_abs_c(&(ex - complexify(m.matrix())));
    if !(err <= lit::<T>(tol.decomp) * scale) {
        return Err(Error::OracleMismatch(format!(
            "exp(log M) differs from M by {:.3e}",
            to_f64(err)
        )));
    }
    Ok(spec)
}
