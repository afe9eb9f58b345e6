//! Torus mapping classes acting on the SU(2) pillowcase: exact fixed-point
//! enumeration, torsion, relative actions and the stationary-phase assemblers.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex;
use num_rational::Rational64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lefschetz::{sqm_partition, FixedPointDatum, PartitionReport};
use crate::scalar::{cexp, cplx, lit, to_f64, wrap, Real, Tolerances};
use crate::spectral::{abs_det, eta, spectral_flow_linear};
use crate::symplectic::{cartan_decompose, log_generator, SymplecticMatrix};

/// `β ∈ SL(2, ℤ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MappingClass {
    beta: [[i64; 2]; 2],
}

impl MappingClass {
    pub fn new(beta: [[i64; 2]; 2]) -> Result<Self> {
        let det = beta[0][0] * beta[1][1] - beta[0][1] * beta[1][0];
        if det != 1 {
            return Err(Error::Config(format!("mapping class has determinant {det}, not 1")));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> [[i64; 2]; 2] {
        self.beta
    }

    pub fn trace(&self) -> i64 {
        self.beta[0][0] + self.beta[1][1]
    }

    /// `det(β − s·I) = 2 − s·tr β` for `s = ±1`.
    pub fn det_shifted(&self, sign: i8) -> i64 {
        2 - sign as i64 * self.trace()
    }

    pub fn inverse(&self) -> Self {
        let [[a, b], [c, d]] = self.beta;
        Self {
            beta: [[d, -b], [-c, a]],
        }
    }

    /// `γ β γ⁻¹`.
    pub fn conjugated(&self, gamma: &MappingClass) -> Self {
        let g = gamma.beta;
        let gi = gamma.inverse().beta;
        Self {
            beta: mul2(&mul2(&g, &self.beta), &gi),
        }
    }

    pub fn to_matrix<T: Real>(&self, sign: i8) -> DMatrix<T> {
        let s = sign as f64;
        DMatrix::from_fn(2, 2, |r, c| lit::<T>(s * self.beta[r][c] as f64))
    }
}

fn mul2(a: &[[i64; 2]; 2], b: &[[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let mut out = [[0; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StabilizerClass {
    Central,
    GenericAbelian,
}

/// A fixed point of `f_β` on the pillowcase, represented on the double cover `ℝ²/ℤ²`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PillowcasePoint {
    pub coords: [Rational64; 2],
    pub weyl_sign: i8,
    pub stabilizer_class: StabilizerClass,
}

impl PillowcasePoint {
    pub fn label(&self) -> String {
        format!("({},{})", self.coords[0], self.coords[1])
    }
}

impl fmt::Display for PillowcasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn frac(x: Rational64) -> Rational64 {
    x - x.floor()
}

fn reduce(x: [Rational64; 2]) -> [Rational64; 2] {
    [frac(x[0]), frac(x[1])]
}

fn apply(m: &[[i64; 2]; 2], x: &[Rational64; 2]) -> [Rational64; 2] {
    [
        x[0] * m[0][0] + x[1] * m[0][1],
        x[0] * m[1][0] + x[1] * m[1][1],
    ]
}

fn shifted(mc: &MappingClass, sign: i8) -> [[i64; 2]; 2] {
    let s = sign as i64;
    let b = mc.beta;
    [[b[0][0] - s, b[0][1]], [b[1][0], b[1][1] - s]]
}

/// Diagonal form `U A V = diag(d₁, d₂)` with unimodular `U`, `V`; returns `(V, d₁, d₂)`.
fn diagonalize(a: [[i64; 2]; 2]) -> ([[i64; 2]; 2], i64, i64) {
    let mut m = a;
    let mut v = [[1i64, 0], [0, 1]];
    loop {
        let mut best: Option<(usize, usize)> = None;
        for r in 0..2 {
            for c in 0..2 {
                if m[r][c] != 0 && best.is_none_or(|(br, bc)| m[r][c].abs() < m[br][bc].abs()) {
                    best = Some((r, c));
                }
            }
        }
        let Some((r, c)) = best else { break };
        if r == 1 {
            m.swap(0, 1);
        }
        if c == 1 {
            for row in m.iter_mut() {
                row.swap(0, 1);
            }
            for row in v.iter_mut() {
                row.swap(0, 1);
            }
        }
        let p = m[0][0];
        let q = m[1][0] / p;
        let top = m[0];
        for (x, t) in m[1].iter_mut().zip(top) {
            *x -= q * t;
        }
        let q = m[0][1] / p;
        for row in m.iter_mut() {
            row[1] -= q * row[0];
        }
        for row in v.iter_mut() {
            row[1] -= q * row[0];
        }
        if m[1][0] == 0 && m[0][1] == 0 {
            break;
        }
    }
    (v, m[0][0], m[1][1])
}

/// All `x ∈ [0,1)²` with `(β − s·I) x ∈ ℤ²`, via a diagonal form of `β − s·I`.
/// Sorted lexicographically.
pub fn torus_fixed_points(mc: &MappingClass, sign: i8) -> Result<Vec<[Rational64; 2]>> {
    let a = shifted(mc, sign);
    if mc.det_shifted(sign) == 0 {
        return Err(Error::NonIsolated(format!(
            "β − ({sign})I is singular: fixed points of sign {sign} form a continuum"
        )));
    }
    let (v, d1, d2) = diagonalize(a);
    let (d1, d2) = (d1.abs(), d2.abs());
    let mut out = Vec::with_capacity((d1 * d2) as usize);
    for i in 0..d1 {
        for j in 0..d2 {
            let y = [Rational64::new(i, d1), Rational64::new(j, d2)];
            out.push(reduce(apply(&v, &y)));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Exhaustive search over `((1/d)ℤ / ℤ)²`, `d = |det(β − s·I)|`.
pub fn brute_force_torus_fixed_points(mc: &MappingClass, sign: i8) -> Result<Vec<[Rational64; 2]>> {
    let d = mc.det_shifted(sign).abs();
    if d == 0 {
        return Err(Error::NonIsolated(format!("β − ({sign})I is singular")));
    }
    let a = shifted(mc, sign);
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let x = [Rational64::new(i, d), Rational64::new(j, d)];
            let y = apply(&a, &x);
            if y[0].is_integer() && y[1].is_integer() {
                out.push(x);
            }
        }
    }
    Ok(out)
}

fn is_central(x: &[Rational64; 2]) -> bool {
    let half = Rational64::new(1, 2);
    x.iter().all(|c| c.is_zero() || *c == half)
}

fn negate(x: &[Rational64; 2]) -> [Rational64; 2] {
    reduce([-x[0], -x[1]])
}

/// Fixed points of `f_β` on the pillowcase, deduplicated under `x ↦ −x`, sorted by coords.
pub fn enumerate_pillowcase_fixed_points(mc: &MappingClass) -> Result<Vec<PillowcasePoint>> {
    if mc.det_shifted(1) == 0 || mc.det_shifted(-1) == 0 {
        return Err(Error::NonIsolated(format!(
            "β with trace {} has eigenvalue ±1",
            mc.trace()
        )));
    }
    let mut found: BTreeMap<[Rational64; 2], PillowcasePoint> = BTreeMap::new();
    for sign in [1i8, -1] {
        let sols = torus_fixed_points(mc, sign)?;
        let expect = mc.det_shifted(sign).unsigned_abs() as usize;
        let brute = brute_force_torus_fixed_points(mc, sign)?;
        if sols.len() != expect || sols != brute {
            return Err(Error::OracleMismatch(format!(
                "sign {sign}: {} solutions from the diagonal form, {} by brute force, expected {expect}",
                sols.len(),
                brute.len()
            )));
        }
        for x in sols {
            let canon = x.min(negate(&x));
            found.entry(canon).or_insert(PillowcasePoint {
                coords: canon,
                weyl_sign: sign,
                stabilizer_class: if is_central(&canon) {
                    StabilizerClass::Central
                } else {
                    StabilizerClass::GenericAbelian
                },
            });
        }
    }
    Ok(found.into_values().collect())
}

/// `df = weyl_sign · β` on the tangent plane at a generic point.
pub fn h1_action_matrix<T: Real>(mc: &MappingClass, p: &PillowcasePoint) -> Result<DMatrix<T>> {
    if p.stabilizer_class == StabilizerClass::Central {
        return Err(Error::CentralPoint(format!(
            "{} is a central point; its tangent model is not a plane",
            p.label()
        )));
    }
    Ok(mc.to_matrix(p.weyl_sign))
}

/// `|det(df − I)|^{−1/2}`.
pub fn torsion_sqrt_contribution<T: Real>(df: &DMatrix<T>, tol: &Tolerances) -> Result<T> {
    if !df.is_square() {
        return Err(Error::Dimension("df must be square".into()));
    }
    let n = df.nrows();
    let d = (df - DMatrix::<T>::identity(n, n)).determinant().abs();
    if d <= lit::<T>(tol.eig) {
        return Err(Error::DegenerateFixedPoint(format!(
            "det(df − I) = {:.3e}",
            to_f64(d)
        )));
    }
    Ok(T::one() / d.sqrt())
}

fn rat<T: Real>(x: Rational64) -> T {
    lit::<T>(*x.numer() as f64) / lit::<T>(*x.denom() as f64)
}

type Reparam<T> = fn(T) -> T;

/// A strip `u(τ, t) = τ(x̃ + φ(t)·n)` from the constant loop at the corner to
/// the twisted loop through the lift `x̃`, `n = sβx̃ − x̃`. Since `u` is linear in
/// `τ`, `u(τ, 1) = sβ·u(τ, 0)` holds for every `τ`.
struct Strip {
    lift: [Rational64; 2],
    jump: [i64; 2],
    quadratic: bool,
}

impl Strip {
    fn new(mc: &MappingClass, p: &PillowcasePoint, offset: [i64; 2], quadratic: bool) -> Result<Self> {
        let lift = [
            p.coords[0] + Rational64::from_integer(offset[0]),
            p.coords[1] + Rational64::from_integer(offset[1]),
        ];
        let s = Rational64::from_integer(p.weyl_sign as i64);
        let image = apply(&mc.beta, &lift);
        let n = [image[0] * s - lift[0], image[1] * s - lift[1]];
        if !n[0].is_integer() || !n[1].is_integer() {
            return Err(Error::Config(format!(
                "{} is not a fixed point of β with sign {}",
                p.label(),
                p.weyl_sign
            )));
        }
        Ok(Self {
            lift,
            jump: [n[0].to_integer(), n[1].to_integer()],
            quadratic,
        })
    }

    /// `−c ∫∫ det[∂_τ u, ∂_t u] dτ dt` by tensor Gauss–Legendre quadrature;
    /// two nodes are exact since the integrand has degree ≤ 1 in each variable.
    fn action<T: Real>(&self, c: T) -> T {
        let g = T::one() / lit::<T>(3.0).sqrt();
        let half = lit::<T>(0.5);
        let nodes = [half * (T::one() - g), half * (T::one() + g)];
        let x = [rat::<T>(self.lift[0]), rat::<T>(self.lift[1])];
        let n = [lit::<T>(self.jump[0] as f64), lit::<T>(self.jump[1] as f64)];
        let (phi, dphi): (Reparam<T>, Reparam<T>) = if self.quadratic {
            (|t| t * t, |t| t + t)
        } else {
            (|t| t, |_| T::one())
        };
        let mut sum = T::zero();
        for &tau in &nodes {
            for &t in &nodes {
                let du_dtau = [x[0] + phi(t) * n[0], x[1] + phi(t) * n[1]];
                let du_dt = [tau * dphi(t) * n[0], tau * dphi(t) * n[1]];
                let det = du_dtau[0] * du_dt[1] - du_dtau[1] * du_dt[0];
                sum += half * half * det;
            }
        }
        -c * sum
    }
}

/// Action of the twisted loop at `p`, measured from the corner constant loop, by
/// two independent strips. Returns the value from the first.
fn corner_action<T: Real>(mc: &MappingClass, p: &PillowcasePoint, c: T) -> Result<(T, T)> {
    let a = Strip::new(mc, p, [0, 0], false)?.action(c);
    let b = Strip::new(mc, p, [1, -1], true)?.action(c);
    Ok((a, b))
}

fn circular_distance<T: Real>(a: T, b: T) -> T {
    let d = wrap(a - b, T::two_pi());
    d.min(T::two_pi() - d)
}

/// `S(x) − S(x₀)` reduced to `[0, 2π)`, with `ω = c·dx∧dy` on the cover.
///
/// Both actions are measured from the constant loop at the corner `(0,0)`,
/// which every `±β` fixes; this is also how points with different Weyl signs
/// are compared.
pub fn action_difference<T: Real>(
    mc: &MappingClass,
    x0: &PillowcasePoint,
    x: &PillowcasePoint,
    omega_scale: T,
) -> Result<T> {
    if !(omega_scale > T::zero()) {
        return Err(Error::Config("omega_scale must be positive".into()));
    }
    let (a0, b0) = corner_action(mc, x0, omega_scale)?;
    let (a1, b1) = corner_action(mc, x, omega_scale)?;
    let first = wrap(a1 - a0, T::two_pi());
    let second = wrap(b1 - b0, T::two_pi());
    if circular_distance(first, second) > lit::<T>(1e-9) {
        return Err(Error::Config(format!(
            "strip constructions disagree mod 2π ({:.12} vs {:.12}); omega_scale should be a multiple of 4π",
            to_f64(first),
            to_f64(second)
        )));
    }
    Ok(first)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    SU2,
    SUn(u32),
}

impl Group {
    pub fn dual_coxeter(&self) -> u64 {
        match self {
            Group::SU2 => 2,
            Group::SUn(n) => *n as u64,
        }
    }
}

/// `k + h`.
pub fn level_shift(k: u64, group: Group) -> Result<u64> {
    if k == 0 {
        return Err(Error::Config("level must be at least 1".into()));
    }
    if let Group::SUn(n) = group {
        if n < 2 {
            return Err(Error::Config(format!("SU({n}) is not a valid gauge group")));
        }
    }
    Ok(k + group.dual_coxeter())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatConnectionDatum<T: Real> {
    pub label: String,
    /// Chern–Simons invariant mod 1.
    pub cs_value: T,
    pub torsion_sqrt: T,
    pub dim_h0: u32,
    pub dim_h1: u32,
    pub spectral_flow: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WittenSum<T: Real> {
    pub value: Complex<T>,
    /// Per-connection terms, including the global prefactor, in input order.
    pub terms: Vec<(String, Complex<T>)>,
}

fn unit_phase<T: Real>(turns: T) -> Complex<T> {
    cexp(cplx(T::zero(), T::two_pi() * turns))
}

/// `½ e^{−3πi(1+b¹)/4} Σ_A τ^{1/2} e^{−2πi(I_A/4 + (h⁰+h¹)/8)} e^{2πi(k+h)CS(A)} (k+h)^{(h¹−h⁰)/2}`.
///
/// Integer phases are reduced exactly before exponentiation, so `I_A → I_A + 4`
/// and `CS → CS + 1` leave every term bit-identical.
pub fn witten_stationary_phase<T: Real>(
    conns: &[FlatConnectionDatum<T>],
    k: u64,
    h: u64,
    b1: u32,
) -> Result<WittenSum<T>> {
    if conns.is_empty() {
        return Err(Error::Config("at least one flat connection is required".into()));
    }
    let r = k + h;
    let rt = lit::<T>(r as f64);
    let eighth = |e: i64| lit::<T>(e.rem_euclid(8) as f64) / lit::<T>(8.0);
    let prefactor = unit_phase::<T>(-eighth(3 * (1 + b1 as i64))) * cplx(lit::<T>(0.5), T::zero());
    let mut value = Complex::new(T::zero(), T::zero());
    let mut terms = Vec::with_capacity(conns.len());
    for a in conns {
        let cs = wrap(a.cs_value, T::one());
        let level_turns = wrap(rt * cs, T::one());
        // I/4 + (h⁰+h¹)/8 = (2I + h⁰ + h¹)/8.
        let phase_turns = eighth(2 * a.spectral_flow + a.dim_h0 as i64 + a.dim_h1 as i64);
        let power = rt.powf(lit::<T>((a.dim_h1 as f64 - a.dim_h0 as f64) / 2.0));
        let term = prefactor
            * unit_phase::<T>(-phase_turns)
            * unit_phase::<T>(level_turns)
            * cplx(a.torsion_sqrt * power, T::zero());
        value += term;
        terms.push((a.label.clone(), term));
    }
    Ok(WittenSum { value, terms })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingTorusOptions<T: Real> {
    pub omega_scale: T,
    pub m_range: u64,
    pub steps: usize,
    pub mu_power: i64,
    pub tol: Tolerances,
}

impl<T: Real> Default for MappingTorusOptions<T> {
    fn default() -> Self {
        Self {
            omega_scale: lit::<T>(4.0) * T::pi(),
            m_range: 200,
            steps: 400,
            mu_power: 0,
            tol: Tolerances::default(),
        }
    }
}

/// Per-point data of a mapping-torus report beyond the SQM datum.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPointInfo<T: Real> {
    pub point: PillowcasePoint,
    pub torsion_sqrt: T,
    /// `S(x) − S(x₀)` at unit level, in `[0, 2π)`.
    pub action_difference: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingTorusReport<T: Real> {
    pub beta: [[i64; 2]; 2],
    pub k: u64,
    pub shifted_level: u64,
    /// `None` when there are no generic fixed points.
    pub partition: Option<PartitionReport<T>>,
    pub points: Vec<FixedPointDatum<T>>,
    pub info: Vec<TorusPointInfo<T>>,
    pub skipped_central: Vec<PillowcasePoint>,
    pub diagnostics: Vec<String>,
}

impl<T: Real> MappingTorusReport<T> {
    pub fn value(&self) -> Complex<T> {
        self.partition
            .as_ref()
            .map(|p| p.value)
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }
}

/// SQM stationary-phase sum of `f_β` over the generic pillowcase fixed points
/// at the shifted level `k + 2`.
pub fn build_mapping_torus_report<T: Real>(
    mc: &MappingClass,
    k: u64,
    opts: &MappingTorusOptions<T>,
) -> Result<MappingTorusReport<T>> {
    let shifted_level = level_shift(k, Group::SU2)?;
    let all = enumerate_pillowcase_fixed_points(mc)?;
    let (generic, central): (Vec<_>, Vec<_>) = all
        .into_iter()
        .partition(|p| p.stabilizer_class == StabilizerClass::GenericAbelian);
    let mut diagnostics: Vec<String> = central
        .iter()
        .map(|p| format!("skipped central point {}", p.label()))
        .collect();

    let Some(reference) = generic.first().cloned() else {
        diagnostics.push("no generic fixed points; the semiclassical sum is empty".into());
        return Ok(MappingTorusReport {
            beta: mc.beta,
            k,
            shifted_level,
            partition: None,
            points: Vec::new(),
            info: Vec::new(),
            skipped_central: central,
            diagnostics,
        });
    };

    let tol = &opts.tol;
    let symp_tol = lit::<T>(tol.symp);
    let df_ref = SymplecticMatrix::new(h1_action_matrix::<T>(mc, &reference)?, symp_tol)?;
    let spec_ref = log_generator(&df_ref, tol)?;
    let kk = lit::<T>(shifted_level as f64);
    let (ref_action, _) = corner_action(mc, &reference, opts.omega_scale)?;

    let mut flows: BTreeMap<i8, i64> = BTreeMap::new();
    flows.insert(reference.weyl_sign, 0);
    let mut points = Vec::with_capacity(generic.len());
    let mut info = Vec::with_capacity(generic.len());
    for p in &generic {
        let m = h1_action_matrix::<T>(mc, p)?;
        let torsion = torsion_sqrt_contribution(&m, tol)?;
        let df = SymplecticMatrix::new(m, symp_tol)?;
        let dec = cartan_decompose(&df, tol)?;
        let flow = match flows.get(&p.weyl_sign) {
            Some(f) => *f,
            None => {
                let spec = log_generator(&df, tol)?;
                let r = spectral_flow_linear(&spec_ref, &spec, opts.steps, opts.m_range, tol)?;
                if r.refinements > 0 {
                    diagnostics.push(format!(
                        "spectral flow to sign {} needed {} refinements",
                        p.weyl_sign, r.refinements
                    ));
                }
                flows.insert(p.weyl_sign, r.flow);
                r.flow
            }
        };
        let delta = action_difference(mc, &reference, p, opts.omega_scale)?;
        let is_ref = p == &reference;
        points.push(FixedPointDatum {
            label: p.label(),
            df,
            lift_trace: Complex::new(T::one(), T::zero()),
            action: if is_ref { ref_action } else { wrap(kk * delta, T::two_pi()) },
            eta: eta(&dec)?,
            abs_det: abs_det(&dec)?,
            flow_index: flow,
            kernel_dim: 0,
        });
        info.push(TorusPointInfo {
            point: p.clone(),
            torsion_sqrt: torsion,
            action_difference: delta,
        });
    }

    let mut partition = sqm_partition(&points, &reference.label(), shifted_level as i64, opts.mu_power)?;
    partition.k = k as i64;
    partition
        .convention_flags
        .insert("shifted_level".into(), shifted_level.to_string());
    partition
        .convention_flags
        .insert("omega_scale".into(), format!("{}", to_f64(opts.omega_scale)));
    partition
        .convention_flags
        .insert("action_origin".into(), "corner constant loop".into());
    Ok(MappingTorusReport {
        beta: mc.beta,
        k,
        shifted_level,
        partition: Some(partition),
        points,
        info,
        skipped_central: central,
        diagnostics,
    })
}

/// All `β ∈ SL(2, ℤ)` with entries in `[−bound, bound]` and `|tr β| > 2`.
pub fn hyperbolic_classes(bound: i64) -> Vec<MappingClass> {
    let mut out = Vec::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            for c in -bound..=bound {
                for d in -bound..=bound {
                    if a * d - b * c == 1 && (a + d).abs() > 2 {
                        out.push(MappingClass { beta: [[a, b], [c, d]] });
                    }
                }
            }
        }
    }
    out
}

/// `true` when `x` is fixed by `sβ` modulo `ℤ²`.
pub fn is_fixed(mc: &MappingClass, x: &[Rational64; 2], sign: i8) -> bool {
    let y = apply(&mc.beta, x);
    let s = Rational64::from_integer(sign as i64);
    let d = [y[0] * s - x[0], y[1] * s - x[1]];
    d[0].is_integer() && d[1].is_integer()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mc(b: [[i64; 2]; 2]) -> MappingClass {
        MappingClass::new(b).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(matches!(MappingClass::new([[2, 0], [0, 1]]), Err(Error::Config(_))));
    }

    #[test]
    fn cat_map_fixed_points() {
        let m = mc([[2, 1], [1, 1]]);
        assert_eq!(torus_fixed_points(&m, 1).unwrap(), vec![[r(0, 1), r(0, 1)]]);
        assert_eq!(torus_fixed_points(&m, -1).unwrap().len(), 5);
        let pts = enumerate_pillowcase_fixed_points(&m).unwrap();
        // Origin, plus the four nonzero (−)-solutions paired up by x ↦ −x.
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0].stabilizer_class, StabilizerClass::Central);
        assert!(pts[1..].iter().all(|p| p.stabilizer_class == StabilizerClass::GenericAbelian));
        for p in &pts {
            assert!(is_fixed(&m, &p.coords, p.weyl_sign));
        }
    }

    #[test]
    fn quarter_turn_has_only_central_points() {
        let m = mc([[0, -1], [1, 0]]);
        let pts = enumerate_pillowcase_fixed_points(&m).unwrap();
        assert!(pts.iter().all(|p| p.stabilizer_class == StabilizerClass::Central));
        assert_eq!(torus_fixed_points(&m, 1).unwrap().len(), 2);
        assert_eq!(torus_fixed_points(&m, -1).unwrap().len(), 2);
    }

    #[test]
    fn identity_is_not_isolated() {
        let m = mc([[1, 0], [0, 1]]);
        assert!(matches!(enumerate_pillowcase_fixed_points(&m), Err(Error::NonIsolated(_))));
        let p = mc([[1, 1], [0, 1]]);
        assert!(matches!(enumerate_pillowcase_fixed_points(&p), Err(Error::NonIsolated(_))));
    }

    #[test]
    fn torsion_values() {
        let tol = Tolerances::default();
        let m = -DMatrix::<f64>::identity(2, 2);
        assert!((torsion_sqrt_contribution(&m, &tol).unwrap() - 0.5).abs() < 1e-15);
        let h = 1.1f64;
        let rot = DMatrix::from_row_slice(2, 2, &[h.cos(), -h.sin(), h.sin(), h.cos()]);
        let t = torsion_sqrt_contribution(&rot, &tol).unwrap();
        assert!((t - 1.0 / (2.0 * (h / 2.0).sin().abs())).abs() < 1e-12);
        let e = std::f64::consts::E;
        let hy = DMatrix::from_row_slice(2, 2, &[e, 0.0, 0.0, 1.0 / e]);
        let t = torsion_sqrt_contribution(&hy, &tol).unwrap();
        assert!((t - 1.0 / (0.5f64.exp() - (-0.5f64).exp())).abs() < 1e-12);
        assert!(torsion_sqrt_contribution(&DMatrix::<f64>::identity(2, 2), &tol).is_err());
    }

    #[test]
    fn action_basics() {
        let m = mc([[2, 1], [1, 1]]);
        let pts = enumerate_pillowcase_fixed_points(&m).unwrap();
        let c = 4.0 * PI;
        for p in &pts {
            assert_eq!(action_difference(&m, p, p, c).unwrap(), 0.0);
        }
        let a = action_difference(&m, &pts[1], &pts[2], c).unwrap();
        let a3 = action_difference(&m, &pts[1], &pts[2], 3.0 * c).unwrap();
        assert!(circular_distance(a3, wrap(3.0 * a, 2.0 * PI)) < 1e-9);
        let bogus = PillowcasePoint {
            coords: [r(1, 3), r(0, 1)],
            weyl_sign: 1,
            stabilizer_class: StabilizerClass::GenericAbelian,
        };
        assert!(matches!(action_difference(&m, &pts[1], &bogus, c), Err(Error::Config(_))));
    }

    #[test]
    fn level_shift_table() {
        assert_eq!(level_shift(1, Group::SU2).unwrap(), 3);
        assert_eq!(level_shift(5, Group::SUn(3)).unwrap(), 8);
        assert!(level_shift(0, Group::SU2).is_err());
    }

    #[test]
    fn witten_single_connection() {
        let c = FlatConnectionDatum {
            label: "A".into(),
            cs_value: 0.0,
            torsion_sqrt: 1.0,
            dim_h0: 0,
            dim_h1: 0,
            spectral_flow: 0,
        };
        let z = witten_stationary_phase(&[c], 3, 2, 0).unwrap();
        let want = Complex::new(0.0, -3.0 * PI / 4.0).exp() * 0.5;
        assert!((z.value - want).norm() < 1e-12);
    }

    #[test]
    fn report_with_generic_points() {
        let m = mc([[2, 1], [1, 1]]);
        let rep = build_mapping_torus_report::<f64>(&m, 3, &MappingTorusOptions {
            m_range: 20,
            steps: 100,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(rep.points.len(), 2);
        assert_eq!(rep.skipped_central.len(), 1);
        let part = rep.partition.as_ref().unwrap();
        let sum = part.per_point.iter().fold(Complex::new(0.0, 0.0), |a, (_, c)| a + c);
        assert!((sum - part.value).norm() < 1e-12);
    }
}
