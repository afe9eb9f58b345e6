//! Fixed-point contributions and their assembly into partition functions.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cabs, cexp, complexify, cplx, lit, to_f64, CMatrix, Real, Tolerances};
use crate::spectral::{abs_det, eta};
use crate::symplectic::{cartan_decompose, standard_j, CartanDecomposition, SymplecticMatrix};

/// Everything one fixed point contributes.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointDatum<T: Real> {
    pub label: String,
    pub df: SymplecticMatrix<T>,
    /// Trace of the lift on the line-bundle fiber, already at the working level.
    pub lift_trace: Complex<T>,
    /// Action phase (mod 2π) entering `e^{i·action}`.
    pub action: T,
    pub eta: T,
    pub abs_det: T,
    pub flow_index: i64,
    pub kernel_dim: usize,
}

impl<T: Real> FixedPointDatum<T> {
    /// Fills `eta` and `abs_det` from the Cartan decomposition of `df`.
    pub fn from_df(
        label: impl Into<String>,
        df: SymplecticMatrix<T>,
        lift_trace: Complex<T>,
        action: T,
        flow_index: i64,
        tol: &Tolerances,
    ) -> Result<Self> {
        let dec = cartan_decompose(&df, tol)?;
        Ok(Self {
            label: label.into(),
            eta: eta(&dec)?,
            abs_det: abs_det(&dec)?,
            df,
            lift_trace,
            action,
            flow_index,
            kernel_dim: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_dim != 0 {
            return Err(Error::Kernel(format!(
                "fixed point {} has a {}-dimensional kernel",
                self.label, self.kernel_dim
            )));
        }
        if !(self.abs_det > T::zero()) {
            return Err(Error::DegenerateFixedPoint(format!(
                "fixed point {} has |det D| = {}",
                self.label,
                to_f64(self.abs_det)
            )));
        }
        if !(cabs(self.lift_trace) > T::zero()) {
            return Err(Error::Config(format!("fixed point {} has zero lift trace", self.label)));
        }
        Ok(())
    }
}

/// `det_ℂ(A)` of a real matrix commuting with `J`, computed on the `+i`
/// eigenspace of `J` (the holomorphic tangent space).
fn complex_determinant<T: Real>(a: &DMatrix<T>, j: &DMatrix<T>) -> Result<Complex<T>> {
    let dim = j.nrows();
    let n = dim / 2;
    // Columns v − iJv span the +i eigenspace as v runs over ℝ²ⁿ.
    let jc = complexify(j);
    let id = CMatrix::<T>::identity(dim, dim);
    let proj = &id - &jc * cplx(T::zero(), T::one());
    let svd = proj.svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::OracleMismatch("holomorphic projection failed".into()))?;
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.sort_by(|&x, &y| {
        svd.singular_values[y]
            .partial_cmp(&svd.singular_values[x])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let basis = CMatrix::<T>::from_fn(dim, n, |r, c| u[(r, idx[c])]);
    let image = complexify(a) * &basis;
    // basis is orthonormal, so the restriction is basisᴴ · A · basis.
    let restricted = basis.adjoint() * image;
    Ok(restricted.determinant())
}

fn weight_by_eta<T: Real>(dec: &CartanDecomposition<T>, lift: Complex<T>) -> Result<Complex<T>> {
    let e = eta(dec)?;
    let d = abs_det(dec)?;
    let phase = cexp(cplx(T::zero(), T::pi() * e / lit::<T>(4.0)));
    Ok(lift * phase / cplx(d.sqrt(), T::zero()))
}

/// Contribution `Tr f̃ / det_ℂ(1 − df)` for all-unitary `df`, and
/// `Tr f̃ · e^{iπη/4} / √|det D|` otherwise.
pub fn fixed_point_weight<T: Real>(
    df: &SymplecticMatrix<T>,
    lift_trace: Complex<T>,
    tol: &Tolerances,
) -> Result<Complex<T>> {
    let dec = cartan_decompose(df, tol)?;
    if dec.is_all_unitary() {
        let j = standard_j(&dec);
        let dim = df.dim();
        let one_minus = DMatrix::<T>::identity(dim, dim) - df.matrix();
        let det = complex_determinant(&one_minus, j.matrix())?;
        if !(cabs(det) > T::zero()) {
            return Err(Error::DegenerateFixedPoint("det_ℂ(1 − df) vanishes".into()));
        }
        Ok(lift_trace / det)
    } else {
        weight_by_eta(&dec, lift_trace)
    }
}

/// Always the `η`/`|det D|` route, also on unitary input.
pub fn fixed_point_weight_eta_route<T: Real>(
    df: &SymplecticMatrix<T>,
    lift_trace: Complex<T>,
    tol: &Tolerances,
) -> Result<Complex<T>> {
    weight_by_eta(&cartan_decompose(df, tol)?, lift_trace)
}

/// Right-hand side of the holomorphic Lefschetz formula.
pub fn lefschetz_sum<T: Real>(points: &[FixedPointDatum<T>], tol: &Tolerances) -> Result<Complex<T>> {
    points.iter().try_fold(Complex::new(T::zero(), T::zero()), |acc, p| {
        p.validate()?;
        Ok(acc + fixed_point_weight(&p.df, p.lift_trace, tol)?)
    })
}

/// Small models with computable cohomology.
#[derive(Debug, Clone, PartialEq)]
pub enum ToyModelSpec<T: Real> {
    /// `CP¹` with `O(k)`, rotated by `z ↦ e^{iθ} z`.
    ProjectiveLine { level: u32, theta: T },
    /// `T² = ℝ²/ℤ²` with the level-`k` prequantum bundle, mapped by `x ↦ Ax + t`.
    FlatTorus {
        level: u32,
        matrix: [[i64; 2]; 2],
        translation: [T; 2],
    },
}

fn check_rotation<T: Real>(theta: T) -> Result<()> {
    let r = crate::scalar::wrap(theta, T::two_pi());
    let eps = lit::<T>(1e-12);
    if r <= eps || T::two_pi() - r <= eps {
        return Err(Error::DegenerateFixedPoint(
            "rotation angle in 2πℤ fixes every point".into(),
        ));
    }
    Ok(())
}

/// `Σ (−1)^i Tr f̃ |H^i`, computed from a basis of sections.
pub fn cohomology_trace_oracle<T: Real>(spec: &ToyModelSpec<T>) -> Result<Complex<T>> {
    match spec {
        ToyModelSpec::ProjectiveLine { level, theta } => {
            check_rotation(*theta)?;
            // Sections of O(k) are the monomials z^j, j = 0..=k, in the chart at 0.
            // The lift acts trivially on the fiber over 0, so z^j has weight e^{ijθ}.
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..=*level {
                acc += cexp(cplx(T::zero(), lit::<T>(j as f64) * *theta));
            }
            Ok(acc)
        }
        ToyModelSpec::FlatTorus {
            level,
            matrix,
            translation,
        } => {
            if *matrix != [[1, 0], [0, 1]] {
                return Err(Error::Unsupported(
                    "flat torus oracle only handles translations".into(),
                ));
            }
            let k = *level as i64;
            if k == 0 {
                return Err(Error::Unsupported(
                    "level 0 on the torus has nonvanishing H¹".into(),
                ));
            }
            let steps: Vec<i64> = translation
                .iter()
                .map(|t| {
                    let x = *t * lit::<T>(k as f64);
                    let r = x.round();
                    if (x - r).abs() > lit::<T>(1e-12) {
                        Err(Error::Unsupported(
                            "translation does not preserve the line bundle".into(),
                        ))
                    } else {
                        Ok(r.to_i64().unwrap_or(0))
                    }
                })
                .collect::<Result<_>>()?;
            let (a, b) = (steps[0].rem_euclid(k), steps[1].rem_euclid(k));
            if a == 0 && b == 0 {
                return Err(Error::NonIsolated(
                    "integral translation fixes every point".into(),
                ));
            }
            // H⁰ has a basis of k theta functions; translations by (1/k)ℤ² act
            // through shift and clock operators.
            let ku = k as usize;
            let omega = |e: i64| {
                cexp(cplx(
                    T::zero(),
                    T::two_pi() * lit::<T>(e.rem_euclid(k) as f64) / lit::<T>(k as f64),
                ))
            };
            let shift = CMatrix::<T>::from_fn(ku, ku, |r, c| {
                if r as i64 == (c as i64 + a).rem_euclid(k) {
                    cplx(T::one(), T::zero())
                } else {
                    cplx(T::zero(), T::zero())
                }
            });
            let clock = CMatrix::<T>::from_fn(ku, ku, |r, c| {
                if r == c {
                    omega(b * r as i64)
                } else {
                    cplx(T::zero(), T::zero())
                }
            });
            Ok((shift * clock).trace())
        }
    }
}

/// The two fixed points `0` and `∞` of the rotation on `CP¹` at level `k`.
///
/// The lift is normalized to act trivially over `0`; over `∞` it then acts by `e^{ikθ}`.
pub fn projective_line_fixed_points<T: Real>(
    level: u32,
    theta: T,
    tol: &Tolerances,
) -> Result<Vec<FixedPointDatum<T>>> {
    check_rotation(theta)?;
    let rot = |a: T| {
        SymplecticMatrix::from_row_slice(2, &[a.cos(), -a.sin(), a.sin(), a.cos()], lit::<T>(tol.symp))
    };
    let k = lit::<T>(level as f64);
    Ok(vec![
        FixedPointDatum::from_df("0", rot(theta)?, cplx(T::one(), T::zero()), T::zero(), 0, tol)?,
        FixedPointDatum::from_df(
            "inf",
            rot(-theta)?,
            cexp(cplx(T::zero(), k * theta)),
            T::zero(),
            0,
            tol,
        )?,
    ])
}

/// Assembled partition value and its per-point breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionReport<T: Real> {
    pub value: Complex<T>,
    /// Sorted by label; each entry already includes the global prefactor.
    pub per_point: Vec<(String, Complex<T>)>,
    pub k: i64,
    pub convention_flags: BTreeMap<String, String>,
}

fn i_power<T: Real>(p: i64) -> Complex<T> {
    match p.rem_euclid(4) {
        0 => cplx(T::one(), T::zero()),
        1 => cplx(T::zero(), T::one()),
        2 => cplx(-T::one(), T::zero()),
        _ => cplx(T::zero(), -T::one()),
    }
}

/// `Z = i^μ e^{ik·S(x₀)} Σ_x exp{i·action(x) + (iπ/2)·flow(x)} / √|det D_x|`.
///
/// The reference point's `action` field holds the absolute `S(x₀)`; in its own
/// summand it contributes with action 0 and flow 0.
pub fn sqm_partition<T: Real>(
    points: &[FixedPointDatum<T>],
    reference: &str,
    k: i64,
    mu_power: i64,
) -> Result<PartitionReport<T>> {
    let refp = points
        .iter()
        .find(|p| p.label == reference)
        .ok_or_else(|| Error::Config(format!("reference point {reference:?} is not in the list")))?;
    for p in points {
        if p.kernel_dim != 0 {
            return Err(Error::Kernel(format!(
                "fixed point {} has a {}-dimensional kernel",
                p.label, p.kernel_dim
            )));
        }
        if !(p.abs_det > T::zero()) {
            return Err(Error::DegenerateFixedPoint(format!("fixed point {} has |det D| = 0", p.label)));
        }
    }
    let prefactor = i_power::<T>(mu_power) * cexp(cplx(T::zero(), lit::<T>(k as f64) * refp.action));
    let mut per_point: Vec<(String, Complex<T>)> = points
        .iter()
        .map(|p| {
            let (action, flow) = if p.label == reference {
                (T::zero(), 0)
            } else {
                (p.action, p.flow_index)
            };
            let term = cexp(cplx(T::zero(), action)) * i_power::<T>(flow) / cplx(p.abs_det.sqrt(), T::zero());
            (p.label.clone(), prefactor * term)
        })
        .collect();
    per_point.sort_by(|a, b| a.0.cmp(&b.0));
    let value = per_point
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, (_, c)| acc + c);
    let mut convention_flags = BTreeMap::new();
    convention_flags.insert("mu_power".to_string(), mu_power.to_string());
    convention_flags.insert("reference".to_string(), reference.to_string());
    convention_flags.insert("sqrt_branch".to_string(), "positive".to_string());
    Ok(PartitionReport {
        value,
        per_point,
        k,
        convention_flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rot(h: f64) -> SymplecticMatrix<f64> {
        SymplecticMatrix::from_row_slice(2, &[h.cos(), -h.sin(), h.sin(), h.cos()], 1e-10).unwrap()
    }

    fn one() -> Complex<f64> {
        Complex::new(1.0, 0.0)
    }

    #[test]
    fn unitary_weight_both_routes() {
        let tol = Tolerances::default();
        for &h in &[0.4, PI, 2.0, 5.5] {
            let want = one() / (one() - Complex::new(0.0, h).exp());
            let a = fixed_point_weight(&rot(h), one(), &tol).unwrap();
            let b = fixed_point_weight_eta_route(&rot(h), one(), &tol).unwrap();
            assert!((a - want).norm() < 1e-12, "h={h}");
            assert!((b - want).norm() < 1e-12, "h={h}");
        }
        let half = fixed_point_weight(&rot(PI), one(), &tol).unwrap();
        assert!((half - Complex::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn hyperbolic_weight() {
        let tol = Tolerances::default();
        let h = 0.8f64;
        let m = SymplecticMatrix::from_row_slice(2, &[h.exp(), 0.0, 0.0, (-h).exp()], 1e-10).unwrap();
        let w = fixed_point_weight(&m, one(), &tol).unwrap();
        let want = 1.0 / ((h / 2.0).exp() - (-h / 2.0).exp());
        assert!((w - Complex::new(want, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn projective_line_small_cases() {
        let tol = Tolerances::default();
        let zero = cohomology_trace_oracle(&ToyModelSpec::ProjectiveLine { level: 0, theta: 1.3 }).unwrap();
        assert!((zero - one()).norm() < 1e-15);
        let pts = projective_line_fixed_points(2, PI / 2.0, &tol).unwrap();
        let lhs = cohomology_trace_oracle(&ToyModelSpec::ProjectiveLine { level: 2, theta: PI / 2.0 }).unwrap();
        let rhs = lefschetz_sum(&pts, &tol).unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
        assert!(lefschetz_sum::<f64>(&[], &tol).unwrap().norm() == 0.0);
        assert!(matches!(
            cohomology_trace_oracle(&ToyModelSpec::ProjectiveLine { level: 2, theta: 2.0 * PI }),
            Err(Error::DegenerateFixedPoint(_))
        ));
    }

    #[test]
    fn flat_torus_translation() {
        let t = ToyModelSpec::FlatTorus {
            level: 3,
            matrix: [[1, 0], [0, 1]],
            translation: [1.0 / 3.0, 0.0],
        };
        assert!(cohomology_trace_oracle(&t).unwrap().norm() < 1e-12);
        let bad = ToyModelSpec::FlatTorus {
            level: 3,
            matrix: [[2, 1], [1, 1]],
            translation: [0.0, 0.0],
        };
        assert!(matches!(cohomology_trace_oracle(&bad), Err(Error::Unsupported(_))));
        let off = ToyModelSpec::FlatTorus {
            level: 3,
            matrix: [[1, 0], [0, 1]],
            translation: [0.1, 0.0],
        };
        assert!(matches!(cohomology_trace_oracle(&off), Err(Error::Unsupported(_))));
    }

    fn datum(label: &str, abs_det: f64, action: f64, flow: i64) -> FixedPointDatum<f64> {
        FixedPointDatum {
            label: label.into(),
            df: rot(PI),
            lift_trace: one(),
            action,
            eta: 0.0,
            abs_det,
            flow_index: flow,
            kernel_dim: 0,
        }
    }

    #[test]
    fn sqm_single_point_and_mu() {
        let r = sqm_partition(&[datum("a", 4.0, 0.0, 0)], "a", 3, 0).unwrap();
        assert!((r.value - Complex::new(0.5, 0.0)).norm() < 1e-15);
        let r2 = sqm_partition(&[datum("a", 4.0, 0.0, 0)], "a", 3, 2).unwrap();
        assert!((r2.value + r.value).norm() < 1e-15);
    }

    #[test]
    fn sqm_flow_sign_and_errors() {
        let pts = [datum("a", 1.0, 0.0, 0), datum("b", 1.0, 0.0, 0), datum("c", 1.0, 0.0, 2)];
        let r = sqm_partition(&pts, "a", 1, 0).unwrap();
        let b = r.per_point[1].1;
        let c = r.per_point[2].1;
        assert!((b + c).norm() < 1e-15);
        assert!(matches!(sqm_partition(&pts, "zz", 1, 0), Err(Error::Config(_))));
        let mut bad = pts.to_vec();
        bad[1].kernel_dim = 1;
        assert!(matches!(sqm_partition(&bad, "a", 1, 0), Err(Error::Kernel(_))));
    }
}
