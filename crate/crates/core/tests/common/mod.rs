#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex;
use proptest::prelude::*;
use rand::Rng;
use semiclassic_core::{CartanBlock, SymplecticMatrix};
use std::f64::consts::PI;

/// Product of symplectic shears and a `diag(A, A⁻ᵀ)` factor.
pub fn symplectic_from(n: usize, upper: &[f64], lower: &[f64], a: &[f64]) -> DMatrix<f64> {
    let sym = |v: &[f64]| {
        let mut s = DMatrix::<f64>::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                s[(i, j)] = v[k];
                s[(j, i)] = v[k];
                k += 1;
            }
        }
        s
    };
    let id = DMatrix::<f64>::identity(n, n);
    let mut up = DMatrix::<f64>::identity(2 * n, 2 * n);
    up.view_mut((0, n), (n, n)).copy_from(&sym(upper));
    let mut lo = DMatrix::<f64>::identity(2 * n, 2 * n);
    lo.view_mut((n, 0), (n, n)).copy_from(&sym(lower));
    let am = &id + DMatrix::from_row_slice(n, n, a);
    let ait = am.clone().try_inverse().unwrap().transpose();
    let mut d = DMatrix::<f64>::zeros(2 * n, 2 * n);
    d.view_mut((0, 0), (n, n)).copy_from(&am);
    d.view_mut((n, n), (n, n)).copy_from(&ait);
    up * d * lo
}

pub fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Strategy for a conjugator in `Sp(2n, ℝ)` with moderate condition number.
pub fn conjugator(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (
        proptest::collection::vec(-0.8f64..0.8, sym_len(n)),
        proptest::collection::vec(-0.8f64..0.8, sym_len(n)),
        proptest::collection::vec(-0.3f64..0.3, n * n),
    )
        .prop_map(move |(u, l, a)| symplectic_from(n, &u, &l, &a))
}

pub fn two_block() -> impl Strategy<Value = CartanBlock<f64>> {
    prop_oneof![
        (0.3f64..(2.0 * PI - 0.3)).prop_map(|h| CartanBlock::Unitary { h }),
        (0.2f64..1.5).prop_map(|h| CartanBlock::Hyperbolic { h }),
        (0.2f64..1.5).prop_map(|h| CartanBlock::NegHyperbolic { h }),
    ]
}

/// Block lists of total dimension 2 or 4 with well separated eigenvalues.
pub fn block_list() -> impl Strategy<Value = Vec<CartanBlock<f64>>> {
    prop_oneof![
        two_block().prop_map(|b| vec![b]),
        (two_block(), two_block())
            .prop_filter("separated spectra", |(a, b)| separated(a, b))
            .prop_map(|(a, b)| vec![a, b]),
        (0.2f64..1.0, 0.3f64..2.8)
            .prop_map(|(x, y)| vec![CartanBlock::ComplexQuad { z: Complex::new(x, y) }]),
    ]
}

pub fn separated(a: &CartanBlock<f64>, b: &CartanBlock<f64>) -> bool {
    let ea = a.group_element().complex_eigenvalues();
    let eb = b.group_element().complex_eigenvalues();
    ea.iter().all(|x| eb.iter().all(|y| (x - y).norm() > 0.05))
}

pub fn block_diag(blocks: &[CartanBlock<f64>]) -> DMatrix<f64> {
    let dim: usize = blocks.iter().map(|b| b.dim()).sum();
    let mut out = DMatrix::zeros(dim, dim);
    let mut off = 0;
    for b in blocks {
        let g = b.group_element();
        out.view_mut((off, off), (b.dim(), b.dim())).copy_from(&g);
        off += b.dim();
    }
    out
}

/// `g · diag(exp E_b) · g⁻¹`, with the block-local coordinate order
/// `(q-block, p-block)` interleaved into the global `(q₁…qₙ, p₁…pₙ)` order.
pub fn regular_matrix(blocks: &[CartanBlock<f64>], g: &DMatrix<f64>) -> SymplecticMatrix<f64> {
    let local = block_diag(blocks);
    let dim = local.nrows();
    let n = dim / 2;
    let mut perm = DMatrix::<f64>::zeros(dim, dim);
    let mut q = 0;
    let mut off = 0;
    for b in blocks {
        let k = b.dim() / 2;
        for i in 0..k {
            perm[(q + i, off + i)] = 1.0;
            perm[(n + q + i, off + k + i)] = 1.0;
        }
        q += k;
        off += b.dim();
    }
    let standard = &perm * local * perm.transpose();
    let m = g * standard * g.clone().try_inverse().unwrap();
    SymplecticMatrix::new(m, 1e-9).unwrap()
}

pub fn random_conjugator<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let u: Vec<f64> = (0..sym_len(n)).map(|_| rng.random_range(-0.8..0.8)).collect();
    let l: Vec<f64> = (0..sym_len(n)).map(|_| rng.random_range(-0.8..0.8)).collect();
    let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-0.3..0.3)).collect();
    symplectic_from(n, &u, &l, &a)
}

pub fn random_blocks<R: Rng>(rng: &mut R, four: bool) -> Vec<CartanBlock<f64>> {
    let one = |rng: &mut R| match rng.random_range(0..3) {
        0 => CartanBlock::Unitary {
            h: rng.random_range(0.3..(2.0 * PI - 0.3)),
        },
        1 => CartanBlock::Hyperbolic {
            h: rng.random_range(0.2..1.5),
        },
        _ => CartanBlock::NegHyperbolic {
            h: rng.random_range(0.2..1.5),
        },
    };
    if !four {
        return vec![one(rng)];
    }
    if rng.random_bool(0.3) {
        return vec![CartanBlock::ComplexQuad {
            z: Complex::new(rng.random_range(0.2..1.0), rng.random_range(0.3..2.8)),
        }];
    }
    loop {
        let (a, b) = (one(rng), one(rng));
        if separated(&a, &b) {
            return vec![a, b];
        }
    }
}
