#![allow(dead_code)]

use proptest::prelude::*;
use smcm::cloud::{transition_matrix, transition_rates, EnvParams, FractionVector, StochasticMatrix, TimescaleTable};

/// Stationary fractions solved by hand from the balance of inflow and outflow
/// for each state (clear sky as the free variable):
///
/// ```text
/// congestus:  (R10 + R12) s1 = R01 s0
/// deep:       (R20 + R23) s2 = R02 s0 + R12 s1
/// stratiform:  R30 s3        = R23 s2
/// ```
pub fn balance_oracle(cape: f64, dryness: f64) -> [f64; 4] {
    let g = |x: f64| if x > 0.0 { 1.0 - (-x).exp() } else { 0.0 };
    let (gc, gd) = (g(cape), g(dryness));
    let r01 = gc * gd / 1.0;
    let r02 = gc * (1.0 - gd) / 2.0;
    let r10 = gd / 5.0;
    let r12 = gc * (1.0 - gd) / 1.0;
    let r20 = (1.0 - gc) / 5.0;
    let r23 = 1.0 / 3.0;
    let r30 = 1.0 / 5.0;
    let s0 = 1.0;
    let s1 = r01 * s0 / (r10 + r12);
    let s2 = (r02 * s0 + r12 * s1) / (r20 + r23);
    let s3 = r23 * s2 / r30;
    let total = s0 + s1 + s2 + s3;
    [s0 / total, s1 / total, s2 / total, s3 / total]
}

pub fn reference_matrix(dt: f64) -> StochasticMatrix {
    let rates = transition_rates(&EnvParams::reference(), &TimescaleTable::reference());
    transition_matrix(&rates, dt).unwrap()
}

pub fn simplex() -> impl Strategy<Value = FractionVector> {
    prop::array::uniform4(0.0f64..1.0)
        .prop_filter("non-zero", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| FractionVector::from_weights(w).unwrap())
}

/// Random column-stochastic matrix with columns drawn from the simplex.
pub fn stochastic() -> impl Strategy<Value = StochasticMatrix> {
    prop::array::uniform4(prop::array::uniform4(0.0f64..1.0)).prop_filter_map(
        "degenerate column",
        |cols| {
            let mut p = [[0.0; 4]; 4];
            for (l, col) in cols.iter().enumerate() {
                let s: f64 = col.iter().sum();
                if s < 1e-3 {
                    return None;
                }
                for k in 0..4 {
                    p[k][l] = col[k] / s;
                }
            }
            // Re-close each column exactly on the diagonal-free remainder.
            for l in 0..4 {
                let others: f64 = (0..4).filter(|&k| k != l).map(|k| p[k][l]).sum();
                p[l][l] = (1.0 - others).max(0.0);
            }
            StochasticMatrix::new(p).ok()
        },
    )
}

pub fn environment() -> impl Strategy<Value = EnvParams> {
    (0.01f64..3.0, 0.01f64..3.0).prop_map(|(c, d)| EnvParams::new(c, d).unwrap())
}

/// Column-stochastic matrices with spectral norm <= 1. Since `1^T P = 1^T`
/// forces `||P|| >= 1`, these are exactly the doubly stochastic matrices,
/// sampled as random convex combinations of the 24 permutation matrices.
pub fn contraction_stochastic() -> impl Strategy<Value = StochasticMatrix> {
    prop::collection::vec(0.0f64..1.0, 24).prop_filter_map("zero weights", |w| {
        let total: f64 = w.iter().sum();
        if total < 1e-6 {
            return None;
        }
        let mut p = [[0.0; 4]; 4];
        for (perm, weight) in permutations4().iter().zip(&w) {
            for (col, &row) in perm.iter().enumerate() {
                p[row][col] += weight / total;
            }
        }
        StochasticMatrix::new(p).ok()
    })
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    if p.iter().all(|&x| !std::mem::replace(&mut seen[x], true)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}
