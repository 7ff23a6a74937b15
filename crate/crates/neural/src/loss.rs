//! Similarity scores, the symmetric contrastive loss, and the
//! representation regularizer, in plain and differentiable form.

use crate::tape::{Tape, Var};
use crate::tensor::Mat;

/// Added under the square root when normalizing rows.
pub const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    Shape((usize, usize), (usize, usize)),
    #[error("expected {0} modalities, got {1}")]
    Modalities(usize, usize),
}

pub fn normalize_rows(m: &Mat) -> Mat {
    let mut out = m.clone();
    for r in 0..out.rows {
        let row = out.row_mut(r);
        let n = (row.iter().map(|x| x * x).sum::<f64>() + NORM_EPS).sqrt();
        row.iter_mut().for_each(|x| *x /= n);
    }
    out
}

/// `S[i][j] = (û_i · v̂_j) / τ` for circuit rows `u` and spec rows `v`.
pub fn similarity_matrix(u: &Mat, v: &Mat, tau: f64) -> Mat {
    let mut s = Mat::matmul(&normalize_rows(u), false, &normalize_rows(v), true);
    s.scale_assign(1.0 / tau);
    s
}

/// Intra-batch cosine matrix of one modality.
pub fn cosine_matrix(x: &Mat) -> Mat {
    let n = normalize_rows(x);
    Mat::matmul(&n, false, &n, true)
}

fn row_ce(row: impl Iterator<Item = f64> + Clone, target: f64) -> f64 {
    let m = row.clone().fold(f64::NEG_INFINITY, f64::max);
    m + row.map(|x| (x - m).exp()).sum::<f64>().ln() - target
}

/// Mean of the row-wise and column-wise cross-entropies with the diagonal as
/// targets.
pub fn contrastive_loss(s: &Mat) -> f64 {
    assert_eq!(s.rows, s.cols, "score matrix must be square");
    let n = s.rows;
    if n == 0 {
        return 0.0;
    }
    let rows: f64 = (0..n).map(|i| row_ce(s.row(i).iter().copied(), s.at(i, i))).sum();
    let cols: f64 = (0..n).map(|j| row_ce((0..n).map(|i| s.at(i, j)), s.at(j, j))).sum();
    0.5 * (rows + cols) / n as f64
}

/// Mean squared difference between the cosine matrices of `current` and
/// `anchor`, averaged over modalities.
pub fn representation_regularizer(current: &[Mat], anchor: &[Mat]) -> Result<f64, LossError> {
    if current.len() != anchor.len() {
        return Err(LossError::Modalities(current.len(), anchor.len()));
    }
    let mut total = 0.0;
    for (c, a) in current.iter().zip(anchor) {
        if c.rows != a.rows {
            return Err(LossError::Shape(c.shape(), a.shape()));
        }
        let (cc, ca) = (cosine_matrix(c), cosine_matrix(a));
        let n = cc.len().max(1) as f64;
        total += cc.data.iter().zip(&ca.data).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n;
    }
    Ok(total / current.len().max(1) as f64)
}

/// Differentiable score matrix; `inv_tau` is either a constant or a tape
/// scalar (for a learnable temperature).
pub fn tape_similarity(tape: &mut Tape, u: Var, v: Var, inv_tau: InvTau) -> Var {
    let un = tape.l2_normalize_rows(u, NORM_EPS);
    let vn = tape.l2_normalize_rows(v, NORM_EPS);
    let s = tape.matmul_t(un, false, vn, true);
    match inv_tau {
        InvTau::Fixed(k) => tape.scale(s, k),
        InvTau::Var(k) => tape.scale_by(s, k),
    }
}

#[derive(Clone, Copy, Debug)]
pub enum InvTau {
    Fixed(f64),
    Var(Var),
}

pub fn tape_contrastive(tape: &mut Tape, s: Var) -> Var {
    let n = tape.value(s).rows;
    let targets: Vec<usize> = (0..n).collect();
    let rows = tape.cross_entropy(s, &targets);
    let st = tape.transpose(s);
    let cols = tape.cross_entropy(st, &targets);
    let sum = tape.add(rows, cols);
    tape.scale(sum, 0.5)
}

/// Regularizer term for one modality; `anchor_cos` is the frozen cosine
/// matrix of the same batch.
pub fn tape_regularizer(tape: &mut Tape, x: Var, anchor_cos: &Mat) -> Var {
    let xn = tape.l2_normalize_rows(x, NORM_EPS);
    let c = tape.matmul_t(xn, false, xn, true);
    let a = tape.leaf(anchor_cos.clone());
    let d = tape.sub(c, a);
    let sq = tape.mul(d, d);
    tape.mean(sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthonormal_gives_identity() {
        let e = Mat::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let s = similarity_matrix(&e, &e, 1.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.at(i, j) - f64::from(i == j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rescaling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = Mat::uniform(3, 5, 1.0, &mut rng);
        let v = Mat::uniform(3, 5, 1.0, &mut rng);
        let mut u2 = u.clone();
        u2.row_mut(1).iter_mut().for_each(|x| *x *= 7.5);
        let (a, b) = (similarity_matrix(&u, &v, 0.07), similarity_matrix(&u2, &v, 0.07));
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn two_by_two_by_hand() {
        // u = [(3,4), (1,0)], v = [(0,2), (1,1)]
        let u = Mat::from_rows(&[vec![3.0, 4.0], vec![1.0, 0.0]]);
        let v = Mat::from_rows(&[vec![0.0, 2.0], vec![1.0, 1.0]]);
        let s = similarity_matrix(&u, &v, 0.07);
        let r2 = 0.5f64.sqrt();
        let want = [0.8 / 0.07, (0.6 * r2 + 0.8 * r2) / 0.07, 0.0, r2 / 0.07];
        for (g, w) in s.data.iter().zip(want) {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
    }

    #[test]
    fn uniform_scores_give_ln_n() {
        for n in [1, 2, 5, 64] {
            let l = contrastive_loss(&Mat::filled(n, n, 3.3));
            assert!((l - (n as f64).ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn sharp_identity_goes_to_zero() {
        let mut s = Mat::zeros(4, 4);
        for i in 0..4 {
            s.set(i, i, 1e3);
        }
        assert!(contrastive_loss(&s) < 1e-12);
    }

    #[test]
    fn three_by_three_by_hand() {
        let s = Mat::from_rows(&[vec![2.0, 0.0, 1.0], vec![0.5, 1.0, -1.0], vec![0.0, 0.0, 0.0]]);
        let lse = |xs: [f64; 3]| xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        let rows = (lse([2.0, 0.0, 1.0]) - 2.0) + (lse([0.5, 1.0, -1.0]) - 1.0) + lse([0.0, 0.0, 0.0]);
        let cols = (lse([2.0, 0.5, 0.0]) - 2.0) + (lse([0.0, 1.0, 0.0]) - 1.0) + lse([1.0, -1.0, 0.0]);
        let want = (rows + cols) / 6.0;
        assert!((contrastive_loss(&s) - want).abs() < 1e-10);
        assert!((contrastive_loss(&s.transpose()) - want).abs() < 1e-12);
    }

    #[test]
    fn regularizer_cases() {
        let a = Mat::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(representation_regularizer(&[a.clone()], &[a.clone()]).unwrap(), 0.0);
        // cosines: current off-diagonal 1/sqrt2, anchor (orthogonal) 0.
        let b = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]);
        let want = 2.0 * 0.5 / 4.0;
        let got = representation_regularizer(&[a.clone(), b.clone()], &[b.clone(), b.clone()]).unwrap();
        assert!((got - want / 2.0).abs() < 1e-10, "{got}");
        assert!(representation_regularizer(&[a.clone()], &[Mat::zeros(3, 2)]).is_err());
        assert!(representation_regularizer(&[a], &[]).is_err());
    }

    #[test]
    fn tape_versions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = Mat::uniform(4, 3, 1.0, &mut rng);
        let v = Mat::uniform(4, 3, 1.0, &mut rng);
        let mut t = Tape::new();
        let (uu, vv) = (t.leaf(u.clone()), t.leaf(v.clone()));
        let s = tape_similarity(&mut t, uu, vv, InvTau::Fixed(1.0 / 0.07));
        let l = tape_contrastive(&mut t, s);
        assert!((t.scalar(l) - contrastive_loss(&similarity_matrix(&u, &v, 0.07))).abs() < 1e-10);
        let r = tape_regularizer(&mut t, uu, &cosine_matrix(&v));
        let want = representation_regularizer(&[u], &[v]).unwrap();
        assert!((t.scalar(r) - want).abs() < 1e-12);
    }
}
