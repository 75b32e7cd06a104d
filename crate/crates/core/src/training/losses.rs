use crate::autodiff::{AutodiffError, Tape, Var};

/// `mean |1 − |x||`, zero exactly when every entry is ±1.
pub fn polar_loss(tape: &mut Tape, x: Var) -> Result<Var, AutodiffError> {
    let a = tape.abs(x)?;
    let one_minus = tape.neg(a)?;
    let one_minus = tape.add_scalar(one_minus, 1.0)?;
    let d = tape.abs(one_minus)?;
    tape.mean(d)
}

/// `mean |w·(6 − |w|)|`, zero exactly when every weight is −6, 0 or 6.
pub fn weight_snap_loss(tape: &mut Tape, w: Var) -> Result<Var, AutodiffError> {
    let a = tape.abs(w)?;
    let six_minus = tape.neg(a)?;
    let six_minus = tape.add_scalar(six_minus, 6.0)?;
    let p = tape.mul(w, six_minus)?;
    let p = tape.abs(p)?;
    tape.mean(p)
}

/// Binary cross-entropy between `(tanh(d) + 1)/2` and the mutex-tanh
/// probabilities treated as fixed targets, summed over actions and averaged
/// over the batch.
pub fn mt_loss(tape: &mut Tape, disj_tanh: Var, probs: Var) -> Result<Var, AutodiffError> {
    let target = tape.value(probs).clone();
    let rows = target.rows() as f64;
    let q = tape.add_scalar(disj_tanh, 1.0)?;
    let q = tape.scale(q, 0.5)?;
    let q = tape.clamp(q, 1e-8, 1.0 - 1e-8)?;
    let log_q = tape.log(q)?;
    let one_minus_q = tape.neg(q)?;
    let one_minus_q = tape.add_scalar(one_minus_q, 1.0)?;
    let log_nq = tape.log(one_minus_q)?;
    let p = tape.constant(target.clone());
    let np = tape.constant(target.map(|v| 1.0 - v));
    let a = tape.mul(p, log_q)?;
    let b = tape.mul(np, log_nq)?;
    let s = tape.add(a, b)?;
    let s = tape.sum(s)?;
    tape.scale(s, -1.0 / rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn polar_zero_on_signs() {
        let mut t = Tape::new();
        let c = t.constant(Tensor::vector(vec![1.0, -1.0, 1.0]));
        let l = polar_loss(&mut t, c).unwrap();
        assert_eq!(t.value(l).item(), 0.0);
        let c = t.constant(Tensor::vector(vec![0.5, -0.25]));
        let l = polar_loss(&mut t, c).unwrap();
        assert!((t.value(l).item() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn snap_zero_on_targets() {
        let mut t = Tape::new();
        let w = t.constant(Tensor::vector(vec![6.0, 0.0, -6.0]));
        let l = weight_snap_loss(&mut t, w).unwrap();
        assert_eq!(t.value(l).item(), 0.0);
        let w = t.constant(Tensor::vector(vec![3.0, -1.0]));
        let l = weight_snap_loss(&mut t, w).unwrap();
        assert!((t.value(l).item() - (9.0 + 5.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mt_loss_matches_formula() {
        let y = [0.3, -0.8, 0.1];
        let p = [0.5, 0.2, 0.3];
        let mut t = Tape::new();
        let yv = t.constant(Tensor::matrix(1, 3, y.to_vec()));
        let pv = t.constant(Tensor::matrix(1, 3, p.to_vec()));
        let l = mt_loss(&mut t, yv, pv).unwrap();
        let want: f64 = -y
            .iter()
            .zip(&p)
            .map(|(&y, &p)| {
                let q = (y + 1.0) / 2.0;
                p * q.ln() + (1.0 - p) * (1.0 - q).ln()
            })
            .sum::<f64>();
        assert!((t.value(l).item() - want).abs() < 1e-12);
    }

    #[test]
    fn mt_loss_at_self_target_is_binary_entropy() {
        // ŷ equal to the mutex-tanh values: the loss is Σ H(pᵢ).
        let p = [0.1, 0.6, 0.3];
        let y: Vec<f64> = p.iter().map(|v| 2.0 * v - 1.0).collect();
        let mut t = Tape::new();
        let yv = t.constant(Tensor::matrix(1, 3, y));
        let pv = t.constant(Tensor::matrix(1, 3, p.to_vec()));
        let l = mt_loss(&mut t, yv, pv).unwrap();
        let h: f64 = p.iter().map(|&p: &f64| -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())).sum();
        assert!((t.value(l).item() - h).abs() < 1e-12);
    }

    #[test]
    fn no_gradient_through_targets() {
        let mut t = Tape::new();
        let y = t.param(Tensor::matrix(1, 2, vec![0.2, -0.4]));
        let p = t.param(Tensor::matrix(1, 2, vec![0.7, 0.3]));
        let l = mt_loss(&mut t, y, p).unwrap();
        let g = t.backward(l).unwrap();
        assert!(g.get(p).data().iter().all(|&v| v == 0.0));
        assert!(g.get(y).data().iter().any(|&v| v != 0.0));
    }
}
