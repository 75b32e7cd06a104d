//! Analytic gradients of every differentiable primitive against central
//! finite differences.

use ndnf_core::autodiff::{Tape, Tensor, Var};
use proptest::prelude::*;

const H: f64 = 1e-5;

type Build = fn(&mut Tape, Var) -> Var;

/// Scalar loss = Σ r ∘ op(x), with fixed mixing weights `r` so every output
/// entry contributes with a different coefficient.
fn loss_value(build: Build, x: &Tensor, mix: &[f64]) -> (f64, Vec<f64>) {
    let mut t = Tape::new();
    let xv = t.param(x.clone());
    let y = build(&mut t, xv);
    let n = t.value(y).len();
    let shape = t.value(y).shape().to_vec();
    let r = t.constant(Tensor::new(shape, mix[..n].to_vec()).unwrap());
    let prod = t.mul(y, r).unwrap();
    let loss = t.sum(prod).unwrap();
    let g = t.backward(loss).unwrap().get(xv);
    (t.value(loss).item(), g.into_data())
}

fn check(build: Build, x: Tensor, mix: &[f64]) -> Result<(), TestCaseError> {
    let (_, analytic) = loss_value(build, &x, mix);
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp.data_mut()[i] += H;
        let mut xm = x.clone();
        xm.data_mut()[i] -= H;
        let numeric = (loss_value(build, &xp, mix).0 - loss_value(build, &xm, mix).0) / (2.0 * H);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
        prop_assert!(rel < 1e-4, "entry {i}: analytic {a} numeric {numeric}");
    }
    Ok(())
}

fn mat(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-2.0f64..2.0, rows * cols).prop_map(move |d| Tensor::matrix(rows, cols, d))
}

fn mix() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 16)
}

fn w_const(t: &mut Tape) -> Var {
    t.constant(Tensor::matrix(2, 3, vec![0.4, -1.3, 0.7, 1.1, 0.2, -0.9]))
}

fn well_separated(x: &Tensor, points: &[f64]) -> bool {
    x.data().iter().all(|v| points.iter().all(|p| (v - p).abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matmul_left(x in mat(4, 3), m in mix()) {
        check(|t, x| { let w = w_const(t); t.matmul_t(x, w).unwrap() }, x, &m)?;
    }

    #[test]
    fn matmul_right(x in mat(3, 2), m in mix()) {
        check(|t, x| { let w = w_const(t); t.matmul(w, x).unwrap() }, x, &m)?;
    }

    #[test]
    fn matmul_t_right(x in mat(2, 3), m in mix()) {
        check(|t, x| {
            let a = t.constant(Tensor::matrix(2, 3, vec![1.0, -0.5, 0.3, 0.8, 0.1, -1.2]));
            t.matmul_t(a, x).unwrap()
        }, x, &m)?;
    }

    #[test]
    fn add_row_both(x in mat(3, 3), m in mix()) {
        check(|t, x| {
            let r = t.row_max(x).unwrap();
            t.add_row(x, r).unwrap()
        }, x, &m)?;
    }

    #[test]
    fn elementwise_products(x in mat(2, 3), m in mix()) {
        check(|t, x| {
            let w = w_const(t);
            let a = t.mul(x, x).unwrap();
            let b = t.sub(a, w).unwrap();
            let c = t.add(b, x).unwrap();
            let d = t.scale(c, -0.7).unwrap();
            let e = t.add_scalar(d, 0.3).unwrap();
            t.neg(e).unwrap()
        }, x, &m)?;
    }

    #[test]
    fn tanh_exp(x in mat(2, 4), m in mix()) {
        check(|t, x| { let a = t.tanh(x).unwrap(); t.exp(a).unwrap() }, x, &m)?;
    }

    #[test]
    fn log_of_positive(x in mat(2, 4), m in mix()) {
        check(|t, x| {
            let sq = t.mul(x, x).unwrap();
            let p = t.add_scalar(sq, 0.1).unwrap();
            t.log(p).unwrap()
        }, x, &m)?;
    }

    #[test]
    fn abs_away_from_kink(x in mat(2, 4), m in mix()) {
        prop_assume!(well_separated(&x, &[0.0]));
        check(|t, x| t.abs(x).unwrap(), x, &m)?;
    }

    #[test]
    fn clamp_away_from_edges(x in mat(2, 4), m in mix()) {
        prop_assume!(well_separated(&x, &[-1.0, 1.0]));
        check(|t, x| t.clamp(x, -1.0, 1.0).unwrap(), x, &m)?;
    }

    #[test]
    fn maximum_minimum(x in mat(2, 4), m in mix()) {
        prop_assume!(well_separated(&x, &[0.25]));
        check(|t, x| {
            let c = t.constant(Tensor::filled(&[2, 4], 0.25));
            let a = t.maximum(x, c).unwrap();
            let b = t.minimum(x, c).unwrap();
            let s = t.mul(a, b).unwrap();
            t.add(s, a).unwrap()
        }, x, &m)?;
    }

    #[test]
    fn softmax_rows(x in mat(3, 4), m in mix()) {
        check(|t, x| t.row_softmax(x).unwrap(), x, &m)?;
    }

    #[test]
    fn log_softmax_rows(x in mat(3, 4), m in mix()) {
        check(|t, x| t.row_log_softmax(x).unwrap(), x, &m)?;
    }

    #[test]
    fn reductions(x in mat(3, 4), m in mix()) {
        check(|t, x| {
            let s = t.row_sum(x).unwrap();
            let me = t.mean(x).unwrap();
            let su = t.sum(x).unwrap();
            let tot = t.add(me, su).unwrap();
            let tot = t.reshape(tot, vec![1]).unwrap();
            let tot3 = t.gather(x, &[0, 3, 1]).unwrap();
            let z = t.add(s, tot3).unwrap();
            let shift = t.sum(z).unwrap();
            let both = t.add(shift, tot).unwrap();
            t.reshape(both, vec![1]).unwrap()
        }, x, &m)?;
    }

    #[test]
    fn extremes(x in mat(3, 4), m in mix()) {
        let mut sorted = x.data().to_vec();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 1e-3));
        prop_assume!(well_separated(&x, &[0.0]));
        check(|t, x| {
            let a = t.max_reduce(x).unwrap();
            let b = t.min_reduce(x).unwrap();
            let c = t.row_max(x).unwrap();
            let d = t.row_min_positive(x).unwrap();
            let cd = t.mul(c, d).unwrap();
            let s = t.sum(cd).unwrap();
            let ab = t.mul(a, b).unwrap();
            let out = t.add(ab, s).unwrap();
            t.reshape(out, vec![1]).unwrap()
        }, x, &m)?;
    }
}

#[test]
fn tanh_derivative_at_trained_weight() {
    let mut t = Tape::new();
    let w = t.param(Tensor::scalar(3.03));
    let y = t.tanh(w).unwrap();
    let g = t.backward(y).unwrap().get(w).item();
    let numeric = ((3.03f64 + H).tanh() - (3.03f64 - H).tanh()) / (2.0 * H);
    assert!((g - numeric).abs() / numeric < 1e-6);
    // Frozen from the finite-difference oracle above.
    assert!((g - 9.2942e-3).abs() < 1e-7, "{g}");
}

#[test]
fn softmax_rows_sum_to_one() {
    let mut t = Tape::new();
    let x = t.constant(Tensor::matrix(2, 3, vec![50.0, -3.0, 0.1, -700.0, 2.0, 2.0]));
    let p = t.row_softmax(x).unwrap();
    for r in 0..2 {
        let row = t.value(p).row(r);
        assert!(row.iter().all(|&v| v >= 0.0));
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
