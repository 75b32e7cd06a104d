use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::autodiff::{softmax_into, Tape, Tensor, Var};

/// Fully connected layer, `y = x·Wᵀ + b` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    /// Orthogonal weights scaled by `gain`, zero bias.
    pub fn orthogonal(in_features: usize, out_features: usize, gain: f64, rng: &mut impl Rng) -> Self {
        Self { weight: orthogonal(out_features, in_features, gain, rng), bias: Tensor::zeros(&[out_features]) }
    }

    pub fn zeros(in_features: usize, out_features: usize) -> Self {
        Self { weight: Tensor::zeros(&[out_features, in_features]), bias: Tensor::zeros(&[out_features]) }
    }

    pub fn in_features(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_features(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, NeuralError> {
        let mut z = x.matmul_t(&self.weight)?;
        let n = self.bias.len();
        for row in z.data_mut().chunks_mut(n) {
            row.iter_mut().zip(self.bias.data()).for_each(|(v, b)| *v += b);
        }
        Ok(z)
    }

    pub fn forward_tape(&self, tape: &mut Tape, w: Var, b: Var, x: Var) -> Result<Var, NeuralError> {
        let z = tape.matmul_t(x, w)?;
        Ok(tape.add_row(z, b)?)
    }
}

/// Random matrix with orthonormal rows (or columns, whichever is shorter),
/// scaled by `gain`.
pub fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut impl Rng) -> Tensor {
    let (n, k) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    // n vectors of length k, Gram-Schmidt orthonormalised.
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(n);
    while vecs.len() < n {
        let mut v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        for u in &vecs {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        vecs.push(v);
    }
    let mut data = vec![0.0; rows * cols];
    for (i, v) in vecs.iter().enumerate() {
        for (j, &a) in v.iter().enumerate() {
            if rows <= cols {
                data[i * cols + j] = gain * a;
            } else {
                data[j * cols + i] = gain * a;
            }
        }
    }
    Tensor::matrix(rows, cols, data)
}

/// Stack of linear layers with tanh between them and no output activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    /// `sizes = [in, hidden…, out]`; hidden layers use gain √2, the output
    /// layer `out_gain`.
    pub fn new(sizes: &[usize], out_gain: f64, rng: &mut impl Rng) -> Self {
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::orthogonal(w[0], w[1], if i == last { out_gain } else { 2f64.sqrt() }, rng))
            .collect();
        Self { layers }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].in_features()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().unwrap().out_features()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, NeuralError> {
        if x.cols() != self.inputs() {
            return Err(NeuralError::Shape(format!("expected {} inputs, got {:?}", self.inputs(), x.shape())));
        }
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            h = l.forward(&h)?;
            if i + 1 < self.layers.len() {
                h = h.map(f64::tanh);
            }
        }
        Ok(h)
    }

    pub fn forward_tape(&self, tape: &mut Tape, vars: &[Var], x: Var) -> Result<Var, NeuralError> {
        if vars.len() != 2 * self.layers.len() {
            return Err(NeuralError::Shape(format!("expected {} parameter handles", 2 * self.layers.len())));
        }
        let mut h = x;
        for (i, l) in self.layers.iter().enumerate() {
            h = l.forward_tape(tape, vars[2 * i], vars[2 * i + 1], h)?;
            if i + 1 < self.layers.len() {
                h = tape.tanh(h)?;
            }
        }
        Ok(h)
    }
}

/// Categorical policy head over MLP logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpActor {
    pub net: Mlp,
}

impl MlpActor {
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        Self { net: Mlp::new(sizes, 0.01, rng) }
    }

    pub fn probs(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        let logits = self.net.forward(&Tensor::matrix(1, x.len(), x.to_vec()))?;
        let mut p = vec![0.0; logits.len()];
        softmax_into(logits.data(), &mut p);
        Ok(p)
    }
}

/// State-value estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpCritic {
    pub net: Mlp,
}

impl MlpCritic {
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        Self { net: Mlp::new(sizes, 1.0, rng) }
    }

    pub fn values(&self, x: &Tensor) -> Result<Vec<f64>, NeuralError> {
        Ok(self.net.forward(x)?.into_data())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, c) in [(4, 9), (9, 4), (5, 5)] {
            let w = orthogonal(r, c, 1.0, &mut rng);
            let g = if r <= c { w.matmul_t(&w).unwrap() } else { w.transpose().matmul_t(&w.transpose()).unwrap() };
            let n = r.min(c);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g.get2(i, j) - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn tape_and_plain_forward_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mlp = Mlp::new(&[3, 5, 2], 1.0, &mut rng);
        let x = Tensor::matrix(2, 3, vec![0.1, -0.4, 0.9, 1.0, 0.0, -1.0]);
        let mut t = Tape::new();
        let vars: Vec<Var> = mlp.params().into_iter().map(|p| t.param(p.clone())).collect();
        let xv = t.constant(x.clone());
        let y = mlp.forward_tape(&mut t, &vars, xv).unwrap();
        let plain = mlp.forward(&x).unwrap();
        for (a, b) in t.value(y).data().iter().zip(plain.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
