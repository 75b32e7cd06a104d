use super::{PolicyKind, PostTrainConfig, PostTrainError};
use crate::autodiff::{softmax_into, Tensor};
use crate::neural::{argmax, ss_bias, Activation, NeuralDnfMt};

/// Behaviour of a stage's input model that the stage must keep on every
/// context input.
#[derive(Debug, Clone)]
pub struct PruneReference {
    kind: PolicyKind,
    tau: f64,
    require_mutex: bool,
    probs: Vec<Vec<f64>>,
    greedy: Vec<usize>,
    /// Inputs on which the reference has exactly one true action.
    exclusive: Vec<bool>,
}

impl PruneReference {
    /// Deterministic checks keep the greedy action, and exactly one true
    /// action wherever the reference has one; `require_mutex` demands
    /// exactly one true action on every input.
    pub fn new(model: &NeuralDnfMt, inputs: &[Vec<f64>], cfg: &PostTrainConfig, require_mutex: bool) -> Result<Self, PostTrainError> {
        let out = model.forward(&input_tensor(model, inputs)?)?;
        let probs: Vec<Vec<f64>> = (0..inputs.len()).map(|s| out.probs.row(s).to_vec()).collect();
        let greedy = (0..inputs.len()).map(|s| argmax(out.disj_raw.row(s))).collect();
        let exclusive = (0..inputs.len()).map(|s| positives(out.disj_raw.row(s)) == 1).collect();
        Ok(Self { kind: cfg.policy_kind, tau: cfg.tau_prune, require_mutex, probs, greedy, exclusive })
    }

    /// Whether disjunctive raw outputs `raw` for context input `s` keep the
    /// reference behaviour.
    pub fn accepts(&self, s: usize, raw: &[f64], scratch: &mut [f64]) -> bool {
        match self.kind {
            PolicyKind::Deterministic => {
                argmax(raw) == self.greedy[s] && (!(self.require_mutex || self.exclusive[s]) || positives(raw) == 1)
            }
            PolicyKind::Stochastic => {
                softmax_into(raw, scratch);
                scratch.iter().zip(&self.probs[s]).all(|(p, q)| (p - q).abs() <= self.tau)
            }
        }
    }

    /// Largest probability shift and number of changed greedy actions of
    /// `model` relative to the reference.
    pub fn drift(&self, model: &NeuralDnfMt, inputs: &[Vec<f64>]) -> Result<(f64, usize), PostTrainError> {
        let out = model.forward(&input_tensor(model, inputs)?)?;
        let mut worst = 0.0f64;
        let mut changed = 0;
        for s in 0..inputs.len() {
            for (p, q) in out.probs.row(s).iter().zip(&self.probs[s]) {
                worst = worst.max((p - q).abs());
            }
            if argmax(out.disj_raw.row(s)) != self.greedy[s] {
                changed += 1;
            }
        }
        Ok((worst, changed))
    }
}

fn positives(raw: &[f64]) -> usize {
    raw.iter().filter(|&&v| v > 0.0).count()
}

pub(crate) fn input_tensor(model: &NeuralDnfMt, inputs: &[Vec<f64>]) -> Result<Tensor, PostTrainError> {
    if inputs.is_empty() {
        return Err(PostTrainError::EmptyContext);
    }
    let width = model.inputs();
    if let Some(bad) = inputs.iter().find(|x| x.len() != width) {
        return Err(PostTrainError::Mismatch(format!("model takes {width} inputs, observation has {}", bad.len())));
    }
    Ok(Tensor::matrix(inputs.len(), width, inputs.concat()))
}

/// Cached activations of a model over the context, updated edge by edge.
struct Pruner<'a> {
    x: &'a [Vec<f64>],
    wc: Vec<Vec<f64>>,
    wd: Vec<Vec<f64>>,
    dc: f64,
    dd: f64,
    model: NeuralDnfMt,
    conj_bias: Vec<f64>,
    disj_bias: Vec<f64>,
    conj_raw: Vec<Vec<f64>>,
    conj_out: Vec<Vec<f64>>,
    disj_raw: Vec<Vec<f64>>,
    reference: &'a PruneReference,
    cand: Vec<f64>,
    row: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Pruner<'a> {
    fn new(model: &NeuralDnfMt, x: &'a [Vec<f64>], reference: &'a PruneReference) -> Self {
        let rows = |t: &Tensor| (0..t.rows()).map(|r| t.row(r).to_vec()).collect::<Vec<_>>();
        let a = model.actions();
        let mut p = Self {
            x,
            wc: rows(&model.conj.weights),
            wd: rows(&model.disj.weights),
            dc: model.conj.signed_delta(),
            dd: model.disj.signed_delta(),
            model: model.clone(),
            conj_bias: Vec::new(),
            disj_bias: Vec::new(),
            conj_raw: Vec::new(),
            conj_out: Vec::new(),
            disj_raw: Vec::new(),
            reference,
            cand: vec![0.0; x.len()],
            row: vec![0.0; a],
            scratch: vec![0.0; a],
        };
        p.refresh();
        p
    }

    fn bias(&self, row: &[f64], conj: bool) -> f64 {
        if conj {
            ss_bias(row, self.dc, self.model.conj.bias_mode)
        } else {
            ss_bias(row, self.dd, self.model.disj.bias_mode)
        }
    }

    fn act(&self, v: f64) -> f64 {
        self.model.conj_activation.apply(v)
    }

    /// Recomputes every cache from the weights.
    fn refresh(&mut self) {
        self.conj_bias = self.wc.iter().map(|r| self.bias(r, true)).collect();
        self.disj_bias = self.wd.iter().map(|r| self.bias(r, false)).collect();
        let (k, a) = (self.wc.len(), self.wd.len());
        self.conj_raw = vec![vec![0.0; k]; self.x.len()];
        self.conj_out = vec![vec![0.0; k]; self.x.len()];
        self.disj_raw = vec![vec![0.0; a]; self.x.len()];
        for s in 0..self.x.len() {
            for j in 0..k {
                let z = crate::autodiff::dot(&self.wc[j], &self.x[s]) + self.conj_bias[j];
                self.conj_raw[s][j] = z;
                self.conj_out[s][j] = self.act(z);
            }
            for kk in 0..a {
                self.disj_raw[s][kk] = crate::autodiff::dot(&self.wd[kk], &self.conj_out[s]) + self.disj_bias[kk];
            }
        }
    }

    fn check_row(&mut self, s: usize) -> bool {
        self.reference.accepts(s, &self.row, &mut self.scratch)
    }

    fn try_disj_edge(&mut self, k: usize, j: usize) -> bool {
        let w = self.wd[k][j];
        self.wd[k][j] = 0.0;
        let nb = self.bias(&self.wd[k], false);
        self.wd[k][j] = w;
        for s in 0..self.x.len() {
            let v = self.disj_raw[s][k] - w * self.conj_out[s][j] - self.disj_bias[k] + nb;
            self.row.copy_from_slice(&self.disj_raw[s]);
            self.row[k] = v;
            if !self.check_row(s) {
                return false;
            }
            self.cand[s] = v;
        }
        self.wd[k][j] = 0.0;
        self.disj_bias[k] = nb;
        for s in 0..self.x.len() {
            self.disj_raw[s][k] = self.cand[s];
        }
        true
    }

    fn try_conj_edge(&mut self, j: usize, i: usize) -> bool {
        let w = self.wc[j][i];
        self.wc[j][i] = 0.0;
        let nb = self.bias(&self.wc[j], true);
        self.wc[j][i] = w;
        let a = self.wd.len();
        for s in 0..self.x.len() {
            let z = self.conj_raw[s][j] - w * self.x[s][i] - self.conj_bias[j] + nb;
            let dcj = self.act(z) - self.conj_out[s][j];
            for k in 0..a {
                self.row[k] = self.disj_raw[s][k] + self.wd[k][j] * dcj;
            }
            if !self.check_row(s) {
                return false;
            }
            self.cand[s] = z;
        }
        self.wc[j][i] = 0.0;
        self.conj_bias[j] = nb;
        for s in 0..self.x.len() {
            let z = self.cand[s];
            let c = self.act(z);
            let dcj = c - self.conj_out[s][j];
            self.conj_raw[s][j] = z;
            self.conj_out[s][j] = c;
            for k in 0..a {
                self.disj_raw[s][k] += self.wd[k][j] * dcj;
            }
        }
        true
    }

    /// Drops every out-edge of conjunction `j` at once.
    fn try_detach(&mut self, j: usize) -> bool {
        let a = self.wd.len();
        let mut nb = self.disj_bias.clone();
        for (k, b) in nb.iter_mut().enumerate() {
            if self.wd[k][j] != 0.0 {
                let w = self.wd[k][j];
                self.wd[k][j] = 0.0;
                *b = self.bias(&self.wd[k], false);
                self.wd[k][j] = w;
            }
        }
        for s in 0..self.x.len() {
            for k in 0..a {
                self.row[k] = self.disj_raw[s][k] - self.wd[k][j] * self.conj_out[s][j] - self.disj_bias[k] + nb[k];
            }
            if !self.check_row(s) {
                return false;
            }
        }
        for k in 0..a {
            self.wd[k][j] = 0.0;
        }
        self.disj_bias = nb;
        self.refresh();
        true
    }

    /// Whether the cached outputs keep the reference on every input.
    fn all_accepted(&mut self) -> bool {
        (0..self.x.len()).all(|s| {
            self.row.copy_from_slice(&self.disj_raw[s]);
            self.check_row(s)
        })
    }

    /// Applies `change` to the weights and keeps it only if a full
    /// re-evaluation still accepts.
    fn try_exact(&mut self, change: impl FnOnce(&mut Self)) -> bool {
        let saved = (self.wc.clone(), self.wd.clone());
        change(self);
        self.refresh();
        if self.all_accepted() {
            return true;
        }
        (self.wc, self.wd) = saved;
        self.refresh();
        false
    }

    /// One full pass; returns the number of edges removed. Without `exact`,
    /// trials use incrementally updated outputs.
    fn pass(&mut self, exact: bool) -> usize {
        let (k, a, n) = (self.wc.len(), self.wd.len(), self.model.inputs());
        let mut removed = 0;
        for kk in 0..a {
            for j in 0..k {
                if self.wd[kk][j] == 0.0 {
                    continue;
                }
                let ok = if exact { self.try_exact(|p| p.wd[kk][j] = 0.0) } else { self.try_disj_edge(kk, j) };
                removed += ok as usize;
            }
        }
        for j in 0..k {
            for i in 0..n {
                if self.wc[j][i] == 0.0 {
                    continue;
                }
                let ok = if exact { self.try_exact(|p| p.wc[j][i] = 0.0) } else { self.try_conj_edge(j, i) };
                removed += ok as usize;
            }
        }
        for j in 0..k {
            let outs = (0..a).filter(|&kk| self.wd[kk][j] != 0.0).count();
            let ins = self.wc[j].iter().filter(|w| **w != 0.0).count();
            if outs == 0 && ins > 0 {
                self.wc[j].iter_mut().for_each(|w| *w = 0.0);
                removed += ins;
            } else if ins == 0 && outs > 0 {
                let ok = if exact {
                    self.try_exact(|p| p.wd.iter_mut().for_each(|r| r[j] = 0.0))
                } else {
                    self.try_detach(j)
                };
                if ok {
                    removed += outs;
                }
            }
        }
        self.refresh();
        removed
    }

    fn into_model(mut self) -> NeuralDnfMt {
        for (j, r) in self.wc.iter().enumerate() {
            for (i, &w) in r.iter().enumerate() {
                self.model.conj.weights.set2(j, i, w);
            }
        }
        for (k, r) in self.wd.iter().enumerate() {
            for (j, &w) in r.iter().enumerate() {
                self.model.disj.weights.set2(k, j, w);
            }
        }
        self.model
    }
}

/// Removes edges and conjunctions that the model's behaviour on `inputs`
/// does not depend on, repeating passes until one removes nothing. Every
/// candidate removal is checked against the behaviour of the input model.
///
/// Deterministic checks keep the greedy action and, where the input model
/// has exactly one true action, keep that too; once the disjunctive layer
/// uses step activations they demand exactly one true action everywhere.
/// Stochastic checks keep every action probability within `tau_prune`.
pub fn prune(model: &NeuralDnfMt, inputs: &[Vec<f64>], cfg: &PostTrainConfig) -> Result<NeuralDnfMt, PostTrainError> {
    cfg.validate()?;
    let require_mutex = cfg.policy_kind == PolicyKind::Deterministic && model.disj_activation == Activation::Step;
    let reference = PruneReference::new(model, inputs, cfg, require_mutex)?;
    let mut p = Pruner::new(model, inputs, &reference);
    loop {
        let saved = (p.wc.clone(), p.wd.clone());
        let mut removed = p.pass(false);
        if !p.all_accepted() {
            // Rounding in the incremental updates let a tie slip through;
            // redo the pass with full re-evaluation.
            (p.wc, p.wd) = saved;
            p.refresh();
            removed = p.pass(true);
        }
        if removed == 0 {
            break;
        }
    }
    Ok(p.into_model())
}

/// Nonzero weights in the conjunctive and disjunctive layers.
pub(crate) fn edge_counts(model: &NeuralDnfMt) -> (usize, usize) {
    let nz = |t: &Tensor| t.data().iter().filter(|w| **w != 0.0).count();
    (nz(&model.conj.weights), nz(&model.disj.weights))
}

/// Conjunctions with at least one in-edge and one out-edge.
pub(crate) fn live_conjunctions(model: &NeuralDnfMt) -> Vec<usize> {
    (0..model.conjunctions())
        .filter(|&j| {
            model.conj.weights.row(j).iter().any(|w| *w != 0.0)
                && (0..model.actions()).any(|k| model.disj.weights.get2(k, j) != 0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::all_sign_vectors;
    use crate::neural::{BiasMode, NodeKind, SemiSymbolicLayer};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(wc: Tensor, wd: Tensor) -> NeuralDnfMt {
        NeuralDnfMt::from_layers(
            SemiSymbolicLayer::from_weights(NodeKind::Conjunction, wc, 1.0, BiasMode::MaxBias).unwrap(),
            SemiSymbolicLayer::from_weights(NodeKind::Disjunction, wd, 1.0, BiasMode::MaxBias).unwrap(),
        )
        .unwrap()
    }

    fn random_model(seed: u64, inputs: usize, conj: usize, actions: usize) -> NeuralDnfMt {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = NeuralDnfMt::new(inputs, conj, actions, 1.0, &mut rng);
        m.conj.weights = m.conj.weights.map(|w| w * 40.0);
        m.disj.weights = m.disj.weights.map(|w| w * 40.0);
        m
    }

    #[test]
    fn minimal_model_is_a_fixpoint() {
        let wc = Tensor::matrix(1, 2, vec![6.0, 0.0]);
        // Ties go to action 0, so "right iff not conj_0" is all that is needed.
        let wd = Tensor::matrix(2, 1, vec![0.0, -6.0]);
        let m = model(wc, wd);
        let x = all_sign_vectors(2);
        let cfg = PostTrainConfig::new(PolicyKind::Deterministic);
        assert_eq!(prune(&m, &x, &cfg).unwrap(), m);
    }

    #[test]
    fn conjunction_feeding_nothing_is_removed() {
        let wc = Tensor::matrix(2, 2, vec![6.0, 0.0, 6.0, 0.0]);
        let wd = Tensor::matrix(2, 2, vec![6.0, 0.0, -6.0, 0.0]);
        let m = model(wc, wd);
        let cfg = PostTrainConfig::new(PolicyKind::Deterministic);
        let p = prune(&m, &all_sign_vectors(2), &cfg).unwrap();
        assert_eq!(p.conj.weights.row(1), &[0.0, 0.0]);
        assert_eq!(p.conj.weights.row(0), &[6.0, 0.0]);
    }

    #[test]
    fn empty_context_is_an_error() {
        let m = random_model(0, 3, 2, 2);
        let cfg = PostTrainConfig::new(PolicyKind::Stochastic);
        assert_eq!(prune(&m, &[], &cfg), Err(PostTrainError::EmptyContext));
    }

    #[test]
    fn incremental_caches_match_full_forward() {
        let m = random_model(3, 5, 4, 3);
        let x = all_sign_vectors(5);
        let cfg = PostTrainConfig::new(PolicyKind::Stochastic);
        let reference = PruneReference::new(&m, &x, &cfg, false).unwrap();
        let mut p = Pruner::new(&m, &x, &reference);
        let mut cfg_loose = cfg.clone();
        cfg_loose.tau_prune = 1.0;
        let loose = PruneReference::new(&m, &x, &cfg_loose, false).unwrap();
        p.reference = &loose;
        assert!(p.try_conj_edge(1, 2));
        assert!(p.try_disj_edge(0, 3));
        let cached = p.disj_raw.clone();
        let out = p.into_model().forward(&input_tensor(&m, &x).unwrap()).unwrap();
        for (s, row) in cached.iter().enumerate() {
            for (a, b) in row.iter().zip(out.disj_raw.row(s)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn stochastic_drift_stays_within_tau(seed in 0u64..10_000) {
            let m = random_model(seed, 4, 5, 3);
            let x = all_sign_vectors(4);
            let cfg = PostTrainConfig::new(PolicyKind::Stochastic);
            let p = prune(&m, &x, &cfg).unwrap();
            let a = m.forward(&input_tensor(&m, &x).unwrap()).unwrap();
            let b = p.forward(&input_tensor(&p, &x).unwrap()).unwrap();
            for (u, v) in a.probs.data().iter().zip(b.probs.data()) {
                prop_assert!((u - v).abs() <= cfg.tau_prune + 1e-12);
            }
        }

        #[test]
        fn deterministic_prune_is_idempotent(seed in 0u64..10_000) {
            let m = random_model(seed, 4, 5, 3);
            let x = all_sign_vectors(4);
            let cfg = PostTrainConfig::new(PolicyKind::Deterministic);
            let once = prune(&m, &x, &cfg).unwrap();
            let twice = prune(&once, &x, &cfg).unwrap();
            prop_assert_eq!(&once, &twice);
            let a = m.forward(&input_tensor(&m, &x).unwrap()).unwrap();
            let b = once.forward(&input_tensor(&once, &x).unwrap()).unwrap();
            for s in 0..x.len() {
                prop_assert_eq!(argmax(a.disj_raw.row(s)), argmax(b.disj_raw.row(s)));
            }
        }
    }
}
