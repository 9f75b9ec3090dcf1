use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{matvec_acc, matvec_t_acc, outer_acc, split, split_mut};
use super::lstm::{Cell, CellGrads, CellStep};
use crate::mdp::{Action, State};
use crate::{Error, Result};

pub const N_ACTIONS: usize = 3;

/// Middle layer of the policy network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// Dense layer with ReLU.
    LinearRelu,
    /// LSTM whose state runs across the words of a question.
    Recurrent,
    /// Bidirectional LSTM over the window of each state.
    BiRecurrent,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::LinearRelu,
        Architecture::Recurrent,
        Architecture::BiRecurrent,
    ];

    pub fn tag(self) -> u8 {
        match self {
            Architecture::LinearRelu => 0,
            Architecture::Recurrent => 1,
            Architecture::BiRecurrent => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Architecture::ALL.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::LinearRelu => "linear-relu",
            Architecture::Recurrent => "recurrent",
            Architecture::BiRecurrent => "bi-recurrent",
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Softmax output of the policy for one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDistribution {
    pub probs: [f64; N_ACTIONS],
}

impl ActionDistribution {
    pub fn from_logits(logits: &[f64]) -> Self {
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = [0.0; N_ACTIONS];
        let mut sum = 0.0;
        for (p, z) in probs.iter_mut().zip(logits) {
            *p = (z - m).exp();
            sum += *p;
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        ActionDistribution { probs }
    }

    /// Most probable action; ties go to the lowest action value.
    pub fn argmax(&self) -> Action {
        let mut best = 0;
        for i in 1..N_ACTIONS {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        Action::from_index(best).unwrap()
    }

    pub fn prob(&self, a: Action) -> f64 {
        self.probs[a.index()]
    }

    pub fn log_prob(&self, a: Action) -> f64 {
        self.probs[a.index()].ln()
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TensorSpec {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
}

impl TensorSpec {
    fn len(&self) -> usize {
        self.rows * self.cols
    }
}

const fn t(name: &'static str, rows: usize, cols: usize) -> TensorSpec {
    TensorSpec { name, rows, cols }
}

/// Weights of the policy network, stored flat in declared tensor order.
///
/// Values are kept representable as `f32` so a saved policy reloads
/// bit-exactly; arithmetic runs in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    arch: Architecture,
    h: usize,
    dim: usize,
    hidden: usize,
    seed: u64,
    pub(crate) weights: Vec<f64>,
}

/// Recurrent state carried across the steps of one episode.
#[derive(Debug, Clone, Default)]
pub struct PolicyContext {
    h: Vec<f64>,
    c: Vec<f64>,
}

pub(crate) fn to_storage(x: f64) -> f64 {
    x as f32 as f64
}

fn one_hot(a: Action) -> [f64; N_ACTIONS] {
    let mut v = [0.0; N_ACTIONS];
    v[a.index()] = 1.0;
    v
}

/// Creates a policy with weights drawn uniformly from
/// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero (LSTM forget gates 1).
pub fn init_policy(
    arch: Architecture,
    h: usize,
    dim: usize,
    hidden: usize,
    seed: u64,
) -> Result<PolicyParams> {
    if dim == 0 || hidden == 0 {
        return Err(Error::InvalidDims(format!(
            "word dimension ({dim}) and hidden size ({hidden}) must be positive"
        )));
    }
    let mut p = PolicyParams {
        arch,
        h,
        dim,
        hidden,
        seed,
        weights: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(p.num_params());
    for spec in p.layout() {
        let is_bias = spec.cols == 1;
        let bound = 1.0 / (spec.cols as f64).sqrt();
        for k in 0..spec.len() {
            let v = if is_bias {
                let forget = spec.rows == 4 * hidden && (hidden..2 * hidden).contains(&k);
                if forget {
                    1.0
                } else {
                    0.0
                }
            } else {
                rng.gen_range(-bound..bound)
            };
            weights.push(to_storage(v));
        }
    }
    p.weights = weights;
    Ok(p)
}

impl PolicyParams {
    pub(crate) fn from_parts(
        arch: Architecture,
        h: usize,
        dim: usize,
        hidden: usize,
        seed: u64,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || hidden == 0 {
            return Err(Error::InvalidDims("zero dimension".into()));
        }
        let p = PolicyParams {
            arch,
            h,
            dim,
            hidden,
            seed,
            weights,
        };
        if p.weights.len() != p.num_params() {
            return Err(Error::InvalidDims(format!(
                "{} weights for a network needing {}",
                p.weights.len(),
                p.num_params()
            )));
        }
        Ok(p)
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn word_dim(&self) -> usize {
        self.dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Width of the flattened state: `(2h + 1) * d` plus the previous-action
    /// one-hot.
    pub fn input_dim(&self) -> usize {
        (2 * self.h + 1) * self.dim + N_ACTIONS
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_params(&self) -> usize {
        self.layout().iter().map(TensorSpec::len).sum()
    }

    pub(crate) fn layout(&self) -> Vec<TensorSpec> {
        let (i, hd) = (self.input_dim(), self.hidden);
        match self.arch {
            Architecture::LinearRelu => vec![
                t("w1", hd, i),
                t("b1", hd, 1),
                t("w2", N_ACTIONS, hd),
                t("b2", N_ACTIONS, 1),
            ],
            Architecture::Recurrent => vec![
                t("wx", 4 * hd, i),
                t("wh", 4 * hd, hd),
                t("b", 4 * hd, 1),
                t("wo", N_ACTIONS, hd),
                t("bo", N_ACTIONS, 1),
            ],
            Architecture::BiRecurrent => {
                let step_in = self.dim + N_ACTIONS;
                vec![
                    t("fwd_wx", 4 * hd, step_in),
                    t("fwd_wh", 4 * hd, hd),
                    t("fwd_b", 4 * hd, 1),
                    t("bwd_wx", 4 * hd, step_in),
                    t("bwd_wh", 4 * hd, hd),
                    t("bwd_b", 4 * hd, 1),
                    t("wo", N_ACTIONS, 2 * hd),
                    t("bo", N_ACTIONS, 1),
                ]
            }
        }
    }

    fn sizes(&self) -> Vec<usize> {
        self.layout().iter().map(TensorSpec::len).collect()
    }

    pub fn new_context(&self) -> PolicyContext {
        PolicyContext {
            h: vec![0.0; self.hidden],
            c: vec![0.0; self.hidden],
        }
    }

    fn check_state(&self, s: &State) -> Result<()> {
        if s.h() != self.h || s.dim() != self.dim {
            return Err(Error::InvalidDims(format!(
                "state has h={} d={}, policy expects h={} d={}",
                s.h(),
                s.dim(),
                self.h,
                self.dim
            )));
        }
        Ok(())
    }

    fn flat_input(s: &State) -> Vec<f64> {
        let mut x = s.window_flat().to_vec();
        x.extend_from_slice(&one_hot(s.prev_action));
        x
    }

    fn bi_inputs(s: &State) -> Vec<Vec<f64>> {
        let hot = one_hot(s.prev_action);
        s.window()
            .map(|w| {
                let mut u = w.to_vec();
                u.extend_from_slice(&hot);
                u
            })
            .collect()
    }

    /// Action distribution for `state`. The recurrent architecture threads
    /// `ctx` through the episode and clears it whenever `state.t == 0`.
    pub fn forward(&self, state: &State, ctx: &mut PolicyContext) -> Result<ActionDistribution> {
        self.check_state(state)?;
        let w = split(&self.weights, &self.sizes());
        let hd = self.hidden;
        let logits = match self.arch {
            Architecture::LinearRelu => {
                let (_, a1) = dense_relu(w[0], w[1], hd, &Self::flat_input(state));
                output(w[2], w[3], &a1)
            }
            Architecture::Recurrent => {
                if state.t == 0 || ctx.h.len() != hd {
                    *ctx = self.new_context();
                }
                let cell = Cell { wx: w[0], wh: w[1], b: w[2], input: self.input_dim(), hidden: hd };
                let step = cell.step(&Self::flat_input(state), &ctx.h, &ctx.c);
                ctx.h.clone_from(&step.h);
                ctx.c.clone_from(&step.c);
                output(w[3], w[4], &step.h)
            }
            Architecture::BiRecurrent => {
                let (f, b) = self.bi_cells(&w);
                let (fs, bs) = bi_run(&f, &b, &Self::bi_inputs(state), self.h);
                output(w[6], w[7], &bi_feature(&fs, &bs))
            }
        };
        Ok(ActionDistribution::from_logits(&logits))
    }

    fn bi_cells<'a>(&self, w: &[&'a [f64]]) -> (Cell<'a>, Cell<'a>) {
        let input = self.dim + N_ACTIONS;
        let hidden = self.hidden;
        (
            Cell { wx: w[0], wh: w[1], b: w[2], input, hidden },
            Cell { wx: w[3], wh: w[4], b: w[5], input, hidden },
        )
    }

    /// Gradient of
    /// `sum_t weight_t * log pi(a_t | s_t) + entropy_coef * sum_t H(pi(.|s_t))`
    /// over one episode. Returns the objective, its gradient and the
    /// per-step distributions.
    pub fn episode_gradient(
        &self,
        states: &[State],
        actions: &[Action],
        step_weights: &[f64],
        entropy_coef: f64,
    ) -> Result<(f64, Vec<f64>, Vec<ActionDistribution>)> {
        if states.len() != actions.len() || states.len() != step_weights.len() {
            return Err(Error::LengthMismatch {
                what: "states, actions and weights",
                left: states.len(),
                right: actions.len().min(step_weights.len()),
            });
        }
        for s in states {
            self.check_state(s)?;
        }
        let sizes = self.sizes();
        let w = split(&self.weights, &sizes);
        let mut grad = vec![0.0; self.weights.len()];
        let hd = self.hidden;
        let mut objective = 0.0;
        let mut dists = Vec::with_capacity(states.len());

        // d objective / d logits for one step
        let mut logit_grad = |logits: &[f64], t: usize| -> Vec<f64> {
            let d = ActionDistribution::from_logits(logits);
            let ent = d.entropy();
            objective += step_weights[t] * d.log_prob(actions[t]) + entropy_coef * ent;
            let hot = one_hot(actions[t]);
            let g = (0..N_ACTIONS)
                .map(|j| {
                    let p = d.probs[j];
                    let dh = if p > 0.0 { -p * (p.ln() + ent) } else { 0.0 };
                    step_weights[t] * (hot[j] - p) + entropy_coef * dh
                })
                .collect();
            dists.push(d);
            g
        };

        match self.arch {
            Architecture::LinearRelu => {
                let mut g = split_mut(&mut grad, &sizes);
                for (t, s) in states.iter().enumerate() {
                    let x = Self::flat_input(s);
                    let (z1, a1) = dense_relu(w[0], w[1], hd, &x);
                    let dl = logit_grad(&output(w[2], w[3], &a1), t);
                    outer_acc(&dl, &a1, g[2]);
                    add(g[3], &dl);
                    let mut da1 = vec![0.0; hd];
                    matvec_t_acc(w[2], N_ACTIONS, hd, &dl, &mut da1);
                    let dz1: Vec<f64> = da1
                        .iter()
                        .zip(&z1)
                        .map(|(d, z)| if *z > 0.0 { *d } else { 0.0 })
                        .collect();
                    outer_acc(&dz1, &x, g[0]);
                    add(g[1], &dz1);
                }
            }
            Architecture::Recurrent => {
                let cell = Cell { wx: w[0], wh: w[1], b: w[2], input: self.input_dim(), hidden: hd };
                let mut steps: Vec<CellStep> = Vec::with_capacity(states.len());
                let mut dls = Vec::with_capacity(states.len());
                let mut ctx = self.new_context();
                for (t, s) in states.iter().enumerate() {
                    if s.t == 0 {
                        ctx = self.new_context();
                    }
                    let step = cell.step(&Self::flat_input(s), &ctx.h, &ctx.c);
                    ctx.h.clone_from(&step.h);
                    ctx.c.clone_from(&step.c);
                    dls.push(logit_grad(&output(w[3], w[4], &step.h), t));
                    steps.push(step);
                }
                let mut g = split_mut(&mut grad, &sizes);
                let (gx, rest) = g.split_at_mut(1);
                let (gh, rest) = rest.split_at_mut(1);
                let (gb, rest) = rest.split_at_mut(1);
                let mut cg = CellGrads { wx: &mut *gx[0], wh: &mut *gh[0], b: &mut *gb[0] };
                let mut dh_next = vec![0.0; hd];
                let mut dc_next = vec![0.0; hd];
                for t in (0..steps.len()).rev() {
                    let dl = &dls[t];
                    outer_acc(dl, &steps[t].h, rest[0]);
                    add(rest[1], dl);
                    let mut dh = dh_next.clone();
                    matvec_t_acc(w[3], N_ACTIONS, hd, dl, &mut dh);
                    let (dhp, dcp, _) = cell.backward(&steps[t], &dh, &dc_next, &mut cg);
                    // an episode boundary cuts the recurrence
                    if states[t].t == 0 {
                        dh_next = vec![0.0; hd];
                        dc_next = vec![0.0; hd];
                    } else {
                        dh_next = dhp;
                        dc_next = dcp;
                    }
                }
            }
            Architecture::BiRecurrent => {
                let (fc, bc) = self.bi_cells(&w);
                let mut g = split_mut(&mut grad, &sizes);
                let (gf, rest) = g.split_at_mut(3);
                let (gbk, go) = rest.split_at_mut(3);
                let [fwx, fwh, fb] = gf else { unreachable!() };
                let [bwx, bwh, bb] = gbk else { unreachable!() };
                let mut fg = CellGrads { wx: fwx, wh: fwh, b: fb };
                let mut bg = CellGrads { wx: bwx, wh: bwh, b: bb };
                for (t, s) in states.iter().enumerate() {
                    let (fs, bs) = bi_run(&fc, &bc, &Self::bi_inputs(s), self.h);
                    let feat = bi_feature(&fs, &bs);
                    let dl = logit_grad(&output(w[6], w[7], &feat), t);
                    outer_acc(&dl, &feat, go[0]);
                    add(go[1], &dl);
                    let mut dfeat = vec![0.0; 2 * hd];
                    matvec_t_acc(w[6], N_ACTIONS, 2 * hd, &dl, &mut dfeat);
                    chain_backward(&fc, &fs, &dfeat[..hd], &mut fg);
                    chain_backward(&bc, &bs, &dfeat[hd..], &mut bg);
                }
            }
        }
        Ok((objective, grad, dists))
    }

    /// Sum of log-probabilities of the taken actions, recomputed from scratch.
    pub fn episode_log_likelihood(&self, states: &[State], actions: &[Action]) -> Result<f64> {
        let mut ctx = self.new_context();
        let mut total = 0.0;
        for (s, a) in states.iter().zip(actions) {
            total += self.forward(s, &mut ctx)?.log_prob(*a);
        }
        Ok(total)
    }

    /// `self + scale * direction`, rounded to storage precision.
    pub(crate) fn stepped(&self, direction: &[f64], scale: f64) -> Self {
        let mut next = self.clone();
        for (w, d) in next.weights.iter_mut().zip(direction) {
            *w = to_storage(*w + scale * d);
        }
        next
    }
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn dense_relu(w: &[f64], b: &[f64], rows: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut z = b.to_vec();
    matvec_acc(w, rows, x.len(), x, &mut z);
    let a = z.iter().map(|v| v.max(0.0)).collect();
    (z, a)
}

fn output(w: &[f64], b: &[f64], feat: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    matvec_acc(w, N_ACTIONS, feat.len(), feat, &mut z);
    z
}

/// Runs the forward cell over window positions `0..=h` and the backward cell
/// over `2h..=h`; the last step of each chain sits on the centre word.
fn bi_run(f: &Cell<'_>, b: &Cell<'_>, inputs: &[Vec<f64>], h: usize) -> (Vec<CellStep>, Vec<CellStep>) {
    let chain = |cell: &Cell<'_>, order: &mut dyn Iterator<Item = usize>| {
        let mut hs = vec![0.0; cell.hidden];
        let mut cs = vec![0.0; cell.hidden];
        let mut steps = Vec::new();
        for j in order {
            let st = cell.step(&inputs[j], &hs, &cs);
            hs.clone_from(&st.h);
            cs.clone_from(&st.c);
            steps.push(st);
        }
        steps
    };
    let last = inputs.len() - 1;
    let fs = chain(f, &mut (0..=h));
    let bs = chain(b, &mut (h..=last).rev());
    (fs, bs)
}

fn bi_feature(fs: &[CellStep], bs: &[CellStep]) -> Vec<f64> {
    let mut feat = fs.last().unwrap().h.clone();
    feat.extend_from_slice(&bs.last().unwrap().h);
    feat
}

fn chain_backward(cell: &Cell<'_>, steps: &[CellStep], dh_last: &[f64], g: &mut CellGrads<'_>) {
    let mut dh = dh_last.to_vec();
    let mut dc = vec![0.0; cell.hidden];
    for st in steps.iter().rev() {
        let (dhp, dcp, _) = cell.backward(st, &dh, &dc, g);
        dh = dhp;
        dc = dcp;
    }
}
