//! Glauber dynamics: heat-bath updates, exact transition matrices, empirical
//! total-variation curves and a telescoping partition-function estimator.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gibbs::{exact_summary, Enumerator, GibbsSpec, Pinning, Spin, DEFAULT_ENUM_CAP};
use crate::graph::{Graph, Vertex};
use crate::spectral::LabeledMatrix;

/// Largest support for [`exact_transition_matrix`].
pub const DEFAULT_STATE_CAP: usize = 1 << 16;
/// Mixing threshold on total variation.
pub const MIXING_TV: f64 = 0.25;

/// Generator for chain `stream` of an experiment seeded with `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    pub sigma: Vec<Spin>,
    pub step: u64,
}

impl ChainState {
    /// The all −1 configuration, which always has positive weight.
    pub fn all_minus(n: usize) -> Self {
        ChainState {
            sigma: vec![Spin::Minus; n],
            step: 0,
        }
    }

    pub fn mask(&self) -> u64 {
        config_mask(&self.sigma)
    }
}

fn config_mask(sigma: &[Spin]) -> u64 {
    sigma
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_plus())
        .fold(0, |m, (v, _)| m | 1 << v)
}

/// P[σ(v) = +1 | neighbours of v in `sigma`].
pub fn conditional_plus(spec: &GibbsSpec, g: &Graph, sigma: &[Spin], v: Vertex) -> f64 {
    let plus = g.neighbors(v).iter().filter(|&&x| sigma[x].is_plus()).count();
    let (wp, wm) = spec.local_weights(plus, g.degree(v) - plus);
    wp / (wp + wm)
}

fn heat_bath<R: Rng>(spec: &GibbsSpec, g: &Graph, sigma: &mut [Spin], v: Vertex, rng: &mut R) {
    let p = conditional_plus(spec, g, sigma, v);
    sigma[v] = if rng.random::<f64>() < p { Spin::Plus } else { Spin::Minus };
}

/// One step: a uniformly random vertex is resampled from its conditional
/// marginal.
pub fn glauber_step<R: Rng>(spec: &GibbsSpec, g: &Graph, state: &mut ChainState, rng: &mut R) {
    let v = rng.random_range(0..g.n());
    heat_bath(spec, g, &mut state.sigma, v, rng);
    state.step += 1;
}

/// One step restricted to the listed free vertices.
pub fn glauber_step_free<R: Rng>(spec: &GibbsSpec, g: &Graph, free: &[Vertex], state: &mut ChainState, rng: &mut R) {
    let v = free[rng.random_range(0..free.len())];
    heat_bath(spec, g, &mut state.sigma, v, rng);
    state.step += 1;
}

/// Support configurations (bit v set iff σ(v)=+1) and their probabilities.
pub fn gibbs_distribution(spec: &GibbsSpec, g: &Graph, cap: usize) -> Result<(Vec<u64>, Vec<f64>)> {
    let e = Enumerator::new(spec, g, &Pinning::new(), DEFAULT_ENUM_CAP)?;
    let mut states = Vec::new();
    let mut weights = Vec::new();
    let mut overflow = false;
    e.for_each(|w, mask| {
        if states.len() < cap {
            states.push(mask);
            weights.push(w);
        } else {
            overflow = true;
        }
    });
    if overflow {
        return Err(Error::Resource {
            what: "support states",
            size: cap as u128 + 1,
            cap: cap as u128,
        });
    }
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by_key(|&i| states[i]);
    let z: f64 = weights.iter().sum();
    Ok((
        order.iter().map(|&i| states[i]).collect(),
        order.iter().map(|&i| weights[i] / z).collect(),
    ))
}

fn mask_to_sigma(n: usize, mask: u64) -> Vec<Spin> {
    (0..n)
        .map(|v| if mask >> v & 1 == 1 { Spin::Plus } else { Spin::Minus })
        .collect()
}

/// Transition matrix of the chain over the support, labeled by bitmask.
pub fn exact_transition_matrix(spec: &GibbsSpec, g: &Graph) -> Result<LabeledMatrix<u64>> {
    exact_transition_matrix_capped(spec, g, DEFAULT_STATE_CAP)
}

pub fn exact_transition_matrix_capped(spec: &GibbsSpec, g: &Graph, cap: usize) -> Result<LabeledMatrix<u64>> {
    let n = g.n();
    let (states, _) = gibbs_distribution(spec, g, cap)?;
    let mut m = LabeledMatrix::zeros(states.clone(), states.clone())?;
    for (i, &x) in states.iter().enumerate() {
        let sigma = mask_to_sigma(n, x);
        for v in 0..n {
            let p = conditional_plus(spec, g, &sigma, v) / n as f64;
            let q = 1.0 / n as f64 - p;
            for (target, prob) in [(x | 1 << v, p), (x & !(1 << v), q)] {
                if prob == 0.0 {
                    continue;
                }
                let j = m
                    .col_of(&target)
                    .ok_or_else(|| Error::Domain("transition leaves the support".into()))?;
                m.set(i, j, m.get(i, j) + prob);
            }
        }
    }
    Ok(m)
}

/// Solves πP = π, Σπ = 1 by LU decomposition.
pub fn stationary_distribution(p: &LabeledMatrix<u64>) -> Result<Vec<f64>> {
    let d = p.nrows();
    if d == 0 {
        return invalid("empty transition matrix");
    }
    let mut a = DMatrix::from_fn(d, d, |i, j| p.get(j, i) - if i == j { 1.0 } else { 0.0 });
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(d);
    b[d - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Convergence("singular stationary system".into()))?;
    Ok(x.iter().copied().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvMode {
    /// Full-state mode when chains ≥ 10·|support|, marginal mode otherwise.
    Auto,
    Full,
    /// Largest per-vertex marginal discrepancy; a lower bound on TV.
    Marginal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub tv_curve: Vec<(u64, f64)>,
    pub threshold_step: Option<u64>,
    pub chains: usize,
    pub seed: u64,
    pub mode: TvMode,
}

/// Checkpoint times 0, s, 2s, …, horizon with at most ~500 entries.
fn checkpoints(horizon: u64) -> Vec<u64> {
    let stride = horizon.div_ceil(500).max(1);
    let mut ts: Vec<u64> = (0..=horizon).step_by(stride as usize).collect();
    if ts.last() != Some(&horizon) {
        ts.push(horizon);
    }
    ts
}

pub fn estimate_tv_curve(
    spec: &GibbsSpec,
    g: &Graph,
    start: &[Spin],
    chains: usize,
    horizon: u64,
    seed: u64,
    mode: TvMode,
) -> Result<MixingEstimate> {
    let n = g.n();
    if start.len() != n || n == 0 || n > 63 {
        return invalid("start configuration must cover 1..=63 vertices");
    }
    if chains == 0 {
        return invalid("need at least one chain");
    }
    let (states, probs) = gibbs_distribution(spec, g, DEFAULT_STATE_CAP)?;
    let start_mask = config_mask(start);
    if states.binary_search(&start_mask).is_err() {
        return invalid("start configuration has zero weight");
    }
    let mode = match mode {
        TvMode::Auto if chains >= 10 * states.len() => TvMode::Full,
        TvMode::Auto => TvMode::Marginal,
        m => m,
    };
    let ts = checkpoints(horizon);
    let trajectories: Vec<Vec<u64>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(seed, c as u64);
            let mut st = ChainState {
                sigma: start.to_vec(),
                step: 0,
            };
            let mut out = Vec::with_capacity(ts.len());
            for &t in &ts {
                while st.step < t {
                    glauber_step(spec, g, &mut st, &mut rng);
                }
                out.push(st.mask());
            }
            out
        })
        .collect();
    let tv_curve: Vec<(u64, f64)> = match mode {
        TvMode::Full => {
            ts.iter()
                .enumerate()
                .map(|(k, &t)| {
                    let mut counts: HashMap<u64, usize> = HashMap::new();
                    for tr in &trajectories {
                        *counts.entry(tr[k]).or_default() += 1;
                    }
                    let mut dist = 0.0;
                    for (s, &p) in states.iter().zip(&probs) {
                        let emp = counts.remove(s).unwrap_or(0) as f64 / chains as f64;
                        dist += (emp - p).abs();
                    }
                    // leftovers lie outside the support; integer sum keeps order irrelevant
                    dist += counts.values().sum::<usize>() as f64 / chains as f64;
                    (t, (0.5 * dist).min(1.0))
                })
                .collect()
        }
        _ => {
            let exact = exact_summary(spec, g, &Pinning::new())?;
            ts.iter()
                .enumerate()
                .map(|(k, &t)| {
                    let worst = (0..n)
                        .map(|v| {
                            let hits = trajectories.iter().filter(|tr| tr[k] >> v & 1 == 1).count();
                            (hits as f64 / chains as f64 - exact.marginals[&v]).abs()
                        })
                        .fold(0.0, f64::max);
                    (t, worst)
                })
                .collect()
        }
    };
    let threshold_step = tv_curve.iter().find(|(_, tv)| *tv <= MIXING_TV).map(|&(t, _)| t);
    Ok(MixingEstimate {
        tv_curve,
        threshold_step,
        chains,
        seed,
        mode,
    })
}

/// Tuning for [`estimate_partition_function`].
#[derive(Clone, Debug)]
pub struct ZOptions {
    /// Burn-in steps; default ⌈8 m ln m⌉ for m free vertices.
    pub burn_in: Option<u64>,
    /// Steps between samples; default m.
    pub thinning: Option<u64>,
    pub pilot_samples: usize,
    /// Multiplier on the sample sizes derived from the pilot variances.
    pub safety: f64,
    pub min_samples: usize,
    pub max_samples: usize,
    /// Marginals below this trigger a warning and a larger rerun.
    pub floor: f64,
}

impl Default for ZOptions {
    fn default() -> Self {
        ZOptions {
            burn_in: None,
            thinning: None,
            pilot_samples: 200,
            safety: 2.0,
            min_samples: 50,
            max_samples: 2_000_000,
            floor: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZEstimate {
    pub z_hat: f64,
    pub epsilon: f64,
    pub confidence: f64,
    pub seed: u64,
    pub groups: usize,
    pub samples_per_stage: Vec<usize>,
    pub warnings: Vec<String>,
}

/// One telescoping stage: vertices before `target` pinned to −1.
struct Stage {
    target: Vertex,
    free: Vec<Vertex>,
    /// Exact value when every neighbour of the target is pinned.
    exact: Option<f64>,
}

impl Stage {
    fn burn_in(&self, opts: &ZOptions) -> u64 {
        let m = self.free.len().max(2) as f64;
        opts.burn_in.unwrap_or((8.0 * m * m.ln()).ceil() as u64)
    }

    fn thinning(&self, opts: &ZOptions) -> u64 {
        opts.thinning.unwrap_or(self.free.len() as u64).max(1)
    }

    /// Rao–Blackwellized samples of P[σ(target) = −1 | neighbours].
    fn sample(&self, spec: &GibbsSpec, g: &Graph, opts: &ZOptions, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut st = ChainState::all_minus(g.n());
        for _ in 0..self.burn_in(opts) {
            glauber_step_free(spec, g, &self.free, &mut st, rng);
        }
        let thin = self.thinning(opts);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            for _ in 0..thin {
                glauber_step_free(spec, g, &self.free, &mut st, rng);
            }
            out.push(1.0 - conditional_plus(spec, g, &st.sigma, self.target));
        }
        out
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

/// Ẑ = w(σ*) / Π_i μ̂(σ(v_i) = −1 | v_1..v_{i−1} = −1) with σ* = all −1,
/// combined over ⌈8 ln(1/(1−confidence))⌉ independent groups by the median.
pub fn estimate_partition_function(
    spec: &GibbsSpec,
    g: &Graph,
    epsilon: f64,
    confidence: f64,
    seed: u64,
    opts: &ZOptions,
) -> Result<ZEstimate> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(confidence > 0.0 && confidence < 1.0) {
        return invalid("need 0 < epsilon < 1 and 0 < confidence < 1");
    }
    let n = g.n();
    let stages: Vec<Stage> = (0..n)
        .map(|i| {
            let free: Vec<Vertex> = (i..n).collect();
            let all_pinned = g.neighbors(i).iter().all(|&x| x < i);
            let exact = all_pinned.then(|| {
                let (wp, wm) = spec.local_weights(0, g.degree(i));
                wm / (wp + wm)
            });
            Stage { target: i, free, exact }
        })
        .collect();
    let mut warnings = Vec::new();
    // pilot: per-stage relative variance of the estimator
    let mut rel_sd = vec![0.0; n];
    let mut boost = vec![1.0; n];
    for (i, st) in stages.iter().enumerate() {
        if st.exact.is_some() {
            continue;
        }
        let mut rng = chain_rng(seed, u64::MAX - i as u64);
        let xs = st.sample(spec, g, opts, opts.pilot_samples.max(2), &mut rng);
        let (m, v) = mean_var(&xs);
        if m < opts.floor {
            warnings.push(format!(
                "stage {i}: pilot marginal {m:.3e} below floor {:.0e}; sample size raised",
                opts.floor
            ));
            boost[i] = 4.0;
        }
        rel_sd[i] = (v.max(0.0) / (m * m).max(f64::MIN_POSITIVE)).sqrt().max(1e-3);
    }
    // Chebyshev per group with total relative variance ε²/(4·safety),
    // split across stages proportionally to their relative deviations
    let total_sd: f64 = rel_sd.iter().sum();
    let samples: Vec<usize> = (0..n)
        .map(|i| {
            if stages[i].exact.is_some() {
                return 0;
            }
            let s = 4.0 * opts.safety * total_sd * rel_sd[i] * boost[i] / (epsilon * epsilon);
            (s.ceil() as usize).clamp(opts.min_samples, opts.max_samples)
        })
        .collect();
    let groups = ((8.0 * (1.0 / (1.0 - confidence)).ln()).ceil() as usize).max(1) | 1;
    let log_ref = g.edge_count() as f64 * spec.gamma().ln();
    let group_logs: Vec<(f64, Vec<String>)> = (0..groups)
        .into_par_iter()
        .map(|gi| {
            let mut log_z = log_ref;
            let mut notes = Vec::new();
            for (i, st) in stages.iter().enumerate() {
                let mu = match st.exact {
                    Some(x) => x,
                    None => {
                        let mut rng = chain_rng(seed, (gi * n + i) as u64);
                        let (mut m, _) = mean_var(&st.sample(spec, g, opts, samples[i], &mut rng));
                        if m < opts.floor {
                            notes.push(format!("group {gi} stage {i}: marginal {m:.3e} below floor; rerun with 4x samples"));
                            let more = (samples[i] * 4).min(opts.max_samples);
                            m = mean_var(&st.sample(spec, g, opts, more, &mut rng)).0;
                        }
                        m
                    }
                };
                log_z -= mu.ln();
            }
            (log_z, notes)
        })
        .collect();
    let mut logs: Vec<f64> = group_logs.iter().map(|(l, _)| *l).collect();
    for (_, notes) in group_logs {
        warnings.extend(notes);
    }
    logs.sort_by(f64::total_cmp);
    let z_hat = logs[logs.len() / 2].exp();
    Ok(ZEstimate {
        z_hat,
        epsilon,
        confidence,
        seed,
        groups,
        samples_per_stage: samples,
        warnings,
    })
}
