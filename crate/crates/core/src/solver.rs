//! Capacity of the equivalent channel by alternating maximization.
//!
//! The iteration is the classical one: with output law `q = p W`, let
//! `D(t) = KL(W(.|t) || q)`. Then `sum_t p(t) D(t) = I(p)` is a lower bound and
//! `max_t D(t)` an upper bound on the capacity, and `p(t) <- p(t) exp D(t)`
//! never decreases `I(p)`. Iteration stops once the two bounds are within the
//! tolerance.
//!
//! Mutual information between strategies and `(y, v)` equals the mutual
//! information between strategies and `y` given `v`, because strategies are
//! drawn independently of the CSIR. Maximizing over the full observation is
//! therefore enough.

use serde::Serialize;

use crate::channel::{validate_spec, BlockChannelSpec, COMPOSED_TOL};
use crate::error::{Error, Result};
use crate::strategy::{build_equivalent_channel, EquivalentChannel, DEFAULT_STRATEGY_CAP};
use crate::table::ConditionalTable;

pub mod oracle;

pub use oracle::{brute_force_capacity, brute_force_capacity_table};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Stop once the upper/lower bound gap per block is below this, in bits.
    pub tol_bits: f64,
    pub max_iter: usize,
    /// Largest number of strategies [`capacity_bm`] will enumerate.
    pub strategy_cap: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_bits: 1e-9,
            max_iter: 100_000,
            strategy_cap: DEFAULT_STRATEGY_CAP,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(mut self, tol_bits: f64) -> Self {
        self.tol_bits = tol_bits;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_strategy_cap(mut self, cap: u64) -> Self {
        self.strategy_cap = cap;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.tol_bits > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol_bits
            )));
        }
        if self.strategy_cap == 0 {
            return Err(Error::InvalidArgument("strategy cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Bounds seen at one iteration, in bits per block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub lower_bits: f64,
    pub upper_bits: f64,
}

/// Raw result of maximizing `I(input; output)` over input laws.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxMutualInformation {
    /// Best lower bound, in bits.
    pub value_bits: f64,
    pub p_in: Vec<f64>,
    pub iterations: usize,
    /// Final upper minus lower bound, in bits.
    pub gap_bits: f64,
    pub converged: bool,
}

/// Maximizes `I(input; output)` over input laws of `kernel`.
pub fn maximize_mutual_information(
    kernel: &ConditionalTable,
    config: &SolverConfig,
) -> Result<MaxMutualInformation> {
    maximize_mutual_information_with(kernel, config, |_| {})
}

/// Same as [`maximize_mutual_information`], reporting the bounds after every
/// iteration.
pub fn maximize_mutual_information_with(
    kernel: &ConditionalTable,
    config: &SolverConfig,
    mut observe: impl FnMut(&IterationStats),
) -> Result<MaxMutualInformation> {
    config.check()?;
    if kernel.rows() == 0 {
        return Err(Error::InvalidArgument("channel has no inputs".into()));
    }
    kernel.check_stochastic(COMPOSED_TOL)?;

    // outputs no input can produce play no part
    let live: Vec<usize> = (0..kernel.cols())
        .filter(|&c| kernel.iter_rows().any(|r| r[c] > 0.0))
        .collect();
    let k = kernel.rows();
    let m = live.len();
    let w: Vec<f64> = kernel
        .iter_rows()
        .flat_map(|r| live.iter().map(move |&c| r[c]))
        .collect();
    let ln_w: Vec<f64> = w.iter().map(|&x| if x > 0.0 { x.ln() } else { 0.0 }).collect();

    let tol_nats = config.tol_bits * std::f64::consts::LN_2;
    let mut p = vec![1.0 / k as f64; k];
    let mut q = vec![0.0; m];
    let mut d = vec![0.0; k];
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        iterations += 1;
        q.fill(0.0);
        for (t, &pt) in p.iter().enumerate() {
            if pt > 0.0 {
                for (qo, &wo) in q.iter_mut().zip(&w[t * m..(t + 1) * m]) {
                    *qo += pt * wo;
                }
            }
        }
        let ln_q: Vec<f64> = q.iter().map(|&x| x.max(f64::MIN_POSITIVE).ln()).collect();
        for t in 0..k {
            let row = &w[t * m..(t + 1) * m];
            let lrow = &ln_w[t * m..(t + 1) * m];
            d[t] = row
                .iter()
                .zip(lrow)
                .zip(&ln_q)
                .filter(|((&wo, _), _)| wo > 0.0)
                .map(|((&wo, &lw), &lq)| wo * (lw - lq))
                .sum::<f64>()
                .max(0.0);
        }
        lower = p.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        upper = d.iter().copied().fold(0.0, f64::max);
        observe(&IterationStats {
            iteration: iterations,
            lower_bits: lower / std::f64::consts::LN_2,
            upper_bits: upper / std::f64::consts::LN_2,
        });
        if upper - lower < tol_nats {
            converged = true;
            break;
        }
        let mut total = 0.0;
        for (pt, &dt) in p.iter_mut().zip(&d) {
            *pt *= (dt - upper).exp();
            total += *pt;
        }
        for pt in p.iter_mut() {
            *pt = (*pt / total).max(0.0);
        }
    }

    Ok(MaxMutualInformation {
        value_bits: lower / std::f64::consts::LN_2,
        p_in: p,
        iterations,
        gap_bits: ((upper - lower) / std::f64::consts::LN_2).max(0.0),
        converged,
    })
}

/// Capacity of an equivalent channel, normalized per channel use.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityResult {
    #[serde(rename = "capacity")]
    pub capacity_bits_per_use: f64,
    /// Maximizing strategy law in canonical strategy order.
    #[serde(rename = "p_t")]
    pub optimal_p_t: Vec<f64>,
    pub iterations: usize,
    /// Upper minus lower bound, bits per channel use.
    pub gap: f64,
    pub converged: bool,
}

pub fn blahut_arimoto(channel: &EquivalentChannel, config: &SolverConfig) -> Result<CapacityResult> {
    blahut_arimoto_with(channel, config, |_| {})
}

/// [`blahut_arimoto`] with a per-iteration observer (bounds in bits per block).
pub fn blahut_arimoto_with(
    channel: &EquivalentChannel,
    config: &SolverConfig,
    observe: impl FnMut(&IterationStats),
) -> Result<CapacityResult> {
    let raw = maximize_mutual_information_with(channel.kernel(), config, observe)?;
    let n0 = channel.n0() as f64;
    Ok(CapacityResult {
        capacity_bits_per_use: raw.value_bits / n0,
        optimal_p_t: raw.p_in,
        iterations: raw.iterations,
        gap: raw.gap_bits / n0,
        converged: raw.converged,
    })
}

/// Capacity of a block-memoryless channel with causal CSIT and CSIR, in bits
/// per channel use.
pub fn capacity_bm(spec: &BlockChannelSpec, config: &SolverConfig) -> Result<CapacityResult> {
    config.check()?;
    let report = validate_spec(spec);
    if !report.is_valid() {
        return Err(Error::InvalidSpec(report));
    }
    let channel = build_equivalent_channel(spec, config.strategy_cap)?;
    blahut_arimoto(&channel, config)
}
