//! Monte Carlo simulation of random strategy codes.
//!
//! A message is mapped to `J` strategy indices, one per block, drawn i.i.d.
//! from a strategy law. Per block the simulator draws `(s, u, v)` from the
//! joint law, applies the strategy to `u` (the encoder sees the CSIT causally
//! because strategies only read prefixes), and draws `y` from the channel
//! kernel. The receiver sees `(y, v)` only and decodes by maximum likelihood
//! over the equivalent channel.
//!
//! Every trial draws from its own ChaCha stream, so results do not depend on
//! how trials are scheduled across threads.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{BlockChannelSpec, Spaces};
use crate::error::{Error, Result};
use crate::solver::{blahut_arimoto, SolverConfig};
use crate::strategy::{build_equivalent_channel, EquivalentChannel, StrategyIndex, StrategySpace};
use crate::table::check_distribution;

pub const DEFAULT_WORD_CAP: u64 = 1 << 20;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

const CODEBOOK_STREAM: u64 = 0;
const BATCH_STREAM_BASE: u64 = 1 << 63;

/// `2^ceil(J * n0 * R)`, or an error past `cap`.
pub fn word_count(rate_bits: f64, blocks: usize, n0: usize, cap: u64) -> Result<usize> {
    if !(rate_bits.is_finite() && rate_bits >= 0.0) {
        return Err(Error::InvalidArgument(format!("rate must be a nonnegative number, got {rate_bits}")));
    }
    if blocks == 0 {
        return Err(Error::InvalidArgument("block count must be at least 1".into()));
    }
    // shave rounding noise so that e.g. 0.1 * 10 stays 1 bit
    let bits = ((blocks * n0) as f64 * rate_bits - 1e-9).ceil().max(0.0);
    if bits >= 128.0 {
        return Err(Error::CodebookTooLarge { words: None, cap });
    }
    let words = 1u128 << (bits as u32);
    if words > cap as u128 {
        return Err(Error::CodebookTooLarge { words: Some(words), cap });
    }
    Ok(words as usize)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    rate_bits: f64,
    blocks: usize,
    word_count: usize,
    seed: u64,
    entries: Vec<StrategyIndex>,
}

impl Codebook {
    pub fn rate_bits(&self) -> f64 {
        self.rate_bits
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn word_count(&self) -> usize {
        self.word_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn word(&self, w: usize) -> &[StrategyIndex] {
        &self.entries[w * self.blocks..(w + 1) * self.blocks]
    }

    pub fn words(&self) -> impl Iterator<Item = &[StrategyIndex]> {
        self.entries.chunks_exact(self.blocks)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodebookParams {
    pub blocks: usize,
    pub n0: usize,
    pub seed: u64,
    pub word_cap: u64,
}

/// Draws every codeword entry i.i.d. from `p_t`. Same seed, same codebook.
pub fn generate_codebook(p_t: &[f64], rate_bits: f64, params: &CodebookParams) -> Result<Codebook> {
    let mut rng = stream_rng(params.seed, CODEBOOK_STREAM);
    generate_codebook_with(p_t, rate_bits, params, &mut rng)
}

fn generate_codebook_with(
    p_t: &[f64],
    rate_bits: f64,
    params: &CodebookParams,
    rng: &mut impl Rng,
) -> Result<Codebook> {
    check_distribution(p_t, 1e-9)?;
    let words = word_count(rate_bits, params.blocks, params.n0, params.word_cap)?;
    let dist = WeightedIndex::new(p_t).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let entries = (0..words * params.blocks)
        .map(|_| StrategyIndex(dist.sample(rng)))
        .collect();
    Ok(Codebook {
        rate_bits,
        blocks: params.blocks,
        word_count: words,
        seed: params.seed,
        entries,
    })
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One simulated block, all tuples flattened.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockDraw {
    pub s: usize,
    pub u: usize,
    pub v: usize,
    pub x: usize,
    pub y: usize,
}

/// Samples states, side information and outputs of one spec.
#[derive(Clone, Debug)]
pub struct BlockSampler {
    spaces: Spaces,
    joint: WeightedIndex<f64>,
    rows: Vec<WeightedIndex<f64>>,
    u_tuples: Vec<Vec<usize>>,
}

impl BlockSampler {
    pub fn new(spec: &BlockChannelSpec) -> Result<Self> {
        let spaces = spec.spaces();
        let to_err = |e: rand::distr::weighted::Error| Error::InvalidDistribution(e.to_string());
        let joint = WeightedIndex::new(spec.side_info_joint()).map_err(to_err)?;
        let rows = spec
            .channel_kernel()
            .iter_rows()
            .map(|r| WeightedIndex::new(r).map_err(to_err))
            .collect::<Result<_>>()?;
        Ok(Self {
            spaces,
            joint,
            rows,
            u_tuples: spaces.u.iter().collect(),
        })
    }

    pub fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    /// `(s, u, v)` from the joint law.
    pub fn side_info<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize, usize) {
        let i = self.joint.sample(rng);
        let nv = self.spaces.v.count();
        let nu = self.spaces.u.count();
        (i / (nu * nv), (i / nv) % nu, i % nv)
    }

    pub fn output<R: Rng + ?Sized>(&self, x: usize, s: usize, rng: &mut R) -> usize {
        self.rows[x * self.spaces.s.count() + s].sample(rng)
    }

    /// One block sent with strategy `t`.
    pub fn block<R: Rng + ?Sized>(&self, space: &StrategySpace, t: StrategyIndex, rng: &mut R) -> BlockDraw {
        let (s, u, v) = self.side_info(rng);
        let x = space.apply_index(t, &self.u_tuples[u]);
        let y = self.output(x, s, rng);
        BlockDraw { s, u, v, x, y }
    }
}

/// What one codeword transmission produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub blocks: Vec<BlockDraw>,
    spaces_y: crate::tuple::TupleSpace,
    spaces_v: crate::tuple::TupleSpace,
}

impl Transmission {
    /// `y^n` as a symbol sequence.
    pub fn y_sequence(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| self.spaces_y.decode(b.y)).collect()
    }

    /// `v^n` as a symbol sequence.
    pub fn v_sequence(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| self.spaces_v.decode(b.v)).collect()
    }
}

pub fn simulate_transmission<R: Rng + ?Sized>(
    sampler: &BlockSampler,
    space: &StrategySpace,
    codebook: &Codebook,
    w: usize,
    rng: &mut R,
) -> Result<Transmission> {
    if w >= codebook.word_count {
        return Err(Error::IndexOutOfRange {
            index: w as u64,
            count: codebook.word_count as u64,
        });
    }
    let blocks = codebook
        .word(w)
        .iter()
        .map(|&t| sampler.block(space, t, rng))
        .collect();
    Ok(Transmission {
        blocks,
        spaces_y: sampler.spaces.y,
        spaces_v: sampler.spaces.v,
    })
}

/// Maximum-likelihood decoder over the equivalent channel.
#[derive(Clone, Debug)]
pub struct MlDecoder {
    log_kernel: Vec<f64>,
    cols: usize,
    spaces: Spaces,
    n0: usize,
}

impl MlDecoder {
    pub fn new(channel: &EquivalentChannel) -> Self {
        Self {
            log_kernel: channel.kernel().as_slice().iter().map(|p| p.ln()).collect(),
            cols: channel.kernel().cols(),
            spaces: *channel.spaces(),
            n0: channel.n0(),
        }
    }

    /// Flattened `(y, v)` columns per block from symbol sequences.
    pub fn observations(&self, y: &[usize], v: &[usize]) -> Result<Vec<usize>> {
        if y.len() != v.len() || !y.len().is_multiple_of(self.n0) {
            return Err(Error::LengthMismatch {
                what: "observation sequences",
                expected: y.len(),
                found: v.len(),
            });
        }
        Ok(y.chunks(self.n0)
            .zip(v.chunks(self.n0))
            .map(|(yb, vb)| self.spaces.obs_index(self.spaces.y.encode(yb), self.spaces.v.encode(vb)))
            .collect())
    }

    /// `sum_j ln p(y_j, v_j | t_j)` in nats.
    pub fn log_likelihood(&self, observations: &[usize], word: &[StrategyIndex]) -> f64 {
        word.iter()
            .zip(observations)
            .map(|(t, &c)| self.log_kernel[t.0 * self.cols + c])
            .sum()
    }

    /// Most likely message; ties go to the lowest index.
    pub fn decode(&self, observations: &[usize], codebook: &Codebook) -> usize {
        let mut best = 0;
        let mut best_ll = f64::NEG_INFINITY;
        for (w, word) in codebook.words().enumerate() {
            let ll = self.log_likelihood(observations, word);
            if ll > best_ll {
                best_ll = ll;
                best = w;
            }
        }
        best
    }
}

/// Decodes symbol sequences `y^n`, `v^n` against `codebook`.
pub fn decode_ml(y: &[usize], v: &[usize], codebook: &Codebook, channel: &EquivalentChannel) -> Result<usize> {
    let decoder = MlDecoder::new(channel);
    let obs = decoder.observations(y, v)?;
    if obs.len() != codebook.blocks {
        return Err(Error::LengthMismatch {
            what: "observed blocks",
            expected: codebook.blocks,
            found: obs.len(),
        });
    }
    Ok(decoder.decode(&obs, codebook))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodebookMode {
    /// One codebook for the whole run; measures a concrete code.
    Fixed,
    /// A fresh codebook every `batch` trials; measures the random ensemble.
    Resampled { batch: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimulationConfig {
    pub trials: usize,
    pub seed: u64,
    pub codebook: CodebookMode,
    pub word_cap: u64,
}

impl SimulationConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            codebook: CodebookMode::Fixed,
            word_cap: DEFAULT_WORD_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub rate_bits: f64,
    #[serde(rename = "J")]
    pub blocks: usize,
    pub trials: usize,
    pub errors: usize,
    pub p_e_hat: f64,
    pub ci_95: [f64; 2],
    pub seed: u64,
    pub word_count: usize,
}

pub const CSV_HEADER: &str = "rate,J,trials,errors,p_e_hat,ci_low,ci_high,seed";

impl SimulationReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.rate_bits,
            self.blocks,
            self.trials,
            self.errors,
            self.p_e_hat,
            self.ci_95[0],
            self.ci_95[1],
            self.seed
        )
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(errors: usize, trials: usize) -> [f64; 2] {
    if trials == 0 {
        return [0.0, 1.0];
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    [(center - half).max(0.0).min(p), (center + half).min(1.0).max(p)]
}

/// Everything needed to run trials on one spec with one strategy law.
#[derive(Clone, Debug)]
pub struct Simulator {
    channel: EquivalentChannel,
    p_t: Vec<f64>,
    sampler: BlockSampler,
    decoder: MlDecoder,
}

impl Simulator {
    pub fn new(spec: &BlockChannelSpec, p_t: Vec<f64>, strategy_cap: u64) -> Result<Self> {
        let channel = build_equivalent_channel(spec, strategy_cap)?;
        if p_t.len() != channel.t_count() {
            return Err(Error::LengthMismatch {
                what: "strategy distribution",
                expected: channel.t_count(),
                found: p_t.len(),
            });
        }
        check_distribution(&p_t, 1e-9)?;
        Ok(Self {
            decoder: MlDecoder::new(&channel),
            sampler: BlockSampler::new(spec)?,
            channel,
            p_t,
        })
    }

    /// Uses the capacity-achieving strategy law.
    pub fn optimal(spec: &BlockChannelSpec, solver: &SolverConfig) -> Result<Self> {
        let channel = build_equivalent_channel(spec, solver.strategy_cap)?;
        let result = blahut_arimoto(&channel, solver)?;
        Ok(Self {
            decoder: MlDecoder::new(&channel),
            sampler: BlockSampler::new(spec)?,
            channel,
            p_t: result.optimal_p_t,
        })
    }

    pub fn channel(&self) -> &EquivalentChannel {
        &self.channel
    }

    pub fn p_t(&self) -> &[f64] {
        &self.p_t
    }

    pub fn sampler(&self) -> &BlockSampler {
        &self.sampler
    }

    pub fn decoder(&self) -> &MlDecoder {
        &self.decoder
    }

    fn params(&self, blocks: usize, config: &SimulationConfig) -> CodebookParams {
        CodebookParams {
            blocks,
            n0: self.channel.n0(),
            seed: config.seed,
            word_cap: config.word_cap,
        }
    }

    pub fn codebook(&self, rate_bits: f64, blocks: usize, config: &SimulationConfig) -> Result<Codebook> {
        generate_codebook(&self.p_t, rate_bits, &self.params(blocks, config))
    }

    fn trial(&self, codebook: &Codebook, seed: u64, k: usize) -> bool {
        let mut rng = stream_rng(seed, 1 + k as u64);
        let w = rng.random_range(0..codebook.word_count);
        let tx = simulate_transmission(&self.sampler, self.channel.strategies(), codebook, w, &mut rng)
            .expect("message index is in range");
        let obs: Vec<usize> = tx
            .blocks
            .iter()
            .map(|b| self.sampler.spaces.obs_index(b.y, b.v))
            .collect();
        self.decoder.decode(&obs, codebook) != w
    }

    /// Estimates the block error probability at `rate_bits` with `blocks`
    /// blocks per codeword.
    pub fn estimate(&self, rate_bits: f64, blocks: usize, config: &SimulationConfig) -> Result<SimulationReport> {
        if config.trials == 0 {
            return Err(Error::InvalidArgument("at least one trial is required".into()));
        }
        let params = self.params(blocks, config);
        let seed = config.seed;
        let (errors, word_count) = match config.codebook {
            CodebookMode::Fixed => {
                let cb = generate_codebook(&self.p_t, rate_bits, &params)?;
                let errors = (0..config.trials)
                    .into_par_iter()
                    .filter(|&k| self.trial(&cb, seed, k))
                    .count();
                (errors, cb.word_count)
            }
            CodebookMode::Resampled { batch } => {
                if batch == 0 {
                    return Err(Error::InvalidArgument("batch size must be at least 1".into()));
                }
                let words = word_count(rate_bits, blocks, params.n0, params.word_cap)?;
                let batches = config.trials.div_ceil(batch);
                let errors = (0..batches)
                    .into_par_iter()
                    .map(|b| -> Result<usize> {
                        let mut rng = stream_rng(seed, BATCH_STREAM_BASE | b as u64);
                        let cb = generate_codebook_with(&self.p_t, rate_bits, &params, &mut rng)?;
                        let end = ((b + 1) * batch).min(config.trials);
                        Ok((b * batch..end).filter(|&k| self.trial(&cb, seed, k)).count())
                    })
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .sum();
                (errors, words)
            }
        };
        Ok(SimulationReport {
            rate_bits,
            blocks,
            trials: config.trials,
            errors,
            p_e_hat: errors as f64 / config.trials as f64,
            ci_95: wilson_interval(errors, config.trials),
            seed,
            word_count,
        })
    }
}

/// Error-rate estimate with the capacity-achieving strategy law and a fixed
/// codebook.
pub fn estimate_error_rate(
    spec: &BlockChannelSpec,
    rate_bits: f64,
    blocks: usize,
    trials: usize,
    seed: u64,
) -> Result<SimulationReport> {
    Simulator::optimal(spec, &SolverConfig::default())?.estimate(rate_bits, blocks, &SimulationConfig::new(trials, seed))
}
