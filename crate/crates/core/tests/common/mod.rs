#![allow(dead_code)]

use std::path::PathBuf;

use bm_capacity::specfile::parse_spec;
use bm_capacity::BlockChannelSpec;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

pub fn bundled(name: &str) -> BlockChannelSpec {
    parse_spec(spec_path(name)).unwrap()
}

/// Bundled specs with positive capacity.
pub const POSITIVE_CAPACITY_SPECS: [&str; 5] = [
    "inverter-pair.toml",
    "erasure-csir.toml",
    "noisy-feedback.toml",
    "quantized-feedback.toml",
    "block-fading.toml",
];

#[derive(Debug)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub critical: f64,
    pub rejected: bool,
}

/// Pearson goodness-of-fit of `observed` counts against `probs`, pooling cells
/// with expected count below 5. Observing a zero-probability cell rejects
/// outright.
pub fn chi_square(observed: &[u64], probs: &[f64], alpha: f64) -> ChiSquare {
    chi_square_grouped(&[(observed.to_vec(), probs.to_vec())], alpha)
}

/// Combined test over independent groups (for conditional laws): statistics
/// and degrees of freedom add up.
pub fn chi_square_grouped(groups: &[(Vec<u64>, Vec<f64>)], alpha: f64) -> ChiSquare {
    let mut statistic = 0.0;
    let mut df = 0;
    for (observed, probs) in groups {
        assert_eq!(observed.len(), probs.len());
        let n: u64 = observed.iter().sum();
        if n == 0 {
            continue;
        }
        let mut cells: Vec<(f64, f64)> = Vec::new();
        let mut pooled = (0.0, 0.0);
        for (&o, &p) in observed.iter().zip(probs) {
            if p <= 1e-15 {
                if o > 0 {
                    return ChiSquare {
                        statistic: f64::INFINITY,
                        df,
                        critical: 0.0,
                        rejected: true,
                    };
                }
                continue;
            }
            let e = p * n as f64;
            if e < 5.0 {
                pooled.0 += o as f64;
                pooled.1 += e;
            } else {
                cells.push((o as f64, e));
            }
        }
        if pooled.1 > 0.0 {
            cells.push(pooled);
        }
        if cells.len() < 2 {
            continue;
        }
        statistic += cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum::<f64>();
        df += cells.len() - 1;
    }
    if df == 0 {
        return ChiSquare {
            statistic,
            df,
            critical: 0.0,
            rejected: false,
        };
    }
    let critical = ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - alpha);
    ChiSquare {
        statistic,
        df,
        critical,
        rejected: statistic > critical,
    }
}

/// Samples `n` blocks with strategies drawn uniformly and tests both the
/// `(s, u, v)` joint and `y` given `(x, s)`.
pub fn sampler_fidelity(spec: &BlockChannelSpec, n: usize, seed: u64, alpha: f64) -> (ChiSquare, ChiSquare) {
    use bm_capacity::sim::BlockSampler;
    use bm_capacity::{StrategyIndex, StrategySpace, DEFAULT_STRATEGY_CAP};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let sampler = BlockSampler::new(spec).unwrap();
    let space = StrategySpace::for_dims(spec.dims(), spec.n0(), DEFAULT_STRATEGY_CAP).unwrap();
    let sp = spec.spaces();
    let (ns, nx, ny) = (sp.s.count(), sp.x.count(), sp.y.count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut joint = vec![0u64; spec.side_info_joint().len()];
    let mut outputs = vec![vec![0u64; ny]; nx * ns];
    for _ in 0..n {
        let t = StrategyIndex(rng.random_range(0..space.count()));
        let b = sampler.block(&space, t, &mut rng);
        joint[spec.joint_index(b.s, b.u, b.v)] += 1;
        outputs[b.x * ns + b.s][b.y] += 1;
    }
    let side = chi_square(&joint, spec.side_info_joint(), alpha);
    let kernel = spec.channel_kernel();
    let groups: Vec<(Vec<u64>, Vec<f64>)> = outputs
        .into_iter()
        .enumerate()
        .map(|(r, counts)| (counts, kernel.row(r).to_vec()))
        .collect();
    (side, chi_square_grouped(&groups, alpha))
}
