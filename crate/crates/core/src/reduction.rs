//! The special case where the CSIT is a deterministic function of the CSIR.
//!
//! When `u = k(v)` the receiver knows which input law the transmitter used, and
//! the capacity is the `p(u)`-average of per-CSIT capacities of the channel
//! `x -> (y, v)`. For `n0 = 1` that formula is computed here directly over
//! input laws `p(x | u)`, with no strategy enumeration, and compared with the
//! strategy-based capacity. For any `n0`, [`verify_reduction`] also checks
//! that a strategy law and the input law it induces carry the same
//! information, `I(T; Y | V) = I(X; Y | V)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{compose_observation_kernel, BlockChannelSpec, ObservationKernel};
use crate::error::{Error, Result};
use crate::info::{conditional_mutual_information, TripleJoint};
use crate::random::random_distribution;
use crate::solver::{blahut_arimoto, maximize_mutual_information, SolverConfig};
use crate::strategy::{build_equivalent_channel, EquivalentChannel, StrategyIndex, StrategySpace};
use crate::table::ConditionalTable;
use crate::tuple::TupleSpace;

/// Conditional mass a CSIT tuple needs to count as determined by the CSIR.
pub const POINT_MASS_THRESHOLD: f64 = 1.0 - 1e-12;

/// `u = k(v)`, defined for CSIR tuples of positive probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicCsitMap {
    k: Vec<Option<usize>>,
    u_space: TupleSpace,
    v_space: TupleSpace,
}

impl DeterministicCsitMap {
    /// Flattened CSIT tuple for flattened CSIR tuple `v`.
    pub fn get(&self, v: usize) -> Option<usize> {
        self.k.get(v).copied().flatten()
    }

    pub fn is_identity(&self) -> bool {
        self.k.iter().enumerate().all(|(v, u)| u.is_none_or(|u| u == v))
    }

    pub fn entries(&self) -> Vec<MapEntry> {
        self.k
            .iter()
            .enumerate()
            .filter_map(|(v, u)| {
                u.map(|u| MapEntry {
                    v: self.v_space.decode(v),
                    u: self.u_space.decode(u),
                })
            })
            .collect()
    }
}

impl Serialize for DeterministicCsitMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries().serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MapEntry {
    pub v: Vec<usize>,
    pub u: Vec<usize>,
}

/// Returns `k` if every CSIR tuple of positive probability pins down the CSIT
/// tuple.
pub fn detect_deterministic_csit(spec: &BlockChannelSpec) -> Option<DeterministicCsitMap> {
    let sp = spec.spaces();
    let (ns, nu, nv) = (sp.s.count(), sp.u.count(), sp.v.count());
    let mut p_uv = vec![0.0; nu * nv];
    for s in 0..ns {
        for u in 0..nu {
            for v in 0..nv {
                p_uv[u * nv + v] += spec.side_info_joint()[(s * nu + u) * nv + v];
            }
        }
    }
    let mut k = vec![None; nv];
    for (v, slot) in k.iter_mut().enumerate() {
        let pv: f64 = (0..nu).map(|u| p_uv[u * nv + v]).sum();
        if pv <= 0.0 {
            continue;
        }
        let (u, best) = (0..nu)
            .map(|u| (u, p_uv[u * nv + v]))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if best / pv < POINT_MASS_THRESHOLD {
            return None;
        }
        *slot = Some(u);
    }
    Some(DeterministicCsitMap {
        k,
        u_space: sp.u,
        v_space: sp.v,
    })
}

/// Capacity from per-CSIT maximizations, for `n0 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmCapacity {
    pub capacity_bits_per_use: f64,
    pub per_csit: Vec<PerCsit>,
    #[serde(skip)]
    pub p_x_given_u: ConditionalTable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerCsit {
    pub u: usize,
    pub p_u: f64,
    pub capacity_bits: f64,
    pub converged: bool,
}

/// `sum_u p(u) max_{p(x|u)} I(X; Y, V | u)` for `n0 = 1`.
///
/// Given `u`, the input is independent of the CSIR, so `I(X; Y, V | u)` equals
/// `I(X; Y | V, u)` and each term is a plain channel capacity of the rows
/// `p(y, v | x, u)`.
pub fn capacity_gm(spec: &BlockChannelSpec, config: &SolverConfig) -> Result<GmCapacity> {
    if spec.n0() != 1 {
        return Err(Error::UnsupportedBlockLength { n0: spec.n0() });
    }
    if detect_deterministic_csit(spec).is_none() {
        return Err(Error::NotDeterministicCsit);
    }
    let obs = compose_observation_kernel(spec);
    let sp = *obs.spaces();
    let (nx, nu) = (sp.x.count(), sp.u.count());
    let mut total = 0.0;
    let mut per_csit = Vec::with_capacity(nu);
    let mut rows = Vec::with_capacity(nu);
    for u in 0..nu {
        let p_u = obs.csit_marginal()[u];
        if p_u <= 0.0 {
            rows.push(vec![1.0 / nx as f64; nx]);
            continue;
        }
        let channel =
            ConditionalTable::from_rows((0..nx).map(|x| obs.row(x, u).to_vec()).collect())?;
        let r = maximize_mutual_information(&channel, config)?;
        total += p_u * r.value_bits;
        per_csit.push(PerCsit {
            u,
            p_u,
            capacity_bits: r.value_bits,
            converged: r.converged,
        });
        rows.push(r.p_in);
    }
    Ok(GmCapacity {
        capacity_bits_per_use: total,
        per_csit,
        p_x_given_u: ConditionalTable::from_rows(rows)?,
    })
}

/// `I(X; Y | V)` in bits per block when the input law is `p(x^n0 | u^n0)`
/// (rows `u`, columns `x`).
pub fn input_law_information(obs: &ObservationKernel, p_x_given_u: &ConditionalTable) -> Result<f64> {
    let sp = *obs.spaces();
    let (nx, nu, ny, nv) = (sp.x.count(), sp.u.count(), sp.y.count(), sp.v.count());
    if p_x_given_u.rows() != nu || p_x_given_u.cols() != nx {
        return Err(Error::LengthMismatch {
            what: "input law p(x|u)",
            expected: nu * nx,
            found: p_x_given_u.rows() * p_x_given_u.cols(),
        });
    }
    let mut joint = vec![0.0; nx * ny * nv];
    for u in 0..nu {
        let p_u = obs.csit_marginal()[u];
        if p_u <= 0.0 {
            continue;
        }
        for x in 0..nx {
            let a = p_u * p_x_given_u.get(u, x);
            if a == 0.0 {
                continue;
            }
            for (c, &w) in obs.row(x, u).iter().enumerate() {
                joint[x * ny * nv + c] += a * w;
            }
        }
    }
    Ok(conditional_mutual_information(&TripleJoint::new([nx, ny, nv], joint)?))
}

/// `I(T; Y | V)` in bits per block for strategy law `p_t`.
pub fn strategy_law_information(channel: &EquivalentChannel, p_t: &[f64]) -> Result<f64> {
    let joint = TripleJoint::from_channel(p_t, channel.kernel(), channel.spaces().v.count())?;
    Ok(conditional_mutual_information(&joint))
}

/// Finds a strategy law inducing the causal input law `p_x_given_u`.
///
/// Each table entry `t_i(u^i)` is drawn independently from
/// `p(x_i | x^{i-1}, u^i)` with `x^{i-1}` the strategy's own earlier outputs on
/// the prefixes of `u^i`. For a fixed `u` this reproduces the causal
/// factorization exactly. A non-causal law leaves a residual and is rejected.
pub fn invert_input_law(space: &StrategySpace, p_x_given_u: &ConditionalTable) -> Result<Vec<f64>> {
    let (nxs, nus, n0) = (space.x_size(), space.u_size(), space.n0());
    let xs = TupleSpace::new(nxs, n0).expect("fits");
    let us = TupleSpace::new(nus, n0).expect("fits");
    if p_x_given_u.rows() != us.count() || p_x_given_u.cols() != xs.count() {
        return Err(Error::LengthMismatch {
            what: "input law p(x|u)",
            expected: us.count() * xs.count(),
            found: p_x_given_u.rows() * p_x_given_u.cols(),
        });
    }

    // cond[i][(prefix u^{i+1}, prefix x^{i})][x_{i+1}], completing u with zeros
    let mut cond: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n0);
    for i in 0..n0 {
        let up = TupleSpace::new(nus, i + 1).expect("fits");
        let xp = TupleSpace::new(nxs, i).expect("fits");
        let tail = nus.pow((n0 - i - 1) as u32);
        let xtail = nxs.pow((n0 - i - 1) as u32);
        let mut table = Vec::with_capacity(up.count() * xp.count());
        for u_prefix in 0..up.count() {
            let row = p_x_given_u.row(u_prefix * tail);
            for x_prefix in 0..xp.count() {
                let mut next: Vec<f64> = (0..nxs)
                    .map(|xi| {
                        let start = (x_prefix * nxs + xi) * xtail;
                        row[start..start + xtail].iter().sum()
                    })
                    .collect();
                let total: f64 = next.iter().sum();
                if total > 0.0 {
                    next.iter_mut().for_each(|p| *p /= total);
                } else {
                    next.fill(1.0 / nxs as f64);
                }
                table.push(next);
            }
        }
        cond.push(table);
    }

    let mut p_t = vec![0.0; space.count()];
    for (t, slot) in p_t.iter_mut().enumerate() {
        let st = space.index_to_strategy(StrategyIndex(t))?;
        let maps = st.maps();
        let mut prob = 1.0;
        'outer: for i in 0..n0 {
            let xp_count = nxs.pow(i as u32);
            let up = TupleSpace::new(nus, i + 1).expect("fits");
            for u_prefix in 0..up.count() {
                // earlier outputs of this strategy along the prefix
                let u_tuple = up.decode(u_prefix);
                let mut x_prefix = 0;
                let mut p_idx = 0;
                for (j, &uj) in u_tuple.iter().enumerate().take(i) {
                    p_idx = p_idx * nus + uj;
                    x_prefix = x_prefix * nxs + maps[j][p_idx];
                }
                debug_assert!(x_prefix < xp_count);
                prob *= cond[i][u_prefix * xp_count + x_prefix][maps[i][u_prefix]];
                if prob == 0.0 {
                    break 'outer;
                }
            }
        }
        *slot = prob;
    }

    let induced = space.induced_conditional(&p_t)?;
    let residual = induced
        .as_slice()
        .iter()
        .zip(p_x_given_u.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > 1e-9 {
        return Err(Error::InversionInfeasible { residual });
    }
    Ok(p_t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionConfig {
    pub solver: SolverConfig,
    /// Number of random strategy laws checked.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            samples: 20,
            seed: 0,
        }
    }
}

/// `I(T; Y | V)` against `I(X; Y | V)` for one strategy law and the input law
/// it induces, both in bits per block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichSample {
    pub strategy_information: f64,
    pub input_information: f64,
    /// `I(X;Y|V) - I(T;Y|V)`; data processing makes this nonnegative.
    pub upper_slack: f64,
    /// `I(T;Y|V) - I(X;Y|V)`; nonnegative when `u = k(v)`.
    pub lower_slack: f64,
}

/// A strategy law recovered from the per-CSIT optimal input law (`n0 = 1`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimumCheck {
    pub p_t: Vec<f64>,
    /// `I(T; Y | V)` at the recovered law, bits per block.
    pub strategy_information: f64,
    /// Per-CSIT capacity formula value, bits per block.
    pub gm_information: f64,
    /// `strategy_information - gm_information`.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionReport {
    pub n0: usize,
    pub csit_map: DeterministicCsitMap,
    pub capacity_bm: f64,
    pub capacity_bm_converged: bool,
    pub capacity_gm: Option<f64>,
    pub difference: Option<f64>,
    pub samples: Vec<SandwichSample>,
    pub optimum: Option<OptimumCheck>,
    pub min_upper_slack: f64,
    pub min_lower_slack: f64,
}

impl ReductionReport {
    /// Whether every sandwich slack is at least `-slack_tol` and, when both
    /// capacities were computed, they agree within `capacity_tol`.
    pub fn holds(&self, capacity_tol: f64, slack_tol: f64) -> bool {
        let slacks = self.min_upper_slack >= -slack_tol
            && self.min_lower_slack >= -slack_tol
            && self.optimum.as_ref().is_none_or(|o| o.slack >= -slack_tol);
        let capacities = self.difference.is_none_or(|d| d <= capacity_tol);
        slacks && capacities
    }
}

pub fn verify_reduction(spec: &BlockChannelSpec, config: &ReductionConfig) -> Result<ReductionReport> {
    let csit_map = detect_deterministic_csit(spec).ok_or(Error::NotDeterministicCsit)?;
    let channel = build_equivalent_channel(spec, config.solver.strategy_cap)?;
    let obs = compose_observation_kernel(spec);
    let bm = blahut_arimoto(&channel, &config.solver)?;
    let space = channel.strategies();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::with_capacity(config.samples);
    for _ in 0..config.samples {
        let p_t = random_distribution(&mut rng, space.count());
        samples.push(sandwich(&channel, &obs, &p_t)?);
    }

    let (capacity_gm, difference, optimum) = if spec.n0() == 1 {
        let gm = capacity_gm(spec, &config.solver)?;
        let p_t = invert_input_law(space, &gm.p_x_given_u)?;
        let strategy_information = strategy_law_information(&channel, &p_t)?;
        let gm_information = gm.capacity_bits_per_use;
        let check = OptimumCheck {
            strategy_information,
            gm_information,
            slack: strategy_information - gm_information,
            p_t,
        };
        (
            Some(gm.capacity_bits_per_use),
            Some((gm.capacity_bits_per_use - bm.capacity_bits_per_use).abs()),
            Some(check),
        )
    } else {
        (None, None, None)
    };

    let min_upper_slack = samples.iter().map(|s| s.upper_slack).fold(f64::INFINITY, f64::min);
    let min_lower_slack = samples.iter().map(|s| s.lower_slack).fold(f64::INFINITY, f64::min);
    Ok(ReductionReport {
        n0: spec.n0(),
        csit_map,
        capacity_bm: bm.capacity_bits_per_use,
        capacity_bm_converged: bm.converged,
        capacity_gm,
        difference,
        samples,
        optimum,
        min_upper_slack: if min_upper_slack.is_finite() { min_upper_slack } else { 0.0 },
        min_lower_slack: if min_lower_slack.is_finite() { min_lower_slack } else { 0.0 },
    })
}

/// Both sides of the fixed-law comparison for `p_t`.
pub fn sandwich(
    channel: &EquivalentChannel,
    obs: &ObservationKernel,
    p_t: &[f64],
) -> Result<SandwichSample> {
    let strategy_information = strategy_law_information(channel, p_t)?;
    let induced = channel.strategies().induced_conditional(p_t)?;
    let input_information = input_law_information(obs, &induced)?;
    Ok(SandwichSample {
        strategy_information,
        input_information,
        upper_slack: input_information - strategy_information,
        lower_slack: strategy_information - input_information,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Dims;
    use crate::random::{random_spec, SideInfo, SpecShape};
    use crate::solver::capacity_bm;
    use crate::strategy::DEFAULT_STRATEGY_CAP;
    use approx::assert_abs_diff_eq;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn identical_side_information_gives_identity() {
        let spec = BlockChannelSpec::from_fns(
            Dims::new(2, 2, 2, 2, 2),
            1,
            |x, _, y| if x == y { 0.9 } else { 0.1 },
            |s, u, v| if u == v { [0.1, 0.2][s[0]] + [0.0, 0.2][u[0]] } else { 0.0 },
        )
        .unwrap();
        let k = detect_deterministic_csit(&spec).unwrap();
        assert!(k.is_identity());
        assert_eq!(k.get(1), Some(1));
    }

    #[test]
    fn noisy_csit_is_not_deterministic() {
        let spec = BlockChannelSpec::from_fns(
            Dims::new(2, 2, 2, 2, 2),
            1,
            |x, _, y| if x == y { 1.0 } else { 0.0 },
            |s, u, v| {
                let pu = if u == s { 0.9 } else { 0.1 };
                if v == s { 0.5 * pu } else { 0.0 }
            },
        )
        .unwrap();
        assert!(detect_deterministic_csit(&spec).is_none());
        assert!(matches!(
            capacity_gm(&spec, &SolverConfig::default()),
            Err(Error::NotDeterministicCsit)
        ));
    }

    #[test]
    fn parity_map_is_read_off() {
        // v in {0..3} read as two bits, u = parity(v)
        let spec = BlockChannelSpec::from_fns(
            Dims::new(2, 2, 2, 2, 4),
            1,
            |x, _, y| if x == y { 1.0 } else { 0.0 },
            |s, u, v| {
                let parity = (v[0] & 1) ^ (v[0] >> 1);
                if u[0] == parity { [0.1, 0.15, 0.3, 0.2][v[0]] * [0.4, 0.6][s[0]] / 0.75 } else { 0.0 }
            },
        )
        .unwrap();
        let k = detect_deterministic_csit(&spec).unwrap();
        assert_eq!((0..4).map(|v| k.get(v).unwrap()).collect::<Vec<_>>(), vec![0, 1, 1, 0]);
    }

    #[test]
    fn no_side_information_is_plain_capacity() {
        let e = 0.15;
        let spec = BlockChannelSpec::from_fns(
            Dims::new(2, 2, 2, 1, 1),
            1,
            move |x, s, y| {
                let e = [e, 0.35][s[0]];
                if x == y { 1.0 - e } else { e }
            },
            |s, _, _| [0.5, 0.5][s[0]],
        )
        .unwrap();
        let gm = capacity_gm(&spec, &SolverConfig::default()).unwrap();
        // averaged channel is a BSC with crossover 0.25
        let expect = 1.0 - crate::info::binary_entropy(0.25);
        assert_abs_diff_eq!(gm.capacity_bits_per_use, expect, epsilon = 1e-9);
    }

    #[test]
    fn rejects_long_blocks() {
        let spec = random_spec(
            &mut rng(1),
            &SpecShape::new(Dims::new(2, 2, 2, 2, 2), 2).with_side_info(SideInfo::CsitFromCsir),
        )
        .unwrap();
        assert!(matches!(
            capacity_gm(&spec, &SolverConfig::default()),
            Err(Error::UnsupportedBlockLength { n0: 2 })
        ));
    }

    #[test]
    fn gm_matches_strategy_capacity_when_csit_is_csir() {
        let mut r = rng(2);
        for _ in 0..5 {
            let spec = random_spec(
                &mut r,
                &SpecShape::new(Dims::new(2, 2, 2, 2, 2), 1).with_side_info(SideInfo::CsitFromCsir),
            )
            .unwrap();
            let gm = capacity_gm(&spec, &SolverConfig::default()).unwrap();
            let bm = capacity_bm(&spec, &SolverConfig::default()).unwrap();
            assert_abs_diff_eq!(gm.capacity_bits_per_use, bm.capacity_bits_per_use, epsilon = 1e-5);
        }
    }

    #[test]
    fn point_mass_strategy_law_is_lossless() {
        let spec = random_spec(
            &mut rng(3),
            &SpecShape::new(Dims::new(2, 2, 2, 2, 2), 2).with_side_info(SideInfo::CsitFromCsir),
        )
        .unwrap();
        let channel = build_equivalent_channel(&spec, DEFAULT_STRATEGY_CAP).unwrap();
        let obs = compose_observation_kernel(&spec);
        for t in [0, 17, 63] {
            let mut p = vec![0.0; channel.t_count()];
            p[t] = 1.0;
            let s = sandwich(&channel, &obs, &p).unwrap();
            assert_abs_diff_eq!(s.strategy_information, s.input_information, epsilon = 1e-10);
        }
    }

    #[test]
    fn inversion_reproduces_causal_laws() {
        let mut r = rng(4);
        let space = StrategySpace::new(2, 2, 2, DEFAULT_STRATEGY_CAP).unwrap();
        for _ in 0..5 {
            let p_t = random_distribution(&mut r, space.count());
            let law = space.induced_conditional(&p_t).unwrap();
            let back = invert_input_law(&space, &law).unwrap();
            let again = space.induced_conditional(&back).unwrap();
            for (a, b) in law.as_slice().iter().zip(again.as_slice()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(back.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn inversion_rejects_non_causal_laws() {
        // x_1 = u_2 cannot be produced causally
        let space = StrategySpace::new(2, 2, 2, DEFAULT_STRATEGY_CAP).unwrap();
        let xs = TupleSpace::new(2, 2).unwrap();
        let us = TupleSpace::new(2, 2).unwrap();
        let rows = us
            .iter()
            .map(|u| {
                let mut row = vec![0.0; 4];
                row[xs.encode(&[u[1], 0])] = 1.0;
                row
            })
            .collect();
        let law = ConditionalTable::from_rows(rows).unwrap();
        assert!(matches!(
            invert_input_law(&space, &law),
            Err(Error::InversionInfeasible { .. })
        ));
    }

    #[test]
    fn perfect_information_report() {
        let spec = random_spec(
            &mut rng(5),
            &SpecShape::new(Dims::new(2, 2, 2, 2, 2), 1).with_side_info(SideInfo::Perfect),
        )
        .unwrap();
        let report = verify_reduction(&spec, &ReductionConfig::default()).unwrap();
        assert!(report.difference.unwrap() <= 1e-5);
        assert!(report.min_lower_slack >= -1e-9);
        assert!(report.min_upper_slack >= -1e-9);
        assert!(report.optimum.as_ref().unwrap().slack.abs() <= 1e-9);
        assert!(report.holds(1e-5, 1e-9));
    }

    #[test]
    fn no_csit_reduction_is_exact() {
        let spec = random_spec(&mut rng(6), &SpecShape::new(Dims::new(3, 2, 2, 1, 2), 1)).unwrap();
        let report = verify_reduction(&spec, &ReductionConfig::default()).unwrap();
        assert!(report.difference.unwrap() <= 1e-9);
    }

    #[test]
    fn two_position_sandwich() {
        let spec = random_spec(
            &mut rng(7),
            &SpecShape::new(Dims::new(2, 2, 2, 2, 2), 2).with_side_info(SideInfo::CsitFromCsir),
        )
        .unwrap();
        let report = verify_reduction(
            &spec,
            &ReductionConfig {
                solver: SolverConfig::default().with_tol(1e-6),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(report.capacity_gm.is_none());
        assert_eq!(report.samples.len(), 20);
        for s in &report.samples {
            assert!(s.upper_slack >= -1e-9 && s.lower_slack >= -1e-9);
        }
    }
}
