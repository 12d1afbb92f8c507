//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::cell::Cell;
use std::time::{Duration, Instant};

use bm_capacity::channel::Dims;
use bm_capacity::info::{conditional_mutual_information, mutual_information, TripleJoint};
use bm_capacity::random::{random_spec, random_stochastic, SideInfo, SpecShape};
use bm_capacity::reduction::{capacity_gm, verify_reduction, ReductionConfig};
use bm_capacity::sim::{BlockSampler, SimulationConfig, Simulator};
use bm_capacity::solver::{blahut_arimoto_with, brute_force_capacity, brute_force_capacity_table};
use bm_capacity::table::ConditionalTable;
use bm_capacity::{
    build_equivalent_channel, strategy_count, BlockChannelSpec, CapacityResult,
    EquivalentChannel, SolverConfig, StrategyIndex, StrategySpace, DEFAULT_STRATEGY_CAP,
};
use common::{bundled, chi_square};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-4;
const ANCHOR_TOL: f64 = 1e-6;
const PER_STATE_TOL: f64 = 1e-5;
const REDUCTION_TOL: f64 = 1e-5;
const SLACK_TOL: f64 = 1e-9;
const V_MARGINAL_TOL: f64 = 1e-10;
const SPLIT_TOL: f64 = 1e-9;
const MONOTONE_TOL: f64 = 1e-12;
const GARBLING_TOL: f64 = 1e-6;
const SIM_LOW: f64 = 0.05;
const SIM_HIGH: f64 = 0.1;
const CHI_ALPHA: f64 = 0.01;

/// Structural quantities accumulated over every solver run in the suite.
#[derive(Default)]
struct Tracker {
    runs: Cell<usize>,
    worst_v_marginal: Cell<f64>,
    worst_split: Cell<f64>,
    worst_decrease: Cell<f64>,
}

impl Tracker {
    fn solve(&self, channel: &EquivalentChannel) -> CapacityResult {
        let prev = Cell::new(f64::NEG_INFINITY);
        let worst = Cell::new(0.0f64);
        let result = blahut_arimoto_with(channel, &SolverConfig::default(), |st| {
            worst.set(worst.get().max(prev.get() - st.lower_bits));
            prev.set(st.lower_bits);
        })
        .unwrap();
        self.runs.set(self.runs.get() + 1);
        self.worst_decrease.set(self.worst_decrease.get().max(worst.get()));
        self.worst_v_marginal
            .set(self.worst_v_marginal.get().max(channel.max_v_marginal_deviation()));
        let nv = channel.spaces().v.count();
        let joint = TripleJoint::from_channel(&result.optimal_p_t, channel.kernel(), nv).unwrap();
        let split = (mutual_information(&result.optimal_p_t, channel.kernel())
            - conditional_mutual_information(&joint))
        .abs();
        self.worst_split.set(self.worst_split.get().max(split));
        result
    }

    fn capacity(&self, spec: &BlockChannelSpec) -> f64 {
        let channel = build_equivalent_channel(spec, DEFAULT_STRATEGY_CAP).unwrap();
        self.solve(&channel).capacity_bits_per_use
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn random_dims<R: Rng>(rng: &mut R) -> Dims {
    let mut d = || rng.random_range(1..=3);
    Dims::new(d(), d(), d(), d(), d())
}

/// Random spec shapes with at most `max_strategies` strategies.
fn random_shape<R: Rng>(rng: &mut R, n0_choices: &[usize], max_strategies: u64, side: SideInfo) -> SpecShape {
    loop {
        let dims = random_dims(rng);
        let n0 = n0_choices[rng.random_range(0..n0_choices.len())];
        if strategy_count(dims.x, dims.u, n0, max_strategies).is_ok() {
            return SpecShape::new(dims, n0).with_side_info(side);
        }
    }
}

fn oracle_equivalence(tracker: &Tracker) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let shape = random_shape(&mut rng, &[1, 2], 8, SideInfo::Random);
        let spec = random_spec(&mut rng, &shape).unwrap();
        let channel = build_equivalent_channel(&spec, DEFAULT_STRATEGY_CAP).unwrap();
        let ba = tracker.solve(&channel).capacity_bits_per_use;
        let brute = brute_force_capacity(&channel, 0.01).unwrap();
        worst = worst.max((ba - brute).abs());
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= ORACLE_TOL && elapsed < Duration::from_secs(60),
        detail: format!("max |BA - brute force| = {worst:.3e} over 50 specs in {elapsed:.1?}"),
    }
}

fn inverter_pair(csit: bool) -> BlockChannelSpec {
    // y = x xor s with a fair binary state
    let u = if csit { 2 } else { 1 };
    BlockChannelSpec::from_fns(
        Dims::new(2, 2, 2, u, 1),
        1,
        |x, s, y| if y[0] == x[0] ^ s[0] { 1.0 } else { 0.0 },
        move |s, uu, _| if !csit || uu[0] == s[0] { 0.5 } else { 0.0 },
    )
    .unwrap()
}

fn closed_form_anchors(tracker: &Tracker) -> Outcome {
    let with_csit = tracker.capacity(&inverter_pair(true));
    let without = tracker.capacity(&inverter_pair(false));

    let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let shape = SpecShape::new(Dims::new(2, 2, 2, 2, 2), 1).with_side_info(SideInfo::Perfect);
        let spec = random_spec(&mut rng, &shape).unwrap();
        let kernel = spec.channel_kernel();
        let mut expected = 0.0;
        for s in 0..2 {
            let p_s: f64 = (0..2).map(|u| (0..2).map(|v| spec.side_info_joint()[spec.joint_index(s, u, v)]).sum::<f64>()).sum();
            let rows = (0..2).map(|x| kernel.row(x * 2 + s).to_vec()).collect();
            expected += p_s * brute_force_capacity_table(&ConditionalTable::from_rows(rows).unwrap(), 0.01).unwrap();
        }
        worst = worst.max((tracker.capacity(&spec) - expected).abs());
    }
    Outcome {
        pass: (with_csit - 1.0).abs() <= ANCHOR_TOL && without.abs() <= ANCHOR_TOL && worst <= PER_STATE_TOL,
        detail: format!(
            "inverter pair {with_csit:.9} (CSIT) / {without:.9} (none); max |C - sum p(s) C_s| = {worst:.3e} over 10 specs"
        ),
    }
}

fn reduction_equality(tracker: &Tracker) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DE);
    let mut worst_diff = 0.0f64;
    for _ in 0..25 {
        let shape = random_shape(&mut rng, &[1], DEFAULT_STRATEGY_CAP, SideInfo::CsitFromCsir);
        let spec = random_spec(&mut rng, &shape).unwrap();
        let bm = tracker.capacity(&spec);
        let gm = capacity_gm(&spec, &SolverConfig::default()).unwrap().capacity_bits_per_use;
        worst_diff = worst_diff.max((bm - gm).abs());
    }
    let mut worst_slack = f64::INFINITY;
    let mut checked = 0;
    for i in 0..10 {
        let shape = random_shape(&mut rng, &[2], 4096, SideInfo::CsitFromCsir);
        let spec = random_spec(&mut rng, &shape).unwrap();
        let config = ReductionConfig {
            samples: 20,
            seed: 100 + i,
            ..ReductionConfig::default()
        };
        let report = verify_reduction(&spec, &config).unwrap();
        checked += report.samples.len();
        worst_slack = worst_slack.min(report.min_upper_slack).min(report.min_lower_slack);
    }
    Outcome {
        pass: worst_diff <= REDUCTION_TOL && worst_slack >= -SLACK_TOL && checked == 200,
        detail: format!(
            "max |C_bm - C_gm| = {worst_diff:.3e} over 25 specs; min sandwich slack = {worst_slack:.3e} over {checked} laws"
        ),
    }
}

fn round_trip_exhaustive() -> (bool, usize) {
    let mut spaces = 0;
    for x in 1..=4 {
        for u in 1..=4 {
            for n0 in 1..=3 {
                let Ok(space) = StrategySpace::new(x, u, n0, DEFAULT_STRATEGY_CAP) else {
                    continue;
                };
                for i in 0..space.count() {
                    let t = space.index_to_strategy(StrategyIndex(i)).unwrap();
                    if space.strategy_to_index(&t).unwrap() != StrategyIndex(i) {
                        return (false, spaces);
                    }
                }
                spaces += 1;
            }
        }
    }
    (true, spaces)
}

fn structural_invariants(tracker: &Tracker) -> Outcome {
    // bundled specs add a few more channels to the tracked runs
    for name in ["noisy-feedback.toml", "quantized-feedback.toml", "block-fading.toml"] {
        tracker.capacity(&bundled(name));
    }
    let (round_trip, spaces) = round_trip_exhaustive();
    let (v, split, dec) = (
        tracker.worst_v_marginal.get(),
        tracker.worst_split.get(),
        tracker.worst_decrease.get(),
    );
    Outcome {
        pass: v <= V_MARGINAL_TOL && split <= SPLIT_TOL && dec <= MONOTONE_TOL && round_trip,
        detail: format!(
            "over {} solver runs: v-marginal deviation {v:.3e}, |I(T;Y,V) - I(T;Y|V)| {split:.3e}, \
             largest lower-bound decrease {dec:.3e}; index round trip exact on {spaces} spaces",
            tracker.runs.get()
        ),
    }
}

fn monotone_information(tracker: &Tracker) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD00D);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let shape = random_shape(&mut rng, &[1, 2], 4096, SideInfo::Random);
        let spec = random_spec(&mut rng, &shape).unwrap();
        let c = tracker.capacity(&spec);
        let nv = spec.spaces().v.count();
        for _ in 0..3 {
            let garbled = spec.garble_csir(&random_stochastic(&mut rng, nv, nv)).unwrap();
            worst = worst.max(tracker.capacity(&garbled) - c);
        }
    }
    Outcome {
        pass: worst <= GARBLING_TOL,
        detail: format!("max C_garbled - C = {worst:.3e} over 60 garblings"),
    }
}

fn simulation_shadows() -> Outcome {
    let start = Instant::now();
    let sim = Simulator::optimal(&inverter_pair(true), &SolverConfig::default()).unwrap();
    let low = sim.estimate(0.5, 8, &SimulationConfig::new(2000, 2024)).unwrap();
    let high = sim.estimate(1.25, 8, &SimulationConfig::new(2000, 2025)).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        pass: low.p_e_hat < SIM_LOW && high.p_e_hat > SIM_HIGH && elapsed < Duration::from_secs(120),
        detail: format!(
            "inverter pair J=8: p_e(R=0.5) = {:.4}, p_e(R=1.25) = {:.4} in {elapsed:.1?}",
            low.p_e_hat, high.p_e_hat
        ),
    }
}

fn sampler_fidelity() -> Outcome {
    let names = [
        "inverter-pair.toml",
        "erasure-csir.toml",
        "noisy-feedback.toml",
        "quantized-feedback.toml",
        "block-fading.toml",
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let spec = bundled(name);
        let channel = build_equivalent_channel(&spec, DEFAULT_STRATEGY_CAP).unwrap();
        // the strategy whose row has the widest support, lowest index first
        let support = |t: usize| channel.kernel().row(t).iter().filter(|&&p| p > 0.0).count();
        let t = (0..channel.t_count()).fold(0, |best, t| if support(t) > support(best) { t } else { best });
        let sampler = BlockSampler::new(&spec).unwrap();
        let space = channel.strategies();
        let sp = spec.spaces();
        let mut counts = vec![0u64; sp.obs_count()];
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + i as u64);
        for _ in 0..100_000 {
            let b = sampler.block(space, StrategyIndex(t), &mut rng);
            counts[sp.obs_index(b.y, b.v)] += 1;
        }
        let test = chi_square(&counts, channel.kernel().row(t), CHI_ALPHA);
        pass &= !test.rejected;
        parts.push(format!(
            "{} {:.1}/{:.1} (df {})",
            name.trim_end_matches(".toml"),
            test.statistic,
            test.critical,
            test.df
        ));
    }
    Outcome {
        pass,
        detail: format!("chi-square statistic/critical at 1%, 10^5 blocks each: {}", parts.join(", ")),
    }
}

fn main() {
    let tracker = Tracker::default();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("oracle equivalence", Box::new(|| oracle_equivalence(&tracker))),
        ("closed-form anchors", Box::new(|| closed_form_anchors(&tracker))),
        ("reduction equality", Box::new(|| reduction_equality(&tracker))),
        ("monotone information", Box::new(|| monotone_information(&tracker))),
        ("structural invariants", Box::new(|| structural_invariants(&tracker))),
        ("simulation shadows", Box::new(simulation_shadows)),
        ("sampler fidelity", Box::new(sampler_fidelity)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
