//! Randomized invariant suites shared by the property tests and the
//! acceptance report. Each suite runs its own proptest runner.

use metaspike::arch::{cost, encode_aer, Accelerator, ArchConfig, Layout, MemoryBanks};
use metaspike::config::RunConfig;
use metaspike::dataflow::{latency_aer, latency_baseline, ArrayGeometry, Style, WorkloadShape};
use metaspike::experiment::{self, Dataset};
use metaspike::fxp::{DyadicExp, FloatTrace, Scalar, Trace8, TraceParams, TraceValue, Q15_16, Q7_8};
use metaspike::learning::{meta_step, plasticity_factor, PlasticityConfig, Synapse};
use metaspike::network::{Learner, ModelConfig, Network};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

pub const CASES: u32 = 10_000;

pub type Suite = (&'static str, fn(u32) -> Result<(), String>);

pub const SUITES: &[Suite] = &[
    ("plasticity factor in [0, 1]", plasticity_factor_in_unit_interval),
    ("trace ceiling 100", trace_never_exceeds_ceiling),
    ("m clamped to [0, m_max]", meta_parameter_stays_clamped),
    ("feedback matrix immutable", feedback_matrix_is_frozen),
    ("AER cost permutation invariant", aer_cost_invariant_under_permutation),
    ("reports deterministic", reports_are_deterministic),
    ("unit-stride rows conflict free", unit_stride_rows_never_conflict),
    ("split layout doubles update traffic", split_layout_doubles_update_traffic),
    ("forward cycles monotone in activity", forward_cycles_monotone_in_activity),
    ("dataflow sparsity behaviour", dataflow_sparsity_properties),
];

fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}

fn tiny_model() -> ModelConfig {
    ModelConfig { n_input: 12, n_hidden: 10, n_output: 2, ..ModelConfig::default() }
}

fn spikes(bits: &[bool], n: usize) -> Vec<bool> {
    bits.iter().copied().cycle().take(n).collect()
}

fn frames(bits: &[bool], t: usize, n: usize) -> Vec<Vec<bool>> {
    (0..t).map(|k| spikes(&bits[k % bits.len()..], n)).collect()
}

fn factor_in_unit<S: Scalar>(w: f64, m: f64, d: i8) -> bool {
    let s = Synapse { w: S::from_f64(w), m: S::from_f64(m) };
    let f = plasticity_factor(s, DyadicExp::new(d).unwrap());
    f >= S::zero() && f <= S::one()
}

fn clamped<S: Scalar>(ops: &[(bool, bool)], step: f64, max: f64) -> bool {
    let p = PlasticityConfig { meta_step: step, meta_max: max, ..PlasticityConfig::default() }
        .build::<S>()
        .unwrap();
    let mut s = Synapse::new(S::from_f64(0.1));
    ops.iter().all(|&(up, down)| {
        s = meta_step(s, up, down, &p);
        s.m >= S::zero() && s.m <= p.meta_max
    })
}

/// Synthetic 16x16 dataset with two images per digit in each split.
pub fn synthetic(salt: u8) -> Dataset {
    let img = |d: u8, k: u8| -> Vec<u8> {
        (0..256u32).map(|p| (p as u8).wrapping_mul(d + 1).wrapping_add(k ^ salt) & 0xF0).collect()
    };
    let labels: Vec<u8> = (0..20).map(|i| (i % 10) as u8).collect();
    Dataset {
        train_images: labels.iter().enumerate().map(|(i, &d)| img(d, i as u8)).collect(),
        test_images: labels.iter().enumerate().map(|(i, &d)| img(d, 100 + i as u8)).collect(),
        train_labels: labels.clone(),
        test_labels: labels,
    }
}

pub fn plasticity_factor_in_unit_interval(cases: u32) -> Result<(), String> {
    check(cases, (-200.0f64..200.0, 0.0f64..100.0, -6i8..=8), |(w, m, d)| {
        prop_assert!(factor_in_unit::<Q7_8>(w, m, d));
        prop_assert!(factor_in_unit::<Q15_16>(w, m, d));
        prop_assert!(factor_in_unit::<f32>(w, m, d));
        Ok(())
    })
}

pub fn trace_never_exceeds_ceiling(cases: u32) -> Result<(), String> {
    check(cases, vec(any::<bool>(), 1..300), |bits| {
        let p = TraceParams::default();
        prop_assert_eq!(p.ceiling(), 100);
        let (mut a, mut b) = (Trace8::default(), FloatTrace::default());
        for s in bits {
            a = a.update(s, &p);
            b = b.update(s, &p);
            prop_assert!(a.to_f64() <= 100.0 && b.to_f64() <= 100.0);
        }
        Ok(())
    })
}

pub fn meta_parameter_stays_clamped(cases: u32) -> Result<(), String> {
    check(cases, (vec((any::<bool>(), any::<bool>()), 1..200), 0.01f64..2.0, 0.0f64..20.0), |(ops, step, max)| {
        prop_assert!(clamped::<Q7_8>(&ops, step, max));
        prop_assert!(clamped::<Q15_16>(&ops, step, max));
        prop_assert!(clamped::<f32>(&ops, step, max));
        Ok(())
    })
}

pub fn feedback_matrix_is_frozen(cases: u32) -> Result<(), String> {
    check(cases, (any::<u64>(), vec(any::<bool>(), 1..40), 0usize..2), |(seed, bits, label)| {
        let cfg = tiny_model();
        let mut net = Network::<Q7_8>::new(&cfg, seed).unwrap();
        let mut acc = Accelerator::<Q7_8>::new(&cfg, &ArchConfig::default(), seed).unwrap();
        let r = net.pathway.feedback().to_vec();
        let x = frames(&bits, 6, cfg.n_input);
        net.run_sample(&x, label, true).unwrap();
        acc.run_sample(&x, label, true).unwrap();
        prop_assert_eq!(net.pathway.feedback(), &r[..]);
        prop_assert_eq!(acc.feedback(), r);
        Ok(())
    })
}

pub fn aer_cost_invariant_under_permutation(cases: u32) -> Result<(), String> {
    check(cases, (vec(any::<bool>(), 12), 0usize..12, any::<u64>()), |(bits, rot, seed)| {
        let cfg = tiny_model();
        let g = ArchConfig::default();
        let mut permuted = bits.clone();
        permuted.rotate_left(rot);
        permuted.reverse();
        let (fifo, cycles) = encode_aer(&bits, 64).unwrap();
        let want: Vec<u16> = (0..12u16).filter(|&i| bits[i as usize]).collect();
        prop_assert_eq!(fifo.iter().collect::<Vec<_>>(), want);
        prop_assert_eq!(encode_aer(&permuted, 64).unwrap().1, cycles);
        let forward = |x: &[bool]| {
            let mut a = Accelerator::<Q7_8>::new(&cfg, &g, seed).unwrap();
            let out = a.step(x, None, 0).unwrap();
            let hidden = out.hidden.iter().filter(|&&b| b).count();
            (a.ledger.forward.cycles, hidden)
        };
        // the cycle count depends on how many neurons fired, not which
        let active = bits.iter().filter(|&&b| b).count();
        let first_layer = cost::layer_forward(12, active, 10, &g);
        for x in [&bits, &permuted] {
            let (cycles, hidden) = forward(x);
            prop_assert_eq!(cycles, first_layer + cost::layer_forward(10, hidden, 2, &g));
        }
        let shape = WorkloadShape { n_in: 12, n_out: 10, sparsity: 1.0 - active as f64 / 12.0, timesteps: 1 };
        prop_assert_eq!(latency_aer(&ArrayGeometry { rows: 8, cols: 8 }, &shape), first_layer);
        Ok(())
    })
}

pub fn reports_are_deterministic(cases: u32) -> Result<(), String> {
    check(cases, (0u64..1_000_000, any::<u8>(), any::<bool>(), 1usize..3), |(seed, salt, meta, timesteps)| {
        let data = synthetic(salt);
        let mut cfg = RunConfig { seed, seeds: 1, threads: 1, ..RunConfig::default() };
        cfg.model.n_hidden = 4;
        cfg.model.metaplasticity = meta;
        cfg.data.n_train = 10;
        cfg.data.n_test = 10;
        cfg.data.timesteps = timesteps;
        let run = || {
            let (report, snaps, _) = experiment::train(&cfg, &data).unwrap();
            (report.to_json().unwrap(), serde_json::to_string(&snaps).unwrap())
        };
        let a = run();
        prop_assert_eq!(&a, &run());
        let report: metaspike::report::RunReport = serde_json::from_str(&a.0).unwrap();
        prop_assert!(report.matches_config(&cfg));
        Ok(())
    })
}

pub fn unit_stride_rows_never_conflict(cases: u32) -> Result<(), String> {
    check(cases, (0usize..4096, 1usize..17), |(base, banks)| {
        let mut m = MemoryBanks::new(banks, 8192);
        let addrs: Vec<usize> = (base..base + banks).collect();
        let mut out = Vec::new();
        prop_assert_eq!(m.read_group(&addrs, &mut out).unwrap(), 1);
        prop_assert_eq!(m.conflicts, 0);
        Ok(())
    })
}

pub fn split_layout_doubles_update_traffic(cases: u32) -> Result<(), String> {
    check(cases, (vec(any::<bool>(), 1..60), any::<u64>(), 0usize..2), |(bits, seed, label)| {
        let cfg = tiny_model();
        let x = frames(&bits, 5, cfg.n_input);
        let run = |layout| {
            let arch = ArchConfig { layout, ..ArchConfig::default() };
            let mut a = Accelerator::<Q7_8>::new(&cfg, &arch, seed).unwrap();
            a.run_sample(&x, label, true).unwrap();
            (a.ledger.update.reads, a.ledger.update.writes, a.parameters())
        };
        let (cr, cw, cp) = run(Layout::CoLocated);
        let (sr, sw, sp) = run(Layout::Split);
        prop_assert_eq!(2 * cr, sr);
        prop_assert_eq!(2 * cw, sw);
        prop_assert_eq!(cp, sp);
        Ok(())
    })
}

pub fn forward_cycles_monotone_in_activity(cases: u32) -> Result<(), String> {
    let s = (1usize..300, 0usize..300, 0usize..300, 1usize..300, 1usize..17, 1usize..17);
    check(cases, s, |(n_in, a, b, n_out, rows, cols)| {
        let g = ArchConfig { rows, cols, ..ArchConfig::default() };
        let (lo, hi) = (a.min(b).min(n_in), a.max(b).min(n_in));
        prop_assert!(cost::layer_forward(n_in, lo, n_out, &g) <= cost::layer_forward(n_in, hi, n_out, &g));
        Ok(())
    })
}

pub fn dataflow_sparsity_properties(cases: u32) -> Result<(), String> {
    let s = (0usize..300, 0usize..300, 0usize..8, 0.0f64..=1.0, 1usize..17, 1usize..17);
    check(cases, s, |(n_in, n_out, t, sparsity, rows, cols)| {
        let g = ArrayGeometry { rows, cols };
        let dense = WorkloadShape { n_in, n_out, sparsity: 0.0, timesteps: t };
        let sparse = WorkloadShape { sparsity, ..dense };
        prop_assert!(latency_aer(&g, &dense) >= latency_aer(&g, &sparse));
        for style in Style::BASELINES {
            prop_assert_eq!(latency_baseline(style, &g, &dense).unwrap(), latency_baseline(style, &g, &sparse).unwrap());
        }
        Ok(())
    })
}
