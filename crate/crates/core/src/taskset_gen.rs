//! Synthetic task sets in the style of automotive workloads.
//!
//! Periods come from an automotive period distribution (or log-uniform),
//! utilizations are uniform over the capped simplex, and memory footprints
//! are built from code size, stack size and a number of data labels. Phase
//! lengths follow from the share `γ` of the WCET spent on memory, split
//! between read and write in proportion to the bytes each moves.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::task_model::{
    assign_rm_priorities, validate, worst_fit_map, Bytes, MemoryLayout, Platform, System, Task,
    Time,
};

/// Automotive periods in milliseconds.
pub const AUTOMOTIVE_PERIODS_MS: [u64; 9] = [1, 2, 5, 10, 20, 50, 100, 200, 1000];
/// Relative frequency of each entry of [`AUTOMOTIVE_PERIODS_MS`]. They sum
/// to 85 and are used as relative weights.
pub const AUTOMOTIVE_WEIGHTS: [u32; 9] = [3, 2, 2, 25, 25, 3, 20, 1, 4];

/// Name of the utilization sampler, recorded with every generated set.
pub const UTILIZATION_SAMPLER: &str = "dirichlet-rejection";

const MS: Time = 1000;
const UTILIZATION_TRIES: u32 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodModel {
    Automotive,
    /// Log-uniform over `[lo, hi]` microseconds.
    LogUniform { lo: Time, hi: Time },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    #[serde(rename = "U")]
    pub utilization: f64,
    #[serde(rename = "m")]
    pub cores: usize,
    #[serde(rename = "S")]
    pub spm: Bytes,
    pub period_model: PeriodModel,
    pub seed: u64,
    /// Share of the WCET spent in memory phases.
    pub gamma_range: (f64, f64),
    /// Number of data labels per task.
    pub labels_range: (u32, u32),
    pub code_range: (Bytes, Bytes),
    pub stack_range: (Bytes, Bytes),
    /// `(label size in bytes, probability)`.
    pub label_sizes: Vec<(Bytes, f64)>,
    /// Rejected sets before giving up.
    pub max_attempts: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n: 32,
            utilization: 1.0,
            cores: 4,
            spm: 32 * 1024,
            period_model: PeriodModel::Automotive,
            seed: 0,
            gamma_range: (0.05, 0.15),
            labels_range: (2, 100),
            code_range: (2 * 1024, 15 * 1024),
            stack_range: (1024, 4 * 1024),
            label_sizes: vec![(1, 0.35), (2, 0.49), (4, 0.13), (8, 0.03)],
            max_attempts: 1000,
        }
    }
}

impl GenConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if !(self.utilization > 0.0 && self.utilization.is_finite()) {
            return bad("utilization must be positive");
        }
        if self.utilization > self.n as f64 {
            return Err(Error::InfeasibleUtilization {
                n: self.n,
                total: self.utilization,
            });
        }
        if self.cores == 0 || self.spm == 0 {
            return bad("platform needs at least one core and some local memory");
        }
        let (g0, g1) = self.gamma_range;
        if !(0.0 <= g0 && g0 <= g1 && g1 < 1.0) {
            return bad("gamma range must satisfy 0 <= lo <= hi < 1");
        }
        if self.labels_range.0 == 0 || self.labels_range.0 > self.labels_range.1 {
            return bad("label range must be non-empty and start at 1 or more");
        }
        if self.code_range.0 > self.code_range.1 || self.stack_range.0 > self.stack_range.1 {
            return bad("memory ranges must be non-empty");
        }
        if self.label_sizes.is_empty()
            || self.label_sizes.iter().any(|&(s, p)| s == 0 || p.is_nan() || p < 0.0)
            || self.label_sizes.iter().all(|&(_, p)| p == 0.0)
        {
            return bad("label size distribution needs positive sizes and weights");
        }
        if let PeriodModel::LogUniform { lo, hi } = self.period_model {
            if lo == 0 || lo > hi {
                return bad("log-uniform period range must satisfy 0 < lo <= hi");
            }
        }
        Ok(())
    }
}

/// Draw `n` periods in microseconds.
pub fn gen_periods<R: Rng + ?Sized>(n: usize, model: PeriodModel, rng: &mut R) -> Vec<Time> {
    match model {
        PeriodModel::Automotive => {
            let dist = WeightedIndex::new(AUTOMOTIVE_WEIGHTS).expect("static weights");
            (0..n)
                .map(|_| AUTOMOTIVE_PERIODS_MS[dist.sample(rng)] * MS)
                .collect()
        }
        PeriodModel::LogUniform { lo, hi } => {
            let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
            (0..n)
                .map(|_| {
                    let x = if a == b { a } else { rng.random_range(a..b) };
                    (x.exp().round() as Time).clamp(lo, hi)
                })
                .collect()
        }
    }
}

/// `n` utilizations in `(0, 1]` summing to `total`, uniform over that set.
///
/// Samples the flat Dirichlet distribution scaled by `total` and rejects
/// draws with an entry above 1.
pub fn gen_utilizations<R: Rng + ?Sized>(n: usize, total: f64, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 || total.is_nan() || total <= 0.0 {
        return Err(Error::InvalidArgument(
            "need n >= 1 and a positive total".into(),
        ));
    }
    if total > n as f64 {
        return Err(Error::InfeasibleUtilization { n, total });
    }
    if total == n as f64 {
        return Ok(vec![1.0; n]);
    }
    for _ in 0..UTILIZATION_TRIES {
        let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let sum: f64 = draws.iter().sum();
        if sum <= 0.0 {
            continue;
        }
        let u: Vec<f64> = draws.iter().map(|d| total * d / sum).collect();
        if u.iter().all(|&x| x > 0.0 && x <= 1.0) {
            return Ok(u);
        }
    }
    Err(Error::GenerationExhausted {
        attempts: UTILIZATION_TRIES,
        last: format!("no utilization vector with all entries <= 1 for n={n}, U={total}"),
    })
}

/// Memory layout of one task.
pub fn gen_memory<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> MemoryLayout {
    let sizes = WeightedIndex::new(cfg.label_sizes.iter().map(|&(_, p)| p))
        .expect("checked label distribution");
    let labels = rng.random_range(cfg.labels_range.0..=cfg.labels_range.1);
    let data: Bytes = (0..labels)
        .map(|_| cfg.label_sizes[sizes.sample(rng)].0)
        .sum();
    layout_from_data(
        rng.random_range(cfg.code_range.0..=cfg.code_range.1),
        data,
        rng.random_range(cfg.stack_range.0..=cfg.stack_range.1),
    )
}

/// Layout with the read and write volumes implied by `data`: 90% of the
/// data is read and 60% written.
pub fn layout_from_data(code: Bytes, data: Bytes, stack: Bytes) -> MemoryLayout {
    MemoryLayout {
        code,
        data,
        stack,
        read: (0.9 * data as f64).round() as Bytes,
        write: (0.6 * data as f64).round() as Bytes,
    }
}

/// Split a WCET into read, execution and write phases.
pub fn derive_phases(
    wcet: Time,
    read_bytes: Bytes,
    code: Bytes,
    write_bytes: Bytes,
    gamma: f64,
) -> Result<(Time, Time, Time)> {
    if wcet == 0 || write_bytes == 0 {
        return Err(Error::InvalidArgument(
            "phases need a positive WCET and write volume".into(),
        ));
    }
    let alpha = (read_bytes + code) as f64 / write_bytes as f64;
    let memory = (wcet as f64 * gamma).round() as Time;
    let write = (wcet as f64 * gamma / (alpha + 1.0)).round() as Time;
    let read = memory - write;
    if memory >= wcet {
        return Err(Error::EmptyExecutionPhase { wcet, gamma });
    }
    Ok((read, wcet - memory, write))
}

fn task_id(k: usize, n: usize) -> String {
    let width = (n.saturating_sub(1)).to_string().len().max(2);
    format!("t{k:0width$}")
}

fn draw_tasks(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Task>> {
    let periods = gen_periods(cfg.n, cfg.period_model, rng);
    let utils = gen_utilizations(cfg.n, cfg.utilization, rng)?;
    let mut tasks = Vec::with_capacity(cfg.n);
    for (k, (&period, &u)) in periods.iter().zip(&utils).enumerate() {
        let layout = gen_memory(cfg, rng);
        let wcet = ((u * period as f64).round() as Time).max(1);
        let mut phases = None;
        for _ in 0..100 {
            let gamma = if cfg.gamma_range.0 == cfg.gamma_range.1 {
                cfg.gamma_range.0
            } else {
                rng.random_range(cfg.gamma_range.0..cfg.gamma_range.1)
            };
            match derive_phases(wcet, layout.read, layout.code, layout.write, gamma) {
                Ok(p) => {
                    phases = Some(p);
                    break;
                }
                Err(Error::EmptyExecutionPhase { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let (read, exec, write) = phases.ok_or(Error::EmptyExecutionPhase {
            wcet,
            gamma: cfg.gamma_range.1,
        })?;
        tasks.push(Task::new(task_id(k, cfg.n), period, read, exec, write).with_layout(layout));
    }
    assign_rm_priorities(&mut tasks);
    Ok(tasks)
}

/// A generated system and how it was produced.
#[derive(Clone, Debug)]
pub struct Generated {
    pub system: System,
    /// Candidate sets drawn, including the accepted one.
    pub attempts: u32,
    pub provenance: Value,
}

/// Draw candidate sets until one passes the timing filter: no memory phase
/// may be longer than the period of a higher-priority task. Oversized
/// footprints are left to the memory analysis and do not cause rejection.
pub fn generate_with_provenance(cfg: &GenConfig) -> Result<Generated> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let platform = Platform::new(cfg.cores, cfg.spm);
    let mut last = String::new();
    for attempt in 1..=cfg.max_attempts {
        let tasks = draw_tasks(cfg, &mut rng)?;
        let assignment = worst_fit_map(&tasks, cfg.cores);
        let system = System::new(platform, tasks, assignment)?;
        let findings: Vec<_> = validate(&system)
            .into_iter()
            .filter(|f| !f.is_memory_only())
            .collect();
        if findings.is_empty() {
            let provenance = json!({
                "config": cfg,
                "seed": cfg.seed,
                "attempts": attempt,
                "utilization_sampler": UTILIZATION_SAMPLER,
            });
            return Ok(Generated {
                system,
                attempts: attempt,
                provenance,
            });
        }
        last = findings[0].to_string();
    }
    Err(Error::GenerationExhausted {
        attempts: cfg.max_attempts,
        last,
    })
}

pub fn generate(cfg: &GenConfig) -> Result<System> {
    Ok(generate_with_provenance(cfg)?.system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn automotive_frequencies() {
        let ps = gen_periods(40_000, PeriodModel::Automotive, &mut rng(1));
        let ten = ps.iter().filter(|&&p| p == 10 * MS).count() as f64 / ps.len() as f64;
        assert!((ten - 25.0 / 85.0).abs() < 0.02, "{ten}");
        assert!(ps.iter().all(|p| AUTOMOTIVE_PERIODS_MS.contains(&(p / MS))));
    }

    #[test]
    fn log_uniform_range() {
        let model = PeriodModel::LogUniform {
            lo: 100 * MS,
            hi: 1000 * MS,
        };
        let ps = gen_periods(5000, model, &mut rng(2));
        assert!(ps.iter().all(|&p| (100 * MS..=1000 * MS).contains(&p)));
        // Log-uniform: about half the mass below the geometric mean.
        let gm = ((100.0 * 1000.0f64).sqrt() * MS as f64) as Time;
        let below = ps.iter().filter(|&&p| p < gm).count() as f64 / ps.len() as f64;
        assert!((below - 0.5).abs() < 0.03, "{below}");
        assert_eq!(gen_periods(50, model, &mut rng(3)), gen_periods(50, model, &mut rng(3)));
    }

    #[test]
    fn utilization_contract() {
        assert_eq!(gen_utilizations(1, 0.5, &mut rng(0)).unwrap(), vec![0.5]);
        let u = gen_utilizations(4, 1.0, &mut rng(0)).unwrap();
        assert!((u.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(u.iter().all(|&x| x > 0.0 && x <= 1.0));
        assert_eq!(gen_utilizations(3, 3.0, &mut rng(0)).unwrap(), vec![1.0; 3]);
        assert!(matches!(
            gen_utilizations(2, 2.5, &mut rng(0)),
            Err(Error::InfeasibleUtilization { .. })
        ));
    }

    #[test]
    fn two_task_marginal_is_symmetric() {
        let mut r = rng(9);
        let mut bins = [0usize; 10];
        let draws = 20_000;
        let mut mean = 0.0;
        for _ in 0..draws {
            let u = gen_utilizations(2, 1.0, &mut r).unwrap();
            mean += u[0];
            bins[((u[0] * 10.0) as usize).min(9)] += 1;
        }
        mean /= draws as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        for k in 0..5 {
            let (a, b) = (bins[k] as f64, bins[9 - k] as f64);
            assert!((a - b).abs() / (a + b) < 0.06, "{bins:?}");
        }
    }

    #[test]
    fn memory_layout() {
        let l = layout_from_data(0, 1000, 0);
        assert_eq!((l.read, l.write), (900, 600));
        let cfg = GenConfig {
            labels_range: (2, 2),
            label_sizes: vec![(1, 1.0)],
            ..GenConfig::default()
        };
        let l = gen_memory(&cfg, &mut rng(4));
        assert_eq!(l.data, 2);
        let cfg = GenConfig::default();
        let mut r = rng(5);
        for _ in 0..1000 {
            let l = gen_memory(&cfg, &mut r);
            assert!((2048..=15360).contains(&l.code));
            assert!((1024..=4096).contains(&l.stack));
            assert!((2..=800).contains(&l.data));
            assert_eq!(l.footprint(), l.code + l.data + l.stack);
        }
    }

    #[test]
    fn phase_split_example() {
        assert_eq!(derive_phases(1000, 800, 100, 100, 0.1).unwrap(), (90, 900, 10));
        // Very large α: almost everything is read.
        let (r, _, w) = derive_phases(1000, 1_000_000_000, 0, 1, 0.05).unwrap();
        assert_eq!((r, w), (50, 0));
        assert!(matches!(
            derive_phases(1, 1, 1, 1, 0.9),
            Err(Error::EmptyExecutionPhase { .. })
        ));
    }

    #[test]
    fn ids_are_padded() {
        assert_eq!(task_id(3, 8), "t03");
        assert_eq!(task_id(7, 120), "t007");
    }

    #[test]
    fn generate_is_deterministic_and_valid() {
        let cfg = GenConfig {
            seed: 42,
            ..GenConfig::default()
        };
        let a = generate_with_provenance(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.system, b);
        assert!(validate(&b).is_empty(), "{:?}", validate(&b));
        assert_eq!(b.len(), 32);
        assert_eq!(a.provenance["utilization_sampler"], UTILIZATION_SAMPLER);
        assert_eq!(a.provenance["seed"], 42);
        let other = generate(&GenConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(other, b);
    }

    #[test]
    fn config_errors() {
        let over = GenConfig {
            n: 2,
            utilization: 3.0,
            ..GenConfig::default()
        };
        assert!(matches!(
            generate(&over),
            Err(Error::InfeasibleUtilization { .. })
        ));
        let zero = GenConfig {
            n: 0,
            ..GenConfig::default()
        };
        assert!(generate(&zero).is_err());
    }

    #[test]
    fn impossible_filter_is_reported() {
        // Memory-dominated tasks with periods spread over three decades
        // practically never pass the filter.
        let cfg = GenConfig {
            n: 16,
            utilization: 8.0,
            period_model: PeriodModel::LogUniform {
                lo: MS,
                hi: 1000 * MS,
            },
            gamma_range: (0.9, 0.95),
            max_attempts: 5,
            ..GenConfig::default()
        };
        match generate(&cfg) {
            Err(Error::GenerationExhausted { attempts: 5, last }) => {
                assert!(last.contains("blocking exceeds period"), "{last}")
            }
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn generated_tasks_are_consistent(seed in any::<u64>(), n in 1usize..12, u in 0.1f64..1.0) {
            let cfg = GenConfig {
                n,
                utilization: u * n.min(4) as f64,
                cores: 2,
                seed,
                ..GenConfig::default()
            };
            let g = generate_with_provenance(&cfg).unwrap();
            for t in &g.system.tasks {
                let l = t.layout.unwrap();
                prop_assert_eq!(t.memory, l.footprint());
                prop_assert!(t.exec > 0);
                prop_assert_eq!(t.deadline, t.period);
                let c = t.wcet();
                prop_assert!(c >= 1);
                prop_assert!(t.read + t.write <= (c as f64 * 0.15).round() as Time);
            }
            let total: f64 = g.system.tasks.iter().map(|t| t.utilization()).sum();
            // Rounding C to whole microseconds moves each term by under 1/T.
            let slack: f64 = g.system.tasks.iter().map(|t| 1.0 / t.period as f64).sum();
            prop_assert!((total - cfg.utilization).abs() <= slack + 1e-9);
        }
    }
}
