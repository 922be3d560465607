//! Shared helpers for integration tests: a straight-line DCA oracle and a
//! generator of small synthetic datasets.

#![allow(dead_code)]

use dca_lab::agents::{AntigenId, Category};
use dca_lab::data_ingest::AntigenRecord;
use dca_lab::engine::{SimConfig, ThresholdRange};
use dca_lab::signal_model::{OutputWeights, SignalMapping, WeightMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn wbc_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/breast-cancer-wisconsin.data")
}

/// Replays the DCA without agents or messages: the population is a fixed
/// array of slots, each with a threshold, three running sums and the list of
/// record indices it holds. Votes are tallied per record.
///
/// Consumes the random stream in the documented order: one threshold per
/// slot; per record, `k` partial Fisher–Yates index draws; one threshold per
/// slot reset, in reset order.
pub fn oracle_mcavs(config: &SimConfig, rows: &[Vec<f64>]) -> Vec<f64> {
    let n = config.population_size;
    let k = config.dcs_per_antigen;
    let (t_min, t_max) = (config.threshold_range.min, config.threshold_range.max);
    let w = &config.weight_matrix;
    let weights = [
        [w.pamp.csm, w.pamp.semi, w.pamp.mat],
        [w.danger.csm, w.danger.semi, w.danger.mat],
        [w.safe.csm, w.safe.semi, w.safe.mat],
    ];
    let m = &config.signal_mapping;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut threshold: Vec<f64> = (0..n).map(|_| rng.gen_range(t_min..=t_max)).collect();
    let mut sums = vec![[0.0f64; 3]; n];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut ones = vec![0usize; rows.len()];
    let mut votes = vec![0usize; rows.len()];

    let cast =
        |slot_sums: &[f64; 3], slot_held: &[usize], ones: &mut [usize], votes: &mut [usize]| {
            let bit = usize::from(slot_sums[1] <= slot_sums[2]);
            for &r in slot_held {
                ones[r] += bit;
                votes[r] += 1;
            }
        };

    for (r, attrs) in rows.iter().enumerate() {
        let mean = |src: &[usize]| src.iter().map(|&i| attrs[i]).sum::<f64>() / src.len() as f64;
        let pamp = 100.0 * mean(&m.pamp_sources);
        let danger = 100.0 * mean(&m.danger_sources);
        let safe = if m.safe_is_complement {
            100.0 * (1.0 - mean(&m.safe_sources))
        } else {
            100.0 * mean(&m.safe_sources)
        };
        let mut out = [0.0; 3];
        for (o, slot) in out.iter_mut().enumerate() {
            *slot = weights[0][o] * pamp + weights[1][o] * danger + weights[2][o] * safe;
        }
        if w.normalize_by_weight_sum {
            for (o, slot) in out.iter_mut().enumerate() {
                let den: f64 = (0..3).map(|s| weights[s][o].abs()).sum();
                if den > 0.0 {
                    *slot /= den;
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.gen_range(i..n);
            order.swap(i, j);
        }

        for &p in &order[..k] {
            for o in 0..3 {
                sums[p][o] += out[o];
            }
            held[p].push(r);
            if sums[p][0] > threshold[p] {
                cast(&sums[p], &held[p], &mut ones, &mut votes);
                sums[p] = [0.0; 3];
                held[p].clear();
                threshold[p] = rng.gen_range(t_min..=t_max);
            }
        }
    }
    for p in 0..n {
        if !held[p].is_empty() {
            cast(&sums[p], &held[p], &mut ones, &mut votes);
        }
    }

    ones.iter()
        .zip(&votes)
        .map(|(&o, &v)| {
            assert_eq!(v, k, "oracle: record did not collect k votes");
            o as f64 / v as f64
        })
        .collect()
}

pub fn to_records(rows: &[Vec<f64>], labels: &[Category]) -> Vec<AntigenRecord> {
    rows.iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (attrs, &label))| AntigenRecord {
            antigen_id: AntigenId(i),
            source_sample_id: 1000 + i as u64,
            attributes: attrs.clone(),
            true_label: label,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub config: SimConfig,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Category>,
}

impl Synthetic {
    pub fn records(&self) -> Vec<AntigenRecord> {
        to_records(&self.rows, &self.labels)
    }
}

fn random_subset(rng: &mut ChaCha8Rng, width: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (0..width).filter(|_| rng.gen_bool(0.5)).collect();
    if s.is_empty() {
        s.push(rng.gen_range(0..width));
    }
    s
}

/// A random small scenario: up to `max_records` records of 2–9 attributes,
/// a population of at most `max_population` DCs and `k <= N`.
pub fn synthetic(case_seed: u64, max_records: usize, max_population: usize) -> Synthetic {
    build_synthetic(case_seed, 1..=max_records, max_population)
}

/// Like [`synthetic`] with exactly `records` records.
pub fn synthetic_sized(case_seed: u64, records: usize, max_population: usize) -> Synthetic {
    build_synthetic(case_seed, records..=records, max_population)
}

fn build_synthetic(
    case_seed: u64,
    record_count: std::ops::RangeInclusive<usize>,
    max_population: usize,
) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
    let width = rng.gen_range(2..=9);
    let count = rng.gen_range(record_count);
    let rows: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            (0..width)
                .map(|_| {
                    // Mix the dataset's 1..=10 grid with arbitrary reals.
                    if rng.gen_bool(0.5) {
                        rng.gen_range(0..=9) as f64 / 9.0
                    } else {
                        rng.gen_range(0.0..=1.0)
                    }
                })
                .collect()
        })
        .collect();
    let labels = (0..count)
        .map(|_| {
            if rng.gen_bool(0.4) {
                Category::Anomalous
            } else {
                Category::Normal
            }
        })
        .collect();

    let population_size = rng.gen_range(1..=max_population);
    let dcs_per_antigen = rng.gen_range(1..=population_size);
    let t_min = rng.gen_range(1.0..300.0);
    let t_max = t_min + rng.gen_range(0.0..400.0);
    let weight_matrix = if rng.gen_bool(0.5) {
        WeightMatrix::default()
    } else {
        let mut row = || OutputWeights {
            csm: rng.gen_range(0.0..3.0),
            semi: rng.gen_range(-3.0..3.0),
            mat: rng.gen_range(-3.0..3.0),
        };
        WeightMatrix {
            pamp: row(),
            danger: row(),
            safe: row(),
            normalize_by_weight_sum: rng.gen_bool(0.2),
        }
    };
    let signal_mapping = SignalMapping {
        pamp_sources: random_subset(&mut rng, width),
        danger_sources: random_subset(&mut rng, width),
        safe_sources: random_subset(&mut rng, width),
        safe_is_complement: rng.gen_bool(0.7),
    };
    let config = SimConfig {
        population_size,
        dcs_per_antigen,
        threshold_range: ThresholdRange {
            min: t_min,
            max: t_max,
        },
        weight_matrix,
        signal_mapping,
        anomalous_threshold: rng.gen_range(0.0..=1.0),
        seed: rng.gen(),
        ..SimConfig::default()
    };
    Synthetic {
        config,
        rows,
        labels,
    }
}

/// 50 records with every attribute at 1.0 followed by 50 at 0.0.
pub fn extremes_dataset() -> (Vec<Vec<f64>>, Vec<Category>) {
    let mut rows = vec![vec![1.0; 9]; 50];
    rows.extend(vec![vec![0.0; 9]; 50]);
    let mut labels = vec![Category::Anomalous; 50];
    labels.extend(vec![Category::Normal; 50]);
    (rows, labels)
}
