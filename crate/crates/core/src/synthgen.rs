//! Seeded generation of piecewise-constant decompositions and the signals
//! they synthesize.
//!
//! Every random quantity is drawn from a ChaCha20 stream whose seed is
//! derived from the configuration seed with SplitMix64 (see
//! [`derive_seed`]), so datasets are reproducible bit for bit regardless of
//! how many threads generate them.
//!
//! Activity windows are evaluated on the time grid `j = 0, 1, ..., T-1`
//! (column `j` in 0-based terms): an activity centred at `m` with duration
//! fraction `d` is one on `m - dT/2 <= j < m + dT/2`, using the
//! right-continuous step `H(0) = 1`. Windows that overhang the ends are
//! clipped.

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, SssaError};
use crate::io::{read_json, read_matrix, write_json, write_matrix};
use crate::model::{normalize_dictionary, CoefficientMatrix, Dictionary, SignalSet};

pub const PRNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.3, seed_from_u64; normals via rand_distr 0.4)";
pub const SEED_DERIVATION: &str = "splitmix64: derive(s, k) = mix(s + (k + 1) * 0x9E3779B97F4A7C15)";
pub const DATASET_FORMAT_VERSION: u32 = 1;

const STREAM_DICTIONARY: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_COEFFS: u64 = 0;
const STREAM_NOISE: u64 = 1;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `(index + 1)`-th output of a SplitMix64 generator seeded with `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

fn rng_for(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// One box-shaped activity on a single atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    /// 1-based atom index.
    pub ind: usize,
    /// Centre on the time axis, in `[0, T]`.
    pub m: f64,
    /// Duration as a fraction of `T`.
    pub d: f64,
    /// Weight.
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    #[serde(rename = "C")]
    pub channels: usize,
    #[serde(rename = "N")]
    pub atoms: usize,
    #[serde(rename = "T")]
    pub time_steps: usize,
    /// Signals per set.
    #[serde(rename = "K")]
    pub signals: usize,
    /// Activities per signal.
    pub n_a: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub weight_std: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            channels: 10,
            atoms: 20,
            time_steps: 100,
            signals: 20,
            n_a: 25,
            d_min: 0.5,
            d_max: 0.55,
            weight_std: std::f64::consts::SQRT_2,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SssaError::InvalidConfig(msg));
        if self.channels == 0 || self.atoms == 0 || self.signals == 0 {
            return bad("C, N and K must be positive".into());
        }
        if self.time_steps < 2 {
            return Err(SssaError::InvalidT(self.time_steps));
        }
        if !(0.0 <= self.d_min && self.d_min <= self.d_max && self.d_max <= 1.0) {
            return bad(format!(
                "durations must satisfy 0 <= d_min <= d_max <= 1, got ({}, {})",
                self.d_min, self.d_max
            ));
        }
        if !(self.weight_std > 0.0 && self.weight_std.is_finite()) {
            return bad(format!("weight_std must be positive, got {}", self.weight_std));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be nonnegative, got {}", self.noise_std));
        }
        Ok(())
    }
}

/// A fixed dictionary with `K` ground-truth decompositions and their signals.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dictionary: Dictionary,
    pub true_coeffs: Vec<CoefficientMatrix>,
    pub signals: Vec<SignalSet>,
    pub config: GenConfig,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }
}

/// I.i.d. standard normal `C x N` matrix with normalized columns.
pub fn generate_dictionary(channels: usize, atoms: usize, seed: u64) -> Result<Dictionary> {
    if channels == 0 || atoms == 0 {
        return Err(SssaError::InvalidConfig("C and N must be positive".into()));
    }
    let mut rng = rng_for(seed);
    let raw = Array2::from_shape_simple_fn((channels, atoms), || {
        StandardNormal.sample(&mut rng)
    });
    normalize_dictionary(raw)
}

/// Indicator of the activity window on row `ind`, zero elsewhere.
pub fn activity_matrix(act: &Activity, atoms: usize, time_steps: usize) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((atoms, time_steps));
    add_activity(&mut out, act, 1.0)?;
    Ok(out)
}

fn add_activity(x: &mut Array2<f64>, act: &Activity, weight: f64) -> Result<()> {
    let (atoms, time_steps) = x.dim();
    if act.ind == 0 || act.ind > atoms {
        return Err(SssaError::IndexOutOfRange {
            index: act.ind,
            n: atoms,
        });
    }
    let half = act.d * time_steps as f64 / 2.0;
    let (lo, hi) = (act.m - half, act.m + half);
    let mut row = x.row_mut(act.ind - 1);
    for (j, v) in row.iter_mut().enumerate() {
        let j = j as f64;
        if lo <= j && j < hi {
            *v += weight;
        }
    }
    Ok(())
}

/// Draws `n_a` activities in the order (ind, m, d, a) for each.
pub fn draw_activities(cfg: &GenConfig, seed: u64) -> Result<Vec<Activity>> {
    cfg.validate()?;
    let mut rng = rng_for(seed);
    let weights = Normal::new(0.0, cfg.weight_std)
        .map_err(|e| SssaError::InvalidConfig(e.to_string()))?;
    let t = cfg.time_steps as f64;
    Ok((0..cfg.n_a)
        .map(|_| {
            let ind = rng.gen_range(1..=cfg.atoms);
            let m = rng.gen_range(0.0..t);
            let d = if cfg.d_max > cfg.d_min {
                rng.gen_range(cfg.d_min..=cfg.d_max)
            } else {
                cfg.d_min
            };
            let a = weights.sample(&mut rng);
            Activity { ind, m, d, a }
        })
        .collect())
}

/// Weighted sum of `n_a` random activity boxes.
pub fn generate_decomposition(cfg: &GenConfig, seed: u64) -> Result<CoefficientMatrix> {
    let mut x = Array2::zeros((cfg.atoms, cfg.time_steps));
    for act in draw_activities(cfg, seed)? {
        add_activity(&mut x, &act, act.a)?;
    }
    Ok(x)
}

/// `Y = Phi X + E` with i.i.d. `N(0, noise_std^2)` entries in `E`.
pub fn synthesize(
    dict: &Dictionary,
    x: &CoefficientMatrix,
    noise_std: f64,
    seed: u64,
) -> Result<SignalSet> {
    check_dim("rows of X vs atoms", x.nrows(), dict.n_atoms())?;
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(SssaError::InvalidConfig(format!(
            "noise_std must be nonnegative, got {noise_std}"
        )));
    }
    let mut y = dict.atoms().dot(x);
    if noise_std > 0.0 {
        let mut rng = rng_for(seed);
        for v in y.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += noise_std * e;
        }
    }
    SignalSet::new(y)
}

fn generate_pairs(
    cfg: &GenConfig,
    dict: &Dictionary,
    set_seed: u64,
) -> Result<(Vec<CoefficientMatrix>, Vec<SignalSet>)> {
    let pairs: Result<Vec<_>> = (0..cfg.signals as u64)
        .into_par_iter()
        .map(|k| {
            let pair_seed = derive_seed(set_seed, k);
            let x = generate_decomposition(cfg, derive_seed(pair_seed, STREAM_COEFFS))?;
            let y = synthesize(dict, &x, cfg.noise_std, derive_seed(pair_seed, STREAM_NOISE))?;
            Ok((x, y))
        })
        .collect();
    Ok(pairs?.into_iter().unzip())
}

fn dictionary_for(cfg: &GenConfig) -> Result<Dictionary> {
    generate_dictionary(
        cfg.channels,
        cfg.atoms,
        derive_seed(cfg.seed, STREAM_DICTIONARY),
    )
}

/// A dictionary and `K` (X, Y) pairs: the training set of [`generate_split`].
pub fn generate_dataset(cfg: &GenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let dictionary = dictionary_for(cfg)?;
    let (true_coeffs, signals) =
        generate_pairs(cfg, &dictionary, derive_seed(cfg.seed, STREAM_TRAIN))?;
    Ok(Dataset {
        dictionary,
        true_coeffs,
        signals,
        config: cfg.clone(),
    })
}

/// Independently seeded train and test sets over one shared dictionary.
pub fn generate_split(cfg: &GenConfig) -> Result<(Dataset, Dataset)> {
    let train = generate_dataset(cfg)?;
    let (true_coeffs, signals) =
        generate_pairs(cfg, &train.dictionary, derive_seed(cfg.seed, STREAM_TEST))?;
    let test = Dataset {
        dictionary: train.dictionary.clone(),
        true_coeffs,
        signals,
        config: cfg.clone(),
    };
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrngInfo {
    pub algorithm: String,
    pub seed_derivation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub prng: PrngInfo,
    pub config: GenConfig,
}

impl DatasetManifest {
    pub fn new(config: GenConfig) -> Self {
        Self {
            format_version: DATASET_FORMAT_VERSION,
            prng: PrngInfo {
                algorithm: PRNG_ALGORITHM.into(),
                seed_derivation: SEED_DERIVATION.into(),
            },
            config,
        }
    }
}

/// Writes `manifest.json`, `dict.csv`, `train/` and `test/` under `dir`.
pub fn write_dataset(dir: &Path, train: &Dataset, test: &Dataset) -> Result<()> {
    write_json(&dir.join("manifest.json"), &DatasetManifest::new(train.config.clone()))?;
    write_matrix(&dir.join("dict.csv"), &train.dictionary.atoms().view())?;
    for (name, set) in [("train", train), ("test", test)] {
        for (k, (x, y)) in set.true_coeffs.iter().zip(&set.signals).enumerate() {
            let sub = dir.join(name);
            write_matrix(&sub.join(format!("coeffs_{}.csv", k + 1)), &x.view())?;
            write_matrix(&sub.join(format!("signals_{}.csv", k + 1)), &y.samples().view())?;
        }
    }
    Ok(())
}

/// Reads a directory written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<(DatasetManifest, Dataset, Dataset)> {
    let manifest: DatasetManifest = read_json(&dir.join("manifest.json"))?;
    let dictionary = Dictionary::from_unit_columns(read_matrix(&dir.join("dict.csv"))?)?;
    let mut sets = Vec::new();
    for name in ["train", "test"] {
        let mut true_coeffs = Vec::new();
        let mut signals = Vec::new();
        for k in 0..manifest.config.signals {
            let sub = dir.join(name);
            true_coeffs.push(read_matrix(&sub.join(format!("coeffs_{}.csv", k + 1)))?);
            signals.push(SignalSet::new(read_matrix(
                &sub.join(format!("signals_{}.csv", k + 1)),
            )?)?);
        }
        sets.push(Dataset {
            dictionary: dictionary.clone(),
            true_coeffs,
            signals,
            config: manifest.config.clone(),
        });
    }
    let test = sets.pop().expect("two sets");
    let train = sets.pop().expect("two sets");
    Ok((manifest, train, test))
}
