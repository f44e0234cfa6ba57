//! Experiment configuration: JSON system and input descriptions.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use volterra_core::{BilinearSystem64, FactorChain64, LtiFactor64, Matrix64, Signal64, Vector64};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub orders: Vec<usize>,
    pub input: Option<InputSpec>,
    #[serde(default)]
    pub memory: Memory,
    pub tolerance: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemSpec {
    Bilinear {
        #[serde(rename = "F")]
        f: Vec<Vec<f64>>,
        #[serde(rename = "G")]
        g: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
        #[serde(rename = "T")]
        period: f64,
    },
    Chains {
        #[serde(rename = "T")]
        period: f64,
        chains: Vec<ChainSpec>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub factors: Vec<FactorSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputSpec {
    Csv {
        path: PathBuf,
    },
    Impulse {
        length: usize,
    },
    Random {
        length: usize,
        seed: Option<u64>,
    },
    /// Unit impulses at `at[0]` and `at[1]`, optionally weighted.
    TwoImpulse {
        length: usize,
        at: [usize; 2],
        amplitudes: Option<[f64; 2]>,
    },
}

/// Oracle truncation length: `"auto"` or a sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Memory {
    #[default]
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for Memory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(Memory::Auto)
        } else {
            s.parse().map(Memory::Fixed).map_err(|_| format!("memory must be \"auto\" or a sample count, got {s:?}"))
        }
    }
}

impl<'de> Deserialize<'de> for Memory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Memory::Fixed(n)),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A configuration with relative paths resolved against its own directory.
pub struct Loaded {
    pub config: ExperimentConfig,
    base: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<Matrix64> {
    Matrix64::from_rows(rows).with_context(|| format!("matrix {name}"))
}

impl Loaded {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn period(&self) -> f64 {
        match &self.config.system {
            SystemSpec::Bilinear { period, .. } | SystemSpec::Chains { period, .. } => *period,
        }
    }

    pub fn bilinear(&self) -> Result<BilinearSystem64> {
        let SystemSpec::Bilinear { f, g, b, c, period } = &self.config.system else {
            bail!("this command needs a bilinear system, the config lists factor chains");
        };
        Ok(BilinearSystem64::new(
            matrix("F", f)?,
            matrix("G", g)?,
            Vector64::new(b.clone())?,
            Vector64::new(c.clone())?,
            *period,
        )?)
    }

    /// The order-`p` kernel: derived from a bilinear system, or the listed
    /// chain with `p` factors.
    pub fn chain(&self, p: usize) -> Result<FactorChain64> {
        if p == 0 {
            bail!("order must be at least 1");
        }
        match &self.config.system {
            SystemSpec::Bilinear { .. } => Ok(self.bilinear()?.to_chain(p)?),
            SystemSpec::Chains { period, chains } => {
                let spec = chains
                    .iter()
                    .find(|c| c.factors.len() == p)
                    .with_context(|| format!("config lists no chain of order {p}"))?;
                let factors = spec
                    .factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        let name = |m: &str| format!("{m} of factor {}", i + 1);
                        Ok(LtiFactor64::new(
                            matrix(&name("A"), &f.a)?,
                            matrix(&name("B"), &f.b)?,
                            matrix(&name("C"), &f.c)?,
                        )?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(FactorChain64::new(factors, *period)?)
            }
        }
    }

    /// The input signal; `seed` overrides the seed of a random input.
    /// Returns the seed actually used, if any.
    pub fn input(&self, seed: Option<u64>) -> Result<(Signal64, Option<u64>)> {
        let t = self.period();
        let spec = self.config.input.as_ref().context("config has no input")?;
        match spec {
            InputSpec::Csv { path } => Ok((read_signal(&self.resolve(path), t)?, None)),
            InputSpec::Impulse { length } => Ok((Signal64::impulse(*length, t)?, None)),
            InputSpec::Random { length, seed: cfg_seed } => {
                let seed = seed.or(*cfg_seed).unwrap_or(0);
                Ok((random_signal(*length, t, seed)?, Some(seed)))
            }
            InputSpec::TwoImpulse { length, at, amplitudes } => {
                let [a0, a1] = amplitudes.unwrap_or([1.0, 1.0]);
                if at.iter().any(|&k| k >= *length) {
                    bail!("impulse positions {at:?} fall outside length {length}");
                }
                let mut samples = vec![0.0; *length];
                samples[at[0]] += a0;
                samples[at[1]] += a1;
                Ok((Signal64::new(samples, t)?, None))
            }
        }
    }
}

/// Uniform samples on `[-1, 1)` from a ChaCha8 stream.
pub fn random_signal(len: usize, period: f64, seed: u64) -> Result<Signal64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Signal64::new((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(), period)?)
}

#[derive(Deserialize)]
struct Row {
    n: usize,
    value: f64,
}

/// Reads a `n,value` CSV. Rows must be numbered `0, 1, 2, …`.
pub fn read_signal(path: &Path, period: f64) -> Result<Signal64> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut samples = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        if row.n != i {
            bail!("{}: expected sample index {i}, found {}", path.display(), row.n);
        }
        samples.push(row.value);
    }
    Ok(Signal64::new(samples, period)?)
}
