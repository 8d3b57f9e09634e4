//! Dirichlet posterior over party shares and reproducible draws from it.
//!
//! Every draw is generated from its own counter-addressed random streams:
//! party `k` of draw `i` reads ChaCha8 stream `i` under a key derived from
//! the seed and the party id. A draw therefore depends only on the seed, its
//! index and the party's (id, alpha), never on thread scheduling or on the
//! order of parties in the registry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::PartyRegistry;
use crate::pooling::PooledSample;

pub const DEFAULT_PRIOR_ALPHA: f64 = 0.5;
pub const DEFAULT_DRAWS: usize = 100_000;

/// Symmetric prior with the same concentration for every registry entry.
pub fn symmetric_prior(registry: &PartyRegistry, alpha: f64) -> Vec<f64> {
    vec![alpha; registry.len()]
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletPosterior {
    registry: PartyRegistry,
    alpha: Vec<f64>,
    source: Option<PooledSample>,
}

impl DirichletPosterior {
    pub fn new(registry: PartyRegistry, alpha: Vec<f64>) -> Result<Self> {
        check_positive(&registry, &alpha, "alpha")?;
        Ok(DirichletPosterior { registry, alpha, source: None })
    }

    pub fn registry(&self) -> &PartyRegistry {
        &self.registry
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn source(&self) -> Option<&PooledSample> {
        self.source.as_ref()
    }

    pub fn concentration(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let total = self.concentration();
        self.alpha.iter().map(|a| a / total).collect()
    }

    /// Marginal variance of party `k`: `mean (1 - mean) / (sum(alpha) + 1)`.
    pub fn marginal_variance(&self, k: usize) -> f64 {
        let total = self.concentration();
        let mean = self.alpha[k] / total;
        mean * (1.0 - mean) / (total + 1.0)
    }

    pub(crate) fn with_alpha(&self, alpha: Vec<f64>) -> Result<Self> {
        check_positive(&self.registry, &alpha, "alpha")?;
        Ok(DirichletPosterior { registry: self.registry.clone(), alpha, source: self.source.clone() })
    }
}

fn check_positive(registry: &PartyRegistry, values: &[f64], what: &str) -> Result<()> {
    if values.len() != registry.len() {
        return Err(Error::BadPrior(format!(
            "{what} has {} entries, registry has {}",
            values.len(),
            registry.len()
        )));
    }
    if let Some((party, v)) = registry
        .parties()
        .iter()
        .zip(values)
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(Error::BadPrior(format!("{what} for {} is {v}", party.id)));
    }
    Ok(())
}

/// Conjugate update: `alpha_k = prior_k + counts_k`.
pub fn posterior_from(
    pooled: &PooledSample,
    registry: &PartyRegistry,
    prior_alpha: &[f64],
) -> Result<DirichletPosterior> {
    check_positive(registry, prior_alpha, "prior")?;
    if pooled.counts.len() != registry.len() {
        return Err(Error::Parameter("pooled counts do not match the registry".into()));
    }
    let alpha = prior_alpha.iter().zip(&pooled.counts).map(|(p, &c)| p + c as f64).collect();
    Ok(DirichletPosterior { registry: registry.clone(), alpha, source: Some(pooled.clone()) })
}

/// Anything the simulation engine can pull share vectors from by index.
pub trait ShareSource: Sync {
    fn width(&self) -> usize;
    fn fill(&self, index: u64, out: &mut [f64]);
}

/// Prepared per-party Gamma samplers and stream keys for one seed.
pub struct DirichletSampler {
    gammas: Vec<Gamma<f64>>,
    keys: Vec<[u8; 32]>,
    fallback: Vec<f64>,
}

impl DirichletSampler {
    pub fn new(posterior: &DirichletPosterior, seed: u64) -> Self {
        let gammas = posterior
            .alpha
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("alpha validated positive and finite"))
            .collect();
        let keys = posterior.registry.parties().iter().map(|p| stream_key(seed, p.id.as_str())).collect();
        DirichletSampler { gammas, keys, fallback: posterior.mean() }
    }
}

impl ShareSource for DirichletSampler {
    fn width(&self) -> usize {
        self.gammas.len()
    }

    fn fill(&self, index: u64, out: &mut [f64]) {
        let mut total = 0.0;
        for ((slot, gamma), key) in out.iter_mut().zip(&self.gammas).zip(&self.keys) {
            let mut rng = ChaCha8Rng::from_seed(*key);
            rng.set_stream(index);
            *slot = gamma.sample(&mut rng);
            total += *slot;
        }
        if !(total > 0.0 && total.is_finite()) {
            // every gamma underflowed; only possible with tiny concentrations
            out.copy_from_slice(&self.fallback);
            return;
        }
        out.iter_mut().for_each(|v| *v /= total);
    }
}

/// 256-bit ChaCha key from the run seed and a party id.
fn stream_key(seed: u64, party: &str) -> [u8; 32] {
    // FNV-1a keeps the key stable across toolchains, unlike std's hasher
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in party.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut expand = ChaCha8Rng::seed_from_u64(seed ^ h.rotate_left(17));
    let mut key = [0u8; 32];
    expand.fill(&mut key);
    key
}

/// `m` share vectors stored row-major, one row per draw.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawMatrix {
    data: Vec<f64>,
    width: usize,
    seed: u64,
}

impl DrawMatrix {
    /// Matrix whose rows all equal `shares`: a point-mass distribution.
    pub fn point_mass(shares: &[f64], m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyRequest);
        }
        Ok(DrawMatrix { data: shares.repeat(m), width: shares.len(), seed: 0 })
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width.max(1))
    }
}

impl ShareSource for DrawMatrix {
    fn width(&self) -> usize {
        self.width
    }

    fn fill(&self, index: u64, out: &mut [f64]) {
        out.copy_from_slice(self.row(index as usize));
    }
}

/// `m` independent Dirichlet(alpha) draws; bit-identical for a given
/// (posterior, m, seed) whatever the thread count.
pub fn sample_shares(posterior: &DirichletPosterior, m: usize, seed: u64) -> Result<DrawMatrix> {
    if m == 0 {
        return Err(Error::EmptyRequest);
    }
    let sampler = DirichletSampler::new(posterior, seed);
    let width = sampler.width();
    let mut data = vec![0.0; m * width];
    data.par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, row)| sampler.fill(i as u64, row));
    Ok(DrawMatrix { data, width, seed })
}
