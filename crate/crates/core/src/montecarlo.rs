//! Lattice Monte Carlo: independent sites, each drawing one uniform per step
//! from its own ChaCha stream.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cloud::{CloudState, FractionVector, StochasticMatrix};
use crate::error::{Error, Result};

/// Below this many sites a step runs serially.
const PAR_THRESHOLD: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    sites: Vec<CloudState>,
}

impl Lattice {
    pub fn new(sites: Vec<CloudState>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidParameter("lattice needs at least one site".into()));
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> &[CloudState] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for s in &self.sites {
            c[s.index()] += 1;
        }
        c
    }
}

/// Per-site random streams derived from one master seed: site `i` uses
/// ChaCha stream `i`, so draws do not depend on iteration order.
#[derive(Clone, Debug)]
pub struct SiteStreams {
    rngs: Vec<ChaCha8Rng>,
}

impl SiteStreams {
    pub fn new(seed: u64, n_sites: usize) -> Self {
        let rngs = (0..n_sites as u64)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                rng
            })
            .collect();
        Self { rngs }
    }

    pub fn len(&self) -> usize {
        self.rngs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rngs.is_empty()
    }

    pub fn site(&mut self, i: usize) -> &mut ChaCha8Rng {
        &mut self.rngs[i]
    }
}

/// Exact largest-remainder apportionment of `n_sites` over `sigma0`,
/// shuffled.
pub fn init_lattice<R: Rng + ?Sized>(n_sites: usize, sigma0: &FractionVector, rng: &mut R) -> Result<Lattice> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter("lattice needs at least one site".into()));
    }
    let quotas = sigma0.as_array().map(|s| s * n_sites as f64);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..4).collect();
    // Stable sort keeps lower state indices first on ties.
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())));
    for &k in order.iter().take(n_sites.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    let mut sites = Vec::with_capacity(n_sites);
    for (state, &count) in CloudState::ALL.iter().zip(counts.iter()) {
        sites.extend(std::iter::repeat_n(*state, count));
    }
    sites.shuffle(rng);
    Lattice::new(sites)
}

/// Destination of a site in state `from` for the uniform draw `u`: the
/// interval `[0, 1)` is split into the off-diagonal probabilities in
/// ascending target order followed by the stay probability.
#[inline]
pub fn transition_for(p: &StochasticMatrix, from: CloudState, u: f64) -> CloudState {
    let mut edge = 0.0;
    for to in CloudState::ALL {
        if to == from {
            continue;
        }
        edge += p.prob(from, to);
        if u < edge {
            return to;
        }
    }
    from
}

/// One step for every site, each consuming exactly one draw of its own stream.
pub fn mc_step(lattice: &mut Lattice, p: &StochasticMatrix, streams: &mut SiteStreams) {
    assert_eq!(
        lattice.sites.len(),
        streams.rngs.len(),
        "one random stream per site"
    );
    let update = |(site, rng): (&mut CloudState, &mut ChaCha8Rng)| {
        let u: f64 = rng.random();
        *site = transition_for(p, *site, u);
    };
    if lattice.sites.len() >= PAR_THRESHOLD {
        lattice
            .sites
            .par_iter_mut()
            .zip(streams.rngs.par_iter_mut())
            .for_each(update);
    } else {
        lattice.sites.iter_mut().zip(streams.rngs.iter_mut()).for_each(update);
    }
}

pub fn fractions(lattice: &Lattice) -> FractionVector {
    let n = lattice.n_sites() as f64;
    FractionVector::from_raw(lattice.counts().map(|c| c as f64 / n))
}
