//! Occupation configurations, observables, the height partial order, and
//! total-variation distance between distributions on `{0,1}^N`.

use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("distributions live on different site counts ({0} vs {1})")]
    SupportMismatch(usize, usize),
    #[error("dense distributions capped at 20 sites, got {0}")]
    TooManySites(usize),
    #[error("probabilities must be nonnegative and sum to 1 (sum error {0})")]
    NotADistribution(f64),
    #[error("cannot parse configuration {0:?}")]
    Parse(String),
}

/// Particle classes of the multi-species process, ordered by priority
/// `1 > 2 > 3 > inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Species {
    First,
    Second,
    Third,
    Hole,
}

impl Species {
    /// Smaller rank = higher priority.
    #[inline]
    pub fn rank(self) -> u8 {
        match self {
            Species::First => 1,
            Species::Second => 2,
            Species::Third => 3,
            Species::Hole => 4,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Species::First => write!(f, "1"),
            Species::Second => write!(f, "2"),
            Species::Third => write!(f, "3"),
            Species::Hole => write!(f, "inf"),
        }
    }
}

/// Occupation vector on sites `1..=N`, values in {0,1}.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    sites: Vec<u8>,
}

impl Config {
    pub fn new(sites: Vec<u8>) -> Self {
        assert!(!sites.is_empty());
        assert!(sites.iter().all(|&s| s <= 1));
        Config { sites }
    }

    pub fn empty(n: usize) -> Self {
        Config::new(vec![0; n])
    }

    pub fn full(n: usize) -> Self {
        Config::new(vec![1; n])
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sites = text
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(ConfigError::Parse(text.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if sites.is_empty() {
            return Err(ConfigError::Parse(text.to_string()));
        }
        Ok(Config::new(sites))
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[u8] {
        &self.sites
    }

    #[inline]
    pub fn occupied(&self, x: usize) -> bool {
        self.sites[x - 1] == 1
    }

    pub fn set(&mut self, x: usize, v: u8) {
        self.sites[x - 1] = v;
    }

    /// Number of particles. Started from the empty configuration this equals
    /// the net current through the boundary (entries minus exits).
    pub fn particle_count(&self) -> usize {
        self.sites.iter().map(|&s| s as usize).sum()
    }

    /// Position of the rightmost empty site, with `sup emptyset = 0`, so a
    /// full configuration reports 0 and never belongs to a hitting set with
    /// positive threshold.
    pub fn rightmost_empty(&self) -> usize {
        self.sites
            .iter()
            .rposition(|&s| s == 0)
            .map(|i| i + 1)
            .unwrap_or(0)
    }

    /// Membership in the hitting set `A^{(m)} = { R(eta) >= m }`.
    pub fn in_a(&self, m: f64) -> bool {
        debug_assert!(m > 0.0);
        self.rightmost_empty() as f64 >= m
    }

    /// The height partial order, allowing different lengths: `self >= other`
    /// iff the suffix empty count of `self` dominates at every cut.
    pub fn partial_order_geq(&self, other: &Config) -> bool {
        let max = self.n().max(other.n());
        let (mut mine, mut theirs) = (0usize, 0usize);
        for x in (1..=max).rev() {
            if x <= self.n() && !self.occupied(x) {
                mine += 1;
            }
            if x <= other.n() && !other.occupied(x) {
                theirs += 1;
            }
            if mine < theirs {
                return false;
            }
        }
        true
    }

    /// Bit encoding used for dense distribution indexing: site `i` is bit
    /// `i-1`.
    pub fn to_index(&self) -> usize {
        self.sites
            .iter()
            .enumerate()
            .map(|(i, &s)| (s as usize) << i)
            .sum()
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        Config::new((0..n).map(|i| ((index >> i) & 1) as u8).collect())
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.sites {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// The net current of a trajectory started from the empty configuration.
pub fn current_from_empty(eta: &Config) -> usize {
    eta.particle_count()
}

/// Default hitting-set threshold `(ln N)^{1/16}`.
pub fn default_threshold(n: usize) -> f64 {
    ((n as f64).ln()).powf(1.0 / 16.0)
}

/// Multi-species configuration over `{1,2,3,inf}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ColoredConfig {
    sites: Vec<Species>,
}

impl ColoredConfig {
    pub fn new(sites: Vec<Species>) -> Self {
        assert!(!sites.is_empty());
        ColoredConfig { sites }
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Species] {
        &self.sites
    }

    pub fn set(&mut self, x: usize, s: Species) {
        self.sites[x - 1] = s;
    }

    pub fn get(&self, x: usize) -> Species {
        self.sites[x - 1]
    }

    /// First and second class become particles; third class and holes
    /// become empty sites.
    pub fn project_multispecies(&self) -> Config {
        Config::new(
            self.sites
                .iter()
                .map(|s| u8::from(matches!(s, Species::First | Species::Second)))
                .collect(),
        )
    }
}

impl fmt::Display for ColoredConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ColoredConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Dense probability distribution on `{0,1}^n`, indexed by `Config::to_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    n_sites: usize,
    probs: Vec<f64>,
}

impl Distribution {
    pub const MAX_SITES: usize = 20;
    const SUM_TOL: f64 = 1e-12;

    pub fn new(n_sites: usize, probs: Vec<f64>) -> Result<Self, ConfigError> {
        if n_sites > Self::MAX_SITES {
            return Err(ConfigError::TooManySites(n_sites));
        }
        assert_eq!(probs.len(), 1 << n_sites);
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < -Self::SUM_TOL) || (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::NotADistribution(sum - 1.0));
        }
        Ok(Distribution { n_sites, probs })
    }

    pub fn point_mass(cfg: &Config) -> Self {
        let mut probs = vec![0.0; 1 << cfg.n()];
        probs[cfg.to_index()] = 1.0;
        Distribution {
            n_sites: cfg.n(),
            probs,
        }
    }

    /// Build from possibly-unnormalized nonnegative weights.
    pub fn from_weights(n_sites: usize, weights: Vec<f64>) -> Result<Self, ConfigError> {
        if n_sites > Self::MAX_SITES {
            return Err(ConfigError::TooManySites(n_sites));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(ConfigError::NotADistribution(-1.0));
        }
        let probs = weights.iter().map(|w| w / sum).collect();
        Ok(Distribution { n_sites, probs })
    }

    pub fn from_map(n_sites: usize, map: &BTreeMap<Config, f64>) -> Result<Self, ConfigError> {
        let mut probs = vec![0.0; 1usize << n_sites.min(Self::MAX_SITES)];
        for (cfg, &p) in map {
            assert_eq!(cfg.n(), n_sites);
            probs[cfg.to_index()] += p;
        }
        Distribution::new(n_sites, probs)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, cfg: &Config) -> f64 {
        self.probs[cfg.to_index()]
    }

    /// Probability of an event given as a predicate on configurations.
    pub fn prob_where<F: Fn(&Config) -> bool>(&self, pred: F) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|&(i, _)| pred(&Config::from_index(i, self.n_sites)))
            .map(|(_, &p)| p)
            .sum()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Total-variation distance: half the L1 distance, which equals the maximal
/// probability gap over events.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64, ConfigError> {
    if p.n_sites != q.n_sites {
        return Err(ConfigError::SupportMismatch(p.n_sites, q.n_sites));
    }
    let l1: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(0.5 * l1)
}

/// The event realizing the max-over-subsets form of the TV distance: the
/// set of states where `p` exceeds `q`, as dense indices.
pub fn tv_maximizing_event(p: &Distribution, q: &Distribution) -> Result<Vec<usize>, ConfigError> {
    if p.n_sites != q.n_sites {
        return Err(ConfigError::SupportMismatch(p.n_sites, q.n_sites));
    }
    Ok((0..p.probs.len())
        .filter(|&i| p.probs[i] > q.probs[i])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn rightmost_empty_conventions() {
        assert_eq!(Config::full(5).rightmost_empty(), 0);
        assert_eq!(Config::parse("101").unwrap().rightmost_empty(), 2);
        assert_eq!(Config::empty(7).rightmost_empty(), 7);
    }

    #[test]
    fn hitting_set_membership() {
        assert!(!Config::full(6).in_a(0.5));
        assert!(!Config::full(6).in_a(3.0));
        let m = default_threshold(8);
        assert!((m - 1.0468).abs() < 1e-3);
        assert!(Config::empty(8).in_a(m));
        assert!(!Config::parse("0111111").unwrap().in_a(2.0));
    }

    #[test]
    fn partial_order_examples() {
        let eta = Config::parse("1010").unwrap();
        assert!(eta.partial_order_geq(&eta));
        let zeros = Config::empty(4);
        assert!(zeros.partial_order_geq(&eta));
        assert!(!eta.partial_order_geq(&zeros));
        // mixed lengths, from the suffix-count oracle
        let zeta = Config::parse("001").unwrap();
        let eta = Config::parse("10").unwrap();
        assert!(zeta.partial_order_geq(&eta));
    }

    #[test]
    fn partial_order_is_a_partial_order() {
        let mut rng = CounterRng::from_seed(5);
        let rand_cfg = |rng: &mut CounterRng, n: usize| {
            Config::new((0..n).map(|_| u8::from(rng.next_f64() < 0.5)).collect())
        };
        for _ in 0..2000 {
            let a = rand_cfg(&mut rng, 6);
            let b = rand_cfg(&mut rng, 6);
            let c = rand_cfg(&mut rng, 6);
            // antisymmetry on equal lengths
            if a.partial_order_geq(&b) && b.partial_order_geq(&a) {
                assert_eq!(a, b);
            }
            // transitivity
            if a.partial_order_geq(&b) && b.partial_order_geq(&c) {
                assert!(a.partial_order_geq(&c));
            }
        }
    }

    #[test]
    fn rightmost_empty_monotone_in_order() {
        // exhaustive for N <= 6
        for n in 1..=6usize {
            for i in 0..(1usize << n) {
                for j in 0..(1usize << n) {
                    let zeta = Config::from_index(i, n);
                    let eta = Config::from_index(j, n);
                    if zeta.partial_order_geq(&eta) {
                        assert!(zeta.rightmost_empty() >= eta.rightmost_empty());
                    }
                }
            }
        }
    }

    #[test]
    fn multispecies_projection() {
        use Species::*;
        let all_holes = ColoredConfig::new(vec![Hole; 4]);
        assert_eq!(all_holes.project_multispecies(), Config::empty(4));
        let mixed = ColoredConfig::new(vec![First, Second, Third, Hole]);
        assert_eq!(mixed.project_multispecies(), Config::parse("1100").unwrap());
        assert_eq!(format!("{mixed}"), "1,2,3,inf");
    }

    #[test]
    fn tv_basic_values() {
        let p = Distribution::new(1, vec![0.5, 0.5]).unwrap();
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        let a = Distribution::point_mass(&Config::parse("0").unwrap());
        let b = Distribution::point_mass(&Config::parse("1").unwrap());
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        let q = Distribution::new(1, vec![0.9, 0.1]).unwrap();
        assert!((tv_distance(&p, &q).unwrap() - 0.4).abs() < 1e-15);
        let event = tv_maximizing_event(&q, &p).unwrap();
        assert_eq!(event, vec![0]);
    }

    #[test]
    fn tv_equals_subset_maximum() {
        // exhaustive subset search on supports up to 2^3 = 8 states
        let mut rng = CounterRng::from_seed(77);
        for _ in 0..50 {
            let n = 3;
            let raw: Vec<f64> = (0..8).map(|_| rng.next_f64()).collect();
            let raw2: Vec<f64> = (0..8).map(|_| rng.next_f64()).collect();
            let p = Distribution::from_weights(n, raw).unwrap();
            let q = Distribution::from_weights(n, raw2).unwrap();
            let tv = tv_distance(&p, &q).unwrap();
            let mut best: f64 = 0.0;
            for mask in 0..(1u32 << 8) {
                let mut gap = 0.0;
                for i in 0..8 {
                    if (mask >> i) & 1 == 1 {
                        gap += p.probs()[i] - q.probs()[i];
                    }
                }
                best = best.max(gap);
            }
            assert!((tv - best).abs() < 1e-12);
            // and the exposed maximizing event attains it
            let event = tv_maximizing_event(&p, &q).unwrap();
            let gap: f64 = event.iter().map(|&i| p.probs()[i] - q.probs()[i]).sum();
            assert!((tv - gap).abs() < 1e-12);
        }
    }

    #[test]
    fn tv_is_a_metric() {
        let mut rng = CounterRng::from_seed(11);
        for _ in 0..200 {
            let gen = |rng: &mut CounterRng| {
                Distribution::from_weights(2, (0..4).map(|_| rng.next_f64()).collect()).unwrap()
            };
            let (p, q, r) = (gen(&mut rng), gen(&mut rng), gen(&mut rng));
            let (dpq, dqr, dpr) = (
                tv_distance(&p, &q).unwrap(),
                tv_distance(&q, &r).unwrap(),
                tv_distance(&p, &r).unwrap(),
            );
            assert_eq!(dpq, tv_distance(&q, &p).unwrap());
            assert!(dpr <= dpq + dqr + 1e-14);
            assert!((0.0..=1.0).contains(&dpq));
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(1, vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(1, vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(21, vec![]).is_err());
        assert!(tv_distance(
            &Distribution::new(1, vec![0.5, 0.5]).unwrap(),
            &Distribution::new(2, vec![0.25; 4]).unwrap()
        )
        .is_err());
    }

    #[test]
    fn index_roundtrip() {
        for n in 1..=6 {
            for i in 0..(1usize << n) {
                assert_eq!(Config::from_index(i, n).to_index(), i);
            }
        }
    }

    #[test]
    fn current_is_particle_count() {
        assert_eq!(current_from_empty(&Config::empty(5)), 0);
        assert_eq!(current_from_empty(&Config::parse("101").unwrap()), 2);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_dist(n: usize) -> impl Strategy<Value = Distribution> {
            proptest::collection::vec(0.0f64..1.0, 1 << n)
                .prop_filter("positive mass", |w| w.iter().sum::<f64>() > 1e-6)
                .prop_map(move |w| Distribution::from_weights(n, w).unwrap())
        }

        proptest! {
            #[test]
            fn tv_metric_properties(p in arb_dist(3), q in arb_dist(3), r in arb_dist(3)) {
                let dpq = tv_distance(&p, &q).unwrap();
                prop_assert!((0.0..=1.0).contains(&dpq));
                prop_assert_eq!(dpq, tv_distance(&q, &p).unwrap());
                let dqr = tv_distance(&q, &r).unwrap();
                let dpr = tv_distance(&p, &r).unwrap();
                prop_assert!(dpr <= dpq + dqr + 1e-14);
                prop_assert!(tv_distance(&p, &p).unwrap() == 0.0);
            }

            #[test]
            fn maximizing_event_attains_tv(p in arb_dist(3), q in arb_dist(3)) {
                let tv = tv_distance(&p, &q).unwrap();
                let event = tv_maximizing_event(&p, &q).unwrap();
                let gap: f64 = event.iter().map(|&i| p.probs()[i] - q.probs()[i]).sum();
                prop_assert!((tv - gap).abs() < 1e-12);
            }

            #[test]
            fn suffix_order_monotone_under_filling(bits in proptest::collection::vec(0u8..2, 1..10)) {
                // removing a particle can only move a configuration up
                let cfg = Config::new(bits.clone());
                for (i, &b) in bits.iter().enumerate() {
                    if b == 1 {
                        let mut fewer = bits.clone();
                        fewer[i] = 0;
                        prop_assert!(Config::new(fewer).partial_order_geq(&cfg));
                    }
                }
            }
        }
    }
}
