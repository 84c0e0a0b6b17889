//! Seeded random substrate networks and VNR streams.
//!
//! Both graph kinds are G(n, p) graphs redrawn until connected. Every
//! resource draw comes from a normal distribution, redrawn while below a
//! small positive floor.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, GenerateError};
use crate::network::{NodeId, PhysicalNetwork, RequestId, Vnr};
use crate::resources::{Quantity, ResourceVector};

const MAX_TRUNCATION_REDRAWS: u32 = 10_000;

/// How the second parameter of `N(mean, x)` is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadKind {
    /// `x` is the variance; std = sqrt(x).
    #[default]
    Variance,
    /// `x` is the standard deviation.
    StdDev,
}

/// A normal distribution written as `(mean, spread)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub spread: f64,
}

impl NormalParams {
    pub const fn new(mean: f64, spread: f64) -> Self {
        NormalParams { mean, spread }
    }

    pub fn std_dev(&self, kind: SpreadKind) -> f64 {
        match kind {
            SpreadKind::Variance => self.spread.sqrt(),
            SpreadKind::StdDev => self.spread,
        }
    }

    fn validate(&self, field: &'static str) -> Result<(), ConfigError> {
        if !(self.mean > 0.0 && self.mean.is_finite()) {
            return Err(ConfigError::invalid(field, format!("mean must be positive, got {}", self.mean)));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(ConfigError::invalid(field, format!("spread must be nonnegative, got {}", self.spread)));
        }
        Ok(())
    }
}

/// How arrival instants are spaced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalProcess {
    /// Exponential inter-arrival gaps with mean `1 / arrival_rate`.
    #[default]
    Poisson,
    /// Arrivals exactly every `1 / arrival_rate` time units.
    Deterministic,
}

/// Workload generator settings. Defaults reproduce the reference setup:
/// 100 servers with link probability 0.4, VNRs of 4 to 10 nodes with link
/// probability 0.7, arrival rate 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub server_count: usize,
    pub link_probability: f64,
    pub node_cpu: NormalParams,
    pub node_memory: NormalParams,
    pub node_gpu: NormalParams,
    pub link_bandwidth: NormalParams,
    pub vnr_size_min: usize,
    pub vnr_size_max: usize,
    pub vnr_link_probability: f64,
    pub vnr_cpu: NormalParams,
    pub vnr_memory: NormalParams,
    pub vnr_gpu: NormalParams,
    pub vnr_bandwidth: NormalParams,
    pub lifetime: NormalParams,
    pub arrival_rate: f64,
    pub arrival_process: ArrivalProcess,
    /// Interpretation of the second parameter of every normal above.
    pub spread_kind: SpreadKind,
    /// Resource draws below this are redrawn.
    pub draw_floor: f64,
    /// Lifetime draws below this are redrawn.
    pub lifetime_floor: f64,
    pub max_connect_attempts: u32,
    /// Master seed; every random stream in a run derives from it.
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            server_count: 100,
            link_probability: 0.4,
            node_cpu: NormalParams::new(100.0, 400.0),
            node_memory: NormalParams::new(1200.0, 300.0),
            node_gpu: NormalParams::new(100.0, 400.0),
            link_bandwidth: NormalParams::new(100.0, 400.0),
            vnr_size_min: 4,
            vnr_size_max: 10,
            vnr_link_probability: 0.7,
            vnr_cpu: NormalParams::new(10.0, 4.0),
            vnr_memory: NormalParams::new(30.0, 9.0),
            vnr_gpu: NormalParams::new(10.0, 4.0),
            vnr_bandwidth: NormalParams::new(10.0, 4.0),
            lifetime: NormalParams::new(100.0, 900.0),
            arrival_rate: 2.0,
            arrival_process: ArrivalProcess::Poisson,
            spread_kind: SpreadKind::Variance,
            draw_floor: 0.1,
            lifetime_floor: 1.0,
            max_connect_attempts: 100,
            seed: 0,
        }
    }
}

fn probability(field: &'static str, p: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("probability must be in [0, 1], got {p}")))
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.server_count == 0 {
            return Err(ConfigError::invalid("server_count", "must be at least 1"));
        }
        probability("link_probability", self.link_probability)?;
        probability("vnr_link_probability", self.vnr_link_probability)?;
        if self.vnr_size_min == 0 || self.vnr_size_min > self.vnr_size_max {
            return Err(ConfigError::invalid(
                "vnr_size_min",
                format!("need 1 <= min <= max, got [{}, {}]", self.vnr_size_min, self.vnr_size_max),
            ));
        }
        for (field, p) in [
            ("node_cpu", &self.node_cpu),
            ("node_memory", &self.node_memory),
            ("node_gpu", &self.node_gpu),
            ("link_bandwidth", &self.link_bandwidth),
            ("vnr_cpu", &self.vnr_cpu),
            ("vnr_memory", &self.vnr_memory),
            ("vnr_gpu", &self.vnr_gpu),
            ("vnr_bandwidth", &self.vnr_bandwidth),
            ("lifetime", &self.lifetime),
        ] {
            p.validate(field)?;
        }
        if !(self.arrival_rate > 0.0 && self.arrival_rate.is_finite()) {
            return Err(ConfigError::invalid("arrival_rate", "must be positive"));
        }
        if !(self.draw_floor > 0.0) || !(self.lifetime_floor > 0.0) {
            return Err(ConfigError::invalid("draw_floor", "floors must be positive"));
        }
        if self.max_connect_attempts == 0 {
            return Err(ConfigError::invalid("max_connect_attempts", "must be at least 1"));
        }
        Ok(())
    }
}

/// Normal draw, redrawn while below `floor`.
pub fn truncated_normal<R: Rng + ?Sized>(
    rng: &mut R,
    params: NormalParams,
    kind: SpreadKind,
    floor: f64,
) -> Result<f64, GenerateError> {
    let normal = Normal::new(params.mean, params.std_dev(kind))
        .map_err(|e| GenerateError::Config(ConfigError::invalid("distribution", e.to_string())))?;
    for _ in 0..MAX_TRUNCATION_REDRAWS {
        let x = normal.sample(rng);
        if x >= floor {
            return Ok(x);
        }
    }
    Err(GenerateError::TruncationExhausted { mean: params.mean, floor })
}

fn quantity<R: Rng + ?Sized>(
    rng: &mut R,
    params: NormalParams,
    cfg: &GeneratorConfig,
) -> Result<Quantity, GenerateError> {
    let x = truncated_normal(rng, params, cfg.spread_kind, cfg.draw_floor)?;
    // A draw at the floor may round below it but never to zero.
    Ok(Quantity::from_units(x).expect("truncated draws are positive"))
}

/// G(n, p) edge set over `n` nodes, redrawn until connected.
fn connected_gnp<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    p: f64,
    max_attempts: u32,
    kind: &'static str,
) -> Result<Vec<(usize, usize)>, GenerateError> {
    for _ in 0..max_attempts {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        if is_connected(n, &edges) {
            return Ok(edges);
        }
    }
    Err(GenerateError::Disconnected { kind, attempts: max_attempts })
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    // union-find over the edge list
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components <= 1
}

pub fn generate_physical_network<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<PhysicalNetwork, GenerateError> {
    cfg.validate()?;
    let edges = connected_gnp(rng, cfg.server_count, cfg.link_probability, cfg.max_connect_attempts, "physical")?;
    let mut capacities = Vec::with_capacity(cfg.server_count);
    for _ in 0..cfg.server_count {
        capacities.push(ResourceVector::new(
            quantity(rng, cfg.node_cpu, cfg)?,
            quantity(rng, cfg.node_memory, cfg)?,
            quantity(rng, cfg.node_gpu, cfg)?,
        ));
    }
    let mut links = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        links.push((a, b, quantity(rng, cfg.link_bandwidth, cfg)?));
    }
    Ok(PhysicalNetwork::new(capacities, links)?)
}

pub fn generate_vnr<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    request_id: RequestId,
    arrival_time: f64,
    rng: &mut R,
) -> Result<Vnr, GenerateError> {
    cfg.validate()?;
    let size = rng.random_range(cfg.vnr_size_min..=cfg.vnr_size_max);
    let edges = connected_gnp(rng, size, cfg.vnr_link_probability, cfg.max_connect_attempts, "virtual")?;
    let mut demands = Vec::with_capacity(size);
    for _ in 0..size {
        demands.push(ResourceVector::new(
            quantity(rng, cfg.vnr_cpu, cfg)?,
            quantity(rng, cfg.vnr_memory, cfg)?,
            quantity(rng, cfg.vnr_gpu, cfg)?,
        ));
    }
    let mut links = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        links.push((a, b, quantity(rng, cfg.vnr_bandwidth, cfg)?));
    }
    let lifetime = truncated_normal(rng, cfg.lifetime, cfg.spread_kind, cfg.lifetime_floor)?;
    Ok(Vnr::new(request_id, demands, links, arrival_time, lifetime)?)
}

/// Arrival instants in `[0, duration)`.
pub fn arrival_times<R: Rng + ?Sized>(cfg: &GeneratorConfig, duration: f64, rng: &mut R) -> Vec<f64> {
    let mut times = Vec::new();
    match cfg.arrival_process {
        ArrivalProcess::Poisson => {
            let exp = rand_distr::Exp::new(cfg.arrival_rate).expect("rate validated positive");
            let mut t = 0.0;
            loop {
                t += exp.sample(rng);
                if t >= duration {
                    break;
                }
                times.push(t);
            }
        }
        ArrivalProcess::Deterministic => {
            let gap = 1.0 / cfg.arrival_rate;
            let mut k = 1u64;
            while (k as f64) * gap < duration {
                times.push(k as f64 * gap);
                k += 1;
            }
        }
    }
    times
}

/// Uniform primary node choice for one arrival.
pub fn pick_primary<R: Rng + ?Sized>(net: &PhysicalNetwork, rng: &mut R) -> NodeId {
    rng.random_range(0..net.node_count())
}
