#![allow(dead_code)]

pub mod oracle;

use devine_core::network::{PhysicalNetwork, Vnr};
use devine_core::resources::{Quantity, ResourceVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn q(units: f64) -> Quantity {
    Quantity::from_units(units).unwrap()
}

pub fn rv(cpu: f64, memory: f64, gpu: f64) -> ResourceVector {
    ResourceVector::from_units(cpu, memory, gpu).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected network: a random spanning tree plus extra edges.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, extra_p: f64, cap: (u32, u32), bw: (u32, u32)) -> PhysicalNetwork {
    let mut links = Vec::new();
    for b in 1..n {
        let a = rng.random_range(0..b);
        links.push((a, b));
    }
    for a in 0..n {
        for b in a + 1..n {
            if !links.contains(&(a, b)) && rng.random_bool(extra_p) {
                links.push((a, b));
            }
        }
    }
    let caps = (0..n)
        .map(|_| {
            let c = rng.random_range(cap.0..=cap.1) as f64;
            let m = rng.random_range(cap.0..=cap.1) as f64;
            rv(c, m, c)
        })
        .collect();
    let links = links.into_iter().map(|(a, b)| (a, b, q(rng.random_range(bw.0..=bw.1) as f64))).collect();
    PhysicalNetwork::new(caps, links).unwrap()
}

/// Random connected VNR with `k` nodes.
pub fn random_vnr<R: Rng>(rng: &mut R, id: u64, k: usize, demand: (u32, u32), bw: (u32, u32)) -> Vnr {
    let mut links = Vec::new();
    for b in 1..k {
        let a = rng.random_range(0..b);
        links.push((a, b));
    }
    for a in 0..k {
        for b in a + 1..k {
            if !links.contains(&(a, b)) && rng.random_bool(0.5) {
                links.push((a, b));
            }
        }
    }
    let demands = (0..k)
        .map(|_| {
            let c = rng.random_range(demand.0..=demand.1) as f64;
            rv(c, c, c)
        })
        .collect();
    let links = links.into_iter().map(|(a, b)| (a, b, q(rng.random_range(bw.0..=bw.1) as f64))).collect();
    Vnr::new(id, demands, links, 0.0, 10.0).unwrap()
}

/// Path graph 0 - 1 - ... - (n-1).
pub fn line(n: usize, cpu: f64, bw: f64) -> PhysicalNetwork {
    let caps = vec![rv(cpu, cpu, cpu); n];
    let links = (1..n).map(|b| (b - 1, b, q(bw))).collect();
    PhysicalNetwork::new(caps, links).unwrap()
}
