//! Random generation of the four traffic models: node roles, placement, and
//! per-stream demands.
//!
//! Each generator is a pure function of `(n, d, seed, params, fading model)`;
//! placement, demand sampling and pairwise fading draw from separate streams
//! derived from the one seed, so instances are bit-reproducible.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, FadingModel, PairFading};
use crate::error::{Error, Result};
use crate::geometry::{place_nodes, Point};
use crate::rng;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Asymmetric,
    Multicast,
    Cluster,
    Hybrid,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Model::Asymmetric => "asymmetric",
            Model::Multicast => "multicast",
            Model::Cluster => "cluster",
            Model::Hybrid => "hybrid",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymmetric" => Ok(Model::Asymmetric),
            "multicast" => Ok(Model::Multicast),
            "cluster" => Ok(Model::Cluster),
            "hybrid" => Ok(Model::Hybrid),
            other => Err(Error::invalid(format!("unknown traffic model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Source,
    Destination,
    Client,
    ClusterHead,
    Wireless,
    AccessPoint,
}

/// A demand endpoint: a concrete node, or the cluster scheme's "any head"
/// freedom, resolved later by routing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Node(usize),
    AnyHead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub stream: usize,
    pub source: Endpoint,
    /// Singleton except in multicast.
    pub dests: Vec<Endpoint>,
}

/// One random draw of a network: positions, roles, demands, fading source and
/// channel parameters. Immutable after generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance<T> {
    pub model: Model,
    pub d: T,
    /// Primary node count.
    pub n: usize,
    /// Secondary node count (or multicast fan-out), `max(1, floor(n^d))`.
    pub m: usize,
    pub seed: u64,
    pub positions: Vec<Point<T>>,
    pub roles: Vec<Role>,
    pub demands: Vec<Demand>,
    pub fading: PairFading<T>,
    pub params: ChannelParams<T>,
}

impl<T: Real> NetworkInstance<T> {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn nodes_with_role(&self, role: Role) -> impl Iterator<Item = usize> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(move |(_, &r)| r == role)
            .map(|(i, _)| i)
    }

    /// Serialises to JSON with sorted keys (byte-stable for golden tests).
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)
            .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
        serde_json::to_string_pretty(&value)
            .map_err(|e| Error::invalid(format!("serialization failed: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("deserialization failed: {e}")))
    }
}

/// Secondary node count `m(n) = max(1, floor(n^d))`.
pub fn secondary_count<T: Real>(n: usize, d: T) -> usize {
    let m = (n as f64).powf(d.to_f64().unwrap_or(0.0)).floor() as usize;
    m.max(1)
}

fn check_nd<T: Real>(n: usize, d: T, min_n: usize) -> Result<()> {
    if n < min_n {
        return Err(Error::invalid(format!("model needs n >= {min_n}, got {n}")));
    }
    let df = d.to_f64().unwrap_or(f64::NAN);
    if !(0.0 < df && df < 1.0) {
        return Err(Error::invalid(format!("d must lie in (0, 1), got {df}")));
    }
    Ok(())
}

/// Asymmetric: `n` sources, `m` destinations; each source picks one uniform
/// destination.
pub fn gen_asymmetric<T: Real>(
    n: usize,
    d: T,
    seed: u64,
    params: ChannelParams<T>,
    fading: FadingModel<T>,
) -> Result<NetworkInstance<T>> {
    check_nd(n, d, 2)?;
    let m = secondary_count(n, d);
    let mut pos_rng = rng::chacha(seed, rng::TAG_POSITIONS, 0);
    let positions = place_nodes(n + m, &mut pos_rng);
    let mut roles = vec![Role::Source; n];
    roles.extend(std::iter::repeat_n(Role::Destination, m));

    let mut demand_rng = rng::chacha(seed, rng::TAG_DEMANDS, 0);
    let demands = (0..n)
        .map(|i| Demand {
            stream: i,
            source: Endpoint::Node(i),
            dests: vec![Endpoint::Node(n + demand_rng.gen_range(0..m))],
        })
        .collect();

    Ok(NetworkInstance {
        model: Model::Asymmetric,
        d,
        n,
        m,
        seed,
        positions,
        roles,
        demands,
        fading: PairFading::new(seed, fading),
        params,
    })
}

/// Multicast: `n` nodes; each node's packet targets `m` distinct uniform
/// picks among the others (sampling without replacement per demand).
pub fn gen_multicast<T: Real>(
    n: usize,
    d: T,
    seed: u64,
    params: ChannelParams<T>,
    fading: FadingModel<T>,
) -> Result<NetworkInstance<T>> {
    check_nd(n, d, 2)?;
    let m = secondary_count(n, d);
    if m > n - 1 {
        return Err(Error::invalid(format!(
            "multicast fan-out m = {m} exceeds the {} other nodes",
            n - 1
        )));
    }
    let mut pos_rng = rng::chacha(seed, rng::TAG_POSITIONS, 0);
    let positions = place_nodes(n, &mut pos_rng);
    let roles = vec![Role::Wireless; n];

    let mut demand_rng = rng::chacha(seed, rng::TAG_DEMANDS, 0);
    let demands = (0..n)
        .map(|i| {
            // Floyd's algorithm would also do; index sampling over n-1 others
            // keeps the draw count at m without an O(n) shuffle.
            let mut picked = std::collections::HashSet::with_capacity(m);
            while picked.len() < m {
                let c = demand_rng.gen_range(0..n - 1);
                let c = if c >= i { c + 1 } else { c };
                picked.insert(c);
            }
            let mut dests: Vec<usize> = picked.into_iter().collect();
            dests.sort_unstable();
            Demand {
                stream: i,
                source: Endpoint::Node(i),
                dests: dests.into_iter().map(Endpoint::Node).collect(),
            }
        })
        .collect();

    Ok(NetworkInstance {
        model: Model::Multicast,
        d,
        n,
        m,
        seed,
        positions,
        roles,
        demands,
        fading: PairFading::new(seed, fading),
        params,
    })
}

/// Cluster: `n` clients, `m` heads; per client one uplink and one downlink
/// demand carrying the any-head sentinel (head choice is a routing freedom).
pub fn gen_cluster<T: Real>(
    n: usize,
    d: T,
    seed: u64,
    params: ChannelParams<T>,
    fading: FadingModel<T>,
) -> Result<NetworkInstance<T>> {
    check_nd(n, d, 1)?;
    let m = secondary_count(n, d);
    let mut pos_rng = rng::chacha(seed, rng::TAG_POSITIONS, 0);
    let positions = place_nodes(n + m, &mut pos_rng);
    let mut roles = vec![Role::Client; n];
    roles.extend(std::iter::repeat_n(Role::ClusterHead, m));

    let mut demands = Vec::with_capacity(2 * n);
    for i in 0..n {
        demands.push(Demand {
            stream: 2 * i,
            source: Endpoint::Node(i),
            dests: vec![Endpoint::AnyHead],
        });
        demands.push(Demand {
            stream: 2 * i + 1,
            source: Endpoint::AnyHead,
            dests: vec![Endpoint::Node(i)],
        });
    }

    Ok(NetworkInstance {
        model: Model::Cluster,
        d,
        n,
        m,
        seed,
        positions,
        roles,
        demands,
        fading: PairFading::new(seed, fading),
        params,
    })
}

/// Hybrid: `n` wireless nodes whose destinations form a uniform random
/// derangement, plus `m` access points with no traffic of their own.
pub fn gen_hybrid<T: Real>(
    n: usize,
    d: T,
    seed: u64,
    params: ChannelParams<T>,
    fading: FadingModel<T>,
) -> Result<NetworkInstance<T>> {
    check_nd(n, d, 2)?;
    let m = secondary_count(n, d);
    let mut pos_rng = rng::chacha(seed, rng::TAG_POSITIONS, 0);
    let positions = place_nodes(n + m, &mut pos_rng);
    let mut roles = vec![Role::Wireless; n];
    roles.extend(std::iter::repeat_n(Role::AccessPoint, m));

    let mut demand_rng = rng::chacha(seed, rng::TAG_DEMANDS, 0);
    let sigma = random_derangement(n, &mut demand_rng);
    let demands = (0..n)
        .map(|i| Demand {
            stream: i,
            source: Endpoint::Node(i),
            dests: vec![Endpoint::Node(sigma[i])],
        })
        .collect();

    Ok(NetworkInstance {
        model: Model::Hybrid,
        d,
        n,
        m,
        seed,
        positions,
        roles,
        demands,
        fading: PairFading::new(seed, fading),
        params,
    })
}

/// Uniform random derangement by rejection over uniform permutations
/// (acceptance probability -> 1/e, so expected < 3 shuffles).
fn random_derangement<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            return perm;
        }
    }
}
