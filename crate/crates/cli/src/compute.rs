//! Cached vertex and kernel enumeration.

use mdp_core::geometry::{
    build_constraints, enumerate_kernels_with_limit, enumerate_vertices_with_limit, KernelMechanism,
    DEFAULT_KERNEL_LIMIT, DEFAULT_VERTEX_LIMIT,
};
use mdp_core::mechanisms::Hyper;
use mdp_core::scalar::serde_rational;
use mdp_core::{Error, MetricSpace, Rational, Result};
use serde::{Deserialize, Serialize};

use crate::cache::{self, Cache};

pub struct Ctx {
    pub cache: Option<Cache>,
    /// On a cache hit, also recompute and require byte-identical payloads.
    pub verify: bool,
}

#[derive(Serialize, Deserialize)]
struct VertexList(#[serde(with = "serde_rational::matrix")] Vec<Vec<Rational>>);

#[derive(Serialize, Deserialize)]
pub struct KernelJson {
    pub vertex_indices: Vec<usize>,
    #[serde(flatten)]
    pub hyper: Hyper<Rational>,
}

pub fn vertices_payload(vertices: &[Vec<Rational>]) -> String {
    serde_json::to_string(&VertexList(vertices.to_vec())).expect("vertices serialise")
}

pub fn kernels_payload(kernels: &[KernelMechanism<Rational>]) -> String {
    let list: Vec<KernelJson> = kernels
        .iter()
        .map(|k| KernelJson { vertex_indices: k.vertex_indices.clone(), hyper: k.hyper.clone() })
        .collect();
    serde_json::to_string(&list).expect("kernels serialise")
}

fn corrupt(e: serde_json::Error) -> Error {
    Error::Parse(format!("cache entry: {e}"))
}

impl Ctx {
    fn cached(&self, space: &MetricSpace, operation: &str, fresh: impl Fn() -> Result<String>) -> Result<String> {
        let (Some(cache), Some(spec)) = (&self.cache, space.spec()) else {
            return fresh();
        };
        let key = cache::key(&spec.canonical_json(), operation);
        if let Some(hit) = cache.get(&key) {
            if self.verify && fresh()? != hit {
                return Err(Error::Internal(format!("cache entry {key} differs from a fresh computation")));
            }
            log::debug!("cache hit {key} in {}", cache.dir().display());
            return Ok(hit);
        }
        let payload = fresh()?;
        if let Err(e) = cache.put(&key, &payload) {
            log::warn!("could not write cache entry {key}: {e}");
        }
        Ok(payload)
    }

    pub fn vertices(&self, space: &MetricSpace, limit: Option<u64>) -> Result<Vec<Vec<Rational>>> {
        let compute = || {
            let cs = build_constraints(space);
            Ok(vertices_payload(&enumerate_vertices_with_limit(&cs, limit.unwrap_or(DEFAULT_VERTEX_LIMIT))?))
        };
        let payload = match limit {
            Some(_) => compute()?,
            None => self.cached(space, "vertices", compute)?,
        };
        let list: VertexList = serde_json::from_str(&payload).map_err(corrupt)?;
        Ok(list.0)
    }

    pub fn kernels(
        &self,
        space: &MetricSpace,
        vertices: &[Vec<Rational>],
        limit: Option<u64>,
    ) -> Result<Vec<KernelMechanism<Rational>>> {
        let compute = || {
            let kernels = enumerate_kernels_with_limit(vertices, space.len(), limit.unwrap_or(DEFAULT_KERNEL_LIMIT))?;
            Ok(kernels_payload(&kernels))
        };
        let payload = match limit {
            Some(_) => compute()?,
            None => self.cached(space, "kernels", compute)?,
        };
        let list: Vec<KernelJson> = serde_json::from_str(&payload).map_err(corrupt)?;
        Ok(list.into_iter().map(|k| KernelMechanism { vertex_indices: k.vertex_indices, hyper: k.hyper }).collect())
    }
}
