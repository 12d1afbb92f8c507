//! Seeded random channel specs for tests, benchmarks and sweeps.

use rand::Rng;

use crate::channel::{BlockChannelSpec, Dims, Spaces};
use crate::error::Result;
use crate::table::ConditionalTable;

/// How the side information relates to the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideInfo {
    /// Arbitrary joint law of `(s, u, v)`.
    Random,
    /// `u = k(v)` for a random map `k` on `V^n0`-tuples; `(s, v)` arbitrary.
    CsitFromCsir,
    /// `s = u = v`. Needs equal state, CSIT and CSIR alphabets.
    Perfect,
}

#[derive(Clone, Copy, Debug)]
pub struct SpecShape {
    pub dims: Dims,
    pub n0: usize,
    pub side_info: SideInfo,
}

impl SpecShape {
    pub fn new(dims: Dims, n0: usize) -> Self {
        Self {
            dims,
            n0,
            side_info: SideInfo::Random,
        }
    }

    pub fn with_side_info(mut self, side_info: SideInfo) -> Self {
        self.side_info = side_info;
        self
    }
}

/// A probability vector drawn uniformly from the simplex.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

pub fn random_stochastic<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ConditionalTable {
    let data = (0..rows).flat_map(|_| random_distribution(rng, cols)).collect();
    ConditionalTable::new(rows, cols, data).expect("shape is consistent")
}

pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, shape: &SpecShape) -> Result<BlockChannelSpec> {
    let sp = Spaces::new(shape.dims, shape.n0)?;
    let (ns, nu, nv) = (sp.s.count(), sp.u.count(), sp.v.count());
    let kernel = random_stochastic(rng, sp.x.count() * ns, sp.y.count());
    let mut joint = vec![0.0; ns * nu * nv];
    match shape.side_info {
        SideInfo::Random => {
            joint = random_distribution(rng, joint.len());
        }
        SideInfo::CsitFromCsir => {
            let k: Vec<usize> = (0..nv).map(|_| rng.random_range(0..nu)).collect();
            let sv = random_distribution(rng, ns * nv);
            for s in 0..ns {
                for v in 0..nv {
                    joint[(s * nu + k[v]) * nv + v] = sv[s * nv + v];
                }
            }
        }
        SideInfo::Perfect => {
            assert!(
                ns == nu && nu == nv,
                "perfect side information needs |S| = |U| = |V|"
            );
            let ps = random_distribution(rng, ns);
            for s in 0..ns {
                joint[(s * nu + s) * nv + s] = ps[s];
            }
        }
    }
    // normalize once more so the sum is 1 to the last ulp the validator cares about
    let total: f64 = joint.iter().sum();
    joint.iter_mut().for_each(|p| *p /= total);
    BlockChannelSpec::new(shape.dims, shape.n0, kernel, joint)
}
