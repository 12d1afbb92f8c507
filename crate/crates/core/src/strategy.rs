//! Causal within-block Shannon strategies and the equivalent channel.
//!
//! A strategy is a tuple `(t_1, ..., t_n0)` where `t_i` maps the CSIT prefix
//! `u_1..u_i` to an input symbol. Strategy `t_i` is stored as a table with
//! `|U|^i` entries, one per prefix in lexicographic order. The whole strategy
//! flattens to a base-`|X|` number whose digits run over position 1's table,
//! then position 2's, and so on, most significant first.
//!
//! Averaging the observation kernel over the CSIT turns the state-dependent
//! channel into a state-free channel from strategies to `(y^n0, v^n0)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{compose_observation_kernel, BlockChannelSpec, Dims, Spaces, COMPOSED_TOL};
use crate::error::{Error, Result};
use crate::table::{check_distribution, ConditionalTable};

/// Default cap on the number of enumerated strategies.
pub const DEFAULT_STRATEGY_CAP: u64 = 65_536;

/// `prod_{i=1}^{n0} x_size^(u_size^i)`, or [`Error::CapExceeded`] if that is
/// larger than `cap`.
pub fn strategy_count(x_size: usize, u_size: usize, n0: usize, cap: u64) -> Result<u64> {
    if x_size == 0 || u_size == 0 || n0 == 0 {
        return Err(Error::InvalidArgument(
            "alphabet sizes and block length must be positive".into(),
        ));
    }
    let exact = exact_count(x_size as u128, u_size as u128, n0);
    match exact {
        Some(n) if n <= cap as u128 => Ok(n as u64),
        required => Err(Error::CapExceeded { required, cap }),
    }
}

fn exact_count(x: u128, u: u128, n0: usize) -> Option<u128> {
    if x == 1 {
        return Some(1);
    }
    let mut digits: u128 = 0;
    let mut prefixes: u128 = 1;
    for _ in 0..n0 {
        prefixes = prefixes.checked_mul(u)?;
        digits = digits.checked_add(prefixes)?;
    }
    x.checked_pow(u32::try_from(digits).ok()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StrategyIndex(pub usize);

/// A causal block strategy: `maps[i]` has `|U|^(i+1)` entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Strategy {
    maps: Vec<Vec<usize>>,
}

impl Strategy {
    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    /// `x_i = t_i(u_1..u_i)`. Each output symbol reads only its prefix.
    pub fn apply(&self, u: &[usize], u_size: usize) -> Vec<usize> {
        debug_assert_eq!(u.len(), self.maps.len());
        let mut prefix = 0;
        self.maps
            .iter()
            .zip(u)
            .map(|(map, &ui)| {
                prefix = prefix * u_size + ui;
                map[prefix]
            })
            .collect()
    }
}

/// The set of strategies for given `|X|`, `|U|` and `n0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategySpace {
    x_size: usize,
    u_size: usize,
    n0: usize,
    count: usize,
    /// `weights[d] = x_size^(digits - 1 - d)`; empty when `x_size == 1`.
    weights: Vec<usize>,
    /// Digit offset of each position's table.
    offsets: Vec<usize>,
}

impl StrategySpace {
    pub fn new(x_size: usize, u_size: usize, n0: usize, cap: u64) -> Result<Self> {
        let count = strategy_count(x_size, u_size, n0, cap)? as usize;
        let mut offsets = Vec::with_capacity(n0);
        let mut weights = Vec::new();
        if x_size > 1 {
            let mut digits = 0;
            let mut prefixes = 1;
            for _ in 0..n0 {
                offsets.push(digits);
                prefixes *= u_size;
                digits += prefixes;
            }
            weights = vec![1; digits];
            for d in (0..digits.saturating_sub(1)).rev() {
                weights[d] = weights[d + 1] * x_size;
            }
        }
        Ok(Self {
            x_size,
            u_size,
            n0,
            count,
            weights,
            offsets,
        })
    }

    pub fn for_dims(dims: Dims, n0: usize, cap: u64) -> Result<Self> {
        Self::new(dims.x, dims.u, n0, cap)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    fn check(&self, index: StrategyIndex) -> Result<()> {
        if index.0 >= self.count {
            return Err(Error::IndexOutOfRange {
                index: index.0 as u64,
                count: self.count as u64,
            });
        }
        Ok(())
    }

    fn digit(&self, index: usize, d: usize) -> usize {
        if self.x_size == 1 {
            0
        } else {
            (index / self.weights[d]) % self.x_size
        }
    }

    pub fn index_to_strategy(&self, index: StrategyIndex) -> Result<Strategy> {
        self.check(index)?;
        let mut maps = Vec::with_capacity(self.n0);
        let mut prefixes = 1;
        for i in 0..self.n0 {
            prefixes *= self.u_size;
            let map = (0..prefixes)
                .map(|p| match self.offsets.get(i) {
                    Some(off) => self.digit(index.0, off + p),
                    None => 0,
                })
                .collect();
            maps.push(map);
        }
        Ok(Strategy { maps })
    }

    pub fn strategy_to_index(&self, strategy: &Strategy) -> Result<StrategyIndex> {
        if strategy.maps.len() != self.n0 {
            return Err(Error::LengthMismatch {
                what: "strategy positions",
                expected: self.n0,
                found: strategy.maps.len(),
            });
        }
        let mut index = 0usize;
        let mut prefixes = 1;
        for map in &strategy.maps {
            prefixes *= self.u_size;
            if map.len() != prefixes {
                return Err(Error::LengthMismatch {
                    what: "strategy table",
                    expected: prefixes,
                    found: map.len(),
                });
            }
            for &x in map {
                if x >= self.x_size {
                    return Err(Error::IndexOutOfRange {
                        index: x as u64,
                        count: self.x_size as u64,
                    });
                }
                index = index * self.x_size + x;
            }
        }
        Ok(StrategyIndex(index))
    }

    /// Builds the strategy whose position-`i` table is `f(i, prefix)` with `i`
    /// counted from 0.
    pub fn strategy_from_fn(&self, f: impl Fn(usize, &[usize]) -> usize) -> Strategy {
        let maps = (0..self.n0)
            .map(|i| {
                let sp = crate::tuple::TupleSpace::new(self.u_size, i + 1).expect("fits");
                sp.iter().map(|p| f(i, &p)).collect()
            })
            .collect();
        Strategy { maps }
    }

    /// Flattened `x^n0` for strategy `index` and CSIT tuple `u`, without
    /// decoding the strategy.
    pub fn apply_index(&self, index: StrategyIndex, u: &[usize]) -> usize {
        debug_assert_eq!(u.len(), self.n0);
        let mut x = 0;
        let mut prefix = 0;
        for (i, &ui) in u.iter().enumerate() {
            prefix = prefix * self.u_size + ui;
            let xi = if self.x_size == 1 {
                0
            } else {
                self.digit(index.0, self.offsets[i] + prefix)
            };
            x = x * self.x_size + xi;
        }
        x
    }

    /// `p(x^n0 | u^n0) = sum of p_t(t) over strategies with t(u) = x`.
    pub fn induced_input_distribution(&self, p_t: &[f64], u: &[usize]) -> Result<Vec<f64>> {
        if p_t.len() != self.count {
            return Err(Error::LengthMismatch {
                what: "strategy distribution",
                expected: self.count,
                found: p_t.len(),
            });
        }
        check_distribution(p_t, 1e-9)?;
        if u.len() != self.n0 || u.iter().any(|&s| s >= self.u_size) {
            return Err(Error::InvalidArgument(format!("bad CSIT tuple {u:?}")));
        }
        let nx = self.x_size.pow(self.n0 as u32);
        let mut px = vec![0.0; nx];
        for (t, &p) in p_t.iter().enumerate() {
            if p != 0.0 {
                px[self.apply_index(StrategyIndex(t), u)] += p;
            }
        }
        Ok(px)
    }

    /// All of [`induced_input_distribution`](Self::induced_input_distribution)
    /// as a table with rows indexed by `u^n0` and columns by `x^n0`.
    pub fn induced_conditional(&self, p_t: &[f64]) -> Result<ConditionalTable> {
        let sp = crate::tuple::TupleSpace::new(self.u_size, self.n0).expect("fits");
        let rows = sp
            .iter()
            .map(|u| self.induced_input_distribution(p_t, &u))
            .collect::<Result<Vec<_>>>()?;
        ConditionalTable::from_rows(rows)
    }
}

/// The state-free channel `p(y^n0, v^n0 | t^n0)`.
///
/// Rows follow the canonical strategy order; columns are `(y, v)` tuples with
/// `y` most significant.
#[derive(Clone, Debug)]
pub struct EquivalentChannel {
    kernel: ConditionalTable,
    strategies: StrategySpace,
    spaces: Spaces,
    dims: Dims,
    source: Option<String>,
}

impl EquivalentChannel {
    /// Wraps an arbitrary kernel as a channel with `|U| = |V| = 1`, `n0 = 1`.
    /// Rows are inputs, columns outputs.
    pub fn from_table(kernel: ConditionalTable) -> Result<Self> {
        kernel.check_stochastic(COMPOSED_TOL)?;
        let dims = Dims::new(kernel.rows(), kernel.cols(), 1, 1, 1);
        Ok(Self {
            strategies: StrategySpace::new(dims.x, 1, 1, u64::MAX)?,
            spaces: Spaces::new(dims, 1)?,
            kernel,
            dims,
            source: None,
        })
    }

    pub fn kernel(&self) -> &ConditionalTable {
        &self.kernel
    }

    pub fn t_count(&self) -> usize {
        self.kernel.rows()
    }

    pub fn strategies(&self) -> &StrategySpace {
        &self.strategies
    }

    pub fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn n0(&self) -> usize {
        self.strategies.n0
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    /// `p(v^n0 | t)` for one row.
    pub fn v_marginal(&self, t: usize) -> Vec<f64> {
        let nv = self.spaces.v.count();
        let mut pv = vec![0.0; nv];
        for (c, &p) in self.kernel.row(t).iter().enumerate() {
            pv[c % nv] += p;
        }
        pv
    }

    /// Largest componentwise deviation between any row's `v`-marginal and
    /// row 0's. Zero up to rounding because strategies are independent of
    /// the CSIR.
    pub fn max_v_marginal_deviation(&self) -> f64 {
        let reference = self.v_marginal(0);
        (1..self.t_count())
            .flat_map(|t| {
                self.v_marginal(t)
                    .into_iter()
                    .zip(reference.clone())
                    .map(|(a, b)| (a - b).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }
}

/// Averages the observation kernel over CSIT for every strategy.
pub fn build_equivalent_channel(spec: &BlockChannelSpec, cap: u64) -> Result<EquivalentChannel> {
    let strategies = StrategySpace::for_dims(spec.dims(), spec.n0(), cap)?;
    let obs = compose_observation_kernel(spec);
    let spaces = *obs.spaces();
    let pu = obs.csit_marginal();
    let u_tuples: Vec<(usize, Vec<usize>)> = spaces
        .u
        .iter()
        .enumerate()
        .filter(|(u, _)| pu[*u] > 0.0)
        .collect();
    let cols = spaces.obs_count();
    let mut data = vec![0.0; strategies.count() * cols];
    data.par_chunks_mut(cols).enumerate().for_each(|(t, row)| {
        for (u, tuple) in &u_tuples {
            let x = strategies.apply_index(StrategyIndex(t), tuple);
            for (r, &p) in row.iter_mut().zip(obs.row(x, *u)) {
                *r += pu[*u] * p;
            }
        }
    });
    let kernel = ConditionalTable::new(strategies.count(), cols, data)?;
    Ok(EquivalentChannel {
        kernel,
        strategies,
        spaces,
        dims: spec.dims(),
        source: None,
    })
}
