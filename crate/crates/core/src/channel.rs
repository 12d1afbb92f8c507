//! Finite state-dependent block-memoryless channels with side information.
//!
//! A channel is described per block of `n0` uses: a kernel
//! `p(y^n0 | x^n0, s^n0)` and a joint law `p(s^n0, u^n0, v^n0)` of the state,
//! the transmitter side information (CSIT, `u`) and the receiver side
//! information (CSIR, `v`). Blocks are independent. State and side information
//! are generated independently of the channel input, which makes the
//! observation kernel
//!
//! ```text
//! p(y, v | x, u) = sum_s p(y | x, s) p(s, u, v) / p(u)
//! ```
//!
//! well defined for every `u` with `p(u) > 0`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::ConditionalTable;
use crate::tuple::{fmt_tuple, TupleSpace};

/// Row-sum tolerance applied to spec tables on ingest.
pub const INGEST_TOL: f64 = 1e-12;
/// Row-sum tolerance applied to composed kernels.
pub const COMPOSED_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    pub name: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// Alphabet sizes of a channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Dims {
    pub x: usize,
    pub y: usize,
    pub s: usize,
    pub u: usize,
    pub v: usize,
}

impl Dims {
    pub fn new(x: usize, y: usize, s: usize, u: usize, v: usize) -> Self {
        Self { x, y, s, u, v }
    }
}

/// A block-memoryless channel with state, CSIT and CSIR.
///
/// Tables are dense and indexed by flattened tuples (see [`TupleSpace`]):
/// kernel rows by `x * |S|^n0 + s`, kernel columns by `y`, and the joint law
/// by `(s * |U|^n0 + u) * |V|^n0 + v`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockChannelSpec {
    x: Alphabet,
    y: Alphabet,
    s: Alphabet,
    u: Alphabet,
    v: Alphabet,
    n0: usize,
    channel_kernel: ConditionalTable,
    side_info_joint: Vec<f64>,
}

impl BlockChannelSpec {
    /// Builds a spec and runs [`validate_spec`] on it.
    pub fn new(
        dims: Dims,
        n0: usize,
        channel_kernel: ConditionalTable,
        side_info_joint: Vec<f64>,
    ) -> Result<Self> {
        let spec = Self::new_unchecked(dims, n0, channel_kernel, side_info_joint);
        let report = validate_spec(&spec);
        if report.is_valid() {
            Ok(spec)
        } else {
            Err(Error::InvalidSpec(report))
        }
    }

    /// Builds a spec without validation. Every other operation in the crate
    /// assumes a valid spec, so this is only for feeding [`validate_spec`].
    pub fn new_unchecked(
        dims: Dims,
        n0: usize,
        channel_kernel: ConditionalTable,
        side_info_joint: Vec<f64>,
    ) -> Self {
        Self {
            x: Alphabet::new("x", dims.x),
            y: Alphabet::new("y", dims.y),
            s: Alphabet::new("s", dims.s),
            u: Alphabet::new("u", dims.u),
            v: Alphabet::new("v", dims.v),
            n0,
            channel_kernel,
            side_info_joint,
        }
    }

    /// Builds a valid spec from closures over tuples. Handy for constructing
    /// channels from a formula.
    pub fn from_fns(
        dims: Dims,
        n0: usize,
        kernel: impl Fn(&[usize], &[usize], &[usize]) -> f64,
        joint: impl Fn(&[usize], &[usize], &[usize]) -> f64,
    ) -> Result<Self> {
        let sp = Spaces::new(dims, n0)?;
        let mut data = Vec::with_capacity(sp.x.count() * sp.s.count() * sp.y.count());
        for x in sp.x.iter() {
            for s in sp.s.iter() {
                for y in sp.y.iter() {
                    data.push(kernel(&x, &s, &y));
                }
            }
        }
        let kernel = ConditionalTable::new(sp.x.count() * sp.s.count(), sp.y.count(), data)?;
        let mut j = Vec::with_capacity(sp.s.count() * sp.u.count() * sp.v.count());
        for s in sp.s.iter() {
            for u in sp.u.iter() {
                for v in sp.v.iter() {
                    j.push(joint(&s, &u, &v));
                }
            }
        }
        Self::new(dims, n0, kernel, j)
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.x.size, self.y.size, self.s.size, self.u.size, self.v.size)
    }

    pub fn alphabets(&self) -> [&Alphabet; 5] {
        [&self.x, &self.y, &self.s, &self.u, &self.v]
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn channel_kernel(&self) -> &ConditionalTable {
        &self.channel_kernel
    }

    pub fn side_info_joint(&self) -> &[f64] {
        &self.side_info_joint
    }

    /// Tuple spaces for the five alphabets. Only valid specs are guaranteed
    /// to have representable spaces.
    pub fn spaces(&self) -> Spaces {
        Spaces::new(self.dims(), self.n0).expect("tuple spaces of a valid spec fit in usize")
    }

    /// Flat index into the joint law.
    pub fn joint_index(&self, s: usize, u: usize, v: usize) -> usize {
        let sp = self.spaces();
        (s * sp.u.count() + u) * sp.v.count() + v
    }

    /// Passes the CSIR through a stochastic map `garble[v][v']` over
    /// `V^n0`-tuples. The receiver can always simulate such a map, so the
    /// capacity of the result never exceeds that of `self`.
    pub fn garble_csir(&self, garble: &ConditionalTable) -> Result<Self> {
        let sp = self.spaces();
        let nv = sp.v.count();
        if garble.rows() != nv || garble.cols() != nv {
            return Err(Error::LengthMismatch {
                what: "CSIR garbling map",
                expected: nv * nv,
                found: garble.rows() * garble.cols(),
            });
        }
        garble.check_stochastic(INGEST_TOL)?;
        let mut joint = vec![0.0; self.side_info_joint.len()];
        for su in 0..sp.s.count() * sp.u.count() {
            let src = &self.side_info_joint[su * nv..(su + 1) * nv];
            let dst = &mut joint[su * nv..(su + 1) * nv];
            for (v, &p) in src.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (w, d) in dst.iter_mut().enumerate() {
                    *d += p * garble.get(v, w);
                }
            }
        }
        Self::new(self.dims(), self.n0, self.channel_kernel.clone(), joint)
    }
}

/// Tuple spaces `X^n0`, `Y^n0`, `S^n0`, `U^n0`, `V^n0`.
#[derive(Clone, Copy, Debug)]
pub struct Spaces {
    pub x: TupleSpace,
    pub y: TupleSpace,
    pub s: TupleSpace,
    pub u: TupleSpace,
    pub v: TupleSpace,
}

impl Spaces {
    pub fn new(dims: Dims, n0: usize) -> Result<Self> {
        let mk = |base: usize| {
            TupleSpace::new(base, n0).ok_or_else(|| {
                Error::InvalidArgument(format!("{base}^{n0} tuples do not fit in memory"))
            })
        };
        Ok(Self {
            x: mk(dims.x)?,
            y: mk(dims.y)?,
            s: mk(dims.s)?,
            u: mk(dims.u)?,
            v: mk(dims.v)?,
        })
    }

    /// Observation columns are `(y, v)` pairs with `y` most significant.
    pub fn obs_count(&self) -> usize {
        self.y.count() * self.v.count()
    }

    pub fn obs_index(&self, y: usize, v: usize) -> usize {
        y * self.v.count() + v
    }

    pub fn split_obs(&self, col: usize) -> (usize, usize) {
        (col / self.v.count(), col % self.v.count())
    }
}

/// One violated invariant of a [`BlockChannelSpec`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyAlphabet { alphabet: String },
    ZeroBlockLength,
    TooLarge { detail: String },
    TableShape { table: &'static str, expected: usize, found: usize },
    NegativeKernelEntry { x: Vec<usize>, s: Vec<usize>, y: Vec<usize>, value: f64 },
    KernelRowSum { x: Vec<usize>, s: Vec<usize>, sum: f64 },
    NegativeJointEntry { s: Vec<usize>, u: Vec<usize>, v: Vec<usize>, value: f64 },
    JointSum { sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyAlphabet { alphabet } => write!(f, "alphabet {alphabet} is empty"),
            Violation::ZeroBlockLength => write!(f, "block length n0 must be at least 1"),
            Violation::TooLarge { detail } => write!(f, "{detail}"),
            Violation::TableShape { table, expected, found } => {
                write!(f, "{table} has {found} entries, expected {expected}")
            }
            Violation::NegativeKernelEntry { x, s, y, value } => write!(
                f,
                "kernel entry p(y={} | x={}, s={}) = {value} is not a probability",
                fmt_tuple(y),
                fmt_tuple(x),
                fmt_tuple(s)
            ),
            Violation::KernelRowSum { x, s, sum } => write!(
                f,
                "kernel row x={}, s={} sums to {sum}",
                fmt_tuple(x),
                fmt_tuple(s)
            ),
            Violation::NegativeJointEntry { s, u, v, value } => write!(
                f,
                "joint entry p(s={}, u={}, v={}) = {value} is not a probability",
                fmt_tuple(s),
                fmt_tuple(u),
                fmt_tuple(v)
            ),
            Violation::JointSum { sum } => write!(f, "side-information joint sums to {sum}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Reports every violated invariant of `spec`. Never fails.
pub fn validate_spec(spec: &BlockChannelSpec) -> ValidationReport {
    let mut out = Vec::new();
    for a in spec.alphabets() {
        if a.size == 0 {
            out.push(Violation::EmptyAlphabet {
                alphabet: a.name.clone(),
            });
        }
    }
    if spec.n0 == 0 {
        out.push(Violation::ZeroBlockLength);
    }
    if !out.is_empty() {
        return ValidationReport { violations: out };
    }
    let sp = match Spaces::new(spec.dims(), spec.n0) {
        Ok(sp) => sp,
        Err(e) => {
            out.push(Violation::TooLarge {
                detail: e.to_string(),
            });
            return ValidationReport { violations: out };
        }
    };

    let k = &spec.channel_kernel;
    let rows = sp.x.count() * sp.s.count();
    let kernel_ok = k.rows() == rows && k.cols() == sp.y.count();
    if !kernel_ok {
        out.push(Violation::TableShape {
            table: "channel kernel",
            expected: rows * sp.y.count(),
            found: k.rows() * k.cols(),
        });
    } else {
        for r in 0..rows {
            let x = sp.x.decode(r / sp.s.count());
            let s = sp.s.decode(r % sp.s.count());
            let row = k.row(r);
            for (y, &p) in row.iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    out.push(Violation::NegativeKernelEntry {
                        x: x.clone(),
                        s: s.clone(),
                        y: sp.y.decode(y),
                        value: p,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= INGEST_TOL) {
                out.push(Violation::KernelRowSum { x, s, sum });
            }
        }
    }

    let j = &spec.side_info_joint;
    let n = sp.s.count() * sp.u.count() * sp.v.count();
    if j.len() != n {
        out.push(Violation::TableShape {
            table: "side-information joint",
            expected: n,
            found: j.len(),
        });
    } else {
        for (i, &p) in j.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                let v = i % sp.v.count();
                let su = i / sp.v.count();
                out.push(Violation::NegativeJointEntry {
                    s: sp.s.decode(su / sp.u.count()),
                    u: sp.u.decode(su % sp.u.count()),
                    v: sp.v.decode(v),
                    value: p,
                });
            }
        }
        let sum: f64 = j.iter().sum();
        if !((sum - 1.0).abs() <= INGEST_TOL) {
            out.push(Violation::JointSum { sum });
        }
    }
    ValidationReport { violations: out }
}

/// `p(u^n0) = sum over s, v of p(s, u, v)`.
pub fn csit_marginal(spec: &BlockChannelSpec) -> Vec<f64> {
    let sp = spec.spaces();
    let (nu, nv) = (sp.u.count(), sp.v.count());
    let mut pu = vec![0.0; nu];
    for (i, &p) in spec.side_info_joint.iter().enumerate() {
        pu[(i / nv) % nu] += p;
    }
    pu
}

/// `p(v^n0)`.
pub fn csir_marginal(spec: &BlockChannelSpec) -> Vec<f64> {
    let nv = spec.spaces().v.count();
    let mut pv = vec![0.0; nv];
    for (i, &p) in spec.side_info_joint.iter().enumerate() {
        pv[i % nv] += p;
    }
    pv
}

/// `p(y^n0, v^n0 | x^n0, u^n0)` together with `p(u^n0)`.
///
/// Rows are indexed by `x * |U|^n0 + u`, columns by `y * |V|^n0 + v`. Rows of
/// CSIT tuples with zero probability are uniform and flagged in
/// [`degenerate_u`](Self::degenerate_u).
#[derive(Clone, Debug)]
pub struct ObservationKernel {
    table: ConditionalTable,
    csit_marginal: Vec<f64>,
    degenerate_u: Vec<bool>,
    spaces: Spaces,
    n0: usize,
}

impl ObservationKernel {
    pub fn table(&self) -> &ConditionalTable {
        &self.table
    }

    pub fn csit_marginal(&self) -> &[f64] {
        &self.csit_marginal
    }

    /// `true` for CSIT tuples whose rows were filled uniformly because
    /// `p(u) = 0`.
    pub fn degenerate_u(&self) -> &[bool] {
        &self.degenerate_u
    }

    pub fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn row_index(&self, x: usize, u: usize) -> usize {
        x * self.spaces.u.count() + u
    }

    pub fn row(&self, x: usize, u: usize) -> &[f64] {
        self.table.row(self.row_index(x, u))
    }

    /// `p(y, v | x, u)` for flattened tuples.
    pub fn prob(&self, y: usize, v: usize, x: usize, u: usize) -> f64 {
        self.table
            .get(self.row_index(x, u), self.spaces.obs_index(y, v))
    }

    /// Evaluator of the `J`-block product kernel.
    pub fn extend_blocks(&self, blocks: usize) -> Result<BlockProduct<'_>> {
        if blocks == 0 {
            return Err(Error::InvalidArgument("block count must be at least 1".into()));
        }
        Ok(BlockProduct {
            kernel: self,
            blocks,
        })
    }
}

/// Builds the observation kernel from the channel kernel and the joint law.
pub fn compose_observation_kernel(spec: &BlockChannelSpec) -> ObservationKernel {
    let sp = spec.spaces();
    let (nx, ns, nu, nv) = (sp.x.count(), sp.s.count(), sp.u.count(), sp.v.count());
    let pu = csit_marginal(spec);
    let mut table = ConditionalTable::zeros(nx * nu, sp.obs_count());
    let degenerate_u: Vec<bool> = pu.iter().map(|&p| p <= 0.0).collect();
    let uniform = 1.0 / sp.obs_count() as f64;

    for x in 0..nx {
        for u in 0..nu {
            let row = table.row_mut(x * nu + u);
            if degenerate_u[u] {
                row.fill(uniform);
                continue;
            }
            for s in 0..ns {
                let w = spec.channel_kernel.row(x * ns + s);
                let base = (s * nu + u) * nv;
                for v in 0..nv {
                    let a = spec.side_info_joint[base + v] / pu[u];
                    if a == 0.0 {
                        continue;
                    }
                    for (y, &py) in w.iter().enumerate() {
                        row[y * nv + v] += py * a;
                    }
                }
            }
        }
    }
    ObservationKernel {
        table,
        csit_marginal: pu,
        degenerate_u,
        spaces: sp,
        n0: spec.n0,
    }
}

/// `p(y^n, v^n | x^n, u^n)` for `n = J * n0`, as a product of per-block
/// kernel values.
#[derive(Clone, Copy, Debug)]
pub struct BlockProduct<'a> {
    kernel: &'a ObservationKernel,
    blocks: usize,
}

impl BlockProduct<'_> {
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Natural-log probability of symbol sequences of length `J * n0`.
    pub fn log_prob(&self, y: &[usize], v: &[usize], x: &[usize], u: &[usize]) -> Result<f64> {
        let n = self.blocks * self.kernel.n0;
        for seq in [y, v, x, u] {
            if seq.len() != n {
                return Err(Error::LengthMismatch {
                    what: "symbol sequence",
                    expected: n,
                    found: seq.len(),
                });
            }
        }
        let sp = &self.kernel.spaces;
        let n0 = self.kernel.n0;
        let mut total = 0.0;
        for j in 0..self.blocks {
            let r = j * n0..(j + 1) * n0;
            let p = self.kernel.prob(
                sp.y.encode(&y[r.clone()]),
                sp.v.encode(&v[r.clone()]),
                sp.x.encode(&x[r.clone()]),
                sp.u.encode(&u[r]),
            );
            total += p.ln();
        }
        Ok(total)
    }

    pub fn prob(&self, y: &[usize], v: &[usize], x: &[usize], u: &[usize]) -> Result<f64> {
        self.log_prob(y, v, x, u).map(f64::exp)
    }
}
