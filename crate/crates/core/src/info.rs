//! Entropy and mutual information of finite distributions, in bits.

use crate::error::{Error, Result};
use crate::table::ConditionalTable;

/// `H(p)` in bits with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// Binary entropy function.
pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// `I(input; output)` for input law `p_in` and channel `kernel`.
pub fn mutual_information(p_in: &[f64], kernel: &ConditionalTable) -> f64 {
    debug_assert_eq!(p_in.len(), kernel.rows());
    let mut q = vec![0.0; kernel.cols()];
    for (row, &p) in kernel.iter_rows().zip(p_in) {
        if p > 0.0 {
            for (qo, &w) in q.iter_mut().zip(row) {
                *qo += p * w;
            }
        }
    }
    let mut total = 0.0;
    for (row, &p) in kernel.iter_rows().zip(p_in) {
        if p <= 0.0 {
            continue;
        }
        let d: f64 = row
            .iter()
            .zip(&q)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &qo)| w * (w / qo).log2())
            .sum();
        total += p * d;
    }
    total.max(0.0)
}

/// A joint law `p(a, b, c)` stored densely with `a` most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleJoint {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl TripleJoint {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        let n = dims.iter().product();
        if data.len() != n {
            return Err(Error::LengthMismatch {
                what: "triple joint",
                expected: n,
                found: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    /// `p(t) * p(y, v | t)` for a channel whose columns are `y * nv + v`.
    pub fn from_channel(p_in: &[f64], kernel: &ConditionalTable, nv: usize) -> Result<Self> {
        if p_in.len() != kernel.rows() {
            return Err(Error::LengthMismatch {
                what: "input distribution",
                expected: kernel.rows(),
                found: p_in.len(),
            });
        }
        if nv == 0 || !kernel.cols().is_multiple_of(nv) {
            return Err(Error::InvalidArgument(format!(
                "{} columns do not split into (y, v) with |V| = {nv}",
                kernel.cols()
            )));
        }
        let data = kernel
            .iter_rows()
            .zip(p_in)
            .flat_map(|(row, &p)| row.iter().map(move |&w| p * w))
            .collect();
        Self::new([kernel.rows(), kernel.cols() / nv, nv], data)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dims[1] + b) * self.dims[2] + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// `I(A; B | C)` from the chain-rule definition
/// `sum p(a,b,c) log [p(a,b,c) p(c) / (p(a,c) p(b,c))]`.
pub fn conditional_mutual_information(joint: &TripleJoint) -> f64 {
    let [na, nb, nc] = joint.dims;
    let mut p_c = vec![0.0; nc];
    let mut p_ac = vec![0.0; na * nc];
    let mut p_bc = vec![0.0; nb * nc];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let p = joint.get(a, b, c);
                p_c[c] += p;
                p_ac[a * nc + c] += p;
                p_bc[b * nc + c] += p;
            }
        }
    }
    let mut total = 0.0;
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let p = joint.get(a, b, c);
                if p > 0.0 {
                    // sum of logs: products of tiny marginals would underflow
                    total += p * (p.log2() + p_c[c].log2() - p_ac[a * nc + c].log2() - p_bc[b * nc + c].log2());
                }
            }
        }
    }
    total.max(0.0)
}

/// `I(A; C)` from the same joint, i.e. the gap between `I(A; B, C)` and
/// `I(A; B | C)`.
pub fn mutual_information_with_last(joint: &TripleJoint) -> f64 {
    let [na, nb, nc] = joint.dims;
    let mut p_a = vec![0.0; na];
    let mut p_c = vec![0.0; nc];
    let mut p_ac = vec![0.0; na * nc];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let p = joint.get(a, b, c);
                p_a[a] += p;
                p_c[c] += p;
                p_ac[a * nc + c] += p;
            }
        }
    }
    let mut total = 0.0;
    for a in 0..na {
        for c in 0..nc {
            let p = p_ac[a * nc + c];
            if p > 0.0 {
                total += p * (p.log2() - p_a[a].log2() - p_c[c].log2());
            }
        }
    }
    total.max(0.0)
}
