//! Brute-force capacity oracle for channels with at most eight inputs.
//!
//! Searches a simplex grid, then polishes the best grid point by pairwise mass
//! transfers with an exact golden-section line search. Mutual information is
//! concave in the input law, so a point no pairwise transfer can improve is a
//! global maximizer. The search shares nothing with the alternating
//! maximization beyond the mutual-information formula; it exists to check it.

use crate::error::{Error, Result};
use crate::info::mutual_information;
use crate::strategy::EquivalentChannel;
use crate::table::ConditionalTable;

pub const MAX_ORACLE_INPUTS: usize = 8;

/// Upper bound on evaluated grid points. The grid is coarsened to fit.
const GRID_BUDGET: u128 = 60_000;
const LINE_SEARCH_STEPS: usize = 90;
const MAX_SWEEPS: usize = 5_000;

/// Capacity of `channel` in bits per channel use.
pub fn brute_force_capacity(channel: &EquivalentChannel, resolution: f64) -> Result<f64> {
    let rows = channel.t_count();
    if rows > MAX_ORACLE_INPUTS {
        return Err(Error::OracleTooLarge {
            count: rows,
            max: MAX_ORACLE_INPUTS,
        });
    }
    Ok(brute_force_capacity_table(channel.kernel(), resolution)? / channel.n0() as f64)
}

/// `max_p I(p; kernel)` in bits.
pub fn brute_force_capacity_table(kernel: &ConditionalTable, resolution: f64) -> Result<f64> {
    if kernel.rows() > MAX_ORACLE_INPUTS {
        return Err(Error::OracleTooLarge {
            count: kernel.rows(),
            max: MAX_ORACLE_INPUTS,
        });
    }
    if kernel.rows() == 0 {
        return Err(Error::InvalidArgument("channel has no inputs".into()));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must lie in (0, 1], got {resolution}"
        )));
    }

    // identical rows are interchangeable; keep one of each
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for row in kernel.iter_rows() {
        if !distinct.iter().any(|d| d.as_slice() == row) {
            distinct.push(row.to_vec());
        }
    }
    let k = distinct.len();
    let w = ConditionalTable::from_rows(distinct)?;
    if k == 1 {
        return Ok(0.0);
    }

    let mut steps = (1.0 / resolution).round().max(1.0) as usize;
    while steps > 1 && binomial((steps + k - 1) as u128, (k - 1) as u128) > GRID_BUDGET {
        steps -= 1;
    }

    let mut best_p = vec![0.0; k];
    let mut best = f64::NEG_INFINITY;
    let mut counts = vec![0usize; k];
    let mut p = vec![0.0; k];
    for_each_composition(steps, &mut counts, 0, &mut |c| {
        for (pi, &ci) in p.iter_mut().zip(c) {
            *pi = ci as f64 / steps as f64;
        }
        let v = mutual_information(&p, &w);
        if v > best {
            best = v;
            best_p.copy_from_slice(&p);
        }
    });

    let mut p = best_p;
    let mut value = best;
    for _ in 0..MAX_SWEEPS {
        let before = value;
        for i in 0..k {
            for j in i + 1..k {
                value = transfer(&w, &mut p, i, j, value);
            }
        }
        if value - before < 1e-15 {
            break;
        }
    }
    Ok(value)
}

/// Best move of mass between inputs `i` and `j`; returns the new objective.
fn transfer(w: &ConditionalTable, p: &mut [f64], i: usize, j: usize, current: f64) -> f64 {
    let total = p[i] + p[j];
    if total <= 0.0 {
        return current;
    }
    let mut trial = p.to_vec();
    let mut f = |share: f64| {
        trial[i] = share;
        trial[j] = total - share;
        mutual_information(&trial, w)
    };
    // golden-section search over the share of input i; f is concave in it
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, total);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..LINE_SEARCH_STEPS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mut candidates = [(0.0, 0.0), (total, 0.0), ((a + b) / 2.0, 0.0)];
    for cand in candidates.iter_mut() {
        cand.1 = f(cand.0);
    }
    let (share, v) = candidates
        .into_iter()
        .fold((p[i], current), |acc, c| if c.1 > acc.1 { c } else { acc });
    p[i] = share;
    p[j] = total - share;
    v
}

fn for_each_composition(
    remaining: usize,
    counts: &mut [usize],
    pos: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        for_each_composition(remaining - c, counts, pos + 1, visit);
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;
    use approx::assert_abs_diff_eq;

    #[test]
    fn noiseless_four_inputs() {
        let id = ConditionalTable::from_rows(
            (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        )
        .unwrap();
        let ch = EquivalentChannel::from_table(id).unwrap();
        assert_abs_diff_eq!(brute_force_capacity(&ch, 0.01).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn identical_rows() {
        let w = ConditionalTable::from_rows(vec![vec![0.3, 0.7]; 2]).unwrap();
        assert_eq!(brute_force_capacity_table(&w, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn bsc_matches_closed_form() {
        let e = 0.2;
        let w = ConditionalTable::from_rows(vec![vec![1.0 - e, e], vec![e, 1.0 - e]]).unwrap();
        assert_abs_diff_eq!(brute_force_capacity_table(&w, 0.1).unwrap(), 1.0 - binary_entropy(e), epsilon = 1e-10);
    }

    #[test]
    fn rejects_large_channels_and_bad_resolution() {
        let w = ConditionalTable::from_rows(vec![vec![1.0]; 9]).unwrap();
        assert!(matches!(
            brute_force_capacity_table(&w, 0.01),
            Err(Error::OracleTooLarge { count: 9, .. })
        ));
        let w = ConditionalTable::from_rows(vec![vec![1.0]; 2]).unwrap();
        assert!(brute_force_capacity_table(&w, 0.0).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(107, 7), 26_075_972_546);
    }
}
