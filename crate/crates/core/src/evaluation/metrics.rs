//! Rank and linear correlation, top-k recall and summary statistics.

use crate::error::{Error, Result};

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dim(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::dim("correlation needs at least two values"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("correlation of non-finite values".into()));
    }
    Ok(())
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` in place and returns the number of inversions removed.
fn merge_sort_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_sort_swaps(&mut v[..mid], buf) + merge_sort_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's τ-b, computed in `O(n log n)`.
///
/// Pairs are sorted by `a` (then `b`); the number of adjacent exchanges a
/// merge sort needs to order the `b` values equals the number of
/// discordant pairs.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as u64;
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));

    let xs: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
    let ties_a = tied_pairs(&xs);
    let mut joint = 0u64;
    let mut run = 1u64;
    for w in idx.windows(2) {
        if a[w[0]] == a[w[1]] && b[w[0]] == b[w[1]] {
            run += 1;
        } else {
            joint += run * (run - 1) / 2;
            run = 1;
        }
    }
    joint += run * (run - 1) / 2;

    let mut ys: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = merge_sort_swaps(&mut ys, &mut buf);
    let ties_b = tied_pairs(&ys);

    let total = n * (n - 1) / 2;
    if ties_a == total || ties_b == total {
        return Err(Error::UndefinedCorrelation("constant ranking"));
    }
    let s = total as f64 - ties_a as f64 - ties_b as f64 + joint as f64 - 2.0 * swaps as f64;
    let denom = ((total - ties_a) as f64 * (total - ties_b) as f64).sqrt();
    Ok((s / denom).clamp(-1.0, 1.0))
}

/// Sample Pearson correlation, computed with centred sums.
pub fn pearson_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("constant vector"));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Fraction of `relevant` cell indices among the `k` largest `values`.
///
/// Equal values are ranked by ascending index, so the result is fully
/// determined by its inputs.
pub fn recall_at_k(values: &[f64], relevant: &[usize], k: usize) -> Result<f64> {
    if k == 0 || k > values.len() {
        return Err(Error::config(format!("k = {k} outside 1..={}", values.len())));
    }
    if relevant.is_empty() {
        return Err(Error::dim("empty relevant set"));
    }
    if let Some(&r) = relevant.iter().find(|&&r| r >= values.len()) {
        return Err(Error::Index(format!("cell {r} of {}", values.len())));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let mut is_relevant = vec![false; values.len()];
    relevant.iter().for_each(|&r| is_relevant[r] = true);
    let hits = order[..k].iter().filter(|&&i| is_relevant[i]).count();
    let distinct = is_relevant.iter().filter(|&&r| r).count();
    Ok(hits as f64 / distinct as f64)
}

/// Mean, population standard deviation and count of a set of values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl MetricSummary {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
            count: values.len(),
        })
    }

    /// `0.936±0.063` style.
    pub fn cell(&self) -> String {
        format!("{:.3}±{:.3}", self.mean, self.std)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tau_reference_values() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        let t = kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((t - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn constant_inputs_are_undefined() {
        assert!(matches!(kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::UndefinedCorrelation(_))));
        assert!(matches!(pearson_rho(&[1.0, 2.0], &[5.0, 5.0]), Err(Error::UndefinedCorrelation(_))));
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(pearson_rho(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn rho_reference_values() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(pearson_rho(&a, &a).unwrap(), 1.0);
        assert_eq!(pearson_rho(&a, &[-1.0, -2.0, -3.0]).unwrap(), -1.0);
        let r = pearson_rho(&a, &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 9.0 / (2.0 * 21f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn recall_examples() {
        let v = [9.0, 1.0, 8.0, 7.0, 0.0, 6.0];
        assert_eq!(recall_at_k(&v, &[0, 2, 3, 5], 4).unwrap(), 1.0);
        assert_eq!(recall_at_k(&v, &[0, 1, 2, 4], 4).unwrap(), 0.5);
        // Uniform values: the first k cells win.
        assert_eq!(recall_at_k(&[0.0; 6], &[1, 4], 2).unwrap(), 0.5);
        assert!(recall_at_k(&v, &[0], 0).is_err());
        assert!(recall_at_k(&v, &[0], 7).is_err());
    }

    #[test]
    fn summaries() {
        let s = MetricSummary::of(&[0.5]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (0.5, 0.0, 1));
        let s = MetricSummary::of(&[0.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.std), (0.5, 0.5));
        assert_eq!(s.cell(), "0.500±0.500");
        assert!(MetricSummary::of(&[]).is_none());
        let s = MetricSummary { mean: 0.936, std: 0.063, count: 1 };
        assert_eq!(s.cell(), "0.936±0.063");
    }

    fn vec_with_ties() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec((0i32..6).prop_map(f64::from), n),
                prop::collection::vec((0i32..6).prop_map(f64::from), n),
            )
        })
    }

    proptest! {
        #[test]
        fn tau_and_rho_are_symmetric((a, b) in vec_with_ties()) {
            prop_assert_eq!(kendall_tau(&a, &b).ok(), kendall_tau(&b, &a).ok());
            prop_assert_eq!(pearson_rho(&a, &b).ok(), pearson_rho(&b, &a).ok());
        }

        #[test]
        fn tau_is_invariant_under_monotone_maps((a, b) in vec_with_ties()) {
            let ea: Vec<f64> = a.iter().map(|v| (v * 0.7).exp() + v * v * v).collect();
            prop_assert_eq!(kendall_tau(&a, &b).ok(), kendall_tau(&ea, &b).ok());
        }

        #[test]
        fn rho_is_invariant_under_positive_affine_maps((a, b) in vec_with_ties(), s in 0.1f64..10.0, c in -5.0f64..5.0) {
            let t: Vec<f64> = a.iter().map(|v| s * v + c).collect();
            if let (Ok(x), Ok(y)) = (pearson_rho(&a, &b), pearson_rho(&t, &b)) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn recall_is_monotone_in_k(v in prop::collection::vec(-3i32..3, 4..40), seed in 0usize..1000) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let rel: Vec<usize> = (0..v.len()).filter(|i| (i * 7 + seed) % 3 == 0).collect();
            prop_assume!(!rel.is_empty());
            let mut last = 0.0;
            for k in 1..=v.len() {
                let r = recall_at_k(&v, &rel, k).unwrap();
                prop_assert!(r >= last);
                last = r;
            }
            prop_assert_eq!(last, 1.0);
        }
    }
}
