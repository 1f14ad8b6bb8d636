//! Post-processing of chain traces: manifold fractions, binned error bars,
//! reweighting to other parameter values, and volume ratios.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::TraceRecord;

/// A point estimate with one standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `|a - b| / sqrt(se_a^2 + se_b^2 + extra^2)`
    pub fn z_score(&self, other: &Estimate, extra: f64) -> f64 {
        let se = (self.std_error.powi(2) + other.std_error.powi(2) + extra * extra).sqrt();
        (self.value - other.value).abs() / se
    }
}

/// Contiguous bins covering `0..len`, sizes differing by at most one.
pub fn bin_ranges(len: usize, n_bins: usize) -> Result<Vec<Range<usize>>> {
    if n_bins < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 bins, got {n_bins}")));
    }
    if len < n_bins {
        return Err(Error::InsufficientData(format!("{len} samples cannot fill {n_bins} bins")));
    }
    Ok((0..n_bins).map(|b| b * len / n_bins..(b + 1) * len / n_bins).collect())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean of bin means, with standard error `std(bin means) / sqrt(n_bins)`.
pub fn binned_error(series: &[f64], n_bins: usize) -> Result<Estimate> {
    let means: Vec<f64> = bin_ranges(series.len(), n_bins)?
        .into_iter()
        .map(|r| {
            let len = r.len() as f64;
            series[r].iter().sum::<f64>() / len
        })
        .collect();
    let (value, std_error) = mean_and_se(&means);
    Ok(Estimate { value, std_error })
}

/// Weighted mean `sum w v / sum w` with a binned standard error.
pub fn weighted_estimate(values: &[f64], weights: &[f64], n_bins: usize) -> Result<Estimate> {
    if values.len() != weights.len() {
        return Err(Error::InvalidParameter("values and weights differ in length".into()));
    }
    let ratio = |r: Range<usize>| {
        let mut num = 0.0;
        let mut den = 0.0;
        for (v, w) in values[r.clone()].iter().zip(&weights[r]) {
            num += w * v;
            den += w;
        }
        num / den
    };
    let bins: Vec<f64> = bin_ranges(values.len(), n_bins)?.into_iter().map(ratio).collect();
    let (_, std_error) = mean_and_se(&bins);
    Ok(Estimate { value: ratio(0..values.len()), std_error })
}

fn require_records(records: &[TraceRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::InsufficientData("trace has no records".into()))
    } else {
        Ok(())
    }
}

/// Fraction of records on each manifold.
pub fn manifold_fractions(records: &[TraceRecord]) -> Result<BTreeMap<String, f64>> {
    require_records(records)?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.manifold_id.clone()).or_insert(0) += 1;
    }
    let n = records.len() as f64;
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect())
}

/// Fraction of records in each category, with binned standard errors.
pub fn category_fractions<F>(records: &[TraceRecord], category: F, n_bins: usize) -> Result<BTreeMap<String, Estimate>>
where
    F: Fn(&TraceRecord) -> String,
{
    require_records(records)?;
    let keys: Vec<String> = records.iter().map(&category).collect();
    let mut names: Vec<&String> = keys.iter().collect();
    names.sort();
    names.dedup();
    let ones = vec![1.0; records.len()];
    names
        .into_iter()
        .map(|name| {
            let indicator: Vec<f64> = keys.iter().map(|k| if k == name { 1.0 } else { 0.0 }).collect();
            Ok((name.clone(), weighted_estimate(&indicator, &ones, n_bins)?))
        })
        .collect()
}

/// Reweighted average of `observable`, e.g. an estimate at a different sticky
/// parameter from a run at a reference one.
pub fn reweight<W, O>(records: &[TraceRecord], weight: W, observable: O, n_bins: usize) -> Result<Estimate>
where
    W: Fn(&TraceRecord) -> f64,
    O: Fn(&TraceRecord) -> f64,
{
    require_records(records)?;
    let weights: Vec<f64> = records.iter().map(weight).collect();
    warn_if_concentrated(&weights);
    let values: Vec<f64> = records.iter().map(observable).collect();
    weighted_estimate(&values, &weights, n_bins)
}

/// Reweighted fractions of each category.
pub fn reweight_categories<W, C>(
    records: &[TraceRecord],
    weight: W,
    category: C,
    n_bins: usize,
) -> Result<BTreeMap<String, Estimate>>
where
    W: Fn(&TraceRecord) -> f64,
    C: Fn(&TraceRecord) -> String,
{
    require_records(records)?;
    let weights: Vec<f64> = records.iter().map(weight).collect();
    warn_if_concentrated(&weights);
    let keys: Vec<String> = records.iter().map(category).collect();
    let mut names: Vec<&String> = keys.iter().collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .map(|name| {
            let indicator: Vec<f64> = keys.iter().map(|k| if k == name { 1.0 } else { 0.0 }).collect();
            Ok((name.clone(), weighted_estimate(&indicator, &weights, n_bins)?))
        })
        .collect()
}

fn warn_if_concentrated(weights: &[f64]) {
    let total: f64 = weights.iter().sum();
    let largest = weights.iter().cloned().fold(0.0, f64::max);
    if total > 0.0 && largest / total > 0.1 {
        log::warn!("reweighting is dominated by one sample ({:.1}% of total weight)", 100.0 * largest / total);
    }
}

/// Combine estimates made by reweighting runs at several anchor values of a
/// sticky parameter: linear interpolation in `ln kappa` between the two anchors
/// bracketing `kappa`, nearest anchor outside the range. `anchors` holds
/// `(kappa_anchor, estimate_from_that_anchor)`.
pub fn interpolate_log_kappa(anchors: &[(f64, f64)], kappa: f64) -> Result<f64> {
    if anchors.is_empty() || !(kappa > 0.0) {
        return Err(Error::InvalidParameter("need anchors and a positive kappa".into()));
    }
    let mut sorted = anchors.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (first, last) = (sorted[0], sorted[sorted.len() - 1]);
    if kappa <= first.0 {
        return Ok(first.1);
    }
    if kappa >= last.0 {
        return Ok(last.1);
    }
    let hi = sorted.iter().position(|a| a.0 >= kappa).expect("kappa inside range");
    let (lo, hi) = (sorted[hi - 1], sorted[hi]);
    let t = (kappa.ln() - lo.0.ln()) / (hi.0.ln() - lo.0.ln());
    Ok((1.0 - t) * lo.1 + t * hi.1)
}

/// Volume of the `target` manifold from visit counts relative to an `anchor`
/// manifold of known volume: `(n_target / n_anchor) (c_anchor / c_target) vol_anchor`.
/// The standard error comes from per-bin estimates (infinite if a bin never
/// visits the anchor).
pub fn volume_estimate<K>(
    records: &[TraceRecord],
    key: K,
    weight_of: &dyn Fn(&str) -> f64,
    target: &str,
    anchor: (&str, f64),
    n_bins: usize,
) -> Result<Estimate>
where
    K: Fn(&TraceRecord) -> String,
{
    require_records(records)?;
    let keys: Vec<String> = records.iter().map(key).collect();
    let factor = weight_of(anchor.0) / weight_of(target) * anchor.1;
    let estimate = |r: Range<usize>| {
        let n_t = keys[r.clone()].iter().filter(|k| *k == target).count() as f64;
        let n_a = keys[r].iter().filter(|k| *k == anchor.0).count() as f64;
        n_t / n_a * factor
    };
    let value = estimate(0..records.len());
    if !value.is_finite() {
        return Err(Error::InsufficientData(format!("anchor {:?} was never visited", anchor.0)));
    }
    let bins: Vec<f64> = bin_ranges(records.len(), n_bins)?.into_iter().map(estimate).collect();
    let std_error = if bins.iter().all(|b| b.is_finite()) { mean_and_se(&bins).1 } else { f64::INFINITY };
    Ok(Estimate { value, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn rec(id: &str, obs: Vec<f64>) -> TraceRecord {
        TraceRecord { step: 0, manifold_id: id.into(), m_l: 0, observables: obs }
    }

    #[test]
    fn binned_error_of_iid_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..8000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = binned_error(&xs, 8).unwrap();
        let expected = 1.0 / 8000f64.sqrt();
        assert!(e.std_error > expected / 1.5 && e.std_error < expected * 1.5, "{}", e.std_error);
    }

    #[test]
    fn binned_error_needs_enough_data() {
        assert!(binned_error(&[1.0, 2.0], 8).is_err());
        assert!(binned_error(&[1.0; 10], 1).is_err());
    }

    #[test]
    fn unit_weights_reproduce_fractions_bitwise() {
        let ids = ["0", "1", "1", "2", "0", "1", "3", "3", "1", "0", "2", "1"];
        let records: Vec<_> = ids.iter().map(|i| rec(i, vec![])).collect();
        let fr = manifold_fractions(&records).unwrap();
        let rw = reweight_categories(&records, |_| 1.0, |r| r.manifold_id.clone(), 3).unwrap();
        for (k, v) in &fr {
            assert_eq!(v.to_bits(), rw[k].value.to_bits());
        }
        assert!((fr.values().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reweighting_shifts_toward_heavier_category() {
        let records: Vec<_> = (0..100).map(|i| rec(if i % 2 == 0 { "a" } else { "b" }, vec![])).collect();
        let rw = reweight_categories(&records, |r| if r.manifold_id == "a" { 3.0 } else { 1.0 }, |r| r.manifold_id.clone(), 4)
            .unwrap();
        assert!((rw["a"].value - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert!(manifold_fractions(&[]).is_err());
    }

    #[test]
    fn log_interpolation() {
        let anchors = [(1.0, 0.0), (4.0, 1.0)];
        assert!((interpolate_log_kappa(&anchors, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(interpolate_log_kappa(&anchors, 0.5).unwrap(), 0.0);
        assert_eq!(interpolate_log_kappa(&anchors, 8.0).unwrap(), 1.0);
    }

    #[test]
    fn volume_from_synthetic_counts() {
        let mut records = Vec::new();
        for i in 0..1100 {
            records.push(rec(if i % 11 == 0 { "anchor" } else { "target" }, vec![]));
        }
        let w = |k: &str| if k == "anchor" { 10.0 } else { 1.0 };
        let e = volume_estimate(&records, |r| r.manifold_id.clone(), &w, "target", ("anchor", 2.0), 10).unwrap();
        assert!((e.value - 200.0).abs() < 1e-9);
    }
}
