use super::dataset::{NeuronMask, RawActivations};
use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};

/// Fraction of activations kept by default (the top 0.5%).
pub const DEFAULT_QUANTILE: f64 = 0.005;

/// Thresholds activations at the `(1 - quantile)` quantile of all `S * d`
/// values pooled together. A location fires iff its activation is `>=` the
/// threshold, so ties at the threshold are all kept and an all-equal input
/// yields an all-ones mask.
pub fn binarize_activations(raw: &RawActivations, quantile: f64) -> Result<NeuronMask> {
    binarize_activations_in_range(raw, quantile, None)
}

/// Like [`binarize_activations`], additionally requiring `activation <= upper`.
pub fn binarize_activations_in_range(
    raw: &RawActivations,
    quantile: f64,
    upper: Option<f32>,
) -> Result<NeuronMask> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "quantile {quantile} not in (0, 1)"
        )));
    }
    if let Some(pos) = raw.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "non-finite activation at sample {}, feature {}",
            pos / raw.features.max(1),
            pos % raw.features.max(1)
        )));
    }
    let mut mask = BitMatrix::zeros(raw.samples, raw.features);
    if raw.values.is_empty() {
        return Ok(NeuronMask::new(mask));
    }
    let threshold = top_threshold(&raw.values, quantile);
    for (i, &v) in raw.values.iter().enumerate() {
        if v >= threshold && upper.is_none_or(|u| v <= u) {
            mask.set(i / raw.features, i % raw.features, true);
        }
    }
    Ok(NeuronMask::new(mask))
}

/// Value of the `ceil(quantile * n)`-th largest activation.
fn top_threshold(values: &[f32], quantile: f64) -> f32 {
    let n = values.len();
    // The epsilon keeps exact products such as 0.005 * 10_000 from rounding up.
    let keep = ((quantile * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let mut scratch = values.to_vec();
    let (_, nth, _) = scratch.select_nth_unstable_by(keep - 1, |a, b| b.total_cmp(a));
    *nth
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn single_top_element() {
        let raw = RawActivations::new(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = binarize_activations(&raw, 0.25).unwrap();
        let bits: Vec<bool> = (0..4).map(|j| m.mask().get(0, j)).collect();
        assert_eq!(bits, [false, false, false, true]);
    }

    #[test]
    fn all_equal_gives_all_ones() {
        let raw = RawActivations::new(2, 3, vec![0.7; 6]).unwrap();
        for q in [0.001, 0.3, 0.99] {
            assert_eq!(
                binarize_activations(&raw, q).unwrap().mask().count_ones(),
                6
            );
        }
    }

    #[test]
    fn rejects_bad_input() {
        let raw = RawActivations::new(1, 2, vec![1.0, f32::NAN]).unwrap();
        assert!(binarize_activations(&raw, 0.5).is_err());
        let raw = RawActivations::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(binarize_activations(&raw, 0.0).is_err());
        assert!(binarize_activations(&raw, 1.0).is_err());
    }

    #[test]
    fn upper_cutoff() {
        let raw = RawActivations::new(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = binarize_activations_in_range(&raw, 0.5, Some(3.5)).unwrap();
        assert_eq!(m.mask().count_ones(), 1);
        assert!(m.mask().get(0, 2));
    }

    fn normal_activations(seed: u64, samples: usize, features: usize) -> RawActivations {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..samples * features)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        RawActivations::new(samples, features, values).unwrap()
    }

    #[test]
    fn normal_draws_keep_requested_fraction() {
        let raw = normal_activations(7, 100, 100);
        // Sort-based oracle for the threshold.
        let mut sorted = raw.values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let oracle_threshold = sorted[49];
        let m = binarize_activations(&raw, 0.005).unwrap();
        let expected = raw
            .values
            .iter()
            .filter(|&&v| v >= oracle_threshold)
            .count() as u64;
        assert_eq!(m.mask().count_ones(), expected);
        let frac = m.mask().count_ones() as f64 / 10_000.0;
        assert!((0.005..=0.0055).contains(&frac), "{frac}");
    }

    #[test]
    fn masks_are_nested_in_quantile() {
        let raw = normal_activations(11, 20, 30);
        let qs = [0.01, 0.05, 0.1, 0.3, 0.6, 0.9];
        let masks: Vec<_> = qs
            .iter()
            .map(|&q| binarize_activations(&raw, q).unwrap())
            .collect();
        for w in masks.windows(2) {
            let (lo, hi) = (w[0].mask(), w[1].mask());
            assert_eq!(
                lo.and_not(hi).count_ones(),
                0,
                "a larger quantile dropped a bit"
            );
        }
    }
}
