//! Fusion of real and pseudo clouds, the stochastic discard baseline and
//! density accounting.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cloud::{LabeledPointCloud, Provenance};
use crate::error::{Error, Result};
use crate::labels::LabelMap;
use crate::report::{fraction, KeyValueReport};
use crate::scalar::Real;

/// Rates used by `sweep` when none are given.
pub const DEFAULT_SWEEP_RATES: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult<T> {
    pub cloud: LabeledPointCloud<T>,
    pub real: usize,
    pub pseudo: usize,
    pub total: usize,
}

/// Real points followed by pseudo points. Counts come from the provenance
/// flags, so a "real" input that already carries pseudo points is counted
/// as such.
pub fn fuse<T: Real>(
    real: &LabeledPointCloud<T>,
    pseudo: &LabeledPointCloud<T>,
) -> Result<FusionResult<T>> {
    if real.labels() != pseudo.labels() {
        return Err(Error::Contract(
            "real and pseudo clouds use different label maps".into(),
        ));
    }
    let mut points = Vec::with_capacity(real.len() + pseudo.len());
    points.extend_from_slice(real.points());
    points.extend_from_slice(pseudo.points());
    let cloud = LabeledPointCloud::from_parts(points, real.labels().clone());
    let n_pseudo = cloud.count(Provenance::Pseudo);
    Ok(FusionResult {
        real: cloud.len() - n_pseudo,
        pseudo: n_pseudo,
        total: cloud.len(),
        cloud,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscardSpec {
    rate: f64,
    seed: u64,
}

impl DiscardSpec {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::Config(format!(
                "discard rate must be in [0, 1], got {rate}"
            )));
        }
        Ok(DiscardSpec { rate, seed })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Keep decision for the point at `index`. Point `i` draws
    /// `splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15)`, maps the top 53 bits
    /// to a uniform in [0, 1) and is kept iff that uniform is `>= rate`.
    ///
    /// The draw does not depend on the rate, so a point dropped at one rate is
    /// dropped at every higher rate as well.
    pub fn keeps(&self, index: usize) -> bool {
        uniform(self.seed, index) >= self.rate
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(seed: u64, index: usize) -> f64 {
    let counter = seed.wrapping_add((index as u64).wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    (splitmix64(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Point-wise stochastic discard. Output is an order-preserving subsequence.
pub fn stvd_discard<T: Real>(
    cloud: &LabeledPointCloud<T>,
    spec: &DiscardSpec,
) -> LabeledPointCloud<T> {
    let points = cloud
        .points()
        .iter()
        .enumerate()
        .filter(|(i, _)| spec.keeps(*i))
        .map(|(_, p)| *p)
        .collect();
    LabeledPointCloud::from_parts(points, cloud.labels().clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub rate: f64,
    pub kept_count: usize,
    pub kept_fraction: f64,
}

/// One row per rate. Only the count is computed; the cloud is not copied.
pub fn discard_sweep<T: Real>(
    cloud: &LabeledPointCloud<T>,
    rates: &[f64],
    seed: u64,
) -> Result<Vec<SweepRow>> {
    rates
        .iter()
        .map(|&rate| {
            let spec = DiscardSpec::new(rate, seed)?;
            let kept_count = (0..cloud.len()).filter(|&i| spec.keeps(i)).count();
            let kept_fraction = if cloud.is_empty() {
                1.0
            } else {
                kept_count as f64 / cloud.len() as f64
            };
            Ok(SweepRow {
                rate,
                kept_count,
                kept_fraction,
            })
        })
        .collect()
}

/// Aligned-column text rendering of a sweep.
pub fn format_sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:>8} {:>12} {:>14}\n",
        "rate", "kept_count", "kept_fraction"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>8.4} {:>12} {:>14.6}\n",
            r.rate, r.kept_count, r.kept_fraction
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub before: usize,
    pub after: usize,
    /// `1 − after / before`; 0 when `before` is empty.
    pub reduction: f64,
    pub before_by_class: BTreeMap<String, usize>,
    pub after_by_class: BTreeMap<String, usize>,
}

impl KeyValueReport for DensityReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        let hist = |h: &BTreeMap<String, usize>| {
            h.iter()
                .map(|(k, v)| format!("{k}:{v}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        vec![
            ("before", self.before.to_string()),
            ("after", self.after.to_string()),
            ("reduction", fraction(self.reduction)),
            ("before_by_class", hist(&self.before_by_class)),
            ("after_by_class", hist(&self.after_by_class)),
        ]
    }
}

pub fn density_report<T: Real>(
    before: &LabeledPointCloud<T>,
    after: &LabeledPointCloud<T>,
) -> DensityReport {
    let named = |c: &LabeledPointCloud<T>| -> BTreeMap<String, usize> {
        let labels: &LabelMap = c.labels();
        c.class_histogram()
            .into_iter()
            .map(|(id, n)| (labels.display(id), n))
            .collect()
    };
    let reduction = if before.is_empty() {
        0.0
    } else {
        1.0 - after.len() as f64 / before.len() as f64
    };
    DensityReport {
        before: before.len(),
        after: after.len(),
        reduction,
        before_by_class: named(before),
        after_by_class: named(after),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::cloud::LabeledPoint;
    use crate::geometry::Vec3;

    fn cloud(n: usize, provenance: Provenance, offset: f64) -> LabeledPointCloud<f64> {
        let labels = Arc::new(LabelMap::semantic_kitti());
        let points = (0..n)
            .map(|i| LabeledPoint {
                position: Vec3::new(offset + i as f64 * 0.01, (i % 7) as f64, -1.0),
                intensity: (i % 11) as f64 / 10.0,
                class_id: (i % 3) as u8 + 1,
                provenance,
            })
            .collect();
        LabeledPointCloud::new(points, labels).unwrap()
    }

    #[test]
    fn fuse_concatenates_in_order() {
        let real = cloud(120_000, Provenance::Real, 0.0);
        let pseudo = cloud(8_000, Provenance::Pseudo, 5.0);
        let f = fuse(&real, &pseudo).unwrap();
        assert_eq!((f.real, f.pseudo, f.total), (120_000, 8_000, 128_000));
        for (i, p) in f.cloud.points().iter().enumerate() {
            let src = if i < 120_000 {
                real.points()[i]
            } else {
                pseudo.points()[i - 120_000]
            };
            assert_eq!(*p, src);
        }
    }

    #[test]
    fn fuse_with_empty_sides() {
        let real = cloud(10, Provenance::Real, 0.0);
        let none = LabeledPointCloud::empty(real.labels().clone());
        let f = fuse(&real, &none).unwrap();
        assert_eq!(f.cloud, real);
        assert_eq!((f.real, f.pseudo, f.total), (10, 0, 10));
        let g = fuse(&none, &real).unwrap();
        assert_eq!(g.cloud.points(), real.points());
    }

    #[test]
    fn fuse_rejects_mismatched_label_maps() {
        let real = cloud(3, Provenance::Real, 0.0);
        let mut other = LabelMap::new();
        for id in 1..=3 {
            other.insert(id, format!("c{id}")).unwrap();
        }
        let pseudo = LabeledPointCloud::empty(Arc::new(other));
        assert!(matches!(fuse(&real, &pseudo), Err(Error::Contract(_))));
    }

    #[test]
    fn discard_rate_validated() {
        assert!(DiscardSpec::new(-0.1, 0).is_err());
        assert!(DiscardSpec::new(1.5, 0).is_err());
        assert!(DiscardSpec::new(f64::NAN, 0).is_err());
    }

    #[test]
    fn stvd_extremes_are_exact() {
        let c = cloud(1000, Provenance::Pseudo, 0.0);
        assert_eq!(stvd_discard(&c, &DiscardSpec::new(0.0, 9).unwrap()), c);
        assert!(stvd_discard(&c, &DiscardSpec::new(1.0, 9).unwrap()).is_empty());
    }

    #[test]
    fn stvd_count_within_binomial_bound() {
        let c = cloud(10_000, Provenance::Pseudo, 0.0);
        let spec = DiscardSpec::new(0.8, 42).unwrap();
        let a = stvd_discard(&c, &spec);
        let bound = 3.0 * (10_000.0f64 * 0.8 * 0.2).sqrt();
        assert!((a.len() as f64 - 2000.0).abs() <= bound, "kept {}", a.len());
        assert_eq!(a, stvd_discard(&c, &spec));
    }

    #[test]
    fn splitmix_matches_reference_sequence() {
        // first outputs of the reference splitmix64 generator seeded with 0
        let mut state = 0u64;
        let mut next = || {
            state = state.wrapping_add(GOLDEN_GAMMA);
            splitmix64(state)
        };
        assert_eq!(next(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(next(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(next(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn sweep_rows() {
        let c = cloud(10_000, Provenance::Pseudo, 0.0);
        let rows = discard_sweep(&c, &[0.0], 1).unwrap();
        assert_eq!(rows[0].kept_fraction, 1.0);
        let rows = discard_sweep(&c, &[0.0, 0.5, 1.0], 1).unwrap();
        assert_eq!(rows[0].kept_count, 10_000);
        // 4 sigma of a binomial(10 000, 0.5) fraction
        assert!(
            (rows[1].kept_fraction - 0.5).abs() <= 0.02,
            "{}",
            rows[1].kept_fraction
        );
        assert_eq!(rows[2].kept_count, 0);
        let empty = LabeledPointCloud::<f64>::empty(c.labels().clone());
        assert_eq!(
            discard_sweep(&empty, &[0.5], 1).unwrap()[0].kept_fraction,
            1.0
        );
        assert!(discard_sweep(&c, &[2.0], 1).is_err());
        let table = format_sweep_table(&rows);
        assert_eq!(table.lines().count(), 4);
    }

    #[test]
    fn density_extremes() {
        let c = cloud(50, Provenance::Pseudo, 0.0);
        assert_eq!(density_report(&c, &c).reduction, 0.0);
        let empty = LabeledPointCloud::empty(c.labels().clone());
        let r = density_report(&c, &empty);
        assert_eq!(r.reduction, 1.0);
        assert_eq!(r.before_by_class.values().sum::<usize>(), 50);
        assert!(r.after_by_class.is_empty());
        assert!(r.to_key_value().contains("reduction=1.000000"));
    }

    proptest! {
        #[test]
        fn stvd_is_ordered_subsequence(n in 0usize..400, rate in 0.0f64..=1.0, seed: u64) {
            let c = cloud(n, Provenance::Pseudo, 0.0);
            let spec = DiscardSpec::new(rate, seed).unwrap();
            let out = stvd_discard(&c, &spec);
            let mut it = c.points().iter();
            for p in out.points() {
                prop_assert!(it.any(|q| q == p));
            }
        }

        #[test]
        fn sweep_is_monotone(n in 0usize..400, seed: u64, mut rates in prop::collection::vec(0.0f64..=1.0, 1..8)) {
            rates.sort_by(f64::total_cmp);
            let c = cloud(n, Provenance::Pseudo, 0.0);
            let rows = discard_sweep(&c, &rates, seed).unwrap();
            for w in rows.windows(2) {
                prop_assert!(w[1].kept_count <= w[0].kept_count);
            }
        }
    }
}
