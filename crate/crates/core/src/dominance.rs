//! Dominance counts, Pareto flags, layer counts and box-restricted statistics.
//!
//! A point `a` dominates `b` (`a ⪰ b`) when `a^k >= b^k` for every coordinate.
//! `D(i)` is the number of other points dominated by point `i`; point `i` is
//! Pareto-minimal exactly when `D(i) = 0`. Ties follow the non-strict
//! definition, so two identical rows dominate each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::{BoxRegion, ProjectionSpec};
use crate::sample::SampleView;

/// `true` iff `a ⪰ b`, i.e. `a^k >= b^k` for every `k`.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("points must have at least one coordinate"));
    }
    Ok(dominated_by(b, a))
}

/// `lo ⪯ hi`, exiting on the first coordinate that fails.
#[inline]
fn dominated_by(lo: &[f64], hi: &[f64]) -> bool {
    lo.iter().zip(hi).all(|(l, h)| l <= h)
}

/// How candidate pairs are enumerated. All strategies return identical counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Every ordered pair.
    Naive,
    /// Points sorted by coordinate sum; only candidates with a smaller or
    /// equal sum are tested.
    SumPruned,
    /// For each point, only candidates not exceeding it on that point's
    /// smallest coordinate are tested (a prefix of that column's order).
    #[default]
    AxisPruned,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Strategy::Naive),
            "sum-pruned" => Ok(Strategy::SumPruned),
            "axis-pruned" => Ok(Strategy::AxisPruned),
            other => Err(Error::parse(
                other,
                "expected naive, sum-pruned or axis-pruned",
            )),
        }
    }
}

/// Layer counts: `K` and `K^(r)` for `r >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LayerHistogram {
    /// `by_count[r]` is the number of points dominating exactly `r` others;
    /// `by_count[0]` is the Pareto count `K`. Trailing zeros are trimmed.
    by_count: Vec<u64>,
}

impl LayerHistogram {
    pub fn from_counts(counts: &[u32]) -> Self {
        let mut by_count: Vec<u64> = Vec::new();
        for &c in counts {
            let c = c as usize;
            if c >= by_count.len() {
                by_count.resize(c + 1, 0);
            }
            by_count[c] += 1;
        }
        Self { by_count }
    }

    /// `K`, the number of Pareto points.
    pub fn pareto(&self) -> u64 {
        self.layer(0)
    }

    /// `K^(r)`; zero for layers beyond the largest count.
    pub fn layer(&self, r: usize) -> u64 {
        self.by_count.get(r).copied().unwrap_or(0)
    }

    /// Sample size recovered from the histogram.
    pub fn total(&self) -> u64 {
        self.by_count.iter().sum()
    }

    /// `n - K`.
    pub fn non_pareto(&self) -> u64 {
        self.total() - self.pareto()
    }

    /// `sum_{r >= from} K^(r)`.
    pub fn tail_from(&self, from: usize) -> u64 {
        self.by_count.iter().skip(from).sum()
    }

    /// Largest `r` with `K^(r) > 0`, if the sample is non-empty.
    pub fn max_layer(&self) -> Option<usize> {
        self.by_count.len().checked_sub(1)
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.by_count
    }
}

/// Per-point dominance counts with derived Pareto flags and layer counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceSummary {
    counts: Vec<u32>,
    pareto: Vec<bool>,
    layers: LayerHistogram,
}

impl DominanceSummary {
    pub fn from_counts(counts: Vec<u32>) -> Self {
        let pareto = counts.iter().map(|&c| c == 0).collect();
        let layers = LayerHistogram::from_counts(&counts);
        Self {
            counts,
            pareto,
            layers,
        }
    }

    /// `D(i)` for every point.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn pareto(&self) -> &[bool] {
        &self.pareto
    }

    pub fn layers(&self) -> &LayerHistogram {
        &self.layers
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    /// Number of ordered pairs `(i, j)`, `i != j`, with `X_j ⪯ X_i`.
    pub fn dominating_pairs(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Indices of non-Pareto points.
    pub fn non_pareto_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
    }
}

/// Layer counts of a summary.
pub fn layer_histogram(summary: &DominanceSummary) -> &LayerHistogram {
    summary.layers()
}

/// Computes `D(i) = #{j != i : X_j ⪯ X_i}` for every point.
pub fn dominance_counts(sample: SampleView<'_>, strategy: Strategy) -> DominanceSummary {
    assert!(
        sample.n() <= u32::MAX as usize,
        "sample too large for 32-bit counts"
    );
    let counts = match strategy {
        Strategy::Naive => counts_naive(sample),
        Strategy::SumPruned => counts_sum_pruned(sample),
        Strategy::AxisPruned => counts_axis_pruned(sample),
    };
    DominanceSummary::from_counts(counts)
}

fn counts_naive(sample: SampleView<'_>) -> Vec<u32> {
    let n = sample.n();
    (0..n)
        .map(|i| {
            let hi = sample.row(i);
            (0..n)
                .filter(|&j| j != i && dominated_by(sample.row(j), hi))
                .count() as u32
        })
        .collect()
}

fn counts_sum_pruned(sample: SampleView<'_>) -> Vec<u32> {
    let n = sample.n();
    // Floating-point addition is monotone, so X_j ⪯ X_i still implies
    // fl(sum_j) <= fl(sum_i) when both sums use the same order.
    let sums: Vec<f64> = (0..n).map(|i| sample.row(i).iter().sum()).collect();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| sums[a as usize].total_cmp(&sums[b as usize]));

    let mut counts = vec![0u32; n];
    for &i in &order {
        let i = i as usize;
        let hi = sample.row(i);
        let limit = sums[i];
        let mut c = 0u32;
        for &j in &order {
            let j = j as usize;
            if sums[j] > limit {
                break;
            }
            if j != i && dominated_by(sample.row(j), hi) {
                c += 1;
            }
        }
        counts[i] = c;
    }
    counts
}

fn counts_axis_pruned(sample: SampleView<'_>) -> Vec<u32> {
    let n = sample.n();
    let d = sample.d();
    if n == 0 {
        return Vec::new();
    }

    // Smallest coordinate of every point and the largest such value per axis.
    let mut axis_of = vec![0usize; n];
    let mut reach = vec![f64::NEG_INFINITY; d];
    for (i, axis) in axis_of.iter_mut().enumerate() {
        let row = sample.row(i);
        let mut best = 0;
        for k in 1..d {
            if row[k] < row[best] {
                best = k;
            }
        }
        *axis = best;
        reach[best] = reach[best].max(row[best]);
    }

    let mut counts = vec![0u32; n];
    let mut column: Vec<(f64, u32)> = Vec::with_capacity(n);
    let mut owners: Vec<u32> = Vec::with_capacity(n);
    for k in 0..d {
        if reach[k] == f64::NEG_INFINITY {
            continue;
        }
        // Only values reachable by some owner of this axis can be candidates.
        column.clear();
        owners.clear();
        for (j, &axis) in axis_of.iter().enumerate().take(n) {
            let v = sample.get(j, k);
            if v <= reach[k] {
                column.push((v, j as u32));
            }
            if axis == k {
                owners.push(j as u32);
            }
        }
        column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        for &i in &owners {
            let i = i as usize;
            let hi = sample.row(i);
            let bound = hi[k];
            let mut c = 0u32;
            for &(v, j) in &column {
                if v > bound {
                    break;
                }
                let j = j as usize;
                if j != i && dominated_by(sample.row(j), hi) {
                    c += 1;
                }
            }
            counts[i] = c;
        }
    }
    counts
}

/// `S(U)`, `T(U)` and the atoms of the projected non-Pareto point measure inside `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStatistics {
    /// `sum_i D(i) 1{π X_i ∈ U}`.
    pub s: u64,
    /// `#{i : D(i) >= 1, π X_i ∈ U}`.
    pub t: u64,
    /// `π X_i` for every non-Pareto `i` with `π X_i ∈ U`, in index order.
    pub projected_points: Vec<Vec<f64>>,
}

impl BoxStatistics {
    /// Evaluates the statistics from precomputed dominance counts.
    pub fn from_summary(
        sample: SampleView<'_>,
        summary: &DominanceSummary,
        proj: &ProjectionSpec,
        region: &BoxRegion,
    ) -> Result<Self> {
        Self::from_summary_capped(sample, summary, proj, region, usize::MAX)
    }

    /// As [`from_summary`](Self::from_summary), keeping at most `cap` projected points.
    /// `s` and `t` are always exact.
    pub fn from_summary_capped(
        sample: SampleView<'_>,
        summary: &DominanceSummary,
        proj: &ProjectionSpec,
        region: &BoxRegion,
        cap: usize,
    ) -> Result<Self> {
        check_projection(sample.d(), proj, region)?;
        if summary.n() != sample.n() {
            return Err(Error::invalid("summary does not belong to this sample"));
        }
        let mut s = 0u64;
        let mut t = 0u64;
        let mut projected_points = Vec::new();
        for i in summary.non_pareto_indices() {
            let row = sample.row(i);
            if region.contains_projected(proj, row) {
                s += summary.counts()[i] as u64;
                t += 1;
                if projected_points.len() < cap {
                    projected_points.push(proj.project(row));
                }
            }
        }
        Ok(Self {
            s,
            t,
            projected_points,
        })
    }
}

fn check_projection(d: usize, proj: &ProjectionSpec, region: &BoxRegion) -> Result<()> {
    if proj.max_index() >= d {
        return Err(Error::invalid(format!(
            "projection uses coordinate {} but the sample has dimension {d}",
            proj.max_index() + 1
        )));
    }
    if region.m() != proj.m() {
        return Err(Error::invalid(format!(
            "box has dimension {} but the projection selects {} coordinates",
            region.m(),
            proj.m()
        )));
    }
    Ok(())
}

/// Computes dominance counts and then the box statistics for `U`.
pub fn box_statistics(
    sample: SampleView<'_>,
    proj: &ProjectionSpec,
    region: &BoxRegion,
) -> Result<BoxStatistics> {
    check_projection(sample.d(), proj, region)?;
    let summary = dominance_counts(sample, Strategy::default());
    BoxStatistics::from_summary(sample, &summary, proj, region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SampleMatrix;
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_assume, proptest};
    use proptest::strategy::Strategy as _;

    const ALL: [Strategy; 3] = [Strategy::Naive, Strategy::SumPruned, Strategy::AxisPruned];

    fn hand_sample() -> SampleMatrix {
        SampleMatrix::from_rows(&[[0.9, 0.9], [0.5, 0.5], [0.1, 0.2]]).unwrap()
    }

    #[test]
    fn dominates_examples() {
        assert!(dominates(&[0.2, 0.3], &[0.2, 0.3]).unwrap());
        assert!(!dominates(&[0.5, 0.1], &[0.2, 0.3]).unwrap());
        assert!(dominates(&[0.5, 0.4], &[0.2, 0.3]).unwrap());
        assert!(matches!(
            dominates(&[0.5], &[0.2, 0.3]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn hand_example_counts() {
        let s = hand_sample();
        for strategy in ALL {
            let summary = dominance_counts(s.view(), strategy);
            assert_eq!(summary.counts(), &[2, 1, 0]);
            assert_eq!(summary.pareto(), &[false, false, true]);
            let layers = summary.layers();
            assert_eq!(layers.pareto(), 1);
            assert_eq!(layers.layer(1), 1);
            assert_eq!(layers.layer(2), 1);
            assert_eq!(layers.layer(3), 0);
        }
    }

    #[test]
    fn singleton_and_empty() {
        let one = SampleMatrix::from_rows(&[[0.4, 0.7, 0.1]]).unwrap();
        for strategy in ALL {
            let summary = dominance_counts(one.view(), strategy);
            assert_eq!(summary.counts(), &[0]);
            assert_eq!(summary.pareto(), &[true]);
        }
        let empty = SampleMatrix::from_row_major(0, 3, vec![]).unwrap();
        let summary = dominance_counts(empty.view(), Strategy::AxisPruned);
        assert_eq!(summary.n(), 0);
        assert_eq!(summary.layers().total(), 0);
    }

    #[test]
    fn one_dimensional_total_order() {
        let values = [0.7, 0.1, 0.95, 0.3, 0.5];
        let rows: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        let s = SampleMatrix::from_rows(&rows).unwrap();
        for strategy in ALL {
            let summary = dominance_counts(s.view(), strategy);
            assert_eq!(summary.counts(), &[3, 0, 4, 1, 2]);
            let layers = summary.layers();
            assert_eq!(layers.pareto(), 1);
            for r in 1..=4 {
                assert_eq!(layers.layer(r), 1);
            }
        }
    }

    #[test]
    fn antichain_is_all_pareto() {
        let s = SampleMatrix::from_rows(&[[0.1, 0.9], [0.5, 0.5], [0.9, 0.1]]).unwrap();
        let summary = dominance_counts(s.view(), Strategy::AxisPruned);
        assert_eq!(summary.layers().pareto(), 3);
        assert_eq!(summary.layers().tail_from(1), 0);
        let stats = box_statistics(
            s.view(),
            &ProjectionSpec::leading(2).unwrap(),
            &BoxRegion::unit(2),
        )
        .unwrap();
        assert_eq!((stats.s, stats.t), (0, 0));
        assert!(stats.projected_points.is_empty());
    }

    #[test]
    fn duplicates_dominate_each_other() {
        let s = SampleMatrix::from_rows(&[[0.3, 0.3], [0.3, 0.3], [0.8, 0.8]]).unwrap();
        for strategy in ALL {
            assert_eq!(dominance_counts(s.view(), strategy).counts(), &[1, 1, 2]);
        }
    }

    #[test]
    fn hand_example_box_statistics() {
        let s = hand_sample();
        let proj = ProjectionSpec::leading(1).unwrap();
        let stats = box_statistics(s.view(), &proj, &BoxRegion::unit(1)).unwrap();
        assert_eq!(stats.s, 3);
        assert_eq!(stats.t, 2);
        assert_eq!(stats.projected_points, vec![vec![0.9], vec![0.5]]);

        let empty = BoxRegion::new(vec![(0.0, 0.2)]).unwrap();
        let stats = box_statistics(s.view(), &proj, &empty).unwrap();
        assert_eq!((stats.s, stats.t), (0, 0));
        assert!(stats.projected_points.is_empty());
    }

    #[test]
    fn box_statistics_rejects_bad_projection() {
        let s = hand_sample();
        let proj = ProjectionSpec::new(vec![2]).unwrap();
        assert!(matches!(
            box_statistics(s.view(), &proj, &BoxRegion::unit(1)),
            Err(Error::InvalidArgument(_))
        ));
        let proj = ProjectionSpec::leading(1).unwrap();
        assert!(box_statistics(s.view(), &proj, &BoxRegion::unit(2)).is_err());
    }

    #[test]
    fn capped_points_keep_exact_totals() {
        let s = hand_sample();
        let proj = ProjectionSpec::leading(1).unwrap();
        let summary = dominance_counts(s.view(), Strategy::Naive);
        let stats =
            BoxStatistics::from_summary_capped(s.view(), &summary, &proj, &BoxRegion::unit(1), 1)
                .unwrap();
        assert_eq!((stats.s, stats.t), (3, 2));
        assert_eq!(stats.projected_points.len(), 1);
    }

    fn sample_strategy(
        max_n: usize,
        max_d: usize,
    ) -> impl proptest::strategy::Strategy<Value = SampleMatrix> {
        (1..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
            proptest::collection::vec(0.0f64..=1.0, n * d)
                .prop_map(move |coords| SampleMatrix::from_row_major(n, d, coords).unwrap())
        })
    }

    fn tied_sample_strategy() -> impl proptest::strategy::Strategy<Value = SampleMatrix> {
        (1usize..=30, 1usize..=4).prop_flat_map(|(n, d)| {
            proptest::collection::vec(0u8..=4, n * d).prop_map(move |grid| {
                let coords = grid.into_iter().map(|g| g as f64 / 4.0).collect();
                SampleMatrix::from_row_major(n, d, coords).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn strategies_agree(s in sample_strategy(60, 8)) {
            let naive = dominance_counts(s.view(), Strategy::Naive);
            prop_assert_eq!(&naive, &dominance_counts(s.view(), Strategy::SumPruned));
            prop_assert_eq!(&naive, &dominance_counts(s.view(), Strategy::AxisPruned));
        }

        #[test]
        fn strategies_agree_with_ties(s in tied_sample_strategy()) {
            let naive = dominance_counts(s.view(), Strategy::Naive);
            prop_assert_eq!(&naive, &dominance_counts(s.view(), Strategy::SumPruned));
            prop_assert_eq!(&naive, &dominance_counts(s.view(), Strategy::AxisPruned));
        }

        #[test]
        fn summary_invariants(s in sample_strategy(50, 6)) {
            let summary = dominance_counts(s.view(), Strategy::AxisPruned);
            let layers = summary.layers();
            prop_assert_eq!(layers.total(), s.n() as u64);
            for (c, p) in summary.counts().iter().zip(summary.pareto()) {
                prop_assert_eq!(*c == 0, *p);
            }
            let mut pairs = 0u64;
            for i in 0..s.n() {
                for j in 0..s.n() {
                    if i != j && dominates(s.row(i), s.row(j)).unwrap() {
                        pairs += 1;
                    }
                }
            }
            prop_assert_eq!(summary.dominating_pairs(), pairs);
        }

        #[test]
        fn antisymmetry((a, b) in (1usize..6).prop_flat_map(|k| {
            let grid = proptest::collection::vec((0u8..3).prop_map(|v| f64::from(v) / 2.0), k);
            (grid.clone(), grid)
        })) {
            if dominates(&a, &b).unwrap() && dominates(&b, &a).unwrap() {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn box_consistency(s in sample_strategy(40, 5), a in 0.0f64..0.5, w in 0.05f64..0.5) {
            let proj = ProjectionSpec::leading(1).unwrap();
            let region = BoxRegion::new(vec![(a, a + w)]).unwrap();
            let summary = dominance_counts(s.view(), Strategy::AxisPruned);
            let stats = BoxStatistics::from_summary(s.view(), &summary, &proj, &region).unwrap();
            prop_assert!(stats.t <= stats.s);
            prop_assert_eq!(stats.t == 0, stats.s == 0);
            prop_assert_eq!(stats.projected_points.len() as u64, stats.t);

            let full = BoxStatistics::from_summary(s.view(), &summary, &proj, &BoxRegion::unit(1)).unwrap();
            prop_assert_eq!(full.s, summary.dominating_pairs());
            prop_assert_eq!(full.t, summary.layers().non_pareto());
        }

        #[test]
        fn dropping_coordinates_never_lowers_counts(s in sample_strategy(40, 6), keep in 1usize..6) {
            prop_assume!(keep <= s.d());
            let full = dominance_counts(s.view(), Strategy::AxisPruned);
            let fewer = dominance_counts(s.view().leading(keep).unwrap(), Strategy::AxisPruned);
            for (hi, lo) in full.counts().iter().zip(fewer.counts()) {
                prop_assert!(lo >= hi);
            }
        }
    }
}
