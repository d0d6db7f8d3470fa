//! One-dimensional meshes (temporal and spatial) and the refinement
//! primitives all level-creation strategies are built from.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::{close, Real};

/// Relative tolerance used to decide whether two boundary times coincide.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Ordered partition of `[0, end]` into intervals, stored by its nodes.
///
/// Invariants: strictly increasing nodes, first node exactly zero, at least
/// one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1d<T> {
    nodes: Vec<T>,
}

/// A mesh over the time horizon `(0, T]`.
pub type TemporalMesh<T> = Mesh1d<T>;

/// A mesh over the spatial domain `[0, L]`.
pub type SpatialMesh<T> = Mesh1d<T>;

impl<T: Real> Mesh1d<T> {
    /// `intervals` equal intervals on `[0, end]`.
    pub fn uniform(end: T, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidMesh("a mesh needs at least one interval".into()));
        }
        if !(end > T::zero()) || !end.is_finite() {
            return Err(Error::InvalidMesh(format!("end point {end} must be positive")));
        }
        let n = T::lit(intervals as f64);
        let mut nodes: Vec<T> = (0..=intervals).map(|i| end * T::lit(i as f64) / n).collect();
        nodes[intervals] = end;
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<T>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMesh("a mesh needs at least two nodes".into()));
        }
        if nodes[0] != T::zero() {
            return Err(Error::InvalidMesh(format!("first node must be 0, got {}", nodes[0])));
        }
        if let Some(i) = nodes.windows(2).position(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "nodes must be strictly increasing (violated between nodes {i} and {})",
                i + 1
            )));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn end(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn interval(&self, i: usize) -> (T, T) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn width(&self, i: usize) -> T {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index of the interval `[t_i, t_{i+1}]` containing `t`; node times map
    /// to the interval on their left (except `t = 0`).
    pub fn locate(&self, t: T) -> Option<usize> {
        if t < T::zero() || t > self.end() {
            return None;
        }
        let idx = self.nodes.partition_point(|&x| x < t);
        Some(idx.saturating_sub(1).min(self.intervals() - 1))
    }

    /// Splits every interval into `factor` equal parts.
    pub fn uniform_refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidFactor { factor, min: 1 });
        }
        let mut nodes = Vec::with_capacity(self.intervals() * factor + 1);
        for i in 0..self.intervals() {
            push_subdivision(&mut nodes, self.nodes[i], self.nodes[i + 1], factor);
        }
        nodes.push(self.end());
        Ok(Self { nodes })
    }

    /// Splits the intervals in `set` into `factor` equal parts; all other
    /// intervals are kept.
    pub fn refine_intervals(&self, set: &IntervalSet, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::InvalidFactor { factor, min: 2 });
        }
        set.check(self.intervals())?;
        let mut nodes = Vec::with_capacity(self.nodes.len() + set.len() * (factor - 1));
        for i in 0..self.intervals() {
            let parts = if set.contains(i) { factor } else { 1 };
            push_subdivision(&mut nodes, self.nodes[i], self.nodes[i + 1], parts);
        }
        nodes.push(self.end());
        Ok(Self { nodes })
    }

    /// The mesh restricted to `[0, t_end]`: nodes strictly below `t_end`
    /// (up to the coincidence tolerance) followed by `t_end` itself.
    pub fn truncate(&self, t_end: T) -> Result<Self> {
        if !(t_end > T::zero()) || t_end > self.end() * (T::one() + T::lit(COINCIDENCE_TOL)) {
            return Err(Error::TimeOutOfRange {
                time: t_end.as_f64(),
                horizon: self.end().as_f64(),
            });
        }
        let tol = T::lit(COINCIDENCE_TOL);
        let mut nodes: Vec<T> = self
            .nodes
            .iter()
            .copied()
            .take_while(|&x| x < t_end && !close(x, t_end, tol))
            .collect();
        if nodes.is_empty() {
            nodes.push(T::zero());
        }
        nodes.push(t_end);
        Self::from_nodes(nodes)
    }

    /// True when every node of `coarse` is (within tolerance) a node of `self`.
    pub fn contains_nodes_of(&self, coarse: &Mesh1d<T>) -> bool {
        let tol = T::lit(COINCIDENCE_TOL);
        let mut j = 0;
        coarse.nodes.iter().all(|&x| {
            while j < self.nodes.len() && self.nodes[j] < x && !close(self.nodes[j], x, tol) {
                j += 1;
            }
            j < self.nodes.len() && close(self.nodes[j], x, tol)
        })
    }

    /// Groups consecutive intervals of equal width into uniform blocks.
    ///
    /// A uniform mesh yields one block; a mesh built with [`Mesh1d::from_blocks`]
    /// yields its blocks back (neighbouring blocks of equal density merge).
    pub fn uniform_blocks(&self) -> Vec<MesoSpan<T>> {
        let tol = T::lit(1e-9);
        let mut blocks = Vec::new();
        let mut start = 0;
        for i in 1..=self.intervals() {
            if i == self.intervals() || !close(self.width(i), self.width(start), tol) {
                blocks.push(MesoSpan {
                    start: self.nodes[start],
                    end: self.nodes[i],
                    intervals: i - start,
                });
                start = i;
            }
        }
        blocks
    }

    /// Builds a mesh with a uniform sub-grid on each block. Blocks must tile
    /// `[0, end]` in order.
    pub fn from_blocks(blocks: &[MesoSpan<T>]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidMesh("no blocks".into()))?;
        if first.start != T::zero() {
            return Err(Error::InvalidMesh("blocks must start at 0".into()));
        }
        let tol = T::lit(COINCIDENCE_TOL);
        let mut nodes = Vec::new();
        for (k, b) in blocks.iter().enumerate() {
            if k > 0 && !close(blocks[k - 1].end, b.start, tol) {
                return Err(Error::InvalidMesh(format!("gap between blocks {} and {k}", k - 1)));
            }
            if b.intervals == 0 {
                return Err(Error::InvalidMesh(format!("block {k} has no intervals")));
            }
            push_subdivision(&mut nodes, b.start, b.end, b.intervals);
        }
        nodes.push(blocks[blocks.len() - 1].end);
        Self::from_nodes(nodes)
    }

    /// Subdivides the intervals of `self` so that span `k` holds exactly
    /// `spans[k].intervals` intervals without removing any node.
    ///
    /// Span boundaries must be nodes of `self` and no span may ask for fewer
    /// intervals than it already has. The `n` intervals of a span are spread
    /// over its `m` existing intervals as evenly as possible (`⌊n/m⌋` or
    /// `⌈n/m⌉` each), which is a uniform sub-grid whenever `m` divides `n`.
    pub fn refine_to_spans(&self, spans: &[MesoSpan<T>]) -> Result<Self> {
        let tol = T::lit(COINCIDENCE_TOL);
        let mut nodes = Vec::with_capacity(spans.iter().map(|s| s.intervals).sum::<usize>() + 1);
        let mut i = 0;
        for (k, s) in spans.iter().enumerate() {
            if i >= self.intervals() || !close(self.nodes[i], s.start, tol) {
                return Err(Error::DomainMismatch(format!("span {k} does not start at a mesh node")));
            }
            let first = i;
            while i < self.intervals() && !close(self.nodes[i + 1], s.end, tol) && self.nodes[i + 1] < s.end {
                i += 1;
            }
            if i >= self.intervals() || !close(self.nodes[i + 1], s.end, tol) {
                return Err(Error::DomainMismatch(format!("span {k} does not end at a mesh node")));
            }
            i += 1;
            let m = i - first;
            if s.intervals < m {
                return Err(Error::InvalidMesh(format!(
                    "span {k} asks for {} intervals but already has {m}",
                    s.intervals
                )));
            }
            for j in 0..m {
                let parts = (j + 1) * s.intervals / m - j * s.intervals / m;
                push_subdivision(&mut nodes, self.nodes[first + j], self.nodes[first + j + 1], parts);
            }
        }
        if i != self.intervals() {
            return Err(Error::DomainMismatch("spans do not cover the mesh".into()));
        }
        nodes.push(self.end());
        Self::from_nodes(nodes)
    }

    /// Plain-text dump: one node per line, 17 significant digits.
    pub fn to_dump(&self) -> String {
        let mut s = String::with_capacity(self.nodes.len() * 24);
        for x in &self.nodes {
            let _ = writeln!(s, "{:.16e}", x.as_f64());
        }
        s
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let nodes = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::InvalidMesh(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_nodes(nodes)
    }
}

fn push_subdivision<T: Real>(nodes: &mut Vec<T>, a: T, b: T, parts: usize) {
    let p = T::lit(parts as f64);
    nodes.push(a);
    for j in 1..parts {
        nodes.push(a + (b - a) * (T::lit(j as f64) / p));
    }
}

/// Set of interval indices selected for refinement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntervalSet(BTreeSet<usize>);

impl IntervalSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, index: usize) -> bool {
        self.0.insert(index)
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.contains(&index)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union_with(&mut self, other: &IntervalSet) {
        self.0.extend(other.0.iter().copied());
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Rejects indices at or beyond `intervals`.
    pub fn check(&self, intervals: usize) -> Result<()> {
        match self.0.iter().next_back() {
            Some(&index) if index >= intervals => Err(Error::IntervalOutOfRange { index, intervals }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for IntervalSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// A meso-scale region: a contiguous run of intervals of one mesh, with the
/// error accumulated over it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MesoRegion<T> {
    pub start_interval: usize,
    /// Inclusive.
    pub end_interval: usize,
    pub accumulated_error: T,
}

impl<T: Real> MesoRegion<T> {
    pub fn interval_count(&self) -> usize {
        self.end_interval - self.start_interval + 1
    }

    pub fn span(&self, mesh: &Mesh1d<T>) -> (T, T) {
        (mesh.nodes()[self.start_interval], mesh.nodes()[self.end_interval + 1])
    }
}

/// A time span `[start, end]` carrying a number of uniform intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MesoSpan<T> {
    pub start: T,
    pub end: T,
    pub intervals: usize,
}

impl<T: Real> MesoSpan<T> {
    /// Intervals per unit length.
    pub fn density(&self) -> T {
        T::lit(self.intervals as f64) / (self.end - self.start)
    }
}

/// Overlay of two tilings of the same domain.
///
/// The result is split at every boundary of either input. Each piece gets
/// the larger of the two parents' interval densities scaled to the piece
/// length, rounded up (minimum one interval), so no piece is coarser than
/// the corresponding part of `previous`.
pub fn common_mesoregion_refinement<T: Real>(
    previous: &[MesoSpan<T>],
    tentative: &[MesoSpan<T>],
) -> Result<Vec<MesoSpan<T>>> {
    let tol = T::lit(COINCIDENCE_TOL);
    check_tiling(previous, "previous")?;
    check_tiling(tentative, "tentative")?;
    let (p_end, t_end) = (previous[previous.len() - 1].end, tentative[tentative.len() - 1].end);
    if !close(p_end, t_end, tol) {
        return Err(Error::DomainMismatch(format!(
            "tilings end at {p_end} and {t_end}"
        )));
    }

    let mut cuts: Vec<T> = previous
        .iter()
        .chain(tentative)
        .map(|s| s.end)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite boundaries"));
    cuts.dedup_by(|a, b| close(*a, *b, tol));
    // keep the previous mesh's end point exactly
    *cuts.last_mut().expect("nonempty") = p_end;

    let (mut ip, mut it) = (0, 0);
    let mut start = T::zero();
    let mut out = Vec::with_capacity(cuts.len());
    for &end in &cuts {
        while previous[ip].end < end && !close(previous[ip].end, end, tol) {
            ip += 1;
        }
        while tentative[it].end < end && !close(tentative[it].end, end, tol) {
            it += 1;
        }
        let len = end - start;
        let need = |s: &MesoSpan<T>| {
            let x = s.density() * len;
            // tolerate round-off just above an integer
            (x - T::lit(1e-9) * T::one().max(x)).ceil().max(T::one())
        };
        let count = need(&previous[ip]).max(need(&tentative[it]));
        out.push(MesoSpan {
            start,
            end,
            intervals: count.to_usize().expect("finite interval count"),
        });
        start = end;
    }
    Ok(out)
}

fn check_tiling<T: Real>(spans: &[MesoSpan<T>], name: &str) -> Result<()> {
    let tol = T::lit(COINCIDENCE_TOL);
    let first = spans
        .first()
        .ok_or_else(|| Error::DomainMismatch(format!("{name} tiling is empty")))?;
    if first.start != T::zero() {
        return Err(Error::DomainMismatch(format!("{name} tiling does not start at 0")));
    }
    for (k, s) in spans.iter().enumerate() {
        if !(s.end > s.start) || s.intervals == 0 {
            return Err(Error::DomainMismatch(format!("{name} span {k} is empty")));
        }
        if k > 0 && !close(spans[k - 1].end, s.start, tol) {
            return Err(Error::DomainMismatch(format!("{name} tiling has a gap before span {k}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(nodes: &[f64]) -> Mesh1d<f64> {
        Mesh1d::from_nodes(nodes.to_vec()).unwrap()
    }

    #[test]
    fn uniform_refine_examples() {
        assert_eq!(mesh(&[0.0, 3.0]).uniform_refine(2).unwrap().nodes(), &[0.0, 1.5, 3.0]);
        let m = Mesh1d::uniform(3.0, 27).unwrap();
        let r = m.uniform_refine(2).unwrap();
        assert_eq!(r.intervals(), 54);
        assert!(r.contains_nodes_of(&m));
        assert_eq!(m.uniform_refine(1).unwrap(), m);
    }

    #[test]
    fn refine_intervals_examples() {
        let m = mesh(&[0.0, 1.0, 2.0]);
        let set: IntervalSet = [0].into_iter().collect();
        assert_eq!(m.refine_intervals(&set, 2).unwrap().nodes(), &[0.0, 0.5, 1.0, 2.0]);
        assert_eq!(m.refine_intervals(&IntervalSet::new(), 3).unwrap(), m);

        // 18 intervals with k of them split in three -> 18 + 2k
        let m = Mesh1d::uniform(3.0, 18).unwrap();
        let nine: IntervalSet = (0..9).collect();
        assert_eq!(m.refine_intervals(&nine, 3).unwrap().intervals(), 36);
        let eight: IntervalSet = (0..8).collect();
        assert_eq!(m.refine_intervals(&eight, 3).unwrap().intervals(), 34);
    }

    #[test]
    fn refine_intervals_rejects_bad_input() {
        let m = mesh(&[0.0, 1.0, 2.0]);
        let set: IntervalSet = [2].into_iter().collect();
        assert_eq!(
            m.refine_intervals(&set, 2),
            Err(Error::IntervalOutOfRange { index: 2, intervals: 2 })
        );
        assert!(matches!(
            m.refine_intervals(&IntervalSet::new(), 1),
            Err(Error::InvalidFactor { .. })
        ));
    }

    #[test]
    fn invalid_meshes_rejected() {
        assert!(Mesh1d::<f64>::from_nodes(vec![0.0]).is_err());
        assert!(Mesh1d::from_nodes(vec![0.1, 1.0]).is_err());
        assert!(Mesh1d::from_nodes(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Mesh1d::<f64>::uniform(1.0, 0).is_err());
    }

    #[test]
    fn locate_and_truncate() {
        let m = Mesh1d::uniform(2.0, 4).unwrap();
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.5), Some(0));
        assert_eq!(m.locate(0.6), Some(1));
        assert_eq!(m.locate(2.0), Some(3));
        assert_eq!(m.locate(2.1), None);
        assert_eq!(m.truncate(1.2).unwrap().nodes(), &[0.0, 0.5, 1.0, 1.2]);
        assert_eq!(m.truncate(1.0).unwrap().nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(m.truncate(0.1).unwrap().nodes(), &[0.0, 0.1]);
        assert!(m.truncate(0.0).is_err());
        assert!(m.truncate(2.5).is_err());
    }

    #[test]
    fn blocks_round_trip() {
        let blocks = vec![
            MesoSpan { start: 0.0, end: 1.0, intervals: 1 },
            MesoSpan { start: 1.0, end: 3.0, intervals: 5 },
        ];
        let m = Mesh1d::from_blocks(&blocks).unwrap();
        assert_eq!(m.intervals(), 6);
        let back = m.uniform_blocks();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].intervals, 5);
        assert_eq!(Mesh1d::uniform(3.0, 27).unwrap().uniform_blocks().len(), 1);
    }

    #[test]
    fn refine_to_spans_keeps_nodes() {
        let m = Mesh1d::from_blocks(&[
            MesoSpan { start: 0.0, end: 1.0, intervals: 1 },
            MesoSpan { start: 1.0, end: 3.0, intervals: 4 },
        ])
        .unwrap();
        let spans = [
            MesoSpan { start: 0.0, end: 1.0, intervals: 2 },
            MesoSpan { start: 1.0, end: 2.0, intervals: 3 },
            MesoSpan { start: 2.0, end: 3.0, intervals: 4 },
        ];
        let r = m.refine_to_spans(&spans).unwrap();
        assert_eq!(r.intervals(), 9);
        assert!(r.contains_nodes_of(&m));
        // a multiple of the existing count gives a uniform sub-grid
        assert!((5..9).all(|i| (r.width(i) - 0.25_f64).abs() < 1e-15));

        let coarse = [MesoSpan { start: 0.0, end: 3.0, intervals: 3 }];
        assert!(m.refine_to_spans(&coarse).is_err());
        let off = [MesoSpan { start: 0.0, end: 3.0 - 0.1, intervals: 9 }];
        assert!(m.refine_to_spans(&off).is_err());
    }

    #[test]
    fn dump_round_trip_is_exact() {
        let m = Mesh1d::uniform(3.0, 7).unwrap().uniform_refine(3).unwrap();
        let back = Mesh1d::<f64>::parse_dump(&m.to_dump()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn merge_tentative_finer() {
        let prev = [MesoSpan { start: 0.0, end: 3.0, intervals: 4 }];
        let tent = [MesoSpan { start: 0.0, end: 3.0, intervals: 8 }];
        let out = common_mesoregion_refinement(&prev, &tent).unwrap();
        assert_eq!(out, vec![MesoSpan { start: 0.0, end: 3.0, intervals: 8 }]);
    }

    #[test]
    fn merge_overlay_takes_max_density() {
        // boundaries {0, 0.5, 1, 2.5, 3}; counts by hand:
        // [0,0.5]:   prev 0.5, tent 1   -> 1
        // [0.5,1]:   prev 0.5, tent 1.5 -> 2
        // [1,2.5]:   prev 3.75, tent 4.5 -> 5
        // [2.5,3]:   prev 1.25, tent 1  -> 2
        let prev = [
            MesoSpan { start: 0.0, end: 1.0, intervals: 1 },
            MesoSpan { start: 1.0, end: 3.0, intervals: 5 },
        ];
        let tent = [
            MesoSpan { start: 0.0, end: 0.5, intervals: 1 },
            MesoSpan { start: 0.5, end: 2.5, intervals: 6 },
            MesoSpan { start: 2.5, end: 3.0, intervals: 1 },
        ];
        let out = common_mesoregion_refinement(&prev, &tent).unwrap();
        let ends: Vec<f64> = out.iter().map(|s| s.end).collect();
        assert_eq!(ends, vec![0.5, 1.0, 2.5, 3.0]);
        let counts: Vec<usize> = out.iter().map(|s| s.intervals).collect();
        assert_eq!(counts, vec![1, 2, 5, 2]);

        let same = common_mesoregion_refinement(&prev, &prev).unwrap();
        assert_eq!(same, prev.to_vec());
    }

    #[test]
    fn merge_rejects_mismatched_domains() {
        let a = [MesoSpan { start: 0.0, end: 3.0, intervals: 4 }];
        let b = [MesoSpan { start: 0.0, end: 2.0, intervals: 4 }];
        assert!(matches!(
            common_mesoregion_refinement(&a, &b),
            Err(Error::DomainMismatch(_))
        ));
    }
}
