use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Inclusive integer rectangle `[j1, j2] x [k1, k2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub j1: i64,
    pub j2: i64,
    pub k1: i64,
    pub k2: i64,
}

impl Rect {
    pub fn new(j1: i64, j2: i64, k1: i64, k2: i64) -> Result<Self> {
        if j1 > j2 || k1 > k2 {
            return Err(invalid(format!("empty rectangle [{j1},{j2}]x[{k1},{k2}]")));
        }
        Ok(Rect { j1, j2, k1, k2 })
    }

    pub fn width(&self) -> i64 {
        self.j2 - self.j1 + 1
    }

    pub fn height(&self) -> i64 {
        self.k2 - self.k1 + 1
    }

    pub fn area(&self) -> u64 {
        (self.width() as u64) * (self.height() as u64)
    }

    pub fn contains(&self, j: i64, k: i64) -> bool {
        (self.j1..=self.j2).contains(&j) && (self.k1..=self.k2).contains(&k)
    }

    fn overlaps(&self, o: &Rect) -> bool {
        self.j1 <= o.j2 && o.j1 <= self.j2 && self.k1 <= o.k2 && o.k1 <= self.k2
    }
}

/// A finite index set `Gamma_n` made of disjoint rectangles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub struct IndexRegion {
    rects: Vec<Rect>,
}

#[derive(Serialize, Deserialize)]
struct RegionRepr {
    rectangles: Vec<Rect>,
}

impl TryFrom<RegionRepr> for IndexRegion {
    type Error = crate::error::Error;
    fn try_from(r: RegionRepr) -> Result<Self> {
        IndexRegion::union(r.rectangles)
    }
}

impl From<IndexRegion> for RegionRepr {
    fn from(r: IndexRegion) -> Self {
        RegionRepr { rectangles: r.rects }
    }
}

impl IndexRegion {
    /// `[1, n]^2`.
    pub fn square(n: i64) -> Result<Self> {
        Self::union(vec![Rect::new(1, n, 1, n)?])
    }

    /// `[-n, n]^2`.
    pub fn centered(n: i64) -> Result<Self> {
        Self::union(vec![Rect::new(-n, n, -n, n)?])
    }

    pub fn rectangle(j1: i64, j2: i64, k1: i64, k2: i64) -> Result<Self> {
        Self::union(vec![Rect::new(j1, j2, k1, k2)?])
    }

    pub fn union(rects: Vec<Rect>) -> Result<Self> {
        if rects.is_empty() {
            return Err(invalid("index region must be nonempty"));
        }
        for r in &rects {
            Rect::new(r.j1, r.j2, r.k1, r.k2)?;
        }
        for (i, a) in rects.iter().enumerate() {
            if rects[i + 1..].iter().any(|b| a.overlaps(b)) {
                return Err(invalid("region rectangles must be pairwise disjoint"));
            }
        }
        Ok(IndexRegion { rects })
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn cardinality(&self) -> u64 {
        self.rects.iter().map(Rect::area).sum()
    }

    pub fn bounding_box(&self) -> Rect {
        let mut b = self.rects[0];
        for r in &self.rects[1..] {
            b = Rect { j1: b.j1.min(r.j1), j2: b.j2.max(r.j2), k1: b.k1.min(r.k1), k2: b.k2.max(r.k2) };
        }
        b
    }

    pub fn contains(&self, j: i64, k: i64) -> bool {
        self.rects.iter().any(|r| r.contains(j, k))
    }

    /// All cells, rectangle by rectangle, `j` outer.
    pub fn cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.rects
            .iter()
            .flat_map(|r| (r.j1..=r.j2).flat_map(move |j| (r.k1..=r.k2).map(move |k| (j, k))))
    }

    /// Image under `j -> -j`.
    pub fn reflect_first_axis(&self) -> Self {
        IndexRegion {
            rects: self.rects.iter().map(|r| Rect { j1: -r.j2, j2: -r.j1, k1: r.k1, k2: r.k2 }).collect(),
        }
    }

    pub fn label(&self) -> String {
        self.rects
            .iter()
            .map(|r| format!("[{},{}]x[{},{}]", r.j1, r.j2, r.k1, r.k2))
            .collect::<Vec<_>>()
            .join("+")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinality_is_sum_of_areas() {
        let r = IndexRegion::union(vec![Rect::new(1, 3, 1, 2).unwrap(), Rect::new(5, 5, 0, 9).unwrap()]).unwrap();
        assert_eq!(r.cardinality(), 16);
        assert_eq!(r.cells().count(), 16);
        assert_eq!(r.bounding_box(), Rect { j1: 1, j2: 5, k1: 0, k2: 9 });
    }

    #[test]
    fn rejects_overlap_and_empty() {
        assert!(IndexRegion::union(vec![]).is_err());
        assert!(IndexRegion::union(vec![Rect::new(1, 3, 1, 3).unwrap(), Rect::new(3, 4, 3, 4).unwrap()]).is_err());
        assert!(Rect::new(2, 1, 0, 0).is_err());
    }

    #[test]
    fn serde_round_trip_validates() {
        let r = IndexRegion::square(4).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<IndexRegion>(&s).unwrap(), r);
        let bad = r#"{"rectangles":[{"j1":0,"j2":2,"k1":0,"k2":2},{"j1":1,"j2":1,"k1":1,"k2":1}]}"#;
        assert!(serde_json::from_str::<IndexRegion>(bad).is_err());
    }
}
