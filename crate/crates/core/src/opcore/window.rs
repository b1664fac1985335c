use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::opcore::index::BasisIndex;
use crate::opcore::repaut::RepAut;

/// Closed-form window description: shift slots `−radius..=radius`, periodic copies
/// `0..=margin`, and every coupling/perturbation index padded by `margin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub radius: i64,
    pub margin: u64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec::from_radius(32)
    }
}

impl WindowSpec {
    pub fn from_radius(radius: i64) -> WindowSpec {
        WindowSpec { radius, margin: (radius / 4).max(1) as u64 }
    }

    pub fn doubled(&self) -> WindowSpec {
        WindowSpec { radius: self.radius * 2, margin: self.margin * 2 }
    }
}

/// A finite set of basis indices, sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    indices: Vec<BasisIndex>,
}

impl Window {
    pub fn from_indices(it: impl IntoIterator<Item = BasisIndex>) -> Window {
        let set: BTreeSet<BasisIndex> = it.into_iter().collect();
        Window { indices: set.into_iter().collect() }
    }

    /// Slots `range` of a block without copies.
    pub fn slots(block: &str, range: std::ops::RangeInclusive<i64>) -> Window {
        Window::from_indices(range.map(|k| BasisIndex::new(block, k)))
    }

    pub fn for_aut(u: &RepAut, spec: &WindowSpec) -> Window {
        let mut set: BTreeSet<BasisIndex> = u.finite_indices().into_iter().collect();
        for c in 0..=spec.margin {
            set.extend(u.period_indices(c));
        }
        for b in u.shift_blocks() {
            for k in -spec.radius..=spec.radius {
                set.insert(BasisIndex::with_block(&b.id, None, k));
            }
        }
        let m = spec.margin as i64;
        for i in u.exceptional_support() {
            match i.copy {
                Some(c) => {
                    for cc in c.saturating_sub(spec.margin)..=c + spec.margin {
                        set.extend(u.period_indices(cc));
                    }
                }
                None if u.shift_blocks().iter().any(|b| b.id == i.block) => {
                    for k in i.slot - m..=i.slot + m {
                        set.insert(BasisIndex::with_block(&i.block, None, k));
                    }
                }
                None => {
                    set.insert(i);
                }
            }
        }
        Window { indices: set.into_iter().collect() }
    }

    pub fn union(&self, o: &Window) -> Window {
        Window::from_indices(self.indices.iter().chain(&o.indices).cloned())
    }

    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: &BasisIndex) -> bool {
        self.indices.binary_search(i).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Field;
    use crate::linalg::Mat;
    use crate::opcore::lincomb::LinComb;

    #[test]
    fn default_window_shape() {
        let f = Field::prime(5).unwrap();
        let u = RepAut::builder(f)
            .finite("F0", Mat::identity(f, 2))
            .shift("S0", f.one())
            .periodic("P0", Mat::identity(f, 1))
            .perturb(BasisIndex::periodic("P0", 20, 0), LinComb::unit(BasisIndex::new("F0", 0), f))
            .build()
            .unwrap();
        let w = Window::for_aut(&u, &WindowSpec::default());
        assert!(w.contains(&BasisIndex::new("F0", 1)));
        assert!(w.contains(&BasisIndex::new("S0", -32)));
        assert!(!w.contains(&BasisIndex::new("S0", 33)));
        assert!(w.contains(&BasisIndex::periodic("P0", 8, 0)));
        assert!(!w.contains(&BasisIndex::periodic("P0", 9, 0)));
        assert!(w.contains(&BasisIndex::periodic("P0", 28, 0)));
        assert!(!w.contains(&BasisIndex::periodic("P0", 29, 0)));
        assert_eq!(w.len(), 2 + 65 + 9 + 17);
    }
}
