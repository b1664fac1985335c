use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// A basis vector: block id, optional periodic copy, slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisIndex {
    pub block: Arc<str>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copy: Option<u64>,
    pub slot: i64,
}

impl BasisIndex {
    pub fn new(block: &str, slot: i64) -> BasisIndex {
        BasisIndex { block: Arc::from(block), copy: None, slot }
    }

    pub fn periodic(block: &str, copy: u64, slot: i64) -> BasisIndex {
        BasisIndex { block: Arc::from(block), copy: Some(copy), slot }
    }

    pub fn with_block(block: &Arc<str>, copy: Option<u64>, slot: i64) -> BasisIndex {
        BasisIndex { block: block.clone(), copy, slot }
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.copy {
            Some(c) => write!(f, "{}#{}[{}]", self.block, c, self.slot),
            None => write!(f, "{}[{}]", self.block, self.slot),
        }
    }
}

/// Zigzag numbering of the integers: 0, −1, 1, −2, 2, …
pub fn zigzag(k: i64) -> u64 {
    if k >= 0 {
        2 * k as u64
    } else {
        2 * (-k) as u64 - 1
    }
}

pub fn unzigzag(j: u64) -> i64 {
    if j.is_multiple_of(2) {
        (j / 2) as i64
    } else {
        -(j.div_ceil(2) as i64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_forms() {
        let s = serde_json::to_string(&BasisIndex::new("S0", -3)).unwrap();
        assert_eq!(s, r#"{"block":"S0","slot":-3}"#);
        let p: BasisIndex = serde_json::from_str(r#"{"block":"P1","copy":4,"slot":1}"#).unwrap();
        assert_eq!(p, BasisIndex::periodic("P1", 4, 1));
    }

    #[test]
    fn zigzag_round_trip() {
        for k in -50..50 {
            assert_eq!(unzigzag(zigzag(k)), k);
        }
        assert_eq!((0..5).map(unzigzag).collect::<Vec<_>>(), vec![0, -1, 1, -2, 2]);
    }
}
