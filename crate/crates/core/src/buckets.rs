//! Resolution buckets for generated images.
//!
//! An image layer's predicted size is mapped to the bucket with the closest
//! aspect ratio (in log space), then closest area, then smallest id.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bucket {
    pub id: String,
    pub width: u32,
    pub height: u32,
}

impl Bucket {
    pub fn new(width: u32, height: u32) -> Self {
        Self { id: format!("{width}x{height}"), width, height }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BucketError {
    #[error("bucket table is empty")]
    Empty,
    #[error("duplicate bucket id {0:?}")]
    DuplicateId(String),
    #[error("duplicate bucket size {0}x{1}")]
    DuplicateSize(u32, u32),
    #[error("bucket {id:?} size {width}x{height} is not a positive multiple of 64")]
    NotMultipleOf64 { id: String, width: u32, height: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BucketTable {
    buckets: Vec<Bucket>,
}

impl BucketTable {
    pub fn new(buckets: Vec<Bucket>) -> Result<Self, BucketError> {
        if buckets.is_empty() {
            return Err(BucketError::Empty);
        }
        let mut ids = HashSet::new();
        let mut sizes = HashSet::new();
        for b in &buckets {
            if b.width == 0 || b.height == 0 || b.width % 64 != 0 || b.height % 64 != 0 {
                return Err(BucketError::NotMultipleOf64 { id: b.id.clone(), width: b.width, height: b.height });
            }
            if !ids.insert(b.id.as_str()) {
                return Err(BucketError::DuplicateId(b.id.clone()));
            }
            if !sizes.insert((b.width, b.height)) {
                return Err(BucketError::DuplicateSize(b.width, b.height));
            }
        }
        Ok(Self { buckets })
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn get(&self, id: &str) -> Option<&Bucket> {
        self.buckets.iter().find(|b| b.id == id)
    }

    /// Best bucket for a `w` x `h` image.
    pub fn assign(&self, w: u32, h: u32) -> &Bucket {
        assert!(w >= 1 && h >= 1, "image size must be positive");
        let target = (w as f64 / h as f64).ln();
        let area = w as u64 * h as u64;
        self.buckets
            .iter()
            .min_by(|a, b| {
                let da = ((a.width as f64 / a.height as f64).ln() - target).abs();
                let db = ((b.width as f64 / b.height as f64).ln() - target).abs();
                da.total_cmp(&db)
                    .then_with(|| (a.width as u64 * a.height as u64).abs_diff(area).cmp(&(b.width as u64 * b.height as u64).abs_diff(area)))
                    .then_with(|| a.id.cmp(&b.id))
            })
            .expect("table is non-empty")
    }

    /// Splits items into bucket-pure batches of at most `batch_size`.
    ///
    /// Buckets appear in order of their first item; items keep input order.
    pub fn group_batches<T: Clone>(&self, items: &[(T, u32, u32)], batch_size: usize) -> Vec<Batch<T>> {
        assert!(batch_size >= 1, "batch_size must be at least 1");
        let mut per_bucket: Vec<(String, Vec<T>)> = Vec::new();
        for (item, w, h) in items {
            let id = &self.assign(*w, *h).id;
            match per_bucket.iter_mut().find(|(b, _)| b == id) {
                Some((_, v)) => v.push(item.clone()),
                None => per_bucket.push((id.clone(), vec![item.clone()])),
            }
        }
        per_bucket
            .into_iter()
            .flat_map(|(bucket, v)| {
                v.chunks(batch_size).map(|c| Batch { bucket: bucket.clone(), items: c.to_vec() }).collect::<Vec<_>>()
            })
            .collect()
    }
}

impl Default for BucketTable {
    /// Nine aspect ratios around 512² pixels, sides multiples of 64.
    fn default() -> Self {
        let sizes = [
            (512, 512),
            (448, 576),
            (576, 448),
            (448, 640),
            (640, 448),
            (512, 768),
            (768, 512),
            (384, 704),
            (704, 384),
        ];
        Self::new(sizes.iter().map(|&(w, h)| Bucket::new(w, h)).collect()).expect("default table is valid")
    }
}

impl<'de> Deserialize<'de> for BucketTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            buckets: Vec<Bucket>,
        }
        let raw = Raw::deserialize(d)?;
        BucketTable::new(raw.buckets).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for BucketTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.buckets {
            writeln!(f, "{:<10} {:>5} {:>5}", b.id, b.width, b.height)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch<T> {
    pub bucket: String,
    pub items: Vec<T>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square() {
        assert_eq!(BucketTable::default().assign(512, 512).id, "512x512");
    }

    #[test]
    fn two_by_three() {
        assert_eq!(BucketTable::default().assign(500, 750).id, "512x768");
    }

    #[test]
    fn extreme_aspects_go_to_the_edges() {
        let t = BucketTable::default();
        assert_eq!(t.assign(10000, 10).id, "704x384");
        assert_eq!(t.assign(10, 10000).id, "384x704");
    }

    #[test]
    fn chunks_per_bucket() {
        let t = BucketTable::default();
        let items: Vec<_> = (0..5).map(|i| (i, 512, 512)).collect();
        let sizes: Vec<_> = t.group_batches(&items, 2).iter().map(|b| b.items.len()).collect();
        assert_eq!(sizes, [2, 2, 1]);
    }

    #[test]
    fn alternating_items_stay_pure() {
        let t = BucketTable::default();
        let items: Vec<_> = (0..6).map(|i| if i % 2 == 0 { (i, 512, 512) } else { (i, 1000, 560) }).collect();
        let batches = t.group_batches(&items, 10);
        assert_eq!(batches.len(), 2);
        assert_eq!(batches[0].items, [0, 2, 4]);
        assert_eq!(batches[1].items, [1, 3, 5]);
        assert!(t.group_batches::<u8>(&[], 3).is_empty());
    }

    #[test]
    fn rejects_bad_tables() {
        assert_eq!(BucketTable::new(vec![]), Err(BucketError::Empty));
        assert!(BucketTable::new(vec![Bucket::new(500, 512)]).is_err());
        assert!(BucketTable::new(vec![Bucket::new(512, 512), Bucket::new(512, 512)]).is_err());
    }

    #[test]
    fn table_deserializes_with_validation() {
        let t: BucketTable = serde_json::from_str(r#"{"buckets":[{"id":"a","width":64,"height":128}]}"#).unwrap();
        assert_eq!(t.assign(1, 1).id, "a");
        assert!(serde_json::from_str::<BucketTable>(r#"{"buckets":[]}"#).is_err());
    }
}
