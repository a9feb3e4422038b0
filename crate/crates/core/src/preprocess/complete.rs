//! Nearest-valid-pixel hole filling backed by a static 2D kd-tree.

use super::PreprocessError;
use crate::domain::{is_valid_depth, DepthImage};

#[derive(Clone, Copy)]
struct Node {
    u: i64,
    v: i64,
    value: f32,
}

// Implicit balanced kd-tree: the median of each slice is its root, split on
// u at even depth and v at odd depth.
struct KdTree {
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    d2: i64,
    v: i64,
    u: i64,
}

impl KdTree {
    fn build(mut nodes: Vec<Node>) -> Self {
        fn rec(slice: &mut [Node], depth: usize) {
            if slice.len() <= 1 {
                return;
            }
            let mid = slice.len() / 2;
            if depth.is_multiple_of(2) {
                slice.select_nth_unstable_by_key(mid, |n| (n.u, n.v));
            } else {
                slice.select_nth_unstable_by_key(mid, |n| (n.v, n.u));
            }
            let (left, right) = slice.split_at_mut(mid);
            rec(left, depth + 1);
            rec(&mut right[1..], depth + 1);
        }
        rec(&mut nodes, 0);
        Self { nodes }
    }

    // Nearest node by (squared distance, row, column).
    fn nearest(&self, u: i64, v: i64) -> Option<Node> {
        let mut best: Option<(Key, Node)> = None;
        self.search(&self.nodes, 0, u, v, &mut best);
        best.map(|(_, n)| n)
    }

    fn search(&self, slice: &[Node], depth: usize, u: i64, v: i64, best: &mut Option<(Key, Node)>) {
        if slice.is_empty() {
            return;
        }
        let mid = slice.len() / 2;
        let node = slice[mid];
        let key = Key {
            d2: (node.u - u).pow(2) + (node.v - v).pow(2),
            v: node.v,
            u: node.u,
        };
        if best.as_ref().is_none_or(|(b, _)| key < *b) {
            *best = Some((key, node));
        }
        let diff = if depth.is_multiple_of(2) {
            u - node.u
        } else {
            v - node.v
        };
        let (near, far) = if diff < 0 {
            (&slice[..mid], &slice[mid + 1..])
        } else {
            (&slice[mid + 1..], &slice[..mid])
        };
        self.search(near, depth + 1, u, v, best);
        // Equal plane distance can still hold a tie with a smaller (row, col).
        if best.as_ref().is_none_or(|(b, _)| diff * diff <= b.d2) {
            self.search(far, depth + 1, u, v, best);
        }
    }
}

/// Fills every invalid pixel with the depth of its nearest valid pixel
/// (Euclidean image distance; ties go to the smallest row, then column).
/// Valid pixels are unchanged.
pub fn complete_depth(depth: &DepthImage) -> Result<DepthImage, PreprocessError> {
    let w = depth.width();
    let h = depth.height();
    let data = depth.data();
    let mut valid = Vec::with_capacity(data.len());
    let mut holes = Vec::new();
    for (i, &d) in data.iter().enumerate() {
        if is_valid_depth(d) {
            valid.push(Node {
                u: (i % w) as i64,
                v: (i / w) as i64,
                value: d,
            });
        } else {
            holes.push(i);
        }
    }
    if valid.is_empty() {
        return Err(PreprocessError::AllInvalid);
    }
    if holes.is_empty() {
        return Ok(depth.clone());
    }
    let tree = KdTree::build(valid);
    let fills = crate::par::map_slice(&holes, |&i| {
        tree.nearest((i % w) as i64, (i / w) as i64)
            .expect("tree is non-empty")
            .value
    });
    let mut out = data.to_vec();
    for (&i, f) in holes.iter().zip(fills) {
        out[i] = f;
    }
    Ok(DepthImage::new(w, h, out).expect("filled values come from valid pixels"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Exhaustive scan over all valid pixels for each hole.
    fn brute_force(depth: &DepthImage) -> Vec<f32> {
        let w = depth.width();
        let d = depth.data();
        let mut out = d.to_vec();
        for (i, o) in out.iter_mut().enumerate() {
            if is_valid_depth(d[i]) {
                continue;
            }
            let (u, v) = ((i % w) as i64, (i / w) as i64);
            let mut best: Option<((i64, i64, i64), f32)> = None;
            for (j, &dj) in d.iter().enumerate() {
                if !is_valid_depth(dj) {
                    continue;
                }
                let (uj, vj) = ((j % w) as i64, (j / w) as i64);
                let key = ((uj - u).pow(2) + (vj - v).pow(2), vj, uj);
                if best.is_none_or(|(b, _)| key < b) {
                    best = Some((key, dj));
                }
            }
            *o = best.unwrap().1;
        }
        out
    }

    fn image_strategy() -> impl Strategy<Value = DepthImage> {
        (2usize..24, 2usize..24).prop_flat_map(|(w, h)| {
            prop::collection::vec(
                prop_oneof![3 => (0.3f32..1.0).boxed(), 1 => Just(f32::NAN).boxed()],
                w * h,
            )
            .prop_filter("one valid pixel", |v| v.iter().any(|d| d.is_finite()))
            .prop_map(move |v| DepthImage::new(w, h, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(img in image_strategy()) {
            let filled = complete_depth(&img).unwrap();
            prop_assert_eq!(filled.to_bits(), brute_force(&img).iter().map(|f| f.to_bits()).collect::<Vec<_>>());
        }

        #[test]
        fn idempotent(img in image_strategy()) {
            let once = complete_depth(&img).unwrap();
            let twice = complete_depth(&once).unwrap();
            prop_assert_eq!(once.to_bits(), twice.to_bits());
        }
    }

    #[test]
    fn ties_prefer_smaller_row_then_column() {
        let nan = f32::NAN;
        // Hole at the center; four equidistant neighbours.
        let img = DepthImage::new(3, 3, vec![nan, 0.1, nan, 0.2, nan, 0.3, nan, 0.4, nan]).unwrap();
        let out = complete_depth(&img).unwrap();
        assert_eq!(out.get(1, 1), 0.1);
        // Corner (0,0): neighbours (1,0)=0.1 and (0,1)=0.2 tie; row 0 wins.
        assert_eq!(out.get(0, 0), 0.1);
        // Corner (0,2): (0,1)=0.2 at row 1 and (1,2)=0.4 at row 2.
        assert_eq!(out.get(0, 2), 0.2);
    }

    #[test]
    fn random_dropout_matches_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (w, h) = (80, 60);
        let data: Vec<f32> = (0..w * h)
            .map(|_| {
                if rng.random::<f64>() < 0.02 {
                    f32::NAN
                } else {
                    rng.random_range(0.6..0.8)
                }
            })
            .collect();
        let img = DepthImage::new(w, h, data).unwrap();
        let out = complete_depth(&img).unwrap();
        assert_eq!(out.invalid_count(), 0);
        assert_eq!(
            out.to_bits(),
            brute_force(&img)
                .iter()
                .map(|f| f.to_bits())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn all_invalid_is_an_error() {
        let img = DepthImage::filled(4, 4, f32::NAN);
        assert_eq!(complete_depth(&img), Err(PreprocessError::AllInvalid));
    }

    #[test]
    fn valid_image_is_identity() {
        let img = DepthImage::filled(5, 4, 0.8);
        assert_eq!(complete_depth(&img).unwrap(), img);
    }
}
