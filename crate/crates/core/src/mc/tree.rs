//! Virtual Brownian tree: a 2-D Brownian path on [t0, t0 + span] whose value
//! at every dyadic node is drawn from an RNG keyed by the node, so the same
//! key yields the same path at every resolution. Queries must be monotone.

use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64Mcg;

const MAX_DEPTH: u32 = 60;
const TAG_ROOT: u64 = 0;
const TAG_MID: u64 = 1;
const TAG_LEAF: u64 = 2;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Hashes a sequence of words into a 64-bit key.
pub(crate) fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x5851_f42d_4c95_7f2d, |h, &w| splitmix(h ^ splitmix(w)))
}

fn node_rng(key: u64, level: u32, index: u64, tag: u64) -> Pcg64Mcg {
    let hi = mix(&[key, level as u64, index, tag]);
    let lo = splitmix(hi ^ 0xd1b5_4a32_d192_ed03);
    Pcg64Mcg::new((((hi as u128) << 64) | lo as u128) | 1)
}

fn normal2(rng: &mut Pcg64Mcg) -> [f64; 2] {
    [StandardNormal.sample(rng), StandardNormal.sample(rng)]
}

struct Node {
    level: u32,
    index: u64,
    start: f64,
    end: f64,
    w_end: [f64; 2],
    /// Set once a point strictly inside the node has been drawn; the node is
    /// then never split and further points are bridged sequentially.
    leaf_rng: Option<Pcg64Mcg>,
}

pub(crate) struct BrownianTree {
    key: u64,
    cursor_t: f64,
    cursor_w: [f64; 2],
    stack: Vec<Node>,
}

impl BrownianTree {
    /// Path with W(t0) = 0.
    pub fn new(key: u64, t0: f64, span: f64) -> Self {
        let mut rng = node_rng(key, 0, 0, TAG_ROOT);
        let n = normal2(&mut rng);
        let sd = span.sqrt();
        let root = Node {
            level: 0,
            index: 0,
            start: t0,
            end: t0 + span,
            w_end: [sd * n[0], sd * n[1]],
            leaf_rng: None,
        };
        Self {
            key,
            cursor_t: t0,
            cursor_w: [0.0; 2],
            stack: vec![root],
        }
    }

    pub fn end(&self) -> f64 {
        self.stack.first().map_or(self.cursor_t, |n| n.end)
    }

    /// W(s) for s at or after the last query, resolving the dyadic tree down
    /// to nodes no longer than `leaf_max`. Times past the end are clamped.
    pub fn at(&mut self, s: f64, leaf_max: f64) -> [f64; 2] {
        loop {
            if s <= self.cursor_t {
                return self.cursor_w;
            }
            let Some(top) = self.stack.last_mut() else {
                return self.cursor_w;
            };
            if s >= top.end {
                self.cursor_t = top.end;
                self.cursor_w = top.w_end;
                self.stack.pop();
                continue;
            }
            let len = top.end - top.start;
            if top.leaf_rng.is_none() && len > leaf_max && top.level < MAX_DEPTH {
                let top = self.stack.pop().unwrap();
                let mut rng = node_rng(self.key, top.level, top.index, TAG_MID);
                let n = normal2(&mut rng);
                let sd = (0.25 * len).sqrt();
                let mid = top.start + 0.5 * len;
                let w_mid = [
                    0.5 * (self.cursor_w[0] + top.w_end[0]) + sd * n[0],
                    0.5 * (self.cursor_w[1] + top.w_end[1]) + sd * n[1],
                ];
                self.stack.push(Node {
                    level: top.level + 1,
                    index: 2 * top.index + 1,
                    start: mid,
                    end: top.end,
                    w_end: top.w_end,
                    leaf_rng: None,
                });
                self.stack.push(Node {
                    level: top.level + 1,
                    index: 2 * top.index,
                    start: top.start,
                    end: mid,
                    w_end: w_mid,
                    leaf_rng: None,
                });
                continue;
            }
            let (level, index) = (top.level, top.index);
            let key = self.key;
            let rng = top
                .leaf_rng
                .get_or_insert_with(|| node_rng(key, level, index, TAG_LEAF));
            let n = normal2(rng);
            let (a, b) = (self.cursor_t, top.end);
            let frac = (s - a) / (b - a);
            let sd = ((s - a) * (b - s) / (b - a)).sqrt();
            let w = [
                self.cursor_w[0] + frac * (top.w_end[0] - self.cursor_w[0]) + sd * n[0],
                self.cursor_w[1] + frac * (top.w_end[1] - self.cursor_w[1]) + sd * n[1],
            ];
            self.cursor_t = s;
            self.cursor_w = w;
            return w;
        }
    }
}

/// Unbounded path on [0, ∞) built from trees of doubling span.
pub(crate) struct TreeChain {
    key: u64,
    k: u64,
    span: f64,
    offset: [f64; 2],
    tree: BrownianTree,
}

impl TreeChain {
    pub fn new(key: u64, first_span: f64) -> Self {
        Self {
            key,
            k: 0,
            span: first_span,
            offset: [0.0; 2],
            tree: BrownianTree::new(mix(&[key, 0]), 0.0, first_span),
        }
    }

    pub fn at(&mut self, s: f64, leaf_max: f64) -> [f64; 2] {
        while s > self.tree.end() {
            let end = self.tree.end();
            let w = self.tree.at(end, f64::INFINITY);
            self.offset = [self.offset[0] + w[0], self.offset[1] + w[1]];
            self.k += 1;
            self.span *= 2.0;
            self.tree = BrownianTree::new(mix(&[self.key, self.k]), end, self.span);
        }
        let w = self.tree.at(s, leaf_max);
        [self.offset[0] + w[0], self.offset[1] + w[1]]
    }
}
