use alloc::vec::Vec;

/// The pinned explicit expander on `{0,1}^bits`, vertices read as
/// little-endian integers mod `2^bits`.
///
/// For `bits > 4` it is the circulant graph with 8 edge labels (3 bits);
/// label `e` adds `G[e mod 5]` with `G = [+1, -1, +2^h, -2^h, +3]` and
/// `h = bits / 2`. For `bits <= 4` it is the complete graph with self-loops:
/// labels have `bits` bits and label `e` moves `v` to `v + e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Expander {
    bits: usize,
}

impl Expander {
    pub fn new(bits: usize) -> Self {
        Expander { bits }
    }

    pub fn vertex_bits(&self) -> usize {
        self.bits
    }

    pub fn is_complete(&self) -> bool {
        self.bits <= 4
    }

    pub fn label_bits(&self) -> usize {
        if self.is_complete() {
            self.bits
        } else {
            3
        }
    }

    /// Neighbor of `v` along `label` (little-endian label bits).
    pub fn neighbor(&self, v: &[bool], label: &[bool]) -> Vec<bool> {
        debug_assert_eq!(v.len(), self.bits);
        debug_assert_eq!(label.len(), self.label_bits());
        let mut w = v.to_vec();
        if self.is_complete() {
            add_bits(&mut w, label);
            return w;
        }
        let e = label
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &b)| acc | ((b as usize) << k));
        let h = self.bits / 2;
        match e % 5 {
            0 => add_pow2(&mut w, 0),
            1 => sub_pow2(&mut w, 0),
            2 => add_pow2(&mut w, h),
            3 => sub_pow2(&mut w, h),
            _ => {
                add_pow2(&mut w, 0);
                add_pow2(&mut w, 1);
            }
        }
        w
    }
}

fn add_pow2(v: &mut [bool], k: usize) {
    for b in v.iter_mut().skip(k) {
        *b = !*b;
        if *b {
            return;
        }
    }
}

fn sub_pow2(v: &mut [bool], k: usize) {
    for b in v.iter_mut().skip(k) {
        *b = !*b;
        if !*b {
            return;
        }
    }
}

fn add_bits(v: &mut [bool], e: &[bool]) {
    let mut carry = false;
    for (k, b) in v.iter_mut().enumerate() {
        let x = e.get(k).copied().unwrap_or(false);
        let sum = *b ^ x ^ carry;
        carry = (*b & x) | (carry & (*b ^ x));
        *b = sum;
    }
}
