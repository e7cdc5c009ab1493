//! Compositions of an integer into a fixed number of non-negative parts.
//!
//! Count lattices (pull counts per arm, success/failure counts per arm) are
//! stored layer by layer, one layer per total. Inside a layer a composition is
//! addressed by its rank in lexicographic order, starting at `(0, .., 0, d)`.

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul(u128::from(n - i)) {
            Some(v) => v / u128::from(i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of compositions of `total` into `parts` non-negative parts.
pub fn composition_count(total: u64, parts: u64) -> u128 {
    if parts == 0 {
        return u128::from(total == 0);
    }
    binomial(total + parts - 1, parts - 1)
}

/// Ranks compositions with a fixed number of parts and bounded total.
#[derive(Debug, Clone)]
pub struct CompositionIndexer {
    parts: usize,
    max_total: usize,
    // counts[r * (parts + 1) + p] = composition_count(r, p)
    counts: Vec<usize>,
}

impl CompositionIndexer {
    /// Panics if a layer size does not fit in `usize`; callers check budgets first.
    pub fn new(parts: usize, max_total: usize) -> Self {
        assert!(parts >= 1);
        let mut counts = vec![0usize; (max_total + 1) * (parts + 1)];
        for r in 0..=max_total {
            for p in 0..=parts {
                let c = composition_count(r as u64, p as u64);
                counts[r * (parts + 1) + p] = usize::try_from(c).expect("layer size fits in usize");
            }
        }
        Self {
            parts,
            max_total,
            counts,
        }
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    #[inline]
    fn count(&self, total: usize, parts: usize) -> usize {
        self.counts[total * (self.parts + 1) + parts]
    }

    /// Number of compositions in layer `total`.
    #[inline]
    pub fn layer_size(&self, total: usize) -> usize {
        self.count(total, self.parts)
    }

    /// Lexicographic rank of `c` within its layer.
    #[inline]
    pub fn rank(&self, c: &[u32]) -> usize {
        debug_assert_eq!(c.len(), self.parts);
        let mut rem: usize = c.iter().map(|&x| x as usize).sum();
        let mut rank = 0;
        for (i, &ci) in c[..self.parts - 1].iter().enumerate() {
            let p = self.parts - i;
            let ci = ci as usize;
            rank += self.count(rem, p) - self.count(rem - ci, p);
            rem -= ci;
        }
        rank
    }
}

/// First composition of `total` in lexicographic order.
pub fn first_composition(parts: usize, total: u32) -> Vec<u32> {
    let mut c = vec![0; parts];
    if let Some(last) = c.last_mut() {
        *last = total;
    }
    c
}

/// Advance `c` to the next composition with the same total. Returns `false`
/// (leaving `c` untouched) when `c` is the last one.
pub fn next_composition(c: &mut [u32]) -> bool {
    let p = c.len();
    if p < 2 {
        return false;
    }
    let mut tail = c[p - 1];
    let mut i = p - 1;
    while i > 0 {
        i -= 1;
        if tail > 0 {
            c[i] += 1;
            for x in &mut c[i + 1..] {
                *x = 0;
            }
            c[p - 1] = tail - 1;
            return true;
        }
        tail += c[i];
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(204, 4), 70_058_751);
        assert_eq!(composition_count(3, 2), 4);
        assert_eq!(composition_count(0, 3), 1);
    }

    #[test]
    fn enumeration_is_lexicographic_and_ranked_in_order() {
        for parts in 1..=4 {
            let idx = CompositionIndexer::new(parts, 7);
            for total in 0..=7u32 {
                let mut c = first_composition(parts, total);
                let mut seen = vec![c.clone()];
                while next_composition(&mut c) {
                    assert!(seen.last().unwrap() < &c);
                    seen.push(c.clone());
                }
                assert_eq!(seen.len(), idx.layer_size(total as usize));
                for (r, comp) in seen.iter().enumerate() {
                    assert_eq!(comp.iter().sum::<u32>(), total);
                    assert_eq!(idx.rank(comp), r);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn rank_is_a_bijection_onto_the_layer(c in prop::collection::vec(0u32..6, 1..5)) {
            let total: u32 = c.iter().sum();
            let idx = CompositionIndexer::new(c.len(), total as usize);
            let r = idx.rank(&c);
            prop_assert!(r < idx.layer_size(total as usize));
            let mut walk = first_composition(c.len(), total);
            for _ in 0..r {
                prop_assert!(next_composition(&mut walk));
            }
            prop_assert_eq!(walk, c);
        }
    }
}
