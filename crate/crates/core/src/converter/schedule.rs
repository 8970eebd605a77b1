/// Base-`e` counter cascade driving level merges.
///
/// After the `c`-th insertion, tier `j >= 1` fires whenever `e^j` divides `c`.
/// Tiers fire in increasing order so a tier-`j` merge absorbs the tier-`j-1`
/// level created by the same insertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeSchedule {
    base: u64,
}

impl MergeSchedule {
    pub fn new(base: u64) -> Self {
        assert!(base >= 2, "merge base must be at least 2");
        MergeSchedule { base }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    /// Tiers due after `count` insertions, lowest first.
    pub fn tiers_due(&self, count: u64) -> Vec<u32> {
        let mut due = Vec::new();
        if count == 0 {
            return due;
        }
        let mut power = self.base;
        let mut tier = 1;
        while count.is_multiple_of(power) {
            due.push(tier);
            match power.checked_mul(self.base) {
                Some(p) if p <= count => power = p,
                _ => break,
            }
            tier += 1;
        }
        due
    }
}

/// One merge that the schedule fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeEvent {
    /// Insertions completed when the merge fired.
    pub after: usize,
    /// `None` for the final merge of every level into one.
    pub tier: Option<u32>,
    /// Levels collapsed (zero when there was nothing above the watermark).
    pub levels_merged: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_with_base_four() {
        let s = MergeSchedule::new(4);
        let fired: Vec<(u64, u32)> = (1..=16)
            .flat_map(|c| s.tiers_due(c).into_iter().map(move |t| (c, t)))
            .collect();
        assert_eq!(fired, vec![(4, 1), (8, 1), (12, 1), (16, 1), (16, 2)]);
    }

    #[test]
    fn below_base_nothing_fires() {
        let s = MergeSchedule::new(8);
        assert!((1..8).all(|c| s.tiers_due(c).is_empty()));
        assert_eq!(s.tiers_due(64), vec![1, 2]);
        assert_eq!(s.tiers_due(512), vec![1, 2, 3]);
    }

    #[test]
    fn huge_counts_do_not_overflow() {
        let s = MergeSchedule::new(256);
        let c = 1u64 << 56;
        assert_eq!(s.tiers_due(c), vec![1, 2, 3, 4, 5, 6, 7]);
    }
}
