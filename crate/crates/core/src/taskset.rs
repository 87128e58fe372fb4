use std::ops::{BitAnd, BitOr, BitOrAssign, Not, Sub};

/// Set of task indices below [`crate::model::MAX_TASKS`], stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct TaskSet(u128);

impl TaskSet {
    pub const fn empty() -> Self {
        TaskSet(0)
    }

    pub fn singleton(i: usize) -> Self {
        TaskSet(1 << i)
    }

    /// `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        if n >= 128 {
            TaskSet(u128::MAX)
        } else {
            TaskSet((1u128 << n) - 1)
        }
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1 << i);
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }
}

impl BitOr for TaskSet {
    type Output = TaskSet;
    fn bitor(self, rhs: TaskSet) -> TaskSet {
        TaskSet(self.0 | rhs.0)
    }
}

impl BitOrAssign for TaskSet {
    fn bitor_assign(&mut self, rhs: TaskSet) {
        self.0 |= rhs.0;
    }
}

impl BitAnd for TaskSet {
    type Output = TaskSet;
    fn bitand(self, rhs: TaskSet) -> TaskSet {
        TaskSet(self.0 & rhs.0)
    }
}

impl Not for TaskSet {
    type Output = TaskSet;
    fn not(self) -> TaskSet {
        TaskSet(!self.0)
    }
}

impl Sub for TaskSet {
    type Output = TaskSet;
    fn sub(self, rhs: TaskSet) -> TaskSet {
        TaskSet(self.0 & !rhs.0)
    }
}

impl FromIterator<usize> for TaskSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = TaskSet::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}
