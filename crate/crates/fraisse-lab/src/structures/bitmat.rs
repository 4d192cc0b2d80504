//! Growable square bit matrix backing binary relation tables.

/// Bit matrix with one row of packed words per point. Rows grow when the
/// universe does, so appending points never rewrites existing entries.
#[derive(Clone, Debug, Default)]
pub struct BitMatrix {
    n: usize,
    rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    pub fn new(n: usize) -> BitMatrix {
        let words = n.div_ceil(64);
        BitMatrix {
            n,
            rows: vec![vec![0; words]; n],
        }
    }

    pub fn grow(&mut self, n: usize) {
        debug_assert!(n >= self.n);
        let words = n.div_ceil(64);
        for row in &mut self.rows {
            row.resize(words, 0);
        }
        self.rows.resize(n, vec![0; words]);
        self.n = n;
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.rows[x][y / 64] >> (y % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize) {
        self.rows[x][y / 64] |= 1 << (y % 64);
    }

    #[inline]
    pub fn clear(&mut self, x: usize, y: usize) {
        self.rows[x][y / 64] &= !(1 << (y % 64));
    }

    pub fn count(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.iter().map(|w| w.count_ones() as usize).sum::<usize>())
            .sum()
    }

    /// Set bits in row-major (lexicographic) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.rows
            .iter()
            .enumerate()
            .flat_map(move |(x, row)| {
                row.iter().enumerate().flat_map(move |(wi, &w)| {
                    let mut bits = w;
                    std::iter::from_fn(move || {
                        if bits == 0 {
                            return None;
                        }
                        let b = bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        Some(wi * 64 + b)
                    })
                })
                .map(move |y| (x, y))
                .filter(move |&(_, y)| y < n)
            })
    }
}

impl PartialEq for BitMatrix {
    fn eq(&self, other: &Self) -> bool {
        if self.n != other.n {
            return false;
        }
        self.iter().eq(other.iter())
    }
}

impl Eq for BitMatrix {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_grow() {
        let mut m = BitMatrix::new(2);
        m.set(0, 1);
        m.grow(70);
        assert!(m.get(0, 1));
        m.set(69, 64);
        assert!(m.get(69, 64));
        assert!(!m.get(69, 63));
        assert_eq!(m.count(), 2);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(0, 1), (69, 64)]);
    }
}
