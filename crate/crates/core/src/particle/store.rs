//! Sorted multisets of particle positions with rank access.

/// Capacity at which a chunk of [`Chunked`] is split in two.
const CHUNK_SPLIT: usize = 1024;

/// Particle count from which [`Storage::Auto`] switches to chunked storage.
pub const CHUNKED_THRESHOLD: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Storage {
    Flat,
    Chunked,
    #[default]
    Auto,
}

/// Non-decreasing sequence of positions supporting rank lookup, tie-block
/// lookup and moving one element to the right.
#[derive(Debug, Clone)]
pub enum SortedPositions {
    /// One contiguous sorted array; a move costs an `O(n)` memmove.
    Flat(Vec<f64>),
    /// Sorted chunks with prefix counts; a move costs `O(sqrt n)`.
    Chunked(Chunked),
}

/// Equal when they hold the same elements in the same storage kind,
/// whatever the chunk boundaries.
impl PartialEq for SortedPositions {
    fn eq(&self, other: &Self) -> bool {
        self.is_chunked() == other.is_chunked() && self.len() == other.len() && self.iter().eq(other.iter())
    }
}

impl SortedPositions {
    pub fn is_chunked(&self) -> bool {
        matches!(self, SortedPositions::Chunked(_))
    }

    /// `sorted` must already be non-decreasing.
    pub fn from_sorted(sorted: Vec<f64>, storage: Storage) -> Self {
        let chunked = match storage {
            Storage::Flat => false,
            Storage::Chunked => true,
            Storage::Auto => sorted.len() >= CHUNKED_THRESHOLD,
        };
        if chunked {
            SortedPositions::Chunked(Chunked::from_sorted(sorted))
        } else {
            SortedPositions::Flat(sorted)
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SortedPositions::Flat(v) => v.len(),
            SortedPositions::Chunked(c) => c.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> f64 {
        match self {
            SortedPositions::Flat(v) => v[i],
            SortedPositions::Chunked(c) => c.get(i),
        }
    }

    /// Half-open index range `[lo, hi)` of the elements equal to element `i`.
    pub fn block(&self, i: usize) -> (usize, usize) {
        let x = self.get(i);
        match self {
            SortedPositions::Flat(v) => (v.partition_point(|&y| y < x), v.partition_point(|&y| y <= x)),
            SortedPositions::Chunked(c) => (c.lower_bound(x), c.upper_bound(x)),
        }
    }

    /// Replaces element `i` by `x >= self.get(i)` and restores order. The new
    /// element is placed after any elements equal to it; its index is returned.
    pub fn move_right(&mut self, i: usize, x: f64) -> usize {
        debug_assert!(x >= self.get(i));
        match self {
            SortedPositions::Flat(v) => {
                let target = v.partition_point(|&y| y <= x);
                v[i..target].rotate_left(1);
                v[target - 1] = x;
                target - 1
            }
            SortedPositions::Chunked(c) => {
                c.remove(i);
                c.insert(x)
            }
        }
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            SortedPositions::Flat(v) => Box::new(v.iter().copied()),
            SortedPositions::Chunked(c) => Box::new(c.chunks.iter().flatten().copied()),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            SortedPositions::Flat(v) => v.clone(),
            SortedPositions::Chunked(c) => c.chunks.concat(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chunked {
    chunks: Vec<Vec<f64>>,
    /// `starts[c]` is the global index of the first element of chunk `c`.
    starts: Vec<usize>,
    len: usize,
}

impl Chunked {
    fn from_sorted(sorted: Vec<f64>) -> Self {
        let len = sorted.len();
        let chunks: Vec<Vec<f64>> = sorted.chunks(CHUNK_SPLIT / 2).map(<[f64]>::to_vec).collect();
        let mut c = Chunked {
            chunks,
            starts: Vec::new(),
            len,
        };
        c.reindex();
        c
    }

    fn reindex(&mut self) {
        self.chunks.retain(|c| !c.is_empty());
        self.starts.clear();
        let mut acc = 0;
        for c in &self.chunks {
            self.starts.push(acc);
            acc += c.len();
        }
    }

    fn locate(&self, i: usize) -> (usize, usize) {
        let c = self.starts.partition_point(|&s| s <= i) - 1;
        (c, i - self.starts[c])
    }

    fn get(&self, i: usize) -> f64 {
        let (c, o) = self.locate(i);
        self.chunks[c][o]
    }

    fn bound(&self, pred: impl Fn(f64) -> bool) -> usize {
        // first chunk whose last element fails `pred`
        let c = self
            .chunks
            .partition_point(|ch| pred(*ch.last().expect("chunks are non-empty")));
        if c == self.chunks.len() {
            return self.len;
        }
        self.starts[c] + self.chunks[c].partition_point(|&y| pred(y))
    }

    fn lower_bound(&self, x: f64) -> usize {
        self.bound(|y| y < x)
    }

    fn upper_bound(&self, x: f64) -> usize {
        self.bound(|y| y <= x)
    }

    fn remove(&mut self, i: usize) {
        let (c, o) = self.locate(i);
        self.chunks[c].remove(o);
        self.len -= 1;
        if self.chunks[c].is_empty() {
            self.reindex();
        } else {
            for s in &mut self.starts[c + 1..] {
                *s -= 1;
            }
        }
    }

    fn insert(&mut self, x: f64) -> usize {
        if self.chunks.is_empty() {
            self.chunks.push(vec![x]);
            self.len = 1;
            self.reindex();
            return 0;
        }
        let c = self
            .chunks
            .partition_point(|ch| *ch.last().unwrap() <= x)
            .min(self.chunks.len() - 1);
        let o = self.chunks[c].partition_point(|&y| y <= x);
        self.chunks[c].insert(o, x);
        self.len += 1;
        let global = self.starts[c] + o;
        if self.chunks[c].len() >= CHUNK_SPLIT {
            let tail = self.chunks[c].split_off(CHUNK_SPLIT / 2);
            self.chunks.insert(c + 1, tail);
            self.reindex();
        } else {
            for s in &mut self.starts[c + 1..] {
                *s += 1;
            }
        }
        global
    }
}
