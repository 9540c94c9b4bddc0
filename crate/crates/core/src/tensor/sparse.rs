/// A constant sparse linear map between row spaces.
///
/// Output row `r` is `sum_k weight_k * input[source_k]` over the entries
/// registered for `r`. Rows with no entries are zero. This one operator
/// expresses row gathers, adjacency products, masked sums and averages.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows<T> {
    input_rows: usize,
    offsets: Vec<usize>,
    sources: Vec<usize>,
    weights: Vec<T>,
}

impl<T: Copy> SparseRows<T> {
    pub fn new(input_rows: usize) -> Self {
        SparseRows {
            input_rows,
            offsets: vec![0],
            sources: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Appends an output row built from `(source_row, weight)` pairs.
    ///
    /// Panics if a source row is out of range.
    pub fn push_row<I: IntoIterator<Item = (usize, T)>>(&mut self, entries: I) {
        for (src, w) in entries {
            assert!(
                src < self.input_rows,
                "source row {src} out of range {}",
                self.input_rows
            );
            self.sources.push(src);
            self.weights.push(w);
        }
        self.offsets.push(self.sources.len());
    }

    pub fn push_empty_row(&mut self) {
        self.offsets.push(self.sources.len());
    }

    /// Row gather: output row `i` copies input row `indices[i]`.
    pub fn gather(input_rows: usize, indices: &[usize], one: T) -> Self {
        let mut map = Self::new(input_rows);
        for &i in indices {
            map.push_row([(i, one)]);
        }
        map
    }

    pub fn input_rows(&self) -> usize {
        self.input_rows
    }

    pub fn output_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.sources.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.sources[span.clone()]
            .iter()
            .copied()
            .zip(self.weights[span].iter().copied())
    }
}
