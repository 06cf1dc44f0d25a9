use serde::{Deserialize, Serialize};

/// Dense row-major parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(skip)]
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: &str, rows: usize, cols: usize) -> Self {
        Tensor {
            name: name.to_string(),
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(name: &str, rows: usize, cols: usize, value: f64) -> Self {
        Tensor {
            data: vec![value; rows * cols],
            ..Tensor::zeros(name, rows, cols)
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Receives per-row gradient contributions. `row` returns a zeroed or
/// accumulating slice of the tensor's row width; callers add into it.
pub trait GradSink {
    fn row(&mut self, tensor: usize, row: usize) -> &mut [f64];
}

/// Full-size gradient buffers, one per tensor, with touched-row tracking.
#[derive(Debug, Clone)]
pub struct DenseGrad {
    pub grads: Vec<Tensor>,
    touched: Vec<Vec<bool>>,
    touched_rows: Vec<Vec<usize>>,
}

impl DenseGrad {
    pub fn like(tensors: &[Tensor]) -> Self {
        DenseGrad {
            grads: tensors
                .iter()
                .map(|t| Tensor::zeros(&t.name, t.rows, t.cols))
                .collect(),
            touched: tensors.iter().map(|t| vec![false; t.rows]).collect(),
            touched_rows: tensors.iter().map(|_| Vec::new()).collect(),
        }
    }

    /// Rows that received any contribution since the last [`clear`](Self::clear),
    /// in first-touch order.
    pub fn touched_rows(&self, tensor: usize) -> &[usize] {
        &self.touched_rows[tensor]
    }

    pub fn clear(&mut self) {
        for (t, g) in self.grads.iter_mut().enumerate() {
            for &r in &self.touched_rows[t] {
                g.row_mut(r).iter_mut().for_each(|v| *v = 0.0);
                self.touched[t][r] = false;
            }
            self.touched_rows[t].clear();
        }
    }

    pub fn all_finite(&self) -> bool {
        self.grads.iter().enumerate().all(|(t, g)| {
            self.touched_rows[t]
                .iter()
                .all(|&r| g.row(r).iter().all(|v| v.is_finite()))
        })
    }

    /// Adds every entry of a [`GradLog`], in log order.
    pub fn absorb(&mut self, log: &GradLog) {
        for e in &log.entries {
            let src = &log.data[e.offset..e.offset + self.grads[e.tensor].cols];
            let dst = self.row(e.tensor, e.row);
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
}

impl GradSink for DenseGrad {
    fn row(&mut self, tensor: usize, row: usize) -> &mut [f64] {
        if !self.touched[tensor][row] {
            self.touched[tensor][row] = true;
            self.touched_rows[tensor].push(row);
        }
        self.grads[tensor].row_mut(row)
    }
}

#[derive(Debug, Clone, Copy)]
struct LogEntry {
    tensor: usize,
    row: usize,
    offset: usize,
}

/// Append-only gradient record. Each `row` call opens a fresh zeroed segment,
/// so a worker can fill it without knowing which rows other workers touch.
/// Merging logs in a fixed order makes accumulation independent of threading.
#[derive(Debug, Clone, Default)]
pub struct GradLog {
    widths: Vec<usize>,
    entries: Vec<LogEntry>,
    data: Vec<f64>,
}

impl GradLog {
    pub fn new(tensors: &[Tensor]) -> Self {
        GradLog {
            widths: tensors.iter().map(|t| t.cols).collect(),
            entries: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.data.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl GradSink for GradLog {
    fn row(&mut self, tensor: usize, row: usize) -> &mut [f64] {
        let w = self.widths[tensor];
        let offset = self.data.len();
        self.data.resize(offset + w, 0.0);
        self.entries.push(LogEntry {
            tensor,
            row,
            offset,
        });
        &mut self.data[offset..offset + w]
    }
}
