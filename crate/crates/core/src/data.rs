use crate::error::{Error, Result};

/// n×p sample matrix: rows are i.i.d. observations, columns are variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    p: usize,
    /// Row-major values.
    values: Vec<f64>,
    names: Option<Vec<String>>,
}

impl SampleMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * p);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidInput(format!(
                    "row {r} has {} columns, expected {p}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_row_major(n, p, values)
    }

    pub fn from_row_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {n}x{p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                k / p.max(1),
                k % p.max(1)
            )));
        }
        Ok(Self {
            n,
            p,
            values,
            names: None,
        })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("columns have unequal lengths".into()));
        }
        let mut values = Vec::with_capacity(n * p);
        for a in 0..n {
            values.extend(columns.iter().map(|c| c[a]));
        }
        Self::from_row_major(n, p, values)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::InvalidInput(format!(
                "{} column names for {} columns",
                names.len(),
                self.p
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.p + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.p..(row + 1) * self.p]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|a| self.get(a, col)).collect()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Column label: the header name when present, otherwise the 1-based index.
    pub fn label(&self, col: usize) -> String {
        match &self.names {
            Some(names) => names[col].clone(),
            None => (col + 1).to_string(),
        }
    }

    /// Reorders rows; `order[a]` is the source row of new row `a`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for &src in order {
            values.extend_from_slice(self.row(src));
        }
        Self {
            n: self.n,
            p: self.p,
            values,
            names: self.names.clone(),
        }
    }

    /// Selects and reorders columns; `order[c]` is the source column of new
    /// column `c`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.n * order.len());
        for a in 0..self.n {
            values.extend(order.iter().map(|&c| self.get(a, c)));
        }
        Self {
            n: self.n,
            p: order.len(),
            values,
            names: self
                .names
                .as_ref()
                .map(|names| order.iter().map(|&c| names[c].clone()).collect()),
        }
    }
}
