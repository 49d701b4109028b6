use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Sparse binary parity-check matrix with `m` rows (checks) and `n`
/// columns (bits), stored as row and column adjacency lists.
///
/// List order is preserved exactly as constructed or read, so an alist file
/// written by [`ParityCheckMatrix::to_alist`] reads back to an identical
/// matrix and writes back to identical text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n: usize,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
}

impl ParityCheckMatrix {
    /// Builds the matrix from its row lists; column lists follow row order.
    pub fn from_rows(n: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &j in row {
                let col = cols
                    .get_mut(j as usize)
                    .ok_or_else(|| Error::Construction(format!("row {i} references column {j} of {n}")))?;
                col.push(i as u32);
            }
        }
        let h = Self { n, rows, cols };
        h.check_simple()?;
        Ok(h)
    }

    fn from_lists(n: usize, rows: Vec<Vec<u32>>, cols: Vec<Vec<u32>>) -> Result<Self> {
        let h = Self { n, rows, cols };
        h.check_simple()?;
        let mut from_rows: Vec<(u32, u32)> = h
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&j| (i as u32, j)))
            .collect();
        let mut from_cols: Vec<(u32, u32)> = h
            .cols
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().map(move |&i| (i, j as u32)))
            .collect();
        from_rows.sort_unstable();
        from_cols.sort_unstable();
        if from_rows != from_cols {
            return Err(Error::Construction("row and column lists describe different matrices".into()));
        }
        Ok(h)
    }

    fn check_simple(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let mut r = row.clone();
            r.sort_unstable();
            if r.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Construction(format!("row {i} repeats an edge")));
            }
            if r.last().is_some_and(|&j| j as usize >= self.n) {
                return Err(Error::Construction(format!("row {i} has a column index out of range")));
            }
        }
        for (j, col) in self.cols.iter().enumerate() {
            if col.iter().any(|&i| i as usize >= self.rows.len()) {
                return Err(Error::Construction(format!("column {j} has a row index out of range")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn col(&self, j: usize) -> &[u32] {
        &self.cols[j]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<u32>] {
        &self.cols
    }

    pub fn edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `1 − m/n`; the true rate is higher when `H` is rank deficient.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.m() as f64 / self.n as f64
    }

    /// Column count per degree.
    pub fn column_degrees(&self) -> BTreeMap<usize, usize> {
        histogram(&self.cols)
    }

    /// Row count per degree.
    pub fn row_degrees(&self) -> BTreeMap<usize, usize> {
        histogram(&self.rows)
    }

    /// True if `bits` (0/1 per column) satisfies every check.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &j| acc ^ (bits[j as usize] & 1)) == 0)
    }

    /// Number of length-4 cycles, i.e. column pairs sharing two or more rows,
    /// counted once per pair of shared rows.
    pub fn four_cycles(&self) -> usize {
        let mut count = 0;
        // overlap counts of each row with later rows
        let mut overlap = vec![0u32; self.rows.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let mut touched = Vec::new();
            for &j in row {
                for &k in &self.cols[j as usize] {
                    if (k as usize) > i {
                        if overlap[k as usize] == 0 {
                            touched.push(k as usize);
                        }
                        overlap[k as usize] += 1;
                    }
                }
            }
            for k in touched {
                let c = overlap[k] as usize;
                count += c * (c - 1) / 2;
                overlap[k] = 0;
            }
        }
        count
    }

    /// The alist text: dimensions, maximum degrees, degree lists, then the
    /// 1-based column lists and row lists, zero-padded to the maximum degree.
    pub fn to_alist(&self) -> String {
        let max_col = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::new();
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "{} {}", self.n, self.m());
        let _ = writeln!(out, "{max_col} {max_row}");
        let _ = writeln!(out, "{}", join(&mut self.cols.iter().map(Vec::len)));
        let _ = writeln!(out, "{}", join(&mut self.rows.iter().map(Vec::len)));
        for (lists, width) in [(&self.cols, max_col), (&self.rows, max_row)] {
            for l in lists {
                let mut it = l.iter().map(|&x| x as usize + 1).chain(std::iter::repeat(0)).take(width);
                let _ = writeln!(out, "{}", join(&mut it));
            }
        }
        out
    }

    /// Parses alist text. Zero padding is optional.
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| -> Result<(usize, Vec<usize>)> {
            let (no, line) = lines.next().ok_or_else(|| Error::Alist {
                line: 0,
                msg: format!("missing {what}"),
            })?;
            let values = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|e| Error::Alist {
                        line: no + 1,
                        msg: format!("{what}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((no + 1, values))
        };
        let (no, dims) = next("dimensions")?;
        let [n, m] = dims[..] else {
            return Err(Error::Alist {
                line: no,
                msg: "expected `N M`".into(),
            });
        };
        let (no, maxima) = next("maximum degrees")?;
        if maxima.len() != 2 {
            return Err(Error::Alist {
                line: no,
                msg: "expected two maximum degrees".into(),
            });
        }
        let (no, col_deg) = next("column degrees")?;
        if col_deg.len() != n {
            return Err(Error::Alist {
                line: no,
                msg: format!("{} column degrees for N = {n}", col_deg.len()),
            });
        }
        let (no, row_deg) = next("row degrees")?;
        if row_deg.len() != m {
            return Err(Error::Alist {
                line: no,
                msg: format!("{} row degrees for M = {m}", row_deg.len()),
            });
        }
        let mut read_lists = |degrees: &[usize], bound: usize, what: &str| -> Result<Vec<Vec<u32>>> {
            degrees
                .iter()
                .map(|&d| {
                    let (no, v) = next(what)?;
                    let entries: Vec<usize> = v.iter().copied().filter(|&x| x != 0).collect();
                    if entries.len() != d {
                        return Err(Error::Alist {
                            line: no,
                            msg: format!("{what} has {} entries, degree says {d}", entries.len()),
                        });
                    }
                    if entries.iter().any(|&x| x > bound) {
                        return Err(Error::Alist {
                            line: no,
                            msg: format!("{what} index above {bound}"),
                        });
                    }
                    Ok(entries.iter().map(|&x| (x - 1) as u32).collect())
                })
                .collect()
        };
        let cols = read_lists(&col_deg, m, "column list")?;
        let rows = read_lists(&row_deg, n, "row list")?;
        Self::from_lists(n, rows, cols).map_err(|e| Error::Alist {
            line: 0,
            msg: e.to_string(),
        })
    }

    pub fn read_alist(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_alist(&text)
    }

    pub fn write_alist(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_alist()).map_err(|e| Error::io(path, e))
    }
}

fn histogram(lists: &[Vec<u32>]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for l in lists {
        *h.entry(l.len()).or_insert(0) += 1;
    }
    h
}
