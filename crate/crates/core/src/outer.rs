//! Linear block codes over GF(q): alist parsing, protograph lifting,
//! systematic encoding and syndromes.
//!
//! # alist extension for nonbinary codes
//!
//! A binary alist file (column/row degree lists followed by per-column and
//! per-row index lists, 1-based, zero padded) may be followed by a trailer
//!
//! ```text
//! gf <q>
//! <one line per check row: the GF(q) weight of each listed entry, in row-list order>
//! ```
//!
//! Without the trailer every nonzero entry is 1 and the field is GF(2).

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::{GfError, GfParams, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("alist parse error at token {token}: {msg}")]
    Parse { token: usize, msg: String },
    #[error("alist degree lists are inconsistent: {0}")]
    Inconsistent(String),
    #[error("parity-check matrix has rank {rank}, expected {rows} (row {row} is dependent)")]
    RankDeficient {
        rank: usize,
        rows: usize,
        row: usize,
    },
    #[error("expected length {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("invalid protograph: {0}")]
    Protograph(String),
    #[error("lifting failed after {attempts} attempts: {reason}")]
    Lifting { attempts: usize, reason: String },
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Dense row-major matrix over GF(q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GfMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Symbol>,
}

impl GfMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        GfMatrix {
            rows,
            cols,
            data: vec![Symbol::ZERO; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged matrix");
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, Symbol(v));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Symbol {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Symbol) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Symbol] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> GfMatrix {
        let mut t = GfMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Boolean support pattern.
    pub fn support(&self) -> Vec<Vec<bool>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|s| s.0 != 0).collect())
            .collect()
    }

    pub fn nonzeros(&self) -> usize {
        self.data.iter().filter(|s| s.0 != 0).count()
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, f: &GfParams, v: &[Symbol]) -> Vec<Symbol> {
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(Symbol::ZERO, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
            })
            .collect()
    }

    /// Row vector times matrix: `v * self`.
    pub fn vec_mul(&self, f: &GfParams, v: &[Symbol]) -> Vec<Symbol> {
        let mut out = vec![Symbol::ZERO; self.cols];
        for (r, &coef) in v.iter().enumerate() {
            if coef.0 == 0 {
                continue;
            }
            for (o, &g) in out.iter_mut().zip(self.row(r)) {
                *o = f.add(*o, f.mul(coef, g));
            }
        }
        out
    }

    /// Matrix rank over the given field.
    pub fn rank(&self, f: &GfParams) -> usize {
        let mut m = self.clone();
        reduce_rows(&mut m, f).0.len()
    }
}

/// In-place reduced row echelon form. Returns the pivot columns (one per
/// independent row, in row order) and the index of the first row found to be
/// dependent, if any.
fn reduce_rows(m: &mut GfMatrix, f: &GfParams) -> (Vec<usize>, Option<usize>) {
    let mut pivots = Vec::new();
    let mut order: Vec<usize> = (0..m.rows).collect();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| m.get(i, c).0 != 0) else {
            continue;
        };
        if p != r {
            for j in 0..m.cols {
                let a = m.get(r, j);
                m.set(r, j, m.get(p, j));
                m.set(p, j, a);
            }
            order.swap(r, p);
        }
        let inv = f.inv(m.get(r, c)).expect("pivot nonzero");
        for j in 0..m.cols {
            m.set(r, j, f.mul(inv, m.get(r, j)));
        }
        for i in 0..m.rows {
            let factor = m.get(i, c);
            if i == r || factor.0 == 0 {
                continue;
            }
            for j in 0..m.cols {
                let v = f.sub(m.get(i, j), f.mul(factor, m.get(r, j)));
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    let dependent = if r < m.rows { Some(order[r]) } else { None };
    (pivots, dependent)
}

/// A linear block code given by a full-rank parity-check matrix and the
/// systematic generator derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBlockCode {
    field: GfParams,
    name: String,
    k: usize,
    n: usize,
    gen: GfMatrix,
    pcm: GfMatrix,
    /// Codeword positions carrying the message (systematic part), in message order.
    info_positions: Vec<usize>,
}

impl LinearBlockCode {
    /// Builds the code from `H`; rows must be linearly independent.
    pub fn from_parity_check(
        field: GfParams,
        pcm: GfMatrix,
        name: impl Into<String>,
    ) -> Result<Self, CodeError> {
        let n = pcm.cols();
        let m = pcm.rows();
        let mut red = pcm.clone();
        let (pivots, dependent) = reduce_rows(&mut red, &field);
        if let Some(row) = dependent {
            return Err(CodeError::RankDeficient {
                rank: pivots.len(),
                rows: m,
                row,
            });
        }
        let k = n - m;
        let mut is_pivot = vec![false; n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        // Reduced H = [I | A] up to column order: x_pivot(j) = -sum_f A[j][f] x_f.
        let mut gen = GfMatrix::zeros(k, n);
        for (a, &fc) in info_positions.iter().enumerate() {
            gen.set(a, fc, Symbol::ONE);
            for (j, &pc) in pivots.iter().enumerate() {
                let v = red.get(j, fc);
                // Negation is the identity in characteristic 2.
                gen.set(a, pc, v);
            }
        }
        Ok(LinearBlockCode {
            field,
            name: name.into(),
            k,
            n,
            gen,
            pcm,
            info_positions,
        })
    }

    pub fn field(&self) -> &GfParams {
        &self.field
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generator(&self) -> &GfMatrix {
        &self.gen
    }

    pub fn parity_check(&self) -> &GfMatrix {
        &self.pcm
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    /// `msg * G`.
    pub fn encode(&self, msg: &[Symbol]) -> Result<Vec<Symbol>, CodeError> {
        if msg.len() != self.k {
            return Err(CodeError::Length {
                expected: self.k,
                got: msg.len(),
            });
        }
        Ok(self.gen.vec_mul(&self.field, msg))
    }

    /// `H * word`.
    pub fn syndrome(&self, word: &[Symbol]) -> Result<Vec<Symbol>, CodeError> {
        if word.len() != self.n {
            return Err(CodeError::Length {
                expected: self.n,
                got: word.len(),
            });
        }
        Ok(self.pcm.mul_vec(&self.field, word))
    }

    pub fn is_codeword(&self, word: &[Symbol]) -> bool {
        self.syndrome(word)
            .map(|s| s.iter().all(|x| x.0 == 0))
            .unwrap_or(false)
    }

    /// Recovers the message from a codeword.
    pub fn extract_message(&self, word: &[Symbol]) -> Vec<Symbol> {
        self.info_positions.iter().map(|&p| word[p]).collect()
    }

    pub fn random_message<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Symbol> {
        let q = self.field.order();
        (0..self.k)
            .map(|_| Symbol(rng.gen_range(0..q) as u8))
            .collect()
    }

    /// Tanner graph girth (shortest cycle length), `None` if cycle-free.
    pub fn girth(&self) -> Option<usize> {
        tanner_girth(&self.pcm)
    }

    /// Number of column pairs sharing at least two checks (length-4 cycles).
    pub fn four_cycles(&self) -> usize {
        count_four_cycles(&self.pcm)
    }

    /// The (7,4) Hamming code with `H = [1110100; 1101010; 1011001]`.
    pub fn hamming74() -> Self {
        let h = GfMatrix::from_rows(&[
            vec![1, 1, 1, 0, 1, 0, 0],
            vec![1, 1, 0, 1, 0, 1, 0],
            vec![1, 0, 1, 1, 0, 0, 1],
        ]);
        Self::from_parity_check(GfParams::binary(), h, "hamming-7-4").expect("full rank")
    }

    /// Serializes `H` as alist text (with the weight trailer when q > 2).
    pub fn to_alist(&self) -> String {
        let h = &self.pcm;
        let cols: Vec<Vec<usize>> = (0..h.cols())
            .map(|c| (0..h.rows()).filter(|&r| h.get(r, c).0 != 0).collect())
            .collect();
        let rows: Vec<Vec<usize>> = (0..h.rows())
            .map(|r| (0..h.cols()).filter(|&c| h.get(r, c).0 != 0).collect())
            .collect();
        let max_c = cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_r = rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", h.cols(), h.rows());
        let _ = writeln!(s, "{max_c} {max_r}");
        let join = |v: Vec<String>| v.join(" ");
        let _ = writeln!(
            s,
            "{}",
            join(cols.iter().map(|c| c.len().to_string()).collect())
        );
        let _ = writeln!(
            s,
            "{}",
            join(rows.iter().map(|r| r.len().to_string()).collect())
        );
        for c in &cols {
            let mut v: Vec<String> = c.iter().map(|r| (r + 1).to_string()).collect();
            v.resize(max_c, "0".into());
            let _ = writeln!(s, "{}", join(v));
        }
        for r in &rows {
            let mut v: Vec<String> = r.iter().map(|c| (c + 1).to_string()).collect();
            v.resize(max_r, "0".into());
            let _ = writeln!(s, "{}", join(v));
        }
        if self.field.order() > 2 {
            let _ = writeln!(s, "gf {}", self.field.order());
            for (ri, r) in rows.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{}",
                    join(r.iter().map(|&c| h.get(ri, c).0.to_string()).collect())
                );
            }
        }
        s
    }
}

struct Tokens<'a> {
    iter: std::iter::Peekable<std::str::SplitWhitespace<'a>>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens {
            iter: text.split_whitespace().peekable(),
            pos: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> CodeError {
        CodeError::Parse {
            token: self.pos,
            msg: msg.into(),
        }
    }

    fn next_raw(&mut self) -> Option<&'a str> {
        let t = self.iter.next();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn usize(&mut self, what: &str) -> Result<usize, CodeError> {
        let t = self
            .next_raw()
            .ok_or_else(|| self.err(format!("unexpected end of input reading {what}")))?;
        t.parse()
            .map_err(|_| self.err(format!("expected integer for {what}, found {t:?}")))
    }
}

/// Parses alist text (see the module docs for the nonbinary trailer).
pub fn parse_alist(text: &str) -> Result<LinearBlockCode, CodeError> {
    let mut tk = Tokens::new(text);
    let n = tk.usize("N")?;
    let m = tk.usize("M")?;
    if n == 0 || m == 0 || m >= n {
        return Err(tk.err(format!("header N={n} M={m} is not a valid code size")));
    }
    let max_c = tk.usize("max column degree")?;
    let max_r = tk.usize("max row degree")?;
    let col_deg: Vec<usize> = (0..n)
        .map(|_| tk.usize("column degree"))
        .collect::<Result<_, _>>()?;
    let row_deg: Vec<usize> = (0..m)
        .map(|_| tk.usize("row degree"))
        .collect::<Result<_, _>>()?;
    if col_deg.iter().any(|&d| d > max_c) || row_deg.iter().any(|&d| d > max_r) {
        return Err(CodeError::Inconsistent(
            "a degree exceeds the declared maximum".into(),
        ));
    }
    if col_deg.iter().sum::<usize>() != row_deg.iter().sum::<usize>() {
        return Err(CodeError::Inconsistent(
            "column and row degree sums differ".into(),
        ));
    }
    let read_lists =
        |tk: &mut Tokens, count: usize, width: usize, degs: &[usize], bound: usize, what: &str| {
            let mut lists = Vec::with_capacity(count);
            for (i, &deg) in degs.iter().enumerate().take(count) {
                let mut v = Vec::with_capacity(deg);
                for slot in 0..width {
                    let idx = tk.usize(what)?;
                    if slot < deg {
                        if idx == 0 || idx > bound {
                            return Err(tk.err(format!(
                                "{what} list {} has index {idx} out of 1..={bound}",
                                i + 1
                            )));
                        }
                        v.push(idx - 1);
                    } else if idx != 0 {
                        return Err(CodeError::Inconsistent(format!(
                            "{what} list {} has more entries than its degree {deg}",
                            i + 1
                        )));
                    }
                }
                lists.push(v);
            }
            Ok(lists)
        };
    // Some alist writers omit the zero padding; accept either by peeking at widths.
    let cols = read_lists(&mut tk, n, max_c, &col_deg, m, "column")?;
    let rows = read_lists(&mut tk, m, max_r, &row_deg, n, "row")?;

    let mut support = vec![vec![false; n]; m];
    for (c, list) in cols.iter().enumerate() {
        for &r in list {
            if support[r][c] {
                return Err(CodeError::Inconsistent(format!(
                    "duplicate entry ({}, {})",
                    r + 1,
                    c + 1
                )));
            }
            support[r][c] = true;
        }
    }
    for (r, list) in rows.iter().enumerate() {
        if list.len() != support[r].iter().filter(|&&b| b).count()
            || list.iter().any(|&c| !support[r][c])
        {
            return Err(CodeError::Inconsistent(format!(
                "row {} disagrees with the column lists",
                r + 1
            )));
        }
    }

    let (field, weights) = match tk.next_raw() {
        None => (GfParams::binary(), None),
        Some("gf") => {
            let q = tk.usize("field order")?;
            let field = GfParams::with_order(q)?;
            let mut w = Vec::with_capacity(m);
            for (r, list) in rows.iter().enumerate() {
                let mut row_w = Vec::with_capacity(list.len());
                for _ in list {
                    let v = tk.usize("edge weight")?;
                    if v == 0 || v >= q {
                        return Err(tk.err(format!(
                            "row {} weight {v} is not a nonzero element of GF({q})",
                            r + 1
                        )));
                    }
                    row_w.push(v as u8);
                }
                w.push(row_w);
            }
            (field, Some(w))
        }
        Some(t) => return Err(tk.err(format!("unexpected trailing token {t:?}"))),
    };
    if let Some(t) = tk.next_raw() {
        return Err(tk.err(format!("unexpected trailing token {t:?}")));
    }

    let mut h = GfMatrix::zeros(m, n);
    for (r, list) in rows.iter().enumerate() {
        for (e, &c) in list.iter().enumerate() {
            let w = weights.as_ref().map_or(1, |w| w[r][e]);
            h.set(r, c, Symbol(w));
        }
    }
    LinearBlockCode::from_parity_check(field, h, format!("alist-{n}-{}", n - m))
}

/// Base graph of a protograph code: entry `(i, j)` is the number of edges
/// between check `i` and variable `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protograph {
    pub matrix: Vec<Vec<u32>>,
}

impl Protograph {
    pub fn new(matrix: Vec<Vec<u32>>) -> Result<Self, CodeError> {
        let p = Protograph { matrix };
        p.validate()?;
        Ok(p)
    }

    /// Base matrix of the quaternary (64, 32) construction at lift 16.
    pub fn quaternary_64_32() -> Self {
        Protograph {
            matrix: vec![vec![1, 2, 1, 1], vec![1, 1, 2, 1]],
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), CodeError> {
        let cols = self.cols();
        if self.rows() == 0 || cols == 0 {
            return Err(CodeError::Protograph("empty matrix".into()));
        }
        if self.matrix.iter().any(|r| r.len() != cols) {
            return Err(CodeError::Protograph("ragged rows".into()));
        }
        if let Some(i) = self.matrix.iter().position(|r| r.iter().all(|&v| v == 0)) {
            return Err(CodeError::Protograph(format!("check row {i} has no edges")));
        }
        if let Some(j) = (0..cols).find(|&j| self.matrix.iter().all(|r| r[j] == 0)) {
            return Err(CodeError::Protograph(format!(
                "variable column {j} has no edges"
            )));
        }
        Ok(())
    }

    pub fn column_sums(&self) -> Vec<u32> {
        (0..self.cols())
            .map(|j| self.matrix.iter().map(|r| r[j]).sum())
            .collect()
    }
}

const LIFT_ATTEMPTS: usize = 100;

/// Lifts `proto` by `lift` with circulant permutations of random shift.
///
/// Each edge of multiplicity `t` becomes `t` circulant blocks with distinct
/// shifts. Attempts that collide (equal shifts within one entry) or yield a
/// rank-deficient `H` are redrawn; among valid attempts the first one free of
/// length-4 cycles is kept, otherwise the one with the fewest. For `q > 2`
/// every nonzero entry receives a uniformly random nonzero weight.
pub fn lift_protograph<R: Rng + ?Sized>(
    proto: &Protograph,
    lift: usize,
    field: &GfParams,
    rng: &mut R,
) -> Result<LinearBlockCode, CodeError> {
    proto.validate()?;
    if lift == 0 {
        return Err(CodeError::Protograph("lift must be at least 1".into()));
    }
    let (mp, np) = (proto.rows(), proto.cols());
    let q = field.order();
    let mut best: Option<(usize, LinearBlockCode)> = None;
    let mut last_reason = String::new();
    for _ in 0..LIFT_ATTEMPTS {
        let mut h = GfMatrix::zeros(mp * lift, np * lift);
        let mut collided = false;
        'blocks: for i in 0..mp {
            for j in 0..np {
                let t = proto.matrix[i][j] as usize;
                let mut used = Vec::with_capacity(t);
                for _ in 0..t {
                    let shift = rng.gen_range(0..lift);
                    if used.contains(&shift) {
                        collided = true;
                        break 'blocks;
                    }
                    used.push(shift);
                    for r in 0..lift {
                        let c = (r + shift) % lift;
                        let w = if q > 2 { rng.gen_range(1..q) as u8 } else { 1 };
                        h.set(i * lift + r, j * lift + c, Symbol(w));
                    }
                }
            }
        }
        if collided {
            last_reason = "parallel edges collided onto the same position".into();
            continue;
        }
        let name = format!("protograph-{}-{}", np * lift, (np - mp) * lift);
        match LinearBlockCode::from_parity_check(field.clone(), h, name) {
            Ok(code) => {
                let cycles = code.four_cycles();
                if cycles == 0 {
                    return Ok(code);
                }
                if best.as_ref().is_none_or(|(c, _)| cycles < *c) {
                    best = Some((cycles, code));
                }
            }
            Err(CodeError::RankDeficient { rank, rows, .. }) => {
                last_reason = format!("lifted H has rank {rank} < {rows}");
            }
            Err(e) => return Err(e),
        }
    }
    best.map(|(_, c)| c).ok_or(CodeError::Lifting {
        attempts: LIFT_ATTEMPTS,
        reason: last_reason,
    })
}

fn count_four_cycles(h: &GfMatrix) -> usize {
    let cols: Vec<Vec<usize>> = (0..h.cols())
        .map(|c| (0..h.rows()).filter(|&r| h.get(r, c).0 != 0).collect())
        .collect();
    let mut count = 0;
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            let shared = cols[a].iter().filter(|r| cols[b].contains(r)).count();
            if shared >= 2 {
                count += shared * (shared - 1) / 2;
            }
        }
    }
    count
}

/// Shortest cycle in the bipartite Tanner graph via BFS from every node.
fn tanner_girth(h: &GfMatrix) -> Option<usize> {
    let (m, n) = (h.rows(), h.cols());
    // Nodes 0..n are variables, n..n+m checks.
    let mut adj = vec![Vec::new(); n + m];
    for r in 0..m {
        for c in 0..n {
            if h.get(r, c).0 != 0 {
                adj[c].push(n + r);
                adj[n + r].push(c);
            }
        }
    }
    let mut best: Option<usize> = None;
    for start in 0..n + m {
        let mut dist = vec![usize::MAX; n + m];
        let mut parent = vec![usize::MAX; n + m];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                } else if parent[u] != v {
                    let len = dist[u] + dist[v] + 1;
                    best = Some(best.map_or(len, |b| b.min(len)));
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::trial_rng;

    const HAMMING_ALIST: &str = "7 3\n3 4\n3 2 2 2 1 1 1\n4 4 4\n\
        1 2 3\n1 2 0\n1 3 0\n2 3 0\n1 0 0\n2 0 0\n3 0 0\n\
        1 2 3 5\n1 2 4 6\n1 3 4 7\n";

    #[test]
    fn hamming_alist_parses() {
        let code = parse_alist(HAMMING_ALIST).unwrap();
        assert_eq!((code.k(), code.n()), (4, 7));
        assert_eq!(
            code.parity_check(),
            LinearBlockCode::hamming74().parity_check()
        );
    }

    #[test]
    fn mackay_96_code_parses() {
        let code = parse_alist(include_str!("../codes/mackay_96_33_964.alist")).unwrap();
        assert_eq!((code.k(), code.n()), (48, 96));
        assert_eq!(code.four_cycles(), 0);
    }

    #[test]
    fn zero_row_is_a_rank_error() {
        // Row 3 lists no entries.
        let text = "4 3\n2 2\n1 1 1 1\n2 2 0\n1 0\n1 0\n2 0\n2 0\n1 2\n3 4\n0 0\n";
        assert!(matches!(
            parse_alist(text),
            Err(CodeError::RankDeficient { .. })
        ));
    }

    #[test]
    fn malformed_alist_errors_are_distinct() {
        assert!(matches!(parse_alist("7"), Err(CodeError::Parse { .. })));
        assert!(matches!(parse_alist("7 x\n"), Err(CodeError::Parse { .. })));
        // Column degree sum 4 vs row degree sum 5.
        let bad = "3 2\n2 3\n2 1 1\n3 2\n1 2\n1 0\n2 0\n1 2 3\n1 0 0\n";
        assert!(matches!(parse_alist(bad), Err(CodeError::Inconsistent(_))));
        // Row lists disagree with column lists.
        let bad = "3 2\n2 2\n2 1 1\n2 2\n1 2\n1 0\n2 0\n1 3\n1 2\n";
        assert!(matches!(parse_alist(bad), Err(CodeError::Inconsistent(_))));
    }

    #[test]
    fn nonbinary_alist_round_trip() {
        let f = GfParams::quaternary();
        let code =
            lift_protograph(&Protograph::quaternary_64_32(), 4, &f, &mut trial_rng(1, 0)).unwrap();
        let back = parse_alist(&code.to_alist()).unwrap();
        assert_eq!(back.parity_check(), code.parity_check());
        assert_eq!(back.field().order(), 4);
    }

    #[test]
    fn encode_examples() {
        let code = LinearBlockCode::hamming74();
        let zero = code.encode(&[Symbol::ZERO; 4]).unwrap();
        assert!(zero.iter().all(|s| s.0 == 0));
        let unit = code
            .encode(&[Symbol(1), Symbol(0), Symbol(0), Symbol(0)])
            .unwrap();
        assert_eq!(unit.as_slice(), code.generator().row(0));
        assert!(code.is_codeword(&unit));
        assert!(matches!(
            code.encode(&[Symbol::ZERO; 3]),
            Err(CodeError::Length { .. })
        ));
    }

    #[test]
    fn generator_is_orthogonal_to_parity_check() {
        let f = GfParams::quaternary();
        let code = lift_protograph(
            &Protograph::quaternary_64_32(),
            16,
            &f,
            &mut trial_rng(2, 0),
        )
        .unwrap();
        assert_eq!(code.generator().rank(&f), code.k());
        for r in 0..code.k() {
            assert!(code.is_codeword(code.generator().row(r)));
        }
    }

    #[test]
    fn syndrome_of_unit_error_is_column_of_h() {
        let code = LinearBlockCode::hamming74();
        let cw = code
            .encode(&[Symbol(1), Symbol(1), Symbol(0), Symbol(1)])
            .unwrap();
        for i in 0..7 {
            let mut w = cw.clone();
            w[i] = Symbol(w[i].0 ^ 1);
            let s = code.syndrome(&w).unwrap();
            let col: Vec<Symbol> = (0..3).map(|r| code.parity_check().get(r, i)).collect();
            assert_eq!(s, col);
        }
        assert!(code.syndrome(&cw[..6]).is_err());
    }

    #[test]
    fn quaternary_syndrome_matches_row_by_row_dot_product() {
        let f = GfParams::quaternary();
        let code = lift_protograph(
            &Protograph::quaternary_64_32(),
            16,
            &f,
            &mut trial_rng(3, 0),
        )
        .unwrap();
        let mut rng = trial_rng(4, 0);
        for _ in 0..20 {
            let w: Vec<Symbol> = (0..64).map(|_| Symbol(rng.gen_range(0..4))).collect();
            let s = code.syndrome(&w).unwrap();
            let h = code.parity_check();
            for r in 0..h.rows() {
                let mut acc = 0u8;
                for c in 0..64 {
                    acc ^= f.mul(h.get(r, c), w[c]).0;
                }
                assert_eq!(s[r].0, acc);
            }
        }
    }

    #[test]
    fn lifted_quaternary_protograph_shape_and_degrees() {
        let f = GfParams::quaternary();
        let proto = Protograph::quaternary_64_32();
        let sums = proto.column_sums();
        for seed in 0..10 {
            let code = lift_protograph(&proto, 16, &f, &mut trial_rng(100 + seed, 0)).unwrap();
            assert_eq!((code.n(), code.k()), (64, 32));
            let h = code.parity_check();
            for c in 0..64 {
                let deg = (0..32).filter(|&r| h.get(r, c).0 != 0).count() as u32;
                assert_eq!(deg, sums[c / 16]);
            }
            for r in 0..32 {
                let deg = (0..64).filter(|&c| h.get(r, c).0 != 0).count() as u32;
                assert_eq!(deg, proto.matrix[r / 16].iter().sum::<u32>());
            }
        }
    }

    #[test]
    fn unit_lift_expands_each_edge_once() {
        let proto = Protograph::new(vec![vec![1, 1, 0, 1], vec![0, 1, 1, 1]]).unwrap();
        let code = lift_protograph(&proto, 1, &GfParams::binary(), &mut trial_rng(5, 0)).unwrap();
        let expect: Vec<Vec<bool>> = proto
            .matrix
            .iter()
            .map(|r| r.iter().map(|&v| v == 1).collect())
            .collect();
        assert_eq!(code.parity_check().support(), expect);
    }

    #[test]
    fn multi_edges_cannot_fit_a_unit_lift() {
        let r = lift_protograph(
            &Protograph::quaternary_64_32(),
            1,
            &GfParams::quaternary(),
            &mut trial_rng(6, 0),
        );
        assert!(matches!(r, Err(CodeError::Lifting { .. })));
    }

    #[test]
    fn protograph_validation() {
        assert!(Protograph::new(vec![vec![0, 0], vec![1, 1]]).is_err());
        assert!(Protograph::new(vec![vec![1, 0], vec![1, 0]]).is_err());
        assert!(Protograph::new(vec![vec![1, 1], vec![1]]).is_err());
    }

    #[test]
    fn girth_of_known_graphs() {
        assert_eq!(LinearBlockCode::hamming74().girth(), Some(4));
        let code = parse_alist(include_str!("../codes/mackay_96_33_964.alist")).unwrap();
        assert!(code.girth().unwrap() >= 6);
        // A single check over three variables has no cycle.
        let tree = GfMatrix::from_rows(&[vec![1, 1, 1]]);
        assert_eq!(tanner_girth(&tree), None);
    }
}
