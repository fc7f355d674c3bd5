//! Negacyclic number-theoretic transform.
//!
//! Forward uses Cooley-Tukey butterflies `(x + w*y, x - w*y)` on a natural
//! order input and leaves the result bit-reversed; a final permutation makes
//! the output natural order, so slot `j` holds `a(psi^(2j+1))`. Inverse
//! permutes back and runs Gentleman-Sande butterflies `(x + y, w*(x - y))`
//! with `N^-1` folded into the last stage.
//!
//! The two-phase variant splits the `log2 N` stages at `n1`: the strided
//! phase runs the first `log2 n1` stages over `N/n1` interleaved columns of
//! length `n1` and touches only `n1 - 1` twiddles; the block phase runs the
//! remaining stages inside `n1` contiguous blocks and touches the other
//! `N - n1`. The block phase can regenerate its twiddles from an
//! `O(sqrt N)` seed set instead of reading the full table.

use std::fmt::Write as _;

use crate::arith::Modulus;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::poly::{self, Domain, Polynomial};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Which half of the two-phase decomposition a twiddle access belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Strided columns of length `n1`, twiddle positions `[1, n1)`.
    Strided,
    /// Contiguous blocks of length `N/n1`, twiddle positions `[n1, N)`.
    Block,
}

/// Where the block phase gets its twiddles from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwoPhaseConfig {
    pub strided_on_the_fly: bool,
    pub block_on_the_fly: bool,
}

impl Default for TwoPhaseConfig {
    fn default() -> Self {
        TwoPhaseConfig {
            strided_on_the_fly: false,
            block_on_the_fly: true,
        }
    }
}

/// Instrumentation hook for butterfly and twiddle accounting.
pub trait Tally {
    fn butterflies(&mut self, _count: u64) {}
    fn table_load(&mut self, _phase: Phase) {}
    fn generated(&mut self, _phase: Phase) {}
}

impl Tally for () {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NttStats {
    pub butterflies: u64,
    pub strided_table_loads: u64,
    pub block_table_loads: u64,
    pub strided_generated: u64,
    pub block_generated: u64,
    /// Seed-set reads made while generating twiddles (two per twiddle).
    pub seed_loads: u64,
}

impl Tally for NttStats {
    fn butterflies(&mut self, count: u64) {
        self.butterflies += count;
    }

    fn table_load(&mut self, phase: Phase) {
        match phase {
            Phase::Strided => self.strided_table_loads += 1,
            Phase::Block => self.block_table_loads += 1,
        }
    }

    fn generated(&mut self, phase: Phase) {
        match phase {
            Phase::Strided => self.strided_generated += 1,
            Phase::Block => self.block_generated += 1,
        }
        self.seed_loads += 2;
    }
}

/// Seed powers from which every table entry is one modular product away.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwiddleSeeds {
    low_bits: u32,
    /// root^lo for lo < 2^low_bits
    low: Vec<u32>,
    /// root^(hi << low_bits)
    high: Vec<u32>,
}

impl TwiddleSeeds {
    fn new(m: &Modulus, root: u32, log_n: u32) -> Self {
        let low_bits = log_n / 2;
        let low = powers(m, root, 1usize << low_bits);
        let high = powers(m, m.pow(root, 1u64 << low_bits), 1usize << (log_n - low_bits));
        TwiddleSeeds { low_bits, low, high }
    }

    pub fn len(&self) -> usize {
        self.low.len() + self.high.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn power(&self, m: &Modulus, e: usize) -> u32 {
        let lo = e & ((1 << self.low_bits) - 1);
        let hi = e >> self.low_bits;
        m.mul(self.low[lo], self.high[hi])
    }
}

fn powers(m: &Modulus, base: u32, count: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(count);
    let mut cur = 1 % m.value();
    for _ in 0..count {
        out.push(cur);
        cur = m.mul(cur, base);
    }
    out
}

#[inline]
fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

fn bit_reverse_permute(a: &mut [u32]) {
    let bits = a.len().trailing_zeros();
    for i in 0..a.len() {
        let j = bit_reverse(i, bits);
        if i < j {
            a.swap(i, j);
        }
    }
}

/// Per-modulus twiddles in butterfly-schedule order: entry `p` of the forward
/// table is `psi^bitrev(p)`, of the inverse table `psi^-bitrev(p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwiddleTable {
    modulus: Modulus,
    n: usize,
    log_n: u32,
    n1: usize,
    forward: Vec<u32>,
    inverse: Vec<u32>,
    n_inv: u32,
    forward_seeds: TwiddleSeeds,
    inverse_seeds: TwiddleSeeds,
}

impl TwiddleTable {
    /// Table with the default split `n1 = 2^ceil(log2(N)/2)`.
    pub fn new(modulus: Modulus) -> Result<Self> {
        let n = modulus.degree();
        if n == 0 {
            return Err(Error::InvalidArgument(format!(
                "modulus {} carries no root of unity",
                modulus.value()
            )));
        }
        let log_n = n.trailing_zeros();
        Self::with_split(modulus, 1 << log_n.div_ceil(2))
    }

    pub fn with_split(modulus: Modulus, n1: usize) -> Result<Self> {
        let n = modulus.degree();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "modulus {} carries no usable root of unity",
                modulus.value()
            )));
        }
        if !n1.is_power_of_two() || n1 > n {
            return Err(Error::InvalidArgument(format!(
                "split point {n1} must be a power of two <= {n}"
            )));
        }
        let log_n = n.trailing_zeros();
        let fwd_pow = powers(&modulus, modulus.psi(), n);
        let inv_pow = powers(&modulus, modulus.psi_inv(), n);
        let forward = (0..n).map(|p| fwd_pow[bit_reverse(p, log_n)]).collect();
        let inverse = (0..n).map(|p| inv_pow[bit_reverse(p, log_n)]).collect();
        Ok(TwiddleTable {
            n,
            log_n,
            n1,
            forward,
            inverse,
            n_inv: modulus.inv(n as u32 % modulus.value()),
            forward_seeds: TwiddleSeeds::new(&modulus, modulus.psi(), log_n),
            inverse_seeds: TwiddleSeeds::new(&modulus, modulus.psi_inv(), log_n),
            modulus,
        })
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn split(&self) -> usize {
        self.n1
    }

    pub fn seeds(&self, direction: Direction) -> &TwiddleSeeds {
        match direction {
            Direction::Forward => &self.forward_seeds,
            Direction::Inverse => &self.inverse_seeds,
        }
    }

    /// Table entry at schedule position `p`.
    pub fn entry(&self, direction: Direction, position: usize) -> u32 {
        match direction {
            Direction::Forward => self.forward[position],
            Direction::Inverse => self.inverse[position],
        }
    }

    /// Regenerates the table entry at `position` from the seed set with a
    /// single modular multiplication.
    pub fn generate_at(&self, direction: Direction, position: usize) -> Result<u32> {
        if position >= self.n {
            return Err(Error::InvalidArgument(format!(
                "twiddle position {position} out of range for N = {}",
                self.n
            )));
        }
        Ok(self.generate_unchecked(direction, position))
    }

    /// Twiddle of butterfly block `index` in stage `stage` (stage `s` has
    /// `2^s` blocks and reads position `2^s + index`).
    pub fn generate_on_the_fly(&self, direction: Direction, stage: u32, index: usize) -> Result<u32> {
        if stage >= self.log_n || index >= 1 << stage {
            return Err(Error::InvalidArgument(format!(
                "butterfly (stage {stage}, index {index}) out of range for N = {}",
                self.n
            )));
        }
        Ok(self.generate_unchecked(direction, (1 << stage) + index))
    }

    #[inline]
    fn generate_unchecked(&self, direction: Direction, position: usize) -> u32 {
        let e = bit_reverse(position, self.log_n);
        self.seeds(direction).power(&self.modulus, e)
    }

    /// Human-readable dump: header line then one `position exponent fwd inv`
    /// line per entry.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# q={} n={} n1={} psi={} n_inv={}",
            self.modulus.value(),
            self.n,
            self.n1,
            self.modulus.psi(),
            self.n_inv
        );
        for p in 0..self.n {
            let _ = writeln!(
                s,
                "{p} {} {} {}",
                bit_reverse(p, self.log_n),
                self.forward[p],
                self.inverse[p]
            );
        }
        s
    }

    /// Overwrites one forward table entry (and its seed-derived twin) with a
    /// wrong value. Only meant for negative-control verification runs.
    #[doc(hidden)]
    pub fn corrupt_for_fault_injection(&mut self) {
        let p = self.n / 2 + 1;
        let p = p.min(self.n - 1);
        let m = self.modulus;
        self.forward[p] = m.add(self.forward[p], 1);
        let i = 1 % self.forward_seeds.low.len();
        self.forward_seeds.low[i] = m.add(self.forward_seeds.low[i], 1);
    }

    fn check_row(&self, row: &[u32]) -> Result<()> {
        if row.len() != self.n {
            return Err(Error::Mismatch(format!(
                "row length {} vs transform size {}",
                row.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Single-pass transform of one limb in place.
    pub fn ntt(&self, row: &mut [u32], direction: Direction) -> Result<()> {
        self.ntt_tallied(row, direction, &mut ())
    }

    pub fn ntt_tallied<T: Tally>(&self, row: &mut [u32], direction: Direction, tally: &mut T) -> Result<()> {
        self.check_row(row)?;
        match direction {
            Direction::Forward => {
                self.forward_stages(row, self.n, tally, TwiddleSource::Table);
                bit_reverse_permute(row);
            }
            Direction::Inverse => {
                bit_reverse_permute(row);
                self.inverse_stages(row, tally, TwiddleSource::Table);
            }
        }
        Ok(())
    }

    /// Two-kernel transform of one limb in place; bit-identical to [`ntt`].
    ///
    /// [`ntt`]: TwiddleTable::ntt
    pub fn ntt_two_phase(&self, row: &mut [u32], direction: Direction, cfg: TwoPhaseConfig) -> Result<()> {
        self.ntt_two_phase_tallied(row, direction, cfg, &mut ())
    }

    pub fn ntt_two_phase_tallied<T: Tally>(
        &self,
        row: &mut [u32],
        direction: Direction,
        cfg: TwoPhaseConfig,
        tally: &mut T,
    ) -> Result<()> {
        self.check_row(row)?;
        let src = |otf| if otf { TwiddleSource::Seeds } else { TwiddleSource::Table };
        match direction {
            Direction::Forward => {
                let staged = self.strided_phase(row, direction, src(cfg.strided_on_the_fly), tally);
                row.copy_from_slice(&staged);
                self.block_phase(row, direction, src(cfg.block_on_the_fly), tally);
                bit_reverse_permute(row);
            }
            Direction::Inverse => {
                bit_reverse_permute(row);
                self.block_phase(row, direction, src(cfg.block_on_the_fly), tally);
                let staged = self.strided_phase(row, direction, src(cfg.strided_on_the_fly), tally);
                row.copy_from_slice(&staged);
            }
        }
        Ok(())
    }

    /// First (forward) or last (inverse) `log2 n1` stages. Works on gathered
    /// columns and returns the full exchanged buffer that the other phase
    /// consumes.
    fn strided_phase<T: Tally>(&self, row: &[u32], direction: Direction, src: TwiddleSource, tally: &mut T) -> Vec<u32> {
        let n1 = self.n1;
        let cols = self.n / n1;
        let mut exchanged = vec![0u32; self.n];
        let mut column = vec![0u32; n1];
        // stage-major order would repeat twiddle loads per column; on the
        // device each twiddle is loaded once per column group, which is what
        // the counter below records.
        let mut first = true;
        for c in 0..cols {
            for (k, x) in column.iter_mut().enumerate() {
                *x = row[c + k * cols];
            }
            if first {
                match direction {
                    Direction::Forward => self.forward_stages(&mut column, n1, tally, src.with_phase(Phase::Strided)),
                    Direction::Inverse => self.inverse_stages(&mut column, tally, src.with_phase(Phase::Strided)),
                }
                first = false;
            } else {
                let mut quiet = Butterflies(tally);
                match direction {
                    Direction::Forward => self.forward_stages(&mut column, n1, &mut quiet, src.with_phase(Phase::Strided)),
                    Direction::Inverse => self.inverse_stages(&mut column, &mut quiet, src.with_phase(Phase::Strided)),
                }
            }
            for (k, &x) in column.iter().enumerate() {
                exchanged[c + k * cols] = x;
            }
        }
        exchanged
    }

    fn block_phase<T: Tally>(&self, row: &mut [u32], direction: Direction, src: TwiddleSource, tally: &mut T) {
        let n1 = self.n1;
        let cols = self.n / n1;
        if cols == 1 {
            return;
        }
        for (b, block) in row.chunks_mut(cols).enumerate() {
            match direction {
                Direction::Forward => self.forward_block(block, b, tally, src.with_phase(Phase::Block)),
                Direction::Inverse => self.inverse_block(block, b, tally, src.with_phase(Phase::Block)),
            }
        }
    }

    #[inline]
    fn twiddle<T: Tally>(&self, direction: Direction, position: usize, src: TwiddleSource, tally: &mut T) -> u32 {
        match src {
            TwiddleSource::Table | TwiddleSource::TableIn(_) => {
                tally.table_load(src.phase());
                self.entry(direction, position)
            }
            TwiddleSource::Seeds | TwiddleSource::SeedsIn(_) => {
                tally.generated(src.phase());
                self.generate_unchecked(direction, position)
            }
        }
    }

    /// Cooley-Tukey stages `m = 1, 2, .., m_end/2` over the whole buffer:
    /// either a full row or one gathered column of the strided phase.
    fn forward_stages<T: Tally>(&self, a: &mut [u32], m_end: usize, tally: &mut T, src: TwiddleSource) {
        let md = &self.modulus;
        let len = a.len();
        let mut t = len;
        let mut m = 1;
        while m < m_end {
            t >>= 1;
            for i in 0..m {
                let w = self.twiddle(Direction::Forward, m + i, src, tally);
                ct_butterflies(md, &mut a[2 * i * t..2 * (i + 1) * t], w);
            }
            tally.butterflies((len / 2) as u64);
            m <<= 1;
        }
    }

    /// Remaining forward stages (`m >= n1`) inside contiguous block `b`.
    fn forward_block<T: Tally>(&self, a: &mut [u32], b: usize, tally: &mut T, src: TwiddleSource) {
        let md = &self.modulus;
        let len = a.len();
        let mut t = len;
        let mut m = self.n1;
        let mut local = 1;
        while m < self.n {
            t >>= 1;
            for i in 0..local {
                let w = self.twiddle(Direction::Forward, m + b * local + i, src, tally);
                ct_butterflies(md, &mut a[2 * i * t..2 * (i + 1) * t], w);
            }
            tally.butterflies((len / 2) as u64);
            m <<= 1;
            local <<= 1;
        }
    }

    /// Gentleman-Sande stages from `h = len/2` down to 1 over a full row or
    /// one gathered column. `N^-1` is folded into the `h == 1` stage.
    fn inverse_stages<T: Tally>(&self, a: &mut [u32], tally: &mut T, src: TwiddleSource) {
        let len = a.len();
        let md = &self.modulus;
        let mut t = 1;
        let mut m = len;
        while m > 1 {
            let h = m / 2;
            for i in 0..h {
                let w = self.twiddle(Direction::Inverse, h + i, src, tally);
                let scale = (h == 1).then_some(self.n_inv);
                gs_butterflies(md, &mut a[2 * i * t..2 * (i + 1) * t], w, scale);
            }
            tally.butterflies((a.len() / 2) as u64);
            t <<= 1;
            m = h;
        }
    }

    /// Inverse stages with `h` from `N/2` down to `n1` inside contiguous
    /// block `b`.
    fn inverse_block<T: Tally>(&self, a: &mut [u32], b: usize, tally: &mut T, src: TwiddleSource) {
        let md = &self.modulus;
        let len = a.len();
        let mut t = 1;
        let mut h = self.n / 2;
        let mut local = len / 2;
        while h >= self.n1 {
            for i in 0..local {
                let w = self.twiddle(Direction::Inverse, h + b * local + i, src, tally);
                // h == 1 only when n1 == 1
                let scale = (h == 1).then_some(self.n_inv);
                gs_butterflies(md, &mut a[2 * i * t..2 * (i + 1) * t], w, scale);
            }
            tally.butterflies((len / 2) as u64);
            t <<= 1;
            h /= 2;
            local /= 2;
        }
    }
}

/// Cooley-Tukey butterflies between the two halves of `block`.
#[inline]
fn ct_butterflies(md: &Modulus, block: &mut [u32], w: u32) {
    let (lo, hi) = block.split_at_mut(block.len() / 2);
    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
        let u = *x;
        let v = md.mul(*y, w);
        *x = md.add(u, v);
        *y = md.sub(u, v);
    }
}

/// Gentleman-Sande butterflies; `scale` folds `N^-1` into the last stage.
#[inline]
fn gs_butterflies(md: &Modulus, block: &mut [u32], w: u32, scale: Option<u32>) {
    let (lo, hi) = block.split_at_mut(block.len() / 2);
    match scale {
        None => {
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = md.add(u, v);
                *y = md.mul(md.sub(u, v), w);
            }
        }
        Some(n_inv) => {
            let w = md.mul(w, n_inv);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = md.mul(md.add(u, v), n_inv);
                *y = md.mul(md.sub(u, v), w);
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum TwiddleSource {
    Table,
    Seeds,
    TableIn(Phase),
    SeedsIn(Phase),
}

impl TwiddleSource {
    fn with_phase(self, phase: Phase) -> Self {
        match self {
            TwiddleSource::Table | TwiddleSource::TableIn(_) => TwiddleSource::TableIn(phase),
            TwiddleSource::Seeds | TwiddleSource::SeedsIn(_) => TwiddleSource::SeedsIn(phase),
        }
    }

    fn phase(self) -> Phase {
        match self {
            TwiddleSource::TableIn(p) | TwiddleSource::SeedsIn(p) => p,
            // single-pass transforms report everything as strided
            _ => Phase::Strided,
        }
    }
}

/// Forwards butterfly counts but drops twiddle accounting, so repeated
/// columns of the strided phase load each twiddle once.
struct Butterflies<'a, T: Tally>(&'a mut T);

impl<T: Tally> Tally for Butterflies<'_, T> {
    fn butterflies(&mut self, count: u64) {
        self.0.butterflies(count);
    }
}

/// Twiddle tables for every limb of a basis.
#[derive(Clone, Debug)]
pub struct NttContext {
    tables: Vec<TwiddleTable>,
    n: usize,
}

impl NttContext {
    pub fn new(basis: &[Modulus]) -> Result<Self> {
        let n = basis.first().map(|m| m.degree()).unwrap_or(0);
        let tables = basis
            .iter()
            .map(|&m| {
                if m.degree() != n {
                    return Err(Error::Mismatch("basis moduli built for different degrees".into()));
                }
                TwiddleTable::new(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NttContext { tables, n })
    }

    pub fn with_split(basis: &[Modulus], n1: usize) -> Result<Self> {
        let n = basis.first().map(|m| m.degree()).unwrap_or(0);
        let tables = basis
            .iter()
            .map(|&m| TwiddleTable::with_split(m, n1))
            .collect::<Result<Vec<_>>>()?;
        Ok(NttContext { tables, n })
    }

    pub fn tables(&self) -> &[TwiddleTable] {
        &self.tables
    }

    pub fn tables_mut(&mut self) -> &mut [TwiddleTable] {
        &mut self.tables
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    fn table_for(&self, m: &Modulus) -> Result<&TwiddleTable> {
        self.tables
            .iter()
            .find(|t| t.modulus.value() == m.value())
            .ok_or_else(|| Error::Mismatch(format!("no twiddle table for modulus {}", m.value())))
    }

    fn check_domain(p: &Polynomial, direction: Direction) -> Result<()> {
        let want = match direction {
            Direction::Forward => Domain::Coefficient,
            Direction::Inverse => Domain::Evaluation,
        };
        if p.domain() != want {
            return Err(Error::Mismatch(format!(
                "{direction:?} transform expects {want:?} input, got {:?}",
                p.domain()
            )));
        }
        Ok(())
    }

    fn flip(p: &mut Polynomial, direction: Direction) {
        p.set_domain(match direction {
            Direction::Forward => Domain::Evaluation,
            Direction::Inverse => Domain::Coefficient,
        });
    }

    /// Per-limb single-pass transform of a whole polynomial.
    pub fn transform(&self, p: &mut Polynomial, direction: Direction, exec: Exec) -> Result<()> {
        Self::check_domain(p, direction)?;
        let tables = p
            .basis()
            .iter()
            .map(|m| self.table_for(m))
            .collect::<Result<Vec<_>>>()?;
        let n = p.n();
        if n != self.n {
            return Err(Error::Mismatch(format!("degree {n} vs context degree {}", self.n)));
        }
        exec::for_each_chunk_mut(exec, p.data_mut(), n, |i, row| {
            tables[i].ntt(row, direction).expect("row length checked");
        });
        Self::flip(p, direction);
        Ok(())
    }

    /// Two-kernel transform of every limb; bit-identical to [`transform`].
    ///
    /// [`transform`]: NttContext::transform
    pub fn transform_two_phase(&self, p: &mut Polynomial, direction: Direction, cfg: TwoPhaseConfig, exec: Exec) -> Result<()> {
        Self::check_domain(p, direction)?;
        let tables = p
            .basis()
            .iter()
            .map(|m| self.table_for(m))
            .collect::<Result<Vec<_>>>()?;
        let n = p.n();
        if n != self.n {
            return Err(Error::Mismatch(format!("degree {n} vs context degree {}", self.n)));
        }
        exec::for_each_chunk_mut(exec, p.data_mut(), n, |i, row| {
            tables[i].ntt_two_phase(row, direction, cfg).expect("row length checked");
        });
        Self::flip(p, direction);
        Ok(())
    }

    pub fn forward(&self, p: &mut Polynomial) -> Result<()> {
        self.transform(p, Direction::Forward, Exec::default())
    }

    pub fn inverse(&self, p: &mut Polynomial) -> Result<()> {
        self.transform(p, Direction::Inverse, Exec::default())
    }
}

/// Column permutation realising `a(X) -> a(X^k)` in the evaluation domain.
///
/// Slot `j` holds `a(psi^(2j+1))`, so the image takes slot `j` from the slot
/// whose exponent is `k(2j+1) mod 2N`. The permutation does not depend on
/// the modulus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalAutomorphism {
    k: usize,
    source: Vec<usize>,
}

impl EvalAutomorphism {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        poly::check_galois_element(k, n)?;
        let two_n = 2 * n;
        let source = (0..n)
            .map(|j| ((k % two_n) * (2 * j + 1) % two_n - 1) / 2)
            .collect();
        Ok(EvalAutomorphism { k, source })
    }

    pub fn galois_element(&self) -> usize {
        self.k
    }

    /// `out[j] = a[source[j]]`.
    pub fn source_indices(&self) -> &[usize] {
        &self.source
    }

    pub fn apply(&self, a: &Polynomial) -> Result<Polynomial> {
        if a.domain() != Domain::Evaluation {
            return Err(Error::Mismatch("evaluation-domain automorphism on coefficient input".into()));
        }
        if a.n() != self.source.len() {
            return Err(Error::Mismatch("automorphism built for a different degree".into()));
        }
        let mut out = a.clone();
        let n = a.n();
        for r in 0..a.limbs() {
            let src = a.row(r);
            for (d, &s) in out.row_mut(r).iter_mut().zip(&self.source) {
                *d = src[s];
            }
            debug_assert_eq!(out.row(r).len(), n);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::find_ntt_primes;

    fn table(q: u32, n: usize) -> TwiddleTable {
        TwiddleTable::new(Modulus::new(q, n).unwrap()).unwrap()
    }

    #[test]
    fn delta_maps_to_all_ones() {
        let t = table(17, 4);
        let mut a = vec![1, 0, 0, 0];
        t.ntt(&mut a, Direction::Forward).unwrap();
        assert_eq!(a, vec![1, 1, 1, 1]);
    }

    #[test]
    fn exhaustive_roundtrip_n4_q17() {
        let t = table(17, 4);
        for v in 0..17u32.pow(4) {
            let a: Vec<u32> = (0..4).map(|k| (v / 17u32.pow(k)) % 17).collect();
            let mut b = a.clone();
            t.ntt(&mut b, Direction::Forward).unwrap();
            t.ntt(&mut b, Direction::Inverse).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn small_negacyclic_products() {
        let t = table(17, 4);
        let m = *t.modulus();
        let mul = |a: [u32; 4], b: [u32; 4]| {
            let (mut x, mut y) = (a.to_vec(), b.to_vec());
            t.ntt(&mut x, Direction::Forward).unwrap();
            t.ntt(&mut y, Direction::Forward).unwrap();
            let mut z: Vec<u32> = x.iter().zip(&y).map(|(&u, &v)| m.mul(u, v)).collect();
            t.ntt(&mut z, Direction::Inverse).unwrap();
            z
        };
        assert_eq!(mul([1, 1, 0, 0], [1, 1, 0, 0]), vec![1, 2, 1, 0]);
        assert_eq!(mul([0, 0, 0, 1], [0, 1, 0, 0]), vec![16, 0, 0, 0]);
    }

    #[test]
    fn phase_twiddle_counts() {
        let t = TwiddleTable::with_split(Modulus::new(97, 16).unwrap(), 4).unwrap();
        let mut stats = NttStats::default();
        let mut a: Vec<u32> = (0..16).map(|i| (i * 7 + 3) % 97).collect();
        t.ntt_two_phase_tallied(&mut a, Direction::Forward, TwoPhaseConfig::default(), &mut stats).unwrap();
        assert_eq!(stats.strided_table_loads, 3);
        assert_eq!(stats.block_table_loads, 0);
        assert_eq!(stats.block_generated, 12);
        assert_eq!(stats.butterflies, 8 * 4);
    }

    #[test]
    fn on_the_fly_matches_table_everywhere() {
        let t = table(97, 16);
        for dir in [Direction::Forward, Direction::Inverse] {
            for p in 0..16 {
                assert_eq!(t.generate_at(dir, p).unwrap(), t.entry(dir, p));
            }
            for s in 0..4 {
                for i in 0..(1usize << s) {
                    assert_eq!(t.generate_on_the_fly(dir, s, i).unwrap(), t.entry(dir, (1 << s) + i));
                }
            }
        }
        assert_eq!(t.generate_at(Direction::Forward, 0).unwrap(), 1);
        assert!(t.generate_on_the_fly(Direction::Forward, 4, 0).is_err());
        assert!(t.generate_on_the_fly(Direction::Forward, 1, 2).is_err());
    }

    #[test]
    fn seed_set_is_order_sqrt_n() {
        let m = find_ntt_primes(1, 31, 1 << 16).unwrap()[0];
        let t = TwiddleTable::new(m).unwrap();
        assert_eq!(t.split(), 256);
        assert!(t.seeds(Direction::Forward).len() <= 2 * 256);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let t = table(17, 4);
        let mut a = vec![0u32; 8];
        assert!(t.ntt(&mut a, Direction::Forward).is_err());
    }

    #[test]
    fn twiddle_dump_lists_every_entry() {
        let t = table(17, 4);
        let text = t.to_text();
        assert!(text.starts_with("# q=17 n=4 n1=2 psi=2"));
        assert_eq!(text.lines().count(), 5);
    }
}
