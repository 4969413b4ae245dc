//! Discrete torus, bit-packed occupation configurations and the elementary
//! operators acting on them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A site of the discrete torus `Z / nZ`, always held in `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusIndex {
    value: usize,
    n: usize,
}

impl TorusIndex {
    pub fn new(n: usize, position: isize) -> Self {
        assert!(n > 0, "torus size must be positive");
        Self {
            value: wrap(n, position),
            n,
        }
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn modulus(self) -> usize {
        self.n
    }

    pub fn offset(self, k: isize) -> Self {
        Self::new(self.n, self.value as isize + k)
    }
}

impl std::ops::Add<isize> for TorusIndex {
    type Output = TorusIndex;
    fn add(self, k: isize) -> TorusIndex {
        self.offset(k)
    }
}

impl std::ops::Sub<isize> for TorusIndex {
    type Output = TorusIndex;
    fn sub(self, k: isize) -> TorusIndex {
        self.offset(-k)
    }
}

#[inline]
pub(crate) fn wrap(n: usize, position: isize) -> usize {
    position.rem_euclid(n as isize) as usize
}

/// Discrete interval `[[start, start + len - 1]]` on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    pub start: TorusIndex,
    pub len: usize,
}

impl Interval {
    pub fn new(start: TorusIndex, len: usize) -> Self {
        assert!(len <= start.modulus(), "interval longer than the torus");
        Self { start, len }
    }

    /// The interval `[[a, b]]` with both ends included, read left to right.
    pub fn closed(n: usize, a: isize, b: isize) -> Self {
        let len = (b - a).rem_euclid(n as isize) as usize + 1;
        Self::new(TorusIndex::new(n, a), len)
    }

    pub fn contains(&self, site: TorusIndex) -> bool {
        let rel = (site.value() + site.modulus() - self.start.value()) % site.modulus();
        rel < self.len
    }

    pub fn sites(&self) -> impl Iterator<Item = TorusIndex> + '_ {
        (0..self.len).map(move |i| self.start.offset(i as isize))
    }
}

/// Exact ratio `numerator / denominator` of a particle count over a box size.
#[derive(Clone, Copy, Debug, Eq)]
pub struct BoxDensity {
    pub numerator: usize,
    pub denominator: usize,
}

impl BoxDensity {
    pub fn value(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl PartialEq for BoxDensity {
    fn eq(&self, other: &Self) -> bool {
        self.numerator * other.denominator == other.numerator * self.denominator
    }
}

/// Occupation vector on the torus of size `n`, one bit per site.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    words: Vec<u64>,
    n: usize,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        assert!(n > 0, "lattice size must be positive");
        Self {
            words: vec![0; n.div_ceil(WORD)],
            n,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut cfg = Self::empty(n);
        for w in &mut cfg.words {
            *w = !0;
        }
        cfg.mask_tail();
        cfg
    }

    pub fn from_occupations<I: IntoIterator<Item = bool>>(occupations: I) -> Self {
        let bits: Vec<bool> = occupations.into_iter().collect();
        let mut cfg = Self::empty(bits.len());
        for (x, b) in bits.into_iter().enumerate() {
            if b {
                cfg.set(x, true);
            }
        }
        cfg
    }

    /// Configuration whose site `x` holds bit `x` of `index` (`n <= 64`).
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n <= WORD, "state indexing needs n <= 64");
        let mut cfg = Self::empty(n);
        cfg.words[0] = index;
        cfg.mask_tail();
        cfg
    }

    pub fn to_index(&self) -> u64 {
        assert!(self.n <= WORD, "state indexing needs n <= 64");
        self.words[0]
    }

    fn mask_tail(&mut self) {
        let rem = self.n % WORD;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.particle_total() == self.n
    }

    #[inline]
    pub fn get(&self, x: usize) -> bool {
        debug_assert!(x < self.n);
        (self.words[x / WORD] >> (x % WORD)) & 1 == 1
    }

    /// Occupation at an arbitrary (possibly negative or overflowing) position.
    #[inline]
    pub fn at(&self, position: isize) -> u8 {
        self.get(wrap(self.n, position)) as u8
    }

    #[inline]
    pub fn set(&mut self, x: usize, occupied: bool) {
        let (w, b) = (x / WORD, x % WORD);
        if occupied {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    #[inline]
    pub fn flip(&mut self, x: usize) {
        self.words[x / WORD] ^= 1 << (x % WORD);
    }

    /// Swap the occupations at `x` and `y` in place.
    #[inline]
    pub fn exchange_in_place(&mut self, x: usize, y: usize) {
        if self.get(x) != self.get(y) {
            self.flip(x);
            self.flip(y);
        }
    }

    pub fn particle_total(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of particles on `len` consecutive sites starting at `start`.
    pub fn count_run(&self, start: usize, len: usize) -> usize {
        debug_assert!(len <= self.n);
        let start = start % self.n;
        if start + len <= self.n {
            self.count_linear(start, start + len)
        } else {
            self.count_linear(start, self.n) + self.count_linear(0, start + len - self.n)
        }
    }

    fn count_linear(&self, from: usize, to: usize) -> usize {
        if from >= to {
            return 0;
        }
        let (wf, bf) = (from / WORD, from % WORD);
        let (wt, bt) = (to / WORD, to % WORD);
        if wf == wt {
            let mask = ((1u64 << (bt - bf)) - 1) << bf;
            return (self.words[wf] & mask).count_ones() as usize;
        }
        let mut total = (self.words[wf] >> bf).count_ones() as usize;
        for w in &self.words[wf + 1..wt] {
            total += w.count_ones() as usize;
        }
        if bt > 0 {
            total += (self.words[wt] & ((1u64 << bt) - 1)).count_ones() as usize;
        }
        total
    }

    pub fn count_interval(&self, interval: &Interval) -> usize {
        self.count_run(interval.start.value(), interval.len)
    }

    pub fn occupations(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.n).map(move |x| self.get(x))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.occupations() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let line = s.trim_end_matches(['\n', '\r']);
        if line.is_empty() {
            return Err(Error::Domain("empty configuration line".into()));
        }
        line.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Domain(format!("invalid occupation character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Configuration::from_occupations)
    }
}

/// `result(x) = cfg(x + k)` for every site.
pub fn shift(cfg: &Configuration, k: isize) -> Configuration {
    let n = cfg.len();
    let mut out = Configuration::empty(n);
    for x in 0..n {
        if cfg.get(wrap(n, x as isize + k)) {
            out.set(x, true);
        }
    }
    out
}

pub fn exchange(cfg: &Configuration, x: TorusIndex, y: TorusIndex) -> Configuration {
    let mut out = cfg.clone();
    out.exchange_in_place(x.value(), y.value());
    out
}

pub fn box_density(cfg: &Configuration, sites: &[TorusIndex]) -> Result<BoxDensity> {
    if sites.is_empty() {
        return Err(Error::Domain("box density over an empty site set".into()));
    }
    let numerator = sites.iter().filter(|s| cfg.get(s.value())).count();
    Ok(BoxDensity {
        numerator,
        denominator: sites.len(),
    })
}

/// Particles on `[[0, ell]]`.
pub fn particle_count(cfg: &Configuration, ell: usize) -> Result<usize> {
    if ell >= cfg.len() {
        return Err(Error::Domain(format!(
            "box [[0, {ell}]] does not fit a torus of size {}",
            cfg.len()
        )));
    }
    Ok(cfg.count_run(0, ell + 1))
}

/// `(1/N) sum_x G(x/N) cfg(x)`.
pub fn empirical_pairing<G: Fn(f64) -> f64>(cfg: &Configuration, test: G) -> f64 {
    let n = cfg.len();
    let sum: f64 = (0..n)
        .filter(|&x| cfg.get(x))
        .map(|x| test(x as f64 / n as f64))
        .sum();
    sum / n as f64
}
