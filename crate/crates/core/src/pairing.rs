//! Pair partitions of `[2k]` and the exact moment formulas built on them.
//!
//! All positions are 1-based in the public API, matching the usual way
//! Wick couplings are written: `{{1,3},{2,4}}` pairs position 1 with 3.
//!
//! * GUE: `m_{2k} = Σ_π m^{g(π) - k - 1}` where `g(π)` counts the cycles of
//!   `γ_0 ∘ π` and `γ_0 = (1 2 … 2k)`.
//! * Mixed GUE traces: `⟨Π (tr H^i)^{ν_i}⟩ = Σ_π m^{F(π)}` where `F(π)` is the
//!   number of index classes of `t_{a_i} = t_{f(b_i)}, t_{b_i} = t_{f(a_i)}`.
//! * GOE: `m^{-k-1} Σ_π Σ_{t ∈ A(π)} 2^{r(π,t)}`; each pair is either
//!   straight or twisted, and a pair satisfying both carries weight 2.

use alloc::vec::Vec;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Exact moment values: integer numerators over powers of `m`.
pub type Rational = Ratio<i128>;

/// Largest `k` for which all `(2k-1)!!` partitions are enumerated.
pub const MAX_PAIRS: usize = 8;
/// Largest moment order for [`gue_moment`].
pub const MAX_GUE_ORDER: usize = 16;
/// Largest letter count for [`mixed_trace_gue`].
pub const MAX_WORD_LETTERS: usize = 12;
/// Largest moment order for the orientation-sum path of [`goe_moment`].
pub const MAX_GOE_ORDER: usize = 14;
/// Cap on `m^{2k}` for [`goe_moment_brute_force`].
pub const MAX_BRUTE_FORCE_TUPLES: u64 = 100_000_000;

/// A Wick coupling: pairs `(a_i, b_i)` with `a_1 < … < a_k` and `a_i < b_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairPartition {
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Canonicalizes `pairs` and checks that they partition `[2k]`.
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        let n = 2 * pairs.len();
        let mut seen = alloc::vec![false; n + 1];
        for &(a, b) in &pairs {
            for x in [a, b] {
                if x == 0 || x > n || seen[x] {
                    return Err(Error::InvalidArgument("pairs must cover 1..=2k exactly once"));
                }
                seen[x] = true;
            }
        }
        Ok(Self { pairs })
    }

    /// Number of pairs.
    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The partition as an involution on `0..2k` (0-based).
    pub fn involution(&self) -> Vec<usize> {
        let mut p = alloc::vec![0; 2 * self.k()];
        for &(a, b) in &self.pairs {
            p[a - 1] = b - 1;
            p[b - 1] = a - 1;
        }
        p
    }

    /// True when no two pairs interleave as `a < c < b < d`.
    pub fn is_non_crossing(&self) -> bool {
        self.pairs.iter().all(|&(a, b)| {
            self.pairs
                .iter()
                .all(|&(c, d)| !(a < c && c < b && b < d))
        })
    }
}

fn check_pairs(k: usize) -> Result<()> {
    if k > MAX_PAIRS {
        return Err(Error::SizeLimit {
            what: "pair count k",
            value: k,
            max: MAX_PAIRS,
        });
    }
    Ok(())
}

/// Lexicographic iterator over the pair partitions of `[2k]`.
///
/// State is one choice index per pair: at level `l` the smallest unused
/// position is paired with the `choices[l]`-th unused position above it.
#[derive(Debug, Clone)]
pub struct PairPartitions {
    k: usize,
    choices: Vec<usize>,
    done: bool,
}

impl PairPartitions {
    fn decode(&self) -> PairPartition {
        let n = 2 * self.k;
        let mut used = alloc::vec![false; n];
        let mut pairs = Vec::with_capacity(self.k);
        for &c in &self.choices {
            let a = used.iter().position(|u| !u).expect("an unused position remains");
            used[a] = true;
            let b = (a + 1..n)
                .filter(|&x| !used[x])
                .nth(c)
                .expect("choice index within range");
            used[b] = true;
            pairs.push((a + 1, b + 1));
        }
        PairPartition { pairs }
    }
}

impl Iterator for PairPartitions {
    type Item = PairPartition;

    fn next(&mut self) -> Option<PairPartition> {
        if self.done {
            return None;
        }
        let out = self.decode();
        // Level l has 2(k - l) - 1 candidates.
        let mut level = self.k;
        loop {
            if level == 0 {
                self.done = true;
                break;
            }
            level -= 1;
            let candidates = 2 * (self.k - level) - 1;
            if self.choices[level] + 1 < candidates {
                self.choices[level] += 1;
                break;
            }
            self.choices[level] = 0;
        }
        Some(out)
    }
}

/// All `(2k-1)!!` pair partitions of `[2k]` in lexicographic order of
/// `(a_1, b_1, a_2, b_2, …)`.
pub fn enumerate_pair_partitions(k: usize) -> Result<PairPartitions> {
    check_pairs(k)?;
    Ok(PairPartitions {
        k,
        choices: alloc::vec![0; k],
        done: false,
    })
}

/// `(2k-1)!!`.
pub fn double_factorial_odd(k: usize) -> u64 {
    (1..=k as u64).map(|i| 2 * i - 1).product()
}

/// `g(π)`: the number of cycles of `γ_0 ∘ π`, `π` applied first.
///
/// `γ_0 ∘ π` and `π ∘ γ_0` are conjugate by the involution `π`, so the count
/// does not depend on the composition order.
pub fn orbit_count(pi: &PairPartition) -> usize {
    let p = pi.involution();
    let n = p.len();
    let mut seen = alloc::vec![false; n];
    let mut cycles = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = (p[x] + 1) % n;
        }
    }
    if n == 0 {
        // γ_0 on the empty set; keeps m_0 = m^{g-k-1} = 1.
        return 1;
    }
    cycles
}

/// Histogram of `g(π)` over all partitions of `[2k]`, indexed by `g`.
pub fn orbit_histogram(k: usize) -> Result<Vec<u64>> {
    let mut counts = alloc::vec![0u64; k + 2];
    for pi in enumerate_pair_partitions(k)? {
        counts[orbit_count(&pi)] += 1;
    }
    Ok(counts)
}

/// Number of partitions of `[2k]` with `g(π) = k + 1`; equals Catalan(k).
pub fn catalan_limit_check(k: usize) -> Result<u64> {
    Ok(orbit_histogram(k)?[k + 1])
}

fn check_m(m: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("block order m must be at least 1"));
    }
    Ok(())
}

fn overflow() -> Error {
    Error::InvalidArgument("exact value overflows 128-bit arithmetic")
}

fn pow_i128(m: u64, e: usize) -> Result<i128> {
    (m as i128).checked_pow(e as u32).ok_or_else(overflow)
}

/// `Σ_c counts[c] m^c`.
fn eval_polynomial(counts: &[u64], m: u64) -> Result<i128> {
    let mut acc: i128 = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let term = pow_i128(m, c)?
            .checked_mul(n as i128)
            .ok_or_else(overflow)?;
        acc = acc.checked_add(term).ok_or_else(overflow)?;
    }
    Ok(acc)
}

/// `n`-th moment of the spectrum of `H/√m`, `H` an `m × m` GUE matrix.
pub fn gue_moment(m: u64, n: usize) -> Result<Rational> {
    check_m(m)?;
    if n > MAX_GUE_ORDER {
        return Err(Error::SizeLimit {
            what: "moment order n",
            value: n,
            max: MAX_GUE_ORDER,
        });
    }
    if n % 2 == 1 {
        return Ok(Rational::from_integer(0));
    }
    let k = n / 2;
    // Σ_g h[g] m^{g-k-1} = (Σ_g h[g] m^{g-1}) / m^k
    let hist = orbit_histogram(k)?;
    let numer = eval_polynomial(&hist[1..], m)?;
    Ok(Rational::new(numer, pow_i128(m, k)?))
}

/// Exponents `ν_1, …, ν_r` of `Π_i (tr H^i)^{ν_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TraceWord {
    exponents: Vec<usize>,
}

impl TraceWord {
    pub fn new(exponents: impl Into<Vec<usize>>) -> Self {
        Self {
            exponents: exponents.into(),
        }
    }

    /// A single factor `tr H^power`.
    pub fn single(power: usize) -> Self {
        let mut exponents = alloc::vec![0; power];
        if power > 0 {
            exponents[power - 1] = 1;
        }
        Self { exponents }
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    /// `ν = Σ ν_i`, the number of trace factors.
    pub fn factor_count(&self) -> usize {
        self.exponents.iter().sum()
    }

    /// `L = Σ i ν_i`.
    pub fn letter_count(&self) -> usize {
        self.exponents
            .iter()
            .enumerate()
            .map(|(i, &nu)| (i + 1) * nu)
            .sum()
    }

    /// Powers of the individual factors, in block order.
    pub fn factor_powers(&self) -> impl Iterator<Item = usize> + '_ {
        self.exponents
            .iter()
            .enumerate()
            .flat_map(|(i, &nu)| core::iter::repeat_n(i + 1, nu))
    }
}

/// The successor map `f` on `[L]`, 1-based: `f[x - 1] = f(x)`.
///
/// Positions form consecutive blocks, `ν_i` blocks of length `i` for
/// `i = 1..r`; `f` moves to the next position inside a block and sends the
/// last position of a block back to its first.
pub fn build_f_map(word: &TraceWord) -> Vec<usize> {
    let mut f = Vec::with_capacity(word.letter_count());
    let mut start = 1;
    for len in word.factor_powers() {
        for x in start..start + len {
            f.push(if x + 1 < start + len { x + 1 } else { start });
        }
        start += len;
    }
    f
}

/// Disjoint-set forest over `0..n` with path halving.
#[derive(Debug, Clone)]
struct UnionFind {
    parent: Vec<usize>,
    classes: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            classes: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
            self.classes -= 1;
        }
    }
}

/// `F(π)`: index classes of `t_{a_i} = t_{f(b_i)}`, `t_{b_i} = t_{f(a_i)}`.
pub fn free_index_count(pi: &PairPartition, word: &TraceWord) -> Result<usize> {
    let f = build_f_map(word);
    if f.len() != 2 * pi.k() {
        return Err(Error::InvalidArgument("pair partition must cover the word's letters"));
    }
    Ok(free_index_count_with(pi, &f))
}

fn free_index_count_with(pi: &PairPartition, f: &[usize]) -> usize {
    let mut uf = UnionFind::new(f.len());
    for &(a, b) in pi.pairs() {
        uf.union(a - 1, f[b - 1] - 1);
        uf.union(b - 1, f[a - 1] - 1);
    }
    uf.classes
}

/// `⟨Π (tr H^i)^{ν_i}⟩` over `m × m` GUE, exactly.
pub fn mixed_trace_gue(m: u64, word: &TraceWord) -> Result<i128> {
    check_m(m)?;
    let letters = word.letter_count();
    if letters > MAX_WORD_LETTERS {
        return Err(Error::SizeLimit {
            what: "word letter count L",
            value: letters,
            max: MAX_WORD_LETTERS,
        });
    }
    if letters % 2 == 1 {
        return Ok(0);
    }
    let f = build_f_map(word);
    let mut counts = alloc::vec![0u64; letters + 1];
    for pi in enumerate_pair_partitions(letters / 2)? {
        counts[free_index_count_with(&pi, &f)] += 1;
    }
    eval_polynomial(&counts, m)
}

/// Coefficients `c ↦ #{(π, σ)}` where `σ` picks straight/twisted per pair
/// and `c` is the number of index classes left by the chosen constraints.
pub fn goe_class_counts(k: usize) -> Result<Vec<u64>> {
    if 2 * k > MAX_GOE_ORDER {
        return Err(Error::SizeLimit {
            what: "moment order n",
            value: 2 * k,
            max: MAX_GOE_ORDER,
        });
    }
    let n = 2 * k;
    let mut counts = alloc::vec![0u64; n + 1];
    for pi in enumerate_pair_partitions(k)? {
        for mask in 0u32..(1 << k) {
            let mut uf = UnionFind::new(n);
            for (i, &(a, b)) in pi.pairs().iter().enumerate() {
                let (a, b) = (a - 1, b - 1);
                let (a1, b1) = ((a + 1) % n, (b + 1) % n);
                if mask >> i & 1 == 0 {
                    // twisted: t_a = t_{b+1}, t_b = t_{a+1}
                    uf.union(a, b1);
                    uf.union(b, a1);
                } else {
                    // straight: t_a = t_b, t_{a+1} = t_{b+1}
                    uf.union(a, b);
                    uf.union(a1, b1);
                }
            }
            counts[uf.classes] += 1;
        }
    }
    Ok(counts)
}

/// `n`-th moment of the spectrum of `H/√m`, `H` an `m × m` GOE matrix with
/// off-diagonal variance 1 and diagonal variance 2.
///
/// The weight `[t ∈ A(π)] 2^{r(π,t)}` factors over pairs as
/// `Π_i ([twisted_i] + [straight_i])`; expanding the product turns the sum
/// over index tuples into a sum over the `2^k` orientation choices of
/// `m^{classes}`.
pub fn goe_moment(m: u64, n: usize) -> Result<Rational> {
    check_m(m)?;
    if n > MAX_GOE_ORDER {
        return Err(Error::SizeLimit {
            what: "moment order n",
            value: n,
            max: MAX_GOE_ORDER,
        });
    }
    if n % 2 == 1 {
        return Ok(Rational::from_integer(0));
    }
    let k = n / 2;
    let numer = eval_polynomial(&goe_class_counts(k)?, m)?;
    Ok(Rational::new(numer, pow_i128(m, k + 1)?))
}

/// [`goe_moment`] by enumerating every `t ∈ [m]^{2k}` and testing membership
/// in `A(π)` pair by pair.
pub fn goe_moment_brute_force(m: u64, n: usize) -> Result<Rational> {
    check_m(m)?;
    if n % 2 == 1 {
        return Ok(Rational::from_integer(0));
    }
    let k = n / 2;
    check_pairs(k)?;
    let tuples = m.checked_pow(n as u32).filter(|&t| t <= MAX_BRUTE_FORCE_TUPLES);
    let Some(tuples) = tuples else {
        return Err(Error::SizeLimit {
            what: "index tuple count m^n",
            value: usize::MAX,
            max: MAX_BRUTE_FORCE_TUPLES as usize,
        });
    };
    let partitions: Vec<PairPartition> = enumerate_pair_partitions(k)?.collect();
    let mut total: i128 = 0;
    let mut t = alloc::vec![0u64; n];
    for code in 0..tuples {
        let mut c = code;
        for slot in t.iter_mut() {
            *slot = c % m;
            c /= m;
        }
        let at = |x: usize| t[(x - 1) % n];
        for pi in &partitions {
            let mut weight: i128 = 1;
            for &(a, b) in pi.pairs() {
                let twisted = at(a) == at(b + 1) && at(b) == at(a + 1);
                let straight = at(a) == at(b) && at(a + 1) == at(b + 1);
                if !(twisted || straight) {
                    weight = 0;
                    break;
                }
                if at(a) == at(b) && at(b) == at(a + 1) && at(a + 1) == at(b + 1) {
                    weight *= 2;
                }
            }
            total += weight;
        }
    }
    Ok(Rational::new(total, pow_i128(m, k + 1)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(pairs: &[(usize, usize)]) -> PairPartition {
        PairPartition::new(pairs.iter().copied()).unwrap()
    }

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn enumeration_small_cases() {
        let one: Vec<_> = enumerate_pair_partitions(1).unwrap().collect();
        assert_eq!(one, [pp(&[(1, 2)])]);
        let two: Vec<_> = enumerate_pair_partitions(2).unwrap().collect();
        assert_eq!(
            two,
            [
                pp(&[(1, 2), (3, 4)]),
                pp(&[(1, 3), (2, 4)]),
                pp(&[(1, 4), (2, 3)])
            ]
        );
        assert_eq!(enumerate_pair_partitions(4).unwrap().count(), 105);
        assert_eq!(enumerate_pair_partitions(0).unwrap().count(), 1);
    }

    #[test]
    fn enumeration_counts_and_order() {
        for k in 1..=6 {
            let all: Vec<_> = enumerate_pair_partitions(k).unwrap().collect();
            assert_eq!(all.len() as u64, double_factorial_odd(k));
            for w in all.windows(2) {
                assert!(w[0].pairs() < w[1].pairs());
            }
        }
        assert!(matches!(
            enumerate_pair_partitions(9),
            Err(Error::SizeLimit { value: 9, .. })
        ));
    }

    #[test]
    fn canonicalization_and_validation() {
        let p = pp(&[(4, 2), (3, 1)]);
        assert_eq!(p.pairs(), &[(1, 3), (2, 4)]);
        assert!(PairPartition::new([(1, 2), (2, 3)]).is_err());
        assert!(PairPartition::new([(1, 5), (2, 3)]).is_err());
    }

    #[test]
    fn orbit_count_examples() {
        assert_eq!(orbit_count(&pp(&[(1, 2)])), 2);
        assert_eq!(orbit_count(&pp(&[(1, 2), (3, 4)])), 3);
        assert_eq!(orbit_count(&pp(&[(1, 3), (2, 4)])), 1);
        assert_eq!(orbit_count(&pp(&[(1, 4), (2, 3)])), 3);
    }

    #[test]
    fn composition_order_normalization() {
        // every non-crossing partition must give g = k + 1 under γ_0 ∘ π
        for k in 1..=4 {
            for pi in enumerate_pair_partitions(k).unwrap() {
                let g = orbit_count(&pi);
                assert_eq!(pi.is_non_crossing(), g == k + 1, "{pi:?}");
            }
        }
    }

    #[test]
    fn orbit_count_parity_and_range() {
        for k in 1..=6 {
            for pi in enumerate_pair_partitions(k).unwrap() {
                let g = orbit_count(&pi);
                assert!((1..=k + 1).contains(&g));
                assert_eq!(g % 2, (k + 1) % 2);
            }
        }
    }

    #[test]
    fn gue_moments() {
        for m in 1..=6u64 {
            let mi = m as i128;
            assert_eq!(gue_moment(m, 2).unwrap(), r(1, 1));
            assert_eq!(gue_moment(m, 4).unwrap(), r(2 * mi * mi + 1, mi * mi));
            assert_eq!(gue_moment(m, 6).unwrap(), r(5 * mi * mi + 10, mi * mi));
            assert_eq!(gue_moment(m, 5).unwrap(), r(0, 1));
            assert_eq!(gue_moment(m, 0).unwrap(), r(1, 1));
        }
        for k in 1..=6 {
            assert_eq!(
                gue_moment(1, 2 * k).unwrap(),
                r(double_factorial_odd(k) as i128, 1)
            );
        }
        assert!(gue_moment(0, 2).is_err());
        assert!(gue_moment(2, 18).is_err());
    }

    #[test]
    fn catalan() {
        assert_eq!(catalan_limit_check(1).unwrap(), 1);
        assert_eq!(catalan_limit_check(2).unwrap(), 2);
        assert_eq!(catalan_limit_check(3).unwrap(), 5);
        assert_eq!(catalan_limit_check(5).unwrap(), 42);
    }

    #[test]
    fn f_map_examples() {
        assert_eq!(build_f_map(&TraceWord::new([2])), [1, 2]);
        assert_eq!(build_f_map(&TraceWord::new([0, 1])), [2, 1]);
        assert_eq!(build_f_map(&TraceWord::new([0, 0, 1])), [2, 3, 1]);
        assert_eq!(build_f_map(&TraceWord::new([1, 1, 1])), [1, 3, 2, 5, 6, 4]);
        assert_eq!(TraceWord::single(4).exponents(), &[0, 0, 0, 1]);
    }

    #[test]
    fn f_map_matches_closed_form() {
        // f(x) = Σ_{i≤s} iν_i + (s+1)(a-1) + 1 if x = Σ_{i≤s} iν_i + (s+1)a, else x + 1
        let word = TraceWord::new([2, 1, 0, 2]);
        let nu = word.exponents();
        let f = build_f_map(&word);
        for x in 1..=word.letter_count() {
            let mut expected = x + 1;
            let mut offset = 0;
            for (s, &count) in nu.iter().enumerate() {
                for a in 1..=count {
                    if x == offset + (s + 1) * a {
                        expected = offset + (s + 1) * (a - 1) + 1;
                    }
                }
                offset += (s + 1) * count;
            }
            assert_eq!(f[x - 1], expected, "x={x}");
        }
    }

    #[test]
    fn free_index_examples() {
        let pi = pp(&[(1, 2)]);
        assert_eq!(free_index_count(&pi, &TraceWord::new([2])).unwrap(), 1);
        assert_eq!(free_index_count(&pi, &TraceWord::new([0, 1])).unwrap(), 2);
        assert!(free_index_count(&pi, &TraceWord::new([0, 0, 1])).is_err());
    }

    #[test]
    fn mixed_trace_examples() {
        for m in 1..=5u64 {
            let mi = m as i128;
            assert_eq!(mixed_trace_gue(m, &TraceWord::new([2])).unwrap(), mi);
            assert_eq!(mixed_trace_gue(m, &TraceWord::new([0, 1])).unwrap(), mi * mi);
            assert_eq!(
                mixed_trace_gue(m, &TraceWord::single(4)).unwrap(),
                2 * mi * mi * mi + mi
            );
            assert_eq!(mixed_trace_gue(m, &TraceWord::single(3)).unwrap(), 0);
        }
        assert!(mixed_trace_gue(2, &TraceWord::single(14)).is_err());
    }

    #[test]
    fn single_trace_consistency() {
        for m in 1..=4u64 {
            for k in 1..=4usize {
                let mixed = mixed_trace_gue(m, &TraceWord::single(2 * k)).unwrap();
                let scaled = gue_moment(m, 2 * k).unwrap() * Rational::from_integer(pow_i128(m, k + 1).unwrap());
                assert_eq!(Rational::from_integer(mixed), scaled, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn goe_moments() {
        for m in 1..=6u64 {
            let mi = m as i128;
            assert_eq!(goe_moment(m, 2).unwrap(), r(mi + 1, mi));
            assert_eq!(goe_moment(m, 3).unwrap(), r(0, 1));
        }
        for k in 1..=4 {
            assert_eq!(
                goe_moment(1, 2 * k).unwrap(),
                r((1i128 << k) * double_factorial_odd(k) as i128, 1)
            );
        }
    }

    #[test]
    fn goe_fast_path_equals_brute_force() {
        for m in 1..=3u64 {
            for n in 0..=6 {
                assert_eq!(
                    goe_moment(m, n).unwrap(),
                    goe_moment_brute_force(m, n).unwrap(),
                    "m={m} n={n}"
                );
            }
        }
        assert!(goe_moment_brute_force(20, 8).is_err());
    }
}
