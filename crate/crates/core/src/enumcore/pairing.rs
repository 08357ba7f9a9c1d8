use std::collections::{BTreeSet, HashMap};
use std::sync::{Mutex, OnceLock};

/// Identifier written into trace headers.
pub const PAIRING_SCHEME_ID: &str = "greedy-cantor-cube/v1";

/// Column coding `(n, i) ↦ ⟨n, i⟩` with `⟨n, i⟩ ≥ n³`.
///
/// Pairs are visited in Cantor diagonal order `(0,0), (1,0), (0,1), (2,0),
/// (1,1), (0,2), …` (within a diagonal, `n` descends) and each receives the
/// least natural `≥ n³` not already assigned. Column 0 always takes the least
/// unused natural, so the image is all of ℕ; `unpair` is total and
/// [`PairingScheme::unpair_within`] gives the bounded view.
#[derive(Debug, Clone, Default)]
pub struct PairingScheme {
    codes: HashMap<(usize, usize), usize>,
    inverse: HashMap<usize, (usize, usize)>,
    used: BTreeSet<usize>,
    low_water: usize,
    /// Diagonals `0..diagonals` are fully assigned.
    diagonals: usize,
}

impl PairingScheme {
    pub fn new() -> Self {
        Self::default()
    }

    fn least_unused_from(&self, lo: usize) -> usize {
        let mut v = lo.max(self.low_water);
        for &u in self.used.range(v..) {
            if u != v {
                break;
            }
            v += 1;
        }
        v
    }

    fn extend_to(&mut self, diagonal: usize) {
        while self.diagonals <= diagonal {
            let d = self.diagonals;
            for n in (0..=d).rev() {
                let i = d - n;
                let code = self.least_unused_from(n.pow(3));
                self.used.insert(code);
                self.codes.insert((n, i), code);
                self.inverse.insert(code, (n, i));
                if code == self.low_water {
                    self.low_water = self.least_unused_from(code + 1);
                }
            }
            self.diagonals += 1;
        }
    }

    pub fn pair(&mut self, n: usize, i: usize) -> usize {
        self.extend_to(n + i);
        self.codes[&(n, i)]
    }

    /// Inverse of [`pair`](Self::pair). Every natural is a code, so this
    /// always succeeds; the `Option` mirrors [`unpair_within`](Self::unpair_within).
    pub fn unpair(&mut self, code: usize) -> Option<(usize, usize)> {
        // Column 0 takes the least unused natural on every diagonal, so
        // `code` is assigned by diagonal `code` at the latest.
        while !self.inverse.contains_key(&code) && self.diagonals <= code {
            self.extend_to(self.diagonals);
        }
        self.inverse.get(&code).copied()
    }

    /// `unpair` restricted to pairs with `n, i ≤ bound`.
    pub fn unpair_within(&mut self, code: usize, bound: usize) -> Option<(usize, usize)> {
        self.unpair(code).filter(|&(n, i)| n <= bound && i <= bound)
    }

    /// Largest code among `⟨n, i⟩` for `n ≤ max_n`, `i < n² + 1`.
    pub fn column_ceiling(&mut self, max_n: usize) -> usize {
        let mut best = 0;
        for n in 0..=max_n {
            for i in 0..=n * n {
                best = best.max(self.pair(n, i));
            }
        }
        best
    }
}

fn shared() -> &'static Mutex<PairingScheme> {
    static SCHEME: OnceLock<Mutex<PairingScheme>> = OnceLock::new();
    SCHEME.get_or_init(|| Mutex::new(PairingScheme::new()))
}

/// `⟨n, i⟩` under the shared greedy scheme.
pub fn pair(n: usize, i: usize) -> usize {
    shared().lock().expect("pairing lock").pair(n, i)
}

/// Inverse of [`pair`].
pub fn unpair(code: usize) -> Option<(usize, usize)> {
    shared().lock().expect("pairing lock").unpair(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent re-derivation: walk the Cantor order with a plain vector
    /// scan for the least unused value.
    fn oracle_table(max_diag: usize) -> HashMap<(usize, usize), usize> {
        let mut used: Vec<usize> = Vec::new();
        let mut out = HashMap::new();
        for d in 0..=max_diag {
            for n in (0..=d).rev() {
                let mut v = n.pow(3);
                while used.contains(&v) {
                    v += 1;
                }
                used.push(v);
                out.insert((n, d - n), v);
            }
        }
        out
    }

    #[test]
    fn frozen_values() {
        let mut p = PairingScheme::new();
        assert_eq!(p.pair(0, 0), 0);
        assert_eq!(p.pair(1, 0), 1);
        assert_eq!(p.pair(0, 1), 2);
        assert_eq!(p.pair(2, 0), 8);
        assert_eq!(p.pair(1, 1), 3);
        assert_eq!(p.pair(0, 2), 4);
        let c = p.pair(3, 2);
        assert_eq!(p.unpair(c), Some((3, 2)));
        assert_eq!(p.unpair(0), Some((0, 0)));
    }

    #[test]
    fn agrees_with_naive_oracle() {
        let table = oracle_table(40);
        let mut p = PairingScheme::new();
        for (&(n, i), &code) in &table {
            assert_eq!(p.pair(n, i), code, "pair({n},{i})");
        }
    }

    #[test]
    fn exhaustive_small_properties() {
        let mut p = PairingScheme::new();
        let mut seen = HashMap::new();
        for n in 0..=50 {
            for i in 0..=50 {
                let c = p.pair(n, i);
                assert!(c >= n.pow(3));
                assert_eq!(seen.insert(c, (n, i)), None, "collision at {c}");
                assert_eq!(p.unpair(c), Some((n, i)));
            }
        }
        // Codes ≤ 50³ outside the image of the n, i ≤ 50 box.
        let misses = (0..=50usize.pow(3))
            .filter(|c| !seen.contains_key(c))
            .take(5)
            .collect::<Vec<_>>();
        assert!(!misses.is_empty());
        for c in misses {
            assert_eq!(p.unpair_within(c, 50), None);
        }
    }

    #[test]
    fn column_census() {
        let mut p = PairingScheme::new();
        for k in 0..=30usize {
            let mut count = 0;
            for n in 0..k {
                for i in 0..=n * n {
                    if p.pair(n, i) < k.pow(3) {
                        count += 1;
                    }
                }
            }
            assert!(count <= k * k * k, "k={k} count={count}");
        }
    }

    #[test]
    fn shared_scheme_matches_local() {
        let mut p = PairingScheme::new();
        assert_eq!(pair(4, 7), p.pair(4, 7));
        assert_eq!(unpair(pair(4, 7)), Some((4, 7)));
    }
}
