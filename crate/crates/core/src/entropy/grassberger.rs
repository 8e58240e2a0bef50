//! Match-length entropy-rate estimation.
//!
//! For position `i` (1-based) the match length `Λ_i` is the length of the
//! shortest substring starting at `i` that does not occur inside
//! `s[1..i-1]`. When the whole remaining suffix occurs, the convention is
//! `Λ_i = N - i + 2`. The longest-match part is found by walking an
//! online suffix automaton of the prefix, so the cost is linear in the
//! sequence length plus the total match length.

/// Online suffix automaton over `u32` symbols.
#[derive(Debug, Clone)]
pub struct SuffixAutomaton {
    len: Vec<u32>,
    link: Vec<i32>,
    next: Vec<Vec<(u32, u32)>>,
    last: u32,
}

impl Default for SuffixAutomaton {
    fn default() -> Self {
        Self::new()
    }
}

impl SuffixAutomaton {
    pub fn new() -> Self {
        SuffixAutomaton {
            len: vec![0],
            link: vec![-1],
            next: vec![Vec::new()],
            last: 0,
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        let mut sa = Self::new();
        sa.len.reserve(2 * n);
        sa.link.reserve(2 * n);
        sa.next.reserve(2 * n);
        sa
    }

    fn go(&self, state: u32, c: u32) -> Option<u32> {
        self.next[state as usize]
            .iter()
            .find(|(k, _)| *k == c)
            .map(|&(_, t)| t)
    }

    fn set(&mut self, state: u32, c: u32, target: u32) {
        let edges = &mut self.next[state as usize];
        match edges.iter_mut().find(|(k, _)| *k == c) {
            Some(e) => e.1 = target,
            None => edges.push((c, target)),
        }
    }

    fn new_state(&mut self, len: u32, link: i32, next: Vec<(u32, u32)>) -> u32 {
        self.len.push(len);
        self.link.push(link);
        self.next.push(next);
        (self.len.len() - 1) as u32
    }

    /// Appends one symbol to the indexed text.
    pub fn extend(&mut self, c: u32) {
        let cur = self.new_state(self.len[self.last as usize] + 1, 0, Vec::new());
        let mut p = self.last as i32;
        while p >= 0 && self.go(p as u32, c).is_none() {
            self.set(p as u32, c, cur);
            p = self.link[p as usize];
        }
        if p >= 0 {
            let q = self.go(p as u32, c).expect("transition exists");
            if self.len[p as usize] + 1 == self.len[q as usize] {
                self.link[cur as usize] = q as i32;
            } else {
                let clone = self.new_state(
                    self.len[p as usize] + 1,
                    self.link[q as usize],
                    self.next[q as usize].clone(),
                );
                while p >= 0 && self.go(p as u32, c) == Some(q) {
                    self.set(p as u32, c, clone);
                    p = self.link[p as usize];
                }
                self.link[q as usize] = clone as i32;
                self.link[cur as usize] = clone as i32;
            }
        }
        self.last = cur;
    }

    /// Length of the longest prefix of `pattern` that occurs in the text.
    pub fn longest_prefix_match(&self, pattern: &[u32]) -> usize {
        let mut state = 0u32;
        for (n, &c) in pattern.iter().enumerate() {
            match self.go(state, c) {
                Some(t) => state = t,
                None => return n,
            }
        }
        pattern.len()
    }
}

/// Longest-match lengths `L_i` for `i = 2..=N` (returned 0-based, so
/// element 0 belongs to `i = 2`): the longest prefix of `s[i..N]` that
/// occurs within `s[1..i-1]`.
pub fn match_lengths(seq: &[u32]) -> Vec<usize> {
    let n = seq.len();
    if n < 2 {
        return Vec::new();
    }
    let mut sa = SuffixAutomaton::with_capacity(n);
    let mut out = Vec::with_capacity(n - 1);
    sa.extend(seq[0]);
    for i in 1..n {
        out.push(sa.longest_prefix_match(&seq[i..]));
        sa.extend(seq[i]);
    }
    out
}

/// `Λ_i` for `i = 2..=N` (0-based output, element 0 is `Λ_2`).
pub fn lambdas(seq: &[u32]) -> Vec<usize> {
    match_lengths(seq).into_iter().map(|l| l + 1).collect()
}

/// `(1/N · Σ_{i=2..N} Λ_i / log2 i)^-1` from precomputed `Λ` values.
pub fn estimate_from_lambdas(lambdas: &[usize]) -> f64 {
    let n = lambdas.len() + 1;
    let sum: f64 = lambdas
        .iter()
        .enumerate()
        .map(|(k, &l)| l as f64 / ((k + 2) as f64).log2())
        .sum();
    n as f64 / sum
}

/// Estimates over every prefix `S[1..p]`, `p = 1..=N`. The prefix value
/// reuses the full-sequence match lengths, since the match inside a prefix
/// is the full match truncated at the prefix end. `p = 1` reports 0.
pub fn prefix_estimates(seq: &[u32]) -> Vec<f64> {
    let ml = match_lengths(seq);
    let mut out = Vec::with_capacity(seq.len());
    if seq.is_empty() {
        return out;
    }
    out.push(0.0);
    let inv_log: Vec<f64> = (0..ml.len())
        .map(|k| 1.0 / ((k + 2) as f64).log2())
        .collect();
    for p in 2..=seq.len() {
        let mut sum = 0.0;
        for i in 2..=p {
            let lambda = ml[i - 2].min(p - i + 1) + 1;
            sum += lambda as f64 * inv_log[i - 2];
        }
        out.push(p as f64 / sum);
    }
    out
}
