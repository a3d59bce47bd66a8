//! Small finite hypothesis classes: Littlestone dimension, the Standard
//! Optimal Algorithm, and an expert cover that lets exponential weights compete
//! with the whole class.
//!
//! Hypotheses are bitmasks over a domain of at most 12 points; bit `x` is the
//! label of instance `x`. Version spaces are bitsets over hypothesis indices.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{check_cost, Error, Result};
use crate::forecaster::{Advice, ForecasterState, Outcome};

pub const MAX_DOMAIN: usize = 12;
pub const MAX_HYPOTHESES: usize = 4096;
/// Largest cover [`ExpertCover::new`] will build.
pub const MAX_COVER: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisClass {
    m: usize,
    hyps: Vec<u16>,
}

impl HypothesisClass {
    pub fn new(m: usize, hyps: Vec<u16>) -> Result<Self> {
        if m == 0 || m > MAX_DOMAIN {
            return Err(Error::Resource(format!(
                "domain size {m} outside 1..={MAX_DOMAIN}"
            )));
        }
        if hyps.is_empty() {
            return Err(Error::Construction {
                what: "hypothesis class",
                msg: "class is empty".into(),
            });
        }
        if hyps.len() > MAX_HYPOTHESES {
            return Err(Error::Resource(format!(
                "{} hypotheses exceeds {MAX_HYPOTHESES}",
                hyps.len()
            )));
        }
        let mut seen = vec![false; 1 << m];
        for &h in &hyps {
            if (h as usize) >= (1 << m) {
                return Err(Error::Construction {
                    what: "hypothesis class",
                    msg: format!("hypothesis {h:#b} labels points outside the domain"),
                });
            }
            if std::mem::replace(&mut seen[h as usize], true) {
                return Err(Error::Construction {
                    what: "hypothesis class",
                    msg: format!("duplicate hypothesis {h:#b}"),
                });
            }
        }
        Ok(HypothesisClass { m, hyps })
    }

    /// Every labeling of `m` points.
    pub fn all_functions(m: usize) -> Result<Self> {
        if m > MAX_DOMAIN {
            return Err(Error::Resource(format!(
                "domain size {m} exceeds {MAX_DOMAIN}"
            )));
        }
        Self::new(m, (0..1u32 << m).map(|h| h as u16).collect())
    }

    /// `h_k(x) = I{x >= k}` for `k = 0..=m`.
    pub fn thresholds(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_DOMAIN {
            return Err(Error::Resource(format!(
                "domain size {m} outside 1..={MAX_DOMAIN}"
            )));
        }
        let full = (1u32 << m) - 1;
        Self::new(
            m,
            (0..=m)
                .map(|k| (full & !((1u32 << k) - 1)) as u16)
                .collect(),
        )
    }

    pub fn singleton(m: usize, h: u16) -> Result<Self> {
        Self::new(m, vec![h])
    }

    pub fn domain_size(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.hyps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyps.is_empty()
    }

    pub fn hypotheses(&self) -> &[u16] {
        &self.hyps
    }

    pub fn label(&self, index: usize, x: usize) -> u8 {
        ((self.hyps[index] >> x) & 1) as u8
    }

    /// Subclass made of the hypotheses at `indices`.
    pub fn subclass(&self, indices: &[usize]) -> Result<Self> {
        Self::new(self.m, indices.iter().map(|&i| self.hyps[i]).collect())
    }

    /// Parses `# m=<m>` followed by one `m`-character 0/1 string per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = None;
        let mut hyps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let Some(m) = m else {
                let size = line
                    .strip_prefix('#')
                    .map(str::trim)
                    .and_then(|s| s.strip_prefix("m="))
                    .and_then(|s| s.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("expected header `# m=<size>`, found `{line}`"),
                    })?;
                m = Some(size);
                continue;
            };
            if line.starts_with('#') {
                continue;
            }
            if line.len() != m {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {m} labels, found {}", line.len()),
                });
            }
            let mut h = 0u16;
            for (x, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' if x < 16 => h |= 1 << x,
                    _ => {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("invalid label `{ch}`"),
                        })
                    }
                }
            }
            hyps.push(h);
        }
        let m = m.ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        Self::new(m, hyps)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# m={}\n", self.m);
        for &h in &self.hyps {
            for x in 0..self.m {
                out.push(if (h >> x) & 1 == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Set of hypothesis indices still consistent with the history.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VersionSpace(Vec<u64>);

impl VersionSpace {
    fn full(n: usize) -> Self {
        let mut words = vec![u64::MAX; n.div_ceil(64)];
        if !n.is_multiple_of(64) {
            *words.last_mut().unwrap() = (1u64 << (n % 64)) - 1;
        }
        VersionSpace(words)
    }

    pub fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.0[index / 64] >> (index % 64)) & 1 == 1
    }

    fn restrict(&self, mask: &VersionSpace, keep_ones: bool) -> Self {
        VersionSpace(
            self.0
                .iter()
                .zip(&mask.0)
                .map(|(&v, &m)| if keep_ones { v & m } else { v & !m })
                .collect(),
        )
    }
}

/// Exact Littlestone dimension and SOA predictions, memoized on version spaces.
#[derive(Clone, Debug)]
pub struct Soa {
    class: HypothesisClass,
    /// `ones[x]`: hypotheses labeling `x` with 1.
    ones: Vec<VersionSpace>,
    memo: HashMap<VersionSpace, i32>,
}

impl Soa {
    pub fn new(class: HypothesisClass) -> Self {
        let n = class.len();
        let ones = (0..class.domain_size())
            .map(|x| {
                let mut words = vec![0u64; n.div_ceil(64)];
                for i in (0..n).filter(|&i| class.label(i, x) == 1) {
                    words[i / 64] |= 1 << (i % 64);
                }
                VersionSpace(words)
            })
            .collect();
        Soa {
            class,
            ones,
            memo: HashMap::new(),
        }
    }

    pub fn class(&self) -> &HypothesisClass {
        &self.class
    }

    pub fn full_space(&self) -> VersionSpace {
        VersionSpace::full(self.class.len())
    }

    /// Hypotheses in `space` that label `x` with `y`.
    pub fn restrict(&self, space: &VersionSpace, x: usize, y: u8) -> VersionSpace {
        space.restrict(&self.ones[x], y == 1)
    }

    /// Dimension of a version space; `-1` for the empty space.
    pub fn dim(&mut self, space: &VersionSpace) -> i32 {
        match space.count() {
            0 => return -1,
            1 => return 0,
            _ => {}
        }
        if let Some(&d) = self.memo.get(space) {
            return d;
        }
        // A mistake tree of depth d needs 2^d leaves.
        let ceiling = space.count().ilog2() as i32;
        let mut best = 0;
        for x in 0..self.class.domain_size() {
            if best == ceiling {
                break;
            }
            let one = self.restrict(space, x, 1);
            let zero = self.restrict(space, x, 0);
            if one.is_empty() || zero.is_empty() {
                continue;
            }
            // The subtree under x can only beat `best` if both sides do.
            let a = self.dim(&one);
            if a < best {
                continue;
            }
            let b = self.dim(&zero);
            best = best.max(1 + a.min(b));
        }
        self.memo.insert(space.clone(), best);
        best
    }

    pub fn ldim(&mut self) -> u32 {
        let full = self.full_space();
        self.dim(&full) as u32
    }

    /// Label whose restricted version space has larger dimension, 1 on ties.
    pub fn predict_in(&mut self, space: &VersionSpace, x: usize) -> u8 {
        let one = self.restrict(space, x, 1);
        let zero = self.restrict(space, x, 0);
        if self.dim(&one) >= self.dim(&zero) {
            1
        } else {
            0
        }
    }

    /// SOA prediction after `history` of `(instance, label)` pairs.
    pub fn predict(&mut self, history: &[(usize, u8)], x: usize) -> Result<u8> {
        self.check_instance(x)?;
        let mut space = self.full_space();
        for &(xi, yi) in history {
            self.check_instance(xi)?;
            space = self.restrict(&space, xi, yi);
        }
        if space.is_empty() {
            return Err(Error::Unrealizable);
        }
        Ok(self.predict_in(&space, x))
    }

    fn check_instance(&self, x: usize) -> Result<()> {
        if x < self.class.domain_size() {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "instance index",
                value: x as f64,
            })
        }
    }
}

pub fn ldim(class: &HypothesisClass) -> u32 {
    Soa::new(class.clone()).ldim()
}

pub fn soa_predict(class: &HypothesisClass, history: &[(usize, u8)], x: usize) -> Result<u8> {
    Soa::new(class.clone()).predict(history, x)
}

/// `sum_{i <= l} C(t, i)`, saturating.
pub fn cover_size_bound(horizon: usize, l: u32) -> u64 {
    let mut total = 0u64;
    let mut binom = 1u64;
    for i in 0..=(l as usize).min(horizon) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul((horizon - i) as u64) / (i as u64 + 1);
    }
    total
}

/// Experts indexed by sets of rounds `S`, `|S| <= ldim`. Expert `S` runs SOA on
/// its own predictions as if they were the labels, flipping SOA's output at
/// the rounds in `S`. Once its version space empties it predicts 1.
#[derive(Clone, Debug)]
pub struct ExpertCover {
    soa: Soa,
    horizon: usize,
    ldim: u32,
    flips: Vec<Vec<usize>>,
}

impl ExpertCover {
    pub fn new(class: HypothesisClass, horizon: usize) -> Result<Self> {
        let mut soa = Soa::new(class);
        let l = soa.ldim();
        let size = cover_size_bound(horizon, l);
        if size > MAX_COVER as u64 {
            return Err(Error::Resource(format!(
                "cover of {size} experts exceeds {MAX_COVER}"
            )));
        }
        let mut flips = Vec::with_capacity(size as usize);
        let mut current = Vec::new();
        subsets(horizon, l as usize, 0, &mut current, &mut flips);
        Ok(ExpertCover {
            soa,
            horizon,
            ldim: l,
            flips,
        })
    }

    pub fn len(&self) -> usize {
        self.flips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flips.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn ldim(&self) -> u32 {
        self.ldim
    }

    pub fn class(&self) -> &HypothesisClass {
        self.soa.class()
    }

    /// Rounds (0-based) at which expert `index` contradicts SOA.
    pub fn flips(&self, index: usize) -> &[usize] {
        &self.flips[index]
    }

    /// Predictions of expert `index` on an instance sequence of length at most
    /// the horizon.
    pub fn expert_predictions(&mut self, index: usize, xs: &[usize]) -> Result<Vec<u8>> {
        self.check_sequence(xs)?;
        let flips = &self.flips[index];
        let mut space = self.soa.full_space();
        let mut out = Vec::with_capacity(xs.len());
        for (t, &x) in xs.iter().enumerate() {
            let y = if space.is_empty() {
                1
            } else {
                let b = self.soa.predict_in(&space, x);
                if flips.binary_search(&t).is_ok() {
                    1 - b
                } else {
                    b
                }
            };
            if !space.is_empty() {
                space = self.soa.restrict(&space, x, y);
            }
            out.push(y);
        }
        Ok(out)
    }

    /// Advice vectors for every round: `advice[t][i]` is expert `i`'s prediction.
    pub fn advice(&mut self, xs: &[usize]) -> Result<Vec<Advice>> {
        let per_expert = (0..self.len())
            .map(|i| self.expert_predictions(i, xs))
            .collect::<Result<Vec<_>>>()?;
        (0..xs.len())
            .map(|t| Advice::new(per_expert.iter().map(|p| p[t]).collect()))
            .collect()
    }

    fn check_sequence(&self, xs: &[usize]) -> Result<()> {
        if xs.len() > self.horizon {
            return Err(Error::Shape {
                expected: self.horizon,
                got: xs.len(),
            });
        }
        match xs.iter().find(|&&x| x >= self.class().domain_size()) {
            Some(&x) => Err(Error::Domain {
                what: "instance index",
                value: x as f64,
            }),
            None => Ok(()),
        }
    }
}

fn subsets(
    t: usize,
    max: usize,
    start: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    out.push(current.clone());
    if current.len() == max {
        return;
    }
    for r in start..t {
        current.push(r);
        subsets(t, max, r + 1, current, out);
        current.pop();
    }
}

pub fn expert_cover(class: &HypothesisClass, horizon: usize) -> Result<ExpertCover> {
    ExpertCover::new(class.clone(), horizon)
}

/// `min(L ln(eT/L) / (2(1-2c)), sqrt(L T ln(eT/L) / 2))`; zero when `L = 0`.
pub fn littlestone_regret_bound(l: u32, horizon: usize, c: f64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let l = l as f64;
    let log_term = l * (std::f64::consts::E * horizon as f64 / l).ln();
    let slow = (horizon as f64 * log_term / 2.0).sqrt();
    let margin = 1.0 - 2.0 * c;
    if margin > 0.0 {
        (log_term / (2.0 * margin)).min(slow)
    } else {
        slow
    }
}

/// Exact-expectation result of running the forecaster over a cover.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverRun {
    pub expected_loss: f64,
    pub best_expert_loss: u64,
    pub best_hypothesis_loss: u64,
    pub eta: f64,
}

impl CoverRun {
    /// Regret against the best hypothesis of the class.
    pub fn regret(&self) -> f64 {
        self.expected_loss - self.best_hypothesis_loss as f64
    }
}

/// Runs the abstaining forecaster with the cover as its experts on the labeled
/// sequence `(xs, ys)` and tallies exact expected losses.
pub fn run_on_cover(
    cover: &mut ExpertCover,
    xs: &[usize],
    ys: &[u8],
    c: f64,
    eta: f64,
) -> Result<CoverRun> {
    check_cost(c)?;
    if xs.len() != ys.len() {
        return Err(Error::Shape {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let advice = cover.advice(xs)?;
    run_on_advice(cover.class(), &advice, xs, ys, c, eta)
}

/// Same as [`run_on_cover`] with the cover's advice already computed.
pub fn run_on_advice(
    class: &HypothesisClass,
    advice: &[Advice],
    xs: &[usize],
    ys: &[u8],
    c: f64,
    eta: f64,
) -> Result<CoverRun> {
    let n = advice.first().map_or(1, Advice::len);
    let mut state = ForecasterState::new(n, eta)?;
    let mut expected = 0.0;
    for (a, &y) in advice.iter().zip(ys) {
        let y = Outcome::new(y)?;
        let policy = state.predict(a)?.policy;
        let wrong = (policy.k_star != y) as u8 as f64;
        expected += policy.alpha * c + (1.0 - policy.alpha) * wrong;
        state.update(a, y)?;
    }
    let best_expert_loss = state.cum_losses().iter().copied().min().unwrap_or(0);
    let best_hypothesis_loss = (0..class.len())
        .map(|i| {
            xs.iter()
                .zip(ys)
                .filter(|&(&x, &y)| class.label(i, x) != y)
                .count() as u64
        })
        .min()
        .unwrap_or(0);
    Ok(CoverRun {
        expected_loss: expected,
        best_expert_loss,
        best_hypothesis_loss,
        eta,
    })
}

/// Describes the cover as text: one line per expert listing its flip rounds.
pub fn describe_cover(cover: &ExpertCover) -> String {
    let mut out = format!(
        "# experts={} T={} L={}\n",
        cover.len(),
        cover.horizon(),
        cover.ldim()
    );
    for i in 0..cover.len() {
        let rounds: Vec<String> = cover.flips(i).iter().map(|r| (r + 1).to_string()).collect();
        let _ = writeln!(out, "{i}: {{{}}}", rounds.join(","));
    }
    out
}
