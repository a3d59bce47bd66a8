//! Exponentially weighted forecaster with a randomized abstention rule.
//!
//! Each round the forecaster turns its posterior over experts into a mean
//! prediction `p`, then abstains with probability `2 (1 - max(p, 1 - p))` and
//! otherwise outputs the more likely label. For a fixed abstention cost `c`,
//! any learning rate `eta <= 2 (1 - 2c)` keeps the expected loss of every round
//! below the mix loss, so regret never exceeds `ln N / eta`.
//!
//! Weights are never stored. The state keeps integer cumulative losses and the
//! posterior is recomputed from them in the log domain.

use rand::Rng;

use crate::error::{check_cost, check_eta, domain, Error, Result};

/// A binary label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome(u8);

impl Outcome {
    pub const ZERO: Outcome = Outcome(0);
    pub const ONE: Outcome = Outcome(1);

    pub fn new(label: u8) -> Result<Self> {
        match label {
            0 | 1 => Ok(Outcome(label)),
            other => Err(domain("binary label", other as f64)),
        }
    }

    pub fn label(self) -> u8 {
        self.0
    }

    pub fn flipped(self) -> Self {
        Outcome(1 - self.0)
    }
}

/// Predictions of the `N` experts for one round.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Advice(Vec<u8>);

impl Advice {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Shape {
                expected: 1,
                got: 0,
            });
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(domain("expert prediction", b as f64));
        }
        Ok(Advice(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The learner's action: a label or `*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Decision {
    Zero,
    One,
    Abstain,
}

impl Decision {
    pub fn predict(label: Outcome) -> Self {
        if label == Outcome::ONE {
            Decision::One
        } else {
            Decision::Zero
        }
    }

    /// Loss suffered when the true label is `y` and abstaining costs `c`.
    pub fn loss(self, y: Outcome, c: f64) -> f64 {
        match self {
            Decision::Abstain => c,
            Decision::Zero => (y != Outcome::ZERO) as u8 as f64,
            Decision::One => (y != Outcome::ONE) as u8 as f64,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Decision::Zero => "0",
            Decision::One => "1",
            Decision::Abstain => "*",
        }
    }
}

/// Normalized exponential weights over the experts.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    probs: Vec<f64>,
}

impl Posterior {
    /// Wraps an explicit distribution. Entries must be nonnegative and sum to one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Shape {
                expected: 1,
                got: 0,
            });
        }
        if let Some(&q) = probs.iter().find(|q| q.is_nan() || **q < 0.0) {
            return Err(domain("posterior mass", q));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain("posterior total mass", total));
        }
        Ok(Posterior { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Posterior mass of the experts whose flag is set.
    pub(crate) fn mass_where(&self, mut flag: impl FnMut(usize) -> bool) -> f64 {
        let mut hit = 0.0;
        let mut total = 0.0;
        for (i, &q) in self.probs.iter().enumerate() {
            total += q;
            if flag(i) {
                hit += q;
            }
        }
        // Dividing by the realized total makes the all-flagged case exactly 1.
        if hit == total {
            1.0
        } else {
            hit / total
        }
    }
}

/// Softmax of `-eta * cum_losses`, evaluated with the minimum loss subtracted.
pub fn posterior_from_losses(cum_losses: &[u64], eta: f64) -> Posterior {
    let best = cum_losses.iter().copied().min().unwrap_or(0);
    let mut probs: Vec<f64> = cum_losses
        .iter()
        .map(|&l| (-eta * (l - best) as f64).exp())
        .collect();
    let total: f64 = probs.iter().sum();
    for q in &mut probs {
        *q /= total;
    }
    Posterior { probs }
}

/// The randomized decision rule derived from a mean prediction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionPolicy {
    pub p: f64,
    pub p_star: f64,
    pub k_star: Outcome,
    pub alpha: f64,
}

/// Per-round quantities used by every regret check.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcomeStats {
    /// Misclassification probability of the plain exponentially weighted forecaster.
    pub r: f64,
    pub mix_loss: f64,
    /// Conditional expectation of the learner's loss given the history.
    pub expected_loss: f64,
    pub realized_loss: f64,
    /// Expert losses of this round.
    pub losses: Vec<u8>,
}

/// Cumulative expert losses plus the learning rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecasterState {
    cum_losses: Vec<u64>,
    eta: f64,
    round: u64,
}

/// Everything the forecaster commits to before the label is revealed.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub posterior: Posterior,
    pub policy: DecisionPolicy,
}

impl Prediction {
    /// Fills the round statistics once the label is known.
    pub fn settle(
        &self,
        advice: &Advice,
        y: Outcome,
        c: f64,
        eta: f64,
        decision: Decision,
    ) -> Result<RoundOutcomeStats> {
        check_cost(c)?;
        let losses = binary_losses(advice, y);
        let r = misclass_prob(&self.posterior, advice, y)?;
        let mix = mix_loss(&self.posterior, &losses, eta)?;
        let policy = &self.policy;
        let wrong = (policy.k_star != y) as u8 as f64;
        let expected_loss = policy.alpha * c + (1.0 - policy.alpha) * wrong;
        Ok(RoundOutcomeStats {
            r,
            mix_loss: mix,
            expected_loss,
            realized_loss: decision.loss(y, c),
            losses,
        })
    }
}

impl ForecasterState {
    /// Uniform prior over `n` experts.
    pub fn new(n: usize, eta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape {
                expected: 1,
                got: 0,
            });
        }
        check_eta(eta)?;
        Ok(ForecasterState {
            cum_losses: vec![0; n],
            eta,
            round: 0,
        })
    }

    pub fn from_parts(cum_losses: Vec<u64>, eta: f64, round: u64) -> Result<Self> {
        if cum_losses.is_empty() {
            return Err(Error::Shape {
                expected: 1,
                got: 0,
            });
        }
        check_eta(eta)?;
        if let Some(&l) = cum_losses.iter().find(|&&l| l > round) {
            return Err(domain("cumulative loss above round count", l as f64));
        }
        Ok(ForecasterState {
            cum_losses,
            eta,
            round,
        })
    }

    pub fn cum_losses(&self) -> &[u64] {
        &self.cum_losses
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn n_experts(&self) -> usize {
        self.cum_losses.len()
    }

    pub(crate) fn set_eta(&mut self, eta: f64) {
        debug_assert!(eta > 0.0);
        self.eta = eta;
    }

    pub fn posterior(&self) -> Posterior {
        posterior(self)
    }

    pub fn predict(&self, advice: &Advice) -> Result<Prediction> {
        let posterior = self.posterior();
        let p = aggregate(&posterior, advice)?;
        let policy = decision_policy(p)?;
        Ok(Prediction { posterior, policy })
    }

    /// Charges this round's expert losses. Independent of the learner's decision.
    pub fn update(&mut self, advice: &Advice, y: Outcome) -> Result<Vec<u8>> {
        self.check_len(advice.len())?;
        let losses = binary_losses(advice, y);
        self.charge(&losses)?;
        Ok(losses)
    }

    /// Adds one round of 0/1 expert losses.
    pub fn charge(&mut self, losses: &[u8]) -> Result<()> {
        self.check_len(losses.len())?;
        if let Some(&l) = losses.iter().find(|&&l| l > 1) {
            return Err(domain("binary loss", l as f64));
        }
        for (acc, &l) in self.cum_losses.iter_mut().zip(losses) {
            *acc += l as u64;
        }
        self.round += 1;
        Ok(())
    }

    /// One full round: predict, sample, settle and update.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        advice: &Advice,
        y: Outcome,
        c: f64,
        rng: &mut R,
    ) -> Result<(Decision, RoundOutcomeStats)> {
        check_cost(c)?;
        let prediction = self.predict(advice)?;
        let decision = sample_decision(&prediction.policy, rng);
        let stats = prediction.settle(advice, y, c, self.eta, decision)?;
        self.update(advice, y)?;
        Ok((decision, stats))
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got == self.cum_losses.len() {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: self.cum_losses.len(),
                got,
            })
        }
    }
}

pub fn posterior(state: &ForecasterState) -> Posterior {
    posterior_from_losses(&state.cum_losses, state.eta)
}

/// Mean prediction `p = sum_i q_i y_i`.
pub fn aggregate(post: &Posterior, advice: &Advice) -> Result<f64> {
    if post.len() != advice.len() {
        return Err(Error::Shape {
            expected: post.len(),
            got: advice.len(),
        });
    }
    let bits = advice.bits();
    Ok(post.mass_where(|i| bits[i] == 1))
}

pub fn decision_policy(p: f64) -> Result<DecisionPolicy> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain("mean prediction", p));
    }
    let p_star = p.max(1.0 - p);
    let k_star = if p >= 0.5 {
        Outcome::ONE
    } else {
        Outcome::ZERO
    };
    let alpha = (2.0 * (1.0 - p_star)).clamp(0.0, 1.0);
    Ok(DecisionPolicy {
        p,
        p_star,
        k_star,
        alpha,
    })
}

/// Abstains when a uniform draw falls below `alpha`, otherwise predicts `k_star`.
pub fn sample_decision<R: Rng + ?Sized>(policy: &DecisionPolicy, rng: &mut R) -> Decision {
    let u: f64 = rng.gen();
    if u < policy.alpha {
        Decision::Abstain
    } else {
        Decision::predict(policy.k_star)
    }
}

pub fn binary_losses(advice: &Advice, y: Outcome) -> Vec<u8> {
    advice
        .bits()
        .iter()
        .map(|&b| (b != y.label()) as u8)
        .collect()
}

/// Posterior mass on experts that got the label wrong.
pub fn misclass_prob(post: &Posterior, advice: &Advice, y: Outcome) -> Result<f64> {
    if post.len() != advice.len() {
        return Err(Error::Shape {
            expected: post.len(),
            got: advice.len(),
        });
    }
    let bits = advice.bits();
    Ok(post.mass_where(|i| bits[i] != y.label()))
}

/// Mix loss `-(1/eta) ln sum_i q_i exp(-eta l_i)` for binary expert losses.
pub fn mix_loss(post: &Posterior, losses: &[u8], eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if post.len() != losses.len() {
        return Err(Error::Shape {
            expected: post.len(),
            got: losses.len(),
        });
    }
    if let Some(&l) = losses.iter().find(|&&l| l > 1) {
        return Err(domain("binary loss", l as f64));
    }
    let r = post.mass_where(|i| losses[i] == 1);
    f_function(r, eta)
}

/// Exact one-round expected loss of the abstaining rule when the plain
/// forecaster errs with probability `r`.
pub fn expected_abstain_loss(r: f64, c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(domain("misclassification probability", r));
    }
    check_cost(c)?;
    Ok(r - (1.0 - 2.0 * c) * r.min(1.0 - r))
}

/// Mix loss as a function of the misclassification probability.
pub fn f_function(r: f64, eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(domain("misclassification probability", r));
    }
    check_eta(eta)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    if r == 1.0 {
        return Ok(1.0);
    }
    Ok(-(r * (-eta).exp_m1()).ln_1p() / eta)
}

/// Alias of [`expected_abstain_loss`].
pub fn g_function(r: f64, c: f64) -> Result<f64> {
    expected_abstain_loss(r, c)
}

/// Pure form of [`ForecasterState::step`].
pub fn step<R: Rng + ?Sized>(
    state: &ForecasterState,
    advice: &Advice,
    y: Outcome,
    c: f64,
    rng: &mut R,
) -> Result<(Decision, RoundOutcomeStats, ForecasterState)> {
    let mut next = state.clone();
    let (decision, stats) = next.step(advice, y, c, rng)?;
    Ok((decision, stats, next))
}

/// `max(2 (1 - 2c), sqrt(8 ln N / T))`.
///
/// With a single expert and `c = 1/2` both terms vanish; any rate is optimal
/// there and `1.0` is returned.
pub fn tuned_eta(n: usize, horizon: usize, c: f64) -> f64 {
    let fast = 2.0 * (1.0 - 2.0 * c);
    let slow = (8.0 * (n.max(1) as f64).ln() / horizon.max(1) as f64).sqrt();
    let eta = fast.max(slow);
    if eta > 0.0 {
        eta
    } else {
        1.0
    }
}

/// Largest rate for which `g(r, c) <= f(r, eta)` on all of `[0, 1]`.
///
/// Both functions are convex and meet at `r = 0` and `r = 1`, so dominance
/// holds exactly when `(1 - e^-eta)/eta >= 2c` and `(e^eta - 1)/eta <= 2(1-c)`.
/// Both left sides are monotone in `eta`; the boundary is found by bisection.
/// This rate is strictly below `2(1 - 2c)` for every `c < 1/2`; zero at `c = 1/2`.
pub fn exact_mixable_rate(c: f64) -> Result<f64> {
    check_cost(c)?;
    let ok = |eta: f64| {
        let lo = -(-eta).exp_m1() / eta;
        let hi = eta.exp_m1() / eta;
        lo >= 2.0 * c && hi <= 2.0 * (1.0 - c)
    };
    // (e^eta - 1)/eta > 1 for every eta > 0.
    if c == 0.5 {
        return Ok(0.0);
    }
    let (mut a, mut b) = (0.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if ok(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a)
}

/// Regret guarantee with [`tuned_eta`]: `min(ln N / (2(1-2c)), sqrt(T ln N / 2))`.
pub fn tuned_regret_bound(n: usize, horizon: usize, c: f64) -> f64 {
    let ln_n = (n as f64).ln();
    let slow = (horizon as f64 * ln_n / 2.0).sqrt();
    let margin = 1.0 - 2.0 * c;
    if margin > 0.0 {
        (ln_n / (2.0 * margin)).min(slow)
    } else {
        slow
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn adv(bits: &[u8]) -> Advice {
        Advice::new(bits.to_vec()).unwrap()
    }

    fn post(p: &[f64]) -> Posterior {
        Posterior::new(p.to_vec()).unwrap()
    }

    #[test]
    fn posterior_examples() {
        let s = ForecasterState::new(2, 1.0).unwrap();
        assert_eq!(s.posterior().probs(), &[0.5, 0.5]);

        let s = ForecasterState::from_parts(vec![0, 1], 1.0, 1).unwrap();
        let q = s.posterior();
        assert!((q.probs()[0] - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((q.probs()[1] - 0.268_941_421_369_995_1).abs() < 1e-15);

        let s = ForecasterState::from_parts(vec![0, 1_000_000], 0.5, 1_000_000).unwrap();
        let q = s.posterior();
        assert_eq!(q.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn posterior_survives_huge_losses() {
        let s = ForecasterState::from_parts(vec![1_000_000, 1_000_001], 1.0, 2_000_000).unwrap();
        let q = s.posterior();
        assert!((q.probs()[0] - 0.731_058_578_630_004_9).abs() < 1e-15);
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&post(&[0.5, 0.5]), &adv(&[0, 1])).unwrap(), 0.5);
        assert_eq!(aggregate(&post(&[1.0, 0.0]), &adv(&[1, 0])).unwrap(), 1.0);
        let q = posterior_from_losses(&[0, 1], 1.0);
        let p = aggregate(&q, &adv(&[1, 0])).unwrap();
        assert!((p - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!(matches!(
            aggregate(&post(&[1.0]), &adv(&[1, 0])),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn decision_policy_examples() {
        let d = decision_policy(0.5).unwrap();
        assert_eq!((d.p_star, d.k_star, d.alpha), (0.5, Outcome::ONE, 1.0));
        let d = decision_policy(1.0).unwrap();
        assert_eq!((d.p_star, d.k_star, d.alpha), (1.0, Outcome::ONE, 0.0));
        let d = decision_policy(0.75).unwrap();
        assert_eq!((d.p_star, d.k_star, d.alpha), (0.75, Outcome::ONE, 0.5));
        let d = decision_policy(0.0).unwrap();
        assert_eq!((d.k_star, d.alpha), (Outcome::ZERO, 0.0));
        assert!(decision_policy(1.5).is_err());
        assert!(decision_policy(-0.1).is_err());
        assert!(decision_policy(f64::NAN).is_err());
    }

    #[test]
    fn sample_decision_extremes_and_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sure = decision_policy(0.0).unwrap();
        let never = decision_policy(0.5).unwrap();
        for _ in 0..1000 {
            assert_eq!(sample_decision(&sure, &mut rng), Decision::Zero);
            assert_eq!(sample_decision(&never, &mut rng), Decision::Abstain);
        }
        // Binomial(10^6, 1/2): 3e-3 is six standard deviations.
        let half = decision_policy(0.75).unwrap();
        let draws = 1_000_000;
        let abstained = (0..draws)
            .filter(|_| sample_decision(&half, &mut rng) == Decision::Abstain)
            .count();
        let frac = abstained as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 3e-3, "{frac}");
    }

    #[test]
    fn binary_losses_examples() {
        assert_eq!(binary_losses(&adv(&[0, 1]), Outcome::ONE), vec![1, 0]);
        assert_eq!(binary_losses(&adv(&[1, 1]), Outcome::ONE), vec![0, 0]);
        assert_eq!(
            binary_losses(&adv(&[0, 0, 1]), Outcome::ZERO),
            vec![0, 0, 1]
        );
    }

    #[test]
    fn misclass_prob_examples() {
        let r = misclass_prob(&post(&[0.5, 0.5]), &adv(&[0, 1]), Outcome::ONE).unwrap();
        assert_eq!(r, 0.5);
        let r = misclass_prob(&post(&[1.0, 0.0]), &adv(&[0, 1]), Outcome::ONE).unwrap();
        assert_eq!(r, 1.0);
        let r = misclass_prob(&post(&[0.2, 0.3, 0.5]), &adv(&[1, 0, 1]), Outcome::ONE).unwrap();
        assert!((r - 0.3).abs() < 1e-15);
    }

    #[test]
    fn mix_loss_examples() {
        let q = post(&[0.2, 0.3, 0.5]);
        for eta in [0.1, 1.0, 3.0] {
            assert_eq!(mix_loss(&q, &[0, 0, 0], eta).unwrap(), 0.0);
            assert_eq!(mix_loss(&q, &[1, 1, 1], eta).unwrap(), 1.0);
            assert_eq!(mix_loss(&post(&[1.0, 0.0]), &[0, 1], eta).unwrap(), 0.0);
        }
        let m = mix_loss(&post(&[0.5, 0.5]), &[0, 1], 1.0).unwrap();
        assert!((m - 0.379_885_493_041_722_5).abs() < 1e-15);
        assert!(mix_loss(&q, &[0, 1, 0], 0.0).is_err());
        assert!(mix_loss(&q, &[0, 1], 1.0).is_err());
    }

    #[test]
    fn mix_loss_matches_log_sum_exp() {
        let q = post(&[0.1, 0.25, 0.4, 0.25]);
        let losses = [1, 0, 1, 0];
        for eta in [0.05, 0.4, 1.0, 2.5] {
            let direct = -(q
                .probs()
                .iter()
                .zip(&losses)
                .map(|(q, &l)| q * (-eta * l as f64).exp())
                .sum::<f64>())
            .ln()
                / eta;
            let m = mix_loss(&q, &losses, eta).unwrap();
            assert!((m - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_mixable_rate_is_tight() {
        // (e^eta - 1)/eta = 1.5 at eta = 0.7626885608... for c = 1/4.
        let eta = exact_mixable_rate(0.25).unwrap();
        assert!((eta - 0.762_688_560_850_339).abs() < 1e-9, "{eta}");
        assert_eq!(exact_mixable_rate(0.5).unwrap(), 0.0);
        for c in [0.0, 0.1, 0.3, 0.45] {
            let eta = exact_mixable_rate(c).unwrap();
            assert!(eta < 2.0 * (1.0 - 2.0 * c));
            for i in 0..=1000 {
                let r = i as f64 / 1000.0;
                assert!(g_function(r, c).unwrap() <= f_function(r, eta).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn stated_rate_is_not_mixable_near_one() {
        // g(0.9) = 0.85 > f(0.9) = 0.8412... at c = 1/4, eta = 1.
        let g = g_function(0.9, 0.25).unwrap();
        let f = f_function(0.9, 1.0).unwrap();
        assert!((g - 0.85).abs() < 1e-15);
        assert!(g - f > 8e-3, "{}", g - f);
    }

    #[test]
    fn g_examples() {
        for c in [0.0, 0.2, 0.5] {
            assert_eq!(expected_abstain_loss(0.0, c).unwrap(), 0.0);
        }
        assert!((expected_abstain_loss(0.5, 0.4).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(expected_abstain_loss(1.0, 0.25).unwrap(), 1.0);
        assert!(expected_abstain_loss(1.2, 0.25).is_err());
        assert!(expected_abstain_loss(0.2, 0.6).is_err());
    }

    #[test]
    fn f_endpoints_and_derivatives() {
        for eta in [0.01, 0.4, 1.0, 2.0] {
            assert_eq!(f_function(0.0, eta).unwrap(), 0.0);
            assert_eq!(f_function(1.0, eta).unwrap(), 1.0);
        }
        let h = 1e-6;
        let eta = 0.4;
        let fd0 = (f_function(h, eta).unwrap() - f_function(0.0, eta).unwrap()) / h;
        assert!((fd0 - 0.824_199_884_910_901_7).abs() < 1e-5);
        let fd1 = (f_function(1.0, eta).unwrap() - f_function(1.0 - h, eta).unwrap()) / h;
        assert!((fd1 - eta.exp_m1() / eta).abs() < 1e-5);
        let c = 0.3;
        let gd0 = (g_function(h, c).unwrap() - g_function(0.0, c).unwrap()) / h;
        let gd1 = (g_function(1.0, c).unwrap() - g_function(1.0 - h, c).unwrap()) / h;
        assert!((gd0 - 2.0 * c).abs() < 1e-5);
        assert!((gd1 - 2.0 * (1.0 - c)).abs() < 1e-5);
    }

    #[test]
    fn expected_loss_matches_g_of_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = ForecasterState::new(5, 0.7).unwrap();
        for t in 0..200u32 {
            let bits: Vec<u8> = (0..5).map(|i| ((t * (i + 1) + i) % 3 == 0) as u8).collect();
            let y = Outcome::new((t % 2) as u8).unwrap();
            let (_, st) = s.step(&adv(&bits), y, 0.35, &mut rng).unwrap();
            let g = g_function(st.r, 0.35).unwrap();
            assert!((st.expected_loss - g).abs() < 1e-12);
        }
    }

    #[test]
    fn step_single_expert_always_correct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = ForecasterState::new(1, 1.0).unwrap();
        for t in 0..50 {
            let y = Outcome::new(t % 2).unwrap();
            let (d, st) = s.step(&adv(&[y.label()]), y, 0.3, &mut rng).unwrap();
            assert_eq!(st.expected_loss, 0.0);
            assert_eq!(d, Decision::predict(y));
        }
        assert_eq!(s.cum_losses(), &[0]);
    }

    #[test]
    fn step_alternating_constant_experts_within_bound() {
        let c = 0.4;
        let eta = 2.0 * (1.0 - 2.0 * c);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = ForecasterState::new(2, eta).unwrap();
        let mut total = 0.0;
        for t in 0..100 {
            let y = Outcome::new((t % 2) as u8).unwrap();
            let (_, st) = s.step(&adv(&[0, 1]), y, c, &mut rng).unwrap();
            total += st.expected_loss;
        }
        let best = *s.cum_losses().iter().min().unwrap() as f64;
        assert!(total - best <= 2f64.ln() / eta);
        assert!((2f64.ln() / eta - 1.732_867_951_399_863).abs() < 1e-12);
    }

    #[test]
    fn first_round_stats() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = ForecasterState::new(2, 0.4).unwrap();
        let (_, st, next) = step(&s, &adv(&[0, 1]), Outcome::ONE, 0.4, &mut rng).unwrap();
        assert!((st.expected_loss - 0.4).abs() < 1e-15);
        assert!((st.mix_loss - 0.450_329_820_399_981_7).abs() < 1e-14);
        assert!(st.mix_loss >= st.expected_loss);
        assert_eq!(next.cum_losses(), &[1, 0]);
        assert_eq!(next.round(), 1);
        assert_eq!(s.round(), 0);
    }

    #[test]
    fn tuned_eta_examples() {
        // At c = 1/2 only the slow branch remains.
        let slow = (8.0 * 2f64.ln() / 5.0).sqrt();
        assert_eq!(tuned_eta(2, 5, 0.5), slow);
        assert_eq!(tuned_eta(2, 1_000_000, 0.25), 1.0);
        assert!((tuned_eta(16, 1000, 0.49) - 0.148_931_896_442_361_37).abs() < 1e-12);
        assert_eq!(tuned_eta(1, 10, 0.5), 1.0);
    }

    #[test]
    fn state_validation() {
        assert!(ForecasterState::new(0, 1.0).is_err());
        assert!(ForecasterState::new(2, 0.0).is_err());
        assert!(ForecasterState::from_parts(vec![3, 0], 1.0, 2).is_err());
        assert!(Advice::new(vec![0, 2]).is_err());
        assert!(Advice::new(vec![]).is_err());
        assert!(Outcome::new(2).is_err());
        let mut s = ForecasterState::new(2, 1.0).unwrap();
        assert!(s.update(&adv(&[0, 1, 1]), Outcome::ONE).is_err());
    }
}
