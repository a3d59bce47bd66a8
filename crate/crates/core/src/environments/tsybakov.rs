//! Cost schedules satisfying the margin condition
//! `(1/T) #{t : 1/2 - c_t < x} <= beta x^(alpha / (1 - alpha))` for `x` in `(0, 1/2]`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adaptive::{CostSchedule, TsybakovParams};
use crate::error::{Error, Result};

/// Outcome of [`verify_tsybakov`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsybakovCheck {
    pub pass: bool,
    /// Margin `v` at which `x -> v+` comes closest to (or furthest past) the bound.
    pub worst_x: f64,
    /// `#{margin <= v} / T - beta v^a` at `worst_x`; positive means violated.
    pub worst_excess: f64,
}

/// Builds a schedule whose sorted margins are `((k / T) / beta)^((1 - alpha) / alpha)`
/// clipped to `1/2`, randomly permuted.
///
/// For `alpha = 0` the condition only caps the fraction of small margins by
/// `beta`; the schedule is the constant margin `min(1/beta, 1/2)`.
pub fn tsybakov_costs(horizon: usize, params: TsybakovParams, seed: u64) -> Result<CostSchedule> {
    if horizon == 0 {
        return Err(Error::Construction {
            what: "margin schedule",
            msg: "horizon must be positive".into(),
        });
    }
    let a = params.exponent();
    let beta = params.beta();
    let t = horizon as f64;
    let mut costs: Vec<f64> = if a == 0.0 {
        vec![0.5 - (1.0 / beta).min(0.5); horizon]
    } else {
        (1..=horizon)
            .map(|k| {
                let margin = (k as f64 / (t * beta)).powf(1.0 / a).min(0.5);
                let mut c = 0.5 - margin;
                // Rounding can land a hair inside the bound; move the cost down
                // until the recovered margin clears it.
                while c > 0.0 && k as f64 > t * beta * (0.5 - c).powf(a) {
                    c = c.next_down().max(0.0);
                }
                c
            })
            .collect()
    };
    costs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let schedule = CostSchedule::new(costs)?;
    let check = verify_tsybakov(&schedule, params);
    if !check.pass {
        return Err(Error::Construction {
            what: "margin schedule",
            msg: format!(
                "condition fails near x = {} (excess {})",
                check.worst_x, check.worst_excess
            ),
        });
    }
    Ok(schedule)
}

/// Checks the margin condition for every `x` in `(0, 1/2]`.
///
/// The empirical fraction is a left-continuous step function, so the
/// supremum of `fraction - bound` over `(v, next]` is approached as `x -> v+`
/// for each distinct margin `v < 1/2`.
pub fn verify_tsybakov(costs: &CostSchedule, params: TsybakovParams) -> TsybakovCheck {
    let a = params.exponent();
    let beta = params.beta();
    let t = costs.len() as f64;
    let mut margins: Vec<f64> = costs.margins().collect();
    margins.sort_by(f64::total_cmp);

    let mut worst = TsybakovCheck {
        pass: true,
        worst_x: 0.5,
        worst_excess: f64::NEG_INFINITY,
    };
    let mut i = 0;
    while i < margins.len() {
        let v = margins[i];
        if v >= 0.5 {
            break;
        }
        let mut j = i;
        while j < margins.len() && margins[j] == v {
            j += 1;
        }
        let below = j as f64;
        // Compare counts rather than fractions to keep the tight case exact.
        let excess = (below - t * beta * v.powf(a)) / t;
        if excess > worst.worst_excess {
            worst.worst_excess = excess;
            worst.worst_x = v;
        }
        if below > t * beta * v.powf(a) {
            worst.pass = false;
        }
        i = j;
    }
    if worst.worst_excess == f64::NEG_INFINITY {
        worst.worst_excess = -beta * 0.5f64.powf(a);
    }
    worst
}
