//! Two-player TrueSkill with draws.
//!
//! Each image carries a Gaussian belief `N(mu, sigma²)` over its latent
//! score. A comparison observes the sign of the performance difference (or a
//! draw, when it falls inside `±ε`); beliefs are moved by the first two moments
//! of the truncated Gaussian through the usual `v` / `w` correction terms.

use std::collections::HashMap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use super::{image_id_cmp, Choice, ComparisonRecord, ScoringError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillRating {
    pub mu: f64,
    pub sigma: f64,
}

impl SkillRating {
    /// `mu − 3·sigma`.
    pub fn conservative(&self) -> f64 {
        self.mu - 3.0 * self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrueSkillParams {
    pub mu0: f64,
    pub sigma0: f64,
    pub beta: f64,
    pub tau: f64,
    pub draw_probability: f64,
}

impl Default for TrueSkillParams {
    fn default() -> Self {
        let sigma0 = 25.0 / 3.0;
        TrueSkillParams {
            mu0: 25.0,
            sigma0,
            beta: sigma0 / 2.0,
            tau: sigma0 / 100.0,
            draw_probability: 0.10,
        }
    }
}

impl TrueSkillParams {
    pub fn initial(&self) -> SkillRating {
        SkillRating {
            mu: self.mu0,
            sigma: self.sigma0,
        }
    }

    /// Draw margin on the performance-difference scale for a 1-vs-1 game.
    pub fn draw_margin(&self) -> f64 {
        if self.draw_probability <= 0.0 {
            return 0.0;
        }
        let z = Normal::standard().inverse_cdf((self.draw_probability + 1.0) / 2.0);
        z * SQRT_2 * self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    AWins,
    BWins,
    Draw,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Mean shift for a win by margin `t` (both already divided by `c`).
fn v_win(t: f64, eps: f64) -> f64 {
    let x = t - eps;
    let denom = cdf(x);
    if denom < 1e-300 {
        // asymptote of φ(x)/Φ(x) for x → −∞
        -x
    } else {
        pdf(x) / denom
    }
}

fn w_win(t: f64, eps: f64) -> f64 {
    let x = t - eps;
    let v = v_win(t, eps);
    (v * (v + x)).clamp(0.0, 1.0)
}

fn v_draw(t: f64, eps: f64) -> f64 {
    let abs_t = t.abs();
    let (a, b) = (eps - abs_t, -eps - abs_t);
    let denom = cdf(a) - cdf(b);
    let v = if denom < 1e-300 {
        // far outside the draw band: the correction tends to −(|t| − ε)
        a
    } else {
        (pdf(b) - pdf(a)) / denom
    };
    if t < 0.0 {
        -v
    } else {
        v
    }
}

fn w_draw(t: f64, eps: f64) -> f64 {
    let abs_t = t.abs();
    let (a, b) = (eps - abs_t, -eps - abs_t);
    let denom = cdf(a) - cdf(b);
    if denom < 1e-300 {
        return 1.0;
    }
    let v = v_draw(abs_t, eps);
    (v * v + (a * pdf(a) - b * pdf(b)) / denom).clamp(0.0, 1.0)
}

/// Posterior ratings after one comparison between `a` and `b`.
pub fn trueskill_update(
    a: SkillRating,
    b: SkillRating,
    outcome: Outcome,
    params: &TrueSkillParams,
) -> (SkillRating, SkillRating) {
    match outcome {
        Outcome::AWins => update_ordered(a, b, false, params),
        Outcome::BWins => {
            let (b2, a2) = update_ordered(b, a, false, params);
            (a2, b2)
        }
        Outcome::Draw => update_ordered(a, b, true, params),
    }
}

/// `first` is the winner unless `draw`.
fn update_ordered(
    first: SkillRating,
    second: SkillRating,
    draw: bool,
    params: &TrueSkillParams,
) -> (SkillRating, SkillRating) {
    let tau2 = params.tau * params.tau;
    let var1 = first.sigma * first.sigma + tau2;
    let var2 = second.sigma * second.sigma + tau2;
    let c2 = 2.0 * params.beta * params.beta + var1 + var2;
    let c = c2.sqrt();
    let t = (first.mu - second.mu) / c;
    let eps = params.draw_margin() / c;
    let (v, w) = if draw {
        (v_draw(t, eps), w_draw(t, eps))
    } else {
        (v_win(t, eps), w_win(t, eps))
    };
    let post = |mu: f64, var: f64, sign: f64| SkillRating {
        mu: mu + sign * var / c * v,
        sigma: (var * (1.0 - var / c2 * w)).sqrt(),
    };
    (post(first.mu, var1, 1.0), post(second.mu, var2, -1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillScore {
    pub image_id: String,
    pub mu: f64,
    pub sigma: f64,
    pub conservative: f64,
    pub n_comparisons: usize,
}

/// Sequential ratings over `records` in the order given, sorted by image id.
/// Images that never appear have no entry.
pub fn trueskill_scores<'a, I>(
    records: I,
    params: &TrueSkillParams,
) -> Result<Vec<SkillScore>, ScoringError>
where
    I: IntoIterator<Item = &'a ComparisonRecord>,
{
    let mut ratings: HashMap<&str, (SkillRating, usize)> = HashMap::new();
    let mut indicator = None;
    for r in records {
        match indicator {
            None => indicator = Some(r.indicator),
            Some(i) if i != r.indicator => {
                return Err(ScoringError::MixedIndicators(i, r.indicator))
            }
            _ => {}
        }
        let a = ratings
            .get(r.left_image.as_str())
            .map_or(params.initial(), |e| e.0);
        let b = ratings
            .get(r.right_image.as_str())
            .map_or(params.initial(), |e| e.0);
        let outcome = match r.choice {
            Choice::Left => Outcome::AWins,
            Choice::Right => Outcome::BWins,
            Choice::Equal => Outcome::Draw,
        };
        let (a2, b2) = trueskill_update(a, b, outcome, params);
        let ea = ratings.entry(&r.left_image).or_insert((a2, 0));
        *ea = (a2, ea.1 + 1);
        let eb = ratings.entry(&r.right_image).or_insert((b2, 0));
        *eb = (b2, eb.1 + 1);
    }
    if indicator.is_none() {
        return Err(ScoringError::NoRecords);
    }
    let mut out: Vec<SkillScore> = ratings
        .into_iter()
        .map(|(id, (r, n))| SkillScore {
            image_id: id.to_string(),
            mu: r.mu,
            sigma: r.sigma,
            conservative: r.conservative(),
            n_comparisons: n,
        })
        .collect();
    out.sort_by(|a, b| image_id_cmp(&a.image_id, &b.image_id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draw_between_equals_keeps_means() {
        let p = TrueSkillParams::default();
        let (a, b) = trueskill_update(p.initial(), p.initial(), Outcome::Draw, &p);
        assert_eq!(a.mu, 25.0);
        assert_eq!(b.mu, 25.0);
        assert!(a.sigma < p.sigma0 && b.sigma < p.sigma0);
        assert_eq!(a.sigma, b.sigma);
    }

    #[test]
    fn win_between_equals_is_antisymmetric() {
        let p = TrueSkillParams::default();
        let (a, b) = trueskill_update(p.initial(), p.initial(), Outcome::AWins, &p);
        assert!(a.mu > 25.0 && b.mu < 25.0);
        assert_eq!(a.mu - 25.0, 25.0 - b.mu);
        assert!(a.sigma < p.sigma0 && b.sigma < p.sigma0);

        let (a2, b2) = trueskill_update(p.initial(), p.initial(), Outcome::BWins, &p);
        assert_eq!((a2, b2), (b, a));
    }

    #[test]
    fn reference_values_for_default_parameters() {
        // Widely published values for one 1v1 win from the default prior
        // with draw probability 0.10.
        let p = TrueSkillParams::default();
        let (a, b) = trueskill_update(p.initial(), p.initial(), Outcome::AWins, &p);
        assert!((a.mu - 29.396).abs() < 1e-3, "{a:?}");
        assert!((a.sigma - 7.171).abs() < 1e-3, "{a:?}");
        assert!((b.mu - 20.604).abs() < 1e-3);
        let (d, _) = trueskill_update(p.initial(), p.initial(), Outcome::Draw, &p);
        assert!((d.sigma - 6.458).abs() < 1e-3, "{d:?}");
    }

    #[test]
    fn extreme_upsets_stay_finite() {
        let p = TrueSkillParams::default();
        let strong = SkillRating { mu: 200.0, sigma: 1.0 };
        let weak = SkillRating { mu: -200.0, sigma: 1.0 };
        for o in [Outcome::AWins, Outcome::BWins, Outcome::Draw] {
            let (a, b) = trueskill_update(strong, weak, o, &p);
            assert!(a.mu.is_finite() && a.sigma > 0.0 && a.sigma.is_finite());
            assert!(b.mu.is_finite() && b.sigma > 0.0 && b.sigma.is_finite());
        }
    }
}
