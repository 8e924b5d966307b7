//! Drift of the re-centered system and the Lyapunov diagnostic built on it.
//!
//! For the re-centered positions `w`, `zeta_bar[i]` is `n` times the expected
//! increment of `w_i` per urge. Particles at low quantiles drift up and those
//! at high quantiles drift down, which is what keeps the centered cloud from
//! spreading.

use rand::Rng;

use crate::distributions::{JumpLaw, RateProfile};

use super::sim::draw_urge;
use super::{CenteredState, ParticleError, ParticleState};

/// Largest system for which [`enumerate_urge_outcome`] enumerates tie-breaks.
pub const ENUMERATION_LIMIT: usize = 12;

/// Average drift of the (non-centered) mean, `(1/n) sum_l eta_n(l/n)`.
pub fn v_n(profile: &RateProfile, n: usize) -> f64 {
    assert!(n >= 1, "particle count must be positive");
    (1..=n).map(|l| profile.eta_rank(n, l)).sum::<f64>() / n as f64
}

/// Maximal runs of equal values in a sorted slice, as `[lo, hi)` ranges.
fn blocks(sorted: &[f64]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut lo = 0;
    std::iter::from_fn(move || {
        if lo >= sorted.len() {
            return None;
        }
        let x = sorted[lo];
        let hi = lo + sorted[lo..].partition_point(|&y| y <= x);
        let out = (lo, hi);
        lo = hi;
        Some(out)
    })
}

/// Block-averaged acceptance of every sorted slot: the mean of `eta_n` over
/// the ranks of its co-location block.
fn block_acceptance(sorted: &[f64], profile: &RateProfile) -> Vec<f64> {
    let n = sorted.len();
    let mut out = vec![0.0; n];
    for (lo, hi) in blocks(sorted) {
        let avg = (lo + 1..=hi).map(|r| profile.eta_rank(n, r)).sum::<f64>() / (hi - lo) as f64;
        out[lo..hi].fill(avg);
    }
    out
}

/// `zeta_bar[i] = n E[increment of w_i per urge]`.
pub fn zeta_bar(state: &CenteredState, profile: &RateProfile) -> Vec<f64> {
    let vn = v_n(profile, state.n());
    let mut z = block_acceptance(state.w(), profile);
    z.iter_mut().for_each(|a| *a -= vn);
    z
}

/// `G = (2 + chi) (1/n) sum_i sign(w_i) |w_i|^(1+chi) zeta_bar_i`, the
/// first-order drift of `Phi_(2+chi)`. It is never positive.
pub fn lyapunov_g(state: &CenteredState, profile: &RateProfile, chi: f64) -> f64 {
    assert!(chi > 0.0, "chi must be positive");
    let z = zeta_bar(state, profile);
    let s: f64 = state
        .w()
        .iter()
        .zip(&z)
        .map(|(&w, &zb)| w.signum() * w.abs().powf(1.0 + chi) * zb)
        .sum();
    (2.0 + chi) * s / state.n() as f64
}

/// Exact expected increment of every re-centered particle per urge,
/// enumerating the urge recipient and every tie-break outcome.
pub fn enumerate_urge_outcome(state: &ParticleState, profile: &RateProfile, law: &JumpLaw) -> Result<Vec<f64>, ParticleError> {
    let n = state.n();
    if n > ENUMERATION_LIMIT {
        return Err(ParticleError::EnumerationTooLarge { n, limit: ENUMERATION_LIMIT });
    }
    let mean_jump = law.moment(1.0).expect("first moment of a validated law");
    let mut expected = vec![0.0; n];
    for s in 0..n {
        let (lo, hi) = state.block(s);
        let k = (hi - lo) as f64;
        for rank in lo + 1..=hi {
            let p = 1.0 / (n as f64 * k);
            let kappa = p * profile.eta_rank(n, rank) * mean_jump;
            for (i, e) in expected.iter_mut().enumerate() {
                let own = if i == s { 1.0 } else { 0.0 };
                *e += kappa * (own - 1.0 / n as f64);
            }
        }
    }
    Ok(expected)
}

/// Monte Carlo estimate of the per-urge re-centered increments on a frozen
/// configuration, drawing urges exactly as the simulator does.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementEstimate {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub urges: u64,
}

pub fn sample_urge_increments<R: Rng + ?Sized>(
    state: &ParticleState,
    profile: &RateProfile,
    law: &JumpLaw,
    urges: u64,
    rng: &mut R,
) -> IncrementEstimate {
    let n = state.n();
    let nf = n as f64;
    // increments take two values per urge: kappa (1 - 1/n) for the mover and
    // -kappa / n for everyone else
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut all_k = 0.0;
    let mut all_k2 = 0.0;
    for _ in 0..urges {
        let u = draw_urge(state, profile, law, rng);
        if !u.accepted {
            continue;
        }
        let k = u.jump_size;
        let own = k - k / nf;
        let other = -k / nf;
        sum[u.slot] += own - other;
        sum_sq[u.slot] += own * own - other * other;
        all_k += other;
        all_k2 += other * other;
    }
    let m = urges as f64;
    let mut mean = Vec::with_capacity(n);
    let mut se = Vec::with_capacity(n);
    for i in 0..n {
        let s = sum[i] + all_k;
        let s2 = sum_sq[i] + all_k2;
        let mu = s / m;
        let var = (s2 / m - mu * mu).max(0.0) * m / (m - 1.0);
        mean.push(mu);
        se.push((var / m).sqrt());
    }
    IncrementEstimate { mean, se, urges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use proptest::prelude::*;

    fn centered(x: &[f64]) -> CenteredState {
        ParticleState::new(x).unwrap().recenter()
    }

    #[test]
    fn v_n_examples() {
        let lin = RateProfile::linear();
        assert_eq!(v_n(&lin, 4), 0.375);
        let big = 1_000_000;
        assert!((v_n(&lin, big) - 0.4999995).abs() < 1e-12);
        assert_eq!(v_n(&RateProfile::power(2.0).unwrap(), 2), 0.375);
    }

    #[test]
    fn zeta_bar_examples() {
        let lin = RateProfile::linear();
        assert_eq!(zeta_bar(&centered(&[-1.0, 1.0]), &lin), vec![0.25, -0.25]);
        assert_eq!(zeta_bar(&centered(&[0.0, 0.0]), &lin), vec![0.0, 0.0]);
        assert_eq!(zeta_bar(&centered(&[-2.0, -1.0, 1.0, 2.0]), &lin), vec![0.375, 0.125, -0.125, -0.375]);
    }

    #[test]
    fn lyapunov_examples() {
        let lin = RateProfile::linear();
        assert_eq!(lyapunov_g(&centered(&[-1.0, 1.0]), &lin, 1.0), -0.75);
        assert_eq!(lyapunov_g(&centered(&[0.0, 0.0]), &lin, 1.0), 0.0);
    }

    #[test]
    fn enumeration_examples() {
        let lin = RateProfile::linear();
        let law = JumpLaw::exponential(1.0).unwrap();
        let e = enumerate_urge_outcome(&ParticleState::new(&[-1.0, 1.0]).unwrap(), &lin, &law).unwrap();
        assert!((e[0] - 0.125).abs() < 1e-15 && (e[1] + 0.125).abs() < 1e-15);
        let e = enumerate_urge_outcome(&ParticleState::new(&[0.0, 0.0]).unwrap(), &lin, &law).unwrap();
        assert!(e.iter().all(|v| v.abs() < 1e-15));
        let e = enumerate_urge_outcome(&ParticleState::new(&[-1.0, 0.0, 1.0]).unwrap(), &lin, &law).unwrap();
        let want = [1.0 / 9.0, 0.0, -1.0 / 9.0];
        assert!(e.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15), "{e:?}");
    }

    #[test]
    fn enumeration_refuses_large_systems() {
        let x: Vec<f64> = (0..13).map(f64::from).collect();
        let err = enumerate_urge_outcome(&ParticleState::new(&x).unwrap(), &RateProfile::linear(), &JumpLaw::exponential(1.0).unwrap());
        assert!(matches!(err, Err(ParticleError::EnumerationTooLarge { n: 13, .. })));
    }

    #[test]
    fn enumeration_is_zeta_bar_over_n() {
        let lin = RateProfile::power(1.7).unwrap();
        let law = JumpLaw::exponential(1.0).unwrap();
        let s = ParticleState::new(&[-3.0, -1.0, -1.0, 0.5, 2.0, 2.0, 2.0]).unwrap();
        let e = enumerate_urge_outcome(&s, &lin, &law).unwrap();
        let z = zeta_bar(&s.recenter(), &lin);
        for (a, b) in e.iter().zip(&z) {
            assert!((a - b / 7.0).abs() < 1e-14);
        }
    }

    #[test]
    fn monte_carlo_agrees_with_enumeration() {
        let lin = RateProfile::linear();
        let law = JumpLaw::exponential(1.0).unwrap();
        let s = ParticleState::new(&[0.0, 0.0, 1.0]).unwrap();
        let exact = enumerate_urge_outcome(&s, &lin, &law).unwrap();
        let est = sample_urge_increments(&s, &lin, &law, 200_000, &mut replica_rng(9, 0));
        for (i, e) in exact.iter().enumerate() {
            assert!((est.mean[i] - e).abs() < 4.0 * est.se[i], "{i}: {} vs {e}", est.mean[i]);
        }
    }

    proptest! {
        #[test]
        fn zeta_bar_sums_to_zero_and_g_is_non_positive(
            raw in prop::collection::vec(-20i32..20, 1..60),
            chi in 0.1f64..3.0,
            p in 0.3f64..3.0,
        ) {
            let x: Vec<f64> = raw.iter().map(|&v| v as f64 * 0.25).collect();
            let c = centered(&x);
            let prof = RateProfile::power(p).unwrap();
            let z = zeta_bar(&c, &prof);
            prop_assert!(z.iter().sum::<f64>().abs() < 1e-12);
            prop_assert!(lyapunov_g(&c, &prof, chi) <= 1e-12);
        }
    }
}
