use serde::Serialize;

use super::AtomicCdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    ExactEmpirical,
    GridStieltjes,
}

/// `Phi_l(F) = integral |x|^l dF`.
///
/// For grid distributions the mass that left the window is counted at the
/// window edge, which makes `value` a lower estimate; `value + tail_bound` is
/// the estimate with that mass placed at twice the window radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub order: f64,
    pub value: f64,
    pub method: MomentMethod,
    pub tail_bound: f64,
}

impl MomentReport {
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }
}

pub fn absolute_moment<A: AtomicCdf + ?Sized>(f: &A, order: f64) -> MomentReport {
    let mut value = 0.0;
    let mut radius: f64 = 0.0;
    for (x, m) in f.atoms() {
        value += m * x.abs().powf(order);
        radius = radius.max(x.abs());
    }
    let method = if f.is_empirical() {
        MomentMethod::ExactEmpirical
    } else {
        MomentMethod::GridStieltjes
    };
    MomentReport {
        order,
        value,
        method,
        tail_bound: f.lumped_tail() * (2.0 * radius).powf(order),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Empirical;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(absolute_moment(&Empirical(&[-1.0, 1.0]), 1.0).value, 1.0);
        assert_eq!(absolute_moment(&Empirical(&[3.0]), 2.0).value, 9.0);
        let r = absolute_moment(&Empirical(&[-1.0, 0.0, 1.0]), 1.5);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.method, MomentMethod::ExactEmpirical);
        assert_eq!(r.tail_bound, 0.0);
    }

    proptest! {
        #[test]
        fn zeroth_moment_is_one(mut a in prop::collection::vec(-5.0f64..5.0, 1..30)) {
            a.sort_by(f64::total_cmp);
            prop_assert!((absolute_moment(&Empirical(&a), 0.0).value - 1.0).abs() < 1e-12);
        }

        #[test]
        fn lyapunov_holder_chain(mut a in prop::collection::vec(-5.0f64..5.0, 1..30), chi in 0.05f64..2.0) {
            a.sort_by(f64::total_cmp);
            let first = absolute_moment(&Empirical(&a), 1.0).value;
            let higher = absolute_moment(&Empirical(&a), 1.0 + chi).value;
            prop_assert!(first <= higher.powf(1.0 / (1.0 + chi)) + 1e-12);
        }
    }
}
