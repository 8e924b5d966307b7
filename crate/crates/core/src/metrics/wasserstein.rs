use super::{MetricError, TAIL_MASS_LIMIT};

/// A distribution made of finitely many atoms, listed in non-decreasing
/// position. Its CDF is the right-continuous step function through them.
pub trait AtomicCdf {
    /// `(position, mass)` pairs sorted by position.
    fn atoms(&self) -> Box<dyn Iterator<Item = (f64, f64)> + '_>;

    /// Mass whose true position is unknown and which has been lumped onto the
    /// last atom.
    fn lumped_tail(&self) -> f64 {
        0.0
    }

    fn is_empirical(&self) -> bool {
        false
    }
}

/// Empirical distribution of a sorted slice of positions.
#[derive(Debug, Clone, Copy)]
pub struct Empirical<'a>(pub &'a [f64]);

impl AtomicCdf for Empirical<'_> {
    fn atoms(&self) -> Box<dyn Iterator<Item = (f64, f64)> + '_> {
        let m = 1.0 / self.0.len() as f64;
        debug_assert!(self.0.windows(2).all(|w| w[0] <= w[1]));
        Box::new(self.0.iter().map(move |&x| (x, m)))
    }

    fn is_empirical(&self) -> bool {
        true
    }
}

fn check<A: AtomicCdf + ?Sized>(f: &A) -> Result<(), MetricError> {
    let tail = f.lumped_tail();
    if tail > TAIL_MASS_LIMIT {
        return Err(MetricError::UnboundedSupport(tail));
    }
    let mut count = 0usize;
    let mut total = 0.0;
    for (_, m) in f.atoms() {
        count += 1;
        total += m;
    }
    if count == 0 {
        return Err(MetricError::Empty);
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(MetricError::NotProbability(total));
    }
    Ok(())
}

/// Integral of `g(F(x) - G(x))` over the line, by merging the breakpoints of
/// both step functions.
fn merge_integral<A, B>(f: &A, g: &B, op: impl Fn(f64) -> f64) -> f64
where
    A: AtomicCdf + ?Sized,
    B: AtomicCdf + ?Sized,
{
    let mut fa = f.atoms().peekable();
    let mut ga = g.atoms().peekable();
    let (mut cf, mut cg) = (0.0, 0.0);
    let mut prev: Option<f64> = None;
    let mut acc = 0.0;
    loop {
        let x = match (fa.peek(), ga.peek()) {
            (Some(&(a, _)), Some(&(b, _))) => a.min(b),
            (Some(&(a, _)), None) => a,
            (None, Some(&(b, _))) => b,
            (None, None) => break,
        };
        if let Some(p) = prev {
            acc += op(cf - cg) * (x - p);
        }
        while let Some(&(a, m)) = fa.peek() {
            if a > x {
                break;
            }
            cf += m;
            fa.next();
        }
        while let Some(&(b, m)) = ga.peek() {
            if b > x {
                break;
            }
            cg += m;
            ga.next();
        }
        prev = Some(x);
    }
    acc
}

/// Wasserstein-1 distance `integral |F - G| dx`, exact for step CDFs.
pub fn wasserstein1<A, B>(f: &A, g: &B) -> Result<f64, MetricError>
where
    A: AtomicCdf + ?Sized,
    B: AtomicCdf + ?Sized,
{
    check(f)?;
    check(g)?;
    Ok(merge_integral(f, g, f64::abs))
}

/// Signed area `integral (F - G) dx`, which equals `mean(G) - mean(F)`.
pub fn signed_area<A, B>(f: &A, g: &B) -> Result<f64, MetricError>
where
    A: AtomicCdf + ?Sized,
    B: AtomicCdf + ?Sized,
{
    check(f)?;
    check(g)?;
    Ok(merge_integral(f, g, |d| d))
}
