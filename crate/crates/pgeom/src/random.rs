//! Seeded random polynomial data for property checks and acceptance runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::manifold::{Chart, OneForm};

/// Random polynomial of total degree `<= degree` over the chart coordinates,
/// with coefficients uniform in `[-scale, scale]` (small ones dropped).
pub fn random_poly(rng: &mut ChaCha8Rng, chart: &Chart, degree: u32, scale: f64) -> Expr {
    let dim = chart.dim();
    let mut acc = Expr::zero();
    let mut exponents = vec![0u32; dim];
    loop {
        let total: u32 = exponents.iter().sum();
        if total <= degree {
            let c: f64 = rng.gen_range(-scale..scale);
            if c.abs() > 0.05 * scale {
                let mut term = Expr::constant(c);
                for (i, &e) in exponents.iter().enumerate() {
                    if e > 0 {
                        term = term * chart.var(i).powi(e as i32);
                    }
                }
                acc = acc + term;
            }
        }
        // odometer over exponent tuples with entries <= degree
        let mut pos = 0;
        loop {
            if pos == dim {
                return acc;
            }
            exponents[pos] += 1;
            if exponents[pos] > degree {
                exponents[pos] = 0;
                pos += 1;
            } else {
                break;
            }
        }
    }
}

/// Random polynomial 1-form with the given per-component degree.
pub fn random_one_form(rng: &mut ChaCha8Rng, chart: &Chart, degree: u32, scale: f64) -> OneForm {
    OneForm::new(
        (0..chart.dim())
            .map(|_| random_poly(rng, chart, degree, scale))
            .collect(),
    )
}

/// Seeded generator, for deterministic suites.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
