//! Random specs and allocations for audits and property tests.

use rand::Rng;

use crate::recursions::boundary_r0;
use crate::source::{RateAllocation, SourceSpec};

/// A tree-structured spec with `L` helpers and moderate variances.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, big_l: usize) -> SourceSpec {
    let n: Vec<f64> = (0..big_l).map(|_| rng.gen_range(0.3..2.0)).collect();
    let mut z: Vec<f64> = (0..big_l - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
    z.push(n[big_l - 1]);
    SourceSpec::new(rng.gen_range(0.5..2.0), z, n).expect("sampled spec is valid")
}

/// A spec satisfying the variance-ratio condition `tau_L >= 1`,
/// `tau_l >= 1/(1 + eps_l)`.
pub fn random_ratio_spec<R: Rng + ?Sized>(rng: &mut R, big_l: usize) -> SourceSpec {
    let mut eps: Vec<f64> = (0..big_l - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
    eps.push(1.0);
    let mut n = vec![rng.gen_range(0.5..2.0)];
    for l in 2..=big_l {
        let lo = if l == big_l {
            1.0
        } else {
            1.0 / (1.0 + eps[l - 1])
        };
        let tau = rng.gen_range(lo..2.0);
        n.push(n[l - 2] * tau);
    }
    let z: Vec<f64> = eps.iter().zip(&n).map(|(e, v)| e * v).collect();
    SourceSpec::new(rng.gen_range(0.5..2.0), z, n).expect("sampled spec is valid")
}

pub fn random_rates<R: Rng + ?Sized>(rng: &mut R, big_l: usize, max: f64) -> Vec<f64> {
    (0..big_l).map(|_| rng.gen_range(0.0..max)).collect()
}

/// `(boundary_r0(r), r)`; interior when the boundary value clamps at zero.
pub fn boundary_alloc(spec: &SourceSpec, d: f64, r: Vec<f64>) -> RateAllocation {
    RateAllocation::new(boundary_r0(spec, d, &r), r)
}

/// Helper rates in `[0, 2]^L` with `r_0` on the boundary, or raised by up to
/// 0.5 nats when `interior` is set.
pub fn region_alloc<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &SourceSpec,
    d: f64,
    interior: bool,
) -> RateAllocation {
    let mut a = boundary_alloc(spec, d, random_rates(rng, spec.big_l(), 2.0));
    if interior {
        a.r0 += rng.gen_range(0.0..0.5);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sum_rate::variance_ratio_holds;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_specs_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for l in 2..=6 {
            assert_eq!(random_spec(&mut rng, l).big_l(), l);
            assert!(variance_ratio_holds(&random_ratio_spec(&mut rng, l)));
        }
    }
}
