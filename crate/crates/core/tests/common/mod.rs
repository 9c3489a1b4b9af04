//! Shared instance generators for the integration and acceptance suites.
//!
//! Convex-ordered pairs are built constructively: start from a random
//! discrete measure and apply random mean-preserving splits, so the order
//! holds exactly by Strassen's theorem and every quantity stays rational.

use rand::Rng;

use mot_core::integrals::ConcaveFunction;
use mot_core::measures::{DiscreteMeasure, IrreducibleComponent};
use mot_core::mot::{RewardSpec, RewardValue};
use mot_core::scalar::{Rational, Scalar};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

pub fn int(n: i64) -> Rational {
    Rational::from_int(n)
}

/// Random rational `p/q` with `p` in `lo..=hi` and `q` in `1..=max_den`.
pub fn random_rational<R: Rng>(rng: &mut R, lo: i64, hi: i64, max_den: i64) -> Rational {
    let p = rng.gen_range(lo..=hi);
    let d = rng.gen_range(1..=max_den);
    Rational::from_ratio(p, d)
}

/// Random measure with `1..=max_atoms` atoms at distinct rational positions.
pub fn random_measure<R: Rng>(rng: &mut R, max_atoms: usize) -> DiscreteMeasure<Rational> {
    let n = rng.gen_range(1..=max_atoms);
    let mut atoms = Vec::with_capacity(n);
    for _ in 0..n {
        let x = random_rational(rng, -8, 8, 4);
        let w = random_rational(rng, 1, 6, 4);
        atoms.push((x, w));
    }
    DiscreteMeasure::new(atoms).expect("positive masses")
}

/// Random convex-ordered pair with both supports at most `max_support`:
/// `nu` is produced from `mu` by random mean-preserving splits.
pub fn random_ordered_pair<R: Rng>(
    rng: &mut R,
    max_support: usize,
) -> (DiscreteMeasure<Rational>, DiscreteMeasure<Rational>) {
    let mu = random_measure(rng, max_support.min(5));
    let mut atoms: Vec<(Rational, Rational)> = mu.atoms().to_vec();
    let splits = rng.gen_range(0..=5);
    for _ in 0..splits {
        if atoms.len() + 1 >= max_support {
            break;
        }
        let idx = rng.gen_range(0..atoms.len());
        let (x, w) = atoms[idx].clone();
        // move the fraction theta of the atom to x-a and x+b, preserving
        // mass and mean
        let theta = random_rational(rng, 1, 4, 4).min(int(1));
        let a = random_rational(rng, 1, 3, 3);
        let b = random_rational(rng, 1, 3, 3);
        let moved = &theta * &w;
        let left = &moved * &(&b / &(&a + &b));
        let right = &moved - &left;
        atoms[idx].1 = &w - &moved;
        atoms.push((&x - &a, left));
        atoms.push((&x + &b, right));
        atoms.retain(|(_, w)| !w.is_zero());
    }
    let nu = DiscreteMeasure::new(atoms).expect("positive masses");
    (mu, nu)
}

/// Random nonnegative tabular reward over the support pairs.
pub fn random_reward_table<R: Rng>(
    rng: &mut R,
    mu: &DiscreteMeasure<Rational>,
    nu: &DiscreteMeasure<Rational>,
) -> RewardSpec<Rational> {
    let mut entries = Vec::new();
    for (x, _) in mu.atoms() {
        for (y, _) in nu.atoms() {
            let f = random_rational(rng, 0, 10, 4);
            entries.push(((x.clone(), y.clone()), RewardValue::Finite(f)));
        }
    }
    RewardSpec::table(RewardValue::Finite(int(0)), entries)
}

/// Random piecewise-linear concave function on the component domain with at
/// most 8 breakpoints, built from nonnegative slope drops.
pub fn random_concave<R: Rng>(
    rng: &mut R,
    component: &IrreducibleComponent<Rational>,
) -> ConcaveFunction<Rational> {
    let l = component.lo.as_finite().expect("finite endpoint").clone();
    let r = component.hi.as_finite().expect("finite endpoint").clone();
    let width = &r - &l;
    let interior = rng.gen_range(0..=6);
    let mut xs: Vec<Rational> = (0..interior)
        .map(|_| {
            let t = random_rational(rng, 1, 15, 16); // in (0, 1)
            &l + &(&t * &width)
        })
        .filter(|x| *x > l && *x < r)
        .collect();
    xs.push(l.clone());
    xs.push(r.clone());
    xs.sort_by(|a, b| a.cmp_total(b));
    xs.dedup();

    let value0 = random_rational(rng, -4, 4, 3);
    let mut slope = random_rational(rng, -3, 3, 3);
    let mut breakpoints = Vec::with_capacity(xs.len());
    let mut value = value0;
    let mut prev = xs[0].clone();
    breakpoints.push((prev.clone(), value.clone()));
    for x in xs.into_iter().skip(1) {
        value = &value + &(&slope * &(&x - &prev));
        breakpoints.push((x.clone(), value.clone()));
        let drop = random_rational(rng, 0, 3, 3);
        slope = &slope - &drop;
        prev = x;
    }
    let left_jump = random_rational(rng, 0, 2, 2);
    let right_jump = random_rational(rng, 0, 2, 2);
    ConcaveFunction::new(breakpoints, left_jump, right_jump).expect("concave by construction")
}
