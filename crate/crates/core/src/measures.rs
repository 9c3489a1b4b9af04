//! Discrete measures on the line, potential functions, convex-order
//! verification, and the decomposition into irreducible components.
//!
//! A pair `mu <= nu` in convex order splits the line into maximal open
//! intervals where the potentials separate (`u_mu < u_nu`); martingale
//! transports cannot cross the touching points between them. The
//! [`Decomposition`] computed here is the backbone for the polar-set
//! decisions and the componentwise transport solves in [`crate::mot`].

use std::fmt;

use thiserror::Error;

use crate::scalar::{RefOps, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("negative mass {mass} at position {position}")]
    NegativeMass { position: String, mass: String },
    #[error("operation requires a nonempty measure")]
    EmptyMeasure,
    #[error("measures not in convex order: {0}")]
    NotInConvexOrder(String),
    #[error("endpoint split infeasible on component {component}: {detail}")]
    SplitInfeasible { component: usize, detail: String },
    #[error("component endpoint is infinite")]
    InfiniteEndpoint,
}

/// Finitely supported nonnegative measure with strictly increasing atom
/// positions. Total mass may be any nonnegative value; probabilities are not
/// special-cased.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<S> {
    atoms: Vec<(S, S)>,
}

impl<S: Scalar> DiscreteMeasure<S>
where
    for<'a> &'a S: RefOps<S>,
{
    /// Builds a measure from raw `(position, mass)` pairs: duplicates are
    /// merged by summing, zero-mass atoms dropped, atoms sorted.
    pub fn new(raw_atoms: Vec<(S, S)>) -> Result<Self, MeasureError> {
        for (x, w) in &raw_atoms {
            if *w < S::zero() && !w.is_zero_tol() {
                return Err(MeasureError::NegativeMass {
                    position: x.to_string(),
                    mass: w.to_string(),
                });
            }
        }
        let mut atoms = raw_atoms;
        atoms.sort_by(|a, b| a.0.cmp_total(&b.0));
        let mut merged: Vec<(S, S)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some((px, pw)) if *px == x => *pw = pw.clone() + w,
                _ => merged.push((x, w)),
            }
        }
        merged.retain(|(_, w)| *w > S::zero() && !w.is_zero_tol());
        Ok(Self { atoms: merged })
    }

    pub fn empty() -> Self {
        Self { atoms: Vec::new() }
    }

    /// Unit Dirac mass at `x`.
    pub fn dirac(x: S) -> Self {
        Self { atoms: vec![(x, S::one())] }
    }

    pub fn atoms(&self) -> &[(S, S)] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn position(&self, i: usize) -> &S {
        &self.atoms[i].0
    }

    pub fn mass_at_index(&self, i: usize) -> &S {
        &self.atoms[i].1
    }

    pub fn total_mass(&self) -> S {
        self.atoms.iter().fold(S::zero(), |acc, (_, w)| acc + w.clone())
    }

    /// First moment `sum w * x`.
    pub fn first_moment(&self) -> S {
        self.atoms.iter().fold(S::zero(), |acc, (x, w)| acc + w * x)
    }

    /// Mass-weighted barycenter; `None` when the measure is empty.
    pub fn mean(&self) -> Option<S> {
        if self.atoms.is_empty() {
            return None;
        }
        Some(self.first_moment() / self.total_mass())
    }

    /// Point mass at `x`, zero when `x` is not an atom.
    pub fn mass_at(&self, x: &S) -> S {
        match self.atoms.binary_search_by(|(p, _)| p.cmp_total(x)) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => S::zero(),
        }
    }

    pub fn index_of(&self, x: &S) -> Option<usize> {
        self.atoms.binary_search_by(|(p, _)| p.cmp_total(x)).ok()
    }

    /// Restriction to the open interval `(lo, hi)`.
    pub fn restrict_open(&self, lo: &S, hi: &S) -> Self {
        let atoms = self
            .atoms
            .iter()
            .filter(|(x, _)| x > lo && x < hi)
            .cloned()
            .collect();
        Self { atoms }
    }

    /// Atomwise sum.
    pub fn add_measure(&self, other: &Self) -> Self {
        let mut raw: Vec<(S, S)> = self.atoms.clone();
        raw.extend(other.atoms.iter().cloned());
        Self::new(raw).expect("nonnegative atoms")
    }

    /// Atomwise equality under the mode tolerance.
    pub fn approx_eq(&self, other: &Self) -> bool {
        if self.atoms.len() != other.atoms.len() {
            return false;
        }
        self.atoms
            .iter()
            .zip(&other.atoms)
            .all(|((x, w), (y, v))| x == y && w.eq_tol(v))
    }
}

/// The potential `u_mu(x) = integral of |t - x| d mu(t)`: piecewise linear and
/// convex, kinks exactly at the atoms, asymptotic slopes equal to the mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFunction<S> {
    kinks: Vec<(S, S)>,
    left_slope: S,
    right_slope: S,
}

impl<S: Scalar> PotentialFunction<S>
where
    for<'a> &'a S: RefOps<S>,
{
    pub fn kinks(&self) -> &[(S, S)] {
        &self.kinks
    }

    pub fn left_slope(&self) -> &S {
        &self.left_slope
    }

    pub fn right_slope(&self) -> &S {
        &self.right_slope
    }

    pub fn eval(&self, x: &S) -> S {
        let n = self.kinks.len();
        if *x <= self.kinks[0].0 {
            return &self.kinks[0].1 + &(&self.left_slope * &(x - &self.kinks[0].0));
        }
        if *x >= self.kinks[n - 1].0 {
            return &self.kinks[n - 1].1 + &(&self.right_slope * &(x - &self.kinks[n - 1].0));
        }
        let i = match self.kinks.binary_search_by(|(p, _)| p.cmp_total(x)) {
            Ok(i) => return self.kinks[i].1.clone(),
            Err(i) => i,
        };
        let (x0, v0) = &self.kinks[i - 1];
        let (x1, v1) = &self.kinks[i];
        let slope = &(v1 - v0) / &(x1 - x0);
        v0 + &(&slope * &(x - x0))
    }

    /// Left derivative at `x`.
    pub fn slope_left(&self, x: &S) -> S {
        let n = self.kinks.len();
        if *x <= self.kinks[0].0 {
            return self.left_slope.clone();
        }
        if *x > self.kinks[n - 1].0 {
            return self.right_slope.clone();
        }
        let i = match self.kinks.binary_search_by(|(p, _)| p.cmp_total(x)) {
            Ok(i) => i,
            Err(i) => i,
        };
        // segment (kinks[i-1], kinks[i]) lies immediately left of x
        let (x0, v0) = &self.kinks[i - 1];
        let (x1, v1) = &self.kinks[i];
        &(v1 - v0) / &(x1 - x0)
    }

    /// Right derivative at `x`.
    pub fn slope_right(&self, x: &S) -> S {
        let n = self.kinks.len();
        if *x < self.kinks[0].0 {
            return self.left_slope.clone();
        }
        if *x >= self.kinks[n - 1].0 {
            return self.right_slope.clone();
        }
        let i = match self.kinks.binary_search_by(|(p, _)| p.cmp_total(x)) {
            Ok(i) => i + 1,
            Err(i) => i,
        };
        let (x0, v0) = &self.kinks[i - 1];
        let (x1, v1) = &self.kinks[i];
        &(v1 - v0) / &(x1 - x0)
    }
}

/// Exact piecewise-linear representation of the potential function of `mu`.
pub fn potential<S: Scalar>(mu: &DiscreteMeasure<S>) -> Result<PotentialFunction<S>, MeasureError>
where
    for<'a> &'a S: RefOps<S>,
{
    if mu.is_empty() {
        return Err(MeasureError::EmptyMeasure);
    }
    let atoms = mu.atoms();
    let n = atoms.len();
    // prefix[i] = (mass, first moment) of atoms 0..i
    let mut mass_pfx = Vec::with_capacity(n + 1);
    let mut mom_pfx = Vec::with_capacity(n + 1);
    mass_pfx.push(S::zero());
    mom_pfx.push(S::zero());
    for (x, w) in atoms {
        mass_pfx.push(mass_pfx.last().unwrap() + w);
        mom_pfx.push(mom_pfx.last().unwrap() + &(w * x));
    }
    let total_mass = mass_pfx[n].clone();
    let total_mom = mom_pfx[n].clone();
    let mut kinks = Vec::with_capacity(n);
    for (i, (x, _)) in atoms.iter().enumerate() {
        // atoms with index < i+1 lie at or left of x
        let left = &(x * &mass_pfx[i + 1]) - &mom_pfx[i + 1];
        let right = &(&total_mom - &mom_pfx[i + 1]) - &(x * &(&total_mass - &mass_pfx[i + 1]));
        kinks.push((x.clone(), left + right));
    }
    Ok(PotentialFunction {
        kinks,
        left_slope: -total_mass.clone(),
        right_slope: total_mass,
    })
}

/// Why a pair fails the convex order.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderFailure<S> {
    MassMismatch,
    MeanMismatch,
    PotentialOrderFails { at: S },
}

impl<S: fmt::Display> fmt::Display for OrderFailure<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderFailure::MassMismatch => write!(f, "mass mismatch"),
            OrderFailure::MeanMismatch => write!(f, "mean mismatch"),
            OrderFailure::PotentialOrderFails { at } => {
                write!(f, "potential order fails at {at}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport<S> {
    pub ordered: bool,
    pub reason: Option<OrderFailure<S>>,
    /// Kinks with `u_mu = u_nu` strictly inside the convex hull of `supp nu`.
    pub touch_points: Vec<S>,
}

fn merged_kink_positions<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Vec<S>
where
    for<'a> &'a S: RefOps<S>,
{
    let mut xs: Vec<S> = mu.atoms().iter().map(|(x, _)| x.clone()).collect();
    xs.extend(nu.atoms().iter().map(|(x, _)| x.clone()));
    xs.sort_by(|a, b| a.cmp_total(b));
    xs.dedup();
    xs
}

/// Scale-aware touch test: `|gap| <= tol * (1 + |u_nu|)`; exact equality in
/// exact mode.
fn is_touch<S: Scalar>(gap: &S, u_nu_value: &S) -> bool
where
    for<'a> &'a S: RefOps<S>,
{
    gap.abs() <= S::tol() * (S::one() + u_nu_value.abs())
}

/// Decides `mu <= nu` in convex order via potential functions: equal mass,
/// equal mean, and `u_mu <= u_nu` at every kink. The kink scan suffices
/// because the difference is piecewise linear and vanishes outside the hull
/// once mass and mean agree.
pub fn check_convex_order<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Result<OrderReport<S>, MeasureError>
where
    for<'a> &'a S: RefOps<S>,
{
    if mu.is_empty() || nu.is_empty() {
        return Err(MeasureError::EmptyMeasure);
    }
    if !mu.total_mass().eq_tol(&nu.total_mass()) {
        return Ok(OrderReport {
            ordered: false,
            reason: Some(OrderFailure::MassMismatch),
            touch_points: Vec::new(),
        });
    }
    if !mu.first_moment().eq_tol(&nu.first_moment()) {
        return Ok(OrderReport {
            ordered: false,
            reason: Some(OrderFailure::MeanMismatch),
            touch_points: Vec::new(),
        });
    }
    let u_mu = potential(mu)?;
    let u_nu = potential(nu)?;
    let nu_atoms = nu.atoms();
    let hull_lo = &nu_atoms[0].0;
    let hull_hi = &nu_atoms[nu_atoms.len() - 1].0;
    let mut touch_points = Vec::new();
    for x in merged_kink_positions(mu, nu) {
        let um = u_mu.eval(&x);
        let un = u_nu.eval(&x);
        let gap = &un - &um;
        if gap < S::zero() && !is_touch(&gap, &un) {
            return Ok(OrderReport {
                ordered: false,
                reason: Some(OrderFailure::PotentialOrderFails { at: x }),
                touch_points: Vec::new(),
            });
        }
        if is_touch(&gap, &un) && x > *hull_lo && x < *hull_hi {
            touch_points.push(x);
        }
    }
    Ok(OrderReport { ordered: true, reason: None, touch_points })
}

/// One endpoint of an irreducible-component interval. Finite supports always
/// produce finite endpoints; the infinite variants keep the interval type
/// honest for manually assembled components.
#[derive(Debug, Clone, PartialEq)]
pub enum Bound<S> {
    NegInf,
    Finite(S),
    PosInf,
}

impl<S: Scalar> Bound<S>
where
    for<'a> &'a S: RefOps<S>,
{
    pub fn as_finite(&self) -> Option<&S> {
        match self {
            Bound::Finite(x) => Some(x),
            _ => None,
        }
    }
}

impl<S: fmt::Display> fmt::Display for Bound<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => write!(f, "-inf"),
            Bound::Finite(x) => write!(f, "{x}"),
            Bound::PosInf => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// An irreducible component `(I_k, J_k, mu_k, nu_k)` of a convex-ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibleComponent<S> {
    /// 1-based component index, ordered left to right.
    pub index: usize,
    /// Open interval `I = (lo, hi)` where the component potentials separate.
    pub lo: Bound<S>,
    pub hi: Bound<S>,
    pub mu_k: DiscreteMeasure<S>,
    pub nu_k: DiscreteMeasure<S>,
}

impl<S: Scalar> IrreducibleComponent<S>
where
    for<'a> &'a S: RefOps<S>,
{
    /// Membership in the open interval `I`.
    pub fn contains_in_i(&self, x: &S) -> bool {
        let above = match &self.lo {
            Bound::NegInf => true,
            Bound::Finite(l) => x > l,
            Bound::PosInf => false,
        };
        let below = match &self.hi {
            Bound::NegInf => false,
            Bound::Finite(r) => x < r,
            Bound::PosInf => true,
        };
        above && below
    }

    /// Membership in `J = I` plus any endpoint carrying a `nu_k` atom.
    pub fn contains_in_j(&self, y: &S) -> bool {
        if self.contains_in_i(y) {
            return true;
        }
        if let Bound::Finite(l) = &self.lo {
            if y == l && self.nu_k.mass_at(l) > S::zero() {
                return true;
            }
        }
        if let Bound::Finite(r) = &self.hi {
            if y == r && self.nu_k.mass_at(r) > S::zero() {
                return true;
            }
        }
        false
    }

    /// Builds the single component of an already irreducible pair, verifying
    /// that the decomposition has exactly one component and no stationary
    /// part.
    pub fn from_irreducible_pair(
        mu: &DiscreteMeasure<S>,
        nu: &DiscreteMeasure<S>,
    ) -> Result<Self, MeasureError> {
        let decomposition = decompose(mu, nu)?;
        if decomposition.components.len() != 1 || !decomposition.stationary.is_empty() {
            return Err(MeasureError::NotInConvexOrder(format!(
                "pair is not irreducible: {} components, stationary mass {}",
                decomposition.components.len(),
                decomposition.stationary.total_mass()
            )));
        }
        Ok(decomposition.components.into_iter().next().unwrap())
    }
}

/// The full decomposition of Proposition-style uniqueness: irreducible
/// components plus the stationary part transported identically.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<S> {
    pub mu: DiscreteMeasure<S>,
    pub nu: DiscreteMeasure<S>,
    pub components: Vec<IrreducibleComponent<S>>,
    /// `mu_0 = nu_0`, the sub-measure every coupling keeps in place.
    pub stationary: DiscreteMeasure<S>,
}

impl<S: Scalar> Decomposition<S>
where
    for<'a> &'a S: RefOps<S>,
{
    /// Mass of the identity coupling `P_0`.
    pub fn identity_coupling_mass(&self) -> S {
        self.stationary.total_mass()
    }

    /// Index of the component whose `I_k` contains `x`, if any.
    pub fn component_of(&self, x: &S) -> Option<usize> {
        self.components.iter().position(|c| c.contains_in_i(x))
    }
}

/// Splits `mu <= nu` into irreducible components and the stationary part.
///
/// Components are the maximal open intervals of `{u_mu < u_nu}` with
/// endpoints located exactly on the merged kink grid. The `nu`-atom at a
/// finite endpoint is split by the 2x2 mass/mean system; an infinite endpoint
/// would force its share to zero.
pub fn decompose<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Result<Decomposition<S>, MeasureError>
where
    for<'a> &'a S: RefOps<S>,
{
    let report = check_convex_order(mu, nu)?;
    if !report.ordered {
        return Err(MeasureError::NotInConvexOrder(
            report.reason.map(|r| r.to_string()).unwrap_or_default(),
        ));
    }
    let u_mu = potential(mu)?;
    let u_nu = potential(nu)?;
    let xs = merged_kink_positions(mu, nu);
    // gap values at the merged kinks; zero outside the hull
    let gaps: Vec<(S, S, bool)> = xs
        .into_iter()
        .map(|x| {
            let un = u_nu.eval(&x);
            let gap = &un - &u_mu.eval(&x);
            let touching = is_touch(&gap, &un);
            (x, gap, touching)
        })
        .collect();

    let mut components = Vec::new();
    let mut component_spans: Vec<(usize, usize)> = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, (_, _, touching)) in gaps.iter().enumerate() {
        if *touching {
            if let Some(start) = run_start.take() {
                component_spans.push((start, i));
            }
        } else if run_start.is_none() {
            run_start = Some(i);
        }
    }
    if let Some(start) = run_start {
        // the gap vanishes outside the hull, so a trailing positive run means
        // the order check and the scan disagree (float-mode inconsistency)
        return Err(MeasureError::SplitInfeasible {
            component: components.len() + 1,
            detail: format!("positive potential gap persists past {}", gaps[start].0),
        });
    }

    for (k, (start, end)) in component_spans.iter().enumerate() {
        debug_assert!(*start > 0);
        let l = gaps[start - 1].0.clone();
        let r = gaps[*end].0.clone();
        let mu_k = mu.restrict_open(&l, &r);
        if mu_k.is_empty() {
            return Err(MeasureError::SplitInfeasible {
                component: k + 1,
                detail: format!("no mu mass inside ({l}, {r})"),
            });
        }
        let nu_interior = nu.restrict_open(&l, &r);
        let spread_mass = mu_k.total_mass() - nu_interior.total_mass();
        let spread_moment = mu_k.first_moment() - nu_interior.first_moment();
        // endpoint shares a (at l), b (at r): a + b = spread_mass,
        // a*l + b*r = spread_moment
        let width = &r - &l;
        let b = (&spread_moment - &(&spread_mass * &l)) / width;
        let a = &spread_mass - &b;
        for (share, at) in [(&a, &l), (&b, &r)] {
            if *share < S::zero() && !share.is_zero_tol() {
                return Err(MeasureError::SplitInfeasible {
                    component: k + 1,
                    detail: format!("negative endpoint share {share} at {at}"),
                });
            }
        }
        let mut nu_atoms = nu_interior.atoms().to_vec();
        if a > S::zero() && !a.is_zero_tol() {
            nu_atoms.push((l.clone(), a.clone()));
        }
        if b > S::zero() && !b.is_zero_tol() {
            nu_atoms.push((r.clone(), b.clone()));
        }
        let nu_k = DiscreteMeasure::new(nu_atoms)?;
        components.push(IrreducibleComponent {
            index: k + 1,
            lo: Bound::Finite(l),
            hi: Bound::Finite(r),
            mu_k,
            nu_k,
        });
    }

    // stationary part: mu restricted to the touching set
    let mut stationary_atoms = Vec::new();
    for (x, w) in mu.atoms() {
        let inside = components.iter().any(|c| c.contains_in_i(x));
        if !inside {
            stationary_atoms.push((x.clone(), w.clone()));
        }
    }
    let stationary = DiscreteMeasure::new(stationary_atoms)?;

    // exact reconstruction check; this is the float-mode guard
    let mut rebuilt_nu = stationary.clone();
    for c in &components {
        rebuilt_nu = rebuilt_nu.add_measure(&c.nu_k);
    }
    if !rebuilt_nu.approx_eq(nu) {
        return Err(MeasureError::SplitInfeasible {
            component: 0,
            detail: "recombined component nu-measures do not match nu".into(),
        });
    }

    Ok(Decomposition {
        mu: mu.clone(),
        nu: nu.clone(),
        components,
        stationary,
    })
}

/// One-sided slope gap of the component potentials at a finite endpoint of
/// `I`; equals twice the `nu_k`-atom there.
pub fn endpoint_slope_gap<S: Scalar>(
    component: &IrreducibleComponent<S>,
    side: Side,
) -> Result<S, MeasureError>
where
    for<'a> &'a S: RefOps<S>,
{
    let u_mu = potential(&component.mu_k)?;
    let u_nu = potential(&component.nu_k)?;
    match side {
        Side::Right => {
            let r = component
                .hi
                .as_finite()
                .ok_or(MeasureError::InfiniteEndpoint)?;
            Ok(u_mu.slope_left(r) - u_nu.slope_left(r))
        }
        Side::Left => {
            let l = component
                .lo
                .as_finite()
                .ok_or(MeasureError::InfiniteEndpoint)?;
            Ok(u_nu.slope_right(l) - u_mu.slope_right(l))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn meas(atoms: &[(i64, i64, i64)]) -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(
            atoms
                .iter()
                .map(|(x, n, d)| (Rational::from_int(*x), q(*n, *d)))
                .collect(),
        )
        .unwrap()
    }

    /// mu = 1/2 d_{-1} + 1/2 d_1, nu = 1/4 d_{-2} + 1/2 d_0 + 1/4 d_2
    fn two_component_pair() -> (DiscreteMeasure<Rational>, DiscreteMeasure<Rational>) {
        (
            meas(&[(-1, 1, 2), (1, 1, 2)]),
            meas(&[(-2, 1, 4), (0, 1, 2), (2, 1, 4)]),
        )
    }

    #[test]
    fn make_measure_merges_sorts_and_validates() {
        let m = meas(&[(0, 1, 2), (0, 1, 2)]);
        assert_eq!(m.atoms(), &[(Rational::from_int(0), Rational::from_int(1))]);

        let m = meas(&[(1, 1, 3), (-1, 1, 3), (0, 1, 3)]);
        let positions: Vec<i64> = m
            .atoms()
            .iter()
            .map(|(x, _)| x.to_f64() as i64)
            .collect();
        assert_eq!(positions, vec![-1, 0, 1]);

        let err = DiscreteMeasure::new(vec![(Rational::from_int(0), Rational::from_int(-1))])
            .unwrap_err();
        assert!(matches!(err, MeasureError::NegativeMass { .. }));
    }

    #[test]
    fn potential_values_match_direct_sums() {
        let u = potential(&DiscreteMeasure::dirac(Rational::from_int(0))).unwrap();
        assert_eq!(u.eval(&Rational::from_int(0)), Rational::from_int(0));

        let nu = meas(&[(-1, 1, 2), (1, 1, 2)]);
        let u = potential(&nu).unwrap();
        assert_eq!(u.eval(&Rational::from_int(0)), Rational::from_int(1));

        let nu_b = meas(&[(-2, 1, 4), (0, 1, 2), (2, 1, 4)]);
        let u = potential(&nu_b).unwrap();
        assert_eq!(u.eval(&Rational::from_int(0)), Rational::from_int(1));
    }

    #[test]
    fn potential_slope_jump_is_twice_the_atom() {
        let mu = meas(&[(-1, 1, 4), (0, 1, 2), (3, 1, 4)]);
        let u = potential(&mu).unwrap();
        for (x, w) in mu.atoms() {
            let jump = u.slope_right(x) - u.slope_left(x);
            assert_eq!(jump, Rational::from_int(2) * w.clone());
        }
        assert_eq!(*u.left_slope(), -mu.total_mass());
        assert_eq!(*u.right_slope(), mu.total_mass());
    }

    #[test]
    fn convex_order_dilation_and_failures() {
        let delta = DiscreteMeasure::dirac(Rational::from_int(0));
        let spread = meas(&[(-1, 1, 2), (1, 1, 2)]);

        let report = check_convex_order(&delta, &spread).unwrap();
        assert!(report.ordered);
        assert!(report.touch_points.is_empty());

        let report = check_convex_order(&spread, &delta).unwrap();
        assert!(!report.ordered);
        assert_eq!(
            report.reason.unwrap().to_string(),
            "potential order fails at 0"
        );

        let report =
            check_convex_order(&delta, &DiscreteMeasure::dirac(Rational::from_int(1))).unwrap();
        assert!(!report.ordered);
        assert_eq!(report.reason.unwrap().to_string(), "mean mismatch");
    }

    #[test]
    fn decompose_two_component_fixture() {
        let (mu, nu) = two_component_pair();
        let d = decompose(&mu, &nu).unwrap();
        assert_eq!(d.components.len(), 2);
        assert!(d.stationary.is_empty());

        let c1 = &d.components[0];
        assert_eq!(c1.lo, Bound::Finite(Rational::from_int(-2)));
        assert_eq!(c1.hi, Bound::Finite(Rational::from_int(0)));
        assert!(c1.mu_k.approx_eq(&meas(&[(-1, 1, 2)])));
        assert!(c1.nu_k.approx_eq(&meas(&[(-2, 1, 4), (0, 1, 4)])));

        let c2 = &d.components[1];
        assert_eq!(c2.lo, Bound::Finite(Rational::from_int(0)));
        assert_eq!(c2.hi, Bound::Finite(Rational::from_int(2)));
        assert!(c2.nu_k.approx_eq(&meas(&[(0, 1, 4), (2, 1, 4)])));

        // each component is itself convex-ordered
        for c in &d.components {
            assert!(check_convex_order(&c.mu_k, &c.nu_k).unwrap().ordered);
        }
    }

    #[test]
    fn decompose_identical_marginals_is_stationary() {
        let mu = DiscreteMeasure::dirac(Rational::from_int(0));
        let d = decompose(&mu, &mu).unwrap();
        assert!(d.components.is_empty());
        assert!(d.stationary.approx_eq(&mu));
        assert_eq!(d.identity_coupling_mass(), Rational::from_int(1));
    }

    #[test]
    fn decompose_single_component() {
        let mu = DiscreteMeasure::dirac(Rational::from_int(0));
        let nu = meas(&[(-1, 1, 2), (1, 1, 2)]);
        let d = decompose(&mu, &nu).unwrap();
        assert_eq!(d.components.len(), 1);
        let c = &d.components[0];
        assert_eq!(c.lo, Bound::Finite(Rational::from_int(-1)));
        assert_eq!(c.hi, Bound::Finite(Rational::from_int(1)));
        assert!(c.nu_k.approx_eq(&nu));
        assert!(c.contains_in_j(&Rational::from_int(-1)));
        assert!(c.contains_in_j(&Rational::from_int(1)));
        assert!(!c.contains_in_i(&Rational::from_int(1)));
    }

    #[test]
    fn endpoint_slope_gaps_equal_twice_the_atom() {
        let (mu, nu) = two_component_pair();
        let d = decompose(&mu, &nu).unwrap();
        let gap = endpoint_slope_gap(&d.components[0], Side::Right).unwrap();
        assert_eq!(gap, q(1, 2));

        let mu = DiscreteMeasure::dirac(Rational::from_int(0));
        let nu = meas(&[(-1, 1, 2), (1, 1, 2)]);
        let d = decompose(&mu, &nu).unwrap();
        let gap = endpoint_slope_gap(&d.components[0], Side::Right).unwrap();
        assert_eq!(gap, Rational::from_int(1));
        let gap = endpoint_slope_gap(&d.components[0], Side::Left).unwrap();
        assert_eq!(gap, Rational::from_int(1));
    }

    #[test]
    fn endpoint_slope_gap_without_atom_is_zero() {
        // manually assembled component whose right endpoint carries no atom
        let component = IrreducibleComponent {
            index: 1,
            lo: Bound::Finite(Rational::from_int(-1)),
            hi: Bound::Finite(Rational::from_int(2)),
            mu_k: DiscreteMeasure::dirac(Rational::from_int(0)),
            nu_k: meas(&[(-1, 1, 2), (1, 1, 2)]),
        };
        let gap = endpoint_slope_gap(&component, Side::Right).unwrap();
        assert_eq!(gap, Rational::from_int(0));
    }

    #[test]
    fn mu_atom_at_interior_barrier_goes_to_stationary() {
        // mu has an atom at 0 where the potentials touch between two components
        let mu = meas(&[(-1, 1, 4), (0, 1, 2), (1, 1, 4)]);
        let nu = meas(&[(-2, 1, 8), (0, 3, 4), (2, 1, 8)]);
        let d = decompose(&mu, &nu).unwrap();
        assert_eq!(d.components.len(), 2);
        assert!(d.stationary.approx_eq(&meas(&[(0, 1, 2)])));
        // nu atom at 0 is split: 1/8 to each component, 1/2 stays stationary
        assert_eq!(d.components[0].nu_k.mass_at(&Rational::from_int(0)), q(1, 8));
        assert_eq!(d.components[1].nu_k.mass_at(&Rational::from_int(0)), q(1, 8));
    }
}
