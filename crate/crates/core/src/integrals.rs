//! The generalized integral `(mu - nu)(chi)` of a concave function over an
//! irreducible component, pair integrals modulo concave moderators, and
//! moderator extraction from dual triples.
//!
//! Two independent routes compute the same value: integration by parts
//! against the potential gap (`I_2`) and disintegration of any martingale
//! coupling (`I_3`). Their exact agreement is one of the crate's standing
//! invariants.

use thiserror::Error;

use crate::measures::{potential, Bound, IrreducibleComponent, MeasureError};
use crate::mot::{CertValue, Coupling};
use crate::scalar::{RefOps, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntegralError {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("not a martingale coupling: residual {residual} at x = {x}")]
    NotMartingale { x: String, residual: String },
    #[error("phi is +inf on every atom")]
    AllInfinite,
    #[error("moderator failure at atom {atom}")]
    ModeratorFailure { atom: String },
    #[error("no nu-atom at the requested endpoint")]
    NoAtom,
    #[error("not concave: {0}")]
    NotConcave(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Piecewise-linear concave function on a component domain `J`, with
/// optional downward jumps at the endpoint atoms of `J \ I`.
///
/// Between breakpoints the function interpolates linearly; beyond the
/// breakpoint span it extends by the end-segment slopes (tangent
/// continuation).
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveFunction<S> {
    breakpoints: Vec<(S, S)>,
    left_jump: S,
    right_jump: S,
}

impl<S: Scalar> ConcaveFunction<S>
where
    for<'a> &'a S: RefOps<S>,
{
    pub fn new(
        breakpoints: Vec<(S, S)>,
        left_jump: S,
        right_jump: S,
    ) -> Result<Self, IntegralError> {
        if breakpoints.is_empty() {
            return Err(IntegralError::NotConcave("no breakpoints".into()));
        }
        for w in breakpoints.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(IntegralError::NotConcave(
                    "breakpoints must be strictly increasing".into(),
                ));
            }
        }
        let slopes: Vec<S> = breakpoints
            .windows(2)
            .map(|w| &(&w[1].1 - &w[0].1) / &(&w[1].0 - &w[0].0))
            .collect();
        for w in slopes.windows(2) {
            if &w[0] - &w[1] < -S::tol() {
                return Err(IntegralError::NotConcave("chord slopes increase".into()));
            }
        }
        if left_jump < S::zero() || right_jump < S::zero() {
            return Err(IntegralError::NotConcave(
                "jump magnitudes must be >= 0".into(),
            ));
        }
        Ok(Self { breakpoints, left_jump, right_jump })
    }

    /// The affine function `a + b y` represented on `[lo, hi]`.
    pub fn affine(lo: S, hi: S, a: S, b: S) -> Self {
        let vl = &a + &(&b * &lo);
        let vh = &a + &(&b * &hi);
        Self {
            breakpoints: vec![(lo, vl), (hi, vh)],
            left_jump: S::zero(),
            right_jump: S::zero(),
        }
    }

    pub fn zero(lo: S, hi: S) -> Self {
        Self::affine(lo, hi, S::zero(), S::zero())
    }

    pub fn breakpoints(&self) -> &[(S, S)] {
        &self.breakpoints
    }

    pub fn jumps(&self) -> (&S, &S) {
        (&self.left_jump, &self.right_jump)
    }

    /// Value of the continuous part (ignoring boundary jumps).
    pub fn continuous_value(&self, y: &S) -> S {
        let n = self.breakpoints.len();
        if n == 1 {
            return self.breakpoints[0].1.clone();
        }
        if *y <= self.breakpoints[0].0 {
            let (x0, v0) = &self.breakpoints[0];
            let (x1, v1) = &self.breakpoints[1];
            let slope = &(v1 - v0) / &(x1 - x0);
            return v0 + &(&slope * &(y - x0));
        }
        if *y >= self.breakpoints[n - 1].0 {
            let (x0, v0) = &self.breakpoints[n - 2];
            let (x1, v1) = &self.breakpoints[n - 1];
            let slope = &(v1 - v0) / &(x1 - x0);
            return v1 + &(&slope * &(y - x1));
        }
        let i = match self.breakpoints.binary_search_by(|(p, _)| p.cmp_total(y)) {
            Ok(i) => return self.breakpoints[i].1.clone(),
            Err(i) => i,
        };
        let (x0, v0) = &self.breakpoints[i - 1];
        let (x1, v1) = &self.breakpoints[i];
        let slope = &(v1 - v0) / &(x1 - x0);
        v0 + &(&slope * &(y - x0))
    }

    /// Value on the component domain: the boundary jumps apply at the finite
    /// endpoints of `J \ I`.
    pub fn value_in(&self, component: &IrreducibleComponent<S>, y: &S) -> S {
        let mut v = self.continuous_value(y);
        if let Bound::Finite(l) = &component.lo {
            if y == l {
                v = v - self.left_jump.clone();
            }
        }
        if let Bound::Finite(r) = &component.hi {
            if y == r {
                v = v - self.right_jump.clone();
            }
        }
        v
    }

    /// Interior slope drops `(position, drop)`; the second-derivative
    /// measure of `-chi` is the sum of `drop * delta_position`.
    pub fn slope_drops(&self) -> Vec<(S, S)> {
        let n = self.breakpoints.len();
        if n < 3 {
            return Vec::new();
        }
        let mut drops = Vec::new();
        for i in 1..n - 1 {
            let (x0, v0) = &self.breakpoints[i - 1];
            let (x1, v1) = &self.breakpoints[i];
            let (x2, v2) = &self.breakpoints[i + 1];
            let s_in = &(v1 - v0) / &(x1 - x0);
            let s_out = &(v2 - v1) / &(x2 - x1);
            let drop = &s_in - &s_out;
            if !drop.is_zero_tol() {
                drops.push((x1.clone(), drop));
            }
        }
        drops
    }

    fn first_slope(&self) -> S {
        if self.breakpoints.len() < 2 {
            return S::zero();
        }
        let (x0, v0) = &self.breakpoints[0];
        let (x1, v1) = &self.breakpoints[1];
        &(v1 - v0) / &(x1 - x0)
    }

    fn last_slope(&self) -> S {
        let n = self.breakpoints.len();
        if n < 2 {
            return S::zero();
        }
        let (x0, v0) = &self.breakpoints[n - 2];
        let (x1, v1) = &self.breakpoints[n - 1];
        &(v1 - v0) / &(x1 - x0)
    }

    /// Right derivative of the continuous part at `y`.
    pub fn slope_right_at(&self, y: &S) -> S {
        let n = self.breakpoints.len();
        if n < 2 || *y < self.breakpoints[0].0 {
            return self.first_slope();
        }
        for i in 0..n - 1 {
            if *y < self.breakpoints[i + 1].0 {
                let (x0, v0) = &self.breakpoints[i];
                let (x1, v1) = &self.breakpoints[i + 1];
                return &(v1 - v0) / &(x1 - x0);
            }
        }
        self.last_slope()
    }

    /// Left derivative of the continuous part at `y`.
    pub fn slope_left_at(&self, y: &S) -> S {
        let n = self.breakpoints.len();
        if n < 2 || *y > self.breakpoints[n - 1].0 {
            return self.last_slope();
        }
        for i in (0..n - 1).rev() {
            if *y > self.breakpoints[i].0 {
                let (x0, v0) = &self.breakpoints[i];
                let (x1, v1) = &self.breakpoints[i + 1];
                return &(v1 - v0) / &(x1 - x0);
            }
        }
        self.first_slope()
    }
}

fn check_domain<S: Scalar>(
    chi: &ConcaveFunction<S>,
    component: &IrreducibleComponent<S>,
) -> Result<(), IntegralError>
where
    for<'a> &'a S: RefOps<S>,
{
    for (x, _) in chi.breakpoints() {
        let at_left = component.lo.as_finite().is_some_and(|l| l == x);
        let at_right = component.hi.as_finite().is_some_and(|r| r == x);
        if !component.contains_in_i(x) && !at_left && !at_right {
            return Err(IntegralError::DomainMismatch(format!(
                "breakpoint {x} lies outside the component domain"
            )));
        }
    }
    Ok(())
}

/// Integration-by-parts value: half the potential gap summed against the
/// slope drops inside `I`, plus the boundary-jump terms against the endpoint
/// atoms of `J \ I`. Always nonnegative.
pub fn concave_integral_i2<S: Scalar>(
    chi: &ConcaveFunction<S>,
    component: &IrreducibleComponent<S>,
) -> Result<S, IntegralError>
where
    for<'a> &'a S: RefOps<S>,
{
    check_domain(chi, component)?;
    let u_mu = potential(&component.mu_k)?;
    let u_nu = potential(&component.nu_k)?;
    let mut total = S::zero();
    let half = S::from_ratio(1, 2);
    for (t, drop) in chi.slope_drops() {
        if component.contains_in_i(&t) {
            let gap = u_nu.eval(&t) - u_mu.eval(&t);
            total = total + half.clone() * gap * drop;
        }
    }
    if let Some(l) = component.lo.as_finite() {
        total = total + chi.left_jump.clone() * component.nu_k.mass_at(l);
    }
    if let Some(r) = component.hi.as_finite() {
        total = total + chi.right_jump.clone() * component.nu_k.mass_at(r);
    }
    Ok(total)
}

/// Disintegration value: `sum_x mu({x}) [chi(x) - sum_y kappa(x, y) chi(y)]`
/// for the kernel of the given martingale coupling of the component pair.
pub fn concave_integral_i3<S: Scalar>(
    chi: &ConcaveFunction<S>,
    component: &IrreducibleComponent<S>,
    coupling: &Coupling<S>,
) -> Result<S, IntegralError>
where
    for<'a> &'a S: RefOps<S>,
{
    check_domain(chi, component)?;
    for (x, residual) in coupling.martingale_residuals() {
        if residual.abs() > S::feas_tol() {
            return Err(IntegralError::NotMartingale {
                x: x.to_string(),
                residual: residual.to_string(),
            });
        }
    }
    if !coupling.marginal_x().approx_eq(&component.mu_k)
        || !coupling.marginal_y().approx_eq(&component.nu_k)
    {
        return Err(IntegralError::DomainMismatch(
            "coupling marginals do not match the component pair".into(),
        ));
    }
    let mut total = S::zero();
    for (x, w) in component.mu_k.atoms() {
        total = total + w * &chi.continuous_value(x);
    }
    for (_, y, w) in coupling.entries() {
        total = total - w * &chi.value_in(component, y);
    }
    Ok(total)
}

/// Result of the moderator-condition scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeratorReport<S> {
    pub holds: bool,
    /// The best constant in `u_nu - u_{delta_m} <= C (u_nu - u_mu)` over the
    /// kink scan, when finite.
    pub c_star: Option<S>,
}

/// Scans the kinks strictly inside `I` (and the one-sided slope ratios at
/// finite endpoints) for the smallest constant dominating
/// `(u_nu - u_{delta_m}) / (u_nu - u_mu)`.
pub fn moderator_condition<S: Scalar>(
    component: &IrreducibleComponent<S>,
) -> Result<ModeratorReport<S>, IntegralError>
where
    for<'a> &'a S: RefOps<S>,
{
    let mu = &component.mu_k;
    let nu = &component.nu_k;
    let mass = mu.total_mass();
    let m = mu.mean().ok_or(MeasureError::EmptyMeasure)?;
    let delta_m = crate::measures::DiscreteMeasure::new(vec![(m.clone(), mass)])?;
    let u_mu = potential(mu)?;
    let u_nu = potential(nu)?;
    let u_delta = potential(&delta_m)?;

    let mut kinks: Vec<S> = mu
        .atoms()
        .iter()
        .chain(nu.atoms())
        .map(|(x, _)| x.clone())
        .chain(std::iter::once(m))
        .filter(|x| component.contains_in_i(x))
        .collect();
    kinks.sort_by(|a, b| a.cmp_total(b));
    kinks.dedup();

    let mut c_star: Option<S> = None;
    let mut holds = true;
    let mut consider = |ratio: Option<S>| match ratio {
        None => holds = false,
        Some(r) => {
            if c_star.as_ref().is_none_or(|c| r > *c) {
                c_star = Some(r);
            }
        }
    };

    for t in &kinks {
        let den = u_nu.eval(t) - u_mu.eval(t);
        let num = u_nu.eval(t) - u_delta.eval(t);
        if den <= S::tol() {
            consider(None);
        } else {
            consider(Some(&num / &den));
        }
    }
    // one-sided limits at finite endpoints: both gaps vanish there, so the
    // ratio tends to the ratio of the approach slopes
    if let Some(r) = component.hi.as_finite() {
        let den = u_nu.slope_left(r) - u_mu.slope_left(r);
        let num = u_nu.slope_left(r) - u_delta.slope_left(r);
        if !den.is_zero_tol() {
            consider(Some(&num / &den));
        } else if !num.is_zero_tol() {
            consider(None);
        }
    }
    if let Some(l) = component.lo.as_finite() {
        let den = u_nu.slope_right(l) - u_mu.slope_right(l);
        let num = u_nu.slope_right(l) - u_delta.slope_right(l);
        if !den.is_zero_tol() {
            consider(Some(&num / &den));
        } else if !num.is_zero_tol() {
            consider(None);
        }
    }

    let c_star = if holds { c_star } else { None };
    Ok(ModeratorReport { holds, c_star })
}

/// Lower envelope of the lines `y -> phi(x) + h(x)(y - x)` over the atoms
/// with finite `phi`, represented piecewise-linearly on the convex hull of
/// `nu_support`.
pub fn extract_moderator<S: Scalar>(
    mu_support: &[S],
    phi: &[CertValue<S>],
    h: &[S],
    nu_support: &[S],
) -> Result<ConcaveFunction<S>, IntegralError>
where
    for<'a> &'a S: RefOps<S>,
{
    assert_eq!(mu_support.len(), phi.len());
    assert_eq!(mu_support.len(), h.len());
    // lines as (slope, intercept)
    let lines: Vec<(S, S)> = mu_support
        .iter()
        .zip(phi)
        .zip(h)
        .filter_map(|((x, p), hx)| p.as_finite().map(|v| (hx.clone(), v - &(hx * x))))
        .collect();
    if lines.is_empty() {
        return Err(IntegralError::AllInfinite);
    }
    if nu_support.is_empty() {
        return Err(IntegralError::DomainMismatch("empty nu support".into()));
    }
    let mut lo = nu_support[0].clone();
    let mut hi = nu_support[0].clone();
    for y in nu_support {
        if *y < lo {
            lo = y.clone();
        }
        if *y > hi {
            hi = y.clone();
        }
    }

    let eval_min = |y: &S| -> S {
        lines
            .iter()
            .map(|(slope, intercept)| intercept + &(slope * y))
            .reduce(|a, b| if b < a { b } else { a })
            .unwrap()
    };

    // candidate kinks: pairwise line intersections inside (lo, hi)
    let mut xs: Vec<S> = vec![lo.clone()];
    for (i, (s1, b1)) in lines.iter().enumerate() {
        for (s2, b2) in lines.iter().skip(i + 1) {
            let ds = s1 - s2;
            if ds.is_zero_tol() {
                continue;
            }
            let x = &(b2 - b1) / &ds;
            if x > lo && x < hi {
                xs.push(x);
            }
        }
    }
    if hi > lo {
        xs.push(hi);
    }
    xs.sort_by(|a, b| a.cmp_total(b));
    xs.dedup();

    let points: Vec<(S, S)> = xs.into_iter().map(|x| (eval_min(&x), x)).map(|(v, x)| (x, v)).collect();
    // prune interior points where the slope does not change
    let mut pruned: Vec<(S, S)> = Vec::with_capacity(points.len());
    for p in points {
        while pruned.len() >= 2 {
            let a = &pruned[pruned.len() - 2];
            let b = &pruned[pruned.len() - 1];
            let s1 = &(&b.1 - &a.1) / &(&b.0 - &a.0);
            let s2 = &(&p.1 - &b.1) / &(&p.0 - &b.0);
            if (&s1 - &s2).is_zero_tol() {
                pruned.pop();
            } else {
                break;
            }
        }
        pruned.push(p);
    }
    ConcaveFunction::new(pruned, S::zero(), S::zero())
}

/// `mu(phi - chi) + nu(psi + chi) + (mu - nu)(chi)` over the component pair,
/// with the last term computed by integration by parts.
#[derive(Debug, Clone, PartialEq)]
pub struct PairIntegralValue<S> {
    pub value: S,
    pub moderator_used: ConcaveFunction<S>,
    pub finite: bool,
}

pub fn pair_integral<S: Scalar>(
    phi: &[CertValue<S>],
    psi: &[CertValue<S>],
    chi: &ConcaveFunction<S>,
    component: &IrreducibleComponent<S>,
) -> Result<PairIntegralValue<S>, IntegralError>
where
    for<'a> &'a S: RefOps<S>,
{
    let mu = &component.mu_k;
    let nu = &component.nu_k;
    assert_eq!(phi.len(), mu.len(), "phi must cover supp mu_k");
    assert_eq!(psi.len(), nu.len(), "psi must cover supp nu_k");
    let mut value = concave_integral_i2(chi, component)?;
    for ((x, w), p) in mu.atoms().iter().zip(phi) {
        let v = p
            .as_finite()
            .ok_or_else(|| IntegralError::ModeratorFailure { atom: x.to_string() })?;
        value = value + w * &(v - &chi.value_in(component, x));
    }
    for ((y, w), p) in nu.atoms().iter().zip(psi) {
        let v = p
            .as_finite()
            .ok_or_else(|| IntegralError::ModeratorFailure { atom: y.to_string() })?;
        value = value + w * &(v + &chi.value_in(component, y));
    }
    Ok(PairIntegralValue { value, moderator_used: chi.clone(), finite: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointEstimate<S> {
    pub bound: S,
    pub satisfied: bool,
}

/// Endpoint-atom estimate at the finite right endpoint `r`: with `C` from
/// the one-sided kink scan on `[a, infinity)`, checks
/// `chi(r) >= -(C / nu({r})) * (mu - nu)(chi 1_{[a, inf)})`
/// for `chi` normalized to `chi(a) = 0` with zero left slope at the
/// barycenter `a`.
pub fn endpoint_atom_estimate<S: Scalar>(
    chi: &ConcaveFunction<S>,
    component: &IrreducibleComponent<S>,
) -> Result<EndpointEstimate<S>, IntegralError>
where
    for<'a> &'a S: RefOps<S>,
{
    check_domain(chi, component)?;
    let r = component
        .hi
        .as_finite()
        .ok_or_else(|| IntegralError::DomainMismatch("infinite right endpoint".into()))?
        .clone();
    let atom = component.nu_k.mass_at(&r);
    if atom.is_zero_tol() {
        return Err(IntegralError::NoAtom);
    }
    let a = component.mu_k.mean().ok_or(MeasureError::EmptyMeasure)?;
    if !chi.continuous_value(&a).is_zero_tol() || !chi.slope_left_at(&a).is_zero_tol() {
        return Err(IntegralError::DomainMismatch(
            "chi must vanish with zero left slope at the barycenter".into(),
        ));
    }

    // C from the one-sided scan of the moderator ratio on [a, inf)
    let mu = &component.mu_k;
    let nu = &component.nu_k;
    let delta_a = crate::measures::DiscreteMeasure::new(vec![(a.clone(), mu.total_mass())])?;
    let u_mu = potential(mu)?;
    let u_nu = potential(nu)?;
    let u_delta = potential(&delta_a)?;
    let mut kinks: Vec<S> = mu
        .atoms()
        .iter()
        .chain(nu.atoms())
        .map(|(x, _)| x.clone())
        .chain(std::iter::once(a.clone()))
        .filter(|x| *x >= a && component.contains_in_i(x))
        .collect();
    kinks.sort_by(|x, y| x.cmp_total(y));
    kinks.dedup();
    let mut c = S::one();
    for t in &kinks {
        let den = u_nu.eval(t) - u_mu.eval(t);
        if den <= S::tol() {
            continue;
        }
        let ratio = (u_nu.eval(t) - u_delta.eval(t)) / den;
        if ratio > c {
            c = ratio;
        }
    }

    // (mu - nu)(chi restricted to [a, inf)) via I_2 of the truncation
    let truncated = truncate_left(chi, component, &a, &r)?;
    let integral = concave_integral_i2(&truncated, component)?;

    let bound = -(&c / &atom) * integral;
    let chi_r = chi.value_in(component, &r);
    Ok(EndpointEstimate { satisfied: &chi_r - &bound >= -S::tol(), bound })
}

/// `chi * 1_{[a, inf)}` as a concave function on the component: zero left of
/// the barycenter, `chi` to the right, keeping the right boundary jump.
fn truncate_left<S: Scalar>(
    chi: &ConcaveFunction<S>,
    component: &IrreducibleComponent<S>,
    a: &S,
    r: &S,
) -> Result<ConcaveFunction<S>, IntegralError>
where
    for<'a> &'a S: RefOps<S>,
{
    let mut points: Vec<(S, S)> = Vec::new();
    if let Some(l) = component.lo.as_finite() {
        if l < a {
            points.push((l.clone(), S::zero()));
        }
    }
    points.push((a.clone(), S::zero()));
    for (x, v) in chi.breakpoints() {
        if x > a && x < r {
            points.push((x.clone(), v.clone()));
        }
    }
    points.push((r.clone(), chi.continuous_value(r)));
    ConcaveFunction::new(points, S::zero(), chi.right_jump.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;
    use crate::mot::{solve_primal_dual, Formulation, RewardSpec};
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn int(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn meas(atoms: &[(i64, i64, i64)]) -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(
            atoms
                .iter()
                .map(|(x, n, d)| (int(*x), q(*n, *d)))
                .collect(),
        )
        .unwrap()
    }

    /// One component: mu = d_0, nu = (d_{-1} + d_1)/2, I = (-1, 1).
    fn simple_split() -> IrreducibleComponent<Rational> {
        IrreducibleComponent::from_irreducible_pair(
            &DiscreteMeasure::dirac(int(0)),
            &meas(&[(-1, 1, 2), (1, 1, 2)]),
        )
        .unwrap()
    }

    fn abs_neg() -> ConcaveFunction<Rational> {
        ConcaveFunction::new(
            vec![(int(-1), int(-1)), (int(0), int(0)), (int(1), int(-1))],
            int(0),
            int(0),
        )
        .unwrap()
    }

    fn unique_coupling_of(
        component: &IrreducibleComponent<Rational>,
    ) -> crate::mot::Coupling<Rational> {
        solve_primal_dual(
            &component.mu_k,
            &component.nu_k,
            &RewardSpec::SquareDiff,
            Formulation::Quasisure,
        )
        .unwrap()
        .coupling
        .unwrap()
    }

    #[test]
    fn i2_examples() {
        let component = simple_split();
        assert_eq!(concave_integral_i2(&abs_neg(), &component).unwrap(), int(1));

        let affine = ConcaveFunction::affine(int(-1), int(1), q(3, 7), q(-2, 5));
        assert_eq!(concave_integral_i2(&affine, &component).unwrap(), int(0));

        let jumped =
            ConcaveFunction::new(vec![(int(-1), int(0)), (int(1), int(0))], int(0), int(1))
                .unwrap();
        assert_eq!(concave_integral_i2(&jumped, &component).unwrap(), q(1, 2));
    }

    #[test]
    fn i3_examples() {
        let component = simple_split();
        let coupling = unique_coupling_of(&component);
        assert_eq!(
            concave_integral_i3(&abs_neg(), &component, &coupling).unwrap(),
            int(1)
        );
        let affine = ConcaveFunction::affine(int(-1), int(1), q(3, 7), q(-2, 5));
        assert_eq!(
            concave_integral_i3(&affine, &component, &coupling).unwrap(),
            int(0)
        );
    }

    /// Both routes agree on the two-component fixture with chi = -|y|: the
    /// function is affine on each component domain, so the value is zero.
    #[test]
    fn i2_equals_i3_on_two_component_fixture() {
        let mu = meas(&[(-1, 1, 2), (1, 1, 2)]);
        let nu = meas(&[(-2, 1, 4), (0, 1, 2), (2, 1, 4)]);
        let d = crate::measures::decompose(&mu, &nu).unwrap();
        let mut i2_sum = int(0);
        let mut i3_sum = int(0);
        for component in &d.components {
            let lo = component.lo.as_finite().unwrap().clone();
            let hi = component.hi.as_finite().unwrap().clone();
            // -|y| restricted to the component domain
            let chi = ConcaveFunction::new(
                if hi <= int(0) {
                    vec![(lo.clone(), lo.clone()), (hi.clone(), hi.clone())]
                } else {
                    vec![(lo.clone(), -lo.clone()), (hi.clone(), -hi.clone())]
                },
                int(0),
                int(0),
            )
            .unwrap();
            let coupling = unique_coupling_of(component);
            i2_sum = i2_sum + concave_integral_i2(&chi, component).unwrap();
            i3_sum = i3_sum + concave_integral_i3(&chi, component, &coupling).unwrap();
        }
        assert_eq!(i2_sum, int(0));
        assert_eq!(i3_sum, int(0));
    }

    #[test]
    fn i3_rejects_non_martingale_couplings() {
        let component = simple_split();
        let bad = crate::mot::Coupling::from_position_entries(vec![
            ((int(0), int(-1)), q(3, 4)),
            ((int(0), int(1)), q(1, 4)),
        ]);
        let err = concave_integral_i3(&abs_neg(), &component, &bad).unwrap_err();
        assert!(matches!(err, IntegralError::NotMartingale { .. }));
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let component = simple_split();
        let outside =
            ConcaveFunction::new(vec![(int(-5), int(0)), (int(5), int(0))], int(0), int(0))
                .unwrap();
        assert!(matches!(
            concave_integral_i2(&outside, &component),
            Err(IntegralError::DomainMismatch(_))
        ));
    }

    #[test]
    fn moderator_condition_examples() {
        let component = simple_split();
        let report = moderator_condition(&component).unwrap();
        assert!(report.holds);
        assert_eq!(report.c_star, Some(int(1)));

        let component = IrreducibleComponent::from_irreducible_pair(
            &meas(&[(-1, 1, 2), (1, 1, 2)]),
            &meas(&[(-2, 1, 2), (2, 1, 2)]),
        )
        .unwrap();
        let report = moderator_condition(&component).unwrap();
        assert!(report.holds);
        assert_eq!(report.c_star, Some(int(2)));
    }

    #[test]
    fn moderator_ratio_matches_dense_grid_scan() {
        let component = IrreducibleComponent::from_irreducible_pair(
            &meas(&[(-1, 1, 2), (1, 1, 2)]),
            &meas(&[(-2, 1, 2), (2, 1, 2)]),
        )
        .unwrap();
        let c_star = moderator_condition(&component).unwrap().c_star.unwrap();
        let u_mu = potential(&component.mu_k).unwrap();
        let u_nu = potential(&component.nu_k).unwrap();
        let u_delta = potential(&DiscreteMeasure::dirac(int(0))).unwrap();
        let mut best = int(0);
        for k in -199..200 {
            let t = q(k, 100);
            let den = u_nu.eval(&t) - u_mu.eval(&t);
            let ratio = (u_nu.eval(&t) - u_delta.eval(&t)) / den;
            if ratio > best {
                best = ratio;
            }
        }
        assert!(best <= c_star);
        assert_eq!(best, c_star);
    }

    #[test]
    fn extract_moderator_examples() {
        use crate::mot::CertValue;

        // constant line
        let chi = extract_moderator(
            &[int(0), int(1)],
            &[CertValue::Finite(int(1)), CertValue::Finite(int(1))],
            &[int(0), int(0)],
            &[int(-2), int(3)],
        )
        .unwrap();
        assert_eq!(chi.continuous_value(&int(-2)), int(1));
        assert_eq!(chi.continuous_value(&int(3)), int(1));

        // tangent envelope of -y^2 from phi(i) = -i^2, h(i) = -2i
        let n = 5;
        let xs: Vec<Rational> = (1..=n).map(int).collect();
        let phi: Vec<CertValue<Rational>> =
            (1..=n).map(|i| CertValue::Finite(int(-i * i))).collect();
        let h: Vec<Rational> = (1..=n).map(|i| int(-2 * i)).collect();
        let nu_support: Vec<Rational> = (0..=n + 1).map(int).collect();
        let chi = extract_moderator(&xs, &phi, &h, &nu_support).unwrap();
        for i in 1..=n {
            assert_eq!(chi.continuous_value(&int(i)), int(-i * i));
        }

        // single line
        let chi = extract_moderator(
            &[int(0)],
            &[CertValue::Finite(int(1))],
            &[int(5)],
            &[int(-1), int(1)],
        )
        .unwrap();
        assert_eq!(chi.continuous_value(&int(1)), int(6));
        assert_eq!(chi.continuous_value(&int(-1)), int(-4));

        // all-infinite phi is rejected
        let err = extract_moderator(
            &[int(0)],
            &[CertValue::PlusInf],
            &[int(0)],
            &[int(-1), int(1)],
        )
        .unwrap_err();
        assert!(matches!(err, IntegralError::AllInfinite));
    }

    #[test]
    fn pair_integral_examples_and_moderator_invariance() {
        use crate::mot::CertValue;

        let component = simple_split();
        // phi(0) = 0, psi(y) = y^2 on supp nu
        let phi = vec![CertValue::Finite(int(0))];
        let psi = vec![CertValue::Finite(int(1)), CertValue::Finite(int(1))];
        let chi0 = ConcaveFunction::zero(int(-1), int(1));
        let v0 = pair_integral(&phi, &psi, &chi0, &component).unwrap();
        assert_eq!(v0.value, int(1));
        assert!(v0.finite);

        let v1 = pair_integral(&phi, &psi, &abs_neg(), &component).unwrap();
        assert_eq!(v1.value, int(1));

        // half-component of the two-component fixture
        let half = IrreducibleComponent {
            index: 1,
            lo: crate::measures::Bound::Finite(int(-2)),
            hi: crate::measures::Bound::Finite(int(0)),
            mu_k: meas(&[(-1, 1, 2)]),
            nu_k: meas(&[(-2, 1, 4), (0, 1, 4)]),
        };
        let phi = vec![CertValue::Finite(int(1))];
        let psi = vec![CertValue::Finite(int(0)), CertValue::Finite(int(0))];
        let chi0 = ConcaveFunction::zero(int(-2), int(0));
        let v = pair_integral(&phi, &psi, &chi0, &half).unwrap();
        assert_eq!(v.value, q(1, 2));
    }

    #[test]
    fn pair_integral_rejects_charged_infinite_atoms() {
        use crate::mot::CertValue;

        let component = simple_split();
        let phi = vec![CertValue::PlusInf];
        let psi = vec![CertValue::Finite(int(0)), CertValue::Finite(int(0))];
        let chi0 = ConcaveFunction::zero(int(-1), int(1));
        let err = pair_integral(&phi, &psi, &chi0, &component).unwrap_err();
        assert!(matches!(err, IntegralError::ModeratorFailure { .. }));
    }

    #[test]
    fn endpoint_atom_estimate_examples() {
        let component = simple_split();

        let zero = ConcaveFunction::zero(int(-1), int(1));
        let est = endpoint_atom_estimate(&zero, &component).unwrap();
        assert_eq!(est.bound, int(0));
        assert!(est.satisfied);

        // chi = -(y)^+
        let chi = ConcaveFunction::new(
            vec![(int(-1), int(0)), (int(0), int(0)), (int(1), int(-1))],
            int(0),
            int(0),
        )
        .unwrap();
        let est = endpoint_atom_estimate(&chi, &component).unwrap();
        assert_eq!(est.bound, int(-1));
        assert!(est.satisfied);

        // no nu-atom at the right endpoint
        let no_atom = IrreducibleComponent {
            index: 1,
            lo: crate::measures::Bound::Finite(int(-1)),
            hi: crate::measures::Bound::Finite(int(2)),
            mu_k: DiscreteMeasure::dirac(int(0)),
            nu_k: meas(&[(-1, 1, 2), (1, 1, 2)]),
        };
        let err = endpoint_atom_estimate(&zero, &no_atom).unwrap_err();
        assert!(matches!(err, IntegralError::NoAtom));
    }

    /// Truncating chi to a growing window (tangent extension outside)
    /// approaches the full integral from below: only the slope drops inside
    /// the window contribute, and more of them are retained at each step.
    #[test]
    fn finite_truncation_approaches_i2_from_below() {
        let mu = meas(&[(-2, 1, 4), (0, 1, 2), (2, 1, 4)]);
        let nu = meas(&[(-4, 1, 8), (-1, 1, 4), (0, 1, 4), (1, 1, 4), (4, 1, 8)]);
        let component = IrreducibleComponent::from_irreducible_pair(&mu, &nu).unwrap();
        let chi = ConcaveFunction::new(
            vec![
                (int(-4), int(-8)),
                (int(-1), int(-1)),
                (int(0), int(0)),
                (int(1), int(-1)),
                (int(4), int(-8)),
            ],
            int(0),
            int(0),
        )
        .unwrap();
        let full = concave_integral_i2(&chi, &component).unwrap();

        let windows: [(i64, i64); 3] = [(0, 0), (-1, 1), (-4, 4)];
        let mut previous = q(-1, 1);
        for (p, q_) in windows {
            let truncated = truncate_window(&chi, &component, &int(p), &int(q_));
            let value = concave_integral_i2(&truncated, &component).unwrap();
            assert!(value >= previous, "monotone from below");
            assert!(value <= full);
            previous = value;
        }
        assert_eq!(previous, full);
    }

    /// Test-only approximation-route helper: chi on [p, q], pure tangent
    /// continuation outside the window.
    fn truncate_window(
        chi: &ConcaveFunction<Rational>,
        component: &IrreducibleComponent<Rational>,
        p: &Rational,
        q_: &Rational,
    ) -> ConcaveFunction<Rational> {
        let l = component.lo.as_finite().unwrap();
        let r = component.hi.as_finite().unwrap();
        let mut points = Vec::new();
        let slope_at_p = chi.slope_left_at(p);
        let slope_at_q = chi.slope_right_at(q_);
        if l < p {
            let v = chi.continuous_value(p) + slope_at_p * (l.clone() - p.clone());
            points.push((l.clone(), v));
        }
        for (x, v) in chi.breakpoints() {
            if x >= p && x <= q_ {
                points.push((x.clone(), v.clone()));
            }
        }
        if r > q_ {
            let v = chi.continuous_value(q_) + slope_at_q * (r.clone() - q_.clone());
            points.push((r.clone(), v));
        }
        ConcaveFunction::new(points, int(0), int(0)).unwrap()
    }
}
