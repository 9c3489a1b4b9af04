//! The martingale transport problem in three formulations: pointwise,
//! quasi-sure, and componentwise.
//!
//! The primal maximizes a reward over martingale couplings of a
//! convex-ordered pair; the dual certificate is a triple `(phi, psi, h)` with
//! `phi(x) + psi(y) + h(x)(y - x) >= f(x, y)` on the formulation's constraint
//! set. At finite support the quasi-sure relaxation is exactly the removal of
//! dual constraints at polar pairs, and the componentwise route solves each
//! irreducible component separately, normalizes `psi` to vanish at shared
//! endpoint atoms, and assembles a global certificate.

use std::fmt;

use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus, Relation};
use crate::measures::{decompose, Decomposition, DiscreteMeasure, MeasureError};
use crate::scalar::{RefOps, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MotError {
    #[error("reward is +inf at the chargeable pair ({x}, {y})")]
    UnboundedReward { x: String, y: String },
    #[error("not a martingale coupling: residual {residual} at x = {x}")]
    NotMartingale { x: String, residual: String },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Pointwise,
    Quasisure,
    Componentwise,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formulation::Pointwise => write!(f, "pointwise"),
            Formulation::Quasisure => write!(f, "quasisure"),
            Formulation::Componentwise => write!(f, "componentwise"),
        }
    }
}

/// A reward value at one support pair.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardValue<S> {
    Finite(S),
    PlusInf,
    MinusInf,
}

/// Reward functions over support pairs. The named kinds cover the analytic
/// rewards used by the counterexample scenarios; `Table` covers everything
/// else.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardSpec<S> {
    /// `(x - y)^2`
    SquareDiff,
    /// `|x - y|`
    AbsDiff,
    /// `1` off the diagonal, `0` on it
    IndicatorOffdiag,
    /// `sqrt(|x y|)` on `(-1,0) x (0,1)`, `0` elsewhere; the square root is
    /// rationalized at denominator `2^24` so exact mode stays exact
    OffblockSqrt,
    /// `0` for `|x-y| < delta`, `-1` for `|x-y| = delta`, `-penalty` beyond
    PenalizedBand { delta: S, penalty: S },
    /// Explicit values per pair with a default for unlisted pairs
    Table {
        default: RewardValue<S>,
        entries: Vec<((S, S), RewardValue<S>)>,
    },
}

const SQRT_DENOM: i64 = 1 << 24;

impl<S: Scalar> RewardSpec<S>
where
    for<'a> &'a S: RefOps<S>,
{
    /// Normalizes table entries: sorted by pair, later duplicates win.
    pub fn table(default: RewardValue<S>, entries: Vec<((S, S), RewardValue<S>)>) -> Self {
        let mut entries = entries;
        entries.sort_by(|a, b| {
            a.0 .0
                .cmp_total(&b.0 .0)
                .then_with(|| a.0 .1.cmp_total(&b.0 .1))
        });
        entries.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 = later.1.clone();
                true
            } else {
                false
            }
        });
        RewardSpec::Table { default, entries }
    }

    pub fn value(&self, x: &S, y: &S) -> RewardValue<S> {
        match self {
            RewardSpec::SquareDiff => {
                let d = x - y;
                RewardValue::Finite(&d * &d)
            }
            RewardSpec::AbsDiff => RewardValue::Finite((x - y).abs()),
            RewardSpec::IndicatorOffdiag => {
                if x == y {
                    RewardValue::Finite(S::zero())
                } else {
                    RewardValue::Finite(S::one())
                }
            }
            RewardSpec::OffblockSqrt => {
                let in_block = *x > -S::one() && *x < S::zero() && *y > S::zero() && *y < S::one();
                if !in_block {
                    return RewardValue::Finite(S::zero());
                }
                let v = (x * y).abs();
                let s = v.to_f64().sqrt();
                let num = (s * SQRT_DENOM as f64).round() as i64;
                RewardValue::Finite(S::from_ratio(num, SQRT_DENOM))
            }
            RewardSpec::PenalizedBand { delta, penalty } => {
                let d = (x - y).abs();
                if d.eq_tol(delta) {
                    RewardValue::Finite(-S::one())
                } else if d < *delta {
                    RewardValue::Finite(S::zero())
                } else {
                    RewardValue::Finite(-penalty.clone())
                }
            }
            RewardSpec::Table { default, entries } => {
                match entries.binary_search_by(|(p, _)| {
                    p.0.cmp_total(x).then_with(|| p.1.cmp_total(y))
                }) {
                    Ok(i) => entries[i].1.clone(),
                    Err(_) => default.clone(),
                }
            }
        }
    }
}

/// A sparse joint measure on support pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<S> {
    x_support: Vec<S>,
    y_support: Vec<S>,
    /// `(x index, y index, mass)`, sorted lexicographically, masses positive.
    entries: Vec<(usize, usize, S)>,
}

impl<S: Scalar> Coupling<S>
where
    for<'a> &'a S: RefOps<S>,
{
    pub fn from_position_entries(raw: Vec<((S, S), S)>) -> Self {
        let mut raw = raw;
        raw.retain(|(_, w)| *w > S::zero() && !w.is_zero_tol());
        raw.sort_by(|a, b| {
            a.0 .0
                .cmp_total(&b.0 .0)
                .then_with(|| a.0 .1.cmp_total(&b.0 .1))
        });
        let mut x_support: Vec<S> = raw.iter().map(|((x, _), _)| x.clone()).collect();
        x_support.sort_by(|a, b| a.cmp_total(b));
        x_support.dedup();
        let mut y_support: Vec<S> = raw.iter().map(|((_, y), _)| y.clone()).collect();
        y_support.sort_by(|a, b| a.cmp_total(b));
        y_support.dedup();
        let mut entries: Vec<(usize, usize, S)> = Vec::with_capacity(raw.len());
        for ((x, y), w) in raw {
            let i = x_support.binary_search_by(|p| p.cmp_total(&x)).unwrap();
            let j = y_support.binary_search_by(|p| p.cmp_total(&y)).unwrap();
            match entries.last_mut() {
                Some((pi, pj, pw)) if *pi == i && *pj == j => *pw = pw.clone() + w,
                _ => entries.push((i, j, w)),
            }
        }
        Self { x_support, y_support, entries }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&S, &S, &S)> {
        self.entries
            .iter()
            .map(|(i, j, w)| (&self.x_support[*i], &self.y_support[*j], w))
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn total_mass(&self) -> S {
        self.entries
            .iter()
            .fold(S::zero(), |acc, (_, _, w)| acc + w.clone())
    }

    pub fn mass_at(&self, x: &S, y: &S) -> S {
        self.entries()
            .find(|(px, py, _)| *px == x && *py == y)
            .map(|(_, _, w)| w.clone())
            .unwrap_or_else(S::zero)
    }

    pub fn marginal_x(&self) -> DiscreteMeasure<S> {
        DiscreteMeasure::new(
            self.entries()
                .map(|(x, _, w)| (x.clone(), w.clone()))
                .collect(),
        )
        .expect("coupling masses are nonnegative")
    }

    pub fn marginal_y(&self) -> DiscreteMeasure<S> {
        DiscreteMeasure::new(
            self.entries()
                .map(|(_, y, w)| (y.clone(), w.clone()))
                .collect(),
        )
        .expect("coupling masses are nonnegative")
    }

    /// Martingale residual `sum_y p(x, y) (y - x)` per x-atom.
    pub fn martingale_residuals(&self) -> Vec<(S, S)> {
        let mut residuals: Vec<(S, S)> = self
            .x_support
            .iter()
            .map(|x| (x.clone(), S::zero()))
            .collect();
        for (i, j, w) in &self.entries {
            let delta = &self.y_support[*j] - &self.x_support[*i];
            residuals[*i].1 = &residuals[*i].1 + &(w * &delta);
        }
        residuals
    }

    pub fn is_martingale(&self) -> bool {
        self.martingale_residuals()
            .iter()
            .all(|(_, r)| r.abs() <= S::feas_tol())
    }

    fn require_martingale(&self) -> Result<(), MotError> {
        for (x, r) in self.martingale_residuals() {
            if r.abs() > S::feas_tol() {
                return Err(MotError::NotMartingale {
                    x: x.to_string(),
                    residual: r.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Expected reward; `PlusInf`/`MinusInf` when a charged pair is infinite.
    pub fn objective(&self, f: &RewardSpec<S>) -> RewardValue<S> {
        let mut acc = S::zero();
        for (x, y, w) in self.entries() {
            match f.value(x, y) {
                RewardValue::Finite(v) => acc = acc + &v * w,
                RewardValue::PlusInf => return RewardValue::PlusInf,
                RewardValue::MinusInf => return RewardValue::MinusInf,
            }
        }
        RewardValue::Finite(acc)
    }

    /// Sub-coupling with the first coordinate restricted to `keep` (not
    /// renormalized; finite measures are first-class).
    pub fn restrict_x(&self, keep: &[S]) -> Self {
        let raw = self
            .entries()
            .filter(|(x, _, _)| keep.iter().any(|k| k == *x))
            .map(|(x, y, w)| ((x.clone(), y.clone()), w.clone()))
            .collect();
        Self::from_position_entries(raw)
    }
}

/// Certificate entry: finite or `+inf` (allowed only where no mass charges).
#[derive(Debug, Clone, PartialEq)]
pub enum CertValue<S> {
    Finite(S),
    PlusInf,
}

impl<S> CertValue<S> {
    pub fn as_finite(&self) -> Option<&S> {
        match self {
            CertValue::Finite(v) => Some(v),
            CertValue::PlusInf => None,
        }
    }
}

/// Dual triple `(phi, psi, h)` on the marginal supports.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate<S> {
    pub formulation: Formulation,
    pub x_support: Vec<S>,
    pub y_support: Vec<S>,
    pub phi: Vec<CertValue<S>>,
    pub psi: Vec<CertValue<S>>,
    pub h: Vec<S>,
    /// Dual objective `mu(phi) + nu(psi)`.
    pub value: S,
}

impl<S: Scalar> DualCertificate<S>
where
    for<'a> &'a S: RefOps<S>,
{
    pub fn phi_at(&self, x: &S) -> Option<&CertValue<S>> {
        self.x_support
            .binary_search_by(|p| p.cmp_total(x))
            .ok()
            .map(|i| &self.phi[i])
    }

    pub fn psi_at(&self, y: &S) -> Option<&CertValue<S>> {
        self.y_support
            .binary_search_by(|p| p.cmp_total(y))
            .ok()
            .map(|j| &self.psi[j])
    }

    pub fn h_at(&self, x: &S) -> Option<&S> {
        self.x_support
            .binary_search_by(|p| p.cmp_total(x))
            .ok()
            .map(|i| &self.h[i])
    }

    /// `phi(x_i) + psi(y_j) + h(x_i) (y_j - x_i)`.
    pub fn pair_value(&self, i: usize, j: usize) -> CertValue<S> {
        let (CertValue::Finite(phi), CertValue::Finite(psi)) = (&self.phi[i], &self.psi[j])
        else {
            return CertValue::PlusInf;
        };
        let delta = &self.y_support[j] - &self.x_support[i];
        CertValue::Finite(&(phi + psi) + &(&self.h[i] * &delta))
    }

    /// Gauge transform `(phi + c1 + c2 x, psi - c1 - c2 y, h + c2)`:
    /// preserves feasibility, objective value, and the equality set.
    pub fn gauge(&self, c1: &S, c2: &S) -> Self {
        let phi = self
            .phi
            .iter()
            .zip(&self.x_support)
            .map(|(p, x)| match p {
                CertValue::Finite(v) => CertValue::Finite(&(v + c1) + &(c2 * x)),
                CertValue::PlusInf => CertValue::PlusInf,
            })
            .collect();
        let psi = self
            .psi
            .iter()
            .zip(&self.y_support)
            .map(|(p, y)| match p {
                CertValue::Finite(v) => CertValue::Finite(&(v - c1) - &(c2 * y)),
                CertValue::PlusInf => CertValue::PlusInf,
            })
            .collect();
        let h = self.h.iter().map(|v| v + c2).collect();
        Self {
            formulation: self.formulation,
            x_support: self.x_support.clone(),
            y_support: self.y_support.clone(),
            phi,
            psi,
            h,
            value: self.value.clone(),
        }
    }

    /// Recomputes `mu(phi) + nu(psi)`; `None` if an infinite entry is
    /// charged.
    pub fn objective(&self, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Option<S> {
        let mut acc = S::zero();
        for (x, w) in mu.atoms() {
            let v = self.phi_at(x)?.as_finite()?;
            acc = acc + v * w;
        }
        for (y, w) in nu.atoms() {
            let v = self.psi_at(y)?.as_finite()?;
            acc = acc + v * w;
        }
        Some(acc)
    }

    /// Pairs of the given constraint set where the dual inequality fails;
    /// pairs with non-finite rewards are skipped.
    pub fn violations(
        &self,
        f: &RewardSpec<S>,
        pairs: &[(usize, usize)],
    ) -> Vec<(usize, usize)> {
        let mut bad = Vec::new();
        for &(i, j) in pairs {
            let RewardValue::Finite(fv) = f.value(&self.x_support[i], &self.y_support[j]) else {
                continue;
            };
            match self.pair_value(i, j) {
                CertValue::PlusInf => {}
                CertValue::Finite(lhs) => {
                    if &lhs - &fv < -S::feas_tol() {
                        bad.push((i, j));
                    }
                }
            }
        }
        bad
    }
}

/// Primal value of a transport solve.
#[derive(Debug, Clone, PartialEq)]
pub enum MotValue<S> {
    Finite(S),
    /// A `+inf` reward is chargeable.
    PlusInf,
    /// The big-M guard tripped: the optimizer cannot avoid `-inf` cells.
    MinusInf,
}

impl<S> MotValue<S> {
    pub fn as_finite(&self) -> Option<&S> {
        match self {
            MotValue::Finite(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MotSolution<S> {
    pub value: MotValue<S>,
    pub coupling: Option<Coupling<S>>,
    pub certificate: Option<DualCertificate<S>>,
    pub decomposition: Decomposition<S>,
    /// Equality set of the certificate over the quasi-sure pairs, as
    /// positions; filled by [`monotonicity_set`] on request.
    pub gamma: Option<Vec<(S, S)>>,
    /// Rank deficiencies detected by the LP across all solves.
    pub lp_redundancy: usize,
    /// Pointwise-polar pairs with `+inf` reward excluded from the program.
    pub dropped_polar_infinite: Vec<(S, S)>,
}

/// Support pairs a formulation constrains, as `(i, j)` indices into the
/// atom lists of `mu` and `nu`.
///
/// Pointwise takes the full product. Quasi-sure keeps exactly the non-polar
/// pairs: diagonal atoms plus the per-component products `I_k x J_k`.
/// Componentwise constrains the same pairs as quasi-sure; the grouping by
/// component happens in the solver.
pub fn constraint_pairs<S: Scalar>(
    decomposition: &Decomposition<S>,
    formulation: Formulation,
) -> Vec<(usize, usize)>
where
    for<'a> &'a S: RefOps<S>,
{
    let mu_atoms = decomposition.mu.atoms();
    let nu_atoms = decomposition.nu.atoms();
    let mut pairs = Vec::new();
    for (i, (x, _)) in mu_atoms.iter().enumerate() {
        for (j, (y, _)) in nu_atoms.iter().enumerate() {
            let keep = match formulation {
                Formulation::Pointwise => true,
                Formulation::Quasisure | Formulation::Componentwise => {
                    x == y
                        || decomposition
                            .components
                            .iter()
                            .any(|c| c.contains_in_i(x) && c.contains_in_j(y))
                }
            };
            if keep {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarReason {
    MuNull,
    NuNull,
    CrossesBarrier,
    Charged,
}

impl fmt::Display for PolarReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolarReason::MuNull => write!(f, "mu_null"),
            PolarReason::NuNull => write!(f, "nu_null"),
            PolarReason::CrossesBarrier => write!(f, "crosses_barrier"),
            PolarReason::Charged => write!(f, "charged"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarDecision<S> {
    pub point: (S, S),
    pub polar: bool,
    pub reason: PolarReason,
}

/// Structural polarity decision per point: a pair is chargeable iff both
/// marginals see it and it lies on the diagonal or inside some `I_k x J_k`.
pub fn is_polar<S: Scalar>(
    decomposition: &Decomposition<S>,
    points: &[(S, S)],
) -> Vec<PolarDecision<S>>
where
    for<'a> &'a S: RefOps<S>,
{
    points
        .iter()
        .map(|(x, y)| {
            let reason = if decomposition.mu.mass_at(x) <= S::tol() {
                PolarReason::MuNull
            } else if decomposition.nu.mass_at(y) <= S::tol() {
                PolarReason::NuNull
            } else if x == y
                || decomposition
                    .components
                    .iter()
                    .any(|c| c.contains_in_i(x) && c.contains_in_j(y))
            {
                PolarReason::Charged
            } else {
                PolarReason::CrossesBarrier
            };
            PolarDecision {
                point: (x.clone(), y.clone()),
                polar: reason != PolarReason::Charged,
                reason,
            }
        })
        .collect()
}

/// The marginal/martingale LP over the formulation's pair set, plus the
/// metadata needed to interpret its variables.
#[derive(Debug)]
pub struct MotLp<S> {
    pub lp: LinearProgram<S>,
    /// Pair `(i, j)` addressed by each LP variable.
    pub var_pairs: Vec<(usize, usize)>,
    /// Variables whose reward was `-inf`, substituted by the big-M penalty.
    pub penalized_vars: Vec<usize>,
    /// The substituted penalty, when any `-inf` cell exists.
    pub big_m: Option<S>,
    /// Pointwise-polar pairs with `+inf` reward left out of the program.
    pub dropped_polar_infinite: Vec<(usize, usize)>,
}

/// Big-M for `-inf` cells: `1 + (max f - min f) * total mass / min atom mass`
/// over the finite rewards and both marginals.
fn big_m_penalty<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    finite_values: &[S],
) -> S
where
    for<'a> &'a S: RefOps<S>,
{
    let mut spread = S::zero();
    if let (Some(min), Some(max)) = (
        finite_values.iter().cloned().reduce(|a, b| if b < a { b } else { a }),
        finite_values.iter().cloned().reduce(|a, b| if b > a { b } else { a }),
    ) {
        spread = max - min;
    }
    let min_atom = mu
        .atoms()
        .iter()
        .chain(nu.atoms())
        .map(|(_, w)| w.clone())
        .reduce(|a, b| if b < a { b } else { a })
        .expect("nonempty marginals");
    S::one() + spread * (&mu.total_mass() / &min_atom)
}

/// Builds the transport LP: one equality row per `mu` atom (mass), per `nu`
/// atom (mass), and per `mu` atom (zero conditional drift); one variable per
/// constraint pair with finite reward.
pub fn build_mot_lp<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &RewardSpec<S>,
    formulation: Formulation,
) -> Result<MotLp<S>, MotError>
where
    for<'a> &'a S: RefOps<S>,
{
    let decomposition = decompose(mu, nu)?;
    build_mot_lp_from(&decomposition, f, formulation)
}

fn build_mot_lp_from<S: Scalar>(
    decomposition: &Decomposition<S>,
    f: &RewardSpec<S>,
    formulation: Formulation,
) -> Result<MotLp<S>, MotError>
where
    for<'a> &'a S: RefOps<S>,
{
    let mu = &decomposition.mu;
    let nu = &decomposition.nu;
    let pairs = constraint_pairs(decomposition, formulation);
    let polar_flags: Vec<bool> = {
        let points: Vec<(S, S)> = pairs
            .iter()
            .map(|&(i, j)| (mu.position(i).clone(), nu.position(j).clone()))
            .collect();
        is_polar(decomposition, &points)
            .into_iter()
            .map(|d| d.polar)
            .collect()
    };

    // first pass: rewards, +inf handling, finite range for big-M
    let mut rewards = Vec::with_capacity(pairs.len());
    let mut finite_values = Vec::new();
    let mut has_minus_inf = false;
    let mut dropped_polar_infinite = Vec::new();
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        let value = f.value(mu.position(i), nu.position(j));
        match &value {
            RewardValue::PlusInf => {
                if polar_flags[idx] {
                    dropped_polar_infinite.push((i, j));
                } else {
                    return Err(MotError::UnboundedReward {
                        x: mu.position(i).to_string(),
                        y: nu.position(j).to_string(),
                    });
                }
            }
            RewardValue::MinusInf => has_minus_inf = true,
            RewardValue::Finite(v) => finite_values.push(v.clone()),
        }
        rewards.push(value);
    }
    let big_m = has_minus_inf.then(|| big_m_penalty(mu, nu, &finite_values));

    let mut lp = LinearProgram::new();
    let mu_rows: Vec<usize> = mu
        .atoms()
        .iter()
        .map(|(x, w)| lp.add_row(format!("mu@{x}"), Relation::Eq, w.clone()))
        .collect();
    let nu_rows: Vec<usize> = nu
        .atoms()
        .iter()
        .map(|(y, w)| lp.add_row(format!("nu@{y}"), Relation::Eq, w.clone()))
        .collect();
    let mart_rows: Vec<usize> = mu
        .atoms()
        .iter()
        .map(|(x, _)| lp.add_row(format!("mart@{x}"), Relation::Eq, S::zero()))
        .collect();

    let mut var_pairs = Vec::new();
    let mut penalized_vars = Vec::new();
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        let objective = match &rewards[idx] {
            RewardValue::Finite(v) => v.clone(),
            RewardValue::MinusInf => -big_m.clone().unwrap(),
            RewardValue::PlusInf => continue,
        };
        let x = mu.position(i);
        let y = nu.position(j);
        let var = lp.add_var(
            format!("p({x},{y})"),
            objective,
            false,
            vec![
                (mu_rows[i], S::one()),
                (nu_rows[j], S::one()),
                (mart_rows[i], y - x),
            ],
        );
        if matches!(rewards[idx], RewardValue::MinusInf) {
            penalized_vars.push(var);
        }
        var_pairs.push((i, j));
    }

    Ok(MotLp { lp, var_pairs, penalized_vars, big_m, dropped_polar_infinite })
}

struct LpOutcome<S> {
    value: MotValue<S>,
    coupling: Coupling<S>,
    phi: Vec<S>,
    psi: Vec<S>,
    h: Vec<S>,
    dual_objective: S,
    redundancy: usize,
    dropped: Vec<(S, S)>,
}

/// Solves one marginal/martingale LP and reads the certificate off the row
/// duals.
fn solve_formulation_lp<S: Scalar>(
    decomposition: &Decomposition<S>,
    f: &RewardSpec<S>,
    formulation: Formulation,
) -> Result<LpOutcome<S>, MotError>
where
    for<'a> &'a S: RefOps<S>,
{
    let mu = &decomposition.mu;
    let nu = &decomposition.nu;
    let built = build_mot_lp_from(decomposition, f, formulation)?;
    let sol = solve_lp(&built.lp)?;
    if sol.status != LpStatus::Optimal {
        // the feasible set is M(mu, nu): nonempty under convex order and
        // bounded, so only float drift can land here
        return Err(MotError::Measure(MeasureError::NotInConvexOrder(format!(
            "transport LP returned {:?}",
            sol.status
        ))));
    }

    let raw_entries: Vec<((S, S), S)> = built
        .var_pairs
        .iter()
        .zip(&sol.primal)
        .map(|(&(i, j), w)| {
            (
                (mu.position(i).clone(), nu.position(j).clone()),
                w.clone(),
            )
        })
        .collect();
    let coupling = Coupling::from_position_entries(raw_entries);

    // big-M guard: the value is effectively -inf if penalized cells carry mass
    let mut value = MotValue::Finite(sol.objective.clone());
    for &v in &built.penalized_vars {
        if sol.primal[v] > S::feas_tol() {
            value = MotValue::MinusInf;
        }
    }

    let m = mu.len();
    let n = nu.len();
    let phi: Vec<S> = (0..m).map(|i| sol.dual[i].clone()).collect();
    let psi: Vec<S> = (0..n).map(|j| sol.dual[m + j].clone()).collect();
    let h: Vec<S> = (0..m).map(|i| sol.dual[m + n + i].clone()).collect();
    let dual_objective = mu
        .atoms()
        .iter()
        .zip(&phi)
        .fold(S::zero(), |acc, ((_, w), p)| acc + w * p)
        + nu.atoms()
            .iter()
            .zip(&psi)
            .fold(S::zero(), |acc, ((_, w), p)| acc + w * p);
    let dropped = built
        .dropped_polar_infinite
        .iter()
        .map(|&(i, j)| (mu.position(i).clone(), nu.position(j).clone()))
        .collect();

    Ok(LpOutcome {
        value,
        coupling,
        phi,
        psi,
        h,
        dual_objective,
        redundancy: sol.redundant_rows.len(),
        dropped,
    })
}

/// Solves the primal and dual in the requested formulation.
///
/// Pointwise and quasi-sure run a single LP over their pair sets.
/// Componentwise solves each irreducible component separately, applies the
/// gauge normalization `psi_k = 0` on `J_k \ I_k`, assembles the global
/// triple, and adds the stationary contribution `phi(x) = f(x, x)`.
pub fn solve_primal_dual<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &RewardSpec<S>,
    formulation: Formulation,
) -> Result<MotSolution<S>, MotError>
where
    for<'a> &'a S: RefOps<S>,
{
    let decomposition = decompose(mu, nu)?;

    // +inf at a chargeable pair short-circuits to primal value +inf
    for &(i, j) in &constraint_pairs(&decomposition, Formulation::Quasisure) {
        let x = mu.position(i);
        let y = nu.position(j);
        if matches!(f.value(x, y), RewardValue::PlusInf) {
            let witness = charging_witness_from(&decomposition, &(x.clone(), y.clone()))?;
            return Ok(MotSolution {
                value: MotValue::PlusInf,
                coupling: witness,
                certificate: None,
                decomposition,
                gamma: None,
                lp_redundancy: 0,
                dropped_polar_infinite: Vec::new(),
            });
        }
    }

    match formulation {
        Formulation::Pointwise | Formulation::Quasisure => {
            let out = solve_formulation_lp(&decomposition, f, formulation)?;
            let certificate = DualCertificate {
                formulation,
                x_support: mu.atoms().iter().map(|(x, _)| x.clone()).collect(),
                y_support: nu.atoms().iter().map(|(y, _)| y.clone()).collect(),
                phi: out.phi.into_iter().map(CertValue::Finite).collect(),
                psi: out.psi.into_iter().map(CertValue::Finite).collect(),
                h: out.h,
                value: out.dual_objective,
            };
            Ok(MotSolution {
                value: out.value,
                coupling: Some(out.coupling),
                certificate: Some(certificate),
                decomposition,
                gamma: None,
                lp_redundancy: out.redundancy,
                dropped_polar_infinite: out.dropped,
            })
        }
        Formulation::Componentwise => solve_componentwise(decomposition, f),
    }
}

fn solve_componentwise<S: Scalar>(
    decomposition: Decomposition<S>,
    f: &RewardSpec<S>,
) -> Result<MotSolution<S>, MotError>
where
    for<'a> &'a S: RefOps<S>,
{
    let mu = decomposition.mu.clone();
    let nu = decomposition.nu.clone();
    let x_support: Vec<S> = mu.atoms().iter().map(|(x, _)| x.clone()).collect();
    let y_support: Vec<S> = nu.atoms().iter().map(|(y, _)| y.clone()).collect();

    let mut total_value = S::zero();
    let mut effectively_minus_inf = false;
    let mut redundancy = 0;
    let mut entries: Vec<((S, S), S)> = Vec::new();
    let mut phi: Vec<Option<S>> = vec![None; x_support.len()];
    let mut psi: Vec<Option<S>> = vec![None; y_support.len()];
    let mut h: Vec<S> = vec![S::zero(); x_support.len()];

    for component in &decomposition.components {
        let sub = decompose(&component.mu_k, &component.nu_k)?;
        let out = solve_formulation_lp(&sub, f, Formulation::Quasisure)?;
        match out.value {
            MotValue::Finite(v) => total_value = total_value + v,
            MotValue::MinusInf => effectively_minus_inf = true,
            MotValue::PlusInf => unreachable!("plus-inf pairs are short-circuited"),
        }
        redundancy += out.redundancy;
        entries.extend(
            out.coupling
                .entries()
                .map(|(x, y, w)| ((x.clone(), y.clone()), w.clone())),
        );

        // normalize psi_k to vanish at the endpoint atoms of J_k \ I_k via
        // the two-parameter gauge
        let nu_k = &component.nu_k;
        let endpoint_values: Vec<(S, S)> = [component.lo.as_finite(), component.hi.as_finite()]
            .into_iter()
            .flatten()
            .filter(|e| nu_k.mass_at(e) > S::zero())
            .map(|e| {
                let j = nu_k.index_of(e).expect("endpoint atom");
                (e.clone(), out.psi[j].clone())
            })
            .collect();
        let (c1, c2) = match endpoint_values.as_slice() {
            [] => (S::zero(), S::zero()),
            [(_, v)] => (v.clone(), S::zero()),
            [(l, vl), (r, vr)] => {
                let c2 = &(vr - vl) / &(r - l);
                let c1 = vl - &(&c2 * l);
                (c1, c2)
            }
            _ => unreachable!("at most two endpoints"),
        };

        for (k, (x, _)) in component.mu_k.atoms().iter().enumerate() {
            let gi = mu.index_of(x).expect("component atom in mu");
            phi[gi] = Some(&(&out.phi[k] + &c1) + &(&c2 * x));
            h[gi] = &out.h[k] + &c2;
        }
        for (k, (y, _)) in component.nu_k.atoms().iter().enumerate() {
            let gj = nu.index_of(y).expect("component atom in nu");
            psi[gj] = Some(&(&out.psi[k] - &c1) - &(&c2 * y));
        }
    }

    // stationary part: identity transport, phi(x) = f(x, x), psi = 0
    for (x, w) in decomposition.stationary.atoms() {
        let gi = mu.index_of(x).expect("stationary atom in mu");
        match f.value(x, x) {
            RewardValue::Finite(v) => {
                total_value = total_value + &v * w;
                phi[gi] = Some(v);
            }
            RewardValue::MinusInf => {
                effectively_minus_inf = true;
                phi[gi] = Some(S::zero());
            }
            RewardValue::PlusInf => unreachable!("plus-inf pairs are short-circuited"),
        }
        h[gi] = S::zero();
        entries.push(((x.clone(), x.clone()), w.clone()));
        let gj = nu.index_of(x).expect("stationary atom in nu");
        if psi[gj].is_none() {
            psi[gj] = Some(S::zero());
        }
    }
    // psi defaults to zero wherever no component assigned a value
    for slot in psi.iter_mut() {
        if slot.is_none() {
            *slot = Some(S::zero());
        }
    }

    let phi: Vec<CertValue<S>> = phi
        .into_iter()
        .map(|v| CertValue::Finite(v.expect("phi covers supp mu")))
        .collect();
    let psi_fin: Vec<S> = psi
        .into_iter()
        .map(|v| v.expect("psi covers supp nu"))
        .collect();

    let dual_objective = mu
        .atoms()
        .iter()
        .zip(phi.iter())
        .fold(S::zero(), |acc, ((_, w), p)| match p {
            CertValue::Finite(v) => acc + w * v,
            CertValue::PlusInf => acc,
        })
        + nu
            .atoms()
            .iter()
            .zip(&psi_fin)
            .fold(S::zero(), |acc, ((_, w), p)| acc + w * p);

    let certificate = DualCertificate {
        formulation: Formulation::Componentwise,
        x_support,
        y_support,
        phi,
        psi: psi_fin.into_iter().map(CertValue::Finite).collect(),
        h,
        value: dual_objective,
    };
    Ok(MotSolution {
        value: if effectively_minus_inf {
            MotValue::MinusInf
        } else {
            MotValue::Finite(total_value)
        },
        coupling: Some(Coupling::from_position_entries(entries)),
        certificate: Some(certificate),
        decomposition,
        gamma: None,
        lp_redundancy: redundancy,
        dropped_polar_infinite: Vec::new(),
    })
}

/// Maximizes the mass a martingale coupling can place on one point; returns
/// the witness coupling when the maximum is positive.
pub fn charging_witness<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    point: &(S, S),
) -> Result<Option<Coupling<S>>, MotError>
where
    for<'a> &'a S: RefOps<S>,
{
    let decomposition = decompose(mu, nu)?;
    charging_witness_from(&decomposition, point)
}

fn charging_witness_from<S: Scalar>(
    decomposition: &Decomposition<S>,
    point: &(S, S),
) -> Result<Option<Coupling<S>>, MotError>
where
    for<'a> &'a S: RefOps<S>,
{
    let mu = &decomposition.mu;
    let nu = &decomposition.nu;
    if mu.index_of(&point.0).is_none() || nu.index_of(&point.1).is_none() {
        return Ok(None);
    }
    let target = RewardSpec::table(
        RewardValue::Finite(S::zero()),
        vec![(point.clone(), RewardValue::Finite(S::one()))],
    );
    let built = build_mot_lp_from(decomposition, &target, Formulation::Pointwise)?;
    let sol = solve_lp(&built.lp)?;
    if sol.status != LpStatus::Optimal || sol.objective <= S::feas_tol() {
        return Ok(None);
    }
    let entries = built
        .var_pairs
        .iter()
        .zip(&sol.primal)
        .map(|(&(i, j), w)| ((mu.position(i).clone(), nu.position(j).clone()), w.clone()))
        .collect();
    Ok(Some(Coupling::from_position_entries(entries)))
}

/// Equality set of a certificate over the quasi-sure pairs, as positions.
/// Pairs with infinite rewards or infinite certificate entries never
/// qualify.
pub fn monotonicity_set<S: Scalar>(
    certificate: &DualCertificate<S>,
    f: &RewardSpec<S>,
    decomposition: &Decomposition<S>,
) -> Vec<(S, S)>
where
    for<'a> &'a S: RefOps<S>,
{
    let mut gamma = Vec::new();
    for &(i, j) in &constraint_pairs(decomposition, Formulation::Quasisure) {
        let x = decomposition.mu.position(i);
        let y = decomposition.nu.position(j);
        let RewardValue::Finite(fv) = f.value(x, y) else {
            continue;
        };
        let (Some(CertValue::Finite(phi)), Some(CertValue::Finite(psi)), Some(hx)) =
            (certificate.phi_at(x), certificate.psi_at(y), certificate.h_at(x))
        else {
            continue;
        };
        let lhs = &(phi + psi) + &(hx * &(y - x));
        if lhs.eq_tol(&fv) {
            gamma.push((x.clone(), y.clone()));
        }
    }
    gamma
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaCheck {
    pub concentrated: bool,
    pub optimal: bool,
}

/// Checks the monotonicity principle for a coupling of possibly different
/// marginals: concentration on `gamma` (sorted position pairs) and
/// optimality for the coupling's own marginals, decided by an internal
/// re-solve.
pub fn check_optimality_via_gamma<S: Scalar>(
    coupling: &Coupling<S>,
    gamma: &[(S, S)],
    f: &RewardSpec<S>,
) -> Result<GammaCheck, MotError>
where
    for<'a> &'a S: RefOps<S>,
{
    coupling.require_martingale()?;
    let concentrated = coupling.entries().all(|(x, y, _)| {
        gamma
            .binary_search_by(|(gx, gy)| gx.cmp_total(x).then_with(|| gy.cmp_total(y)))
            .is_ok()
    });
    let own_mu = coupling.marginal_x();
    let own_nu = coupling.marginal_y();
    let solved = solve_primal_dual(&own_mu, &own_nu, f, Formulation::Quasisure)?;
    let optimal = match (coupling.objective(f), &solved.value) {
        (RewardValue::Finite(own), MotValue::Finite(best)) => own.eq_tol(best),
        (RewardValue::MinusInf, MotValue::MinusInf) => true,
        (RewardValue::PlusInf, MotValue::PlusInf) => true,
        _ => false,
    };
    Ok(GammaCheck { concentrated, optimal })
}

/// A reward shifted by a dual minorant, plus the offset to add back.
#[derive(Debug, Clone)]
pub struct RelaxedReward<S> {
    pub reward: RewardSpec<S>,
    pub offset: S,
}

/// Lower-bound relaxation: given a minorant triple `(phi0, psi0, h0)` on the
/// supports, builds the nonnegative reward
/// `[f - phi0(x) - psi0(y) - h0(x)(y - x)]^+` as a table over the support
/// pairs, with offset `mu(phi0) + nu(psi0)`.
pub fn relax_lower_bound<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &RewardSpec<S>,
    minorant: (&[S], &[S], &[S]),
) -> RelaxedReward<S>
where
    for<'a> &'a S: RefOps<S>,
{
    let (phi0, psi0, h0) = minorant;
    assert_eq!(phi0.len(), mu.len(), "phi0 must cover supp mu");
    assert_eq!(psi0.len(), nu.len(), "psi0 must cover supp nu");
    assert_eq!(h0.len(), mu.len(), "h0 must cover supp mu");
    let mut entries = Vec::with_capacity(mu.len() * nu.len());
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        for (j, (y, _)) in nu.atoms().iter().enumerate() {
            let shifted = match f.value(x, y) {
                RewardValue::PlusInf => RewardValue::PlusInf,
                RewardValue::MinusInf => RewardValue::Finite(S::zero()),
                RewardValue::Finite(v) => {
                    let bound = &(&phi0[i] + &psi0[j]) + &(&h0[i] * &(y - x));
                    let diff = &v - &bound;
                    RewardValue::Finite(if diff > S::zero() { diff } else { S::zero() })
                }
            };
            entries.push(((x.clone(), y.clone()), shifted));
        }
    }
    let offset = mu
        .atoms()
        .iter()
        .zip(phi0)
        .fold(S::zero(), |acc, ((_, w), p)| acc + w * p)
        + nu.atoms()
            .iter()
            .zip(psi0)
            .fold(S::zero(), |acc, ((_, w), p)| acc + w * p);
    RelaxedReward {
        reward: RewardSpec::table(RewardValue::Finite(S::zero()), entries),
        offset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Side;
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

    fn two_component_pair() -> (DiscreteMeasure<Rational>, DiscreteMeasure<Rational>) {
        (
            meas(&[(-1, 1, 2), (1, 1, 2)]),
            meas(&[(-2, 1, 4), (0, 1, 2), (2, 1, 4)]),
        )
    }

    fn uniform_grid() -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(
            (0..5).map(|k| (q(k, 4), q(1, 5))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constraint_pairs_match_polar_structure() {
        let (mu, nu) = two_component_pair();
        let d = decompose(&mu, &nu).unwrap();
        let qs = constraint_pairs(&d, Formulation::Quasisure);
        let expected: Vec<(Rational, Rational)> = vec![
            (int(-1), int(-2)),
            (int(-1), int(0)),
            (int(1), int(0)),
            (int(1), int(2)),
        ];
        let got: Vec<(Rational, Rational)> = qs
            .iter()
            .map(|&(i, j)| (mu.position(i).clone(), nu.position(j).clone()))
            .collect();
        assert_eq!(got, expected);

        let grid = uniform_grid();
        let d = decompose(&grid, &grid).unwrap();
        let qs = constraint_pairs(&d, Formulation::Quasisure);
        assert_eq!(qs.len(), 5);
        assert!(qs.iter().all(|&(i, j)| i == j));
        let pw = constraint_pairs(&d, Formulation::Pointwise);
        assert_eq!(pw.len(), 25);
    }

    #[test]
    fn mot_lp_shapes() {
        let mu = DiscreteMeasure::dirac(int(0));
        let nu = meas(&[(-1, 1, 2), (1, 1, 2)]);
        let built = build_mot_lp(&mu, &nu, &RewardSpec::SquareDiff, Formulation::Pointwise)
            .unwrap();
        assert_eq!(built.lp.num_vars(), 2);
        assert_eq!(built.lp.num_rows(), 4);

        let (mu, nu) = two_component_pair();
        let built = build_mot_lp(&mu, &nu, &RewardSpec::IndicatorOffdiag, Formulation::Quasisure)
            .unwrap();
        assert_eq!(built.lp.num_vars(), 4);
    }

    #[test]
    fn unbounded_reward_is_flagged_before_solving() {
        let (mu, nu) = two_component_pair();
        let f = RewardSpec::table(
            RewardValue::Finite(int(0)),
            vec![((int(1), int(0)), RewardValue::PlusInf)],
        );
        let err = build_mot_lp(&mu, &nu, &f, Formulation::Quasisure).unwrap_err();
        assert!(matches!(err, MotError::UnboundedReward { .. }));

        let solved = solve_primal_dual(&mu, &nu, &f, Formulation::Quasisure).unwrap();
        assert_eq!(solved.value, MotValue::PlusInf);
        let witness = solved.coupling.unwrap();
        assert_eq!(witness.mass_at(&int(1), &int(0)), q(1, 4));
    }

    #[test]
    fn plus_inf_at_polar_pair_is_dropped_pointwise() {
        let (mu, nu) = two_component_pair();
        let f = RewardSpec::table(
            RewardValue::Finite(int(0)),
            vec![((int(-1), int(2)), RewardValue::PlusInf)],
        );
        let solved = solve_primal_dual(&mu, &nu, &f, Formulation::Pointwise).unwrap();
        assert_eq!(solved.value, MotValue::Finite(int(0)));
        assert_eq!(solved.dropped_polar_infinite, vec![(int(-1), int(2))]);
    }

    #[test]
    fn square_diff_on_simple_split() {
        let mu = DiscreteMeasure::dirac(int(0));
        let nu = meas(&[(-1, 1, 2), (1, 1, 2)]);
        for formulation in [
            Formulation::Pointwise,
            Formulation::Quasisure,
            Formulation::Componentwise,
        ] {
            let solved =
                solve_primal_dual(&mu, &nu, &RewardSpec::SquareDiff, formulation).unwrap();
            assert_eq!(solved.value, MotValue::Finite(int(1)), "{formulation}");
            let c = solved.coupling.unwrap();
            assert_eq!(c.mass_at(&int(0), &int(-1)), q(1, 2));
            assert_eq!(c.mass_at(&int(0), &int(1)), q(1, 2));
            let cert = solved.certificate.unwrap();
            assert_eq!(cert.value, int(1));
            // certificate is gauge-equivalent to phi(0)=1, psi=0, h=0
            let psi0 = cert.psi_at(&int(-1)).unwrap().as_finite().unwrap().clone();
            let psi1 = cert.psi_at(&int(1)).unwrap().as_finite().unwrap().clone();
            let c2 = (psi0.clone() - psi1.clone()) / int(2);
            let c1 = -(psi0.clone() + psi1.clone()) / int(2);
            let normalized = cert.gauge(&c1, &c2);
            assert_eq!(
                normalized.phi_at(&int(0)).unwrap().as_finite().unwrap(),
                &int(1)
            );
            assert_eq!(
                normalized.psi_at(&int(1)).unwrap().as_finite().unwrap(),
                &int(0)
            );
        }
    }

    #[test]
    fn indicator_on_two_component_instance() {
        let (mu, nu) = two_component_pair();
        for formulation in [
            Formulation::Pointwise,
            Formulation::Quasisure,
            Formulation::Componentwise,
        ] {
            let solved =
                solve_primal_dual(&mu, &nu, &RewardSpec::IndicatorOffdiag, formulation).unwrap();
            assert_eq!(solved.value, MotValue::Finite(int(1)), "{formulation}");
        }
    }

    #[test]
    fn identical_marginals_have_zero_indicator_value() {
        let grid = uniform_grid();
        let solved = solve_primal_dual(
            &grid,
            &grid,
            &RewardSpec::IndicatorOffdiag,
            Formulation::Quasisure,
        )
        .unwrap();
        assert_eq!(solved.value, MotValue::Finite(int(0)));
        let cert = solved.certificate.unwrap();
        for v in cert.phi.iter().chain(cert.psi.iter()) {
            assert_eq!(v.as_finite().unwrap(), &int(0));
        }
        for v in &cert.h {
            assert_eq!(v, &int(0));
        }
    }

    #[test]
    fn polar_decisions_match_fixture() {
        let (mu, nu) = two_component_pair();
        let d = decompose(&mu, &nu).unwrap();
        let decisions = is_polar(
            &d,
            &[
                (int(-1), int(2)),
                (int(-1), int(-2)),
                (int(0), int(0)),
            ],
        );
        assert!(decisions[0].polar);
        assert_eq!(decisions[0].reason, PolarReason::CrossesBarrier);
        assert!(!decisions[1].polar);
        assert_eq!(decisions[1].reason, PolarReason::Charged);
        // mu has no atom at 0
        assert!(decisions[2].polar);
        assert_eq!(decisions[2].reason, PolarReason::MuNull);

        let delta = DiscreteMeasure::dirac(int(0));
        let spread = meas(&[(-1, 1, 2), (1, 1, 2)]);
        let d = decompose(&delta, &spread).unwrap();
        let decisions = is_polar(&d, &[(int(0), int(0))]);
        assert!(decisions[0].polar);
        assert_eq!(decisions[0].reason, PolarReason::NuNull);
    }

    #[test]
    fn charging_witness_matches_structure() {
        let (mu, nu) = two_component_pair();
        let w = charging_witness(&mu, &nu, &(int(1), int(0))).unwrap().unwrap();
        assert_eq!(w.mass_at(&int(1), &int(0)), q(1, 4));
        assert!(w.is_martingale());

        assert!(charging_witness(&mu, &nu, &(int(-1), int(2))).unwrap().is_none());

        let delta = DiscreteMeasure::dirac(int(0));
        let spread = meas(&[(-1, 1, 2), (1, 1, 2)]);
        let w = charging_witness(&delta, &spread, &(int(0), int(1))).unwrap().unwrap();
        assert_eq!(w.mass_at(&int(0), &int(1)), q(1, 2));
    }

    #[test]
    fn monotonicity_set_equality_scan() {
        let mu = DiscreteMeasure::dirac(int(0));
        let nu = meas(&[(-1, 1, 2), (1, 1, 2)]);
        let d = decompose(&mu, &nu).unwrap();
        let cert = DualCertificate {
            formulation: Formulation::Quasisure,
            x_support: vec![int(0)],
            y_support: vec![int(-1), int(1)],
            phi: vec![CertValue::Finite(int(1))],
            psi: vec![CertValue::Finite(int(0)), CertValue::Finite(int(0))],
            h: vec![int(0)],
            value: int(1),
        };
        let gamma = monotonicity_set(&cert, &RewardSpec::SquareDiff, &d);
        assert_eq!(gamma, vec![(int(0), int(-1)), (int(0), int(1))]);

        let grid = uniform_grid();
        let d = decompose(&grid, &grid).unwrap();
        let zero_cert = DualCertificate {
            formulation: Formulation::Quasisure,
            x_support: grid.atoms().iter().map(|(x, _)| x.clone()).collect(),
            y_support: grid.atoms().iter().map(|(x, _)| x.clone()).collect(),
            phi: vec![CertValue::Finite(int(0)); 5],
            psi: vec![CertValue::Finite(int(0)); 5],
            h: vec![int(0); 5],
            value: int(0),
        };
        let gamma = monotonicity_set(&zero_cert, &RewardSpec::IndicatorOffdiag, &d);
        assert_eq!(gamma.len(), 5);
        assert!(gamma.iter().all(|(x, y)| x == y));
    }

    #[test]
    fn optimal_coupling_concentrates_on_gamma() {
        let (mu, nu) = two_component_pair();
        let solved =
            solve_primal_dual(&mu, &nu, &RewardSpec::IndicatorOffdiag, Formulation::Quasisure)
                .unwrap();
        let cert = solved.certificate.as_ref().unwrap();
        let gamma = monotonicity_set(cert, &RewardSpec::IndicatorOffdiag, &solved.decomposition);
        let coupling = solved.coupling.as_ref().unwrap();
        let check =
            check_optimality_via_gamma(coupling, &gamma, &RewardSpec::IndicatorOffdiag).unwrap();
        assert!(check.concentrated);
        assert!(check.optimal);

        // conditioning on X = 1 keeps concentration and per-marginal optimality
        let restricted = coupling.restrict_x(&[int(1)]);
        let check =
            check_optimality_via_gamma(&restricted, &gamma, &RewardSpec::IndicatorOffdiag)
                .unwrap();
        assert!(check.concentrated);
        assert!(check.optimal);
    }

    #[test]
    fn gauge_preserves_feasibility_value_and_gamma() {
        let (mu, nu) = two_component_pair();
        let f = RewardSpec::SquareDiff;
        let solved = solve_primal_dual(&mu, &nu, &f, Formulation::Quasisure).unwrap();
        let cert = solved.certificate.unwrap();
        let d = &solved.decomposition;
        let pairs = constraint_pairs(d, Formulation::Quasisure);
        let transformed = cert.gauge(&q(7, 3), &q(-5, 2));
        assert!(transformed.violations(&f, &pairs).is_empty());
        assert_eq!(
            transformed.objective(&mu, &nu).unwrap(),
            cert.objective(&mu, &nu).unwrap()
        );
        assert_eq!(
            monotonicity_set(&transformed, &f, d),
            monotonicity_set(&cert, &f, d)
        );
    }

    #[test]
    fn relax_lower_bound_examples() {
        let mu = DiscreteMeasure::dirac(int(0));
        let nu = meas(&[(-1, 1, 2), (1, 1, 2)]);
        let zero = vec![int(0)];
        let zero2 = vec![int(0), int(0)];

        let relaxed = relax_lower_bound(
            &mu,
            &nu,
            &RewardSpec::SquareDiff,
            (&zero, &zero2, &zero),
        );
        assert_eq!(relaxed.offset, int(0));
        assert_eq!(
            relaxed.reward.value(&int(0), &int(1)),
            RewardValue::Finite(int(1))
        );

        let f = RewardSpec::table(RewardValue::Finite(int(-1)), vec![]);
        let minus_one = vec![int(-1)];
        let relaxed = relax_lower_bound(&mu, &nu, &f, (&minus_one, &zero2, &zero));
        assert_eq!(relaxed.offset, int(-1));
        assert_eq!(
            relaxed.reward.value(&int(0), &int(1)),
            RewardValue::Finite(int(0))
        );
    }

    #[test]
    fn componentwise_certificate_normalizes_psi_at_endpoints() {
        let (mu, nu) = two_component_pair();
        let solved =
            solve_primal_dual(&mu, &nu, &RewardSpec::SquareDiff, Formulation::Componentwise)
                .unwrap();
        let cert = solved.certificate.unwrap();
        // J1 = [-2, 0], J2 = [0, 2]: psi must vanish at all three nu-atoms
        // that are component endpoints
        for y in [int(-2), int(0), int(2)] {
            assert_eq!(cert.psi_at(&y).unwrap().as_finite().unwrap(), &int(0));
        }
        // assembled certificate is feasible on the quasi-sure pairs
        let pairs = constraint_pairs(&solved.decomposition, Formulation::Quasisure);
        assert!(cert.violations(&RewardSpec::SquareDiff, &pairs).is_empty());
        // and its value matches the primal
        assert_eq!(MotValue::Finite(cert.value.clone()), solved.value);
    }

    #[test]
    fn endpoint_gap_consistency_on_components() {
        let (mu, nu) = two_component_pair();
        let d = decompose(&mu, &nu).unwrap();
        let gap = crate::measures::endpoint_slope_gap(&d.components[0], Side::Right).unwrap();
        assert_eq!(gap, q(1, 2));
    }
}
