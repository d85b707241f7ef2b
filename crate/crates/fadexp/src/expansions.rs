//! Asymptotic expansions of the fading-averaged MMSE and mutual information.
//!
//! The averaged quantities are Mellin-type convolutions of the gain-power
//! kernel `f(t) = t·g(t)` (with `g` the density of the squared gain
//! `T = |h|²`) against the canonical curves:
//!
//! * averaged MMSE: `∫ f(t)·mmse(snr·t) dt = E[T·mmse(snr·T)]`, the quantity
//!   whose integral over snr is the averaged mutual information;
//! * averaged MI: `E[I(snr·T)]` in nats.
//!
//! At **high SNR** the integral localizes near `t = 0`, so the small-t
//! expansion of the kernel integrates termwise: a kernel term `p·t^a` becomes
//! `p · (∫ t^a mmse(t) dt) · snr^{-1-a}`. Kernel terms carrying `(ln t)^n`
//! factors (custom kernels) produce `(ln snr)^j` terms, as does the Gaussian
//! input, whose slower `1/(1+t)` canonical decay turns the series into a
//! residue sum with double poles wherever a kernel exponent collides with an
//! integer. At **low SNR** the roles swap: moments of the kernel pair with
//! one-sided derivatives of the canonical MMSE at zero.
//!
//! All series here are asymptotic, not convergent: each [`Expansion`] stores
//! finitely many terms plus the exponent of its truncation bound, and
//! [`Expansion::evaluate`] warns when asked for values outside the regime
//! where the truncation is meaningful.

use serde::Serialize;
use std::f64::consts::PI;

use crate::canonical::CanonicalCurve;
use crate::constellation::{Constellation, InputKind};
use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::mellin;
use crate::reference;
use crate::specfun;

/// Hard cap on requested high-SNR terms; the factorial-type growth of the
/// coefficients makes deeper truncations useless at any reachable SNR.
pub const MAX_HIGH_SNR_TERMS: usize = 12;
/// Hard cap on requested low-SNR terms, limited by how many one-sided
/// derivatives of the canonical MMSE can be estimated reliably.
pub const MAX_LOW_SNR_TERMS: usize = 6;
/// Default truncation depth at high SNR.
pub const DEFAULT_HIGH_SNR_TERMS: usize = 4;
/// Default truncation depth at low SNR.
pub const DEFAULT_LOW_SNR_TERMS: usize = 3;

/// Which end of the SNR axis an expansion describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Terms in strictly descending powers of snr; trusted for snr ≥ 10.
    HighSnr,
    /// Terms in strictly ascending powers of snr; trusted for snr ≤ 0.1.
    LowSnr,
}

/// One expansion term `coeff · snr^snr_pow · (ln snr)^log_pow`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Term {
    pub coeff: f64,
    pub snr_pow: f64,
    pub log_pow: u32,
}

/// A truncated asymptotic expansion
/// `constant + Σ coeff·snr^{snr_pow}·(ln snr)^{log_pow}`.
///
/// Terms are sorted by decreasing influence in the expansion's regime:
/// descending `snr_pow` at high SNR, ascending at low SNR, and descending
/// `log_pow` among terms sharing a power of snr. `error_order` is the
/// exponent `R` of the truncation bound — the remainder is `O(snr^{-R})`
/// at high SNR or `O(snr^{R})` at low SNR, up to logarithmic factors. A
/// kernel whose small-t behaviour is exponentially suppressed has no
/// power-law terms at all; that degenerate case is reported as an empty
/// term list with `error_order = +∞` (which serializes to JSON `null`).
#[derive(Clone, Debug, Serialize)]
pub struct Expansion {
    pub constant: f64,
    pub terms: Vec<Term>,
    pub regime: Regime,
    pub error_order: f64,
}

impl Expansion {
    /// Numerical value of the truncated series at `snr`.
    ///
    /// Outside the regime's trust region (see [`Expansion::trust_warning`])
    /// the series is still evaluated, but a warning is printed to stderr:
    /// a truncated asymptotic series makes no accuracy promise there.
    /// Returns NaN for `snr ≤ 0` or non-finite `snr`.
    pub fn evaluate(&self, snr: f64) -> f64 {
        if let Some(msg) = self.trust_warning(snr) {
            eprintln!("warning: {msg}");
        }
        self.eval_raw(snr)
    }

    fn eval_raw(&self, snr: f64) -> f64 {
        if !(snr > 0.0) || !snr.is_finite() {
            return f64::NAN;
        }
        let ln = snr.ln();
        let mut acc = self.constant;
        for t in &self.terms {
            acc += t.coeff * snr.powf(t.snr_pow) * powi_u32(ln, t.log_pow);
        }
        acc
    }

    /// The message [`Expansion::evaluate`] would print at `snr`, if any.
    /// High-SNR truncations are flagged below snr = 10, low-SNR ones above
    /// snr = 0.1.
    pub fn trust_warning(&self, snr: f64) -> Option<String> {
        match self.regime {
            Regime::HighSnr if snr < 10.0 => Some(format!(
                "high-SNR expansion evaluated at snr = {snr:.3e}, below its trust \
                 region (snr >= 10); the truncated series makes no accuracy promise here"
            )),
            Regime::LowSnr if snr > 0.1 => Some(format!(
                "low-SNR expansion evaluated at snr = {snr:.3e}, above its trust \
                 region (snr <= 0.1); the truncated series makes no accuracy promise here"
            )),
            _ => None,
        }
    }

    /// Termwise d/d(snr); the constant drops and the remainder bound shifts
    /// by one power. Used to check the MI/MMSE differential relation.
    pub(crate) fn derivative(&self) -> Expansion {
        let mut terms: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if t.snr_pow != 0.0 {
                terms.push(Term {
                    coeff: t.coeff * t.snr_pow,
                    snr_pow: t.snr_pow - 1.0,
                    log_pow: t.log_pow,
                });
            }
            if t.log_pow > 0 {
                terms.push(Term {
                    coeff: t.coeff * f64::from(t.log_pow),
                    snr_pow: t.snr_pow - 1.0,
                    log_pow: t.log_pow - 1,
                });
            }
        }
        sort_terms(&mut terms, self.regime);
        // a power-rule entry and a log-rule entry can land on the same
        // (snr_pow, log_pow) slot; combine them
        terms.dedup_by(|later, earlier| {
            if later.snr_pow == earlier.snr_pow && later.log_pow == earlier.log_pow {
                earlier.coeff += later.coeff;
                true
            } else {
                false
            }
        });
        let error_order = match self.regime {
            Regime::HighSnr => self.error_order + 1.0,
            Regime::LowSnr => self.error_order - 1.0,
        };
        Expansion {
            constant: 0.0,
            terms,
            regime: self.regime,
            error_order,
        }
    }
}

fn powi_u32(x: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * x)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

fn binomial(n: u32, j: u32) -> f64 {
    let j = j.min(n - j);
    (0..j).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn neg1pow(j: u32) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn sort_terms(terms: &mut [Term], regime: Regime) {
    terms.sort_by(|a, b| {
        let by_pow = match regime {
            Regime::HighSnr => b.snr_pow.partial_cmp(&a.snr_pow).expect("finite snr_pow"),
            Regime::LowSnr => a.snr_pow.partial_cmp(&b.snr_pow).expect("finite snr_pow"),
        };
        by_pow.then(b.log_pow.cmp(&a.log_pow))
    });
}

/// Assemble an expansion: reject non-finite entries, order the terms for the
/// regime, and verify no two terms share an (snr_pow, log_pow) slot.
fn build(constant: f64, mut terms: Vec<Term>, regime: Regime, error_order: f64) -> Result<Expansion> {
    for t in &terms {
        if !t.coeff.is_finite() || !t.snr_pow.is_finite() {
            return Err(Error::no_conv(
                "expansion",
                format!(
                    "non-finite expansion term (coeff {:e} at snr_pow {})",
                    t.coeff, t.snr_pow
                ),
                f64::NAN,
            ));
        }
    }
    sort_terms(&mut terms, regime);
    for w in terms.windows(2) {
        if w[0].snr_pow == w[1].snr_pow && w[0].log_pow == w[1].log_pow {
            return Err(Error::domain(
                "expansion",
                format!(
                    "two terms share snr_pow {} and log_pow {}",
                    w[0].snr_pow, w[0].log_pow
                ),
            ));
        }
    }
    Ok(Expansion {
        constant,
        terms,
        regime,
        error_order,
    })
}

/// `∫ t^z mmse(t) dt`, routed through the closed forms where they exist.
fn mellin_mmse_value(curve: &CanonicalCurve, z: f64) -> Result<f64> {
    match curve.input().label.as_str() {
        "bpsk" => Ok(mellin::mellin_mmse_bpsk(z)?.value),
        "qpsk" => Ok(mellin::mellin_mmse_qpsk(z)?.value),
        _ => Ok(mellin::mellin_mmse_numeric(curve, z)?.value),
    }
}

fn check_term_budget(op: &'static str, m_terms: usize, cap: usize) -> Result<()> {
    if m_terms > cap {
        return Err(Error::domain(
            op,
            format!("m_terms = {m_terms} exceeds the cap of {cap}"),
        ));
    }
    Ok(())
}

fn require_discrete(input: &Constellation, op: &'static str) -> Result<()> {
    match input.kind {
        InputKind::Discrete(_) => Ok(()),
        _ => Err(Error::domain(
            op,
            format!("input '{}' is not a discrete constellation", input.label),
        )),
    }
}

/// The named kernels have closed-form small-t data; custom kernels must go
/// through [`general_high_snr`], which handles their logarithmic terms.
fn require_closed_form(model: &FadingModel, op: &'static str) -> Result<()> {
    model.validate()?;
    if matches!(model, FadingModel::Custom { .. }) {
        return Err(Error::Unsupported(format!(
            "{op}: custom kernels are handled by general_high_snr"
        )));
    }
    Ok(())
}

/// High-SNR expansion of the averaged MMSE for a discrete input:
/// `Σ_m p_m · (∫ t^{a_m} mmse(t) dt) · snr^{-1-a_m}`, with `(a_m, p_m)` the
/// kernel's small-t expansion. Truncating after `m_terms` terms leaves a
/// remainder of the order of the first omitted power.
pub fn high_snr_avg_mmse_discrete(
    model: &FadingModel,
    input: &Constellation,
    m_terms: usize,
) -> Result<Expansion> {
    const OP: &str = "high_snr_avg_mmse_discrete";
    check_term_budget(OP, m_terms, MAX_HIGH_SNR_TERMS)?;
    require_discrete(input, OP)?;
    require_closed_form(model, OP)?;
    let coeffs = model.small_t_coefficients(m_terms + 1)?;
    let curve = CanonicalCurve::new(input.clone())?;
    let mut terms = Vec::with_capacity(m_terms);
    for &(a, p) in &coeffs[..m_terms] {
        let mv = mellin_mmse_value(&curve, a)?;
        terms.push(Term {
            coeff: p * mv,
            snr_pow: -1.0 - a,
            log_pow: 0,
        });
    }
    build(0.0, terms, Regime::HighSnr, 1.0 + coeffs[m_terms].0)
}

/// High-SNR expansion of the averaged mutual information (nats) for a
/// discrete input. The constant is the input entropy the MI saturates to;
/// integrating the matching MMSE expansion down from infinity divides each
/// coefficient by its kernel exponent and raises the power by one.
pub fn high_snr_avg_mi_discrete(
    model: &FadingModel,
    input: &Constellation,
    m_terms: usize,
) -> Result<Expansion> {
    const OP: &str = "high_snr_avg_mi_discrete";
    check_term_budget(OP, m_terms, MAX_HIGH_SNR_TERMS)?;
    require_discrete(input, OP)?;
    require_closed_form(model, OP)?;
    let coeffs = model.small_t_coefficients(m_terms + 1)?;
    let curve = CanonicalCurve::new(input.clone())?;
    let entropy = curve
        .entropy()
        .ok_or_else(|| Error::domain(OP, "input has no finite saturation entropy"))?;
    let mut terms = Vec::with_capacity(m_terms);
    for &(a, p) in &coeffs[..m_terms] {
        let mv = mellin_mmse_value(&curve, a)?;
        terms.push(Term {
            coeff: -p * mv / a,
            snr_pow: -a,
            log_pow: 0,
        });
    }
    build(entropy, terms, Regime::HighSnr, coeffs[m_terms].0)
}

/// High-SNR expansion of the averaged MMSE for a continuous-alphabet input.
///
/// The infinite uniform families admit exactly one certified term, `ζ/snr`
/// with `ζ = ½` (`inf-psk`, `inf-pam`) or `1` (`inf-qam`): their canonical
/// MMSE decays like `ζ/t` with a remainder too slow to integrate into a
/// second power-law term, which also caps the remainder order. The Gaussian
/// input (`mmse(t) = 1/(1+t)`) gets a full residue series; see
/// [`general_high_snr`] for the discrete-input analogue. For the Gaussian
/// input `m_terms` counts poles of the underlying transform, so a double
/// pole contributes a `ln(snr)` term *and* a plain term at the same power.
pub fn high_snr_avg_mmse_continuous(
    model: &FadingModel,
    input: &Constellation,
    m_terms: usize,
) -> Result<Expansion> {
    const OP: &str = "high_snr_avg_mmse_continuous";
    check_term_budget(OP, m_terms, MAX_HIGH_SNR_TERMS)?;
    require_closed_form(model, OP)?;
    match input.kind {
        InputKind::InfPsk | InputKind::InfPam | InputKind::InfQam => {
            let zeta = if matches!(input.kind, InputKind::InfQam) {
                1.0
            } else {
                0.5
            };
            // the canonical remainder integrates no further than snr^{-2}
            // (inf-psk) or snr^{-3/2} (quadrature components of inf-pam and
            // inf-qam), whichever the kernel exponent does not cut earlier
            let cap = if matches!(input.kind, InputKind::InfPsk) {
                2.0
            } else {
                1.5
            };
            if m_terms == 0 {
                return build(0.0, Vec::new(), Regime::HighSnr, 1.0);
            }
            let mass = model.mellin_f(0.0)?; // kernel mass: 1 for any true density
            let a0 = model.small_t_coefficients(1)?[0].0;
            let terms = vec![Term {
                coeff: zeta * mass,
                snr_pow: -1.0,
                log_pow: 0,
            }];
            build(0.0, terms, Regime::HighSnr, (a0 + 1.0).min(cap))
        }
        InputKind::Gaussian => gaussian_residue_series(model, m_terms),
        InputKind::Discrete(_) => Err(Error::domain(
            OP,
            format!(
                "input '{}' is discrete; use high_snr_avg_mmse_discrete",
                input.label
            ),
        )),
    }
}

/// Residue series for the Gaussian input. The averaged MMSE is a Mellin
/// convolution of the kernel with `1/(1+t)`; shifting the inversion contour
/// of `π·C(z)/sin(πz)` (with `C` the continued kernel transform
/// `∫ t^{-z} f(t) dt`) across its poles converts each pole into a term.
/// Poles sit at the positive integers (from the sine) and at `1 + a_m`
/// (from the kernel); a collision makes the pole double and produces a
/// `ln(snr)` term alongside the plain one.
fn gaussian_residue_series(model: &FadingModel, m_terms: usize) -> Result<Expansion> {
    enum Family {
        /// kernel exponents k, k+1, …: every pole at z ≥ k+1 is double
        Integer(usize),
        /// kernel exponents μ+m interleave with the integer poles
        Fractional(f64),
    }
    let family = match model {
        FadingModel::Nakagami { shape_mu, .. } => {
            if (shape_mu - shape_mu.round()).abs() < 1e-9 {
                Family::Integer(shape_mu.round() as usize)
            } else {
                Family::Fractional(*shape_mu)
            }
        }
        _ => {
            let (k, _, _) = model
                .gauss_params()
                .expect("named models are gauss-family or Nakagami");
            Family::Integer(k as usize)
        }
    };
    let mut terms = Vec::new();
    let error_order;
    match family {
        Family::Integer(k) => {
            for m in 0..m_terms.min(k) {
                // simple pole at z = m+1: residue (-1)^m · C(m+1) against
                // snr^{-1-m}; C(m+1) continues the moment E[T^{-m}]
                let c = model.mellin_f_continued((m + 1) as f64, 0)?;
                terms.push(Term {
                    coeff: neg1pow(m as u32) * c,
                    snr_pow: -1.0 - m as f64,
                    log_pow: 0,
                });
            }
            for j in 0..m_terms.saturating_sub(k) {
                let z0 = (k + 1 + j) as f64;
                let (b0, b1) = double_pole_bracket(model, z0)?;
                terms.push(Term {
                    coeff: b0,
                    snr_pow: -z0,
                    log_pow: 1,
                });
                terms.push(Term {
                    coeff: -b1,
                    snr_pow: -z0,
                    log_pow: 0,
                });
            }
            error_order = (m_terms + 1) as f64;
        }
        Family::Fractional(mu) => {
            let fracs = if m_terms > 0 {
                model.small_t_coefficients(m_terms)?
            } else {
                Vec::new()
            };
            let (mut i, mut j) = (0usize, 0usize);
            for _ in 0..m_terms {
                let pow_int = 1.0 + i as f64;
                let pow_frac = 1.0 + mu + j as f64;
                if pow_int < pow_frac {
                    let c = model.mellin_f_continued((i + 1) as f64, 0)?;
                    terms.push(Term {
                        coeff: neg1pow(i as u32) * c,
                        snr_pow: -pow_int,
                        log_pow: 0,
                    });
                    i += 1;
                } else {
                    // simple pole of C at z = 1 + μ + j: residue is the
                    // kernel coefficient against π/sin(πz)
                    let (a, p) = fracs[j];
                    terms.push(Term {
                        coeff: p * PI / specfun::sin_pi(1.0 + a),
                        snr_pow: -1.0 - a,
                        log_pow: 0,
                    });
                    j += 1;
                }
            }
            error_order = (1.0 + i as f64).min(1.0 + mu + j as f64);
        }
    }
    build(0.0, terms, Regime::HighSnr, error_order)
}

/// Both factors of the residue at a double pole `z0`: with
/// `B(z) = (z-z0)²·π·C(z)/sin(πz)` regular at `z0`, the pole contributes
/// `B(z0)·ln(snr)·snr^{-z0} - B'(z0)·snr^{-z0}`. The kernel transform pins
/// `C` only off the pole, so `B` and `B'` come from Richardson-extrapolated
/// symmetric evaluations at `z0 ± δ` and `z0 ± δ/2`.
fn double_pole_bracket(model: &FadingModel, z0: f64) -> Result<(f64, f64)> {
    let b_at = |z: f64| -> Result<f64> {
        let c = model.mellin_f_continued(z, 0)?;
        Ok((z - z0) * (z - z0) * PI * c / specfun::sin_pi(z))
    };
    let d = 1e-3;
    let (p1, m1) = (b_at(z0 + d)?, b_at(z0 - d)?);
    let (p2, m2) = (b_at(z0 + 0.5 * d)?, b_at(z0 - 0.5 * d)?);
    let b0 = (4.0 * 0.5 * (p2 + m2) - 0.5 * (p1 + m1)) / 3.0;
    let b1 = (4.0 * (p2 - m2) / d - (p1 - m1) / (2.0 * d)) / 3.0;
    Ok((b0, b1))
}

/// Low-SNR expansion of the averaged MMSE: kernel moments against one-sided
/// derivatives of the canonical MMSE at zero,
/// `Σ_m E[T^{m+1}] · mmse^{(m)}(0⁺)/m! · snr^m`.
pub fn low_snr_avg_mmse(
    model: &FadingModel,
    input: &Constellation,
    m_terms: usize,
) -> Result<Expansion> {
    const OP: &str = "low_snr_avg_mmse";
    check_term_budget(OP, m_terms, MAX_LOW_SNR_TERMS)?;
    model.validate()?;
    let curve = CanonicalCurve::new(input.clone())?;
    let mut terms = Vec::with_capacity(m_terms);
    for m in 0..m_terms {
        let moment = model.mellin_f((m + 1) as f64)?;
        let deriv = curve.mmse_deriv_at_zero(m as u32)?;
        terms.push(Term {
            coeff: moment * deriv.value / factorial(m),
            snr_pow: m as f64,
            log_pow: 0,
        });
    }
    build(0.0, terms, Regime::LowSnr, m_terms as f64)
}

/// Low-SNR expansion of the averaged mutual information (nats): the termwise
/// integral of [`low_snr_avg_mmse`] from zero.
pub fn low_snr_avg_mi(
    model: &FadingModel,
    input: &Constellation,
    m_terms: usize,
) -> Result<Expansion> {
    const OP: &str = "low_snr_avg_mi";
    check_term_budget(OP, m_terms, MAX_LOW_SNR_TERMS)?;
    model.validate()?;
    let curve = CanonicalCurve::new(input.clone())?;
    let mut terms = Vec::with_capacity(m_terms);
    for m in 0..m_terms {
        let moment = model.mellin_f((m + 1) as f64)?;
        let deriv = curve.mmse_deriv_at_zero(m as u32)?;
        terms.push(Term {
            coeff: moment * deriv.value / (factorial(m) * (m + 1) as f64),
            snr_pow: (m + 1) as f64,
            log_pow: 0,
        });
    }
    build(0.0, terms, Regime::LowSnr, (m_terms + 1) as f64)
}

/// High-SNR machinery for custom kernels, whose small-t terms
/// `p·t^a·(ln t)^n` may carry logarithmic factors. Each exponent group maps
/// to the power `snr^{-1-a}`; within a group the coefficient of
/// `(ln snr)^j` combines the declared kernel coefficients with log-weighted
/// transforms of the canonical MMSE:
///
/// `c_j = Σ_{n ≥ j} p_{a,n} · C(n,j) · (-1)^j · ∫ t^a (ln t)^{n-j} mmse(t) dt`.
///
/// A kernel flagged `q_nonzero` (exponentially suppressed small-t remainder)
/// admits no power-law terms at all: the result is an empty expansion with
/// `error_order = +∞`. When the declared coefficient list is exhausted
/// before `m_terms` groups, the reported order is the soft bound at the last
/// declared exponent.
pub fn general_high_snr(
    model: &FadingModel,
    input: &Constellation,
    m_terms: usize,
) -> Result<Expansion> {
    const OP: &str = "general_high_snr";
    check_term_budget(OP, m_terms, MAX_HIGH_SNR_TERMS)?;
    require_discrete(input, OP)?;
    let FadingModel::Custom { custom } = model else {
        return Err(Error::domain(
            OP,
            "takes a custom kernel; named models have dedicated expansions",
        ));
    };
    model.validate()?;
    if custom.q_nonzero {
        return Ok(Expansion {
            constant: 0.0,
            terms: Vec::new(),
            regime: Regime::HighSnr,
            error_order: f64::INFINITY,
        });
    }
    // group the declared coefficients by exponent; validate() guarantees
    // ascending exponents with ascending log powers inside each group
    let mut groups: Vec<(f64, Vec<(u32, f64)>)> = Vec::new();
    for c in &custom.coeffs {
        match groups.last_mut() {
            Some((a, list)) if (c.a - *a).abs() <= 1e-12 => list.push((c.log_power, c.p)),
            _ => groups.push((c.a, vec![(c.log_power, c.p)])),
        }
    }
    if groups.is_empty() {
        return Err(Error::domain(
            OP,
            "custom kernel declares no small-t coefficients",
        ));
    }
    let used = groups.len().min(m_terms);
    let curve = CanonicalCurve::new(input.clone())?;
    let mut terms = Vec::new();
    for (a, entries) in &groups[..used] {
        let n_max = entries.iter().map(|&(n, _)| n).max().unwrap_or(0);
        for j in (0..=n_max).rev() {
            let mut coeff = 0.0;
            for &(n, p) in entries.iter() {
                if n < j {
                    continue;
                }
                let mv = mellin::mellin_mmse_log_weighted(&curve, 1.0 + a, n - j)?;
                coeff += p * binomial(n, j) * neg1pow(j) * mv;
            }
            terms.push(Term {
                coeff,
                snr_pow: -1.0 - a,
                log_pow: j,
            });
        }
    }
    let error_order = if groups.len() > used {
        1.0 + groups[used].0
    } else {
        1.0 + groups[used - 1].0
    };
    build(0.0, terms, Regime::HighSnr, error_order)
}

/// Empirical high-SNR decay exponent of the averaged MMSE: the
/// least-squares slope of `-ln(avg_mmse)` against `ln(snr)` over five
/// points spaced evenly in dB across `[snr_lo_db, snr_hi_db]`, each point
/// computed by direct numerical integration.
pub fn decay_rate(
    model: &FadingModel,
    input: &Constellation,
    snr_lo_db: f64,
    snr_hi_db: f64,
) -> Result<f64> {
    if !snr_lo_db.is_finite() || !snr_hi_db.is_finite() || snr_hi_db <= snr_lo_db {
        return Err(Error::domain(
            "decay_rate",
            format!("need finite snr_lo_db < snr_hi_db, got [{snr_lo_db}, {snr_hi_db}]"),
        ));
    }
    const POINTS: usize = 5;
    let mut xs = [0.0f64; POINTS];
    let mut ys = [0.0f64; POINTS];
    for (i, (x, y)) in xs.iter_mut().zip(ys.iter_mut()).enumerate() {
        let db = snr_lo_db + (snr_hi_db - snr_lo_db) * i as f64 / (POINTS - 1) as f64;
        let snr = 10f64.powf(db / 10.0);
        // slope extraction needs far less point accuracy than the default
        let avg = reference::avg_mmse_quad_at(model, input, snr, 1e-6)?;
        *x = snr.ln();
        *y = -avg.value.ln();
    }
    let xbar = xs.iter().sum::<f64>() / POINTS as f64;
    let ybar = ys.iter().sum::<f64>() / POINTS as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..POINTS {
        num += (xs[i] - xbar) * (ys[i] - ybar);
        den += (xs[i] - xbar) * (xs[i] - xbar);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::{CustomCoeff, CustomFading};
    use crate::specfun::{EULER_GAMMA, SQRT_PI};
    use std::f64::consts::FRAC_1_SQRT_2;
    use std::sync::Arc;

    fn parse(label: &str) -> Constellation {
        Constellation::parse(label).unwrap()
    }

    fn rayleigh(sigma: f64) -> FadingModel {
        FadingModel::Rayleigh { sigma }
    }

    fn assert_rel(actual: f64, expected: f64, rel: f64, what: &str) {
        let denom = expected.abs().max(1e-300);
        assert!(
            (actual - expected).abs() <= rel * denom,
            "{what}: actual {actual:.17e}, expected {expected:.17e}, rel err {:.3e} > {rel:.1e}",
            (actual - expected).abs() / denom
        );
    }

    #[test]
    fn discrete_high_snr_terms_match_the_closed_forms() {
        let qpsk = parse("qpsk");

        // unit-mean-square Rayleigh: a single term (∫ t·mmse dt)/snr²
        let e = high_snr_avg_mmse_discrete(&rayleigh(FRAC_1_SQRT_2), &qpsk, 1).unwrap();
        let m2 = mellin::mellin_mmse_qpsk(1.0).unwrap().value;
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.regime, Regime::HighSnr);
        assert_eq!(e.constant, 0.0);
        assert_rel(e.terms[0].coeff, m2, 1e-12, "rayleigh leading coeff");
        assert_eq!(e.terms[0].snr_pow, -2.0);
        assert_eq!(e.terms[0].log_pow, 0);
        assert_rel(e.error_order, 3.0, 1e-12, "rayleigh error order");

        // Nakagami shape ½, spread 1: (½^½/Γ(½))·(∫ t^½ mmse dt)·snr^{-3/2}
        let naka = FadingModel::Nakagami {
            shape_mu: 0.5,
            spread_w: 1.0,
        };
        let e = high_snr_avg_mmse_discrete(&naka, &qpsk, 1).unwrap();
        let m15 = mellin::mellin_mmse_qpsk(0.5).unwrap().value;
        let p0 = 0.5f64.powf(0.5) / SQRT_PI;
        assert_rel(e.terms[0].coeff, p0 * m15, 1e-12, "nakagami leading coeff");
        assert_rel(e.terms[0].snr_pow, -1.5, 1e-12, "nakagami power");
        assert_rel(e.error_order, 2.5, 1e-12, "nakagami error order");

        // Ricean σ = ½, |μ| = 1 (line-of-sight ratio a = 2): hand-expanded
        // kernel coefficients p₀ = 2e⁻², p₁ = 4e⁻²
        let rice = FadingModel::Ricean {
            sigma: 0.5,
            mu_abs: 1.0,
        };
        let e = high_snr_avg_mmse_discrete(&rice, &qpsk, 2).unwrap();
        let m3 = mellin::mellin_mmse_qpsk(2.0).unwrap().value;
        let scale = (-2.0f64).exp();
        assert_rel(e.terms[0].coeff, 2.0 * scale * m2, 1e-12, "ricean coeff 0");
        assert_rel(e.terms[1].coeff, 4.0 * scale * m3, 1e-12, "ricean coeff 1");
        assert_eq!((e.terms[0].snr_pow, e.terms[1].snr_pow), (-2.0, -3.0));
    }

    #[test]
    fn mi_expansion_divides_by_the_exponent_and_keeps_the_entropy() {
        let qpsk = parse("qpsk");
        let naka = FadingModel::Nakagami {
            shape_mu: 0.8,
            spread_w: 1.3,
        };
        let mmse = high_snr_avg_mmse_discrete(&naka, &qpsk, 3).unwrap();
        let mi = high_snr_avg_mi_discrete(&naka, &qpsk, 3).unwrap();
        assert_rel(mi.constant, 4.0f64.ln(), 1e-12, "saturation entropy");
        for (m, (tm, ti)) in mmse.terms.iter().zip(&mi.terms).enumerate() {
            let a = 0.8 + m as f64;
            assert_rel(ti.coeff, -tm.coeff / a, 1e-12, "mi coeff");
            assert_rel(ti.snr_pow, tm.snr_pow + 1.0, 1e-12, "mi power");
        }
        assert_rel(mi.error_order, mmse.error_order - 1.0, 1e-12, "mi error order");
    }

    #[test]
    fn mutual_information_derivative_recovers_the_mmse_expansion() {
        let cases: Vec<(FadingModel, &str)> = vec![
            (rayleigh(FRAC_1_SQRT_2), "qpsk"),
            (
                FadingModel::Nakagami {
                    shape_mu: 0.7,
                    spread_w: 1.3,
                },
                "bpsk",
            ),
            (
                FadingModel::VectorGaussian {
                    k: 2,
                    sigma: 0.6,
                    mu_abs: 0.9,
                },
                "qpsk",
            ),
        ];
        for (model, label) in cases {
            let input = parse(label);
            let mmse = high_snr_avg_mmse_discrete(&model, &input, 4).unwrap();
            let mi = high_snr_avg_mi_discrete(&model, &input, 4).unwrap();
            let d = mi.derivative();
            assert_eq!(d.terms.len(), mmse.terms.len());
            for (td, tm) in d.terms.iter().zip(&mmse.terms) {
                assert_rel(td.coeff, tm.coeff, 1e-12, "high-SNR termwise derivative");
                assert_eq!(td.snr_pow, tm.snr_pow);
                assert_eq!(td.log_pow, tm.log_pow);
            }
            let mmse = low_snr_avg_mmse(&model, &input, 3).unwrap();
            let mi = low_snr_avg_mi(&model, &input, 3).unwrap();
            let d = mi.derivative();
            assert_eq!(d.terms.len(), mmse.terms.len());
            for (td, tm) in d.terms.iter().zip(&mmse.terms) {
                assert_rel(td.coeff, tm.coeff, 1e-12, "low-SNR termwise derivative");
                assert_eq!(td.snr_pow, tm.snr_pow);
            }
        }
    }

    #[test]
    fn vector_length_one_equals_scalar_line_of_sight() {
        let qpsk = parse("qpsk");
        let rice = FadingModel::Ricean {
            sigma: 0.6,
            mu_abs: 0.9,
        };
        let vec1 = FadingModel::VectorGaussian {
            k: 1,
            sigma: 0.6,
            mu_abs: 0.9,
        };
        let a = high_snr_avg_mmse_discrete(&rice, &qpsk, 4).unwrap();
        let b = high_snr_avg_mmse_discrete(&vec1, &qpsk, 4).unwrap();
        assert_eq!(a.terms.len(), b.terms.len());
        for (ta, tb) in a.terms.iter().zip(&b.terms) {
            assert_rel(tb.coeff, ta.coeff, 1e-12, "high-SNR mmse coeff");
            assert_eq!(ta.snr_pow, tb.snr_pow);
        }
        let a = high_snr_avg_mi_discrete(&rice, &qpsk, 4).unwrap();
        let b = high_snr_avg_mi_discrete(&vec1, &qpsk, 4).unwrap();
        assert_eq!(a.constant, b.constant);
        for (ta, tb) in a.terms.iter().zip(&b.terms) {
            assert_rel(tb.coeff, ta.coeff, 1e-12, "high-SNR mi coeff");
        }
        let a = low_snr_avg_mmse(&rice, &qpsk, 3).unwrap();
        let b = low_snr_avg_mmse(&vec1, &qpsk, 3).unwrap();
        for (ta, tb) in a.terms.iter().zip(&b.terms) {
            assert_rel(tb.coeff, ta.coeff, 1e-12, "low-SNR coeff");
        }
    }

    #[test]
    fn uniform_continuous_inputs_carry_one_certified_term() {
        let ray = rayleigh(FRAC_1_SQRT_2);
        let naka = FadingModel::Nakagami {
            shape_mu: 0.6,
            spread_w: 1.0,
        };
        let cases: [(&str, &FadingModel, f64, f64); 6] = [
            ("inf-psk", &ray, 0.5, 2.0),
            ("inf-pam", &ray, 0.5, 1.5),
            ("inf-qam", &ray, 1.0, 1.5),
            ("inf-psk", &naka, 0.5, 1.6),
            ("inf-pam", &naka, 0.5, 1.5),
            ("inf-qam", &naka, 1.0, 1.5),
        ];
        for (label, model, zeta, err) in cases {
            let e = high_snr_avg_mmse_continuous(model, &parse(label), 4).unwrap();
            assert_eq!(e.terms.len(), 1, "{label}");
            assert_rel(e.terms[0].coeff, zeta, 1e-12, label);
            assert_eq!(e.terms[0].snr_pow, -1.0);
            assert_eq!(e.terms[0].log_pow, 0);
            assert_rel(e.error_order, err, 1e-12, label);
        }
        // wrong-kind arguments are rejected with domain errors
        assert!(high_snr_avg_mmse_continuous(&ray, &parse("qpsk"), 2).is_err());
        assert!(high_snr_avg_mmse_discrete(&ray, &parse("gaussian"), 2).is_err());
        let custom = FadingModel::Custom {
            custom: CustomFading::default(),
        };
        assert!(high_snr_avg_mmse_continuous(&custom, &parse("inf-psk"), 1).is_err());
    }

    #[test]
    fn gaussian_input_rayleigh_series_has_the_euler_constant_pattern() {
        // unit-mean-square Rayleigh against the Gaussian input has the exact
        // average (1/snr)·e^{1/snr}·E₁(1/snr) weighted by the gain power,
        // whose expansion is 1/snr − (ln snr − γ)/snr² − (ln snr + 1 − γ)/snr³…
        let e = high_snr_avg_mmse_continuous(&rayleigh(FRAC_1_SQRT_2), &parse("gaussian"), 3)
            .unwrap();
        assert_eq!(e.terms.len(), 5);
        let expect = [
            (1.0, -1.0, 0u32),
            (-1.0, -2.0, 1),
            (EULER_GAMMA, -2.0, 0),
            (-1.0, -3.0, 1),
            (EULER_GAMMA - 1.0, -3.0, 0),
        ];
        for (t, (c, p, l)) in e.terms.iter().zip(expect) {
            assert_rel(t.coeff, c, 1e-9, "rayleigh/gaussian residue");
            assert_rel(t.snr_pow, p, 1e-12, "pole power");
            assert_eq!(t.log_pow, l);
        }
        assert_rel(e.error_order, 4.0, 1e-12, "error order");
    }

    #[test]
    fn gaussian_input_series_tracks_the_oracle_at_high_snr() {
        let gauss = parse("gaussian");
        let cases: [(FadingModel, usize, f64, f64); 4] = [
            (rayleigh(FRAC_1_SQRT_2), 3, 1e3, 2e-8),
            (
                FadingModel::VectorGaussian {
                    k: 2,
                    sigma: 0.7,
                    mu_abs: 0.4,
                },
                3,
                1e3,
                1e-7,
            ),
            (
                FadingModel::Nakagami {
                    shape_mu: 2.0,
                    spread_w: 1.5,
                },
                3,
                1e3,
                1e-7,
            ),
            (
                FadingModel::Nakagami {
                    shape_mu: 0.5,
                    spread_w: 1.0,
                },
                4,
                1e4,
                1e-5,
            ),
        ];
        for (model, m, snr, tol) in cases {
            let e = high_snr_avg_mmse_continuous(&model, &gauss, m).unwrap();
            let oracle = reference::avg_mmse_quad(&model, &gauss, snr).unwrap();
            let approx = e.evaluate(snr);
            let rel = (approx - oracle.value).abs() / oracle.value;
            assert!(
                rel <= tol,
                "{model:?} at snr {snr}: expansion {approx:.12e} vs oracle {:.12e}, rel {rel:.3e} > {tol:.1e}",
                oracle.value
            );
        }
    }

    #[test]
    fn nakagami_noninteger_gaussian_series_matches_the_reflection_pattern() {
        // shape ½, unit spread: poles alternate between the kernel family
        // (half-integer powers, coefficients through the sine reflection)
        // and the integer family (continued moments)
        let naka = FadingModel::Nakagami {
            shape_mu: 0.5,
            spread_w: 1.0,
        };
        let e = high_snr_avg_mmse_continuous(&naka, &parse("gaussian"), 4).unwrap();
        assert_eq!(e.terms.len(), 4);
        let expect = [
            (1.0, -1.0),
            (-(PI / 2.0).sqrt(), -1.5),
            (1.0, -2.0),
            (-0.5f64.powf(1.5) * SQRT_PI, -2.5),
        ];
        for (t, (c, p)) in e.terms.iter().zip(expect) {
            assert_rel(t.coeff, c, 1e-10, "half-integer shape residue");
            assert_rel(t.snr_pow, p, 1e-12, "pole power");
            assert_eq!(t.log_pow, 0);
        }
        assert_rel(e.error_order, 3.0, 1e-12, "error order");
    }

    #[test]
    fn nakagami_gaussian_series_is_continuous_across_integer_shape() {
        let gauss = parse("gaussian");
        let snr = 1e4;
        let at = |mu: f64, m: usize| {
            high_snr_avg_mmse_continuous(
                &FadingModel::Nakagami {
                    shape_mu: mu,
                    spread_w: 1.0,
                },
                &gauss,
                m,
            )
            .unwrap()
            .evaluate(snr)
        };
        // the integer side resolves poles 1 and 2 (the latter double); the
        // fractional sides need three poles to reach the same depth, where
        // a near-cancelling pair mimics the double pole
        let integer = at(1.0, 2);
        let below = at(1.0 - 1e-4, 3);
        let above = at(1.0 + 1e-4, 3);
        assert_rel(below, integer, 1e-2, "shape just below 1");
        assert_rel(above, integer, 1e-2, "shape just above 1");
    }

    #[test]
    fn low_snr_coefficients_match_the_moment_formulas() {
        // Gaussian input: mmse(t) = 1/(1+t) has exact derivatives (-1)^m m!,
        // and Rayleigh moments are (m+1)!·(2σ²)^{m+1}, so the coefficients
        // come out (-1)^m·(m+1)!·(2σ²)^{m+1} exactly
        let sigma = 0.8f64;
        let ray = rayleigh(sigma);
        let gauss = parse("gaussian");
        let s2 = 2.0 * sigma * sigma;
        let e = low_snr_avg_mmse(&ray, &gauss, 4).unwrap();
        assert_eq!(e.regime, Regime::LowSnr);
        for (m, t) in e.terms.iter().enumerate() {
            let expect = neg1pow(m as u32) * factorial(m + 1) * s2.powi(m as i32 + 1);
            assert_rel(t.coeff, expect, 1e-12, "low-SNR mmse coeff");
            assert_eq!(t.snr_pow, m as f64);
            assert_eq!(t.log_pow, 0);
        }
        assert_rel(e.error_order, 4.0, 1e-12, "mmse error order");
        let e = low_snr_avg_mi(&ray, &gauss, 4).unwrap();
        for (m, t) in e.terms.iter().enumerate() {
            let expect = neg1pow(m as u32) * factorial(m + 1) * s2.powi(m as i32 + 1)
                / (m as f64 + 1.0);
            assert_rel(t.coeff, expect, 1e-12, "low-SNR mi coeff");
            assert_eq!(t.snr_pow, (m + 1) as f64);
        }
        assert_rel(e.error_order, 5.0, 1e-12, "mi error order");
        // every unit-mean-square kernel starts at E[T]·mmse(0) = 1
        let e = low_snr_avg_mmse(&rayleigh(FRAC_1_SQRT_2), &parse("qpsk"), 1).unwrap();
        assert_rel(e.terms[0].coeff, 1.0, 1e-10, "leading low-SNR coefficient");
    }

    #[test]
    fn low_snr_expansion_tracks_the_oracle_with_the_right_remainder_order() {
        let naka = FadingModel::Nakagami {
            shape_mu: 0.5,
            spread_w: 1.0,
        };
        let bpsk = parse("bpsk");
        let e3 = low_snr_avg_mmse(&naka, &bpsk, 3).unwrap();
        let e4 = low_snr_avg_mmse(&naka, &bpsk, 4).unwrap();
        let c3 = e4.terms[3].coeff.abs();
        for &snr in &[1e-4, 3e-4, 1e-3, 3e-3, 1e-2] {
            let oracle = reference::avg_mmse_quad(&naka, &bpsk, snr).unwrap();
            let diff = (e3.evaluate(snr) - oracle.value).abs();
            let bound = 2.0 * c3 * snr.powi(3) + 10.0 * oracle.est_abs_error;
            assert!(
                diff <= bound,
                "snr {snr:.1e}: |expansion - oracle| = {diff:.3e} exceeds the \
                 next-order bound {bound:.3e}"
            );
        }
    }

    #[test]
    fn general_machine_reproduces_the_named_kernel_expansion() {
        // a custom kernel declaring exactly the Rayleigh small-t data must
        // reproduce the closed-form route (numeric vs analytic transforms)
        let ray = rayleigh(FRAC_1_SQRT_2);
        let coeffs = ray.small_t_coefficients(4).unwrap();
        let custom = FadingModel::Custom {
            custom: CustomFading {
                coeffs: coeffs
                    .iter()
                    .map(|&(a, p)| CustomCoeff {
                        a,
                        p,
                        log_power: 0,
                    })
                    .collect(),
                q_nonzero: false,
                density: None,
            },
        };
        let qpsk = parse("qpsk");
        let direct = high_snr_avg_mmse_discrete(&ray, &qpsk, 3).unwrap();
        let general = general_high_snr(&custom, &qpsk, 3).unwrap();
        assert_eq!(direct.terms.len(), general.terms.len());
        for (td, tg) in direct.terms.iter().zip(&general.terms) {
            assert_rel(tg.coeff, td.coeff, 1e-9, "general vs closed-form coeff");
            assert_rel(tg.snr_pow, td.snr_pow, 1e-12, "power");
            assert_eq!(tg.log_pow, 0);
        }
        assert_rel(general.error_order, 1.0 + coeffs[3].0, 1e-12, "error order");
        // named models and custom kernels cannot swap entry points
        assert!(general_high_snr(&ray, &qpsk, 2).is_err());
        assert!(high_snr_avg_mmse_discrete(&custom, &qpsk, 2).is_err());
    }

    #[test]
    fn general_machine_with_log_terms_matches_direct_integration() {
        // kernel t·e^{-t}·(1 − ln t) below t = 1, continued by t·e^{-t}
        // above it: small-t terms (-1)^m/m! · t^{m+1} · (1 − ln t)
        let mut coeffs = Vec::new();
        for m in 0..4u32 {
            let p = neg1pow(m) / factorial(m as usize);
            coeffs.push(CustomCoeff {
                a: f64::from(m + 1),
                p,
                log_power: 0,
            });
            coeffs.push(CustomCoeff {
                a: f64::from(m + 1),
                p: -p,
                log_power: 1,
            });
        }
        let model = FadingModel::Custom {
            custom: CustomFading {
                coeffs,
                q_nonzero: false,
                density: Some(Arc::new(|t: f64| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    let base = t * (-t).exp();
                    if t <= 1.0 {
                        base * (1.0 - t.ln())
                    } else {
                        base
                    }
                })),
            },
        };
        let bpsk = parse("bpsk");
        let e = general_high_snr(&model, &bpsk, 3).unwrap();
        // every exponent group carries a ln(snr) entry and a plain entry
        assert_eq!(e.terms.len(), 6);
        for (g, pair) in e.terms.chunks(2).enumerate() {
            let pow = -2.0 - g as f64;
            assert_eq!((pair[0].snr_pow, pair[0].log_pow), (pow, 1));
            assert_eq!((pair[1].snr_pow, pair[1].log_pow), (pow, 0));
        }
        assert_rel(e.error_order, 5.0, 1e-12, "error order");
        let snr = 100.0;
        let oracle = reference::avg_mmse_quad(&model, &bpsk, snr).unwrap();
        let approx = e.evaluate(snr);
        let rel = (approx - oracle.value).abs() / oracle.value;
        assert!(
            rel <= 2e-3,
            "log-term expansion {approx:.9e} vs oracle {:.9e}, rel {rel:.3e}",
            oracle.value
        );

        // exponentially suppressed kernels admit no power-law terms: the
        // degenerate marker is an empty expansion with infinite order,
        // which serializes as null
        let degenerate = FadingModel::Custom {
            custom: CustomFading {
                coeffs: vec![CustomCoeff {
                    a: 1.0,
                    p: 1.0,
                    log_power: 0,
                }],
                q_nonzero: true,
                density: None,
            },
        };
        let e = general_high_snr(&degenerate, &bpsk, 3).unwrap();
        assert!(e.terms.is_empty());
        assert!(e.error_order.is_infinite());
        assert_eq!(e.evaluate(1e4), 0.0);
        let json = serde_json::to_value(&e).unwrap();
        assert!(json["error_order"].is_null());
        assert_eq!(json["regime"], "high_snr");
    }

    #[test]
    fn evaluate_applies_powers_logs_and_trust_bounds() {
        let e = Expansion {
            constant: 0.0,
            terms: vec![Term {
                coeff: 2.0,
                snr_pow: -2.0,
                log_pow: 0,
            }],
            regime: Regime::HighSnr,
            error_order: 3.0,
        };
        assert_rel(e.evaluate(10.0), 0.02, 1e-15, "single power");
        assert!(e.trust_warning(10.0).is_none());
        assert!(e.trust_warning(9.99).is_some());
        assert!(e.evaluate(-1.0).is_nan());

        let with_log = Expansion {
            constant: 1.0,
            terms: vec![Term {
                coeff: 3.0,
                snr_pow: -1.0,
                log_pow: 2,
            }],
            regime: Regime::HighSnr,
            error_order: 2.0,
        };
        let s = 100.0f64;
        assert_rel(
            with_log.evaluate(s),
            1.0 + 3.0 * s.ln() * s.ln() / s,
            1e-15,
            "log term",
        );

        let low = Expansion {
            constant: 0.25,
            terms: Vec::new(),
            regime: Regime::LowSnr,
            error_order: 1.0,
        };
        assert_eq!(low.evaluate(0.05), 0.25);
        assert!(low.trust_warning(0.05).is_none());
        assert!(low.trust_warning(0.2).is_some());
    }

    #[test]
    fn term_budgets_and_domains_are_enforced() {
        let ray = rayleigh(1.0);
        let qpsk = parse("qpsk");
        assert!(high_snr_avg_mmse_discrete(&ray, &qpsk, 13).is_err());
        assert!(high_snr_avg_mi_discrete(&ray, &qpsk, 13).is_err());
        assert!(low_snr_avg_mmse(&ray, &qpsk, 7).is_err());
        assert!(low_snr_avg_mi(&ray, &qpsk, 7).is_err());
        assert!(high_snr_avg_mi_discrete(&ray, &parse("inf-psk"), 2).is_err());
        assert!(decay_rate(&ray, &qpsk, 40.0, 30.0).is_err());
        // zero terms is lawful: an empty expansion carrying the error order
        // of the whole quantity
        let e = high_snr_avg_mmse_discrete(&ray, &qpsk, 0).unwrap();
        assert!(e.terms.is_empty());
        assert_rel(e.error_order, 2.0, 1e-12, "zero-term error order");
    }

    #[test]
    fn decay_rates_recover_the_kernel_exponents() {
        let ray = rayleigh(FRAC_1_SQRT_2);
        let naka = FadingModel::Nakagami {
            shape_mu: 0.5,
            spread_w: 1.0,
        };
        let r = decay_rate(&ray, &parse("gaussian"), 30.0, 40.0).unwrap();
        assert!((r - 1.0).abs() < 0.1, "rayleigh/gaussian decay {r}");
        let r = decay_rate(&ray, &parse("bpsk"), 30.0, 40.0).unwrap();
        assert!((r - 2.0).abs() < 0.1, "rayleigh/bpsk decay {r}");
        let r = decay_rate(&naka, &parse("bpsk"), 30.0, 40.0).unwrap();
        assert!((r - 1.5).abs() < 0.1, "nakagami/bpsk decay {r}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn closed_form_models() -> impl Strategy<Value = FadingModel> {
            prop_oneof![
                (0.4f64..1.3).prop_map(|sigma| FadingModel::Rayleigh { sigma }),
                ((0.5f64..1.2), (0.01f64..0.3)).prop_map(|(sigma, a)| FadingModel::Ricean {
                    sigma,
                    mu_abs: (a * 2.0 * sigma * sigma).sqrt(),
                }),
                ((0.5f64..2.5), (0.7f64..2.0)).prop_map(|(shape_mu, spread_w)| {
                    FadingModel::Nakagami { shape_mu, spread_w }
                }),
                ((1u32..=3), (0.5f64..1.2), (0.01f64..0.3)).prop_map(|(k, sigma, a)| {
                    FadingModel::VectorGaussian {
                        k,
                        sigma,
                        mu_abs: (a * 2.0 * sigma * sigma).sqrt(),
                    }
                }),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]
            #[test]
            fn expansions_are_ordered_dominated_and_consistent(
                model in closed_form_models(),
                use_bpsk in proptest::bool::ANY,
                m_terms in 1usize..=5,
                ln_snr in (1e3f64.ln())..(1e6f64.ln()),
            ) {
                let input = parse(if use_bpsk { "bpsk" } else { "qpsk" });
                let snr = ln_snr.exp();
                let mmse = high_snr_avg_mmse_discrete(&model, &input, m_terms).unwrap();
                let mi = high_snr_avg_mi_discrete(&model, &input, m_terms).unwrap();
                for e in [&mmse, &mi] {
                    for w in e.terms.windows(2) {
                        prop_assert!(w[1].snr_pow < w[0].snr_pow);
                    }
                    for t in &e.terms {
                        prop_assert!(t.coeff.is_finite());
                    }
                }
                // successive terms shrink inside the trust region
                for w in mmse.terms.windows(2) {
                    let hi = (w[0].coeff * snr.powf(w[0].snr_pow)).abs();
                    let lo = (w[1].coeff * snr.powf(w[1].snr_pow)).abs();
                    prop_assert!(lo < hi, "term growth at snr {}: {} !< {}", snr, lo, hi);
                }
                prop_assert!(mmse.evaluate(snr) > 0.0);
                // d(avg MI)/d(snr) = avg MMSE, termwise
                let d = mi.derivative();
                prop_assert_eq!(d.terms.len(), mmse.terms.len());
                for (td, tm) in d.terms.iter().zip(&mmse.terms) {
                    prop_assert!((td.coeff - tm.coeff).abs() <= 1e-12 * tm.coeff.abs());
                    prop_assert_eq!(td.snr_pow, tm.snr_pow);
                }
                // the low-SNR pair obeys the same differential relation
                let lo_mmse = low_snr_avg_mmse(&model, &input, 2).unwrap();
                let lo_mi = low_snr_avg_mi(&model, &input, 2).unwrap();
                prop_assert!(lo_mmse.terms[0].coeff > 0.0);
                for w in lo_mmse.terms.windows(2) {
                    prop_assert!(w[1].snr_pow > w[0].snr_pow);
                }
                let d = lo_mi.derivative();
                for (td, tm) in d.terms.iter().zip(&lo_mmse.terms) {
                    prop_assert!((td.coeff - tm.coeff).abs() <= 1e-12 * tm.coeff.abs());
                }
            }
        }
    }
}
