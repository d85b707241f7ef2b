//! Fading channel-gain models.
//!
//! A fading model describes the random amplitude gain `|h|` the channel
//! applies.  Everything downstream (averaged curves, asymptotic expansions,
//! power allocation) consumes a model through three computable views of the
//! squared-gain distribution:
//!
//! * the kernel `f(t) = t · density_{|h|²}(t)`, so that the channel-averaged
//!   MMSE is `∫ f(t) mmse(snr·t) dt` and the averaged mutual information is
//!   `∫ (f(t)/t) I(snr·t) dt`;
//! * the small-argument expansion `f(t) = Σ_m p_m t^{a_m}` as `t → 0⁺`,
//!   whose exponents and coefficients drive the high-SNR behaviour of the
//!   averaged curves;
//! * the Mellin transform `M[f; z] = ∫₀^∞ t^{z−1} f(t) dt` in closed form,
//!   plus its analytic continuation past the literal integral's domain
//!   (needed for the residue terms of Gaussian-input expansions).
//!
//! The scalar Rayleigh and Ricean models and the k-dimensional model with
//! independent complex Gaussian entries share a single implementation
//! (Rayleigh is the zero-mean scalar case, Ricean the k = 1 case), so the
//! documented reductions between them hold exactly, not just numerically.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::specfun;

/// Hard cap on the number of small-t expansion terms callers may request.
pub const MAX_SMALL_T_TERMS: usize = 30;

/// One term `p · t^a (ln t)^{log_power}` of a custom kernel's small-t
/// expansion. The named models never produce logarithmic factors; custom
/// kernels may declare them for the general expansion machinery.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomCoeff {
    pub a: f64,
    pub p: f64,
    #[serde(rename = "logpow", default)]
    pub log_power: u32,
}

/// User-supplied kernel: small-t coefficients plus (optionally, for
/// in-process use only — it does not serialize) the kernel density itself.
#[derive(Clone, Serialize, Deserialize, Default)]
pub struct CustomFading {
    /// Small-t expansion terms `p · t^a · (ln t)^logpow`, sorted by
    /// exponent; equal exponents carry ascending log powers.
    pub coeffs: Vec<CustomCoeff>,
    /// When set, the kernel has an `exp(-q t)`-type factor in its small-t
    /// remainder with q ≠ 0; high-SNR expansions then degenerate to a bare
    /// `o(snr^{-R})` statement and are reported as empty.
    #[serde(default)]
    pub q_nonzero: bool,
    /// The kernel `f(t)` itself, for quadrature-based oracles.
    #[serde(skip)]
    pub density: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl fmt::Debug for CustomFading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFading")
            .field("coeffs", &self.coeffs)
            .field("q_nonzero", &self.q_nonzero)
            .field("density", &self.density.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

/// A fading distribution for the channel gain `h`.
///
/// `sigma` is the per-real-component standard deviation of the diffuse part,
/// `mu_abs` the magnitude of the line-of-sight mean (`|μ|` scalar, `‖μ‖`
/// vector), so `E|h|² = 2σ² + μ²` scalar and `2kσ² + μ²` for k dimensions.
/// Nakagami-m amplitude fading uses shape `shape_mu ≥ ½` and spread
/// `spread_w = E|h|²`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FadingModel {
    Rayleigh { sigma: f64 },
    Ricean { sigma: f64, mu_abs: f64 },
    Nakagami { shape_mu: f64, spread_w: f64 },
    #[serde(rename = "vector")]
    VectorGaussian { k: u32, sigma: f64, mu_abs: f64 },
    Custom { custom: CustomFading },
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond { Ok(()) } else { Err(Error::InvalidInput(what.to_string())) }
}

/// Generalized Laguerre polynomial L_m^(α)(x) by the three-term recurrence
/// (forward-stable in the oscillatory regime).
fn laguerre(m: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for n in 1..m {
        let nf = n as f64;
        let next = ((2.0 * nf + alpha + 1.0 - x) * cur - (nf + alpha) * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

impl FadingModel {
    /// Checks parameter ranges; every operation calls this first.
    pub fn validate(&self) -> Result<()> {
        match self {
            FadingModel::Rayleigh { sigma } => {
                require(sigma.is_finite() && *sigma > 0.0, "rayleigh: sigma must be > 0")
            }
            FadingModel::Ricean { sigma, mu_abs } => {
                require(sigma.is_finite() && *sigma > 0.0, "ricean: sigma must be > 0")?;
                require(mu_abs.is_finite() && *mu_abs >= 0.0, "ricean: mu_abs must be >= 0")
            }
            FadingModel::Nakagami { shape_mu, spread_w } => {
                require(
                    shape_mu.is_finite() && *shape_mu >= 0.5,
                    "nakagami: shape_mu must be >= 1/2",
                )?;
                require(spread_w.is_finite() && *spread_w > 0.0, "nakagami: spread_w must be > 0")
            }
            FadingModel::VectorGaussian { k, sigma, mu_abs } => {
                require(*k >= 1, "vector: k must be >= 1")?;
                require(sigma.is_finite() && *sigma > 0.0, "vector: sigma must be > 0")?;
                require(mu_abs.is_finite() && *mu_abs >= 0.0, "vector: mu_abs must be >= 0")
            }
            FadingModel::Custom { custom } => {
                for c in &custom.coeffs {
                    require(
                        c.a.is_finite() && c.a > 0.0 && c.p.is_finite(),
                        "custom: coefficients need finite p and exponent a > 0",
                    )?;
                }
                for w in custom.coeffs.windows(2) {
                    // Repeated exponents describe log-weighted terms of one
                    // expansion order and must come in ascending log power.
                    require(
                        w[1].a > w[0].a + 1e-12
                            || ((w[1].a - w[0].a).abs() <= 1e-12
                                && w[1].log_power > w[0].log_power),
                        "custom: exponents must increase, or share a value with increasing log power",
                    )?;
                }
                Ok(())
            }
        }
    }

    /// `(k, sigma, mu_abs)` for the unified Gaussian family; `None` for
    /// Nakagami/custom. Routing Rayleigh and Ricean through the same k = 1
    /// code path makes the documented reductions exact.
    pub(crate) fn gauss_params(&self) -> Option<(u32, f64, f64)> {
        match *self {
            FadingModel::Rayleigh { sigma } => Some((1, sigma, 0.0)),
            FadingModel::Ricean { sigma, mu_abs } => Some((1, sigma, mu_abs)),
            FadingModel::VectorGaussian { k, sigma, mu_abs } => Some((k, sigma, mu_abs)),
            _ => None,
        }
    }

    /// The squared-gain kernel `f(t) = t · density_{|h|²}(t)`, `t > 0`.
    pub fn kernel_density(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain("kernel_density", format!("t = {t} not in (0, inf)")));
        }
        if let Some((k, sigma, mu)) = self.gauss_params() {
            return kernel_gauss(k, sigma, mu, t);
        }
        match self {
            FadingModel::Nakagami { shape_mu, spread_w } => {
                let m = *shape_mu;
                let w = *spread_w;
                Ok((m * ((m * t / w).ln()) - m * t / w - specfun::ln_gamma(m)?).exp())
            }
            FadingModel::Custom { custom } => match &custom.density {
                Some(f) => Ok(f(t)),
                None => Err(Error::Unsupported(
                    "custom fading model has no density callback".to_string(),
                )),
            },
            _ => unreachable!("gaussian family handled above"),
        }
    }

    /// First `m_terms` pairs `(a_m, p_m)` of `f(t) = Σ p_m t^{a_m}`, `t → 0⁺`.
    pub fn small_t_coefficients(&self, m_terms: usize) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        if m_terms > MAX_SMALL_T_TERMS {
            return Err(Error::domain(
                "small_t_coefficients",
                format!("requested {m_terms} terms, cap is {MAX_SMALL_T_TERMS}"),
            ));
        }
        if let Some((k, sigma, mu)) = self.gauss_params() {
            let s2 = 2.0 * sigma * sigma;
            let a = mu * mu / s2;
            let kf = k as f64;
            let mut out = Vec::with_capacity(m_terms);
            for m in 0..m_terms {
                let mf = m as f64;
                // p_m = e^{-a} s2^{-(m+k)} (-1)^m L_m^{(k-1)}(a) / Γ(m+k)
                let ln_mag = -a - (mf + kf) * s2.ln() - specfun::ln_gamma(mf + kf)?;
                let lag = laguerre(m, kf - 1.0, a);
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out.push((mf + kf, sign * lag * ln_mag.exp()));
            }
            return Ok(out);
        }
        match self {
            FadingModel::Nakagami { shape_mu, spread_w } => {
                let mu = *shape_mu;
                let w = *spread_w;
                let mut out = Vec::with_capacity(m_terms);
                for m in 0..m_terms {
                    let mf = m as f64;
                    // p_m = (-1)^m (mu/w)^{mu+m} / (Γ(mu) m!)
                    let ln_mag = (mu + mf) * (mu / w).ln()
                        - specfun::ln_gamma(mu)?
                        - specfun::ln_gamma(mf + 1.0)?;
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    out.push((mf + mu, sign * ln_mag.exp()));
                }
                Ok(out)
            }
            FadingModel::Custom { custom } => {
                if custom.coeffs.is_empty() {
                    return Err(Error::domain(
                        "small_t_coefficients",
                        "custom model supplied no coefficients".to_string(),
                    ));
                }
                if custom.coeffs.iter().any(|c| c.log_power > 0) {
                    return Err(Error::Unsupported(
                        "custom kernel has logarithmic small-t terms; use the coefficient \
                         triples directly"
                            .to_string(),
                    ));
                }
                if m_terms > custom.coeffs.len() {
                    return Err(Error::domain(
                        "small_t_coefficients",
                        format!(
                            "custom model supplies {} coefficients, {m_terms} requested",
                            custom.coeffs.len()
                        ),
                    ));
                }
                Ok(custom.coeffs[..m_terms].iter().map(|c| (c.a, c.p)).collect())
            }
            _ => unreachable!("gaussian family handled above"),
        }
    }

    /// Closed-form Mellin transform `M[f; z] = ∫ t^{z−1} f(t) dt` on the
    /// domain where the integral converges (`z > −1` scalar Gaussian family,
    /// `z > −shape_mu` Nakagami, `z > −k` vector).
    pub fn mellin_f(&self, z: f64) -> Result<f64> {
        self.validate()?;
        if !z.is_finite() {
            return Err(Error::domain("mellin_f", format!("z = {z} not finite")));
        }
        if let Some((k, sigma, mu)) = self.gauss_params() {
            let kf = k as f64;
            if z <= -kf {
                return Err(Error::domain(
                    "mellin_f",
                    format!("z = {z} outside convergence domain z > {}", -kf),
                ));
            }
            return mellin_gauss(k, sigma, mu, z);
        }
        match self {
            FadingModel::Nakagami { shape_mu, spread_w } => {
                if z <= -*shape_mu {
                    return Err(Error::domain(
                        "mellin_f",
                        format!("z = {z} outside convergence domain z > {}", -shape_mu),
                    ));
                }
                mellin_nakagami(*shape_mu, *spread_w, z)
            }
            FadingModel::Custom { .. } => Err(Error::Unsupported(
                "custom fading models have no closed-form Mellin transform".to_string(),
            )),
            _ => unreachable!("gaussian family handled above"),
        }
    }

    /// Value (`deriv_order = 0`) or z-derivative (1, 2; central differences
    /// with step 1e-5) of `z ↦ M[f; 1−z]`, with `M[f; ·]` evaluated by the
    /// closed form analytically continued past the integral's domain. This
    /// supplies the residue factors of the Gaussian-input high-SNR
    /// expansions, where the argument crosses the Γ poles.
    pub fn mellin_f_continued(&self, z: f64, deriv_order: u32) -> Result<f64> {
        self.validate()?;
        if !z.is_finite() {
            return Err(Error::domain("mellin_f_continued", format!("z = {z} not finite")));
        }
        if deriv_order > 2 {
            return Err(Error::domain(
                "mellin_f_continued",
                format!("derivative order {deriv_order} not in 0..=2"),
            ));
        }
        let c = |zz: f64| self.mellin_continued_value(1.0 - zz);
        if deriv_order == 0 {
            return c(z);
        }
        let h = 1e-5;
        let (d, d_half) = if deriv_order == 1 {
            let (p, m) = (c(z + h)?, c(z - h)?);
            let (p2, m2) = (c(z + 0.5 * h)?, c(z - 0.5 * h)?);
            ((p - m) / (2.0 * h), (p2 - m2) / h)
        } else {
            let mid = c(z)?;
            let (p, m) = (c(z + h)?, c(z - h)?);
            let (p2, m2) = (c(z + 0.5 * h)?, c(z - 0.5 * h)?);
            ((p + m - 2.0 * mid) / (h * h), (p2 + m2 - 2.0 * mid) / (0.25 * h * h))
        };
        // Step-halving consistency guard: truncation shrinks 4x, so the two
        // estimates agree unless z is too close to a pole for the step.
        let scale = c(z).map(f64::abs).unwrap_or(0.0).max(d.abs());
        let noise = 1e-15 * scale / h.powi(deriv_order as i32);
        if (d - d_half).abs() > 1e-4 * d_half.abs().max(noise) + 8.0 * noise {
            return Err(Error::no_conv(
                "mellin_f_continued",
                format!("step-contraction failure near z = {z} (order {deriv_order})"),
                d_half,
            ));
        }
        Ok(d)
    }

    /// Analytically continued `M[f; y]`; poles of Γ are genuine poles of the
    /// continuation and are rejected.
    fn mellin_continued_value(&self, y: f64) -> Result<f64> {
        if let Some((k, sigma, mu)) = self.gauss_params() {
            let kf = k as f64;
            let s2 = 2.0 * sigma * sigma;
            let a = mu * mu / s2;
            let g = specfun::gamma_signed(y + kf)?;
            let f = specfun::hyp1f1(y + kf, kf, a)?;
            return Ok((-a + y * s2.ln() - specfun::ln_gamma(kf)?).exp() * g * f.value);
        }
        match self {
            FadingModel::Nakagami { shape_mu, spread_w } => {
                let g = specfun::gamma_signed(y + shape_mu)?;
                Ok((y * (spread_w / shape_mu).ln() - specfun::ln_gamma(*shape_mu)?).exp() * g)
            }
            FadingModel::Custom { .. } => Err(Error::Unsupported(
                "analytic continuation requires a closed-form model".to_string(),
            )),
            _ => unreachable!("gaussian family handled above"),
        }
    }

    /// `E|h|² = M[f; 1]`, in closed form for the named models and by
    /// quadrature of the density for custom kernels.
    pub fn gain_mean_square(&self) -> Result<f64> {
        self.validate()?;
        match self {
            FadingModel::Rayleigh { sigma } => Ok(2.0 * sigma * sigma),
            FadingModel::Ricean { sigma, mu_abs } => Ok(2.0 * sigma * sigma + mu_abs * mu_abs),
            FadingModel::Nakagami { spread_w, .. } => Ok(*spread_w),
            FadingModel::VectorGaussian { k, sigma, mu_abs } => {
                Ok(2.0 * *k as f64 * sigma * sigma + mu_abs * mu_abs)
            }
            FadingModel::Custom { custom } => {
                let f = custom.density.as_ref().ok_or_else(|| {
                    Error::Unsupported("custom fading model has no density callback".to_string())
                })?;
                // ∫ f over doubling segments until the tail stops contributing.
                let mut total = quad::tanh_sinh(&|t| f(t), 0.0, 1.0, 1e-12, 1e-14)?.value;
                let mut lo = 1.0;
                let mut quiet = 0;
                for _ in 0..60 {
                    let hi = 2.0 * lo;
                    let seg = quad::adaptive_gk(&|t| f(t), lo, hi, 1e-12, 1e-16, 2000)?.value;
                    total += seg;
                    lo = hi;
                    quiet = if seg.abs() <= 1e-13 * total.abs() { quiet + 1 } else { 0 };
                    if quiet >= 2 {
                        return Ok(total);
                    }
                }
                Err(Error::no_conv(
                    "gain_mean_square",
                    "custom density tail did not decay".to_string(),
                    total,
                ))
            }
        }
    }

    /// Truncation point `T` beyond which `∫_T^∞ f(t) dt` is below
    /// `e^{ln_eps} · E|h|²` with margin, for quadrature over the kernel.
    pub fn tail_cutoff(&self, ln_eps: f64) -> Result<f64> {
        self.validate()?;
        if let Some((k, sigma, mu)) = self.gauss_params() {
            let s2 = 2.0 * sigma * sigma;
            let l = -ln_eps + 6.0 * k as f64 + 12.0;
            return Ok((mu + (s2 * l).sqrt()).powi(2));
        }
        match self {
            FadingModel::Nakagami { shape_mu, spread_w } => {
                Ok(spread_w / shape_mu * (-ln_eps + 6.0 * shape_mu + 12.0))
            }
            FadingModel::Custom { .. } => Err(Error::Unsupported(
                "custom fading models carry no tail-decay information".to_string(),
            )),
            _ => unreachable!("gaussian family handled above"),
        }
    }

    /// Parses the command-line syntax `kind:key=value,...`, e.g.
    /// `rayleigh:sigma=0.7071`, `ricean:sigma=0.7071,mu=1`,
    /// `nakagami:mu=0.5,w=1`, `vector:k=3,sigma=0.6,mu=1.2`, or `@file.json`
    /// for the JSON schema (required for custom kernels).
    pub fn parse(s: &str) -> Result<FadingModel> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix('@') {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read {path}: {e}")))?;
            let model: FadingModel = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidInput(format!("bad fading JSON in {path}: {e}")))?;
            model.validate()?;
            return Ok(model);
        }
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::BTreeMap::new();
        if !rest.is_empty() {
            for pair in rest.split(',') {
                let (key, val) = pair.split_once('=').ok_or_else(|| {
                    Error::InvalidInput(format!("expected key=value, got '{pair}'"))
                })?;
                let num: f64 = val.trim().parse().map_err(|_| {
                    Error::InvalidInput(format!("bad number '{val}' for '{key}'"))
                })?;
                kv.insert(key.trim().to_string(), num);
            }
        }
        let mut get = |name: &str| {
            kv.remove(name)
                .ok_or_else(|| Error::InvalidInput(format!("{kind}: missing parameter '{name}'")))
        };
        let model = match kind.to_ascii_lowercase().as_str() {
            "rayleigh" => FadingModel::Rayleigh { sigma: get("sigma")? },
            "ricean" | "rician" => FadingModel::Ricean {
                sigma: get("sigma")?,
                mu_abs: get("mu").or_else(|_| get("mu_abs"))?,
            },
            "nakagami" => FadingModel::Nakagami {
                shape_mu: get("mu").or_else(|_| get("shape_mu"))?,
                spread_w: get("w").or_else(|_| get("spread_w"))?,
            },
            "vector" => {
                let k = get("k")?;
                if k.fract() != 0.0 || !(1.0..=1e6).contains(&k) {
                    return Err(Error::InvalidInput(format!("vector: bad k = {k}")));
                }
                FadingModel::VectorGaussian {
                    k: k as u32,
                    sigma: get("sigma")?,
                    mu_abs: get("mu").or_else(|_| get("mu_abs")).unwrap_or(0.0),
                }
            }
            other => {
                return Err(Error::InvalidInput(format!("unknown fading kind '{other}'")));
            }
        };
        if let Some(extra) = kv.keys().next() {
            return Err(Error::InvalidInput(format!("{kind}: unknown parameter '{extra}'")));
        }
        model.validate()?;
        Ok(model)
    }
}

impl fmt::Display for FadingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingModel::Rayleigh { sigma } => write!(f, "rayleigh(sigma={sigma})"),
            FadingModel::Ricean { sigma, mu_abs } => {
                write!(f, "ricean(sigma={sigma},mu={mu_abs})")
            }
            FadingModel::Nakagami { shape_mu, spread_w } => {
                write!(f, "nakagami(mu={shape_mu},w={spread_w})")
            }
            FadingModel::VectorGaussian { k, sigma, mu_abs } => {
                write!(f, "vector(k={k},sigma={sigma},mu={mu_abs})")
            }
            FadingModel::Custom { custom } => {
                write!(f, "custom({} coeffs)", custom.coeffs.len())
            }
        }
    }
}

/// Kernel for the Gaussian family: `f(t) = t^k e^{-t/2σ²} / ((2σ²)^k Γ(k))`
/// when the mean is zero, and with mean `(t/s₀)^{(k−1)/2} I_{k−1}` replacing
/// the pure power, written via the scaled Bessel function so the exponent
/// `−(√t − μ)²/2σ²` never overflows.
fn kernel_gauss(k: u32, sigma: f64, mu: f64, t: f64) -> Result<f64> {
    let s2 = 2.0 * sigma * sigma;
    let kf = k as f64;
    if mu == 0.0 {
        return Ok((kf * (t / s2).ln() - t / s2 - specfun::ln_gamma(kf)?).exp());
    }
    let s0 = mu * mu;
    let x = 2.0 * (t * s0).sqrt() / s2;
    let ie = specfun::bessel_i_scaled(k - 1, x)?;
    let expo = -(t.sqrt() - mu).powi(2) / s2;
    Ok(t / s2 * (t / s0).powf(0.5 * (kf - 1.0)) * ie * expo.exp())
}

/// `M[f;z] = e^{-a} (2σ²)^z Γ(z+k)/Γ(k) · ₁F₁(z+k; k; a)`, `a = μ²/2σ²`.
fn mellin_gauss(k: u32, sigma: f64, mu: f64, z: f64) -> Result<f64> {
    let s2 = 2.0 * sigma * sigma;
    let kf = k as f64;
    let a = mu * mu / s2;
    let f = specfun::hyp1f1(z + kf, kf, a)?;
    let ln_mag = -a + z * s2.ln() + specfun::ln_gamma(z + kf)? - specfun::ln_gamma(kf)?;
    Ok(ln_mag.exp() * f.value)
}

/// `M[f;z] = (w/μ)^z Γ(z+μ)/Γ(μ)` for Nakagami shape μ, spread w.
fn mellin_nakagami(shape_mu: f64, spread_w: f64, z: f64) -> Result<f64> {
    Ok((z * (spread_w / shape_mu).ln() + specfun::ln_gamma(z + shape_mu)?
        - specfun::ln_gamma(shape_mu)?)
        .exp())
}
