//! Independent reference values for the fading-averaged curves.
//!
//! Two routes that share no machinery with the asymptotic modules:
//!
//! * adaptive quadrature of the canonical curve against the squared-gain
//!   kernel — `∫ f(t)·mmse(snr·t) dt` and `∫ (f(t)/t)·I(snr·t) dt`;
//! * Monte-Carlo averages over channel draws, bit-reproducible for a fixed
//!   `(seed, n_samples)` regardless of worker count.
//!
//! These are the measuring stick everything else is judged against, so they
//! deliberately use no series expansions and no transform identities.

use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::CanonicalCurve;
use crate::constellation::{Constellation, InputKind};
use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::quad;

/// How a reference value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleMethod {
    Quadrature,
    MonteCarlo,
}

/// A reference value with an honest error account.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleResult {
    pub value: f64,
    /// Quadrature: summed panel estimates plus truncation and evaluation
    /// noise. Monte-Carlo: one standard error plus the interpolation-table
    /// bias bound.
    pub est_abs_error: f64,
    pub method: OracleMethod,
    /// Draw count (Monte-Carlo only).
    pub n_samples: Option<u64>,
    /// Base seed (Monte-Carlo only).
    pub seed: Option<u64>,
}

/// First error seen inside a quadrature integrand (integrands must return
/// plain numbers, and NaN would poison the panel-ordering comparisons).
struct ErrSlot(Mutex<Option<Error>>);

impl ErrSlot {
    fn new() -> Self {
        Self(Mutex::new(None))
    }
    fn put(&self, e: Error) {
        self.0.lock().unwrap().get_or_insert(e);
    }
    fn check(&self) -> Result<()> {
        match self.0.lock().unwrap().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Quantize a tolerance to the decade below, so graded requests land on a
/// small set of values and reuse the curve's evaluation cache.
fn decade(rel: f64) -> f64 {
    10f64.powi(rel.log10().floor() as i32)
}

// ---------------------------------------------------------------------------
// Quadrature oracles
// ---------------------------------------------------------------------------

/// Integrate `g` over the kernel support: a tanh-sinh head on `[0, 1]` for
/// the (possibly fractional-power) left endpoint, then either half-decade
/// seeded panels up to the model's certified tail cutoff, or — for custom
/// kernels, which carry no decay information — doubling segments until two
/// consecutive ones stop contributing. Returns `(value, est, t_hi)`.
fn integrate_kernel<G: Fn(f64) -> f64 + Sync>(
    op: &'static str,
    model: &FadingModel,
    g: &G,
    abs_floor: f64,
) -> Result<(f64, f64, f64)> {
    match model.tail_cutoff(-32.0).ok() {
        Some(t_hi) => {
            let head_hi = t_hi.min(1.0);
            let head = quad::tanh_sinh(g, 0.0, head_hi, 1e-9, abs_floor)?;
            let (tail_v, tail_e) = if t_hi > head_hi {
                let mut seeds = vec![head_hi];
                let mut s = head_hi;
                while s < t_hi {
                    s *= 3.163; // half-decade spacing
                    seeds.push(s.min(t_hi));
                }
                let r = quad::adaptive_gk_seeded(g, &seeds, 1e-8, abs_floor, 20_000)?;
                (r.value, r.est_abs_error)
            } else {
                (0.0, 0.0)
            };
            Ok((head.value + tail_v, head.est_abs_error + tail_e, t_hi))
        }
        None => {
            let head = quad::tanh_sinh(g, 0.0, 1.0, 1e-9, abs_floor)?;
            let mut total = head.value;
            let mut est = head.est_abs_error;
            let mut lo = 1.0f64;
            let mut quiet = 0;
            for _ in 0..60 {
                let hi = 2.0 * lo;
                let r = quad::adaptive_gk(g, lo, hi, 1e-8, abs_floor, 4000)?;
                total += r.value;
                est += r.est_abs_error;
                quiet = if r.value.abs() <= 1e-13 * total.abs() { quiet + 1 } else { 0 };
                lo = hi;
                if quiet >= 2 {
                    return Ok((total, est + 2e-13 * total.abs(), lo));
                }
            }
            Err(Error::no_conv(op, "custom kernel tail did not decay".to_string(), total))
        }
    }
}

/// Peak of `weight(t)·point_envelope(t)` on a log grid over the kernel
/// support, for grading per-point tolerances. A grid maximum can only
/// undershoot the true peak, which errs toward extra precision.
fn profile_peak(t_hi: f64, weighted_env: impl Fn(f64) -> f64) -> f64 {
    let lo = t_hi * 1e-12;
    let ratio = (t_hi / lo).ln() / 95.0;
    (0..=95).map(|i| weighted_env(lo * (ratio * i as f64).exp())).fold(0.0f64, f64::max)
}

/// Average MMSE over the fading ensemble, `E{|h|² mmse(snr|h|²)}`, by
/// adaptive quadrature of the canonical curve against the kernel, with the
/// per-point curve tolerance graded by each point's share of the integrand
/// profile.
pub fn avg_mmse_quad(model: &FadingModel, input: &Constellation, snr: f64) -> Result<OracleResult> {
    avg_mmse_quad_at(model, input, snr, 1e-10)
}

pub(crate) fn avg_mmse_quad_at(
    model: &FadingModel,
    input: &Constellation,
    snr: f64,
    rel_floor: f64,
) -> Result<OracleResult> {
    model.validate()?;
    if !snr.is_finite() || !(snr > 0.0) {
        return Err(Error::domain("avg_mmse_quad", format!("snr must be finite and > 0, got {snr}")));
    }
    let curve = CanonicalCurve::new(input.clone())?;
    let eh2 = model.gain_mean_square()?;
    // Peak of f(t)·env(snr t); zero disables grading (custom kernels).
    let peak = match model.tail_cutoff(-32.0).ok() {
        Some(t_hi) => profile_peak(t_hi, |t| {
            model.kernel_density(t).unwrap_or(0.0) * curve.mmse_envelope(snr * t)
        }),
        None => 0.0,
    };
    let slot = ErrSlot::new();
    let g = |t: f64| -> f64 {
        let f = match model.kernel_density(t) {
            Ok(v) => v,
            Err(e) => {
                slot.put(e);
                return 0.0;
            }
        };
        if f == 0.0 {
            return 0.0;
        }
        let x = snr * t;
        let mut rel = rel_floor;
        if peak > 0.0 {
            let frac = f * curve.mmse_envelope(x) / peak;
            if frac < 1e-16 {
                return 0.0;
            }
            rel = decade(((0.1 * rel_floor) / frac).clamp(rel_floor, 1e-4));
        }
        match curve.mmse_tol(x, rel) {
            Ok(m) => f * m,
            Err(e) => {
                slot.put(e);
                0.0
            }
        }
    };
    let bound = eh2 * curve.mmse_envelope(0.0).min(1e6).max(1e-300);
    let (value, mut est, t_hi) = integrate_kernel("avg_mmse_quad", model, &g, 1e-13 * bound)?;
    slot.check()?;
    if !value.is_finite() {
        return Err(Error::no_conv("avg_mmse_quad", "non-finite integral".to_string(), value));
    }
    // Truncation beyond the certified cutoff, plus graded evaluation noise.
    if model.tail_cutoff(-32.0).is_ok() {
        est += 1.3e-14 * eh2 * curve.mmse_envelope(snr * t_hi);
    }
    est += 10.0 * rel_floor * value.abs() + 1e-300;
    Ok(OracleResult {
        value,
        est_abs_error: est,
        method: OracleMethod::Quadrature,
        n_samples: None,
        seed: None,
    })
}

/// Average mutual information over the fading ensemble, `E{I(snr|h|²)}`,
/// in nats. Discrete and Gaussian inputs only (the continuous-uniform
/// families have no finite saturation level).
pub fn avg_mi_quad(model: &FadingModel, input: &Constellation, snr: f64) -> Result<OracleResult> {
    avg_mi_quad_at(model, input, snr, 1e-10)
}

pub(crate) fn avg_mi_quad_at(
    model: &FadingModel,
    input: &Constellation,
    snr: f64,
    rel_floor: f64,
) -> Result<OracleResult> {
    model.validate()?;
    if !snr.is_finite() || snr < 0.0 {
        return Err(Error::domain("avg_mi_quad", format!("snr must be finite and >= 0, got {snr}")));
    }
    if matches!(input.kind, InputKind::InfPsk | InputKind::InfPam | InputKind::InfQam) {
        return Err(Error::Unsupported(format!(
            "average mutual information of '{}' (differential-entropy input) is not provided",
            input.label
        )));
    }
    let quadrature = |value: f64, est: f64| OracleResult {
        value,
        est_abs_error: est,
        method: OracleMethod::Quadrature,
        n_samples: None,
        seed: None,
    };
    if snr == 0.0 {
        return Ok(quadrature(0.0, 0.0));
    }
    let curve = CanonicalCurve::new(input.clone())?;
    let eh2 = model.gain_mean_square()?;
    let entropy = curve.entropy();
    let slot = ErrSlot::new();
    let g = |t: f64| -> f64 {
        let f = match model.kernel_density(t) {
            Ok(v) => v,
            Err(e) => {
                slot.put(e);
                return 0.0;
            }
        };
        if f == 0.0 {
            return 0.0;
        }
        let x = snr * t;
        let mi = match entropy {
            None => x.ln_1p(),
            Some(h) => {
                // Deep in saturation the absolute target 1e-10·H needs only
                // a loose relative handle on the (tiny) gap.
                let gap_env = curve.mi_gap_envelope(x).unwrap_or(h).max(1e-300);
                let rel = decade(((0.1 * rel_floor) * h / gap_env).clamp(rel_floor, 1e-2));
                match curve.mi_tol(x, rel) {
                    Ok(v) => v,
                    Err(e) => {
                        slot.put(e);
                        return 0.0;
                    }
                }
            }
        };
        f / t * mi
    };
    let bound = eh2 * entropy.unwrap_or(1.0);
    let (value, mut est, t_hi) = integrate_kernel("avg_mi_quad", model, &g, 1e-13 * bound)?;
    slot.check()?;
    if !value.is_finite() {
        return Err(Error::no_conv("avg_mi_quad", "non-finite integral".to_string(), value));
    }
    if model.tail_cutoff(-32.0).is_ok() {
        // ∫_T^∞ (f/t)·I ≤ sup I(snr t) · (1/T) ∫_T^∞ f.
        let sup_i = entropy.unwrap_or((snr * t_hi).ln_1p());
        est += 1.3e-14 * eh2 * sup_i / t_hi.max(1.0);
    }
    est += 10.0 * rel_floor * value.abs() + 1e-300;
    // A discrete average can never exceed the input entropy.
    if let Some(h) = entropy {
        if value > h * (1.0 + 1e-9) + est {
            return Err(Error::no_conv(
                "avg_mi_quad",
                format!("value {value} exceeds the entropy bound {h}"),
                value,
            ));
        }
    }
    Ok(quadrature(value, est))
}

/// Relative discrepancy between the centered difference `dĪ/dsnr` and the
/// averaged MMSE — the derivative identity the whole theory hangs on.
pub fn immse_check(
    model: &FadingModel,
    input: &Constellation,
    snr: f64,
    h_step: f64,
) -> Result<f64> {
    if !(h_step > 0.0) || h_step >= snr {
        return Err(Error::domain(
            "immse_check",
            format!("need 0 < h_step < snr, got h_step = {h_step} at snr = {snr}"),
        ));
    }
    let hi = avg_mi_quad(model, input, snr + h_step)?;
    let lo = avg_mi_quad(model, input, snr - h_step)?;
    let deriv = (hi.value - lo.value) / (2.0 * h_step);
    let m = avg_mmse_quad(model, input, snr)?;
    Ok((deriv - m.value).abs() / m.value)
}

// ---------------------------------------------------------------------------
// Monte-Carlo oracles
// ---------------------------------------------------------------------------

const MC_CHUNK: u64 = 4096;

/// Draw `|h|²`: squared Gaussian coordinates (line-of-sight offset on the
/// first) for the Rayleigh/Ricean/vector family, a Gamma variate for
/// Nakagami. Custom kernels carry no sampler.
fn gain_sq_sampler(model: &FadingModel) -> Result<Box<dyn Fn(&mut ChaCha8Rng) -> f64 + Sync + Send>> {
    model.validate()?;
    if let Some((k, sigma, mu)) = model.gauss_params() {
        let n = 2 * k as usize;
        return Ok(Box::new(move |rng| {
            let mut tot = 0.0;
            for j in 0..n {
                let z: f64 = StandardNormal.sample(rng);
                let v = sigma * z + if j == 0 { mu } else { 0.0 };
                tot += v * v;
            }
            tot
        }));
    }
    match model {
        FadingModel::Nakagami { shape_mu, spread_w } => {
            let gamma = Gamma::new(*shape_mu, *spread_w / *shape_mu)
                .map_err(|e| Error::InvalidInput(format!("nakagami sampler: {e}")))?;
            Ok(Box::new(move |rng| gamma.sample(rng)))
        }
        FadingModel::Custom { .. } => Err(Error::Unsupported(
            "custom fading models carry no sampler".to_string(),
        )),
        _ => unreachable!("gaussian family handled above"),
    }
}

/// Chunked mean of `v(|h|²)`: chunk `c` draws from an independent
/// counter-derived stream `(seed, c)`, partial sums are reduced in chunk
/// order, so the result is bit-identical for any worker count.
fn mc_average<V: Fn(f64) -> f64 + Sync>(
    model: &FadingModel,
    n_samples: u64,
    seed: u64,
    v: V,
) -> Result<(f64, f64)> {
    if n_samples == 0 {
        return Err(Error::domain("mc_average", "n_samples must be >= 1".to_string()));
    }
    let sample = gain_sq_sampler(model)?;
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c + 1);
            let take = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..take {
                let x = v(sample(&mut rng));
                s += x;
                s2 += x * x;
            }
            (s, s2)
        })
        .collect();
    let n = n_samples as f64;
    let mean = quad::comp_sum(&partials.iter().map(|p| p.0).collect::<Vec<_>>()) / n;
    let msq = quad::comp_sum(&partials.iter().map(|p| p.1).collect::<Vec<_>>()) / n;
    let var = (msq - mean * mean).max(0.0) * (n / (n - 1.0).max(1.0));
    Ok((mean, (var / n).sqrt()))
}

/// Monte-Carlo estimate of the average MMSE: the mean of
/// `|h|²·mmse(snr|h|²)` over `n_samples` channel draws.
pub fn avg_mmse_mc(
    model: &FadingModel,
    input: &Constellation,
    snr: f64,
    n_samples: u64,
    seed: u64,
) -> Result<OracleResult> {
    if !snr.is_finite() || !(snr > 0.0) {
        return Err(Error::domain("avg_mmse_mc", format!("snr must be finite and > 0, got {snr}")));
    }
    let table = CurveTable::for_mmse(input)?;
    let (mean, stderr) = mc_average(model, n_samples, seed, |t| t * table.eval(snr * t))?;
    Ok(OracleResult {
        value: mean,
        est_abs_error: stderr + CurveTable::BIAS * mean.abs(),
        method: OracleMethod::MonteCarlo,
        n_samples: Some(n_samples),
        seed: Some(seed),
    })
}

/// Monte-Carlo estimate of the average mutual information: the mean of
/// `I(snr|h|²)` in nats. Discrete and Gaussian inputs only.
pub fn avg_mi_mc(
    model: &FadingModel,
    input: &Constellation,
    snr: f64,
    n_samples: u64,
    seed: u64,
) -> Result<OracleResult> {
    if !snr.is_finite() || snr < 0.0 {
        return Err(Error::domain("avg_mi_mc", format!("snr must be finite and >= 0, got {snr}")));
    }
    let table = CurveTable::for_mi(input)?;
    let (mean, stderr) = mc_average(model, n_samples, seed, |t| table.eval(snr * t))?;
    Ok(OracleResult {
        value: mean,
        est_abs_error: stderr + CurveTable::BIAS * mean.abs(),
        method: OracleMethod::MonteCarlo,
        n_samples: Some(n_samples),
        seed: Some(seed),
    })
}

// ---------------------------------------------------------------------------
// Curve interpolation table (Monte-Carlo inner loop)
// ---------------------------------------------------------------------------

/// What the interpolated quantity decays to past the grid's right edge.
#[derive(Clone, Copy)]
enum RightTail {
    /// Discrete MMSE beyond the exponential knee: indistinguishable from 0.
    Zero,
    /// Continuous-uniform MMSE: the algebraic asymptote `ζ/x`.
    ZetaOverX(f64),
    /// Mutual information at saturation: the input entropy.
    Saturate,
}

/// A canonical curve evaluated down to ~1e-6 relative in a few tens of
/// nanoseconds: a 10⁶-draw Monte-Carlo run cannot afford an adaptive
/// integral per sample. The known exponential (discrete) or algebraic
/// (continuous-uniform) decay is divided out first, so the interpolated
/// residual is slowly varying and a shape-preserving piecewise cubic on a
/// uniform log grid holds the error far below Monte-Carlo noise. Gaussian
/// curves are closed-form and bypass the grid.
enum CurveTable {
    GaussMmse,
    GaussMi,
    Grid {
        ln_lo: f64,
        step: f64,
        /// `φ(ln x) = ln q(x) + beta·x`, where `q` is the stored quantity
        /// (MMSE, or the saturation gap for mutual information).
        phi: Vec<f64>,
        slope: Vec<f64>,
        beta: f64,
        /// Value returned below the left edge (`mmse(0)`; for MI tables the
        /// small-x linear slope `I(x)/x`).
        left: f64,
        right: RightTail,
        /// Entropy for gap-stored MI tables; `None` for MMSE tables.
        entropy: Option<f64>,
    },
}

impl CurveTable {
    /// Interpolation bias bound established by construction-time validation.
    const BIAS: f64 = 5e-5;

    fn for_mmse(input: &Constellation) -> Result<CurveTable> {
        let curve = CanonicalCurve::new(input.clone())?;
        match &input.kind {
            InputKind::Gaussian => Ok(CurveTable::GaussMmse),
            InputKind::Discrete(_) => {
                let beta = curve.exp_decay_rate().unwrap();
                let x_hi = 650.0 / beta;
                Self::build(
                    &curve,
                    1e-9,
                    x_hi,
                    beta,
                    RightTail::Zero,
                    None,
                    |c, x| c.mmse_tol(x, 1e-8),
                    |c, x| c.mmse_tol(x, 1e-11),
                )
            }
            InputKind::InfPsk | InputKind::InfPam | InputKind::InfQam => {
                let p = curve.decay_params()?;
                // The circle input's evaluator noise floor is flat; its
                // trustworthy range ends sooner than the segment inputs'.
                let x_hi = if matches!(input.kind, InputKind::InfPsk) { 1e6 } else { 1e8 };
                Self::build(
                    &curve,
                    1e-9,
                    x_hi,
                    0.0,
                    RightTail::ZetaOverX(p.zeta),
                    None,
                    |c, x| c.mmse_tol(x, 1e-8),
                    |c, x| c.mmse_tol(x, 1e-10),
                )
            }
        }
    }

    fn for_mi(input: &Constellation) -> Result<CurveTable> {
        let curve = CanonicalCurve::new(input.clone())?;
        match &input.kind {
            InputKind::Gaussian => Ok(CurveTable::GaussMi),
            InputKind::Discrete(_) => {
                let beta = curve.exp_decay_rate().unwrap();
                let h = curve.entropy().unwrap();
                // Past x·β = 49 the gap underflows every consumer; stop the
                // grid while ln(gap) is still well-defined.
                let x_hi = 49.0 / beta;
                Self::build(
                    &curve,
                    1e-9,
                    x_hi,
                    beta,
                    RightTail::Saturate,
                    Some(h),
                    |c, x| c.mi_gap_tol(x, 1e-8),
                    |c, x| c.mi_tol(x, 1e-11),
                )
            }
            _ => Err(Error::Unsupported(format!(
                "average mutual information of '{}' (differential-entropy input) is not provided",
                input.label
            ))),
        }
    }

    /// Build the residual grid and validate it at off-node points against
    /// direct evaluations, densifying once if the first pass misses.
    #[allow(clippy::too_many_arguments)]
    fn build(
        curve: &CanonicalCurve,
        x_lo: f64,
        x_hi: f64,
        beta: f64,
        right: RightTail,
        entropy: Option<f64>,
        stored: impl Fn(&CanonicalCurve, f64) -> Result<f64>,
        direct: impl Fn(&CanonicalCurve, f64) -> Result<f64>,
    ) -> Result<CurveTable> {
        let ln_lo = x_lo.ln();
        let ln_hi = x_hi.ln();
        for n_points in [384usize, 1024] {
            let step = (ln_hi - ln_lo) / (n_points - 1) as f64;
            let mut phi = Vec::with_capacity(n_points);
            for i in 0..n_points {
                let x = (ln_lo + step * i as f64).exp();
                let q = stored(curve, x)?;
                if !(q > 0.0) || !q.is_finite() {
                    return Err(Error::no_conv(
                        "curve_table",
                        format!("stored quantity {q} not positive at x = {x}"),
                        q,
                    ));
                }
                phi.push(q.ln() + beta * x);
            }
            let slope = pchip_slopes(&phi);
            let left = match entropy {
                // Small-x mutual information is linear: keep I(x_lo)/x_lo.
                Some(h) => (h - (phi[0] - beta * x_lo).exp()) / x_lo,
                None => curve.mmse(0.0)?,
            };
            let table = CurveTable::Grid { ln_lo, step, phi, slope, beta, left, right, entropy };
            // Off-node validation at mid-cells across the whole span.
            let mut worst = 0.0f64;
            for j in 1..=17 {
                let x = (ln_lo + (ln_hi - ln_lo) * (j as f64 - 0.5) / 17.0).exp();
                let want = direct(curve, x)?;
                let got = table.eval(x);
                let scale = want.abs().max(entropy.map_or(0.0, |h| 1e-6 * h));
                worst = worst.max((got - want).abs() / scale.max(1e-300));
            }
            if worst <= Self::BIAS {
                if std::env::var_os("FADEXP_TABLE_DIAG").is_some() {
                    eprintln!("table built: n={n_points} worst={worst:.3e}");
                }
                return Ok(table);
            }
        }
        Err(Error::no_conv(
            "curve_table",
            "interpolation failed validation even after densifying".to_string(),
            f64::NAN,
        ))
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            CurveTable::GaussMmse => 1.0 / (1.0 + x),
            CurveTable::GaussMi => x.ln_1p(),
            CurveTable::Grid { ln_lo, step, phi, slope, beta, left, right, entropy } => {
                let n = phi.len();
                let lnx = x.max(1e-300).ln();
                let u = (lnx - ln_lo) / step;
                if u < 0.0 {
                    return match entropy {
                        Some(_) => left * x,
                        None => *left,
                    };
                }
                if u >= (n - 1) as f64 {
                    return match (right, entropy) {
                        (RightTail::Zero, _) => 0.0,
                        (RightTail::ZetaOverX(z), _) => z / x,
                        (RightTail::Saturate, Some(h)) => *h,
                        (RightTail::Saturate, None) => unreachable!("gap table has entropy"),
                    };
                }
                let i = (u as usize).min(n - 2);
                let s = u - i as f64;
                // Cubic Hermite basis on the unit cell.
                let (s2, s3) = (s * s, s * s * s);
                let p = (2.0 * s3 - 3.0 * s2 + 1.0) * phi[i]
                    + (s3 - 2.0 * s2 + s) * slope[i]
                    + (-2.0 * s3 + 3.0 * s2) * phi[i + 1]
                    + (s3 - s2) * slope[i + 1];
                let q = (p - beta * x).exp();
                match entropy {
                    Some(h) => h - q,
                    None => q,
                }
            }
        }
    }
}

/// Shape-preserving slopes (per unit cell) for a uniform grid: harmonic-mean
/// limiting at interior nodes, one-sided at the ends.
fn pchip_slopes(phi: &[f64]) -> Vec<f64> {
    let n = phi.len();
    let d: Vec<f64> = phi.windows(2).map(|w| w[1] - w[0]).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            m[i] = 2.0 * d[i - 1] * d[i] / (d[i - 1] + d[i]);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn input(name: &str) -> Constellation {
        Constellation::parse(name).unwrap()
    }

    fn rayleigh_unit() -> FadingModel {
        FadingModel::Rayleigh { sigma: std::f64::consts::FRAC_1_SQRT_2 }
    }

    // E[t/(1+t)] for t ~ Exp(1): 1 − e·E₁(1), frozen at 25 digits from an
    // independent exponential-integral evaluation.
    const EXP_GAUSS_AVG: f64 = 0.4036526376768059256589215;

    #[test]
    fn rayleigh_gaussian_closed_form() {
        let r = avg_mmse_quad(&rayleigh_unit(), &input("gaussian"), 1.0).unwrap();
        assert!(
            (r.value - EXP_GAUSS_AVG).abs() < 1e-9,
            "quad {} vs closed form {EXP_GAUSS_AVG}",
            r.value
        );
        assert!(r.est_abs_error < 1e-7);
        assert_eq!(r.method, OracleMethod::Quadrature);
        assert!(r.n_samples.is_none() && r.seed.is_none());

        let mc = avg_mmse_mc(&rayleigh_unit(), &input("gaussian"), 1.0, 200_000, 7).unwrap();
        // Estimator sd ≈ 0.219 ⇒ 3σ ≈ 1.5e-3 at n = 2·10⁵.
        assert!(
            (mc.value - EXP_GAUSS_AVG).abs() < 3.0 * mc.est_abs_error,
            "mc {} vs {EXP_GAUSS_AVG} (3σ = {})",
            mc.value,
            3.0 * mc.est_abs_error
        );
        assert!((mc.est_abs_error - 0.219 / (200_000f64).sqrt()).abs() < 2e-4);
    }

    #[test]
    fn mc_is_bit_reproducible_and_seed_sensitive() {
        let m = FadingModel::Nakagami { shape_mu: 0.5, spread_w: 1.0 };
        let a = avg_mmse_mc(&m, &input("bpsk"), 10.0, 30_000, 42).unwrap();
        let b = avg_mmse_mc(&m, &input("bpsk"), 10.0, 30_000, 42).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits(), "same seed must reproduce bitwise");
        assert_eq!(a.n_samples, Some(30_000));
        assert_eq!(a.seed, Some(42));
        let c = avg_mmse_mc(&m, &input("bpsk"), 10.0, 30_000, 43).unwrap();
        assert_ne!(a.value.to_bits(), c.value.to_bits(), "different seed must differ");
    }

    #[test]
    fn mc_agrees_with_quadrature() {
        // (Nakagami ½ / BPSK, snr 10) and (Ricean / QPSK, snr 3).
        let cases: [(FadingModel, &str, f64); 2] = [
            (FadingModel::Nakagami { shape_mu: 0.5, spread_w: 1.0 }, "bpsk", 10.0),
            (FadingModel::Ricean { sigma: 0.6, mu_abs: 1.0 }, "qpsk", 3.0),
        ];
        for (m, name, snr) in cases {
            let q = avg_mmse_quad(&m, &input(name), snr).unwrap();
            let mc = avg_mmse_mc(&m, &input(name), snr, 400_000, 11).unwrap();
            let sigma = (q.est_abs_error.powi(2) + mc.est_abs_error.powi(2)).sqrt();
            assert!(
                (q.value - mc.value).abs() < 3.0 * sigma,
                "{name}: quad {} vs mc {} (3σ = {})",
                q.value,
                mc.value,
                3.0 * sigma
            );
            let qi = avg_mi_quad(&m, &input(name), snr).unwrap();
            let mci = avg_mi_mc(&m, &input(name), snr, 400_000, 11).unwrap();
            let sigma_i = (qi.est_abs_error.powi(2) + mci.est_abs_error.powi(2)).sqrt();
            assert!(
                (qi.value - mci.value).abs() < 3.0 * sigma_i,
                "{name} mi: quad {} vs mc {} (3σ = {})",
                qi.value,
                mci.value,
                3.0 * sigma_i
            );
        }
    }

    #[test]
    fn zero_snr_limits() {
        // snr → 0⁺: average MMSE → E|h|²·E|x|²; average MI → 0.
        let cases: [(FadingModel, &str, f64); 3] = [
            (rayleigh_unit(), "qpsk", 1.0),
            (FadingModel::Nakagami { shape_mu: 0.7, spread_w: 1.3 }, "4pam", 1.3),
            (FadingModel::VectorGaussian { k: 3, sigma: 0.5, mu_abs: 1.2 }, "gaussian", 2.94),
        ];
        for (m, name, want) in cases {
            let r = avg_mmse_quad(&m, &input(name), 1e-8).unwrap();
            assert!((r.value - want).abs() < 1e-6 * want, "{name}: {} vs {want}", r.value);
        }
        let mi = avg_mi_quad(&rayleigh_unit(), &input("gaussian"), 0.0).unwrap();
        assert_eq!(mi.value, 0.0);
    }

    #[test]
    fn mi_saturates_to_entropy() {
        let r = avg_mi_quad(&rayleigh_unit(), &input("qpsk"), 1e4).unwrap();
        let h = 4f64.ln();
        assert!((r.value - h).abs() < 1e-3 * h, "{} vs log 4", r.value);
        assert!(r.value <= h + r.est_abs_error);
    }

    #[test]
    fn refinement_agreement_bounds_the_estimate() {
        let m = rayleigh_unit();
        let q = input("qpsk");
        let coarse = avg_mmse_quad_at(&m, &q, 1.0, 1e-10).unwrap();
        let fine = avg_mmse_quad_at(&m, &q, 1.0, 1e-11).unwrap();
        assert!(
            (coarse.value - fine.value).abs() <= coarse.est_abs_error,
            "mmse refinement drift {} vs estimate {}",
            (coarse.value - fine.value).abs(),
            coarse.est_abs_error
        );
        let ci = avg_mi_quad_at(&m, &q, 1.0, 1e-10).unwrap();
        let fi = avg_mi_quad_at(&m, &q, 1.0, 1e-11).unwrap();
        assert!((ci.value - fi.value).abs() <= ci.est_abs_error);
        assert!((ci.value - fi.value).abs() < 1e-7 * ci.value, "self-refinement to 1e-7");
    }

    #[test]
    fn custom_kernel_matches_closed_form_model() {
        // f(t) = t·e^{−t} is exactly the unit-power exponential kernel, so
        // the segment-doubling custom path must land on the same value.
        let custom = FadingModel::Custom {
            custom: crate::fading::CustomFading {
                coeffs: vec![crate::fading::CustomCoeff { p: 1.0, a: 1.0, log_power: 0 }],
                density: Some(std::sync::Arc::new(|t: f64| t * (-t).exp())),
                ..Default::default()
            },
        };
        let a = avg_mmse_quad(&custom, &input("gaussian"), 1.0).unwrap();
        assert!((a.value - EXP_GAUSS_AVG).abs() < 1e-8, "custom path {}", a.value);
        let b = avg_mmse_quad(&custom, &input("bpsk"), 2.5).unwrap();
        let c = avg_mmse_quad(&rayleigh_unit(), &input("bpsk"), 2.5).unwrap();
        assert!((b.value - c.value).abs() < 1e-8 * c.value);
    }

    #[test]
    fn vector_k1_matches_ricean() {
        let v = FadingModel::VectorGaussian { k: 1, sigma: 0.6, mu_abs: 1.1 };
        let r = FadingModel::Ricean { sigma: 0.6, mu_abs: 1.1 };
        for snr in [0.3, 4.0] {
            let a = avg_mmse_quad(&v, &input("qpsk"), snr).unwrap();
            let b = avg_mmse_quad(&r, &input("qpsk"), snr).unwrap();
            assert!((a.value - b.value).abs() <= 1e-10 * b.value.abs());
        }
        let a = avg_mmse_mc(&v, &input("bpsk"), 2.0, 20_000, 5).unwrap();
        let b = avg_mmse_mc(&r, &input("bpsk"), 2.0, 20_000, 5).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits(), "same family code path, same draws");
    }

    #[test]
    fn derivative_identity_holds() {
        let q = input("qpsk");
        assert!(immse_check(&rayleigh_unit(), &q, 1.0, 1e-3).unwrap() < 1e-4);
        assert!(immse_check(&rayleigh_unit(), &q, 0.01, 1e-4).unwrap() < 1e-4);
        assert!(immse_check(&rayleigh_unit(), &input("gaussian"), 1.0, 1e-3).unwrap() < 1e-6);
    }

    #[test]
    fn interpolation_table_is_accurate() {
        for name in ["16qam", "inf-pam"] {
            let c = input(name);
            let table = CurveTable::for_mmse(&c).unwrap();
            let curve = CanonicalCurve::new(c).unwrap();
            for x in [1e-6, 0.37, 2.9, 41.0, 900.0] {
                let want = curve.mmse_tol(x, 1e-10).unwrap();
                let got = table.eval(x);
                assert!(
                    (got - want).abs() <= 6e-5 * want.abs().max(1e-30),
                    "{name} at {x}: {got} vs {want}"
                );
            }
        }
        // MI table: mid-range and deep saturation. (The direct evaluation
        // is itself cancellation-limited to ~1e-11 absolute, so comparisons
        // start where I(x) dwarfs that.)
        let c = input("qpsk");
        let table = CurveTable::for_mi(&c).unwrap();
        let curve = CanonicalCurve::new(c).unwrap();
        for x in [1e-4, 0.8, 20.0, 1e4] {
            let want = curve.mi_tol(x, 1e-11).unwrap();
            let got = table.eval(x);
            assert!(
                (got - want).abs() <= 6e-5 * want.abs(),
                "qpsk mi at {x}: {got} vs {want}"
            );
        }
        // Below the grid the table continues linearly with slope mmse(0) = 1
        // (unit-power input), which beats the direct route's noise floor.
        let tiny = table.eval(1e-12);
        assert!((tiny / 1e-12 - 1.0).abs() < 1e-3, "linear continuation gave {tiny}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let q = input("qpsk");
        assert!(matches!(
            avg_mmse_quad(&rayleigh_unit(), &q, 0.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            avg_mi_quad(&rayleigh_unit(), &input("inf-psk"), 1.0),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            avg_mi_mc(&rayleigh_unit(), &input("inf-qam"), 1.0, 100, 1),
            Err(Error::Unsupported(_))
        ));
        assert!(avg_mmse_mc(&rayleigh_unit(), &q, 1.0, 0, 1).is_err());
        assert!(immse_check(&rayleigh_unit(), &q, 1.0, 2.0).is_err());
        let custom = FadingModel::Custom {
            custom: crate::fading::CustomFading {
                coeffs: vec![crate::fading::CustomCoeff { p: 1.0, a: 1.0, log_power: 0 }],
                density: Some(std::sync::Arc::new(|t: f64| t * (-t).exp())),
                ..Default::default()
            },
        };
        assert!(matches!(
            avg_mmse_mc(&custom, &q, 1.0, 100, 1),
            Err(Error::Unsupported(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        // Strict monotonicity of the averaged curves in snr.
        #[test]
        fn averages_are_monotone(sigma in 0.4f64..1.2, snr in 0.2f64..6.0) {
            let m = FadingModel::Rayleigh { sigma };
            let b = input("bpsk");
            let m1 = avg_mmse_quad(&m, &b, snr).unwrap();
            let m2 = avg_mmse_quad(&m, &b, 1.6 * snr).unwrap();
            prop_assert!(m2.value < m1.value, "avg mmse must decrease: {} vs {}", m1.value, m2.value);
            let i1 = avg_mi_quad(&m, &b, snr).unwrap();
            let i2 = avg_mi_quad(&m, &b, 1.6 * snr).unwrap();
            prop_assert!(i2.value > i1.value, "avg mi must increase");
            prop_assert!(i2.value <= 2f64.ln() * (1.0 + 1e-9));
        }
    }
}
