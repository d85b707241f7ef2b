//! Mellin transforms of canonical MMSE curves.
//!
//! The average-MMSE expansions are built from moments of the canonical curve
//! of the form `M[mmse; 1+z] = ∫₀^∞ t^z mmse(t) dt` and, for the general
//! expansion machinery, from the log-weighted variants
//! `∫ t^{z−1} (ln t)^n mmse(t) dt` (derivatives of the transform in z).
//!
//! Closed forms exist for three inputs — BPSK (a Γ/₂F₁ series), QPSK
//! (`2^{1+z}` times BPSK), and the Gaussian input (`π/sin(πz)` in the
//! `t^{z−1}` convention) — and everything else is quadrature with an
//! analytically controlled tail:
//!
//! * discrete inputs decay like `exp(−t d²/4)`, so a cutoff linear in `z`
//!   bounds the discarded mass below 1e-12 of the value;
//! * the Gaussian input is integrable only for `0 < z < 1` (pole at 1);
//! * continuous-uniform inputs decay like `ζ/t`, so their transform exists
//!   only as an analytic continuation: `∫₀^s t^z mmse + ∫_s^∞ t^z (mmse −
//!   ζ/t) − ζ s^z/z`, convergent for `0 < z < r₁ − 1` where `t^{−r₁}` is the
//!   decay-remainder order. The reported error honestly includes the noise
//!   floor of the cancellation `mmse(t) − ζ/t` at large `t`.

use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::{CanonicalCurve, MMSE_REL_TOL};
use crate::constellation::{Constellation, InputKind};
use crate::error::{Error, Result};
use crate::quad;
use crate::specfun;

/// How a transform value was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MellinMethod {
    AnalyticBpsk,
    AnalyticQpsk,
    AnalyticGaussian,
    Numeric,
}

/// One Mellin-transform evaluation.
///
/// For discrete and continuous-uniform inputs `value = ∫ t^z mmse(t) dt`
/// (the transform at index `1+z`); for the Gaussian input the convention is
/// `∫ t^{z−1} mmse(t) dt` with domain `0 < z < 1`, matching the closed form
/// `π/sin(πz)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MellinValue {
    pub z: f64,
    pub value: f64,
    pub method: MellinMethod,
    pub est_rel_error: f64,
}

const LN_10: f64 = std::f64::consts::LN_10;

/// `∫₀^∞ t^e (ln t)^n mmse(t) dt` for a discrete input, `e > −1`.
///
/// Integrates on `[0, T]` in the variable `u = √t` (which tames the `t^e`
/// endpoint weight) and certifies the discarded tail with the exponential
/// envelope: beyond `T` the curve is below `env(T) e^{−(t−T) d²/4}`.
fn discrete_weighted(curve: &CanonicalCurve, e: f64, n: u32) -> Result<(f64, f64)> {
    let beta = curve
        .exp_decay_rate()
        .ok_or_else(|| Error::domain("mellin_mmse", "input is not discrete".to_string()))?;
    let d2 = 4.0 * beta;
    let raw_cut = (8.0 * (4.0 / d2) * LN_10 * (e + 3.0)).max(50.0);
    // Quantize the cutoff to 50·2^k so nearby exponents in a sweep land on
    // identical abscissa sets and share the curve's evaluation cache.
    let mut t_cut = 50.0 * (raw_cut / 50.0).log2().ceil().exp2();
    for _ in 0..3 {
        let ub = t_cut.sqrt();
        // Peak of |weight|·envelope over the domain: a point contributing k
        // orders below it needs k fewer digits from the curve. The grid
        // maximum can only undershoot the true peak, which errs toward
        // extra precision.
        let weight_mag = |u: f64| 2.0 * u.powf(2.0 * e + 1.0) * (2.0 * u.ln()).abs().powi(n as i32);
        let peak = (1..=96)
            .map(|i| {
                let u = ub * i as f64 / 96.0;
                weight_mag(u) * curve.mmse_envelope(u * u)
            })
            .fold(0.0f64, f64::max);
        let g = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let w = 2.0 * u.powf(2.0 * e + 1.0) * (2.0 * u.ln()).powi(n as i32);
            if w == 0.0 {
                return 0.0;
            }
            let frac = w.abs() * curve.mmse_envelope(u * u) / peak;
            if frac < 1e-17 {
                return 0.0;
            }
            // Decade-quantized so graded requests reuse cached evaluations.
            let rel_pt = (1e-12 / frac).clamp(MMSE_REL_TOL, 1e-5);
            let rel_pt = 10f64.powi(rel_pt.log10().floor() as i32);
            w * curve.mmse_tol(u * u, rel_pt).unwrap_or(f64::NAN)
        };
        let q = quad::tanh_sinh(&g, 0.0, ub, 1e-9, 0.0)?;
        if q.value.is_nan() {
            return Err(Error::no_conv(
                "mellin_mmse",
                "curve evaluation failed inside the quadrature".to_string(),
                f64::NAN,
            ));
        }
        // Graded evaluations inject up to ~1e-12·peak of absolute noise per
        // unit of u; account for it in the returned estimate.
        let graded_noise = 2e-12 * peak * ub;
        // Tail bound: ∫_T^∞ t^e |ln t|^n env(T) e^{-(t-T)β} dt
        //   ≤ env(T) T^e (1.3 ln T)^n (1/β) / (1 − (e+n)/(βT)), crudely doubled.
        let slack = 1.0 - (e.abs() + n as f64) / (beta * t_cut);
        let tail = 2.0 * curve.mmse_envelope(t_cut) * t_cut.powf(e)
            * (1.3 * t_cut.ln()).powi(n as i32).abs()
            / (beta * slack.max(0.5));
        if tail <= 1e-12 * q.value.abs().max(1e-280) {
            return Ok((q.value, q.est_abs_error + tail + graded_noise));
        }
        t_cut *= 2.0;
    }
    Err(Error::no_conv(
        "mellin_mmse",
        format!("tail bound failed to certify at cutoff {t_cut}"),
        f64::NAN,
    ))
}

/// Analytic continuation for continuous-uniform inputs (`ζ/t` decay):
/// `∫₀^s t^z mmse + ∫_s^∞ t^z (mmse − ζ/t) dt − ζ s^z / z`, split-invariant
/// in `s`. Returns `(value, est_abs_error)`.
///
/// The second piece is integrated in `v = ln t`, where it decays like a
/// clean exponential, but only up to a per-kind horizon `t_max`: past it
/// the difference `mmse − ζ/t` drowns in the evaluator's own error (the
/// circle input in particular computes mmse as one minus an O(1) integral,
/// so its absolute noise floor is flat). The discarded piece
/// `∫_{t_max}^∞ t^z (mmse − ζ/t) dt` is completed analytically as
/// `ĉ t_max^{z+1−r₁}/(r₁−1−z)` with `ĉ` measured from the curve at a
/// well-conditioned point, and half of that completion plus the integrated
/// noise floor goes into the error estimate.
fn continuous_weighted(curve: &CanonicalCurve, z: f64, split: f64) -> Result<(f64, f64)> {
    let p = curve.decay_params()?;
    let (zeta, r1) = (p.zeta, p.r1);
    if !(z > 1e-9 && z < r1 - 1.0 - 1e-9) {
        return Err(Error::domain(
            "mellin_mmse",
            format!("z = {z} outside the continuation domain (0, {})", r1 - 1.0),
        ));
    }
    // (evaluation tolerance, trust horizon, coefficient-measurement point,
    //  absolute noise of mmse(t)): the circle input has a flat noise floor,
    // the segment inputs stay relative to the (decaying) value.
    let flat_noise = matches!(curve.input().kind, InputKind::InfPsk);
    let (eval_rel, t_max, t_meas): (f64, f64, f64) =
        if flat_noise { (1e-13, 1e6, 1e4) } else { (1e-12, 3e8, 1e5) };
    let noise_abs = |t: f64| if flat_noise { 2.0 * eval_rel } else { 2.0 * eval_rel * zeta / t };

    // Head: 2 ∫₀^√s u^{2z+1} mmse(u²) du.
    let head = quad::tanh_sinh(
        &|u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            2.0 * u.powf(2.0 * z + 1.0) * curve.mmse_tol(u * u, eval_rel).unwrap_or(f64::NAN)
        },
        0.0,
        split.sqrt(),
        1e-10,
        0.0,
    )?;

    // Middle: ∫_s^{t_max} t^z (mmse − ζ/t) dt, integrated in v = ln t where
    // the integrand decays like a clean exponential; seeds one panel per
    // log-decade so the adaptive scheme starts resolved.
    let tail_integrand = |v: f64| {
        let t = v.exp();
        let diff = curve.mmse_tol(t, eval_rel).unwrap_or(f64::NAN) - zeta / t;
        t.powf(z + 1.0) * diff
    };
    // Integrated noise floor: ∫ t^z noise(t) dt over [s, t_max].
    let noise_t = if flat_noise {
        noise_abs(0.0) * t_max.powf(z + 1.0) / (z + 1.0)
    } else {
        2.0 * eval_rel * zeta * t_max.powf(z) / z
    };
    let (v_lo, v_hi) = (split.ln(), t_max.ln());
    let n_seed = ((v_hi - v_lo) / LN_10).ceil() as usize;
    let seeds: Vec<f64> =
        (0..=n_seed).map(|i| v_lo + (v_hi - v_lo) * i as f64 / n_seed as f64).collect();
    let tail = quad::adaptive_gk_seeded(&tail_integrand, &seeds, 1e-7, 0.5 * noise_t, 4000)?;

    // Tail completion beyond t_max with the measured leading coefficient.
    let c_hat =
        (curve.mmse_tol(t_meas, 1e-13)? - zeta / t_meas) * t_meas.powf(r1);
    let completion = c_hat * t_max.powf(z + 1.0 - r1) / (r1 - 1.0 - z);
    let c_meas_noise = noise_abs(t_meas) * t_meas.powf(r1);

    let value = head.value + tail.value + completion - zeta * split.powf(z) / z;
    if value.is_nan() {
        return Err(Error::no_conv(
            "mellin_mmse",
            "curve evaluation failed inside the quadrature".to_string(),
            f64::NAN,
        ));
    }
    let est = head.est_abs_error
        + tail.est_abs_error
        + noise_t
        + 0.5 * completion.abs()
        + (c_meas_noise * t_max.powf(z + 1.0 - r1) / (r1 - 1.0 - z)).abs()
        + 1e-15 * value.abs();
    Ok((value, est))
}

/// Numerical Mellin transform of the canonical MMSE.
///
/// Discrete inputs: `∫ t^z mmse dt`, `z > −1`. Gaussian: `∫ t^{z−1}/(1+t)
/// dt` on `0 < z < 1` (an independent check of the closed form).
/// Continuous-uniform: the analytic continuation described in the module
/// docs, `0 < z < r₁ − 1`.
pub fn mellin_mmse_numeric(curve: &CanonicalCurve, z: f64) -> Result<MellinValue> {
    if !z.is_finite() {
        return Err(Error::domain("mellin_mmse_numeric", format!("z = {z} not finite")));
    }
    match curve.input().kind {
        InputKind::Discrete(_) => {
            if z <= -1.0 + 1e-12 {
                return Err(Error::domain(
                    "mellin_mmse_numeric",
                    format!("z = {z} outside the convergence domain z > -1"),
                ));
            }
            let (value, est) = discrete_weighted(curve, z, 0)?;
            Ok(MellinValue {
                z,
                value,
                method: MellinMethod::Numeric,
                est_rel_error: est / value.abs().max(1e-280),
            })
        }
        InputKind::Gaussian => {
            if !(z > 1e-8 && z < 1.0 - 1e-8) {
                return Err(Error::domain(
                    "mellin_mmse_numeric",
                    format!("z = {z} outside (0, 1) for the Gaussian input"),
                ));
            }
            // ∫₀^∞ t^{z-1}/(1+t) dt folded onto [0,1]: (t^{z-1} + t^{-z})/(1+t).
            let q = quad::tanh_sinh(
                &|t: f64| {
                    if t == 0.0 {
                        return 0.0;
                    }
                    (t.powf(z - 1.0) + t.powf(-z)) / (1.0 + t)
                },
                0.0,
                1.0,
                1e-11,
                0.0,
            )?;
            Ok(MellinValue {
                z,
                value: q.value,
                method: MellinMethod::Numeric,
                est_rel_error: q.est_abs_error / q.value.abs(),
            })
        }
        InputKind::InfPsk | InputKind::InfPam | InputKind::InfQam => {
            let (value, est) = continuous_weighted(curve, z, 1.0)?;
            Ok(MellinValue {
                z,
                value,
                method: MellinMethod::Numeric,
                est_rel_error: est / value.abs().max(1e-280),
            })
        }
    }
}

/// Sums an alternating series `Σ_{l≥1} (−1)^l h_l` whose terms decay slowly,
/// by iterated averaging of the partial sums (Euler transformation).
/// Returns `(sum, est_abs_error)`.
fn eulerized_alternating_sum(h: &[f64]) -> (f64, f64) {
    let mut row: Vec<f64> = Vec::with_capacity(h.len());
    let mut s = 0.0;
    for (l, t) in h.iter().enumerate() {
        s += if l % 2 == 0 { -t } else { *t };
        row.push(s);
    }
    let mut best = *row.last().unwrap();
    let mut prev_best = f64::INFINITY;
    let mut est = f64::INFINITY;
    while row.len() > 1 {
        row = row.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let cand = *row.last().unwrap();
        let change = (cand - best).abs();
        if change < est {
            est = change;
            prev_best = best;
            best = cand;
        } else {
            // Averaging stopped helping; stop before rounding noise builds.
            break;
        }
    }
    (best, (best - prev_best).abs().max(1e-16 * best.abs()))
}

/// Closed-form Mellin transform `∫ t^z mmse(t) dt` for unit-power BPSK:
/// a Γ ratio head plus an alternating ₂F₁ series over odd integers,
/// accelerated by Euler averaging.
pub fn mellin_mmse_bpsk(z: f64) -> Result<MellinValue> {
    if !(z > -1.0 + 1e-9) || !z.is_finite() {
        return Err(Error::domain("mellin_mmse_bpsk", format!("z = {z} not in (-1, inf)")));
    }
    let head = specfun::gamma(1.5 + z)? / (specfun::SQRT_PI * (1.0 + z));
    let pre = ((-1.0 - 2.0 * z) * std::f64::consts::LN_2 + specfun::ln_gamma(2.0 + 2.0 * z)?
        - specfun::ln_gamma(2.0 + z)?)
        .exp();
    const TERMS: usize = 30;
    let mut h = Vec::with_capacity(TERMS);
    let mut f_est = 0.0f64;
    for l in 1..=TERMS {
        let q = (1 + 2 * l) as f64;
        let x = 1.0 - 1.0 / (q * q);
        let f = specfun::hyp2f1(1.0, 0.5, 2.0 + z, x)?;
        h.push(f.value / q);
        f_est = f_est.max(f.est_abs_error / q);
    }
    let (s, s_est) = eulerized_alternating_sum(&h);
    let value = 2.0 * (head + pre * s);
    let est_rel_error = (2.0 * pre * (s_est + f_est) + 1e-14 * value.abs()) / value.abs();
    if est_rel_error > 1e-7 {
        return Err(Error::no_conv(
            "mellin_mmse_bpsk",
            format!("series acceleration stalled at rel error {est_rel_error:.2e}"),
            value,
        ));
    }
    Ok(MellinValue { z, value, method: MellinMethod::AnalyticBpsk, est_rel_error })
}

/// `∫ t^z mmse(t) dt` for unit-power QPSK: `2^{1+z}` times the BPSK value
/// (QPSK is two BPSK quadratures at half the SNR each).
pub fn mellin_mmse_qpsk(z: f64) -> Result<MellinValue> {
    let b = mellin_mmse_bpsk(z)?;
    Ok(MellinValue {
        z,
        value: ((1.0 + z) * std::f64::consts::LN_2).exp() * b.value,
        method: MellinMethod::AnalyticQpsk,
        est_rel_error: b.est_rel_error,
    })
}

/// `∫ t^{z−1} mmse(t) dt = π/sin(πz)` for the Gaussian input, `0 < z < 1`.
pub fn mellin_mmse_gaussian(z: f64) -> Result<MellinValue> {
    if !(z > 1e-8 && z < 1.0 - 1e-8) {
        return Err(Error::domain(
            "mellin_mmse_gaussian",
            format!("z = {z} too close to the poles at 0 and 1"),
        ));
    }
    Ok(MellinValue {
        z,
        value: std::f64::consts::PI / specfun::sin_pi(z),
        method: MellinMethod::AnalyticGaussian,
        est_rel_error: 4e-16,
    })
}

/// Log-weighted transform `∫₀^∞ t^{z−1} (ln t)^n mmse(t) dt` for a discrete
/// input (`z > 0`, `n ≤ 4`): the n-th derivative of the Mellin transform
/// with respect to its index, needed by expansions with logarithmic terms.
pub fn mellin_mmse_log_weighted(curve: &CanonicalCurve, z: f64, log_power: u32) -> Result<f64> {
    if !(z > 1e-12) || !z.is_finite() {
        return Err(Error::domain("mellin_mmse_log_weighted", format!("z = {z} not > 0")));
    }
    if log_power > 4 {
        return Err(Error::domain(
            "mellin_mmse_log_weighted",
            format!("log power {log_power} exceeds the supported cap 4"),
        ));
    }
    Ok(discrete_weighted(curve, z - 1.0, log_power)?.0)
}

/// One row of the transform table.
#[derive(Clone, Debug, Serialize)]
pub struct Table1Row {
    pub input: String,
    pub z: f64,
    pub value: f64,
    pub est_rel_error: f64,
}

/// Evaluates `M[mmse; 1+z]` over an inputs × z grid (rows in input-major
/// order, grid points in parallel).
pub fn table1(inputs: &[Constellation], z_grid: &[f64]) -> Result<Vec<Table1Row>> {
    let curves: Vec<CanonicalCurve> =
        inputs.iter().map(|c| CanonicalCurve::new(c.clone())).collect::<Result<_>>()?;
    let jobs: Vec<(usize, f64)> = (0..curves.len())
        .flat_map(|i| z_grid.iter().map(move |&z| (i, z)))
        .collect();
    jobs.into_par_iter()
        .map(|(i, z)| {
            let m = mellin_mmse_numeric(&curves[i], z)?;
            Ok(Table1Row {
                input: curves[i].input().label.clone(),
                z,
                value: m.value,
                est_rel_error: m.est_rel_error,
            })
        })
        .collect()
}


#[cfg(test)]
mod probe {
    use super::*;
    use crate::constellation::Constellation;
    use std::time::Instant;

    #[test]
    #[ignore]
    fn timing_probe() {
        for (name, ts) in [
            ("inf-psk", vec![1e3, 1e4, 1e5, 1e6]),
            ("inf-pam", vec![1e4, 1e6, 1e8, 3e8]),
        ] {
            let c = CanonicalCurve::new(Constellation::parse(name).unwrap()).unwrap();
            for t in ts {
                let rel = if name == "inf-psk" { 1e-13 } else { 1e-12 };
                let t0 = Instant::now();
                let v = c.mmse_tol(t, rel);
                println!("{name} t={t:.1e} rel={rel:.0e}: {v:?} in {:?}", t0.elapsed());
            }
        }
        for name in ["qpsk", "16qam", "64qam"] {
            let c = CanonicalCurve::new(Constellation::parse(name).unwrap()).unwrap();
            for t in [0.5, 5.0, 50.0, 400.0, 1500.0] {
                for rel in [1e-11, 1e-10] {
                    let t0 = Instant::now();
                    let v = c.mmse_tol(t, rel);
                    println!(
                        "{name} t={t} rel={rel:.0e}: {:?} in {:?}",
                        v.map(|x| x as f32),
                        t0.elapsed()
                    );
                }
            }
        }
        let pam_slope = CanonicalCurve::new(Constellation::parse("inf-pam").unwrap()).unwrap();
        for c in [1e-2, 1e-3, 1e-4] {
            let m = pam_slope.mmse_tol(c, 1e-12).unwrap();
            println!("pam slope check c={c:.0e}: (1-mmse)/c = {:.8}", (1.0 - m) / c);
        }
        let psk = CanonicalCurve::new(Constellation::parse("inf-psk").unwrap()).unwrap();
        let t0 = Instant::now();
        let r = continuous_weighted(&psk, 0.6, 1.0);
        println!("psk continuation z=0.6: {r:?} in {:?}", t0.elapsed());
        let pam = CanonicalCurve::new(Constellation::parse("inf-pam").unwrap()).unwrap();
        let t0 = Instant::now();
        let r = continuous_weighted(&pam, 0.25, 1.0);
        println!("pam continuation z=0.25: {r:?} in {:?}", t0.elapsed());
    }
}
