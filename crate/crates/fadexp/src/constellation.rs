//! Channel inputs: finite constellations with point probabilities, the
//! three infinite-cardinality families (circle, segment, square), and the
//! Gaussian input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex constellation point with its probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub re: f64,
    pub im: f64,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputKind {
    /// Finite set of points with probabilities summing to one.
    Discrete(Vec<Point>),
    /// Uniform on the unit circle.
    InfPsk,
    /// Uniform on the real segment [-sqrt(3), sqrt(3)] (unit power).
    InfPam,
    /// Uniform on the square, i.e. two independent InfPam components at
    /// half power each.
    InfQam,
    /// Circularly symmetric complex Gaussian with unit power.
    Gaussian,
}

/// Channel input: a label for reporting plus the input law itself.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    pub label: String,
    pub kind: InputKind,
}

#[derive(Serialize, Deserialize)]
struct ConstellationFile {
    label: String,
    points: Vec<Point>,
}

impl Constellation {
    /// m-ary phase-shift keying: points `exp(2 pi i k / m)`, equiprobable.
    pub fn make_psk(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!("psk requires m >= 2, got {m}")));
        }
        let prob = 1.0 / m as f64;
        let points = (0..m)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                Point { re: th.cos(), im: th.sin(), prob }
            })
            .collect();
        let label = match m {
            2 => "bpsk".to_string(),
            4 => "qpsk".to_string(),
            _ => format!("{m}psk"),
        };
        Ok(Self { label, kind: InputKind::Discrete(points) })
    }

    /// m-ary pulse-amplitude modulation, unit average power:
    /// levels `a (2i - m + 1)` with `a = sqrt(3 / (m^2 - 1))`.
    pub fn make_pam(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!("pam requires m >= 2, got {m}")));
        }
        let a = (3.0 / ((m * m - 1) as f64)).sqrt();
        let prob = 1.0 / m as f64;
        let points = (0..m)
            .map(|i| Point { re: a * (2.0 * i as f64 - (m as f64 - 1.0)), im: 0.0, prob })
            .collect();
        Ok(Self { label: format!("{m}pam"), kind: InputKind::Discrete(points) })
    }

    /// Square m-QAM (m a perfect square >= 4): two independent
    /// sqrt(m)-PAM components, each carrying half the power.
    pub fn make_qam(m: usize) -> Result<Self> {
        let side = (m as f64).sqrt().round() as usize;
        if m < 4 || side * side != m {
            return Err(Error::InvalidInput(format!("qam requires a perfect square >= 4, got {m}")));
        }
        let pam = Self::make_pam(side)?;
        let levels: Vec<f64> = match &pam.kind {
            InputKind::Discrete(ps) => ps.iter().map(|p| p.re).collect(),
            _ => unreachable!(),
        };
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let prob = 1.0 / m as f64;
        let mut points = Vec::with_capacity(m);
        for &re in &levels {
            for &im in &levels {
                points.push(Point { re: re * s, im: im * s, prob });
            }
        }
        Ok(Self { label: format!("{m}qam"), kind: InputKind::Discrete(points) })
    }

    pub fn inf_psk() -> Self {
        Self { label: "inf-psk".into(), kind: InputKind::InfPsk }
    }

    pub fn inf_pam() -> Self {
        Self { label: "inf-pam".into(), kind: InputKind::InfPam }
    }

    pub fn inf_qam() -> Self {
        Self { label: "inf-qam".into(), kind: InputKind::InfQam }
    }

    pub fn gaussian() -> Self {
        Self { label: "gaussian".into(), kind: InputKind::Gaussian }
    }

    /// Load a discrete constellation from its JSON form:
    /// `{"label": "...", "points": [{"re":..,"im":..,"prob":..}, ...]}`.
    /// Probabilities must be positive and sum to 1 within 1e-9; the stored
    /// probabilities are renormalized to sum to 1 exactly.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConstellationFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("constellation json: {e}")))?;
        let mut c = Self { label: file.label, kind: InputKind::Discrete(file.points) };
        c.normalize_and_validate()?;
        Ok(c)
    }

    /// Parse a CLI-style input name: `bpsk`, `qpsk`, `16qam`, `8pam`,
    /// `psk:8`, `pam:4`, `qam:64`, `inf-psk`, `inf-pam`, `inf-qam`,
    /// `gaussian`, or `@path.json`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim().to_ascii_lowercase();
        if let Some(path) = s.strip_prefix('@') {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("reading {path}: {e}")))?;
            return Self::from_json(&text);
        }
        match s.as_str() {
            "bpsk" => return Self::make_psk(2),
            "qpsk" => return Self::make_psk(4),
            "inf-psk" => return Ok(Self::inf_psk()),
            "inf-pam" => return Ok(Self::inf_pam()),
            "inf-qam" => return Ok(Self::inf_qam()),
            "gaussian" => return Ok(Self::gaussian()),
            _ => {}
        }
        if let Some((family, m)) = s.split_once(':') {
            let m: usize = m
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad cardinality in '{spec}'")))?;
            return match family {
                "psk" => Self::make_psk(m),
                "pam" => Self::make_pam(m),
                "qam" => Self::make_qam(m),
                _ => Err(Error::InvalidInput(format!("unknown input family '{family}'"))),
            };
        }
        for (suffix, f) in [
            ("psk", Self::make_psk as fn(usize) -> Result<Self>),
            ("pam", Self::make_pam),
            ("qam", Self::make_qam),
        ] {
            if let Some(m) = s.strip_suffix(suffix) {
                if let Ok(m) = m.parse::<usize>() {
                    return f(m);
                }
            }
        }
        Err(Error::InvalidInput(format!("unknown input '{spec}'")))
    }

    pub fn to_json(&self) -> Result<String> {
        match &self.kind {
            InputKind::Discrete(points) => {
                let file = ConstellationFile { label: self.label.clone(), points: points.clone() };
                Ok(serde_json::to_string_pretty(&file).unwrap())
            }
            _ => Err(Error::Unsupported(format!(
                "only discrete constellations serialize to JSON ({})",
                self.label
            ))),
        }
    }

    fn normalize_and_validate(&mut self) -> Result<()> {
        if let InputKind::Discrete(points) = &mut self.kind {
            if points.len() < 2 {
                return Err(Error::InvalidInput("need at least 2 points".into()));
            }
            let mut sum = 0.0;
            for p in points.iter() {
                if !(p.prob > 0.0) || !p.re.is_finite() || !p.im.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "bad point ({}, {}) prob {}",
                        p.re, p.im, p.prob
                    )));
                }
                sum += p.prob;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("probabilities sum to {sum}, not 1")));
            }
            for p in points.iter_mut() {
                p.prob /= sum;
            }
            if self.min_distance() <= 1e-12 {
                return Err(Error::InvalidInput("constellation has coincident points".into()));
            }
        }
        Ok(())
    }

    /// Average power `E |x|^2` (1 for every built-in input).
    pub fn power(&self) -> f64 {
        match &self.kind {
            InputKind::Discrete(points) => {
                points.iter().map(|p| p.prob * (p.re * p.re + p.im * p.im)).sum()
            }
            _ => 1.0,
        }
    }

    /// Minimum pairwise distance of a discrete constellation; 0 for the
    /// continuous families (no gap between neighboring inputs).
    pub fn min_distance(&self) -> f64 {
        match &self.kind {
            InputKind::Discrete(points) => {
                let mut d2 = f64::INFINITY;
                for (i, a) in points.iter().enumerate() {
                    for b in points.iter().skip(i + 1) {
                        let dd = (a.re - b.re).powi(2) + (a.im - b.im).powi(2);
                        d2 = d2.min(dd);
                    }
                }
                d2.sqrt()
            }
            _ => 0.0,
        }
    }

    /// Number of points, if finite.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            InputKind::Discrete(points) => Some(points.len()),
            _ => None,
        }
    }

    /// True when every point lies on the real axis, in which case the
    /// canonical-channel integrals reduce to one real noise dimension.
    pub fn is_real(&self) -> bool {
        match &self.kind {
            InputKind::Discrete(points) => points.iter().all(|p| p.im == 0.0),
            InputKind::InfPam => true,
            _ => false,
        }
    }
}
