//! Norm windows of the staged construction.
//!
//! Every window is described by base-10 exponents. Stage `k` uses
//! `P(i) = major(i + k0)`, `Q(k) = minor(k + k0)`, `S(k) = slack(k + k0)` and
//! `R(k) = free_slack(k + k0)`; with the exponent map `x^6, x^4, x^2, x^2.3`
//! the windows are exactly the ones of the original schedule.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest window exponent that is ever turned into an integer.
pub const MAX_WINDOW_DIGITS: f64 = 400.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("a schedule needs at least one stage")]
    NoStages,
    #[error("exponent map is not increasing: {0}")]
    NotMonotone(String),
    #[error("window {phase} of stage {k} collapses: [{lo}, {hi}]")]
    Collapsed { phase: &'static str, k: usize, lo: f64, hi: f64 },
    #[error("stage {k}: restriction window does not dominate the freedom window")]
    Ordering { k: usize },
    #[error("stage {k} has exponent {exponent:.1}; windows this large are kept symbolic")]
    TooLarge { k: usize, exponent: f64 },
    #[error("stage {0} is not part of the schedule")]
    NoSuchStage(usize),
    #[error("cannot parse exponent polynomial {0:?}")]
    Parse(String),
}

/// `coeff * x^exp`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exp: f64,
}

/// A sum of power terms, evaluated at positive arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<PowerTerm>);

impl Poly {
    pub fn power(coeff: f64, exp: f64) -> Self {
        Poly(vec![PowerTerm { coeff, exp }])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().map(|t| t.coeff * x.powf(t.exp)).sum()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            match t.exp {
                e if e == 0.0 => write!(f, "{}", t.coeff)?,
                e if e == 1.0 => write!(f, "{}*x", t.coeff)?,
                e => write!(f, "{}*x^{}", t.coeff, e)?,
            }
        }
        Ok(())
    }
}

/// Accepts sums such as `0.5*x^2+x+2`.
impl FromStr for Poly {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScheduleError::Parse(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad());
        }
        let mut terms = Vec::new();
        for term in compact.split('+') {
            let (coeff, var) = match term.split_once('*') {
                Some((c, v)) => (c.parse::<f64>().map_err(|_| bad())?, Some(v)),
                None if term.starts_with('x') => (1.0, Some(term)),
                None => (term.parse::<f64>().map_err(|_| bad())?, None),
            };
            let exp = match var {
                None => 0.0,
                Some("x") => 1.0,
                Some(v) => v.strip_prefix("x^").ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
            };
            terms.push(PowerTerm { coeff, exp });
        }
        Ok(Poly(terms))
    }
}

/// The four exponent functions of the schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentMap {
    /// Plays the role of `x^6`: growth of phase `i`.
    pub major: Poly,
    /// Plays the role of `x^4`: the shift between freedom and restriction.
    pub minor: Poly,
    /// Plays the role of `x^2`: window widths and the transition bound.
    pub slack: Poly,
    /// Plays the role of `x^2.3`: width of the left freedom window.
    pub free_slack: Poly,
}

impl ExponentMap {
    /// The original, astronomically large, exponents.
    pub fn original() -> Self {
        Self {
            major: Poly::power(1.0, 6.0),
            minor: Poly::power(1.0, 4.0),
            slack: Poly::power(1.0, 2.0),
            free_slack: Poly::power(1.0, 2.3),
        }
    }

    /// Small exponents that keep every stage of a short run computable:
    /// with `k0 = 0` three stages on `d = 4` stay below `10^30`.
    pub fn desk() -> Self {
        let affine = |c: f64, a: f64| Poly(vec![PowerTerm { coeff: c, exp: 0.0 }, PowerTerm { coeff: a, exp: 1.0 }]);
        Self {
            major: Poly(vec![PowerTerm { coeff: 0.1, exp: 2.0 }, PowerTerm { coeff: 0.1, exp: 1.0 }]),
            minor: Poly::power(0.6, 1.0),
            slack: affine(0.5, 0.25),
            free_slack: affine(1.0, 0.25),
        }
    }

    /// `major = f`, with the other three derived from `f` at fixed fractions.
    pub fn from_major(f: Poly) -> Self {
        let scaled = |c: f64| Poly(f.0.iter().map(|t| PowerTerm { coeff: t.coeff * c, exp: t.exp }).collect());
        Self { minor: scaled(0.25), slack: scaled(0.2), free_slack: scaled(0.2), major: f }
    }

    /// Parses `original`, `desk`, or `major=...;minor=...;slack=...;free=...`.
    pub fn parse(s: &str) -> Result<Self, ScheduleError> {
        match s.trim() {
            "original" => return Ok(Self::original()),
            "desk" => return Ok(Self::desk()),
            _ => {}
        }
        let mut map = Self::desk();
        let mut any = false;
        for part in s.split(';').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| ScheduleError::Parse(s.to_string()))?;
            let poly: Poly = value.parse()?;
            match key.trim() {
                "major" => map = Self { major: poly, ..map },
                "minor" => map.minor = poly,
                "slack" => map.slack = poly,
                "free" | "free_slack" => map.free_slack = poly,
                _ => return Err(ScheduleError::Parse(s.to_string())),
            }
            any = true;
        }
        if !any {
            // a bare polynomial is the major exponent
            return Ok(Self::from_major(s.parse()?));
        }
        Ok(map)
    }
}

/// Closed interval of base-10 exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

/// Exponents of one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageExponents {
    pub k: usize,
    /// Freedom on the left; stage 1 starts with restriction instead.
    pub a: Option<Interval>,
    pub a_prime: Interval,
    /// Upper exponent of the transition norm.
    pub t_max: f64,
    pub b: Interval,
    pub b_prime: Interval,
    /// `log10 s_k`.
    pub s: f64,
    /// `log10 t_k`.
    pub t: f64,
    /// `P(2k)`.
    pub p_even: f64,
    /// `P(2k+1)`.
    pub p_odd: f64,
    /// `Q(k)`.
    pub q: f64,
    /// `S(k)`.
    pub slack: f64,
}

impl StageExponents {
    /// Largest exponent appearing in the stage.
    pub fn max_exponent(&self) -> f64 {
        [self.a.map_or(0.0, |a| a.hi), self.a_prime.hi, self.t_max, self.b.hi, self.b_prime.hi, -self.t]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub k0: u32,
    pub scale: ExponentMap,
    pub stages: Vec<StageExponents>,
}

/// `[lo, hi]` on the norm `max_i |C_i|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormWindow {
    pub lo: BigInt,
    pub hi: BigInt,
}

impl NormWindow {
    pub fn contains(&self, n: &BigInt) -> bool {
        self.lo <= *n && *n <= self.hi
    }
}

/// Integer windows of one stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageWindows {
    pub k: usize,
    pub a: Option<NormWindow>,
    pub a_prime: NormWindow,
    pub t_max: BigInt,
    pub b: NormWindow,
    pub b_prime: NormWindow,
    pub s: BigInt,
    /// `1 / t_k`, rounded down.
    pub t_inverse: BigInt,
}

const LOG10_2: f64 = std::f64::consts::LOG10_2;
const MANTISSA_DIGITS: u32 = 15;

fn pow10(e: f64, round_up: bool) -> BigInt {
    if e <= 0.0 {
        return BigInt::one();
    }
    let int = e.floor();
    let frac = 10f64.powf(e - int) * 10f64.powi(MANTISSA_DIGITS as i32);
    let mant = BigInt::from(if round_up { frac.ceil() } else { frac.floor() } as u64);
    let ten = BigInt::from(10);
    let int = int as u32;
    if int >= MANTISSA_DIGITS {
        mant * Pow::pow(&ten, int - MANTISSA_DIGITS)
    } else {
        let div = Pow::pow(&ten, MANTISSA_DIGITS - int);
        let q = &mant / &div;
        if round_up && &q * &div != mant {
            q + 1
        } else {
            q
        }
    }
}

fn window(i: Interval) -> NormWindow {
    NormWindow { lo: pow10(i.lo, true), hi: pow10(i.hi, false) }
}

pub fn make_schedule(k0: u32, scale: ExponentMap, stages: usize) -> Result<Schedule, ScheduleError> {
    if stages == 0 {
        return Err(ScheduleError::NoStages);
    }
    let base = k0 as f64;
    let p = |i: usize| scale.major.eval(i as f64 + base);
    let q = |k: usize| scale.minor.eval(k as f64 + base);
    let s = |k: usize| scale.slack.eval(k as f64 + base);
    let r = |k: usize| scale.free_slack.eval(k as f64 + base);
    for i in 3..=2 * stages + 2 {
        if p(i + 1) <= p(i) {
            return Err(ScheduleError::NotMonotone(format!("major({}) <= major({})", i + 1 + k0 as usize, i + k0 as usize)));
        }
    }
    for k in 1..=stages {
        if q(k + 1) < q(k) {
            return Err(ScheduleError::NotMonotone(format!("minor decreases at {}", k + k0 as usize)));
        }
    }
    let mut out = Vec::with_capacity(stages);
    for k in 1..=stages {
        let a = (k >= 2).then(|| Interval::new(p(2 * k) - q(k), p(2 * k) - q(k) + r(k)));
        let a_prime = if k == 1 {
            Interval::new(p(3), p(3) + LOG10_2)
        } else {
            Interval::new(p(2 * k + 1) + q(k), p(2 * k + 1) + q(k) + s(k))
        };
        let b = Interval::new(p(2 * k + 1) - q(k), p(2 * k + 1) - q(k) + s(k));
        let b_prime = Interval::new(p(2 * k + 2) + q(k), p(2 * k + 2) + q(k) + LOG10_2);
        let stage = StageExponents {
            k,
            a,
            a_prime,
            t_max: s(k),
            b,
            b_prime,
            s: p(2 * k + 2) + q(k),
            t: -(p(2 * k + 1) + q(k) + s(k) / 2.0),
            p_even: p(2 * k),
            p_odd: p(2 * k + 1),
            q: q(k),
            slack: s(k),
        };
        let named = [("A", stage.a), ("A'", Some(a_prime)), ("B", Some(b)), ("B'", Some(b_prime))];
        for (phase, w) in named {
            if let Some(w) = w {
                if w.hi < w.lo || w.hi < 0.0 {
                    return Err(ScheduleError::Collapsed { phase, k, lo: w.lo, hi: w.hi });
                }
            }
        }
        if stage.t_max < 0.0 {
            return Err(ScheduleError::Collapsed { phase: "T", k, lo: 0.0, hi: stage.t_max });
        }
        if let Some(a) = stage.a {
            if a_prime.lo <= a.hi {
                return Err(ScheduleError::Ordering { k });
            }
        }
        out.push(stage);
    }
    Ok(Schedule { k0, scale, stages: out })
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn exponents(&self, k: usize) -> Result<&StageExponents, ScheduleError> {
        self.stages.get(k.wrapping_sub(1)).ok_or(ScheduleError::NoSuchStage(k))
    }

    /// Integer windows of stage `k`, refused when they would be enormous.
    pub fn windows(&self, k: usize) -> Result<StageWindows, ScheduleError> {
        let e = self.exponents(k)?;
        let exponent = e.max_exponent();
        if exponent > MAX_WINDOW_DIGITS {
            return Err(ScheduleError::TooLarge { k, exponent });
        }
        Ok(StageWindows {
            k,
            a: e.a.map(window),
            a_prime: window(e.a_prime),
            t_max: pow10(e.t_max, false),
            b: window(e.b),
            b_prime: window(e.b_prime),
            s: pow10(e.s, true),
            t_inverse: pow10(-e.t, false),
        })
    }

    /// Whether every stage can be instantiated.
    pub fn is_numeric(&self) -> bool {
        self.stages.iter().all(|s| s.max_exponent() <= MAX_WINDOW_DIGITS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_parsing() {
        let p: Poly = "0.5*x^2+x+2".parse().unwrap();
        assert_eq!(p.eval(2.0), 6.0);
        assert_eq!(p.to_string().parse::<Poly>().unwrap(), p);
        assert!("x^".parse::<Poly>().is_err());
        assert!("".parse::<Poly>().is_err());
    }

    #[test]
    fn powers_of_ten() {
        assert_eq!(pow10(3.0, false), BigInt::from(1000));
        assert_eq!(pow10(3.0, true), BigInt::from(1000));
        assert_eq!(pow10(LOG10_2 + 2.0, false), BigInt::from(200));
        assert_eq!(pow10(0.5, false), BigInt::from(3));
        assert_eq!(pow10(0.5, true), BigInt::from(4));
        assert_eq!(pow10(20.0, false), "100000000000000000000".parse::<BigInt>().unwrap());
    }

    #[test]
    fn windows_ordered_within_and_across_stages() {
        let map = ExponentMap::from_major("x+2".parse().unwrap());
        let s = make_schedule(1, map, 3).unwrap();
        for k in 2..=3 {
            let e = s.exponents(k).unwrap();
            let a = e.a.unwrap();
            assert!(a.hi < e.a_prime.lo);
            assert!(a.lo < e.b.lo && e.b.lo < e.a_prime.lo && e.a_prime.lo < e.b_prime.lo);
            let prev = s.exponents(k - 1).unwrap();
            assert!(prev.a_prime.lo < e.a_prime.lo);
            assert!(prev.b.lo < e.b.lo && prev.b_prime.lo < e.b_prime.lo);
        }
        for k in 1..=3 {
            let w = s.windows(k).unwrap();
            assert!(w.b.lo <= w.b.hi && w.b_prime.lo <= w.b_prime.hi);
        }
    }

    #[test]
    fn single_stage_and_original_scale() {
        let s = make_schedule(0, ExponentMap::desk(), 1).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.exponents(1).unwrap().a.is_none());
        let original = make_schedule(10, ExponentMap::original(), 2).unwrap();
        assert_eq!(original.exponents(1).unwrap().a_prime.lo, 13f64.powi(6));
        assert!(matches!(original.windows(1), Err(ScheduleError::TooLarge { .. })));
        assert!(!original.is_numeric());
    }

    #[test]
    fn collapsed_windows_are_rejected() {
        let map = ExponentMap { slack: Poly::power(-5.0, 0.0), ..ExponentMap::desk() };
        assert!(matches!(make_schedule(0, map, 2), Err(ScheduleError::Collapsed { .. })));
        assert_eq!(make_schedule(0, ExponentMap::desk(), 0), Err(ScheduleError::NoStages));
        let flat = ExponentMap::from_major(Poly::power(1.0, 0.0));
        assert!(matches!(make_schedule(0, flat, 2), Err(ScheduleError::NotMonotone(_))));
    }
}
