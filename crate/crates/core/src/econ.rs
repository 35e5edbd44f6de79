//! Closed-form building blocks shared by every layer: pollution penalty,
//! consumer utility, sorting thresholds, the two production technologies and
//! the skill segmentation they induce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityVector {
    pub q_creative: f64,
    pub q_tech: f64,
}

impl QualityVector {
    pub fn new(q_creative: f64, q_tech: f64) -> Result<Self> {
        let v = QualityVector { q_creative, q_tech };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("q_creative", self.q_creative), ("q_tech", self.q_tech)] {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {x}")));
            }
        }
        Ok(())
    }

    /// CES aggregate `(w q_c^rho + (1-w) q_t^rho)^(1/rho)`.
    pub fn effective(&self, creative_weight: f64, rho: f64) -> f64 {
        ces(self.q_creative, self.q_tech, creative_weight, rho)
    }
}

pub fn ces(creative: f64, tech: f64, w: f64, rho: f64) -> f64 {
    if creative == 0.0 && tech == 0.0 {
        return 0.0;
    }
    (w * creative.powf(rho) + (1.0 - w) * tech.powf(rho)).powf(1.0 / rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillVector {
    pub s_tech: f64,
    pub s_creative: f64,
}

impl SkillVector {
    pub fn new(s_tech: f64, s_creative: f64) -> Result<Self> {
        for (name, x) in [("s_tech", s_tech), ("s_creative", s_creative)] {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {x}")));
            }
        }
        Ok(SkillVector { s_tech, s_creative })
    }

    /// Projects back onto the non-negative quadrant.
    pub fn clamped(self) -> Self {
        SkillVector { s_tech: self.s_tech.max(0.0), s_creative: self.s_creative.max(0.0) }
    }
}

/// Increasing, convex hedonic price schedule `p(q) = a q + b q^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HedonicSchedule {
    pub linear: f64,
    pub convex: f64,
}

impl HedonicSchedule {
    pub fn price(&self, q: f64) -> f64 {
        self.linear * q + 0.5 * self.convex * q * q
    }
}

/// Anything mapping quality to a price, `None` outside its domain.
pub trait PriceSchedule {
    fn price_at(&self, q: f64) -> Option<f64>;
}

impl PriceSchedule for HedonicSchedule {
    fn price_at(&self, q: f64) -> Option<f64> {
        (q >= 0.0 && q.is_finite()).then(|| self.price(q))
    }
}

impl<F: Fn(f64) -> Option<f64>> PriceSchedule for F {
    fn price_at(&self, q: f64) -> Option<f64> {
        self(q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub beta: f64,
    pub eta: f64,
    pub c_a: f64,
    pub c_h: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub q_bar_a: f64,
    pub sigma: f64,
    pub theta_bar: f64,
    pub elasticity: f64,
    pub commission: f64,
    /// Creative weight `w` in the CES quality aggregate.
    pub creative_weight: f64,
    /// Competitive markup of the AI sector over its unit cost.
    pub ai_markup: f64,
    /// Per-agent participation cost for producers; 0 puts `s_L` at the
    /// bottom of the skill support whenever AI is profitable.
    pub participation_cost: f64,
    pub skill_min: f64,
    pub skill_max: f64,
    pub human_quality: QualityVector,
    pub ai_quality: QualityVector,
    pub schedule: HedonicSchedule,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            beta: 2.0,
            eta: 9671.0,
            c_a: 0.05,
            c_h: 21.36,
            gamma: 1.0,
            alpha: 1.0,
            kappa: 0.10,
            q_bar_a: 0.65,
            sigma: 0.25,
            theta_bar: 95.27,
            elasticity: 0.85,
            commission: 0.15,
            creative_weight: 0.5,
            ai_markup: 0.503,
            participation_cost: 0.0,
            skill_min: 0.0,
            skill_max: 1.0,
            human_quality: QualityVector { q_creative: 1.0, q_tech: 0.70 },
            ai_quality: QualityVector { q_creative: 0.65, q_tech: 0.95 },
            schedule: HedonicSchedule { linear: 1.0, convex: 1.2 },
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("sigma", self.sigma),
            ("theta_bar", self.theta_bar),
            ("q_bar_a", self.q_bar_a),
            ("elasticity", self.elasticity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        // beta = 0 is the no-externality benchmark, so it is allowed
        let non_negative = [
            ("beta", self.beta),
            ("c_a", self.c_a),
            ("c_h", self.c_h),
            ("kappa", self.kappa),
            ("commission", self.commission),
            ("ai_markup", self.ai_markup),
            ("participation_cost", self.participation_cost),
            ("skill_min", self.skill_min),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        if self.commission >= 1.0 {
            return Err(Error::invalid("commission", "must be < 1"));
        }
        if !(0.0..=1.0).contains(&self.creative_weight) {
            return Err(Error::invalid("creative_weight", "must lie in [0, 1]"));
        }
        if !(self.skill_max.is_finite() && self.skill_max > self.skill_min) {
            return Err(Error::invalid("skill_max", "must exceed skill_min"));
        }
        if self.c_a >= self.c_h {
            return Err(Error::invalid(
                "c_a",
                format!("AI marginal cost {} must be below c_h = {}", self.c_a, self.c_h),
            ));
        }
        self.human_quality.validate()?;
        self.ai_quality.validate()?;
        if !(self.schedule.linear >= 0.0 && self.schedule.convex >= 0.0) {
            return Err(Error::invalid("schedule", "coefficients must be >= 0"));
        }
        Ok(())
    }

    /// Same parameters with a different pollution sensitivity.
    pub fn with_beta(&self, beta: f64) -> Self {
        ModelParams { beta, ..self.clone() }
    }

    pub fn q_h(&self) -> f64 {
        self.human_quality.effective(self.creative_weight, self.elasticity)
    }

    pub fn q_a(&self) -> f64 {
        self.ai_quality.effective(self.creative_weight, self.elasticity)
    }
}

fn check_volume(d_a: f64) -> Result<()> {
    if d_a.is_finite() && d_a >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what: "content volume", value: d_a })
    }
}

/// `beta ln(1 + eta D_A)`.
pub fn pollution_penalty(d_a: f64, p: &ModelParams) -> Result<f64> {
    check_volume(d_a)?;
    Ok(penalty(p.beta, p.eta, d_a))
}

/// Unchecked penalty for an explicit sensitivity.
#[inline]
pub fn penalty(beta: f64, eta: f64, d_a: f64) -> f64 {
    beta * (eta * d_a).ln_1p()
}

/// Derivative of the penalty in the volume.
#[inline]
pub fn marginal_penalty(beta: f64, eta: f64, d_a: f64) -> f64 {
    beta * eta / (1.0 + eta * d_a)
}

pub fn consumer_utility(theta: f64, q: f64, price: f64, d_a: f64, p: &ModelParams) -> Result<f64> {
    if !(0.0..=p.theta_bar).contains(&theta) {
        return Err(Error::Domain { what: "taste type", value: theta });
    }
    if !(q >= 0.0) {
        return Err(Error::Domain { what: "quality", value: q });
    }
    if !(price >= 0.0) {
        return Err(Error::Domain { what: "price", value: price });
    }
    Ok(theta * q - price - pollution_penalty(d_a, p)?)
}

pub fn participation_threshold(price: f64, q: f64, d_a: f64, p: &ModelParams) -> Result<f64> {
    if q <= 0.0 {
        return Err(Error::DegenerateGood);
    }
    Ok((price + pollution_penalty(d_a, p)?) / q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub theta_out: f64,
    pub theta_ah: f64,
    /// Set when `theta_ah <= theta_out`: nobody buys the low-quality good.
    pub ai_segment_empty: bool,
}

pub fn sorting_thresholds(p_a: f64, p_h: f64, q_a: f64, q_h: f64, d_a: f64, p: &ModelParams) -> Result<Thresholds> {
    if !(q_h > q_a && q_a > 0.0) {
        return Err(Error::NonSortable { q_h, q_a });
    }
    let theta_out = participation_threshold(p_a, q_a, d_a, p)?;
    let theta_ah = (p_h - p_a) / (q_h - q_a);
    Ok(Thresholds { theta_out, theta_ah, ai_segment_empty: theta_ah <= theta_out })
}

pub fn human_cost(q: f64, p: &ModelParams) -> f64 {
    0.5 * p.gamma * q * q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AiCost {
    Feasible(f64),
    Infeasible,
}

impl AiCost {
    pub fn value(self) -> Option<f64> {
        match self {
            AiCost::Feasible(c) => Some(c),
            AiCost::Infeasible => None,
        }
    }
}

pub fn ai_cost(q: f64, p: &ModelParams) -> AiCost {
    if q <= p.q_bar_a {
        AiCost::Feasible(p.c_a * q + p.kappa)
    } else {
        AiCost::Infeasible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Technology {
    Human,
    Ai,
}

/// Lower envelope of the two cost curves; ties go to Human.
pub fn envelope_cost(q: f64, p: &ModelParams) -> (f64, Technology) {
    let h = human_cost(q, p);
    match ai_cost(q, p) {
        AiCost::Feasible(a) if a < h => (a, Technology::Ai),
        _ => (h, Technology::Human),
    }
}

/// Quality where the two cost curves cross, `(c_A + sqrt(c_A^2 + 2 gamma kappa)) / gamma`.
pub fn cost_crossover(p: &ModelParams) -> f64 {
    (p.c_a + (p.c_a * p.c_a + 2.0 * p.gamma * p.kappa).sqrt()) / p.gamma
}

pub fn profit_ai(price_at_cap: f64, p: &ModelParams) -> Result<f64> {
    if !(price_at_cap >= 0.0) {
        return Err(Error::Domain { what: "price at cap", value: price_at_cap });
    }
    Ok(price_at_cap - p.c_a * p.q_bar_a - p.kappa)
}

pub fn profit_human<S: PriceSchedule + ?Sized>(s: f64, schedule: &S, p: &ModelParams) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Domain { what: "skill", value: s });
    }
    let q = p.alpha * s;
    let price = schedule.price_at(q).ok_or(Error::ScheduleDomain(q))?;
    Ok(price - human_cost(q, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Exit,
    AdoptAi,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SegmentationOutcome {
    /// Exit / AI / Human bands as in the interior case.
    Interior,
    /// AI never beats the outside option; only humans above break-even.
    AiEmpty,
    /// Human profit never reaches the AI profit on the support.
    HumanEmpty,
    /// Neither technology is profitable anywhere.
    FullExit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segmentation {
    pub s_l: f64,
    pub s_h: f64,
    /// AI profit net of the participation cost.
    pub pi_a: f64,
    pub outcome: SegmentationOutcome,
}

impl Segmentation {
    pub fn region(&self, s: f64) -> Region {
        if s < self.s_l {
            Region::Exit
        } else if s < self.s_h {
            Region::AdoptAi
        } else {
            Region::Human
        }
    }

    pub fn technology(&self, s: f64) -> Option<Technology> {
        match self.region(s) {
            Region::Exit => None,
            Region::AdoptAi => Some(Technology::Ai),
            Region::Human => Some(Technology::Human),
        }
    }
}

pub const CUTOFF_TOL: f64 = 1e-10;

/// Exit / Adopt-AI / Human cutoffs over `[skill_min, skill_max]`.
pub fn segmentation_cutoffs<S: PriceSchedule + ?Sized>(schedule: &S, p: &ModelParams) -> Result<Segmentation> {
    let (lo, hi) = (p.skill_min, p.skill_max);
    let cap_price = schedule.price_at(p.q_bar_a).ok_or(Error::ScheduleDomain(p.q_bar_a))?;
    let pi_a = profit_ai(cap_price, p)? - p.participation_cost;
    let net_h = |s: f64| profit_human(s, schedule, p).map(|v| v - p.participation_cost);
    // domain errors surface here once, then the closures below can unwrap
    let (h_lo, h_hi) = (net_h(lo)?, net_h(hi)?);
    let gap = |s: f64| net_h(s).unwrap_or(f64::NAN) - pi_a;

    if pi_a < 0.0 {
        if h_hi < 0.0 {
            return Ok(Segmentation { s_l: hi, s_h: hi, pi_a, outcome: SegmentationOutcome::FullExit });
        }
        let be = if h_lo >= 0.0 {
            lo
        } else {
            bisect(|s| net_h(s).unwrap_or(f64::NAN), lo, hi, CUTOFF_TOL)
                .ok_or_else(|| Error::Solver("human break-even not bracketed".into()))?
        };
        return Ok(Segmentation { s_l: be, s_h: be, pi_a, outcome: SegmentationOutcome::AiEmpty });
    }
    if h_lo >= pi_a {
        return Ok(Segmentation { s_l: lo, s_h: lo, pi_a, outcome: SegmentationOutcome::AiEmpty });
    }
    if h_hi < pi_a {
        return Ok(Segmentation { s_l: lo, s_h: hi, pi_a, outcome: SegmentationOutcome::HumanEmpty });
    }
    let s_h = bisect(gap, lo, hi, CUTOFF_TOL).ok_or_else(|| Error::Solver("profit crossing not bracketed".into()))?;
    Ok(Segmentation { s_l: lo, s_h, pi_a, outcome: SegmentationOutcome::Interior })
}

/// Direct per-skill argmax over {Exit, AI, Human}; ties favour the earlier option.
pub fn best_region<S: PriceSchedule + ?Sized>(s: f64, schedule: &S, pi_a: f64, p: &ModelParams) -> Result<Region> {
    let h = profit_human(s, schedule, p)? - p.participation_cost;
    let mut best = (Region::Exit, 0.0);
    if pi_a > best.1 {
        best = (Region::AdoptAi, pi_a);
    }
    if h > best.1 {
        best = (Region::Human, h);
    }
    Ok(best.0)
}
