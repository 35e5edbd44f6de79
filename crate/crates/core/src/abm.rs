//! Agent-based market: Q-learning creators with two-dimensional skills,
//! AI sellers whose capability grows logistically, logit consumers, and
//! endogenous pollution, with exit and entry.
//!
//! Money is measured per unit of consumer mass: a sale at price `p` earns
//! `p / n_consumers`. One run is strictly sequential; replications are
//! independent and can be spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::econ::{self, ModelParams, QualityVector, SkillVector, Technology};
use crate::error::{Error, Result};
use crate::numeric::{dot2, median};
use crate::par;

/// Periods at the end of a run used for the sorting statistic.
pub const FINAL_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Stay,
    Reskill,
    AdoptAi,
    Exit,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Stay, Action::Reskill, Action::AdoptAi, Action::Exit];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One value estimate per action, indexed in [`Action::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub values: [f64; 4],
}

impl QTable {
    /// Optimistic start: every participation action at `2 V_outside`, Exit
    /// pinned at `V_outside`.
    pub fn optimistic(outside: f64) -> Self {
        QTable { values: [2.0 * outside, 2.0 * outside, 2.0 * outside, outside] }
    }

    pub fn get(&self, a: Action) -> f64 {
        self.values[a.index()]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Best value among the actions that keep the agent in the market.
    pub fn max_participation(&self) -> f64 {
        self.values[..3].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QLearning {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon: f64,
    /// Value of leaving the market, `V_outside`.
    pub outside_option: f64,
    /// Rewards are clipped to `[-reward_clip, reward_clip]`.
    pub reward_clip: f64,
}

impl Default for QLearning {
    fn default() -> Self {
        QLearning { learning_rate: 0.5, discount: 0.9, epsilon: 0.0073, outside_option: 0.000486, reward_clip: 1.0 }
    }
}

/// Normal prior for initial and entrant skills, truncated at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkillPrior {
    pub tech_mean: f64,
    pub tech_sd: f64,
    pub creative_mean: f64,
    pub creative_sd: f64,
}

impl Default for SkillPrior {
    fn default() -> Self {
        SkillPrior { tech_mean: 0.7, tech_sd: 0.15, creative_mean: 0.5, creative_sd: 0.2 }
    }
}

impl SkillPrior {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> SkillVector {
        SkillVector {
            s_tech: truncated_normal(self.tech_mean, self.tech_sd, rng),
            s_creative: truncated_normal(self.creative_mean, self.creative_sd, rng),
        }
    }
}

fn truncated_normal<R: Rng>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    if sd <= 0.0 {
        return mean.max(0.0);
    }
    let n = Normal::new(mean, sd).expect("sd checked positive");
    for _ in 0..1000 {
        let x = n.sample(rng);
        if x >= 0.0 {
            return x;
        }
    }
    0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_humans: usize,
    pub n_ai: usize,
    pub n_consumers: usize,
    pub horizon: usize,
    /// `V_bar`: per-period fixed cost of staying active and the unit of
    /// initial liquidity.
    pub exit_threshold: f64,
    pub entry_rate: f64,
    /// Pollution level above which consumers only see half the offers.
    pub overload_threshold: f64,
    /// Human creators each consumer samples per period; all AI sellers are
    /// always in view.
    pub consideration_set: usize,
    pub lambda_tech: f64,
    pub lambda_creative: f64,
    pub human_adaptation: f64,
    pub q_learning: QLearning,
    /// Scale of the logit taste shock.
    pub logit_scale: f64,
    /// Multiplicative markup adjustment per period.
    pub markup_step: f64,
    pub initial_markup: f64,
    /// Per-period loss of technical skill while AI out-performs it.
    pub skill_decay: f64,
    /// Initial liquidity in units of `exit_threshold`.
    pub initial_liquidity_periods: f64,
    /// AI-free periods played before the shock at `t = 0`.
    pub warmup_periods: usize,
    pub ai_initial_quality: QualityVector,
    pub initial_skills: SkillPrior,
    pub model: ModelParams,
    pub seed: u64,
}

/// Market primitives for the agent layer. These live on their own scale
/// (money per consumer mass), separate from the static calibration.
pub fn abm_model_params() -> ModelParams {
    ModelParams {
        theta_bar: 30.02,
        eta: 3.0,
        c_h: 3.415,
        c_a: 0.03337,
        kappa: 0.02858,
        ai_markup: 0.0223,
        ..ModelParams::default()
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_humans: 50,
            n_ai: 3,
            n_consumers: 1000,
            horizon: 200,
            exit_threshold: 0.0012,
            entry_rate: 0.05,
            overload_threshold: 2.0,
            consideration_set: 1,
            lambda_tech: 0.10,
            lambda_creative: 0.010,
            human_adaptation: 0.008,
            q_learning: QLearning::default(),
            logit_scale: 0.2496,
            markup_step: 0.05,
            initial_markup: 0.6602,
            skill_decay: 0.0007,
            initial_liquidity_periods: 50.0,
            warmup_periods: 20,
            ai_initial_quality: QualityVector { q_creative: 0.6235, q_tech: 0.4092 },
            initial_skills: SkillPrior::default(),
            model: abm_model_params(),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        SimConfig { seed, ..self.clone() }
    }

    pub fn initial_liquidity(&self) -> f64 {
        self.initial_liquidity_periods * self.exit_threshold
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| e.within("model"))?;
        // n_consumers = 0 and horizon = 0 are legal degenerate runs
        for (name, v) in [("n_humans", self.n_humans), ("n_ai", self.n_ai)] {
            if v < 1 {
                return Err(Error::invalid(name, "must be >= 1"));
            }
        }
        let rates = [
            ("entry_rate", self.entry_rate),
            ("q_learning.learning_rate", self.q_learning.learning_rate),
            ("q_learning.epsilon", self.q_learning.epsilon),
            ("lambda_tech", self.lambda_tech),
            ("lambda_creative", self.lambda_creative),
        ];
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.q_learning.discount) {
            return Err(Error::invalid("q_learning.discount", "must lie in [0, 1)"));
        }
        let non_negative = [
            ("exit_threshold", self.exit_threshold),
            ("overload_threshold", self.overload_threshold),
            ("human_adaptation", self.human_adaptation),
            ("markup_step", self.markup_step),
            ("initial_markup", self.initial_markup),
            ("skill_decay", self.skill_decay),
            ("initial_liquidity_periods", self.initial_liquidity_periods),
            ("q_learning.outside_option", self.q_learning.outside_option),
            ("initial_skills.tech_sd", self.initial_skills.tech_sd),
            ("initial_skills.creative_sd", self.initial_skills.creative_sd),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        if !(self.logit_scale.is_finite() && self.logit_scale > 0.0) {
            return Err(Error::invalid("logit_scale", "must be > 0"));
        }
        if !(self.q_learning.reward_clip.is_finite() && self.q_learning.reward_clip > 0.0) {
            return Err(Error::invalid("q_learning.reward_clip", "must be > 0"));
        }
        self.ai_initial_quality.validate()?;
        let cap = self.model.ai_quality;
        if self.ai_initial_quality.q_tech <= 0.0
            || self.ai_initial_quality.q_creative <= 0.0
            || self.ai_initial_quality.q_tech > cap.q_tech
            || self.ai_initial_quality.q_creative > cap.q_creative
        {
            return Err(Error::invalid("ai_initial_quality", "must be positive and within the AI caps"));
        }
        Ok(())
    }
}

/// Independent random streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Consumers = 1,
    Creators = 2,
    Entry = 3,
    Calibration = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// `Q(a) <- (1 - alpha) Q(a) + alpha (r + gamma max Q)` on the acted entry.
pub fn q_update(q: &QTable, action: Action, reward: f64, ql: &QLearning) -> QTable {
    let mut out = *q;
    let i = action.index();
    let a = ql.learning_rate;
    let m = q.max();
    let t = ql.discount * m;
    let t_err = ql.discount.mul_add(m, -t);
    // compensated so that near-cancelling updates keep full relative accuracy
    out.values[i] = dot2(&[(q.values[i], 1.0), (-a, q.values[i]), (a, reward), (a, t), (a, t_err)]);
    out
}

/// Epsilon-greedy; ties go to the earliest action in [`Action::ALL`].
pub fn select_action<R: Rng>(q: &QTable, epsilon: f64, rng: &mut R) -> Action {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Action::ALL[rng.random_range(0..4)];
    }
    let mut best = 0;
    for i in 1..4 {
        if q.values[i] > q.values[best] {
            best = i;
        }
    }
    Action::ALL[best]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Offer {
    pub quality: f64,
    pub price: f64,
    pub seller: usize,
}

/// Logit draw over utilities with an outside option worth zero. Returns
/// the pick (None for outside), the max utility used for stabilization, and
/// the stabilized partition sum.
fn logit_pick(utils: &[f64], nu: f64, u: f64) -> (Option<usize>, f64, f64) {
    let m = utils.iter().copied().fold(0.0f64, f64::max);
    let outside = (-m / nu).exp();
    let total: f64 = outside + utils.iter().map(|x| ((x - m) / nu).exp()).sum::<f64>();
    let mut target = u * total - outside;
    if target < 0.0 {
        return (None, m, total);
    }
    for (j, x) in utils.iter().enumerate() {
        target -= ((x - m) / nu).exp();
        if target < 0.0 {
            return (Some(j), m, total);
        }
    }
    // rounding at the very top of the range
    (utils.len().checked_sub(1), m, total)
}

/// A consumer of type `theta` picks the offer maximizing utility plus a
/// Gumbel shock of scale `nu`. Returns an index into `offers`, or `None`
/// for the outside option.
pub fn consumer_choice<R: Rng>(theta: f64, offers: &[Offer], pollution: f64, nu: f64, rng: &mut R) -> Option<usize> {
    let utils: Vec<f64> = offers.iter().map(|o| theta * o.quality - o.price - pollution).collect();
    logit_pick(&utils, nu, rng.random::<f64>()).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Active,
    Exited,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CreatorAgent {
    pub id: usize,
    pub skill: SkillVector,
    pub initial_skill: SkillVector,
    pub liquidity: f64,
    pub q_table: QTable,
    pub status: Status,
    pub technology: Technology,
    pub entry_period: usize,
    pub exit_period: Option<usize>,
    pub price: f64,
    pub markup: f64,
    markup_dir: f64,
    last_profit: Option<f64>,
    prev_profit: Option<f64>,
    /// Last posted `(quality, price)`, if any.
    last_offer: Option<(f64, f64)>,
}

impl CreatorAgent {
    pub fn new(id: usize, skill: SkillVector, entry_period: usize, cfg: &SimConfig) -> Self {
        CreatorAgent {
            id,
            skill,
            initial_skill: skill,
            liquidity: cfg.initial_liquidity(),
            q_table: QTable::optimistic(cfg.q_learning.outside_option),
            status: Status::Active,
            technology: Technology::Human,
            entry_period,
            exit_period: None,
            price: 0.0,
            markup: cfg.initial_markup,
            markup_dir: 1.0,
            last_profit: None,
            prev_profit: None,
            last_offer: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }

    /// Own quality per dimension, topped up by AI when AI-assisted.
    pub fn quality_vector(&self, ai: &QualityVector, alpha: f64) -> QualityVector {
        let own = QualityVector { q_creative: alpha * self.skill.s_creative, q_tech: alpha * self.skill.s_tech };
        match self.technology {
            Technology::Human => own,
            Technology::Ai => {
                QualityVector { q_creative: own.q_creative.max(ai.q_creative), q_tech: own.q_tech.max(ai.q_tech) }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AiAgent {
    pub id: usize,
    pub quality: QualityVector,
    pub cap: QualityVector,
    pub price: f64,
}

/// Logistic growth toward the caps, one step per dimension.
pub fn ai_capability_step(ai: &AiAgent, cfg: &SimConfig) -> AiAgent {
    let grow = |q: f64, cap: f64, lambda: f64| {
        if cap <= 0.0 {
            return q;
        }
        (q + lambda * q * (1.0 - q / cap)).min(cap)
    };
    AiAgent {
        quality: QualityVector {
            q_tech: grow(ai.quality.q_tech, ai.cap.q_tech, cfg.lambda_tech),
            q_creative: grow(ai.quality.q_creative, ai.cap.q_creative, cfg.lambda_creative),
        },
        ..ai.clone()
    }
}

/// Liquidity strictly below zero, no participation action worth more than
/// the outside option, or Exit chosen.
pub fn exit_check(agent: &CreatorAgent, action: Action, cfg: &SimConfig) -> bool {
    agent.liquidity < 0.0 || agent.q_table.max_participation() < cfg.q_learning.outside_option || action == Action::Exit
}

/// Stabilized logit sums seen by each consumer last period, used by
/// creators to price out a change in their own quality.
#[derive(Debug, Clone, Default)]
struct MarketMemory {
    pollution: f64,
    /// Per consumer: `(max utility, partition sum)`.
    sums: Vec<(f64, f64)>,
}

impl MarketMemory {
    /// Expected logit demand (in consumers) for an offer at `(q, p)` added
    /// to last period's choice sets. Only relative changes are used, so the
    /// chance of being sampled at all drops out.
    fn expected_demand(&self, thetas: &[f64], nu: f64, q: f64, p: f64) -> f64 {
        let mut total = 0.0;
        for (theta, &(m, s)) in thetas.iter().zip(&self.sums) {
            let e_new = ((theta * q - p - self.pollution - m) / nu).exp();
            let denom = s + e_new;
            if denom > 0.0 {
                total += e_new / denom;
            }
        }
        total
    }
}

/// Everything a creator needs to evaluate its own profit locally.
pub struct MarketView<'a> {
    pub cfg: &'a SimConfig,
    pub thetas: &'a [f64],
    pub ai_quality: QualityVector,
    pub ai_price: f64,
    memory: &'a MarketMemory,
}

fn unit_cost(agent: &CreatorAgent, q: f64, ai_price: f64, m: &ModelParams) -> f64 {
    match agent.technology {
        Technology::Human => m.c_h * econ::human_cost(q, m),
        // AI-assisted output is bought from the AI sellers
        Technology::Ai => ai_price,
    }
}

fn estimated_profit(agent: &CreatorAgent, skill: SkillVector, view: &MarketView) -> f64 {
    let m = &view.cfg.model;
    let probe = CreatorAgent { skill, ..agent.clone() };
    let q = probe.quality_vector(&view.ai_quality, m.alpha).effective(m.creative_weight, m.elasticity);
    let c = unit_cost(&probe, q, view.ai_price, m);
    let p = c * (1.0 + agent.markup);
    let n = view.thetas.len().max(1) as f64;
    let d = view.memory.expected_demand(view.thetas, view.cfg.logit_scale, q, p);
    d / n * (p * (1.0 - m.commission) - c)
}

/// Skill update for the chosen action. Re-skilling moves `eta_adapt` along
/// the profit gradient projected onto skill transfers (what one dimension
/// gains the other gives up); staying lets technical skill erode while AI
/// does it better.
pub fn skill_evolution(agent: &CreatorAgent, action: Action, view: &MarketView) -> SkillVector {
    let cfg = view.cfg;
    let s = agent.skill;
    match action {
        Action::Reskill => {
            let eta = cfg.human_adaptation;
            if eta == 0.0 {
                return s;
            }
            let h = 0.01;
            let at = |dt: f64, dc: f64| {
                estimated_profit(agent, SkillVector { s_tech: s.s_tech + dt, s_creative: s.s_creative + dc }, view)
            };
            let g_t = (at(h, 0.0) - at(-h, 0.0)) / (2.0 * h);
            let g_c = (at(0.0, h) - at(0.0, -h)) / (2.0 * h);
            let diff = g_c - g_t;
            if diff == 0.0 || !diff.is_finite() {
                return s;
            }
            let step = eta / std::f64::consts::SQRT_2 * diff.signum();
            SkillVector { s_tech: s.s_tech - step, s_creative: s.s_creative + step }.clamped()
        }
        Action::Stay | Action::AdoptAi => {
            if view.ai_quality.q_tech > cfg.model.alpha * s.s_tech {
                SkillVector { s_tech: (s.s_tech - cfg.skill_decay).max(0.0), ..s }
            } else {
                s
            }
        }
        Action::Exit => s,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PeriodRecord {
    pub t: usize,
    pub active_humans: usize,
    pub ai_assisted: usize,
    pub human_share: f64,
    pub ai_share: f64,
    pub outside_share: f64,
    pub pollution: f64,
    pub overloaded: bool,
    pub exits: usize,
    pub exit_rate: f64,
    pub entrants: usize,
    pub mean_s_tech: f64,
    pub mean_s_creative: f64,
    pub mean_human_price: f64,
    pub ai_price: f64,
    pub ai_quality: f64,
    pub consumer_spending: f64,
    pub seller_revenue: f64,
    pub cs: f64,
    pub ps: f64,
    pub welfare: f64,
    /// Concentration of value added across all sellers, with assisted
    /// creators' licence payments credited to the AI sellers; 0 when nothing
    /// sold.
    pub hhi: f64,
    pub clipped_rewards: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSnapshot {
    pub id: usize,
    pub entry_period: usize,
    pub exit_period: Option<usize>,
    pub initial_s_tech: f64,
    pub initial_s_creative: f64,
    pub final_s_tech: f64,
    pub final_s_creative: f64,
    pub technology: Technology,
    pub liquidity: f64,
}

impl AgentSnapshot {
    fn of(a: &CreatorAgent) -> Self {
        AgentSnapshot {
            id: a.id,
            entry_period: a.entry_period,
            exit_period: a.exit_period,
            initial_s_tech: a.initial_skill.s_tech,
            initial_s_creative: a.initial_skill.s_creative,
            final_s_tech: a.skill.s_tech,
            final_s_creative: a.skill.s_creative,
            technology: a.technology,
            liquidity: a.liquidity,
        }
    }

    pub fn survived(&self) -> bool {
        self.exit_period.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub seed: u64,
    pub n_humans: usize,
    pub horizon: usize,
    /// Value-added HHI in the last warm-up period, before any AI seller exists.
    pub pre_shock_hhi: Option<f64>,
    pub records: Vec<PeriodRecord>,
    /// Skill snapshot of the initial cohort before the first period.
    pub initial_agents: Vec<AgentSnapshot>,
    /// Every creator that ever entered, as of the end of the run.
    pub agents: Vec<AgentSnapshot>,
    #[serde(skip)]
    pub thetas: Vec<f64>,
    /// Per consumer, purchases from human creators in the final window.
    #[serde(skip)]
    pub final_human_purchases: Vec<u32>,
}

impl TimeSeries {
    pub fn active_counts(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.active_humans).collect()
    }
}

pub struct SimState {
    pub t: usize,
    pub creators: Vec<CreatorAgent>,
    pub ai: Vec<AiAgent>,
    pub thetas: Vec<f64>,
    pub d_a: f64,
    memory: MarketMemory,
    final_human_purchases: Vec<u32>,
    warming_up: bool,
    consumers_rng: ChaCha8Rng,
    creators_rng: ChaCha8Rng,
    entry_rng: ChaCha8Rng,
}

impl SimState {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let mut consumers_rng = stream_rng(cfg.seed, Stream::Consumers);
        let mut creators_rng = stream_rng(cfg.seed, Stream::Creators);
        let tb = cfg.model.theta_bar;
        let thetas: Vec<f64> = (0..cfg.n_consumers).map(|_| consumers_rng.random::<f64>() * tb).collect();
        let creators = (0..cfg.n_humans)
            .map(|i| CreatorAgent::new(i, cfg.initial_skills.sample(&mut creators_rng), 0, cfg))
            .collect();
        let ai = (0..cfg.n_ai)
            .map(|id| AiAgent { id, quality: cfg.ai_initial_quality, cap: cfg.model.ai_quality, price: 0.0 })
            .collect();
        Ok(SimState {
            t: 0,
            creators,
            ai,
            memory: MarketMemory { pollution: 0.0, sums: Vec::new() },
            final_human_purchases: vec![0; thetas.len()],
            thetas,
            d_a: 0.0,
            consumers_rng,
            creators_rng,
            entry_rng: stream_rng(cfg.seed, Stream::Entry),
            warming_up: false,
        })
    }

    pub fn active_count(&self) -> usize {
        self.creators.iter().filter(|c| c.is_active()).count()
    }
}

/// Number of entrants this period, `Binomial(n_humans, entry_rate)`.
pub fn entry_draw<R: Rng>(cfg: &SimConfig, rng: &mut R) -> usize {
    if cfg.entry_rate <= 0.0 {
        return 0;
    }
    Binomial::new(cfg.n_humans as u64, cfg.entry_rate).map_or(0, |b| b.sample(rng) as usize)
}

/// Appends fresh creators and returns how many entered.
pub fn entry_step(state: &mut SimState, cfg: &SimConfig) -> usize {
    let k = entry_draw(cfg, &mut state.entry_rng);
    for _ in 0..k {
        let id = state.creators.len();
        let skill = cfg.initial_skills.sample(&mut state.entry_rng);
        state.creators.push(CreatorAgent::new(id, skill, state.t + 1, cfg));
    }
    k
}

/// AI unit cost: `c_A q` plus the fixed cost `kappa` amortized over the
/// horizon.
fn ai_unit_cost(a: &AiAgent, cfg: &SimConfig) -> f64 {
    let m = &cfg.model;
    m.c_a * a.quality.effective(m.creative_weight, m.elasticity) + m.kappa / cfg.horizon.max(1) as f64
}

/// Partial Fisher-Yates: moves a uniform `k`-subset of `pool` to its front
/// and appends it to `out`.
fn sample_into<R: Rng>(pool: &mut [usize], k: usize, rng: &mut R, out: &mut Vec<usize>) {
    let n = pool.len();
    if k >= n {
        out.extend_from_slice(pool);
        return;
    }
    for j in 0..k {
        let r = rng.random_range(j..n);
        pool.swap(j, r);
    }
    out.extend_from_slice(&pool[..k]);
}

fn frontier(ai: &[AiAgent]) -> QualityVector {
    ai.iter().fold(QualityVector { q_creative: 0.0, q_tech: 0.0 }, |acc, a| QualityVector {
        q_creative: acc.q_creative.max(a.quality.q_creative),
        q_tech: acc.q_tech.max(a.quality.q_tech),
    })
}

/// One market period.
pub fn period_step(state: &mut SimState, cfg: &SimConfig) -> PeriodRecord {
    let m = &cfg.model;
    let ql = &cfg.q_learning;
    let (w, rho, alpha) = (m.creative_weight, m.elasticity, m.alpha);
    let n_cons = state.thetas.len();
    let mass = 1.0 / n_cons.max(1) as f64;

    // (1) AI capability and posted AI prices
    for a in state.ai.iter_mut() {
        *a = ai_capability_step(a, cfg);
        a.price = ai_unit_cost(a, cfg) + m.ai_markup;
    }
    let ai_q = frontier(&state.ai);
    // no AI sellers before the shock; the price is then only a placeholder
    let ai_price = state.ai.iter().map(|a| a.price).fold(f64::INFINITY, f64::min);
    let ai_live = !state.ai.is_empty();

    // (2) actions, skills and technology
    let active_at_start = state.active_count();
    let mut actions = vec![None; state.creators.len()];
    let mut charges = vec![0.0; state.creators.len()];
    {
        let view = MarketView { cfg, thetas: &state.thetas, ai_quality: ai_q, ai_price, memory: &state.memory };
        let have_memory = state.memory.sums.len() == n_cons;
        for (i, c) in state.creators.iter_mut().enumerate() {
            if !c.is_active() {
                continue;
            }
            let mut a = select_action(&c.q_table, ql.epsilon, &mut state.creators_rng);
            if a == Action::Exit && state.warming_up {
                a = Action::Stay;
            }
            // an unaffordable adoption leaves the agent as it was; the
            // attempt is still what gets credited with this period's reward
            if a == Action::AdoptAi && ai_live && c.technology == Technology::Human && c.liquidity >= m.kappa {
                c.technology = Technology::Ai;
                charges[i] += m.kappa;
            }
            if a == Action::Reskill {
                charges[i] += 0.5 * cfg.human_adaptation;
            }
            if a != Action::Exit && (a != Action::Reskill || have_memory) {
                c.skill = skill_evolution(c, a, &view);
            }
            actions[i] = Some(a);
        }
    }

    // (3) creator prices: hill-climb the markup on realized profit
    let mut offers: Vec<Offer> = Vec::with_capacity(state.creators.len() + state.ai.len());
    let n_creators = state.creators.len();
    for (i, c) in state.creators.iter_mut().enumerate() {
        if !matches!(actions[i], Some(a) if a != Action::Exit) {
            continue;
        }
        if let (Some(last), Some(prev)) = (c.last_profit, c.prev_profit) {
            if last < prev {
                c.markup_dir = -c.markup_dir;
            }
            c.markup *= (1.0 + cfg.markup_step).powf(c.markup_dir);
            c.markup = c.markup.clamp(0.01, 10.0);
        }
        let q = c.quality_vector(&ai_q, alpha).effective(w, rho);
        c.price = unit_cost(c, q, ai_price, m) * (1.0 + c.markup);
        c.last_offer = Some((q, c.price));
        offers.push(Offer { quality: q, price: c.price, seller: i });
    }
    for (k, a) in state.ai.iter().enumerate() {
        offers.push(Offer { quality: a.quality.effective(w, rho), price: a.price, seller: n_creators + k });
    }

    // (4) pollution from last period's AI volume, common to every consumer
    let pollution = econ::penalty(m.beta, m.eta, state.d_a);
    let overloaded = pollution > cfg.overload_threshold;

    // (5) consumer choices
    let nu = cfg.logit_scale;
    let mut sales = vec![0u32; n_creators + state.ai.len()];
    let mut cs = 0.0;
    let mut spending = 0.0;
    let mut sums = Vec::with_capacity(n_cons);
    let mut utils = Vec::with_capacity(offers.len());
    let n_human_offers = offers.len() - state.ai.len();
    let mut human_perm: Vec<usize> = (0..n_human_offers).collect();
    let mut ai_perm: Vec<usize> = (n_human_offers..offers.len()).collect();
    let (k_h, k_a) = if overloaded {
        (cfg.consideration_set.div_ceil(2), state.ai.len().div_ceil(2))
    } else {
        (cfg.consideration_set, state.ai.len())
    };
    let k_h = k_h.min(n_human_offers);
    let mut seen = Vec::with_capacity(k_h + k_a);
    let in_window = state.t + FINAL_WINDOW >= cfg.horizon;
    for (ci, &theta) in state.thetas.iter().enumerate() {
        seen.clear();
        sample_into(&mut human_perm, k_h, &mut state.consumers_rng, &mut seen);
        sample_into(&mut ai_perm, k_a, &mut state.consumers_rng, &mut seen);
        utils.clear();
        utils.extend(seen.iter().map(|&j| theta * offers[j].quality - offers[j].price - pollution));
        let u = state.consumers_rng.random::<f64>();
        let (pick, mx, total) = logit_pick(&utils, nu, u);
        sums.push((mx, total));
        if let Some(j) = pick {
            let o = offers[seen[j]];
            sales[o.seller] += 1;
            cs += (utils[j]) * mass;
            spending += o.price * mass;
            if in_window && o.seller < n_creators {
                state.final_human_purchases[ci] += 1;
            }
        }
    }
    state.memory = MarketMemory { pollution, sums };

    // (6) profits and liquidity, (7) learning, (8) exits
    // concentration is measured on value added: what an assisted creator
    // pays for AI output is counted as the AI sellers' revenue
    let mut value_added = Vec::new();
    let mut ps = 0.0;
    let mut seller_revenue = 0.0;
    let mut human_units = 0u32;
    let mut ai_units = 0u32;
    let mut adopter_units = 0u32;
    let mut exits = 0;
    let mut clipped = 0;
    for (i, c) in state.creators.iter_mut().enumerate() {
        let Some(a) = actions[i] else { continue };
        if a == Action::Exit {
            c.status = Status::Exited;
            c.exit_period = Some(state.t);
            exits += 1;
            continue;
        }
        let units = sales[i];
        human_units += units;
        let (q, price) = c.last_offer.expect("posted this period");
        let uc = unit_cost(c, q, ai_price, m);
        if c.technology == Technology::Ai {
            adopter_units += units;
        }
        let revenue = units as f64 * price * mass;
        seller_revenue += revenue;
        let licence = if c.technology == Technology::Ai { units as f64 * ai_price * mass } else { 0.0 };
        value_added.push(revenue - licence);
        let profit = revenue * (1.0 - m.commission) - units as f64 * uc * mass - cfg.exit_threshold - charges[i];
        c.liquidity += profit;
        ps += profit + revenue * m.commission;
        c.prev_profit = c.last_profit;
        c.last_profit = Some(profit);
        let r = if profit.abs() > ql.reward_clip {
            clipped += 1;
            profit.signum() * ql.reward_clip
        } else {
            profit
        };
        c.q_table = q_update(&c.q_table, a, r, ql);
        if !state.warming_up && exit_check(c, a, cfg) {
            c.status = Status::Exited;
            c.exit_period = Some(state.t);
            exits += 1;
        }
    }
    let licensing = adopter_units as f64 * ai_price * mass;
    let n_cheapest = state.ai.iter().filter(|a| a.price == ai_price).count().max(1) as f64;
    for (k, a) in state.ai.iter().enumerate() {
        let units = sales[n_creators + k];
        ai_units += units;
        let cost = ai_unit_cost(a, cfg);
        let revenue = units as f64 * a.price * mass;
        seller_revenue += revenue;
        let licence = if a.price == ai_price { licensing / n_cheapest } else { 0.0 };
        value_added.push(revenue + licence);
        ps += revenue - units as f64 * cost * mass;
    }
    // AI sellers' margin on the output they license to assisted creators
    if let Some(a0) = state.ai.first() {
        ps += adopter_units as f64 * (ai_price - ai_unit_cost(a0, cfg)) * mass;
    }

    let total_va: f64 = value_added.iter().sum();
    let hhi = if total_va > 0.0 { value_added.iter().map(|r| (r / total_va).powi(2)).sum() } else { 0.0 };
    let d_h = human_units as f64 * mass;
    let d_a = ai_units as f64 * mass;
    state.d_a = d_a;

    // (9) entry
    let entrants = entry_step(state, cfg);

    // (10) record; the population excludes this period's entrants
    let active: Vec<&CreatorAgent> =
        state.creators.iter().filter(|c| c.is_active() && c.entry_period <= state.t).collect();
    let n_active = active.len();
    let mean = |f: &dyn Fn(&CreatorAgent) -> f64| {
        if n_active == 0 {
            0.0
        } else {
            active.iter().map(|c| f(c)).sum::<f64>() / n_active as f64
        }
    };
    let rec = PeriodRecord {
        t: state.t,
        active_humans: n_active,
        ai_assisted: active.iter().filter(|c| c.technology == Technology::Ai).count(),
        human_share: d_h,
        ai_share: d_a,
        outside_share: if n_cons == 0 { 1.0 } else { 1.0 - d_h - d_a },
        pollution,
        overloaded,
        exits,
        exit_rate: if active_at_start > 0 { exits as f64 / active_at_start as f64 } else { 0.0 },
        entrants,
        mean_s_tech: mean(&|c| c.skill.s_tech),
        mean_s_creative: mean(&|c| c.skill.s_creative),
        mean_human_price: mean(&|c| c.price),
        ai_price,
        ai_quality: ai_q.effective(w, rho),
        consumer_spending: spending,
        seller_revenue,
        cs,
        ps,
        welfare: cs + ps,
        hhi,
        clipped_rewards: clipped,
    };
    state.t += 1;
    rec
}

/// Pre-shock market without AI sellers: creators learn, price and bank
/// profits, but nobody enters or leaves. Returns the last period's HHI and
/// leaves the clock at 0 for the shock.
pub fn warm_up(state: &mut SimState, cfg: &SimConfig) -> Option<f64> {
    if cfg.warmup_periods == 0 {
        return None;
    }
    let closed = SimConfig { entry_rate: 0.0, ..cfg.clone() };
    let ai = std::mem::take(&mut state.ai);
    state.warming_up = true;
    let mut hhi = None;
    for _ in 0..cfg.warmup_periods {
        hhi = Some(period_step(state, &closed).hhi);
    }
    state.warming_up = false;
    state.ai = ai;
    state.t = 0;
    state.d_a = 0.0;
    state.final_human_purchases.iter_mut().for_each(|k| *k = 0);
    hhi
}

pub fn run_simulation(cfg: &SimConfig) -> Result<TimeSeries> {
    let mut state = SimState::new(cfg)?;
    let pre_shock_hhi = warm_up(&mut state, cfg);
    let initial_agents = state.creators.iter().map(AgentSnapshot::of).collect();
    let records = (0..cfg.horizon).map(|_| period_step(&mut state, cfg)).collect();
    Ok(TimeSeries {
        seed: cfg.seed,
        n_humans: cfg.n_humans,
        horizon: cfg.horizon,
        pre_shock_hhi,
        records,
        initial_agents,
        agents: state.creators.iter().map(AgentSnapshot::of).collect(),
        thetas: state.thetas,
        final_human_purchases: state.final_human_purchases,
    })
}

/// Independent runs for `seeds`, returned in seed order.
pub fn run_replications(cfg: &SimConfig, seeds: &[u64]) -> Result<Vec<TimeSeries>> {
    par::map(seeds, |&s| run_simulation(&cfg.with_seed(s))).into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phases {
    pub phase1_end: usize,
    pub phase2_end: usize,
    pub trough_period: usize,
    pub trough_population: usize,
    /// No interior trough: the population never falls and recovers.
    pub degenerate: bool,
}

/// Trough is the first global minimum of the active population. Phase I
/// ends when the decline has covered 80% of the drop to the trough; Phase
/// II ends when the population first climbs back to 120% of the trough.
pub fn phase_detector(counts: &[usize]) -> Result<Phases> {
    if counts.is_empty() {
        return Err(Error::invalid("series", "empty time series"));
    }
    let (trough_period, &trough) =
        counts.iter().enumerate().fold((0, &counts[0]), |best, (i, c)| if *c < *best.1 { (i, c) } else { best });
    let start = counts[0];
    let last = *counts.last().expect("non-empty");
    let degenerate = trough >= start || trough_period + 1 == counts.len() || last <= trough;
    let drop_level = start as f64 - 0.8 * (start - trough.min(start)) as f64;
    let phase1_end = counts.iter().position(|&c| c as f64 <= drop_level).unwrap_or(trough_period);
    let recover_level = (1.2 * trough as f64).max(trough as f64 + 1.0);
    let phase2_end = counts[trough_period..]
        .iter()
        .position(|&c| c as f64 >= recover_level)
        .map_or(counts.len() - 1, |k| trough_period + k);
    Ok(Phases { phase1_end, phase2_end, trough_period, trough_population: trough, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivorStats {
    pub survival_rate: f64,
    pub survivors: usize,
    pub exiters: usize,
    pub survivor_d_tech: f64,
    pub survivor_d_creative: f64,
    pub exiter_d_tech: f64,
    pub exiter_d_creative: f64,
    /// Creative-to-tech skill ratio of survivors over that of exiters;
    /// `None` when either group is empty.
    pub ratio_quotient: Option<f64>,
    /// Rank correlation between taste and human purchases in the final
    /// window; `None` when nobody bought from a human.
    pub spearman_theta_human: Option<f64>,
}

/// Statistics over the initial cohort.
pub fn survivor_stats(series: &TimeSeries) -> SurvivorStats {
    let cohort: Vec<&AgentSnapshot> = series.agents.iter().filter(|a| a.entry_period == 0).collect();
    let (surv, exit): (Vec<&AgentSnapshot>, Vec<&AgentSnapshot>) = cohort.iter().partition(|a| a.survived());
    let mean = |v: &[&AgentSnapshot], f: &dyn Fn(&AgentSnapshot) -> f64| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().map(|a| f(a)).sum::<f64>() / v.len() as f64
        }
    };
    let ratio = |v: &[&AgentSnapshot]| {
        let t = mean(v, &|a| a.final_s_tech);
        (!v.is_empty() && t > 0.0).then(|| mean(v, &|a| a.final_s_creative) / t)
    };
    let ratio_quotient = match (ratio(&surv), ratio(&exit)) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    let any_human = series.final_human_purchases.iter().any(|&k| k > 0);
    let spearman_theta_human = if any_human {
        let h: Vec<f64> = series.final_human_purchases.iter().map(|&k| k as f64).collect();
        spearman(&series.thetas, &h)
    } else {
        None
    };
    SurvivorStats {
        survival_rate: surv.len() as f64 / series.n_humans as f64,
        survivors: surv.len(),
        exiters: exit.len(),
        survivor_d_tech: mean(&surv, &|a| a.final_s_tech - a.initial_s_tech),
        survivor_d_creative: mean(&surv, &|a| a.final_s_creative - a.initial_s_creative),
        exiter_d_tech: mean(&exit, &|a| a.final_s_tech - a.initial_s_tech),
        exiter_d_creative: mean(&exit, &|a| a.final_s_creative - a.initial_s_creative),
        ratio_quotient,
        spearman_theta_human,
    }
}

/// Average ranks, ties sharing the mean of their positions.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman correlation (Pearson on average ranks). `None` if either side
/// is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Trailing moving average; the first `window - 1` entries average what is
/// available.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += x[i];
        if i >= window {
            acc -= x[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}

/// Pre-shock sanity check: a market with no AI sellers, no entry and exits
/// switched on, run for `periods` from the initial state. Returns the share
/// of incumbents still active, which should be close to 1.
pub fn burn_in_retention(cfg: &SimConfig, periods: usize) -> Result<f64> {
    let closed = SimConfig { entry_rate: 0.0, ..cfg.clone() };
    let mut state = SimState::new(&closed)?;
    state.ai.clear();
    for _ in 0..periods {
        period_step(&mut state, &closed);
    }
    Ok(state.active_count() as f64 / cfg.n_humans as f64)
}

/// Window of the HHI moving average checked through Phase II.
pub const HHI_MA_WINDOW: usize = 20;

/// Per-run statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub trough_period: usize,
    pub trough_population: usize,
    pub final_active: usize,
    pub survival_rate: f64,
    pub survivor_d_tech: f64,
    pub survivor_d_creative: f64,
    pub ratio_quotient: Option<f64>,
    pub spearman_theta_human: Option<f64>,
    pub pre_shock_hhi: Option<f64>,
    pub initial_hhi: f64,
    pub final_hhi: f64,
    pub final_ai_share: f64,
}

impl RunSummary {
    pub fn of(series: &TimeSeries) -> Result<Self> {
        let ph = phase_detector(&series.active_counts())?;
        let s = survivor_stats(series);
        let first = series.records.first();
        let last = series.records.last();
        Ok(RunSummary {
            seed: series.seed,
            trough_period: ph.trough_period,
            trough_population: ph.trough_population,
            final_active: last.map_or(series.n_humans, |r| r.active_humans),
            survival_rate: s.survival_rate,
            survivor_d_tech: s.survivor_d_tech,
            survivor_d_creative: s.survivor_d_creative,
            ratio_quotient: s.ratio_quotient,
            spearman_theta_human: s.spearman_theta_human,
            pre_shock_hhi: series.pre_shock_hhi,
            initial_hhi: first.map_or(0.0, |r| r.hhi),
            final_hhi: last.map_or(0.0, |r| r.hhi),
            final_ai_share: last.map_or(0.0, |r| r.ai_share),
        })
    }
}

/// Cross-seed median of the main per-period series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianPoint {
    pub t: usize,
    pub active_humans: f64,
    pub human_share: f64,
    pub ai_share: f64,
    pub outside_share: f64,
    pub pollution: f64,
    pub exit_rate: f64,
    pub entrants: f64,
    pub mean_s_tech: f64,
    pub mean_s_creative: f64,
    pub welfare: f64,
    pub hhi: f64,
    pub hhi_ma: f64,
}

/// Medians across replications of the statistics used to judge a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub replications: usize,
    pub trough_period: f64,
    pub trough_population: f64,
    pub final_active: f64,
    pub survival_rate: f64,
    pub survivor_d_tech: f64,
    pub survivor_d_creative: f64,
    /// Over runs where both survivors and exiters exist.
    pub ratio_quotient: Option<f64>,
    pub spearman_theta_human: Option<f64>,
    pub pre_shock_hhi: Option<f64>,
    pub initial_hhi: f64,
    pub final_hhi: f64,
    pub final_ai_share: f64,
    /// Phases of the median active-population series.
    pub median_phases: Phases,
    /// Periods in Phase II where the moving average of the median HHI
    /// series falls.
    pub hhi_ma_decreases: usize,
    pub runs: Vec<RunSummary>,
    pub series: Vec<MedianPoint>,
}

pub fn summarize(runs: &[TimeSeries]) -> Result<EnsembleSummary> {
    if runs.is_empty() {
        return Err(Error::invalid("replications", "need at least one run"));
    }
    let summaries: Vec<RunSummary> = runs.iter().map(RunSummary::of).collect::<Result<_>>()?;
    let med = |f: &dyn Fn(&RunSummary) -> f64| median(summaries.iter().map(f)).unwrap_or(f64::NAN);
    let horizon = runs.iter().map(|r| r.records.len()).min().unwrap_or(0);
    let at =
        |t: usize, f: &dyn Fn(&PeriodRecord) -> f64| median(runs.iter().map(|r| f(&r.records[t]))).unwrap_or(f64::NAN);
    let mut series: Vec<MedianPoint> = (0..horizon)
        .map(|t| MedianPoint {
            t,
            active_humans: at(t, &|r| r.active_humans as f64),
            human_share: at(t, &|r| r.human_share),
            ai_share: at(t, &|r| r.ai_share),
            outside_share: at(t, &|r| r.outside_share),
            pollution: at(t, &|r| r.pollution),
            exit_rate: at(t, &|r| r.exit_rate),
            entrants: at(t, &|r| r.entrants as f64),
            mean_s_tech: at(t, &|r| r.mean_s_tech),
            mean_s_creative: at(t, &|r| r.mean_s_creative),
            welfare: at(t, &|r| r.welfare),
            hhi: at(t, &|r| r.hhi),
            hhi_ma: 0.0,
        })
        .collect();
    let hhi: Vec<f64> = series.iter().map(|p| p.hhi).collect();
    let ma = moving_average(&hhi, HHI_MA_WINDOW);
    for (p, m) in series.iter_mut().zip(&ma) {
        p.hhi_ma = *m;
    }
    // a half-integer median population rounds down so the trough is kept
    let counts: Vec<usize> = series.iter().map(|p| p.active_humans.floor() as usize).collect();
    let median_phases = if counts.is_empty() {
        Phases { phase1_end: 0, phase2_end: 0, trough_period: 0, trough_population: runs[0].n_humans, degenerate: true }
    } else {
        phase_detector(&counts)?
    };
    let end = median_phases.phase2_end.min(ma.len().saturating_sub(1));
    let hhi_ma_decreases = (median_phases.phase1_end..end).filter(|&i| ma[i + 1] < ma[i]).count();
    Ok(EnsembleSummary {
        replications: runs.len(),
        trough_period: med(&|s| s.trough_period as f64),
        trough_population: med(&|s| s.trough_population as f64),
        final_active: med(&|s| s.final_active as f64),
        survival_rate: med(&|s| s.survival_rate),
        survivor_d_tech: med(&|s| s.survivor_d_tech),
        survivor_d_creative: med(&|s| s.survivor_d_creative),
        ratio_quotient: median(summaries.iter().filter_map(|s| s.ratio_quotient)),
        spearman_theta_human: median(summaries.iter().filter_map(|s| s.spearman_theta_human)),
        pre_shock_hhi: median(summaries.iter().filter_map(|s| s.pre_shock_hhi)),
        initial_hhi: med(&|s| s.initial_hhi),
        final_hhi: med(&|s| s.final_hhi),
        final_ai_share: med(&|s| s.final_ai_share),
        median_phases,
        hhi_ma_decreases,
        runs: summaries,
        series,
    })
}
