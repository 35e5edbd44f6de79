//! Two-good (human vs AI) market with endogenous pollution.
//!
//! Consumers have taste `theta ~ U[0, theta_bar]`; the AI sector prices at
//! unit cost plus a competitive markup and the representative human seller
//! best-responds in price. The AI volume feeds back through the penalty.

use serde::Serialize;

use crate::econ::{self, ModelParams, Segmentation, Technology};
use crate::error::{Error, Result};
use crate::numeric::bisect;

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 10_000;
pub const DAMPING: f64 = 0.5;
/// Number of AI firms sharing the AI segment when computing HHI.
pub const AI_FIRMS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketEquilibrium {
    pub p_h: f64,
    pub p_a: f64,
    pub q_h: f64,
    pub q_a: f64,
    pub d_h: f64,
    pub d_a: f64,
    pub theta_out: f64,
    pub theta_ah: f64,
    pub cs: f64,
    pub ps: f64,
    pub tax_revenue: f64,
    pub pollution_damage: f64,
    pub welfare: f64,
    pub hhi: f64,
    pub degenerate: bool,
    pub converged: bool,
    pub iterations: usize,
}

impl MarketEquilibrium {
    pub fn coverage(&self) -> f64 {
        self.d_a + self.d_h
    }

    /// Volume-weighted transaction price; a good with no volume does not
    /// contribute even when its price is undefined.
    pub fn average_price(&self) -> f64 {
        let cov = self.coverage();
        if cov > 0.0 {
            let term = |p: f64, d: f64| if d > 0.0 { p * d } else { 0.0 };
            (term(self.p_a, self.d_a) + term(self.p_h, self.d_h)) / cov
        } else {
            f64::NAN
        }
    }
}

/// Shares and thresholds at given prices and perceived volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demand {
    pub theta_out: f64,
    pub theta_ah: f64,
    pub d_a: f64,
    pub d_h: f64,
    pub degenerate: bool,
}

/// Market primitives derived from [`ModelParams`], plus the policy levers.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGoodMarket {
    pub theta_bar: f64,
    pub q_h: f64,
    pub q_a: f64,
    pub beta: f64,
    /// Sensitivity faced by buyers of the human good (verification lever).
    pub beta_h: f64,
    pub eta: f64,
    pub human_unit_cost: f64,
    /// Per-quality-unit tax added to `c_A`.
    pub tax: f64,
    pub ai_unit_cost_pre_tax: f64,
    pub ai_markup: f64,
}

impl TwoGoodMarket {
    pub fn new(p: &ModelParams) -> Self {
        let q_a = p.q_a();
        TwoGoodMarket {
            theta_bar: p.theta_bar,
            q_h: p.q_h(),
            q_a,
            beta: p.beta,
            beta_h: p.beta,
            eta: p.eta,
            human_unit_cost: p.c_h,
            tax: 0.0,
            ai_unit_cost_pre_tax: p.c_a * q_a + p.kappa,
            ai_markup: p.ai_markup,
        }
    }

    pub fn with_tax(mut self, tax: f64) -> Self {
        self.tax = tax;
        self
    }

    pub fn with_verified_beta(mut self, beta_h: f64) -> Self {
        self.beta_h = beta_h;
        self
    }

    pub fn ai_unit_cost(&self) -> f64 {
        self.ai_unit_cost_pre_tax + self.tax * self.q_a
    }

    /// Posted AI price: unit cost (tax included) plus the markup.
    pub fn ai_price(&self) -> f64 {
        self.ai_unit_cost() + self.ai_markup
    }

    fn phi_a(&self, d: f64) -> f64 {
        econ::penalty(self.beta, self.eta, d)
    }

    fn phi_h(&self, d: f64) -> f64 {
        econ::penalty(self.beta_h, self.eta, d)
    }

    pub fn demand(&self, p_a: f64, p_h: f64, d: f64) -> Demand {
        let tb = self.theta_bar;
        let (pa, ph) = (self.phi_a(d), self.phi_h(d));
        let to = ((p_a + pa) / self.q_a).clamp(0.0, tb);
        let tah = (p_h + ph - p_a - pa) / (self.q_h - self.q_a);
        if tah > to {
            let tah = tah.min(tb);
            Demand { theta_out: to, theta_ah: tah, d_a: (tah - to) / tb, d_h: (tb - tah) / tb, degenerate: false }
        } else {
            let t = ((p_h + ph) / self.q_h).clamp(0.0, tb);
            Demand { theta_out: t, theta_ah: t, d_a: 0.0, d_h: (tb - t) / tb, degenerate: true }
        }
    }

    fn human_profit(&self, p_a: f64, p_h: f64, d: f64) -> f64 {
        (p_h - self.human_unit_cost) * self.demand(p_a, p_h, d).d_h
    }

    /// Human price maximizing profit against the AI price. Demand is
    /// piecewise linear in `p_h`, so the optimum sits at a regime vertex, at
    /// the kink where the AI segment closes, or at cost.
    pub fn human_best_response(&self, p_a: f64, d: f64) -> f64 {
        let c = self.human_unit_cost;
        let (pa, ph) = (self.phi_a(d), self.phi_h(d));
        let dq = self.q_h - self.q_a;
        let kink = (p_a + pa) / self.q_a * dq + p_a + pa - ph;
        let sorting_vertex = (self.theta_bar * dq + p_a + pa - ph + c) / 2.0;
        let solo_vertex = (self.theta_bar * self.q_h - ph + c) / 2.0;
        let mut best = (c, 0.0);
        for cand in [kink, sorting_vertex, solo_vertex] {
            if cand > c {
                let v = self.human_profit(p_a, cand, d);
                if v > best.1 {
                    best = (cand, v);
                }
            }
        }
        best.0
    }

    /// AI share implied by best responses at a perceived volume `d`.
    pub fn implied_volume(&self, p_a: f64, d: f64) -> f64 {
        let p_h = self.human_best_response(p_a, d);
        self.demand(p_a, p_h, d).d_a
    }

    /// Damped fixed point in the AI volume at a fixed AI price.
    pub fn solve_at_price(&self, p_a: f64) -> MarketEquilibrium {
        let mut d = 0.0;
        let mut p_h = self.human_best_response(p_a, d);
        let mut converged = false;
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let target = self.implied_volume(p_a, d);
            let next = (1.0 - DAMPING) * d + DAMPING * target;
            let next_ph = self.human_best_response(p_a, next);
            let step = (next - d).abs().max((next_ph - p_h).abs());
            d = next;
            p_h = next_ph;
            if step < FIXED_POINT_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            // the best response can jump between regimes; the residual is
            // strictly decreasing in d, so bisection still locates the crossing
            if let Some(root) = bisect(|x| self.implied_volume(p_a, x) - x, 0.0, 1.0, 0.0) {
                d = root;
                p_h = self.human_best_response(p_a, d);
                converged = (self.implied_volume(p_a, d) - d).abs() < 1e-8;
            }
        }
        let mut eq = self.report(p_a, p_h, d);
        eq.converged = converged;
        eq.iterations = iterations;
        eq
    }

    /// Decentralized equilibrium at the posted AI price.
    pub fn solve(&self) -> MarketEquilibrium {
        self.solve_at_price(self.ai_price())
    }

    /// Welfare accounting at prices `(p_a, p_h)` and volume `d`.
    pub fn report(&self, p_a: f64, p_h: f64, d: f64) -> MarketEquilibrium {
        let dm = self.demand(p_a, p_h, d);
        let tb = self.theta_bar;
        let (pa, ph) = (self.phi_a(d), self.phi_h(d));
        // integral of theta q - p - phi over [lo, hi] / theta_bar
        let seg = |q: f64, price: f64, lo: f64, hi: f64| (q * (hi * hi - lo * lo) / 2.0 - price * (hi - lo)) / tb;
        let (cs, damage) = if dm.degenerate {
            (seg(self.q_h, p_h + ph, dm.theta_out, tb), ph * dm.d_h)
        } else {
            (
                seg(self.q_a, p_a + pa, dm.theta_out, dm.theta_ah) + seg(self.q_h, p_h + ph, dm.theta_ah, tb),
                pa * dm.d_a + ph * dm.d_h,
            )
        };
        let tax_revenue = self.tax * self.q_a * dm.d_a;
        let ps = (p_a - self.ai_unit_cost()) * dm.d_a + (p_h - self.human_unit_cost) * dm.d_h + tax_revenue;
        let rev_h = p_h * dm.d_h;
        let rev_a = p_a * dm.d_a;
        let total = rev_h + rev_a;
        let hhi_value = if total > 0.0 {
            let mut shares = vec![rev_h / total];
            shares.extend(std::iter::repeat_n(rev_a / total / AI_FIRMS as f64, AI_FIRMS));
            hhi(&shares).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        MarketEquilibrium {
            p_h,
            p_a,
            q_h: self.q_h,
            q_a: self.q_a,
            d_h: dm.d_h,
            d_a: dm.d_a,
            theta_out: dm.theta_out,
            theta_ah: dm.theta_ah,
            cs,
            ps,
            tax_revenue,
            pollution_damage: damage,
            welfare: cs + ps,
            hhi: hhi_value,
            degenerate: dm.degenerate,
            converged: true,
            iterations: 0,
        }
    }

    /// Single human good at zero AI volume. Demand is linear, so the
    /// monopoly price is `(theta_bar q_H + c) / 2` whenever that beats cost.
    pub fn monopoly(&self) -> Result<MarketEquilibrium> {
        let c = self.human_unit_cost;
        let tb = self.theta_bar;
        let top = tb * self.q_h;
        if !(top.is_finite() && c.is_finite()) {
            return Err(Error::Solver("monopoly inputs not finite".into()));
        }
        let p = if top > c { 0.5 * (top + c) } else { c };
        Ok(self.monopoly_report(p, (tb - p / self.q_h).max(0.0) / tb))
    }

    fn monopoly_report(&self, p: f64, share: f64) -> MarketEquilibrium {
        let tb = self.theta_bar;
        let t = tb - share * tb;
        let cs = (self.q_h * (tb * tb - t * t) / 2.0 - p * (tb - t)) / tb;
        let ps = (p - self.human_unit_cost) * share;
        MarketEquilibrium {
            p_h: p,
            p_a: f64::NAN,
            q_h: self.q_h,
            q_a: self.q_a,
            d_h: share,
            d_a: 0.0,
            theta_out: t,
            theta_ah: t,
            cs,
            ps,
            tax_revenue: 0.0,
            pollution_damage: 0.0,
            welfare: cs + ps,
            hhi: if share > 0.0 { 1.0 } else { f64::NAN },
            degenerate: true,
            converged: true,
            iterations: 0,
        }
    }
}

pub fn solve_monopoly_benchmark(p: &ModelParams) -> Result<MarketEquilibrium> {
    TwoGoodMarket::new(p).monopoly()
}

pub fn solve_duopoly_equilibrium(p: &ModelParams) -> Result<MarketEquilibrium> {
    let m = TwoGoodMarket::new(p);
    if m.q_h <= m.q_a {
        return Err(Error::NonSortable { q_h: m.q_h, q_a: m.q_a });
    }
    Ok(m.solve())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareDecomposition {
    pub cs: f64,
    pub ps: f64,
    pub pollution_damage: f64,
    pub welfare: f64,
}

pub fn welfare_decomposition(eq: &MarketEquilibrium) -> Result<WelfareDecomposition> {
    if !eq.converged {
        return Err(Error::Solver("welfare of an unconverged equilibrium".into()));
    }
    Ok(WelfareDecomposition { cs: eq.cs, ps: eq.ps, pollution_damage: eq.pollution_damage, welfare: eq.welfare })
}

/// Herfindahl-Hirschman index of normalized shares.
pub fn hhi(shares: &[f64]) -> Result<f64> {
    if shares.is_empty() || shares.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::Domain {
            what: "revenue share",
            value: shares.iter().copied().find(|s| !(*s >= 0.0)).unwrap_or(f64::NAN),
        });
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain { what: "share total", value: total });
    }
    Ok(shares.iter().map(|s| s * s).sum())
}

/// HHI from raw revenues, normalizing first.
pub fn hhi_of_revenues(revenues: &[f64]) -> Option<f64> {
    let total: f64 = revenues.iter().sum();
    (total > 0.0).then(|| revenues.iter().map(|r| (r / total).powi(2)).sum())
}

/// One row of the pre/post comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub metric: &'static str,
    pub pre: f64,
    pub post: f64,
    pub change: f64,
}

pub fn comparison_table(pre: &MarketEquilibrium, post: &MarketEquilibrium) -> Vec<ComparisonRow> {
    let row = |metric, a: f64, b: f64| ComparisonRow {
        metric,
        pre: a,
        post: b,
        change: if a != 0.0 { (b - a) / a.abs() } else { f64::NAN },
    };
    vec![
        row("price_human", pre.p_h, post.p_h),
        row("price_ai", f64::NAN, post.p_a),
        row("average_price", pre.average_price(), post.average_price()),
        row("share_human", pre.d_h, post.d_h),
        row("share_ai", pre.d_a, post.d_a),
        row("coverage", pre.coverage(), post.coverage()),
        row("consumer_surplus", pre.cs, post.cs),
        row("producer_surplus", pre.ps, post.ps),
        row("pollution_damage", pre.pollution_damage, post.pollution_damage),
        row("welfare", pre.welfare, post.welfare),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityHistogram {
    pub bin_left: Vec<f64>,
    pub bin_right: Vec<f64>,
    pub mass_pre: Vec<f64>,
    pub mass_post: Vec<f64>,
    /// Raw supplied qualities after the shock, one per producing skill.
    #[serde(skip)]
    pub supplied_post: Vec<f64>,
    pub segmentation: Segmentation,
}

impl QualityHistogram {
    /// Post-shock mass with quality in `(lo, hi]`.
    pub fn post_mass_in(&self, lo: f64, hi: f64) -> f64 {
        let n = self.supplied_post.len().max(1) as f64;
        self.supplied_post.iter().filter(|q| **q > lo && **q <= hi).count() as f64 / (n.max(1.0))
    }
}

pub const HISTOGRAM_BINS: usize = 100;

/// Pre/post supplied-quality histograms for skills on a midpoint grid of
/// `g(s) = U[skill_min, skill_max]`. Pre-shock everyone produces by hand;
/// post-shock each skill follows its segmentation region.
pub fn quality_distribution_histogram(p: &ModelParams, sample: usize) -> Result<QualityHistogram> {
    let seg = econ::segmentation_cutoffs(&p.schedule, p)?;
    let n = sample.max(1);
    let width_s = p.skill_max - p.skill_min;
    let skills: Vec<f64> = (0..n).map(|i| p.skill_min + width_s * (i as f64 + 0.5) / n as f64).collect();
    let q_hi = p.alpha * p.skill_max;
    let bw = q_hi / HISTOGRAM_BINS as f64;
    let bin_of = |q: f64| (((q / bw) + 1e-9).floor() as usize).min(HISTOGRAM_BINS - 1);
    let mut pre = vec![0.0; HISTOGRAM_BINS];
    let mut post = vec![0.0; HISTOGRAM_BINS];
    let mut supplied_post = Vec::with_capacity(n);
    let w = 1.0 / n as f64;
    for &s in &skills {
        let pi_h = econ::profit_human(s, &p.schedule, p)? - p.participation_cost;
        if pi_h >= 0.0 {
            pre[bin_of(p.alpha * s)] += w;
        }
        let q = match seg.technology(s) {
            Some(Technology::Ai) => Some(p.q_bar_a),
            Some(Technology::Human) => Some(p.alpha * s),
            None => None,
        };
        if let Some(q) = q {
            post[bin_of(q)] += w;
            supplied_post.push(q);
        }
    }
    Ok(QualityHistogram {
        bin_left: (0..HISTOGRAM_BINS).map(|i| i as f64 * bw).collect(),
        bin_right: (0..HISTOGRAM_BINS).map(|i| (i + 1) as f64 * bw).collect(),
        mass_pre: pre,
        mass_post: post,
        supplied_post,
        segmentation: seg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn textbook() -> TwoGoodMarket {
        TwoGoodMarket {
            theta_bar: 1.0,
            q_h: 1.0,
            q_a: 0.5,
            beta: 1.0,
            beta_h: 1.0,
            eta: 1.0,
            human_unit_cost: 0.0,
            tax: 0.0,
            ai_unit_cost_pre_tax: 0.0,
            ai_markup: 0.0,
        }
    }

    #[test]
    fn textbook_monopoly() {
        let m = textbook();
        let eq = m.monopoly().unwrap();
        let (p_grid, _) = crate::numeric::golden_max(|p| p * (1.0 - p), 0.0, 1.0, 1e-10);
        assert!((p_grid - eq.p_h).abs() < 1e-6);
        assert_relative_eq!(eq.p_h, 0.5, epsilon = 1e-9);
        assert_relative_eq!(eq.d_h, 0.5, epsilon = 1e-9);
        assert_relative_eq!(eq.cs, 0.125, epsilon = 1e-9);
        assert_relative_eq!(eq.ps, 0.25, epsilon = 1e-9);
        assert_relative_eq!(eq.welfare, 0.375, epsilon = 1e-9);
    }

    #[test]
    fn hhi_examples() {
        assert_eq!(hhi(&[1.0]).unwrap(), 1.0);
        assert_relative_eq!(hhi(&[0.25; 4]).unwrap(), 0.25, epsilon = 1e-15);
        assert!(hhi(&[0.5, 0.6]).is_err());
        assert!(hhi(&[-0.5, 1.5]).is_err());
    }

    #[test]
    fn dominated_entrant_reproduces_monopoly() {
        let p = ModelParams::default();
        let mut m = TwoGoodMarket::new(&p);
        m.ai_unit_cost_pre_tax = 1e6;
        let duo = m.solve();
        let mono = m.monopoly().unwrap();
        assert_eq!(duo.d_a, 0.0);
        assert_relative_eq!(duo.p_h, mono.p_h, epsilon = 1e-9);
        assert_relative_eq!(duo.welfare, mono.welfare, epsilon = 1e-9);
    }

    #[test]
    fn huge_beta_unravels() {
        let p = ModelParams::default().with_beta(1e9);
        let eq = TwoGoodMarket::new(&p).solve();
        assert!(eq.d_a < 1e-6);
        assert!(eq.theta_out > 0.999 * p.theta_bar || eq.coverage() < 1e-6);
    }

    #[test]
    fn decomposition_identity() {
        let eq = TwoGoodMarket::new(&ModelParams::default()).solve();
        assert_eq!(eq.welfare, eq.cs + eq.ps);
    }

    #[test]
    fn empty_market_is_all_zero() {
        let mut m = TwoGoodMarket::new(&ModelParams::default());
        m.human_unit_cost = 1e6;
        m.ai_unit_cost_pre_tax = 1e6;
        let eq = m.solve();
        assert_eq!((eq.cs, eq.ps, eq.pollution_damage, eq.welfare), (0.0, 0.0, 0.0, 0.0));
    }
}
