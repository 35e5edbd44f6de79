//! Welfare as a function of AI volume, the planner optimum, the per-unit
//! tax that internalizes pollution, and the human-verification
//! counterfactual.

use serde::Serialize;

use crate::econ::{self, ModelParams};
use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_max, linspace};
use crate::par;
use crate::static_eq::{MarketEquilibrium, TwoGoodMarket};

/// Points on the default `D_A` grid.
pub const CURVE_POINTS: usize = 50;
pub const PLANNER_TOL: f64 = 1e-6;
/// Tolerance on the decentralized volume under the optimal tax.
pub const INTERNALIZATION_TOL: f64 = 0.02;
pub const BETA_SCAN: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

/// Marginal damage `beta eta / (1 + eta D)` at the planner volume.
pub fn pigouvian_tax(d_star: f64, p: &ModelParams) -> f64 {
    econ::marginal_penalty(p.beta, p.eta, d_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub beta: f64,
    pub d_a: f64,
    pub p_a: f64,
    pub p_h: f64,
    pub cs: f64,
    pub ps: f64,
    pub pollution: f64,
    pub welfare: f64,
}

impl CurvePoint {
    fn from_eq(beta: f64, d: f64, eq: &MarketEquilibrium) -> Self {
        CurvePoint {
            beta,
            d_a: d,
            p_a: eq.p_a,
            p_h: eq.p_h,
            cs: eq.cs,
            ps: eq.ps,
            pollution: eq.pollution_damage,
            welfare: eq.welfare,
        }
    }
}

/// Equilibrium with the AI volume held at `d`. The AI price is the free
/// variable: it is moved until AI demand (given the human best response)
/// equals the quota. `None` when even pricing at cost cannot reach `d`.
pub fn pinned_equilibrium(m: &TwoGoodMarket, d: f64) -> Option<MarketEquilibrium> {
    if !(0.0..=1.0).contains(&d) {
        return None;
    }
    let gap = |p_a: f64| m.implied_volume(p_a, d) - d;
    let lo = m.ai_unit_cost();
    let hi = lo + m.theta_bar * m.q_a + 1.0;
    if gap(lo) < 0.0 {
        return None;
    }
    let p_a = if gap(hi) < 0.0 { bisect(gap, lo, hi, 0.0)? } else { hi };
    let p_h = m.human_best_response(p_a, d);
    Some(m.report(p_a, p_h, d))
}

/// Decentralized AI volume at the posted price.
pub fn decentralized_volume(p: &ModelParams) -> Result<f64> {
    let eq = TwoGoodMarket::new(p).solve();
    if !eq.converged {
        return Err(Error::Solver("decentralized equilibrium did not converge".into()));
    }
    Ok(eq.d_a)
}

/// `n` evenly spaced volumes from zero to the decentralized volume. The
/// tax is non-negative, so volumes above the untaxed outcome are not
/// reachable by policy and are left out.
pub fn default_grid(p: &ModelParams, n: usize) -> Result<Vec<f64>> {
    let d_dec = decentralized_volume(p)?;
    Ok(linspace(0.0, d_dec, n))
}

/// Welfare decomposition at each pinned volume. Infeasible points are
/// dropped.
pub fn welfare_curve(p: &ModelParams, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    p.validate()?;
    if let Some(bad) = grid.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(Error::Domain { what: "D_A grid point", value: *bad });
    }
    let m = TwoGoodMarket::new(p);
    let pts = par::map(grid, |&d| pinned_equilibrium(&m, d).map(|eq| CurvePoint::from_eq(p.beta, d, &eq)));
    Ok(pts.into_iter().flatten().collect())
}

/// True when welfare never falls along the curve.
pub fn is_monotone(curve: &[CurvePoint]) -> bool {
    curve.windows(2).all(|w| w[1].welfare >= w[0].welfare)
}

/// Index of the maximum when it lies strictly inside the curve and beats
/// both endpoints.
pub fn interior_max(curve: &[CurvePoint]) -> Option<usize> {
    let (i, best) = argmax(curve)?;
    let n = curve.len();
    (i > 0 && i + 1 < n && best > curve[0].welfare && best > curve[n - 1].welfare).then_some(i)
}

fn argmax(curve: &[CurvePoint]) -> Option<(usize, f64)> {
    curve.iter().enumerate().map(|(i, c)| (i, c.welfare)).fold(None, |acc, (i, w)| match acc {
        Some((_, bw)) if bw >= w => acc,
        _ => Some((i, w)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlannerOptimum {
    pub d_a_star: f64,
    pub welfare: f64,
    /// Optimum sits on the boundary of the grid.
    pub corner: bool,
}

/// Grid argmax of the welfare curve refined by golden section.
pub fn planner_optimum(p: &ModelParams) -> Result<PlannerOptimum> {
    let grid = default_grid(p, CURVE_POINTS)?;
    planner_optimum_on(p, &grid)
}

pub fn planner_optimum_on(p: &ModelParams, grid: &[f64]) -> Result<PlannerOptimum> {
    let curve = welfare_curve(p, grid)?;
    let (i, w) = argmax(&curve).ok_or_else(|| Error::Solver("welfare curve is empty".into()))?;
    let n = curve.len();
    if i == 0 || i + 1 == n {
        return Ok(PlannerOptimum { d_a_star: curve[i].d_a, welfare: w, corner: true });
    }
    let m = TwoGoodMarket::new(p);
    let f = |d: f64| pinned_equilibrium(&m, d).map_or(f64::NEG_INFINITY, |eq| eq.welfare);
    let (d, fd) = golden_max(f, curve[i - 1].d_a, curve[i + 1].d_a, PLANNER_TOL);
    // never report something worse than the grid point we started from
    let (d, fd) = if fd >= w { (d, fd) } else { (curve[i].d_a, w) };
    Ok(PlannerOptimum { d_a_star: d, welfare: fd, corner: false })
}

/// Duopoly solve with the AI marginal cost raised by `tau` per quality unit.
pub fn taxed_equilibrium(p: &ModelParams, tau: f64) -> Result<MarketEquilibrium> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain { what: "tax", value: tau });
    }
    p.validate()?;
    let m = TwoGoodMarket::new(p).with_tax(tau);
    if m.q_h <= m.q_a {
        return Err(Error::NonSortable { q_h: m.q_h, q_a: m.q_a });
    }
    let eq = m.solve();
    if !eq.converged {
        return Err(Error::Solver("taxed equilibrium did not converge".into()));
    }
    Ok(eq)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyResult {
    pub beta: f64,
    pub d_a_decentralized: f64,
    pub d_a_star: f64,
    pub corner: bool,
    pub tau_star: f64,
    pub d_a_taxed: f64,
    /// `|D_A(taxed) - D_A*|`.
    pub internalization_residual: f64,
    pub welfare_decentralized: f64,
    pub welfare_planner: f64,
    pub welfare_taxed: f64,
    #[serde(skip)]
    pub curve: Vec<CurvePoint>,
}

/// Full governance analysis at one parameter point.
pub fn analyze(p: &ModelParams) -> Result<PolicyResult> {
    analyze_on(p, CURVE_POINTS)
}

/// [`analyze`] with `n` curve points.
pub fn analyze_on(p: &ModelParams, n: usize) -> Result<PolicyResult> {
    let dec = TwoGoodMarket::new(p).solve();
    if !dec.converged {
        return Err(Error::Solver("decentralized equilibrium did not converge".into()));
    }
    let grid = linspace(0.0, dec.d_a, n);
    let curve = welfare_curve(p, &grid)?;
    let opt = planner_optimum_on(p, &grid)?;
    let tau = pigouvian_tax(opt.d_a_star, p);
    let taxed = taxed_equilibrium(p, tau)?;
    Ok(PolicyResult {
        beta: p.beta,
        d_a_decentralized: dec.d_a,
        d_a_star: opt.d_a_star,
        corner: opt.corner,
        tau_star: tau,
        d_a_taxed: taxed.d_a,
        internalization_residual: (taxed.d_a - opt.d_a_star).abs(),
        welfare_decentralized: dec.welfare,
        welfare_planner: opt.welfare,
        welfare_taxed: taxed.welfare,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationResult {
    pub beta: f64,
    pub beta_verified: f64,
    pub baseline: MarketEquilibrium,
    pub verified: MarketEquilibrium,
    pub welfare_delta: f64,
    pub human_share_delta: f64,
}

/// Human-good buyers face `beta_verified` instead of `beta`.
pub fn verification_counterfactual(p: &ModelParams, beta_verified: f64) -> Result<VerificationResult> {
    p.validate()?;
    if !(0.0..=p.beta).contains(&beta_verified) {
        return Err(Error::Domain { what: "beta_verified", value: beta_verified });
    }
    let base = TwoGoodMarket::new(p);
    if base.q_h <= base.q_a {
        return Err(Error::NonSortable { q_h: base.q_h, q_a: base.q_a });
    }
    let baseline = base.solve();
    let verified = base.with_verified_beta(beta_verified).solve();
    if !(baseline.converged && verified.converged) {
        return Err(Error::Solver("verification counterfactual did not converge".into()));
    }
    Ok(VerificationResult {
        beta: p.beta,
        beta_verified,
        welfare_delta: verified.welfare - baseline.welfare,
        human_share_delta: verified.d_h - baseline.d_h,
        baseline,
        verified,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaScanRow {
    pub beta: f64,
    pub d_a_decentralized: f64,
    pub welfare_duopoly: f64,
    pub welfare_monopoly: f64,
    pub d_a_star: f64,
    pub tau_star: f64,
    pub monotone: bool,
    pub interior: bool,
    pub internalization_residual: f64,
    pub welfare_taxed: f64,
    #[serde(skip)]
    pub curve: Vec<CurvePoint>,
}

impl BetaScanRow {
    pub fn welfare_gap(&self) -> f64 {
        self.welfare_duopoly - self.welfare_monopoly
    }
}

/// Policy analysis across pollution sensitivities.
pub fn beta_scan(p: &ModelParams, betas: &[f64]) -> Result<Vec<BetaScanRow>> {
    beta_scan_on(p, betas, CURVE_POINTS)
}

/// [`beta_scan`] with `n` curve points per sensitivity.
pub fn beta_scan_on(p: &ModelParams, betas: &[f64], n: usize) -> Result<Vec<BetaScanRow>> {
    let mono = TwoGoodMarket::new(p).monopoly()?.welfare;
    par::map(betas, |&b| {
        let pb = p.with_beta(b);
        let r = analyze_on(&pb, n)?;
        Ok(BetaScanRow {
            beta: b,
            d_a_decentralized: r.d_a_decentralized,
            welfare_duopoly: r.welfare_decentralized,
            welfare_monopoly: mono,
            d_a_star: r.d_a_star,
            tau_star: r.tau_star,
            monotone: is_monotone(&r.curve),
            interior: interior_max(&r.curve).is_some(),
            internalization_residual: r.internalization_residual,
            welfare_taxed: r.welfare_taxed,
            curve: r.curve,
        })
    })
    .into_iter()
    .collect()
}

/// Smallest scanned beta whose welfare curve has an interior maximum.
pub fn first_interior_beta(rows: &[BetaScanRow]) -> Option<f64> {
    rows.iter().filter(|r| r.interior).map(|r| r.beta).reduce(f64::min)
}

/// Sign changes of duopoly minus monopoly welfare along the scan.
pub fn gap_sign_changes(rows: &[BetaScanRow]) -> usize {
    rows.windows(2).filter(|w| (w[0].welfare_gap() > 0.0) != (w[1].welfare_gap() > 0.0)).count()
}

/// Pollution sensitivity at which entry stops paying off: the root of
/// duopoly minus monopoly welfare on `[lo, hi]`, bisected to `tol`.
pub fn unraveling_threshold(p: &ModelParams, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let mono = TwoGoodMarket::new(p).monopoly().ok()?.welfare;
    let gap = |b: f64| TwoGoodMarket::new(&p.with_beta(b)).solve().welfare - mono;
    bisect(gap, lo, hi, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub beta_star: Option<f64>,
    pub first_interior_beta: Option<f64>,
    pub rows: Vec<BetaScanRow>,
}

pub fn policy_summary(p: &ModelParams) -> Result<PolicySummary> {
    let rows = beta_scan(p, &BETA_SCAN)?;
    let (lo, hi) = (BETA_SCAN[0], BETA_SCAN[BETA_SCAN.len() - 1]);
    Ok(PolicySummary {
        beta_star: unraveling_threshold(p, lo, hi, 0.01),
        first_interior_beta: first_interior_beta(&rows),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy(beta: f64, eta: f64) -> ModelParams {
        ModelParams { beta, eta, ..ModelParams::default() }
    }

    #[test]
    fn tax_examples() {
        assert_eq!(pigouvian_tax(0.3, &toy(0.0, 1.0)), 0.0);
        assert_eq!(pigouvian_tax(0.0, &toy(2.0, 1.0)), 2.0);
        assert_relative_eq!(pigouvian_tax(1.0, &toy(2.0, 1.0)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pinned_endpoint_reproduces_decentralized() {
        let p = ModelParams::default();
        let m = TwoGoodMarket::new(&p);
        let dec = m.solve();
        let pin = pinned_equilibrium(&m, dec.d_a).unwrap();
        assert_relative_eq!(pin.p_a, dec.p_a, epsilon = 1e-8);
        assert_relative_eq!(pin.welfare, dec.welfare, epsilon = 1e-7);
    }

    #[test]
    fn zero_tax_is_untaxed() {
        let p = ModelParams::default();
        let a = taxed_equilibrium(&p, 0.0).unwrap();
        let b = TwoGoodMarket::new(&p).solve();
        assert_eq!(a, b);
        let big = taxed_equilibrium(&p, 1e6).unwrap();
        assert_eq!(big.d_a, 0.0);
        assert!(taxed_equilibrium(&p, -1.0).is_err());
    }

    #[test]
    fn no_externality_means_monotone_curve() {
        let p = ModelParams { beta: 0.0, ..ModelParams::default() };
        let curve = welfare_curve(&p, &default_grid(&p, 30).unwrap()).unwrap();
        assert!(is_monotone(&curve));
        let opt = planner_optimum(&p).unwrap();
        assert!(opt.corner);
        assert_relative_eq!(opt.d_a_star, curve.last().unwrap().d_a);
    }

    #[test]
    fn planner_matches_dense_grid() {
        let p = ModelParams::default();
        let opt = planner_optimum(&p).unwrap();
        assert!(!opt.corner);
        let m = TwoGoodMarket::new(&p);
        let d_dec = m.solve().d_a;
        let (mut best_d, mut best_w) = (0.0, f64::NEG_INFINITY);
        for i in 0..=10_000 {
            let d = d_dec * i as f64 / 10_000.0;
            if let Some(eq) = pinned_equilibrium(&m, d) {
                if eq.welfare > best_w {
                    best_w = eq.welfare;
                    best_d = d;
                }
            }
        }
        assert!((opt.d_a_star - best_d).abs() < 2.0 * d_dec / 10_000.0);
        assert!(opt.welfare >= best_w - 1e-9);
    }

    #[test]
    fn verification_examples() {
        let p = ModelParams::default();
        let same = verification_counterfactual(&p, p.beta).unwrap();
        assert_eq!(same.baseline, same.verified);
        let big = ModelParams { beta: 5.0, ..p.clone() };
        let v = verification_counterfactual(&big, 0.0).unwrap();
        assert!(v.human_share_delta > 0.0);
        assert!(verification_counterfactual(&p, p.beta + 1.0).is_err());
    }
}
