//! Oracle checks for statlab. Each check recomputes the expected value
//! independently (hand formulas, brute-force enumeration, or direct
//! numerical integration) and compares it with the library.
//!
//! Shared between the crate's integration tests and the workspace
//! acceptance target, so checks return `Result` instead of panicking.

#![allow(dead_code)]

use statlab::{
    levene, mann_whitney_u, one_way_anova, ols_regression, poisson_glm, shapiro_wilk, tukey_hsd,
    two_way_anova, welch_anova, welch_t, DesignMatrix, Distribution, GroupedSample,
};

pub type Check = Result<(), String>;
pub type Named = (&'static str, fn() -> Check);

pub fn close(what: &str, got: f64, want: f64, tol: f64) -> Check {
    if (got - want).abs() <= tol || (got.is_infinite() && got == want) {
        Ok(())
    } else {
        Err(format!("{what}: got {got:.12e}, want {want:.12e} (tol {tol:e})"))
    }
}

pub fn ensure(cond: bool, msg: impl Into<String>) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// Independent numeric helpers.

fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn dnorm(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Simpson over [a, b] with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

fn t_density(df: f64, x: f64) -> f64 {
    let ln_c = libm::lgamma((df + 1.0) / 2.0)
        - libm::lgamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// F CDF by integrating 2u·f(u²) over [0, √x]; the substitution keeps the
/// integrand finite at the origin for every df1 ≥ 1.
fn f_cdf_oracle(d1: f64, d2: f64, x: f64) -> f64 {
    let ln_b = libm::lgamma(d1 / 2.0) + libm::lgamma(d2 / 2.0) - libm::lgamma((d1 + d2) / 2.0);
    let g = |u: f64| {
        if u == 0.0 {
            return if d1 == 1.0 { 2.0 * (0.5 * (d1 / d2).ln() - ln_b).exp() } else { 0.0 };
        }
        2.0 * (0.5 * d1 * (d1 / d2).ln() + (d1 - 1.0) * u.ln()
            - (d1 + d2) / 2.0 * (1.0 + d1 * u * u / d2).ln()
            - ln_b)
            .exp()
    };
    simpson(g, 0.0, x.sqrt(), 20000)
}

/// Chi-square CDF with the same substitution.
fn chi2_cdf_oracle(df: f64, x: f64) -> f64 {
    let k = df / 2.0;
    let g = |u: f64| {
        if u == 0.0 {
            return if df == 1.0 { 2.0 * (-k * 2f64.ln() - libm::lgamma(k)).exp() } else { 0.0 };
        }
        2.0 * ((df - 1.0) * u.ln() - u * u / 2.0 - k * 2f64.ln() - libm::lgamma(k)).exp()
    };
    simpson(g, 0.0, x.sqrt(), 20000)
}

/// P(range of k standard normals ≤ w), by Simpson on a fine grid.
fn range_cdf(w: f64, k: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let inner = |z: f64| dnorm(z) * (phi(z) - phi(z - w)).max(0.0).powf(k - 1.0);
    k * simpson(inner, -9.0, 9.0 + w, 1200)
}

/// Studentized-range CDF by double Simpson integration over the scaled chi
/// density of s = sqrt(χ²_ν / ν).
pub fn ptukey_oracle(q: f64, k: f64, df: f64) -> f64 {
    let ln_c = (df / 2.0) * df.ln() - libm::lgamma(df / 2.0) - (df / 2.0 - 1.0) * 2f64.ln();
    let dens = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        (ln_c + (df - 1.0) * s.ln() - df * s * s / 2.0).exp()
    };
    // s² = χ²/ν lies within ±12 sd of 1 up to ~1e-14 of mass; the 60/ν term
    // widens the right tail for small ν
    let spread = 12.0 * (2.0 / df).sqrt();
    let lo = (1.0 - spread).max(0.0).sqrt();
    let hi = (1.0 + spread + 60.0 / df).sqrt();
    simpson(|s| dens(s) * range_cdf(q * s, k), lo, hi, 800)
}

/// Tiny deterministic generator for data sets inside checks.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 11
    }

    pub fn uniform(&mut self) -> f64 {
        self.next_u64() as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

fn groups(data: &[(&str, &[f64])]) -> GroupedSample {
    GroupedSample::new(data.iter().map(|(l, v)| (*l, v.to_vec()))).unwrap()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

// Welch ANOVA.

pub const WELCH_GROUPS: [(&str, [f64; 5]); 3] = [
    ("a", [1.0, 2.0, 4.0, 3.5, 2.2]),
    ("b", [3.0, 5.0, 6.5, 4.1, 7.7]),
    ("c", [2.0, 9.0, 1.0, 4.0, 6.0]),
];

pub fn welch_anova_hand() -> Check {
    // Step by step: means 2.54, 5.26, 4.40; variances 1.458, 3.503, 10.3.
    let w = [5.0 / 1.458, 5.0 / 3.503, 5.0 / 10.3];
    let m = [2.54, 5.26, 4.40];
    let sw: f64 = w.iter().sum();
    let mw = (0..3).map(|i| w[i] * m[i]).sum::<f64>() / sw;
    let num = (0..3).map(|i| w[i] * (m[i] - mw).powi(2)).sum::<f64>() / 2.0;
    let lam: f64 = (0..3).map(|i| (1.0 - w[i] / sw).powi(2) / 4.0).sum();
    let f = num / (1.0 + 2.0 * 1.0 / 8.0 * lam);
    let df2 = 8.0 / (3.0 * lam);

    let s = groups(&WELCH_GROUPS.iter().map(|(l, v)| (*l, &v[..])).collect::<Vec<_>>());
    let out = welch_anova(&s).map_err(err)?;
    close("welch F", out.statistic, f, 1e-9)?;
    close("welch df2", out.df2.unwrap(), df2, 1e-9)?;
    close("welch df1", out.df1, 2.0, 0.0)?;
    // p against numerical integration of the F density
    let p = 1.0 - f_cdf_oracle(2.0, df2, f);
    close("welch p", out.p_value, p, 1e-8)?;
    // η² = SSB / SST
    let all: Vec<f64> = WELCH_GROUPS.iter().flat_map(|g| g.1).collect();
    let gm = mean(&all);
    let ssb: f64 = m.iter().map(|mi| 5.0 * (mi - gm).powi(2)).sum();
    let sst: f64 = all.iter().map(|x| (x - gm).powi(2)).sum();
    close("welch eta2", out.effect_size.unwrap().value, ssb / sst, 1e-12)
}

pub fn welch_anova_identical_constants() -> Check {
    let s = groups(&[("a", &[2.0, 2.0, 2.0]), ("b", &[2.0, 2.0, 2.0])]);
    ensure(
        matches!(welch_anova(&s), Err(statlab::StatError::DegenerateInput(_))),
        "constant groups must be rejected as degenerate",
    )
}

pub fn welch_anova_equals_t_squared() -> Check {
    let mut rng = Lcg::new(11);
    for trial in 0..50 {
        let na = 2 + rng.below(20) as usize;
        let nb = 2 + rng.below(20) as usize;
        let a: Vec<f64> = (0..na).map(|_| rng.uniform() * 3.0).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.uniform() * 7.0 + 0.5).collect();
        let f = welch_anova(&groups(&[("a", &a), ("b", &b)])).map_err(err)?;
        let t = welch_t(&a, &b).map_err(err)?;
        close(&format!("trial {trial}: F vs t^2"), f.statistic, t.statistic.powi(2), 1e-9 * f.statistic.max(1.0))?;
        close(&format!("trial {trial}: df"), f.df2.unwrap(), t.df1, 1e-9 * t.df1)?;
        close(&format!("trial {trial}: p"), f.p_value, t.p_value, 1e-9)?;
    }
    Ok(())
}

// Levene (Brown-Forsythe).

pub fn levene_hand_2x4() -> Check {
    // medians 3 and 3.5; absolute deviations {2,1,1,4} and {1.5,0.5,0.5,5.5}
    let z1 = [2.0, 1.0, 1.0, 4.0];
    let z2 = [1.5, 0.5, 0.5, 5.5];
    let (m1, m2) = (mean(&z1), mean(&z2));
    let g = (m1 + m2) / 2.0;
    let ssb = 4.0 * ((m1 - g).powi(2) + (m2 - g).powi(2));
    let ssw = 3.0 * (var(&z1) + var(&z2));
    let w = ssb / (ssw / 6.0);
    let out = levene(&groups(&[("x", &[1.0, 2.0, 4.0, 7.0]), ("y", &[2.0, 3.0, 4.0, 9.0])])).map_err(err)?;
    close("levene W", out.statistic, w, 1e-12)?;
    close("levene df", out.df2.unwrap(), 6.0, 0.0)?;
    let p = 1.0 - f_cdf_oracle(1.0, 6.0, w);
    close("levene p", out.p_value, p, 1e-8)
}

pub fn levene_shift_invariance() -> Check {
    let base = [1.0, 3.0, 4.0, 8.0, 2.5];
    let shifted: Vec<f64> = base.iter().map(|x| x + 10.0).collect();
    let out = levene(&groups(&[("a", &base), ("b", &shifted)])).map_err(err)?;
    close("W", out.statistic, 0.0, 1e-12)?;
    close("p", out.p_value, 1.0, 1e-12)
}

pub fn levene_single_group() -> Check {
    ensure(
        matches!(levene(&groups(&[("a", &[1.0, 2.0, 3.0])])), Err(statlab::StatError::InvalidArgument(_))),
        "single group must be an invalid argument",
    )
}

// Shapiro-Wilk.

fn w_formula_blom(values: &[f64]) -> f64 {
    // W with normalized Blom scores as coefficients (Shapiro-Francia form).
    let n = values.len();
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let m: Vec<f64> = (1..=n)
        .map(|i| statlab::special::norm_quantile((i as f64 - 0.375) / (n as f64 + 0.25)))
        .collect();
    let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let num: f64 = m.iter().zip(&x).map(|(a, b)| a / norm * b).sum();
    let xm = mean(&x);
    num * num / x.iter().map(|v| (v - xm).powi(2)).sum::<f64>()
}

pub fn shapiro_normal_grid() -> Check {
    let n = 100;
    let x: Vec<f64> = (1..=n)
        .map(|i| statlab::special::norm_quantile((i as f64 - 0.5) / n as f64))
        .collect();
    let out = shapiro_wilk(&x).map_err(err)?;
    ensure(out.statistic >= 0.99, format!("W = {} on a normal grid", out.statistic))?;
    ensure(w_formula_blom(&x) >= 0.99, "direct formula on a normal grid")?;
    ensure(out.p_value > 0.5, format!("p = {} on a normal grid", out.p_value))
}

pub fn shapiro_bimodal() -> Check {
    let x: Vec<f64> = (0..50).map(|i| if i < 25 { 0.0 } else { 1.0 }).collect();
    let out = shapiro_wilk(&x).map_err(err)?;
    let direct = w_formula_blom(&x);
    ensure(direct < 0.9, format!("direct W = {direct}"))?;
    ensure(out.statistic < 0.9, format!("W = {}", out.statistic))?;
    close("W vs direct formula", out.statistic, direct, 0.02)
}

pub fn shapiro_reference_values() -> Check {
    // Reference values from an independent Royston (1995) implementation.
    let x = [2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 6.1, 3.9, 4.0, 2.2, 7.5, 3.1];
    let cases: [(&[f64], f64, f64); 3] = [
        (&x, 0.9203549633628667, 0.25363540529466944),
        (&x[..5], 0.9320849391953863, 0.6106559022604845),
        (&x[..3], 0.8479899497487435, 0.23508923424205008),
    ];
    for (v, w, p) in cases {
        let out = shapiro_wilk(v).map_err(err)?;
        close(&format!("W n={}", v.len()), out.statistic, w, 1e-6)?;
        close(&format!("p n={}", v.len()), out.p_value, p, 1e-6)?;
    }
    Ok(())
}

pub fn shapiro_n_out_of_range() -> Check {
    ensure(shapiro_wilk(&[1.0, 2.0]).is_err(), "n = 2 accepted")?;
    let big: Vec<f64> = (0..5001).map(|i| i as f64).collect();
    ensure(shapiro_wilk(&big).is_err(), "n = 5001 accepted")
}

// Tukey HSD.

pub fn tukey_hand() -> Check {
    let g = [
        ("g1", [4.0, 5.0, 6.0, 5.0, 5.5, 4.5]),
        ("g2", [6.0, 7.5, 7.0, 6.5, 8.0, 7.0]),
        ("g3", [5.0, 6.0, 5.5, 6.5, 4.0, 6.0]),
    ];
    let sample = groups(&g.iter().map(|(l, v)| (*l, &v[..])).collect::<Vec<_>>());
    let rows = tukey_hsd(&sample, 0.05).map_err(err)?;
    ensure(rows.len() == 3, "three pairs expected")?;
    let n = 6.0;
    let df = 15.0;
    let mse = g.iter().map(|(_, v)| var(v)).sum::<f64>() / 3.0;
    let qcrit_lo = 3.6;
    let qcrit_hi = 3.7;
    for row in &rows {
        let a = g.iter().find(|x| x.0 == row.group1).unwrap();
        let b = g.iter().find(|x| x.0 == row.group2).unwrap();
        let diff = mean(&a.1) - mean(&b.1);
        close("mean_diff", row.mean_diff, diff, 1e-12)?;
        let q = diff.abs() / (mse / n).sqrt();
        close("q", row.q, q, 1e-10)?;
        let p = 1.0 - ptukey_oracle(q, 3.0, df);
        close(&format!("adj_p {}-{}", row.group1, row.group2), row.adj_p, p, 1e-3)?;
        let half = (row.ci_high - row.ci_low) / 2.0;
        let qcrit = half / (mse / n).sqrt();
        ensure(
            (qcrit_lo..qcrit_hi).contains(&qcrit),
            format!("critical q {qcrit} outside table range"),
        )?;
        close("ci centre", (row.ci_high + row.ci_low) / 2.0, diff, 1e-12)?;
    }
    // the critical value reproduces alpha under the integration oracle
    let half = (rows[0].ci_high - rows[0].ci_low) / 2.0;
    let qcrit = half / (mse / n).sqrt();
    close("coverage at q_crit", ptukey_oracle(qcrit, 3.0, df), 0.95, 1e-3)
}

pub fn tukey_identical_groups() -> Check {
    let v = [1.0, 2.0, 3.0, 4.0];
    let rows = tukey_hsd(&groups(&[("a", &v), ("b", &v)]), 0.05).map_err(err)?;
    let r = &rows[0];
    close("mean_diff", r.mean_diff, 0.0, 0.0)?;
    close("adj_p", r.adj_p, 1.0, 1e-6)?;
    ensure(r.ci_low < 0.0 && r.ci_high > 0.0, "CI must straddle 0")
}

pub fn tukey_antisymmetry() -> Check {
    let a = [1.0, 2.0, 4.0, 3.0];
    let b = [3.0, 5.0, 6.0, 4.5];
    let c = [2.0, 2.5, 3.5, 1.0];
    let fwd = tukey_hsd(&groups(&[("1", &a), ("5", &b), ("9", &c)]), 0.05).map_err(err)?;
    let rev = tukey_hsd(&groups(&[("9", &c), ("5", &b), ("1", &a)]), 0.05).map_err(err)?;
    for r in &fwd {
        let m = rev
            .iter()
            .find(|x| x.group1 == r.group2 && x.group2 == r.group1)
            .ok_or("reversed pair missing")?;
        close("antisymmetric diff", r.mean_diff, -m.mean_diff, 1e-12)?;
        close("symmetric p", r.adj_p, m.adj_p, 1e-12)?;
        close("mirrored CI", r.ci_low, -m.ci_high, 1e-12)?;
    }
    let first = &fwd[0];
    ensure(first.group1 == "1" && first.group2 == "5", "rows follow input order")?;
    close("orientation", first.mean_diff, mean(&a) - mean(&b), 1e-12)
}

// Welch t.

pub fn welch_t_hand() -> Check {
    let out = welch_t(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).map_err(err)?;
    // means 2, 3; variances 1, 1; se = sqrt(2/3); df = 4
    let t = -1.0 / (2.0f64 / 3.0).sqrt();
    close("t", out.statistic, t, 1e-12)?;
    close("df", out.df1, 4.0, 1e-12)?;
    // t with 4 df: P(|T| ≤ t) = sinθ (1 + cos²θ / 2), θ = atan(|t| / 2)
    let th = (t.abs() / 2.0).atan();
    let p = 1.0 - th.sin() * (1.0 + th.cos().powi(2) / 2.0);
    close("p", out.p_value, p, 1e-10)?;
    let d = out.effect_size.unwrap().value;
    close("d", d, -1.0, 1e-12)?;
    let se = (6.0f64 / 9.0 + 1.0 / 12.0).sqrt();
    close("ci_low", out.ci_low.unwrap(), -1.0 - 1.959963984540054 * se, 1e-9)?;
    close("ci_high", out.ci_high.unwrap(), -1.0 + 1.959963984540054 * se, 1e-9)
}

pub fn welch_t_equal_samples() -> Check {
    let v = [1.5, 2.0, 4.0, 3.0];
    let out = welch_t(&v, &v).map_err(err)?;
    close("t", out.statistic, 0.0, 0.0)?;
    close("p", out.p_value, 1.0, 1e-12)?;
    close("d", out.effect_size.unwrap().value, 0.0, 0.0)
}

pub fn welch_t_swap() -> Check {
    let a = [1.0, 4.0, 2.0, 8.0, 5.0];
    let b = [3.0, 3.5, 9.0, 7.0];
    let x = welch_t(&a, &b).map_err(err)?;
    let y = welch_t(&b, &a).map_err(err)?;
    close("t negated", x.statistic, -y.statistic, 1e-12)?;
    close("p preserved", x.p_value, y.p_value, 1e-12)
}

pub fn welch_t_degenerate() -> Check {
    ensure(
        matches!(welch_t(&[2.0, 2.0], &[2.0, 2.0]), Err(statlab::StatError::DegenerateInput(_))),
        "constant equal samples must be degenerate",
    )
}

// Mann-Whitney U.

fn ranks_of(pooled: &[f64]) -> Vec<f64> {
    pooled
        .iter()
        .map(|&v| {
            let below = pooled.iter().filter(|&&w| w < v).count() as f64;
            let equal = pooled.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Exhaustive permutation p-value over all C(n_a + n_b, n_a) labelings.
pub fn brute_force_mw_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let r = ranks_of(&pooled);
    let n = pooled.len();
    let na = a.len();
    let expected = na as f64 * (n + 1) as f64 / 2.0;
    let observed = (r[..na].iter().sum::<f64>() - expected).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        total += 1;
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| r[i]).sum();
        if (s - expected).abs() >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

pub fn mann_whitney_pairs() -> Check {
    let a = [1.0, 2.0];
    let b = [3.0, 4.0];
    let out = mann_whitney_u(&a, &b).map_err(err)?;
    let greater: f64 = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 }))
        .sum();
    close("U_a by enumeration", out.u_a, greater, 0.0)?;
    close("U", out.outcome.statistic, 0.0, 0.0)?;
    close("r", out.outcome.effect_size.unwrap().value, 1.0, 0.0)?;
    close("p", out.outcome.p_value, brute_force_mw_p(&a, &b), 1e-12)
}

pub fn mann_whitney_equal_samples() -> Check {
    let v = [3.0, 1.0, 2.0, 5.0];
    let out = mann_whitney_u(&v, &v).map_err(err)?;
    close("r", out.outcome.effect_size.unwrap().value, 0.0, 0.0)?;
    close("p", out.outcome.p_value, 1.0, 1e-12)
}

pub fn mann_whitney_exact_vs_enumeration() -> Check {
    let mut rng = Lcg::new(29);
    for trial in 0..60 {
        let na = 1 + rng.below(8) as usize;
        let nb = 1 + rng.below(8) as usize;
        // small value range forces ties
        let levels = 2 + rng.below(10);
        let a: Vec<f64> = (0..na).map(|_| rng.below(levels) as f64).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.below(levels) as f64 + 0.5 * rng.below(2) as f64).collect();
        let out = mann_whitney_u(&a, &b).map_err(err)?;
        ensure(out.exact, "small samples must use the exact path")?;
        close(&format!("trial {trial} {a:?} {b:?}"), out.outcome.p_value, brute_force_mw_p(&a, &b), 1e-12)?;
    }
    Ok(())
}

pub fn mann_whitney_exact_vs_normal() -> Check {
    let mut rng = Lcg::new(5);
    for trial in 0..20 {
        let mut pool: Vec<f64> = (0..30).map(|i| i as f64 + rng.uniform() * 0.5).collect();
        // shuffle, then shift b a little so p spans a useful range
        for i in (1..pool.len()).rev() {
            pool.swap(i, rng.below(i as u64 + 1) as usize);
        }
        let a = pool[..15].to_vec();
        let b: Vec<f64> = pool[15..].iter().map(|v| v + trial as f64 * 0.4).collect();
        let out = mann_whitney_u(&a, &b).map_err(err)?;
        ensure(out.exact, "15 x 15 uses the exact path")?;
        let mu = 112.5;
        let sd = (225.0 * 31.0 / 12.0f64).sqrt();
        let z = ((out.u_a - mu).abs() - 0.5).max(0.0) / sd;
        let normal = 2.0 * (1.0 - phi(z));
        close(&format!("trial {trial}: exact vs normal"), out.outcome.p_value, normal.min(1.0), 0.02)?;
    }
    Ok(())
}

pub fn mann_whitney_normal_reference() -> Check {
    // Past the exact limit; reference value from an independent implementation.
    let a: Vec<f64> = (0..25).map(|i| (i as f64 * 7.3) % 11.0).collect();
    let b: Vec<f64> = (0..25).map(|i| (i as f64 * 3.1) % 13.0 + 1.0).collect();
    let out = mann_whitney_u(&a, &b).map_err(err)?;
    ensure(!out.exact, "625 pairs must use the normal approximation")?;
    close("U", out.outcome.statistic, 294.0, 0.0)?;
    close("p", out.outcome.p_value, 0.7268880657737735, 1e-9)
}

// Poisson GLM.

pub fn glm_intercept_only() -> Check {
    for c in [1u32, 3, 7, 20] {
        let y = vec![c; 12];
        let fit = poisson_glm(&y, &DesignMatrix::intercept_only(12)).map_err(err)?;
        let b0 = &fit.coefficients[0];
        close("beta0 = ln c", b0.beta, (c as f64).ln(), 1e-8)?;
        close("irr = c", b0.irr, c as f64, 1e-7 * c as f64)?;
        // Fisher information n·c gives se = 1/sqrt(n c)
        close("se", b0.se, 1.0 / (12.0 * c as f64).sqrt(), 1e-8)?;
    }
    Ok(())
}

pub fn glm_synthetic_recovery() -> Check {
    let x: Vec<f64> = (0..41).map(|i| i as f64 * 0.075).collect();
    let y: Vec<u32> = x.iter().map(|v| (0.5 + 1.0 * v).exp().round() as u32).collect();
    let d = DesignMatrix::with_intercept(vec![("x", x)]).map_err(err)?;
    let fit = poisson_glm(&y, &d).map_err(err)?;
    close("beta0", fit.coefficients[0].beta, 0.5, 0.1)?;
    close("beta1", fit.coefficients[1].beta, 1.0, 0.1)
}

pub fn glm_two_group_irr() -> Check {
    let g0 = [3u32, 5, 4, 6, 2, 4, 5];
    let g1 = [1u32, 0, 2, 1, 1, 0, 2, 1, 3];
    let y: Vec<u32> = g0.iter().chain(&g1).copied().collect();
    let dummy: Vec<f64> = g0.iter().map(|_| 0.0).chain(g1.iter().map(|_| 1.0)).collect();
    let d = DesignMatrix::with_intercept(vec![("vanilla", dummy)]).map_err(err)?;
    let fit = poisson_glm(&y, &d).map_err(err)?;
    let m0 = g0.iter().sum::<u32>() as f64 / g0.len() as f64;
    let m1 = g1.iter().sum::<u32>() as f64 / g1.len() as f64;
    let c = fit.coefficient("vanilla").ok_or("missing vanilla row")?;
    close("IRR = m1/m0", c.irr, m1 / m0, 1e-6)?;
    // closed-form se: sqrt(1/Σy0 + 1/Σy1)
    let se = (1.0 / g0.iter().sum::<u32>() as f64 + 1.0 / g1.iter().sum::<u32>() as f64).sqrt();
    close("se", c.se, se, 1e-6)?;
    close("z", c.z, c.beta / c.se, 1e-12)?;
    close("p", c.p_value, 2.0 * (1.0 - phi(c.z.abs())), 1e-9)
}

pub fn glm_singular_design() -> Check {
    let x = vec![1.0, 2.0, 3.0, 4.0];
    let d = DesignMatrix::with_intercept(vec![("x", x.clone()), ("x2", x.iter().map(|v| v * 2.0).collect())])
        .map_err(err)?;
    ensure(
        matches!(poisson_glm(&[1, 2, 3, 4], &d), Err(statlab::StatError::SingularDesign(_))),
        "collinear design must be singular",
    )
}

// Two-way ANOVA.

pub fn two_way_hand_2x2() -> Check {
    // cells (A,B): a1b1 {3,5}, a1b2 {6,8}, a2b1 {4,6}, a2b2 {11,13}
    let y = [3.0, 5.0, 6.0, 8.0, 4.0, 6.0, 11.0, 13.0];
    let a = ["a1", "a1", "a1", "a1", "a2", "a2", "a2", "a2"];
    let b = ["b1", "b1", "b2", "b2", "b1", "b1", "b2", "b2"];
    // cell means 4, 7, 5, 12; grand 7; A means 5.5, 8.5; B means 4.5, 9.5
    let ssa = 4.0 * ((5.5f64 - 7.0).powi(2) + (8.5f64 - 7.0).powi(2));
    let ssb = 4.0 * ((4.5f64 - 7.0).powi(2) + (9.5f64 - 7.0).powi(2));
    let cells = [4.0, 7.0, 5.0, 12.0];
    let ss_cells: f64 = cells.iter().map(|m| 2.0 * (m - 7.0f64).powi(2)).sum();
    let ssab = ss_cells - ssa - ssb;
    let sse = 8.0; // each cell contributes 2
    let out = two_way_anova(&y, &a, &b).map_err(err)?;
    let fa = out.factor_a.as_ref().ok_or("A missing")?;
    let fb = out.factor_b.as_ref().ok_or("B missing")?;
    let fab = out.interaction.as_ref().ok_or("AxB missing")?;
    close("SS_A", fa.sum_sq, ssa, 1e-9)?;
    close("SS_B", fb.sum_sq, ssb, 1e-9)?;
    close("SS_AB", fab.sum_sq, ssab, 1e-9)?;
    close("SS_E", out.residual_sum_sq, sse, 1e-9)?;
    close("df_E", out.residual_df, 4.0, 0.0)?;
    close("F_A", fa.outcome.statistic, ssa / (sse / 4.0), 1e-9)?;
    close("partial eta A", fa.outcome.effect_size.clone().unwrap().value, ssa / (ssa + sse), 1e-12)?;
    let p = 1.0 - f_cdf_oracle(1.0, 4.0, ssab / 2.0);
    close("p_AB", fab.outcome.p_value, p, 1e-8)
}

pub fn two_way_additive() -> Check {
    let mut y = Vec::new();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let effect_a = [0.0, 1.5, -0.7];
    let effect_b = [0.0, 2.0];
    let noise = [0.3, -0.3, 0.1, -0.1];
    for (i, ea) in effect_a.iter().enumerate() {
        for (j, eb) in effect_b.iter().enumerate() {
            for e in noise {
                y.push(10.0 + ea + eb + e);
                a.push(format!("a{i}"));
                b.push(format!("b{j}"));
            }
        }
    }
    let out = two_way_anova(&y, &a, &b).map_err(err)?;
    let ab = out.interaction.ok_or("interaction missing")?;
    close("interaction F", ab.outcome.statistic, 0.0, 1e-9)?;
    close("interaction p", ab.outcome.p_value, 1.0, 1e-9)
}

pub fn two_way_constant_factor_is_one_way() -> Check {
    let y = [1.0, 2.0, 2.5, 4.0, 5.0, 3.5, 7.0, 6.0, 8.5];
    let a = ["x", "x", "x", "y", "y", "y", "z", "z", "z"];
    let b = ["k"; 9];
    let two = two_way_anova(&y, &a, &b).map_err(err)?;
    let one = one_way_anova(&groups(&[("x", &y[..3]), ("y", &y[3..6]), ("z", &y[6..])])).map_err(err)?;
    let fa = two.factor_a.ok_or("A missing")?;
    close("F", fa.outcome.statistic, one.statistic, 1e-9)?;
    close("p", fa.outcome.p_value, one.p_value, 1e-9)?;
    ensure(two.factor_b.is_none() && two.interaction.is_none(), "zero-df effects must be absent")
}

pub fn two_way_constant_y() -> Check {
    let y = [2.0; 8];
    let a = ["p", "p", "q", "q", "p", "p", "q", "q"];
    let b = ["u", "v", "u", "v", "u", "v", "u", "v"];
    let out = two_way_anova(&y, &a, &b).map_err(err)?;
    for e in [out.factor_a, out.factor_b, out.interaction].into_iter().flatten() {
        close("F", e.outcome.statistic, 0.0, 0.0)?;
        close("p", e.outcome.p_value, 1.0, 0.0)?;
    }
    Ok(())
}

pub fn two_way_empty_cell() -> Check {
    let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let a = ["p", "p", "q", "q", "p", "q"];
    let b = ["u", "u", "u", "u", "v", "u"];
    ensure(
        matches!(two_way_anova(&y, &a, &b), Err(statlab::StatError::InvalidDesign(_))),
        "empty (q, v) cell must be an invalid design",
    )
}

// OLS.

pub fn ols_exact_fit() -> Check {
    let x1 = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
    let x2 = vec![1.0, 0.0, 1.0, 3.0, 2.0, 2.0];
    let y: Vec<f64> = (0..6).map(|i| 1.5 - 2.0 * x1[i] + 0.25 * x2[i]).collect();
    let d = DesignMatrix::with_intercept(vec![("x1", x1), ("x2", x2)]).map_err(err)?;
    let fit = ols_regression(&y, &d).map_err(err)?;
    for (c, want) in fit.coefficients.iter().zip([1.5, -2.0, 0.25]) {
        close(&c.name, c.beta, want, 1e-10)?;
        ensure(c.se < 1e-7 && c.ci_high - c.ci_low < 1e-6, "degenerate CI expected")?;
        ensure(c.ci_low <= c.beta && c.beta <= c.ci_high, "CI must contain beta")?;
    }
    close("rss", fit.residual_sum_sq, 0.0, 1e-18)
}

pub fn ols_five_point() -> Check {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y = [2.0, 4.1, 5.9, 8.3, 9.6];
    let (mx, my) = (mean(&x), mean(&y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum();
    let s2 = rss / 3.0;
    let se_slope = (s2 / sxx).sqrt();
    let se_icept = (s2 * (1.0 / 5.0 + mx * mx / sxx)).sqrt();
    let d = DesignMatrix::with_intercept(vec![("x", x.to_vec())]).map_err(err)?;
    let fit = ols_regression(&y, &d).map_err(err)?;
    let (c0, c1) = (&fit.coefficients[0], &fit.coefficients[1]);
    close("slope", c1.beta, slope, 1e-12)?;
    close("intercept", c0.beta, icept, 1e-12)?;
    close("se slope", c1.se, se_slope, 1e-12)?;
    close("se intercept", c0.se, se_icept, 1e-12)?;
    // t(3) 0.975 quantile
    let t3 = 3.182446305284263;
    close("ci low", c1.ci_low, slope - t3 * se_slope, 1e-9)?;
    // closed-form t(3) tail
    let t = c1.t.abs();
    let cdf = 0.5 + (t / (3f64.sqrt() * (1.0 + t * t / 3.0)) + (t / 3f64.sqrt()).atan()) / std::f64::consts::PI;
    let p = 2.0 * (1.0 - cdf);
    close("p slope", c1.p_value, p, 1e-8)
}

pub fn ols_permutation_invariance() -> Check {
    let x1: Vec<f64> = (0..12).map(|i| (i * 5 % 7) as f64).collect();
    let x2: Vec<f64> = (0..12).map(|i| (i * 3 % 5) as f64 * 0.5).collect();
    let y: Vec<f64> = (0..12).map(|i| 1.0 + 0.3 * x1[i] - 0.7 * x2[i] + ((i * 7 % 4) as f64 - 1.5) * 0.2).collect();
    let d = DesignMatrix::with_intercept(vec![("x1", x1), ("x2", x2)]).map_err(err)?;
    let base = ols_regression(&y, &d).map_err(err)?;
    let order: Vec<usize> = vec![5, 11, 0, 3, 8, 1, 10, 2, 7, 4, 9, 6];
    let yp: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let perm = ols_regression(&yp, &d.permuted(&order)).map_err(err)?;
    for (a, b) in base.coefficients.iter().zip(&perm.coefficients) {
        close("beta", a.beta, b.beta, 1e-12)?;
        close("se", a.se, b.se, 1e-12)?;
        close("p", a.p_value, b.p_value, 1e-12)?;
    }
    Ok(())
}

// Distributions.

pub fn cdf_normal_symmetry() -> Check {
    close("Φ(0)", Distribution::Normal.cdf(0.0), 0.5, 0.0)
}

pub fn cdf_against_integration() -> Check {
    let cases: [(Distribution, f64); 12] = [
        (Distribution::Normal, 1.3),
        (Distribution::Normal, -2.2),
        (Distribution::StudentT { df: 3.0 }, 1.7),
        (Distribution::StudentT { df: 12.5 }, -0.8),
        (Distribution::StudentT { df: 40.0 }, 2.4),
        (Distribution::FisherF { df1: 3.0, df2: 10.0 }, 2.1),
        (Distribution::FisherF { df1: 2.0, df2: 7.3 }, 0.6),
        (Distribution::FisherF { df1: 5.0, df2: 50.0 }, 1.4),
        (Distribution::ChiSquared { df: 7.0 }, 3.3),
        (Distribution::ChiSquared { df: 1.0 }, 2.5),
        (Distribution::FisherF { df1: 1.0, df2: 9.0 }, 3.1),
        (Distribution::ChiSquared { df: 15.0 }, 22.0),
    ];
    for (dist, x) in cases {
        let want = match dist {
            Distribution::Normal => {
                0.5 + x.signum() * simpson(dnorm, 0.0, x.abs(), 20000)
            }
            Distribution::StudentT { df } => {
                0.5 + x.signum() * simpson(|u| t_density(df, u), 0.0, x.abs(), 20000)
            }
            // substitute x = u² to tame the density at the origin
            Distribution::FisherF { df1, df2 } => f_cdf_oracle(df1, df2, x),
            Distribution::ChiSquared { df } => chi2_cdf_oracle(df, x),
            Distribution::StudentizedRange { .. } => unreachable!(),
        };
        close(&format!("{dist:?} at {x}"), dist.cdf(x), want, 1e-8)?;
        close(&format!("{dist:?} sf"), dist.sf(x), 1.0 - want, 1e-8)?;
    }
    Ok(())
}

pub fn cdf_studentized_range() -> Check {
    for (q, k, df) in [(3.5, 3.0, 10.0), (2.0, 4.0, 20.0), (4.5, 5.0, 5.0), (3.0, 4.0, 1136.0), (5.0, 6.0, 3.0)] {
        let got = Distribution::StudentizedRange { groups: k, df }.cdf(q);
        close(&format!("ptukey({q}, {k}, {df})"), got, ptukey_oracle(q, k, df), 1e-4)?;
    }
    // k = 2: the range of two normals is |Z1 − Z2| ~ √2·|Z| under infinite df
    let got = Distribution::StudentizedRange { groups: 2.0, df: f64::INFINITY }.cdf(2.0);
    close("ptukey(2, 2, ∞)", got, 2.0 * phi(2.0 / 2f64.sqrt()) - 1.0, 1e-8)
}

pub fn cdf_t_normal_limit() -> Check {
    let t = Distribution::StudentT { df: 1e6 }.cdf(1.96);
    close("t(1e6) vs Φ at 1.96", t, phi(1.96), 1e-4)
}

pub fn cdf_f_t_identity() -> Check {
    for df in [1.0, 3.0, 7.5, 30.0, 2996.0] {
        for t in [0.1, 0.5, 1.2, 2.0, 3.7] {
            let f = Distribution::FisherF { df1: 1.0, df2: df }.cdf(t * t);
            let tt = 2.0 * Distribution::StudentT { df }.cdf(t) - 1.0;
            close(&format!("F(1,{df}) at {t}²"), f, tt, 1e-8)?;
            let q = Distribution::StudentT { df }.quantile(0.975);
            let fq = Distribution::FisherF { df1: 1.0, df2: df }.cdf(q * q);
            close("F at t-quantile²", fq, 0.95, 1e-8)?;
        }
    }
    Ok(())
}

pub fn cdf_invalid_params() -> Check {
    ensure(statlab::distribution_cdf(Distribution::StudentT { df: -1.0 }, 0.0).is_err(), "negative df")?;
    ensure(
        statlab::distribution_cdf(Distribution::FisherF { df1: 0.0, df2: 3.0 }, 1.0).is_err(),
        "zero df1",
    )?;
    ensure(
        statlab::distribution_cdf(Distribution::StudentizedRange { groups: 1.0, df: 3.0 }, 1.0).is_err(),
        "one group",
    )
}

// Scale equivariance on the k-sample and two-sample tests.

pub fn scale_equivariance() -> Check {
    let s = groups(&WELCH_GROUPS.iter().map(|(l, v)| (*l, &v[..])).collect::<Vec<_>>());
    for c in [0.01, 2.0, 1e4] {
        let sc = s.scaled(c);
        let (x, y) = (welch_anova(&s).map_err(err)?, welch_anova(&sc).map_err(err)?);
        close("welch F", x.statistic, y.statistic, 1e-9 * x.statistic)?;
        close("welch p", x.p_value, y.p_value, 1e-9)?;
        close("eta2", x.effect_size.unwrap().value, y.effect_size.unwrap().value, 1e-12)?;
        let (x, y) = (levene(&s).map_err(err)?, levene(&sc).map_err(err)?);
        close("levene W", x.statistic, y.statistic, 1e-9 * x.statistic)?;
        let a = &s.groups()[0].1;
        let b = &s.groups()[1].1;
        let (x, y) = (
            welch_t(a, b).map_err(err)?,
            welch_t(&sc.groups()[0].1, &sc.groups()[1].1).map_err(err)?,
        );
        close("t", x.statistic, y.statistic, 1e-9)?;
        close("d", x.effect_size.unwrap().value, y.effect_size.unwrap().value, 1e-9)?;
        let (x, y) = (
            mann_whitney_u(a, b).map_err(err)?,
            mann_whitney_u(&sc.groups()[0].1, &sc.groups()[1].1).map_err(err)?,
        );
        close("U", x.outcome.statistic, y.outcome.statistic, 0.0)?;
        close("MW p", x.outcome.p_value, y.outcome.p_value, 0.0)?;
    }
    Ok(())
}

/// Every named check, in reporting order.
pub fn all() -> Vec<Named> {
    vec![
        ("welch_anova hand computation", welch_anova_hand),
        ("welch_anova constant groups", welch_anova_identical_constants),
        ("welch_anova two groups = welch_t squared", welch_anova_equals_t_squared),
        ("levene hand 2x4", levene_hand_2x4),
        ("levene shift invariance", levene_shift_invariance),
        ("levene single group", levene_single_group),
        ("shapiro_wilk normal grid", shapiro_normal_grid),
        ("shapiro_wilk bimodal", shapiro_bimodal),
        ("shapiro_wilk reference values", shapiro_reference_values),
        ("shapiro_wilk n out of range", shapiro_n_out_of_range),
        ("tukey_hsd hand q and integrated p", tukey_hand),
        ("tukey_hsd identical groups", tukey_identical_groups),
        ("tukey_hsd antisymmetry", tukey_antisymmetry),
        ("welch_t hand computation", welch_t_hand),
        ("welch_t equal samples", welch_t_equal_samples),
        ("welch_t swap", welch_t_swap),
        ("welch_t degenerate", welch_t_degenerate),
        ("mann_whitney pair enumeration", mann_whitney_pairs),
        ("mann_whitney equal samples", mann_whitney_equal_samples),
        ("mann_whitney exact = exhaustive permutation", mann_whitney_exact_vs_enumeration),
        ("mann_whitney exact vs normal at 15x15", mann_whitney_exact_vs_normal),
        ("mann_whitney normal path reference", mann_whitney_normal_reference),
        ("poisson_glm intercept only", glm_intercept_only),
        ("poisson_glm synthetic recovery", glm_synthetic_recovery),
        ("poisson_glm two-group IRR", glm_two_group_irr),
        ("poisson_glm singular design", glm_singular_design),
        ("two_way_anova hand 2x2", two_way_hand_2x2),
        ("two_way_anova additive data", two_way_additive),
        ("two_way_anova constant factor = one-way", two_way_constant_factor_is_one_way),
        ("two_way_anova constant y", two_way_constant_y),
        ("two_way_anova empty cell", two_way_empty_cell),
        ("ols exact fit", ols_exact_fit),
        ("ols five-point closed form", ols_five_point),
        ("ols permutation invariance", ols_permutation_invariance),
        ("cdf normal symmetry", cdf_normal_symmetry),
        ("cdf vs numerical integration", cdf_against_integration),
        ("cdf studentized range vs double integration", cdf_studentized_range),
        ("cdf t normal limit", cdf_t_normal_limit),
        ("cdf F/t identity", cdf_f_t_identity),
        ("cdf invalid params", cdf_invalid_params),
        ("scale equivariance", scale_equivariance),
    ]
}

/// Identity checks called out separately by the acceptance suite.
pub fn identities() -> Vec<Named> {
    vec![
        ("welch_anova(2 groups) = welch_t^2", welch_anova_equals_t_squared),
        ("F(1, df) / t CDF identity", cdf_f_t_identity),
        ("Poisson two-group IRR = ratio of means", glm_two_group_irr),
    ]
}
