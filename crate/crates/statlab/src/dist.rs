//! Reference distributions used for p-values and critical values.

use serde::{Deserialize, Serialize};

use crate::special::{
    beta_reg, beta_reg_complement, gamma_p, gamma_q, norm_cdf, norm_pdf, norm_quantile,
    norm_sf, stirling_correction,
};
use crate::{StatError, StatResult};

/// A continuous reference distribution with validated parameters.
///
/// Degrees of freedom may be `f64::INFINITY` for the t and studentized
/// range distributions, in which case the normal limit is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Normal,
    StudentT { df: f64 },
    FisherF { df1: f64, df2: f64 },
    ChiSquared { df: f64 },
    StudentizedRange { groups: f64, df: f64 },
}

fn positive(name: &str, v: f64) -> StatResult<()> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(StatError::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn finite_positive(name: &str, v: f64) -> StatResult<()> {
    positive(name, v)?;
    if v.is_finite() {
        Ok(())
    } else {
        Err(StatError::InvalidArgument(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

impl Distribution {
    pub fn student_t(df: f64) -> StatResult<Self> {
        positive("df", df)?;
        Ok(Self::StudentT { df })
    }

    pub fn fisher_f(df1: f64, df2: f64) -> StatResult<Self> {
        finite_positive("df1", df1)?;
        finite_positive("df2", df2)?;
        Ok(Self::FisherF { df1, df2 })
    }

    pub fn chi_squared(df: f64) -> StatResult<Self> {
        finite_positive("df", df)?;
        Ok(Self::ChiSquared { df })
    }

    pub fn studentized_range(groups: f64, df: f64) -> StatResult<Self> {
        if groups.is_nan() || groups < 2.0 || !groups.is_finite() {
            return Err(StatError::InvalidArgument(format!(
                "studentized range needs at least 2 groups, got {groups}"
            )));
        }
        positive("df", df)?;
        Ok(Self::StudentizedRange { groups, df })
    }

    /// Re-validates parameters of a value built directly from the enum.
    pub fn validate(&self) -> StatResult<()> {
        match *self {
            Self::Normal => Ok(()),
            Self::StudentT { df } => Self::student_t(df).map(|_| ()),
            Self::FisherF { df1, df2 } => Self::fisher_f(df1, df2).map(|_| ()),
            Self::ChiSquared { df } => Self::chi_squared(df).map(|_| ()),
            Self::StudentizedRange { groups, df } => {
                Self::studentized_range(groups, df).map(|_| ())
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            Self::Normal => norm_cdf(x),
            Self::StudentT { df } => t_cdf(x, df),
            Self::FisherF { df1, df2 } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    beta_reg(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2))
                }
            }
            Self::ChiSquared { df } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_p(df / 2.0, x / 2.0)
                }
            }
            Self::StudentizedRange { groups, df } => ptukey(x, groups, df),
        }
    }

    /// Upper tail `P(X > x)`, evaluated directly where that is more accurate.
    pub fn sf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            Self::Normal => norm_sf(x),
            Self::StudentT { df } => t_cdf(-x, df),
            Self::FisherF { df1, df2 } => {
                if x <= 0.0 {
                    1.0
                } else if x.is_infinite() {
                    0.0
                } else {
                    beta_reg_complement(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2))
                }
            }
            Self::ChiSquared { df } => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_q(df / 2.0, x / 2.0)
                }
            }
            Self::StudentizedRange { .. } => (1.0 - self.cdf(x)).clamp(0.0, 1.0),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if !(0.0..=1.0).contains(&p) {
            return f64::NAN;
        }
        match *self {
            Self::Normal => norm_quantile(p),
            Self::StudentT { df } if df.is_infinite() => norm_quantile(p),
            Self::StudentT { .. } => {
                if p == 0.5 {
                    return 0.0;
                }
                let guess = norm_quantile(p);
                invert_increasing(|x| self.cdf(x), p, guess - 1.0, guess + 1.0, None)
            }
            Self::FisherF { .. } | Self::ChiSquared { .. } => {
                invert_increasing(|x| self.cdf(x), p, 0.0, 4.0, Some(0.0))
            }
            Self::StudentizedRange { .. } => {
                invert_increasing(|x| self.cdf(x), p, 0.0, 6.0, Some(0.0))
            }
        }
    }
}

/// `distribution_cdfs(kind, params, x)`: validates parameters, then evaluates.
pub fn distribution_cdf(dist: Distribution, x: f64) -> StatResult<f64> {
    dist.validate()?;
    if x.is_nan() {
        return Err(StatError::InvalidArgument("x is NaN".into()));
    }
    Ok(dist.cdf(x))
}

fn t_cdf(x: f64, df: f64) -> f64 {
    if df.is_infinite() {
        return norm_cdf(x);
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let z = df / (df + x * x);
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, z);
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Solves `f(x) = target` for an increasing `f`, expanding the bracket as
/// needed, then refining with the Illinois variant of regula falsi.
fn invert_increasing<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    floor: Option<f64>,
) -> f64 {
    if target <= 0.0 {
        return floor.unwrap_or(f64::NEG_INFINITY);
    }
    if target >= 1.0 {
        return f64::INFINITY;
    }
    let mut flo = f(lo) - target;
    let mut step = (hi - lo).max(1.0);
    while flo > 0.0 {
        hi = lo;
        lo = match floor {
            Some(fl) if lo - step <= fl => fl,
            _ => lo - step,
        };
        step *= 2.0;
        flo = f(lo) - target;
        if floor == Some(lo) && flo > 0.0 {
            return lo;
        }
    }
    let mut fhi = f(hi) - target;
    while fhi < 0.0 {
        lo = hi;
        flo = fhi;
        hi += step;
        step *= 2.0;
        fhi = f(hi) - target;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut side = 0i8;
    let mut x = lo;
    for _ in 0..200 {
        x = (lo * fhi - hi * flo) / (fhi - flo);
        if !x.is_finite() || x <= lo || x >= hi {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x) - target;
        if fx == 0.0 || (hi - lo).abs() < 1e-13 * x.abs().max(1.0) {
            break;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Studentized range
// ---------------------------------------------------------------------------

const GL_NODES: [f64; 10] = [
    -0.973_906_528_517_171_7,
    -0.865_063_366_688_984_5,
    -0.679_409_568_299_024_4,
    -0.433_395_394_129_247_2,
    -0.148_874_338_981_631_2,
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 10] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
    0.295_524_224_714_752_87,
    0.269_266_719_309_996_35,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_14,
];

/// Composite 10-point Gauss-Legendre over `[a, b]` split into `panels`.
pub(crate) fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let mut acc = 0.0;
        for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            acc += weight * f(mid + half * node);
        }
        total += acc * half;
    }
    total
}

/// Distribution of the range of `k` iid standard normals: `P(R ≤ w)`.
fn normal_range_cdf(w: f64, k: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    // k ∫ φ(z) [Φ(z) − Φ(z − w)]^(k−1) dz ; the integrand lives in [-8.5, 8.5 + w]
    let lo = -8.5;
    let hi = 8.5 + w.min(17.0);
    let panels = (hi - lo).ceil() as usize;
    let integral = gauss_legendre(
        |z| {
            let inner = norm_cdf(z) - norm_cdf(z - w);
            if inner <= 0.0 {
                0.0
            } else {
                norm_pdf(z) * inner.powf(k - 1.0)
            }
        },
        lo,
        hi,
        panels,
    );
    (k * integral).clamp(0.0, 1.0)
}

/// Log density of `S = sqrt(χ²_ν / ν)`.
fn ln_scaled_chi_density(s: f64, df: f64) -> f64 {
    if s <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let h = 0.5 * df;
    // (ν/2)ln(ν/2) − lnΓ(ν/2) rewritten via the Stirling remainder to avoid
    // cancellation for large ν.
    let head = 0.5 * h.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - stirling_correction(h);
    head + h * (1.0 - s * s + 2.0 * s.ln()) - s.ln() + std::f64::consts::LN_2
}

fn ptukey(q: f64, k: f64, df: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    if df.is_infinite() || df > 1e7 {
        return normal_range_cdf(q, k);
    }
    let sd = (0.5 / df).sqrt();
    let lo = (1.0 - 14.0 * sd).max(0.0);
    let hi = 1.0 + 14.0 * sd + if df < 4.0 { 6.0 } else { 0.0 };
    // GL10 panels about two standard deviations wide
    let panels = (((hi - lo) / (2.0 * sd)).ceil() as usize).max(16);
    let v = gauss_legendre(
        |s| {
            let lf = ln_scaled_chi_density(s, df);
            if lf < -700.0 {
                0.0
            } else {
                lf.exp() * normal_range_cdf(q * s, k)
            }
        },
        lo,
        hi,
        panels,
    );
    v.clamp(0.0, 1.0)
}
