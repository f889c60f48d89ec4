//! The four candidate latent distributions and the link functions they induce.
//!
//! A binary GLM here models `P(U = 1) = F(η)` with `η = z′β`, where `F` is the
//! CDF of a standardized latent distribution. The link is `g = F⁻¹`. Every
//! function in this module is pure and exact up to floating-point rounding;
//! clamping of fitted probabilities happens in the fitter, not here.

use std::f64::consts::{FRAC_1_PI, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `1 / sqrt(2π)`.
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;

/// Link family. All four distributions are standardized and parameter free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkSpec {
    /// Standard normal latent distribution.
    Probit,
    /// Standard logistic latent distribution.
    Logit,
    /// Standard Cauchy latent distribution.
    Cauchit,
    /// Standard (minimum) extreme-value latent distribution, `F(x) = 1 − exp(−eˣ)`.
    #[serde(rename = "cloglog")]
    CLogLog,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("link argument must be finite, got {0}")]
    NonFiniteArgument(f64),
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("unknown link family `{0}` (expected probit, logit, cauchit or cloglog)")]
    UnknownFamily(String),
}

impl LinkSpec {
    /// All families in the column order used by reports.
    pub const ALL: [LinkSpec; 4] = [
        LinkSpec::Probit,
        LinkSpec::Logit,
        LinkSpec::Cauchit,
        LinkSpec::CLogLog,
    ];

    /// Lower-case identifier accepted by [`FromStr`].
    pub fn name(self) -> &'static str {
        match self {
            LinkSpec::Probit => "probit",
            LinkSpec::Logit => "logit",
            LinkSpec::Cauchit => "cauchit",
            LinkSpec::CLogLog => "cloglog",
        }
    }

    /// Column heading used in rendered tables.
    pub fn heading(self) -> &'static str {
        match self {
            LinkSpec::Probit => "Probit",
            LinkSpec::Logit => "Logit",
            LinkSpec::Cauchit => "Cauchit",
            LinkSpec::CLogLog => "C-Log-Log",
        }
    }

    /// Whether `F(−x) = 1 − F(x)`.
    pub fn is_symmetric(self) -> bool {
        !matches!(self, LinkSpec::CLogLog)
    }

    /// Latent CDF `F(x)`.
    pub fn cdf(self, x: f64) -> Result<f64, LinkError> {
        check_finite(x)?;
        Ok(self.cdf_unchecked(x))
    }

    /// Latent density `F′(x)`.
    pub fn density(self, x: f64) -> Result<f64, LinkError> {
        check_finite(x)?;
        Ok(self.density_unchecked(x))
    }

    /// Inverse CDF `F⁻¹(p)`, i.e. the link function applied to a probability.
    pub fn quantile(self, p: f64) -> Result<f64, LinkError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(LinkError::ProbabilityOutOfRange(p));
        }
        Ok(match self {
            LinkSpec::Probit => normal_quantile(p),
            LinkSpec::Logit => (p / (1.0 - p)).ln(),
            LinkSpec::Cauchit => (PI * (p - 0.5)).tan(),
            LinkSpec::CLogLog => (-(-p).ln_1p()).ln(),
        })
    }

    /// Upper tail `1 − F(x)`, computed without cancellation.
    pub fn survival(self, x: f64) -> Result<f64, LinkError> {
        check_finite(x)?;
        Ok(self.survival_unchecked(x))
    }

    pub(crate) fn cdf_unchecked(self, x: f64) -> f64 {
        match self {
            LinkSpec::Probit => normal_cdf_pair(x).0,
            LinkSpec::Logit => logistic(x),
            LinkSpec::Cauchit => 0.5 + x.atan() * FRAC_1_PI,
            LinkSpec::CLogLog => -(-x.exp()).exp_m1(),
        }
    }

    pub(crate) fn survival_unchecked(self, x: f64) -> f64 {
        match self {
            LinkSpec::Probit => normal_cdf_pair(x).1,
            LinkSpec::Logit => logistic(-x),
            LinkSpec::Cauchit => 0.5 - x.atan() * FRAC_1_PI,
            LinkSpec::CLogLog => (-x.exp()).exp(),
        }
    }

    pub(crate) fn density_unchecked(self, x: f64) -> f64 {
        match self {
            LinkSpec::Probit => FRAC_1_SQRT_2PI * (-0.5 * x * x).exp(),
            LinkSpec::Logit => {
                // symmetric in x; evaluate on the side where exp cannot overflow
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            LinkSpec::Cauchit => FRAC_1_PI / (1.0 + x * x),
            LinkSpec::CLogLog => (x - x.exp()).exp(),
        }
    }
}

impl fmt::Display for LinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkSpec {
    type Err = LinkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "probit" => Ok(LinkSpec::Probit),
            "logit" => Ok(LinkSpec::Logit),
            "cauchit" => Ok(LinkSpec::Cauchit),
            "cloglog" => Ok(LinkSpec::CLogLog),
            _ => Err(LinkError::UnknownFamily(s.to_string())),
        }
    }
}

fn check_finite(x: f64) -> Result<(), LinkError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(LinkError::NonFiniteArgument(x))
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard normal `(Φ(x), 1 − Φ(x))`.
///
/// W. J. Cody's rational Chebyshev approximations (Math. Comp. 1969, as
/// revised in ACM TOMS Algorithm 715), on the three ranges `|x| ≤ 0.67449`,
/// `|x| ≤ √32` and beyond. The published maximal relative error is below
/// `1e-15` on each range, so the absolute error is well under `1e-12`.
/// Computing both tails together avoids `1 − Φ` cancellation.
pub(crate) fn normal_cdf_pair(x: f64) -> (f64, f64) {
    const A: [f64; 5] = [
        2.235_252_035_460_683_928_7,
        161.028_231_068_555_878_81,
        1_067.689_485_460_370_958_2,
        18_154.981_253_343_561_249,
        0.065_682_337_918_207_449_113,
    ];
    const B: [f64; 4] = [
        47.202_581_904_688_241_87,
        976.098_551_737_776_693_22,
        10_260.932_208_618_978_205,
        45_507.789_335_026_729_956,
    ];
    const C: [f64; 9] = [
        0.398_941_512_088_134_667_64,
        8.883_149_794_388_375_941_2,
        93.506_656_132_177_855_979,
        597.270_276_394_800_262_26,
        2_494.537_585_290_372_671_1,
        6_848.190_450_536_282_332_6,
        11_602.651_437_647_350_124,
        9_842.714_838_383_978_021_8,
        1.076_557_677_372_019_231_7e-8,
    ];
    const D: [f64; 8] = [
        22.266_688_044_328_115_691,
        235.387_901_782_624_998_61,
        1_519.377_599_407_554_805,
        6_485.558_298_266_760_755,
        18_615.571_640_885_098_091,
        34_900.952_721_145_977_266,
        38_912.003_286_093_271_411,
        19_685.429_676_859_990_727,
    ];
    const P: [f64; 6] = [
        0.215_898_534_057_956_99,
        0.127_401_161_160_247_363_9,
        0.022_235_277_870_649_807,
        0.001_421_619_193_227_893_466,
        2.911_287_495_116_879_2e-5,
        0.023_073_441_764_940_173_03,
    ];
    const Q: [f64; 5] = [
        1.284_260_096_144_911_21,
        0.468_238_212_480_865_118,
        0.065_988_137_868_928_551_5,
        0.003_782_396_332_027_582_44,
        7.297_515_550_839_662_05e-5,
    ];
    const SPLIT: f64 = 0.674_489_75;
    const SQRT_32: f64 = 5.656_854_249_492_380_195_2;

    let y = x.abs();
    if y <= SPLIT {
        let xsq = if y > f64::EPSILON * 0.5 { x * x } else { 0.0 };
        let mut num = A[4] * xsq;
        let mut den = xsq;
        for i in 0..3 {
            num = (num + A[i]) * xsq;
            den = (den + B[i]) * xsq;
        }
        let t = x * (num + A[3]) / (den + B[3]);
        return (0.5 + t, 0.5 - t);
    }

    let tail = if y <= SQRT_32 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        gaussian_scaled(y, (num + C[7]) / (den + D[7]))
    } else {
        let xsq = 1.0 / (x * x);
        let mut num = P[5] * xsq;
        let mut den = xsq;
        for i in 0..4 {
            num = (num + P[i]) * xsq;
            den = (den + Q[i]) * xsq;
        }
        let r = xsq * (num + P[4]) / (den + Q[4]);
        gaussian_scaled(y, (FRAC_1_SQRT_2PI - r) / y)
    };

    if x > 0.0 {
        (1.0 - tail, tail)
    } else {
        (tail, 1.0 - tail)
    }
}

/// `exp(−y²/2) · factor`, splitting `y²` to keep the exponent exact.
fn gaussian_scaled(y: f64, factor: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq * 0.5).exp() * (-del * 0.5).exp() * factor
}

/// Standard normal quantile.
///
/// Starts from a rational approximation in P. J. Acklam's form (relative error
/// about `1e-9` in the centre, `1e-5` in the tails) and applies Newton steps
/// against [`normal_cdf_pair`] until the correction is below `1e-15`; one step
/// suffices in the centre, at most three in the far tails.
fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_671_010_286_470,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let lower_tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };

    let x0 = if p < P_LOW {
        lower_tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -lower_tail(1.0 - p)
    };

    // Newton on whichever tail is small, so the residual carries no cancellation.
    let mut x = x0;
    for _ in 0..4 {
        let (lower, upper) = normal_cdf_pair(x);
        let residual = if p < 0.5 { lower - p } else { (1.0 - p) - upper };
        let dens = FRAC_1_SQRT_2PI * (-0.5 * x * x).exp();
        if dens == 0.0 {
            break;
        }
        let step = residual / dens;
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}
