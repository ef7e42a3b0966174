//! Special functions: error functions, normal tails, incomplete gamma.

#[allow(unused_imports)]
use num_traits::Float;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const LN_2: f64 = core::f64::consts::LN_2;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Above this argument `erfcx` switches from `exp(x^2) erfc(x)` to a continued
/// fraction. Corresponds to a standard-normal abscissa of 8.
pub const ERFCX_SWITCH: f64 = 8.0 / core::f64::consts::SQRT_2;

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < ERFCX_SWITCH {
        return (x * x).exp() * erfc(x);
    }
    // erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    // evaluated with the modified Lentz algorithm.
    let tiny = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for j in 1..500 {
        let a = j as f64 * 0.5;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (SQRT_PI * f)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / core::f64::consts::SQRT_2)
}

/// Upper tail `1 - Phi(x)`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / core::f64::consts::SQRT_2)
}

/// `ln(1 - Phi(x))`, accurate far into both tails.
pub fn ln_norm_sf(x: f64) -> f64 {
    if x < 0.0 {
        (-norm_cdf(x)).ln_1p()
    } else if x <= 8.0 {
        norm_sf(x).ln()
    } else {
        let s = x / core::f64::consts::SQRT_2;
        erfcx(s).ln() - LN_2 - s * s
    }
}

/// Normal hazard `phi(x) / (1 - Phi(x))`.
pub fn norm_hazard(x: f64) -> f64 {
    if x > 0.0 {
        // phi / Q = 2 / (sqrt(2 pi) erfcx(x / sqrt 2))
        core::f64::consts::FRAC_2_SQRT_PI / (core::f64::consts::SQRT_2 * erfcx(x / core::f64::consts::SQRT_2))
    } else {
        norm_pdf(x) / norm_sf(x)
    }
}

fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

const AS241_A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const AS241_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const AS241_C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const AS241_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const AS241_E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const AS241_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// Wichura's AS241 rational approximation of the standard normal quantile.
/// `tail` is `min(p, 1 - p)` supplied directly so upper-tail callers keep
/// full precision; `upper` selects the sign.
fn as241(tail: f64, upper: bool) -> f64 {
    let q = if upper { 0.5 - tail } else { tail - 0.5 };
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&AS241_A, r) / poly(&AS241_B, r);
    }
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&AS241_C, r) / poly(&AS241_D, r)
    } else {
        r -= 5.0;
        poly(&AS241_E, r) / poly(&AS241_F, r)
    };
    if upper {
        x
    } else {
        -x
    }
}

/// Standard normal quantile `Phi^{-1}(p)` for `p` in (0, 1).
pub fn inv_norm_cdf(p: f64) -> f64 {
    if p > 0.5 {
        inv_norm_sf(1.0 - p)
    } else {
        as241(p, false)
    }
}

/// Inverse of the upper tail: returns `x` with `1 - Phi(x) = q`.
pub fn inv_norm_sf(q: f64) -> f64 {
    if q > 0.5 {
        -inv_norm_sf(1.0 - q)
    } else {
        as241(q, true)
    }
}

/// `ln Q(a, x)` where `Q` is the regularized upper incomplete gamma function.
pub fn ln_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        let p = gamma_p_series(a, x);
        return (-p).ln_1p();
    }
    // Continued fraction (modified Lentz) for Gamma(a, x).
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    -x + a * x.ln() - ln_gamma(a) + h.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    ln_gamma_q(a, x).exp()
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a + 1.0)).exp() * sum
}

/// Generalized harmonic number `zeta(s; m) = sum_{j=1}^m j^{-s}` for s = 1.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).rev().map(|j| 1.0 / j as f64).sum()
}

/// `sum_{j=1}^m 1/j^2`.
pub fn harmonic2(m: usize) -> f64 {
    (1..=m).rev().map(|j| 1.0 / (j as f64 * j as f64)).sum()
}

/// Numerically stable `ln(sum(exp(v)))`.
pub fn log_sum_exp<I: IntoIterator<Item = f64> + Clone>(values: I) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}
