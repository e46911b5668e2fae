//! Test-only oracles: adaptive quadrature and goodness-of-fit statistics.
//! Nothing here calls into the library's numerical routines.
#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Adaptive Gauss–Kronrod (7/15) integral of `f` over `[a, b]` to relative
/// tolerance `rel`. Global scheme: always bisect the segment with the
/// largest error estimate, with a hard cap on the number of segments.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> f64 {
    const PIECES: usize = 64;
    const MAX_SEGMENTS: usize = 200_000;
    let h = (b - a) / PIECES as f64;
    // (a, b, value, error)
    let mut segments: Vec<(f64, f64, f64, f64)> = (0..PIECES)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (k, e) = kronrod(&f, lo, hi);
            (lo, hi, k, e)
        })
        .collect();
    loop {
        let total: f64 = segments.iter().map(|s| s.2).sum();
        let err: f64 = segments.iter().map(|s| s.3).sum();
        // the 7-point error estimate is far more pessimistic than the
        // 15-point result, so a round-off floor is needed as well
        if err <= rel * total.abs() || err <= 1e-15 * total.abs() || segments.len() >= MAX_SEGMENTS
        {
            return total;
        }
        // split the worst decile at once to keep the loop short
        segments.sort_by(|x, y| y.3.total_cmp(&x.3));
        let split = (segments.len() / 10).max(1);
        let worst: Vec<_> = segments.drain(..split).collect();
        for (lo, hi, _, _) in worst {
            let m = 0.5 * (lo + hi);
            let (k1, e1) = kronrod(&f, lo, m);
            let (k2, e2) = kronrod(&f, m, hi);
            segments.push((lo, m, k1, e1));
            segments.push((m, hi, k2, e2));
        }
    }
}

/// `∫_0^∞ f(t) dt` through `t = e^u`; `scale` is the integrand's natural size.
pub fn integrate_positive<F: Fn(f64) -> f64>(f: F, scale: f64, rel: f64) -> f64 {
    let c = scale.ln();
    integrate(
        |u| {
            let t = u.exp();
            let v = f(t) * t;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        c - 60.0,
        c + 7.0,
        rel,
    )
}

/// `∫_0^1 f(p) dp` through `p = 1/(1 + e^{-u})`, given `ln f`.
pub fn integrate_unit_log<F: Fn(f64, f64, f64) -> f64>(log_f: F, rel: f64) -> f64 {
    integrate(
        |u: f64| {
            // ln p and ln(1 - p) without cancellation
            let ln_p = -(-u).exp().ln_1p();
            let ln_q = -u.exp().ln_1p();
            let p = ln_p.exp();
            (log_f(p, ln_p, ln_q) + ln_p + ln_q).exp()
        },
        -400.0,
        400.0,
        rel,
    )
}

/// `E1(x) = ∫_x^∞ e^{-t}/t dt` by quadrature.
pub fn e1_oracle(x: f64) -> f64 {
    (-x).exp() * integrate_positive(|s| (-s).exp() / (x + s), 1.0, 1e-14)
}

/// Kolmogorov–Smirnov distance between a sample and a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(mut sample: Vec<f64>, cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Critical KS distance at α ≈ 0.01.
pub fn ks_critical(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Pearson chi-square statistic for observed counts against probabilities.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn stderr_of_mean(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// `B(m,m) / ((n+1) C(n,y) B(m+y, m+n−y))` for integer `m`, as rising-factorial
/// ratios: `Π_{i<n}(2m+i) / (Π_{i<y}(m+i) Π_{i<n−y}(m+i) (n+1) C(n,y))`.
pub fn ex3_bayes_factor_oracle(n: u64, m: u64, y: u64) -> f64 {
    let mut ratio = 1.0f64;
    let (mut num, mut den1, mut den2) = (0u64, 0u64, 0u64);
    // interleave multiplications and divisions to stay near 1
    while num < n || den1 < y || den2 < n - y {
        if num < n {
            ratio *= (2 * m + num) as f64;
            num += 1;
        }
        if den1 < y {
            ratio /= (m + den1) as f64;
            den1 += 1;
        }
        if den2 < n - y {
            ratio /= (m + den2) as f64;
            den2 += 1;
        }
    }
    // (n + 1) C(n, y) as an exact integer
    let mut binom: u128 = 1;
    for i in 0..y as u128 {
        binom = binom * (n as u128 - i) / (i + 1);
    }
    ratio / ((n + 1) as f64 * binom as f64)
}
