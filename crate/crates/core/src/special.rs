//! Log-gamma, stable log-gamma ratios, Pochhammer symbols and binomials.
//!
//! The coefficient sequences of the weighted Bergman kernels involve ratios
//! of gamma functions at arguments up to ~10^6.  Naive `lgamma(a) - lgamma(b)`
//! loses up to eight digits to cancellation there, so the ratio is computed
//! directly from a combined Stirling expansion.

/// Lanczos approximation of ln Γ(x) for x > 0 (g = 7, 9 terms).
#[allow(clippy::excessive_precision)]
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    assert!(x > 0.0, "ln_gamma requires a positive argument, got {x}");
    // reflection not needed: all callers stay on the positive axis
    let z = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

// Bernoulli-number coefficients B_{2k}/(2k(2k-1)) of the Stirling series.
const STIRLING: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
];

/// ln( Γ(x + d) / Γ(x) ) for x > 0, x + d > 0, computed without cancellation.
///
/// For large x the two leading Stirling terms are combined analytically:
/// (x+d-1/2)ln(x+d) - (x-1/2)ln x - d = (x-1/2)ln1p(d/x) + d(ln(x+d) - 1).
pub fn ln_gamma_ratio(x: f64, d: f64) -> f64 {
    assert!(
        x > 0.0 && x + d > 0.0,
        "ln_gamma_ratio requires positive arguments, got x={x}, d={d}"
    );
    if d == 0.0 {
        return 0.0;
    }
    let mut x = x;
    let mut shift = 0.0;
    // Γ(x+d)/Γ(x) = (x/(x+d)) · Γ(x+1+d)/Γ(x+1)
    while x < 16.0 {
        shift += (x / (x + d)).ln();
        x += 1.0;
    }
    let y = x + d;
    let mut s = (x - 0.5) * (d / x).ln_1p() + d * (y.ln() - 1.0);
    let (xi, yi) = (1.0 / x, 1.0 / y);
    let (mut xp, mut yp) = (xi, yi);
    for c in STIRLING {
        s += c * (yp - xp);
        xp *= xi * xi;
        yp *= yi * yi;
    }
    shift + s
}

/// Rising factorial (x)_k = x (x+1) ... (x+k-1); (x)_0 = 1.
pub fn pochhammer(x: f64, k: u32) -> f64 {
    let mut p = 1.0;
    for i in 0..k {
        p *= x + i as f64;
    }
    p
}

/// Falling factorial n! / (n-k)! for k <= n.
pub fn falling(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let mut p = 1.0;
    for i in 0..k {
        p *= (n - i) as f64;
    }
    p
}

/// ln( n! / (n-k)! ) for k <= n, stable for large n.
pub fn ln_falling(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 {
        return 0.0;
    }
    if n < 40 {
        falling(n, k).ln()
    } else {
        ln_gamma_ratio((n - k) as f64 + 1.0, k as f64)
    }
}

/// Binomial coefficient as a float (small arguments only).
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut p = 1.0;
    for i in 0..k {
        p = p * (n - i) as f64 / (i + 1) as f64;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-13);
        assert!(ln_gamma(2.0).abs() < 1e-13);
        // Γ(0.5) = sqrt(pi)
        assert!(rel(ln_gamma(0.5), 0.5 * std::f64::consts::PI.ln()) < 1e-13);
        // Γ(11) = 10!
        assert!(rel(ln_gamma(11.0), (3_628_800.0f64).ln()) < 1e-14);
    }

    #[test]
    fn ratio_matches_direct_products() {
        for &(x, d) in &[(3.0, 4.0), (0.7, 2.0), (5.5, -3.0), (12.0, 0.5)] {
            let direct = ln_gamma(x + d) - ln_gamma(x);
            assert!(
                (ln_gamma_ratio(x, d) - direct).abs() < 1e-12,
                "x={x} d={d}"
            );
        }
    }

    #[test]
    fn ratio_is_stable_for_large_arguments() {
        // Γ(n+λ)/Γ(n+1) ~ n^{λ-1}: check against the exact product at n=10^6.
        let n = 1_000_000.0;
        let lam = 2.5;
        // product form of (n+1)_{λ-1} is unavailable for fractional λ; use the
        // recurrence ln Γ(n+λ)-ln Γ(n+1) = ln Γ(n+λ)-ln Γ(n+λ-1)+... instead:
        // compare against the asymptotic with the first correction, which is
        // accurate to ~1e-13 at n=10^6.
        let got = ln_gamma_ratio(n + 1.0, lam - 1.0);
        let asym = (lam - 1.0) * (n.ln() + (lam) / (2.0 * n));
        assert!((got - asym).abs() < 1e-9, "got {got} asym {asym}");
    }

    #[test]
    fn pochhammer_and_binomial() {
        assert_eq!(pochhammer(3.0, 0), 1.0);
        assert_eq!(pochhammer(2.0, 3), 24.0);
        assert_eq!(falling(7, 2), 42.0);
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert!((ln_falling(100, 3) - (100.0f64 * 99.0 * 98.0).ln()).abs() < 1e-12);
    }
}
