//! Closed-form reference results.

/// Modified Bessel function of the second kind, order one.
///
/// Polynomial approximations of Abramowitz & Stegun 9.8.3, 9.8.7 and 9.8.8;
/// relative error below 3e-7 for `x > 0`.
pub fn bessel_k1(x: f64) -> f64 {
    assert!(x > 0.0, "K1 is defined for positive arguments");
    if x <= 2.0 {
        let t = x / 3.75;
        let t2 = t * t;
        let i1 = x
            * (0.5
                + t2 * (0.878_905_94
                    + t2 * (0.514_988_69
                        + t2 * (0.150_849_34
                            + t2 * (0.026_587_33 + t2 * (0.003_015_32 + t2 * 0.000_324_11))))));
        let y = x * x / 4.0;
        let poly = 1.0
            + y * (0.154_431_44
                + y * (-0.672_785_79
                    + y * (-0.181_568_97
                        + y * (-0.019_194_02 + y * (-0.001_104_04 + y * (-0.000_046_86))))));
        ((x / 2.0).ln() * x * i1 + poly) / x
    } else {
        let y = 2.0 / x;
        let poly = 1.253_314_14
            + y * (0.234_986_19
                + y * (-0.036_556_20
                    + y * (0.015_042_68
                        + y * (-0.007_803_53 + y * (0.003_256_14 + y * (-0.000_682_45))))));
        (-x).exp() / x.sqrt() * poly
    }
}

/// `P[X·Y ≥ z]` for independent unit-mean exponential `X`, `Y`: the success
/// probability of a double-Rayleigh link at normalized threshold `z`,
/// equal to `2√z·K1(2√z)`.
pub fn double_rayleigh_success(z: f64) -> f64 {
    assert!(z >= 0.0);
    if z == 0.0 {
        return 1.0;
    }
    let a = 2.0 * z.sqrt();
    a * bessel_k1(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_reference_values() {
        // Tabulated K1 values (A&S table 9.8).
        for (x, want) in [
            (0.1, 9.853_844_780_870_606),
            (0.5, 1.656_441_120_003_301),
            (1.0, 0.601_907_230_197_234_6),
            (2.0, 0.139_865_881_816_522_4),
            (5.0, 0.004_044_613_445_452_164),
        ] {
            let got = bessel_k1(x);
            assert!((got / want - 1.0).abs() < 3e-7, "K1({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn success_limits() {
        assert_eq!(double_rayleigh_success(0.0), 1.0);
        assert!((double_rayleigh_success(1e-12) - 1.0).abs() < 1e-4);
        assert!(double_rayleigh_success(50.0) < 1e-5);
        let mut prev = 1.0;
        for i in 1..200 {
            let p = double_rayleigh_success(i as f64 * 0.05);
            assert!(p < prev);
            prev = p;
        }
    }
}
