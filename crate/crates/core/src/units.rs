//! Physical constants (SI, exact 2019 values) and unit helpers.

pub const TWO_PI: f64 = std::f64::consts::TAU;
pub const E_CHARGE: f64 = 1.602_176_634e-19;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / TWO_PI;
pub const K_B: f64 = 1.380_649e-23;

/// e²/(2h) in GHz·fF: charging energy of a 1 fF capacitor.
pub const CHARGING_GHZ_FF: f64 = E_CHARGE * E_CHARGE / (2.0 * PLANCK) * 1e6;

/// GHz (cycles) to angular rad/ns.
#[inline]
pub fn ang(f_ghz: f64) -> f64 {
    TWO_PI * f_ghz
}

/// GHz (cycles) to angular rad/s.
#[inline]
pub fn ang_si(f_ghz: f64) -> f64 {
    TWO_PI * f_ghz * 1e9
}

/// Bose-Einstein occupation at frequency `f_ghz` and temperature `t_kelvin`.
pub fn bose_einstein(f_ghz: f64, t_kelvin: f64) -> f64 {
    if t_kelvin <= 0.0 {
        return 0.0;
    }
    let x = PLANCK * f_ghz * 1e9 / (K_B * t_kelvin);
    1.0 / x.exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charging_constant() {
        // 163 fF gives the resonator charging energy of about 119 MHz.
        assert!((CHARGING_GHZ_FF / 163.0 - 0.1188).abs() < 1e-3);
        assert!((CHARGING_GHZ_FF - 19.370_23).abs() < 1e-4);
    }

    #[test]
    fn occupation_ratio_between_8_and_12_5_ghz() {
        let r = bose_einstein(8.0, 0.045) / bose_einstein(12.5, 0.045);
        assert!(r > 80.0 && r < 150.0, "ratio {r}");
    }
}
