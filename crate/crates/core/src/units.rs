//! Unit conventions: hbar = c = 1, lengths in micrometres, wavenumbers,
//! frequencies and couplings in rad/µm, times reported as ct in µm.

pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// One Debye in C·m.
pub const DEBYE: f64 = 3.335_640_95e-30;

/// A dipole of one Debye expressed as the length `d / sqrt(eps0 hbar c)` in µm.
///
/// With this, `sqrt(k / 2) * d * u(r)` is a coupling in rad/µm when `k` is in
/// rad/µm and the mode function `u` is normalised in µm^-3.
pub fn debye_length() -> f64 {
    DEBYE / (EPSILON_0 * HBAR * SPEED_OF_LIGHT).sqrt() * 1e6
}

/// Dipole moment in Debye to its length in µm.
pub fn dipole_length(debye: f64) -> f64 {
    debye * debye_length()
}

/// Vacuum wavelength in µm of wavenumber `k` in rad/µm.
pub fn wavelength(k: f64) -> f64 {
    2.0 * std::f64::consts::PI / k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn debye_length_value() {
        let v = debye_length();
        assert!((v - 6.304_584_936_6e-6).abs() < 1e-15, "{v}");
    }
}
