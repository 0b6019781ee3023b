//! Physical constants (CODATA 2018, exact where the SI defines them).

/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Unified atomic mass unit [kg].
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a ⁸⁷Rb atom [kg].
pub const RB87_MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;

/// Rb D1 line wavelength [m].
pub const RB_D1_WAVELENGTH: f64 = 794.979e-9;

/// Rb D2 line wavelength [m].
pub const RB_D2_WAVELENGTH: f64 = 780.241e-9;
