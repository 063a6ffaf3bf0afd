//! Closed-form magnetostatics for the sphere-probe / atom-chain geometry.
//!
//! The probe is a uniformly magnetized sphere, which outside its surface is
//! exactly a point dipole of moment m = (4/3)πR³M sitting at the sphere
//! center. The atom chain is a straight line of equally spaced sites lying a
//! height z = R + d below the probe center; site offsets are measured along
//! the chain axis (x) with the magnetization along +z.

use serde::{Deserialize, Serialize};

use crate::consts::{MU0_OVER_4PI, MU_B};
use crate::error::{Error, Result};

/// Device geometry and ambient conditions. All lengths in meters, fields in
/// Tesla, temperature in Kelvin. `probe_magnetization_t` stores μ₀M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    pub probe_radius_m: f64,
    pub probe_gap_m: f64,
    pub atom_spacing_m: f64,
    pub probe_magnetization_t: f64,
    pub external_field_t: f64,
    pub temperature_k: f64,
    pub chain_length: usize,
}

impl DeviceGeometry {
    pub fn new(
        probe_radius_m: f64,
        probe_gap_m: f64,
        atom_spacing_m: f64,
        probe_magnetization_t: f64,
        external_field_t: f64,
        temperature_k: f64,
        chain_length: usize,
    ) -> Result<Self> {
        let geom = Self {
            probe_radius_m,
            probe_gap_m,
            atom_spacing_m,
            probe_magnetization_t,
            external_field_t,
            temperature_k,
            chain_length,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidGeometry(msg.to_string()));
        if !(self.probe_radius_m > 0.0) {
            return bad("probe radius must be positive");
        }
        if !(self.probe_gap_m > 0.0) {
            return bad("probe-sample gap must be positive");
        }
        if !(self.atom_spacing_m > 0.0) {
            return bad("atom spacing must be positive");
        }
        if !(self.probe_magnetization_t >= 0.0) {
            return bad("probe magnetization must be nonnegative");
        }
        if !(self.external_field_t > 0.0) {
            return bad("external field must be positive");
        }
        if !(self.temperature_k > 0.0) {
            return bad("temperature must be positive");
        }
        if self.chain_length < 1 {
            return bad("chain must contain at least one atom");
        }
        Ok(())
    }

    /// Axial coordinate of the chain: the target atom sits at z = R + d below
    /// the probe-center equilibrium (origin at the probe center).
    pub fn target_height_m(&self) -> f64 {
        self.probe_radius_m + self.probe_gap_m
    }

    /// Displacement from the probe center to `site` when the probe is parked
    /// over `probe_site`. The chain runs along x.
    pub fn site_offset_m(&self, probe_site: usize, site: usize) -> [f64; 3] {
        let lateral = (site as f64 - probe_site as f64) * self.atom_spacing_m;
        [lateral, 0.0, self.target_height_m()]
    }
}

/// A magnetic field vector in Tesla.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldVector {
    pub bx_t: f64,
    pub by_t: f64,
    pub bz_t: f64,
}

impl FieldVector {
    pub fn magnitude(&self) -> f64 {
        (self.bx_t * self.bx_t + self.by_t * self.by_t + self.bz_t * self.bz_t).sqrt()
    }
}

/// Dipole field of the magnetized probe sphere at `offset_m` from its center:
/// B = (μ₀/4π)(3n(m·n) − m)/r³ with m = (4/3)πR³M ẑ, which collapses to the
/// prefactor μ₀M·R³/3.
pub fn probe_field(geom: &DeviceGeometry, offset_m: [f64; 3]) -> Result<FieldVector> {
    let [x, y, z] = offset_m;
    let r = (x * x + y * y + z * z).sqrt();
    if r <= geom.probe_radius_m {
        return Err(Error::PointInsideProbe {
            distance_m: r,
            radius_m: geom.probe_radius_m,
        });
    }
    let prefactor = geom.probe_magnetization_t * geom.probe_radius_m.powi(3) / 3.0;
    let inv_r3 = 1.0 / (r * r * r);
    let nz = z / r;
    let scale = prefactor * inv_r3;
    Ok(FieldVector {
        bx_t: scale * 3.0 * nz * (x / r),
        by_t: scale * 3.0 * nz * (y / r),
        bz_t: scale * (3.0 * nz * nz - 1.0),
    })
}

/// Probe field z-component directly under the probe at height `z` (on-axis):
/// B_z = (2/3)μ₀M (R/z)³.
pub fn probe_field_on_axis(geom: &DeviceGeometry, z_m: f64) -> Result<f64> {
    Ok(probe_field(geom, [0.0, 0.0, z_m])?.bz_t)
}

/// Probe field z-component at the target site (z = R + d).
pub fn probe_field_at_target(geom: &DeviceGeometry) -> f64 {
    probe_field_on_axis(geom, geom.target_height_m()).expect("target height exceeds probe radius")
}

/// Probe field z-component at the neighbor of the target site, lateral offset
/// one atom spacing.
pub fn probe_field_at_neighbor(geom: &DeviceGeometry) -> f64 {
    probe_field(geom, [geom.atom_spacing_m, 0.0, geom.target_height_m()])
        .expect("neighbor point is exterior")
        .bz_t
}

/// On-axis gradient ∂B_z/∂z = −3 B_z(z)/z at height `z`.
pub fn probe_field_gradient_z(geom: &DeviceGeometry, z_m: f64) -> Result<f64> {
    Ok(-3.0 * probe_field_on_axis(geom, z_m)? / z_m)
}

/// Orientation of a single electron magnetic moment along z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentSign {
    /// Moment along +z: the electron ground state.
    Up,
    /// Moment along −z: the electron excited state.
    Down,
}

impl MomentSign {
    pub fn sign(self) -> f64 {
        match self {
            MomentSign::Up => 1.0,
            MomentSign::Down => -1.0,
        }
    }
}

/// Magnetostatic force on an electron at on-axis height `z`:
/// F_z = ±μ_B ∂B_z/∂z = ∓2μ_B (μ₀M/z)(R/z)³.
/// The reaction force on the probe is equal and opposite.
pub fn force_on_electron(geom: &DeviceGeometry, z_m: f64, moment: MomentSign) -> Result<f64> {
    Ok(moment.sign() * MU_B * probe_field_gradient_z(geom, z_m)?)
}

/// Force magnitude on the target electron for the configured geometry.
pub fn target_force_magnitude(geom: &DeviceGeometry) -> f64 {
    force_on_electron(geom, geom.target_height_m(), MomentSign::Up)
        .expect("target height exceeds probe radius")
        .abs()
}

/// z-field at `site` from every other electron moment on the chain line.
/// A moment ±μ_B ẑ at lateral distance s contributes ∓(μ₀/4π)μ_B/s³.
/// `excited[j] == true` marks a moment along −z.
pub fn chain_dipole_field(excited: &[bool], site: usize, atom_spacing_m: f64) -> Result<f64> {
    if site >= excited.len() {
        return Err(Error::SiteOutOfRange {
            site,
            chain_length: excited.len(),
        });
    }
    let mut sum = 0.0;
    for (j, &is_excited) in excited.iter().enumerate() {
        if j == site {
            continue;
        }
        let separation = (j as isize - site as isize).unsigned_abs() as f64 * atom_spacing_m;
        let magnitude = MU0_OVER_4PI * MU_B / (separation * separation * separation);
        sum += if is_excited { magnitude } else { -magnitude };
    }
    Ok(sum)
}

/// Same sum restricted to nearest neighbors (the dominant term).
pub fn nearest_dipole_field(excited: &[bool], site: usize, atom_spacing_m: f64) -> Result<f64> {
    partial_dipole_field(excited, site, atom_spacing_m, |d| d == 1)
}

/// Same sum restricted to atoms beyond the nearest neighbors.
pub fn far_dipole_field(excited: &[bool], site: usize, atom_spacing_m: f64) -> Result<f64> {
    partial_dipole_field(excited, site, atom_spacing_m, |d| d >= 2)
}

fn partial_dipole_field(
    excited: &[bool],
    site: usize,
    atom_spacing_m: f64,
    keep: impl Fn(usize) -> bool,
) -> Result<f64> {
    if site >= excited.len() {
        return Err(Error::SiteOutOfRange {
            site,
            chain_length: excited.len(),
        });
    }
    let mut sum = 0.0;
    for (j, &is_excited) in excited.iter().enumerate() {
        if j == site {
            continue;
        }
        let steps = (j as isize - site as isize).unsigned_abs();
        if !keep(steps) {
            continue;
        }
        let separation = steps as f64 * atom_spacing_m;
        let magnitude = MU0_OVER_4PI * MU_B / (separation * separation * separation);
        sum += if is_excited { magnitude } else { -magnitude };
    }
    Ok(sum)
}
