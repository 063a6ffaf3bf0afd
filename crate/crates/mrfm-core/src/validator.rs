//! Evaluates a full device design against every operating-window inequality,
//! and reproduces the published design estimates for the reference device as
//! a regression table.
//!
//! Margin semantics: order-of-magnitude separations ("much less than") must
//! hold by the configurable margin factor; hard bounds ("less than") use
//! margin 1. Every check reports `margin_ratio` = how many times over the
//! (margin-scaled) requirement the design sits, so raising the margin can
//! only lower ratios and never turns a failing check into a passing one.

use serde::{Deserialize, Serialize};

use crate::cantilever;
use crate::chain::PulseSpec;
use crate::consts::ANGSTROM;
use crate::error::{Error, Result};
use crate::magnetostatics;
use crate::protocol::Device;
use crate::spectroscopy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorSettings {
    pub electron_lifetime_s: f64,
    /// Margin factor applied to "much less than" separations.
    pub margin: f64,
    pub thermal_excitation_bound: f64,
}

impl Default for ValidatorSettings {
    fn default() -> Self {
        Self {
            electron_lifetime_s: 1.0,
            margin: 4.0,
            thermal_excitation_bound: 1.0e-4,
        }
    }
}

/// Explicit Rabi selections for a design (taken from the device defaults).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiSelections {
    pub electron_hz: f64,
    pub nuclear_hz: f64,
    pub cn_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCheck {
    pub name: String,
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Satisfaction over the margin-scaled requirement; passes at >= 1.
    pub margin_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub checks: Vec<DesignCheck>,
    pub rabi: RabiSelections,
    /// Feasible electron Rabi window [jitter scale, neighbor-split scale].
    pub electron_window_low_hz: f64,
    pub electron_window_high_hz: f64,
    pub overall_pass: bool,
}

impl DesignReport {
    pub fn check(&self, name: &str) -> Option<&DesignCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Aligned plain-text rendering, one row per check.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<42} {:>14} {:>14} {:>10} {:>6}\n",
            "check", "value", "bound", "ratio", "pass"
        ));
        for check in &self.checks {
            out.push_str(&format!(
                "{:<42} {:>14.6e} {:>14.6e} {:>10.3} {:>6}\n",
                check.name,
                check.lhs,
                check.rhs,
                check.margin_ratio,
                if check.pass { "ok" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "electron Rabi window: [{:.4e}, {:.4e}] Hz\n",
            self.electron_window_low_hz, self.electron_window_high_hz
        ));
        out.push_str(&format!(
            "overall: {}\n",
            if self.overall_pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

fn much_greater(name: &str, big: f64, small: f64, margin: f64) -> DesignCheck {
    let ratio = big / (small * margin);
    DesignCheck {
        name: name.to_string(),
        relation: format!("left >= {margin} x right"),
        lhs: big,
        rhs: small,
        margin,
        margin_ratio: ratio,
        pass: ratio >= 1.0,
    }
}

fn strictly_greater(name: &str, big: f64, small: f64) -> DesignCheck {
    let ratio = big / small;
    DesignCheck {
        name: name.to_string(),
        relation: "left > right".to_string(),
        lhs: big,
        rhs: small,
        margin: 1.0,
        margin_ratio: ratio,
        pass: ratio > 1.0,
    }
}

/// Evaluate every feasibility inequality for the design.
pub fn validate(device: &Device, settings: &ValidatorSettings) -> Result<DesignReport> {
    let geometry = &device.geometry;
    geometry.validate()?;
    let species = &device.species;
    species.validate()?;
    let cantilever_params = &device.cantilever;
    cantilever_params.validate()?;

    let margin = settings.margin;
    let f_er = device.pulses.electron_rabi_hz;
    let f_nr = device.pulses.nuclear_rabi_hz;

    let table = spectroscopy::transition_table(species, geometry.external_field_t)?;
    let b_fz = magnetostatics::probe_field_at_target(geometry);
    let b_neighbor = magnetostatics::probe_field_at_neighbor(geometry);
    let neighbor_split_e = species.gamma_e_hz_per_t * (b_fz - b_neighbor);
    let neighbor_split_n = species.gamma_n_hz_per_t * (b_fz - b_neighbor);

    // frequency jitter from tip motion at the detection threshold amplitude
    let threshold_amplitude = std::f64::consts::SQRT_2
        * cantilever::thermal_rms(cantilever_params, geometry.temperature_k);
    let jitter = cantilever::field_jitter(geometry, species, threshold_amplitude)?;

    // worst-case static dipole shift of the ESR line (inner site, full chain)
    let reference_sites = geometry.chain_length.max(3);
    let ground = vec![false; reference_sites];
    let inner = reference_sites / 2;
    let dipole_total =
        magnetostatics::chain_dipole_field(&ground, inner, geometry.atom_spacing_m)?;
    let dipole_esr_shift = species.gamma_e_hz_per_t * dipole_total.abs();

    let cn = device.cn_pulse_parameters(inner - 1, inner, reference_sites)?;

    let checks = vec![
        strictly_greater("hyperfine_above_nuclear_zeeman", species.hyperfine_hz, table.f_n_hz),
        much_greater("electron_rabi_above_jitter", f_er, jitter.dfe_hz, margin),
        much_greater(
            "electron_rabi_below_neighbor_split",
            neighbor_split_e,
            f_er,
            margin,
        ),
        strictly_greater(
            "electron_rabi_below_hyperfine_splitting",
            2.0 * species.hyperfine_hz,
            f_er,
        ),
        much_greater("hyperfine_above_jitter", species.hyperfine_hz, jitter.dfe_hz, margin),
        strictly_greater("nuclear_rabi_below_neighbor_split", neighbor_split_n, f_nr),
        strictly_greater("cn_rabi_below_conditional_gap", cn.gap_hz, cn.rabi_hz),
        {
            // at high temperature the threshold can exceed the stationary
            // amplitude entirely; report that as a failed lifetime check
            let force = magnetostatics::target_force_magnitude(geometry);
            match cantilever::detection_time(
                cantilever_params,
                force,
                geometry.temperature_k,
                std::f64::consts::SQRT_2,
            ) {
                Ok(tau_m) => strictly_greater(
                    "electron_lifetime_exceeds_measurement",
                    settings.electron_lifetime_s,
                    tau_m,
                ),
                Err(_) => DesignCheck {
                    name: "electron_lifetime_exceeds_measurement".to_string(),
                    relation: "detection threshold must be reachable".to_string(),
                    lhs: settings.electron_lifetime_s,
                    rhs: f64::INFINITY,
                    margin: 1.0,
                    margin_ratio: 0.0,
                    pass: false,
                },
            }
        },
        strictly_greater(
            "thermal_excitation_below_bound",
            settings.thermal_excitation_bound,
            spectroscopy::thermal_excited_probability(
                geometry.external_field_t,
                geometry.temperature_k,
            )?,
        ),
        much_greater(
            "dipole_esr_shift_below_electron_rabi",
            f_er,
            dipole_esr_shift,
            margin,
        ),
        much_greater(
            "electron_rabi_above_cantilever",
            f_er,
            cantilever_params.resonance_hz,
            margin,
        ),
    ];

    let overall_pass = checks.iter().all(|c| c.pass);
    Ok(DesignReport {
        checks,
        rabi: RabiSelections {
            electron_hz: f_er,
            nuclear_hz: f_nr,
            cn_hz: cn.rabi_hz,
        },
        electron_window_low_hz: jitter.dfe_hz,
        electron_window_high_hz: neighbor_split_e.min(2.0 * species.hyperfine_hz),
        overall_pass,
    })
}

/// Result of the cyclic-adiabatic-inversion double inequality
/// f_c ≪ |dB_eff/dt|/(2π B₁) ≪ f_eR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticCheck {
    pub middle_hz: f64,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    pub margin: f64,
    pub pass: bool,
}

pub fn adiabatic_inversion_check(
    cantilever_hz: f64,
    sweep_rate_t_per_s: f64,
    b1_t: f64,
    electron_rabi_hz: f64,
    margin: f64,
) -> Result<AdiabaticCheck> {
    if !(cantilever_hz > 0.0 && sweep_rate_t_per_s > 0.0 && b1_t > 0.0 && electron_rabi_hz > 0.0) {
        return Err(Error::Config(
            "adiabatic check inputs must be positive".into(),
        ));
    }
    let middle = sweep_rate_t_per_s / (2.0 * std::f64::consts::PI * b1_t);
    let lower_ratio = middle / cantilever_hz;
    let upper_ratio = electron_rabi_hz / middle;
    Ok(AdiabaticCheck {
        middle_hz: middle,
        lower_ratio,
        upper_ratio,
        margin,
        pass: lower_ratio >= margin && upper_ratio >= margin,
    })
}

/// One row of the published-number regression table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub quantity: String,
    pub computed: f64,
    pub published_value: f64,
    pub relative_difference: f64,
    /// Flagged rows document a known disagreement with the published
    /// rounding (or its off-axis field estimate) and are pinned against an
    /// independent recomputation instead of the published value.
    pub flagged: bool,
    pub note: String,
}

fn row(quantity: &str, computed: f64, published: f64, flagged: bool, note: &str) -> RegressionRow {
    RegressionRow {
        quantity: quantity.to_string(),
        computed,
        published_value: published,
        relative_difference: (computed - published).abs() / published.abs(),
        flagged,
        note: note.to_string(),
    }
}

/// Recompute every design estimate of the reference device and pair it with
/// the published value. Flagged rows carry the published value as metadata
/// only; see each row's note.
pub fn reproduce_published_table() -> Vec<RegressionRow> {
    let device = Device::reference();
    let geometry = &device.geometry;
    let species = &device.species;
    let cantilever_params = &device.cantilever;

    let b_fz = magnetostatics::probe_field_at_target(geometry);
    let b_neighbor = magnetostatics::probe_field_at_neighbor(geometry);
    let force = magnetostatics::target_force_magnitude(geometry);
    let z_c = cantilever::stationary_amplitude(force, cantilever_params);
    let tau_c = cantilever::ring_up_time(cantilever_params);
    let z_rms_cold = cantilever::thermal_rms(cantilever_params, 1.0);
    // the published measurement-time chain: its own amplitude ratio 2/3 with
    // the unrounded ring-up time (the fully computed chain gives ~87 ms, see
    // cantilever::detection_time)
    let tau_m = tau_c * 1.5_f64.ln();
    let jitter = cantilever::field_jitter(geometry, species, 0.4 * ANGSTROM)
        .expect("reference geometry is valid");

    let ground = vec![false; geometry.chain_length];
    let center = geometry.chain_length / 2;
    let b_dz = magnetostatics::nearest_dipole_field(&ground, center, geometry.atom_spacing_m)
        .expect("center site is in range");
    let b_far = magnetostatics::far_dipole_field(&ground, center, geometry.atom_spacing_m)
        .expect("center site is in range");
    let neighbor_split_n = species.gamma_n_hz_per_t * (b_fz - b_neighbor);
    let gap = species.gamma_n_hz_per_t * b_dz.abs();
    let mut far_term_min = f64::INFINITY;
    let mut far_term_max = f64::NEG_INFINITY;
    for site in 1..geometry.chain_length - 1 {
        let far = magnetostatics::far_dipole_field(&ground, site, geometry.atom_spacing_m)
            .expect("inner site is in range");
        let term = species.gamma_n_hz_per_t * far.abs();
        far_term_min = far_term_min.min(term);
        far_term_max = far_term_max.max(term);
    }
    let electron_pi = PulseSpec::pi_pulse(
        0.0,
        device.pulses.electron_rabi_hz,
        crate::chain::PulseKind::Electron,
    )
    .expect("reference Rabi frequency is positive")
    .duration_s;

    const B_PRIME_NOTE: &str =
        "derived from the off-axis probe field; its published estimate disagrees with direct evaluation";
    const ROUNDING_NOTE: &str = "published value rounds to one significant figure";

    vec![
        row("probe_field_at_target_t", b_fz, 5.4e-2, false, ""),
        row(
            "probe_field_at_neighbor_t",
            b_neighbor,
            3.6e-2,
            true,
            "direct evaluation of the off-axis dipole field; published estimate differs",
        ),
        row(
            "esr_probe_shift_hz",
            species.gamma_e_hz_per_t * b_fz,
            1.5e9,
            false,
            "",
        ),
        row(
            "esr_neighbor_split_hz",
            species.gamma_e_hz_per_t * (b_fz - b_neighbor),
            5.0e8,
            true,
            B_PRIME_NOTE,
        ),
        row("electron_force_n", force, 1.0e-16, false, ""),
        row("stationary_amplitude_m", z_c, 1.2e-10, false, ""),
        row("ring_up_time_s", tau_c, 0.2, true, ROUNDING_NOTE),
        row("thermal_amplitude_1k_m", z_rms_cold, 3.0e-11, false, ""),
        row(
            "measurement_time_s",
            tau_m,
            0.08,
            true,
            "published closed form with its printed amplitude ratio and the unrounded ring-up time",
        ),
        row(
            "field_jitter_t",
            jitter.db_t,
            4.0e-4,
            false,
            "evaluated at the published threshold amplitude 0.4 angstrom",
        ),
        row(
            "esr_jitter_hz",
            jitter.dfe_hz,
            1.0e7,
            true,
            ROUNDING_NOTE,
        ),
        row("neighbor_dipole_field_t", b_dz, -1.5e-5, false, ""),
        row("far_dipole_ratio", b_far / b_dz, 0.202, false, ""),
        row(
            "nmr_probe_shift_hz",
            species.gamma_n_hz_per_t * b_fz,
            2.3e6,
            false,
            "",
        ),
        row(
            "nmr_neighbor_shift_hz",
            species.gamma_n_hz_per_t * b_neighbor,
            2.15e7,
            true,
            "published figure is inconsistent with its own quoted split; treated as a typo",
        ),
        row(
            "nmr_neighbor_split_hz",
            neighbor_split_n,
            8.0e5,
            true,
            B_PRIME_NOTE,
        ),
        row("conditional_gap_hz", gap, 650.0, false, ""),
        row("electron_pi_duration_s", electron_pi, 5.0e-9, false, ""),
        row(
            "nuclear_addressing_pi_min_duration_s",
            1.0 / (2.0 * neighbor_split_n),
            6.3e-7,
            true,
            B_PRIME_NOTE,
        ),
        row(
            "conditional_pi_min_duration_s",
            1.0 / (2.0 * gap),
            7.7e-4,
            false,
            "",
        ),
        row(
            "thermal_excitation_probability",
            spectroscopy::thermal_excited_probability(
                geometry.external_field_t,
                geometry.temperature_k,
            )
            .expect("reference temperature is positive"),
            1.4e-6,
            false,
            "",
        ),
        row("far_term_min_hz", far_term_min, 70.0, false, ""),
        row("far_term_max_hz", far_term_max, 130.0, false, ""),
    ]
}

/// CSV rendering of the regression table. Note text never contains commas.
pub fn regression_table_csv(rows: &[RegressionRow]) -> String {
    let mut out =
        String::from("quantity,computed,published_value,relative_difference,flagged,note\n");
    for r in rows {
        debug_assert!(!r.note.contains(','));
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{},{}\n",
            r.quantity, r.computed, r.published_value, r.relative_difference, r.flagged, r.note
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_settings() -> ValidatorSettings {
        ValidatorSettings::default()
    }

    #[test]
    fn reference_design_passes_every_check() {
        let report = validate(&Device::reference(), &reference_settings()).unwrap();
        for check in &report.checks {
            assert!(check.pass, "failed: {check:?}");
        }
        assert!(report.overall_pass);
        // electron Rabi window consistent with the published 10-500 MHz range
        assert!(
            report.electron_window_low_hz > 8.0e6 && report.electron_window_low_hz < 1.25e7,
            "low = {}",
            report.electron_window_low_hz
        );
        assert!(
            report.electron_window_high_hz > 4.0e8 && report.electron_window_high_hz < 5.2e8,
            "high = {}",
            report.electron_window_high_hz
        );
    }

    #[test]
    fn room_temperature_fails_the_thermal_check() {
        let mut device = Device::reference();
        device.geometry.temperature_k = 300.0;
        let report = validate(&device, &reference_settings()).unwrap();
        assert!(!report.overall_pass);
        let check = report.check("thermal_excitation_below_bound").unwrap();
        assert!(!check.pass);
        assert!((check.rhs - 0.956).abs() < 0.01, "p = {}", check.rhs);
    }

    #[test]
    fn gigahertz_electron_rabi_fails_the_neighbor_split_check() {
        let mut device = Device::reference();
        device.pulses.electron_rabi_hz = 1.0e9;
        let report = validate(&device, &reference_settings()).unwrap();
        assert!(!report.overall_pass);
        assert!(!report.check("electron_rabi_below_neighbor_split").unwrap().pass);
        assert!(report.check("electron_rabi_below_hyperfine_splitting").unwrap().pass);
    }

    #[test]
    fn kilohertz_electron_rabi_fails_the_jitter_floor() {
        let mut device = Device::reference();
        device.pulses.electron_rabi_hz = 1.0e3;
        let report = validate(&device, &reference_settings()).unwrap();
        assert!(!report.check("electron_rabi_above_jitter").unwrap().pass);
    }

    #[test]
    fn widening_the_gap_collapses_the_selectivity_window() {
        let mut device = Device::reference();
        device.geometry.probe_gap_m = 400.0 * ANGSTROM;
        let report = validate(&device, &reference_settings()).unwrap();
        assert!(!report.overall_pass);
        assert!(!report.check("electron_rabi_below_neighbor_split").unwrap().pass);
    }

    #[test]
    fn raising_the_margin_never_rescues_a_failing_check() {
        let mut device = Device::reference();
        device.geometry.temperature_k = 300.0;
        let loose = validate(&device, &reference_settings()).unwrap();
        let mut strict_settings = reference_settings();
        strict_settings.margin = 20.0;
        let strict = validate(&device, &strict_settings).unwrap();
        for (a, b) in loose.checks.iter().zip(strict.checks.iter()) {
            if !a.pass {
                assert!(!b.pass, "margin rescue on {}", a.name);
            }
        }
    }

    #[test]
    fn validate_is_deterministic_with_fixed_ordering() {
        let a = validate(&Device::reference(), &reference_settings()).unwrap();
        let b = validate(&Device::reference(), &reference_settings()).unwrap();
        assert_eq!(a, b);
        let names: Vec<&str> = a.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names[0], "hyperfine_above_nuclear_zeeman");
        assert_eq!(names.len(), 11);
    }

    #[test]
    fn adiabatic_check_examples() {
        let pass = adiabatic_inversion_check(1.4e3, 2.0 * std::f64::consts::PI * 1.0e-3 * 1.0e6, 1.0e-3, 1.0e8, 4.0)
            .unwrap();
        assert!((pass.middle_hz - 1.0e6).abs() < 1.0);
        assert!((pass.lower_ratio - 714.0).abs() < 1.0);
        assert!((pass.upper_ratio - 100.0).abs() < 0.1);
        assert!(pass.pass);

        let left_fail =
            adiabatic_inversion_check(1.4e3, 2.0 * std::f64::consts::PI * 1.0e-3 * 1.4e3, 1.0e-3, 1.0e8, 4.0)
                .unwrap();
        assert!(!left_fail.pass);

        let right_fail =
            adiabatic_inversion_check(1.4e3, 2.0 * std::f64::consts::PI * 1.0e-3 * 1.0e8, 1.0e-3, 1.0e8, 4.0)
                .unwrap();
        assert!(!right_fail.pass);
    }

    #[test]
    fn unflagged_rows_sit_within_ten_percent() {
        let rows = reproduce_published_table();
        assert!(rows.len() >= 18);
        for r in &rows {
            if !r.flagged {
                assert!(
                    r.relative_difference < 0.10,
                    "{}: {} vs {} ({:.1}%)",
                    r.quantity,
                    r.computed,
                    r.published_value,
                    100.0 * r.relative_difference
                );
            }
        }
    }

    #[test]
    fn table_is_deterministic() {
        assert_eq!(reproduce_published_table(), reproduce_published_table());
        let csv = regression_table_csv(&reproduce_published_table());
        assert!(csv.starts_with("quantity,computed,published_value,relative_difference"));
    }

    #[test]
    fn gamma_defaults_match_the_reference_species() {
        let species = crate::spectroscopy::SpinSpecies::hydrogen_like();
        assert_eq!(species.gamma_e_hz_per_t, crate::consts::GAMMA_E_HZ_PER_T);
        assert_eq!(species.gamma_n_hz_per_t, crate::consts::GAMMA_N_HZ_PER_T);
    }

    #[test]
    fn geometry_validation_feeds_through() {
        let mut device = Device::reference();
        device.geometry.probe_radius_m = -1.0;
        assert!(matches!(
            validate(&device, &reference_settings()),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn text_rendering_contains_every_check() {
        let report = validate(&Device::reference(), &reference_settings()).unwrap();
        let text = report.render_text();
        for check in &report.checks {
            assert!(text.contains(&check.name));
        }
        assert!(text.contains("overall: PASS"));
    }
}
