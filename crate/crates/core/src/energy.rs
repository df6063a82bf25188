//! Vehicle power model and recharging curves.
//!
//! Power is computed in kW from three parts: load-dependent mechanical power,
//! cabin climate control power (a heat-balance model driven by the ambient
//! temperature) and a constant auxiliary draw. Electric powertrains scale the
//! sum by discharge or recuperation efficiencies; combustion engines add an
//! idle floor and divide the mechanical part by engine and drivetrain
//! efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Powertrain, VehicleType};

/// One glazed or opaque surface of the cabin, used by the conduction and
/// radiation terms of the climate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub name: String,
    /// m²
    pub area: f64,
    /// Solar transmissivity of the surface.
    pub emissivity: f64,
    /// kW/(m²·K)
    pub heat_transfer: f64,
    /// Tilt of the surface from horizontal, radians.
    #[serde(default)]
    pub tilt: f64,
}

/// Physical constants of the power model. Defaults reproduce the published
/// parameter tables; every field may be overridden from a config file, either
/// by its descriptive name or by the symbol alias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerContext {
    #[serde(alias = "c_r")]
    pub rolling_resistance: f64,
    /// Road gradient in radians; may be zero or negative.
    #[serde(alias = "alpha")]
    pub road_gradient: f64,
    #[serde(alias = "rho_a")]
    pub air_density: f64,
    #[serde(alias = "g")]
    pub gravity: f64,
    #[serde(alias = "a")]
    pub acceleration: f64,

    #[serde(alias = "phi_d")]
    pub engine_discharge: f64,
    #[serde(alias = "phi_r")]
    pub engine_recuperation: f64,
    #[serde(alias = "varphi_d")]
    pub external_discharge: f64,
    #[serde(alias = "varphi_r")]
    pub external_recuperation: f64,

    /// ASHRAE clear-day coefficients A (kW/m²), B and C.
    #[serde(alias = "A")]
    pub solar_a: f64,
    #[serde(alias = "B")]
    pub solar_b: f64,
    #[serde(alias = "C")]
    pub solar_c: f64,
    /// Radians.
    #[serde(alias = "theta_z")]
    pub zenith_angle: f64,
    /// Radians.
    #[serde(alias = "theta_i")]
    pub incidence_angle: f64,
    #[serde(alias = "rho_g")]
    pub ground_reflectivity: f64,
    pub surfaces: Vec<Surface>,
    /// kJ/(kg·K)
    #[serde(alias = "C_P")]
    pub air_specific_heat: f64,
    #[serde(alias = "eta_H")]
    pub heater_efficiency: f64,
    #[serde(alias = "eta_C")]
    pub cooler_efficiency: f64,
    /// kg/s
    #[serde(alias = "m_dot")]
    pub air_mass_flow: f64,
    /// W/m²
    #[serde(alias = "H_Pr", alias = "H_P")]
    pub human_heat_rate: f64,
    /// m²
    #[serde(alias = "A_Du")]
    pub dubois_area: f64,
    #[serde(alias = "n_p")]
    pub passengers: f64,
    /// °C
    #[serde(alias = "T_d")]
    pub desired_temperature: f64,
}

impl Default for PowerContext {
    fn default() -> Self {
        let surface = |name: &str, area: f64| Surface {
            name: name.to_string(),
            area,
            emissivity: 0.8,
            heat_transfer: 0.003,
            tilt: 0.0,
        };
        PowerContext {
            rolling_resistance: 0.01,
            road_gradient: 0.0,
            air_density: 1.2041,
            gravity: 9.81,
            acceleration: 0.01,
            engine_discharge: 1.184692,
            engine_recuperation: 0.846055,
            external_discharge: 1.112434,
            external_recuperation: 0.928465,
            solar_a: 1.088,
            solar_b: 0.205,
            solar_c: 0.134,
            zenith_angle: 35f64.to_radians(),
            incidence_angle: 55f64.to_radians(),
            ground_reflectivity: 0.2,
            surfaces: vec![
                surface("windshield", 1.0),
                surface("left_window", 0.6),
                surface("right_window", 0.6),
                surface("rear", 0.8),
                surface("roof", 1.0),
            ],
            air_specific_heat: 1.005,
            heater_efficiency: 2.5,
            cooler_efficiency: 2.5,
            air_mass_flow: 0.3185,
            human_heat_rate: 58.2,
            dubois_area: 1.8,
            passengers: 1.0,
            desired_temperature: 20.0,
        }
    }
}

impl PowerContext {
    /// Checks the positivity invariants of every physical parameter.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rolling_resistance", self.rolling_resistance),
            ("air_density", self.air_density),
            ("gravity", self.gravity),
            ("acceleration", self.acceleration),
            ("engine_discharge", self.engine_discharge),
            ("engine_recuperation", self.engine_recuperation),
            ("external_discharge", self.external_discharge),
            ("external_recuperation", self.external_recuperation),
            ("solar_a", self.solar_a),
            ("solar_b", self.solar_b),
            ("solar_c", self.solar_c),
            ("ground_reflectivity", self.ground_reflectivity),
            ("air_specific_heat", self.air_specific_heat),
            ("heater_efficiency", self.heater_efficiency),
            ("cooler_efficiency", self.cooler_efficiency),
            ("air_mass_flow", self.air_mass_flow),
            ("human_heat_rate", self.human_heat_rate),
            ("dubois_area", self.dubois_area),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation(format!(
                    "power parameter {name} must be positive, got {value}"
                )));
            }
        }
        if !self.road_gradient.is_finite() || !self.desired_temperature.is_finite() {
            return Err(Error::Validation("power parameters must be finite".into()));
        }
        if self.passengers < 0.0 {
            return Err(Error::Validation("passenger count must be >= 0".into()));
        }
        for s in &self.surfaces {
            if !(s.area > 0.0 && s.emissivity > 0.0 && s.heat_transfer > 0.0) {
                return Err(Error::Validation(format!(
                    "surface {} needs positive area, emissivity and heat transfer",
                    s.name
                )));
            }
        }
        Ok(())
    }

    /// Direct normal irradiance in kW/m² for the configured zenith angle.
    pub fn direct_normal_irradiance(&self) -> Result<f64> {
        let cos_z = self.zenith_angle.cos();
        if cos_z <= 0.0 {
            return Err(Error::Domain(format!(
                "zenith angle {:.4} rad puts the sun below the horizon",
                self.zenith_angle
            )));
        }
        Ok(self.solar_a * (-self.solar_b / cos_z).exp())
    }
}

/// Breakdown of the cabin climate load at one ambient temperature (kW, before
/// heater/cooler efficiency).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClimateLoad {
    pub ventilation: f64,
    pub conduction: f64,
    pub radiation: f64,
    pub metabolic: f64,
    /// Electrical power drawn after dividing by the heater or cooler efficiency.
    pub total: f64,
}

/// Mechanical power in kW needed to move `vtype` carrying `load_kg` of cargo.
pub fn mechanical_power(vtype: &VehicleType, load_kg: f64, ctx: &PowerContext) -> f64 {
    let m = vtype.kerb_mass + vtype.additional_mass + load_kg;
    let v = vtype.speed_kmh / 3.6;
    let alpha = ctx.road_gradient;
    let g = ctx.gravity;
    let force = ctx.rolling_resistance * m * g * alpha.cos()
        + 0.5 * ctx.air_density * vtype.frontal_area * vtype.drag_coefficient * v * v
        + m * g * alpha.sin()
        + m * ctx.acceleration;
    0.001 * force * v
}

/// Component breakdown of the climate model at ambient temperature `t`.
///
/// Heating runs strictly below the desired cabin temperature, cooling
/// strictly above it, and the load is zero at equality.
pub fn climate_load(ctx: &PowerContext, t: f64) -> Result<ClimateLoad> {
    let irradiance = ctx.direct_normal_irradiance()?;
    if !t.is_finite() {
        return Err(Error::Domain(format!("ambient temperature {t} is not finite")));
    }
    let dt = t - ctx.desired_temperature;
    if dt == 0.0 {
        return Ok(ClimateLoad::default());
    }
    let ventilation = ctx.air_mass_flow * ctx.air_specific_heat * dt.abs();
    let conduction: f64 = ctx
        .surfaces
        .iter()
        .map(|s| s.area * s.heat_transfer * dt.abs())
        .sum();
    if dt < 0.0 {
        return Ok(ClimateLoad {
            ventilation,
            conduction,
            radiation: 0.0,
            metabolic: 0.0,
            total: (ventilation + conduction) / ctx.heater_efficiency,
        });
    }
    let cos_z = ctx.zenith_angle.cos();
    let radiation: f64 = ctx
        .surfaces
        .iter()
        .map(|s| {
            let cos_tilt = s.tilt.cos();
            s.area
                * s.emissivity
                * irradiance
                * (ctx.incidence_angle.cos()
                    + ctx.solar_c * (1.0 + cos_tilt) / 2.0
                    + ctx.ground_reflectivity * cos_z * (1.0 - cos_tilt) / 2.0)
        })
        .sum();
    let metabolic = ctx.passengers * ctx.human_heat_rate * ctx.dubois_area / 1000.0;
    Ok(ClimateLoad {
        ventilation,
        conduction,
        radiation,
        metabolic,
        total: (ventilation + conduction + radiation + metabolic) / ctx.cooler_efficiency,
    })
}

/// Electrical power in kW drawn for cabin climate control at temperature `t`.
pub fn climate_power(ctx: &PowerContext, t: f64) -> Result<f64> {
    climate_load(ctx, t).map(|c| c.total)
}

/// Power drawn from the energy source of `vtype` in kW. Negative values mean
/// recuperation and only occur for electric vehicles.
pub fn vehicle_power(vtype: &VehicleType, load_kg: f64, t: f64, ctx: &PowerContext) -> Result<f64> {
    PowerModel::new(vtype, t, ctx).map(|m| m.power(load_kg))
}

/// Energy in kWh consumed over `hours` of driving.
pub fn arc_energy(
    vtype: &VehicleType,
    load_kg: f64,
    t: f64,
    hours: f64,
    ctx: &PowerContext,
) -> Result<f64> {
    Ok(vehicle_power(vtype, load_kg, t, ctx)? * hours)
}

/// [`vehicle_power`] with the temperature-dependent part evaluated once, so
/// the per-arc cost is a handful of multiplications.
#[derive(Debug, Clone)]
pub struct PowerModel {
    powertrain: Powertrain,
    /// Mechanical power is affine in the load: `empty + per_kg·load`.
    empty_kw: f64,
    per_kg_kw: f64,
    /// Climate plus auxiliary power (EV only).
    fixed_kw: f64,
    discharge: f64,
    recuperation: f64,
    idle_kw: f64,
    engine_efficiency: f64,
}

impl PowerModel {
    pub fn new(vtype: &VehicleType, t: f64, ctx: &PowerContext) -> Result<Self> {
        let fixed_kw = match vtype.powertrain {
            Powertrain::Ev => {
                let climate = if vtype.cabin_climate {
                    climate_power(ctx, t)?
                } else {
                    0.0
                };
                climate + vtype.auxiliary_power
            }
            Powertrain::Icev => 0.0,
        };
        let empty_kw = mechanical_power(vtype, 0.0, ctx);
        let v = vtype.speed_kmh / 3.6;
        let per_kg_kw = 0.001
            * v
            * (ctx.rolling_resistance * ctx.gravity * ctx.road_gradient.cos()
                + ctx.gravity * ctx.road_gradient.sin()
                + ctx.acceleration);
        let e = vtype.engine.unwrap_or_default();
        Ok(PowerModel {
            powertrain: vtype.powertrain,
            empty_kw,
            per_kg_kw,
            fixed_kw,
            discharge: ctx.engine_discharge * ctx.external_discharge,
            recuperation: ctx.engine_recuperation * ctx.external_recuperation,
            idle_kw: e.friction_factor * e.engine_speed * e.displacement,
            engine_efficiency: e.engine_efficiency * e.drivetrain_efficiency,
        })
    }

    /// `(intercept, slope)` with `power(load) = intercept + slope·load` for
    /// every load ≥ 0, when the power never goes negative (so neither
    /// recuperation nor the combustion floor applies).
    pub fn affine(&self) -> Option<(f64, f64)> {
        if self.per_kg_kw < 0.0 {
            return None;
        }
        let (a, b) = match self.powertrain {
            Powertrain::Ev => (self.discharge * (self.empty_kw + self.fixed_kw), self.discharge * self.per_kg_kw),
            Powertrain::Icev => (
                self.idle_kw + self.empty_kw / self.engine_efficiency,
                self.per_kg_kw / self.engine_efficiency,
            ),
        };
        (a >= 0.0).then_some((a, b))
    }

    pub fn power(&self, load_kg: f64) -> f64 {
        let pm = self.empty_kw + self.per_kg_kw * load_kg;
        match self.powertrain {
            Powertrain::Ev => {
                let p = pm + self.fixed_kw;
                if p >= 0.0 {
                    self.discharge * p
                } else {
                    self.recuperation * p
                }
            }
            Powertrain::Icev => (self.idle_kw + pm / self.engine_efficiency).max(0.0),
        }
    }
}

/// Charger technologies available at recharging stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChargerKind {
    #[serde(rename = "standard_30kwh", alias = "standard")]
    Standard30kWh,
    #[serde(rename = "fast_30kwh", alias = "fast")]
    Fast30kWh,
}

impl ChargerKind {
    pub fn function(self) -> ChargingFunction {
        match self {
            ChargerKind::Standard30kWh => ChargingFunction::standard_30kwh(),
            ChargerKind::Fast30kWh => ChargingFunction::fast_30kwh(),
        }
    }
}

/// Concave piecewise-linear map from charging time (minutes) to state of
/// charge (kWh) reached from an empty battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingFunction {
    breakpoints: Vec<(f64, f64)>,
}

impl ChargingFunction {
    /// Builds a charging function, checking that it starts at the origin, is
    /// strictly increasing and has strictly decreasing segment slopes.
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints[0] != (0.0, 0.0) {
            return Err(Error::Validation(
                "charging function needs >= 2 breakpoints starting at (0, 0)".into(),
            ));
        }
        let mut last_slope = f64::INFINITY;
        for w in breakpoints.windows(2) {
            let (t0, s0) = w[0];
            let (t1, s1) = w[1];
            if !(t1 > t0 && s1 > s0) {
                return Err(Error::Validation(
                    "charging breakpoints must be strictly increasing".into(),
                ));
            }
            let slope = (s1 - s0) / (t1 - t0);
            if slope >= last_slope {
                return Err(Error::Validation(
                    "charging function must be concave (decreasing slopes)".into(),
                ));
            }
            last_slope = slope;
        }
        Ok(ChargingFunction { breakpoints })
    }

    /// 30 kWh battery on a standard charger: full after 227.25 minutes.
    pub fn standard_30kwh() -> Self {
        ChargingFunction {
            breakpoints: vec![(0.0, 0.0), (139.5, 25.5), (173.25, 28.5), (227.25, 30.0)],
        }
    }

    /// 30 kWh battery on a fast charger: full after 49.995 minutes.
    pub fn fast_30kwh() -> Self {
        ChargingFunction {
            breakpoints: vec![(0.0, 0.0), (30.69, 25.5), (38.115, 28.5), (49.995, 30.0)],
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// SOC reached at full charge.
    pub fn max_soc(&self) -> f64 {
        self.breakpoints.last().map(|b| b.1).unwrap_or(0.0)
    }

    /// Time needed to charge from empty to full.
    pub fn full_time(&self) -> f64 {
        self.breakpoints.last().map(|b| b.0).unwrap_or(0.0)
    }

    /// SOC in kWh after charging an empty battery for `minutes`.
    pub fn soc_at(&self, minutes: f64) -> f64 {
        let t = minutes.max(0.0);
        for w in self.breakpoints.windows(2) {
            let (t0, s0) = w[0];
            let (t1, s1) = w[1];
            if t <= t1 {
                return s0 + (s1 - s0) * (t - t0) / (t1 - t0);
            }
        }
        self.max_soc()
    }

    /// Inverse of [`soc_at`](Self::soc_at): minutes to reach `soc` from empty.
    pub fn time_to(&self, soc: f64) -> Result<f64> {
        if soc < 0.0 || soc > self.max_soc() + 1e-9 {
            return Err(Error::Domain(format!(
                "SOC {soc} kWh outside charging range [0, {}]",
                self.max_soc()
            )));
        }
        for w in self.breakpoints.windows(2) {
            let (t0, s0) = w[0];
            let (t1, s1) = w[1];
            if soc <= s1 {
                return Ok(t0 + (t1 - t0) * (soc - s0) / (s1 - s0));
            }
        }
        Ok(self.full_time())
    }
}

/// SOC in kWh reached after charging an empty battery for `minutes`, clamped
/// at full charge.
pub fn recharge_soc(charger: &ChargingFunction, minutes: f64) -> f64 {
    charger.soc_at(minutes)
}

/// Minutes needed to charge from `from_soc` to `to_soc`.
pub fn recharge_time(charger: &ChargingFunction, from_soc: f64, to_soc: f64) -> Result<f64> {
    if from_soc > to_soc {
        return Err(Error::Domain(format!(
            "cannot charge down from {from_soc} to {to_soc} kWh"
        )));
    }
    Ok(charger.time_to(to_soc)? - charger.time_to(from_soc)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VehicleType;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Van used throughout: 1426 kg kerb + 200 kg equipment, 12 m/s.
    fn van() -> VehicleType {
        VehicleType {
            speed_kmh: 43.2,
            ..VehicleType::electric_van()
        }
    }

    // Hand evaluation of each force term with the default constants.
    fn mechanical_oracle(m: f64, v: f64) -> f64 {
        let rolling = 0.01 * m * 9.81;
        let aero = 0.5 * 1.2041 * 4.06 * 0.34 * v * v;
        let inertia = m * 0.01;
        0.001 * (rolling + aero + inertia) * v
    }

    #[test]
    fn mechanical_power_matches_hand_evaluation() {
        let p = mechanical_power(&van(), 0.0, &PowerContext::default());
        close(p, mechanical_oracle(1626.0, 12.0), 1e-12);
        close(p, 3.545, 5e-4);
    }

    #[test]
    fn mechanical_power_zero_speed() {
        let vt = VehicleType {
            speed_kmh: 0.0,
            ..van()
        };
        assert_eq!(mechanical_power(&vt, 100.0, &PowerContext::default()), 0.0);
    }

    #[test]
    fn mechanical_power_grows_with_load() {
        let ctx = PowerContext::default();
        let a = mechanical_power(&van(), 100.0, &ctx);
        let b = mechanical_power(&van(), 200.0, &ctx);
        assert!(b > a);
    }

    #[test]
    fn climate_zero_at_setpoint() {
        assert_eq!(climate_power(&PowerContext::default(), 20.0).unwrap(), 0.0);
    }

    #[test]
    fn climate_heating_minus_ten() {
        let ctx = PowerContext::default();
        let c = climate_load(&ctx, -10.0).unwrap();
        close(c.ventilation, 0.3185 * 1.005 * 30.0, 1e-12);
        close(c.conduction, 4.0 * 0.003 * 30.0, 1e-12);
        close(c.total, (9.602775 + 0.36) / 2.5, 1e-9);
        close(c.total, 3.985, 1e-3);
    }

    #[test]
    fn climate_cooling_thirty() {
        let ctx = PowerContext::default();
        let c = climate_load(&ctx, 30.0).unwrap();
        let idn = 1.088 * (-0.205 / 35f64.to_radians().cos()).exp();
        close(idn, 0.847, 1e-3);
        close(c.ventilation, 3.201, 1e-3);
        close(c.conduction, 0.120, 1e-12);
        close(c.radiation, 1.918, 1e-3);
        close(c.metabolic, 0.10476, 1e-9);
        close(c.total, 2.14, 5e-3);
    }

    #[test]
    fn climate_rejects_sun_below_horizon() {
        let ctx = PowerContext {
            zenith_angle: 95f64.to_radians(),
            ..PowerContext::default()
        };
        assert!(matches!(climate_power(&ctx, 30.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ev_power_applies_discharge_factors() {
        let ctx = PowerContext::default();
        let p = vehicle_power(&van(), 0.0, 20.0, &ctx).unwrap();
        let factor = 1.184692 * 1.112434;
        close(factor, 1.31789, 1e-5);
        close(p, factor * mechanical_oracle(1626.0, 12.0), 1e-12);
        close(p, 4.672, 1e-3);
    }

    #[test]
    fn ev_power_recuperates_downhill() {
        let ctx = PowerContext {
            road_gradient: -0.05,
            ..PowerContext::default()
        };
        let vt = van();
        let raw = mechanical_power(&vt, 0.0, &ctx);
        assert!(raw < 0.0);
        let p = vehicle_power(&vt, 0.0, 20.0, &ctx).unwrap();
        close(p, 0.846055 * 0.928465 * raw, 1e-12);
    }

    #[test]
    fn icev_idle_floor() {
        let vt = VehicleType {
            speed_kmh: 0.0,
            ..VehicleType::small_icev()
        };
        let p = vehicle_power(&vt, 0.0, -10.0, &PowerContext::default()).unwrap();
        close(p, 0.2 * 33.0 * 1.6, 1e-12);
        close(p, 10.56, 1e-12);
    }

    #[test]
    fn arc_energy_is_power_times_hours() {
        let ctx = PowerContext::default();
        assert_eq!(arc_energy(&van(), 0.0, 20.0, 0.0, &ctx).unwrap(), 0.0);
        let e = arc_energy(&van(), 0.0, 20.0, 0.5, &ctx).unwrap();
        close(e, 2.336, 1e-3);
    }

    #[test]
    fn climate_share_at_minus_ten() {
        let ctx = PowerContext::default();
        let pt = climate_power(&ctx, -10.0).unwrap();
        let pm = mechanical_power(&van(), 0.0, &ctx);
        let share = pt / (pt + pm);
        assert!((0.50..=0.56).contains(&share), "share {share}");
    }

    #[test]
    fn charging_functions_match_published_coefficients() {
        // Published segment coefficients; rounded to four or five digits, so
        // they agree with the exact breakpoints only to ~1e-3 kWh.
        let standard = |t: f64| {
            if t <= 139.5 {
                0.1828 * t
            } else if t <= 173.25 {
                0.08889 * t + 13.1
            } else {
                0.02778 * t + 23.6875
            }
        };
        let fast = |t: f64| {
            if t <= 30.69 {
                0.83089 * t
            } else if t <= 38.115 {
                0.40404 * t + 13.1
            } else {
                0.12626 * t + 23.6875
            }
        };
        let (s, f) = (ChargingFunction::standard_30kwh(), ChargingFunction::fast_30kwh());
        for i in 0..=1000 {
            let t = 227.25 * i as f64 / 1000.0;
            close(s.soc_at(t), standard(t), 1e-3);
            let t = 49.995 * i as f64 / 1000.0;
            close(f.soc_at(t), fast(t), 1e-3);
        }
    }

    #[test]
    fn charging_endpoints() {
        let s = ChargingFunction::standard_30kwh();
        let f = ChargingFunction::fast_30kwh();
        assert_eq!(recharge_soc(&s, 0.0), 0.0);
        close(recharge_soc(&s, 227.25), 30.0, 1e-12);
        close(recharge_soc(&f, 49.995), 30.0, 1e-12);
        assert_eq!(recharge_soc(&s, 500.0), 30.0);
        close(recharge_time(&s, 0.0, 25.5).unwrap(), 139.5, 1e-12);
        close(recharge_time(&s, 0.0, 25.5006).unwrap(), 139.5, 0.01);
        assert_eq!(recharge_time(&s, 12.0, 12.0).unwrap(), 0.0);
        assert!(recharge_time(&s, 0.0, 30.5).is_err());
    }

    #[test]
    fn charging_function_rejects_convex_shape() {
        assert!(ChargingFunction::new(vec![(0.0, 0.0), (10.0, 1.0), (20.0, 5.0)]).is_err());
        assert!(ChargingFunction::new(vec![(1.0, 0.0), (10.0, 1.0)]).is_err());
        assert!(ChargingFunction::new(ChargingFunction::fast_30kwh().breakpoints).is_ok());
    }

    #[test]
    fn default_context_validates() {
        PowerContext::default().validate().unwrap();
        let sum: f64 = PowerContext::default().surfaces.iter().map(|s| s.area).sum();
        close(sum, 4.0, 1e-12);
    }

    #[test]
    fn context_accepts_symbol_aliases() {
        let ctx: PowerContext = serde_json::from_str(r#"{"T_d": 18.0, "eta_H": 3.0}"#).unwrap();
        assert_eq!(ctx.desired_temperature, 18.0);
        assert_eq!(ctx.heater_efficiency, 3.0);
        assert_eq!(ctx.air_mass_flow, 0.3185);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn climate_is_v_shaped(a in -40.0f64..20.0, b in -40.0f64..20.0) {
                let ctx = PowerContext::default();
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(climate_power(&ctx, lo).unwrap() >= climate_power(&ctx, hi).unwrap());
                let (lo2, hi2) = (40.0 - hi, 40.0 - lo);
                prop_assert!(climate_power(&ctx, lo2).unwrap() <= climate_power(&ctx, hi2).unwrap());
            }

            #[test]
            fn ev_power_increases_with_load(q in 0.0f64..2000.0, dq in 1.0f64..500.0, t in -20.0f64..35.0) {
                let ctx = PowerContext::default();
                let vt = VehicleType::electric_van();
                let a = vehicle_power(&vt, q, t, &ctx).unwrap();
                let b = vehicle_power(&vt, q + dq, t, &ctx).unwrap();
                prop_assert!(b > a);
            }

            #[test]
            fn recharge_round_trip(soc in 0.0f64..30.0, minutes in 0.0f64..227.25) {
                for f in [ChargingFunction::standard_30kwh(), ChargingFunction::fast_30kwh()] {
                    let t = recharge_time(&f, 0.0, soc).unwrap();
                    prop_assert!((recharge_soc(&f, t) - soc).abs() < 1e-9);
                    let m = minutes.min(f.full_time());
                    prop_assert!((f.time_to(recharge_soc(&f, m)).unwrap() - m).abs() < 1e-9);
                }
            }
        }
    }
}
