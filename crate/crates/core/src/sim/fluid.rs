use crate::error::{Error, Result};

/// Phase properties for the slightly compressible water/CO₂ system.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidProps {
    /// Water density at the reference pressure (kg/m³).
    pub rho_w: f64,
    /// CO₂ density at the reference pressure (kg/m³).
    pub rho_g: f64,
    pub mu_w: f64,
    pub mu_g: f64,
    pub c_w: f64,
    pub c_g: f64,
    pub c_r: f64,
    pub g: f64,
    /// Pressure at which densities and porosity are quoted (Pa).
    pub p_ref: f64,
}

impl Default for FluidProps {
    fn default() -> Self {
        Self {
            rho_w: 1000.0,
            rho_g: 700.0,
            mu_w: 5e-4,
            mu_g: 6e-5,
            c_w: 4e-10,
            c_g: 5e-9,
            c_r: 1e-10,
            g: 9.80665,
            p_ref: 2.0e7,
        }
    }
}

impl FluidProps {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.rho_w, self.rho_g, self.mu_w, self.mu_g, self.c_w, self.c_g, self.c_r, self.g,
            self.p_ref,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("fluid properties must be finite".into()));
        }
        if !(self.rho_w > self.rho_g && self.rho_g > 0.0) {
            return Err(Error::Parameter(format!(
                "need rho_w > rho_g > 0, got {} and {}",
                self.rho_w, self.rho_g
            )));
        }
        if self.mu_w <= 0.0 || self.mu_g <= 0.0 {
            return Err(Error::Parameter("viscosities must be positive".into()));
        }
        if self.c_w < 0.0 || self.c_g < 0.0 || self.c_r < 0.0 || self.g < 0.0 {
            return Err(Error::Parameter(
                "compressibilities and gravity must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// CO₂ density relative to its reference value.
    #[inline]
    pub fn b_gas(&self, p: f64) -> f64 {
        1.0 + self.c_g * (p - self.p_ref)
    }

    /// Porosity multiplier for rock compressibility.
    #[inline]
    pub fn pore_factor(&self, p: f64) -> f64 {
        1.0 + self.c_r * (p - self.p_ref)
    }

    /// Total compressibility at CO₂ saturation `sg`.
    #[inline]
    pub fn total_compressibility(&self, sg: f64) -> f64 {
        self.c_r + (1.0 - sg) * self.c_w + sg * self.c_g
    }

    /// Zero-compressibility copy, handy for incompressible test problems.
    pub fn incompressible(mut self) -> Self {
        self.c_w = 0.0;
        self.c_g = 0.0;
        self.c_r = 0.0;
        self
    }

    pub fn without_gravity(mut self) -> Self {
        self.g = 0.0;
        self
    }
}

/// Corey-type relative permeability curves.
#[derive(Debug, Clone, PartialEq)]
pub struct RelPermModel {
    pub swc: f64,
    pub sgr: f64,
    pub krw0: f64,
    pub krg0: f64,
    pub nw: f64,
    pub ng: f64,
}

impl Default for RelPermModel {
    fn default() -> Self {
        Self {
            swc: 0.2,
            sgr: 0.05,
            krw0: 1.0,
            krg0: 1.0,
            nw: 2.0,
            ng: 2.0,
        }
    }
}

impl RelPermModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.swc >= 0.0
            && self.sgr >= 0.0
            && self.swc + self.sgr < 1.0
            && self.krw0 > 0.0
            && self.krw0 <= 1.0
            && self.krg0 > 0.0
            && self.krg0 <= 1.0
            && self.nw >= 1.0
            && self.ng >= 1.0;
        if !ok {
            return Err(Error::Parameter(format!("invalid relative permeability model {self:?}")));
        }
        Ok(())
    }

    /// Largest CO₂ saturation the rock can hold.
    pub fn sg_max(&self) -> f64 {
        1.0 - self.swc
    }

    /// Upper bound on d(krg)/d(sg) over the mobile range.
    pub fn max_dkrg(&self) -> f64 {
        self.krg0 * self.ng / (1.0 - self.swc - self.sgr)
    }
}

/// Water and CO₂ relative permeabilities at CO₂ saturation `sg`.
pub fn corey_relperm(sg: f64, model: &RelPermModel) -> (f64, f64) {
    let span = 1.0 - model.swc - model.sgr;
    let s = ((1.0 - sg - model.swc) / span).clamp(0.0, 1.0);
    let krw = model.krw0 * s.powf(model.nw);
    let krg = model.krg0 * (1.0 - s).powf(model.ng);
    (krw, krg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn endpoints() {
        let m = RelPermModel::default();
        assert_eq!(corey_relperm(0.0, &m), (1.0, 0.0));
        let (krw, krg) = corey_relperm(1.0 - m.swc, &m);
        assert_eq!(krw, 0.0);
        assert_eq!(krg, 1.0);
    }

    #[test]
    fn interior_value() {
        // S* = (1 - 0.4 - 0.2) / 0.75 = 0.5333...
        let m = RelPermModel::default();
        let (krw, krg) = corey_relperm(0.4, &m);
        let s: f64 = 0.4 / 0.75;
        assert_relative_eq!(krw, s * s, max_relative = 1e-14);
        assert_relative_eq!(krw, 0.284_444_444_444_444_4, max_relative = 1e-12);
        assert_relative_eq!(krg, 0.217_777_777_777_777_8, max_relative = 1e-12);
    }

    #[test]
    fn gas_immobile_below_residual() {
        let m = RelPermModel::default();
        assert_eq!(corey_relperm(0.03, &m).1, 0.0);
        assert!(corey_relperm(0.06, &m).1 > 0.0);
    }

    #[test]
    fn validation() {
        assert!(FluidProps::default().validate().is_ok());
        let bad = FluidProps {
            rho_g: 1200.0,
            ..FluidProps::default()
        };
        assert!(bad.validate().is_err());
        let bad = RelPermModel {
            swc: 0.7,
            sgr: 0.4,
            ..RelPermModel::default()
        };
        assert!(bad.validate().is_err());
    }
}
