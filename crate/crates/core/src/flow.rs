//! Interior velocity and pressure reconstructed from the surface
//! excursion, and vertical column integrals that reproduce the
//! momentum/energy densities and fluxes through O(eps^2).
//!
//! Conventions: the shape functions phi_x, phi_z, P' are order-one; the
//! physical quantities entering the column integrals are u = eps phi_x,
//! w = eps phi_z, total pressure p = (1 - z) + eps P', and kinetic energy
//! density (1/2)(u^2 + w^2). These are the unique constant choices under
//! which all four column identities emerge simultaneously.

use crate::dynamics::Params;
use crate::error::{KdvError, Result};
use crate::spectral::Field;

/// Kind of vertical column integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// integral of phi_x dz: the mass flux through a unit-width section,
    /// matching the mass-law flux through O(eps).
    MassFlux,
    /// integral of u dz: the momentum density I.
    Momentum,
    /// integral of (u^2 + p) dz: momentum flux plus pressure force q_I.
    FlowForce,
    /// integral of ((u^2 + w^2)/2 + z) dz: the energy density E.
    Energy,
    /// integral of ((u^2 + w^2)/2 + z + p) u dz: energy flux plus pressure
    /// work rate q_E.
    EnergyFlux,
}

/// Minimum number of Gauss-Legendre nodes accepted for column quadrature.
pub const MIN_COLUMN_NODES: usize = 32;

fn check_height(z: f64) -> Result<()> {
    if z < 0.0 || !z.is_finite() {
        return Err(KdvError::InvalidParam(format!(
            "height z = {z} below the bed"
        )));
    }
    Ok(())
}

/// Horizontal velocity shape phi_x = eta - (eps/4) eta^2
/// + eps (1/3 - z^2/2) eta_xx at height z.
///
/// The physical horizontal velocity is u = eps phi_x. Heights up to 1.3
/// are accepted (a generous bound above any resolved free surface).
pub fn horizontal_velocity(eta: &Field, params: &Params, z: f64) -> Result<Field> {
    check_height(z)?;
    if z > 1.3 {
        return Err(KdvError::InvalidParam(format!(
            "height z = {z} above the free-surface bound 1.3"
        )));
    }
    let eps = params.epsilon();
    let e2 = eta.derivative(2)?;
    Ok(eta
        .sub(&eta.mul(eta).scale(eps / 4.0))
        .add(&e2.scale(eps * (1.0 / 3.0 - z * z / 2.0))))
}

/// Vertical velocity shape phi_z = -eps z eta_x at height z.
pub fn vertical_velocity(eta: &Field, params: &Params, z: f64) -> Result<Field> {
    check_height(z)?;
    Ok(eta.derivative(1)?.scale(-params.epsilon() * z))
}

/// Dynamic pressure P' = eta - (eps/2)(z^2 - 1) eta_xx at height z.
///
/// Total pressure in the column integrals is p = (1 - z) + eps P'.
pub fn dynamic_pressure(eta: &Field, params: &Params, z: f64) -> Result<Field> {
    check_height(z)?;
    let eps = params.epsilon();
    let e2 = eta.derivative(2)?;
    Ok(eta.sub(&e2.scale(eps / 2.0 * (z * z - 1.0))))
}

/// Flow quantities sampled along one horizontal line z = const.
#[derive(Debug, Clone)]
pub struct ColumnSlice {
    pub z: f64,
    pub phi_x: Field,
    pub phi_z: Field,
    pub dynamic_pressure: Field,
    /// True where z lies above the local free surface 1 + eps eta(x).
    pub exterior: Vec<bool>,
}

/// Evaluate all three shape functions at height z, flagging points where
/// the height is above the local free surface.
pub fn column_slice(eta: &Field, params: &Params, z: f64) -> Result<ColumnSlice> {
    let eps = params.epsilon();
    let phi_x = horizontal_velocity(eta, params, z)?;
    let phi_z = vertical_velocity(eta, params, z)?;
    let pressure = dynamic_pressure(eta, params, z)?;
    let exterior = eta.values().iter().map(|&v| z > 1.0 + eps * v).collect();
    Ok(ColumnSlice {
        z,
        phi_x,
        phi_z,
        dynamic_pressure: pressure,
        exterior,
    })
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. Deterministic and accurate to machine precision
/// for the node counts used here.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and P'_n(x) via the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Numeric z-quadrature of the requested integrand over [0, 1 + eps eta(x)]
/// for every x, with `nz` Gauss-Legendre nodes remapped per column to the
/// local free surface.
///
/// The integrands are polynomials in z of degree at most six, so the
/// quadrature is exact (up to rounding) for any admitted `nz`.
pub fn column_integral(
    kind: ColumnKind,
    eta: &Field,
    params: &Params,
    nz: usize,
) -> Result<Field> {
    if nz < MIN_COLUMN_NODES {
        return Err(KdvError::InvalidParam(format!(
            "nz = {nz} below minimum {MIN_COLUMN_NODES}"
        )));
    }
    if !eta.is_finite() {
        return Err(KdvError::NonFinite("column integral input".into()));
    }
    let eps = params.epsilon();
    let e1 = eta.derivative(1)?;
    let e2 = eta.derivative(2)?;
    let (nodes, weights) = gauss_legendre(nz);
    let mut out = Vec::with_capacity(eta.len());
    for ((&h, &h1), &h2) in eta.values().iter().zip(e1.values()).zip(e2.values()) {
        let surface = 1.0 + eps * h;
        let mut acc = 0.0;
        for (&t, &w) in nodes.iter().zip(&weights) {
            let z = surface * (t + 1.0) / 2.0;
            let weight = w * surface / 2.0;
            let phi_x = h - eps / 4.0 * h * h + eps * (1.0 / 3.0 - z * z / 2.0) * h2;
            let integrand = match kind {
                ColumnKind::MassFlux => phi_x,
                ColumnKind::Momentum => eps * phi_x,
                ColumnKind::FlowForce => {
                    let u = eps * phi_x;
                    let p_total = (1.0 - z) + eps * (h - eps / 2.0 * (z * z - 1.0) * h2);
                    u * u + p_total
                }
                ColumnKind::Energy => {
                    let u = eps * phi_x;
                    let wv = eps * (-eps * z * h1);
                    0.5 * (u * u + wv * wv) + z
                }
                ColumnKind::EnergyFlux => {
                    let u = eps * phi_x;
                    let wv = eps * (-eps * z * h1);
                    let p_total = (1.0 - z) + eps * (h - eps / 2.0 * (z * z - 1.0) * h2);
                    (0.5 * (u * u + wv * wv) + z) * u + p_total * u
                }
            };
            acc += weight * integrand;
        }
        out.push(acc);
    }
    Field::from_values(eta.grid(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::{density, flux, LawId};
    use crate::dynamics::solitary_wave;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn grid(n: usize, length: f64) -> Grid {
        Grid::new(n, length).unwrap()
    }

    fn p(eps: f64) -> Params {
        Params::new(eps).unwrap()
    }

    #[test]
    fn horizontal_velocity_of_rest_state() {
        let g = grid(64, 10.0);
        let eta = Field::zeros(&g);
        for z in [0.0, 0.5, 1.0] {
            assert!(horizontal_velocity(&eta, &p(0.1), z).unwrap().linf() <= 1e-15);
        }
    }

    #[test]
    fn horizontal_velocity_of_constant() {
        let g = grid(64, 10.0);
        let eta = Field::constant(&g, 0.5);
        for z in [0.0, 0.7, 1.2] {
            let v = horizontal_velocity(&eta, &p(0.1), z).unwrap();
            assert!(v.values().iter().all(|&x| (x - 0.493_75).abs() <= 1e-15));
        }
    }

    #[test]
    fn z_dependence_enters_through_curvature() {
        let g = grid(128, 2.0 * PI);
        let eta = Field::from_fn(&g, |x| x.sin());
        let eps = 0.1;
        let top = horizontal_velocity(&eta, &p(eps), 1.0).unwrap();
        let bed = horizontal_velocity(&eta, &p(eps), 0.0).unwrap();
        // phi_x(0) - phi_x(1) = (eps/2) eta_xx = -(eps/2) sin x
        let expect = Field::from_fn(&g, |x| -eps / 2.0 * x.sin());
        assert!(bed.sub(&top).sub(&expect).linf() <= 1e-12);
    }

    #[test]
    fn vertical_velocity_cases() {
        let g = grid(128, 2.0 * PI);
        let eta = Field::from_fn(&g, |x| x.sin());
        // kinematic bed condition: exactly zero at z = 0
        let bed = vertical_velocity(&eta, &p(0.1), 0.0).unwrap();
        assert!(bed.linf() == 0.0);
        let c = Field::constant(&g, 0.4);
        assert!(vertical_velocity(&c, &p(0.1), 0.8).unwrap().linf() <= 1e-14);
        let top = vertical_velocity(&eta, &p(0.1), 1.0).unwrap();
        let expect = Field::from_fn(&g, |x| -0.1 * x.cos());
        assert!(top.sub(&expect).linf() <= 1e-12);
    }

    #[test]
    fn pressure_cases() {
        let g = grid(128, 2.0 * PI);
        let eta = Field::from_fn(&g, |x| x.sin());
        // (z^2 - 1) factor vanishes at the surface height
        let surf = dynamic_pressure(&eta, &p(0.1), 1.0).unwrap();
        assert!(surf.sub(&eta).linf() <= 1e-13);

        let c = Field::constant(&g, 0.5);
        let bed_c = dynamic_pressure(&c, &p(0.1), 0.0).unwrap();
        assert!(bed_c.values().iter().all(|&v| (v - 0.5).abs() <= 1e-14));

        let bed = dynamic_pressure(&eta, &p(0.1), 0.0).unwrap();
        let expect = Field::from_fn(&g, |x| 0.95 * x.sin());
        assert!(bed.sub(&expect).linf() <= 1e-12);
    }

    #[test]
    fn negative_height_is_rejected() {
        let g = grid(64, 10.0);
        let eta = Field::zeros(&g);
        assert!(horizontal_velocity(&eta, &p(0.1), -0.1).is_err());
        assert!(vertical_velocity(&eta, &p(0.1), -0.1).is_err());
        assert!(dynamic_pressure(&eta, &p(0.1), -0.1).is_err());
        assert!(horizontal_velocity(&eta, &p(0.1), 1.4).is_err());
    }

    #[test]
    fn slice_flags_exterior_points() {
        let g = grid(64, 10.0);
        let eta = Field::from_fn(&g, |x| if x < 5.0 { 0.5 } else { -0.5 });
        let slice = column_slice(&eta, &p(0.1), 1.0).unwrap();
        for (&v, &ext) in eta.values().iter().zip(&slice.exterior) {
            assert_eq!(ext, 1.0 > 1.0 + 0.1 * v);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (nodes, weights) = gauss_legendre(32);
        assert!((weights.iter().sum::<f64>() - 2.0).abs() <= 1e-14);
        // degree-7 monomial over [-1, 1]
        let int_x6: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| w * x.powi(6))
            .sum();
        assert!((int_x6 - 2.0 / 7.0).abs() <= 1e-14);
        let int_x7: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| w * x.powi(7))
            .sum();
        assert!(int_x7.abs() <= 1e-14);
    }

    #[test]
    fn momentum_column_of_rest_state_vanishes() {
        let g = grid(64, 10.0);
        let eta = Field::zeros(&g);
        let m = column_integral(ColumnKind::Momentum, &eta, &p(0.1), 32).unwrap();
        assert!(m.linf() <= 1e-15);
    }

    #[test]
    fn flow_force_of_rest_state_is_hydrostatic() {
        let g = grid(64, 10.0);
        let eta = Field::zeros(&g);
        let f = column_integral(ColumnKind::FlowForce, &eta, &p(0.1), 32).unwrap();
        assert!(f.values().iter().all(|&v| (v - 0.5).abs() <= 1e-14));
    }

    #[test]
    fn nz_below_minimum_rejected() {
        let g = grid(64, 10.0);
        let eta = Field::zeros(&g);
        assert!(column_integral(ColumnKind::Energy, &eta, &p(0.1), 16).is_err());
    }

    #[test]
    fn quadrature_converged_at_64_nodes() {
        let g = grid(256, 100.0);
        let eta = solitary_wave(1.0, &p(0.2), 50.0, 0.0, &g).unwrap();
        for kind in [
            ColumnKind::Momentum,
            ColumnKind::FlowForce,
            ColumnKind::Energy,
            ColumnKind::EnergyFlux,
        ] {
            let a = column_integral(kind, &eta, &p(0.2), 64).unwrap();
            let b = column_integral(kind, &eta, &p(0.2), 128).unwrap();
            let rel = a.sub(&b).linf() / b.linf().max(1e-30);
            assert!(rel <= 1e-12, "{kind:?}: {rel:.2e}");
        }
    }

    /// Column integrals approach the catalog formulas as eps^3.
    #[test]
    fn column_integrals_match_closed_forms_to_eps_cubed() {
        let g = grid(1024, 100.0);
        let eta = solitary_wave(1.0, &p(0.1), 50.0, 0.0, &g).unwrap();
        let ladder = [0.05, 0.1, 0.2];
        let pairs: [(ColumnKind, LawId, bool); 4] = [
            (ColumnKind::Momentum, LawId::Momentum, true),
            (ColumnKind::FlowForce, LawId::Momentum, false),
            (ColumnKind::Energy, LawId::Energy, true),
            (ColumnKind::EnergyFlux, LawId::Energy, false),
        ];
        for (kind, law, is_density) in pairs {
            let diffs: Vec<f64> = ladder
                .iter()
                .map(|&e| {
                    let params = p(e);
                    let ci = column_integral(kind, &eta, &params, 128).unwrap();
                    let closed_form = if is_density {
                        density(law, &eta, &params).unwrap()
                    } else {
                        flux(law, &eta, &params).unwrap()
                    };
                    ci.sub(&closed_form).linf()
                })
                .collect();
            let slope = (diffs[2] / diffs[0]).ln() / (ladder[2] / ladder[0]).ln();
            assert!(slope >= 2.8, "{kind:?}: slope {slope:.2}, diffs {diffs:?}");
        }
    }

    #[test]
    fn mass_flux_column_matches_mass_flux_to_eps_squared() {
        let g = grid(1024, 100.0);
        let eta = solitary_wave(1.0, &p(0.1), 50.0, 0.0, &g).unwrap();
        let ladder = [0.05, 0.1, 0.2];
        let diffs: Vec<f64> = ladder
            .iter()
            .map(|&e| {
                let params = p(e);
                let ci = column_integral(ColumnKind::MassFlux, &eta, &params, 64).unwrap();
                let closed_form = flux(LawId::Mass, &eta, &params).unwrap();
                ci.sub(&closed_form).linf()
            })
            .collect();
        let slope = (diffs[2] / diffs[0]).ln() / (ladder[2] / ladder[0]).ln();
        assert!(slope >= 1.8, "slope {slope:.2}");
    }
}
