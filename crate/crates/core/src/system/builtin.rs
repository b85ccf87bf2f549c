//! Built-in systems: linear advection, Burgers, isothermal p-system.
//! All three carry closed-form eigenstructure and wave curves.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Result, SolverError};
use crate::linalg::Mat;
use crate::state::State;
use crate::system::{FieldKind, OmegaBox, System};

fn take(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn reject_unknown(params: &BTreeMap<String, f64>, known: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !known.contains(&k.as_str()) {
            return Err(SolverError::InvalidInput(format!(
                "unknown system parameter `{k}` (known: {known:?})"
            )));
        }
    }
    Ok(())
}

pub fn build(name: &str, params: &BTreeMap<String, f64>) -> Result<Arc<dyn System>> {
    match name {
        "advection" => {
            reject_unknown(params, &["speed", "box_half"])?;
            Ok(Arc::new(Advection {
                speed: take(params, "speed", 1.0),
                box_half: take(params, "box_half", 10.0),
            }))
        }
        "burgers" => {
            reject_unknown(params, &["box_half"])?;
            Ok(Arc::new(Burgers { box_half: take(params, "box_half", 2.0) }))
        }
        "p-system" => {
            reject_unknown(params, &["sound_speed", "rho_min", "rho_max", "q_max"])?;
            let a = take(params, "sound_speed", 1.0);
            if a <= 0.0 {
                return Err(SolverError::InvalidInput("sound_speed must be positive".into()));
            }
            Ok(Arc::new(PSystem {
                a,
                rho_min: take(params, "rho_min", 0.5),
                rho_max: take(params, "rho_max", 2.0),
                q_max: take(params, "q_max", 0.4),
            }))
        }
        other => Err(SolverError::InvalidInput(format!(
            "unknown system `{other}` (known: advection, burgers, p-system)"
        ))),
    }
}

/// Linear advection `u_t + a u_x = 0`. Single linearly degenerate field.
#[derive(Debug, Clone)]
pub struct Advection {
    pub speed: f64,
    pub box_half: f64,
}

impl System for Advection {
    fn n(&self) -> usize {
        1
    }
    fn name(&self) -> &str {
        "advection"
    }
    fn base_state(&self) -> State {
        State(vec![0.0])
    }
    fn flux(&self, u: &State) -> State {
        State(vec![self.speed * u[0]])
    }
    fn jacobian(&self, _u: &State) -> Mat {
        Mat::from_rows(&[vec![self.speed]])
    }
    fn field_kind(&self, _family: usize) -> FieldKind {
        FieldKind::LinearlyDegenerate
    }
    fn omega_box(&self) -> OmegaBox {
        OmegaBox::new(State(vec![-self.box_half]), State(vec![self.box_half]))
    }
    fn speed_bounds(&self) -> Vec<(f64, f64)> {
        vec![(self.speed, self.speed)]
    }
    fn lambda_hat(&self) -> f64 {
        self.speed.abs() + 0.5
    }
    fn eigen_basis(&self, _u: &State) -> Option<(Vec<f64>, Vec<State>)> {
        Some((vec![self.speed], vec![State(vec![1.0])]))
    }
    fn analytic_rarefaction(&self, u: &State, _family: usize, sigma: f64) -> Option<State> {
        // arc-length parametrization of the contact family
        Some(State(vec![u[0] + sigma]))
    }
    fn analytic_shock(&self, u: &State, _family: usize, sigma: f64) -> Option<(State, f64)> {
        Some((State(vec![u[0] + sigma]), self.speed))
    }
}

/// Burgers `u_t + (u^2/2)_x = 0`. Single genuinely nonlinear field with
/// `lambda = u`, already normalized.
#[derive(Debug, Clone)]
pub struct Burgers {
    pub box_half: f64,
}

impl System for Burgers {
    fn n(&self) -> usize {
        1
    }
    fn name(&self) -> &str {
        "burgers"
    }
    fn base_state(&self) -> State {
        State(vec![0.0])
    }
    fn flux(&self, u: &State) -> State {
        State(vec![0.5 * u[0] * u[0]])
    }
    fn jacobian(&self, u: &State) -> Mat {
        Mat::from_rows(&[vec![u[0]]])
    }
    fn field_kind(&self, _family: usize) -> FieldKind {
        FieldKind::GenuinelyNonlinear
    }
    fn omega_box(&self) -> OmegaBox {
        OmegaBox::new(State(vec![-self.box_half]), State(vec![self.box_half]))
    }
    fn speed_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-self.box_half, self.box_half)]
    }
    fn lambda_hat(&self) -> f64 {
        self.box_half + 0.5
    }
    fn eigen_basis(&self, u: &State) -> Option<(Vec<f64>, Vec<State>)> {
        Some((vec![u[0]], vec![State(vec![1.0])]))
    }
    fn analytic_rarefaction(&self, u: &State, _family: usize, sigma: f64) -> Option<State> {
        Some(State(vec![u[0] + sigma]))
    }
    fn analytic_shock(&self, u: &State, _family: usize, sigma: f64) -> Option<(State, f64)> {
        // Rankine-Hugoniot speed is the arithmetic mean
        Some((State(vec![u[0] + sigma]), u[0] + 0.5 * sigma))
    }
}

/// Isothermal p-system in conserved variables `(rho, q)`:
/// `rho_t + q_x = 0`, `q_t + (q^2/rho + a^2 rho)_x = 0`.
///
/// Both fields are genuinely nonlinear with `lambda = q/rho -+ a`. The
/// admissible box is subsonic: `|q/rho| < a` on its corners.
#[derive(Debug, Clone)]
pub struct PSystem {
    pub a: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub q_max: f64,
}

impl PSystem {
    fn v(&self, u: &State) -> f64 {
        u[1] / u[0]
    }

    fn v_extremes(&self) -> (f64, f64) {
        let vmax = self.q_max / self.rho_min;
        (-vmax, vmax)
    }
}

impl System for PSystem {
    fn n(&self) -> usize {
        2
    }
    fn name(&self) -> &str {
        "p-system"
    }
    fn base_state(&self) -> State {
        State(vec![0.5 * (self.rho_min + self.rho_max), 0.0])
    }
    fn flux(&self, u: &State) -> State {
        let (rho, q) = (u[0], u[1]);
        State(vec![q, q * q / rho + self.a * self.a * rho])
    }
    fn jacobian(&self, u: &State) -> Mat {
        let (rho, q) = (u[0], u[1]);
        let v = q / rho;
        Mat::from_rows(&[vec![0.0, 1.0], vec![self.a * self.a - v * v, 2.0 * v]])
    }
    fn field_kind(&self, _family: usize) -> FieldKind {
        FieldKind::GenuinelyNonlinear
    }
    fn omega_box(&self) -> OmegaBox {
        OmegaBox::new(
            State(vec![self.rho_min, -self.q_max]),
            State(vec![self.rho_max, self.q_max]),
        )
    }
    fn speed_bounds(&self) -> Vec<(f64, f64)> {
        let (vmin, vmax) = self.v_extremes();
        vec![(vmin - self.a, vmax - self.a), (vmin + self.a, vmax + self.a)]
    }
    fn lambda_hat(&self) -> f64 {
        let (_, vmax) = self.v_extremes();
        self.a + vmax + 0.2
    }
    fn eigen_basis(&self, u: &State) -> Option<(Vec<f64>, Vec<State>)> {
        let rho = u[0];
        let v = self.v(u);
        let a = self.a;
        Some((
            vec![v - a, v + a],
            vec![
                State(vec![-rho / a, -rho * (v - a) / a]),
                State(vec![rho / a, rho * (v + a) / a]),
            ],
        ))
    }
    fn analytic_rarefaction(&self, u: &State, family: usize, sigma: f64) -> Option<State> {
        let rho = u[0];
        let v = self.v(u);
        let a = self.a;
        let (rho2, v2) = match family {
            1 => (rho * (-sigma / a).exp(), v + sigma),
            _ => (rho * (sigma / a).exp(), v + sigma),
        };
        Some(State(vec![rho2, rho2 * v2]))
    }
    fn analytic_shock(&self, u: &State, family: usize, sigma: f64) -> Option<(State, f64)> {
        let rho = u[0];
        let v = self.v(u);
        let a = self.a;
        let t = sigma / a;
        // sqrt(rho2/rho) solves r^2 +- (sigma/a) r - 1 = 0
        let r = match family {
            1 => 0.5 * (-t + (t * t + 4.0).sqrt()),
            _ => 0.5 * (t + (t * t + 4.0).sqrt()),
        };
        let rho2 = rho * r * r;
        let v2 = v + sigma;
        let speed = match family {
            1 => v - a * r,
            _ => v + a * r,
        };
        Some((State(vec![rho2, rho2 * v2]), speed))
    }
}
