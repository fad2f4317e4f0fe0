use crate::error::{Error, Result};

/// Desired position, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub pos: f64,
    pub vel: f64,
    pub acc: f64,
}

/// Twice-differentiable desired trajectories with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    /// `A·sin(ω·t)`.
    Sinusoid { amplitude: f64, omega: f64 },
    /// Quintic blend from `from` to `to` over `[start, start + rise_time]`,
    /// with zero velocity and acceleration at both ends.
    SmoothStep {
        from: f64,
        to: f64,
        start: f64,
        rise_time: f64,
    },
    Constant { value: f64 },
}

impl Default for Trajectory {
    fn default() -> Self {
        Trajectory::Sinusoid {
            amplitude: 1.0,
            omega: 1.0,
        }
    }
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(name, "must be finite"))
            }
        };
        match *self {
            Trajectory::Sinusoid { amplitude, omega } => {
                finite("amplitude", amplitude)?;
                finite("omega", omega)
            }
            Trajectory::SmoothStep {
                from,
                to,
                start,
                rise_time,
            } => {
                finite("from", from)?;
                finite("to", to)?;
                finite("start", start)?;
                if !(rise_time.is_finite() && rise_time > 0.0) {
                    return Err(Error::domain("rise_time", format!("must be > 0, got {rise_time}")));
                }
                Ok(())
            }
            Trajectory::Constant { value } => finite("value", value),
        }
    }

    pub fn eval(&self, t: f64) -> Reference {
        match *self {
            Trajectory::Sinusoid { amplitude, omega } => {
                let (s, c) = (omega * t).sin_cos();
                Reference {
                    pos: amplitude * s,
                    vel: amplitude * omega * c,
                    acc: -amplitude * omega * omega * s,
                }
            }
            Trajectory::SmoothStep {
                from,
                to,
                start,
                rise_time,
            } => {
                let tau = ((t - start) / rise_time).clamp(0.0, 1.0);
                let span = to - from;
                let blend = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
                let rate = 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau);
                let curve = 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau);
                Reference {
                    pos: from + span * blend,
                    vel: span * rate / rise_time,
                    acc: span * curve / (rise_time * rise_time),
                }
            }
            Trajectory::Constant { value } => Reference {
                pos: value,
                vel: 0.0,
                acc: 0.0,
            },
        }
    }
}

pub fn eval_trajectory(traj: &Trajectory, t: f64) -> Reference {
    traj.eval(t)
}
