//! Smooth-turn mobility: straight legs and constant-radius turns whose curvature
//! and duration are redrawn at random maneuver boundaries. Motion is planar; each
//! UAV keeps the altitude it was deployed at.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::net_model::{Region, Vec3};
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StParams {
    /// 1/m
    pub curvature_stddev: f64,
    /// s
    pub mean_maneuver_duration: f64,
    /// m/s
    pub speed: f64,
    /// m
    pub r_min: f64,
}

impl Default for StParams {
    fn default() -> Self {
        StParams { curvature_stddev: 1.0 / 2000.0, mean_maneuver_duration: 10.0, speed: 180.0, r_min: 300.0 }
    }
}

impl StParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            ("mobility.curvature_stddev", self.curvature_stddev >= 0.0),
            ("mobility.mean_maneuver_duration", self.mean_maneuver_duration > 0.0),
            ("uav.speed", self.speed >= 0.0),
            ("mobility.r_min", self.r_min > 0.0),
        ];
        for (field, ok) in checks {
            if !ok {
                return Err(ConfigError::invalid(field, "out of range"));
            }
        }
        if [self.curvature_stddev, self.mean_maneuver_duration, self.speed, self.r_min].iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::invalid("mobility", "parameters must be finite"));
        }
        Ok(())
    }

    pub fn max_curvature(&self) -> f64 {
        1.0 / self.r_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StState {
    /// radians, counter-clockwise from +x
    pub heading: f64,
    /// 1/m, positive turns left, 0 flies straight
    pub turn_curvature: f64,
    pub maneuver_end: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maneuver {
    pub curvature: f64,
    pub maneuver_end: SimTime,
}

impl StState {
    pub fn apply(&mut self, m: Maneuver) {
        self.turn_curvature = m.curvature;
        self.maneuver_end = m.maneuver_end;
    }
}

/// Draws the next maneuver: curvature from a zero-mean normal truncated to the
/// turn-radius limit, duration exponential.
pub fn st_sample_maneuver<R: Rng + ?Sized>(rng: &mut R, p: &StParams, now: SimTime) -> Maneuver {
    let kmax = p.max_curvature();
    let curvature = if p.curvature_stddev > 0.0 {
        let normal = Normal::new(0.0, p.curvature_stddev).expect("validated stddev");
        loop {
            let k: f64 = normal.sample(rng);
            if k.abs() <= kmax {
                break k;
            }
        }
    } else {
        0.0
    };
    let tau = Exp::new(1.0 / p.mean_maneuver_duration).expect("validated duration").sample(rng);
    Maneuver { curvature, maneuver_end: now + tau }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Advances one node by `dt` along its current arc. Leaving the region reflects
/// the heading specularly off the crossed wall and clamps the position inside.
pub fn st_step(position: Vec3, state: &StState, speed: f64, dt: f64, region: &Region) -> (Vec3, f64) {
    let s = speed * dt;
    let h0 = state.heading;
    let k = state.turn_curvature;
    let (dx, dy, h1) = if k.abs() < 1e-12 {
        (s * h0.cos(), s * h0.sin(), h0)
    } else {
        let h1 = h0 + k * s;
        ((h1.sin() - h0.sin()) / k, (h0.cos() - h1.cos()) / k, h1)
    };
    let mut p = Vec3::new(position.x + dx, position.y + dy, position.z);
    let (mut cx, mut cy) = (h1.cos(), h1.sin());
    if p.x < region.min.x {
        p.x = 2.0 * region.min.x - p.x;
        cx = cx.abs();
    } else if p.x > region.max.x {
        p.x = 2.0 * region.max.x - p.x;
        cx = -cx.abs();
    }
    if p.y < region.min.y {
        p.y = 2.0 * region.min.y - p.y;
        cy = cy.abs();
    } else if p.y > region.max.y {
        p.y = 2.0 * region.max.y - p.y;
        cy = -cy.abs();
    }
    (region.clamp(p), wrap_angle(cy.atan2(cx)))
}

pub fn velocity(heading: f64, speed: f64) -> Vec3 {
    Vec3::new(speed * heading.cos(), speed * heading.sin(), 0.0)
}
