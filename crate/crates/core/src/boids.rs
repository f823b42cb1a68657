//! Avoidance-only Boids: agents keep a constant speed and steer away from
//! neighbours inside the separation radius. There is no alignment or
//! cohesion.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{rasterize_objects, GridFrame, Object};
use crate::rng::{stream, tag};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Agent {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub radius: f64,
}

impl Agent {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn heading(&self) -> f64 {
        self.vy.atan2(self.vx)
    }

    pub fn object(&self) -> Object {
        Object {
            x: self.x,
            y: self.y,
            radius: self.radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub width: usize,
    pub height: usize,
    pub n_agents: usize,
    /// Drawn radius of every agent, in cells.
    pub radius: f64,
    pub separation_radius: f64,
    /// Weight of the separation vector against the current velocity.
    pub separation_gain: f64,
    /// Largest heading change per frame, radians.
    pub max_turn: f64,
    /// Cells per frame.
    pub speed: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width: 50,
            height: 50,
            n_agents: 10,
            radius: 2.0,
            separation_radius: 6.0,
            separation_gain: 4.0,
            max_turn: 0.3,
            speed: 0.5,
            seed: 0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.width < 8 || self.height < 8 {
            return fail(format!(
                "world must be at least 8x8, got {}x{}",
                self.height, self.width
            ));
        }
        if self.n_agents == 0 {
            return fail("n_agents must be at least 1".into());
        }
        if !(self.separation_radius > 0.0) {
            return fail("separation_radius must be positive".into());
        }
        if !(self.radius > 0.0) {
            return fail("radius must be positive".into());
        }
        let min_extent = self.width.min(self.height) as f64;
        if !(self.speed > 0.0 && self.speed < min_extent / 2.0) {
            return fail(format!(
                "speed must lie in (0, {}), got {}",
                min_extent / 2.0,
                self.speed
            ));
        }
        if !(self.max_turn >= 0.0) || !(self.separation_gain >= 0.0) {
            return fail("max_turn and separation_gain must be non-negative".into());
        }
        Ok(())
    }
}

/// Places agents uniformly without initial overlap, with uniform headings.
pub fn init_world(config: &WorldConfig) -> Result<Vec<Agent>> {
    config.validate()?;
    let mut rng = stream(config.seed, &[tag::INIT]);
    let max_rejections = 10 * config.n_agents * config.n_agents;
    let min_gap = 2.0 * config.radius;
    let mut rejections = 0;
    let mut agents: Vec<Agent> = Vec::with_capacity(config.n_agents);
    while agents.len() < config.n_agents {
        let x = rng.gen_range(0.0..config.width as f64);
        let y = rng.gen_range(0.0..config.height as f64);
        if agents.iter().any(|a| (a.x - x).hypot(a.y - y) < min_gap) {
            rejections += 1;
            if rejections > max_rejections {
                return Err(Error::Placement {
                    agents: config.n_agents,
                    attempts: rejections,
                });
            }
            continue;
        }
        let heading = rng.gen_range(0.0..TAU);
        agents.push(Agent {
            x,
            y,
            vx: config.speed * heading.cos(),
            vy: config.speed * heading.sin(),
            radius: config.radius,
        });
    }
    Ok(agents)
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a > PI {
        a -= TAU;
    } else if a <= -PI {
        a += TAU;
    }
    a
}

fn separation(agents: &[Agent], i: usize, config: &WorldConfig) -> (f64, f64) {
    let me = &agents[i];
    let mut s = (0.0, 0.0);
    for (j, other) in agents.iter().enumerate() {
        if j == i {
            continue;
        }
        let (dx, dy) = (me.x - other.x, me.y - other.y);
        let d2 = dx * dx + dy * dy;
        if d2 == 0.0 {
            // Unit push along a pair-keyed direction, opposite for the two agents.
            let (lo, hi) = (i.min(j) as u64, i.max(j) as u64);
            let angle = stream(config.seed, &[tag::COINCIDENT, lo, hi]).gen_range(0.0..TAU);
            let sign = if i < j { 1.0 } else { -1.0 };
            s.0 += sign * angle.cos();
            s.1 += sign * angle.sin();
        } else if d2.sqrt() < config.separation_radius {
            s.0 += dx / d2;
            s.1 += dy / d2;
        }
    }
    s
}

/// Advances every agent by one frame using positions from the start of the frame.
pub fn avoidance_step(agents: &[Agent], config: &WorldConfig) -> Vec<Agent> {
    let (w, h) = (config.width as f64, config.height as f64);
    (0..agents.len())
        .map(|i| {
            let mut a = agents[i];
            let (sx, sy) = separation(agents, i, config);
            let (dx, dy) = (
                a.vx + config.separation_gain * sx,
                a.vy + config.separation_gain * sy,
            );
            let turn = if dx == 0.0 && dy == 0.0 {
                0.0
            } else {
                wrap_angle(dy.atan2(dx) - a.heading()).clamp(-config.max_turn, config.max_turn)
            };
            if turn != 0.0 || (a.speed() - config.speed).abs() > 1e-12 {
                let (sin, cos) = turn.sin_cos();
                let (vx, vy) = (a.vx * cos - a.vy * sin, a.vx * sin + a.vy * cos);
                let norm = vx.hypot(vy);
                a.vx = config.speed * vx / norm;
                a.vy = config.speed * vy / norm;
            }
            if !(0.0..w).contains(&(a.x + a.vx)) {
                a.vx = -a.vx;
            }
            if !(0.0..h).contains(&(a.y + a.vy)) {
                a.vy = -a.vy;
            }
            a.x = (a.x + a.vx).clamp(0.0, w.next_down());
            a.y = (a.y + a.vy).clamp(0.0, h.next_down());
            a
        })
        .collect()
}

pub fn rasterize(agents: &[Agent], height: usize, width: usize) -> GridFrame {
    let objects: Vec<Object> = agents.iter().map(Agent::object).collect();
    rasterize_objects(&objects, height, width)
}

/// Agent states for frames `0..frames`, starting from `init_world`.
pub fn simulate(config: &WorldConfig, frames: usize) -> Result<Vec<Vec<Agent>>> {
    let mut agents = init_world(config)?;
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        out.push(agents.clone());
        agents = avoidance_step(&agents, config);
    }
    Ok(out)
}
