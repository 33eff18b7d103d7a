//! Synthetic enclosed-room radar scenes with per-point provenance.
//!
//! A scene is an axis-aligned box (room frame: origin at the floor corner
//! behind and to the right of the sensor, `x` along the room, `y` across it,
//! `z` up) with a sensor on the front wall looking down `+x`. Every frame
//! contains walking pedestrians sampled on a vertical capsule, first-order
//! multipath ghosts mirrored across reflective planes, static structure on
//! walls and ceiling, and low-RCS volumetric dust whose rate grows with the
//! dust level.
//!
//! Randomness comes from a single ChaCha8 stream seeded with
//! `SceneSpec::rng_seed`, so a (spec, seed) pair always reproduces the same
//! frames bit for bit.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::{angles_of, norm, Frame, RadarPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidSpec(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorMount {
    /// Room-frame position.
    pub position: [f64; 3],
    /// Half-angles of the field of view used for ground-truth visibility.
    pub fov_azimuth_deg: f64,
    pub fov_elevation_deg: f64,
    pub max_range: f64,
}

/// An axis-aligned room surface, `coordinate[axis] == offset` in the room frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectivePlane {
    pub name: String,
    pub axis: Axis,
    pub offset: f64,
    /// Specular gain of a bounce off this surface relative to the direct return, dB.
    pub reflectivity_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhostModel {
    pub enabled: bool,
    /// Names of the planes that produce ghosts.
    pub planes: Vec<String>,
    /// Extra RCS inflation added on top of the plane reflectivity, dB.
    pub inflation_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DustModel {
    /// Dust points per frame, indexed by dust level.
    pub rates: Vec<usize>,
    pub rcs_mean: f64,
    pub rcs_sigma: f64,
    /// Upper truncation of the dust RCS distribution; draws above it are repeated.
    pub rcs_ceiling: f64,
    /// Dust radial speeds are uniform in `[-max_speed, max_speed]`.
    pub max_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureModel {
    pub enabled: bool,
    pub points_per_segment: usize,
    pub rcs_mean: f64,
    pub rcs_sigma: f64,
    /// Standard deviation of the position noise, meters.
    pub jitter: f64,
    /// Room-frame line segments (metal strips, ribs) that return static echoes.
    pub segments: Vec<[[f64; 3]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianSpec {
    /// Floor-plane room coordinates. The walker starts at the first waypoint
    /// and walks the polyline back and forth.
    pub waypoints: Vec<[f64; 2]>,
    pub speed: f64,
    pub height: f64,
    pub radius: f64,
    pub points_per_frame: usize,
    pub rcs_mean: f64,
    pub rcs_sigma: f64,
    /// Radial velocity noise is uniform in `[-velocity_jitter, velocity_jitter]`.
    pub velocity_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub frame_rate_hz: f64,
    pub frame_count: usize,
    pub rng_seed: u64,
    pub dust_level: usize,
    pub room: Room,
    pub sensor: SensorMount,
    pub planes: Vec<ReflectivePlane>,
    pub ghosts: GhostModel,
    pub dust: DustModel,
    pub structure: StructureModel,
    pub pedestrians: Vec<PedestrianSpec>,
}

const DEFAULT_SCENE: &str = include_str!("../../../config/scene.toml");

impl SceneSpec {
    /// The shipped trailer scene.
    pub fn default_scene() -> Self {
        Self::from_toml(DEFAULT_SCENE).expect("shipped scene file is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let spec: SceneSpec = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} is not finite")))
            }
        };
        if !(self.frame_rate_hz.is_finite() && self.frame_rate_hz > 0.0) {
            return Err(invalid("frame_rate_hz must be positive"));
        }
        if self.frame_count == 0 {
            return Err(invalid("frame_count must be at least 1"));
        }
        let room = &self.room;
        for (name, v) in [("length", room.length), ("width", room.width), ("height", room.height)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("room {name} must be positive")));
            }
        }
        let dims = [room.length, room.width, room.height];
        for (axis, &v) in self.sensor.position.iter().enumerate() {
            if !(0.0..=dims[axis]).contains(&v) {
                return Err(invalid("sensor must be inside the room"));
            }
        }
        for (name, v) in [
            ("fov_azimuth_deg", self.sensor.fov_azimuth_deg),
            ("fov_elevation_deg", self.sensor.fov_elevation_deg),
            ("max_range", self.sensor.max_range),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("sensor {name} must be positive")));
            }
        }
        for plane in &self.planes {
            finite("plane offset", plane.offset)?;
            finite("plane reflectivity_db", plane.reflectivity_db)?;
        }
        for name in &self.ghosts.planes {
            if !self.planes.iter().any(|p| &p.name == name) {
                return Err(invalid(format!("ghost plane `{name}` is not declared")));
            }
        }
        finite("ghost inflation_db", self.ghosts.inflation_db)?;

        let dust = &self.dust;
        if dust.rates.is_empty() {
            return Err(invalid("dust rates must list at least level 0"));
        }
        if dust.rates.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("dust rates must be non-decreasing in level"));
        }
        if self.dust_level >= dust.rates.len() {
            return Err(invalid(format!(
                "dust_level {} exceeds the highest defined level {}",
                self.dust_level,
                dust.rates.len() - 1
            )));
        }
        finite("dust rcs_mean", dust.rcs_mean)?;
        finite("dust rcs_ceiling", dust.rcs_ceiling)?;
        if !(dust.rcs_sigma.is_finite() && dust.rcs_sigma >= 0.0) {
            return Err(invalid("dust rcs_sigma must be non-negative"));
        }
        if dust.rcs_ceiling < dust.rcs_mean {
            return Err(invalid("dust rcs_ceiling must not be below rcs_mean"));
        }
        if !(dust.max_speed.is_finite() && dust.max_speed >= 0.0) {
            return Err(invalid("dust max_speed must be non-negative"));
        }

        let s = &self.structure;
        finite("structure rcs_mean", s.rcs_mean)?;
        if !(s.rcs_sigma.is_finite() && s.rcs_sigma >= 0.0 && s.jitter.is_finite() && s.jitter >= 0.0) {
            return Err(invalid("structure sigmas must be non-negative"));
        }
        if s.segments.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("structure segment coordinates must be finite"));
        }

        for (id, ped) in self.pedestrians.iter().enumerate() {
            if ped.waypoints.is_empty() {
                return Err(invalid(format!("pedestrian {id} has no waypoints")));
            }
            if ped.waypoints.iter().flatten().any(|v| !v.is_finite()) {
                return Err(invalid(format!("pedestrian {id} waypoint is not finite")));
            }
            if !(ped.speed.is_finite() && ped.speed >= 0.0) {
                return Err(invalid(format!("pedestrian {id} speed must be non-negative")));
            }
            if !(ped.radius.is_finite() && ped.radius > 0.0 && ped.height.is_finite() && ped.height >= 2.0 * ped.radius)
            {
                return Err(invalid(format!(
                    "pedestrian {id} needs radius > 0 and height >= 2 * radius"
                )));
            }
            finite("pedestrian rcs_mean", ped.rcs_mean)?;
            if !(ped.rcs_sigma.is_finite() && ped.rcs_sigma >= 0.0) {
                return Err(invalid(format!("pedestrian {id} rcs_sigma must be non-negative")));
            }
            if !(ped.velocity_jitter.is_finite() && ped.velocity_jitter >= 0.0) {
                return Err(invalid(format!("pedestrian {id} velocity_jitter must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn dust_rate(&self) -> usize {
        self.dust.rates[self.dust_level]
    }
}

/// Plane `normal · p == offset` in the sensor frame; `normal` is unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: [f64; 3],
    pub offset: f64,
}

impl Plane {
    pub fn axis_aligned(axis: usize, offset: f64) -> Self {
        let mut normal = [0.0; 3];
        normal[axis] = 1.0;
        Self { normal, offset }
    }

    fn reflect_point(&self, p: [f64; 3]) -> [f64; 3] {
        let s = dot(self.normal, p) - self.offset;
        [0, 1, 2].map(|a| p[a] - 2.0 * s * self.normal[a])
    }

    fn reflect_vector(&self, u: [f64; 3]) -> [f64; 3] {
        let s = dot(self.normal, u);
        [0, 1, 2].map(|a| u[a] - 2.0 * s * self.normal[a])
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// First-order multipath image of `point` across `plane`.
///
/// The ghost sits at the mirrored position with its RCS raised by `gain_db`.
/// Speed is preserved; the sign follows the mirrored line-of-sight motion.
pub fn mirror_ghost(point: &RadarPoint, plane: &Plane, gain_db: f64) -> RadarPoint {
    let p = point.position();
    let ghost = plane.reflect_point(p);
    let range = norm(p);
    let ghost_range = norm(ghost);
    let mut v = point.v;
    if range > 0.0 && ghost_range > 0.0 {
        let motion = plane.reflect_vector(p.map(|c| c * point.v / range));
        let along = dot(motion, ghost) / ghost_range;
        if along != 0.0 {
            v = point.v.abs().copysign(along);
        }
    }
    RadarPoint::from_cartesian(ghost, point.rcs + gain_db, v)
}

/// Where a point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Pedestrian(usize),
    Ghost,
    Dust,
    Structure,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Pedestrian(id) => write!(f, "P{id}"),
            Provenance::Ghost => f.write_str("G"),
            Provenance::Dust => f.write_str("D"),
            Provenance::Structure => f.write_str("S"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "G" => Ok(Provenance::Ghost),
            "D" => Ok(Provenance::Dust),
            "S" => Ok(Provenance::Structure),
            _ => s
                .strip_prefix('P')
                .and_then(|id| id.parse().ok())
                .map(Provenance::Pedestrian)
                .ok_or_else(|| format!("unknown provenance label `{s}`")),
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruePedestrian {
    pub id: usize,
    /// Sensor-frame body centre.
    pub position: [f64; 3],
    pub in_fov: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub seq: u64,
    pub dust_level: usize,
    pub pedestrians: Vec<TruePedestrian>,
    /// One label per point of the matching frame.
    pub labels: Vec<Provenance>,
}

impl GroundTruth {
    /// Pedestrians the sensor can see this frame.
    pub fn true_count(&self) -> usize {
        self.pedestrians.iter().filter(|p| p.in_fov).count()
    }

    pub fn visible(&self) -> impl Iterator<Item = &TruePedestrian> {
        self.pedestrians.iter().filter(|p| p.in_fov)
    }
}

/// Ping-pong walker along a polyline.
#[derive(Debug, Clone)]
struct Walker {
    waypoints: Vec<[f64; 2]>,
    cumulative: Vec<f64>,
    speed: f64,
}

impl Walker {
    fn new(waypoints: &[[f64; 2]], speed: f64) -> Self {
        let mut cumulative = vec![0.0];
        for w in waypoints.windows(2) {
            let step = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            cumulative.push(cumulative.last().unwrap() + step);
        }
        Self {
            waypoints: waypoints.to_vec(),
            cumulative,
            speed,
        }
    }

    /// Floor position and velocity at time `t`.
    fn state(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let total = *self.cumulative.last().unwrap();
        if total == 0.0 || self.speed == 0.0 {
            return (self.waypoints[0], [0.0, 0.0]);
        }
        let travelled = (self.speed * t).rem_euclid(2.0 * total);
        let (s, sign) = if travelled <= total {
            (travelled, 1.0)
        } else {
            (2.0 * total - travelled, -1.0)
        };
        let seg = self
            .cumulative
            .windows(2)
            .position(|c| s <= c[1] && c[1] > c[0])
            .unwrap_or(self.cumulative.len() - 2);
        let (a, b) = (self.waypoints[seg], self.waypoints[seg + 1]);
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        let f = ((s - self.cumulative[seg]) / len).clamp(0.0, 1.0);
        let pos = [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
        let dir = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        (pos, [sign * self.speed * dir[0], sign * self.speed * dir[1]])
    }
}

/// Frame generator; yields `frame_count` frames.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: SceneSpec,
    rng: ChaCha8Rng,
    walkers: Vec<Walker>,
    ghost_planes: Vec<(Plane, f64)>,
    next: usize,
    seq_offset: u64,
    time_offset: f64,
}

impl Simulator {
    pub fn new(spec: SceneSpec) -> Result<Self, SimError> {
        spec.validate()?;
        let sensor = spec.sensor.position;
        let ghost_planes = if spec.ghosts.enabled {
            spec.ghosts
                .planes
                .iter()
                .filter_map(|name| spec.planes.iter().find(|p| &p.name == name))
                .map(|p| {
                    let axis = p.axis.index();
                    (
                        Plane::axis_aligned(axis, p.offset - sensor[axis]),
                        p.reflectivity_db + spec.ghosts.inflation_db,
                    )
                })
                .collect()
        } else {
            Vec::new()
        };
        let walkers = spec
            .pedestrians
            .iter()
            .map(|p| Walker::new(&p.waypoints, p.speed))
            .collect();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(spec.rng_seed),
            spec,
            walkers,
            ghost_planes,
            next: 0,
            seq_offset: 0,
            time_offset: 0.0,
        })
    }

    /// Shifts emitted sequence numbers and timestamps, for concatenating streams.
    pub fn with_offsets(mut self, seq_offset: u64, time_offset: f64) -> Self {
        self.seq_offset = seq_offset;
        self.time_offset = time_offset;
        self
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    fn to_sensor(&self, p: [f64; 3]) -> [f64; 3] {
        let s = self.spec.sensor.position;
        [p[0] - s[0], p[1] - s[1], p[2] - s[2]]
    }

    fn in_fov(&self, p: [f64; 3]) -> bool {
        let (az, el) = angles_of(p);
        az.abs() <= self.spec.sensor.fov_azimuth_deg.to_radians()
            && el.abs() <= self.spec.sensor.fov_elevation_deg.to_radians()
            && norm(p) <= self.spec.sensor.max_range
    }

    fn generate(&mut self, index: usize) -> (Frame, GroundTruth) {
        let t = index as f64 / self.spec.frame_rate_hz;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut truth = Vec::new();

        // Pedestrian bodies.
        let mut bodies = Vec::new();
        for (id, (ped, walker)) in self.spec.pedestrians.iter().zip(&self.walkers).enumerate() {
            let (floor, vel) = walker.state(t);
            let velocity = [vel[0], vel[1], 0.0];
            let centre = self.to_sensor([floor[0], floor[1], ped.height / 2.0]);
            truth.push(TruePedestrian {
                id,
                position: centre,
                in_fov: self.in_fov(centre),
            });
            let rcs = Normal::new(ped.rcs_mean, ped.rcs_sigma).expect("validated sigma");
            for _ in 0..ped.points_per_frame {
                let theta = self.rng.random_range(0.0..TAU);
                let z = self.rng.random_range(0.0..=ped.height);
                let r = capsule_radius(z, ped.height, ped.radius);
                let room = [floor[0] + r * theta.cos(), floor[1] + r * theta.sin(), z];
                let p = self.to_sensor(room);
                let range = norm(p);
                let radial = if range > 0.0 { dot(velocity, p) / range } else { 0.0 };
                let jitter = if ped.velocity_jitter > 0.0 {
                    self.rng.random_range(-ped.velocity_jitter..=ped.velocity_jitter)
                } else {
                    0.0
                };
                let point = RadarPoint::from_cartesian(p, rcs.sample(&mut self.rng), radial + jitter);
                bodies.push(point);
                points.push(point);
                labels.push(Provenance::Pedestrian(id));
            }
        }

        // Multipath images of the bodies.
        for &(plane, gain) in &self.ghost_planes {
            for body in &bodies {
                points.push(mirror_ghost(body, &plane, gain));
                labels.push(Provenance::Ghost);
            }
        }

        // Static structure.
        let s = &self.spec.structure;
        if s.enabled && s.points_per_segment > 0 {
            let rcs = Normal::new(s.rcs_mean, s.rcs_sigma).expect("validated sigma");
            let jitter = Normal::new(0.0, s.jitter).expect("validated sigma");
            for seg in &s.segments {
                for _ in 0..s.points_per_segment {
                    let f = self.rng.random_range(0.0..=1.0);
                    let room = [0, 1, 2].map(|a| seg[0][a] + f * (seg[1][a] - seg[0][a]));
                    let room = room.map(|c| c + jitter.sample(&mut self.rng));
                    let p = self.to_sensor(room);
                    points.push(RadarPoint::from_cartesian(p, rcs.sample(&mut self.rng), 0.0));
                    labels.push(Provenance::Structure);
                }
            }
        }

        // Dust.
        let d = &self.spec.dust;
        let rate = d.rates[self.spec.dust_level];
        if rate > 0 {
            let rcs = Normal::new(d.rcs_mean, d.rcs_sigma).expect("validated sigma");
            let dims = [self.spec.room.length, self.spec.room.width, self.spec.room.height];
            for _ in 0..rate {
                let room = dims.map(|len| self.rng.random_range(0.0..=len));
                let p = self.to_sensor(room);
                let value = loop {
                    let x = rcs.sample(&mut self.rng);
                    if x <= d.rcs_ceiling {
                        break x;
                    }
                };
                let v = if d.max_speed > 0.0 {
                    self.rng.random_range(-d.max_speed..=d.max_speed)
                } else {
                    0.0
                };
                points.push(RadarPoint::from_cartesian(p, value, v));
                labels.push(Provenance::Dust);
            }
        }

        let seq = self.seq_offset + index as u64;
        (
            Frame::new(seq, self.time_offset + t, points),
            GroundTruth {
                seq,
                dust_level: self.spec.dust_level,
                pedestrians: truth,
                labels,
            },
        )
    }
}

/// Horizontal radius of a vertical capsule of the given height at height `z`.
fn capsule_radius(z: f64, height: f64, radius: f64) -> f64 {
    let cap = if z < radius {
        radius - z
    } else if z > height - radius {
        z - (height - radius)
    } else {
        return radius;
    };
    radius * (1.0 - (cap / radius).powi(2)).max(0.0).sqrt()
}

impl Iterator for Simulator {
    type Item = (Frame, GroundTruth);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.spec.frame_count {
            return None;
        }
        let out = self.generate(self.next);
        self.next += 1;
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.spec.frame_count - self.next;
        (left, Some(left))
    }
}

/// Runs the scene once, consuming the spec.
pub fn simulate(spec: SceneSpec) -> Result<Simulator, SimError> {
    Simulator::new(spec)
}

/// Runs the scene once per dust level, concatenating the streams with
/// continuous sequence numbers and timestamps.
pub fn simulate_sweep(
    spec: &SceneSpec,
    levels: &[usize],
) -> Result<impl Iterator<Item = (Frame, GroundTruth)>, SimError> {
    let mut sims = Vec::with_capacity(levels.len());
    for (k, &level) in levels.iter().enumerate() {
        let mut s = spec.clone();
        s.dust_level = level;
        let offset = (k * spec.frame_count) as u64;
        let time = (k * spec.frame_count) as f64 / spec.frame_rate_hz;
        sims.push(Simulator::new(s)?.with_offsets(offset, time));
    }
    Ok(sims.into_iter().flatten())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::SIM_ANGLE_TOLERANCE;
    use proptest::prelude::*;

    fn quiet_scene() -> SceneSpec {
        let mut spec = SceneSpec::default_scene();
        spec.pedestrians.clear();
        spec.dust_level = 0;
        spec.ghosts.enabled = false;
        spec.structure.enabled = false;
        spec.frame_count = 5;
        spec
    }

    #[test]
    fn default_scene_mirrors_trailer() {
        let spec = SceneSpec::default_scene();
        assert_eq!((spec.room.length, spec.room.width, spec.room.height), (16.2, 3.0, 3.4));
        assert_eq!(spec.pedestrians.len(), 2);
        assert_eq!(spec.dust.rates, vec![0, 200, 600, 1500, 3000]);
    }

    #[test]
    fn empty_scene_gives_empty_frames() {
        let frames: Vec<_> = simulate(quiet_scene()).unwrap().collect();
        assert_eq!(frames.len(), 5);
        for (i, (f, gt)) in frames.iter().enumerate() {
            assert!(f.is_empty());
            assert!(gt.labels.is_empty());
            assert_eq!(f.seq, i as u64);
            assert_eq!(gt.true_count(), 0);
        }
    }

    #[test]
    fn stationary_pedestrian_velocity_stays_within_jitter() {
        let mut spec = quiet_scene();
        let mut ped = SceneSpec::default_scene().pedestrians[0].clone();
        ped.speed = 0.0;
        spec.pedestrians.push(ped.clone());
        spec.frame_count = 1;
        let (frame, gt) = simulate(spec).unwrap().next().unwrap();
        assert_eq!(frame.len(), ped.points_per_frame);
        assert!(frame.points.iter().all(|p| p.v.abs() <= ped.velocity_jitter));
        assert_eq!(gt.true_count(), 1);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut spec = SceneSpec::default_scene();
        spec.frame_count = 20;
        spec.dust_level = 2;
        let a: Vec<_> = simulate(spec.clone()).unwrap().collect();
        let b: Vec<_> = simulate(spec.clone()).unwrap().collect();
        assert_eq!(a, b);
        spec.rng_seed += 1;
        let c: Vec<_> = simulate(spec).unwrap().collect();
        assert_ne!(a, c);
    }

    #[test]
    fn raw_count_rises_with_dust_level() {
        let mut spec = SceneSpec::default_scene();
        spec.frame_count = 3;
        let counts: Vec<usize> = (0..=4)
            .map(|level| {
                spec.dust_level = level;
                simulate(spec.clone()).unwrap().map(|(f, _)| f.len()).sum()
            })
            .collect();
        assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
    }

    #[test]
    fn every_point_is_valid_and_labelled() {
        let mut spec = SceneSpec::default_scene();
        spec.frame_count = 10;
        spec.dust_level = 3;
        for (frame, gt) in simulate(spec).unwrap() {
            assert_eq!(frame.len(), gt.labels.len());
            assert_eq!(frame.validate(SIM_ANGLE_TOLERANCE), Ok(()));
        }
    }

    #[test]
    fn sweep_has_continuous_sequence() {
        let mut spec = SceneSpec::default_scene();
        spec.frame_count = 4;
        let seqs: Vec<(u64, usize)> = simulate_sweep(&spec, &[0, 2, 4])
            .unwrap()
            .map(|(f, gt)| (f.seq, gt.dust_level))
            .collect();
        assert_eq!(seqs.len(), 12);
        assert!(seqs.iter().enumerate().all(|(i, s)| s.0 == i as u64));
        assert_eq!(seqs[4].1, 2);
        assert_eq!(seqs[11].1, 4);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = SceneSpec::default_scene();
        spec.frame_count = 0;
        assert!(Simulator::new(spec).is_err());
        let mut spec = SceneSpec::default_scene();
        spec.dust.rates = vec![0, 10, 5];
        spec.dust_level = 0;
        assert!(Simulator::new(spec).is_err());
        let mut spec = SceneSpec::default_scene();
        spec.pedestrians[0].speed = -1.0;
        assert!(Simulator::new(spec).is_err());
        let mut spec = SceneSpec::default_scene();
        spec.room.width = 0.0;
        assert!(Simulator::new(spec).is_err());
        let mut spec = SceneSpec::default_scene();
        spec.dust_level = 9;
        assert!(Simulator::new(spec).is_err());
        let mut spec = SceneSpec::default_scene();
        spec.ghosts.planes.push("skylight".into());
        assert!(Simulator::new(spec).is_err());
    }

    #[test]
    fn strict_scene_parsing() {
        let text = include_str!("../../../config/scene.toml");
        let extra = format!("{text}\nbogus = 1\n");
        assert!(SceneSpec::from_toml(&extra).is_err());
        let missing = text.replacen("rng_seed", "# rng_seed", 1);
        assert!(SceneSpec::from_toml(&missing).is_err());
    }

    #[test]
    fn mirror_across_side_wall() {
        let p = RadarPoint::from_cartesian([2.0, 1.0, 1.0], -5.0, 1.0);
        let g = mirror_ghost(&p, &Plane::axis_aligned(1, 1.5), 15.0);
        assert_eq!(g.position(), [2.0, 2.0, 1.0]);
        assert_eq!(g.rcs, 10.0);
        assert_eq!(g.v.abs(), 1.0);
        assert_eq!(g.validate(SIM_ANGLE_TOLERANCE), Ok(()));
    }

    #[test]
    fn point_on_plane_is_fixed() {
        let p = RadarPoint::from_cartesian([3.0, 1.5, -0.2], 0.0, -0.7);
        let g = mirror_ghost(&p, &Plane::axis_aligned(1, 1.5), 0.0);
        assert_eq!(g.position(), p.position());
        assert_eq!(g.v, p.v);
    }

    #[test]
    fn walker_ping_pongs() {
        let w = Walker::new(&[[0.0, 0.0], [4.0, 0.0]], 2.0);
        assert_eq!(w.state(0.0), ([0.0, 0.0], [2.0, 0.0]));
        assert_eq!(w.state(1.0).0, [2.0, 0.0]);
        let (pos, vel) = w.state(3.0);
        assert_eq!(pos, [2.0, 0.0]);
        assert_eq!(vel, [-2.0, 0.0]);
        assert_eq!(w.state(4.0).0, [0.0, 0.0]);
    }

    #[test]
    fn provenance_labels_round_trip() {
        for p in [
            Provenance::Pedestrian(12),
            Provenance::Ghost,
            Provenance::Dust,
            Provenance::Structure,
        ] {
            assert_eq!(p.to_string().parse::<Provenance>(), Ok(p));
        }
        assert!("X".parse::<Provenance>().is_err());
    }

    proptest! {
        #[test]
        fn reflection_is_an_involution(
            p in prop::array::uniform3(-20.0f64..20.0),
            normal in prop::array::uniform3(-1.0f64..1.0),
            offset in -5.0f64..5.0,
            v in -5.0f64..5.0,
        ) {
            let n = norm(normal);
            prop_assume!(n > 1e-3);
            let plane = Plane { normal: normal.map(|c| c / n), offset };
            let point = RadarPoint::from_cartesian(p, 0.0, v);
            let back = mirror_ghost(&mirror_ghost(&point, &plane, 3.0), &plane, -3.0);
            for (got, want) in back.position().into_iter().zip(p) {
                prop_assert!((got - want).abs() <= 1e-12);
            }
            prop_assert!((back.v.abs() - v.abs()).abs() < 1e-12);
            prop_assert!((back.rcs - point.rcs).abs() < 1e-12);
        }
    }
}
