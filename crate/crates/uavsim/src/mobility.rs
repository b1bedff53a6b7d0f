//! Waypoint trajectories, positions over time, distances, travel times,
//! and surveillance coverage geometry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Real, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("field of view must lie in (0, 180) degrees, got {0}")]
    FovOutOfRange(f64),
    #[error("speed must be > 0, got {0}")]
    NonPositiveSpeed(f64),
    #[error("time {time} s outside trajectory span [{start}, {end}] s")]
    TimeOutOfSpan { time: f64, start: f64, end: f64 },
    #[error("trajectory needs at least one waypoint")]
    Empty,
    #[error("waypoint times must be strictly increasing at index {0}")]
    NonMonotoneTimes(usize),
    #[error(
        "segment {segment}: {length:.1} m at {speed} m/s needs {required:.1} s but only {available:.1} s before the next waypoint"
    )]
    UnreachableWaypoint {
        segment: usize,
        length: f64,
        speed: f64,
        required: f64,
        available: f64,
    },
}

/// A 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Scalar,
    pub y: Scalar,
}

impl Point {
    pub fn new(x: Scalar, y: Scalar) -> Self {
        Point { x, y }
    }
}

/// Euclidean distance in the horizontal plane.
pub fn distance(a: Point, b: Point) -> Scalar {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Time to cover `distance` at `speed`.
pub fn travel_time<T: Real>(distance: T, speed: T) -> Result<T, MobilityError> {
    if !(speed > T::zero()) {
        return Err(MobilityError::NonPositiveSpeed(
            speed.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(distance / speed)
}

/// Ground radius covered by a camera with the given field of view from
/// altitude `h`: r = h * tan(fov / 2).
pub fn surveillance_radius<T: Real>(altitude: T, fov_deg: T) -> Result<T, MobilityError> {
    let fov = fov_deg.to_f64().unwrap_or(f64::NAN);
    if !(fov > 0.0 && fov < 180.0) {
        return Err(MobilityError::FovOutOfRange(fov));
    }
    let half = fov_deg.to_radians() / T::from_f64_const(2.0);
    Ok(altitude * half.tan())
}

/// Covered ground area: pi * r^2.
pub fn surveillance_area<T: Real>(altitude: T, fov_deg: T) -> Result<T, MobilityError> {
    let r = surveillance_radius(altitude, fov_deg)?;
    Ok(T::from_f64_const(std::f64::consts::PI) * r * r)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    depart_time: Scalar,
    start: Point,
    end: Point,
    /// When the UAV reaches `end`; it dwells there until the next departure.
    arrival_time: Scalar,
    /// Departure time of the next segment (dwell end).
    until: Scalar,
}

/// A waypoint timetable compiled into constant-speed flight segments with
/// dwell (hover) phases at each destination.
#[derive(Debug, Clone)]
pub struct Trajectory {
    waypoints: Vec<(Scalar, Point)>,
    segments: Vec<Segment>,
    speed: Scalar,
}

impl Trajectory {
    /// Compiles `(time_s, position)` waypoints for a UAV flying at
    /// `speed`. Times must be strictly increasing and every leg must be
    /// flyable before the next scheduled departure.
    pub fn new(waypoints: Vec<(Scalar, Point)>, speed: Scalar) -> Result<Self, MobilityError> {
        if waypoints.is_empty() {
            return Err(MobilityError::Empty);
        }
        if !(speed > 0.0) {
            return Err(MobilityError::NonPositiveSpeed(speed));
        }
        for i in 1..waypoints.len() {
            if waypoints[i].0 <= waypoints[i - 1].0 {
                return Err(MobilityError::NonMonotoneTimes(i));
            }
        }
        let mut segments = Vec::with_capacity(waypoints.len().saturating_sub(1));
        for i in 0..waypoints.len() - 1 {
            let (t0, p0) = waypoints[i];
            let (t1, p1) = waypoints[i + 1];
            let length = distance(p0, p1);
            let flight = length / speed;
            if flight > t1 - t0 {
                return Err(MobilityError::UnreachableWaypoint {
                    segment: i,
                    length,
                    speed,
                    required: flight,
                    available: t1 - t0,
                });
            }
            segments.push(Segment {
                depart_time: t0,
                start: p0,
                end: p1,
                arrival_time: t0 + flight,
                until: t1,
            });
        }
        Ok(Trajectory {
            waypoints,
            segments,
            speed,
        })
    }

    pub fn speed(&self) -> Scalar {
        self.speed
    }

    pub fn start_time(&self) -> Scalar {
        self.waypoints[0].0
    }

    pub fn end_time(&self) -> Scalar {
        self.waypoints[self.waypoints.len() - 1].0
    }

    pub fn waypoints(&self) -> &[(Scalar, Point)] {
        &self.waypoints
    }

    /// Position at `time`, which must lie inside the trajectory span.
    /// Flies each leg at constant speed, then hovers at the destination
    /// until the next departure.
    pub fn position_at(&self, time: Scalar) -> Result<Point, MobilityError> {
        if time < self.start_time() || time > self.end_time() {
            return Err(MobilityError::TimeOutOfSpan {
                time,
                start: self.start_time(),
                end: self.end_time(),
            });
        }
        Ok(self.position_clamped(time))
    }

    /// Position with the query time clamped into the trajectory span:
    /// hovers at the first waypoint before the start and at the last
    /// waypoint after the end.
    pub fn position_clamped(&self, time: Scalar) -> Point {
        let time = time.clamp(self.start_time(), self.end_time());
        if self.segments.is_empty() {
            return self.waypoints[0].1;
        }
        let seg = self.segment_at(time);
        if time >= seg.arrival_time {
            seg.end
        } else {
            let elapsed = time - seg.depart_time;
            let frac = elapsed / (seg.arrival_time - seg.depart_time);
            Point::new(
                seg.start.x + (seg.end.x - seg.start.x) * frac,
                seg.start.y + (seg.end.y - seg.start.y) * frac,
            )
        }
    }

    /// True when the UAV is in a dwell (hover) phase at `time` (clamped
    /// into the span). Dwelling means it has arrived at the current
    /// segment's destination, or the trajectory has ended.
    pub fn is_dwelling(&self, time: Scalar) -> bool {
        let time = time.clamp(self.start_time(), self.end_time());
        if self.segments.is_empty() {
            return true;
        }
        time >= self.segment_at(time).arrival_time
    }

    /// Seconds spent in flight (not dwelling) within `[t0, t1]`, with the
    /// interval clamped into the trajectory span.
    pub fn flight_time_between(&self, t0: Scalar, t1: Scalar) -> Scalar {
        let t0 = t0.clamp(self.start_time(), self.end_time());
        let t1 = t1.clamp(self.start_time(), self.end_time());
        if t1 <= t0 {
            return 0.0;
        }
        let mut total = 0.0;
        for seg in &self.segments {
            let lo = seg.depart_time.max(t0);
            let hi = seg.arrival_time.min(t1);
            if hi > lo {
                total += hi - lo;
            }
        }
        total
    }

    fn segment_at(&self, time: Scalar) -> &Segment {
        // Last segment whose departure is <= time.
        let idx = self
            .segments
            .partition_point(|s| s.depart_time <= time)
            .saturating_sub(1);
        let seg = &self.segments[idx];
        debug_assert!(time >= seg.depart_time && time <= seg.until);
        seg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn leg() -> Trajectory {
        // Table-style leg: (125,1075) at 600 s, (625,1075) at 1200 s, 20 m/s.
        Trajectory::new(
            vec![
                (600.0, Point::new(125.0, 1075.0)),
                (1200.0, Point::new(625.0, 1075.0)),
            ],
            20.0,
        )
        .unwrap()
    }

    #[test]
    fn position_at_waypoint_times_is_exact() {
        let tr = leg();
        assert_eq!(tr.position_at(600.0).unwrap(), Point::new(125.0, 1075.0));
        assert_eq!(tr.position_at(1200.0).unwrap(), Point::new(625.0, 1075.0));
    }

    #[test]
    fn interpolates_at_constant_speed() {
        // 10 s after departure at 20 m/s: 200 m along the 500 m leg.
        let p = leg().position_at(610.0).unwrap();
        assert_relative_eq!(p.x, 325.0, max_relative = 1e-12);
        assert_relative_eq!(p.y, 1075.0);
    }

    #[test]
    fn dwells_after_arrival() {
        // 500 m needs 25 s; by 900 s the UAV hovers at the destination.
        let tr = leg();
        let p = tr.position_at(900.0).unwrap();
        assert_eq!(p, Point::new(625.0, 1075.0));
        assert!(tr.is_dwelling(900.0));
        assert!(!tr.is_dwelling(610.0));
    }

    #[test]
    fn rejects_time_outside_span() {
        assert!(matches!(
            leg().position_at(0.0),
            Err(MobilityError::TimeOutOfSpan { .. })
        ));
    }

    #[test]
    fn rejects_unflyable_leg() {
        let err = Trajectory::new(
            vec![(0.0, Point::new(0.0, 0.0)), (10.0, Point::new(1000.0, 0.0))],
            20.0,
        )
        .unwrap_err();
        assert!(matches!(err, MobilityError::UnreachableWaypoint { .. }));
    }

    #[test]
    fn flight_time_splits_step() {
        let tr = leg();
        // Arrival at 625 s: a step over [600, 660] holds 25 s flight.
        assert_relative_eq!(tr.flight_time_between(600.0, 660.0), 25.0);
        assert_relative_eq!(tr.flight_time_between(700.0, 760.0), 0.0);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Point::new(0.0, 0.0), Point::new(3.0, 4.0)), 5.0);
        assert_eq!(distance(Point::new(7.0, -2.0), Point::new(7.0, -2.0)), 0.0);
        assert_relative_eq!(
            distance(Point::new(625.0, 625.0), Point::new(312.5, 312.5)),
            441.942,
            max_relative = 1e-5
        );
    }

    #[test]
    fn travel_time_examples() {
        assert_eq!(travel_time(500.0, 20.0).unwrap(), 25.0);
        assert_eq!(travel_time(0.0, 20.0).unwrap(), 0.0);
        assert_relative_eq!(travel_time(441.942, 20.0).unwrap(), 22.097, max_relative = 1e-5);
        assert!(travel_time(10.0, 0.0).is_err());
    }

    #[test]
    fn surveillance_radius_examples() {
        assert_relative_eq!(surveillance_radius(100.0, 90.0).unwrap(), 100.0, max_relative = 1e-12);
        assert_relative_eq!(surveillance_radius(100.0, 60.0).unwrap(), 57.735, max_relative = 1e-5);
        assert_eq!(surveillance_radius(0.0, 45.0).unwrap(), 0.0);
        assert!(surveillance_radius(100.0, 180.0).is_err());
        assert!(surveillance_radius(100.0, 0.0).is_err());
    }

    fn table5_uav1() -> Trajectory {
        let pts = [
            (600.0, (125.0, 1075.0)),
            (1200.0, (625.0, 1075.0)),
            (1800.0, (625.0, 650.0)),
            (2400.0, (120.0, 650.0)),
            (3000.0, (120.0, 225.0)),
            (3600.0, (625.0, 225.0)),
            (4200.0, (125.0, 225.0)),
            (4800.0, (125.0, 650.0)),
            (5400.0, (625.0, 650.0)),
            (6000.0, (625.0, 1075.0)),
        ];
        Trajectory::new(
            pts.iter().map(|&(t, (x, y))| (t, Point::new(x, y))).collect(),
            20.0,
        )
        .unwrap()
    }

    proptest! {
        // |p(t + d) - p(t)| <= speed * d
        #[test]
        fn lipschitz_in_time(t in 600.0f64..6000.0, d in 0.0f64..120.0) {
            let tr = table5_uav1();
            let t2 = (t + d).min(6000.0);
            let moved = distance(tr.position_at(t).unwrap(), tr.position_at(t2).unwrap());
            prop_assert!(moved <= tr.speed() * (t2 - t) + 1e-9);
        }

        #[test]
        fn distance_symmetric_and_triangle(
            ax in -1e4f64..1e4, ay in -1e4f64..1e4,
            bx in -1e4f64..1e4, by in -1e4f64..1e4,
            cx in -1e4f64..1e4, cy in -1e4f64..1e4,
        ) {
            let a = Point::new(ax, ay);
            let b = Point::new(bx, by);
            let c = Point::new(cx, cy);
            prop_assert!((distance(a, b) - distance(b, a)).abs() < 1e-9);
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
        }
    }
}
