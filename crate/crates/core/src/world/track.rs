use serde::{Deserialize, Serialize};

use super::{Point2, WorldError};
use crate::ids::TrackId;

/// Travel direction along a track. `Forward` increases arc length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn index(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Reverse => 1,
        }
    }

    /// +1 for forward, -1 for reverse.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        }
    }
}

impl TryFrom<u8> for Direction {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Direction::Forward),
            1 => Ok(Direction::Reverse),
            other => Err(format!("direction must be 0 or 1, got {other}")),
        }
    }
}

impl From<Direction> for u8 {
    fn from(d: Direction) -> u8 {
        d.index() as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Station {
    /// Arc-length position, meters.
    pub position: f64,
    /// Scheduled dwell, seconds.
    pub dwell: f64,
}

/// A polyline track with stations. Arc length is measured from the first
/// vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPath {
    id: TrackId,
    vertices: Vec<Point2>,
    cumulative: Vec<f64>,
    stations: Vec<Station>,
    labels: [String; 2],
}

impl TrackPath {
    pub fn new(
        id: TrackId,
        vertices: Vec<Point2>,
        mut stations: Vec<Station>,
        labels: [String; 2],
    ) -> Result<Self, WorldError> {
        if vertices.len() < 2 {
            return Err(WorldError::InvalidTrack {
                track: id,
                reason: "at least two vertices required".into(),
            });
        }
        let mut cumulative = Vec::with_capacity(vertices.len());
        cumulative.push(0.0);
        for (i, w) in vertices.windows(2).enumerate() {
            let seg = w[0].distance(w[1]);
            if !(seg > 0.0) {
                return Err(WorldError::InvalidTrack {
                    track: id,
                    reason: format!("vertices {i} and {} coincide", i + 1),
                });
            }
            cumulative.push(cumulative[i] + seg);
        }
        let length = *cumulative.last().unwrap();
        for (i, s) in stations.iter().enumerate() {
            if !(0.0..=length).contains(&s.position) {
                return Err(WorldError::InvalidTrack {
                    track: id,
                    reason: format!(
                        "station {i} at {} m outside [0, {length}] m",
                        s.position
                    ),
                });
            }
            if !(s.dwell >= 0.0) {
                return Err(WorldError::InvalidTrack {
                    track: id,
                    reason: format!("station {i} has negative dwell"),
                });
            }
        }
        stations.sort_by(|a, b| a.position.total_cmp(&b.position));
        Ok(TrackPath {
            id,
            vertices,
            cumulative,
            stations,
            labels,
        })
    }

    /// Straight two-vertex track from the origin along +x.
    pub fn straight(id: TrackId, length: f64) -> Result<Self, WorldError> {
        TrackPath::new(
            id,
            vec![Point2::new(0.0, 0.0), Point2::new(length, 0.0)],
            Vec::new(),
            ["forward".into(), "reverse".into()],
        )
    }

    pub fn id(&self) -> TrackId {
        self.id
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn label(&self, d: Direction) -> &str {
        &self.labels[d.index()]
    }

    pub fn clamp(&self, s: f64) -> f64 {
        s.clamp(0.0, self.length())
    }

    fn segment_index(&self, s: f64) -> usize {
        let s = self.clamp(s);
        // last vertex with cumulative <= s, capped to the final segment
        let i = self.cumulative.partition_point(|&c| c <= s);
        i.saturating_sub(1).min(self.vertices.len() - 2)
    }

    /// Planar position at arc length `s` (clamped to the track).
    pub fn point_at(&self, s: f64) -> Point2 {
        let s = self.clamp(s);
        let i = self.segment_index(s);
        let a = self.vertices[i];
        let b = self.vertices[i + 1];
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        let t = (s - self.cumulative[i]) / seg;
        Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
    }

    /// Unit tangent of the segment containing `s`, pointing in the forward
    /// direction.
    pub fn tangent_at(&self, s: f64) -> Point2 {
        let i = self.segment_index(s);
        let a = self.vertices[i];
        let b = self.vertices[i + 1];
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        Point2::new((b.x - a.x) / seg, (b.y - a.y) / seg)
    }

    /// Point displaced `lateral` meters to the left of the forward tangent.
    pub fn offset_point(&self, s: f64, lateral: f64) -> Point2 {
        let p = self.point_at(s);
        let t = self.tangent_at(s);
        Point2::new(p.x - t.y * lateral, p.y + t.x * lateral)
    }

    /// First station strictly ahead of `s` in direction `d`, skipping
    /// `served` (the index of a station the train has already stopped at).
    pub fn next_station(
        &self,
        s: f64,
        d: Direction,
        served: Option<usize>,
    ) -> Option<(usize, &Station)> {
        let candidates = self.stations.iter().enumerate().filter(|(i, st)| {
            Some(*i) != served
                && match d {
                    Direction::Forward => st.position >= s,
                    Direction::Reverse => st.position <= s,
                }
        });
        match d {
            Direction::Forward => candidates.min_by(|a, b| a.1.position.total_cmp(&b.1.position)),
            Direction::Reverse => candidates.max_by(|a, b| a.1.position.total_cmp(&b.1.position)),
        }
    }

    /// Index of the station nearest to `s` within `radius` meters.
    pub fn station_within(&self, s: f64, radius: f64) -> Option<usize> {
        self.stations
            .iter()
            .enumerate()
            .filter(|(_, st)| (st.position - s).abs() <= radius)
            .min_by(|a, b| {
                (a.1.position - s)
                    .abs()
                    .total_cmp(&(b.1.position - s).abs())
            })
            .map(|(i, _)| i)
    }
}
