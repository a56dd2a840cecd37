//! Episode log rows and their CSV serialization. Every writer has a matching
//! parser so outputs can be post-processed programmatically.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::mission::{CaptureEvent, MissionEventRow, TransitionRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub yaw: f64,
    pub mode: String,
}

/// Track log row: `t, id, cx, cy, cz, hx, hy, hz, vx, vy, vz, dynamic`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrackRow {
    pub t: f64,
    pub id: u64,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub dynamic: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CaptureRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl From<&CaptureEvent> for CaptureRow {
    fn from(e: &CaptureEvent) -> Self {
        Self { t: e.t, x: e.position.x, y: e.position.y, z: e.position.z, yaw: e.yaw }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeLogs {
    pub trajectory: Vec<TrajectoryRow>,
    pub tracks: Vec<TrackRow>,
    pub events: Vec<MissionEventRow>,
    pub transitions: Vec<TransitionRecord>,
    pub captures: Vec<CaptureRow>,
}

pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Serde(e.to_string()))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::Serde(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Serde(e.to_string()))?;
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(|e| Error::Serde(e.to_string()))
}
