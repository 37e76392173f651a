use std::io::Write;

use crate::error::{Error, Result};
use crate::rng::{particle_streams, stream, Stream, StreamRole};

/// Which temperature level an ensemble lives at; selects its random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Target,
    Tempered,
}

impl Level {
    fn roles(self) -> (StreamRole, StreamRole) {
        match self {
            Level::Target => (StreamRole::TargetLevel, StreamRole::TargetShared),
            Level::Tempered => (StreamRole::TemperedLevel, StreamRole::TemperedShared),
        }
    }
}

/// `N` particles in `d` dimensions with one random stream per slot and one
/// shared stream for ensemble-level draws.
///
/// Streams belong to slots: a duplicated particle keeps drawing from the
/// stream of the slot it lands in.
#[derive(Clone, Debug)]
pub struct Ensemble {
    dim: usize,
    positions: Vec<f64>,
    streams: Vec<Stream>,
    shared: Stream,
    generation: usize,
}

impl Ensemble {
    pub fn new(dim: usize, points: &[Vec<f64>], seed: u64, level: Level) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("dim", "must be positive"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("ensemble positions must be finite".into()));
        }
        let (particle_role, shared_role) = level.roles();
        Ok(Self {
            dim,
            positions: points.concat(),
            streams: particle_streams(seed, particle_role, points.len()),
            shared: stream(seed, shared_role, 0),
            generation: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    /// Number of updates applied so far.
    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Row-major `N × d` positions.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn particles(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.particles().map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [Stream], &mut Stream) {
        (&mut self.positions, &mut self.streams, &mut self.shared)
    }

    pub(crate) fn shared_stream(&mut self) -> &mut Stream {
        &mut self.shared
    }

    pub(crate) fn advance(&mut self) {
        self.generation += 1;
    }

    /// One row per particle, `d` comma-separated columns `x0..x{d-1}` after a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for p in self.particles() {
            let row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
