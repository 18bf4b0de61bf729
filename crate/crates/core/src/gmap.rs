//! GMAP: a fixed-header binary channel stack for label and prediction maps.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `b"GMAP"`               |
//! | 4      | 1    | version (1)                   |
//! | 5      | 1    | kind (0 = label, 1 = prediction) |
//! | 6      | 4    | k, angle bins                 |
//! | 10     | 4    | C, channels                   |
//! | 14     | 4    | H                             |
//! | 18     | 4    | W                             |
//! | 22     | 4·C·H·W | f32 payload, channel-major `(c, h, w)` |
//!
//! Labels carry `1 + k + 1` channels (confidence, angle bins, width);
//! predictions carry `2 + k + 1` (not-graspable/graspable, angle bins, width).

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"GMAP";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 22;

#[derive(Debug, Error)]
pub enum GmapError {
    #[error("bad magic {0:?}, expected \"GMAP\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    Version(u8),
    #[error("unknown map kind {0}")]
    Kind(u8),
    #[error("file too short for header ({0} bytes)")]
    ShortHeader(usize),
    #[error("payload length {got} bytes, expected {expected}")]
    PayloadLength { got: usize, expected: usize },
    #[error("channel count {c} does not match kind {kind:?} with k = {k}")]
    Channels { kind: MapKind, k: u32, c: u32 },
    #[error("dimensions must be >= 1 (k={k}, C={c}, H={h}, W={w})")]
    ZeroDim { k: u32, c: u32, h: u32, w: u32 },
    #[error("non-finite value at element {0}")]
    NonFinite(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Label,
    Prediction,
}

impl MapKind {
    fn code(self) -> u8 {
        match self {
            MapKind::Label => 0,
            MapKind::Prediction => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self, GmapError> {
        match c {
            0 => Ok(MapKind::Label),
            1 => Ok(MapKind::Prediction),
            other => Err(GmapError::Kind(other)),
        }
    }

    /// Channels preceding the angle bins.
    pub fn confidence_channels(self) -> u32 {
        match self {
            MapKind::Label => 1,
            MapKind::Prediction => 2,
        }
    }

    pub fn channels_for(self, k: u32) -> u32 {
        self.confidence_channels() + k + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GmapHeader {
    pub kind: MapKind,
    pub k: u32,
    pub channels: u32,
    pub height: u32,
    pub width: u32,
}

impl GmapHeader {
    pub fn new(kind: MapKind, k: u32, height: u32, width: u32) -> Self {
        Self {
            kind,
            k,
            channels: kind.channels_for(k),
            height,
            width,
        }
    }

    pub fn plane_len(&self) -> usize {
        self.height as usize * self.width as usize
    }

    pub fn payload_len(&self) -> usize {
        self.channels as usize * self.plane_len()
    }

    fn check(&self) -> Result<(), GmapError> {
        let Self {
            kind,
            k,
            channels,
            height,
            width,
        } = *self;
        if k == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(GmapError::ZeroDim {
                k,
                c: channels,
                h: height,
                w: width,
            });
        }
        if channels != kind.channels_for(k) {
            return Err(GmapError::Channels {
                kind,
                k,
                c: channels,
            });
        }
        Ok(())
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[..4].copy_from_slice(&MAGIC);
        b[4] = VERSION;
        b[5] = self.kind.code();
        b[6..10].copy_from_slice(&self.k.to_le_bytes());
        b[10..14].copy_from_slice(&self.channels.to_le_bytes());
        b[14..18].copy_from_slice(&self.height.to_le_bytes());
        b[18..22].copy_from_slice(&self.width.to_le_bytes());
        b
    }

    fn from_bytes(b: &[u8]) -> Result<Self, GmapError> {
        if b.len() < HEADER_LEN {
            if b.len() >= 4 && b[..4] != MAGIC {
                return Err(GmapError::BadMagic([b[0], b[1], b[2], b[3]]));
            }
            return Err(GmapError::ShortHeader(b.len()));
        }
        let magic = [b[0], b[1], b[2], b[3]];
        if magic != MAGIC {
            return Err(GmapError::BadMagic(magic));
        }
        if b[4] != VERSION {
            return Err(GmapError::Version(b[4]));
        }
        let u32_at = |o: usize| u32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]]);
        let header = Self {
            kind: MapKind::from_code(b[5])?,
            k: u32_at(6),
            channels: u32_at(10),
            height: u32_at(14),
            width: u32_at(18),
        };
        header.check()?;
        Ok(header)
    }
}

/// A header plus its channel-major payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Gmap {
    pub header: GmapHeader,
    pub data: Vec<f32>,
}

impl Gmap {
    pub fn new(header: GmapHeader, data: Vec<f32>) -> Result<Self, GmapError> {
        header.check()?;
        if data.len() != header.payload_len() {
            return Err(GmapError::PayloadLength {
                got: data.len() * 4,
                expected: header.payload_len() * 4,
            });
        }
        Ok(Self { header, data })
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.header.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(&self.header.to_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GmapError> {
        let header = GmapHeader::from_bytes(bytes)?;
        let payload = &bytes[HEADER_LEN..];
        let expected = header.payload_len() * 4;
        if payload.len() != expected {
            return Err(GmapError::PayloadLength {
                got: payload.len(),
                expected,
            });
        }
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(GmapError::NonFinite(i));
        }
        Ok(Self { header, data })
    }
}

pub fn write_gmap(path: impl AsRef<Path>, map: &Gmap) -> Result<(), GmapError> {
    let path = path.as_ref();
    fs::write(path, map.to_bytes()).map_err(|source| GmapError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_gmap(path: impl AsRef<Path>) -> Result<Gmap, GmapError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| GmapError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Gmap::from_bytes(&bytes)
}
