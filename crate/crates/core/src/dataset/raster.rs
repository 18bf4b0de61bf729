use super::ImageAnnotation;
use crate::geometry::{ConvexPolygon, Point};
use crate::gmap::{Gmap, GmapError, GmapHeader, MapKind};
use crate::grasp::{scale_width, AngleCodec, GraspError};

/// Per-pixel training targets. Planes are row-major `H × W`; the angle
/// stack is channel-major `k × H × W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMaps {
    pub codec: AngleCodec,
    pub height: usize,
    pub width: usize,
    pub confidence: Vec<f32>,
    pub angle: Vec<f32>,
    pub grasp_width: Vec<f32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RasterStats {
    pub graspable_pixels: usize,
    pub width_clamps: usize,
}

impl LabelMaps {
    pub fn zeros(codec: AngleCodec, height: usize, width: usize) -> Self {
        let n = height * width;
        Self {
            codec,
            height,
            width,
            confidence: vec![0.0; n],
            angle: vec![0.0; codec.k() * n],
            grasp_width: vec![0.0; n],
        }
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn angle_plane(&self, bin: usize) -> &[f32] {
        let n = self.plane_len();
        &self.angle[bin * n..(bin + 1) * n]
    }

    /// Zero angle/width off the graspable set, and at least one hot bin on it.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.plane_len();
        let k = self.codec.k();
        for i in 0..n {
            let c = self.confidence[i];
            let hot = (0..k).filter(|&b| self.angle[b * n + i] != 0.0).count();
            if c == 0.0 {
                if hot > 0 || self.grasp_width[i] != 0.0 {
                    return Err(format!("pixel {i}: label outside region"));
                }
            } else if c == 1.0 {
                if hot == 0 {
                    return Err(format!("pixel {i}: graspable without angle"));
                }
                if !(0.0..1.0).contains(&self.grasp_width[i]) {
                    return Err(format!("pixel {i}: width {}", self.grasp_width[i]));
                }
            } else {
                return Err(format!("pixel {i}: confidence {c} not binary"));
            }
        }
        Ok(())
    }

    pub fn to_gmap(&self) -> Gmap {
        let header = GmapHeader::new(
            MapKind::Label,
            self.codec.k() as u32,
            self.height as u32,
            self.width as u32,
        );
        let mut data = Vec::with_capacity(header.payload_len());
        data.extend_from_slice(&self.confidence);
        data.extend_from_slice(&self.angle);
        data.extend_from_slice(&self.grasp_width);
        Gmap::new(header, data).expect("label layout matches header")
    }

    pub fn from_gmap(map: &Gmap) -> Result<Self, GmapError> {
        let h = map.header;
        if h.kind != MapKind::Label {
            return Err(GmapError::Kind(1));
        }
        let n = h.plane_len();
        let k = h.k as usize;
        let codec = AngleCodec::new(k).map_err(|_| GmapError::ZeroDim {
            k: h.k,
            c: h.channels,
            h: h.height,
            w: h.width,
        })?;
        Ok(Self {
            codec,
            height: h.height as usize,
            width: h.width as usize,
            confidence: map.data[..n].to_vec(),
            angle: map.data[n..(1 + k) * n].to_vec(),
            grasp_width: map.data[(1 + k) * n..].to_vec(),
        })
    }
}

/// Pixels whose centers lie strictly inside `poly`, as `(row, col)`.
pub fn region_mask(poly: &ConvexPolygon, height: usize, width: usize) -> Vec<(usize, usize)> {
    let (lo, hi) = poly.bounds();
    let c0 = (lo.x - 0.5).floor().max(0.0) as usize;
    let r0 = (lo.y - 0.5).floor().max(0.0) as usize;
    let c1 = ((hi.x - 0.5).ceil().max(0.0) as usize + 1).min(width);
    let r1 = ((hi.y - 0.5).ceil().max(0.0) as usize + 1).min(height);
    let mut out = Vec::new();
    for r in r0..r1 {
        for c in c0..c1 {
            if poly.contains_strict(Point::new(c as f64 + 0.5, r as f64 + 0.5)) {
                out.push((r, c));
            }
        }
    }
    out
}

/// Paints every region into fresh label maps. Overlaps union their angle
/// bins and keep the larger width.
pub fn rasterize(
    ann: &ImageAnnotation,
    codec: AngleCodec,
) -> Result<(LabelMaps, RasterStats), GraspError> {
    let (h, w) = (ann.height() as usize, ann.width() as usize);
    let mut maps = LabelMaps::zeros(codec, h, w);
    let mut stats = RasterStats::default();
    let n = h * w;
    for region in &ann.regions {
        let bins = codec.encode(&region.angles)?;
        let (sw, clamped) = scale_width(region.omega);
        if clamped {
            stats.width_clamps += 1;
        }
        for (r, c) in region_mask(&region.polygon, h, w) {
            let i = r * w + c;
            maps.confidence[i] = 1.0;
            for (b, &v) in bins.iter().enumerate() {
                if v != 0.0 {
                    maps.angle[b * n + i] = 1.0;
                }
            }
            maps.grasp_width[i] = maps.grasp_width[i].max(sw);
        }
    }
    stats.graspable_pixels = maps.confidence.iter().filter(|&&v| v == 1.0).count();
    Ok((maps, stats))
}
