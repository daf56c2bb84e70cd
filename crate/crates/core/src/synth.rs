//! Synthetic test volumes on unit-spaced grids, active where the value is
//! non-negative (signed-distance law) or one (indicator law).

use thiserror::Error;

use crate::field::{FieldError, ToxelField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("{0} lies outside the grid")]
    OutsideGrid(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldLaw {
    #[default]
    SignedDistance,
    /// 1 where the signed distance is non-negative, else 0.
    Indicator,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `R - |x - center|` in 4D.
    Hypersphere {
        center: [f64; 4],
        radius: f64,
    },
    /// Two static balls joined along the segment between their centers by a
    /// neck whose radius shrinks linearly to zero at `pinch_time`.
    Dumbbell {
        centers: [[f64; 3]; 2],
        radii: [f64; 2],
        neck_radius: f64,
        pinch_time: f64,
    },
    SingleToxel {
        index: [usize; 4],
    },
    /// Active for `t <= split`.
    IsoSlab {
        split: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub shape: Shape,
    pub dims: [usize; 4],
    pub law: FieldLaw,
}

impl SynthSpec {
    pub fn new(shape: Shape, dims: [usize; 4]) -> Self {
        SynthSpec {
            shape,
            dims,
            law: FieldLaw::SignedDistance,
        }
    }

    pub fn with_law(mut self, law: FieldLaw) -> Self {
        self.law = law;
        self
    }
}

fn inside(p: &[f64], dims: &[usize]) -> bool {
    p.iter()
        .zip(dims)
        .all(|(&x, &n)| x.is_finite() && x >= 0.0 && x <= (n - 1) as f64)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance from `p` to the segment `a..b`.
fn segment_dist(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let len2 = d.iter().map(|x| x * x).sum::<f64>();
    let s = if len2 > 0.0 {
        ((0..3).map(|k| (p[k] - a[k]) * d[k]).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(&p, &[0, 1, 2].map(|k| a[k] + s * d[k]))
}

impl Shape {
    fn check(&self, dims: [usize; 4]) -> Result<(), SynthError> {
        let positive = |name: &str, r: f64| {
            if r.is_finite() && r > 0.0 {
                Ok(())
            } else {
                Err(SynthError::Invalid(format!(
                    "{name} must be positive, got {r}"
                )))
            }
        };
        match self {
            Shape::Hypersphere { center, radius } => {
                positive("radius", *radius)?;
                if !inside(center, &dims) {
                    return Err(SynthError::OutsideGrid(format!("center {center:?}")));
                }
            }
            Shape::Dumbbell {
                centers,
                radii,
                neck_radius,
                pinch_time,
            } => {
                for (c, r) in centers.iter().zip(radii) {
                    positive("radius", *r)?;
                    if !inside(c, &dims[..3]) {
                        return Err(SynthError::OutsideGrid(format!("center {c:?}")));
                    }
                }
                positive("neck radius", *neck_radius)?;
                positive("pinch time", *pinch_time)?;
                if dist(&centers[0], &centers[1]) <= radii[0] + radii[1] {
                    return Err(SynthError::Invalid("dumbbell balls overlap".into()));
                }
            }
            Shape::SingleToxel { index } => {
                if index.iter().zip(&dims).any(|(&i, &n)| i >= n) {
                    return Err(SynthError::OutsideGrid(format!("toxel {index:?}")));
                }
            }
            Shape::IsoSlab { split } => {
                if !split.is_finite() {
                    return Err(SynthError::Invalid(format!("split {split}")));
                }
            }
        }
        Ok(())
    }

    /// Signed distance-like value at grid coordinate `c`.
    pub fn value(&self, c: [usize; 4]) -> f64 {
        let p = c.map(|x| x as f64);
        match self {
            Shape::Hypersphere { center, radius } => radius - dist(&p, center),
            Shape::Dumbbell {
                centers,
                radii,
                neck_radius,
                pinch_time,
            } => {
                let q = [p[0], p[1], p[2]];
                let balls =
                    (radii[0] - dist(&q, &centers[0])).max(radii[1] - dist(&q, &centers[1]));
                let neck = neck_radius * (pinch_time - p[3]) / pinch_time
                    - segment_dist(q, centers[0], centers[1]);
                balls.max(neck)
            }
            Shape::SingleToxel { index } => {
                if c == *index {
                    1.0
                } else {
                    -1.0
                }
            }
            Shape::IsoSlab { split } => split - p[3],
        }
    }
}

pub fn synth(spec: &SynthSpec) -> Result<ToxelField, SynthError> {
    spec.shape.check(spec.dims)?;
    let single = matches!(spec.shape, Shape::SingleToxel { .. });
    let law = spec.law;
    Ok(ToxelField::from_fn(spec.dims, |c| {
        let v = spec.shape.value(c);
        if single || law == FieldLaw::Indicator {
            f64::from(u8::from(v >= 0.0))
        } else {
            v
        }
    })?)
}

/// Isovalue separating active from inactive toxels under `spec.law`.
pub fn default_isovalue(spec: &SynthSpec) -> f64 {
    match (&spec.shape, spec.law) {
        (Shape::SingleToxel { .. }, _) | (_, FieldLaw::Indicator) => 0.5,
        _ => 0.0,
    }
}
