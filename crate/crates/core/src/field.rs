//! Scalar toxel fields, the activity predicate and 4-cell iteration.

use thiserror::Error;

use crate::topology::{site_coords, SiteId, SITE_COUNT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("dimension {0:?} has a zero extent")]
    EmptyDims([usize; 4]),
    #[error("expected {expected} samples for the grid, got {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("non-finite sample {value} at linear index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("non-finite value {0} passed to the activity predicate")]
    NonFiniteValue(f64),
    #[error("spacing must be positive and finite, got {0:?}")]
    BadSpacing([f64; 4]),
    #[error("aux channel `{0}` already exists")]
    DuplicateAux(String),
}

/// How a sample compares to the isovalue to count as active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivityRule {
    /// `value >= isovalue`
    #[default]
    AtLeast,
    /// `value > isovalue`
    Above,
}

impl ActivityRule {
    #[inline]
    pub fn test(self, value: f64, isovalue: f64) -> bool {
        match self {
            ActivityRule::AtLeast => value >= isovalue,
            ActivityRule::Above => value > isovalue,
        }
    }
}

/// Resolution strategy at points of ambiguity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Connect,
    Disconnect,
    /// Per face: connect when the mean of the four corner samples is active.
    #[default]
    Mixed,
}

impl Mode {
    /// The mode that yields the same geometry on the complemented activity.
    pub fn dual(self) -> Mode {
        match self {
            Mode::Connect => Mode::Disconnect,
            Mode::Disconnect => Mode::Connect,
            Mode::Mixed => Mode::Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    Midpoint,
    #[default]
    Interpolate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionConfig {
    pub isovalue: f64,
    pub mode: Mode,
    pub placement: Placement,
    /// Interpolation parameter clamp, kept inside `(0, 0.5)`.
    pub clamp: f64,
    pub activity: ActivityRule,
}

impl ExtractionConfig {
    pub const DEFAULT_CLAMP: f64 = 1e-3;

    pub fn new(isovalue: f64) -> Self {
        ExtractionConfig {
            isovalue,
            mode: Mode::default(),
            placement: Placement::default(),
            clamp: Self::DEFAULT_CLAMP,
            activity: ActivityRule::default(),
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    #[inline]
    pub fn is_active(&self, value: f64) -> bool {
        self.activity.test(value, self.isovalue)
    }
}

/// `value >= isovalue`, rejecting non-finite input.
pub fn is_active(value: f64, isovalue: f64) -> Result<bool, FieldError> {
    for v in [value, isovalue] {
        if !v.is_finite() {
            return Err(FieldError::NonFiniteValue(v));
        }
    }
    Ok(ActivityRule::AtLeast.test(value, isovalue))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannel {
    pub name: String,
    pub values: Vec<f64>,
}

/// A 4D scalar grid, x fastest, then y, z, t.
#[derive(Debug, Clone, PartialEq)]
pub struct ToxelField {
    dims: [usize; 4],
    spacing: [f64; 4],
    origin: [f64; 4],
    scalar: Vec<f64>,
    aux: Vec<AuxChannel>,
    /// Set on padded fields: the outermost layer is forced inactive.
    ghost_layer: bool,
}

impl ToxelField {
    pub fn new(dims: [usize; 4], scalar: Vec<f64>) -> Result<Self, FieldError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(FieldError::EmptyDims(dims));
        }
        let expected = dims.iter().product();
        if scalar.len() != expected {
            return Err(FieldError::SizeMismatch {
                expected,
                found: scalar.len(),
            });
        }
        check_finite(&scalar)?;
        Ok(ToxelField {
            dims,
            spacing: [1.0; 4],
            origin: [0.0; 4],
            scalar,
            aux: Vec::new(),
            ghost_layer: false,
        })
    }

    /// Samples `f(x, y, z, t)` at every grid index.
    pub fn from_fn(
        dims: [usize; 4],
        mut f: impl FnMut([usize; 4]) -> f64,
    ) -> Result<Self, FieldError> {
        let mut scalar = Vec::with_capacity(dims.iter().product());
        for t in 0..dims[3] {
            for z in 0..dims[2] {
                for y in 0..dims[1] {
                    for x in 0..dims[0] {
                        scalar.push(f([x, y, z, t]));
                    }
                }
            }
        }
        Self::new(dims, scalar)
    }

    pub fn with_spacing(mut self, spacing: [f64; 4]) -> Result<Self, FieldError> {
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(FieldError::BadSpacing(spacing));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn with_origin(mut self, origin: [f64; 4]) -> Self {
        self.origin = origin;
        self
    }

    pub fn add_aux(&mut self, name: &str, values: Vec<f64>) -> Result<(), FieldError> {
        if self.aux.iter().any(|a| a.name == name) {
            return Err(FieldError::DuplicateAux(name.to_string()));
        }
        if values.len() != self.scalar.len() {
            return Err(FieldError::SizeMismatch {
                expected: self.scalar.len(),
                found: values.len(),
            });
        }
        check_finite(&values)?;
        self.aux.push(AuxChannel {
            name: name.to_string(),
            values,
        });
        Ok(())
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 4] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 4] {
        self.origin
    }

    pub fn scalar(&self) -> &[f64] {
        &self.scalar
    }

    pub fn aux_channels(&self) -> &[AuxChannel] {
        &self.aux
    }

    pub fn aux(&self, name: &str) -> Option<&[f64]> {
        self.aux
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.values.as_slice())
    }

    pub fn len(&self) -> usize {
        self.scalar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scalar.is_empty()
    }

    pub fn is_padded(&self) -> bool {
        self.ghost_layer
    }

    #[inline]
    pub fn linear_index(&self, c: [usize; 4]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * (c[2] + self.dims[2] * c[3]))
    }

    #[inline]
    pub fn value(&self, c: [usize; 4]) -> f64 {
        self.scalar[self.linear_index(c)]
    }

    #[inline]
    pub fn is_ghost(&self, c: [usize; 4]) -> bool {
        self.ghost_layer && (0..4).any(|i| c[i] == 0 || c[i] + 1 == self.dims[i])
    }

    /// Index shift from this grid to the unpadded grid.
    pub fn grid_offset(&self) -> i64 {
        i64::from(self.ghost_layer)
    }

    /// Grid index in the frame of the original, unpadded data.
    pub fn data_coords(&self, c: [usize; 4]) -> [i64; 4] {
        let o = self.grid_offset();
        c.map(|v| v as i64 - o)
    }

    /// World position of a data-frame grid coordinate (may be fractional).
    pub fn world(&self, data: [f64; 4]) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.origin[i] + self.spacing[i] * data[i])
    }

    pub fn active_count(&self, config: &ExtractionConfig) -> usize {
        self.scalar.iter().filter(|&&v| config.is_active(v)).count()
    }

    /// Adds a one-toxel ghost layer on all eight hyperfaces. Ghost toxels are
    /// always inactive; their stored samples replicate the nearest data toxel
    /// so aux interpolation stays finite. Padding a padded field is a no-op.
    pub fn pad_ghost(&self) -> ToxelField {
        if self.ghost_layer {
            return self.clone();
        }
        let d = self.dims;
        let nd = d.map(|n| n + 2);
        let src = |c: [usize; 4]| -> usize {
            let cc = [0, 1, 2, 3].map(|i| c[i].saturating_sub(1).min(d[i] - 1));
            self.linear_index(cc)
        };
        let total: usize = nd.iter().product();
        let mut map = Vec::with_capacity(total);
        for t in 0..nd[3] {
            for z in 0..nd[2] {
                for y in 0..nd[1] {
                    for x in 0..nd[0] {
                        map.push(src([x, y, z, t]));
                    }
                }
            }
        }
        let scalar = map.iter().map(|&i| self.scalar[i]).collect();
        let aux = self
            .aux
            .iter()
            .map(|a| AuxChannel {
                name: a.name.clone(),
                values: map.iter().map(|&i| a.values[i]).collect(),
            })
            .collect();
        ToxelField {
            dims: nd,
            spacing: self.spacing,
            // World positions are computed in the unpadded data frame.
            origin: self.origin,
            scalar,
            aux,
            ghost_layer: true,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().map(|&n| n.saturating_sub(1)).product()
    }

    /// Activity pattern of the cell whose lowest corner is `base`.
    pub fn cell_pattern(&self, base: [usize; 4], config: &ExtractionConfig) -> CellPattern {
        let mut bits = 0u16;
        let mut ghost = 0u16;
        let mut values = [0.0; SITE_COUNT];
        for (i, off) in SITE_OFFSETS.iter().enumerate() {
            let c = [0, 1, 2, 3].map(|k| base[k] + off[k] as usize);
            let v = self.value(c);
            values[i] = v;
            if self.is_ghost(c) {
                ghost |= 1 << i;
            } else if config.is_active(v) {
                bits |= 1 << i;
            }
        }
        CellPattern {
            bits,
            ghost,
            values,
        }
    }

    /// Non-trivial cells in lexicographic order, t outermost and x innermost.
    pub fn cells<'a>(
        &'a self,
        config: &'a ExtractionConfig,
    ) -> impl Iterator<Item = ([usize; 4], CellPattern)> + 'a {
        let cd = self.dims.map(|n| n.saturating_sub(1));
        let total: usize = cd.iter().product();
        (0..total).filter_map(move |lin| {
            let base = unlinearize(lin, cd);
            let p = self.cell_pattern(base, config);
            (!p.is_trivial()).then_some((base, p))
        })
    }

    /// Cell base indices in the same order as [`ToxelField::cells`], trivial
    /// cells included.
    pub fn cell_base(&self, lin: usize) -> [usize; 4] {
        unlinearize(lin, self.dims.map(|n| n.saturating_sub(1)))
    }
}

fn unlinearize(mut lin: usize, d: [usize; 4]) -> [usize; 4] {
    let x = lin % d[0];
    lin /= d[0];
    let y = lin % d[1];
    lin /= d[1];
    let z = lin % d[2];
    [x, y, z, lin / d[2]]
}

fn check_finite(values: &[f64]) -> Result<(), FieldError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(FieldError::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Lattice offset of each site inside a cell.
pub const SITE_OFFSETS: [[u8; 4]; SITE_COUNT] = {
    let mut out = [[0u8; 4]; SITE_COUNT];
    let mut i = 0;
    while i < SITE_COUNT {
        out[i] = site_coords(SiteId::from_raw(i as u8));
        i += 1;
    }
    out
};

/// Activity of the 16 sites of one cell plus their samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPattern {
    /// Bit `i` set when site `i` is active.
    pub bits: u16,
    /// Bit `i` set when site `i` is a ghost toxel.
    pub ghost: u16,
    pub values: [f64; SITE_COUNT],
}

impl CellPattern {
    /// A pattern with synthetic samples: 1 for active sites, 0 otherwise.
    pub fn from_bits(bits: u16) -> Self {
        let mut values = [0.0; SITE_COUNT];
        for (i, v) in values.iter_mut().enumerate() {
            if bits & (1 << i) != 0 {
                *v = 1.0;
            }
        }
        CellPattern {
            bits,
            ghost: 0,
            values,
        }
    }

    pub fn from_values(values: [f64; SITE_COUNT], config: &ExtractionConfig) -> Self {
        let mut bits = 0;
        for (i, v) in values.iter().enumerate() {
            if config.is_active(*v) {
                bits |= 1 << i;
            }
        }
        CellPattern {
            bits,
            ghost: 0,
            values,
        }
    }

    pub fn from_sites(active: &[u8]) -> Self {
        Self::from_bits(active.iter().fold(0u16, |b, &s| b | (1 << s)))
    }

    #[inline]
    pub fn is_active(&self, s: SiteId) -> bool {
        self.bits & (1 << s.id()) != 0
    }

    #[inline]
    pub fn is_ghost(&self, s: SiteId) -> bool {
        self.ghost & (1 << s.id()) != 0
    }

    pub fn is_trivial(&self) -> bool {
        self.bits == 0 || self.bits == u16::MAX
    }
}
