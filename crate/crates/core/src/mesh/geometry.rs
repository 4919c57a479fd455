use serde::{Deserialize, Serialize};

use super::MeshError;

/// Material region of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subdomain {
    Silicon,
    Oxide,
    Liquid,
}

impl Subdomain {
    pub fn as_str(self) -> &'static str {
        match self {
            Subdomain::Silicon => "si",
            Subdomain::Oxide => "ox",
            Subdomain::Liquid => "liq",
        }
    }
}

/// Side of the bounding rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

/// A Dirichlet segment on one side of the rectangle.
///
/// `start`/`end` run along the side (x for bottom/top, y for left/right, nm).
/// Missing bounds default to the full side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactSegment {
    pub name: String,
    pub side: Side,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    /// Applied voltage (V).
    pub voltage: f64,
}

impl ContactSegment {
    pub fn new(name: impl Into<String>, side: Side, voltage: f64) -> Self {
        Self { name: name.into(), side, start: None, end: None, voltage }
    }

    pub fn with_range(mut self, start: f64, end: f64) -> Self {
        self.start = Some(start);
        self.end = Some(end);
        self
    }

    /// Resolved `[start, end]` for a side of length `side_len`.
    pub fn range(&self, side_len: f64) -> (f64, f64) {
        (self.start.unwrap_or(0.0), self.end.unwrap_or(side_len))
    }
}

/// Nanowire sensor cross-section: silicon at the bottom, an oxide layer on
/// top of it and the electrolyte above. Lengths in nm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceGeometry {
    pub oxide_thickness: f64,
    pub si_thickness: f64,
    pub width: f64,
    pub liq_thickness: f64,
    pub contacts: Vec<ContactSegment>,
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        Self {
            oxide_thickness: 8.0,
            si_thickness: 50.0,
            width: 60.0,
            liq_thickness: 30.0,
            contacts: vec![
                ContactSegment::new("back-gate", Side::Bottom, -1.0),
                ContactSegment::new("electrode", Side::Top, 0.0),
            ],
        }
    }
}

impl DeviceGeometry {
    pub fn layered(&self) -> LayeredDomain {
        LayeredDomain {
            width: self.width,
            layers: vec![
                (Subdomain::Silicon, self.si_thickness),
                (Subdomain::Oxide, self.oxide_thickness),
                (Subdomain::Liquid, self.liq_thickness),
            ],
            contacts: self.contacts.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        self.layered().validate()
    }

    /// Silicon region `[0, width] x [0, si_thickness]`.
    pub fn silicon_box(&self) -> ([f64; 2], [f64; 2]) {
        ([0.0, 0.0], [self.width, self.si_thickness])
    }

    pub fn silicon_area(&self) -> f64 {
        self.width * self.si_thickness
    }

    /// Smallest geometric feature (layer thickness, width or contact length).
    pub fn min_feature(&self) -> f64 {
        self.layered().min_feature()
    }
}

/// A rectangle `[0, width] x [0, sum(thickness)]` cut into horizontal layers,
/// listed bottom to top.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeredDomain {
    pub width: f64,
    pub layers: Vec<(Subdomain, f64)>,
    pub contacts: Vec<ContactSegment>,
}

impl LayeredDomain {
    pub fn height(&self) -> f64 {
        self.layers.iter().map(|(_, t)| t).sum()
    }

    /// y coordinates of the layer boundaries, bottom to top (len = layers + 1).
    pub fn layer_bounds(&self) -> Vec<f64> {
        let mut ys = Vec::with_capacity(self.layers.len() + 1);
        let mut y = 0.0;
        ys.push(y);
        for (_, t) in &self.layers {
            y += t;
            ys.push(y);
        }
        ys
    }

    pub fn side_length(&self, side: Side) -> f64 {
        match side {
            Side::Bottom | Side::Top => self.width,
            Side::Left | Side::Right => self.height(),
        }
    }

    pub fn min_feature(&self) -> f64 {
        let mut m = self.width;
        for (_, t) in &self.layers {
            m = m.min(*t);
        }
        for c in &self.contacts {
            let (a, b) = c.range(self.side_length(c.side));
            m = m.min(b - a);
        }
        m
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |msg: String| Err(MeshError::Geometry(msg));
        if !(self.width.is_finite() && self.width > 0.0) {
            return bad(format!("width must be positive, got {}", self.width));
        }
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        for (sub, t) in &self.layers {
            if !(t.is_finite() && *t > 0.0) {
                return bad(format!("{} layer has non-positive thickness {t}", sub.as_str()));
            }
        }
        if self.contacts.is_empty() {
            return bad("at least one Dirichlet contact is required".into());
        }
        for (i, c) in self.contacts.iter().enumerate() {
            let len = self.side_length(c.side);
            let (a, b) = c.range(len);
            if !(a.is_finite() && b.is_finite()) || a < 0.0 || b > len * (1.0 + 1e-12) || b - a <= 0.0 {
                return bad(format!("contact '{}' has invalid range [{a}, {b}] on a side of length {len}", c.name));
            }
            if !c.voltage.is_finite() {
                return bad(format!("contact '{}' has non-finite voltage", c.name));
            }
            if self.contacts[..i].iter().any(|o| o.name == c.name) {
                return bad(format!("duplicate contact name '{}'", c.name));
            }
        }
        Ok(())
    }
}
