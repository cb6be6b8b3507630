//! Grid faces and the axis conventions shared by every solver.
//!
//! Axis 2 (z) runs inward from the outer tissue surface: `ZMin` is the
//! illuminated top face of a slab phantom.

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::XMin,
        Face::XMax,
        Face::YMin,
        Face::YMax,
        Face::ZMin,
        Face::ZMax,
    ];

    pub const fn axis(self) -> usize {
        match self {
            Face::XMin | Face::XMax => 0,
            Face::YMin | Face::YMax => 1,
            Face::ZMin | Face::ZMax => 2,
        }
    }

    pub const fn is_min(self) -> bool {
        matches!(self, Face::XMin | Face::YMin | Face::ZMin)
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn from_axis(axis: usize, min: bool) -> Face {
        match (axis, min) {
            (0, true) => Face::XMin,
            (0, false) => Face::XMax,
            (1, true) => Face::YMin,
            (1, false) => Face::YMax,
            (2, true) => Face::ZMin,
            _ => Face::ZMax,
        }
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.axis()] = if self.is_min() { -1.0 } else { 1.0 };
        n
    }

    /// The two in-plane axes, in increasing order.
    pub const fn tangent_axes(self) -> [usize; 2] {
        match self.axis() {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::XMin => "x-min",
            Face::XMax => "x-max",
            Face::YMin => "y-min",
            Face::YMax => "y-max",
            Face::ZMin => "z-min",
            Face::ZMax => "z-max",
        }
    }

    pub fn from_name(s: &str) -> Option<Face> {
        Face::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Per-face setting, indexed by [`Face`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerFace<T>(pub [T; 6]);

impl<T: Copy> PerFace<T> {
    pub const fn uniform(v: T) -> Self {
        PerFace([v; 6])
    }

    pub fn get(&self, face: Face) -> T {
        self.0[face.index()]
    }

    pub fn set(&mut self, face: Face, v: T) {
        self.0[face.index()] = v;
    }

    pub fn with(mut self, face: Face, v: T) -> Self {
        self.set(face, v);
        self
    }
}
