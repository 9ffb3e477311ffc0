use std::f64::consts::TAU;

use nalgebra::Vector2;

use super::MatchError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Pixels, strictly positive.
    pub scale: f64,
    /// Radians in `[0, 2pi)`.
    pub orientation: f64,
    pub score: f64,
}

impl Keypoint {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    fn check(&self) -> Result<(), String> {
        if !(self.x.is_finite() && self.y.is_finite()) {
            return Err("non-finite coordinates".into());
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(format!("scale {} must be positive", self.scale));
        }
        if !(0.0..TAU).contains(&self.orientation) {
            return Err(format!("orientation {} outside [0, 2pi)", self.orientation));
        }
        if !self.score.is_finite() {
            return Err("non-finite score".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeypointList(Vec<Keypoint>);

impl KeypointList {
    pub fn new(points: Vec<Keypoint>) -> Result<Self, MatchError> {
        for (index, kp) in points.iter().enumerate() {
            kp.check().map_err(|reason| MatchError::InvalidKeypoint { index, reason })?;
        }
        Ok(Self(points))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Keypoint] {
        &self.0
    }

    pub fn get(&self, index: usize) -> Option<&Keypoint> {
        self.0.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Keypoint> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for KeypointList {
    type Output = Keypoint;

    fn index(&self, index: usize) -> &Keypoint {
        &self.0[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(scale: f64, orientation: f64) -> Keypoint {
        Keypoint { x: 1.0, y: 2.0, scale, orientation, score: 0.5 }
    }

    #[test]
    fn validation() {
        assert!(KeypointList::new(vec![kp(1.0, 0.0), kp(2.0, 6.0)]).is_ok());
        assert!(KeypointList::new(vec![kp(0.0, 0.0)]).is_err());
        assert!(KeypointList::new(vec![kp(1.0, TAU)]).is_err());
        let mut bad = kp(1.0, 0.0);
        bad.x = f64::NAN;
        assert!(matches!(
            KeypointList::new(vec![kp(1.0, 0.0), bad]),
            Err(MatchError::InvalidKeypoint { index: 1, .. })
        ));
    }
}
