use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_SOUND_SPEED: f64 = 343.0;

/// Microphone positions in metres. Azimuth is measured in the x-y plane from
/// the +x axis, so for microphones laid out along x, 90 degrees is broadside.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    mic_positions: Vec<[f64; 3]>,
    reference_index: usize,
    sound_speed: f64,
}

impl ArrayGeometry {
    pub fn new(
        mic_positions: Vec<[f64; 3]>,
        reference_index: usize,
        sound_speed: f64,
    ) -> Result<Self> {
        if mic_positions.len() < 2 {
            return Err(Error::InvalidParameter("at least two microphones".into()));
        }
        if reference_index >= mic_positions.len() {
            return Err(Error::InvalidParameter(format!(
                "reference index {reference_index} out of range"
            )));
        }
        for (i, a) in mic_positions.iter().enumerate() {
            for b in &mic_positions[i + 1..] {
                if a == b {
                    return Err(Error::InvalidParameter("coincident microphones".into()));
                }
            }
        }
        if !(sound_speed > 0.0) {
            return Err(Error::InvalidParameter(
                "sound speed must be positive".into(),
            ));
        }
        Ok(Self {
            mic_positions,
            reference_index,
            sound_speed,
        })
    }

    /// Two microphones on the x axis, `spacing_m` apart, referenced to the first.
    pub fn pair(spacing_m: f64) -> Result<Self> {
        Self::new(
            vec![[0.0, 0.0, 0.0], [spacing_m, 0.0, 0.0]],
            0,
            DEFAULT_SOUND_SPEED,
        )
    }

    pub fn mic_count(&self) -> usize {
        self.mic_positions.len()
    }

    pub fn mic_positions(&self) -> &[[f64; 3]] {
        &self.mic_positions
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    /// Arrival time at each microphone relative to the reference, in seconds,
    /// for a far-field source at `azimuth_deg` (elevation zero).
    pub fn delays(&self, azimuth_deg: f64) -> Vec<f64> {
        let theta = azimuth_deg.to_radians();
        let dir = [snap(theta.cos()), snap(theta.sin()), 0.0];
        let r = self.mic_positions[self.reference_index];
        self.mic_positions
            .iter()
            .map(|p| {
                let proj: f64 = (0..3).map(|k| (p[k] - r[k]) * dir[k]).sum();
                -proj / self.sound_speed
            })
            .collect()
    }
}

// cos(pi/2) is 6e-17, not 0; broadside must give exactly zero delay.
fn snap(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}

/// `d_m = exp(-j 2 pi f tau_m)` for every microphone.
pub fn steering_vector(
    geometry: &ArrayGeometry,
    azimuth_deg: f64,
    frequency: f64,
) -> Vec<Complex64> {
    geometry
        .delays(azimuth_deg)
        .into_iter()
        .map(|tau| Complex64::from_polar(1.0, -2.0 * PI * frequency * tau))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadside_is_all_ones() {
        let g = ArrayGeometry::pair(0.1).unwrap();
        for f in [0.0, 100.0, 3000.0, 7999.0] {
            let d = steering_vector(&g, 90.0, f);
            assert_eq!(d, vec![Complex64::new(1.0, 0.0); 2]);
        }
    }

    #[test]
    fn endfire_half_wavelength() {
        let g = ArrayGeometry::pair(0.10).unwrap();
        let d = steering_vector(&g, 0.0, 1715.0);
        assert!((d[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((d[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_frequency() {
        let g = ArrayGeometry::pair(0.10).unwrap();
        for az in [0.0, 33.0, 60.0, 180.0] {
            for c in steering_vector(&g, az, 0.0) {
                assert_eq!(c, Complex64::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn invalid_geometries() {
        assert!(ArrayGeometry::new(vec![[0.0; 3]], 0, 343.0).is_err());
        assert!(ArrayGeometry::new(vec![[0.0; 3], [0.0; 3]], 0, 343.0).is_err());
        assert!(ArrayGeometry::new(vec![[0.0; 3], [1.0, 0.0, 0.0]], 2, 343.0).is_err());
    }

    #[test]
    fn source_nearer_to_second_mic_arrives_there_first() {
        let g = ArrayGeometry::pair(0.1).unwrap();
        let tau = g.delays(60.0);
        assert_eq!(tau[0], 0.0);
        assert!((tau[1] + 0.1 * 0.5 / 343.0).abs() < 1e-15);
    }
}
