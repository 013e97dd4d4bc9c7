//! Sinc positional embedding over equidistant centers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::sinc;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SincPeConfig {
    #[serde(rename = "N")]
    pub num_centers: usize,
    pub domain: [f64; 2],
    pub width: f64,
}

impl SincPeConfig {
    /// Width defaults to the center spacing so neighbours sit on the first zero.
    pub fn new(num_centers: usize, domain: [f64; 2]) -> Result<Self> {
        let spacing = (domain[1] - domain[0]) / (num_centers.max(2) - 1) as f64;
        Self::with_width(num_centers, domain, spacing)
    }

    pub fn with_width(num_centers: usize, domain: [f64; 2], width: f64) -> Result<Self> {
        let cfg = Self {
            num_centers,
            domain,
            width,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_centers < 2 {
            return Err(Error::InvalidParameter("need at least two centers".into()));
        }
        let [a, b] = self.domain;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidParameter(format!("bad domain [{a}, {b}]")));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "width must be positive, got {}",
                self.width
            )));
        }
        Ok(())
    }

    /// Equidistant centers including both endpoints.
    pub fn centers(&self) -> Vec<f64> {
        let [a, b] = self.domain;
        let n = self.num_centers;
        let h = (b - a) / (n - 1) as f64;
        (0..n)
            .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
            .collect()
    }
}

impl Default for SincPeConfig {
    fn default() -> Self {
        Self::new(16, [0.0, 1.0]).expect("valid default")
    }
}

/// Component `i` is `sinc(|t_i − x| / width)`.
pub fn sinc_embed_1d(x: f64, cfg: &SincPeConfig) -> Vec<f64> {
    cfg.centers()
        .iter()
        .map(|t| sinc((t - x).abs() / cfg.width))
        .collect()
}

/// Concatenation of the 1-D embeddings of both coordinates.
pub fn sinc_embed_2d(x1: f64, x2: f64, cfg: &SincPeConfig) -> Vec<f64> {
    let mut v = sinc_embed_1d(x1, cfg);
    v.extend(sinc_embed_1d(x2, cfg));
    v
}

/// Design table of 2-D embeddings, one row per point.
pub fn embed_points(points: &[[f64; 2]], cfg: &SincPeConfig) -> DMatrix<f64> {
    let cols = 2 * cfg.num_centers;
    let mut m = DMatrix::zeros(points.len(), cols);
    for (r, p) in points.iter().enumerate() {
        for (c, v) in sinc_embed_2d(p[0], p[1], cfg).into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{image_to_dataset, ImageGray};
    use approx::assert_abs_diff_eq;

    #[test]
    fn center_hits_one() {
        let cfg = SincPeConfig::with_width(5, [0.0, 1.0], 1.0).unwrap();
        let t = cfg.centers();
        assert_eq!(sinc_embed_1d(t[2], &cfg)[2], 1.0);
    }

    #[test]
    fn two_centers_are_endpoints() {
        let cfg = SincPeConfig::new(2, [0.0, 1.0]).unwrap();
        assert_eq!(cfg.centers(), vec![0.0, 1.0]);
        let cfg = SincPeConfig::new(7, [-0.3, 2.1]).unwrap();
        let c = cfg.centers();
        assert_eq!(c[0], -0.3);
        assert_eq!(c[6], 2.1);
    }

    #[test]
    fn matches_direct_evaluation() {
        let cfg = SincPeConfig::with_width(5, [0.0, 1.0], 0.25).unwrap();
        let v = sinc_embed_1d(0.5, &cfg);
        let centers = [0.0, 0.25, 0.5, 0.75, 1.0];
        for (i, t) in centers.iter().enumerate() {
            let u: f64 = (t - 0.5f64).abs() / 0.25;
            let direct = if u == 0.0 {
                1.0
            } else {
                (std::f64::consts::PI * u).sin() / (std::f64::consts::PI * u)
            };
            assert_abs_diff_eq!(v[i], direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn default_width_zeros_neighbours() {
        let cfg = SincPeConfig::new(9, [0.0, 1.0]).unwrap();
        let c = cfg.centers();
        let v = sinc_embed_1d(c[4], &cfg);
        for (i, x) in v.iter().enumerate() {
            if i != 4 {
                assert!(x.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_d_examples() {
        let cfg = SincPeConfig::new(8, [0.0, 1.0]).unwrap();
        let v = sinc_embed_2d(0.37, 0.37, &cfg);
        assert_eq!(v[..8], v[8..]);
        let img = ImageGray::new(64, 64, vec![0.0; 4096]).unwrap();
        let (coords, _) = image_to_dataset(&img);
        let m = embed_points(&coords, &cfg);
        assert_eq!(m.shape(), (4096, 16));
    }

    #[test]
    fn design_table_is_high_rank() {
        let cfg = SincPeConfig::with_width(16, [0.0, 1.0], 0.1).unwrap();
        let img = ImageGray::new(32, 32, vec![0.0; 1024]).unwrap();
        let (coords, _) = image_to_dataset(&img);
        let m = embed_points(&coords, &cfg);
        let sv = m.singular_values();
        let top = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-10 * top).count();
        assert!(rank >= 2 * 16 - 2, "rank {rank}");
    }

    #[test]
    fn json_shape() {
        let cfg = SincPeConfig::with_width(4, [0.0, 1.0], 0.5).unwrap();
        assert_eq!(
            serde_json::to_value(&cfg).unwrap(),
            serde_json::json!({"N": 4, "domain": [0.0, 1.0], "width": 0.5})
        );
    }
}
