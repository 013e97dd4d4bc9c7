//! Test signals, grayscale images, PSNR and plain-text/PGM IO.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::sinc;
use crate::error::{Error, Result};

/// Samples of a real function on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Signal1D {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "grid has {} points, values has {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "grid must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "signal values must be finite".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Two-column CSV with header `x,value`.
    pub fn to_csv(&self) -> String {
        let rows = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(x, v)| vec![*x, *v]);
        write_csv(&["x", "value"], rows)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (_, rows) = parse_csv(text)?;
        let mut grid = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != 2 {
                return Err(Error::MalformedHeader("expected two columns".into()));
            }
            grid.push(row[0]);
            values.push(row[1]);
        }
        Self::new(grid, values)
    }
}

/// `s(x) = Σ_{n=1}^{N} c_n sinc(2Ω(x − n/(2Ω)))`, band-limited to `Ω` cycles per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct BandlimitedSignal {
    pub max_freq: f64,
    pub coeffs: Vec<f64>,
}

impl BandlimitedSignal {
    pub fn new(max_freq: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(max_freq > 0.0 && max_freq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "max frequency must be positive, got {max_freq}"
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("need at least one term".into()));
        }
        Ok(Self { max_freq, coeffs })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = 2.0 * self.max_freq;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * sinc(r * x - (i + 1) as f64))
            .sum()
    }

    pub fn sample(&self, grid: Vec<f64>) -> Result<Signal1D> {
        Signal1D::from_fn(grid, |x| self.eval(x))
    }

    /// Location of the `n`-th (1-based) interpolation node.
    pub fn node(&self, n: usize) -> f64 {
        n as f64 / (2.0 * self.max_freq)
    }
}

/// Band-limited signal with seeded standard-normal coefficients.
pub fn gen_bandlimited(max_freq: f64, num_terms: usize, seed: u64) -> Result<BandlimitedSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..num_terms)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    BandlimitedSignal::new(max_freq, coeffs)
}

/// `-10 log10(MSE)` assuming unit peak; `+∞` for identical inputs.
pub fn psnr(reference: &[f64], candidate: &[f64]) -> Result<f64> {
    if reference.len() != candidate.len() {
        return Err(Error::ShapeMismatch(format!(
            "reference has {} values, candidate has {}",
            reference.len(),
            candidate.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mse = reference
        .iter()
        .zip(candidate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64;
    Ok(mse_to_psnr(mse))
}

pub fn mse_to_psnr(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

/// Affine map of `values` onto `[0, 1]`; a constant input maps to zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

/// Grayscale image with pixels in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageGray {
    /// Values outside `[0, 1]` are clamped.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ShapeMismatch(
                "image dimensions must be positive".into(),
            ));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| p.is_nan()) {
            return Err(Error::InvalidParameter("NaN pixel".into()));
        }
        let pixels = pixels.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos)?;
        if magic != b"P5" {
            return Err(Error::MalformedHeader("missing P5 magic".into()));
        }
        let width = parse_header_number(next_token(bytes, &mut pos)?)?;
        let height = parse_header_number(next_token(bytes, &mut pos)?)?;
        let maxval = parse_header_number(next_token(bytes, &mut pos)?)?;
        if maxval != 255 {
            return Err(Error::MalformedHeader(format!(
                "maxval {maxval} unsupported, expected 255"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::MalformedHeader("zero image dimension".into()));
        }
        // exactly one whitespace byte separates the header from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(Error::MalformedHeader("missing raster separator".into()));
        }
        pos += 1;
        let expected = width * height;
        let data = &bytes[pos..];
        if data.len() < expected {
            return Err(Error::TruncatedData {
                expected,
                got: data.len(),
            });
        }
        let pixels = data[..expected].iter().map(|&b| b as f64 / 255.0).collect();
        Self::new(width, height, pixels)
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(
            self.pixels
                .iter()
                .map(|&p| (p * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8),
        );
        out
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader("unexpected end of header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_header_number(tok: &[u8]) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::MalformedHeader(format!("bad number {:?}", String::from_utf8_lossy(tok)))
        })
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<ImageGray> {
    ImageGray::from_pgm_bytes(&std::fs::read(path)?)
}

pub fn save_pgm(image: &ImageGray, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, image.to_pgm_bytes())?;
    Ok(())
}

/// Pixel-center coordinates `((col+0.5)/w, (row+0.5)/h)` and values, row-major.
pub fn image_to_dataset(image: &ImageGray) -> (Vec<[f64; 2]>, Vec<f64>) {
    let (w, h) = (image.width as f64, image.height as f64);
    let mut coords = Vec::with_capacity(image.pixels.len());
    for row in 0..image.height {
        for col in 0..image.width {
            coords.push([(col as f64 + 0.5) / w, (row as f64 + 0.5) / h]);
        }
    }
    (coords, image.pixels.clone())
}

/// 17 significant digits, round-trip exact.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_float(*v));
        }
        out.push('\n');
    }
    out
}

/// Header plus numeric rows; blank lines are skipped.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedHeader("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::MalformedHeader(format!("row {}: {e}", i + 1)))?;
        if row.len() != header.len() {
            return Err(Error::MalformedHeader(format!(
                "row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn bandlimited_interpolates_its_coefficients() {
        let s = BandlimitedSignal::new(3.0, vec![1.0]).unwrap();
        assert_abs_diff_eq!(s.eval(1.0 / 6.0), 1.0, epsilon = 1e-15);
        let g = gen_bandlimited(4.0, 8, 7).unwrap();
        for n in 1..=8 {
            assert_abs_diff_eq!(g.eval(g.node(n)), g.coeffs[n - 1], epsilon = 1e-14);
        }
    }

    #[test]
    fn bandlimited_is_seeded() {
        assert_eq!(
            gen_bandlimited(2.0, 16, 3).unwrap(),
            gen_bandlimited(2.0, 16, 3).unwrap()
        );
        assert_ne!(
            gen_bandlimited(2.0, 16, 3).unwrap(),
            gen_bandlimited(2.0, 16, 4).unwrap()
        );
    }

    #[test]
    fn nyquist_resampling_reproduces_signal() {
        // samples at rate 2Ω on a long window, then Shannon synthesis
        let s = gen_bandlimited(2.0, 10, 11).unwrap();
        let t = 1.0 / (2.0 * s.max_freq);
        let samples: Vec<(f64, f64)> = (-4000..4000)
            .map(|k| (k as f64 * t, s.eval(k as f64 * t)))
            .collect();
        for i in 0..50 {
            let x = 0.5 + 0.04 * i as f64 + 0.003;
            let rec: f64 = samples.iter().map(|(xk, v)| v * sinc((x - xk) / t)).sum();
            assert_abs_diff_eq!(rec, s.eval(x), epsilon = 1e-3);
        }
    }

    #[test]
    fn psnr_examples() {
        let a = vec![0.2, 0.4, 0.9];
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b: Vec<f64> = a.iter().map(|v| v + 0.1).collect();
        assert_abs_diff_eq!(psnr(&a, &b).unwrap(), 20.0, epsilon = 1e-9);
        assert!(matches!(psnr(&a, &b[..2]), Err(Error::ShapeMismatch(_))));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img: Vec<f64> = (0..4096).map(|_| rng.gen::<f64>()).collect();
        let noisy: Vec<f64> = img.iter().map(|v| v + rng.gen_range(-0.05..0.05)).collect();
        let expected = -10.0 * (0.1f64 * 0.1 / 12.0).log10();
        assert_abs_diff_eq!(psnr(&img, &noisy).unwrap(), expected, epsilon = 0.5);
    }

    #[test]
    fn pgm_examples() {
        let white = ImageGray::from_pgm_bytes(b"P5\n1 1\n255\n\xff").unwrap();
        assert_eq!(white.pixels(), &[1.0]);
        let grad = ImageGray::from_pgm_bytes(b"P5 # comment\n2 2 255\n\x00\x55\xaa\xff").unwrap();
        assert_eq!(grad.pixels(), &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut bytes = b"P5\n7 5\n255\n".to_vec();
        bytes.extend((0..35).map(|_| rng.gen::<u8>()));
        let img = ImageGray::from_pgm_bytes(&bytes).unwrap();
        assert_eq!(img.to_pgm_bytes(), bytes);

        assert!(matches!(
            ImageGray::from_pgm_bytes(b"P6\n1 1\n255\n\x00"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            ImageGray::from_pgm_bytes(b"P5\n2 2\n255\n\x00"),
            Err(Error::TruncatedData { .. })
        ));
        assert!(matches!(
            ImageGray::from_pgm_bytes(b"P5\n2"),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn save_rounds_half_up() {
        let img = ImageGray::new(2, 1, vec![0.5 / 255.0, 1.49 / 255.0]).unwrap();
        let b = img.to_pgm_bytes();
        assert_eq!(&b[b.len() - 2..], &[1, 1]);
    }

    #[test]
    fn dataset_examples() {
        let one = ImageGray::new(1, 1, vec![0.3]).unwrap();
        let (c, v) = image_to_dataset(&one);
        assert_eq!(c, vec![[0.5, 0.5]]);
        assert_eq!(v, vec![0.3]);
        let img = ImageGray::new(4, 4, vec![0.0; 16]).unwrap();
        let (c, v) = image_to_dataset(&img);
        assert_eq!(c.len(), 16);
        assert_eq!(v.len(), 16);
        assert_eq!(c[0], [0.125, 0.125]);
        assert_eq!(c[1], [0.375, 0.125]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = linspace(0.0, 1.0, 13);
        let s = Signal1D::from_fn(grid, |x| (7.0 * x).sin() / 3.0).unwrap();
        let text = s.to_csv();
        assert!(text.starts_with("x,value\n"));
        assert_eq!(Signal1D::from_csv(&text).unwrap(), s);
    }

    #[test]
    fn signal_rejects_bad_grids() {
        assert!(Signal1D::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Signal1D::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Signal1D::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }
}
