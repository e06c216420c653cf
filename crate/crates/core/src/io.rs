//! Bit-exact file formats: the GRD tensor container and binary P6 PPM.
//!
//! GRD layout: magic `"GRD1"`, little-endian `u32` rank (2 or 3), `rank`
//! little-endian `u32` dimensions in the order `height, width[, channels]`,
//! one `u8` dtype code (0 = f32, 1 = f64), then the row-major payload in
//! little-endian byte order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, RgbImage};

pub const GRD_MAGIC: [u8; 4] = *b"GRD1";
const MAX_SIDE: u64 = 1 << 16;

/// Element type stored in a GRD file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrdDtype {
    F32,
    F64,
}

impl GrdDtype {
    fn code(self) -> u8 {
        match self {
            GrdDtype::F32 => 0,
            GrdDtype::F64 => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(GrdDtype::F32),
            1 => Ok(GrdDtype::F64),
            other => Err(Error::UnsupportedFormat(format!(
                "unknown GRD dtype code {other}"
            ))),
        }
    }

    fn byte_len(self) -> usize {
        match self {
            GrdDtype::F32 => 4,
            GrdDtype::F64 => 8,
        }
    }
}

/// A rank-2 or rank-3 tensor as read from / written to a GRD file.
#[derive(Debug, Clone, PartialEq)]
pub struct GrdTensor {
    /// `[height, width]` or `[height, width, channels]`.
    pub dims: Vec<u32>,
    pub dtype: GrdDtype,
    /// Row-major values, widened to f64.
    pub data: Vec<f64>,
}

impl GrdTensor {
    pub fn from_grid(grid: &Grid, dtype: GrdDtype) -> Self {
        GrdTensor {
            dims: vec![grid.height() as u32, grid.width() as u32],
            dtype,
            data: grid.data().to_vec(),
        }
    }

    pub fn into_grid(self) -> Result<Grid> {
        if self.dims.len() != 2 {
            return Err(Error::UnsupportedFormat(format!(
                "expected rank-2 GRD, found rank {}",
                self.dims.len()
            )));
        }
        let (h, w) = (self.dims[0] as usize, self.dims[1] as usize);
        Grid::from_vec(w, h, self.data)
    }
}

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8], expected: usize) -> Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        let n = r.read(&mut buf[got..])?;
        if n == 0 {
            return Err(Error::TruncatedPayload { expected, got });
        }
        got += n;
    }
    Ok(got)
}

/// Reads one GRD tensor from a stream, leaving the stream positioned after
/// the payload (so tensors can be concatenated in container files).
pub fn read_grd_from(r: &mut impl Read) -> Result<GrdTensor> {
    let mut magic = [0u8; 4];
    read_exact_or_truncated(r, &mut magic, 4)?;
    if magic != GRD_MAGIC {
        return Err(Error::BadMagic {
            expected: GRD_MAGIC,
            found: magic,
        });
    }
    let mut u32buf = [0u8; 4];
    read_exact_or_truncated(r, &mut u32buf, 4)?;
    let rank = u32::from_le_bytes(u32buf);
    if rank != 2 && rank != 3 {
        return Err(Error::UnsupportedFormat(format!(
            "GRD rank must be 2 or 3, found {rank}"
        )));
    }
    let mut dims = Vec::with_capacity(rank as usize);
    for _ in 0..rank {
        read_exact_or_truncated(r, &mut u32buf, 4)?;
        let d = u32::from_le_bytes(u32buf);
        if d as u64 > MAX_SIDE {
            return Err(Error::DimensionOverflow { dim: d as u64 });
        }
        if d == 0 {
            return Err(Error::UnsupportedFormat("zero GRD dimension".into()));
        }
        dims.push(d);
    }
    let mut dtype_buf = [0u8; 1];
    read_exact_or_truncated(r, &mut dtype_buf, 1)?;
    let dtype = GrdDtype::from_code(dtype_buf[0])?;
    let count = dims.iter().map(|&d| d as usize).product::<usize>();
    let payload_len = count * dtype.byte_len();
    let mut payload = vec![0u8; payload_len];
    read_exact_or_truncated(r, &mut payload, payload_len)?;
    let data: Vec<f64> = match dtype {
        GrdDtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        GrdDtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    let bad = data.iter().filter(|v| !v.is_finite()).count();
    if bad > 0 {
        return Err(Error::NonFiniteData { count: bad });
    }
    Ok(GrdTensor { dims, dtype, data })
}

pub fn write_grd_to(w: &mut impl Write, tensor: &GrdTensor) -> Result<()> {
    let rank = tensor.dims.len();
    if rank != 2 && rank != 3 {
        return Err(Error::InvalidArgument(format!(
            "GRD rank must be 2 or 3, got {rank}"
        )));
    }
    for &d in &tensor.dims {
        if d as u64 > MAX_SIDE {
            return Err(Error::DimensionOverflow { dim: d as u64 });
        }
    }
    let count = tensor.dims.iter().map(|&d| d as usize).product::<usize>();
    if count != tensor.data.len() {
        return Err(Error::InvalidArgument(format!(
            "GRD data length {} does not match dims {:?}",
            tensor.data.len(),
            tensor.dims
        )));
    }
    w.write_all(&GRD_MAGIC)?;
    w.write_all(&(rank as u32).to_le_bytes())?;
    for &d in &tensor.dims {
        w.write_all(&d.to_le_bytes())?;
    }
    w.write_all(&[tensor.dtype.code()])?;
    match tensor.dtype {
        GrdDtype::F32 => {
            for &v in &tensor.data {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        GrdDtype::F64 => {
            for &v in &tensor.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Reads a rank-2 GRD file into a grid. Trailing bytes after the payload are
/// rejected so corruption does not pass silently.
pub fn read_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let mut r = BufReader::new(File::open(path)?);
    let tensor = read_grd_from(&mut r)?;
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::UnsupportedFormat(
            "trailing bytes after GRD payload".into(),
        ));
    }
    tensor.into_grid()
}

/// Writes a grid as a rank-2 f64 GRD file (the round-trip-exact default).
pub fn write_grid(grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    write_grid_with_dtype(grid, path, GrdDtype::F64)
}

pub fn write_grid_with_dtype(
    grid: &Grid,
    path: impl AsRef<Path>,
    dtype: GrdDtype,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_grd_to(&mut w, &GrdTensor::from_grid(grid, dtype))?;
    w.flush()?;
    Ok(())
}

/// Reads a binary P6 PPM with maxval 255 into an [`RgbImage`] scaled to `[0, 1]`.
pub fn read_ppm(path: impl AsRef<Path>) -> Result<RgbImage> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    parse_ppm(&bytes)
}

fn parse_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)
        .ok_or_else(|| Error::UnsupportedFormat("empty PPM".into()))?;
    if magic != b"P6" {
        return Err(Error::UnsupportedFormat(format!(
            "PPM magic {:?} (only binary P6 supported)",
            String::from_utf8_lossy(magic)
        )));
    }
    let w = parse_ppm_int(bytes, &mut pos)?;
    let h = parse_ppm_int(bytes, &mut pos)?;
    let maxval = parse_ppm_int(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PPM maxval {maxval} (only 255 supported)"
        )));
    }
    // Exactly one whitespace byte separates the header from the pixel data.
    pos += 1;
    let expected = w * h * 3;
    let payload = bytes.get(pos..pos + expected).ok_or(Error::TruncatedPayload {
        expected,
        got: bytes.len().saturating_sub(pos),
    })?;
    let mut channels = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for px in payload.chunks_exact(3) {
        for c in 0..3 {
            channels[c].push(px[c] as f64 / 255.0);
        }
    }
    let [r, g, b] = channels;
    RgbImage::new([
        Grid::from_vec(w, h, r)?,
        Grid::from_vec(w, h, g)?,
        Grid::from_vec(w, h, b)?,
    ])
}

/// Writes an [`RgbImage`] as binary P6 with maxval 255, rounding each channel.
pub fn write_ppm(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = image.dims();
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P6\n{w} {h}\n255\n")?;
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let v = (image.channel(c).at(x, y) * 255.0).round().clamp(0.0, 255.0);
                out.write_all(&[v as u8])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    // Skip whitespace and `#` comments.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(&bytes[start..*pos])
}

fn parse_ppm_int(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = next_token(bytes, pos)
        .ok_or_else(|| Error::UnsupportedFormat("truncated PPM header".into()))?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::UnsupportedFormat("bad PPM header field".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn grd_round_trip_is_identity() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.grd");
        let g = Grid::from_vec(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        write_grid(&g, &path).unwrap();
        let back = read_grid(&path).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn bad_magic_is_distinct_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.grd");
        std::fs::write(&path, b"GRDXrestoffile").unwrap();
        match read_grid(&path) {
            Err(Error::BadMagic { found, .. }) => assert_eq!(&found, b"GRDX"),
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn signed_values_round_trip_against_hand_encoded_bytes() {
        // Hand-encode a 3x1 f64 grid and compare byte-for-byte.
        let g = Grid::from_vec(3, 1, vec![-1.5, 0.0, 2.5]).unwrap();
        let mut expected: Vec<u8> = Vec::new();
        expected.extend_from_slice(b"GRD1");
        expected.extend_from_slice(&2u32.to_le_bytes()); // rank
        expected.extend_from_slice(&1u32.to_le_bytes()); // height
        expected.extend_from_slice(&3u32.to_le_bytes()); // width
        expected.push(1); // f64
        for v in [-1.5f64, 0.0, 2.5] {
            expected.extend_from_slice(&v.to_le_bytes());
        }
        let mut written = Vec::new();
        write_grd_to(&mut written, &GrdTensor::from_grid(&g, GrdDtype::F64)).unwrap();
        assert_eq!(written, expected);
        let back = read_grd_from(&mut &written[..]).unwrap().into_grid().unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn truncated_payload_is_distinct_error() {
        let g = Grid::from_vec(2, 2, vec![1.0; 4]).unwrap();
        let mut bytes = Vec::new();
        write_grd_to(&mut bytes, &GrdTensor::from_grid(&g, GrdDtype::F64)).unwrap();
        bytes.truncate(bytes.len() - 3);
        match read_grd_from(&mut &bytes[..]) {
            Err(Error::TruncatedPayload { .. }) => {}
            other => panic!("expected TruncatedPayload, got {other:?}"),
        }
    }

    #[test]
    fn dimension_overflow_is_distinct_error() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"GRD1");
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&100_000u32.to_le_bytes());
        bytes.push(1);
        match read_grd_from(&mut &bytes[..]) {
            Err(Error::DimensionOverflow { dim }) => assert_eq!(dim, 100_000),
            other => panic!("expected DimensionOverflow, got {other:?}"),
        }
    }

    #[test]
    fn f32_grd_reads_back() {
        let g = Grid::from_vec(2, 1, vec![0.5, -0.25]).unwrap();
        let mut bytes = Vec::new();
        write_grd_to(&mut bytes, &GrdTensor::from_grid(&g, GrdDtype::F32)).unwrap();
        let t = read_grd_from(&mut &bytes[..]).unwrap();
        assert_eq!(t.dtype, GrdDtype::F32);
        assert_eq!(t.into_grid().unwrap(), g);
    }

    #[test]
    fn ppm_single_red_pixel() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("px.ppm");
        std::fs::write(&path, [b"P6\n1 1\n255\n".as_slice(), &[255, 0, 0]].concat()).unwrap();
        let img = read_ppm(&path).unwrap();
        assert_eq!(
            (
                img.channel(0).at(0, 0),
                img.channel(1).at(0, 0),
                img.channel(2).at(0, 0)
            ),
            (1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn ppm_black_and_white_pixels() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bw.ppm");
        std::fs::write(
            &path,
            [b"P6\n2 1\n255\n".as_slice(), &[0, 0, 0, 255, 255, 255]].concat(),
        )
        .unwrap();
        let img = read_ppm(&path).unwrap();
        assert_eq!(img.channel(0).at(0, 0), 0.0);
        assert_eq!(img.channel(1).at(1, 0), 1.0);
        assert_eq!(img.channel(2).at(1, 0), 1.0);
    }

    #[test]
    fn ascii_ppm_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p3.ppm");
        std::fs::write(&path, b"P3\n1 1\n255\n255 0 0\n").unwrap();
        assert!(matches!(
            read_ppm(&path),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn nonstandard_maxval_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ppm");
        std::fs::write(&path, [b"P6\n1 1\n65535\n".as_slice(), &[0; 6]].concat()).unwrap();
        assert!(matches!(
            read_ppm(&path),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn ppm_write_read_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rt.ppm");
        let img = RgbImage::new([
            Grid::from_vec(2, 1, vec![0.0, 1.0]).unwrap(),
            Grid::from_vec(2, 1, vec![1.0, 0.0]).unwrap(),
            Grid::from_vec(2, 1, vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        write_ppm(&img, &path).unwrap();
        assert_eq!(read_ppm(&path).unwrap(), img);
    }
}
