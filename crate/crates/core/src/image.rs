//! Grayscale images and PGM (P2 / P5) I/O.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A grayscale image with real-valued pixels, stored row by row.
///
/// Nominal range is `[0, 255]`, but noisy and intermediate images may fall
/// outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::dim("image must have positive width and height"));
        }
        if pixels.len() != width * height {
            return Err(Error::dim(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image pixel".into()));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * self.width + col] = v;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    /// Pixels rounded and clipped to `[0, 255]`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// PGM flavor to write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmFormat {
    /// `P2`, ASCII.
    Plain,
    /// `P5`, binary, maxval 255.
    Binary,
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
fn header_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let got = r
            .read(&mut byte)
            .map_err(|e| Error::parse("PGM header", e.to_string()))?;
        if got == 0 {
            break;
        }
        let b = byte[0];
        if b == b'#' && tok.is_empty() {
            let mut skip = Vec::new();
            r.read_until(b'\n', &mut skip)
                .map_err(|e| Error::parse("PGM header", e.to_string()))?;
            continue;
        }
        if b.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(b);
    }
    if tok.is_empty() {
        return Err(Error::parse("PGM header", "unexpected end of file"));
    }
    String::from_utf8(tok).map_err(|e| Error::parse("PGM header", e.to_string()))
}

fn header_number<R: BufRead>(r: &mut R, field: &str) -> Result<usize> {
    let tok = header_token(r)?;
    tok.parse()
        .map_err(|_| Error::parse("PGM header", format!("bad {field} {tok:?}")))
}

/// Decodes a P2 or P5 image. 16-bit P5 (maxval > 255) is read big-endian.
/// Pixel values are returned on their stored scale.
pub fn decode_pgm<R: Read>(reader: R) -> Result<Image> {
    let mut r = BufReader::new(reader);
    let magic = header_token(&mut r)?;
    let width = header_number(&mut r, "width")?;
    let height = header_number(&mut r, "height")?;
    let maxval = header_number(&mut r, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(
            "PGM header",
            format!("maxval {maxval} out of range"),
        ));
    }
    let count = width * height;
    let pixels: Vec<f64> = match magic.as_str() {
        "P2" => {
            let mut text = String::new();
            r.read_to_string(&mut text)
                .map_err(|e| Error::parse("PGM data", e.to_string()))?;
            let vals = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_ascii_whitespace)
                .take(count)
                .map(|t| {
                    t.parse::<u32>()
                        .map(f64::from)
                        .map_err(|_| Error::parse("PGM data", format!("bad sample {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            vals
        }
        "P5" => {
            let bytes_per = if maxval > 255 { 2 } else { 1 };
            let mut buf = vec![0u8; count * bytes_per];
            r.read_exact(&mut buf)
                .map_err(|e| Error::parse("PGM data", e.to_string()))?;
            if bytes_per == 1 {
                buf.into_iter().map(f64::from).collect()
            } else {
                buf.chunks_exact(2)
                    .map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])))
                    .collect()
            }
        }
        other => {
            return Err(Error::parse(
                "PGM header",
                format!("unsupported magic {other:?}"),
            ));
        }
    };
    if pixels.len() != count {
        return Err(Error::parse(
            "PGM data",
            format!("expected {count} samples, found {}", pixels.len()),
        ));
    }
    if pixels.iter().any(|&v| v > maxval as f64) {
        return Err(Error::parse("PGM data", "sample exceeds maxval"));
    }
    Image::new(width, height, pixels)
}

/// Encodes with maxval 255; pixels are rounded and clipped to `[0, 255]`.
pub fn encode_pgm<W: Write>(img: &Image, format: PgmFormat, mut w: W) -> std::io::Result<()> {
    let bytes = img.to_u8();
    match format {
        PgmFormat::Binary => {
            write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
            w.write_all(&bytes)?;
        }
        PgmFormat::Plain => {
            write!(w, "P2\n{} {}\n255\n", img.width(), img.height())?;
            for row in bytes.chunks(img.width()) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
    }
    w.flush()
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        action: "open",
        path: path.to_path_buf(),
        source,
    })?;
    decode_pgm(file)
}

pub fn write_pgm(img: &Image, path: impl AsRef<Path>, format: PgmFormat) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    encode_pgm(img, format, std::io::BufWriter::new(file)).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_with_comments() {
        let src = b"P2\n# made by hand\n3 2\n# max\n255\n0 1 2\n# mid\n250 251 255\n";
        let img = decode_pgm(&src[..]).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.pixels(), &[0.0, 1.0, 2.0, 250.0, 251.0, 255.0]);
    }

    #[test]
    fn binary_round_trip() {
        let img = Image::from_fn(4, 3, |r, c| (r * 40 + c * 7) as f64).unwrap();
        let mut buf = Vec::new();
        encode_pgm(&img, PgmFormat::Binary, &mut buf).unwrap();
        assert_eq!(decode_pgm(&buf[..]).unwrap(), img);
        let mut buf = Vec::new();
        encode_pgm(&img, PgmFormat::Plain, &mut buf).unwrap();
        assert_eq!(decode_pgm(&buf[..]).unwrap(), img);
    }

    #[test]
    fn encode_clips_and_rounds() {
        let img = Image::new(3, 1, vec![-4.2, 127.5, 300.0]).unwrap();
        assert_eq!(img.to_u8(), vec![0, 128, 255]);
    }

    #[test]
    fn truncated_binary_fails() {
        let src = b"P5\n2 2\n255\n\x01\x02";
        assert!(decode_pgm(&src[..]).is_err());
    }

    #[test]
    fn unsupported_magic_fails() {
        assert!(decode_pgm(&b"P6\n1 1\n255\n\x00\x00\x00"[..]).is_err());
    }
}
