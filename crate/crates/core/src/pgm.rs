//! Minimal PGM (P2/P5) reader and P5 writer.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed PGM: {0}")]
    Malformed(String),
}

/// A grayscale image with samples rescaled to `0..=255`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str, PgmError> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::Malformed("unexpected end of header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| PgmError::Malformed("non-ascii header".into()))
    }

    fn number(&mut self) -> Result<usize, PgmError> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| PgmError::Malformed(format!("bad number {tok:?}")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token()?.to_owned();
    let width = h.number()?;
    let height = h.number()?;
    let maxval = h.number()?;
    if width == 0 || height == 0 {
        return Err(PgmError::Malformed("zero dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::Malformed(format!("maxval {maxval} out of range")));
    }
    let n = width * height;
    let scale = |v: usize| -> u8 {
        if maxval == 255 {
            v.min(255) as u8
        } else {
            ((v.min(maxval) as f64) * 255.0 / maxval as f64).round() as u8
        }
    };
    let data = match magic.as_str() {
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            let start = h.pos + 1;
            let bpp = if maxval < 256 { 1 } else { 2 };
            let raster = bytes
                .get(start..start + n * bpp)
                .ok_or_else(|| PgmError::Malformed("raster truncated".into()))?;
            if bpp == 1 {
                raster.iter().map(|&v| scale(v as usize)).collect()
            } else {
                raster
                    .chunks_exact(2)
                    .map(|c| scale(u16::from_be_bytes([c[0], c[1]]) as usize))
                    .collect()
            }
        }
        "P2" => (0..n)
            .map(|_| h.number().map(scale))
            .collect::<Result<Vec<_>, _>>()?,
        other => return Err(PgmError::Malformed(format!("unsupported magic {other:?}"))),
    };
    Ok(GrayImage {
        width,
        height,
        data,
    })
}

pub fn read(path: impl AsRef<Path>) -> Result<GrayImage, PgmError> {
    decode(&fs::read(path)?)
}

pub fn encode_p5(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    assert_eq!(data.len(), width * height, "raster size mismatch");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

pub fn write_p5(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    data: &[u8],
) -> Result<(), PgmError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_p5(width, height, data))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p5_round_trip() {
        let data: Vec<u8> = (0..12).map(|v| v * 20).collect();
        let img = decode(&encode_p5(4, 3, &data)).unwrap();
        assert_eq!((img.width, img.height), (4, 3));
        assert_eq!(img.data, data);
    }

    #[test]
    fn p2_with_comments_and_rescale() {
        let text = b"P2\n# a comment\n2 1\n15\n0 15\n";
        let img = decode(text).unwrap();
        assert_eq!(img.data, vec![0, 255]);
    }

    #[test]
    fn rejects_truncated_raster() {
        let mut bytes = encode_p5(4, 4, &[0; 16]);
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(decode(&bytes), Err(PgmError::Malformed(_))));
    }

    #[test]
    fn rejects_unknown_magic() {
        assert!(decode(b"P6\n1 1\n255\n\0\0\0").is_err());
    }
}
