//! Netpbm input/output: P2 and P5 graymaps, P6 pixmaps, 8-bit only.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{GrayImage, Image, RgbImage};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn skip_ws_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_uint(bytes: &[u8], pos: usize, what: &str) -> std::result::Result<(usize, usize), String> {
    let start = skip_ws_and_comments(bytes, pos);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(format!("expected {what}"));
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ascii digits");
    let v = text
        .parse::<usize>()
        .map_err(|_| format!("{what} out of range: {text}"))?;
    Ok((v, end))
}

fn parse_header(bytes: &[u8]) -> std::result::Result<Header, String> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err("not a netpbm file".into());
    }
    let magic = [bytes[0], bytes[1]];
    if !matches!(&magic, b"P2" | b"P5" | b"P6") {
        return Err(format!(
            "unsupported netpbm variant {}",
            String::from_utf8_lossy(&magic)
        ));
    }
    let (width, pos) = read_uint(bytes, 2, "width")?;
    let (height, pos) = read_uint(bytes, pos, "height")?;
    let (maxval, pos) = read_uint(bytes, pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(format!("zero dimension {width}x{height}"));
    }
    if maxval != 255 {
        return Err(format!("maxval must be 255, found {maxval}"));
    }
    // exactly one whitespace byte separates the header from binary data
    if (pos >= bytes.len() || !bytes[pos].is_ascii_whitespace()) && (magic != *b"P2" || pos < bytes.len()) {
        return Err("missing whitespace after maxval".into());
    }
    Ok(Header {
        magic,
        width,
        height,
        maxval,
        data_start: pos + 1,
    })
}

/// Decodes an in-memory netpbm image. `path` is used only in error messages.
pub fn decode(bytes: &[u8], path: &Path) -> Result<Image> {
    let h = parse_header(bytes).map_err(|r| Error::format(path, r))?;
    debug_assert_eq!(h.maxval, 255);
    let n = h.width * h.height;
    match &h.magic {
        b"P5" => {
            let data = bytes.get(h.data_start..h.data_start + n).ok_or_else(|| {
                Error::format(path, format!("expected {n} bytes of pixel data"))
            })?;
            Ok(Image::Gray(GrayImage::new(h.width, h.height, data.to_vec())?))
        }
        b"P6" => {
            let data = bytes
                .get(h.data_start..h.data_start + 3 * n)
                .ok_or_else(|| {
                    Error::format(path, format!("expected {} bytes of pixel data", 3 * n))
                })?;
            let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            Ok(Image::Rgb(RgbImage::new(h.width, h.height, pixels)?))
        }
        _ => {
            let mut pixels = Vec::with_capacity(n);
            let mut pos = h.data_start.min(bytes.len());
            for _ in 0..n {
                let (v, next) = read_uint(bytes, pos, "sample").map_err(|r| Error::format(path, r))?;
                if v > 255 {
                    return Err(Error::format(path, format!("sample {v} exceeds maxval")));
                }
                pixels.push(v as u8);
                pos = next;
            }
            Ok(Image::Gray(GrayImage::new(h.width, h.height, pixels)?))
        }
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// Reads any supported netpbm file and converts it to grayscale.
pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    read_image(path).map(Image::into_gray)
}

pub fn encode_p5(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn encode_p6(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    for p in img.pixels() {
        out.extend_from_slice(p);
    }
    out
}

pub fn write_p5(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_p5(img)).map_err(|e| Error::io(path, e))
}

pub fn write_p6(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_p6(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn decodes_plain_pgm_with_comments() {
        let src = b"P2\n# a comment\n3 2\n255\n0 1 2\n# mid\n253 254 255\n";
        let img = decode(src, p()).unwrap().into_gray();
        assert_eq!(img.pixels(), &[0, 1, 2, 253, 254, 255]);
    }

    #[test]
    fn decodes_p6() {
        let mut src = b"P6 2 1 255\n".to_vec();
        src.extend_from_slice(&[255, 255, 255, 0, 0, 0]);
        match decode(&src, p()).unwrap() {
            Image::Rgb(c) => assert_eq!(c.pixels(), &[[255; 3], [0; 3]]),
            other => panic!("expected rgb, got {other:?}"),
        }
    }

    #[test]
    fn rejects_sixteen_bit() {
        let mut src = b"P5\n1 1\n65535\n".to_vec();
        src.extend_from_slice(&[0, 0]);
        let err = decode(&src, p()).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
        assert!(decode(b"P2 1 1 15 3", p()).is_err());
    }

    #[test]
    fn rejects_truncated_and_unknown() {
        assert!(decode(b"P5\n4 4\n255\n\x00\x01", p()).is_err());
        assert!(decode(b"P3\n1 1\n255\n0 0 0", p()).is_err());
        assert!(decode(b"JFIF", p()).is_err());
        assert!(decode(b"P2 2 1 255\n7", p()).is_err());
    }

    proptest! {
        #[test]
        fn p5_round_trip(w in 1usize..20, h in 1usize..20, seed in any::<u8>()) {
            let img = GrayImage::from_fn(w, h, |x, y| (x * 31 + y * 7) as u8 ^ seed).unwrap();
            let back = decode(&encode_p5(&img), p()).unwrap().into_gray();
            prop_assert_eq!(back, img);
        }
    }
}
