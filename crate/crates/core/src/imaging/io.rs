//! Binary PPM (P6) and raw-bin readers and writers.
//!
//! raw-bin layout, all little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `SRAW`                            |
//! | 4      | 4    | width (u32)                             |
//! | 8      | 4    | height (u32)                            |
//! | 12     | 1    | Bayer pattern code (RGGB=0 BGGR=1 GRBG=2 GBRG=3) |
//! | 13     | 1    | bit depth, 8..=24                       |
//! | 14     | 1    | format version (1)                      |
//! | 15     | 1    | reserved, 0                             |
//! | 16     | ...  | row-major integer codes                 |
//!
//! Codes occupy the low `bit_depth` bits of a u16 when `bit_depth <= 16` and of a
//! u32 otherwise.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{dequantize_sample, max_code, quantize_sample, BayerPattern, BayerRaw, RgbImage};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const RAW_BIN_MAGIC: [u8; 4] = *b"SRAW";
pub const RAW_BIN_HEADER_LEN: usize = 16;
const RAW_BIN_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm8,
    Ppm16,
    RawBin,
}

impl ImageFormat {
    pub fn bit_depth(self) -> Option<u8> {
        match self {
            ImageFormat::Ppm8 => Some(8),
            ImageFormat::Ppm16 => Some(16),
            ImageFormat::RawBin => None,
        }
    }
}

impl fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImageFormat::Ppm8 => "ppm8",
            ImageFormat::Ppm16 => "ppm16",
            ImageFormat::RawBin => "raw-bin",
        })
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppm8" => Ok(ImageFormat::Ppm8),
            "ppm16" => Ok(ImageFormat::Ppm16),
            "raw-bin" | "raw" => Ok(ImageFormat::RawBin),
            other => Err(Error::Parameter(format!("unknown image format `{other}`"))),
        }
    }
}

/// Either kind of image a file can hold.
#[derive(Clone, Debug, PartialEq)]
pub enum Image<T> {
    Rgb(RgbImage<T>),
    Raw(BayerRaw<T>),
}

impl<T> Image<T> {
    pub fn into_rgb(self) -> Result<RgbImage<T>> {
        match self {
            Image::Rgb(img) => Ok(img),
            Image::Raw(_) => Err(Error::Format("expected an RGB image, found a Bayer raw".into())),
        }
    }

    pub fn into_raw(self) -> Result<BayerRaw<T>> {
        match self {
            Image::Raw(raw) => Ok(raw),
            Image::Rgb(_) => Err(Error::Format("expected a Bayer raw, found an RGB image".into())),
        }
    }
}

impl<T> From<RgbImage<T>> for Image<T> {
    fn from(img: RgbImage<T>) -> Self {
        Image::Rgb(img)
    }
}

impl<T> From<BayerRaw<T>> for Image<T> {
    fn from(raw: BayerRaw<T>) -> Self {
        Image::Raw(raw)
    }
}

/// Serializes an RGB image as binary P6 at 8 or 16 bits. Samples are clamped to `[0, 1]`.
pub fn encode_ppm<T: Scalar>(img: &RgbImage<T>, bit_depth: u8) -> Result<Vec<u8>> {
    if bit_depth != 8 && bit_depth != 16 {
        return Err(Error::Parameter(format!("PPM supports 8 or 16 bits, not {bit_depth}")));
    }
    let maxval = max_code(bit_depth);
    let header = format!("P6\n{} {}\n{}\n", img.width(), img.height(), maxval);
    let bytes_per_sample = if bit_depth == 8 { 1 } else { 2 };
    let mut out = Vec::with_capacity(header.len() + 3 * img.pixel_count() * bytes_per_sample);
    out.extend_from_slice(header.as_bytes());
    for i in 0..img.pixel_count() {
        for s in img.pixel_at(i) {
            let code = quantize_sample(s, bit_depth);
            if bit_depth == 8 {
                out.push(code as u8);
            } else {
                out.extend_from_slice(&(code as u16).to_be_bytes());
            }
        }
    }
    Ok(out)
}

struct PpmHeader {
    width: usize,
    height: usize,
    maxval: u32,
    payload_offset: usize,
}

fn parse_ppm_header(bytes: &[u8]) -> Result<PpmHeader> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(Error::Format("missing P6 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for (k, field) in fields.iter_mut().enumerate() {
        // whitespace and `#` comments between tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        if k == 0 && pos == 2 {
            return Err(Error::Format("no whitespace after P6 magic".into()));
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("expected a decimal header field".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("header field out of range".into()))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} outside 1..=65535")));
    }
    if width == 0 || height == 0 || width > u32::MAX as u64 || height > u32::MAX as u64 {
        return Err(Error::Format(format!("implausible dimensions {width}x{height}")));
    }
    Ok(PpmHeader {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        payload_offset: pos,
    })
}

/// Parses binary P6. Samples are divided by the header's maxval.
pub fn decode_ppm<T: Scalar>(bytes: &[u8]) -> Result<RgbImage<T>> {
    let header = parse_ppm_header(bytes)?;
    let wide = header.maxval > 255;
    let bytes_per_sample = if wide { 2 } else { 1 };
    let n = header.width * header.height;
    let expected = 3 * n * bytes_per_sample;
    let payload = &bytes[header.payload_offset..];
    if payload.len() < expected {
        return Err(Error::Size {
            expected,
            found: payload.len(),
        });
    }
    let scale = header.maxval as f64;
    let mut data = vec![T::zero(); 3 * n];
    for i in 0..n {
        for c in 0..3 {
            let k = 3 * i + c;
            let code = if wide {
                u16::from_be_bytes([payload[2 * k], payload[2 * k + 1]]) as u32
            } else {
                payload[k] as u32
            };
            if code > header.maxval {
                return Err(Error::Format(format!("sample {code} exceeds maxval {}", header.maxval)));
            }
            data[c * n + i] = T::lit(code as f64 / scale);
        }
    }
    RgbImage::new(header.width, header.height, data)
}

pub fn encode_raw_bin<T: Scalar>(raw: &BayerRaw<T>) -> Vec<u8> {
    let bd = raw.bit_depth();
    let wide = bd > 16;
    let mut out = Vec::with_capacity(RAW_BIN_HEADER_LEN + raw.data().len() * if wide { 4 } else { 2 });
    out.extend_from_slice(&RAW_BIN_MAGIC);
    out.extend_from_slice(&(raw.width() as u32).to_le_bytes());
    out.extend_from_slice(&(raw.height() as u32).to_le_bytes());
    out.push(raw.pattern().code());
    out.push(bd);
    out.push(RAW_BIN_VERSION);
    out.push(0);
    for &s in raw.data() {
        let code = quantize_sample(s, bd);
        if wide {
            out.extend_from_slice(&code.to_le_bytes());
        } else {
            out.extend_from_slice(&(code as u16).to_le_bytes());
        }
    }
    out
}

pub fn decode_raw_bin<T: Scalar>(bytes: &[u8]) -> Result<BayerRaw<T>> {
    if bytes.len() < RAW_BIN_HEADER_LEN {
        return Err(Error::Format(format!(
            "raw-bin header needs {RAW_BIN_HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    if bytes[..4] != RAW_BIN_MAGIC {
        return Err(Error::Format("missing SRAW magic".into()));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let pattern = BayerPattern::from_code(bytes[12])
        .ok_or_else(|| Error::Format(format!("unknown pattern code {}", bytes[12])))?;
    let bd = bytes[13];
    if bytes[14] != RAW_BIN_VERSION {
        return Err(Error::Format(format!("unsupported raw-bin version {}", bytes[14])));
    }
    if !(super::MIN_BIT_DEPTH..=super::MAX_BIT_DEPTH).contains(&bd) {
        return Err(Error::Format(format!("bit depth {bd} outside [8, 24]")));
    }
    let wide = bd > 16;
    let stride = if wide { 4 } else { 2 };
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let expected = n * stride;
    let payload = &bytes[RAW_BIN_HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::Size {
            expected,
            found: payload.len(),
        });
    }
    let max = max_code(bd);
    let mut data = Vec::with_capacity(n);
    for chunk in payload[..expected].chunks_exact(stride) {
        let code = if wide {
            u32::from_le_bytes(chunk.try_into().unwrap())
        } else {
            u16::from_le_bytes(chunk.try_into().unwrap()) as u32
        };
        if code > max {
            return Err(Error::Format(format!("code {code} exceeds {bd}-bit range")));
        }
        data.push(dequantize_sample(code, bd));
    }
    BayerRaw::new(width, height, pattern, bd, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn encode_image<T: Scalar>(img: &Image<T>, format: ImageFormat) -> Result<Vec<u8>> {
    match (img, format) {
        (Image::Rgb(rgb), ImageFormat::Ppm8) => encode_ppm(rgb, 8),
        (Image::Rgb(rgb), ImageFormat::Ppm16) => encode_ppm(rgb, 16),
        (Image::Raw(raw), ImageFormat::RawBin) => Ok(encode_raw_bin(raw)),
        (Image::Rgb(_), ImageFormat::RawBin) => Err(Error::Format(
            "raw-bin holds Bayer frames; mosaic the image first".into(),
        )),
        (Image::Raw(_), _) => Err(Error::Format(format!("a Bayer raw cannot be written as {format}"))),
    }
}

pub fn decode_image<T: Scalar>(bytes: &[u8], format: ImageFormat) -> Result<Image<T>> {
    match format {
        ImageFormat::Ppm8 | ImageFormat::Ppm16 => {
            let header = parse_ppm_header(bytes)?;
            let wide = header.maxval > 255;
            if wide != (format == ImageFormat::Ppm16) {
                return Err(Error::Format(format!(
                    "maxval {} does not match requested {format}",
                    header.maxval
                )));
            }
            decode_ppm(bytes).map(Image::Rgb)
        }
        ImageFormat::RawBin => decode_raw_bin(bytes).map(Image::Raw),
    }
}

/// Picks the format from the leading magic bytes.
pub fn sniff_format(bytes: &[u8]) -> Result<ImageFormat> {
    if bytes.starts_with(&RAW_BIN_MAGIC) {
        return Ok(ImageFormat::RawBin);
    }
    if bytes.starts_with(b"P6") {
        let header = parse_ppm_header(bytes)?;
        return Ok(if header.maxval > 255 {
            ImageFormat::Ppm16
        } else {
            ImageFormat::Ppm8
        });
    }
    Err(Error::Format("unrecognized image magic".into()))
}

pub fn load_image<T: Scalar>(path: impl AsRef<Path>, format: ImageFormat) -> Result<Image<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes, format)
}

/// Loads a PPM or raw-bin file, detecting which from its contents.
pub fn load_any<T: Scalar>(path: impl AsRef<Path>) -> Result<Image<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = sniff_format(&bytes)?;
    decode_image(&bytes, format)
}

pub fn save_image<T: Scalar>(img: &Image<T>, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(img, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_rgb<T: Scalar>(path: impl AsRef<Path>) -> Result<RgbImage<T>> {
    load_any(path)?.into_rgb()
}

pub fn load_raw<T: Scalar>(path: impl AsRef<Path>) -> Result<BayerRaw<T>> {
    load_image(path, ImageFormat::RawBin)?.into_raw()
}

pub fn save_rgb<T: Scalar>(img: &RgbImage<T>, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        ImageFormat::Ppm8 => encode_ppm(img, 8)?,
        ImageFormat::Ppm16 => encode_ppm(img, 16)?,
        ImageFormat::RawBin => {
            return Err(Error::Format(
                "raw-bin holds Bayer frames; mosaic the image first".into(),
            ))
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn save_raw<T: Scalar>(raw: &BayerRaw<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_raw_bin(raw)).map_err(|e| Error::io(path, e))
}
