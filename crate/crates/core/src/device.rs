//! Compact little-endian profile encoding served to the gripper's
//! microcontroller.
//!
//! ```text
//! u16  keypoint count N
//! N ×  { u16 t_ms, i8 u·127 (rounded) }
//! u16  duration_ms
//! u8   continuous (0 or 1)
//! ```
//!
//! The name is not transmitted. Times are quantized to 1 ms and `u` to 1/127,
//! so durations above 65.535 s cannot be encoded.

use thiserror::Error;

use crate::profile::{Keypoint, MotionProfile, ProfileError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("{0} keypoints exceed the u16 keypoint count")]
    TooManyKeypoints(usize),
    #[error("time {0} s does not fit in u16 milliseconds")]
    TimeOverflow(f64),
    #[error("quantized profile is invalid: {0}")]
    Quantization(ProfileError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("truncated input: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("continuous flag must be 0 or 1, got {0}")]
    BadFlag(u8),
    #[error("keypoint {0}: u = -128 is outside the encodable range")]
    BadAmplitude(usize),
    #[error("decoded profile is invalid: {0}")]
    Invalid(#[from] ProfileError),
}

pub const HEADER_LEN: usize = 2;
pub const KEYPOINT_LEN: usize = 3;
pub const TRAILER_LEN: usize = 3;

fn millis(t: f64) -> Result<u16, EncodeError> {
    let ms = (t * 1000.0).round();
    if (0.0..=f64::from(u16::MAX)).contains(&ms) {
        Ok(ms as u16)
    } else {
        Err(EncodeError::TimeOverflow(t))
    }
}

fn amplitude(u: f64) -> i8 {
    (u * 127.0).round().clamp(-127.0, 127.0) as i8
}

pub fn encoded_len(keypoints: usize) -> usize {
    HEADER_LEN + KEYPOINT_LEN * keypoints + TRAILER_LEN
}

pub fn encode(profile: &MotionProfile) -> Result<Vec<u8>, EncodeError> {
    let kps = profile.keypoints();
    let count = u16::try_from(kps.len()).map_err(|_| EncodeError::TooManyKeypoints(kps.len()))?;
    let mut out = Vec::with_capacity(encoded_len(kps.len()));
    out.extend_from_slice(&count.to_le_bytes());
    let mut quantized = Vec::with_capacity(kps.len());
    for kp in kps {
        let t = millis(kp.t)?;
        let u = amplitude(kp.u);
        out.extend_from_slice(&t.to_le_bytes());
        out.push(u as u8);
        quantized.push(Keypoint::new(f64::from(t) / 1000.0, f64::from(u) / 127.0));
    }
    let duration = millis(profile.duration_s())?;
    out.extend_from_slice(&duration.to_le_bytes());
    out.push(u8::from(profile.continuous()));
    // rounding can merge time stamps; refuse anything the device could not decode
    MotionProfile::new("", f64::from(duration) / 1000.0, profile.continuous(), quantized)
        .map_err(EncodeError::Quantization)?;
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<MotionProfile, DecodeError> {
    let need = |n: usize| {
        if bytes.len() < n {
            Err(DecodeError::Truncated {
                needed: n,
                got: bytes.len(),
            })
        } else {
            Ok(())
        }
    };
    need(HEADER_LEN)?;
    let count = usize::from(u16::from_le_bytes([bytes[0], bytes[1]]));
    let total = encoded_len(count);
    need(total)?;
    if bytes.len() > total {
        return Err(DecodeError::TrailingBytes(bytes.len() - total));
    }
    let keypoints = bytes[HEADER_LEN..HEADER_LEN + KEYPOINT_LEN * count]
        .chunks_exact(KEYPOINT_LEN)
        .enumerate()
        .map(|(i, c)| {
            let t = u16::from_le_bytes([c[0], c[1]]);
            let u = c[2] as i8;
            if u == i8::MIN {
                return Err(DecodeError::BadAmplitude(i));
            }
            Ok(Keypoint::new(f64::from(t) / 1000.0, f64::from(u) / 127.0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let tail = &bytes[total - TRAILER_LEN..];
    let duration = u16::from_le_bytes([tail[0], tail[1]]);
    let continuous = match tail[2] {
        0 => false,
        1 => true,
        other => return Err(DecodeError::BadFlag(other)),
    };
    Ok(MotionProfile::new(
        "",
        f64::from(duration) / 1000.0,
        continuous,
        keypoints,
    )?)
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn from_hex(s: &str) -> Option<Vec<u8>> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).ok())
        .collect()
}
