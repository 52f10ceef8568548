//! Raw clip files: `<stem>.raw` holds the frames back to back as row-major
//! unsigned 8-bit grayscale, `<stem>.hdr` is a small text header:
//!
//! ```text
//! width 640
//! height 480
//! frames 50
//! fps 10
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::Frame;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClipHeader {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub fps: f64,
}

impl ClipHeader {
    pub fn to_text(&self) -> String {
        format!(
            "width {}\nheight {}\nframes {}\nfps {}\n",
            self.width, self.height, self.frames, self.fps
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (mut width, mut height, mut frames, mut fps) = (None, None, None, None);
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (key, value) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::Parse(format!("malformed header line `{line}`")))?;
            let value = value.trim();
            let bad = |_| Error::Parse(format!("bad value for `{key}`: `{value}`"));
            match key {
                "width" => width = Some(value.parse::<usize>().map_err(bad)?),
                "height" => height = Some(value.parse::<usize>().map_err(bad)?),
                "frames" => frames = Some(value.parse::<usize>().map_err(bad)?),
                "fps" => {
                    fps = Some(
                        value
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad fps `{value}`")))?,
                    )
                }
                other => return Err(Error::Parse(format!("unknown header key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("header is missing `{k}`"));
        Ok(Self {
            width: width.ok_or_else(|| missing("width"))?,
            height: height.ok_or_else(|| missing("height"))?,
            frames: frames.ok_or_else(|| missing("frames"))?,
            fps: fps.ok_or_else(|| missing("fps"))?,
        })
    }
}

pub fn raw_path(stem: &Path) -> PathBuf {
    stem.with_extension("raw")
}

pub fn header_path(stem: &Path) -> PathBuf {
    stem.with_extension("hdr")
}

/// Writes `frames` under `stem` (extensions are replaced).
pub fn write_clip(stem: &Path, frames: &[Frame], fps: f64) -> Result<ClipHeader> {
    let first = frames
        .first()
        .ok_or_else(|| Error::structural("cannot write an empty clip"))?;
    let header = ClipHeader {
        width: first.width(),
        height: first.height(),
        frames: frames.len(),
        fps,
    };
    let mut raw = fs::File::create(raw_path(stem))?;
    for f in frames {
        if f.width() != header.width || f.height() != header.height {
            return Err(Error::structural(
                "all frames of a clip must share one size",
            ));
        }
        raw.write_all(f.pixels())?;
    }
    fs::write(header_path(stem), header.to_text())?;
    Ok(header)
}

pub fn read_clip(stem: &Path) -> Result<(ClipHeader, Vec<Frame>)> {
    let header = ClipHeader::parse(&fs::read_to_string(header_path(stem))?)?;
    let bytes = fs::read(raw_path(stem))?;
    let frame_len = header.width * header.height;
    if frame_len == 0 || bytes.len() != frame_len * header.frames {
        return Err(Error::structural(format!(
            "raw file holds {} bytes, header promises {} frames of {}x{}",
            bytes.len(),
            header.frames,
            header.width,
            header.height
        )));
    }
    let frames = bytes
        .chunks_exact(frame_len)
        .map(|c| Frame::new(header.width, header.height, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, frames))
}
