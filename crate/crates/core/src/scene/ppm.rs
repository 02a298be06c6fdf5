//! Binary portable pixmap (P6) dump of rendered views.

use super::ViewImage;
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PpmError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed PPM header: {0}")]
    Header(String),
    #[error("only square 8-bit images are supported")]
    Unsupported,
}

pub fn write_ppm<W: Write>(mut w: W, image: &ViewImage) -> io::Result<()> {
    write!(w, "P6\n{} {}\n255\n", image.size, image.size)?;
    w.write_all(&image.pixels)
}

fn next_token<R: BufRead>(r: &mut R) -> Result<String, PpmError> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0] as char;
        if c == '#' && tok.is_empty() {
            let mut line = String::new();
            r.read_line(&mut line)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(c);
    }
    if tok.is_empty() {
        return Err(PpmError::Header("unexpected end of header".into()));
    }
    Ok(tok)
}

pub fn read_ppm<R: BufRead>(mut r: R) -> Result<ViewImage, PpmError> {
    let magic = next_token(&mut r)?;
    if magic != "P6" {
        return Err(PpmError::Header(format!("magic {magic:?}")));
    }
    let mut num = || -> Result<usize, PpmError> {
        let t = next_token(&mut r)?;
        t.parse().map_err(|_| PpmError::Header(format!("bad number {t:?}")))
    };
    let (w, h, max) = (num()?, num()?, num()?);
    if w != h || max != 255 {
        return Err(PpmError::Unsupported);
    }
    let mut image = ViewImage::new(w);
    r.read_exact(&mut image.pixels)?;
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut img = ViewImage::new(3);
        img.set_rgb(1, 2, [9, 8, 7]);
        let mut buf = Vec::new();
        write_ppm(&mut buf, &img).unwrap();
        assert!(buf.starts_with(b"P6\n3 3\n255\n"));
        assert_eq!(read_ppm(&buf[..]).unwrap(), img);
    }
}
