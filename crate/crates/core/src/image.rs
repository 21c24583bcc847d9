use crate::error::{Error, Result};
use crate::key::Geometry;

/// 8-bit image stored row-major with interleaved channels (`HWC`).
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    geometry: Geometry,
    data: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Image({})", self.geometry)
    }
}

impl Image {
    pub fn new(geometry: Geometry, data: Vec<u8>) -> Result<Self> {
        if geometry.is_empty() {
            return Err(Error::validation(format!(
                "empty image geometry {geometry}"
            )));
        }
        if data.len() != geometry.len() {
            return Err(Error::validation(format!(
                "pixel buffer of {} bytes does not match geometry {geometry}",
                data.len()
            )));
        }
        Ok(Self { geometry, data })
    }

    pub fn filled(geometry: Geometry, value: u8) -> Self {
        Self {
            geometry,
            data: vec![value; geometry.len()],
        }
    }

    /// Builds an image from a per-sample function `f(y, x, channel)`.
    pub fn from_fn(geometry: Geometry, mut f: impl FnMut(usize, usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(geometry.len());
        for y in 0..geometry.h {
            for x in 0..geometry.w {
                for ch in 0..geometry.c {
                    data.push(f(y, x, ch));
                }
            }
        }
        Self { geometry, data }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn height(&self) -> usize {
        self.geometry.h
    }

    pub fn width(&self) -> usize {
        self.geometry.w
    }

    pub fn channels(&self) -> usize {
        self.geometry.c
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, ch: usize) -> usize {
        (y * self.geometry.w + x) * self.geometry.c + ch
    }

    pub fn get(&self, y: usize, x: usize, ch: usize) -> u8 {
        self.data[self.index(y, x, ch)]
    }

    pub fn set(&mut self, y: usize, x: usize, ch: usize, v: u8) {
        let i = self.index(y, x, ch);
        self.data[i] = v;
    }

    /// Count of each sample value over all channels.
    pub fn histogram(&self) -> [u64; 256] {
        let mut h = [0u64; 256];
        for &v in &self.data {
            h[v as usize] += 1;
        }
        h
    }

    /// Copies `src` into this image with its top-left corner at `(y0, x0)`, clipping at the edges.
    pub fn blit(&mut self, src: &Image, y0: usize, x0: usize) -> Result<()> {
        if src.channels() != self.channels() {
            return Err(Error::validation("channel count mismatch in blit"));
        }
        let c = self.channels();
        for y in 0..src.height().min(self.height().saturating_sub(y0)) {
            let w = src.width().min(self.width().saturating_sub(x0));
            let d = self.index(y0 + y, x0, 0);
            let s = src.index(y, 0, 0);
            self.data[d..d + w * c].copy_from_slice(&src.data[s..s + w * c]);
        }
        Ok(())
    }
}
