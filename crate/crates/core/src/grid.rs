//! Dense row-major 2D grids used for images, depth maps and masks.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row-major 2D grid. Pixel `(x, y)` lives at `data[y * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Per-pixel validity flags.
pub type Mask = Grid<bool>;

/// 8-bit RGB image.
pub type RgbImage = Grid<[u8; 3]>;

/// 8-bit single channel image.
pub type GrayImage = Grid<u8>;

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Contract(format!(
                "grid buffer has {} elements, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a grid by evaluating `f(x, y)` for every pixel, rows in parallel.
    pub fn from_fn_par<F>(width: usize, height: usize, f: F) -> Self
    where
        T: Send,
        F: Fn(usize, usize) -> T + Sync,
    {
        let data = (0..width * height)
            .into_par_iter()
            .map(|i| f(i % width, i / width))
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[self.index(x, y)]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        let i = self.index(x, y);
        &mut self.data[i]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        let i = self.index(x, y);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<U, F>(&self, f: F) -> Grid<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.par_iter().map(f).collect(),
        }
    }
}

impl<T: Copy + Default> Grid<T> {
    /// Copies the rectangle `[x0, x0 + w) x [y0, y0 + h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Grid<T> {
        assert!(x0 + w <= self.width && y0 + h <= self.height);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.row(y)[x0..x0 + w]);
        }
        Grid {
            width: w,
            height: h,
            data,
        }
    }

    /// Rotates by 90 degrees counter-clockwise. The rightmost column becomes the top row.
    pub fn rotate_ccw(&self) -> Grid<T> {
        let (w, h) = self.dims();
        // output is h wide, w tall: out(x', y') = in(w - 1 - y', x')
        let mut data = Vec::with_capacity(w * h);
        for yo in 0..w {
            for xo in 0..h {
                data.push(*self.get(w - 1 - yo, xo));
            }
        }
        Grid {
            width: h,
            height: w,
            data,
        }
    }

    /// Inverse of [`Grid::rotate_ccw`].
    pub fn rotate_cw(&self) -> Grid<T> {
        let (w, h) = self.dims();
        // out(x', y') = in(y', h - 1 - x')
        let mut data = Vec::with_capacity(w * h);
        for yo in 0..w {
            for xo in 0..h {
                data.push(*self.get(yo, h - 1 - xo));
            }
        }
        Grid {
            width: h,
            height: w,
            data,
        }
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn and(&self, other: &Mask) -> Mask {
        assert!(self.same_dims(other));
        Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }
}

/// Grayscale conversion with integer BT.601 weights.
pub fn rgb_to_gray(img: &RgbImage) -> GrayImage {
    img.map(|&[r, g, b]| {
        ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbered(w: usize, h: usize) -> Grid<u32> {
        Grid::from_vec(w, h, (0..(w * h) as u32).collect()).unwrap()
    }

    #[test]
    fn rotate_ccw_moves_right_column_to_top_row() {
        let g = numbered(3, 2);
        // 0 1 2
        // 3 4 5
        let r = g.rotate_ccw();
        assert_eq!(r.dims(), (2, 3));
        assert_eq!(r.as_slice(), &[2, 5, 1, 4, 0, 3]);
    }

    #[test]
    fn rotations_are_inverse() {
        let g = numbered(7, 4);
        assert_eq!(g.rotate_ccw().rotate_cw(), g);
        assert_eq!(g.rotate_cw().rotate_ccw(), g);
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Grid::from_vec(2, 2, vec![0u8; 3]).is_err());
    }

    #[test]
    fn crop_copies_rectangle() {
        let g = numbered(4, 3);
        let c = g.crop(1, 1, 2, 2);
        assert_eq!(c.as_slice(), &[5, 6, 9, 10]);
    }

    #[test]
    fn gray_of_white_is_white() {
        let img = Grid::filled(2, 2, [255u8, 255, 255]);
        assert!(rgb_to_gray(&img).as_slice().iter().all(|&v| v == 255));
    }
}
