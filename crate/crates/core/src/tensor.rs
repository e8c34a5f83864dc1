//! Dense rank-4 tensors in batch, channel, row, column order.
//!
//! The last index varies fastest: element `(b, c, y, x)` lives at
//! `((b * C + c) * H + y) * W + x`. Checkpoints, oracles and the pixel
//! shuffle all rely on this layout.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor4({}x{}x{}x{})", self.n, self.c, self.h, self.w)
    }
}

fn check_dims(n: usize, c: usize, h: usize, w: usize) -> Result<()> {
    if n == 0 || c == 0 || h == 0 || w == 0 {
        return Err(Error::Dimension(format!(
            "tensor dimensions must be positive, got {n}x{c}x{h}x{w}"
        )));
    }
    Ok(())
}

impl Tensor4 {
    /// Panics if any dimension is zero.
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self::full(n, c, h, w, 0.0)
    }

    pub fn full(n: usize, c: usize, h: usize, w: usize, value: f64) -> Self {
        check_dims(n, c, h, w).expect("invalid tensor shape");
        Tensor4 {
            n,
            c,
            h,
            w,
            data: vec![value; n * c * h * w],
        }
    }

    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(n, c, h, w)?;
        if data.len() != n * c * h * w {
            return Err(Error::Dimension(format!(
                "data length {} does not match shape {n}x{c}x{h}x{w}",
                data.len()
            )));
        }
        Ok(Tensor4 { n, c, h, w, data })
    }

    pub fn from_fn(
        n: usize,
        c: usize,
        h: usize,
        w: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Self::zeros(n, c, h, w);
        let mut i = 0;
        for b in 0..n {
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        t.data[i] = f(b, ch, y, x);
                        i += 1;
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn c(&self) -> usize {
        self.c
    }
    #[inline]
    pub fn h(&self) -> usize {
        self.h
    }
    #[inline]
    pub fn w(&self) -> usize {
        self.w
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.n, self.c, self.h, self.w]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, b: usize, c: usize, y: usize, x: usize) -> usize {
        debug_assert!(b < self.n && c < self.c && y < self.h && x < self.w);
        ((b * self.c + c) * self.h + y) * self.w + x
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.offset(b, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, c: usize, y: usize, x: usize, v: f64) {
        let i = self.offset(b, c, y, x);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Contiguous `h * w` plane of one channel of one batch item.
    pub fn plane(&self, b: usize, c: usize) -> &[f64] {
        let len = self.h * self.w;
        let start = (b * self.c + c) * len;
        &self.data[start..start + len]
    }

    pub fn plane_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let len = self.h * self.w;
        let start = (b * self.c + c) * len;
        &mut self.data[start..start + len]
    }

    /// All channels of batch item `b`.
    pub fn item(&self, b: usize) -> &[f64] {
        let len = self.c * self.h * self.w;
        &self.data[b * len..(b + 1) * len]
    }

    pub fn same_shape(&self, other: &Tensor4) -> bool {
        self.shape() == other.shape()
    }

    pub fn ensure_shape(&self, other: &Tensor4, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what}: shape {:?} does not match {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor4 {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    fn with_data(&self, data: Vec<f64>) -> Tensor4 {
        debug_assert_eq!(data.len(), self.data.len());
        Tensor4 {
            n: self.n,
            c: self.c,
            h: self.h,
            w: self.w,
            data,
        }
    }

    pub fn dot(&self, other: &Tensor4) -> Result<f64> {
        self.ensure_shape(other, "dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &Tensor4) -> Result<Tensor4> {
        elementwise(ElementwiseOp::Add, self, Operand::Tensor(other))
    }

    pub fn sub(&self, other: &Tensor4) -> Result<Tensor4> {
        elementwise(ElementwiseOp::Sub, self, Operand::Tensor(other))
    }

    pub fn scale(&self, s: f64) -> Tensor4 {
        self.map(|v| v * s)
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Tensor4) -> Result<()> {
        self.ensure_shape(other, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Concatenate tensors along the batch axis.
    pub fn stack(items: &[Tensor4]) -> Result<Tensor4> {
        let first = items
            .first()
            .ok_or_else(|| Error::Dimension("stack of zero tensors".into()))?;
        let mut data = Vec::with_capacity(first.len() * items.len());
        let mut n = 0;
        for t in items {
            if t.c != first.c || t.h != first.h || t.w != first.w {
                return Err(Error::Dimension(format!(
                    "stack: shape {:?} does not match {:?}",
                    t.shape(),
                    first.shape()
                )));
            }
            n += t.n;
            data.extend_from_slice(&t.data);
        }
        Tensor4::from_vec(n, first.c, first.h, first.w, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Sub,
    Mul,
    Max,
    Min,
}

#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Tensor(&'a Tensor4),
    Scalar(f64),
}

impl ElementwiseOp {
    #[inline]
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            ElementwiseOp::Add => a + b,
            ElementwiseOp::Sub => a - b,
            ElementwiseOp::Mul => a * b,
            // first operand wins ties
            ElementwiseOp::Max => {
                if a >= b {
                    a
                } else {
                    b
                }
            }
            ElementwiseOp::Min => {
                if a <= b {
                    a
                } else {
                    b
                }
            }
        }
    }
}

pub fn elementwise(op: ElementwiseOp, a: &Tensor4, b: Operand<'_>) -> Result<Tensor4> {
    match b {
        Operand::Scalar(s) => Ok(a.map(|v| op.apply(v, s))),
        Operand::Tensor(t) => {
            a.ensure_shape(t, "elementwise")?;
            let data = a
                .data
                .iter()
                .zip(&t.data)
                .map(|(&x, &y)| op.apply(x, y))
                .collect();
            Ok(a.with_data(data))
        }
    }
}

/// Split `x` into `parts` contiguous channel blocks.
pub fn split_channels(x: &Tensor4, parts: usize) -> Result<Vec<Tensor4>> {
    if parts == 0 || !x.c.is_multiple_of(parts) {
        return Err(Error::Arity(format!(
            "cannot split {} channels into {parts} equal parts",
            x.c
        )));
    }
    let cp = x.c / parts;
    let plane = x.h * x.w;
    Ok((0..parts)
        .map(|p| {
            let mut data = Vec::with_capacity(x.n * cp * plane);
            for b in 0..x.n {
                let start = (b * x.c + p * cp) * plane;
                data.extend_from_slice(&x.data[start..start + cp * plane]);
            }
            Tensor4 {
                n: x.n,
                c: cp,
                h: x.h,
                w: x.w,
                data,
            }
        })
        .collect())
}

/// Concatenate along channels, in order. Inverse of [`split_channels`].
pub fn concat_channels(parts: &[Tensor4]) -> Result<Tensor4> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Dimension("concat of zero tensors".into()))?;
    for p in parts {
        if p.n != first.n || p.h != first.h || p.w != first.w {
            return Err(Error::Dimension(format!(
                "concat: shape {:?} incompatible with {:?}",
                p.shape(),
                first.shape()
            )));
        }
    }
    let c: usize = parts.iter().map(|p| p.c).sum();
    let mut data = Vec::with_capacity(first.n * c * first.h * first.w);
    for b in 0..first.n {
        for p in parts {
            data.extend_from_slice(p.item(b));
        }
    }
    Tensor4::from_vec(first.n, c, first.h, first.w, data)
}
