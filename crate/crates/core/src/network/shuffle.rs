//! Sub-pixel rearrangement between `r*r` low-resolution channels and one
//! `r`-times larger plane.
//!
//! `out[b, c, y, x] = in[b, c*r*r + (y % r)*r + (x % r), y / r, x / r]`

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

pub fn pixel_shuffle(x: &Tensor4, r: usize) -> Result<Tensor4> {
    if r == 0 || !x.c().is_multiple_of(r * r) {
        return Err(Error::Arity(format!(
            "pixel shuffle by {r} needs channels divisible by {}, got {}",
            r * r,
            x.c()
        )));
    }
    let (n, c_out, h, w) = (x.n(), x.c() / (r * r), x.h() * r, x.w() * r);
    let mut out = Tensor4::zeros(n, c_out, h, w);
    for b in 0..n {
        for c in 0..c_out {
            let dst = out.plane_mut(b, c);
            for y in 0..h {
                for xx in 0..w {
                    let src_c = c * r * r + (y % r) * r + (xx % r);
                    dst[y * w + xx] = x.get(b, src_c, y / r, xx / r);
                }
            }
        }
    }
    Ok(out)
}

/// Exact inverse of [`pixel_shuffle`]; also its backward pass.
pub fn pixel_unshuffle(x: &Tensor4, r: usize) -> Result<Tensor4> {
    if r == 0 || !x.h().is_multiple_of(r) || !x.w().is_multiple_of(r) {
        return Err(Error::Dimension(format!(
            "pixel unshuffle by {r} needs spatial size divisible by {r}, got {}x{}",
            x.h(),
            x.w()
        )));
    }
    let (n, c_in, h, w) = (x.n(), x.c(), x.h(), x.w());
    let mut out = Tensor4::zeros(n, c_in * r * r, h / r, w / r);
    for b in 0..n {
        for c in 0..c_in {
            let src = x.plane(b, c);
            for y in 0..h {
                for xx in 0..w {
                    let dst_c = c * r * r + (y % r) * r + (xx % r);
                    out.set(b, dst_c, y / r, xx / r, src[y * w + xx]);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_ordering() {
        let x = Tensor4::from_vec(1, 4, 1, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = pixel_shuffle(&x, 2).unwrap();
        assert_eq!(y.shape(), [1, 1, 2, 2]);
        assert_eq!(y.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn scale_one_is_identity() {
        let x = Tensor4::from_fn(2, 3, 4, 5, |b, c, y, x| (b + c * 7 + y * 11 + x * 13) as f64);
        assert_eq!(pixel_shuffle(&x, 1).unwrap(), x);
        assert_eq!(pixel_unshuffle(&x, 1).unwrap(), x);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            pixel_shuffle(&Tensor4::zeros(1, 8, 2, 2), 3),
            Err(Error::Arity(_))
        ));
        assert!(matches!(
            pixel_unshuffle(&Tensor4::zeros(1, 1, 6, 5), 3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn backward_is_unshuffle() {
        // shuffle is linear, so d<shuffle(x), g>/dx = unshuffle(g)
        let x = Tensor4::from_fn(1, 9, 2, 3, |_, c, y, x| ((c * 5 + y * 3 + x) as f64).sin());
        let g = Tensor4::from_fn(1, 1, 6, 9, |_, _, y, x| ((y * 9 + x) as f64).cos());
        let grad = pixel_unshuffle(&g, 3).unwrap();
        let eps = 1e-5;
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp.data_mut()[i] += eps;
            xm.data_mut()[i] -= eps;
            let lp = pixel_shuffle(&xp, 3).unwrap().dot(&g).unwrap();
            let lm = pixel_shuffle(&xm, 3).unwrap().dot(&g).unwrap();
            let num = (lp - lm) / (2.0 * eps);
            assert!((num - grad.data()[i]).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_permutation(r in 1usize..5, c in 1usize..3, h in 1usize..5, w in 1usize..5, seed in any::<u64>()) {
            let x = Tensor4::from_fn(2, c * r * r, h, w, |b, ch, y, xx| {
                let v = seed ^ ((b * 7919 + ch * 104729 + y * 1299709 + xx * 15485863) as u64);
                (v % 10007) as f64 / 10007.0
            });
            let s = pixel_shuffle(&x, r).unwrap();
            prop_assert_eq!(pixel_unshuffle(&s, r).unwrap(), x.clone());
            let mut a = x.data().to_vec();
            let mut b = s.data().to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
        }
    }
}
