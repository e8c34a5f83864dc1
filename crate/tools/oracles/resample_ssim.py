"""Reference values for the resampling and SSIM tests.

Bicubic resizing comes from the MATLAB-compatible `imresize` port shipped in
basicsr (basicsr/utils/matlab_functions.py, pass its path as argv[1]); SSIM
from scikit-image with the Gaussian-window settings of the original SSIM code.
Prints Rust constants for crates/core/tests/oracle_values.rs.
"""
import importlib.util
import sys

import numpy as np
from skimage.metrics import structural_similarity

spec = importlib.util.spec_from_file_location("mf", sys.argv[1])
mf = importlib.util.module_from_spec(spec)
spec.loader.exec_module(mf)


def pattern(h, w, a, b):
    return np.array([[((y * a + x * b) % 256) / 255 for x in range(w)] for y in range(h)], dtype=np.float64)


def emit(name, arr):
    vals = ", ".join(repr(float(v)) for v in np.asarray(arr, dtype=np.float64).ravel())
    print(f"pub const {name}: &[f64] = &[{vals}];")


src = pattern(12, 16, 37, 91)
down4 = mf.imresize(src, 1 / 4)
emit("DOWN4", down4)
emit("UP4", mf.imresize(down4, 4))
src3 = pattern(9, 15, 53, 29)
emit("DOWN3", mf.imresize(src3, 1 / 3))
emit("UP3", mf.imresize(mf.imresize(src3, 1 / 3), 3))
emit("UP2_5X7", mf.imresize(pattern(5, 7, 11, 67), 2))

a = pattern(24, 20, 37, 91)
b = pattern(24, 20, 41, 83)
s = structural_similarity(a, b, data_range=1.0, gaussian_weights=True, sigma=1.5,
                          use_sample_covariance=False, K1=0.01, K2=0.03)
print(f"pub const SSIM_AB: f64 = {float(s)!r};")

# make_pair on an RGB image: 8-bit luma, bicubic /4, 8-bit rounding, nearest x4
rgb = np.stack([pattern(13, 14, 37 + 6 * c, 91 - 10 * c) for c in range(3)], axis=2)
rgb = rgb[0:12, 1:13]  # centred crop to a multiple of 4
y = (16 + 65.481 * rgb[..., 0] + 128.553 * rgb[..., 1] + 24.966 * rgb[..., 2]) / 255
hr_y = np.round(y * 255) / 255
lr_y = np.round(np.clip(mf.imresize(hr_y, 1 / 4).astype(np.float64), 0, 1) * 255) / 255
emit("PAIR_HR_Y", hr_y)
emit("PAIR_LR_Y", lr_y)
