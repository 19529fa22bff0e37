"""Image abstraction chain: blur, grayscale, Scharr gradients, radial fade,
Fourier-based rotation estimation, and rotation normalization.

Images are numpy arrays: grayscale (N, N) or RGB (N, N, 3), float values in
[0, 1]. Angles are degrees, measured counterclockwise from east in the
displayed orientation (row 0 at the top). Orientation is only defined modulo
180 degrees because the magnitude spectrum is centrally symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROFILE_BINS = 256
BIN_WIDTH_DEG = 360.0 / PROFILE_BINS

GAUSS3 = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]]) / 16.0
SCHARR_X = np.array([[3.0, 0.0, -3.0], [10.0, 0.0, -10.0], [3.0, 0.0, -3.0]])

LUMA_WEIGHTS = (0.299, 0.587, 0.114)  # ITU-R BT.601


@dataclass
class RotationEstimate:
    """Spectral-profile argmax for one image.

    ``angle`` is the refined profile argmax in [0, 180). The spectrum of a
    line is concentrated perpendicular to it, so the image-space dominant
    line sits a quarter turn away; ``line_angle`` exposes that view.
    """

    angle: float
    profile: np.ndarray
    discrete_argmax_bin: int
    degenerate: bool = False

    @property
    def line_angle(self) -> float:
        return (self.angle + 90.0) % 180.0


@dataclass
class PreprocessResult:
    image: np.ndarray
    rotation: RotationEstimate


def _require_square(img: np.ndarray, op: str):
    if img.ndim < 2 or img.shape[0] != img.shape[1]:
        raise ValueError(f"{op} requires a square image, got shape {img.shape}")


def _correlate3(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """3x3 correlation with replicate padding."""
    padded = np.pad(img, 1, mode="edge")
    n = img.shape[0]
    m = img.shape[1]
    out = np.zeros_like(img, dtype=float)
    for di in range(3):
        for dj in range(3):
            w = kernel[di, dj]
            if w != 0.0:
                out += w * padded[di:di + n, dj:dj + m]
    return out


def gaussian_blur3(img: np.ndarray) -> np.ndarray:
    """Normalized 3x3 binomial blur; RGB input is blurred per channel."""
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"image {img.shape} smaller than the 3x3 kernel")
    if img.ndim == 3:
        return np.dstack([_correlate3(img[..., c], GAUSS3) for c in range(img.shape[2])])
    return _correlate3(img, GAUSS3)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luminance, clamped to [0, 1]."""
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    w = LUMA_WEIGHTS
    return np.clip(w[0] * r + w[1] * g + w[2] * b, 0.0, 1.0)


def scharr_magnitude(img: np.ndarray) -> np.ndarray:
    """Normalized L1 Scharr gradient magnitude, saturated at 1.

    The /32 scale makes a unit step edge respond at 0.5 and keeps any [0, 1]
    input inside [0, 1] before saturation bites.
    """
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"image {img.shape} smaller than the 3x3 kernel")
    gx = _correlate3(img, SCHARR_X)
    gy = _correlate3(img, SCHARR_X.T)
    return np.minimum(1.0, (np.abs(gx) + np.abs(gy)) / 32.0)


def _center_distances(n: int) -> np.ndarray:
    c = (n - 1) / 2.0
    yy, xx = np.mgrid[0:n, 0:n]
    return np.hypot(xx - c, yy - c)


def radial_fade(img: np.ndarray, keep_r: float = 52.0, fade_r: float = 128.0) -> np.ndarray:
    """Blend pixels toward white along a linear ramp between the two radii.

    Pixels within keep_r of the image center are preserved; at fade_r and
    beyond they are exactly white (1.0).
    """
    if keep_r >= fade_r:
        raise ValueError(f"keep_r ({keep_r}) must be smaller than fade_r ({fade_r})")
    _require_square(img, "radial_fade")
    d = _center_distances(img.shape[0])
    w = np.clip((d - keep_r) / (fade_r - keep_r), 0.0, 1.0)
    return (1.0 - w) * img + w


# --------------------------------------------------------------------------
# discrete Fourier transform

def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _fft_last_axis(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 FFT along the last axis (length must be a power of 2)."""
    n = x.shape[-1]
    a = np.asarray(x, dtype=complex)[..., _bit_reverse_indices(n)]
    m = 2
    while m <= n:
        half = m // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / m)
        v = a.reshape(*a.shape[:-1], n // m, m)
        even = v[..., :half]
        odd = v[..., half:] * tw
        a = np.concatenate([even + odd, even - odd], axis=-1).reshape(*x.shape)
        m *= 2
    return a


def fft2(img: np.ndarray) -> np.ndarray:
    """2D FFT of a square power-of-two image via the radix-2 kernel."""
    _require_square(img, "fft2")
    n = img.shape[0]
    if n & (n - 1) or n < 1:
        raise ValueError(f"fft2 requires a power-of-two side, got {n}")
    rows = _fft_last_axis(img)
    return _fft_last_axis(rows.T).T


def dft2_direct(img: np.ndarray) -> np.ndarray:
    """Direct evaluation of the 2D DFT double sum; test oracle for fft2."""
    _require_square(img, "dft2_direct")
    n = img.shape[0]
    k = np.arange(n)
    e = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return e @ img @ e


def dft_magnitude(img: np.ndarray, method: str = "auto") -> np.ndarray:
    """log(1 + |F|) of the 2D spectrum, quadrant-swapped so DC is centered."""
    _require_square(img, "dft_magnitude")
    n = img.shape[0]
    if method == "auto":
        method = "fft" if n and not (n & (n - 1)) else "direct"
    if method == "fft":
        spec = fft2(img)
    elif method == "direct":
        spec = dft2_direct(img)
    else:
        raise ValueError(f"unknown method {method!r}")
    mag = np.log1p(np.abs(spec))
    return np.roll(mag, (n // 2, n // 2), axis=(0, 1))


# --------------------------------------------------------------------------
# polar profile and spline refinement

def _bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    n = img.shape[0]
    x0 = np.clip(np.floor(xs).astype(int), 0, n - 2)
    y0 = np.clip(np.floor(ys).astype(int), 0, n - 2)
    fx = xs - x0
    fy = ys - y0
    return (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x0 + 1] * fx * (1 - fy)
        + img[y0 + 1, x0] * (1 - fx) * fy
        + img[y0 + 1, x0 + 1] * fx * fy
    )


def polar_profile(spectrum: np.ndarray, n_bins: int = PROFILE_BINS,
                  oversample: int = 1) -> np.ndarray:
    """Mean spectral intensity along rays from the DC bin, one per angle bin.

    Radii below 2 px are excluded so the DC peak does not flatten the
    profile. ``oversample`` multiplies the radial sample density (used by the
    dense-sampling test oracle).
    """
    _require_square(spectrum, "polar_profile")
    n = spectrum.shape[0]
    c = n // 2
    radii = np.arange(2 * oversample, (n // 2) * oversample, dtype=float) / oversample
    if radii.size == 0:
        raise ValueError(f"spectrum side {n} too small for a polar profile")
    theta = np.arange(n_bins) * (2.0 * np.pi / n_bins)
    xs = c + radii[None, :] * np.cos(theta)[:, None]
    ys = c - radii[None, :] * np.sin(theta)[:, None]
    return _bilinear(spectrum, xs, ys).mean(axis=1)


def _periodic_spline_second_derivs(y: np.ndarray, h: float) -> np.ndarray:
    """Second derivatives of the C2 periodic cubic spline through uniform knots."""
    n = y.size
    rhs = 6.0 * (np.roll(y, -1) - 2.0 * y + np.roll(y, 1)) / (h * h)
    mat = np.zeros((n, n))
    idx = np.arange(n)
    mat[idx, idx] = 4.0
    mat[idx, (idx + 1) % n] = 1.0
    mat[idx, (idx - 1) % n] = 1.0
    return np.linalg.solve(mat, rhs)


def _spline_eval(y, m, h, k, t):
    """Evaluate the spline on interval k at local offset t in [0, h]."""
    n = y.size
    k1 = (k + 1) % n
    return (
        m[k] * (h - t) ** 3 / (6 * h)
        + m[k1] * t ** 3 / (6 * h)
        + (y[k] / h - m[k] * h / 6) * (h - t)
        + (y[k1] / h - m[k1] * h / 6) * t
    )


def spline_argmax(profile: np.ndarray) -> RotationEstimate:
    """Sub-bin argmax of the angle profile via a periodic cubic spline.

    The spline is fitted through all knots; its derivative roots are solved
    analytically inside the two intervals bracketing the discrete argmax.
    The result is reduced modulo 180 degrees.
    """
    y = np.asarray(profile, dtype=float)
    if y.size < 4:
        raise ValueError("profile needs at least 4 bins")
    h = 360.0 / y.size
    if np.ptp(y) < 1e-12:
        return RotationEstimate(
            angle=0.0, profile=y, discrete_argmax_bin=0, degenerate=True
        )
    m = _periodic_spline_second_derivs(y, h)
    a = int(np.argmax(y))
    n = y.size

    best_angle = a * h
    best_val = y[a]
    for k in ((a - 1) % n, a):
        c2 = (m[(k + 1) % n] - m[k]) / (2 * h)
        c1 = m[k]
        c0 = (y[(k + 1) % n] - y[k]) / h - m[k] * h / 2 - (m[(k + 1) % n] - m[k]) * h / 6
        if abs(c2) > 1e-300:
            disc = c1 * c1 - 4 * c2 * c0
            roots = []
            if disc >= 0:
                sq = np.sqrt(disc)
                roots = [(-c1 - sq) / (2 * c2), (-c1 + sq) / (2 * c2)]
        elif abs(c1) > 1e-300:
            roots = [-c0 / c1]
        else:
            roots = []
        for t in roots:
            if 0.0 <= t <= h:
                val = _spline_eval(y, m, h, k, t)
                if val > best_val:
                    best_val = val
                    best_angle = k * h + t
    return RotationEstimate(
        angle=best_angle % 180.0,
        profile=y,
        discrete_argmax_bin=a,
    )


def estimate_rotation(gradient_img: np.ndarray, method: str = "auto") -> RotationEstimate:
    """Dominant line angle of a gradient image, from its Fourier spectrum.

    A straight line concentrates spectral energy perpendicular to itself, so
    the image-space line angle is the profile argmax rotated a quarter turn.
    """
    spectrum = dft_magnitude(gradient_img, method=method)
    return spline_argmax(polar_profile(spectrum))


# --------------------------------------------------------------------------
# rotation

def rotate(img: np.ndarray, angle_deg: float, background: float = 1.0) -> np.ndarray:
    """Rotate image content counterclockwise (as displayed) about the center.

    Bilinear interpolation; samples falling outside the source take the
    background value. Rotating by 0 is an exact identity.
    """
    _require_square(img, "rotate")
    if angle_deg % 360.0 == 0.0:
        return img.copy()
    n = img.shape[0]
    c = (n - 1) / 2.0
    if angle_deg % 90.0 == 0.0:
        # exact trig for quarter turns so lattice points map to lattice points
        quarter = int(angle_deg // 90.0) % 4
        cos_t, sin_t = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][quarter]
    else:
        th = np.radians(angle_deg)
        cos_t, sin_t = np.cos(th), np.sin(th)
    rows, cols = np.mgrid[0:n, 0:n]
    xd = cols - c
    yd = c - rows
    src_x = cos_t * xd + sin_t * yd
    src_y = -sin_t * xd + cos_t * yd
    sc = c + src_x
    sr = c - src_y
    out = _bilinear(img, sc, sr)
    eps = 1e-9
    oob = (sc < -eps) | (sc > n - 1 + eps) | (sr < -eps) | (sr > n - 1 + eps)
    out[oob] = background
    return out


# --------------------------------------------------------------------------
# full chain

def preprocess(img: np.ndarray, keep_r: float = 52.0, fade_r: float = 128.0) -> PreprocessResult:
    """Full abstraction chain for one RGB image.

    Blur, grayscale, and Scharr produce a bright-on-dark gradient image; it
    is inverted so roads read dark on white, faded radially, and rotated so
    the dominant road orientation is axis-aligned. The rotation angle comes
    from the spectrum of the pre-inversion (faded) gradient image.
    """
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"preprocess expects an RGB image, got shape {img.shape}")
    _require_square(img, "preprocess")
    blurred = gaussian_blur3(img)
    gray = to_grayscale(blurred)
    grad = scharr_magnitude(gray)
    vis = radial_fade(1.0 - grad, keep_r, fade_r)
    faded_grad = 1.0 - vis
    est = estimate_rotation(faded_grad)
    out = vis if est.degenerate else rotate(vis, -est.line_angle)
    return PreprocessResult(image=np.clip(out, 0.0, 1.0), rotation=est)
