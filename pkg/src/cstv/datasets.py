"""Built-in synthetic inputs for the benchmark harness.

The video and spectral datasets used in the original snapshot-imaging
experiments are not redistributable, so the harness ships two synthetic
stand-ins with the same tensor layout: a piecewise-constant moving
rectangle video and a smooth multi-blob spectral cube.  Both are valued
in [0, 1] with peak 1.
"""

from __future__ import annotations

import numpy as np

__all__ = ["moving_rectangle_video", "spectral_blob_cube", "BUILTIN_NAMES", "load_builtin"]


def moving_rectangle_video(frame_shape=(64, 64), n_frames: int = 8) -> np.ndarray:
    """A bright rectangle drifting diagonally over a dim background.

    Returns a (rows, cols, n_frames) float array.  The scene is piecewise
    constant in every frame and moves one pixel per frame, which makes it
    a natural fit for TV-regularized video recovery.
    """
    rows, cols = frame_shape
    h, w = max(rows // 4, 2), max(cols // 4, 2)
    video = np.full((rows, cols, n_frames), 0.1)
    for f in range(n_frames):
        top = (rows // 8 + f) % max(rows - h, 1)
        left = (cols // 8 + f) % max(cols - w, 1)
        video[top:top + h, left:left + w, f] = 0.9
        # second, static block so some structure stays put
        video[3 * rows // 5: 3 * rows // 5 + h // 2,
              3 * cols // 5: 3 * cols // 5 + w // 2, f] = 0.6
    return video


def spectral_blob_cube(frame_shape=(64, 64), n_bands: int = 8) -> np.ndarray:
    """Gaussian blobs whose amplitudes vary smoothly across bands.

    Returns a (rows, cols, n_bands) float array in [0, 1].  Each band is a
    weighted sum of three fixed spatial blobs; the weights trace smooth,
    band-dependent spectra.
    """
    rows, cols = frame_shape
    yy, xx = np.mgrid[0:rows, 0:cols]

    def blob(cy, cx, s):
        return np.exp(-(((yy - cy) ** 2) + ((xx - cx) ** 2)) / (2.0 * s * s))

    blobs = [
        blob(0.3 * rows, 0.3 * cols, 0.12 * rows),
        blob(0.65 * rows, 0.55 * cols, 0.18 * rows),
        blob(0.45 * rows, 0.8 * cols, 0.09 * rows),
    ]
    b = np.linspace(0.0, 1.0, n_bands)
    spectra = [
        0.2 + 0.8 * b,
        1.0 - 0.7 * b,
        0.5 + 0.5 * np.sin(np.pi * b),
    ]
    cube = np.zeros((rows, cols, n_bands))
    for spatial, spectrum in zip(blobs, spectra):
        cube += spatial[:, :, None] * spectrum[None, None, :]
    cube /= cube.max()
    return cube


BUILTIN_NAMES = {
    "builtin:moving-rectangle": ("cacti", moving_rectangle_video),
    "builtin:spectral-blobs": ("cassi", spectral_blob_cube),
}


def load_builtin(name: str, frame_shape=(64, 64), n_frames: int = 8):
    """Return ``(cube, mask_scheme)`` for a built-in dataset name."""
    if name not in BUILTIN_NAMES:
        raise KeyError(f"unknown builtin dataset {name!r}; known: {sorted(BUILTIN_NAMES)}")
    scheme, factory = BUILTIN_NAMES[name]
    return factory(frame_shape, n_frames), scheme
