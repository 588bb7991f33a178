"""Shared test fixtures: the standard-image resolver.

The classic 256x256 grayscale benchmark set (lena, barbara, boats, ...)
is not redistributable, so tests resolve images in three steps:

1. a directory named by the CSTV_TEST_IMAGE_DIR environment variable,
2. the repository's ``data/`` directory,
3. for ``cameraman`` only: the genuine image bundled with scikit-image.

Grid-wide property tests that need eight inputs but not the exact
originals fall back to bundled scikit-image photographs via STAND_INS.
"""

import os

import numpy as np

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
IMAGE_DIR_ENV = "CSTV_TEST_IMAGE_DIR"
IMAGE_EXTENSIONS = (".png", ".pgm", ".npy", ".tif", ".tiff", ".bmp", ".jpg", ".jpeg")

PAPER_IMAGE_NAMES = [
    "barbara", "boats", "cameraman", "foreman", "house", "lena", "monarch", "parrot",
]

# bundled scikit-image photographs of comparable character (edges plus flat
# regions), used only where the property under test does not depend on the
# exact original pixels
STAND_INS = {
    "barbara": "page",
    "boats": "coins",
    "cameraman": "camera",
    "foreman": "coffee",
    "house": "moon",
    "lena": "astronaut",
    "monarch": "cell",
    "parrot": "chelsea",
}


def to_gray(arr) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr @ np.array([0.2126, 0.7152, 0.0722])
    return arr


def _search_dirs():
    dirs = []
    env = os.environ.get(IMAGE_DIR_ENV)
    if env:
        dirs.append(env)
    dirs.append(os.path.join(REPO_ROOT, "data"))
    return dirs


def resolve_standard_image(name: str):
    """Return the true grayscale image for ``name`` or None if unavailable."""
    from cstv.io import load_image

    for directory in _search_dirs():
        for ext in IMAGE_EXTENSIONS:
            path = os.path.join(directory, name + ext)
            if os.path.exists(path):
                return load_image(path)
    if name == "cameraman":
        from skimage import data

        return to_gray(data.camera())
    return None


def stand_in_image(name: str) -> np.ndarray:
    """The true image when available, otherwise its documented stand-in."""
    true = resolve_standard_image(name)
    if true is not None:
        return true
    from skimage import data

    return to_gray(getattr(data, STAND_INS[name])())
