"""Structured sensing operators and the finite-difference operator.

All operators are matrix-free: forward and adjoint are implemented with
fast transforms or element-wise mask arithmetic, never by materializing a
dense matrix.  Each sensing operator additionally exposes the diagonal of
its Gram matrix (``A A^T``), which all solvers in :mod:`cstv.solvers`
exploit for closed-form data-consistency updates.

Two operator families are provided:

* :class:`PermutedHadamard` -- random coordinate permutation, orthonormal
  Walsh-Hadamard transform, random row subset (DC row always kept).  Its
  Gram matrix is exactly the identity.
* :class:`CodedAperture` -- snapshot imaging of a multi-frame signal: every
  frame is modulated by a shifted binary mask and the frames are summed
  into a single 2D measurement.  Its Gram matrix is diagonal with integer
  entries counting the active mask frames per pixel.  Shifting along the
  first spatial axis models temporal (video) snapshots; shifting along the
  second models dispersed spectral bands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import as_float_array, check_measurement, check_power_of_two, check_signal

__all__ = [
    "SingularGramError",
    "fwht",
    "SensingOperator",
    "PermutedHadamard",
    "make_permuted_hadamard",
    "MaskStack",
    "CodedAperture",
    "make_coded_aperture",
    "cacti_shifts",
    "cassi_shifts",
    "random_mask_stack",
    "FiniteDifference",
]

# Named PRNG substreams, all derived from one user-facing seed.
STREAM_PERMUTATION = 0
STREAM_ROW_SELECTION = 1
STREAM_MASK = 2


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream)]))


class SingularGramError(ValueError):
    """Raised when an update needs ``1/(eta + r_m)`` but the denominator is 0."""


def fwht(v) -> np.ndarray:
    """Orthonormal fast Walsh-Hadamard transform of a power-of-two vector.

    Uses the natural (Sylvester) ordering and scales by ``n**-0.5`` so the
    transform is symmetric, orthonormal and involutive: applying it twice
    returns the input.

    Parameters
    ----------
    v : array_like
        Real vector whose length is a power of two.

    Returns
    -------
    ndarray
        Transformed vector of the same length.
    """
    a = np.array(v, dtype=np.float64, copy=True).reshape(-1)
    n = check_power_of_two(a.size, "len(v)")
    h = 1
    while h < n:
        blocks = a.reshape(-1, 2, h)
        top = blocks[:, 0, :].copy()
        blocks[:, 0, :] = top + blocks[:, 1, :]
        blocks[:, 1, :] = top - blocks[:, 1, :]
        h *= 2
    a *= 1.0 / np.sqrt(n)
    return a


class SensingOperator:
    """Base class for matrix-free sensing operators.

    Attributes
    ----------
    n_rows : int
        Number of measurements M.
    n_cols : int
        Signal dimension N (product of ``domain_shape``).
    domain_shape : tuple of int
        Grid shape of the signal the operator acts on.
    measurement_shape : tuple of int
        Natural grid shape of the measurement (1D for Hadamard sensing,
        2D for coded apertures).
    gram_diag : ndarray
        The M diagonal entries of ``A A^T``.
    """

    kind = "abstract"

    n_rows: int
    n_cols: int
    domain_shape: tuple[int, ...]
    measurement_shape: tuple[int, ...]
    gram_diag: np.ndarray

    def forward(self, x) -> np.ndarray:
        """Apply the operator, returning the flat measurement vector."""
        raise NotImplementedError

    def adjoint(self, y) -> np.ndarray:
        """Apply the transpose, returning a grid-shaped signal."""
        raise NotImplementedError

    @property
    def compression_ratio(self) -> float:
        """Measurement rows divided by signal columns, M/N."""
        return self.n_rows / self.n_cols


class PermutedHadamard(SensingOperator):
    """Sensing by a randomly permuted orthonormal Hadamard matrix.

    ``forward`` permutes the input coordinates, applies :func:`fwht` and
    keeps ``m`` randomly selected transform rows.  The DC row is always
    among them.  Rows of an orthonormal matrix have unit norm, so
    ``gram_diag`` is identically one and the Gram matrix is the identity.
    """

    kind = "hadamard"

    def __init__(self, n: int, m: int, seed: int, domain_shape: tuple[int, ...] | None = None):
        n = check_power_of_two(n, "n")
        m = int(m)
        if not 0 < m <= n:
            raise ValueError(f"m must satisfy 0 < m <= n, got m={m}, n={n}")
        if domain_shape is None:
            domain_shape = (n,)
        if int(np.prod(domain_shape)) != n:
            raise ValueError(f"domain_shape {domain_shape} does not have {n} elements")
        self.n_rows = m
        self.n_cols = n
        self.seed = int(seed)
        self.domain_shape = tuple(int(s) for s in domain_shape)
        self.measurement_shape = (m,)
        self.permutation = _rng(seed, STREAM_PERMUTATION).permutation(n)
        if m == n:
            rows = np.arange(n)
        else:
            extra = _rng(seed, STREAM_ROW_SELECTION).choice(n - 1, size=m - 1, replace=False) + 1
            rows = np.concatenate([[0], np.sort(extra)])
        self.rows = rows
        self.gram_diag = np.ones(m)

    def forward(self, x) -> np.ndarray:
        x = check_signal(x, self.domain_shape)
        return fwht(x.reshape(-1)[self.permutation])[self.rows]

    def adjoint(self, y) -> np.ndarray:
        y = check_measurement(y, self.n_rows)
        u = np.zeros(self.n_cols)
        u[self.rows] = y
        w = fwht(u)
        out = np.empty(self.n_cols)
        out[self.permutation] = w
        return out.reshape(self.domain_shape)


def make_permuted_hadamard(n: int, m: int, seed: int,
                           domain_shape: tuple[int, ...] | None = None) -> PermutedHadamard:
    """Build a :class:`PermutedHadamard` operator (see the class docstring)."""
    return PermutedHadamard(n, m, seed, domain_shape)


def _shift2d(mask: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Translate a 2D array by (dy, dx), filling vacated cells with zeros."""
    rows, cols = mask.shape
    out = np.zeros_like(mask)
    if abs(dy) >= rows or abs(dx) >= cols:
        return out
    src_r = slice(max(0, -dy), rows - max(0, dy))
    src_c = slice(max(0, -dx), cols - max(0, dx))
    dst_r = slice(max(0, dy), rows - max(0, -dy))
    dst_c = slice(max(0, dx), cols - max(0, -dx))
    out[dst_r, dst_c] = mask[src_r, src_c]
    return out


@dataclass(eq=False)
class MaskStack:
    """A binary base mask plus per-frame integer translations.

    Frame ``f`` of the stack is the base mask shifted by ``shifts[f]``
    (rows first, then columns) with zeros filled in at the borders.
    """

    base_mask: np.ndarray
    shifts: list[tuple[int, int]]
    _frames: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        base = np.asarray(self.base_mask)
        if base.ndim != 2 or base.size == 0:
            raise ValueError("base_mask must be a non-empty 2D array")
        uniq = np.unique(base)
        if not np.all(np.isin(uniq, (0, 1))):
            raise ValueError("base_mask entries must be 0 or 1")
        if len(self.shifts) < 1:
            raise ValueError("need at least one frame shift")
        self.base_mask = base.astype(np.float64)
        self.shifts = [(int(dy), int(dx)) for dy, dx in self.shifts]
        self._frames = np.stack(
            [_shift2d(self.base_mask, dy, dx) for dy, dx in self.shifts], axis=2
        )

    @property
    def n_frames(self) -> int:
        return len(self.shifts)

    @property
    def frame_shape(self) -> tuple[int, int]:
        return self.base_mask.shape

    @property
    def frames(self) -> np.ndarray:
        """All frame masks as one (rows, cols, n_frames) array."""
        return self._frames


def cacti_shifts(n_frames: int) -> list[tuple[int, int]]:
    """One-pixel vertical mask translation per video frame."""
    return [(f, 0) for f in range(n_frames)]


def cassi_shifts(n_frames: int) -> list[tuple[int, int]]:
    """One-pixel horizontal mask translation per spectral band."""
    return [(0, f) for f in range(n_frames)]


def random_mask_stack(frame_shape: tuple[int, int], n_frames: int, seed: int,
                      density: float = 0.5, scheme: str = "cacti",
                      ensure_coverage: bool = True) -> MaskStack:
    """Draw a random binary base mask and stack it with scheme-specific shifts.

    Parameters
    ----------
    frame_shape : (rows, cols)
        Spatial size of every frame.
    n_frames : int
        Number of temporal frames or spectral bands.
    seed : int
        Drawn from the mask PRNG substream; same seed, same mask.
    density : float
        Probability of a mask cell being open.
    scheme : {"cacti", "cassi"}
        Vertical (video) or horizontal (spectral) shift pattern.
    ensure_coverage : bool
        Force every pixel to be observed by at least one frame.  Zero-filled
        shifting leaves border pixels covered by a single frame, so without
        this the Gram diagonal may contain zeros and projection-based
        solvers would reject the operator.
    """
    if scheme == "cacti":
        shifts = cacti_shifts(n_frames)
    elif scheme == "cassi":
        shifts = cassi_shifts(n_frames)
    else:
        raise ValueError(f"unknown mask scheme {scheme!r}")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must be in (0, 1]")
    rows, cols = frame_shape
    base = (_rng(seed, STREAM_MASK).random((rows, cols)) < density).astype(np.float64)
    stack = MaskStack(base, shifts)
    if ensure_coverage:
        coverage = stack.frames.sum(axis=2)
        holes = np.argwhere(coverage == 0)
        if holes.size:
            # Opening the base cell that frame 0 (zero shift) maps onto the
            # hole always works because frame 0 covers the full grid.
            base[holes[:, 0], holes[:, 1]] = 1.0
            stack = MaskStack(base, shifts)
    return stack


class CodedAperture(SensingOperator):
    """Snapshot sensing of a (rows, cols, frames) signal through a mask stack.

    The forward model multiplies each frame element-wise with its mask and
    sums over frames; ``M = rows * cols`` and ``N = rows * cols * frames``.
    The adjoint replicates the 2D measurement into every frame, modulated
    by that frame's mask.  Because the masks are binary, ``gram_diag``
    counts, per pixel, how many frames observe it.
    """

    kind = "coded_aperture"

    def __init__(self, mask: MaskStack):
        rows, cols = mask.frame_shape
        self.mask = mask
        self.n_rows = rows * cols
        self.n_cols = rows * cols * mask.n_frames
        self.domain_shape = (rows, cols, mask.n_frames)
        self.measurement_shape = (rows, cols)
        self.gram_diag = mask.frames.sum(axis=2).reshape(-1)

    def forward(self, x) -> np.ndarray:
        x = check_signal(x, self.domain_shape)
        return (self.mask.frames * x).sum(axis=2).reshape(-1)

    def adjoint(self, y) -> np.ndarray:
        y = check_measurement(y, self.n_rows)
        return self.mask.frames * y.reshape(self.measurement_shape)[:, :, None]


def make_coded_aperture(mask: MaskStack) -> CodedAperture:
    """Build a :class:`CodedAperture` operator from a mask stack."""
    return CodedAperture(mask)


class FiniteDifference:
    """First-order forward differences along every axis of a 1D/2D/3D grid.

    The difference at the trailing index of an axis is defined as zero
    (replicate boundary), so constants are annihilated exactly.  The output
    of :meth:`forward` stacks one full-size difference field per axis into
    a single flat vector of length ``ndim * N``.

    ``alpha_bound`` is an upper bound on the largest eigenvalue of
    ``D D^T``: each axis contributes a 1D second-difference operator whose
    spectrum is bounded by 4, so ``4 * ndim`` always dominates.
    """

    def __init__(self, grid_shape: tuple[int, ...]):
        shape = tuple(int(s) for s in grid_shape)
        if not 1 <= len(shape) <= 3 or any(s < 1 for s in shape):
            raise ValueError(f"grid_shape must be a 1D/2D/3D shape, got {grid_shape}")
        self.grid_shape = shape
        self.n_axes = len(shape)
        self.n_points = int(np.prod(shape))
        self.alpha_bound = 4.0 * self.n_axes

    def forward(self, x) -> np.ndarray:
        x = check_signal(x, self.grid_shape)
        parts = []
        for ax in range(self.n_axes):
            last = np.take(x, [-1], axis=ax)
            parts.append(np.diff(x, axis=ax, append=last).reshape(-1))
        return np.concatenate(parts)

    def adjoint(self, z) -> np.ndarray:
        z = as_float_array(z, "z").reshape(-1)
        if z.size != self.n_axes * self.n_points:
            raise ValueError(
                f"z has {z.size} entries, expected {self.n_axes * self.n_points}"
            )
        out = np.zeros(self.grid_shape)
        for ax, block in enumerate(np.split(z, self.n_axes)):
            zb = block.reshape(self.grid_shape)
            head = [slice(None)] * self.n_axes
            tail = [slice(None)] * self.n_axes
            head[ax] = slice(None, -1)
            tail[ax] = slice(1, None)
            out[tuple(head)] -= zb[tuple(head)]
            out[tuple(tail)] += zb[tuple(head)]
        return out

    def tv_norm(self, x) -> float:
        """Anisotropic total variation: the l1 norm of the stacked differences."""
        return float(np.abs(self.forward(x)).sum())
