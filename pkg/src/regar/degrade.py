"""Forward degradation models: hard clipping, uniform quantization, sample dropping.

These produce the observations that the reconstruction strategies try to
invert, together with the reliability masks describing which samples are
trustworthy.  All signals are 1-D float arrays; masks are boolean arrays of
the same length.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ReliabilityMasks",
    "ClipObservation",
    "QuantObservation",
    "hard_clip",
    "derive_clip_masks",
    "uniform_quantize",
    "drop_samples",
]


def _as_signal(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite samples")
    return x


def _as_bool_mask(m, n: int) -> np.ndarray:
    """Accept a boolean mask of length n or an array of indices."""
    m = np.asarray(m)
    if m.dtype == bool:
        if m.shape != (n,):
            raise ValueError(f"boolean mask must have length {n}, got {m.shape}")
        return m.copy()
    mask = np.zeros(n, dtype=bool)
    if m.size:
        idx = m.astype(np.intp)
        if idx.min() < 0 or idx.max() >= n:
            raise ValueError("mask index out of range")
        mask[idx] = True
    return mask


@dataclass(frozen=True)
class ReliabilityMasks:
    """Partition of sample positions into reliable / clipped-high / clipped-low / missing.

    For clipping observations ``missing`` is empty; for inpainting problems
    ``high`` and ``low`` are empty and the unreliable samples are ``missing``.
    The four masks are pairwise disjoint and cover every position.
    """

    reliable: np.ndarray
    high: np.ndarray
    low: np.ndarray
    missing: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        n = len(self.reliable)
        rel = _as_bool_mask(self.reliable, n)
        high = _as_bool_mask(self.high, n)
        low = _as_bool_mask(self.low, n)
        if self.missing is None:
            miss = np.zeros(n, dtype=bool)
        else:
            miss = _as_bool_mask(self.missing, n)
        total = rel.astype(int) + high.astype(int) + low.astype(int) + miss.astype(int)
        if np.any(total != 1):
            raise ValueError("masks must partition the sample positions")
        object.__setattr__(self, "reliable", rel)
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "missing", miss)

    def __len__(self) -> int:
        return len(self.reliable)

    @classmethod
    def for_inpainting(cls, reliable, n: int | None = None) -> "ReliabilityMasks":
        """Masks for an inpainting problem: everything not reliable is missing."""
        if n is None:
            reliable = np.asarray(reliable)
            if reliable.dtype != bool:
                raise ValueError("pass n when giving reliable as indices")
            n = len(reliable)
        rel = _as_bool_mask(reliable, n)
        zeros = np.zeros(n, dtype=bool)
        return cls(reliable=rel, high=zeros, low=zeros.copy(), missing=~rel)


@dataclass(frozen=True)
class ClipObservation:
    """Hard-clipped signal with its threshold and derived masks."""

    y: np.ndarray
    theta: float
    masks: ReliabilityMasks

    def __post_init__(self):
        y = _as_signal(self.y)
        if not self.theta > 0:
            raise ValueError("clipping threshold must be positive")
        if np.any(np.abs(y) > self.theta * (1 + 4 * np.finfo(float).eps)):
            raise ValueError("clip observation exceeds the threshold")
        if len(self.masks) != len(y):
            raise ValueError("mask length does not match signal length")
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class QuantObservation:
    """Uniformly quantized signal; every sample is an odd multiple of delta/2."""

    y: np.ndarray
    word_length: int
    delta: float

    def __post_init__(self):
        y = _as_signal(self.y)
        if self.word_length < 1:
            raise ValueError("word length must be at least 1 bit")
        expected = 2.0 ** (1 - self.word_length)
        if self.delta != expected:
            raise ValueError(f"delta must equal 2**(1-word_length) = {expected}")
        levels = y / (self.delta / 2.0)
        rounded = np.round(levels)
        if np.any(np.abs(levels - rounded) > 1e-9) or np.any(rounded.astype(np.int64) % 2 == 0):
            raise ValueError("quantized samples must be odd multiples of delta/2")
        object.__setattr__(self, "y", y)


def hard_clip(x, theta: float) -> ClipObservation:
    """Saturate samples with magnitude >= theta at +-theta.

    Samples strictly inside (-theta, theta) pass through unchanged; the rest
    are replaced by theta times their sign.
    """
    x = _as_signal(x)
    if not theta > 0:
        raise ValueError("clipping threshold must be positive")
    clipped = np.abs(x) >= theta
    # theta > 0 keeps x == 0 out of the clipped branch, so sign(0) = 0 is inert
    y = np.where(clipped, theta * np.sign(x), x)
    return ClipObservation(y=y, theta=theta, masks=derive_clip_masks(y, theta))


def derive_clip_masks(y, theta: float, tol: float = 0.0) -> ReliabilityMasks:
    """Classify samples of a clipped signal as reliable / clipped high / clipped low.

    A sample is reliable iff |y_n| < theta - tol; samples at or beyond the
    (tolerance-reduced) threshold are classified by sign.  ``tol`` defaults to
    exact comparison and exists for observations that went through a lossy
    store such as a 32-bit float file.  Samples exceeding theta by more than
    max(tol, 1 ulp) are rejected.
    """
    y = _as_signal(y)
    if not theta > 0:
        raise ValueError("clipping threshold must be positive")
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    overshoot = max(tol, np.spacing(theta))
    if np.any(np.abs(y) > theta + overshoot):
        raise ValueError("sample magnitude exceeds the clipping threshold")
    level = theta - tol
    high = y >= level
    low = y <= -level
    reliable = ~(high | low)
    return ReliabilityMasks(reliable=reliable, high=high, low=low)


def uniform_quantize(x, word_length: int) -> QuantObservation:
    """Mid-riser uniform quantization with step 2**(1-word_length).

    y_n = sgn+(x_n) * delta * (floor(|x_n|/delta) + 1/2) where sgn+ maps
    nonnegative values to +1.  Values beyond full scale are quantized by the
    same rule (the top level can exceed 1).
    """
    x = _as_signal(x)
    if word_length < 1:
        raise ValueError("word length must be at least 1 bit")
    delta = 2.0 ** (1 - word_length)
    sign = np.where(x >= 0, 1.0, -1.0)
    y = sign * delta * (np.floor(np.abs(x) / delta) + 0.5)
    return QuantObservation(y=y, word_length=word_length, delta=delta)


def drop_samples(x, reliable) -> tuple[np.ndarray, ReliabilityMasks]:
    """Keep the reliable samples of x and zero out the rest.

    Returns the observed signal (missing entries stored as 0, never NaN) and
    inpainting masks flagging the dropped positions.
    """
    x = _as_signal(x)
    masks = ReliabilityMasks.for_inpainting(reliable, n=len(x))
    y = np.where(masks.reliable, x, 0.0)
    return y, masks
