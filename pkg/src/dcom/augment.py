"""Permutation-based input construction.

A column's values have no meaningful relative order, so instead of feeding
them in storage order we feed random ordered selections: either joined into a
single separator-delimited text (single-sequence) or as a fixed number r of
parallel texts encoded with shared weights (multi-sequence).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .core import PAD_VALUE, SEP_TEXT, ColumnInstance
from .errors import ConfigError

# Hard cap on multi-sequence slot count, for memory sanity.
MAX_SLOTS = 512

# Largest n for which exhaustive permutation enumeration is allowed.
MAX_ENUMERATE_N = 6


@dataclass(frozen=True)
class SingleSequenceSample:
    text: str
    r: int
    source: int = 0


@dataclass(frozen=True)
class MultiSequenceSample:
    texts: tuple[str, ...]
    pad_mask: tuple[bool, ...]
    mode: str = "pad"
    source: int = 0


def _join(values) -> str:
    return SEP_TEXT.join(values)


def sample_single(instance: ColumnInstance, rng, source=0, r=None) -> SingleSequenceSample:
    """Draw one random single-sequence sample.

    r defaults to a uniform draw from [1, n]; the selection is a uniformly
    random ordered r-subset of the values (no index used twice).
    """
    n = instance.n
    if r is None:
        r = int(rng.integers(1, n + 1))
    if not 1 <= r <= n:
        raise ConfigError(f"r={r} out of range [1, {n}]")
    idx = rng.permutation(n)[:r]
    return SingleSequenceSample(
        text=_join(instance.values[i] for i in idx), r=r, source=source
    )


def enumerate_permutations(instance: ColumnInstance, r: int) -> list[SingleSequenceSample]:
    """All n!/(n-r)! ordered r-selections of the instance's values.

    Exhaustive, so refused for n > 6.
    """
    n = instance.n
    if n > MAX_ENUMERATE_N:
        raise ConfigError(f"enumeration limited to n <= {MAX_ENUMERATE_N}, got n={n}")
    if not 1 <= r <= n:
        raise ConfigError(f"r={r} out of range [1, {n}]")
    samples = [
        SingleSequenceSample(text=_join(instance.values[i] for i in idx), r=r)
        for idx in itertools.permutations(range(n), r)
    ]
    assert len(samples) == math.perm(n, r)
    return samples


def sample_multi(instance: ColumnInstance, r: int, mode="pad", rng=None, source=0) -> MultiSequenceSample:
    """Draw one multi-sequence sample with exactly r slots.

    If the column has at least r values, both modes place r distinct values in
    random order.  With fewer values, pad mode fills the remaining slots with
    the empty marker (mask false); with_replacement mode draws r values
    uniformly with replacement.
    """
    if r < 1:
        raise ConfigError("r must be >= 1")
    if r > MAX_SLOTS:
        raise ConfigError(f"r={r} exceeds the {MAX_SLOTS}-slot cap")
    if mode not in ("pad", "with_replacement"):
        raise ConfigError(f"unknown multi mode {mode!r}")
    n = instance.n
    if n >= r:
        idx = rng.permutation(n)[:r]
        texts = tuple(instance.values[i] for i in idx)
        mask = (True,) * r
    elif mode == "pad":
        idx = rng.permutation(n)
        texts = tuple(instance.values[i] for i in idx) + (PAD_VALUE,) * (r - n)
        mask = (True,) * n + (False,) * (r - n)
    else:
        idx = rng.integers(0, n, size=r)
        texts = tuple(instance.values[int(i)] for i in idx)
        mask = (True,) * r
    return MultiSequenceSample(texts=texts, pad_mask=mask, mode=mode, source=source)


def inference_inputs(instance: ColumnInstance, model_kind: str, k: int, rng,
                     r_multi: int = 45, multi_mode: str = "pad", source=0):
    """Build the k inference-time samples for one column.

    k=1 single: one full random permutation (r = n).  k=1 multi: one sample at
    the trained r (values truncated by random permutation prefix when n > r).
    k>1: k independent samples, with r re-drawn from [1, n] per sample for the
    single kind.
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    if model_kind == "single":
        if k == 1:
            return [sample_single(instance, rng, source=source, r=instance.n)]
        return [sample_single(instance, rng, source=source) for _ in range(k)]
    if model_kind == "multi":
        return [
            sample_multi(instance, r_multi, mode=multi_mode, rng=rng, source=source)
            for _ in range(k)
        ]
    raise ConfigError(f"unknown model kind {model_kind!r}")


def split_sample_text(text: str) -> list[str]:
    """Recover the value segments of a single-sequence sample's text."""
    return text.split(SEP_TEXT)
