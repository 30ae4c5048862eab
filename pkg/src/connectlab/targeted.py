"""Targeted augmentations: sample a shifted feature z', then transform x to carry it.

Finite instances (categorical shift and transform tables) can also be
composed into an explicit kernel A_ft(x'|x) = sum_z' T(x'|x,z') p(z'|z).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import AugmentationError, NumericalError, ValidationError
from .graph import TARGET, AugmentationGraph
from .heads import FtAugmentation
from .numerics import Rng


class Categorical:
    """Finite distribution over hashable outcomes; sampling order is insertion order."""

    def __init__(self, probs: dict):
        total = sum(probs.values())
        if any(p < 0 for p in probs.values()) or abs(total - 1.0) > 1e-12:
            raise ValidationError(f"not a probability distribution: {probs}")
        self.probs = dict(probs)

    @classmethod
    def point(cls, value) -> "Categorical":
        return cls({value: 1.0})

    def sample(self, rng: Rng):
        keys = list(self.probs)
        if len(keys) == 1:
            return keys[0]
        u = rng.random()
        acc = 0.0
        for key in keys:
            acc += self.probs[key]
            if u < acc:
                return key
        return keys[-1]


class Sampler:
    """Continuous distribution given only by a draw function ``rng -> value``."""

    def __init__(self, draw: Callable[[Rng], Any]):
        self.draw = draw

    def sample(self, rng: Rng):
        return self.draw(rng)


@dataclass(frozen=True)
class TargetedAugmentation:
    """feature_extractor: x -> z; shift_model: z -> dist over z'; transformer: (x, z') -> dist over x'.

    A transformer draw of ``None`` is a rejection; a fresh z' is drawn, up to
    ``max_retries`` attempts in total.
    """

    feature_extractor: Callable
    shift_model: Callable
    transformer: Callable
    max_retries: int = 10

    def sample(self, x, rng: Rng):
        return sample_augmentation(self, x, rng)

    def kernel(self, inputs) -> np.ndarray:
        """Explicit A_ft over a finite input list (categorical shift/transform only)."""
        index = {x: i for i, x in enumerate(inputs)}
        k = np.zeros((len(inputs), len(inputs)))
        for x in inputs:
            shift = self.shift_model(self.feature_extractor(x))
            if not isinstance(shift, Categorical):
                raise ValidationError("kernel() needs a categorical shift model")
            for z_new, pz in shift.probs.items():
                t = self.transformer(x, z_new)
                if not isinstance(t, Categorical):
                    raise ValidationError("kernel() needs a categorical transformer")
                for x_new, px in t.probs.items():
                    k[index[x], index[x_new]] += pz * px
        return k


def sample_augmentation(a: TargetedAugmentation, x, rng: Rng):
    z = a.feature_extractor(x)
    for _ in range(a.max_retries):
        z_new = a.shift_model(z).sample(rng)
        x_new = a.transformer(x, z_new).sample(rng)
        if x_new is not None:
            return x_new
    raise AugmentationError(f"no accepted augmentation after {a.max_retries} attempts")


# -- graph instance ---------------------------------------------------------

GRAPH_AUG_MODES = ("literal", "class_consistent")
_SOURCE_MAP = {
    # 0-based: literal sends 1->4 and 2->3; class-consistent sends 1->3 and 2->4.
    "literal": {0: 3, 1: 2},
    "class_consistent": {0: 2, 1: 3},
}


def graph_targeted_augmentation(g: AugmentationGraph, mode: str = "class_consistent") -> TargetedAugmentation:
    if mode not in GRAPH_AUG_MODES:
        raise ValidationError(f"unknown graph augmentation mode {mode!r}; use one of {GRAPH_AUG_MODES}")
    if g.n != 8 or g.source_nodes != [0, 1]:
        raise ValidationError("graph targeted augmentation is defined on the 8-node construction")
    mapping = _SOURCE_MAP[mode]

    def transformer(x, z_new):
        if g.domain_of[x] == z_new:
            return Categorical.point(x)
        return Categorical.point(mapping[x])

    return TargetedAugmentation(
        feature_extractor=lambda x: g.domain_of[x],
        shift_model=lambda z: Categorical.point(TARGET),
        transformer=transformer,
    )


def graph_targeted_aug(g: AugmentationGraph, mode: str = "class_consistent") -> FtAugmentation:
    ta = graph_targeted_augmentation(g, mode)
    return FtAugmentation(ta.kernel(range(g.n)), name=f"targeted[{mode}]")


# -- stain color jitter -----------------------------------------------------

# Ruifrok & Johnston H&E-DAB optical-density vectors (rows: hematoxylin,
# eosin, DAB), unit-normalized.
_RGB_FROM_HED = np.array(
    [
        [0.65, 0.70, 0.29],
        [0.07, 0.99, 0.11],
        [0.27, 0.57, 0.78],
    ]
)
OD_MATRIX = _RGB_FROM_HED / np.linalg.norm(_RGB_FROM_HED, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class RgbImage:
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValidationError(f"RGB image must have shape (h, w, 3), got {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValidationError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def stain_color_jitter(img: RgbImage, sigma: float, rng: Rng, od_matrix=OD_MATRIX) -> RgbImage:
    """Jitter stain concentrations in HED space with one draw per channel per image."""
    if not 0.0 <= sigma <= 1.0:
        raise ValidationError(f"sigma must be in [0, 1], got {sigma}")
    try:
        inv = np.linalg.inv(od_matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("stain OD matrix is not invertible") from exc
    scale = rng.uniform(1.0 - sigma, 1.0 + sigma, size=3)
    shift = rng.uniform(-sigma, sigma, size=3)

    rgb = img.pixels.reshape(-1, 3).astype(np.float64)
    od = -np.log10((rgb + 1.0) / 256.0)
    conc = od @ inv
    conc = conc * scale + shift
    out = 256.0 * 10.0 ** (-(conc @ od_matrix)) - 1.0
    out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return RgbImage(out.reshape(img.pixels.shape))


def read_ppm(path) -> RgbImage:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte before the raster
    if tokens[0] != b"P6":
        raise ValidationError(f"{path}: not a binary PPM (P6) file")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValidationError(f"{path}: only 8-bit PPM is supported (maxval {maxval})")
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=pos)
    return RgbImage(raster.reshape(height, width, 3).copy())


def write_ppm(img: RgbImage, path) -> None:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels.tobytes())
