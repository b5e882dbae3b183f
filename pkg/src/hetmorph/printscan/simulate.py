"""Print-scan channel simulator.

Stages run in a fixed order, print effects first:

    resample -> colour shift -> halftone -> ink noise -> paper texture
    -> misalignment -> glare -> border jitter -> 8-bit quantization

All values are float64 in [0, 1] between stages. Every stochastic quantity is
drawn from a Philox counter stream keyed by ``(seed, stage)``; the n-th value
of a stage depends only on its position, never on other stages or tiling.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from ..core import ImageBuffer, InputError, quantize

MIN_INPUT = 32
PRESET_VERSION = 1
PRESETS = ("default", "icc-mismatch")

_LUMA = np.array([0.299, 0.587, 0.114])


def _saturation(s):
    return s * np.eye(3) + (1.0 - s) * np.outer(np.ones(3), _LUMA)


DEFAULT_COLOR_MATRIX = np.diag([1.03, 1.0, 0.98])
# +/-15% red/blue gains followed by a 1.25x saturation boost
ICC_MISMATCH_MATRIX = _saturation(1.25) @ np.diag([1.15, 1.0, 0.85])

STAGE_HALFTONE = 1
STAGE_INK = 2
STAGE_TEXTURE = 3
STAGE_GEOMETRY = 4
STAGE_JITTER = 5


@dataclass(frozen=True)
class PrintScanParams:
    seed: int = 0
    target_size: Tuple[int, int] = (600, 600)  # (width, height)
    target_ppi: int = 300
    ink_noise_sigma: float = 2.0 / 255
    halftone_period: int = 4
    halftone_amplitude: float = 1.5 / 255
    paper_texture_scale: int = 64
    paper_texture_amplitude: float = 1.0 / 255
    color_matrix: Tuple[Tuple[float, ...], ...] = tuple(map(tuple, DEFAULT_COLOR_MATRIX))
    color_offset: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    icc_mismatch_mode: bool = False
    glare_center: Optional[Tuple[float, float]] = None
    glare_strength: float = 0.0
    glare_radius: float = 60.0
    border_jitter: int = 2
    misalign_shift: float = 0.5
    misalign_rotation_deg: float = 0.3

    def __post_init__(self):
        w, h = self.target_size
        if w < 1 or h < 1:
            raise InputError("target_size must be positive")
        if self.target_ppi <= 0:
            raise InputError("target_ppi must be positive")
        for name in (
            "ink_noise_sigma",
            "halftone_amplitude",
            "paper_texture_amplitude",
            "glare_strength",
            "misalign_shift",
            "misalign_rotation_deg",
        ):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be >= 0")
        if self.halftone_period < 1 or self.paper_texture_scale < 1:
            raise InputError("periods must be >= 1 pixel")
        if self.border_jitter < 0 or self.border_jitter >= min(w, h):
            raise InputError("border_jitter out of range")
        if np.shape(self.color_matrix) != (3, 3) or np.shape(self.color_offset) != (3,):
            raise InputError("color_matrix must be 3x3 and color_offset length 3")
        object.__setattr__(self, "target_size", (int(w), int(h)))
        object.__setattr__(self, "color_matrix", tuple(tuple(float(v) for v in row) for row in self.color_matrix))
        object.__setattr__(self, "color_offset", tuple(float(v) for v in self.color_offset))
        if self.glare_center is not None:
            object.__setattr__(self, "glare_center", tuple(float(v) for v in self.glare_center))

    @classmethod
    def null(cls, seed: int = 0, **overrides) -> "PrintScanParams":
        """A channel with every artifact disabled: resampling only."""
        base = dict(
            seed=seed,
            ink_noise_sigma=0.0,
            halftone_amplitude=0.0,
            paper_texture_amplitude=0.0,
            color_matrix=tuple(map(tuple, np.eye(3))),
            border_jitter=0,
            misalign_shift=0.0,
            misalign_rotation_deg=0.0,
        )
        base.update(overrides)
        return cls(**base)

    def effective_color(self):
        if self.icc_mismatch_mode:
            return ICC_MISMATCH_MATRIX, np.zeros(3)
        return np.array(self.color_matrix), np.array(self.color_offset)

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["target_size"] = list(self.target_size)
        doc["color_matrix"] = [list(r) for r in self.color_matrix]
        doc["color_offset"] = list(self.color_offset)
        doc["glare_center"] = list(self.glare_center) if self.glare_center else None
        return {"preset_version": PRESET_VERSION, **doc}

    @classmethod
    def from_json(cls, doc: dict) -> "PrintScanParams":
        doc = dict(doc)
        version = doc.pop("preset_version", PRESET_VERSION)
        if version != PRESET_VERSION:
            raise InputError(f"unsupported preset_version {version}")
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise InputError(f"unknown print-scan parameter(s): {', '.join(sorted(unknown))}")
        for key in ("target_size", "color_offset", "glare_center"):
            if doc.get(key) is not None:
                doc[key] = tuple(doc[key])
        if "color_matrix" in doc:
            doc["color_matrix"] = tuple(tuple(r) for r in doc["color_matrix"])
        return cls(**doc)


def load_preset(name_or_path: str, seed: Optional[int] = None) -> PrintScanParams:
    """Load a bundled preset by name, or a JSON preset file by path."""
    if name_or_path in PRESETS:
        text = resources.files(__package__).joinpath("presets", f"{name_or_path}.json").read_text("utf-8")
    else:
        try:
            text = Path(name_or_path).read_text("utf-8")
        except FileNotFoundError:
            raise InputError(f"unknown preset {name_or_path!r}") from None
    try:
        params = PrintScanParams.from_json(json.loads(text))
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid preset JSON: {exc.msg}", exc.lineno, name_or_path) from None
    return replace(params, seed=seed) if seed is not None else params


# -- deterministic random streams -------------------------------------------


def _words(seed: int, stage: int, count: int) -> np.ndarray:
    key = (int(seed) % 2**64) | (stage << 64)
    return np.random.Philox(key=key).random_raw(count)


def _uniform(seed, stage, count):
    """Uniforms in [0, 1): the n-th value is a function of (seed, stage, n)."""
    return (_words(seed, stage, count) >> np.uint64(11)) * (1.0 / 2**53)


def _normal(seed, stage, count):
    """Box-Muller normals; value n consumes uniform words 2n and 2n + 1."""
    u = _uniform(seed, stage, 2 * count)
    r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    return r * np.cos(2.0 * np.pi * u[1::2])


# -- stages ------------------------------------------------------------------


def _resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic linear-filter matrix; widens the kernel when shrinking."""
    scale = n_in / n_out
    support = max(scale, 1.0)
    centers = (np.arange(n_out) + 0.5) * scale
    src = np.arange(n_in) + 0.5
    w = np.maximum(0.0, 1.0 - np.abs(src[None, :] - centers[:, None]) / support)
    return w / w.sum(axis=1, keepdims=True)


def _resample_float(pixels: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    w_out, h_out = size
    ry = _resample_matrix(pixels.shape[0], h_out)
    rx = _resample_matrix(pixels.shape[1], w_out)
    x = pixels.astype(np.float64) / 255.0
    return np.einsum("ij,jkc,lk->ilc", ry, x, rx, optimize=True)


def resample(image: ImageBuffer, size: Tuple[int, int] = (600, 600), ppi: Optional[int] = 300) -> ImageBuffer:
    """Resample to ``size`` (width, height) with a linear filter, then quantize."""
    _check_input(image)
    return ImageBuffer(quantize(_resample_float(image.pixels, size)), ppi=ppi)


def _check_input(image: ImageBuffer):
    if image.width < MIN_INPUT or image.height < MIN_INPUT:
        raise InputError(f"input {image.width}x{image.height} is smaller than {MIN_INPUT}x{MIN_INPUT}")


def _halftone(shape, params):
    h, w = shape
    if params.halftone_amplitude == 0:
        return None
    phase = _uniform(params.seed, STAGE_HALFTONE, 6).reshape(3, 2) * params.halftone_period
    k = 2.0 * np.pi / params.halftone_period
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    out = np.empty((h, w, 3))
    for c in range(3):
        out[:, :, c] = np.outer(np.cos(k * (ys + phase[c, 1])), np.cos(k * (xs + phase[c, 0])))
    return params.halftone_amplitude * out


def _texture(shape, params):
    h, w = shape
    if params.paper_texture_amplitude == 0:
        return None
    step = params.paper_texture_scale
    gh, gw = h // step + 2, w // step + 2
    grid = _normal(params.seed, STAGE_TEXTURE, gh * gw).reshape(gh, gw)
    gy = np.arange(h) / step
    gx = np.arange(w) / step
    iy, ix = np.floor(gy).astype(int), np.floor(gx).astype(int)
    fy, fx = (gy - iy)[:, None], (gx - ix)[None, :]
    field_ = (
        (1 - fy) * (1 - fx) * grid[iy][:, ix]
        + (1 - fy) * fx * grid[iy][:, ix + 1]
        + fy * (1 - fx) * grid[iy + 1][:, ix]
        + fy * fx * grid[iy + 1][:, ix + 1]
    )
    return params.paper_texture_amplitude * field_


@dataclass(frozen=True)
class Geometry:
    dx: float
    dy: float
    rotation_deg: float
    crop_offset: Tuple[int, int] = field(default=(0, 0))  # (x, y) pixels


def realized_geometry(params: PrintScanParams) -> Geometry:
    """The misalignment and border-jitter draws ``simulate_print_scan`` will use."""
    u = _uniform(params.seed, STAGE_GEOMETRY, 3)
    dx = (2 * u[0] - 1) * params.misalign_shift
    dy = (2 * u[1] - 1) * params.misalign_shift
    rot = (2 * u[2] - 1) * params.misalign_rotation_deg
    span = np.uint64(2 * params.border_jitter + 1)
    j = (_words(params.seed, STAGE_JITTER, 2) % span).astype(np.int64) - params.border_jitter
    return Geometry(float(dx), float(dy), float(rot), (int(j[0]), int(j[1])))


def _misalign(x, geom: Geometry):
    if geom.dx == 0 and geom.dy == 0 and geom.rotation_deg == 0:
        return x
    h, w = x.shape[:2]
    th = math.radians(geom.rotation_deg)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    center = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    # output (row, col) -> input coordinates
    offset = center - rot @ center - np.array([geom.dy, geom.dx])
    out = np.empty_like(x)
    for c in range(3):
        out[:, :, c] = ndimage.affine_transform(x[:, :, c], rot, offset=offset, order=1, mode="nearest")
    return out


def _glare(x, params):
    if params.glare_center is None or params.glare_strength == 0:
        return x
    h, w = x.shape[:2]
    cx, cy = params.glare_center
    yy, xx = np.mgrid[0:h, 0:w]
    g = params.glare_strength * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * params.glare_radius**2))
    # reflected light lifts dark regions most
    return x + g[:, :, None] * (1.0 - x)


def _border(x, geom: Geometry):
    """Crop misregistration: the scan crop window lands ``offset`` pixels off.

    Pixels outside the scanned area replicate the nearest edge.
    """
    ox, oy = geom.crop_offset
    if ox == 0 and oy == 0:
        return x
    h, w = x.shape[:2]
    rows = np.clip(np.arange(h) + oy, 0, h - 1)
    cols = np.clip(np.arange(w) + ox, 0, w - 1)
    return x[rows][:, cols]


def simulate_print_scan(image: ImageBuffer, params: Optional[PrintScanParams] = None) -> ImageBuffer:
    params = params or PrintScanParams()
    _check_input(image)
    w, h = params.target_size
    x = _resample_float(image.pixels, params.target_size)

    matrix, offset = params.effective_color()
    if not (np.array_equal(matrix, np.eye(3)) and not offset.any()):
        x = x @ matrix.T + offset

    halftone = _halftone((h, w), params)
    if halftone is not None:
        x = x + halftone
    if params.ink_noise_sigma > 0:
        x = x + params.ink_noise_sigma * _normal(params.seed, STAGE_INK, h * w * 3).reshape(h, w, 3)
    texture = _texture((h, w), params)
    if texture is not None:
        x = x + texture[:, :, None]

    geom = realized_geometry(params)
    x = _misalign(x, geom)
    x = _glare(np.clip(x, 0.0, 1.0), params)
    x = _border(x, geom)
    return ImageBuffer(quantize(x), ppi=params.target_ppi)


def difference_image(digital: ImageBuffer, printscanned: ImageBuffer, gain: float = 1.0) -> ImageBuffer:
    """``clamp(gain * |printscanned - digital|)`` per channel."""
    if gain < 1:
        raise InputError(f"gain must be >= 1, got {gain}")
    if digital.pixels.shape != printscanned.pixels.shape:
        raise InputError(
            f"dimension mismatch: {digital.width}x{digital.height} vs {printscanned.width}x{printscanned.height}"
        )
    diff = np.abs(printscanned.pixels.astype(np.int16) - digital.pixels.astype(np.int16))
    out = np.clip(np.rint(gain * diff), 0, 255).astype(np.uint8)
    return ImageBuffer(out, ppi=printscanned.ppi)


def artifact_energy(digital: ImageBuffer, printscanned: ImageBuffer) -> float:
    """Root-mean-square per-channel difference, in 8-bit units."""
    if digital.pixels.shape != printscanned.pixels.shape:
        raise InputError("dimension mismatch")
    d = printscanned.pixels.astype(np.float64) - digital.pixels.astype(np.float64)
    return float(np.sqrt(np.mean(d * d)))
