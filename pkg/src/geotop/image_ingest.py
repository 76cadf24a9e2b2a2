"""Image loading, preprocessing, synthetic images and excursion sets.

All images are held as float64 arrays in row-major ``(height, width)`` order.
A :class:`MultiChannelImage` always carries the four channels
``gray, red, green, blue`` in that order.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)

CHANNELS = ("gray", "red", "green", "blue")
LUMA_WEIGHTS = (0.299, 0.587, 0.114)
IMAGE_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm")


class ImageReadError(ValueError):
    """Raised when an image file cannot be decoded."""


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class ScalarField:
    """A finite 2-D grid of pixel values."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2 or values.size == 0:
            raise ValueError(f"scalar field must be a non-empty 2-D array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("scalar field contains non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_flat(cls, values: Sequence[float], width: int, height: int) -> "ScalarField":
        flat = np.asarray(values, dtype=np.float64)
        if flat.size != width * height:
            raise ValueError(f"expected {width * height} values, got {flat.size}")
        return cls(flat.reshape(height, width))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class BinaryImage:
    """Excursion set ``{x : X_x >= threshold}`` of a scalar field."""

    mask: np.ndarray
    threshold: float = float("nan")

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


@dataclass(frozen=True)
class MultiChannelImage:
    """Gray, red, green and blue channels of one image, shape ``(4, h, w)``."""

    data: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 3 or data.shape[0] != len(CHANNELS) or data.shape[1] == 0 or data.shape[2] == 0:
            raise ValueError(f"expected shape (4, h, w), got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_rgb(cls, rgb: np.ndarray, source_id: str = "") -> "MultiChannelImage":
        rgb = np.asarray(rgb, dtype=np.float64)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) RGB array, got {rgb.shape}")
        r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
        gray = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
        return cls(np.stack([gray, r, g, b]), source_id)

    @classmethod
    def from_gray(cls, gray: np.ndarray, source_id: str = "") -> "MultiChannelImage":
        gray = np.asarray(gray, dtype=np.float64)
        if gray.ndim != 2:
            raise ValueError(f"expected 2-D gray array, got {gray.shape}")
        return cls(np.stack([gray] * 4), source_id)

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> tuple[ScalarField, ...]:
        return tuple(ScalarField(c) for c in self.data)

    def channel(self, name: str) -> ScalarField:
        return ScalarField(self.data[CHANNELS.index(name)])


# --------------------------------------------------------------------------
# netpbm / PNG input-output

def _read_netpbm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    magic = raw[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise ImageReadError(f"{path}: not a PGM/PPM file (magic {magic!r})")
    n_channels = 3 if magic in (b"P3", b"P6") else 1

    # header: magic, width, height, maxval separated by whitespace, '#' comments allowed
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageReadError(f"{path}: truncated header")
        tokens.append(raw[start:pos])
    width, height, maxval = (int(t) for t in tokens)
    if not 0 < maxval < 65536:
        raise ImageReadError(f"{path}: unsupported bit depth (maxval {maxval})")
    count = width * height * n_channels

    if magic in (b"P2", b"P3"):
        values = np.array(raw[pos:].split()[:count], dtype=np.int64)
    else:
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        values = np.frombuffer(raw, dtype=dtype, count=count, offset=pos) if len(raw) - pos >= count * dtype.itemsize else None
        if values is None:
            raise ImageReadError(f"{path}: truncated pixel data")
    if values.size != count:
        raise ImageReadError(f"{path}: truncated pixel data")
    shape = (height, width, 3) if n_channels == 3 else (height, width)
    return values.astype(np.float64).reshape(shape)


def _png_bit_depth(path: Path) -> tuple[int, int]:
    with open(path, "rb") as fh:
        head = fh.read(26)
    if len(head) < 26 or head[:8] != b"\x89PNG\r\n\x1a\n":
        raise ImageReadError(f"{path}: not a PNG file")
    return head[24], head[25]


def _read_png(path: Path) -> np.ndarray:
    bit_depth, color_type = _png_bit_depth(path)
    if bit_depth > 16:
        raise ImageReadError(f"{path}: unsupported bit depth {bit_depth}")
    if bit_depth == 16 and color_type in (2, 6):
        # Pillow truncates 16-bit colour PNGs to 8 bits
        try:
            import cv2
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise ImageReadError(f"{path}: 16-bit colour PNG needs opencv-python") from exc
        arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if arr is None:
            raise ImageReadError(f"{path}: unreadable PNG")
        return arr[..., 2::-1].astype(np.float64)
    try:
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I", "L"):
                return np.asarray(im, dtype=np.float64)
            if im.mode == "LA":
                return np.asarray(im.getchannel(0), dtype=np.float64)
            return np.asarray(im.convert("RGB"), dtype=np.float64)
    except OSError as exc:
        raise ImageReadError(f"{path}: {exc}") from exc


def load_image(path: str | os.PathLike) -> MultiChannelImage:
    """Read a PNG or PGM/PPM file into a four-channel image.

    RGB inputs get a Rec.601 luminance channel; grayscale inputs are copied
    into all four slots.
    """
    path = Path(path)
    if not path.is_file():
        raise ImageReadError(f"{path}: no such file")
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic in (b"P2", b"P3", b"P5", b"P6"):
        arr = _read_netpbm(path)
    else:
        arr = _read_png(path)
    source_id = path.stem
    if arr.ndim == 2:
        return MultiChannelImage.from_gray(arr, source_id)
    return MultiChannelImage.from_rgb(arr, source_id)


def save_image(img: MultiChannelImage | np.ndarray, path: str | os.PathLike, *, color: bool | None = None) -> None:
    """Write integral pixel values as binary PGM (gray) or PPM (RGB).

    ``color`` defaults to PPM when the colour channels differ from gray.
    Values must be integers in ``[0, 65535]``; 16-bit output is used when any
    value exceeds 255.
    """
    path = Path(path)
    if isinstance(img, MultiChannelImage):
        if color is None:
            color = not (np.array_equal(img.data[1], img.data[0])
                         and np.array_equal(img.data[2], img.data[0])
                         and np.array_equal(img.data[3], img.data[0]))
        arr = np.moveaxis(img.data[1:], 0, -1) if color else img.data[0]
    else:
        arr = np.asarray(img, dtype=np.float64)
        color = arr.ndim == 3
    if np.any(arr != np.round(arr)) or arr.min() < 0 or arr.max() > 65535:
        raise ValueError("only integral values in [0, 65535] can be written")
    maxval = 255 if arr.max() <= 255 else 65535
    dtype = np.dtype("u1") if maxval == 255 else np.dtype(">u2")
    height, width = arr.shape[:2]
    header = f"{'P6' if color else 'P5'}\n{width} {height}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype(dtype).tobytes())


# --------------------------------------------------------------------------
# preprocessing

def _border_and_center_means(gray: np.ndarray) -> tuple[float, float]:
    h, w = gray.shape
    bh, bw = max(1, int(round(0.1 * h))), max(1, int(round(0.1 * w)))
    border = np.ones_like(gray, dtype=bool)
    border[bh:h - bh, bw:w - bw] = False
    if not border.any() or border.all():
        border = np.zeros_like(gray, dtype=bool)
        border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    ch, cw = h // 4, w // 4
    center = gray[ch:h - ch, cw:w - cw]
    if center.size == 0:
        center = gray
    return float(gray[border].mean()), float(center.mean())


def preprocess(img: MultiChannelImage) -> MultiChannelImage:
    """Enforce bright-object polarity, then standardise every channel.

    If the outer 10% frame of the gray channel is brighter on average than
    the central 50% region, all channels are negated. Each channel is then
    shifted to mean 0 and scaled to unit standard deviation; constant
    channels become all zero.
    """
    data = np.array(img.data, dtype=np.float64)
    border_mean, center_mean = _border_and_center_means(data[0])
    # ties (up to rounding) keep the original polarity so the map is idempotent
    scale = max(1.0, float(np.abs(data[0]).max()))
    if border_mean - center_mean > 1e-9 * scale:
        data = -data
    out = np.empty_like(data)
    for k, channel in enumerate(data):
        centered = channel - channel.mean()
        sd = centered.std()
        # near-constant channels: rounding noise must not be blown up to unit scale
        if sd <= 1e-12 * max(1.0, float(np.abs(channel).max())):
            out[k] = 0.0
        else:
            out[k] = centered / sd
    return MultiChannelImage(out, img.source_id)


def excursion_set(field: ScalarField | np.ndarray, t: float) -> BinaryImage:
    """Pixels whose value is at least ``t``."""
    values = field.values if isinstance(field, ScalarField) else np.asarray(field, dtype=np.float64)
    return BinaryImage(values >= t, float(t))


# --------------------------------------------------------------------------
# synthetic images

def gaussian_square_field(n: int = 200, square_side: int = 10, seed: int = 0, *,
                          sigma: float | None = None, noise: float = 0.0) -> np.ndarray:
    """Centered Gaussian density bump plus a bright square in the south-east corner.

    The square's pixels equal the maximum of the sampled Gaussian. ``noise``
    is the standard deviation of optional additive Gaussian noise drawn from
    ``seed``.
    """
    if square_side < 1 or square_side >= n / 2:
        raise ValueError(f"square_side must satisfy 1 <= square_side < n/2, got {square_side} for n={n}")
    if sigma is None:
        sigma = n / 8.0
    c = n // 2
    rows, cols = np.mgrid[0:n, 0:n]
    r2 = (rows - c) ** 2 + (cols - c) ** 2
    values = np.exp(-r2 / (2.0 * sigma ** 2)) / (2.0 * np.pi * sigma ** 2)
    values[n - square_side:, n - square_side:] = values.max()
    if noise > 0:
        values = values + np.random.default_rng(seed).normal(0.0, noise, size=values.shape)
    return values


def synth_gaussian_square(n: int = 200, square_side: int = 10, seed: int = 0, *,
                          sigma: float | None = None, noise: float = 0.0) -> MultiChannelImage:
    """The Gaussian-plus-square toy image as a (gray-replicated) multichannel image."""
    values = gaussian_square_field(n, square_side, seed, sigma=sigma, noise=noise)
    return MultiChannelImage.from_gray(values, source_id=f"gaussian_square_n{n}_s{square_side}")


def square_region(n: int, square_side: int) -> tuple[slice, slice]:
    return slice(n - square_side, n), slice(n - square_side, n)


def _blob(rows, cols, cy, cx, ry, rx, angle, roughness, rng):
    y, x = rows - cy, cols - cx
    ca, sa = np.cos(angle), np.sin(angle)
    u, v = (ca * x + sa * y) / rx, (-sa * x + ca * y) / ry
    rad = np.hypot(u, v)
    if roughness > 0:
        theta = np.arctan2(v, u)
        harmonics = rng.integers(3, 8, size=3)
        phases = rng.uniform(0, 2 * np.pi, size=3)
        wobble = sum(np.cos(k * theta + p) for k, p in zip(harmonics, phases)) / 3.0
        rad = rad / (1.0 + roughness * wobble)
    # smooth plateau with soft edge
    return 1.0 / (1.0 + np.exp((rad - 1.0) * 8.0))


def _synth_mole(label: int, size: int, rng: np.random.Generator) -> np.ndarray:
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    c = (size - 1) / 2.0
    if label == 0:
        r = size * rng.uniform(0.18, 0.24)
        darkness = _blob(rows, cols, c + rng.normal(0, 1.5), c + rng.normal(0, 1.5),
                         r * rng.uniform(0.85, 1.0), r, rng.uniform(0, np.pi), 0.0, rng)
    else:
        n_lobes = int(rng.integers(3, 6))
        darkness = np.zeros_like(rows)
        base = rng.uniform(0, 2 * np.pi)
        for k in range(n_lobes):
            angle = base + 2 * np.pi * k / n_lobes + rng.normal(0, 0.2)
            dist = size * rng.uniform(0.16, 0.22)
            r = size * rng.uniform(0.07, 0.10)
            lobe = _blob(rows, cols, c + dist * np.sin(angle), c + dist * np.cos(angle),
                         r * rng.uniform(0.7, 1.0), r, rng.uniform(0, np.pi), 0.25, rng)
            darkness = np.maximum(darkness, lobe * rng.uniform(0.75, 1.0))
    skin = np.array([205.0, 160.0, 140.0]) + rng.normal(0, 6, size=3)
    mole = np.array([95.0, 60.0, 45.0]) + rng.normal(0, 6, size=3)
    rgb = skin[None, None, :] * (1 - darkness[..., None]) + mole[None, None, :] * darkness[..., None]
    rgb = rgb + rng.normal(0, 3.0, size=rgb.shape)
    return np.clip(np.round(rgb), 0, 255)


def synth_dataset(n_images: int, class_count: int = 2, seed: int = 0, *, size: int = 64
                  ) -> tuple[list[MultiChannelImage], np.ndarray]:
    """Deterministic two-class set of 8-bit RGB mole-like images.

    Class 0 holds a single smooth dark blob, class 1 a dark blob made of
    several irregular lobes, both on a brighter skin-coloured background.
    Labels alternate so the classes are balanced (class 0 gets the extra
    image when ``n_images`` is odd).
    """
    if n_images < 2:
        raise ValueError("n_images must be at least 2")
    if class_count != 2:
        raise ValueError("only two classes are supported")
    labels = np.arange(n_images) % 2
    images = []
    for i, label in enumerate(labels):
        rng = np.random.default_rng([seed, i])
        rgb = _synth_mole(int(label), size, rng)
        images.append(MultiChannelImage.from_rgb(rgb, source_id=f"synth_{seed}_{i:05d}"))
    return images, labels


def write_dataset(root: str | os.PathLike, images: Sequence[MultiChannelImage], labels: Sequence[int],
                  class_names: Sequence[str] = ("benign", "malignant")) -> list[Path]:
    """Write images into ``<root>/<class_name>/<source_id>.ppm``."""
    root = Path(root)
    paths = []
    for img, label in zip(images, labels):
        folder = root / class_names[int(label)]
        folder.mkdir(parents=True, exist_ok=True)
        path = folder / f"{img.source_id}.ppm"
        save_image(img, path, color=True)
        paths.append(path)
    return paths


@dataclass
class DatasetEntry:
    path: Path
    label: int
    class_name: str
    source_id: str = field(init=False)

    def __post_init__(self):
        self.source_id = f"{self.class_name}/{self.path.stem}"


def list_dataset(root: str | os.PathLike) -> tuple[list[DatasetEntry], list[str]]:
    """Enumerate ``<root>/<class_name>/<image>``; classes sorted to labels 0, 1, ..."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    class_names = sorted(p.name for p in root.iterdir() if p.is_dir())
    entries = []
    for label, name in enumerate(class_names):
        for path in sorted((root / name).iterdir()):
            if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES:
                entries.append(DatasetEntry(path, label, name))
    return entries, class_names


def iter_dataset(root: str | os.PathLike) -> Iterator[tuple[DatasetEntry, MultiChannelImage | None]]:
    """Yield ``(entry, image)``; unreadable files yield ``None`` and log a warning."""
    entries, _ = list_dataset(root)
    for entry in entries:
        try:
            img = load_image(entry.path)
        except (ImageReadError, OSError, ValueError) as exc:
            logger.warning("skipping %s: %s", entry.source_id, exc)
            yield entry, None
            continue
        yield entry, MultiChannelImage(img.data, entry.source_id)
