"""Grayscale image files, synthetic test patterns and run configuration."""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

__all__ = [
    "UnreadableFile",
    "UnsupportedFormat",
    "UnwritablePath",
    "ConfigError",
    "Rectangle",
    "SyntheticSpec",
    "RunConfig",
    "load_image",
    "save_image",
    "read_pixels",
    "write_pixels",
    "synth_pattern",
    "benchmark_spec",
    "psnr",
    "parse_config",
    "serialize_config",
    "load_config",
]


class UnreadableFile(OSError):
    pass


class UnsupportedFormat(ValueError):
    pass


class UnwritablePath(OSError):
    pass


class ConfigError(ValueError):
    pass


# --- images -----------------------------------------------------------------

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _pgm_tokens(data: bytes, count: int, path) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise UnreadableFile(f"{path}: truncated PGM header")
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def _read_pgm(data: bytes, path) -> np.ndarray:
    tokens, pos = _pgm_tokens(data, 4, path)
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise UnreadableFile(f"{path}: malformed PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise UnreadableFile(f"{path}: invalid PGM dimensions or maxval")
    n = width * height
    if magic == b"P2":
        try:
            values = np.array([int(t) for t in data[pos:].split()[:n]], dtype=np.int64)
        except ValueError:
            raise UnreadableFile(f"{path}: non-integer sample in plain PGM") from None
    else:
        dtype = np.dtype(">u2" if maxval > 255 else np.uint8)
        raster = data[pos + 1 :]
        if len(raster) < n * dtype.itemsize:
            raise UnreadableFile(f"{path}: truncated PGM raster")
        values = np.frombuffer(raster, dtype=dtype, count=n).astype(np.int64)
    if values.size != n:
        raise UnreadableFile(f"{path}: expected {n} samples, found {values.size}")
    if values.max(initial=0) > maxval:
        raise UnreadableFile(f"{path}: sample exceeds maxval {maxval}")
    return values.reshape(height, width) / maxval


def read_pixels(path) -> np.ndarray:
    """Read a grayscale PGM (P2/P5) or 8-bit grayscale PNG as floats in [0, 1]."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc.strerror or exc}") from exc
    if data[:2] in (b"P2", b"P5"):
        return _read_pgm(data, path)
    if data.startswith(_PNG_MAGIC):
        from PIL import Image

        try:
            with Image.open(path) as img:
                img.load()
                if img.mode != "L":
                    raise UnsupportedFormat(f"{path}: PNG mode {img.mode!r} is not 8-bit grayscale")
                return np.asarray(img, dtype=np.float64) / 255.0
        except UnsupportedFormat:
            raise
        except Exception as exc:
            raise UnreadableFile(f"{path}: {exc}") from exc
    raise UnsupportedFormat(f"{path}: not a PGM (P2/P5) or PNG file")


def load_image(path) -> np.ndarray:
    """Load an image as a field of interior nodes.

    The one-pixel frame is the (zero) Dirichlet boundary and is dropped, so
    an H x W image yields an ``(H - 2, W - 2)`` field.
    """
    pixels = read_pixels(path)
    if min(pixels.shape) < 3:
        raise UnsupportedFormat(f"{path}: image must be at least 3x3 to have interior pixels")
    return pixels[1:-1, 1:-1].copy()


def _quantize(values: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pixels(values: np.ndarray, path) -> None:
    """Write values in [0, 1] as 8-bit PGM (P5) or PNG, chosen by extension."""
    path = Path(path)
    q = _quantize(np.asarray(values, dtype=float))
    suffix = path.suffix.lower()
    try:
        if suffix == ".png":
            from PIL import Image

            Image.fromarray(q, mode="L").save(path, format="PNG", optimize=False)
        elif suffix in (".pgm", ".pnm"):
            header = f"P5\n{q.shape[1]} {q.shape[0]}\n255\n".encode("ascii")
            path.write_bytes(header + q.tobytes())
        else:
            raise UnsupportedFormat(f"{path}: output extension must be .pgm or .png")
    except OSError as exc:
        raise UnwritablePath(f"{path}: {exc.strerror or exc}") from exc


def save_image(field: np.ndarray, path, pad: bool = False) -> None:
    """Save a field; ``pad=True`` restores the zero boundary frame dropped by :func:`load_image`."""
    values = np.pad(field, 1) if pad else field
    write_pixels(values, path)


def save_orientation(alpha: np.ndarray, path, pad: bool = False) -> None:
    """Save an angle field, mapping [-pi, pi] linearly onto [0, 255]."""
    save_image((np.asarray(alpha) + math.pi) / (2 * math.pi), path, pad=pad)


def psnr(x: np.ndarray, reference: np.ndarray) -> float:
    mse = float(np.mean((np.asarray(x) - reference) ** 2))
    return math.inf if mse == 0 else 10.0 * math.log10(1.0 / mse)


# --- synthetic patterns -----------------------------------------------------


@dataclass(frozen=True)
class Rectangle:
    cx: float
    cy: float
    width: float
    height: float
    angle: float = 0.0
    intensity: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError(f"rectangle intensity must be in [0, 1], got {self.intensity}")
        if self.width < 0 or self.height < 0:
            raise ValueError("rectangle sides must be non-negative")


@dataclass(frozen=True)
class SyntheticSpec:
    nx: int
    ny: int
    rectangles: tuple[Rectangle, ...] = ()
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("synthetic size must be positive")
        if self.noise < 0:
            raise ValueError("noise amplitude must be >= 0")
        object.__setattr__(self, "rectangles", tuple(self.rectangles))


def clean_pattern(spec: SyntheticSpec) -> np.ndarray:
    """Rasterize the rectangles without noise; later rectangles paint over earlier ones."""
    x, y = np.meshgrid(np.arange(spec.nx, dtype=float), np.arange(spec.ny, dtype=float), indexing="ij")
    out = np.zeros((spec.nx, spec.ny))
    for r in spec.rectangles:
        c, s = math.cos(r.angle), math.sin(r.angle)
        dx, dy = x - r.cx, y - r.cy
        along, across = c * dx + s * dy, -s * dx + c * dy
        out[(np.abs(along) <= r.width / 2) & (np.abs(across) <= r.height / 2)] = r.intensity
    return out


def synth_pattern(spec: SyntheticSpec) -> np.ndarray:
    """Rotated rectangles plus Gaussian noise of amplitude ``noise``, clipped to [0, 1]."""
    out = clean_pattern(spec)
    if spec.noise > 0:
        rng = np.random.default_rng(spec.seed)
        out = np.clip(out + spec.noise * rng.standard_normal(out.shape), 0.0, 1.0)
    return out


def benchmark_spec(n: int = 64, noise: float = 0.1, seed: int = 0) -> SyntheticSpec:
    """Noisy rotated rectangles on an ``n x n`` interior grid."""
    f = n / 64.0
    rects = (
        Rectangle(20 * f, 22 * f, 18 * f, 10 * f, 0.4, 1.0),
        Rectangle(42 * f, 40 * f, 14 * f, 20 * f, -0.3, 0.7),
        Rectangle(46 * f, 14 * f, 10 * f, 8 * f, 0.0, 0.5),
    )
    return SyntheticSpec(n, n, rects, noise, seed)


# --- configuration ----------------------------------------------------------


@dataclass
class RunConfig:
    """Everything needed to reproduce a run; serialized as flat ``key = value`` lines."""

    image: str | None = None
    synthetic: SyntheticSpec | None = None
    anisotropy: str = "l1"
    k: int = 4
    eps: float = 0.05
    kappa: float = 1.0
    mu: float = 1.0
    nu: float = 1.0
    lam: float = 1.0
    p: float = 3.0
    tau: float = 1e-3
    tau_fraction: float | None = None
    tol_linear: float = 1e-10
    tol_convex: float = 1e-10
    maxit_linear: int = 1000
    maxit_convex: int = 5000
    m: int = 10
    hx: float = 1.0
    hy: float = 1.0
    output: str = "out"
    stride: int = 10
    seed: int = 0
    c_hyp: float = 1.0
    c_star: float = 1.0
    delta: float = 1e-3
    slack: float | None = None

    def validate(self) -> "RunConfig":
        if (self.image is None) == (self.synthetic is None):
            raise ConfigError("exactly one of 'image' and 'synthetic' must be given")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.m < 0:
            raise ConfigError("m must be >= 0")
        if self.tau_fraction is not None and not self.tau_fraction > 0:
            raise ConfigError("tau_fraction must be positive")
        try:
            self.scheme_params()
            from .anisotropy import make_anisotropy

            make_anisotropy(self.anisotropy, self.eps, self.k)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def scheme_params(self, tau: float | None = None):
        from .energy import SchemeParams

        return SchemeParams(
            kappa=self.kappa,
            mu=self.mu,
            nu=self.nu,
            lam=self.lam,
            p=self.p,
            tau=self.tau if tau is None else tau,
            tol_linear=self.tol_linear,
            tol_convex=self.tol_convex,
            maxit_linear=self.maxit_linear,
            maxit_convex=self.maxit_convex,
        )


_SYNTH_KEYS = ("synthetic", "rectangles", "noise")
_FLOAT_KEYS = {f.name for f in fields(RunConfig) if f.type in ("float", "float | None")}
_INT_KEYS = {f.name for f in fields(RunConfig) if f.type == "int"}
_ALL_KEYS = {f.name for f in fields(RunConfig)} | set(_SYNTH_KEYS)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def _format_rects(rects) -> str:
    return "; ".join(" ".join(_fmt(float(getattr(r, f.name))) for f in fields(Rectangle)) for r in rects)


def _parse_rects(text: str) -> tuple[Rectangle, ...]:
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        nums = [float(t) for t in re.split(r"[\s,]+", chunk) if t]
        if len(nums) not in (4, 5, 6):
            raise ConfigError(f"rectangle needs 'cx cy width height [angle [intensity]]', got {chunk!r}")
        out.append(Rectangle(*nums))
    return tuple(out)


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name == "synthetic":
            if value is not None:
                lines.append(f"synthetic = {value.nx}x{value.ny}")
                lines.append(f"rectangles = {_format_rects(value.rectangles)}")
                lines.append(f"noise = {_fmt(float(value.noise))}")
            continue
        if value is None:
            continue
        lines.append(f"{f.name} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def _convert(key: str, text: str):
    if key in _INT_KEYS:
        return int(text)
    if key in _FLOAT_KEYS:
        return float(text)
    return text


def config_from_pairs(pairs: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    """Build a config from string key/value pairs layered over ``base``."""
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    synth = {}
    if cfg.synthetic is not None:
        s = cfg.synthetic
        synth = {"size": (s.nx, s.ny), "rectangles": s.rectangles, "noise": s.noise}
    for key, text in pairs.items():
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        text = text.strip()
        try:
            if key == "synthetic":
                m = re.fullmatch(r"(\d+)\s*[xX]\s*(\d+)", text)
                if not m:
                    raise ConfigError(f"synthetic size must look like 64x64, got {text!r}")
                synth["size"] = (int(m.group(1)), int(m.group(2)))
            elif key == "rectangles":
                synth["rectangles"] = _parse_rects(text)
            elif key == "noise":
                synth["noise"] = float(text)
            elif key in ("image", "tau_fraction", "slack") and text.lower() in ("", "none"):
                setattr(cfg, key, None)
            else:
                setattr(cfg, key, _convert(key, text))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    if synth:
        if "size" not in synth:
            raise ConfigError("'rectangles'/'noise' given without 'synthetic = NXxNY'")
        nx, ny = synth["size"]
        cfg.synthetic = SyntheticSpec(nx, ny, synth.get("rectangles", ()), synth.get("noise", 0.0), cfg.seed)
    elif cfg.synthetic is not None:
        cfg.synthetic = dataclasses.replace(cfg.synthetic, seed=cfg.seed)
    return cfg


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value
    return config_from_pairs(pairs, base)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc.strerror or exc}") from exc
    return parse_config(text)
