"""PPM / PFM / sidecar I/O for synthetic scenes."""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from scat_depth.errors import DataError

logger = logging.getLogger(__name__)


def write_ppm(path: Path, image: np.ndarray) -> None:
    """Save a [3,H,W] image in [0,1] as binary 8-bit PPM.

    Args:
        path: Destination file.
        image: Channel-first RGB array.
    """
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"PPM writer needs a [3,H,W] image, got {image.shape}")
    _, h, w = image.shape
    pixels = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.transpose(pixels, (1, 2, 0)).tobytes())


def _read_header_tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            break
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_ppm(path: Path) -> np.ndarray:
    """Load a binary PPM as a [3,H,W] float array in [0,1]."""
    data = Path(path).read_bytes()
    tokens, offset = _read_header_tokens(data, 4)
    if len(tokens) != 4 or tokens[0] != b"P6":
        raise DataError(f"{path}: not a binary PPM (P6) file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise DataError(f"{path}: unsupported PPM maxval {maxval}")
    body = data[offset:offset + 3 * w * h]
    if len(body) != 3 * w * h:
        raise DataError(f"{path}: truncated PPM body ({len(body)} of {3 * w * h} bytes)")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
    return np.transpose(pixels, (2, 0, 1)).astype(np.float64) / 255.0


def write_pfm(path: Path, depth: np.ndarray) -> None:
    """Save an [H,W] map as little-endian PFM (scale -1.0, bottom row first)."""
    if depth.ndim != 2:
        raise ValueError(f"PFM writer needs an [H,W] map, got {depth.shape}")
    h, w = depth.shape
    with open(path, "wb") as f:
        f.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        f.write(np.flipud(depth).astype("<f4").tobytes())


def read_pfm(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, offset = _read_header_tokens(data, 4)
    if len(tokens) != 4 or tokens[0] != b"Pf":
        raise DataError(f"{path}: not a single-channel PFM (Pf) file")
    w, h, scale = int(tokens[1]), int(tokens[2]), float(tokens[3])
    dtype = "<f4" if scale < 0 else ">f4"
    body = data[offset:offset + 4 * w * h]
    if len(body) != 4 * w * h:
        raise DataError(f"{path}: truncated PFM body ({len(body)} of {4 * w * h} bytes)")
    return np.flipud(np.frombuffer(body, dtype=dtype).reshape(h, w)).astype(np.float64)


def write_sidecar(path: Path, values: Dict[str, Sequence[float]]) -> None:
    """Text file of ``key = v1 v2 ...`` lines; floats are written with repr for exact round trips."""
    lines = [f"{key} = " + " ".join(repr(float(v)) for v in vals) for key, vals in values.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sidecar(path: Path) -> Dict[str, np.ndarray]:
    values: Dict[str, np.ndarray] = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{number}: expected 'key = values', got {line!r}")
        key, _, rest = line.partition("=")
        try:
            values[key.strip()] = np.array([float(v) for v in rest.split()], dtype=np.float64)
        except ValueError as e:
            raise DataError(f"{path}:{number}: non-numeric value in {line!r}") from e
    return values
