"""Image file IO, content hashing, and deterministic synthetic fixtures.

All pixel math in the toolkit runs on uint8 RGB arrays of shape (H, W, 3)
in the 0-255 convention. Files are PNG so identical pixels produce
identical bytes, which keeps manifests and caches reproducible.
"""

from __future__ import annotations

import hashlib
import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvariantViolation, MissingImage
from .records import ImageRef


def as_rgb_array(image: Image.Image) -> np.ndarray:
    return np.asarray(image.convert("RGB"), dtype=np.uint8)


def load_image(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingImage(str(path))
    with Image.open(path) as img:
        return as_rgb_array(img)


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return as_rgb_array(img)


def file_hash(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def array_hash(image: np.ndarray) -> str:
    """Content hash of in-memory pixels: shape header + raw bytes."""
    arr = np.ascontiguousarray(np.asarray(image, dtype=np.uint8))
    digest = hashlib.sha256()
    digest.update(repr(arr.shape).encode("ascii"))
    digest.update(arr.tobytes())
    return digest.hexdigest()


def write_image(image: np.ndarray, path: str | Path, root: str | Path) -> ImageRef:
    """Save pixels as PNG under root and return the ImageRef for them."""
    path = Path(path)
    root = Path(root)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_png(image)
    with open(path, "wb") as handle:
        handle.write(data)
    arr = np.asarray(image, dtype=np.uint8)
    ref = ImageRef(
        path=path.relative_to(root).as_posix(),
        content_hash=hashlib.sha256(data).hexdigest(),
        width=int(arr.shape[1]),
        height=int(arr.shape[0]),
    )
    ref.validate()
    return ref


def ref_for_file(path: str | Path, root: str | Path) -> ImageRef:
    """Build an ImageRef for an existing image file."""
    path = Path(path)
    if not path.is_file():
        raise MissingImage(str(path))
    with Image.open(path) as img:
        width, height = img.size
    ref = ImageRef(
        path=path.relative_to(Path(root)).as_posix(),
        content_hash=file_hash(path),
        width=int(width),
        height=int(height),
    )
    ref.validate()
    return ref


def load_ref(ref: ImageRef, root: str | Path) -> np.ndarray:
    """Load the pixels behind a ref, verifying hash and dimensions."""
    path = ref.resolve(root)
    if not path.is_file():
        raise MissingImage(str(path))
    actual = file_hash(path)
    if actual != ref.content_hash:
        raise InvariantViolation(
            ref.path, f"content hash mismatch: file {actual[:12]}.. ref {ref.content_hash[:12]}.."
        )
    image = load_image(path)
    if image.shape[0] != ref.height or image.shape[1] != ref.width:
        raise InvariantViolation(
            ref.path,
            f"dimensions {image.shape[1]}x{image.shape[0]} differ from ref "
            f"{ref.width}x{ref.height}",
        )
    return image


def synthetic_portrait(seed: int, size: tuple[int, int] = (48, 48)) -> np.ndarray:
    """Deterministic face-like test image: gradient backdrop, oval head,
    eyes and a mouth whose curvature varies with the seed.

    Purely a fixture generator; nothing downstream assumes these are real
    faces, only that the centered region differs from the border.
    """
    height, width = int(size[0]), int(size[1])
    rng = np.random.default_rng(seed)
    top = rng.integers(40, 216, size=3)
    bottom = rng.integers(40, 216, size=3)
    rows = np.linspace(0.0, 1.0, height)[:, None, None]
    gradient = (1.0 - rows) * top[None, None, :] + rows * bottom[None, None, :]
    image = np.broadcast_to(gradient, (height, width, 3)).copy()

    yy, xx = np.mgrid[0:height, 0:width]
    cy, cx = height / 2.0, width / 2.0
    ry, rx = height * 0.32, width * 0.26
    head = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    skin = rng.integers(120, 230, size=3)
    image[head] = skin

    eye_dy = int(height * 0.1)
    eye_dx = int(width * 0.1)
    eye_r = max(1, int(min(height, width) * 0.04))
    for ex in (cx - eye_dx, cx + eye_dx):
        eye = (yy - (cy - eye_dy)) ** 2 + (xx - ex) ** 2 <= eye_r**2
        image[eye] = (20, 20, 20)

    mouth_curve = float(rng.uniform(-1.0, 1.0))
    mouth_y = cy + height * 0.14
    mouth_halfwidth = width * 0.12
    span = np.abs(xx - cx) <= mouth_halfwidth
    arc = mouth_y + mouth_curve * 3.0 * ((xx - cx) / mouth_halfwidth) ** 2
    mouth = span & (np.abs(yy - arc) <= 1.0)
    image[mouth] = (90, 20, 20)

    return np.clip(image, 0, 255).astype(np.uint8)
