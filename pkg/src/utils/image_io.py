"""PNG frame and background I/O with Pillow. Images are float32 ``[H, W, 3]`` in ``[0, 1]``."""
from pathlib import Path
from typing import List, Union

import numpy as np
from PIL import Image

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


def load_image(path: Path, size: Union[int, tuple[int, int], None] = None) -> np.ndarray:
    """Read an image as RGB; ``size`` resizes to ``(H, W)`` (an int means square)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Image not found: {path}")
    with Image.open(path) as img:
        img = img.convert("RGB")
        if size is not None:
            h, w = (size, size) if isinstance(size, int) else size
            if img.size != (w, h):
                img = img.resize((w, h), Image.Resampling.BILINEAR)
        return np.asarray(img, dtype=np.float32) / 255.0


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def save_image(path: Path, image: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(image)).save(path, format="PNG")


def frame_path(directory: Path, index: int) -> Path:
    return Path(directory) / f"frame_{index:04d}.png"


def list_frames(directory: Path) -> List[Path]:
    """Image files of a frame directory in name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Frame directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS)


def save_frames(directory: Path, frames: List[np.ndarray]) -> List[Path]:
    paths = []
    for i, frame in enumerate(frames):
        path = frame_path(directory, i)
        save_image(path, frame)
        paths.append(path)
    return paths


def load_background(path: Path, size: int, frame: int = 0) -> np.ndarray:
    """Still background, or frame ``t mod n`` of a directory of background frames."""
    path = Path(path)
    if path.is_dir():
        frames = list_frames(path)
        if not frames:
            raise FileNotFoundError(f"Background directory has no frames: {path}")
        return load_image(frames[frame % len(frames)], size)
    return load_image(path, size)


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Luminance replicated over three channels."""
    lum = image[..., 0] * 0.299 + image[..., 1] * 0.587 + image[..., 2] * 0.114
    return np.repeat(lum[..., None], 3, axis=-1).astype(np.float32)
