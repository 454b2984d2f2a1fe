"""8-bit luma images: loading and the in-memory container.

PGM (P5, maxval 255) is the required input format; 8-bit grayscale PNG is
accepted as well. Colour inputs are reduced to luma by Pillow's "L"
conversion.
"""

import logging
import os
from dataclasses import dataclass
from typing import List

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = ('.pgm', '.png')


@dataclass
class LumaImage:
    """Luma plane, row-major, shape (height, width), dtype uint8."""
    width: int
    height: int
    samples: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.shape != (self.height, self.width):
            raise ValueError(f"Image samples have shape {self.samples.shape}, "
                             f"expected ({self.height}, {self.width})")
        if self.samples.dtype != np.uint8:
            if np.any(self.samples < 0) or np.any(self.samples > 255):
                raise ValueError("Luma samples must be 8-bit (0..255)")
            self.samples = self.samples.astype(np.uint8)

    @classmethod
    def from_array(cls, samples, name: str = "") -> "LumaImage":
        samples = np.asarray(samples)
        return cls(width=samples.shape[1], height=samples.shape[0], samples=samples, name=name)

    def normalized(self) -> np.ndarray:
        """Samples as float64 in [0, 1]."""
        return self.samples.astype(np.float64) / 255.0


def load_luma_image(path: str) -> LumaImage:
    """Read a PGM or PNG file as an 8-bit luma image."""
    with Image.open(path) as img:
        if img.format == 'PPM' and img.mode not in ('L',):
            raise ValueError(f"{path}: only 8-bit grayscale PGM (P5, maxval 255) is supported, "
                             f"got mode {img.mode}")
        if img.mode in ('I', 'I;16', 'I;16B', 'F'):
            raise ValueError(f"{path}: only 8-bit images are supported, got mode {img.mode}")
        plane = np.array(img.convert('L'), dtype=np.uint8)
    return LumaImage.from_array(plane, name=os.path.basename(path))


def load_image_dir(path: str) -> List[LumaImage]:
    """Load every .pgm/.png file in a directory, sorted by file name."""
    if os.path.isfile(path):
        return [load_luma_image(path)]
    names = sorted(f for f in os.listdir(path) if f.lower().endswith(IMAGE_EXTENSIONS))
    if not names:
        raise FileNotFoundError(f"No .pgm or .png images found in '{path}'")
    images = [load_luma_image(os.path.join(path, f)) for f in names]
    logger.info("Loaded %d images from %s", len(images), path)
    return images


def save_pgm(samples: np.ndarray, fileobj):
    """Write an 8-bit plane as binary PGM (P5) to an open binary file."""
    Image.fromarray(np.ascontiguousarray(samples, dtype=np.uint8)).save(fileobj, format='PPM')
