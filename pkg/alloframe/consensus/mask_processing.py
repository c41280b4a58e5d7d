import numpy as np
from scipy import ndimage
from alloframe.base.mask import Mask

MIN_ERODED_PIXELS = 16
EROSION_STRUCTURE = np.ones((3, 3), dtype=bool)


def erode_mask(mask: Mask, iterations: int, min_pixels: int = MIN_ERODED_PIXELS) -> Mask:
    """
    Applies 3x3 (8-connected) binary erosion, one pass at a time.

    Stops before a pass would leave fewer than min_pixels pixels and returns the
    last result that still had enough pixels, which may be the input itself.

    Parameters:
        mask (Mask): Input mask.
        iterations (int): Number of erosion passes.
        min_pixels (int): Size guard.

    Returns:
        Mask: Eroded mask, a subset of the input.
    """
    if iterations <= 0 or mask.area < min_pixels:
        return mask
    current = mask.to_array()
    for _ in range(iterations):
        eroded = ndimage.binary_erosion(current, structure=EROSION_STRUCTURE)
        if int(eroded.sum()) < min_pixels:
            break
        current = eroded
    return Mask.from_array(current)
