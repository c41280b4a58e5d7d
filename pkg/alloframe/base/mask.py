from typing import List, Tuple
import numpy as np
from alloframe.errors import UsageError


class Mask:
    """
    Binary instance mask stored as row-major run-length runs.

    Attributes:
        width (int): Mask width in pixels.
        height (int): Mask height in pixels.
        runs (List[Tuple[int, int]]): Sorted, non-overlapping (start, length) runs over
            the flattened row-major index v * width + u.
    """

    def __init__(self, width: int, height: int, runs: List[Tuple[int, int]]):
        self.width = int(width)
        self.height = int(height)
        self.runs = [(int(start), int(length)) for start, length in runs]
        self._validate()

    def _validate(self):
        previous_end = 0
        total = self.width * self.height
        for start, length in self.runs:
            if length <= 0 or start < previous_end or start + length > total:
                raise UsageError(f"Invalid RLE run ({start}, {length}) for a {self.width}x{self.height} mask")
            previous_end = start + length

    def __repr__(self):
        return f"Mask(width={self.width}, height={self.height}, area={self.area})"

    def __eq__(self, other):
        return (isinstance(other, Mask) and self.width == other.width
                and self.height == other.height and self.runs == other.runs)

    @property
    def area(self) -> int:
        return sum(length for _, length in self.runs)

    def is_empty(self) -> bool:
        return len(self.runs) == 0

    @classmethod
    def from_array(cls, array: np.ndarray):
        """
        Encodes a (height, width) boolean array.

        Parameters:
            array (np.ndarray): Mask array, any non-zero value is foreground.

        Returns:
            Mask: Run-length encoded mask.
        """
        array = np.asarray(array).astype(bool)
        height, width = array.shape
        flat = np.concatenate([[0], array.reshape(-1).astype(np.int8), [0]])
        changes = np.diff(flat)
        starts = np.where(changes == 1)[0]
        ends = np.where(changes == -1)[0]
        return cls(width, height, list(zip(starts.tolist(), (ends - starts).tolist())))

    def to_array(self) -> np.ndarray:
        flat = np.zeros(self.width * self.height, dtype=bool)
        for start, length in self.runs:
            flat[start:start + length] = True
        return flat.reshape(self.height, self.width)

    def pixel_coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns:
            tuple: (u, v) integer arrays of foreground pixels in row-major order.
        """
        if not self.runs:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        indices = np.concatenate([np.arange(start, start + length) for start, length in self.runs])
        return indices % self.width, indices // self.width

    def bounding_box(self) -> Tuple[int, int, int, int]:
        """
        Returns:
            tuple: (x0, y0, x1, y1) with exclusive x1/y1 edges, or (0, 0, 0, 0) when empty.
        """
        if not self.runs:
            return 0, 0, 0, 0
        u, v = self.pixel_coordinates()
        return int(u.min()), int(v.min()), int(u.max()) + 1, int(v.max()) + 1

    def to_rle_dict(self) -> dict:
        runs = []
        for start, length in self.runs:
            runs.extend([start, length])
        return {'size': [self.height, self.width], 'runs': runs}

    @classmethod
    def from_rle_dict(cls, data: dict):
        height, width = data['size']
        flat_runs = data['runs']
        if len(flat_runs) % 2 != 0:
            raise UsageError("RLE runs must come in (start, length) pairs")
        return cls(width, height, list(zip(flat_runs[0::2], flat_runs[1::2])))
