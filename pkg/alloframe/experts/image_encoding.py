import base64
import io
import numpy as np
from PIL import Image
from alloframe.errors import UsageError
from alloframe.experts.base import ImageRef


def load_crop(image_ref: ImageRef) -> Image.Image:
    """
    Opens the referenced image, crops it to the box and blanks pixels outside the mask.
    """
    if not image_ref.image_path:
        raise UsageError(f"View {image_ref.view_id} has no image to send to an expert")
    with Image.open(image_ref.image_path) as image:
        image = image.convert('RGB')
        if image_ref.box is None:
            return image.copy()
        x0, y0, x1, y1 = (int(round(value)) for value in image_ref.box)
        pixels = np.asarray(image).copy()
    if image_ref.mask is not None:
        pixels[~image_ref.mask.to_array()] = 0
    return Image.fromarray(pixels[y0:y1, x0:x1])


def encode_png_base64(image: Image.Image) -> str:
    buffer = io.BytesIO()
    image.save(buffer, format='PNG')
    return base64.b64encode(buffer.getvalue()).decode('ascii')


def encode_image_ref(image_ref: ImageRef) -> str:
    return encode_png_base64(load_crop(image_ref))
