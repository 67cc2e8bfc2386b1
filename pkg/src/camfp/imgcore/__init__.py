from .image import (
    Image,
    load_image,
    save_image,
    to_luminance,
    resize_bilinear,
)
from .jpeg import JpegQuality, encode_jpeg, decode_jpeg, jpeg_roundtrip, quantization_tables

__all__ = [
    "Image",
    "JpegQuality",
    "load_image",
    "save_image",
    "to_luminance",
    "resize_bilinear",
    "encode_jpeg",
    "decode_jpeg",
    "jpeg_roundtrip",
    "quantization_tables",
]
