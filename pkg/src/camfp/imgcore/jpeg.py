"""Self-contained baseline sequential JPEG codec (ITU-T T.81).

Encoder: JFIF output, RGB -> YCbCr, 4:2:0 subsampling, 8x8 DCT, the standard
example quantization tables scaled by the conventional quality mapping
(S = 5000/q for q < 50 else 200 - 2q; entry' = clamp(floor((entry*S+50)/100),
1, 255)), standard Huffman tables. Decoder handles any 8-bit baseline stream
with 1 or 3 components, sampling factors 1 or 2, and restart intervals, so
streams interoperate with ordinary JPEG tools in both directions.

Kept in-package (not delegated to a platform codec) so quality->quantization
behavior is bit-identical everywhere.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from ..errors import DecodeError, ShapeError
from .image import Image, to_u8


@dataclass(frozen=True)
class JpegQuality:
    """Quality factor in percent, 1..100."""

    q: int

    def __post_init__(self):
        if not 1 <= int(self.q) <= 100:
            raise ValueError(f"JPEG quality must be in [1, 100], got {self.q}")
        object.__setattr__(self, "q", int(self.q))


ZIGZAG = np.array([
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
])
INV_ZIGZAG = np.argsort(ZIGZAG)

BASE_LUMA_QUANT = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int64)

BASE_CHROMA_QUANT = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.int64)

# Standard Huffman tables (T.81 Annex K.3): (BITS counts for lengths 1..16, values).
DC_LUMA_BITS = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
DC_LUMA_VALS = list(range(12))
DC_CHROMA_BITS = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
DC_CHROMA_VALS = list(range(12))
AC_LUMA_BITS = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 125]
AC_LUMA_VALS = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
    0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0, 0x24, 0x33, 0x62, 0x72,
    0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75,
    0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3,
    0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9,
    0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4,
    0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA,
]
AC_CHROMA_BITS = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 119]
AC_CHROMA_VALS = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41,
    0x51, 0x07, 0x61, 0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91,
    0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0, 0x15, 0x62, 0x72, 0xD1,
    0x0A, 0x16, 0x24, 0x34, 0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
    0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44,
    0x45, 0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58,
    0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74,
    0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A,
    0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4,
    0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7,
    0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
    0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF2, 0xF3, 0xF4,
    0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA,
]


def quantization_tables(q: int | JpegQuality) -> tuple[np.ndarray, np.ndarray]:
    """Quality-scaled (luma, chroma) quantization tables."""
    q = q.q if isinstance(q, JpegQuality) else int(JpegQuality(q).q)
    scale = 5000 // q if q < 50 else 200 - 2 * q
    luma = np.clip((BASE_LUMA_QUANT * scale + 50) // 100, 1, 255)
    chroma = np.clip((BASE_CHROMA_QUANT * scale + 50) // 100, 1, 255)
    return luma, chroma


# --- color ---------------------------------------------------------------

def _rgb_to_ycbcr(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    return np.stack([y, cb, cr], axis=-1)


def _ycbcr_to_rgb(ycc: np.ndarray) -> np.ndarray:
    y, cb, cr = ycc[..., 0], ycc[..., 1] - 128.0, ycc[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.stack([r, g, b], axis=-1)


# --- block helpers -------------------------------------------------------

def _pad_edge(plane: np.ndarray, mult: int) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % mult
    pw = (-w) % mult
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane

def _to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)


def _from_blocks(blocks: np.ndarray) -> np.ndarray:
    nby, nbx = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(nby * 8, nbx * 8)


def _quantize_plane(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Plane (multiple-of-8 dims) -> (n_blocks, 64) zigzag-ordered ints."""
    blocks = _to_blocks(plane) - 128.0
    coefs = dctn(blocks, axes=(-2, -1), norm="ortho")
    quant = np.rint(coefs / table).astype(np.int32)
    return quant.reshape(-1, 64)[:, ZIGZAG]


# --- Huffman -------------------------------------------------------------

def _canonical_codes(bits, vals):
    """symbol -> (code, length) per the T.81 canonical assignment."""
    table, code, k = {}, 0, 0
    for ln in range(1, 17):
        for _ in range(bits[ln - 1]):
            table[vals[k]] = (code, ln)
            code += 1
            k += 1
        code <<= 1
    return table


def _decode_lut(bits, vals):
    """65536-entry (symbol, codelength) lookup for 16-bit peeks."""
    sym = np.full(65536, -1, dtype=np.int32)
    ln_arr = np.zeros(65536, dtype=np.int32)
    code, k = 0, 0
    for ln in range(1, 17):
        for _ in range(bits[ln - 1]):
            lo = code << (16 - ln)
            hi = (code + 1) << (16 - ln)
            sym[lo:hi] = vals[k]
            ln_arr[lo:hi] = ln
            code += 1
            k += 1
        code <<= 1
    return sym.tolist(), ln_arr.tolist()


class _BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self.acc = 0
        self.nbits = 0

    def write(self, code: int, length: int):
        self.acc = (self.acc << length) | code
        self.nbits += length
        while self.nbits >= 8:
            byte = (self.acc >> (self.nbits - 8)) & 0xFF
            self.buf.append(byte)
            if byte == 0xFF:
                self.buf.append(0x00)  # byte stuffing
            self.nbits -= 8
        self.acc &= (1 << self.nbits) - 1

    def flush(self):
        if self.nbits:
            pad = 8 - self.nbits
            self.write((1 << pad) - 1, pad)


def _magnitude(v: int) -> tuple[int, int]:
    """(category size, appended bits) for a DC diff or AC coefficient."""
    if v == 0:
        return 0, 0
    size = v.bit_length() if v > 0 else (-v).bit_length()
    bits = v if v >= 0 else v + (1 << size) - 1
    return size, bits


def _encode_blocks(bw, zz_rows, dc_pred, dc_tbl, ac_tbl):
    """Huffman-encode one component block (zigzag ints); returns new DC pred."""
    blk = zz_rows
    diff = blk[0] - dc_pred
    size, bits = _magnitude(diff)
    code, ln = dc_tbl[size]
    bw.write(code, ln)
    if size:
        bw.write(bits, size)
    run = 0
    last_nz = 0
    for k in range(63, 0, -1):
        if blk[k]:
            last_nz = k
            break
    for k in range(1, last_nz + 1):
        v = blk[k]
        if v == 0:
            run += 1
            continue
        while run >= 16:
            zcode, zln = ac_tbl[0xF0]  # ZRL
            bw.write(zcode, zln)
            run -= 16
        size, bits = _magnitude(v)
        code, ln = ac_tbl[(run << 4) | size]
        bw.write(code, ln)
        bw.write(bits, size)
        run = 0
    if last_nz != 63:
        code, ln = ac_tbl[0x00]  # EOB
        bw.write(code, ln)
    return blk[0]


# --- encoder -------------------------------------------------------------

def _segment(marker: int, payload: bytes) -> bytes:
    return struct.pack(">BBH", 0xFF, marker, len(payload) + 2) + payload


def encode_jpeg(img: Image, quality: int | JpegQuality) -> bytes:
    """Encode a 3-channel image as baseline JFIF 4:2:0."""
    if img.channels != 3:
        raise ShapeError(f"JPEG encoder needs 3 channels, got {img.channels}")
    if img.height < 8 or img.width < 8:
        raise ShapeError(f"JPEG encoder needs at least 8x8 input, got {img.height}x{img.width}")
    q = quality if isinstance(quality, JpegQuality) else JpegQuality(quality)
    luma_q, chroma_q = quantization_tables(q)

    ycc = _rgb_to_ycbcr(to_u8(img).astype(np.float64))
    y = _pad_edge(ycc[..., 0], 16)
    cb_full = _pad_edge(ycc[..., 1], 16)
    cr_full = _pad_edge(ycc[..., 2], 16)
    # 4:2:0 chroma: mean of each 2x2 neighborhood.
    ph, pw = cb_full.shape
    cb = cb_full.reshape(ph // 2, 2, pw // 2, 2).mean(axis=(1, 3))
    cr = cr_full.reshape(ph // 2, 2, pw // 2, 2).mean(axis=(1, 3))

    yq = _quantize_plane(y, luma_q).tolist()
    cbq = _quantize_plane(cb, chroma_q).tolist()
    crq = _quantize_plane(cr, chroma_q).tolist()

    dc_y = _canonical_codes(DC_LUMA_BITS, DC_LUMA_VALS)
    ac_y = _canonical_codes(AC_LUMA_BITS, AC_LUMA_VALS)
    dc_c = _canonical_codes(DC_CHROMA_BITS, DC_CHROMA_VALS)
    ac_c = _canonical_codes(AC_CHROMA_BITS, AC_CHROMA_VALS)

    nby, nbx = ph // 8, pw // 8  # luma block grid (ph/pw are luma padded dims)
    cbx = nbx // 2
    bw = _BitWriter()
    preds = [0, 0, 0]
    for my in range(nby // 2):
        for mx in range(nbx // 2):
            for dy in (0, 1):
                for dx in (0, 1):
                    idx = (2 * my + dy) * nbx + (2 * mx + dx)
                    preds[0] = _encode_blocks(bw, yq[idx], preds[0], dc_y, ac_y)
            cidx = my * cbx + mx
            preds[1] = _encode_blocks(bw, cbq[cidx], preds[1], dc_c, ac_c)
            preds[2] = _encode_blocks(bw, crq[cidx], preds[2], dc_c, ac_c)
    bw.flush()

    out = bytearray(b"\xff\xd8")  # SOI
    out += _segment(0xE0, b"JFIF\x00\x01\x01\x00" + struct.pack(">HHBB", 1, 1, 0, 0))
    out += _segment(0xDB, b"\x00" + bytes(luma_q.reshape(64)[ZIGZAG].astype(np.uint8)))
    out += _segment(0xDB, b"\x01" + bytes(chroma_q.reshape(64)[ZIGZAG].astype(np.uint8)))
    sof = struct.pack(">BHHB", 8, img.height, img.width, 3)
    sof += bytes([1, 0x22, 0]) + bytes([2, 0x11, 1]) + bytes([3, 0x11, 1])
    out += _segment(0xC0, sof)
    for cls, tid, bits, vals in (
        (0, 0, DC_LUMA_BITS, DC_LUMA_VALS),
        (1, 0, AC_LUMA_BITS, AC_LUMA_VALS),
        (0, 1, DC_CHROMA_BITS, DC_CHROMA_VALS),
        (1, 1, AC_CHROMA_BITS, AC_CHROMA_VALS),
    ):
        out += _segment(0xC4, bytes([(cls << 4) | tid] + bits + vals))
    out += _segment(0xDA, bytes([3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0]))
    out += bw.buf
    out += b"\xff\xd9"  # EOI
    return bytes(out)


# --- decoder -------------------------------------------------------------

class _Component:
    __slots__ = ("cid", "h", "v", "tq", "td", "ta", "coefs", "bw", "bh")

    def __init__(self, cid, h, v, tq):
        self.cid, self.h, self.v, self.tq = cid, h, v, tq


def _split_entropy(data: bytes, start: int):
    """Destuffed entropy segments (split at restart markers) + end offset."""
    segments, cur = [], bytearray()
    i = start
    n = len(data)
    while i < n:
        b = data[i]
        if b != 0xFF:
            cur.append(b)
            i += 1
            continue
        nxt = data[i + 1] if i + 1 < n else 0xD9
        if nxt == 0x00:
            cur.append(0xFF)
            i += 2
        elif 0xD0 <= nxt <= 0xD7:
            segments.append(bytes(cur))
            cur = bytearray()
            i += 2
        else:
            break
    segments.append(bytes(cur))
    return segments, i


def _bit_words(seg: bytes):
    """24-bit windows at each byte offset, for arbitrary 16-bit bit peeks."""
    arr = np.frombuffer(seg + b"\xff\xff\xff", dtype=np.uint8).astype(np.int64)
    return ((arr[:-2] << 16) | (arr[1:-1] << 8) | arr[2:]).tolist()


def _decode_scan(data, pos, comps, order, mcus_x, mcus_y, luts, restart_interval):
    segments, end = _split_entropy(data, pos)
    seg_iter = iter(segments)
    words = _bit_words(next(seg_iter))
    bitpos = 0
    preds = {c.cid: 0 for c in comps}
    mcu_count = 0
    for c in comps:
        c.coefs = np.zeros((c.bh * c.bw, 64), dtype=np.int32)

    for my in range(mcus_y):
        for mx in range(mcus_x):
            if restart_interval and mcu_count and mcu_count % restart_interval == 0:
                words = _bit_words(next(seg_iter))
                bitpos = 0
                preds = {c.cid: 0 for c in comps}
            for comp, by, bx in order(my, mx):
                dc_sym, dc_len, ac_sym, ac_len = luts[(comp.td, comp.ta)]
                block = comp.coefs[by * comp.bw + bx]
                peek = (words[bitpos >> 3] >> (8 - (bitpos & 7))) & 0xFFFF
                s = dc_sym[peek]
                if s < 0:
                    raise DecodeError("baseline JPEG: invalid DC Huffman code")
                bitpos += dc_len[peek]
                if s:
                    peek = (words[bitpos >> 3] >> (8 - (bitpos & 7))) & 0xFFFF
                    bits = peek >> (16 - s)
                    bitpos += s
                    diff = bits if bits >= (1 << (s - 1)) else bits - (1 << s) + 1
                else:
                    diff = 0
                preds[comp.cid] += diff
                block[0] = preds[comp.cid]
                k = 1
                while k < 64:
                    peek = (words[bitpos >> 3] >> (8 - (bitpos & 7))) & 0xFFFF
                    s = ac_sym[peek]
                    if s < 0:
                        raise DecodeError("baseline JPEG: invalid AC Huffman code")
                    bitpos += ac_len[peek]
                    if s == 0x00:
                        break
                    if s == 0xF0:
                        k += 16
                        continue
                    k += s >> 4
                    size = s & 15
                    peek = (words[bitpos >> 3] >> (8 - (bitpos & 7))) & 0xFFFF
                    bits = peek >> (16 - size)
                    bitpos += size
                    if k > 63:
                        raise DecodeError("baseline JPEG: AC run past end of block")
                    block[k] = bits if bits >= (1 << (size - 1)) else bits - (1 << size) + 1
                    k += 1
            mcu_count += 1
    return end


def decode_jpeg(data: bytes) -> Image:
    """Decode a baseline sequential JPEG byte stream."""
    if data[:2] != b"\xff\xd8":
        raise DecodeError("not a JPEG stream (missing SOI)")
    pos = 2
    qtables: dict[int, np.ndarray] = {}
    huff: dict[tuple[int, int], tuple] = {}
    comps: list[_Component] = []
    height = width = 0
    restart_interval = 0

    while pos < len(data):
        if data[pos] != 0xFF:
            raise DecodeError("baseline JPEG: marker expected")
        marker = data[pos + 1]
        pos += 2
        if marker == 0xD9:  # EOI
            break
        if marker in (0x01,) or 0xD0 <= marker <= 0xD7:
            continue
        (seg_len,) = struct.unpack_from(">H", data, pos)
        body = data[pos + 2 : pos + seg_len]
        pos += seg_len
        if marker == 0xDB:
            off = 0
            while off < len(body):
                pq, tq = body[off] >> 4, body[off] & 15
                if pq != 0:
                    raise DecodeError("baseline JPEG: 16-bit quantization tables unsupported")
                flat = np.frombuffer(body, dtype=np.uint8, count=64, offset=off + 1)
                qtables[tq] = flat[INV_ZIGZAG].reshape(8, 8).astype(np.int64)
                off += 65
        elif marker == 0xC4:
            off = 0
            while off < len(body):
                cls, tid = body[off] >> 4, body[off] & 15
                bits = list(body[off + 1 : off + 17])
                n = sum(bits)
                vals = list(body[off + 17 : off + 17 + n])
                huff[(cls, tid)] = _decode_lut(bits, vals)
                off += 17 + n
        elif marker == 0xC0 or marker == 0xC1:
            precision, height, width, ncomp = struct.unpack_from(">BHHB", body, 0)
            if precision != 8:
                raise DecodeError(f"baseline JPEG: {precision}-bit precision unsupported")
            if ncomp not in (1, 3):
                raise DecodeError(f"baseline JPEG: {ncomp} components unsupported")
            for i in range(ncomp):
                cid, hv, tq = body[6 + 3 * i : 9 + 3 * i]
                comps.append(_Component(cid, hv >> 4, hv & 15, tq))
            if any(c.h not in (1, 2) or c.v not in (1, 2) for c in comps):
                raise DecodeError("baseline JPEG: sampling factors other than 1/2 unsupported")
        elif marker in (0xC2, 0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF):
            raise DecodeError("JPEG: only baseline sequential (SOF0/SOF1) is supported")
        elif marker == 0xDD:
            (restart_interval,) = struct.unpack_from(">H", body, 0)
        elif marker == 0xDA:
            ns = body[0]
            sel = {}
            for i in range(ns):
                cid, tables = body[1 + 2 * i], body[2 + 2 * i]
                sel[cid] = (tables >> 4, tables & 15)
            for c in comps:
                c.td, c.ta = sel[c.cid]
            hmax = max(c.h for c in comps)
            vmax = max(c.v for c in comps)
            mcus_x = -(-width // (8 * hmax))
            mcus_y = -(-height // (8 * vmax))
            for c in comps:
                c.bw = mcus_x * c.h
                c.bh = mcus_y * c.v

            def order(my, mx, comps=comps):
                for c in comps:
                    for dy in range(c.v):
                        for dx in range(c.h):
                            yield c, my * c.v + dy, mx * c.h + dx

            luts = {
                (c.td, c.ta): (*huff[(0, c.td)], *huff[(1, c.ta)]) for c in comps
            }
            pos = _decode_scan(data, pos, comps, order, mcus_x, mcus_y, luts, restart_interval)
        # APPn/COM and anything else: skipped.

    if not comps or height == 0:
        raise DecodeError("baseline JPEG: missing frame header")

    hmax = max(c.h for c in comps)
    vmax = max(c.v for c in comps)
    planes = []
    for c in comps:
        table = qtables[c.tq]
        blocks = (c.coefs[:, INV_ZIGZAG].reshape(-1, 8, 8) * table).astype(np.float64)
        pixels = idctn(blocks, axes=(-2, -1), norm="ortho") + 128.0
        plane = _from_blocks(pixels.reshape(c.bh, c.bw, 8, 8))
        if c.h != hmax or c.v != vmax:
            plane = np.repeat(np.repeat(plane, vmax // c.v, axis=0), hmax // c.h, axis=1)
        planes.append(plane[:height, :width])
    if len(planes) == 1:
        rgb = planes[0][:, :, None]
    else:
        rgb = _ycbcr_to_rgb(np.stack(planes, axis=-1))
    return Image(np.clip(rgb, 0.0, 255.0) / 255.0)


def jpeg_roundtrip(img: Image, q: int | JpegQuality) -> Image:
    """Encode then decode; the lossy image the robustness harness feeds on."""
    return decode_jpeg(encode_jpeg(img, q))
