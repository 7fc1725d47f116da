"""Walk through the binary tensor format: write a matrix, peek at the raw
bytes, read it back, and watch the reader refuse a corrupted file.

Run: python3 demos/01_tensor_roundtrip.py
"""

import json
import struct
import tempfile
from pathlib import Path

import numpy as np

from npprompt import read_tensor, write_tensor
from npprompt.errors import BadMagicError

rng = np.random.default_rng(0)
workdir = Path(tempfile.mkdtemp(prefix="npt-demo-"))
path = workdir / "demo.npt"

matrix = rng.standard_normal((3, 4)).astype(np.float32)
write_tensor(path, matrix)
print(f"wrote {matrix.shape} float32 matrix to {path} ({path.stat().st_size} bytes)")

# the file layout: magic, version, header length, JSON header, raw payload
blob = path.read_bytes()
magic, version, header_len = struct.unpack("<4sII", blob[:12])
header = json.loads(blob[12:12 + header_len])
print(f"magic={magic!r} version={version} header={header}")
print(f"payload is {len(blob) - 12 - header_len} bytes of little-endian f32, row-major")

out = read_tensor(path)
print("round-trip bit-exact:", out.tobytes() == matrix.tobytes())

# flip the magic and the reader tells you exactly what is wrong
bad = workdir / "bad.npt"
bad.write_bytes(b"ZZZZ" + blob[4:])
try:
    read_tensor(bad)
except BadMagicError as exc:
    print("corrupted file rejected:", exc)
