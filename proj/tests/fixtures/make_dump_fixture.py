# Copyright 2026 The compfuse Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Emits the two-record dump used by test_encoders as a C string of hex."""

import struct

records = [
    ("a", [1, 1], [[1.0, -2.0, 0.5], [0.25, 3.0, -1.5]]),
    ("clip-7", [1, 0, 1], [[0.0, 1.0, 2.0], [-0.125, 4.0, 8.0], [9.5, -7.25, 6.0]]),
]

out = b"CRDUMP01" + struct.pack("<III", 1, 3, len(records))
for rid, mask, rows in records:
    raw = rid.encode("utf-8")
    out += struct.pack("<I", len(raw)) + raw
    out += struct.pack("<I", len(rows))
    bits = bytearray((len(mask) + 7) // 8)
    for i, m in enumerate(mask):
        if m:
            bits[i // 8] |= 1 << (i % 8)
    out += bytes(bits)
    for row in rows:
        out += struct.pack("<" + "f" * len(row), *row)

print(out.hex())
