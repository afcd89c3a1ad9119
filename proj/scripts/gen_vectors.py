#!/usr/bin/env python3
"""Generate the RFC 7252 golden test vectors in data/rfc7252_vectors.txt.

Independent reference encoder written directly against RFC 7252 section 3.
Each output line is `<hex> | <summary>` where the summary is the canonical
message rendering used by the test suite.
"""

import os

TYPES = {"CON": 0, "NON": 1, "ACK": 2, "RST": 3}


def ext_part(x):
    if x <= 12:
        return x, b""
    if x <= 268:
        return 13, bytes([x - 13])
    return 14, (x - 269).to_bytes(2, "big")


def encode(typ, code_class, code_detail, mid, token=b"", options=(), payload=b""):
    assert len(token) <= 8
    out = bytearray()
    out.append((1 << 6) | (TYPES[typ] << 4) | len(token))
    out.append((code_class << 5) | code_detail)
    out += mid.to_bytes(2, "big")
    out += token
    prev = 0
    for num, val in options:
        assert num >= prev, "options must be sorted"
        dn, de = ext_part(num - prev)
        ln, le = ext_part(len(val))
        out.append((dn << 4) | ln)
        out += de + le + val
        prev = num
    if payload:
        out.append(0xFF)
        out += payload
    return bytes(out)


def summary(typ, code_class, code_detail, mid, token=b"", options=(), payload=b""):
    tok = token.hex() if token else "-"
    opts = ",".join("%d:%s" % (n, v.hex() if v else "-") for n, v in options) or "-"
    pay = payload.hex() if payload else "-"
    return "type=%s code=%d.%02d mid=0x%04X tok=%s opts=[%s] pay=%s" % (
        typ, code_class, code_detail, mid, tok, opts, pay)


URI_HOST, OBSERVE, URI_PATH, CONTENT_FORMAT, URI_QUERY = 3, 6, 11, 12, 15

VECTORS = [
    # (description-comment, args)
    ("empty ACK", ("ACK", 0, 0, 0x1234)),
    ("empty RST", ("RST", 0, 0, 0xBEEF)),
    ("empty CON ping", ("CON", 0, 0, 0x0001)),
    ("CON GET with one path segment",
     ("CON", 0, 1, 0x0001, b"T1", [(URI_PATH, b"temp")])),
    ("CON GET host + path + query",
     ("CON", 0, 1, 0x0A0B, b"\x01\x02\x03", [
         (URI_HOST, b"dev1.example"),
         (URI_PATH, b"s"), (URI_PATH, b"1"),
         (URI_QUERY, b"rt=temperature")])),
    ("query option first (delta 15 needs extended nibble)",
     ("NON", 0, 1, 0x0002, b"", [(URI_QUERY, b"a=b")])),
    ("observe register",
     ("CON", 0, 1, 0x0100, b"OB", [
         (OBSERVE, b""), (URI_PATH, b"motion")])),
    ("observe deregister",
     ("CON", 0, 1, 0x0101, b"OB", [
         (OBSERVE, b"\x01"), (URI_PATH, b"motion")])),
    ("long Uri-Host forces extended option length",
     ("CON", 0, 1, 0x0042, b"Q", [
         (URI_HOST, b"sensors.west.building6"), (URI_PATH, b"temp")])),
    ("POST registration with payload",
     ("CON", 0, 2, 0x2001, b"rg", [
         (URI_HOST, b"rd"), (URI_PATH, b"rd"),
         (CONTENT_FORMAT, b"\x28"), (URI_QUERY, b"ep=dev1")],
      b'</temp>;rt="temperature"')),
    ("piggybacked 2.05 content",
     ("ACK", 2, 5, 0x0001, b"T1", [(CONTENT_FORMAT, b"\x00")], b"22.5C")),
    ("separate 2.05 content, non-confirmable",
     ("NON", 2, 5, 0x0000, b"T1", [], b"22.5C")),
    ("observe notification, two-byte sequence number",
     ("NON", 2, 5, 0x0000, b"OB", [(OBSERVE, b"\x01\x00")], b"off")),
    ("2.01 created", ("ACK", 2, 1, 0x2001, b"rg")),
    ("4.04 not found", ("ACK", 4, 4, 0x0007, b"T9")),
    ("5.03 service unavailable", ("NON", 5, 3, 0x0000, b"zz")),
    ("eight byte token",
     ("CON", 0, 1, 0xFFFF, b"\x00\x01\x02\x03\x04\x05\x06\x07",
      [(URI_PATH, b"t")])),
    ("zero length path segment between segments",
     ("CON", 0, 1, 0x0033, b"x", [
         (URI_PATH, b"a"), (URI_PATH, b""), (URI_PATH, b"b")])),
    ("repeated query options",
     ("NON", 0, 1, 0x0044, b"gq", [
         (URI_HOST, b"rd"), (URI_PATH, b"rd-lookup"),
         (URI_QUERY, b"g=floor6"), (URI_QUERY, b"rt=temperature")])),
]


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    path = os.path.join(here, "..", "data", "rfc7252_vectors.txt")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        f.write("# RFC 7252 golden vectors: <hex> | <canonical summary>\n")
        f.write("# generated by scripts/gen_vectors.py; do not edit by hand\n")
        for desc, args in VECTORS:
            f.write("# %s\n" % desc)
            f.write("%s | %s\n" % (encode(*args).hex(), summary(*args)))
    print("wrote", path)


if __name__ == "__main__":
    main()
