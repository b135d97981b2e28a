"""Order-3 PPM (escape method C, full exclusions) over a 32-bit range coder.

The range coder is the carry-propagating byte-wise kind: ``low`` keeps one
bit of headroom above 32 bits, pending 0xFF bytes are held back in
``cache``/``cache_size`` until a carry either resolves them or not.

Payload layout: one mode byte, then the coded bytes. Mode 0 is PPM: the
symbols followed by a fixed 16-bit check value. Mode 1 stores the input
verbatim and is chosen whenever PPM would expand it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import CorruptStream

MAX_ORDER = 3
MAX_NODES = 1 << 22
MODE_PPM = 0
MODE_STORED = 1

_TOP = 1 << 24
_MAX_TOTAL = 1 << 16
# coded after the last symbol; the decoder must land on it exactly
_CHECK = 0xA55A
_EMPTY = -1


@dataclass(frozen=True)
class Bitstream:
    bytes: bytes
    uncompressed_len: int


def _node_capacity(n: int) -> int:
    # every coded symbol adds at most MAX_ORDER + 1 nodes
    return min(MAX_NODES, (MAX_ORDER + 1) * n + 16)


# -- model ------------------------------------------------------------------

@numba.njit(cache=True, inline="always")
def _ctx_key(order, hist):
    if order == 0:
        return np.int64(0)
    return (np.int64(order) << 24) | (hist & ((np.int64(1) << (8 * order)) - 1))


@numba.njit(cache=True)
def _find(keys, key, create, ctx_of_slot, n_ctx, head, total, distinct):
    mask = keys.shape[0] - 1
    slot = ((key * np.int64(0x5851F42D4C957F2D)) >> 20) & mask
    while True:
        k = keys[slot]
        if k == key:
            return ctx_of_slot[slot]
        if k == _EMPTY:
            if not create:
                return -1
            c = n_ctx[0]
            n_ctx[0] += 1
            keys[slot] = key
            ctx_of_slot[slot] = c
            head[c] = -1
            total[c] = 0
            distinct[c] = 0
            return c
        slot = (slot + 1) & mask


@numba.njit(cache=True)
def _reset(keys, n_ctx, n_nodes):
    keys[:] = _EMPTY
    n_ctx[0] = 0
    n_nodes[0] = 0


@numba.njit(cache=True)
def _update(sym, found, top, hist, keys, ctx_of_slot, n_ctx, head, total, distinct, nsym, ncnt, nnext, n_nodes):
    lo = found if found > 0 else 0
    for order in range(lo, top + 1):
        c = _find(keys, _ctx_key(order, hist), True, ctx_of_slot, n_ctx, head, total, distinct)
        e = head[c]
        last = -1
        while e >= 0 and nsym[e] != sym:
            last = e
            e = nnext[e]
        if e >= 0:
            ncnt[e] += 1
        else:
            e = n_nodes[0]
            n_nodes[0] += 1
            nsym[e] = sym
            ncnt[e] = 1
            nnext[e] = -1
            if last >= 0:
                nnext[last] = e
            else:
                head[c] = e
            distinct[c] += 1
        total[c] += 1
        if total[c] + distinct[c] >= _MAX_TOTAL:
            t = 0
            e = head[c]
            while e >= 0:
                ncnt[e] = (ncnt[e] + 1) >> 1
                t += ncnt[e]
                e = nnext[e]
            total[c] = t


def _alloc(n):
    cap = _node_capacity(n)
    size = 1
    while size < 2 * cap:
        size <<= 1
    keys = np.full(size, _EMPTY, dtype=np.int64)
    ctx_of_slot = np.zeros(size, dtype=np.int32)
    head = np.zeros(cap, dtype=np.int32)
    total = np.zeros(cap, dtype=np.int32)
    distinct = np.zeros(cap, dtype=np.int32)
    nsym = np.zeros(cap, dtype=np.int32)
    ncnt = np.zeros(cap, dtype=np.int32)
    nnext = np.zeros(cap, dtype=np.int32)
    return keys, ctx_of_slot, head, total, distinct, nsym, ncnt, nnext, cap


# -- range coder ------------------------------------------------------------

@numba.njit(cache=True)
def _put(out, pos, b):
    if pos >= out.shape[0]:
        bigger = np.empty(out.shape[0] * 2 + 16, dtype=np.uint8)
        bigger[: out.shape[0]] = out
        out = bigger
    out[pos] = b
    return out


@numba.njit(cache=True)
def _shift_low(st, out):
    # st = [low, range, cache, cache_size, outpos]
    low = st[0]
    if low < 0xFF000000 or low >= (np.int64(1) << 32):
        carry = low >> 32
        temp = st[2]
        while True:
            out = _put(out, st[4], np.uint8((temp + carry) & 0xFF))
            st[4] += 1
            temp = 0xFF
            st[3] -= 1
            if st[3] == 0:
                break
        st[2] = (low >> 24) & 0xFF
    st[3] += 1
    st[0] = (low & 0x00FFFFFF) << 8
    return out


@numba.njit(cache=True)
def _encode(st, out, cum, freq, tot):
    r = st[1] // tot
    st[0] += r * cum
    st[1] = r * freq
    while st[1] < _TOP:
        st[1] <<= 8
        out = _shift_low(st, out)
    return out


@numba.njit(cache=True)
def _next_byte(data, dst):
    # dst = [code, range, inpos, r]; reading past the end yields zeros
    p = dst[2]
    dst[2] = p + 1
    if p < data.shape[0]:
        return np.int64(data[p])
    return np.int64(0)


@numba.njit(cache=True)
def _decode_target(dst, tot):
    r = dst[1] // tot
    dst[3] = r
    return dst[0] // r


@numba.njit(cache=True)
def _decode_update(data, dst, cum, freq):
    r = dst[3]
    dst[0] -= r * cum
    dst[1] = r * freq
    while dst[1] < _TOP:
        dst[0] = ((dst[0] << 8) | _next_byte(data, dst)) & 0xFFFFFFFF
        dst[1] <<= 8


# -- PPM encode/decode ------------------------------------------------------

@numba.njit(cache=True)
def _ppm_encode(data, keys, ctx_of_slot, head, total, distinct, nsym, ncnt, nnext, cap):
    n = data.shape[0]
    out = np.empty(n + n // 8 + 64, dtype=np.uint8)
    st = np.zeros(5, dtype=np.int64)
    st[1] = 0xFFFFFFFF
    st[3] = 1
    n_ctx = np.zeros(1, dtype=np.int64)
    n_nodes = np.zeros(1, dtype=np.int64)
    excl = np.zeros(256, dtype=np.int64)
    hist = np.int64(0)
    seen = 0
    for i in range(n):
        if n_nodes[0] + MAX_ORDER + 1 > cap:
            _reset(keys, n_ctx, n_nodes)
            seen = 0
        sym = np.int64(data[i])
        stamp = i + 1
        top = seen if seen < MAX_ORDER else MAX_ORDER
        found = -1
        for order in range(top, -1, -1):
            c = _find(keys, _ctx_key(order, hist), False, ctx_of_slot, n_ctx, head, total, distinct)
            if c < 0:
                continue
            cum = 0
            freq = 0
            tot = 0
            d = 0
            e = head[c]
            while e >= 0:
                s = nsym[e]
                if excl[s] != stamp:
                    if s == sym:
                        cum = tot
                        freq = ncnt[e]
                    tot += ncnt[e]
                    d += 1
                e = nnext[e]
            if d == 0:
                continue
            if freq > 0:
                out = _encode(st, out, cum, freq, tot + d)
                found = order
                break
            out = _encode(st, out, tot, d, tot + d)
            e = head[c]
            while e >= 0:
                excl[nsym[e]] = stamp
                e = nnext[e]
        if found < 0:
            cum = 0
            left = 0
            for s in range(256):
                if excl[s] != stamp:
                    if s < sym:
                        cum += 1
                    left += 1
            out = _encode(st, out, cum, 1, left)
        _update(sym, found, top, hist, keys, ctx_of_slot, n_ctx, head, total, distinct, nsym, ncnt, nnext, n_nodes)
        hist = ((hist << 8) | sym) & 0xFFFFFF
        seen += 1
    out = _encode(st, out, _CHECK, 1, _MAX_TOTAL)
    for _ in range(5):
        out = _shift_low(st, out)
    return out[: st[4]]


@numba.njit(cache=True)
def _ppm_decode(data, n, keys, ctx_of_slot, head, total, distinct, nsym, ncnt, nnext, cap):
    """Returns (output, status); status 0 ok, 1 desync, 2 overrun."""
    out = np.empty(n, dtype=np.uint8)
    # the carry cache makes the first coded byte always zero
    if data.shape[0] < 5 or data[0] != 0:
        return out[:0], 1
    dst = np.zeros(4, dtype=np.int64)
    dst[1] = 0xFFFFFFFF
    for _ in range(5):
        dst[0] = ((dst[0] << 8) | _next_byte(data, dst)) & 0xFFFFFFFF
    n_ctx = np.zeros(1, dtype=np.int64)
    n_nodes = np.zeros(1, dtype=np.int64)
    excl = np.zeros(256, dtype=np.int64)
    hist = np.int64(0)
    seen = 0
    limit = data.shape[0] + 8
    for i in range(n):
        if dst[2] > limit:
            return out[:i], 2
        if n_nodes[0] + MAX_ORDER + 1 > cap:
            _reset(keys, n_ctx, n_nodes)
            seen = 0
        stamp = i + 1
        top = seen if seen < MAX_ORDER else MAX_ORDER
        found = -1
        sym = np.int64(-1)
        for order in range(top, -1, -1):
            c = _find(keys, _ctx_key(order, hist), False, ctx_of_slot, n_ctx, head, total, distinct)
            if c < 0:
                continue
            tot = 0
            d = 0
            e = head[c]
            while e >= 0:
                if excl[nsym[e]] != stamp:
                    tot += ncnt[e]
                    d += 1
                e = nnext[e]
            if d == 0:
                continue
            target = _decode_target(dst, tot + d)
            if target < 0 or target >= tot + d:
                return out[:i], 1
            if target < tot:
                cum = 0
                e = head[c]
                while e >= 0:
                    s = nsym[e]
                    if excl[s] != stamp:
                        if cum + ncnt[e] > target:
                            break
                        cum += ncnt[e]
                    e = nnext[e]
                sym = nsym[e]
                _decode_update(data, dst, cum, ncnt[e])
                found = order
                break
            _decode_update(data, dst, tot, d)
            e = head[c]
            while e >= 0:
                excl[nsym[e]] = stamp
                e = nnext[e]
        if found < 0:
            left = 0
            for s in range(256):
                if excl[s] != stamp:
                    left += 1
            if left == 0:
                return out[:i], 1
            target = _decode_target(dst, left)
            if target < 0 or target >= left:
                return out[:i], 1
            cum = 0
            for s in range(256):
                if excl[s] != stamp:
                    if cum == target:
                        sym = s
                        break
                    cum += 1
            _decode_update(data, dst, target, 1)
        out[i] = sym
        _update(sym, found, top, hist, keys, ctx_of_slot, n_ctx, head, total, distinct, nsym, ncnt, nnext, n_nodes)
        hist = ((hist << 8) | sym) & 0xFFFFFF
        seen += 1
    if _decode_target(dst, _MAX_TOTAL) != _CHECK:
        return out, 1
    _decode_update(data, dst, _CHECK, 1)
    # the encoder flushes ``low`` verbatim, so a clean stream leaves code == 0
    if dst[2] != data.shape[0] or dst[0] != 0:
        return out, 1
    return out, 0


def ppm_compress(s: bytes) -> Bitstream:
    data = np.frombuffer(bytes(s), dtype=np.uint8)
    n = len(data)
    coded = _ppm_encode(data, *_alloc(n)).tobytes() if n else b""
    if n == 0 or len(coded) >= n:
        return Bitstream(bytes([MODE_STORED]) + data.tobytes(), n)
    return Bitstream(bytes([MODE_PPM]) + coded, n)


def ppm_decompress(b: Bitstream) -> bytes:
    payload = b.bytes
    n = b.uncompressed_len
    if not payload:
        raise CorruptStream("empty payload has no mode byte")
    mode, body = payload[0], payload[1:]
    if mode == MODE_STORED:
        if len(body) != n:
            raise CorruptStream(f"stored block holds {len(body)} bytes, header says {n}")
        return bytes(body)
    if mode != MODE_PPM:
        raise CorruptStream(f"unknown payload mode {mode}")
    out, status = _ppm_decode(np.frombuffer(body, dtype=np.uint8), n, *_alloc(n))
    if status:
        raise CorruptStream("range decoder lost sync with the payload" if status == 1 else "payload exhausted early")
    return out.tobytes()
