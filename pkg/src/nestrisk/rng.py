"""Counter-based random streams.

Every random quantity in the package is a pure function of
``(seed, stream_id, position)``: the seed is the Philox key, the stream id
and the block position form the 128-bit Philox counter.  A stream can
therefore be evaluated in any order, in any chunking and on any number of
threads and still produce the same values.

Stream layout used by the nested engine:

* stream 0 -- outer scenario draws (parameters from the belief distribution)
* stream ``i + 1`` -- inner draws of outer scenario ``i``

Each 64-bit output word is one "position".  A uniform, a normal (inverse
CDF) and an exponential each consume exactly one position; gamma variates
consume a data-dependent number of positions (rejection sampling).
"""
from __future__ import annotations

import numba as nb
import numpy as np

__all__ = [
    "RngStream",
    "derive_seed",
    "philox4x32",
]

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_M53 = 2.0 ** -53


@nb.njit(cache=True, inline="always")
def _philox_block(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@nb.njit(cache=True, inline="always")
def _word(seed, stream, pos):
    """64-bit output word at ``pos`` of ``(seed, stream)``."""
    block = pos >> _ONE
    x0, x1, x2, x3 = _philox_block(
        block & _MASK32, block >> _S32, stream & _MASK32, stream >> _S32,
        seed & _MASK32, seed >> _S32,
    )
    if pos & _ONE:
        return (x3 << _S32) | x2
    return (x1 << _S32) | x0


@nb.njit(cache=True, inline="always")
def _to_unit(w):
    # midpoint of a 53-bit grid cell: strictly inside (0, 1)
    return (np.float64(w >> _S11) + 0.5) * _TWO_M53


@nb.njit(cache=True)
def _ndtri(p):
    # Wichura (1988), algorithm AS241 PPND16; relative accuracy ~1e-16
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                    + 67265.770927008700853) * r + 45921.953931549871457) * r
                  + 13731.693765509461125) * r + 1971.5909503065514427) * r
                + 133.14166789178437745) * r + 3.387132872796366608)
        den = (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                    + 39307.89580009271061) * r + 21213.794301586595867) * r
                  + 5394.1960214247511077) * r + 687.1870074920579083) * r
                + 42.313330701600911252) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = np.sqrt(-np.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
                    + 0.24178072517745061177) * r + 1.27045825245236838258) * r
                  + 3.64784832476320460504) * r + 5.7694972214606914055) * r
                + 4.6303378461565452959) * r + 1.42343711074968357734)
        den = (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966) * r + 0.14810397642748007459) * r
                  + 0.68976733498510000455) * r + 1.6763848301838038494) * r
                + 2.05319162663775882187) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 0.0012426609473880784386) * r + 0.026532189526576123093) * r
                  + 0.29656057182850489123) * r + 1.7848265399172913358) * r
                + 5.4637849111641143699) * r + 6.6579046435011037772)
        den = (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r
                  + 0.0148753612908506148525) * r + 0.13692988092273580531) * r
                + 0.59983220655588793769) * r + 1.0)
    x = num / den
    return -x if q < 0.0 else x


@nb.njit(cache=True, inline="always")
def _uniform_at(seed, stream, pos):
    return _to_unit(_word(seed, stream, pos))


@nb.njit(cache=True, inline="always")
def _normal_at(seed, stream, pos):
    return _ndtri(_to_unit(_word(seed, stream, pos)))


@nb.njit(cache=True, inline="always")
def _exponential_at(seed, stream, pos):
    return -np.log(_to_unit(_word(seed, stream, pos)))


@nb.njit(cache=True)
def _gamma_at(seed, stream, pos, shape):
    """Unit-rate gamma variate (Marsaglia-Tsang); returns (value, next_pos)."""
    boost = 1.0
    a = shape
    if shape < 1.0:
        # Gamma(a) = Gamma(a + 1) * U^(1/a)
        boost = _uniform_at(seed, stream, pos) ** (1.0 / shape)
        pos += _ONE
        a = shape + 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    while True:
        x = _normal_at(seed, stream, pos)
        pos += _ONE
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _uniform_at(seed, stream, pos)
        pos += _ONE
        if np.log(u) < 0.5 * x * x + d - d * v + d * np.log(v):
            return d * v * boost, pos


@nb.njit(cache=True, nogil=True)
def _fill_uniform(seed, stream, start, out):
    for j in range(out.shape[0]):
        out[j] = _to_unit(_word(seed, stream, start + np.uint64(j)))


@nb.njit(cache=True, nogil=True)
def _fill_normal(seed, stream, start, out):
    for j in range(out.shape[0]):
        out[j] = _ndtri(_to_unit(_word(seed, stream, start + np.uint64(j))))


@nb.njit(cache=True, nogil=True)
def _fill_exponential(seed, stream, start, out):
    for j in range(out.shape[0]):
        out[j] = -np.log(_to_unit(_word(seed, stream, start + np.uint64(j))))


_FILLERS = (_fill_uniform, _fill_normal, _fill_exponential)


@nb.njit(cache=True, nogil=True)
def _fill_raw(seed, stream, start, out):
    for j in range(out.shape[0]):
        out[j] = _word(seed, stream, start + np.uint64(j))


@nb.njit(cache=True, nogil=True)
def _fill_gamma(seed, stream, start, shape, out):
    pos = start
    for j in range(out.shape[0]):
        g, pos = _gamma_at(seed, stream, pos, shape)
        out[j] = g
    return pos


def philox4x32(counter, key):
    """Raw Philox4x32-10 block function.

    Parameters
    ----------
    counter : sequence of 4 ints (32-bit words)
    key : sequence of 2 ints (32-bit words)

    Returns
    -------
    tuple of 4 ints
    """
    c = [np.uint64(int(x) & 0xFFFFFFFF) for x in counter]
    k = [np.uint64(int(x) & 0xFFFFFFFF) for x in key]
    return tuple(int(x) for x in _philox_block(c[0], c[1], c[2], c[3], k[0], k[1]))


def derive_seed(seed: int, *path: int) -> int:
    """Child seed of ``seed`` along an integer ``path`` (hash via SeedSequence)."""
    entropy = [int(seed)] + [int(p) for p in path]
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class RngStream:
    """A positioned cursor on the Philox stream ``(seed, stream_id)``.

    The method names follow :class:`numpy.random.Generator`.  Each call
    consumes positions from the cursor, so two cursors created with the same
    ``(seed, stream_id)`` replay the same values.
    """

    __slots__ = ("seed", "stream_id", "position")

    def __init__(self, seed: int, stream_id: int = 0, position: int = 0):
        seed, stream_id, position = int(seed), int(stream_id), int(position)
        for name, v in (("seed", seed), ("stream_id", stream_id), ("position", position)):
            if not 0 <= v < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")
        self.seed = seed
        self.stream_id = stream_id
        self.position = position

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, position={self.position})"

    def substream(self, stream_id: int) -> "RngStream":
        """Fresh cursor on another stream of the same seed."""
        return RngStream(self.seed, stream_id)

    def _take(self, size, kind):
        out = np.empty(int(size), dtype=np.float64)
        _FILLERS[kind](np.uint64(self.seed), np.uint64(self.stream_id),
                       np.uint64(self.position), out)
        self.position += out.shape[0]
        return out

    def raw(self, size: int) -> np.ndarray:
        out = np.empty(int(size), dtype=np.uint64)
        _fill_raw(np.uint64(self.seed), np.uint64(self.stream_id),
                  np.uint64(self.position), out)
        self.position += out.shape[0]
        return out

    def random(self, size: int) -> np.ndarray:
        return self._take(size, 0)

    def standard_normal(self, size: int) -> np.ndarray:
        return self._take(size, 1)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size: int = 1) -> np.ndarray:
        return loc + scale * self._take(size, 1)

    def standard_exponential(self, size: int) -> np.ndarray:
        return self._take(size, 2)

    def exponential(self, rate: float, size: int) -> np.ndarray:
        """Exponential variates with the given *rate* (mean ``1/rate``)."""
        return self._take(size, 2) / rate

    def gamma(self, shape: float, rate: float = 1.0, size: int = 1) -> np.ndarray:
        if shape <= 0 or rate <= 0:
            raise ValueError("gamma shape and rate must be positive")
        out = np.empty(int(size), dtype=np.float64)
        end = _fill_gamma(np.uint64(self.seed), np.uint64(self.stream_id),
                          np.uint64(self.position), float(shape), out)
        self.position = int(end)
        return out / rate
