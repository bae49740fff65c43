"""Counter-based random numbers for the simulator.

Every draw is a pure function of (seed, stream, cycle, user, channel):

    key_s  = mix(seed + s * GAMMA)               one per stream
    base   = mix(key_s ^ cycle)                  one per (stream, cycle)
    h      = mix(base ^ (user << 16 | channel))
    u      = (h >> 11) * 2**-53                  uniform on [0, 1)

where ``mix`` is the SplitMix64 finaliser. Cycles can therefore be drawn in
any order or in parallel and every backend sees the same numbers.

Streams: 0 availability, 1 sensing, 2 exclusive-channel choice,
3 shared-channel choice, 4 backoff (the last three use channel 0).
"""
import numpy as np

from ._backend import jit

STREAM_AVAIL, STREAM_SENSE, STREAM_EXCL, STREAM_SHARED, STREAM_BACKOFF = range(5)
NUM_STREAMS = 5

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
INV53 = 1.0 / 9007199254740992.0

_G = np.uint64(GAMMA)
_C1 = np.uint64(_M1)
_C2 = np.uint64(_M2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


def mix_int(x: int) -> int:
    z = (x + GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def uniform_int(h: int) -> float:
    return (h >> 11) * INV53


def stream_keys(seed: int) -> np.ndarray:
    seed &= MASK64
    return np.array([mix_int((seed + s * GAMMA) & MASK64) for s in range(NUM_STREAMS)], dtype=np.uint64)


def draw(seed, stream, cycle, user, channel=0) -> float:
    """Scalar reference draw; the vectorised and compiled paths must agree with it."""
    key = int(stream_keys(seed)[stream])
    base = mix_int(key ^ (cycle & MASK64))
    return uniform_int(mix_int(base ^ ((user << 16) | channel)))


@jit
def mix_u64(z):
    z = z + _G
    z = (z ^ (z >> _S30)) * _C1
    z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


@jit
def uniform_u64(h):
    return float(h >> _S11) * INV53


def mix_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = z + _G
        z = (z ^ (z >> _S30)) * _C1
        z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


def uniform_array(h: np.ndarray) -> np.ndarray:
    return (h >> _S11).astype(np.float64) * INV53
