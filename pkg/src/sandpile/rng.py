"""Counter-based 64-bit random streams.

Everything random in the package is a pure function of a 64-bit seed and
integer counters, so replicas can be split off by index and replayed
bitwise, independently of scheduling. The same mixing function (the
SplitMix64 finalizer) is used by the compiled kernels; the two
implementations must stay bit-identical.

Derivation rules
----------------
``derive_seed(seed, i)``
    seed of the ``i``-th child stream (replicas, per-step streams).
``instruction_word(seed, x, j)``
    the raw 64-bit word behind instruction ``I^{x,j}``.
``below(word, n)``
    maps a word to ``{0, ..., n-1}`` by multiply-high (bias < n / 2**64).
"""

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
GAMMA_J = 0xD1B54A32D192ED03


def mix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed, index):
    """Seed of child stream ``index`` of ``seed``."""
    return mix64(mix64(seed) + (index + 1) * GAMMA)


def instruction_word(seed, x, j):
    return mix64(mix64(seed + (x + 1) * GAMMA) ^ (((j + 1) * GAMMA_J) & MASK64))


def below(word, n):
    return (word * n) >> 64


def to_unit(word):
    """Uniform float in [0, 1) from the top 53 bits."""
    return (word >> 11) * (1.0 / 9007199254740992.0)


class SplitMix64:
    """Sequential stream: the state advances by a fixed odd increment."""

    __slots__ = ("state",)

    def __init__(self, seed=0):
        self.state = int(seed) & MASK64

    def next64(self):
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def randbelow(self, n):
        return below(self.next64(), n)

    def random(self):
        return to_unit(self.next64())

    def spawn(self, index):
        return SplitMix64(derive_seed(self.state, index))

    def __repr__(self):
        return f"SplitMix64(state={self.state:#018x})"
