"""Bit helpers shared by the prefix types and the lookup schemes."""

MASK64 = (1 << 64) - 1

# splitmix64 constants
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB


def prefix_mask(length: int, width: int) -> int:
    """Return a width-bit mask with the leftmost ``length`` bits set.

    Examples:
        >>> bin(prefix_mask(3, 8))
        '0b11100000'
        >>> prefix_mask(0, 32)
        0
    """
    return ((1 << length) - 1) << (width - length)


def top_bits(value: int, count: int, width: int) -> int:
    """Return the leftmost ``count`` bits of a width-bit value as an integer."""
    return value >> (width - count)


def bit_string(value: int, length: int) -> str:
    """Render the low ``length`` bits of value as a 0/1 string (empty for length 0)."""
    if length == 0:
        return ""
    return format(value, f"0{length}b")


def ceil_log2(n: int) -> int:
    """Smallest x with 2**x >= n; 0 for n <= 1.

    Examples:
        >>> ceil_log2(1), ceil_log2(2), ceil_log2(5)
        (0, 1, 3)
    """
    if n <= 1:
        return 0
    return (n - 1).bit_length()


def mix64(value: int, seed: int = 0) -> int:
    """splitmix64 finalizer over ``value`` perturbed by ``seed``.

    Used as the hash family of the d-left table: every seed gives an
    independent-looking 64-bit hash of the same key.
    """
    z = (value + (seed + 1) * _GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX_1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_2) & MASK64
    return z ^ (z >> 31)
