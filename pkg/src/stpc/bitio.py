"""MSB-first bit packing and order-0 exponential Golomb codes."""

from __future__ import annotations


class OutOfBits(EOFError):
    """A read ran past the end of the bit buffer."""


def ue_length(value: int) -> int:
    """Code length in bits of the unsigned Golomb code for value >= 0."""
    return 2 * (value + 1).bit_length() - 1


def se_length(value: int) -> int:
    """Code length in bits of the signed Golomb code."""
    return ue_length(_signed_to_unsigned(value))


def _signed_to_unsigned(value: int) -> int:
    return 2 * value - 1 if value > 0 else -2 * value


def _unsigned_to_signed(value: int) -> int:
    return (value + 1) // 2 if value & 1 else -(value // 2)


class BitWriter:
    """Accumulates bits MSB-first; getvalue() zero-pads to a whole byte."""

    def __init__(self):
        self._done = bytearray()
        self._acc = 0
        self._nacc = 0

    @property
    def position(self) -> int:
        """Bits written so far."""
        return 8 * len(self._done) + self._nacc

    def write_bits(self, value: int, count: int) -> None:
        if count < 0 or value < 0 or value >> count:
            raise ValueError(f"value {value} does not fit in {count} bits")
        self._acc = (self._acc << count) | value
        self._nacc += count
        while self._nacc >= 8:
            self._nacc -= 8
            self._done.append((self._acc >> self._nacc) & 0xFF)
        self._acc &= (1 << self._nacc) - 1

    def write_bit(self, bit: int) -> None:
        self.write_bits(bit, 1)

    def write_ue(self, value: int) -> None:
        """value+1 in binary, preceded by bitlength-1 zeros."""
        if value < 0:
            raise ValueError("unsigned Golomb operand must be >= 0")
        self.write_bits(value + 1, 2 * (value + 1).bit_length() - 1)

    def write_se(self, value: int) -> None:
        self.write_ue(_signed_to_unsigned(value))

    def getvalue(self) -> bytes:
        out = bytearray(self._done)
        if self._nacc:
            out.append((self._acc << (8 - self._nacc)) & 0xFF)
        return bytes(out)


class BitReader:
    """Reads MSB-first bits from a bytes object."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._end = 8 * len(data)

    @property
    def position(self) -> int:
        return self._pos

    @property
    def remaining(self) -> int:
        return self._end - self._pos

    def read_bit(self) -> int:
        if self._pos >= self._end:
            raise OutOfBits("bit buffer exhausted")
        byte = self._data[self._pos >> 3]
        bit = (byte >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, count: int) -> int:
        if count < 0:
            raise ValueError("bit count must be >= 0")
        if self._pos + count > self._end:
            raise OutOfBits(f"needed {count} bits, {self.remaining} left")
        value = 0
        pos = self._pos
        data = self._data
        for _ in range(count):
            value = (value << 1) | ((data[pos >> 3] >> (7 - (pos & 7))) & 1)
            pos += 1
        self._pos = pos
        return value

    def read_ue(self) -> int:
        zeros = 0
        while self.read_bit() == 0:
            zeros += 1
        return ((1 << zeros) | self.read_bits(zeros)) - 1

    def read_se(self) -> int:
        return _unsigned_to_signed(self.read_ue())
