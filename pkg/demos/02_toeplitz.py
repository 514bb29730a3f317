"""Encode a bit sequence as a Toeplitz word and read it back."""

import random

from semidirect.toeplitz import decode, omega, psi_encode

rng = random.Random(1)
x = [rng.randint(0, 1) for _ in range(9)]
w = psi_encode(3, 1, x, (-40, 40))
print("x  =", "".join(map(str, x)))
print("w  =", "".join(map(str, w.symbols)))
# one omega step drops x_0 and leaves an encoding of the shifted sequence
print("w' =", "".join(map(str, omega(3, 0, w).symbols)))

res = decode(3, 1, w, 3)
print("decoded", res.prefix, "kchain", res.kchain)
