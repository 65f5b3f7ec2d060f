"""Anatomy of one interleaving step.

Expands a tiny preword through the circular operator, maps out the
spacer layout, parses the result back, and shows the reversal identity.
"""

from circsys.circular import apply_C, apply_Cr, parse_circular
from circsys.words import reverse, word


def main():
    stage = (2, 2, 1, 2)          # (k, l, p, q)
    pre = ("10", "01")
    w = apply_C(pre, stage)
    text = w.materialize()
    print(f"preword {pre} at stage (k, l, p, q) = {stage}")
    print(f"image ({w.length} symbols): {text}")

    dec = parse_circular(word(text), stage)
    print(f"\nspacer budget: {dec.boundary_count} of {w.length} symbols "
          f"(fraction {dec.boundary_fraction})")
    print(f"dynamical indices j = {dec.j}")
    print("sections:")
    k, l, p, q = stage
    sec = l * q * k
    for i in range(q):
        print(f"  i = {i}: {text[i * sec:(i + 1) * sec]!r}")

    print("\nround trip recovers the preword:",
          tuple(c.materialize() for c in dec.preword) == pre)

    lhs = reverse(w).materialize()
    rhs = apply_Cr(tuple(t[::-1] for t in pre), stage).materialize()
    print("\nreversing the image equals the reversed-operator image of")
    print("the reversed preword:", lhs == rhs)
    print(f"  {lhs}")


if __name__ == "__main__":
    main()
