#!/usr/bin/env python3
"""Rank-biased overlap between ranked lists.

RBO weights agreement at the top of two rankings far more than
agreement further down; the persistence parameter p controls how fast
that weight decays. The extrapolated variant gives identical lists a
similarity of exactly 1.
"""

from qvqpp import RboParams, rbo_ext

REFERENCE = ["d1", "d2", "d3", "d4", "d5", "d6"]

VARIANTS = {
    "identical": ["d1", "d2", "d3", "d4", "d5", "d6"],
    "top pair swapped": ["d2", "d1", "d3", "d4", "d5", "d6"],
    "bottom pair swapped": ["d1", "d2", "d3", "d4", "d6", "d5"],
    "tail replaced": ["d1", "d2", "d3", "x1", "x2", "x3"],
    "head replaced": ["x1", "x2", "x3", "d4", "d5", "d6"],
    "disjoint": ["x1", "x2", "x3", "x4", "x5", "x6"],
    "shorter prefix": ["d1", "d2", "d3"],
}


def main():
    print(f"reference ranking: {REFERENCE}\n")
    header = f"{'variant':22}" + "".join(f"  p={p:<5}" for p in (0.5, 0.9, 0.98))
    print(header)
    for name, ranking in VARIANTS.items():
        row = f"{name:22}"
        for p in (0.5, 0.9, 0.98):
            value = rbo_ext(REFERENCE, ranking, RboParams(p=p))
            row += f"  {value:6.4f}"
        print(row)

    print("\nNotes:")
    print(" - a swap near the top costs much more than the same swap near the bottom")
    print(" - small p concentrates all weight on the first ranks")
    print(" - a shorter list that agrees on its whole prefix extrapolates to 1.0")


if __name__ == "__main__":
    main()
