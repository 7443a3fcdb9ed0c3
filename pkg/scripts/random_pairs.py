"""Sweep seeded random pairs (A, B) of infinite-index subgroups through olshanskii.

Prints one line per pair and a summary of strategies, failures and timings.
"""

from __future__ import annotations

import argparse
import random
import time
from collections import Counter

from sgf.constructions import olshanskii, verify_olshanskii
from sgf.errors import SGFError
from sgf.sampling import random_subgroup


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--max-gens", type=int, default=3)
    ap.add_argument("--max-length", type=int, default=5)
    ap.add_argument("--quiet", action="store_true")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    strategies: Counter[str] = Counter()
    failures = []
    start = time.perf_counter()
    for i in range(args.pairs):
        k = 2 if i % 2 == 0 else 3
        A = random_subgroup(k, rng, args.max_gens, args.max_length)
        B = random_subgroup(k, rng, args.max_gens, args.max_length)
        t = time.perf_counter()
        try:
            cert = olshanskii(A, B, seed=i)
            ok, _ = verify_olshanskii(cert)
            status = f"{cert.strategy:7s} |K|={cert.quotient.order_of_image} [F:NA]={cert.NA_cover.index} " \
                     f"[B:B0]={cert.index_B_B0} {'verified' if ok else 'REJECTED'}"
            strategies[cert.strategy] += 1
            if not ok:
                failures.append(i)
        except SGFError as exc:
            status = f"FAILED {exc.code}: {exc}"
            failures.append(i)
        if not args.quiet:
            gens = lambda H: ",".join(map(str, H.basis))
            print(f"{i:4d} F{k} A=<{gens(A)}> B=<{gens(B)}> {status} ({time.perf_counter() - t:.2f}s)")
    total = time.perf_counter() - start
    print(f"pairs {args.pairs}, failures {len(failures)} {failures}, strategies {dict(strategies)}, {total:.1f}s")


if __name__ == "__main__":
    main()
