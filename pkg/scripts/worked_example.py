"""Build and verify the certificate for A = <a>, B = <b> in F_2, printing every check."""

from __future__ import annotations

import argparse
import json

from sgf.constructions import olshanskii, verify_olshanskii
from sgf.graph import from_generators
from sgf.permgroup import format_cycles


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="print the certificate JSON instead")
    args = ap.parse_args()

    cert = olshanskii(from_generators(["a"], 2), from_generators(["b"], 2), seed=args.seed)
    if args.json:
        print(json.dumps(cert.to_json(), indent=2))
        return
    q = cert.quotient
    print(f"quotient: a -> {format_cycles(q.perms[0])}, b -> {format_cycles(q.perms[1])}, |K| = {q.order_of_image}")
    print(f"r = {cert.r}, epsilon = {cert.epsilon}, [F:NA] = {cert.NA_cover.index}")
    print(f"B0 = <{', '.join(map(str, cert.B0.basis))}>, [B:B0] = {cert.index_B_B0}")
    print(f"C = <{', '.join(map(str, cert.C.basis))}>, deficiency witness {cert.deficiency_witness}")
    ok, report = verify_olshanskii(cert)
    for c in report:
        print(f"  {'ok ' if c['ok'] else 'BAD'} {c['check']}: {c['lhs']} {c['relation']} {c['rhs']}")
    print("verified" if ok else "NOT verified")


if __name__ == "__main__":
    main()
