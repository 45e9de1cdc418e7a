"""Refinement study on the torus with one pi/2 cone point.

For each base resolution: uniformized area, sup Gauss residual of the
CMC leaf (q = c, Minkowski H), K-leaf area error and Codazzi residual of b_q.
Writes a CSV to stdout or --out.
"""
import argparse
import sys

import numpy as np

from cmcfol import (
    Grading,
    background_factor,
    build_torus_mesh,
    codazzi_residual,
    gauss_bonnet_report,
    gauss_residual,
    k_leaf_from_cmc,
    operator_from_quaddiff,
    quad_diff_field,
    solve_cmc,
    uniformize,
)
from cmcfol.cli_io.io import csv_text, write_text


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--levels", nargs="*", type=int, default=[16, 32, 64])
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--H", type=float, default=-1.0)
    p.add_argument("--out")
    args = p.parse_args(argv)

    rows = []
    for n in args.levels:
        s = build_torus_mesh(1j, [((0.5, 0.5), np.pi / 2)], Grading(4), n)
        h = uniformize(s, background_factor(s))
        data = solve_cmc(h, args.c, args.H, "minkowski")
        gb = gauss_bonnet_report(k_leaf_from_cmc(data))
        cod = codazzi_residual(h, operator_from_quaddiff(h, quad_diff_field(s, args.c)))
        rows.append((n, s.n_vertices, h.area, abs(h.area + 2 * np.pi * s.chi), gauss_residual(data)[1],
                     gb.relative_error, cod))
    text = csv_text(["n", "vertices", "area", "area_error", "gauss_residual_sup", "k_leaf_area_error",
                     "codazzi_residual"], rows)
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
