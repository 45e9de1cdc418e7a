"""`cmcfol <command> --config <path> [--out <dir>]`.

Exit codes: 0 success; 2 configuration, validation or I/O error; 3 convergence
or other numerical failure; 4 acceptance failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from ..errors import (
    AngleOutOfRange,
    CmcError,
    ConfigError,
    DegenerateLattice,
    DomainError,
    InadmissibleH,
    LinearSolveFailure,
    MarkedPointsCollide,
    NonConvergence,
    ExponentOverflow,
)
from ..flow import DualityMap, admissible_interval, flow_embedding, k_leaf_from_cmc
from ..foliation import gauss_bonnet_report, k_leaves, ordering_report, sweep
from ..geometry.metric import background_factor
from ..geometry.models import ModelGeometry
from ..landslide import landslide_check
from ..solver import (
    assemble_problem,
    build_embedding,
    gauss_residual,
    minimize,
    principal_curvatures,
    uniformize,
)
from .acceptance import AcceptanceContext, report_text, run_suite
from .config import DEFAULT_CONFIG, RunConfig, load_config, parse_config
from .io import read_meshdump, write_csv, write_meshdump, write_text

log = logging.getLogger("cmcfol")

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_ACCEPTANCE = 0, 2, 3, 4
COMMANDS = ("uniformize", "solve", "flow", "foliate", "duality-table", "landslide", "verify")
VALIDATION_ERRORS = (ConfigError, DegenerateLattice, AngleOutOfRange, MarkedPointsCollide, InadmissibleH, DomainError)
CONVERGENCE_ERRORS = (NonConvergence, LinearSolveFailure, ExponentOverflow)


def _tag(x: float) -> str:
    return f"{x:+.6g}".replace("+", "p").replace("-", "m").replace(".", "_")


class Runner:
    def __init__(self, cfg: RunConfig, out: Path, args):
        self.cfg, self.out, self.args = cfg, out, args
        self._h = None

    @property
    def surface(self):
        return self.h.surface

    @property
    def h(self):
        if self._h is None:
            s = self.cfg.surface.build()
            t0 = time.perf_counter()
            self._h = uniformize(s, background_factor(s, self.cfg.truncation), self.cfg.solver)
            log.info("uniformized %d vertices in %.2fs", s.n_vertices, time.perf_counter() - t0)
        return self._h

    def want(self, fmt):
        return fmt in self.cfg.formats

    def h_grid(self):
        if self.cfg.H is not None:
            return list(self.cfg.H)
        if self.cfg.K is not None:
            dmap = DualityMap(self.cfg.geometry, "k_to_cmc")
            return sorted(dmap.eval(K)[1] for K in self.cfg.K)
        raise ConfigError("H: this command needs an H (or K) grid")

    def solve(self, H):
        prob = assemble_problem(self.h, self.cfg.q, H, self.cfg.geometry)
        sol = minimize(prob, self.cfg.solver)
        return prob, sol, build_embedding(prob, sol)

    # -- commands -----------------------------------------------------------

    def uniformize(self):
        h = self.h
        s = h.surface
        target = -2 * np.pi * s.chi
        rows = [("vertices", s.n_vertices), ("faces", s.n_faces), ("chi", s.chi), ("area", h.area),
                ("predicted_area", target), ("max_abs_K_plus_1", float(np.max(np.abs(h.curvature + 1)))),
                ("gauss_bonnet_defect", h.gauss_bonnet_defect())]
        write_csv(self.out / "uniformize.csv", ["quantity", "value"], rows)
        if self.want("meshdump"):
            write_meshdump(self.out / "uniformized.mesh", s, {
                "phi0": h.singular, "v": h.smooth, "K": h.curvature, "mass": h.mass})
        return EXIT_OK

    def solve_cmd(self):
        rows = []
        for H in self.h_grid():
            prob, sol, data = self.solve(H)
            _, sup = gauss_residual(data)
            lam, mu, rep = principal_curvatures(data, raise_on_fail=False)
            rows.append((H, sol.iterations, sol.gradient_norm, sol.functional_value, data.area, sup,
                         rep.lam_min, rep.lam_max, rep.mu_min, rep.mu_max))
            write_text(self.out / f"convergence_H{_tag(H)}.csv", sol.log_csv)
            if self.want("meshdump"):
                write_meshdump(self.out / f"solution_H{_tag(H)}.mesh", data.surface,
                               {"u": data.u, "lambda": lam, "mu": mu, "H": np.full(len(lam), H)})
        write_csv(self.out / "solve.csv", ["H", "iterations", "gradient_norm", "F", "area", "gauss_residual_sup",
                                           "lambda_min", "lambda_max", "mu_min", "mu_max"], rows)
        return EXIT_OK

    def flow(self):
        rows = []
        for H in self.h_grid():
            _, _, data = self.solve(H)
            lo, hi = admissible_interval(data)
            times = self.cfg.t or (0.0, DualityMap(data.geometry, "cmc_to_k").signed_time(H))
            for t in times:
                if not lo < t < hi:
                    rows.append((H, t, lo, hi, False, None, None, None, None, None))
                    continue
                res = flow_embedding(data, t)
                rows.append((H, t, lo, hi, True, float(res.lambda_t.min()), float(res.lambda_t.max()),
                             float(res.mu_t.min()), float(res.mu_t.max()), res.curvature_mismatch()))
        write_csv(self.out / "flow.csv", ["H", "t", "t_min", "t_max", "admissible", "lambda_min", "lambda_max",
                                          "mu_min", "mu_max", "K_mismatch"], rows)
        return EXIT_OK

    def foliate(self):
        leaves = sweep(self.h, self.cfg.q, self.cfg.geometry, self.h_grid(), self.cfg.solver)
        rows = []
        for leaf in leaves:
            d = leaf.diagnostics
            rows.append((leaf.parameter, leaf.area, d.get("lambda_min"), d.get("lambda_max"), d.get("mu_min"),
                         d.get("mu_max"), d.get("gauss_residual_sup"), d.get("interval_lo"), d.get("interval_hi"),
                         leaf.error or ""))
            if self.want("meshdump") and leaf.ok:
                e = leaf.embedding
                write_meshdump(self.out / f"leaf_H{_tag(leaf.parameter)}.mesh", e.surface,
                               {"u": e.u, "lambda": e.lam, "mu": e.mu})
        write_csv(self.out / "foliation.csv", ["H", "area", "lambda_min", "lambda_max", "mu_min", "mu_max",
                                               "gauss_residual_sup", "interval_lo", "interval_hi", "error"], rows)
        gb_rows = []
        for k in k_leaves(leaves):
            if k.ok:
                r = gauss_bonnet_report(k)
                gb_rows.append((r.K, r.area, r.predicted, r.relative_error))
        write_csv(self.out / "gauss_bonnet.csv", ["K", "area", "predicted_area", "relative_error"], gb_rows)
        if len(leaves) >= 2 and all(x.ok for x in leaves):
            rep = ordering_report(leaves, raise_on_fail=False)
            write_csv(self.out / "ordering.csv", ["check", "passed"], [
                ("areas_monotone", rep.areas_monotone),
                ("times_monotone", "" if rep.times_monotone is None else rep.times_monotone),
                ("k_fields_ordered", rep.k_fields_ordered)])
        failed = [x for x in leaves if not x.ok]
        return EXIT_CONVERGENCE if failed else EXIT_OK

    def duality_table(self):
        g = self.cfg.geometry
        if self.args.geometry:
            g = ModelGeometry.parse(self.args.geometry)
        if self.args.h_grid is not None:
            direction, grid = "cmc_to_k", self.args.h_grid
        elif self.args.k_grid is not None:
            direction, grid = "k_to_cmc", self.args.k_grid
        elif self.args.geometry:
            direction, grid = "k_to_cmc", []
        elif self.cfg.K is not None:
            direction, grid = "k_to_cmc", list(self.cfg.K)
        elif self.cfg.H is not None:
            direction, grid = "cmc_to_k", list(self.cfg.H)
        else:
            direction, grid = "k_to_cmc", []
        if not grid:
            grid = self._default_grid(g, direction)
        dmap = DualityMap(g, direction)
        rows = [(x, *dmap.eval(x), dmap.signed_time(x)) for x in grid]
        if direction == "k_to_cmc":
            header = ["K", "d(K)" if g is not ModelGeometry.DS else "delta(K)",
                      "f(K)" if g is not ModelGeometry.DS else "xi(K)", "signed_time"]
            if g is ModelGeometry.MINKOWSKI:
                header = ["K", "d(H)", "H", "signed_time"]
        else:
            header = ["H", "d(H)", "f(H)", "signed_time"] if g is ModelGeometry.MINKOWSKI else ["H", "distance", "K", "signed_time"]
        write_csv(self.out / f"duality_{g.value}.csv", header, rows)
        return EXIT_OK

    def landslide(self):
        if self.cfg.geometry is not ModelGeometry.ADS:
            raise ConfigError("geometry: landslide needs geometry 'ads'")
        rows, face_rows = [], []
        if self.args.embedding:
            dump = read_meshdump(self.args.embedding)
            if dump.vertices.shape != self.surface.vertices.shape or np.max(np.abs(dump.vertices - self.surface.vertices)) > 1e-12:
                raise ConfigError("embedding: dump does not match the configured surface")
            H = float(dump.fields["H"][0])
            prob = assemble_problem(self.h, self.cfg.q, H, self.cfg.geometry)
            datas = [(H, build_embedding(prob, dump.fields["u"]))]
        else:
            datas = [(H, self.solve(H)[2]) for H in self.h_grid()]
        for H, data in datas:
            pair = landslide_check(data)
            expected = (H + 1j) / (H - 1j)
            rows.append((H, pair.alpha, pair.ratio.real, pair.ratio.imag, expected.real, expected.imag,
                         pair.ratio_deviation, pair.curvature_residual_l, pair.curvature_residual_r))
            ok = ~data.surface.cone_faces
            for f in np.nonzero(ok)[0]:
                face_rows.append((H, int(f), pair.ratio_faces[f].real, pair.ratio_faces[f].imag))
        write_csv(self.out / "landslide.csv", ["H", "alpha", "ratio_re", "ratio_im", "expected_re", "expected_im",
                                               "max_deviation", "K_residual_left", "K_residual_right"], rows)
        write_csv(self.out / "landslide_faces.csv", ["H", "face", "ratio_re", "ratio_im"], face_rows)
        return EXIT_OK

    @staticmethod
    def _default_grid(g, direction):
        offsets = np.geomspace(1e-2, 1e2, 9)
        if direction == "k_to_cmc":
            edge = -1.0 if g is ModelGeometry.ADS else 0.0
            return sorted(edge - offsets)
        if g is ModelGeometry.ADS:
            return list(np.linspace(-2.0, 2.0, 9))
        edge = -1.0 if g is ModelGeometry.DS else 0.0
        return sorted(edge - offsets)

    def verify(self):
        spec = self.cfg.surface
        ctx = AcceptanceContext(spec, self.cfg.truncation, self.cfg.solver)
        results = run_suite(ctx, echo=print)
        text = report_text(results)
        write_text(self.out / "acceptance.csv", text)
        return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmcfol", description="CMC and K-surface foliations of cone spacetimes over a marked torus.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration (defaults to the built-in torus with one pi/2 cone point)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--geometry", help="duality-table: minkowski, ads or ds")
    p.add_argument("--k-grid", nargs="*", type=float, default=None, help="duality-table: K values")
    p.add_argument("--h-grid", nargs="*", type=float, default=None, help="duality-table: H values")
    p.add_argument("--embedding", help="landslide: mesh dump written by `solve`")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else parse_config(DEFAULT_CONFIG)
        out = Path(args.out or cfg.output_dir)
        runner = Runner(cfg, out, args)
        method = {"solve": runner.solve_cmd, "duality-table": runner.duality_table}.get(
            args.command, getattr(runner, args.command, None))
        return method()
    except VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CONVERGENCE_ERRORS as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except CmcError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
