"""Experiment dispatch and result persistence behind the ``sim`` command."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig

TOL = 1e-9
COMMUTE_TOL = 1e-10


@dataclass
class ResultSink:
    """JSON-lines records, a CSV summary and a manifest for one run."""

    config: ExperimentConfig
    records: list = field(default_factory=list)
    csv_header: list = field(default_factory=list)
    csv_rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    wall_time: float = 0.0

    def record(self, **row) -> None:
        row.setdefault("seed", self.config.seed)
        row.setdefault("backend", self.config.backend)
        self.records.append(row)

    def check(self, name: str, ok: bool) -> None:
        if not ok:
            self.failures.append(name)

    def jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, default=_json_default) + "\n"
                       for r in self.records)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header)
        w.writerows(self.csv_rows)
        return buf.getvalue()

    def manifest(self) -> dict:
        return {"config": self.config.echo(), "version": __version__,
                "wall_time_s": round(self.wall_time, 3), "records": len(self.records),
                "invariant_failures": self.failures, "status": self.status}

    @property
    def status(self) -> int:
        return 1 if self.failures else 0

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.jsonl").write_text(self.jsonl())
        (out / "summary.csv").write_text(self.csv_text())
        (out / "manifest.json").write_text(json.dumps(self.manifest(), indent=2,
                                                      sort_keys=True) + "\n")
        return out


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _loc(x) -> str:
    return ",".join(str(i) for i in x)


# --- kinds -------------------------------------------------------------------------------

def _verify(cfg: ExperimentConfig, sink: ResultSink) -> None:
    from .double import (conjugation_defect, gauging_equivalence, prepare_s3_patch,
                         projector_commutation_defects, projector_suite,
                         raw_commutator_defect)
    rng = np.random.default_rng(cfg.seed)
    state, lay, ctl = prepare_s3_patch(cfg.rows, cfg.columns, cfg.qutrit_window, rng)
    suite = projector_suite(lay, ctl)
    checks = []
    for name, fam in suite.families().items():
        for loc, op in sorted(fam.items()):
            checks.append((f"ground:{name}({_loc(loc)})", abs(state.expectation(op) - 1), TOL))
    for (a, b), d in projector_commutation_defects(suite, rng).items():
        checks.append((f"commute:{a[0]}({_loc(a[1])})|{b[0]}({_loc(b[1])})", d, COMMUTE_TOL))
    for vtx in sorted(suite.At):
        p = (vtx[0] - 1, vtx[1] - 1)
        if p in suite.Bt:
            checks.append((f"raw_commutator:At({_loc(vtx)})", raw_commutator_defect(suite, vtx, rng),
                           COMMUTE_TOL))
        if vtx in suite.A:
            checks.append((f"AAtA=At^2:{_loc(vtx)}",
                           conjugation_defect(suite.A[vtx], suite.At[vtx], rng), COMMUTE_TOL))
    for p in sorted(suite.Bt):
        if p in suite.A:
            checks.append((f"ABtA=Bt^2:{_loc(p)}",
                           conjugation_defect(suite.A[p], suite.Bt[p], rng), COMMUTE_TOL))
    eq = gauging_equivalence(cfg.rows, cfg.columns, cfg.qutrit_window, rng)
    checks.append(("gauging:basis_fixed", 1 - eq["basis_fixed"], TOL))
    checks.append(("gauging:range_in_span", 1 - eq["range_in_span"], TOL))
    checks.append(("gauging:basis_orthonormal", eq["basis_orthonormal"], TOL))
    checks.append(("gauging:reference_state", 1 - eq["reference_fidelity"], TOL))
    checks.append(("gauging:projector_rank_is_6", abs(eq["rank"] - 6), 0))

    sink.csv_header = ["check", "defect", "tolerance", "pass"]
    for name, val, tol in checks:
        ok = bool(val <= tol)
        sink.record(check=name, defect=float(val), tolerance=tol, passed=ok)
        sink.csv_rows.append([name, f"{val:.3e}", tol, ok])
        sink.check(name, ok)


def _protocol(cfg: ExperimentConfig, sink: ResultSink) -> None:
    from .protocol import ProtocolConfig, verify_logical_action
    pc = ProtocolConfig(rows=cfg.rows, qubit_window=cfg.qubit_window,
                        qutrit_window=cfg.qutrit_window, group=cfg.group_spec, seed=cfg.seed,
                        budget=cfg.budget)
    rep = verify_logical_action(pc)
    sink.csv_header = ["quantity", "value", "pass"]
    for name in rep.fidelities:
        f = float(rep.fidelities[name])
        ok = f >= 1 - TOL
        sink.record(group=cfg.group, input=name, fidelity=f, n_xbar=rep.n_xbar[name],
                    passed=ok)
        sink.csv_rows.append([f"fidelity{name}", f"{f:.12f}", ok])
        sink.check(f"fidelity{name}", ok)
    for name, d in sorted(rep.heisenberg.items()):
        ok = d <= 1e-8
        sink.record(group=cfg.group, heisenberg=name, defect=float(d), passed=ok)
        sink.csv_rows.append([f"heisenberg:{name}", f"{d:.3e}", ok])
        sink.check(f"heisenberg:{name}", ok)


def _syndromes(cfg: ExperimentConfig, sink: ResultSink) -> None:
    from .decoder import error_region, exact_distribution, prepared_patch, syndrome_oracle
    patch = prepared_patch(cfg.rows, cfg.columns, tuple(cfg.qutrit_window), cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    sink.csv_header = ["error", "edge", "power", "stabilizer", "outcome", "oracle", "exact",
                       "frequency"]
    for kind, e in error_region(patch.layout):
        for power in ((1,) if kind in ("X", "Z") else (1, -1)):
            dist = syndrome_oracle(kind, e, patch.layout, patch.controls, power, patch.suite)
            exact = (exact_distribution(patch.state, kind, e, patch.suite, power)
                     if cfg.backend == "exact" else {})
            keys = sorted(set(dist.marginals) | {k for k, p in exact.items() if p[0] < 1 - TOL},
                          key=repr)
            for key in keys:
                n = 2 if key[0] in ("A", "B") else 3
                oracle = [dist.probability(key[0], key[1], i) for i in range(n)]
                counts = rng.multinomial(cfg.shots, [float(p) for p in oracle]) if cfg.shots else None
                for i in range(n):
                    ex = float(exact[key][i]) if exact else None
                    freq = float(counts[i] / cfg.shots) if counts is not None else None
                    ok = ex is None or abs(ex - float(oracle[i])) <= TOL
                    name = f"{kind}^{power}@{_loc(e[1:])}{e[0]}:{key[0]}({_loc(key[1])})={i}"
                    sink.record(error=kind, edge=list(e), power=power, stabilizer=key[0],
                                loc=list(key[1]), outcome=i, oracle=oracle[i], exact=ex,
                                frequency=freq, shots=cfg.shots, passed=ok)
                    sink.csv_rows.append([kind, f"{e[0]}{_loc(e[1:])}", power,
                                          f"{key[0]}({_loc(key[1])})", i, str(oracle[i]),
                                          "" if ex is None else f"{ex:.12f}",
                                          "" if freq is None else f"{freq:.4f}"])
                    sink.check(name, ok)


def _decode(cfg: ExperimentConfig, sink: ResultSink) -> None:
    from .decoder import ErrorModel, MCConfig, mc_logical_error_rate
    model = ErrorModel(**cfg.rates)
    mc = MCConfig(model, cfg.seed, cfg.backend, cfg.rows, cfg.columns, tuple(cfg.qutrit_window))
    res = mc_logical_error_rate(mc, cfg.trials)
    for r in res.records:
        sink.record(**r)
    lo, hi = res.ci
    sink.csv_header = ["trials", "failures", "rate", "ci_low", "ci_high", "seed", "backend",
                       *cfg.rates]
    sink.csv_rows.append([res.trials, res.failures, f"{res.rate:.6f}", f"{lo:.6f}",
                          f"{hi:.6f}", cfg.seed, cfg.backend,
                          *(cfg.rates[k] for k in cfg.rates)])
    if not any(cfg.rates.values()):
        sink.check("noiseless decoding never fails", res.failures == 0)


def _magic(cfg: ExperimentConfig, sink: ResultSink) -> None:
    from .magic import lattice_cross_check, run_magic, stabilizer_distance, true_CC6
    sink.csv_header = ["layer", "branch", "probability", "amplitudes"]
    for layer in ("qutrit", "qubit"):
        branches = run_magic(layer)
        for b in branches:
            amps = [[float(z.real), float(z.imag)] for z in b.state]
            prob = str(b.exact) if b.exact is not None else b.probability
            sink.record(layer=layer, branch=b.label, probability=prob, amplitudes=amps)
            sink.csv_rows.append([layer, b.label, prob,
                                  ";".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in b.state)])
        total = sum(b.exact for b in branches) if all(b.exact is not None for b in branches) \
            else sum(b.probability for b in branches)
        sink.check(f"{layer}: probabilities sum to 1", abs(float(total) - 1) <= 1e-12)
    psi1 = run_magic("qutrit")[0].state
    dist = stabilizer_distance(psi1)
    sink.record(quantity="stabilizer_distance", branch="Zq=w^0", value=dist)
    sink.check("psi1 is not a stabilizer state", dist >= 0.1)
    if cfg.cross_check:
        cc = lattice_cross_check(shots=cfg.shots or 10000, runs=cfg.runs, seed=cfg.seed)
        oracle = run_magic("qutrit", true_CC6())[0].probability
        sink.record(quantity="lattice_cross_check", lattice_probability=cc.lattice_prob,
                    counts=cc.counts, shots=cc.shots, frequency=cc.frequency,
                    reference=cc.reference, sigma=cc.sigma, true_gate_probability=oracle,
                    run_spread=cc.max_output_deviation, within_3sigma=cc.within_3sigma)
        sink.check("lattice agrees with the true-gate oracle", abs(cc.lattice_prob - oracle) <= TOL)
        sink.check("lattice frequency within 3 sigma of 5/9", cc.within_3sigma)


RUNNERS = {"verify": _verify, "protocol": _protocol, "syndromes": _syndromes,
           "decode": _decode, "magic": _magic}


def run_experiment(config: ExperimentConfig, out_dir=None) -> ResultSink:
    """Run ``config``; writes the sink to ``out_dir`` (or ``config.out``) when given."""
    sink = ResultSink(config)
    t0 = time.perf_counter()
    RUNNERS[config.kind](config, sink)
    sink.wall_time = time.perf_counter() - t0
    target = out_dir or config.out
    if target is not None:
        sink.write(target)
    return sink
