"""System-description files, the staged certificate pipeline, and CSV export.

A description is a JSON object.  Complex numbers are ``[re, im]`` pairs and
sparse coefficient lists are ``[[index, [re, im]], ...]`` with 1-based mode
indices.  The pipeline runs

    build -> assumptions -> epsilon_c -> tau_star -> unit_circle -> power_bound -> decay

plus an intra-sample trajectory.  A stage whose prerequisite failed is marked
``"skipped: <reason>"``; numerical failures are recorded, never raised.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .assumptions import (
    A2_TOL,
    A6_MARGIN,
    M1_SAFETY,
    certify_tail,
    check_assumptions,
)
from .exceptions import DescriptionError, NegativeMargin, NoAdmissibleTau, SdrieszError
from .spectral import SEPARATION_TOL, SMW_TOL, DeltaOperator, SpectrumSpec
from .stability import (
    UNIT_TOL,
    PowerBoundProbe,
    decay_test,
    power_bound_integral,
    quadrature_points,
    sampled_trajectory,
    unit_circle_test,
)
from .synthesis import PLACEMENT_TOL, example_input, stabilize, verify_b_in_domain
from .transfer import ScanGrid, find_tau_star, scan_epsilon_c, scan_epsilon_d

__all__ = [
    "SystemDescription",
    "parse_description",
    "load_description",
    "example_description",
    "run_pipeline",
    "emit_csv",
    "report_json",
    "CSV_COLUMNS",
    "STAGES",
    "GROWTH_LIMIT",
]

STAGES = ("build", "assumptions", "epsilon_c", "tau_star", "unit_circle",
          "power_bound", "decay", "trajectory")
GROWTH_LIMIT = 10.0
CSV_COLUMNS = {
    "trajectory": ("t", "norm"),
    "scan_c": ("omega", "abs_1mG"),
    "scan_d": ("theta", "abs_1mFRS"),
    "powerbound": ("r",),
}

_SCAN_KEYS = ("omega_max", "n_omega", "eta", "n_theta", "exclusion_arc")
_DECAY_DEFAULT = {"k_max": 100_000, "threshold": 1e-3, "n_states": 20}
_TRAJ_DEFAULT = {"samples_per_period": 8, "periods": 40}


# ---- description ------------------------------------------------------------------

@dataclass
class SystemDescription:
    head_eigenvalues: list
    truncation: int
    b: dict
    tail: dict | None = None
    f1: object = "auto"
    targets: list | None = None
    f2: dict = field(default_factory=dict)
    kappa: float | None = None
    alpha: float = 0.5
    delta: float = math.pi / 4
    riesz_Ma: float = 1.0
    riesz_Mb: float = 1.0
    scan: dict = field(default_factory=dict)
    probe: dict = field(default_factory=lambda: {"r_values": [1.1, 1.01, 1.001], "n_theta": 2048})
    tau_grid: list = field(default_factory=lambda: [round(0.01 * k, 2) for k in range(1, 100)])
    target_ratio: float = 0.5
    decay: dict = field(default_factory=lambda: dict(_DECAY_DEFAULT))
    trajectory: dict = field(default_factory=lambda: dict(_TRAJ_DEFAULT))
    seed: int = 0

    # -- conversions

    def spectrum(self) -> SpectrumSpec:
        coef = None if self.tail is None else self.tail["coefficient"]
        return SpectrumSpec(tuple(self.head_eigenvalues), self.truncation, coef)

    def dense(self, sparse) -> np.ndarray:
        v = np.zeros(self.truncation, complex)
        for i, val in sparse.items():
            v[i - 1] = val
        return v

    def scan_grid(self) -> ScanGrid:
        return ScanGrid(**self.scan)

    def power_probe(self) -> PowerBoundProbe:
        return PowerBoundProbe(tuple(self.probe["r_values"]), self.probe["n_theta"])

    def to_dict(self) -> dict:
        """Canonical JSON-compatible form; ``parse_description`` inverts it exactly."""
        d = {"head_eigenvalues": [_pair(z) for z in self.head_eigenvalues]}
        if self.tail is not None:
            d["tail"] = {"type": "reciprocal", "coefficient": self.tail["coefficient"],
                         "start_index": self.tail["start_index"]}
        d["truncation"] = self.truncation
        d["b"] = _sparse_out(self.b)
        if self.f1 == "auto":
            d["f1"] = "auto" if self.targets is None else {"targets": [_pair(z) for z in self.targets]}
        else:
            d["f1"] = _sparse_out(self.f1)
        d["f2"] = _sparse_out(self.f2)
        d["kappa"] = self.kappa
        for k in ("alpha", "delta", "riesz_Ma", "riesz_Mb"):
            d[k] = getattr(self, k)
        d["scan"] = {k: self.scan[k] for k in _SCAN_KEYS if k in self.scan}
        d["probe"] = {"r_values": list(self.probe["r_values"]), "n_theta": self.probe["n_theta"]}
        d["tau_grid"] = list(self.tau_grid)
        d["target_ratio"] = self.target_ratio
        d["decay"] = dict(self.decay)
        d["trajectory"] = dict(self.trajectory)
        d["seed"] = self.seed
        return d


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _sparse_out(sp):
    return [[int(i), _pair(sp[i])] for i in sorted(sp)]


class _Reader:
    """Typed field access that reports the offending key path."""

    def __init__(self, obj, path=""):
        if not isinstance(obj, dict):
            raise DescriptionError("expected an object", path or "<root>")
        self.obj, self.path = obj, path

    def key(self, k):
        return f"{self.path}.{k}" if self.path else k

    def reject_unknown(self, allowed):
        extra = sorted(set(self.obj) - set(allowed))
        if extra:
            raise DescriptionError(f"unknown key {extra[0]!r}", self.key(extra[0]))

    def real(self, k, default=None, positive=False, required=False):
        if k not in self.obj:
            if required:
                raise DescriptionError("missing required key", self.key(k))
            return default
        v = self.obj[k]
        if v is None and not required and default is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise DescriptionError("expected a finite number", self.key(k))
        if positive and not v > 0:
            raise DescriptionError("must be positive", self.key(k))
        return float(v)

    def integer(self, k, default=None, minimum=None, required=False):
        if k not in self.obj:
            if required:
                raise DescriptionError("missing required key", self.key(k))
            return default
        v = self.obj[k]
        if isinstance(v, bool) or not isinstance(v, int):
            raise DescriptionError("expected an integer", self.key(k))
        if minimum is not None and v < minimum:
            raise DescriptionError(f"must be at least {minimum}", self.key(k))
        return v


def _complex(v, path):
    if (not isinstance(v, list) or len(v) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x)
                   for x in v)):
        raise DescriptionError("expected a [re, im] pair of finite numbers", path)
    return complex(float(v[0]), float(v[1]))


def _complex_list(v, path):
    if not isinstance(v, list):
        raise DescriptionError("expected a list of [re, im] pairs", path)
    return [_complex(z, f"{path}[{k}]") for k, z in enumerate(v)]


def _sparse(v, path, N):
    if not isinstance(v, list):
        raise DescriptionError("expected a list of [index, [re, im]] entries", path)
    out = {}
    for k, entry in enumerate(v):
        p = f"{path}[{k}]"
        if not isinstance(entry, list) or len(entry) != 2:
            raise DescriptionError("expected [index, [re, im]]", p)
        i = entry[0]
        if isinstance(i, bool) or not isinstance(i, int) or not 1 <= i <= N:
            raise DescriptionError(f"index must be an integer in [1, {N}]", p)
        if i in out:
            raise DescriptionError(f"duplicate index {i}", p)
        out[i] = _complex(entry[1], p)
    return out


def parse_description(obj) -> SystemDescription:
    """Validate a decoded JSON object; unknown keys are rejected."""
    r = _Reader(obj)
    r.reject_unknown(SystemDescription.__dataclass_fields__.keys() - {"targets"})
    if "head_eigenvalues" not in obj:
        raise DescriptionError("missing required key", "head_eigenvalues")
    head = _complex_list(obj["head_eigenvalues"], "head_eigenvalues")
    N = r.integer("truncation", required=True, minimum=1)
    tail = None
    if obj.get("tail") is not None:
        t = _Reader(obj["tail"], "tail")
        t.reject_unknown({"type", "coefficient", "start_index"})
        if t.obj.get("type") != "reciprocal":
            raise DescriptionError("only the 'reciprocal' tail law is supported", "tail.type")
        coef = t.real("coefficient", required=True, positive=True)
        start = t.integer("start_index", default=len(head) + 1)
        if start != len(head) + 1:
            raise DescriptionError(f"the tail must start right after the head (index {len(head) + 1})",
                                   "tail.start_index")
        tail = {"coefficient": coef, "start_index": start}
    if "b" not in obj:
        raise DescriptionError("missing required key", "b")
    b = _sparse(obj["b"], "b", N)
    f1, targets = "auto", None
    raw_f1 = obj.get("f1", "auto")
    if isinstance(raw_f1, dict):
        fr = _Reader(raw_f1, "f1")
        fr.reject_unknown({"targets"})
        targets = _complex_list(raw_f1.get("targets"), "f1.targets")
    elif isinstance(raw_f1, list):
        f1 = _sparse(raw_f1, "f1", N)
    elif raw_f1 != "auto":
        raise DescriptionError("expected 'auto', {'targets': [...]} or a sparse list", "f1")
    f2 = _sparse(obj.get("f2", []), "f2", N)
    kappa = r.real("kappa", default=None, positive=True)

    scan = {}
    if obj.get("scan") is not None:
        s = _Reader(obj["scan"], "scan")
        s.reject_unknown(_SCAN_KEYS)
        for k in ("omega_max", "exclusion_arc"):
            if k in s.obj:
                scan[k] = s.real(k, positive=True)
        if "eta" in s.obj and s.obj["eta"] is not None:
            scan["eta"] = s.real("eta", positive=True)
        for k in ("n_omega", "n_theta"):
            if k in s.obj:
                scan[k] = s.integer(k, minimum=16)
    probe = {"r_values": [1.1, 1.01, 1.001], "n_theta": 2048}
    if obj.get("probe") is not None:
        p = _Reader(obj["probe"], "probe")
        p.reject_unknown({"r_values", "n_theta"})
        if "r_values" in p.obj:
            rv = p.obj["r_values"]
            if not isinstance(rv, list) or not all(
                    isinstance(x, (int, float)) and not isinstance(x, bool) for x in rv):
                raise DescriptionError("expected a list of numbers", "probe.r_values")
            probe["r_values"] = [float(x) for x in rv]
        probe["n_theta"] = p.integer("n_theta", default=2048, minimum=256)
    desc = SystemDescription(head, N, b, tail, f1, targets, f2, kappa)
    for k in ("alpha", "delta", "riesz_Ma", "riesz_Mb"):
        v = r.real(k, positive=True)
        if v is not None:
            setattr(desc, k, v)
    desc.scan, desc.probe = scan, probe
    if "tau_grid" in obj:
        tg = obj["tau_grid"]
        if not isinstance(tg, list) or not tg or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in tg):
            raise DescriptionError("expected a nonempty list of numbers", "tau_grid")
        desc.tau_grid = [float(x) for x in tg]
    tr = r.real("target_ratio")
    if tr is not None:
        desc.target_ratio = tr
    for name, default in (("decay", _DECAY_DEFAULT), ("trajectory", _TRAJ_DEFAULT)):
        sec = dict(default)
        if obj.get(name) is not None:
            sr = _Reader(obj[name], name)
            sr.reject_unknown(default.keys())
            for k, v in default.items():
                if isinstance(v, int):
                    sec[k] = sr.integer(k, default=v, minimum=1)
                else:
                    sec[k] = sr.real(k, default=v, positive=True)
        setattr(desc, name, sec)
    desc.seed = r.integer("seed", default=0, minimum=0)
    _semantic_checks(desc)
    return desc


def _semantic_checks(desc):
    try:
        desc.spectrum()
    except ValueError as exc:
        raise DescriptionError(str(exc), "head_eigenvalues") from None
    try:
        desc.scan_grid()
    except (TypeError, ValueError) as exc:
        raise DescriptionError(str(exc), "scan") from None
    try:
        desc.power_probe()
    except ValueError as exc:
        raise DescriptionError(str(exc), "probe") from None
    tg = np.asarray(desc.tau_grid)
    if np.any(np.diff(tg) <= 0) or tg[0] <= 0 or tg[-1] >= 1:
        raise DescriptionError("must be strictly ascending inside (0, 1)", "tau_grid")
    if not 0 < desc.target_ratio < 1:
        raise DescriptionError("must lie in (0, 1)", "target_ratio")
    if not 0 < desc.delta <= math.pi / 2:
        raise DescriptionError("must lie in (0, pi/2]", "delta")
    if desc.riesz_Ma > desc.riesz_Mb:
        raise DescriptionError("riesz_Ma must not exceed riesz_Mb", "riesz_Ma")
    if not 0 < desc.decay["threshold"] < 1:
        raise DescriptionError("must lie in (0, 1)", "decay.threshold")


def load_description(path) -> SystemDescription:
    """Read and validate a description file; JSON syntax errors carry line and column."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DescriptionError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_description(obj)


def example_description(seed: int = 0, N: int = 200, support: int = 50, **overrides) -> SystemDescription:
    """Unstable mode at 1, reciprocal tail, seeded ``c_n / n^2`` input up to ``support``."""
    b = example_input(N, 1.0, support, seed=seed)
    desc = SystemDescription(
        head_eigenvalues=[1.0 + 0j], truncation=N,
        b={int(i) + 1: complex(b[i]) for i in np.flatnonzero(b)},
        tail={"coefficient": 1.0, "start_index": 2}, seed=seed,
    )
    for k, v in overrides.items():
        setattr(desc, k, v)
    return desc


# ---- report helpers ---------------------------------------------------------------

def _num(x):
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_num(x.real), _num(x.imag)]
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _skip(reason):
    return {"status": f"skipped: {reason}"}


def _status(ok):
    return "pass" if ok else "fail"


def _battery(N, H, rng):
    """Eight unit vectors: 3 random, 3 basis-aligned, 2 mixed."""
    vecs = []
    for k in range(3):
        v = rng.normal(size=N) + 1j * rng.normal(size=N)
        vecs.append((f"random_{k}", v))
    head = 0
    first_tail = min(H, N - 1)
    vecs.append(("basis_first_head", np.eye(N)[head]))
    vecs.append(("basis_first_tail", np.eye(N)[first_tail]))
    vecs.append(("basis_deepest_tail", np.eye(N)[N - 1]))
    vecs.append(("mixed_head_deepest", np.eye(N)[head] + np.eye(N)[N - 1]))
    w = (rng.normal(size=N) + 1j * rng.normal(size=N)) / np.arange(1, N + 1)
    vecs.append(("mixed_weighted", w))
    return [(name, v / np.linalg.norm(v)) for name, v in vecs]


def _decay_states(N, H, n_states, rng):
    n_head = n_states // 2 if H else 0
    states, kinds = [], []
    for k in range(n_states):
        v = np.zeros(N, complex)
        if k < n_head:
            v[:H] = rng.normal(size=H) + 1j * rng.normal(size=H)
            kinds.append("head")
        else:
            lo = H if H < N else 0
            v[lo:] = rng.normal(size=N - lo) + 1j * rng.normal(size=N - lo)
            kinds.append("tail")
        states.append(v / np.linalg.norm(v))
    return np.stack(states, axis=1), kinds


def _tolerances(desc):
    return {
        "separation": SEPARATION_TOL, "smw": SMW_TOL, "a2": A2_TOL, "a6_margin": A6_MARGIN,
        "unit_modulus": UNIT_TOL, "placement": PLACEMENT_TOL, "m1_safety": M1_SAFETY,
        "power_bound_growth_limit": GROWTH_LIMIT, "decay_threshold": desc.decay["threshold"],
    }


# ---- pipeline ---------------------------------------------------------------------------

def run_pipeline(desc: SystemDescription, stages=STAGES, tau: float | None = None,
                 seed: int | None = None) -> dict:
    """Run the requested stages and return a JSON-compatible report.

    ``tau`` overrides the evaluation period (default ``tau_star / 2``); ``seed``
    overrides the description seed for the test battery and decay states.
    """
    seed = desc.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    requested = set(stages)
    unknown = requested - set(STAGES)
    if unknown:
        raise ValueError(f"unknown stages {sorted(unknown)}")
    requested.add("build")
    grid = desc.scan_grid()
    out = {}
    series = {}
    report = {
        "tool": {"name": "sdriesz", "version": __version__},
        "seed": seed,
        "tau_override": tau,
        "description": desc.to_dict(),
        "tolerances": _tolerances(desc),
        "grid": {**grid.as_dict(), "probe_r_values": list(desc.probe["r_values"]),
                 "probe_n_theta": desc.probe["n_theta"],
                 "probe_quadrature_points": [quadrature_points(r, desc.probe["n_theta"])
                                             for r in desc.probe["r_values"]]},
        "stages": out,
        "series": series,
    }

    def run(name, prereq_ok, prereq_reason, fn):
        if name not in requested:
            out[name] = _skip("not requested")
        elif not prereq_ok:
            out[name] = _skip(prereq_reason)
        else:
            try:
                out[name] = fn()
            except (SdrieszError, ValueError) as exc:
                out[name] = {"status": "fail", "error": f"{type(exc).__name__}: {exc}"}
        return out[name]["status"] == "pass"

    ctx = {}

    # build
    def build():
        f1 = None if desc.f1 == "auto" else desc.dense(desc.f1)
        try:
            ex = stabilize(desc.spectrum(), desc.dense(desc.b), desc.dense(desc.f2), desc.targets,
                           f1, desc.kappa, desc.alpha, desc.delta, A6_MARGIN,
                           desc.riesz_Ma, desc.riesz_Mb)
        except ValueError as exc:
            return {"status": "fail", "error": f"ValueError: {exc}"}
        ctx["build"] = ex
        pl = ex.placement
        return {
            "status": "pass",
            "f1": _sparse_out({int(i) + 1: complex(ex.f1[i]) for i in np.flatnonzero(ex.f1)}),
            "placement": None if pl is None else {
                "targets": [_num(z) for z in pl.targets],
                "achieved": [_num(z) for z in pl.achieved_eigs],
                "max_error": _num(pl.max_error)},
            "f2_norm": _num(ex.f2_norm), "kappa": _num(ex.kappa), "kappa_ok": ex.kappa_ok,
            "a6_nudge": None if ex.nudge is None else {k: _num(v) for k, v in ex.nudge.items()},
            "notes": list(ex.notes),
        }

    built = run("build", True, "", build)
    sys = ctx["build"].system if "build" in ctx else None

    def assumptions():
        rep = check_assumptions(sys, margin=A6_MARGIN)
        dom = verify_b_in_domain(sys)
        cert = certify_tail(sys)
        ctx["cert"] = cert
        ok = rep.all_ok and dom.ok
        return {
            "status": _status(ok),
            "a1": {"ok": rep.a1_certified, "sector_count": rep.a1_count},
            "a2": {"ok": rep.a2_ok, "min_abs_real": _num(np.min(np.abs(sys.lam.real)))},
            "a3": {"ok": rep.a3_ok, "note": rep.a3_note},
            "a4": {"ok": rep.a4_ok, "sup_estimate": _num(rep.a4_sup_estimate), "note": rep.a4_note},
            "a5": {"ok": rep.a5_ok, "value": _num(rep.a5_value)},
            "a6": {"ok": rep.a6_ok, "value": _num(rep.a6_value),
                   "distance_from_minus_one": _num(abs(rep.a6_value + 1)), "margin": rep.a6_margin},
            "b_domain": {"ok": dom.ok, "a5_sum": _num(dom.a5_sum),
                         "weighted_tail_sum": _num(dom.weighted_tail_sum),
                         "second_half_share": _num(dom.second_half_share),
                         "stabilized": dom.stabilized},
            "tail_certificate": {
                "cut": cert.cut, "tail_start": cert.tail_start, "gamma1": cert.gamma1,
                "gamma2": cert.gamma2, "m1": cert.m1, "upsilon1": cert.upsilon1,
                "upsilon2": cert.upsilon2, "continuous_bound": cert.cont_tail_bound,
                "discrete_bound": cert.disc_tail_bound},
        }

    assumed = run("assumptions", built, "build failed", assumptions)

    def eps_c():
        try:
            res = scan_epsilon_c(sys, grid, ctx["cert"])
            ok = True
        except NegativeMargin as exc:
            res, ok = exc.result, False
        ctx["eps_c"] = res
        series["scan_c"] = {"omega": res.axis.tolist(), "abs_1mG": res.values.tolist()}
        return {"status": _status(ok), "epsilon": _num(res.epsilon), "argmin": _num(res.argmin_point),
                "raw_min": _num(res.raw_min), "truncation_slack": _num(res.truncation_slack),
                "large_frequency_floor": _num(res.floor),
                "closed_loop_max_real": _num(res.guard), "eta": _num(res.eta)}

    c_ok = run("epsilon_c", assumed, "assumptions failed", eps_c)

    def tau_star():
        try:
            ts, table = find_tau_star(sys, desc.target_ratio, desc.tau_grid, grid, ctx["cert"],
                                      epsilon_c=ctx["eps_c"].epsilon)
            ok = True
        except NoAdmissibleTau as exc:
            ts, table, ok = None, exc.table, False
        ctx["tau_star"] = ts
        return {"status": _status(ok), "target_ratio": desc.target_ratio,
                "required_epsilon_d": _num(desc.target_ratio * ctx["eps_c"].epsilon),
                "tau_star": ts, "table": [{k: _num(v) for k, v in row.items()} for row in table]}

    t_ok = run("tau_star", c_ok, "epsilon_c failed", tau_star)
    if tau is not None:
        tau_eval, have_tau, why = float(tau), assumed, "assumptions failed"
    else:
        ts = ctx.get("tau_star")
        tau_eval = None if ts is None else ts / 2
        have_tau, why = t_ok, "no admissible sampling period"
    report["tau_eval"] = tau_eval

    def unit_circle():
        v = unit_circle_test(sys, tau_eval, grid, ctx["cert"])
        try:
            d = scan_epsilon_d(sys, tau_eval, grid, ctx["cert"])
        except NegativeMargin as exc:
            d = exc.result
        except ValueError:
            d = None
        if d is not None:
            series["scan_d"] = {"theta": d.axis.tolist(), "abs_1mFRS": d.values.tolist()}
        return {"status": _status(v.ok), "tau": tau_eval, "epsilon_d": _num(v.epsilon_d),
                "near_one_margin": _num(v.near_one_margin),
                "min_separation": _num(v.min_separation),
                "unit_modulus_modes": v.unit_modulus_modes, "reason": v.reason}

    u_ok = run("unit_circle", have_tau, why, unit_circle)

    def power_bound():
        op = DeltaOperator(sys, tau_eval)
        probe = desc.power_probe()
        rows, worst = [], 0.0
        table = {"r": list(probe.r_values)}
        for name, v in _battery(sys.N, sys.spectrum.head_size, rng):
            entry = {"name": name}
            for role, adj in (("x", False), ("adjoint", True)):
                vals = power_bound_integral(op, probe, v, adjoint=adj)
                growth = float(np.max(vals) / vals[0]) if np.all(np.isfinite(vals)) else math.inf
                worst = max(worst, growth)
                entry[role] = [_num(x) for x in vals]
                # Riesz-basis bracket on the same integral in the original norm
                entry[f"{role}_riesz_bracket"] = [[_num(sys.riesz_Ma * x), _num(sys.riesz_Mb * x)]
                                                  for x in vals]
                entry[f"growth_{role}"] = _num(growth)
                table[f"integral_value[{name},{role}]"] = vals.tolist()
            rows.append(entry)
        series["powerbound"] = table
        return {"status": _status(worst < GROWTH_LIMIT), "tau": tau_eval,
                "max_growth": _num(worst), "growth_limit": GROWTH_LIMIT, "vectors": rows}

    p_ok = run("power_bound", u_ok, "unit-circle test failed", power_bound)

    def decay():
        op = DeltaOperator(sys, tau_eval)
        d = desc.decay
        X, kinds = _decay_states(sys.N, sys.spectrum.head_size, d["n_states"], rng)
        recs = decay_test(op, X, d["k_max"], d["threshold"])
        states, ok = [], True
        for kind, rec in zip(kinds, recs):
            passed = rec.k_hit is not None if kind == "head" else (rec.k_hit is not None or rec.eventual_decay)
            ok &= passed
            states.append({"kind": kind, "k_hit": rec.k_hit, "sup_ratio": _num(rec.sup_ratio),
                           "final_ratio": _num(rec.norms[-1] / rec.norms[0]),
                           "eventual_decay": rec.eventual_decay, "passed": bool(passed)})
        return {"status": _status(ok), "tau": tau_eval, "k_max": d["k_max"],
                "threshold": d["threshold"], "states": states}

    run("decay", p_ok, "power-bound probe failed", decay)

    def trajectory():
        op = DeltaOperator(sys, tau_eval)
        t = desc.trajectory
        x0 = np.zeros(sys.N, complex)
        x0[0] = 1.0
        tr = sampled_trajectory(op, x0, t["samples_per_period"], t["periods"])
        series["trajectory"] = {"t": tr.t.tolist(), "norm": tr.norm.tolist()}
        return {"status": "pass", "tau": tau_eval, "x0": "first mode",
                "samples_per_period": t["samples_per_period"], "periods": t["periods"],
                "final_norm": _num(tr.norm[-1])}

    if not built:
        why = "build failed"
    run("trajectory", built and tau_eval is not None, why, trajectory)

    # a requested stage that did not pass (failed or skipped) makes the run inconclusive
    failed = [s for s in STAGES if s in requested and out[s]["status"] != "pass"]
    report["verdict"] = {"all_certificates_pass": not failed, "failed": failed}
    return _clean(report)


def _clean(obj):
    """Recursively convert numpy scalars and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, complex, np.complexfloating)):
        return _num(obj)
    return obj


def report_json(report: dict) -> str:
    return json.dumps(report, indent=1, allow_nan=False) + "\n"


# ---- CSV ---------------------------------------------------------------------------------

def emit_csv(report: dict, which: str, path) -> Path:
    """Write one series as CSV (``%.17g``), rows ascending in the first column.

    Raises
    ------
    KeyError
        The series was not produced by the run.
    """
    if which not in CSV_COLUMNS:
        raise ValueError(f"unknown series {which!r}; choose from {sorted(CSV_COLUMNS)}")
    data = report.get("series", {})
    if which not in data:
        raise KeyError(f"series {which!r} is not in the report")
    cols = list(data[which].keys())
    arr = np.column_stack([np.asarray(data[which][c], dtype=float) for c in cols])
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in arr:
            w.writerow(["%.17g" % v for v in row])
    return path
