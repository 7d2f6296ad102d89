"""Config-driven command line front end.

Reads an INI-style config, runs the requested analyses, writes plot-ready CSV
files plus a JSON report with a stable key order, and exits 0 exactly when
every requested check passes its threshold.  All scientific imports happen
inside run() so that --threads can cap the BLAS pool before numpy loads.

Config schema (all sections except [potential] are optional)::

    [lattice]
    generators = 1.0          # rows separated by ';', entries by spaces

    [potential]
    family = sliding_cosine   # static | sliding_cosine | two_harmonic | ramp
    v = 0.5                   # remaining keys are family parameters
    T = 1.0
    flat = true

    [mesh]
    n_cut = 9
    n_k = 64                  # comma separated per axis for d >= 2
    n_t = 64

    [run]
    bands = 1                 # occupied band count M
    order = 1                 # super-adiabatic order N
    eps = 0.2, 0.1, 0.05      # strictly decreasing
    substep = 0.05            # propagator step / eps ratio
    gap_threshold = 1e-6
    analyses = all
    out = out
"""

import argparse
import configparser
import dataclasses
import json
import os
import sys
import time

from . import __version__
from .errors import BlochPumpError, ParseError, ValidationError

ANALYSES = ("bands", "curvature", "polarize", "pump", "superadiabatic",
            "dynamics", "semiclassics", "symmetry")


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_FAMILIES = {
    "static": {"v": float},
    "sliding_cosine": {"v": float, "T": float, "flat": _bool},
    "two_harmonic": {"rho": float, "w": float, "T": float, "flat": _bool,
                     "symmetric": _bool, "breath": float},
    "ramp": {"v0": float, "v1": float, "T": float},
}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    family: str
    params: dict
    generators: tuple = None
    n_cut: int = 9
    n_k: tuple = (64,)
    n_t: int = 64
    bands: int = 1
    order: int = 1
    eps: tuple = (0.2, 0.1, 0.05)
    substep: float = 0.05
    gap_threshold: float = 1e-6
    analyses: tuple = ANALYSES
    outdir: str = "out"


@dataclasses.dataclass(frozen=True)
class RunReport:
    config: dict
    version: str
    results: dict
    passed: bool


# ----------------------------------------------------------------------
# parsing

def _line_of(text, option):
    """1-based (line, column-of-value) of the first 'option = ...' line."""
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.lstrip()
        if stripped.lower().startswith(option.lower()):
            rest = stripped[len(option):].lstrip()
            if rest.startswith("=") or rest.startswith(":"):
                return i, line.index("=" if "=" in line else ":") + 2
    return None, None


def _convert(text, raw, option, kind):
    """Parse one option value, turning conversion failures into ParseError."""
    try:
        return kind(raw)
    except (TypeError, ValueError):
        line, col = _line_of(text, option)
        where = f"line {line}, column {col}: " if line else ""
        raise ParseError(
            f"{where}option '{option}' has invalid value {raw!r} "
            f"(expected {kind.__name__.lstrip('_')})") from None


def _int_list(raw):
    return tuple(int(p) for p in raw.replace(",", " ").split())


def _float_list(raw):
    return tuple(float(p) for p in raw.replace(",", " ").split())


def _generators(raw):
    rows = [r for r in raw.split(";") if r.strip()]
    return tuple(tuple(float(x) for x in r.replace(",", " ").split())
                 for r in rows)


def parse_config(text) -> RunConfig:
    """Parse and validate config text, reporting every violation at once.

    Syntax problems (malformed lines, bad literals) raise ParseError with the
    offending position; semantic problems are collected and raised together
    as a single ValidationError.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                   interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ParseError(f"line {e.lineno}: {e.line.strip()!r} appears before "
                         "any [section] header") from None
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ParseError(
            f"line {lineno}: {line!r} is not 'key = value' or '[section]'"
        ) from None
    except configparser.DuplicateOptionError as e:
        raise ParseError(f"line {e.lineno}: option '{e.option}' repeated in "
                         f"[{e.section}]") from None
    except configparser.DuplicateSectionError as e:
        raise ParseError(f"line {e.lineno}: section [{e.section}] "
                         "repeated") from None
    except configparser.Error as e:
        raise ParseError(str(e)) from None

    problems = []
    known_sections = {"lattice", "potential", "mesh", "run"}
    for sec in cp.sections():
        if sec not in known_sections:
            problems.append(f"unknown section [{sec}] "
                            f"(known: {', '.join(sorted(known_sections))})")

    if not cp.has_section("potential") or not cp.has_option("potential", "family"):
        problems.append("missing required option 'family' in [potential]")
        raise ValidationError("; ".join(problems))

    family = cp.get("potential", "family").strip()
    params = {}
    if family not in _FAMILIES:
        problems.append(f"unknown potential family {family!r} "
                        f"(known: {', '.join(sorted(_FAMILIES))})")
    else:
        spec = _FAMILIES[family]
        for opt in cp.options("potential"):
            if opt == "family":
                continue
            if opt not in spec:
                problems.append(
                    f"family {family!r} has no parameter {opt!r} "
                    f"(takes: {', '.join(sorted(spec))})")
                continue
            params[opt] = _convert(text, cp.get("potential", opt), opt,
                                   spec[opt])

    fields = {"family": family, "params": params}

    def read(section, option, kind, target=None):
        if cp.has_option(section, option):
            fields[target or option] = _convert(
                text, cp.get(section, option), option, kind)

    read("lattice", "generators", _generators)
    read("mesh", "n_cut", int)
    read("mesh", "n_k", _int_list)
    read("mesh", "n_t", int)
    read("run", "bands", int)
    read("run", "order", int)
    read("run", "eps", _float_list)
    read("run", "substep", float)
    read("run", "gap_threshold", float)
    read("run", "out", str, "outdir")
    if cp.has_option("run", "analyses"):
        names = tuple(cp.get("run", "analyses").replace(",", " ").split())
        bad = [n for n in names if n not in ANALYSES + ("all",)]
        if bad:
            problems.append(f"unknown analyses {bad} "
                            f"(known: {', '.join(ANALYSES)}, all)")
        elif "all" in names:
            fields["analyses"] = ANALYSES
        else:
            fields["analyses"] = tuple(n for n in ANALYSES if n in names)

    for sec, allowed in (("lattice", {"generators"}),
                         ("mesh", {"n_cut", "n_k", "n_t"}),
                         ("run", {"bands", "order", "eps", "substep",
                                  "gap_threshold", "analyses", "out"})):
        if cp.has_section(sec):
            for opt in cp.options(sec):
                if opt not in allowed:
                    problems.append(f"unknown option {opt!r} in [{sec}] "
                                    f"(takes: {', '.join(sorted(allowed))})")

    config = RunConfig(**fields)
    problems += _validate(config)
    if problems:
        err = ValidationError("config invalid:\n- " + "\n- ".join(problems))
        err.failures = problems
        raise err
    return config


def _validate(config):
    problems = []
    d = 1 if config.generators is None else len(config.generators)
    if config.generators is not None:
        if any(len(row) != d for row in config.generators):
            problems.append("lattice generators must form a square matrix")
        if config.family in _FAMILIES and d != 1:
            problems.append(f"family {config.family!r} is one-dimensional but "
                            f"generators have d = {d}")
    if len(config.n_k) not in (1, d):
        problems.append(f"n_k needs 1 or {d} entries, got {len(config.n_k)}")
    for n in config.n_k:
        if n < 4:
            problems.append(f"k-mesh size {n} < 4")
    if config.n_t < 4:
        problems.append(f"t-mesh size {config.n_t} < 4")
    if config.n_cut < 1:
        problems.append(f"n_cut must be >= 1, got {config.n_cut}")
    if config.bands < 1:
        problems.append(f"band count must be >= 1, got {config.bands}")
    if config.order < 0:
        problems.append(f"super-adiabatic order must be >= 0, got {config.order}")
    if not config.eps:
        problems.append("eps list is empty")
    elif any(e <= 0 for e in config.eps):
        problems.append("eps values must be positive")
    elif any(a <= b for a, b in zip(config.eps, config.eps[1:])):
        problems.append(f"eps list must be strictly decreasing, got {list(config.eps)}")
    if not 0 < config.substep <= 1:
        problems.append(f"substep must lie in (0, 1], got {config.substep}")
    if config.gap_threshold <= 0:
        problems.append(f"gap_threshold must be > 0, got {config.gap_threshold}")
    return problems


# ----------------------------------------------------------------------
# artifacts

def _fmt(x):
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(x) for x in row) + "\n")


def _plain(obj):
    """Recursively convert numpy scalars/arrays so json can serialize."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    if hasattr(obj, "tolist"):
        return _plain(obj.tolist())
    return float(obj)


def _eps_tag(eps):
    return format(float(eps), "g")


# ----------------------------------------------------------------------
# analyses (each returns (result_dict, passed))

def _get_bands(pot, mesh, config, shared):
    if "bands" not in shared:
        from .bands import solve_bands
        shared["bands"] = solve_bands(pot, mesh, config.n_cut)
    return shared["bands"]


def _get_curvature(pot, mesh, config, shared):
    if "curv" not in shared:
        from .geometry import curvature, projector_field
        b = _get_bands(pot, mesh, config, shared)
        shared["field"] = projector_field(b, config.bands, partials="analytic")
        shared["curv"] = curvature(shared["field"])
    return shared["field"], shared["curv"]


def _get_kato(pot, mesh, config, shared):
    if "kato" not in shared:
        from .bands import fermi_projector
        from .geometry import kato_frame, smooth_k_frame
        b = _get_bands(pot, mesh, config, shared)
        P = fermi_projector(b, config.bands)
        frame0 = smooth_k_frame(P[0], config.bands, config.n_cut, mesh)
        shared["kato"] = kato_frame(P, frame0, mesh)
    return shared["kato"]


def _run_bands(pot, mesh, config, shared, outdir):
    import numpy as np

    from .bands import spectral_gap

    b = _get_bands(pot, mesh, config, shared)
    gap, (it, ik) = spectral_gap(b, config.bands)
    n_show = min(b.D, config.bands + 1)
    d = mesh.lattice.d
    header = ["t"] + [f"k{j + 1}" for j in range(d)] \
        + [f"E{m}" for m in range(n_show)]
    rows = ((mesh.ts[i], *mesh.ks[n], *b.energies[i, n, :n_show])
            for i in range(mesh.n_t) for n in range(mesh.n_nodes))
    _write_csv(os.path.join(outdir, "bands.csv"), header, rows)
    result = {
        "min_gap": float(gap),
        "min_gap_t_index": int(it),
        "min_gap_k_index": int(ik),
        "max_energy": float(np.max(b.energies[..., :n_show])),
    }
    return result, gap >= config.gap_threshold


def _run_curvature(pot, mesh, config, shared, outdir):
    import numpy as np

    from .geometry import chern_integral, integrate_curvature, pumped_charge

    field, curv = _get_curvature(pot, mesh, config, shared)
    d = mesh.lattice.d
    header = ["t"] + [f"k{j + 1}" for j in range(d)] \
        + [f"theta{j + 1}" for j in range(d)]
    cols = [curv.theta[..., j] for j in range(d)]
    if d >= 2:
        for j in range(d):
            for l in range(j + 1, d):
                header.append(f"omega{j + 1}{l + 1}")
                cols.append(curv.omega[..., j, l])
    rows = ((mesh.ts[i], *mesh.ks[n], *(c[i, n] for c in cols))
            for i in range(mesh.n_t) for n in range(mesh.n_nodes))
    _write_csv(os.path.join(outdir, "curvature.csv"), header, rows)
    cherns = [chern_integral(curv, j) for j in range(d)]
    result = {
        "max_abs_theta": float(np.max(np.abs(curv.theta))),
        "chern_integral": cherns,
        "pumped_charge": [pumped_charge(curv, j) for j in range(d)],
        "integral": [integrate_curvature(curv, j) for j in range(d)],
    }
    passed = True
    if pot.periodic:
        passed = all(abs(c - round(c)) <= 0.05 for c in cherns)
    return result, passed


def _run_polarize(pot, mesh, config, shared, outdir):
    from .geometry import ksv_polarization, polarization_history

    if mesh.lattice.d != 1:
        return {"skipped": "polarization routes are one-dimensional"}, True
    b = _get_bands(pot, mesh, config, shared)
    p_hist, dp_hist = polarization_history(b, config.bands)
    _write_csv(os.path.join(outdir, "polarization.csv"), ["t", "p"],
               zip(mesh.ts, p_hist))
    kato = _get_kato(pot, mesh, config, shared)
    dp_ksv = ksv_polarization(kato, mesh, config.n_cut)
    gap = abs(dp_ksv - dp_hist)
    result = {
        "delta_p_history": float(dp_hist),
        "delta_p_ksv": float(dp_ksv),
        "route_gap": float(gap),
    }
    return result, gap <= 1e-3


def _run_pump(pot, mesh, config, shared, outdir):
    from .dynamics import propagate_filled
    from .geometry import chern_plaquette, ksv_polarization, pumped_charge

    if mesh.lattice.d != 1:
        return {"skipped": "pump comparison is one-dimensional"}, True
    b = _get_bands(pot, mesh, config, shared)
    _, curv = _get_curvature(pot, mesh, config, shared)
    dp_theta = pumped_charge(curv)
    kato = _get_kato(pot, mesh, config, shared)
    dp_ksv = ksv_polarization(kato, mesh, config.n_cut)
    result = {"dP_theta": float(dp_theta), "dP_ksv": float(dp_ksv)}
    passed = abs(dp_ksv - dp_theta) <= 1e-3
    if pot.periodic:
        chern = chern_plaquette(b, n_occ=config.bands)
        result["chern_plaquette"] = chern
        passed &= abs(dp_theta + chern) <= 0.05
    dp_dyn = {}
    for eps in config.eps:
        _, trace = propagate_filled(pot, mesh, config.bands, eps, config.n_cut,
                                    c=config.substep)
        _write_csv(os.path.join(outdir, f"current_eps{_eps_tag(eps)}.csv"),
                   ["t", "pdot1"], zip(trace.ts, trace.pdot[:, 0]))
        dp_dyn[_eps_tag(eps)] = float(trace.charge[0])
    result["dP_dyn"] = dp_dyn
    passed &= abs(dp_dyn[_eps_tag(config.eps[-1])] - dp_theta) <= 1e-2
    return result, passed


def _run_superadiabatic(pot, mesh, config, shared, outdir):
    import numpy as np

    from .superadiabatic import (almost_projector, commutator_residual,
                                 effective_hamiltonian, intertwiner,
                                 nenciu_terms, rectify)

    b = _get_bands(pot, mesh, config, shared)
    terms = nenciu_terms(b, config.bands, config.order)
    with_frame = mesh.lattice.d == 1
    kato = _get_kato(pot, mesh, config, shared) if with_frame else None
    defect_p, defect_t, residual, heff_gap = [], [], [], []
    for eps in config.eps:
        Pt, dp = almost_projector(eps, terms)
        defect_p.append(dp)
        residual.append(commutator_residual(b, terms, eps))
        if with_frame:
            T_eps, _, dt = intertwiner(kato, terms, rectify(Pt, config.bands), eps)
            defect_t.append(dt)
            if config.bands == 1:
                ts_i, Heff, _ = effective_hamiltonian(T_eps, b, eps)
                interior = b.energies[1:-1, :, 0]
                heff_gap.append(float(np.max(np.abs(
                    Heff[..., 0, 0].real - interior))))
    result = {
        "eps": list(config.eps),
        "idempotency_defect": defect_p,
        "commutator_residual": residual,
    }
    if defect_t:
        result["intertwiner_defect"] = defect_t
    if heff_gap:
        result["heff_vs_band"] = heff_gap
    passed = True
    if len(config.eps) >= 2:
        lx = np.log(np.asarray(config.eps))
        floor = np.finfo(float).tiny

        def slope(vals):
            return float(np.polyfit(lx, np.log(np.maximum(vals, floor)), 1)[0])

        if max(defect_p) <= 1e-12:
            result["slope_idempotency"] = None
        else:
            result["slope_idempotency"] = slope(defect_p)
            passed &= result["slope_idempotency"] >= config.order + 0.5
        if defect_t:
            if max(defect_t) <= 1e-12:
                result["slope_intertwiner"] = None
            else:
                result["slope_intertwiner"] = slope(defect_t)
                passed &= result["slope_intertwiner"] >= config.order + 0.5
    return result, passed


def _run_dynamics(pot, mesh, config, shared, outdir):
    from .dynamics import theorem1_check

    chk = theorem1_check(pot, config.bands, config.eps, mesh, config.n_cut,
                         c=config.substep)
    d = mesh.lattice.d
    header = ["t"] + [f"pdot{j + 1}" for j in range(d)]
    for eps, trace in zip(config.eps, chk.pop("traces")):
        _write_csv(os.path.join(outdir, f"current_eps{_eps_tag(eps)}.csv"),
                   header, ((t, *p) for t, p in zip(trace.ts, trace.pdot)))
    result = {k: chk[k] for k in ("eps", "dP_theta", "dP_dyn",
                                  "r_current", "r_charge")}
    if max(chk["r_charge"]) <= 1e-8 and max(chk["r_current"]) <= 1e-8:
        # static-limit null: residuals at the noise floor, slopes meaningless
        passed = True
    elif len(config.eps) >= 2:
        result["slope_current"] = chk["slope_current"]
        result["slope_charge"] = chk["slope_charge"]
        passed = chk["slope_charge"] >= 1.5 and chk["slope_current"] >= 0.9
    else:
        passed = chk["r_charge"][0] <= 1e-2
    return result, passed


def _run_semiclassics(pot, mesh, config, shared, outdir):
    from .semiclassics import growth_exponent, wavepacket_check

    if mesh.lattice.d != 1:
        return {"skipped": "wavepacket check is one-dimensional"}, True
    runs = wavepacket_check(pot, 0, config.eps, nk=config.n_k[0],
                            nt=config.n_t, n_cut=config.n_cut,
                            c=config.substep)
    finals, exponents = [], []
    for run in runs:
        _write_csv(
            os.path.join(outdir, f"trajectory_eps{_eps_tag(run.eps)}.csv"),
            ["t", "q_measured", "q_predicted", "q_uncorrected"],
            zip(run.ts, run.measured, run.predicted, run.predicted_uncorrected))
        finals.append(float(run.err[-1]))
        exponents.append(growth_exponent(run))
    result = {
        "eps": list(config.eps),
        "final_error": finals,
        "final_error_uncorrected": [float(r.err_uncorrected[-1]) for r in runs],
        "growth_exponent": exponents,
    }
    if max(finals) <= 1e-6:
        # static-limit null: the packet does not move and errors sit at the floor
        return result, True
    passed = True
    if len(runs) >= 2:
        ratio = finals[-2] / max(finals[-1], 1e-300)
        result["last_pair_ratio"] = float(ratio)
        passed = 3.0 <= ratio <= 5.0 and exponents[-1] <= 2.3
    return result, passed


def _run_symmetry(pot, mesh, config, shared, outdir):
    from .symmetry import symmetry_report

    field, curv = _get_curvature(pot, mesh, config, shared)
    rep = symmetry_report(pot, field, curv)
    result = {
        "inversion_symmetric": rep.flags.inversion,
        "real_potential": rep.flags.real,
        "defects": rep.defects,
    }
    worst = max((v for d in rep.defects.values() for v in d.values()),
                default=0.0)
    return result, worst <= 1e-9


_RUNNERS = {
    "bands": _run_bands,
    "curvature": _run_curvature,
    "polarize": _run_polarize,
    "pump": _run_pump,
    "superadiabatic": _run_superadiabatic,
    "dynamics": _run_dynamics,
    "semiclassics": _run_semiclassics,
    "symmetry": _run_symmetry,
}


# ----------------------------------------------------------------------
# orchestration

def _build_potential(config):
    from . import model

    builders = {
        "static": model.static_potential,
        "sliding_cosine": model.sliding_cosine,
        "two_harmonic": model.two_harmonic_loop,
        "ramp": model.ramp_potential,
    }
    kwargs = dict(config.params)
    if config.generators is not None:
        kwargs["lattice"] = model.make_lattice(config.generators)
    return builders[config.family](**kwargs)


def run(config: RunConfig, verbose=False) -> RunReport:
    """Execute the requested analyses and write all artifacts to outdir.

    Outputs are deterministic: identical config gives identical CSV and
    report.json bytes (for a fixed BLAS thread count).  Wall-clock timings
    go to a separate timings.json that is excluded from that guarantee.
    """
    from .model import make_mesh

    pot = _build_potential(config)
    d = pot.lattice.d
    n_k = config.n_k if len(config.n_k) == d else config.n_k * d
    mesh = make_mesh(pot, n_k, config.n_t)
    os.makedirs(config.outdir, exist_ok=True)

    shared = {}
    results = {}
    timings = {}
    passed = True
    for name in config.analyses:
        if verbose:
            print(f"running {name} ...", file=sys.stderr)
        tic = time.perf_counter()
        try:
            result, ok = _RUNNERS[name](pot, mesh, config, shared, config.outdir)
        except BlochPumpError as e:
            raise type(e)(f"in analysis {name!r} "
                          f"(family {pot.name!r}, eps {list(config.eps)}): {e}") from e
        timings[name] = time.perf_counter() - tic
        result["passed"] = bool(ok)
        results[name] = result
        passed &= bool(ok)
        if verbose:
            print(f"  {name}: {'pass' if ok else 'FAIL'} "
                  f"({timings[name]:.2f} s)", file=sys.stderr)

    report = RunReport(config=_plain(dataclasses.asdict(config)),
                       version=__version__, results=_plain(results),
                       passed=passed)
    payload = {"schema": 1, "version": report.version,
               "config": report.config, "results": report.results,
               "passed": report.passed}
    with open(os.path.join(config.outdir, "report.json"), "w", newline="\n") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")
    with open(os.path.join(config.outdir, "timings.json"), "w", newline="\n") as f:
        json.dump({k: round(v, 6) for k, v in timings.items()}, f,
                  sort_keys=True, indent=2)
        f.write("\n")
    return report


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="blochpump",
        description="Adiabatic charge transport in slowly deformed crystals: "
                    "band geometry, pumping, and wavepacket checks.")
    parser.add_argument("analysis", nargs="?", choices=ANALYSES + ("all",),
                        help="run a single analysis, overriding the config")
    parser.add_argument("--config", required=True, metavar="PATH",
                        help="INI config file (see module docstring)")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory, overrides [run] out")
    parser.add_argument("--threads", type=int, metavar="N",
                        help="cap BLAS threads (set before numpy loads)")
    parser.add_argument("--verbose", action="store_true",
                        help="progress and timings on stderr")
    args = parser.parse_args(argv)

    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
        if "numpy" in sys.modules:
            print("warning: numpy already loaded, --threads may not take "
                  "effect", file=sys.stderr)

    try:
        with open(args.config) as f:
            text = f.read()
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.analysis:
        names = ANALYSES if args.analysis == "all" else (args.analysis,)
        config = dataclasses.replace(config, analyses=names)
    if args.out:
        config = dataclasses.replace(config, outdir=args.out)

    try:
        report = run(config, verbose=args.verbose)
    except BlochPumpError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    for name, result in report.results.items():
        print(f"{'PASS' if result['passed'] else 'FAIL'} {name}")
    print("all checks passed" if report.passed else "some checks failed")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
