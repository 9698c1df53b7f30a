"""Command-line front end: model ingestion, dispatch, CSV/JSON reports.

Model files are JSON documents with explicit re/im arrays::

    {
      "dim": 2,
      "hamiltonian": {"re": [[0, 0.5], [0.5, 0]], "im": [[0, 0], [0, 0]]},
      "jumps": [{"re": [[0, 0], [1, 0]], "im": [[0, 0], [0, 0]], "alpha": 1.0}],
      "initial_state": {"kind": "pure", "vector": {"re": [1, 0], "im": [0, 0]}},
      "orthogonal_state": {"vector": {"re": [0, 1], "im": [0, 0]}},
      "grid": {"t_max": 1.0, "steps": 4096}
    }

Schema violations are reported with JSON-pointer paths.  ``--out`` is a path
stem: the tool writes ``<out>.json`` and/or ``<out>.csv`` (per-relation CSVs
for ``suite``).  Exit codes: 0 success, 2 validation failure, 3 bound
evaluation with no applicable points, 64 usage error, 66 unreadable file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from importlib import resources

import numpy as np

from . import bounds as bounds_api
from .activity import dynamical_activity
from .counting import DEFAULT_MC_STEPS, counting_moments, simulate_trajectories
from .model import LindbladModel, ket, sigma_x, sigma_y, sigma_z, validate_model
from .propagate import TimeGrid, evolve_density

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INAPPLICABLE = 3
EXIT_USAGE = 64
EXIT_NOINPUT = 66

BUNDLED_MODELS = (
    "amplitude_damping",
    "closed_qubit",
    "driven_dissipative",
    "classical_two_state",
)


class UsageError(Exception):
    pass


class SchemaError(Exception):
    """Model document violates the schema; message carries a JSON pointer."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# model document handling


def _number(node, ptr):
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise SchemaError(f"{ptr}: expected a number")
    return float(node)


def _real_grid(node, dim, ptr):
    if not isinstance(node, list) or len(node) != dim:
        raise SchemaError(f"{ptr}: expected a {dim}x{dim} array")
    rows = []
    for i, row in enumerate(node):
        if not isinstance(row, list) or len(row) != dim:
            raise SchemaError(f"{ptr}/{i}: expected a row of {dim} numbers")
        rows.append([_number(x, f"{ptr}/{i}/{j}") for j, x in enumerate(row)])
    return np.array(rows, dtype=float)


def _real_list(node, dim, ptr):
    if not isinstance(node, list) or len(node) != dim:
        raise SchemaError(f"{ptr}: expected an array of {dim} numbers")
    return np.array([_number(x, f"{ptr}/{i}") for i, x in enumerate(node)], dtype=float)


def _complex_matrix(node, dim, ptr):
    if not isinstance(node, dict):
        raise SchemaError(f"{ptr}: expected an object with re/im arrays")
    for key in ("re", "im"):
        if key not in node:
            raise SchemaError(f"{ptr}/{key}: missing")
    return _real_grid(node["re"], dim, f"{ptr}/re") + 1j * _real_grid(node["im"], dim, f"{ptr}/im")


def _complex_vector(node, dim, ptr):
    if not isinstance(node, dict):
        raise SchemaError(f"{ptr}: expected an object with re/im arrays")
    for key in ("re", "im"):
        if key not in node:
            raise SchemaError(f"{ptr}/{key}: missing")
    return _real_list(node["re"], dim, f"{ptr}/re") + 1j * _real_list(node["im"], dim, f"{ptr}/im")


def parse_model_document(doc) -> tuple[LindbladModel, TimeGrid]:
    """Turn a parsed JSON document into a model and grid (schema errors raise)."""
    if not isinstance(doc, dict):
        raise SchemaError("/: expected an object")
    if "dim" not in doc:
        raise SchemaError("/dim: missing")
    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError("/dim: expected a positive integer")

    if "hamiltonian" not in doc:
        raise SchemaError("/hamiltonian: missing")
    h = _complex_matrix(doc["hamiltonian"], dim, "/hamiltonian")

    jumps, weights = [], []
    for i, node in enumerate(doc.get("jumps", [])):
        ptr = f"/jumps/{i}"
        if not isinstance(node, dict):
            raise SchemaError(f"{ptr}: expected an object")
        jumps.append(_complex_matrix(node, dim, ptr))
        weights.append(_number(node.get("alpha", 1.0), f"{ptr}/alpha"))

    if "initial_state" not in doc:
        raise SchemaError("/initial_state: missing")
    init_node = doc["initial_state"]
    if not isinstance(init_node, dict) or "kind" not in init_node:
        raise SchemaError("/initial_state/kind: missing")
    kind = init_node["kind"]
    if kind == "pure":
        if "vector" not in init_node:
            raise SchemaError("/initial_state/vector: missing")
        initial = _complex_vector(init_node["vector"], dim, "/initial_state/vector")
    elif kind == "density":
        if "matrix" not in init_node:
            raise SchemaError("/initial_state/matrix: missing")
        initial = _complex_matrix(init_node["matrix"], dim, "/initial_state/matrix")
    else:
        raise SchemaError('/initial_state/kind: expected "pure" or "density"')

    orth = None
    if "orthogonal_state" in doc and doc["orthogonal_state"] is not None:
        node = doc["orthogonal_state"]
        if not isinstance(node, dict) or "vector" not in node:
            raise SchemaError("/orthogonal_state/vector: missing")
        orth = _complex_vector(node["vector"], dim, "/orthogonal_state/vector")

    if "grid" not in doc:
        raise SchemaError("/grid: missing")
    gnode = doc["grid"]
    if not isinstance(gnode, dict):
        raise SchemaError("/grid: expected an object")
    for key in ("t_max", "steps"):
        if key not in gnode:
            raise SchemaError(f"/grid/{key}: missing")
    t_max = _number(gnode["t_max"], "/grid/t_max")
    steps = gnode["steps"]
    if isinstance(steps, bool) or not isinstance(steps, int):
        raise SchemaError("/grid/steps: expected an integer")

    try:
        model = LindbladModel(h, tuple(jumps), tuple(weights), initial, orth)
        grid = TimeGrid(t_max, steps)
    except ValueError as exc:
        raise SchemaError(f"/: {exc}") from exc
    return model, grid


def serialize_model(m: LindbladModel, grid: TimeGrid) -> dict:
    """Inverse of :func:`parse_model_document`; floats round-trip bitwise."""
    def cm(a):
        return {"re": a.real.tolist(), "im": a.imag.tolist()}

    doc = {
        "dim": m.dim,
        "hamiltonian": cm(m.hamiltonian),
        "jumps": [dict(cm(l), alpha=w) for l, w in zip(m.jumps, m.weights)],
        "initial_state": (
            {"kind": "pure", "vector": cm(m.initial_state)}
            if m.is_pure_initial
            else {"kind": "density", "matrix": cm(m.initial_state)}
        ),
        "grid": {"t_max": grid.t_max, "steps": grid.steps},
    }
    if m.orthogonal_state is not None:
        doc["orthogonal_state"] = {"vector": cm(m.orthogonal_state)}
    return doc


def model_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def bundled_model_text(name: str) -> str:
    if name not in BUNDLED_MODELS:
        raise KeyError(name)
    return resources.files("qdyn.models").joinpath(f"{name}.json").read_text()


def load_bundled_model(name: str) -> tuple[LindbladModel, TimeGrid]:
    return parse_model_document(json.loads(bundled_model_text(name)))


def write_bundled_examples(dest: str) -> list[str]:
    """Install the bundled model files under ``dest``; returns the paths."""
    os.makedirs(dest, exist_ok=True)
    written = []
    for name in BUNDLED_MODELS:
        path = os.path.join(dest, f"{name}.json")
        _write_atomic(path, bundled_model_text(name))
        written.append(path)
    return written


def _load_model_arg(spec: str) -> tuple[LindbladModel, TimeGrid, dict]:
    """Resolve --model as a file path or a bundled model name."""
    if os.path.exists(spec):
        try:
            with open(spec, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise FileNotFoundError(str(exc)) from exc
    elif spec in BUNDLED_MODELS:
        text = bundled_model_text(spec)
    else:
        raise FileNotFoundError(f"model file not found: {spec}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"/: invalid JSON ({exc})") from exc
    model, grid = parse_model_document(doc)
    return model, grid, doc


# ---------------------------------------------------------------------------
# output emission


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qdyn-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: list[str], columns: list[np.ndarray]) -> str:
    lines = [",".join(header)]
    n = len(columns[0])
    for k in range(n):
        lines.append(",".join(_fmt(col[k]) for col in columns))
    return "\n".join(lines) + "\n"


def _emit(args, json_doc: dict, csv_parts: dict[str, str]) -> None:
    fmt = args.format
    want_json = fmt in ("json", "both")
    want_csv = fmt in ("csv", "both") and csv_parts
    text = json.dumps(json_doc, indent=2)
    if args.out is None:
        if want_json:
            print(text)
        if want_csv:
            if len(csv_parts) > 1:
                raise UsageError("--out is required when emitting multiple CSV files")
            sys.stdout.write(next(iter(csv_parts.values())))
        return
    if want_json:
        _write_atomic(args.out + ".json", text + "\n")
    if want_csv:
        if len(csv_parts) == 1:
            _write_atomic(args.out + ".csv", next(iter(csv_parts.values())))
        else:
            for name, part in csv_parts.items():
                _write_atomic(f"{args.out}.{name}.csv", part)


# ---------------------------------------------------------------------------
# observables


def resolve_observable(spec: str, model: LindbladModel):
    """Return ("field", None, tag) or ("system", matrix, tag)."""
    if spec == "total-jumps":
        return "field", None, "field:total-jumps"
    named = {"sigma_x": sigma_x, "sigma_y": sigma_y, "sigma_z": sigma_z}
    if spec in named:
        if model.dim != 2:
            raise UsageError(f"observable {spec} requires a qubit model")
        return "system", named[spec], spec
    if spec.startswith("projector:"):
        k = int(spec.split(":", 1)[1])
        if not 0 <= k < model.dim:
            raise UsageError(f"projector index {k} out of range for dim {model.dim}")
        e = ket(model.dim, k)
        return "system", np.outer(e, e.conj()), spec
    if os.path.exists(spec):
        with open(spec, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        mat = _complex_matrix(doc, model.dim, "/")
        return "system", mat, f"file:{os.path.basename(spec)}"
    raise UsageError(f"unknown observable {spec!r}")


# ---------------------------------------------------------------------------
# report summaries


def _sign_summary(report) -> str | None:
    if report.sign_choice is None:
        return None
    signs = set(int(s) for s in np.asarray(report.sign_choice))
    if signs == {1}:
        return "+"
    if signs == {-1}:
        return "-"
    return "mixed"


def bound_summary(report, mhash: str) -> dict:
    applicable = int(report.applicable.sum())
    violations = int((~report.satisfied[report.applicable]).sum()) if applicable else 0
    out = {
        "relation": report.relation,
        "model_hash": mhash,
        "observable": report.observable_tag,
        "tolerance": report.tolerance,
        "points": len(report.grid),
        "applicable": applicable,
        "inapplicable": len(report.grid) - applicable,
        "violations": violations,
        "min_slack": None if applicable == 0 else report.min_slack,
        "sign_choice": _sign_summary(report),
    }
    if "clamped_points" in report.extras:
        out["clamped_points"] = report.extras["clamped_points"]
    return out


def bound_csv(report) -> str:
    return csv_text(
        ["t", "lhs", "rhs", "slack"],
        [report.grid.points, report.lhs, report.rhs, report.slack],
    )


# ---------------------------------------------------------------------------
# commands


def _cmd_validate(args):
    model, grid, _doc = _load_model_arg(args.model)
    report = validate_model(model)
    print(str(report))
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _require_valid(model):
    report = validate_model(model)
    if not report.ok:
        print(str(report), file=sys.stderr)
        return False
    return True


def _cmd_evolve(args):
    model, grid, doc = _load_model_arg(args.model)
    if not _require_valid(model):
        return EXIT_VALIDATION
    series = evolve_density(model, grid)
    rho = series.values
    d = model.dim
    traces = np.einsum("kaa->k", rho).real
    mineig = min(np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() for r in rho)
    summary = {
        "command": "evolve",
        "model_hash": model_hash(doc),
        "points": len(grid),
        "max_trace_deviation": float(np.abs(traces - 1.0).max()),
        "min_eigenvalue": float(mineig),
        "final_state": {"re": rho[-1].real.tolist(), "im": rho[-1].imag.tolist()},
    }
    header = ["t"]
    cols = [grid.points]
    for i in range(d):
        for j in range(d):
            header += [f"rho_re_{i}_{j}", f"rho_im_{i}_{j}"]
            cols += [rho[:, i, j].real, rho[:, i, j].imag]
    _emit(args, summary, {"evolve": csv_text(header, cols)})
    return EXIT_OK


def _cmd_activity(args):
    model, grid, doc = _load_model_arg(args.model)
    if not _require_valid(model):
        return EXIT_VALIDATION
    bundle = dynamical_activity(model, grid)
    summary = {
        "command": "activity",
        "model_hash": model_hash(doc),
        "points": len(grid),
        "classical_final": float(bundle.classical[-1]),
        "quantum_final": float(bundle.quantum[-1]),
        "total_final": float(bundle.total[-1]),
    }
    part = csv_text(
        ["t", "A", "Bq", "B", "J"],
        [grid.points, bundle.classical, bundle.quantum, bundle.total, bundle.fisher],
    )
    _emit(args, summary, {"activity": part})
    return EXIT_OK


def _cmd_counting(args):
    model, grid, doc = _load_model_arg(args.model)
    if not _require_valid(model):
        return EXIT_VALIDATION
    moments = counting_moments(model, grid, target="rho")
    summary = {
        "command": "counting",
        "model_hash": model_hash(doc),
        "points": len(grid),
        "mean_final": float(moments.mean[-1]),
        "variance_final": float(moments.variance[-1]),
        "rate_final": float(moments.rate[-1]),
    }
    part = csv_text(
        ["t", "mean", "variance", "rate"],
        [grid.points, moments.mean, moments.variance, moments.rate],
    )
    _emit(args, summary, {"counting": part})
    return EXIT_OK


def _cmd_trajectories(args):
    model, grid, doc = _load_model_arg(args.model)
    if not _require_valid(model):
        return EXIT_VALIDATION
    ens = simulate_trajectories(model, grid.t_max, args.trajectories, args.seed)
    summary = {
        "command": "trajectories",
        "model_hash": model_hash(doc),
        "t_max": grid.t_max,
        "steps": DEFAULT_MC_STEPS,
        "n_traj": ens.n_traj,
        "seed": ens.seed,
        "mean": ens.mean,
        "variance": ens.variance,
        "se_mean": ens.se_mean,
        "se_variance": ens.se_variance,
    }
    _emit(args, summary, {})
    return EXIT_OK


def _relation_report(model, grid, relation, observable_spec, tolerance):
    inputs = bounds_api.compute_inputs(model, grid)
    if relation in ("mp_sum_tur", "mp_product_tur"):
        family, matrix, tag = resolve_observable(observable_spec or "total-jumps", model)
        obs = "field" if family == "field" else matrix
        fn = bounds_api.mp_sum_tur if relation == "mp_sum_tur" else bounds_api.mp_product_tur
        return fn(model, grid, obs, inputs, tolerance)
    if relation == "rs_system_tur":
        family, matrix, tag = resolve_observable(observable_spec or "projector:0", model)
        if family != "system":
            raise UsageError("rs_system_tur requires a system observable")
        return bounds_api.rs_system_tur(model, grid, matrix, inputs, tolerance=tolerance)
    if observable_spec is not None:
        raise UsageError(f"relation {relation} does not take an observable")
    if relation == "robertson_tur":
        return bounds_api.robertson_tur(model, grid, inputs, tolerance)
    if relation == "robertson_qsl":
        return bounds_api.robertson_qsl(model, grid, inputs, tolerance)
    if relation == "mp_qsl":
        return bounds_api.mp_qsl(model, grid, inputs, tolerance)
    if relation == "rs_field_tur":
        return bounds_api.rs_field_tur(model, grid, inputs, tolerance=tolerance)
    if relation == "rs_qsl":
        return bounds_api.rs_qsl(model, grid, inputs, tolerance)
    raise UsageError(f"unknown relation {relation!r}")


def _cmd_bounds(args):
    model, grid, doc = _load_model_arg(args.model)
    if not _require_valid(model):
        return EXIT_VALIDATION
    if args.relation is None:
        raise UsageError("bounds requires --relation")
    if args.relation not in bounds_api.RELATIONS:
        raise UsageError(f"unknown relation {args.relation!r}; "
                         f"choose from {', '.join(bounds_api.RELATIONS)}")
    report = _relation_report(model, grid, args.relation, args.observable, args.tolerance)
    summary = bound_summary(report, model_hash(doc))
    _emit(args, summary, {report.relation: bound_csv(report)})
    if report.n_applicable == 0:
        return EXIT_INAPPLICABLE
    return EXIT_OK


def _cmd_suite(args):
    model, grid, doc = _load_model_arg(args.model)
    if not _require_valid(model):
        return EXIT_VALIDATION
    system_obs = None
    if args.observable is not None:
        family, matrix, _tag = resolve_observable(args.observable, model)
        if family != "system":
            raise UsageError("suite --observable selects the system observable; "
                             "use sigma_*, projector:k or a matrix file")
        system_obs = matrix
    reports = bounds_api.run_suite(model, grid, system_observable=system_obs,
                                   tolerance=args.tolerance)
    mhash = model_hash(doc)
    summary = {
        "command": "suite",
        "model_hash": mhash,
        "grid": {"t_max": grid.t_max, "steps": grid.steps},
        "relations": [bound_summary(r, mhash) for r in reports.values()],
    }
    csv_parts = {name: bound_csv(r) for name, r in reports.items()}
    _emit(args, summary, csv_parts)
    return EXIT_OK


def _cmd_examples(args):
    written = write_bundled_examples(args.dest)
    for path in written:
        print(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> _Parser:
    parser = _Parser(prog="qdyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    def add(name, fn, needs_model=True, needs_out=True):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        if needs_model:
            p.add_argument("--model", required=False)
            p.add_argument("model_positional", nargs="?", metavar="MODEL")
        if needs_out:
            p.add_argument("--out", default=None)
            p.add_argument("--format", choices=("csv", "json", "both"), default="json")
        return p

    add("validate", _cmd_validate, needs_out=False)
    add("evolve", _cmd_evolve)
    add("activity", _cmd_activity)
    add("counting", _cmd_counting)

    p = add("trajectories", _cmd_trajectories)
    p.add_argument("--trajectories", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)

    p = add("bounds", _cmd_bounds)
    p.add_argument("--relation", default=None)
    p.add_argument("--observable", default=None)
    p.add_argument("--tolerance", type=float, default=bounds_api.DEFAULT_TOLERANCE)

    p = add("suite", _cmd_suite)
    p.add_argument("--observable", default=None)
    p.add_argument("--tolerance", type=float, default=bounds_api.DEFAULT_TOLERANCE)

    p = sub.add_parser("examples")
    p.set_defaults(fn=_cmd_examples)
    p.add_argument("--dest", default="examples")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "fn"):
            raise UsageError("a subcommand is required "
                             "(validate, evolve, activity, counting, bounds, trajectories, suite, examples)")
        if hasattr(args, "model_positional"):
            if args.model is None:
                args.model = args.model_positional
            if args.model is None:
                raise UsageError("--model is required")
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except SchemaError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
