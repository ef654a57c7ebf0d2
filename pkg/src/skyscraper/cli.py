"""Command-line front end: ``skyscraper gen | run | render``.

Exit codes: 0 success, 2 when classification says no conjugacy is possible,
1 for every other failure (a JSON error object is written to stderr).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

from .conjugacy import absorb, classify, lambda_approx_conjugacy, mu_approx_conjugacy
from .distribution import HeightDistribution, TargetSequence
from .dynamics import Transformation
from .exact import ExactNum, as_exact, parse_exact
from .generators import GENERATORS
from .render import (
    absorb_diagram,
    match_diagrams,
    rokhlin_diagram,
    render_ascii,
    render_svg,
    surgery_diagrams,
    transformation_diagram,
)
from .rokhlin import rokhlin_set
from .serialize import (
    ArtifactError,
    dumps,
    envelope,
    loads,
    map_artifact,
    open_envelope,
    parse_transformation,
    rebuild,
    transformation_text,
)
from .surgery import SurgeredPresentation, SurgeryStep, TowerCut, expand_at, expand_to, match_distributions

EXIT_OK, EXIT_FAIL, EXIT_IMPOSSIBLE = 0, 1, 2


class CLIError(ValueError):
    pass


@dataclass
class PipelineConfig:
    subcommand: str
    inputs: list = field(default_factory=list)
    out: Optional[str] = None
    epsilon: Optional[ExactNum] = None
    levels: Optional[int] = None
    force_through: int = 8
    budget: Optional[int] = None
    seed: int = 0
    discriminant: int = 5
    format: str = "ascii"
    samples: int = 1000

    def __post_init__(self):
        for name in ("budget", "levels"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise CLIError(f"{name} must be positive")
        if self.force_through < 0 or self.samples < 1:
            raise CLIError("force-through must be nonnegative and samples positive")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need_eps(cfg: PipelineConfig) -> ExactNum:
    if cfg.epsilon is None:
        raise CLIError("--epsilon is required")
    return cfg.epsilon


def _load_t(path: str) -> Transformation:
    return parse_transformation(_read(path))


# ---------------------------------------------------------------------------
# gen


def _gen_params(pairs):
    params = {}
    for item in pairs:
        if "=" not in item:
            raise CLIError(f"parameters are key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    return params


def gen(kind: str, params: dict, seed: int = 0, d: int = 5) -> str:
    if kind not in GENERATORS:
        raise CLIError(f"unknown generator {kind!r}")
    kwargs = dict(params)
    if kind == "shift":
        if set(kwargs) - {"d", "label"}:
            raise CLIError("shift takes d= and label=")
    elif kind == "geometric_skyscraper":
        if set(kwargs) - {"n0", "g", "w0", "r"}:
            raise CLIError("geometric_skyscraper takes n0=, g=, w0=, r=")
        for k in ("n0", "g"):
            if k in kwargs:
                kwargs[k] = int(kwargs[k])
        kwargs["d"] = d
    elif kind == "random_skyscraper":
        if set(kwargs) - {"seed"}:
            raise CLIError("random_skyscraper takes seed=")
        kwargs = {"seed": int(kwargs.get("seed", seed)), "d": d}
    else:
        if kwargs:
            raise CLIError(f"{kind} takes no parameters")
        kwargs = {"d": d}
    T = GENERATORS[kind](**kwargs)
    meta = {"generator": kind, "params": {k: str(v) for k, v in sorted(kwargs.items())}}
    return transformation_text(T, meta)


# ---------------------------------------------------------------------------
# run


def run_surgery(cfg: PipelineConfig, n: Optional[int], target) -> dict:
    T = _load_t(cfg.inputs[0])
    if T.conservative is None:
        raise CLIError("surgery needs a conservative part")
    c = T.conservative
    headroom = cfg.epsilon if cfg.epsilon is not None else as_exact(1)
    targets = TargetSequence((c.heights,), headroom)
    if n is not None:
        lam = target if target is not None else targets(n)
        step, P = expand_at(SurgeredPresentation(c), n, lam, targets)
        steps = [step]
    else:
        P = expand_to(c, targets, cfg.force_through, cfg.budget)
        steps = list(P.steps)
    return envelope("surgery_log", {
        "before": c.heights.to_json(),
        "after": P.distribution.to_json(),
        "targets": targets.to_json(),
        "steps": [s.to_json() for s in steps],
    })


def run_match(cfg: PipelineConfig) -> dict:
    T1, T2 = _load_t(cfg.inputs[0]), _load_t(cfg.inputs[1])
    eps = _need_eps(cfg)
    P1, P2, targets = match_distributions(T1, T2, eps, cfg.force_through, cfg.budget)
    return envelope("match", {
        "inputs": [T1.to_json(), T2.to_json()],
        "params": {"epsilon": str(eps), "force_through": cfg.force_through, "budget": cfg.budget},
        "base_measure": str(targets.total()),
        "per_height": [[h, str(P1.distribution.width(h)), str(P2.distribution.width(h))]
                       for h in range(1, cfg.force_through + 1)],
        "side1": P1.to_json(),
        "side2": P2.to_json(),
    })


def run_rokhlin(cfg: PipelineConfig) -> dict:
    T = _load_t(cfg.inputs[0])
    eps = _need_eps(cfg)
    if cfg.levels is None:
        raise CLIError("--levels/-N is required")
    rs = rokhlin_set(T, cfg.levels, eps, cfg.budget or 100_000)
    return envelope("rokhlin", {
        "N": cfg.levels,
        "epsilon": str(eps),
        "complement_measure": str(rs.complement_measure()),
        "disjoint_translates": rs.check_disjoint(4 * cfg.levels),
        "set": rs.to_json(),
    })


def run_absorb(cfg: PipelineConfig) -> dict:
    T = _load_t(cfg.inputs[0])
    eps = _need_eps(cfg)
    m = absorb(T, eps, cfg.budget or 100_000)
    return map_artifact("absorb", T, None, {"epsilon": eps, "budget": cfg.budget}, m)


def run_conjugate(cfg: PipelineConfig, measure: str) -> dict:
    T1, T2 = _load_t(cfg.inputs[0]), _load_t(cfg.inputs[1])
    eps = _need_eps(cfg)
    if measure == "mu":
        m = mu_approx_conjugacy(T1, T2, eps)
        return map_artifact("mu", T1, T2, {"epsilon": eps}, m)
    m = lambda_approx_conjugacy(T1, T2, eps, cfg.force_through, cfg.budget)
    return map_artifact("lambda", T1, T2, {"epsilon": eps, "force_through": cfg.force_through,
                                           "budget": cfg.budget}, m)


def run_verify(cfg: PipelineConfig) -> dict:
    obj = loads(_read(cfg.inputs[0]))
    m, stored = rebuild(obj)
    reproduced = dumps(m.to_json()) == dumps(stored)
    report = m.verify(cfg.samples, seed=cfg.seed)
    return envelope("verify_report", {
        "certificate": stored["certificate"],
        "certificate_reproduced": reproduced,
        "samples": report,
        "passed": bool(reproduced and report["passed"]),
    })


# ---------------------------------------------------------------------------
# render


def render_artifact(obj, fmt: str) -> str:
    data = open_envelope(obj)
    kind = obj["kind"]
    if kind == "transformation":
        diagrams = [transformation_diagram(Transformation.from_json(data))]
    elif kind == "surgery_log":
        steps = []
        for s in data["steps"]:
            n = s["n"]
            cuts, front = [], {}
            for k, q, w in s["per_tower_cuts"]:
                lo = front.get(k, ExactNum(0))
                cuts.append(TowerCut(k, q, lo, lo + parse_exact(w)))
                front[k] = lo + parse_exact(w)
            steps.append(SurgeryStep(n, parse_exact(s["lambda_n"]), parse_exact(s["delta"]), s["K"], s["m"],
                                     parse_exact(s["D_width"]), parse_exact(s["added_mass"]), tuple(cuts)))
        diagrams = list(surgery_diagrams(HeightDistribution.from_json(data["before"]),
                                         HeightDistribution.from_json(data["after"]), steps))
    elif kind == "match":
        T1, T2 = (Transformation.from_json(t) for t in data["inputs"])
        p = data["params"]
        P1, P2, _ = match_distributions(T1, T2, parse_exact(p["epsilon"]), p["force_through"], p.get("budget"))
        diagrams = match_diagrams(P1, P2, p["force_through"])
    elif kind == "certified_map":
        m, _ = rebuild(obj)
        if data["construction"] == "absorb":
            diagrams = [absorb_diagram(m)]
        elif getattr(m, "presentations", None):
            diagrams = match_diagrams(*m.presentations, data["params"]["force_through"])
        else:
            diagrams = [transformation_diagram(m.source), transformation_diagram(m.target)]
    elif kind == "rokhlin":
        rs = data["set"]
        heights = HeightDistribution.from_json(rs["heights"]) if rs["heights"] is not None else None
        notes = [f"shift component {label}: cells of width {d}" for label, d in rs["components"]]
        diagrams = [rokhlin_diagram(data["N"], heights, parse_exact(data["complement_measure"]), notes)]
    else:
        raise CLIError(f"cannot render a {kind} artifact")
    return render_svg(diagrams) if fmt == "svg" else render_ascii(diagrams)


# ---------------------------------------------------------------------------
# argument parsing


def _exact_arg(text: str) -> ExactNum:
    try:
        return parse_exact(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=_exact_arg)
    p.add_argument("-N", "--levels", type=int)
    p.add_argument("--force-through", type=int, default=8)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--discriminant", type=int, default=5)
    p.add_argument("--format", choices=("ascii", "svg"), default="ascii")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skyscraper", description="Exact skyscraper constructions.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("kind", choices=sorted(GENERATORS))
    g.add_argument("params", nargs="*", help="key=value generator parameters")
    _common(g)

    r = sub.add_parser("run", help="run a construction")
    r.add_argument("pipeline", choices=("surgery", "match", "rokhlin", "absorb", "conjugate", "classify", "verify"))
    r.add_argument("inputs", nargs="+")
    r.add_argument("--n", type=int, help="surgery: single expansion at this height")
    r.add_argument("--target", type=_exact_arg, help="surgery: target mass for --n")
    r.add_argument("--measure", choices=("lambda", "mu"), default="lambda")
    r.add_argument("--samples", type=int, default=1000)
    _common(r)

    d = sub.add_parser("render", help="draw an artifact")
    d.add_argument("artifact")
    _common(d)
    return parser


_ARITY = {"surgery": 1, "match": 2, "rokhlin": 1, "absorb": 1, "conjugate": 2, "classify": 2, "verify": 1}


def _dispatch(args) -> int:
    if args.command == "gen":
        _emit(gen(args.kind, _gen_params(args.params), args.seed, args.discriminant), args.out)
        return EXIT_OK
    if args.command == "render":
        _emit(render_artifact(loads(_read(args.artifact)), args.format), args.out)
        return EXIT_OK

    cfg = PipelineConfig(args.pipeline, args.inputs, args.out, args.epsilon, args.levels, args.force_through,
                         args.budget, args.seed, args.discriminant, args.format, args.samples)
    if len(cfg.inputs) != _ARITY[cfg.subcommand]:
        raise CLIError(f"{cfg.subcommand} takes {_ARITY[cfg.subcommand]} input file(s)")
    if cfg.subcommand == "classify":
        cls = classify(_load_t(cfg.inputs[0]), _load_t(cfg.inputs[1]))
        _emit(str(cls) + "\n", cfg.out)
        return EXIT_OK if cls.possible else EXIT_IMPOSSIBLE
    if cfg.subcommand == "surgery":
        result = run_surgery(cfg, args.n, args.target)
    elif cfg.subcommand == "match":
        result = run_match(cfg)
    elif cfg.subcommand == "rokhlin":
        result = run_rokhlin(cfg)
    elif cfg.subcommand == "absorb":
        result = run_absorb(cfg)
    elif cfg.subcommand == "conjugate":
        result = run_conjugate(cfg, args.measure)
    else:
        result = run_verify(cfg)
        _emit(dumps(result), cfg.out)
        return EXIT_OK if result["data"]["passed"] else EXIT_FAIL
    _emit(dumps(result), cfg.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ArtifactError, CLIError, ValueError, RuntimeError, OSError, KeyError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
