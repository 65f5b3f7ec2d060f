"""Batch front end for the construction pipeline.

Machine-first: every subcommand emits one JSON document (CSV on request
for tabular data) carrying an inline run manifest, so a report can be
traced back to the exact inputs that produced it.  Reruns with equal
manifests produce byte-identical output; no timestamps, no hostnames.

Exit codes: 0 success, 2 verification failure (reports still emitted),
3 input error (malformed files, bad flags, unusable parameters).
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction

import click

from . import __version__
from .coefficients import (PlanError, audit_plan,
                           code_coefficients, desk_plan, desk_policy,
                           extend_plan, grow_plan, paper_floor_policy,
                           plan_from_json, plan_to_json, plan_to_obj)
from .words import WordIndexError, dbar, word
from .circular import CircularParseError, parse_circular
from .systems import SequenceError, sequence_to_json
from .codes import apply_code, natural_code
from .rotation import build_red_zones, delta_csv, rotation_report_json
from .specbuild import (BuildError, ToleranceProfile, build_words,
                        check_specs, check_timing, gamma_cascade,
                        groups_from_tree, lift_build)
from .trees import (TreeError, certify_continuity, realization_handoff,
                    reduce as tree_reduce, tree_from_json)

CACHE_ENV = "CIRCSYS_CACHE"
ANCHOR_CAP = 1 << 24      # largest tower enumerated position by position


# ---------------------------------------------------------------------------
# manifest plumbing

@dataclass(frozen=True)
class RunManifest:
    command: str
    input_hashes: dict
    plan_hash: str | None
    seed: int | None
    tool_version: str
    outputs: tuple

    def digest(self) -> str:
        doc = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(doc.encode()).hexdigest()


def _hash_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_input(path: str) -> tuple:
    """(text, sha256) of one input file; missing file is an input error."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise click.ClickException(f"cannot read {path}: {exc}")
    return data.decode(), _hash_bytes(data)


def _emit(ctx, payload: dict, manifest: RunManifest) -> None:
    doc = {"manifest": asdict(manifest) | {"digest": manifest.digest()}}
    doc.update(payload)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    _write(ctx, text)


def _write(ctx, text: str) -> None:
    out = ctx.obj.get("out")
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _manifest(ctx, command: str, inputs: dict, plan=None,
              seed=None) -> RunManifest:
    plan_hash = None
    if plan is not None:
        plan_hash = _hash_bytes(plan_to_json(plan).encode())
    out = ctx.obj.get("out") or "-"
    return RunManifest(command, dict(sorted(inputs.items())), plan_hash,
                       seed, __version__, (out,))


# ---------------------------------------------------------------------------
# shared parsers

def _parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise click.ClickException(f"not a fraction: {text!r}")


def _parse_kl(text: str) -> tuple:
    """"64,4;2,2" -> ((64, 4), (2, 2))."""
    try:
        pairs = tuple(tuple(int(x) for x in part.split(","))
                      for part in text.split(";"))
    except ValueError:
        raise click.ClickException(f"bad --kl value: {text!r}")
    if any(len(p) != 2 for p in pairs):
        raise click.ClickException("--kl wants k,l pairs joined by ';'")
    return pairs


def _load_plan(ctx, plan_path, kl, eps, stages, inputs: dict):
    """Plan from a file, or a desk plan from --kl/--eps, optionally grown."""
    if plan_path is not None:
        text, digest = _read_input(plan_path)
        inputs[plan_path] = digest
        try:
            plan = plan_from_json(text)
        except (json.JSONDecodeError, KeyError, PlanError, ValueError) as exc:
            raise click.ClickException(f"bad plan file {plan_path}: {exc}")
    else:
        kwargs = {}
        if eps:
            kwargs["eps_lunate"] = tuple(_parse_fraction(e) for e in eps)
        try:
            plan = desk_plan(kl=_parse_kl(kl), **kwargs)
        except PlanError as exc:
            raise click.ClickException(str(exc))
    if stages is not None and stages > plan.depth - 1:
        policy = desk_policy() if plan.desk_mode else paper_floor_policy()
        while plan.depth - 1 < stages:
            plan = extend_plan(plan, policy)
    return plan


def _load_tree(path, inputs: dict):
    text, digest = _read_input(path)
    inputs[path] = digest
    try:
        return tree_from_json(text)
    except (json.JSONDecodeError, TreeError, TypeError, ValueError) as exc:
        raise click.ClickException(f"bad tree file {path}: {exc}")


def _scaffold_from(tree_path, inputs: dict):
    if tree_path is None:
        return groups_from_tree([(), (0,)])
    tp = _load_tree(tree_path, inputs)
    return groups_from_tree(tp.members_in_order())


def _report_obj(report) -> list:
    return json.loads(report.to_json())


def _frac_str(x) -> str:
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}"


# ---------------------------------------------------------------------------
# command group

@click.group(name="circsys")
@click.option("--out", default=None, metavar="PATH",
              help="Write the report here instead of stdout.")
@click.option("--jobs", default=1, show_default=True,
              help="Worker budget; results never depend on it.")
@click.pass_context
def cli(ctx, out, jobs):
    """Staged circular constructions: plans, builds, checks, reductions."""
    if jobs < 1:
        raise click.ClickException("--jobs must be at least 1")
    ctx.obj = {"out": out, "jobs": jobs}


_plan_opts = [
    click.option("--plan", "plan_path", default=None, metavar="FILE",
                 help="Plan JSON; omit for a desk plan from --kl."),
    click.option("--kl", default="2,2;2,2", show_default=True,
                 help="Desk plan stages as k,l pairs joined by ';'."),
    click.option("--eps", multiple=True, metavar="FRAC",
                 help="Per-stage separation tolerances for the desk plan."),
]


def _with(opts):
    def deco(f):
        for opt in reversed(opts):
            f = opt(f)
        return f
    return deco


@cli.command("plan")
@_with(_plan_opts)
@click.option("--desk/--floor", "desk", default=True,
              help="Growth policy when extending.")
@click.option("--stages", default=None, type=int,
              help="Grow the plan to this many stages.")
@click.option("--audit/--no-audit", default=True, show_default=True)
@click.pass_context
def plan_cmd(ctx, plan_path, kl, eps, desk, stages, audit):
    """Emit a coefficient plan, grown on request, with its audit."""
    inputs = {}
    if plan_path is None and stages is not None:
        policy = desk_policy() if desk else paper_floor_policy()
        plan = grow_plan(stages, policy)
    else:
        plan = _load_plan(ctx, plan_path, kl, eps, stages, inputs)
    payload = {"plan": plan_to_obj(plan)}
    if audit:
        rep = audit_plan(plan)
        payload["audit"] = _report_obj(rep)
        payload["audit_ok"] = rep.ok()
    man = _manifest(ctx, "plan", inputs, plan=plan)
    _emit(ctx, payload, man)
    return 0


_build_opts = _plan_opts + [
    click.option("--tree", "tree_path", default=None, metavar="FILE",
                 help="Tree-prefix JSON supplying the group scaffold."),
    click.option("--seed", default=0, show_default=True),
    click.option("--level", default=1, show_default=True,
                 help="Stages of words to construct."),
    click.option("--style", default="random", show_default=True,
                 type=click.Choice(["random", "separated"])),
]


def _run_build(ctx, plan_path, kl, eps, tree_path, seed, level, style,
               gate, inputs):
    plan = _load_plan(ctx, plan_path, kl, eps, None, inputs)
    sc = _scaffold_from(tree_path, inputs)
    if level > plan.depth:
        raise click.ClickException(
            f"--level {level} exceeds the plan depth {plan.depth}")
    try:
        built = build_words(sc, plan, seed=seed, level=level,
                            style=style, gate=gate)
    except BuildError as exc:
        return plan, None, exc.report
    return plan, built, built.report


@cli.command("build")
@_with(_build_opts)
@click.option("--gate/--no-gate", default=True, show_default=True,
              help="Retry until the verification report passes.")
@click.pass_context
def build_cmd(ctx, plan_path, kl, eps, tree_path, seed, level, style, gate):
    """Construct stage words against the verification gate."""
    inputs = {}
    plan, built, report = _run_build(ctx, plan_path, kl, eps, tree_path,
                                     seed, level, style, gate, inputs)
    payload = {"report": _report_obj(report), "ok": report.ok()}
    if built is not None:
        payload["sequence"] = json.loads(sequence_to_json(built.seq))
        payload["output_hash"] = _hash_bytes(
            json.dumps(payload["sequence"], sort_keys=True).encode())
    man = _manifest(ctx, "build", inputs, plan=plan, seed=seed)
    _emit(ctx, payload, man)
    return 0 if report.ok() else 2


@cli.command("lift")
@_with(_build_opts)
@click.pass_context
def lift_cmd(ctx, plan_path, kl, eps, tree_path, seed, level, style):
    """Build, then carry the odometer sequence to its circular image."""
    inputs = {}
    plan, built, report = _run_build(ctx, plan_path, kl, eps, tree_path,
                                     seed, level, style, True, inputs)
    payload = {"report": _report_obj(report), "ok": report.ok()}
    if built is not None:
        circ = lift_build(built)
        payload["sequence"] = json.loads(sequence_to_json(circ.seq))
        payload["output_hash"] = _hash_bytes(
            json.dumps(payload["sequence"], sort_keys=True).encode())
    man = _manifest(ctx, "lift", inputs, plan=plan, seed=seed)
    _emit(ctx, payload, man)
    return 0 if report.ok() else 2


@cli.command("check-specs")
@_with(_build_opts)
@click.option("--j-tolerance", default=None, metavar="FRAC",
              help="Counting-estimate tolerance, every stage.")
@click.pass_context
def check_specs_cmd(ctx, plan_path, kl, eps, tree_path, seed, level, style,
                    j_tolerance):
    """Run the word-spec battery on an ungated build."""
    inputs = {}
    plan, built, _ = _run_build(ctx, plan_path, kl, eps, tree_path,
                                seed, level, style, False, inputs)
    tol = None
    if j_tolerance is not None:
        jt = _parse_fraction(j_tolerance)
        tol = ToleranceProfile(j_family=lambda n: jt)
    report = check_specs(built, tol)
    payload = {"report": _report_obj(report), "ok": report.ok(),
               "failures": [e.spec_id for e in report.failures()]}
    man = _manifest(ctx, "check-specs", inputs, plan=plan, seed=seed)
    _emit(ctx, payload, man)
    return 0 if report.ok() else 2


@cli.command("check-timing")
@_with(_build_opts)
@click.pass_context
def check_timing_cmd(ctx, plan_path, kl, eps, tree_path, seed, level, style):
    """Run the staged timing battery, with the cascade lower bounds."""
    inputs = {}
    plan, built, _ = _run_build(ctx, plan_path, kl, eps, tree_path,
                                seed, level, style, False, inputs)
    gc = gamma_cascade(plan, level)
    report = check_timing(built, level, gamma=gc)
    payload = {
        "report": _report_obj(report), "ok": report.ok(),
        "gamma": [_frac_str(gc.gamma(n)) for n in range(1, level + 1)],
    }
    man = _manifest(ctx, "check-timing", inputs, plan=plan, seed=seed)
    _emit(ctx, payload, man)
    return 0 if report.ok() else 2


@cli.command("dbar")
@click.option("--u", "u_text", required=True, metavar="TEXT")
@click.option("--v", "v_text", required=True, metavar="TEXT")
@click.option("--a", default=None, type=int, help="Interval start.")
@click.option("--b", default=None, type=int, help="Interval end.")
@click.option("--mode", default="auto", show_default=True,
              type=click.Choice(["auto", "exact", "estimate"]))
@click.option("--seed", default=0, show_default=True)
@click.option("--samples", default=4096, show_default=True)
@click.pass_context
def dbar_cmd(ctx, u_text, v_text, a, b, mode, seed, samples):
    """Disagreement density between two words over one interval."""
    interval = None if a is None and b is None else \
        (a or 0, b if b is not None else min(len(u_text), len(v_text)))
    try:
        res = dbar(word(u_text), word(v_text), interval,
                   mode=mode, seed=seed, samples=samples)
    except (WordIndexError, ValueError) as exc:
        raise click.ClickException(str(exc))
    payload = {
        "kind": res.kind,
        "value": _frac_str(res.value),
        "value_float": float(res.value),
        "interval": list(res.interval),
    }
    if res.kind == "estimate":
        payload["half_width"] = _frac_str(res.half_width)
        payload["confidence"] = _frac_str(res.confidence)
        payload["samples"] = res.samples
    man = _manifest(ctx, "dbar", {}, seed=seed)
    _emit(ctx, payload, man)
    return 0


@cli.command("parse")
@click.option("--text", required=True, metavar="WORD")
@click.option("--k", required=True, type=int)
@click.option("--l", required=True, type=int)
@click.option("--p", required=True, type=int)
@click.option("--q", required=True, type=int)
@click.pass_context
def parse_cmd(ctx, text, k, l, p, q):
    """Invert the circular interleaving of one stage, or diagnose."""
    man = _manifest(ctx, "parse", {})
    try:
        dec = parse_circular(word(text), (k, l, p, q))
    except CircularParseError as exc:
        payload = {"ok": False, "position": exc.position,
                   "expected": exc.expected, "found": exc.found,
                   "detail": str(exc)}
        _emit(ctx, payload, man)
        return 2
    payload = {
        "ok": True, "k": k, "l": l, "p": p, "q": q,
        "preword": [w.materialize() for w in dec.preword],
        "j": list(dec.j),
        "boundary_fraction": _frac_str(dec.boundary_fraction),
    }
    _emit(ctx, payload, man)
    return 0


@cli.command("rotation")
@_with(_plan_opts)
@click.option("--stages", default=None, type=int,
              help="Grow the plan to this many stages first.")
@click.option("--beta", required=True, metavar="FRAC",
              help="Rotation number, a rational in [0, 1).")
@click.option("--n", "n_stages", default=2, show_default=True,
              help="Displacement rows to report.")
@click.option("--m", "anchor", default=None, type=int,
              help="Anchor stage; defaults to the plan depth.")
@click.option("--csv", "as_csv", is_flag=True,
              help="Displacement table as CSV instead of JSON.")
@click.option("--zones-delta", default=None, metavar="FRAC",
              help="Also build red zones to this uncovered density.")
@click.pass_context
def rotation_cmd(ctx, plan_path, kl, eps, stages, beta, n_stages, anchor,
                 as_csv, zones_delta):
    """Displacement, lane counts, and optional red-zone construction."""
    inputs = {}
    plan = _load_plan(ctx, plan_path, kl, eps, stages, inputs)
    b = _parse_fraction(beta)
    # q_m exists one stage past the last (k, l) pair
    m = anchor if anchor is not None else plan.depth
    if not 0 <= n_stages < m <= plan.depth:
        raise click.ClickException(
            f"need 0 <= --n < --m <= {plan.depth}")
    if plan.q(m) > ANCHOR_CAP:
        raise click.ClickException(
            f"anchor tower q_{m} = {plan.q(m)} exceeds the exact-counting "
            f"cap {ANCHOR_CAP}; pick a smaller --m")
    try:
        if as_csv:
            _write(ctx, delta_csv(plan, b, n_stages, m))
            return 0
        payload = json.loads(rotation_report_json(plan, b, n_stages, m))
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if zones_delta is not None:
        rz = build_red_zones(b, plan, m, _parse_fraction(zones_delta))
        payload["red_zones"] = {
            "anchor": rz.anchor,
            "target_density": _frac_str(rz.target_density),
            "achieved_density": _frac_str(rz.achieved_density),
            "shortfall": rz.shortfall,
            "layers": [{"stage": ly.stage, "block_size": ly.block_size,
                        "blocks": list(ly.blocks), "j0": ly.j0, "t": ly.t}
                       for ly in rz.layers],
        }
    man = _manifest(ctx, "rotation", inputs, plan=plan)
    _emit(ctx, payload, man)
    return 0


@cli.command("natural-map")
@_with(_plan_opts)
@click.option("--stages", default=None, type=int,
              help="Grow the plan to this many stages first.")
@click.option("--n", "stage_n", default=1, show_default=True,
              help="Approximation stage of the reversing code.")
@click.option("--text", default=None, metavar="WORD",
              help="Also apply the code to this window.")
@click.pass_context
def natural_map_cmd(ctx, plan_path, kl, eps, stages, stage_n, text):
    """Stage-n approximant of the reversing isomorphism."""
    inputs = {}
    plan = _load_plan(ctx, plan_path, kl, eps, stages, inputs)
    if not 0 <= stage_n <= plan.depth - 1:
        raise click.ClickException(
            f"--n must lie in [0, {plan.depth - 1}]")
    code = natural_code(plan, stage_n)
    payload = {
        "name": code.name,
        "radius": code.radius,
        "coefficients": code_coefficients(plan, stage_n),
    }
    if text is not None:
        if len(text) <= 2 * code.radius:
            raise click.ClickException(
                f"window shorter than the code diameter {2 * code.radius + 1}")
        payload["image"] = apply_code(code, text).text
    man = _manifest(ctx, "natural-map", inputs, plan=plan)
    _emit(ctx, payload, man)
    return 0


@cli.command("reduce")
@_with(_plan_opts)
@click.option("--tree", "tree_path", required=True, metavar="FILE")
@click.option("--depth", "n0", required=True, type=int)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def reduce_cmd(ctx, plan_path, kl, eps, tree_path, n0, seed):
    """Reduce a tree prefix to a hashed construction-sequence output."""
    inputs = {}
    plan = _load_plan(ctx, plan_path, kl, eps, None, inputs)
    tp = _load_tree(tree_path, inputs)
    man = _manifest(ctx, "reduce", inputs, plan=plan, seed=seed)
    cached = _cache_load(man)
    if cached is not None:
        _write(ctx, cached)
        return 0
    try:
        res = tree_reduce(tp, n0, plan, seed)
    except (TreeError, BuildError) as exc:
        raise click.ClickException(str(exc))
    payload = {
        "output_hash": res.output_hash,
        "plan_hash": res.plan_hash,
        "seed": res.seed,
        "depth": res.depth,
        "consumed": list(res.consumed),
        "exhausted": res.exhausted,
        "handoff": realization_handoff(res),
    }
    doc = {"manifest": asdict(man) | {"digest": man.digest()}}
    doc.update(payload)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    _cache_store(man, text)
    _write(ctx, text)
    return 0


@cli.command("continuity")
@_with(_plan_opts)
@click.option("--tree", "tree_path", required=True, metavar="FILE")
@click.option("--depth", "n0", required=True, type=int)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def continuity_cmd(ctx, plan_path, kl, eps, tree_path, n0, seed):
    """Certify, by mutation diffing, how much tree the reduction read."""
    inputs = {}
    plan = _load_plan(ctx, plan_path, kl, eps, None, inputs)
    tp = _load_tree(tree_path, inputs)
    try:
        cert = certify_continuity(tp, n0, plan, seed)
    except (TreeError, BuildError) as exc:
        raise click.ClickException(str(exc))
    payload = {
        "bound": cert.bound,
        "base_hash": cert.base_hash,
        "above_index": cert.above_index,
        "above_hash": cert.above_hash,
        "unaffected_above": cert.unaffected,
        "consumed_index": cert.consumed_index,
        "consumed_hash": cert.consumed_hash,
        "affected_at_consumed": cert.affected,
        "ok": cert.unaffected,
    }
    man = _manifest(ctx, "continuity", inputs, plan=plan, seed=seed)
    _emit(ctx, payload, man)
    return 0 if cert.unaffected else 2


# ---------------------------------------------------------------------------
# cache

def _cache_path(man: RunManifest):
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    os.makedirs(root, exist_ok=True)
    return os.path.join(root, man.digest() + ".json")


def _cache_load(man: RunManifest):
    path = _cache_path(man)
    if path and os.path.exists(path):
        with open(path) as fh:
            return fh.read()
    return None


def _cache_store(man: RunManifest, text: str) -> None:
    path = _cache_path(man)
    if path:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# entry point

def run(argv=None) -> int:
    """Dispatch one invocation and map exceptions to exit codes."""
    try:
        rc = cli.main(args=argv, standalone_mode=False)
        return int(rc) if isinstance(rc, int) else 0
    except click.exceptions.Exit as exc:
        return 0 if exc.exit_code == 0 else 3
    except click.ClickException as exc:
        exc.show()
        return 3
    except (PlanError, SequenceError, TreeError, WordIndexError,
            json.JSONDecodeError, ValueError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
