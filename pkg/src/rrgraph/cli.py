"""Command-line front end.

Every command prints a run report (JSON with ``--json``); graph and
homomorphism outputs are embedded in the report and, with ``--out-dir``,
also written as files.  Deciders exit 0/1/2 for yes/no/inconclusive.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .bunchy import PreconditionError, classify, max_bunchy_factor, og_almost_bunchy
from .graph import GraphError, MultiGraph, dump_graph, graph_from_json, graph_to_json, higher_edge_graph, load_graph, to_dot
from .homomorphism import (
    GraphHom,
    HomomorphismError,
    check_right_resolver,
    construct_right_resolver,
    dump_hom,
    hom_to_json,
    minimal_factor,
    parse_hom,
)
from .pipeline import (
    BudgetExhausted,
    decide_og_iso_bfc,
    decide_og_iso_bunchy,
    probe_bunchy_factor_conjecture,
    road_colour,
    synchronize_to_cycle_of_bunches,
)
from .stability import (
    SizeGuardError,
    fiber_product,
    is_synchronizing,
    minimal_images_bruteforce,
    stability_relation,
    synchronizing_word,
)

EXIT_YES, EXIT_NO, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_VERIFY = 64, 70


class UsageError(Exception):
    pass


class VerificationFailure(Exception):
    pass


@dataclass
class RunReport:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, object] = field(default_factory=dict)
    verdicts: dict[str, object] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    budget: dict[str, object] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    exit_code: int = 0
    json_mode: bool = False

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "version": __version__,
            "inputs": self.inputs,
            "verdicts": self.verdicts,
            "outputs": self.outputs,
            "timings": self.timings,
            "budget": self.budget,
            "files": self.files,
            "exit_code": self.exit_code,
        }


def atomic_write(path: Path, data: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Context:
    def __init__(self, args: argparse.Namespace, report: RunReport):
        self.args = args
        self.report = report
        self.out_dir = Path(args.out_dir) if args.out_dir else None

    def read_graph(self, path: str, name: str = "graph") -> MultiGraph:
        data = self._read(path, name)
        return load_graph(data, allow_sinks=getattr(self.args, "allow_sinks", False))

    def _read(self, path: str, name: str) -> bytes:
        try:
            data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
        self.report.inputs[name] = "sha256:" + hashlib.sha256(data).hexdigest()
        return data

    def read_hom(self, path: str, name: str, domain: MultiGraph | None = None,
                 codomain: MultiGraph | None = None) -> GraphHom:
        data = self._read(path, name)
        states, edges, refs = parse_hom(data)
        base = Path(path).parent if path != "-" else Path(".")
        if domain is None:
            domain = self._resolve_ref(refs.get("domain"), base, f"{name}.domain")
        if codomain is None:
            if "codomain" in refs:
                codomain = self._resolve_ref(refs["codomain"], base, f"{name}.codomain")
            else:
                codomain = minimal_factor(domain).m_graph
        return GraphHom.from_maps(domain, codomain, states, edges)

    def _resolve_ref(self, ref, base: Path, name: str) -> MultiGraph:
        if ref is None:
            raise UsageError(f"{name}: no graph given and none referenced by the hom file")
        if isinstance(ref, dict):
            return graph_from_json(ref)
        p = Path(ref)
        return self.read_graph(str(p if p.is_absolute() else base / p), name)

    def emit_graph(self, key: str, G: MultiGraph, filename: str) -> str | None:
        self.report.outputs[key] = graph_to_json(G)
        if self.out_dir:
            path = self.out_dir / filename
            atomic_write(path, dump_graph(G))
            self.report.files.append(str(path))
            return filename
        return None

    def emit_hom(self, key: str, h: GraphHom, filename: str, domain_ref=None, codomain_ref=None) -> None:
        self.report.outputs[key] = hom_to_json(h, domain_ref, codomain_ref)
        if self.out_dir:
            path = self.out_dir / filename
            atomic_write(path, dump_hom(h, domain_ref, codomain_ref))
            self.report.files.append(str(path))

    def emit_dot(self, G: MultiGraph, hom: GraphHom | None = None) -> None:
        if self.args.dot:
            labels = hom.edge_dict() if hom is not None else None
            atomic_write(Path(self.args.dot), to_dot(G, labels))
            self.report.files.append(self.args.dot)

    def emit_figure(self, G: MultiGraph, hom: GraphHom | None = None, title: str | None = None) -> None:
        if self.args.figure:
            from .plotting import draw_graph

            draw_graph(G, self.args.figure, hom, title)
            self.report.files.append(self.args.figure)


def _abs(path: str) -> str | None:
    return None if path == "-" else str(Path(path).resolve())


def _verify(cond: bool, what: str) -> bool:
    if not cond:
        raise VerificationFailure(what)
    return True


# ---------------------------------------------------------------------------
# Commands

def cmd_minimize(ctx: Context) -> int:
    G = ctx.read_graph(ctx.args.graph)
    mf = minimal_factor(G)
    phi = construct_right_resolver(G, mf)
    ctx.report.verdicts["right_resolving"] = _verify(check_right_resolver(phi)[0], "resolver check failed")
    ctx.report.verdicts["minimal"] = mf.m_graph.n == G.n
    ctx.report.outputs["sigma"] = mf.sigma_map()
    m_ref = ctx.emit_graph("minimal_factor", mf.m_graph, "minimal.graph")
    ctx.emit_hom("resolver", phi, "resolver.hom", _abs(ctx.args.graph) if ctx.out_dir else None, m_ref)
    ctx.emit_dot(mf.m_graph)
    ctx.emit_figure(G, phi, "resolver onto M(G)")
    return EXIT_YES


def cmd_road_color(ctx: Context) -> int:
    G = ctx.read_graph(ctx.args.graph)
    res = road_colour(G, seed=ctx.args.seed, budget=ctx.args.budget)
    ctx.report.verdicts.update({
        "degree": res.degree,
        "period": res.period,
        "is_synchronizing": is_synchronizing(res.colouring),
        "chain_synchronizing": _verify(is_synchronizing(res.sync.synchronizer), "synchronizer check failed"),
        "target_matches_O": _verify(res.sync.matches_O, "target is not O_{D,p}"),
    })
    if res.period == 1:
        _verify(ctx.report.verdicts["is_synchronizing"], "aperiodic road colouring is not synchronizing")
    ctx.report.budget["steps"] = list(res.sync.methods)
    m_ref = ctx.emit_graph("bouquet", res.colouring.codomain, "bouquet.graph")
    ctx.emit_hom("colouring", res.colouring, "colouring.hom", _abs(ctx.args.graph) if ctx.out_dir else None, m_ref)
    ctx.emit_dot(G, res.colouring)
    ctx.emit_figure(G, res.colouring, "road colouring")
    return EXIT_YES


def cmd_sync_factor(ctx: Context) -> int:
    G = ctx.read_graph(ctx.args.graph)
    res = synchronize_to_cycle_of_bunches(G, seed=ctx.args.seed, budget=ctx.args.budget)
    ctx.report.verdicts.update({
        "is_synchronizing": _verify(is_synchronizing(res.synchronizer), "synchronizer check failed"),
        "q": res.q,
        "degree_sequence": list(res.degree_sequence),
        "target_matches_O": _verify(res.matches_O, "target differs from O_{M,q}"),
    })
    ctx.report.budget["steps"] = list(res.methods)
    ref = ctx.emit_graph("target", res.target, "target.graph")
    ctx.emit_hom("synchronizer", res.synchronizer, "synchronizer.hom", _abs(ctx.args.graph) if ctx.out_dir else None, ref)
    ctx.emit_dot(res.target)
    ctx.emit_figure(G, res.synchronizer, "synchronizer")
    return EXIT_YES


def cmd_decide_og(ctx: Context) -> int:
    G1 = ctx.read_graph(ctx.args.g1, "g1")
    G2 = ctx.read_graph(ctx.args.g2, "g2")
    mode = "bfc" if ctx.args.bfc else "bunchy"
    if not ctx.args.bfc and not ctx.args.bunchy and not (classify(G1).bunchy and classify(G2).bunchy):
        mode = "bfc"
    d = decide_og_iso_bunchy(G1, G2) if mode == "bunchy" else decide_og_iso_bfc(G1, G2)
    ctx.report.verdicts.update({
        "algorithm": mode,
        "isomorphic": d.equal,
        "conditional_on_bunchy_factor_conjecture": d.conditional,
        "reason": d.reason,
    })
    if d.component is not None:
        ctx.emit_graph("component", d.component, "component.graph")
        ctx.emit_dot(d.component)
        ctx.emit_figure(d.component, None, "common extension")
    return EXIT_YES if d.equal else EXIT_NO


def cmd_probe_bfc(ctx: Context) -> int:
    G = ctx.read_graph(ctx.args.graph)
    rep = probe_bunchy_factor_conjecture(G, budget=ctx.args.budget)
    ctx.report.verdicts.update({"status": rep.status, "severity": rep.severity})
    ctx.report.budget.update({"examined": rep.examined, "limit": ctx.args.budget})
    if rep.witness is not None:
        ctx.report.outputs["relation"] = rep.relation.to_json()
        ctx.emit_hom("witness", rep.witness, "witness.hom")
    if rep.status == "counterexample":
        print("CRITICAL: exhaustive search found no resolver with nontrivial stability", file=sys.stderr)
    return {"witness": EXIT_YES, "counterexample": EXIT_NO}.get(rep.status, EXIT_INCONCLUSIVE)


def cmd_fiber(ctx: Context) -> int:
    h1 = ctx.read_hom(ctx.args.hom1, "hom1")
    h2 = ctx.read_hom(ctx.args.hom2, "hom2")
    fp = fiber_product(h1, h2)
    ctx.report.verdicts["proj1_right_resolving"] = check_right_resolver(fp.proj1)[0]
    ctx.report.verdicts["proj2_right_resolving"] = check_right_resolver(fp.proj2)[0]
    ctx.report.verdicts["states"] = fp.product.n
    ctx.emit_graph("product", fp.product, "product.graph")
    ctx.emit_hom("proj1", fp.proj1, "proj1.hom")
    ctx.emit_hom("proj2", fp.proj2, "proj2.hom")
    ctx.emit_dot(fp.product)
    ctx.emit_figure(fp.product, None, "fiber product")
    return EXIT_YES


def cmd_higher_edge(ctx: Context) -> int:
    G = ctx.read_graph(ctx.args.graph)
    if ctx.args.k < 1:
        raise UsageError("-k must be positive")
    Hk = higher_edge_graph(G, ctx.args.k)
    ctx.report.verdicts.update({"states": Hk.n, "edges": Hk.m})
    ctx.emit_graph("higher_edge_graph", Hk, f"higher{ctx.args.k}.graph")
    ctx.emit_dot(Hk)
    ctx.emit_figure(Hk, None, f"higher edge graph, k={ctx.args.k}")
    return EXIT_YES


def _graph_and_hom(ctx: Context) -> tuple[MultiGraph, GraphHom]:
    G = ctx.read_graph(ctx.args.graph)
    codomain = ctx.read_graph(ctx.args.codomain, "codomain") if ctx.args.codomain else None
    if ctx.args.hom:
        phi = ctx.read_hom(ctx.args.hom, "hom", domain=G, codomain=codomain)
    else:
        phi = construct_right_resolver(G)
    ok, why = check_right_resolver(phi)
    if not ok:
        raise UsageError(f"not a right-resolver: {why}")
    return G, phi


def cmd_stability(ctx: Context) -> int:
    G, phi = _graph_and_hom(ctx)
    rel = stability_relation(phi)
    ctx.report.outputs["relation"] = rel.to_json()
    ctx.report.verdicts["nontrivial"] = not rel.is_trivial()
    ctx.report.verdicts["is_synchronizing"] = rel.labels == phi.fiber_partition().labels
    if ctx.args.images:
        try:
            ctx.report.outputs["minimal_images"] = [
                im.to_json() for I in phi.codomain.states for im in minimal_images_bruteforce(phi, I)
            ]
        except SizeGuardError as exc:
            ctx.report.budget["minimal_images"] = str(exc)
    ctx.emit_dot(G, phi)
    ctx.emit_figure(G, phi, "stability")
    return EXIT_YES


def cmd_sync_check(ctx: Context) -> int:
    G, phi = _graph_and_hom(ctx)
    sync = is_synchronizing(phi)
    ctx.report.verdicts["is_synchronizing"] = sync
    if sync:
        words = {I: synchronizing_word(phi, I) for I in phi.codomain.states}
        ctx.report.outputs["words"] = words
        if ctx.args.figure:
            from .plotting import draw_sync_trace

            longest = max(words, key=lambda I: len(words[I]))
            draw_sync_trace(phi, longest, words[longest], ctx.args.figure)
            ctx.report.files.append(ctx.args.figure)
    ctx.emit_dot(G, phi)
    return EXIT_YES if sync else EXIT_NO


def cmd_bg(ctx: Context) -> int:
    G = ctx.read_graph(ctx.args.graph)
    B, q = max_bunchy_factor(G)
    ctx.report.verdicts["bunchy"] = _verify(classify(B).bunchy, "B(G) is not bunchy")
    ctx.report.verdicts["states"] = B.n
    ref = ctx.emit_graph("bunchy_factor", B, "bunchy_factor.graph")
    ctx.emit_hom("quotient_map", q, "quotient.hom", _abs(ctx.args.graph) if ctx.out_dir else None, ref)
    ctx.emit_dot(B)
    ctx.emit_figure(B, None, "B(G)")
    return EXIT_YES


def cmd_og(ctx: Context) -> int:
    G = ctx.read_graph(ctx.args.graph)
    res = og_almost_bunchy(G)
    ctx.report.verdicts["is_synchronizing"] = _verify(is_synchronizing(res.synchronizer), "quotient not synchronizing")
    ctx.report.verdicts["bunchy"] = res.bunchy_verified
    ctx.report.outputs["relation"] = res.relation.to_json()
    ref = ctx.emit_graph("og", res.graph, "og.graph")
    ctx.emit_hom("synchronizer", res.synchronizer, "synchronizer.hom", _abs(ctx.args.graph) if ctx.out_dir else None, ref)
    ctx.emit_dot(res.graph)
    ctx.emit_figure(res.graph, None, "O(G)")
    return EXIT_YES


def cmd_bunchy(ctx: Context) -> int:
    G = ctx.read_graph(ctx.args.graph)
    c = classify(G)
    ctx.report.outputs["classification"] = c.to_json(G)
    ctx.report.verdicts.update({"bunchy": c.bunchy, "almost_bunchy": c.almost_bunchy})
    return EXIT_YES if c.bunchy else EXIT_NO


def cmd_export_dot(ctx: Context) -> int:
    G = ctx.read_graph(ctx.args.graph)
    phi = ctx.read_hom(ctx.args.hom, "hom", domain=G) if ctx.args.hom else None
    text = to_dot(G, phi.edge_dict() if phi else None)
    if ctx.args.dot:
        atomic_write(Path(ctx.args.dot), text)
        ctx.report.files.append(ctx.args.dot)
    else:
        ctx.report.outputs["dot"] = text
    ctx.emit_figure(G, phi)
    return EXIT_YES


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the full JSON report")
    common.add_argument("--dot", metavar="PATH", help="write a DOT rendering of the main output graph")
    common.add_argument("--figure", metavar="PATH", help="write a matplotlib figure (png, pdf, svg)")
    common.add_argument("--out-dir", metavar="DIR", help="write output graphs, homs and report.json here")
    common.add_argument("--seed", type=int, default=0, help="seed for search orders (default 0)")
    common.add_argument("--allow-sinks", action="store_true", help="accept graphs with sinks")

    p = argparse.ArgumentParser(prog="rrgraph", description="Right-resolving graph homomorphisms.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=func)
        return sp

    for name, func, text in (
        ("minimize", cmd_minimize, "minimal right-resolving factor M(G) and a resolver onto it"),
        ("bg", cmd_bg, "maximal bunchy factor B(G)"),
        ("og", cmd_og, "O(G) for an almost bunchy graph"),
        ("bunchy", cmd_bunchy, "bunchiness classification (exit 0 if bunchy)"),
    ):
        add(name, func, text).add_argument("graph")
    for name, func, text in (
        ("road-color", cmd_road_color, "road colouring of a constant out-degree graph"),
        ("sync-factor", cmd_sync_factor, "synchronizer onto the cycle of bunches O_{M,q}"),
    ):
        sp = add(name, func, text)
        sp.add_argument("graph")
        sp.add_argument("--budget", type=int, default=20000, help="colourings tried per search step")
    sp = add("decide-og", cmd_decide_og, "decide whether O(G1) and O(G2) are isomorphic")
    sp.add_argument("g1")
    sp.add_argument("g2")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--bunchy", action="store_true", help="inputs are bunchy (unconditional)")
    mode.add_argument("--bfc", action="store_true", help="go through B(G_i); conditional answer")
    sp = add("probe-bfc", cmd_probe_bfc, "search resolvers for nontrivial stability")
    sp.add_argument("graph")
    sp.add_argument("--budget", type=int, default=100000)
    sp = add("fiber", cmd_fiber, "fiber product of two right-resolvers")
    sp.add_argument("hom1")
    sp.add_argument("hom2")
    sp = add("higher-edge", cmd_higher_edge, "higher edge graph G^[k]")
    sp.add_argument("graph")
    sp.add_argument("-k", type=int, required=True)
    for name, func, text in (
        ("stability", cmd_stability, "stability relation of a right-resolver"),
        ("sync-check", cmd_sync_check, "is the resolver synchronizing (exit 0 if so)"),
    ):
        sp = add(name, func, text)
        sp.add_argument("graph")
        sp.add_argument("hom", nargs="?", help="resolver file; default: the canonical resolver onto M(G)")
        sp.add_argument("--codomain", help="codomain graph if the hom file does not reference one")
        if name == "stability":
            sp.add_argument("--images", action="store_true", help="also list minimal images")
    sp = add("export-dot", cmd_export_dot, "DOT export of a graph, optionally coloured by a resolver")
    sp.add_argument("graph")
    sp.add_argument("hom", nargs="?")
    return p


def run(argv: list[str] | None = None) -> tuple[int, RunReport | None]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_USAGE if exc.code not in (0, None) else 0), None
    report = RunReport(args.command, json_mode=args.json)
    ctx = Context(args, report)
    start = time.perf_counter()
    try:
        code = args.func(ctx)
    except (UsageError, GraphError, HomomorphismError, PreconditionError) as exc:
        print(f"rrgraph {args.command}: {exc}", file=sys.stderr)
        report.verdicts["error"] = str(exc)
        code = EXIT_USAGE
    except BudgetExhausted as exc:
        report.verdicts["error"] = str(exc)
        code = EXIT_INCONCLUSIVE
    except (VerificationFailure, AssertionError) as exc:
        print(f"rrgraph {args.command}: verification failed: {exc}", file=sys.stderr)
        report.verdicts["error"] = f"verification failed: {exc}"
        code = EXIT_VERIFY
    report.timings["total_s"] = round(time.perf_counter() - start, 6)
    report.exit_code = code
    if ctx.out_dir:
        path = ctx.out_dir / "report.json"
        report.files.append(str(path))
        atomic_write(path, json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    return code, report


def main(argv: list[str] | None = None) -> int:
    code, report = run(argv)
    if report is not None:
        if report.json_mode:
            json.dump(report.to_json(), sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write("\n")
        else:
            for key, value in report.verdicts.items():
                print(f"{key}: {json.dumps(value)}")
            for f in report.files:
                print(f"wrote: {f}")
    return code


if __name__ == "__main__":
    sys.exit(main())
