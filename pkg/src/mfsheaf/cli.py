"""Command line entry point: verify, compute, catalog, explore."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path
from typing import Any

import click

from . import catalog as cat
from . import harness
from .cohomology import hilbert_polynomial
from .errors import MfsheafError
from .homalg import (
    decompose,
    end_algebra,
    ext1_X,
    ext_p3,
    hom_basis,
    isomorphism_test,
    kernel_of_w,
    restrict_to_H,
)
from .presentation import SheafHandle, dumps, loads, to_json_dict, twist


def _value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(pairs: tuple[str, ...]) -> dict[str, Any]:
    out = {}
    for p in pairs:
        if "=" not in p:
            raise click.BadParameter(f"expected key=value, got {p!r}")
        k, v = p.split("=", 1)
        v = _value(v)
        out[k] = tuple(v) if isinstance(v, list) else v
    return out


def load_sheaf(source: str, params: dict[str, Any] | None = None, t: int = 0) -> SheafHandle:
    """A catalog name or a path to an MF JSON file."""
    if os.path.exists(source):
        e = loads(Path(source).read_text())
    else:
        e = cat.build(source, **(params or {}))
    return twist(e, t) if t else e


def _matrix(m) -> list[list[str]]:
    return [[str(x) for x in row] for row in m.entries]


def _emit(obj: Any) -> None:
    click.echo(json.dumps(harness.plain(obj), indent=2, sort_keys=True))


@click.group()
def main() -> None:
    """Matrix factorizations and sheaves on the double plane."""


@main.command()
@click.option("--check", "checks", multiple=True, help="check id (repeatable)")
@click.option("--all", "run_all", is_flag=True, help="run every registered check")
@click.option("--seed", default=7, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.option("--list", "list_only", is_flag=True, help="list check ids")
def verify(checks: tuple[str, ...], run_all: bool, seed: int, fmt: str, list_only: bool) -> None:
    """Run verification checks; exit status 1 on any FAIL."""
    if list_only:
        for c in harness.CHECKS.values():
            click.echo(f"{c.id:16} {c.description}")
        return
    if not checks and not run_all:
        raise click.UsageError("pass --check <id> or --all")
    try:
        rep = harness.verify(None if run_all else checks, seed)
    except MfsheafError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    click.echo(rep.dumps() if fmt == "json" else rep.text(), nl=False)
    sys.exit(1 if rep.failed else 0)


OPS = ["hom", "ext1x", "extp3", "end", "decompose", "iso", "kerw", "restrict"]


@main.command()
@click.argument("op", type=click.Choice(OPS))
@click.option("--sheaf", required=True, help="catalog name or JSON file")
@click.option("--param", "params", multiple=True, help="key=value for catalog builders")
@click.option("--twist", "t", default=0)
@click.option("--other", default=None, help="second sheaf for hom/ext/iso")
@click.option("--other-param", "oparams", multiple=True)
@click.option("--other-twist", "ot", default=0)
@click.option("--seed", default=7)
def compute(op: str, sheaf: str, params, t: int, other: str | None, oparams, ot: int, seed: int) -> None:
    """Compute one invariant and print it as JSON."""
    try:
        e = load_sheaf(sheaf, _params(params), t)
        f = load_sheaf(other, _params(oparams), ot) if other else None
        if op in ("hom", "ext1x", "extp3", "iso") and f is None:
            raise click.UsageError(f"{op} needs --other")
        _emit(_compute(op, e, f, seed))
    except MfsheafError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None


def _compute(op: str, e: SheafHandle, f: SheafHandle | None, seed: int) -> dict:
    if op == "hom":
        h = hom_basis(e, f)
        return {"dim": h.dim, "basis": [_matrix(u.beta) for u in h.basis]}
    if op == "ext1x":
        x = ext1_X(e, f)
        return {"dim": x.dim, "cocycles": [_matrix(z) for z in x.cocycles]}
    if op == "extp3":
        return {f"ext{i}": ext_p3(i, e, f) for i in range(3)}
    if op == "end":
        a = end_algebra(e)
        return {
            "dim": a.dim,
            "radical_dim": a.radical_dim,
            "semisimple_dim": a.semisimple_dim,
            "verdict": a.verdict,
        }
    if op == "decompose":
        parts = decompose(e)
        return {
            "summands": [
                {"hilbert_polynomial": str(hilbert_polynomial(p)), "presentation": to_json_dict(p)} for p in parts
            ]
        }
    if op == "iso":
        w = isomorphism_test(e, f, seed)
        return {"isomorphic": w.isomorphic, "certified": w.certified}
    if op == "kerw":
        k = kernel_of_w(e)
        if isinstance(k, list):
            return {"split": True, "twists": k}
        return {"split": False, "hilbert_function": k.hilbert_function, "residual": k.residual}
    r = restrict_to_H(e)
    return {"hilbert_function": r.hilbert_function, "presentation": _matrix(r.presentation)}


@main.group("catalog")
def catalog_group() -> None:
    """Named constructions."""


@catalog_group.command("list")
def catalog_list() -> None:
    for name in cat.catalog_names():
        entry = cat.CATALOG[name]
        defaults = ", ".join(f"{k}={v}" for k, v in entry.defaults.items())
        click.echo(f"{name:20} {entry.anchor}" + (f"  [{defaults}]" if defaults else ""))


@catalog_group.command("emit")
@click.argument("name")
@click.option("--param", "params", multiple=True)
@click.option("--twist", "t", default=0)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def catalog_emit(name: str, params, t: int, out: str | None) -> None:
    """Write the presentation of a catalog entry in the MF JSON format."""
    try:
        text = dumps(load_sheaf(name, _params(params), t))
    except MfsheafError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--size", "k", type=int, required=True)
@click.option("--field", "p", type=int, default=101, show_default=True)
@click.option("--samples", "n", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def explore(k: int, p: int, n: int, seed: int, out: str | None) -> None:
    """Census of random linear factorizations w·I + L of w² over F_p."""
    from .explorer import survey

    try:
        text = survey(k, p, n, seed).dumps()
    except MfsheafError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
