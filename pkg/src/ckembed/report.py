"""Structured verdict reports with exact values.

A report is a flat list of clauses.  Each clause belongs to a stage (the
construction it checks), states one claim and carries a verdict together
with the exact values that justify it.  Rationals are always rendered as
``p/q`` strings.  A failed clause may carry the offending object as
problem-file text so the failure can be replayed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

PASS = "PASS"
FAIL = "FAIL"
SKIPPED = "SKIPPED"


class ClauseFailure(AssertionError):
    """A checked claim of a construction did not hold."""

    def __init__(self, stage: str, claim: str, detail: str = ""):
        self.stage = stage
        self.claim = claim
        self.detail = detail
        msg = f"{stage}: {claim}"
        super().__init__(f"{msg} ({detail})" if detail else msg)


def render_value(v: Any) -> Any:
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, (int, Fraction)):
        return str(Fraction(v))
    if isinstance(v, (list, tuple)):
        return [render_value(x) for x in v]
    if isinstance(v, dict):
        return {str(k): render_value(x) for k, x in v.items()}
    return str(v)


@dataclass(frozen=True)
class Clause:
    stage: str
    claim: str
    verdict: str
    values: tuple[tuple[str, Any], ...] = ()
    detail: str = ""
    obj: str = ""  # problem-file text of the offending object

    def as_dict(self) -> dict:
        d = {"stage": self.stage, "claim": self.claim, "verdict": self.verdict}
        if self.values:
            d["values"] = {k: render_value(v) for k, v in self.values}
        if self.detail:
            d["detail"] = self.detail
        if self.obj:
            d["object"] = self.obj
        return d

    def line(self) -> str:
        s = f"{self.verdict:<7} {self.stage}: {self.claim}"
        if self.values:
            s += "  [" + ", ".join(f"{k}={_plain(render_value(v))}" for k, v in self.values) + "]"
        if self.detail:
            s += f"\n        {self.detail}"
        if self.obj:
            s += "".join(f"\n        | {ln}".rstrip() for ln in self.obj.rstrip("\n").split("\n"))
        return s


def _plain(v: Any) -> str:
    if isinstance(v, list):
        return "(" + ", ".join(_plain(x) for x in v) + ")"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_plain(x)}" for k, x in v.items()) + "}"
    return str(v)


@dataclass
class Report:
    title: str
    clauses: list[Clause] = field(default_factory=list)

    def add(self, stage: str, claim: str, ok: bool | None, detail: str = "", *, obj: str = "",
            **values: Any) -> Clause:
        verdict = SKIPPED if ok is None else (PASS if ok else FAIL)
        c = Clause(stage, claim, verdict, tuple(values.items()), detail, obj if verdict == FAIL else "")
        self.clauses.append(c)
        return c

    def attach(self, obj: str) -> None:
        """Give every failed clause without an object this one."""
        self.clauses = [replace(c, obj=obj) if c.verdict == FAIL and not c.obj else c
                        for c in self.clauses]

    def extend(self, other: "Report") -> None:
        self.clauses.extend(other.clauses)

    @property
    def ok(self) -> bool:
        return all(c.verdict != FAIL for c in self.clauses)

    def failures(self) -> list[Clause]:
        return [c for c in self.clauses if c.verdict == FAIL]

    def by_claim(self, claim: str) -> Clause:
        for c in self.clauses:
            if c.claim == claim:
                return c
        raise KeyError(claim)

    def render_text(self) -> str:
        lines = [f"# {self.title}"] + [c.line() for c in self.clauses]
        n_fail = len(self.failures())
        lines.append(f"# {len(self.clauses)} clauses, {n_fail} failed")
        return "\n".join(lines) + "\n"

    def render_json(self) -> str:
        """One JSON object per line, keys sorted."""
        head = {"report": self.title, "clauses": len(self.clauses), "ok": self.ok}
        rows = [head] + [c.as_dict() for c in self.clauses]
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
